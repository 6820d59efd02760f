//! Command-line front end: parse potential descriptions and frequency
//! specs, orchestrate runs, and emit CSV/JSON reports and SVG plots.
//!
//! Exit codes: 0 success; 2 an invariant the theory guarantees was violated
//! (the message names it and the inputs); 3 a resource budget was exceeded;
//! 1 anything else (bad input, unsupported combination, I/O).

mod config;
mod dsl;
mod svg;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use gordonlab::exact::{cf_expand, parse_rational, rational_to_f64};
use gordonlab::gordon::{
    fmt_float17, gordon_report_to_csv, gordon_sequence, GordonOptions, GordonReport,
};
use gordonlab::potential::QuasiPotential;
use gordonlab::propagate::{monodromy_over, Monodromy, PotentialRef};
use gordonlab::witness::{
    solution_profile, witness_report_to_csv, witness_report_to_json, witness_run, WitnessOptions,
    WitnessReport,
};

use config::{parse_alpha, parse_m_range, RunConfig};
use dsl::parse_potential;

#[derive(Parser)]
#[command(name = "gordonlab", version, about = "Quasiperiodic Schrödinger operator laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct PotentialArgs {
    /// 1-periodic part V₁ (potential DSL).
    #[arg(long, default_value = "zero")]
    v1: String,
    /// Sampling function V₂ (potential DSL).
    #[arg(long, default_value = "step{0:1, 1/2:0}")]
    v2: String,
    /// Frequency: liouville-default | golden | cf:a1,a2,... | rational:p/q.
    #[arg(long, default_value = "liouville-default")]
    alpha: String,
    /// Phase θ as a rational p/q in [0, 1).
    #[arg(long, default_value = "0")]
    theta: String,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Output path; stdout when omitted. Files are written atomically.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json (svg for `plot`).
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Continued-fraction expansion, convergents, and Liouville certificate.
    Cf {
        /// Expand this rational in (0, 1).
        #[arg(long)]
        rational: Option<String>,
        /// Or use a frequency spec (presets/cf lists).
        #[arg(long)]
        alpha: Option<String>,
        /// Certify |α - α_m| ≤ B·m^{-q_m} with this B (rational).
        #[arg(long)]
        certify: Option<String>,
        /// Highest order for tables (defaults to all available).
        #[arg(long)]
        m_max: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monodromy trace/det over an energy grid.
    Monodromy {
        /// Periodic potential (DSL) taken with period 1…
        #[arg(long)]
        potential: Option<String>,
        /// …or an explicit period for it.
        #[arg(long)]
        period: Option<f64>,
        #[command(flatten)]
        quasi: PotentialArgs,
        /// Approximant order: uses V₁ + V₂(xα_m + θ) with period q_m.
        #[arg(long)]
        m: Option<usize>,
        /// Comma-separated energies.
        #[arg(long, default_value = "-1,0.5,2,5")]
        energies: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Decay-condition report (CSV schema: m, a_m, q_m, alpha_err_upper,
    /// I_m, C, log_scaled, osc_bound, sing_bound).
    Gordon {
        #[command(flatten)]
        quasi: PotentialArgs,
        /// The constant C in the scaled value exp(C·q_m)·I_m.
        #[arg(long = "bigC", default_value_t = 1.0)]
        big_c: f64,
        /// Inclusive order range a..b.
        #[arg(long, default_value = "1..3")]
        m_range: String,
        /// Hölder pair "D,delta" enabling the oscillation bound column.
        #[arg(long)]
        holder: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Non-decay witness report (CSV schema: E, m, q_m, sup_diff_sampled,
    /// sup_diff_rigorous, pass, witness_x, witness_norm).
    Witness {
        #[command(flatten)]
        quasi: PotentialArgs,
        #[arg(long, default_value = "-1,0.5,2,5")]
        energies: String,
        #[arg(long, default_value = "1..3")]
        m_range: String,
        /// Sample-grid nodes per unit length (breakpoints always included).
        #[arg(long, default_value_t = 4)]
        sample_density: u32,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// SVG line plots: the decay diagnostic vs m, or solution-norm profiles.
    Plot {
        /// gordon | witness.
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        quasi: PotentialArgs,
        #[arg(long = "bigC", default_value_t = 1.0)]
        big_c: f64,
        #[arg(long, default_value = "1..3")]
        m_range: String,
        #[arg(long, default_value = "0.5")]
        energies: String,
        #[arg(long, default_value_t = 4)]
        sample_density: u32,
        /// Output SVG path (required).
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the canonical JSON for a configuration, or re-validate one.
    Config {
        /// Read a configuration back from its canonical JSON and validate.
        #[arg(long, conflicts_with_all = ["v1", "v2", "alpha", "theta"])]
        check: Option<PathBuf>,
        #[command(flatten)]
        quasi: PotentialArgs,
        #[arg(long, default_value = "-1,0.5,2,5")]
        energies: String,
        #[arg(long = "bigC", default_value_t = 1.0)]
        big_c: f64,
        #[arg(long, default_value = "1..3")]
        m_range: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 4)]
        sample_density: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if let Some(core) = err.downcast_ref::<gordonlab::Error>() {
        match core {
            gordonlab::Error::Invariant { .. } => 2,
            gordonlab::Error::Resource { .. } => 3,
            _ => 1,
        }
    } else {
        1
    }
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Cf {
            rational,
            alpha,
            certify,
            m_max,
            output,
        } => cmd_cf(rational, alpha, certify, m_max, output),
        Command::Monodromy {
            potential,
            period,
            quasi,
            m,
            energies,
            tol,
            output,
        } => cmd_monodromy(potential, period, quasi, m, &energies, tol, output),
        Command::Gordon {
            quasi,
            big_c,
            m_range,
            holder,
            output,
        } => cmd_gordon(quasi, big_c, &m_range, holder, output),
        Command::Witness {
            quasi,
            energies,
            m_range,
            sample_density,
            tol,
            output,
        } => cmd_witness(quasi, &energies, &m_range, sample_density, tol, output),
        Command::Plot {
            kind,
            quasi,
            big_c,
            m_range,
            energies,
            sample_density,
            out,
        } => cmd_plot(&kind, quasi, big_c, &m_range, &energies, sample_density, &out),
        Command::Config {
            check,
            quasi,
            energies,
            big_c,
            m_range,
            tol,
            sample_density,
            output,
        } => {
            if let Some(path) = check {
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let cfg = RunConfig::from_json(&text)?;
                cfg.build_quasi()?;
                return emit(&output.out, cfg.to_canonical_json());
            }
            let (m_lo, m_hi) = parse_m_range(&m_range)?;
            let cfg = RunConfig {
                command: "config".into(),
                v1: quasi.v1,
                v2: quasi.v2,
                alpha: quasi.alpha,
                theta: quasi.theta,
                energies: parse_energies(&energies)?,
                big_c,
                m_lo,
                m_hi,
                tol,
                sample_density,
                format: output.format.clone(),
                out: output.out.as_ref().map(|p| p.display().to_string()),
            };
            // Validate eagerly so a config that prints is a config that runs.
            cfg.build_quasi()?;
            emit(&output.out, cfg.to_canonical_json())
        }
    }
}

fn parse_energies(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("bad energy {t:?}"))
        })
        .collect()
}

/// Write atomically (temp file + rename) or print to stdout.
fn emit(out: &Option<PathBuf>, content: String) -> anyhow::Result<()> {
    match out {
        None => {
            print!("{content}");
            if !content.ends_with('\n') {
                println!();
            }
            Ok(())
        }
        Some(path) => write_atomic(path, &content),
    }
}

fn write_atomic(path: &Path, content: &str) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp-{}",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
            std::process::id()
        )),
        None => PathBuf::from(format!(".{}.tmp-{}", path.display(), std::process::id())),
    };
    {
        let mut f =
            std::fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(content.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_cf(
    rational: Option<String>,
    alpha: Option<String>,
    certify: Option<String>,
    m_max: Option<usize>,
    output: OutputArgs,
) -> anyhow::Result<()> {
    let cf = match (&rational, &alpha) {
        (Some(r), None) => cf_expand(&parse_rational(r)?)?,
        (None, Some(a)) => parse_alpha(a)?.continued_fraction()?,
        _ => bail!("cf needs exactly one of --rational or --alpha"),
    };
    let m_hi = m_max.unwrap_or(cf.len()).min(cf.len());
    let cert = match &certify {
        Some(b) => {
            let b = parse_rational(b)?;
            let upto = m_hi.min(cf.len().saturating_sub(1));
            Some(gordonlab::exact::liouville_certify(&cf, &b, upto)?)
        }
        None => None,
    };
    if output.format == "json" {
        let mut v = cf.to_json();
        v["convergents"] = serde_json::json!(cf
            .convergents(m_hi)?
            .iter()
            .map(|(p, q)| [p.to_string(), q.to_string()])
            .collect::<Vec<_>>());
        if let Some(rows) = &cert {
            v["certificate"] = serde_json::json!(rows
                .iter()
                .map(|r| serde_json::json!({
                    "m": r.m,
                    "certified": r.certified,
                    "enclosure": rational_to_f64(&r.enclosure),
                    "target_log10": r.target_log10,
                }))
                .collect::<Vec<_>>());
        }
        emit(&output.out, serde_json::to_string_pretty(&v)?)
    } else {
        let mut text = format!("{cf}\n");
        for (m, (p, q)) in cf.convergents(m_hi)?.iter().enumerate().skip(1) {
            text.push_str(&format!("m={m}: p/q = {p}/{q}\n"));
        }
        if let Some(rows) = &cert {
            for r in rows {
                text.push_str(&format!(
                    "m={}: certified={} enclosure={} target_log10={:.3}\n",
                    r.m,
                    r.certified,
                    fmt_float17(rational_to_f64(&r.enclosure)),
                    r.target_log10
                ));
            }
        }
        emit(&output.out, text)
    }
}

fn cmd_monodromy(
    potential: Option<String>,
    period: Option<f64>,
    quasi_args: PotentialArgs,
    m: Option<usize>,
    energies: &str,
    tol: f64,
    output: OutputArgs,
) -> anyhow::Result<()> {
    let energies = parse_energies(energies)?;
    let mut results: Vec<Monodromy> = Vec::new();

    if let Some(dsl) = &potential {
        let p = parse_potential(dsl).map_err(|e| anyhow!("--potential {e}"))?;
        let w = PotentialRef::Periodic(&p);
        let period = period.unwrap_or(1.0);
        for &e in &energies {
            results.push(monodromy_over(&w, e, period, tol)?);
        }
    } else {
        let m = m.ok_or_else(|| anyhow!("monodromy needs --potential or --m (approximant)"))?;
        let quasi: QuasiPotential = config_from(&quasi_args)?;
        let approx = quasi.approximant(m)?;
        let w = PotentialRef::Approximant(&approx);
        let p = rational_to_f64(&approx.period());
        for &e in &energies {
            results.push(monodromy_over(&w, e, p, tol)?);
        }
    }

    if output.format == "json" {
        let arr: Vec<_> = results.iter().map(Monodromy::to_json).collect();
        emit(&output.out, serde_json::to_string_pretty(&arr)?)
    } else {
        let mut csv = String::from("E,m11,m12,m21,m22,trace,det\n");
        for r in &results {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt_float17(r.energy),
                fmt_float17(r.matrix[0][0]),
                fmt_float17(r.matrix[0][1]),
                fmt_float17(r.matrix[1][0]),
                fmt_float17(r.matrix[1][1]),
                fmt_float17(r.trace()),
                fmt_float17(r.det()),
            ));
        }
        emit(&output.out, csv)
    }
}

fn config_from(args: &PotentialArgs) -> anyhow::Result<QuasiPotential> {
    let cfg = RunConfig {
        v1: args.v1.clone(),
        v2: args.v2.clone(),
        alpha: args.alpha.clone(),
        theta: args.theta.clone(),
        ..Default::default()
    };
    cfg.build_quasi()
}

fn parse_holder(s: &str) -> anyhow::Result<(f64, f64)> {
    let (d, delta) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("--holder must be \"D,delta\""))?;
    Ok((d.trim().parse()?, delta.trim().parse()?))
}

fn build_gordon_report(
    quasi_args: &PotentialArgs,
    big_c: f64,
    m_range: &str,
    holder: Option<String>,
) -> anyhow::Result<GordonReport> {
    let quasi = config_from(quasi_args)?;
    let (m_lo, m_hi) = parse_m_range(m_range)?;
    let holder = holder.as_deref().map(parse_holder).transpose()?;
    let theta_zero = quasi.theta == gordonlab::exact::BigRational::from_integer(0.into());
    let singular = matches!(
        quasi.v2,
        gordonlab::potential::PeriodicPotential::PowerSingular { .. }
    ) && theta_zero;
    let opts = GordonOptions {
        big_c,
        m_range: (m_lo, m_hi),
        holder,
        singular,
        ..Default::default()
    };
    Ok(gordon_sequence(&quasi, &opts)?)
}

fn cmd_gordon(
    quasi_args: PotentialArgs,
    big_c: f64,
    m_range: &str,
    holder: Option<String>,
    output: OutputArgs,
) -> anyhow::Result<()> {
    let report = build_gordon_report(&quasi_args, big_c, m_range, holder)?;
    eprintln!(
        "log-scaled values strictly decreasing over computed range: {}",
        report.decreasing
    );
    if output.format == "json" {
        let rows: Vec<_> = report
            .rows
            .iter()
            .map(|r| {
                serde_json::json!({
                    "m": r.m,
                    "a_m": r.a_m.to_string(),
                    "q_m": r.q_m.to_string(),
                    "alpha_err_upper": rational_to_f64(&r.alpha_err),
                    "I_m": r.i_m,
                    "C": report.big_c,
                    "log_scaled": if r.log_scaled.is_finite() {
                        serde_json::json!(r.log_scaled)
                    } else {
                        serde_json::json!(fmt_float17(r.log_scaled))
                    },
                    "osc_bound": r.osc_bound,
                    "sing_bound": r.sing_bound,
                })
            })
            .collect();
        emit(
            &output.out,
            serde_json::to_string_pretty(&serde_json::json!({
                "decreasing": report.decreasing,
                "rows": rows,
            }))?,
        )
    } else {
        emit(&output.out, gordon_report_to_csv(&report))
    }
}

fn build_witness_reports(
    quasi_args: &PotentialArgs,
    energies: &str,
    m_range: &str,
    sample_density: u32,
    tol: f64,
) -> anyhow::Result<Vec<WitnessReport>> {
    let quasi = config_from(quasi_args)?;
    let energies = parse_energies(energies)?;
    let (m_lo, m_hi) = parse_m_range(m_range)?;
    let opts = WitnessOptions {
        m_range: (m_lo, m_hi),
        sample_density,
        tol,
        ..Default::default()
    };
    let mut reports = Vec::new();
    for &e in &energies {
        reports.push(witness_run(&quasi, e, &opts)?);
    }
    Ok(reports)
}

fn cmd_witness(
    quasi_args: PotentialArgs,
    energies: &str,
    m_range: &str,
    sample_density: u32,
    tol: f64,
    output: OutputArgs,
) -> anyhow::Result<()> {
    let reports = build_witness_reports(&quasi_args, energies, m_range, sample_density, tol)?;
    for r in &reports {
        match r.m0 {
            Some(m0) => eprintln!("E={}: first passing order m0 = {m0}", r.energy),
            None => eprintln!("E={}: no passing order in range", r.energy),
        }
    }
    if output.format == "json" {
        let arr: Vec<_> = reports.iter().map(witness_report_to_json).collect();
        emit(&output.out, serde_json::to_string_pretty(&arr)?)
    } else {
        let mut csv = String::new();
        for (i, r) in reports.iter().enumerate() {
            let body = witness_report_to_csv(r);
            if i == 0 {
                csv.push_str(&body);
            } else if let Some(idx) = body.find('\n') {
                // Skip the repeated header.
                csv.push_str(&body[idx + 1..]);
            }
        }
        emit(&output.out, csv)
    }
}

fn cmd_plot(
    kind: &str,
    quasi_args: PotentialArgs,
    big_c: f64,
    m_range: &str,
    energies: &str,
    sample_density: u32,
    out: &Path,
) -> anyhow::Result<()> {
    let content = match kind {
        "gordon" => {
            let report = build_gordon_report(&quasi_args, big_c, m_range, None)?;
            let series = svg::Series {
                label: format!("C·q_m + ln I_m (C = {big_c})"),
                points: report
                    .rows
                    .iter()
                    .map(|r| (r.m as f64, r.log_scaled))
                    .collect(),
            };
            svg::line_chart(
                "decay diagnostic vs approximation order",
                "m",
                "C*q_m + ln I_m",
                &[series],
            )
        }
        "witness" => {
            let quasi = config_from(&quasi_args)?;
            let energies = parse_energies(energies)?;
            let (_, m_hi) = parse_m_range(m_range)?;
            let mut series = Vec::new();
            for &e in &energies {
                let profile = solution_profile(&quasi, e, m_hi, sample_density)?;
                series.push(svg::Series {
                    label: format!("E = {e}"),
                    points: profile,
                });
            }
            svg::line_chart(
                &format!("solution vector norm over [-q_m, 2q_m], m = {m_hi}"),
                "x",
                "|(u, u')|",
                &series,
            )
        }
        other => bail!("unknown plot kind {other:?}; use gordon or witness"),
    };
    write_atomic(out, &content)
}
