//! Validated run configuration with a canonical JSON form.

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use gordonlab::exact::{
    build_liouville, parse_rational, BigRational, ContinuedFraction, DigitBudget, FrequencySpec,
    GrowthRule,
};
use gordonlab::potential::QuasiPotential;

use crate::dsl::parse_potential;

/// The configuration of one CLI run. Potentials and the frequency are kept
/// in their textual form so the struct round-trips bit-for-bit through its
/// canonical JSON; validation materializes the domain objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub v1: String,
    pub v2: String,
    pub alpha: String,
    pub theta: String,
    pub energies: Vec<f64>,
    pub big_c: f64,
    pub m_lo: usize,
    pub m_hi: usize,
    pub tol: f64,
    pub sample_density: u32,
    pub format: String,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            v1: "zero".into(),
            v2: "step{0:1, 1/2:0}".into(),
            alpha: "liouville-default".into(),
            theta: "0".into(),
            energies: vec![-1.0, 0.5, 2.0, 5.0],
            big_c: 1.0,
            m_lo: 1,
            m_hi: 3,
            tol: 1e-10,
            sample_density: 4,
            format: "csv".into(),
            out: None,
        }
    }
}

impl RunConfig {
    /// Canonical JSON form (stable field order, pretty-printed).
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(s: &str) -> anyhow::Result<Self> {
        serde_json::from_str(s).context("parsing run configuration JSON")
    }

    /// Materialize the validated quasiperiodic potential.
    pub fn build_quasi(&self) -> anyhow::Result<QuasiPotential> {
        let v1 = parse_potential(&self.v1).map_err(|e| anyhow!("--v1 {e}"))?;
        let v2 = parse_potential(&self.v2).map_err(|e| anyhow!("--v2 {e}"))?;
        let alpha = parse_alpha(&self.alpha)?;
        let theta = parse_rational(&self.theta).map_err(|e| anyhow!("--theta: {e}"))?;
        Ok(QuasiPotential::new(v1, v2, alpha, theta))
    }

}

/// Frequency specification syntax:
/// - `liouville-default`: the built-in rapidly-approximable frequency,
///   partial quotients [1, 2, 8, 847288609443] (growth rule m^{q_m}),
///   proxy order 4 — the largest order whose convergent is materializable
///   under the digit budget.
/// - `golden`: all partial quotients 1, proxy order 40.
/// - `cf:a1,a2,...`: explicit partial quotients, proxy order = length.
/// - `rational:p/q`: exact rational frequency in [0, 1).
pub fn parse_alpha(spec: &str) -> anyhow::Result<FrequencySpec> {
    let budget = DigitBudget::from_env();
    match spec {
        "liouville-default" => {
            let cf = build_liouville(1, &GrowthRule::Default, 4, budget)?;
            Ok(FrequencySpec::from_cf(cf))
        }
        "golden" => {
            let cf = build_liouville(1, &GrowthRule::Constant(1), 40, budget)?;
            Ok(FrequencySpec::from_cf(cf))
        }
        other => {
            if let Some(list) = other.strip_prefix("cf:") {
                let quotients: Vec<u64> = list
                    .split(',')
                    .map(|t| t.trim().parse::<u64>())
                    .collect::<Result<_, _>>()
                    .with_context(|| format!("bad cf list {list:?}"))?;
                let cf = ContinuedFraction::new(quotients)?;
                Ok(FrequencySpec::from_cf(cf))
            } else if let Some(r) = other.strip_prefix("rational:") {
                let val: BigRational = parse_rational(r)?;
                Ok(FrequencySpec::exact(val)?)
            } else {
                bail!(
                    "unrecognized --alpha {spec:?}; use liouville-default, golden, \
                     cf:a1,a2,..., or rational:p/q"
                )
            }
        }
    }
}

/// Parse "a..b" into an inclusive range.
pub fn parse_m_range(s: &str) -> anyhow::Result<(usize, usize)> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| anyhow!("m range must look like a..b, got {s:?}"))?;
    let lo: usize = a.trim().parse().context("m range start")?;
    let hi: usize = b.trim().parse().context("m range end")?;
    if lo < 1 || hi < lo {
        bail!("bad m range {lo}..{hi}");
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_json_round_trip() {
        let cfg = RunConfig {
            command: "gordon".into(),
            energies: vec![0.5, 2.0],
            big_c: 2.0,
            out: Some("report.csv".into()),
            ..Default::default()
        };
        let json = cfg.to_canonical_json();
        let back = RunConfig::from_json(&json).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_canonical_json(), json);
    }

    #[test]
    fn alpha_presets_resolve() {
        let a = parse_alpha("liouville-default").unwrap();
        assert_eq!(a.max_order().unwrap(), 4);
        let g = parse_alpha("golden").unwrap();
        assert_eq!(g.max_order().unwrap(), 40);
        let c = parse_alpha("cf:1,2,8").unwrap();
        assert_eq!(c.max_order().unwrap(), 3);
        let r = parse_alpha("rational:5/7").unwrap();
        assert_eq!(
            r.resolve(),
            parse_rational("5/7").unwrap()
        );
        assert!(parse_alpha("nonsense").is_err());
    }

    #[test]
    fn m_range_parsing() {
        assert_eq!(parse_m_range("1..3").unwrap(), (1, 3));
        assert!(parse_m_range("3..1").is_err());
        assert!(parse_m_range("0..2").is_err());
        assert!(parse_m_range("x").is_err());
    }

    #[test]
    fn build_quasi_validates() {
        let cfg = RunConfig {
            v2: "step{1/2:0, 0:1}".into(),
            ..Default::default()
        };
        let err = cfg.build_quasi().unwrap_err().to_string();
        assert!(err.contains("increasing"), "{err}");
    }
}
