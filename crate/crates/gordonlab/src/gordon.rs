//! The decay condition at the core of the criterion: the integrals
//! I_m = ∫_{-q_m}^{2q_m} |V₂(xα+θ) - V₂(xα_m+θ)| dx and the scaled values
//! exp(C·q_m)·I_m, reported in log form C·q_m + ln I_m since the exponential
//! factor overflows doubles for q_m ≳ 700/C. Also the analytic upper bounds:
//! the oscillation route for step/Hölder sampling and the p_m^{2-γ} route
//! for power singularities at θ = 0.
//!
//! Computation routes per sampling family:
//! - step (and pure-step sums): exact — the integrand is a step function of
//!   x with breakpoints (k + b - θ)/α and (k + b - θ)/α_m; enumerate, sort
//!   as exact rationals, integrate piece by piece.
//! - trigonometric polynomials: adaptive quadrature on the product form
//!   cos P - cos Q = -2·sin((P+Q)/2)·sin((P-Q)/2), which keeps the tiny
//!   difference frequency α - α_m exact instead of cancelling two O(1)
//!   cosines in f64.
//! - power singularity: piecewise closed-form antiderivatives between phase
//!   breakpoints; the sign of u₁^{-γ} - u₂^{-γ} on each piece follows from
//!   comparing the linear arguments u₁, u₂ at an exact rational midpoint
//!   (t ↦ t^{-γ} is monotone), so no numeric root hunting is involved.
//! Mixed sums combining a singularity with other families are not supported
//! directly; linearity bounds them by their parts.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;
use crate::exact::{
    mod_one, rational_log10, rational_to_f64, BigRational, ContinuedFraction,
};
use crate::potential::{PeriodicPotential, QuasiPotential, StepPotential, TrigPoly};
use crate::quad::adaptive_simpson;
use crate::Result;

/// Work budget for the numeric (quadrature) integration routes; the exact
/// rational bookkeeping for steps has no such cap.
pub const DEFAULT_NUMERIC_Q_BUDGET: u64 = 10_000;

/// Float formatting for report columns: 17 significant digits, `inf`/`-inf`
/// spelled out.
pub fn fmt_float17(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}

/// Result of one I_m computation.
#[derive(Debug, Clone)]
pub struct L1Distance {
    pub value: f64,
    /// Exact rational value, present on the step route.
    pub exact: Option<BigRational>,
    /// Bound on the numeric error (0 on the exact route).
    pub error_bound: f64,
}

/// I_m over `window` (defaults to [-q_m, 2q_m]). The V₁ parts of V and
/// V^{(m)} cancel, so only the V₂ difference matters.
pub fn l1_distance(
    q: &QuasiPotential,
    m: usize,
    window: Option<(BigRational, BigRational)>,
    numeric_q_budget: u64,
) -> Result<L1Distance> {
    let cf = q.alpha.continued_fraction()?;
    let alpha_m = cf.alpha_m(m)?;
    let q_m = cf.q_m(m)?.clone();
    let alpha = q.alpha.resolve();
    let (a, b) = match window {
        Some(w) => w,
        None => {
            let qm_r = BigRational::from(q_m.clone());
            (-&qm_r, BigRational::from(BigInt::from(2)) * &qm_r)
        }
    };
    if a >= b {
        return Err(Error::Domain(format!("empty window [{a}, {b}]")));
    }
    if alpha == alpha_m {
        return Ok(L1Distance {
            value: 0.0,
            exact: Some(BigRational::zero()),
            error_bound: 0.0,
        });
    }

    if let Some(step) = q.v2.flatten_steps() {
        let exact = l1_step_exact(&step, &alpha, &alpha_m, &q.theta, &a, &b);
        return Ok(L1Distance {
            value: rational_to_f64(&exact),
            exact: Some(exact),
            error_bound: 0.0,
        });
    }

    // Numeric routes are capped by the work budget.
    let qm_f = q_m.to_f64().unwrap_or(f64::INFINITY);
    if qm_f > numeric_q_budget as f64 {
        return Err(Error::Resource {
            m,
            needed: qm_f as u64,
            budget: numeric_q_budget,
            unit: "period length (numeric integration)",
        });
    }

    match &q.v2 {
        PeriodicPotential::Smooth(poly) => {
            let (value, err) = l1_smooth(poly, &alpha, &alpha_m, &q.theta, &a, &b);
            Ok(L1Distance {
                value,
                exact: None,
                error_bound: err,
            })
        }
        PeriodicPotential::PowerSingular { gamma, scale } => {
            let value = l1_singular(*gamma, *scale, &alpha, &alpha_m, &q.theta, &a, &b)?;
            Ok(L1Distance {
                value,
                exact: None,
                error_bound: value.abs() * 1e-12,
            })
        }
        PeriodicPotential::Sum(parts) => {
            // Pure-trig sums merge into one polynomial; anything mixing a
            // singularity with other parts has no common closed route.
            let mut terms = Vec::new();
            let mut pure_trig = true;
            for (c, p) in parts {
                match p {
                    PeriodicPotential::Smooth(t) => {
                        for term in &t.terms {
                            let mut scaled = *term;
                            scaled.amplitude *= c;
                            terms.push(scaled);
                        }
                    }
                    _ => {
                        pure_trig = false;
                        break;
                    }
                }
            }
            if pure_trig {
                let poly = TrigPoly::new(terms)?;
                let (value, err) = l1_smooth(&poly, &alpha, &alpha_m, &q.theta, &a, &b);
                return Ok(L1Distance {
                    value,
                    exact: None,
                    error_bound: err,
                });
            }
            Err(Error::Unsupported(
                "l1_distance on sums mixing a power singularity with other sampling \
                 families; bound the parts separately (the condition class is linear)"
                    .into(),
            ))
        }
        PeriodicPotential::Step(_) => unreachable!("handled by flatten_steps"),
    }
}

/// Exact step route: enumerate the breakpoints of both phase maps, sort,
/// and integrate the piecewise-constant integrand piece by piece. Values
/// are lifted to exact rationals (every f64 is dyadic) so the result is an
/// exact rational.
fn l1_step_exact(
    v2: &StepPotential,
    alpha: &BigRational,
    alpha_m: &BigRational,
    theta: &BigRational,
    a: &BigRational,
    b: &BigRational,
) -> BigRational {
    let mut points: Vec<BigRational> = vec![a.clone(), b.clone()];
    for freq in [alpha, alpha_m] {
        if freq.is_zero() {
            continue;
        }
        for c in v2.breakpoints() {
            let k_lo = (a * freq + theta - c).ceil();
            let k_hi = (b * freq + theta - c).floor();
            let mut k = k_lo;
            while k <= k_hi {
                points.push((c + &k - theta) / freq);
                k += BigRational::one();
            }
        }
    }
    points.sort();
    points.dedup();
    points.retain(|x| x >= a && x <= b);

    let two = BigRational::from(BigInt::from(2));
    let mut acc = BigRational::zero();
    for i in 0..points.len() - 1 {
        let mid = (&points[i] + &points[i + 1]) / &two;
        let vf = v2.value_at_phase(&mod_one(&(&mid * alpha + theta)));
        let vg = v2.value_at_phase(&mod_one(&(&mid * alpha_m + theta)));
        if vf != vg {
            let dv = (BigRational::from_float(vf).unwrap() - BigRational::from_float(vg).unwrap()).abs();
            acc += dv * (&points[i + 1] - &points[i]);
        }
    }
    acc
}

/// Quadrature route for trigonometric polynomials via the product form
/// (per harmonic): cos P - cos Q = -2 sin((P+Q)/2) sin((P-Q)/2) with
/// (P-Q)/2 = πk·x·(α - α_m) kept from the exact rational difference.
fn l1_smooth(
    poly: &TrigPoly,
    alpha: &BigRational,
    alpha_m: &BigRational,
    theta: &BigRational,
    a: &BigRational,
    b: &BigRational,
) -> (f64, f64) {
    let delta = rational_to_f64(&(alpha - alpha_m));
    let sum_f = rational_to_f64(&(alpha + alpha_m));
    let theta_f = rational_to_f64(theta);
    let a_f = rational_to_f64(a);
    let b_f = rational_to_f64(b);
    let integrand = |x: f64| -> f64 {
        let mut acc = 0.0;
        for t in &poly.terms {
            let k = t.harmonic as f64;
            let slow = std::f64::consts::PI * k * x * delta;
            let fast = std::f64::consts::PI * k * (x * sum_f + 2.0 * theta_f) + t.phase;
            acc += -2.0 * t.amplitude * fast.sin() * slow.sin();
        }
        acc.abs()
    };
    // Scale estimate from a coarse pass fixes the absolute tolerance.
    let coarse = crate::quad::fixed_simpson(&integrand, a_f, b_f, 4096);
    let tol = (coarse.abs() * 1e-10).max(1e-300);
    let r = adaptive_simpson(&integrand, a_f, b_f, tol, 40);
    (r.value, r.error_estimate + coarse.abs() * 1e-12)
}

/// Closed-form route for the power singularity. Between consecutive phase
/// breakpoints both phase maps stay inside one period cell, so the integrand
/// is |scale·u₁^{-γ} - scale·u₂^{-γ}| with u_i(x) = σ_i(α_i x + θ - n_i)
/// linear and positive. Equality u₁ = u₂ is a linear equation with an exact
/// rational root; splitting there fixes the sign of the difference on each
/// sub-piece (t ↦ t^{-γ} is strictly decreasing), and each signed piece
/// integrates by the antiderivative u^{1-γ}/(σα(1-γ)).
fn l1_singular(
    gamma: f64,
    scale: f64,
    alpha: &BigRational,
    alpha_m: &BigRational,
    theta: &BigRational,
    a: &BigRational,
    b: &BigRational,
) -> Result<f64> {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    // Breakpoints of both maps: singular lattice (b = 0) and the kink (b = 1/2).
    let mut points: Vec<BigRational> = vec![a.clone(), b.clone()];
    for freq in [alpha, alpha_m] {
        for cell in [BigRational::zero(), half.clone()] {
            let k_lo = (a * freq + theta - &cell).ceil();
            let k_hi = (b * freq + theta - &cell).floor();
            let mut k = k_lo;
            while k <= k_hi {
                points.push((&cell + &k - theta) / freq);
                k += BigRational::one();
            }
        }
    }
    points.sort();
    points.dedup();
    points.retain(|x| x >= a && x <= b);

    let two = BigRational::from(BigInt::from(2));
    let mut total = 0.0f64;
    for i in 0..points.len() - 1 {
        let lo = &points[i];
        let hi = &points[i + 1];
        let mid = (lo + hi) / &two;

        // Signed distance parameters on this piece: u = σ(αx + θ - n) with
        // n = round(phase at midpoint), σ the sign there.
        let param = |freq: &BigRational| -> (BigRational, BigRational, i8) {
            let phase_mid = &mid * freq + theta;
            let n = (&phase_mid + &half).floor();
            let centered = phase_mid - &n;
            let sigma: i8 = if centered.is_negative() { -1 } else { 1 };
            // u(x) = σ(freq·x + θ - n); slope σ·freq, intercept σ(θ - n).
            let slope = if sigma < 0 { -freq.clone() } else { freq.clone() };
            let intercept = if sigma < 0 { n - theta } else { theta - n };
            (slope, intercept, sigma)
        };
        let (s1, c1, _) = param(alpha);
        let (s2, c2, _) = param(alpha_m);

        // Split where u₁ = u₂ (linear; slopes differ since α ≠ α_m and both
        // maps are strictly monotone with |slopes| = α, α_m).
        let mut cuts: Vec<BigRational> = vec![lo.clone(), hi.clone()];
        let ds = &s1 - &s2;
        if !ds.is_zero() {
            let root = (&c2 - &c1) / ds;
            if &root > lo && &root < hi {
                cuts.push(root);
            }
        }
        cuts.sort();

        let u_at = |slope: &BigRational, icept: &BigRational, x: &BigRational| -> BigRational {
            slope * x + icept
        };
        let antideriv = |slope: &BigRational, icept: &BigRational, x: &BigRational| -> f64 {
            // ∫ u^{-γ} dx = u^{1-γ}/(slope·(1-γ)); u ≥ 0 on the piece.
            let u = rational_to_f64(&u_at(slope, icept, x)).max(0.0);
            u.powf(1.0 - gamma) / (rational_to_f64(slope) * (1.0 - gamma))
        };
        for j in 0..cuts.len() - 1 {
            let x0 = &cuts[j];
            let x1 = &cuts[j + 1];
            let m = (x0 + x1) / &two;
            // Sign of u₁^{-γ} - u₂^{-γ} = sign of (u₂ - u₁), exactly.
            let u1m = u_at(&s1, &c1, &m);
            let u2m = u_at(&s2, &c2, &m);
            let sign = match u2m.cmp(&u1m) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Less => -1.0,
                std::cmp::Ordering::Equal => 0.0,
            };
            if sign == 0.0 {
                continue;
            }
            let int1 = antideriv(&s1, &c1, x1) - antideriv(&s1, &c1, x0);
            let int2 = antideriv(&s2, &c2, x1) - antideriv(&s2, &c2, x0);
            total += sign * scale * (int1 - int2);
        }
    }
    if !total.is_finite() {
        return Err(Error::Blowup { x: rational_to_f64(b) });
    }
    Ok(total)
}

/// The oscillation-route upper bound (3q_mα + 1)/α · D·(2q_m·|α-α_m|)^δ on
/// I_m, with the exact convergent enclosure standing in for |α-α_m|. Valid
/// whenever ∫osc_{V₂,ε} ≤ D·ε^δ holds at ε = 2q_m|α-α_m|.
pub fn osc_bound(q: &QuasiPotential, m: usize, d: f64, delta: f64) -> Result<f64> {
    let cf = q.alpha.continued_fraction()?;
    let q_m = cf.q_m(m)?.to_f64().unwrap_or(f64::INFINITY);
    let err = alpha_err_upper(&cf, &q.alpha.resolve(), m)?;
    let err_f = rational_to_f64(&err);
    let alpha_f = rational_to_f64(&q.alpha.resolve());
    if alpha_f <= 0.0 {
        return Err(Error::Domain("oscillation bound needs α > 0".into()));
    }
    Ok((3.0 * q_m * alpha_f + 1.0) / alpha_f * d * (2.0 * q_m * err_f).powf(delta))
}

/// The power-singularity route: p_m^{2-γ}·|α·q_m/p_m - 1|^{1-γ}, proved for
/// θ = 0. The paper's constant in front is not explicit; callers report the
/// empirical ratio I_m / bound and test its boundedness.
pub fn singular_bound(q: &QuasiPotential, m: usize) -> Result<f64> {
    let (gamma, _scale) = match &q.v2 {
        PeriodicPotential::PowerSingular { gamma, scale } => (*gamma, *scale),
        _ => {
            return Err(Error::Domain(
                "singular bound applies to power-singular sampling only".into(),
            ))
        }
    };
    if !q.theta.is_zero() {
        return Err(Error::Unsupported(
            "singular bound is established for θ = 0 only; numeric I_m remains available".into(),
        ));
    }
    let cf = q.alpha.continued_fraction()?;
    let (p_m, q_m) = {
        let (p, qd) = cf.convergent(m)?;
        (p.clone(), qd.clone())
    };
    if p_m.is_zero() {
        return Err(Error::Range("singular bound needs p_m ≥ 1 (m ≥ 1)".into()));
    }
    let alpha = q.alpha.resolve();
    // α·q_m/p_m - 1 as an exact rational.
    let ratio = &alpha * BigRational::from(q_m) / BigRational::from(p_m.clone()) - BigRational::one();
    let ratio_f = rational_to_f64(&ratio.abs());
    let p_f = p_m.to_f64().unwrap_or(f64::INFINITY);
    Ok(p_f.powf(2.0 - gamma) * ratio_f.powf(1.0 - gamma))
}

/// Exact upper bound on |α - α_m|: the convergent enclosure 1/(q_m q_{m+1})
/// when the next convergent exists, otherwise the exact distance to the
/// resolved representative (α rational, fully expanded).
pub fn alpha_err_upper(cf: &ContinuedFraction, alpha: &BigRational, m: usize) -> Result<BigRational> {
    if m + 1 <= cf.len() {
        cf.enclosure_width(m)
    } else {
        Ok((alpha - cf.alpha_m(m)?).abs())
    }
}

/// One row of the decay report.
#[derive(Debug, Clone)]
pub struct GordonRow {
    pub m: usize,
    pub a_m: BigInt,
    pub q_m: BigInt,
    /// Exact upper bound on |α - α_m| (also exported as float).
    pub alpha_err: BigRational,
    pub i_m: f64,
    pub i_m_exact: Option<BigRational>,
    pub i_m_error: f64,
    /// C·q_m + ln I_m; -inf when I_m = 0.
    pub log_scaled: f64,
    pub osc_bound: Option<f64>,
    pub sing_bound: Option<f64>,
}

/// Decay report over a range of approximation orders.
#[derive(Debug, Clone)]
pub struct GordonReport {
    pub big_c: f64,
    pub rows: Vec<GordonRow>,
    /// Whether the log-scaled values strictly decrease over the computed
    /// range. Only finitely many m are computable; no limit is claimed.
    pub decreasing: bool,
}

/// Options for [`gordon_sequence`].
#[derive(Debug, Clone)]
pub struct GordonOptions {
    pub big_c: f64,
    /// Inclusive range of approximation orders.
    pub m_range: (usize, usize),
    /// Hölder pair (D, δ) enabling the oscillation bound column.
    pub holder: Option<(f64, f64)>,
    /// Include the singular bound column (power-singular V₂, θ = 0).
    pub singular: bool,
    pub numeric_q_budget: u64,
}

impl Default for GordonOptions {
    fn default() -> Self {
        GordonOptions {
            big_c: 1.0,
            m_range: (1, 3),
            holder: None,
            singular: false,
            numeric_q_budget: DEFAULT_NUMERIC_Q_BUDGET,
        }
    }
}

/// Evaluate the decay diagnostic row by row. Rows are independent and the
/// result does not depend on evaluation order.
pub fn gordon_sequence(q: &QuasiPotential, opts: &GordonOptions) -> Result<GordonReport> {
    let (m_lo, m_hi) = opts.m_range;
    if m_lo < 1 || m_hi < m_lo {
        return Err(Error::Range(format!("bad m range {m_lo}..{m_hi}")));
    }
    let cf = q.alpha.continued_fraction()?;
    if m_hi > cf.len() {
        return Err(Error::Range(format!(
            "m range up to {m_hi} exceeds available convergents ({})",
            cf.len()
        )));
    }
    let alpha = q.alpha.resolve();
    let mut rows = Vec::with_capacity(m_hi - m_lo + 1);
    for m in m_lo..=m_hi {
        let dist = l1_distance(q, m, None, opts.numeric_q_budget)?;
        let q_m = cf.q_m(m)?.clone();
        let a_m = cf.partial_quotients()[m - 1].clone();
        let alpha_err = alpha_err_upper(&cf, &alpha, m)?;
        let q_m_f = q_m.to_f64().unwrap_or(f64::INFINITY);
        let log_scaled = if dist.value > 0.0 {
            opts.big_c * q_m_f + dist.value.ln()
        } else if let Some(exact) = &dist.exact {
            if exact.is_zero() {
                f64::NEG_INFINITY
            } else {
                opts.big_c * q_m_f + rational_log10(exact) * std::f64::consts::LN_10
            }
        } else {
            f64::NEG_INFINITY
        };
        let osc = match opts.holder {
            Some((d, delta)) => Some(osc_bound(q, m, d, delta)?),
            None => None,
        };
        let sing = if opts.singular {
            Some(singular_bound(q, m)?)
        } else {
            None
        };
        rows.push(GordonRow {
            m,
            a_m,
            q_m,
            alpha_err,
            i_m: dist.value,
            i_m_exact: dist.exact,
            i_m_error: dist.error_bound,
            log_scaled,
            osc_bound: osc,
            sing_bound: sing,
        });
    }
    let decreasing = rows.windows(2).all(|w| w[1].log_scaled < w[0].log_scaled);
    Ok(GordonReport {
        big_c: opts.big_c,
        rows,
        decreasing,
    })
}

/// CSV with the fixed schema: m, a_m, q_m, alpha_err_upper, I_m, C,
/// log_scaled, osc_bound, sing_bound. Big integers are decimal strings;
/// floats carry 17 significant digits; absent bounds are empty fields.
pub fn gordon_report_to_csv(report: &GordonReport) -> String {
    let mut out = String::from("m,a_m,q_m,alpha_err_upper,I_m,C,log_scaled,osc_bound,sing_bound\n");
    for r in &report.rows {
        let osc = r.osc_bound.map(fmt_float17).unwrap_or_default();
        let sing = r.sing_bound.map(fmt_float17).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.m,
            r.a_m,
            r.q_m,
            fmt_float17(rational_to_f64(&r.alpha_err)),
            fmt_float17(r.i_m),
            fmt_float17(report.big_c),
            fmt_float17(r.log_scaled),
            osc,
            sing,
        ));
    }
    out
}
