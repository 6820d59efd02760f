//! The non-decay pipeline end to end: Gronwall comparison of the true and
//! approximant solutions, explicit growth bounds, the threshold order m₀,
//! and emission of witness points where |u|² + |u'|² stays ≥ 1/16.
//!
//! The sup of the solution difference over [-q_m, 2q_m] is taken on a grid
//! containing every potential breakpoint; between breakpoints of a step
//! potential the difference solves a constant-coefficient linear ODE, so the
//! sampled values plus per-piece growth factors also yield a rigorous upper
//! bound, reported alongside. The pass test uses the actual computed
//! difference — with the explicit Gronwall constant the analytic right-hand
//! side is vacuous at reachable orders, and both numbers are reported to
//! keep that gap visible.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::Error;
use crate::exact::{rational_to_f64, BigRational};
use crate::gordon::fmt_float17;
use crate::potential::QuasiPotential;
use crate::propagate::{
    build_partition, propagate, solve_on_partition, three_point_bound, PotentialRef,
    SolutionState, TraceCase,
};
use crate::Result;

/// Norm threshold for witness points; the squared-norm constant this
/// implies, D = 1/16, is what the non-decay statement quantifies over.
pub const WITNESS_NORM_THRESHOLD: f64 = 0.25;
pub const WITNESS_SQUARED_NORM_D: f64 = 1.0 / 16.0;

/// Result of one Gronwall comparison at a point x.
#[derive(Debug, Clone)]
pub struct GronwallCheck {
    /// ‖(u₁,u₁')(x) - (u₂,u₂')(x)‖, both solutions from the same normalized
    /// initial state at 0.
    pub lhs: f64,
    /// C·exp(C|x|)·∫₀^x |W₁-W₂|·|u₂|, with C = exp(1 + ‖W₁-E‖_{1,unif}).
    /// May overflow to +inf; `log_rhs` stays finite.
    pub rhs: f64,
    pub log_rhs: f64,
    pub c_const: f64,
    pub pass: bool,
}

/// Compare the solutions of two potentials at x, both launched from `init`
/// (default (1,0)) at the origin, against the a-priori estimate with the
/// explicit constant C = exp(1 + ‖W₁-E‖_{1,unif}).
///
/// Validity of this C: the underlying estimate carries exp(∫‖A‖) with
/// ‖A(t)‖ ≤ 1 + |W₁(t)-E|, so ∫₀^x ‖A‖ ≤ (|x|+1)(1 + ‖W₁-E‖_{1,unif});
/// with C ≥ 1 + ‖·‖ and the prefactor C ≥ exp(1 + ‖·‖), C·exp(C|x|)
/// dominates the whole factor.
pub fn gronwall_check(
    w1: &PotentialRef,
    w2: &PotentialRef,
    e: f64,
    x: f64,
    init: Option<(f64, f64)>,
    tol: f64,
) -> Result<GronwallCheck> {
    let init = init.unwrap_or((1.0, 0.0));
    let norm = init.0.hypot(init.1);
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "gronwall_check needs a normalized initial state, got norm {norm}"
        )));
    }
    let lo = rational_to_f64(&crate::exact::rational_from_f64(x.min(0.0))?);
    let _ = lo;
    let lo_r = crate::exact::rational_from_f64(x.min(0.0))?;
    let hi_r = crate::exact::rational_from_f64(x.max(0.0))?;
    let zero = BigRational::zero();

    let s1 = propagate(w1, e, &SolutionState::new(0.0, init.0, init.1), x, tol)?;
    let s2 = propagate(w2, e, &SolutionState::new(0.0, init.0, init.1), x, tol)?;
    let lhs = (s1.u - s2.u).hypot(s1.du - s2.du);

    // ∫₀^x |W₁(t)-W₂(t)|·|u₂(t)| dt over the union partition; |u₂| enters by
    // the per-piece trapezoid, which is far inside the estimate's slack.
    let integral = if lo_r == hi_r {
        0.0
    } else if w1.piecewise_constant() && w2.piecewise_constant() {
        let (mut points, _) = build_partition(w1, &lo_r, &hi_r, &[zero.clone()])?;
        let (others, _) = build_partition(w2, &lo_r, &hi_r, &[])?;
        points.extend(others);
        points.sort();
        points.dedup();
        let two = BigRational::from(BigInt::from(2));
        let mut values1 = Vec::with_capacity(points.len() - 1);
        let mut values2 = Vec::with_capacity(points.len() - 1);
        for i in 0..points.len() - 1 {
            let mid = (&points[i] + &points[i + 1]) / &two;
            values1.push(w1.value_at(&mid)?);
            values2.push(w2.value_at(&mid)?);
        }
        let anchor = points.binary_search(&zero).map_err(|_| {
            Error::Domain("origin missing from partition".into())
        })?;
        let states2 = solve_on_partition(&points, &values2, e, anchor, init)?;
        let mut acc = 0.0;
        for i in 0..points.len() - 1 {
            let dv = (values1[i] - values2[i]).abs();
            if dv > 0.0 {
                let h = rational_to_f64(&(&points[i + 1] - &points[i]));
                let avg_u = 0.5 * (states2[i].0.abs() + states2[i + 1].0.abs());
                acc += dv * avg_u * h;
            }
        }
        acc
    } else {
        // Composite Simpson with u₂ re-propagated node to node.
        let n = 512;
        let h = x / n as f64;
        let mut acc = 0.0;
        let mut state = SolutionState::new(0.0, init.0, init.1);
        let mut prev_val = {
            let dv = (w1.value_at_f64(0.0).unwrap_or(f64::INFINITY)
                - w2.value_at_f64(0.0).unwrap_or(f64::INFINITY))
            .abs();
            dv * state.u.abs()
        };
        for i in 1..=n {
            let xi = i as f64 * h;
            state = propagate(w2, e, &state, xi, tol)?;
            let dv = match (w1.value_at_f64(xi), w2.value_at_f64(xi)) {
                (Ok(a), Ok(b)) => (a - b).abs(),
                _ => 0.0, // singular sample: measure-zero point
            };
            let val = dv * state.u.abs();
            acc += 0.5 * (prev_val + val) * h.abs();
            prev_val = val;
        }
        acc
    };

    let c_const = (1.0 + w1.l1_unif_upper(e)).exp();
    let log_rhs = c_const.ln() + c_const * x.abs() + integral.ln();
    let rhs = c_const * (c_const * x.abs()).exp() * integral;
    // Compare in logs when the right side overflows.
    let pass = if lhs == 0.0 {
        true
    } else if integral == 0.0 {
        false
    } else {
        lhs.ln() <= log_rhs + 1e-9
    };
    Ok(GronwallCheck {
        lhs,
        rhs,
        log_rhs,
        c_const,
        pass,
    })
}

/// Explicit a-priori bound on ‖(u,u')(x)‖ for a normalized solution:
/// free-solution envelope plus the Gronwall correction with the explicit
/// constant (the comparison potential is 0).
#[derive(Debug, Clone)]
pub struct GrowthBound {
    pub computed_norm: f64,
    pub bound: f64,
    pub log_bound: f64,
    pub pass: bool,
}

/// Envelope for normalized free solutions of -u'' = Eu:
/// E > 0: max(√E, 1/√E) (rotation in scaled coordinates);
/// E = 0: 1 + |x|; E < 0: max(s, 1/s)·e^{s|x|} with s = √-E.
pub fn free_envelope(e: f64, x: f64) -> f64 {
    if e > 0.0 {
        let k = e.sqrt();
        k.max(1.0 / k)
    } else if e == 0.0 {
        1.0 + x.abs()
    } else {
        let s = (-e).sqrt();
        s.max(1.0 / s) * (s * x.abs()).exp()
    }
}

/// Bound ‖(u,u')(x)‖ ≤ env(x) + C₂·e^{C₂|x|}·∫₀^{|x|}|W(t)|·env(t) dt and
/// check the actual propagated norm against it.
pub fn growth_bound(w: &PotentialRef, e: f64, x: f64, tol: f64) -> Result<GrowthBound> {
    let state = propagate(w, e, &SolutionState::new(0.0, 1.0, 0.0), x, tol)?;
    let computed_norm = state.norm();
    let c2 = (1.0 + w.l1_unif_upper(e)).exp();

    // ∫₀^{|x|} |W|·env piece by piece (exact partition when available).
    let lo = crate::exact::rational_from_f64(x.min(0.0))?;
    let hi = crate::exact::rational_from_f64(x.max(0.0))?;
    let integral = if w.piecewise_constant() && lo != hi {
        let (points, values) = build_partition(w, &lo, &hi, &[])?;
        let mut acc = 0.0;
        for i in 0..points.len() - 1 {
            let a = rational_to_f64(&points[i]);
            let b = rational_to_f64(&points[i + 1]);
            let env_max = free_envelope(e, a).max(free_envelope(e, b));
            acc += values[i].abs() * env_max * (b - a);
        }
        acc
    } else {
        let n = 256;
        let h = x / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) * h;
            let wv = w.value_at_f64(t).unwrap_or(0.0);
            acc += wv.abs() * free_envelope(e, t) * h.abs();
        }
        acc
    };
    let env = free_envelope(e, x);
    let bound = env + c2 * (c2 * x.abs()).exp() * integral;
    let log_bound = if bound.is_finite() {
        bound.ln()
    } else {
        (env.ln()).max(c2.ln() + c2 * x.abs() + integral.ln())
    };
    let pass = computed_norm <= bound || computed_norm.ln() <= log_bound + 1e-9;
    Ok(GrowthBound {
        computed_norm,
        bound,
        log_bound,
        pass,
    })
}

/// A witness point: position (exact, one of {-q_m, q_m, 2q_m}) and the true
/// solution's vector norm there.
#[derive(Debug, Clone)]
pub struct WitnessPoint {
    pub x: BigRational,
    pub norm: f64,
    /// Norm recomputed by the independent integrator route at tighter
    /// tolerance.
    pub reverified_norm: f64,
}

/// Per-order row of the witness report.
#[derive(Debug, Clone)]
pub struct WitnessRow {
    pub m: usize,
    pub q_m: BigInt,
    /// Sup of the state-difference norm over the sample partition.
    pub sup_diff_sampled: f64,
    /// Rigorized per-piece upper bound on the same sup.
    pub sup_diff_rigorous: f64,
    pub pass: bool,
    /// Norms of the approximant solution at (-q_m, q_m, 2q_m) and the case
    /// tag of the three-point estimate.
    pub approximant_norms: [f64; 3],
    pub trace_case: Option<TraceCase>,
    pub witnesses: Vec<WitnessPoint>,
    /// Gronwall self-audit: checks performed / all passed.
    pub gronwall_checks: usize,
    pub gronwall_ok: bool,
}

/// Witness report for one energy.
#[derive(Debug, Clone)]
pub struct WitnessReport {
    pub energy: f64,
    pub rows: Vec<WitnessRow>,
    /// Smallest passing order, if any passed.
    pub m0: Option<usize>,
    /// Squared-norm constant implied by the witness threshold.
    pub d_squared: f64,
    /// False when a work budget truncated the run.
    pub complete: bool,
}

/// Options for [`witness_run`].
#[derive(Debug, Clone)]
pub struct WitnessOptions {
    pub m_range: (usize, usize),
    /// Sample-grid nodes per unit length, in addition to the breakpoints.
    pub sample_density: u32,
    pub tol: f64,
    /// Cap on q_m; beyond it the report is returned truncated and flagged.
    pub q_budget: u64,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        WitnessOptions {
            m_range: (1, 3),
            sample_density: 4,
            tol: 1e-10,
            q_budget: 10_000,
        }
    }
}

/// Run the full pipeline for one energy: for each order m propagate the true
/// solution u (exact proxy phases) and the approximant solution u_m from the
/// shared initial state (1, 0), take the sup of the state-difference norm
/// over breakpoints plus grid, and when it stays ≤ 1/4 apply the three-point
/// estimate to u_m and emit witness points with ‖(u,u')‖ ≥ 1/4.
pub fn witness_run(q: &QuasiPotential, e: f64, opts: &WitnessOptions) -> Result<WitnessReport> {
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
    let mut rows = Vec::new();
    let mut complete = true;
    for m in m_lo..=m_hi {
        let q_m = cf.q_m(m)?.clone();
        if q_m.to_f64().unwrap_or(f64::INFINITY) > opts.q_budget as f64 {
            complete = false;
            break;
        }
        rows.push(witness_row(q, e, m, opts)?);
    }
    let m0 = rows.iter().find(|r| r.pass).map(|r| r.m);
    Ok(WitnessReport {
        energy: e,
        rows,
        m0,
        d_squared: WITNESS_SQUARED_NORM_D,
        complete,
    })
}

fn witness_row(q: &QuasiPotential, e: f64, m: usize, opts: &WitnessOptions) -> Result<WitnessRow> {
    let approx = q.approximant(m)?;
    let q_m = approx.q_m.clone();
    let q_m_r = BigRational::from(q_m.clone());
    let lo = -&q_m_r;
    let hi = BigRational::from(BigInt::from(2)) * &q_m_r;
    let w_true = PotentialRef::Quasi(q);
    let w_approx = PotentialRef::Approximant(&approx);
    if !w_true.piecewise_constant() {
        return Err(Error::Unsupported(
            "witness_run currently requires piecewise-constant sampling functions \
             (the exact propagation path); smooth sampling loses the 1e-15 phase \
             differences the comparison needs"
                .into(),
        ));
    }

    // Union partition: both potentials' breakpoints, the window ends, the
    // origin, the three-point positions, and a uniform sample grid.
    let mut extra: Vec<BigRational> = vec![BigRational::zero(), q_m_r.clone(), hi.clone()];
    let density = BigInt::from(opts.sample_density.max(1));
    let span_num = (&hi - &lo).to_integer() * &density;
    let steps = span_num.to_u64().unwrap_or(0);
    for j in 0..=steps {
        extra.push(&lo + BigRational::new(BigInt::from(j), density.clone()));
    }
    let (mut points, _) = build_partition(&w_true, &lo, &hi, &extra)?;
    let (approx_points, _) = build_partition(&w_approx, &lo, &hi, &[])?;
    points.extend(approx_points);
    points.sort();
    points.dedup();
    let two = BigRational::from(BigInt::from(2));
    let mut v_true = Vec::with_capacity(points.len() - 1);
    let mut v_approx = Vec::with_capacity(points.len() - 1);
    for i in 0..points.len() - 1 {
        let mid = (&points[i] + &points[i + 1]) / &two;
        v_true.push(w_true.value_at(&mid)?);
        v_approx.push(w_approx.value_at(&mid)?);
    }
    let anchor = points
        .binary_search(&BigRational::zero())
        .map_err(|_| Error::Domain("origin missing from partition".into()))?;
    let init = (1.0, 0.0);
    let states_true = solve_on_partition(&points, &v_true, e, anchor, init)?;
    let states_approx = solve_on_partition(&points, &v_approx, e, anchor, init)?;

    // Sampled sup of the difference and its per-piece rigorization: on each
    // piece δ' = A·δ + (0, ΔW·u)ᵀ with constant A (from the approximant) and
    // constant ΔW, so sup over the piece ≤ (endpoint max)·e^{‖A‖h} plus the
    // source term |ΔW|·max|u|·h·e^{‖A‖h}.
    let mut sup_sampled = 0.0f64;
    let mut sup_rigorous = 0.0f64;
    let diff_norm = |i: usize| -> f64 {
        let (u1, du1) = states_true[i];
        let (u2, du2) = states_approx[i];
        (u1 - u2).hypot(du1 - du2)
    };
    for i in 0..points.len() {
        sup_sampled = sup_sampled.max(diff_norm(i));
    }
    for i in 0..points.len() - 1 {
        let h = rational_to_f64(&(&points[i + 1] - &points[i]));
        let a_norm = 1.0f64.max((v_approx[i] - e).abs());
        let grow = (a_norm * h).exp();
        let end_max = diff_norm(i).max(diff_norm(i + 1));
        let dv = (v_true[i] - v_approx[i]).abs();
        let u_max = states_true[i].0.abs().max(states_true[i + 1].0.abs()) * grow;
        sup_rigorous = sup_rigorous.max(end_max * grow + dv * u_max * h * grow);
    }

    // Gronwall self-audit along the run: at every grid point the computed
    // difference must obey the estimate with the explicit constant. The
    // integral ∫|ΔW||u_m| accumulates piece by piece from the origin.
    let c1 = (1.0 + w_true.l1_unif_upper(e)).exp();
    let mut gronwall_checks = 0usize;
    let mut gronwall_ok = true;
    {
        // Prefix integrals of |ΔW|·|u_m| in both directions from the anchor.
        let mut pref = vec![0.0f64; points.len()];
        for i in anchor..points.len() - 1 {
            let h = rational_to_f64(&(&points[i + 1] - &points[i]));
            let dv = (v_true[i] - v_approx[i]).abs();
            let avg = 0.5 * (states_approx[i].0.abs() + states_approx[i + 1].0.abs());
            pref[i + 1] = pref[i] + dv * avg * h;
        }
        for i in (0..anchor).rev() {
            let h = rational_to_f64(&(&points[i + 1] - &points[i]));
            let dv = (v_true[i] - v_approx[i]).abs();
            let avg = 0.5 * (states_approx[i].0.abs() + states_approx[i + 1].0.abs());
            pref[i] = pref[i + 1] + dv * avg * h;
        }
        for i in (0..points.len()).step_by(1 + points.len() / 64) {
            let x = rational_to_f64(&points[i]);
            let lhs = diff_norm(i);
            gronwall_checks += 1;
            if lhs > 0.0 {
                let log_rhs = c1.ln() + c1 * x.abs() + pref[i].ln();
                if lhs.ln() > log_rhs + 1e-9 {
                    gronwall_ok = false;
                }
            }
        }
    }

    let pass = sup_sampled <= 0.25;
    let idx_of = |target: &BigRational| points.binary_search(target).ok();
    let three_points = [-&q_m_r, q_m_r.clone(), &q_m_r * &two];
    let mut approximant_norms = [f64::NAN; 3];
    for (slot, target) in three_points.iter().enumerate() {
        if let Some(i) = idx_of(target) {
            approximant_norms[slot] = states_approx[i].0.hypot(states_approx[i].1);
        }
    }
    // The three-point estimate enters only for passing orders. (At strongly
    // hyperbolic energies a failing order can carry ‖M‖ large enough that
    // the monodromy invariants are not even computable in f64.)
    let trace_case = if pass {
        let tp = three_point_bound(&w_approx, e, &SolutionState::new(0.0, 1.0, 0.0), opts.tol)?;
        // Cross-check against direct propagation: the periodicity identity
        // makes one matrix serve all three intervals.
        for (slot, target) in three_points.iter().enumerate() {
            let direct = approximant_norms[slot];
            let via_monodromy = tp.norms[slot];
            let scale = 1.0 + via_monodromy.abs();
            if direct.is_finite() && (direct - via_monodromy).abs() > 1e-6 * scale {
                return Err(Error::Invariant {
                    name: "periodicity identity",
                    details: format!(
                        "approximant norms via monodromy ({via_monodromy}) and direct \
                         propagation ({direct}) disagree at m={m}, E={e}, x={target}"
                    ),
                });
            }
        }
        Some(tp.case)
    } else {
        None
    };

    // Witness emission: points of the three-point set where the TRUE
    // solution keeps norm ≥ 1/4, re-verified by the independent adaptive
    // integrator at tighter tolerance.
    let mut witnesses = Vec::new();
    if pass {
        for target in three_points {
            if let Some(i) = idx_of(&target) {
                let n = states_true[i].0.hypot(states_true[i].1);
                if n >= WITNESS_NORM_THRESHOLD - 1e-9 {
                    let x_f = rational_to_f64(&target);
                    let re = reverify_norm(&w_true, e, x_f, opts.tol * 1e-2)?;
                    witnesses.push(WitnessPoint {
                        x: target.clone(),
                        norm: n,
                        reverified_norm: re,
                    });
                }
            }
        }
    }

    Ok(WitnessRow {
        m,
        q_m,
        sup_diff_sampled: sup_sampled,
        sup_diff_rigorous: sup_rigorous,
        pass,
        approximant_norms,
        trace_case,
        witnesses,
        gronwall_checks,
        gronwall_ok,
    })
}

/// Solution-norm profile ‖(u,u')(x)‖ of the true (quasiperiodic) potential
/// over [-q_m, 2q_m] on the breakpoint-plus-grid partition; used for plots.
pub fn solution_profile(
    q: &QuasiPotential,
    e: f64,
    m: usize,
    sample_density: u32,
) -> Result<Vec<(f64, f64)>> {
    let approx = q.approximant(m)?;
    let q_m_r = BigRational::from(approx.q_m.clone());
    let lo = -&q_m_r;
    let hi = BigRational::from(BigInt::from(2)) * &q_m_r;
    let w = PotentialRef::Quasi(q);
    let mut extra: Vec<BigRational> = vec![BigRational::zero()];
    let density = BigInt::from(sample_density.max(1));
    let steps = ((&hi - &lo).to_integer() * &density)
        .to_u64()
        .unwrap_or(0);
    for j in 0..=steps {
        extra.push(&lo + BigRational::new(BigInt::from(j), density.clone()));
    }
    let (points, values) = build_partition(&w, &lo, &hi, &extra)?;
    let anchor = points
        .binary_search(&BigRational::zero())
        .map_err(|_| Error::Domain("origin missing from partition".into()))?;
    let states = solve_on_partition(&points, &values, e, anchor, (1.0, 0.0))?;
    Ok(points
        .iter()
        .zip(&states)
        .map(|(x, (u, du))| (rational_to_f64(x), u.hypot(*du)))
        .collect())
}

/// Independent re-propagation of the true solution to x by the adaptive
/// integrator (piece-split Dormand–Prince rather than closed-form blocks).
fn reverify_norm(w: &PotentialRef, e: f64, x: f64, tol: f64) -> Result<f64> {
    let lo = crate::exact::rational_from_f64(x.min(0.0))?;
    let hi = crate::exact::rational_from_f64(x.max(0.0))?;
    let (points, values) = build_partition(w, &lo, &hi, &[])?;
    // Walk the partition with one RK segment per constant piece.
    let going_up = x >= 0.0;
    let seq: Vec<usize> = if going_up {
        (0..points.len()).collect()
    } else {
        (0..points.len()).rev().collect()
    };
    let mut state = (1.0f64, 0.0f64);
    // The walk starts at the origin end of the window (lo when x ≥ 0, hi
    // when x < 0); the other end is x itself.
    let mut prev_x = rational_to_f64(&points[seq[0]]);
    debug_assert_eq!(prev_x, 0.0);
    for win in seq.windows(2) {
        let i_from = win[0];
        let i_to = win[1];
        let x_to = rational_to_f64(&points[i_to]);
        let piece = if going_up { i_from } else { i_to };
        let wv = values[piece];
        state = rk_const_piece(wv, e, state, prev_x, x_to, tol)?;
        prev_x = x_to;
    }
    Ok(state.0.hypot(state.1))
}

/// Minimal adaptive RK4 with step doubling on one constant-coefficient
/// piece; deliberately not the closed-form block, so it is an independent
/// route for re-verification.
fn rk_const_piece(
    w: f64,
    e: f64,
    mut y: (f64, f64),
    x0: f64,
    x1: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    if x0 == x1 {
        return Ok(y);
    }
    let f = |y: (f64, f64)| (y.1, (w - e) * y.0);
    let rk4 = |y: (f64, f64), h: f64| {
        let k1 = f(y);
        let k2 = f((y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1));
        let k3 = f((y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1));
        let k4 = f((y.0 + h * k3.0, y.1 + h * k3.1));
        (
            y.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            y.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        )
    };
    let span = x1 - x0;
    // Resolve the local wave scale; error ~ (|k|h)⁵ per step.
    let k_scale = (w - e).abs().sqrt().max(1.0);
    let mut n = ((span.abs() * k_scale / 0.1).ceil() as usize).max(4);
    loop {
        let h = span / n as f64;
        let mut coarse = y;
        for _ in 0..n {
            coarse = rk4(coarse, h);
        }
        let mut fine = y;
        let h2 = h * 0.5;
        for _ in 0..2 * n {
            fine = rk4(fine, h2);
        }
        let err = (coarse.0 - fine.0).hypot(coarse.1 - fine.1);
        let scale = 1.0 + fine.0.hypot(fine.1);
        if !fine.0.is_finite() || !fine.1.is_finite() {
            return Err(Error::Blowup { x: x1 });
        }
        if err <= tol * scale || n > 1 << 22 {
            y = fine;
            return Ok(y);
        }
        n *= 2;
    }
}

/// CSV rows: E, m, q_m, sup_diff_sampled, sup_diff_rigorous, pass,
/// witness_x, witness_norm — one row per witness point, or a single row with
/// empty witness fields when an order has none.
pub fn witness_report_to_csv(report: &WitnessReport) -> String {
    let mut out =
        String::from("E,m,q_m,sup_diff_sampled,sup_diff_rigorous,pass,witness_x,witness_norm\n");
    for row in &report.rows {
        let base = format!(
            "{},{},{},{},{},{}",
            fmt_float17(report.energy),
            row.m,
            row.q_m,
            fmt_float17(row.sup_diff_sampled),
            fmt_float17(row.sup_diff_rigorous),
            row.pass,
        );
        if row.witnesses.is_empty() {
            out.push_str(&format!("{base},,\n"));
        } else {
            for w in &row.witnesses {
                out.push_str(&format!("{base},{},{}\n", w.x, fmt_float17(w.norm)));
            }
        }
    }
    out
}

/// JSON form of the report.
pub fn witness_report_to_json(report: &WitnessReport) -> Value {
    json!({
        "energy": report.energy,
        "d_squared": report.d_squared,
        "m0": report.m0,
        "complete": report.complete,
        "rows": report.rows.iter().map(|r| json!({
            "m": r.m,
            "q_m": r.q_m.to_string(),
            "sup_diff_sampled": r.sup_diff_sampled,
            "sup_diff_rigorous": r.sup_diff_rigorous,
            "pass": r.pass,
            "approximant_norms": r.approximant_norms,
            "gronwall_checks": r.gronwall_checks,
            "gronwall_ok": r.gronwall_ok,
            "witnesses": r.witnesses.iter().map(|w| json!({
                "x": w.x.to_string(),
                "norm": w.norm,
                "reverified_norm": w.reverified_norm,
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{build_liouville, DigitBudget, FrequencySpec, GrowthRule};
    use crate::potential::{PeriodicPotential, StepPotential};

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn half_step() -> PeriodicPotential {
        PeriodicPotential::Step(
            StepPotential::new(vec![(rat(0, 1), 1.0), (rat(1, 2), 0.0)]).unwrap(),
        )
    }

    fn liouville_quasi(v2: PeriodicPotential) -> QuasiPotential {
        let cf = build_liouville(1, &GrowthRule::Default, 4, DigitBudget::default()).unwrap();
        QuasiPotential::new(
            PeriodicPotential::zero(),
            v2,
            FrequencySpec::from_cf(cf),
            rat(0, 1),
        )
    }

    #[test]
    fn gronwall_identical_potentials() {
        let p = half_step();
        let w = PotentialRef::Periodic(&p);
        let g = gronwall_check(&w, &w, 1.0, 2.0, None, 1e-10).unwrap();
        assert_eq!(g.lhs, 0.0);
        assert!(g.pass);
    }

    #[test]
    fn gronwall_hand_checked_constant_pair() {
        // W₁ = 1, W₂ = 0, E = 0, x = 1: u₁ = cosh, u₂ ≡ 1.
        let g = gronwall_check(
            &PotentialRef::Constant(1.0),
            &PotentialRef::Zero,
            0.0,
            1.0,
            None,
            1e-10,
        )
        .unwrap();
        let expect_lhs = (1f64.cosh() - 1.0).hypot(1f64.sinh());
        assert!((g.lhs - expect_lhs).abs() < 1e-10, "lhs = {}", g.lhs);
        // C = e², rhs = C·e^C·∫₀¹ 1·1 = e²·e^{e²} ≈ 1.2e4.
        assert!((g.c_const - std::f64::consts::E.powi(2)).abs() < 1e-10);
        assert!((g.rhs - 11955.0).abs() < 10.0, "rhs = {}", g.rhs);
        assert!(g.pass);
    }

    #[test]
    fn gronwall_negative_direction() {
        let g = gronwall_check(
            &PotentialRef::Constant(2.0),
            &PotentialRef::Constant(-1.0),
            0.5,
            -3.0,
            None,
            1e-10,
        )
        .unwrap();
        assert!(g.lhs > 0.0);
        assert!(g.pass, "lhs {} rhs {} log_rhs {}", g.lhs, g.rhs, g.log_rhs);
    }

    #[test]
    fn growth_bound_free_cases() {
        // W = 0, E = -1, x = 2: norm = ‖(cosh 2, sinh 2)‖ ≈ 5.22; envelope e².
        let g = growth_bound(&PotentialRef::Zero, -1.0, 2.0, 1e-10).unwrap();
        let expect = 2f64.cosh().hypot(2f64.sinh());
        assert!((g.computed_norm - expect).abs() < 1e-9);
        assert!(g.pass);
        // E = 1: rotation keeps the norm at 1 ≤ bound.
        let g = growth_bound(&PotentialRef::Zero, 1.0, 13.7, 1e-10).unwrap();
        assert!((g.computed_norm - 1.0).abs() < 1e-9);
        assert!(g.pass);
    }

    #[test]
    fn growth_bound_step_case() {
        let p = half_step();
        let g = growth_bound(&PotentialRef::Periodic(&p), 2.0, 10.0, 1e-10).unwrap();
        assert!(g.pass, "norm {} bound {}", g.computed_norm, g.bound);
    }

    #[test]
    fn witness_zero_v2_is_exact_match() {
        // V₂ = 0: u = u_m exactly for every m; witnesses come straight from
        // the three-point estimate.
        let cf = build_liouville(1, &GrowthRule::Default, 4, DigitBudget::default()).unwrap();
        let q = QuasiPotential::new(
            half_step(),
            PeriodicPotential::zero(),
            FrequencySpec::from_cf(cf),
            rat(0, 1),
        );
        let report = witness_run(&q, 0.5, &WitnessOptions::default()).unwrap();
        assert_eq!(report.m0, Some(1));
        for row in &report.rows {
            assert_eq!(row.sup_diff_sampled, 0.0);
            assert!(row.pass);
            assert!(!row.witnesses.is_empty());
            for w in &row.witnesses {
                assert!(w.norm >= WITNESS_NORM_THRESHOLD - 1e-9);
                assert!((w.norm - w.reverified_norm).abs() < 1e-5 * (1.0 + w.norm));
            }
            assert!(row.gronwall_ok);
        }
    }

    #[test]
    fn witness_rational_alpha_full_order_sup_zero() {
        let q = QuasiPotential::new(
            PeriodicPotential::zero(),
            half_step(),
            FrequencySpec::exact(rat(2, 3)).unwrap(),
            rat(0, 1),
        );
        // cf(2/3) = [1, 2]: at m = 2, α₂ = α exactly.
        let report = witness_run(
            &q,
            1.0,
            &WitnessOptions {
                m_range: (2, 2),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(report.rows[0].sup_diff_sampled, 0.0);
        assert!(report.rows[0].pass);
    }

    #[test]
    fn witness_default_liouville_demo_energy() {
        // The E = 0.5 demo cell: m = 3 must pass with witnesses in
        // {-25, 25, 50}.
        let q = liouville_quasi(half_step());
        let report = witness_run(
            &q,
            0.5,
            &WitnessOptions {
                m_range: (3, 3),
                ..Default::default()
            },
        )
        .unwrap();
        let row = &report.rows[0];
        assert!(row.pass, "sup = {}", row.sup_diff_sampled);
        assert!(!row.witnesses.is_empty());
        for w in &row.witnesses {
            let xi = w.x.to_integer().to_i64().unwrap();
            assert!([-25i64, 25, 50].contains(&xi), "witness at {xi}");
            assert!(w.norm >= 0.25 - 1e-9);
            assert!(w.reverified_norm >= 0.25 - 1e-9);
        }
        assert!(row.gronwall_ok);
        // Lemma consistency: some three-point norm reaches 1/2.
        assert!(row.approximant_norms.iter().any(|&n| n >= 0.5 - 1e-9));
    }

    #[test]
    fn witness_density_monotonicity() {
        // A denser sample grid can only raise the sampled sup.
        let q = liouville_quasi(half_step());
        let sup_at = |density: u32| {
            witness_run(
                &q,
                2.0,
                &WitnessOptions {
                    m_range: (2, 2),
                    sample_density: density,
                    ..Default::default()
                },
            )
            .unwrap()
            .rows[0]
                .sup_diff_sampled
        };
        assert!(sup_at(8) >= sup_at(2));
    }

    #[test]
    fn witness_budget_flags_incomplete() {
        let q = liouville_quasi(half_step());
        let report = witness_run(
            &q,
            0.5,
            &WitnessOptions {
                m_range: (1, 4),
                q_budget: 100,
                ..Default::default()
            },
        )
        .unwrap();
        // q₄ ≈ 2.1e13 over budget: rows stop at m = 3.
        assert!(!report.complete);
        assert_eq!(report.rows.len(), 3);
    }

    #[test]
    fn csv_schema() {
        let q = liouville_quasi(half_step());
        let report = witness_run(
            &q,
            0.5,
            &WitnessOptions {
                m_range: (1, 2),
                ..Default::default()
            },
        )
        .unwrap();
        let csv = witness_report_to_csv(&report);
        assert!(csv.starts_with(
            "E,m,q_m,sup_diff_sampled,sup_diff_rigorous,pass,witness_x,witness_norm\n"
        ));
        let json = witness_report_to_json(&report);
        assert_eq!(json["d_squared"], 1.0 / 16.0);
    }
}
