//! 1-periodic sampling functions, quasiperiodic compositions, periodic
//! approximants, and the L¹/oscillation functionals on them.
//!
//! Three sampling families are supported: step functions with exact rational
//! breakpoints, trigonometric polynomials, and the 1-periodization of
//! c·|x|^{-γ} on [-1/2, 1/2] (0 < γ < 1, locally integrable). Finite linear
//! combinations are flattened sums. Phases xα + θ are reduced mod 1 in exact
//! rational arithmetic; only the final function value lives in f64.
//!
//! Conventions fixed here for reproducibility: step functions are
//! right-continuous at breakpoints, and evaluation at an exact lattice point
//! of a power singularity is a signalled condition rather than ±∞ — every
//! integral crosses singularities via closed-form antiderivatives instead.

use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::exact::{mod_one, rational_from_f64, rational_to_f64, BigRational, FrequencySpec};
use crate::quad::adaptive_simpson;
use crate::Result;

use num_bigint::BigInt;

/// Kind of a non-smooth point of a sampling function, used by the propagator
/// and the exact integrators to split intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BreakpointKind {
    /// Jump discontinuity (step functions).
    Jump,
    /// Continuous but with a derivative jump (the |x| kink at half-period of
    /// the singular family).
    Kink,
    /// Power singularity lattice point.
    Singular,
}

/// Step function on the unit circle: value `values[i]` on
/// [breakpoints[i], breakpoints[i+1]) with wrap-around, right-continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPotential {
    breakpoints: Vec<BigRational>,
    values: Vec<f64>,
}

impl StepPotential {
    /// Breakpoints must satisfy 0 ≤ b₁ < … < b_k < 1.
    pub fn new(pieces: Vec<(BigRational, f64)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Domain("step potential needs at least one piece".into()));
        }
        let mut breakpoints = Vec::with_capacity(pieces.len());
        let mut values = Vec::with_capacity(pieces.len());
        for (b, v) in pieces {
            if b < BigRational::zero() || b >= BigRational::one() {
                return Err(Error::Domain(format!("breakpoint {b} outside [0, 1)")));
            }
            if let Some(last) = breakpoints.last() {
                if &b <= last {
                    return Err(Error::Domain(format!(
                        "breakpoints not strictly increasing at {b}"
                    )));
                }
            }
            if !v.is_finite() {
                return Err(Error::Domain(format!("non-finite step value {v}")));
            }
            breakpoints.push(b);
            values.push(v);
        }
        Ok(StepPotential { breakpoints, values })
    }

    /// Constant function as a single-piece step.
    pub fn constant(v: f64) -> Self {
        StepPotential {
            breakpoints: vec![BigRational::zero()],
            values: vec![v],
        }
    }

    pub fn breakpoints(&self) -> &[BigRational] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at a phase already reduced to [0, 1).
    pub fn value_at_phase(&self, phase: &BigRational) -> f64 {
        debug_assert!(phase >= &BigRational::zero() && phase < &BigRational::one());
        let idx = self.breakpoints.partition_point(|b| b <= phase);
        if idx == 0 {
            // Before the first breakpoint: wrapped tail of the last piece.
            *self.values.last().unwrap()
        } else {
            self.values[idx - 1]
        }
    }

    /// Piece lengths on the circle, aligned with `values`.
    pub fn piece_lengths(&self) -> Vec<BigRational> {
        let k = self.breakpoints.len();
        (0..k)
            .map(|i| {
                if i + 1 < k {
                    &self.breakpoints[i + 1] - &self.breakpoints[i]
                } else {
                    BigRational::one() - &self.breakpoints[k - 1] + &self.breakpoints[0]
                }
            })
            .collect()
    }

    /// Jump heights at each breakpoint (value after minus value before).
    pub fn jumps(&self) -> Vec<f64> {
        let k = self.values.len();
        (0..k)
            .map(|i| self.values[i] - self.values[(i + k - 1) % k])
            .collect()
    }

    /// ∫₀¹ |f(x) - shift| dx, exact piece sums.
    fn l1_shifted(&self, shift: f64) -> f64 {
        self.piece_lengths()
            .iter()
            .zip(&self.values)
            .map(|(len, v)| (v - shift).abs() * rational_to_f64(len))
            .sum()
    }
}

/// One term a·cos(2πkx + φ) of a trigonometric polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub harmonic: u32,
    pub amplitude: f64,
    pub phase: f64,
}

/// Real trigonometric polynomial Σ aⱼ·cos(2πkⱼx + φⱼ); the smooth sampling
/// family. Restricting to trig polynomials keeps integrals in closed reach
/// and Hölder constants honest.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn new(terms: Vec<TrigTerm>) -> Result<Self> {
        for t in &terms {
            if t.harmonic == 0 {
                return Err(Error::Domain(
                    "trig harmonic must be ≥ 1 (use a constant step for k=0)".into(),
                ));
            }
            if !t.amplitude.is_finite() || !t.phase.is_finite() {
                return Err(Error::Domain("non-finite trig coefficient".into()));
            }
        }
        Ok(TrigPoly { terms })
    }

    pub fn eval_phase(&self, phase01: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amplitude * (std::f64::consts::TAU * t.harmonic as f64 * phase01 + t.phase).cos())
            .sum()
    }

    /// Lipschitz constant Σ|a|·2πk.
    pub fn lipschitz_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amplitude.abs() * std::f64::consts::TAU * t.harmonic as f64)
            .sum()
    }
}

/// Descriptor of a 1-periodic sampling function.
#[derive(Debug, Clone, PartialEq)]
pub enum PeriodicPotential {
    Step(StepPotential),
    Smooth(TrigPoly),
    /// 1-periodization of scale·|x|^{-γ} on [-1/2, 1/2]; 0 < γ < 1.
    PowerSingular { gamma: f64, scale: f64 },
    /// Flat linear combination; never contains a nested Sum.
    Sum(Vec<(f64, PeriodicPotential)>),
}

impl PeriodicPotential {
    pub fn zero() -> Self {
        PeriodicPotential::Step(StepPotential::constant(0.0))
    }

    pub fn power_singular(gamma: f64, scale: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Domain(format!(
                "power singularity exponent must satisfy 0 < γ < 1, got {gamma}"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!(
                "singularity scale must be positive, got {scale}"
            )));
        }
        Ok(PeriodicPotential::PowerSingular { gamma, scale })
    }

    /// Linear combination, flattened so no Sum nests inside another.
    pub fn sum(parts: Vec<(f64, PeriodicPotential)>) -> Self {
        let mut flat = Vec::new();
        for (c, p) in parts {
            match p {
                PeriodicPotential::Sum(inner) => {
                    for (ci, pi) in inner {
                        flat.push((c * ci, pi));
                    }
                }
                other => flat.push((c, other)),
            }
        }
        PeriodicPotential::Sum(flat)
    }

    /// Value at an exact rational point; the phase is reduced mod 1 exactly.
    /// Landing exactly on a singularity lattice point is signalled.
    pub fn eval_rational(&self, x: &BigRational) -> Result<f64> {
        let phase = mod_one(x);
        self.eval_phase_rational(&phase, x)
    }

    fn eval_phase_rational(&self, phase: &BigRational, original_x: &BigRational) -> Result<f64> {
        match self {
            PeriodicPotential::Step(s) => Ok(s.value_at_phase(phase)),
            PeriodicPotential::Smooth(t) => Ok(t.eval_phase(rational_to_f64(phase))),
            PeriodicPotential::PowerSingular { gamma, scale } => {
                let complement = BigRational::one() - phase;
                let dist = if phase <= &complement { phase.clone() } else { complement };
                if dist.is_zero() {
                    return Err(Error::SingularityHit {
                        x: original_x.to_string(),
                    });
                }
                Ok(scale * rational_to_f64(&dist).powf(-gamma))
            }
            PeriodicPotential::Sum(parts) => {
                let mut acc = 0.0;
                for (c, p) in parts {
                    acc += c * p.eval_phase_rational(phase, original_x)?;
                }
                Ok(acc)
            }
        }
    }

    /// Float-point evaluation (used by the adaptive integrator, where phase
    /// fidelity beyond f64 is not needed).
    pub fn eval_f64(&self, x: f64) -> Result<f64> {
        // rem_euclid(1.0) rounds up to exactly 1.0 for tiny negative inputs.
        let frac01 = |x: f64| {
            let f = x.rem_euclid(1.0);
            if f >= 1.0 {
                0.0
            } else {
                f
            }
        };
        match self {
            PeriodicPotential::Step(s) => {
                let phase = rational_from_f64(frac01(x))?;
                Ok(s.value_at_phase(&phase))
            }
            PeriodicPotential::Smooth(t) => Ok(t.eval_phase(frac01(x))),
            PeriodicPotential::PowerSingular { gamma, scale } => {
                let frac = frac01(x);
                let dist = frac.min(1.0 - frac);
                if dist == 0.0 {
                    return Err(Error::SingularityHit { x: x.to_string() });
                }
                Ok(scale * dist.powf(-gamma))
            }
            PeriodicPotential::Sum(parts) => {
                let mut acc = 0.0;
                for (c, p) in parts {
                    acc += c * p.eval_f64(x)?;
                }
                Ok(acc)
            }
        }
    }

    /// Non-smooth points within one period [0, 1).
    pub fn cell_breakpoints(&self) -> Vec<(BigRational, BreakpointKind)> {
        match self {
            PeriodicPotential::Step(s) => s
                .breakpoints
                .iter()
                .cloned()
                .map(|b| (b, BreakpointKind::Jump))
                .collect(),
            PeriodicPotential::Smooth(_) => Vec::new(),
            PeriodicPotential::PowerSingular { .. } => vec![
                (BigRational::zero(), BreakpointKind::Singular),
                (
                    BigRational::new(BigInt::one(), BigInt::from(2)),
                    BreakpointKind::Kink,
                ),
            ],
            PeriodicPotential::Sum(parts) => {
                let mut pts: Vec<(BigRational, BreakpointKind)> = Vec::new();
                for (_, p) in parts {
                    pts.extend(p.cell_breakpoints());
                }
                dedup_breakpoints(&mut pts);
                pts
            }
        }
    }

    /// Whether the function is piecewise constant (step or a pure-step sum),
    /// enabling the exact propagation and integration paths.
    pub fn piecewise_constant(&self) -> bool {
        match self {
            PeriodicPotential::Step(_) => true,
            PeriodicPotential::Smooth(t) => t.terms.is_empty(),
            PeriodicPotential::PowerSingular { .. } => false,
            PeriodicPotential::Sum(parts) => parts.iter().all(|(_, p)| p.piecewise_constant()),
        }
    }

    /// Merge into a single exact step function if piecewise constant.
    pub fn flatten_steps(&self) -> Option<StepPotential> {
        if !self.piecewise_constant() {
            return None;
        }
        match self {
            PeriodicPotential::Step(s) => Some(s.clone()),
            PeriodicPotential::Smooth(_) => Some(StepPotential::constant(0.0)),
            PeriodicPotential::Sum(parts) => {
                let mut breaks: Vec<BigRational> = vec![BigRational::zero()];
                for (_, p) in parts {
                    if let Some(s) = p.flatten_steps() {
                        breaks.extend(s.breakpoints.iter().cloned());
                    }
                }
                breaks.sort();
                breaks.dedup();
                let flats: Vec<(f64, StepPotential)> = parts
                    .iter()
                    .map(|(c, p)| (*c, p.flatten_steps().unwrap()))
                    .collect();
                let two = BigRational::from(BigInt::from(2));
                let values: Vec<f64> = (0..breaks.len())
                    .map(|i| {
                        let mid = if i + 1 < breaks.len() {
                            (&breaks[i] + &breaks[i + 1]) / &two
                        } else {
                            (&breaks[i] + BigRational::one()) / &two
                        };
                        let mid = mod_one(&mid);
                        flats.iter().map(|(c, s)| c * s.value_at_phase(&mid)).sum()
                    })
                    .collect();
                Some(StepPotential {
                    breakpoints: breaks,
                    values,
                })
            }
            PeriodicPotential::PowerSingular { .. } => None,
        }
    }
}

fn dedup_breakpoints(pts: &mut Vec<(BigRational, BreakpointKind)>) {
    pts.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    // Keep the most severe kind per location (Singular > Kink > Jump).
    pts.dedup_by(|next, prev| {
        if next.0 == prev.0 {
            prev.1 = prev.1.max(next.1);
            true
        } else {
            false
        }
    });
}

/// The quasiperiodic pair: V(x) = V₁(x) + V₂(xα + θ).
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiPotential {
    pub v1: PeriodicPotential,
    pub v2: PeriodicPotential,
    pub alpha: FrequencySpec,
    pub theta: BigRational,
}

impl QuasiPotential {
    pub fn new(
        v1: PeriodicPotential,
        v2: PeriodicPotential,
        alpha: FrequencySpec,
        theta: BigRational,
    ) -> Self {
        QuasiPotential {
            v1,
            v2,
            alpha,
            theta: mod_one(&theta),
        }
    }

    /// Exact-phase evaluation: V₁(x) + V₂(xα + θ) with α resolved to its
    /// exact rational representative.
    pub fn eval_rational(&self, x: &BigRational) -> Result<f64> {
        let alpha = self.alpha.resolve();
        let phase = x * &alpha + &self.theta;
        Ok(self.v1.eval_rational(x)? + self.v2.eval_rational(&phase)?)
    }

    pub fn eval_f64(&self, x: f64) -> Result<f64> {
        let alpha = rational_to_f64(&self.alpha.resolve());
        let theta = rational_to_f64(&self.theta);
        Ok(self.v1.eval_f64(x)? + self.v2.eval_f64(x * alpha + theta)?)
    }

    /// The q_m-periodic approximant V^{(m)}(x) = V₁(x) + V₂(xα_m + θ).
    pub fn approximant(&self, m: usize) -> Result<ApproximantPotential> {
        let cf = self.alpha.continued_fraction()?;
        let alpha_m = cf.alpha_m(m)?;
        let q_m = cf.q_m(m)?.clone();
        Ok(ApproximantPotential {
            source: self.clone(),
            m,
            alpha_m,
            q_m,
        })
    }
}

/// Periodic approximant of a quasiperiodic potential at convergent order m;
/// exactly q_m-periodic since q_m·α_m = p_m is an integer and V₁ has period 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximantPotential {
    pub source: QuasiPotential,
    pub m: usize,
    pub alpha_m: BigRational,
    pub q_m: BigInt,
}

impl ApproximantPotential {
    pub fn eval_rational(&self, x: &BigRational) -> Result<f64> {
        let phase = x * &self.alpha_m + &self.source.theta;
        Ok(self.source.v1.eval_rational(x)? + self.source.v2.eval_rational(&phase)?)
    }

    pub fn eval_f64(&self, x: f64) -> Result<f64> {
        let alpha = rational_to_f64(&self.alpha_m);
        let theta = rational_to_f64(&self.source.theta);
        Ok(self.source.v1.eval_f64(x)? + self.source.v2.eval_f64(x * alpha + theta)?)
    }

    pub fn period(&self) -> BigRational {
        BigRational::from(self.q_m.clone())
    }
}

/// Positions in [lo, hi] where x ↦ p(x·alpha + theta) has a cell breakpoint:
/// x = (b + k - θ)/α over integers k, for each breakpoint b of p.
pub fn scaled_breakpoints(
    p: &PeriodicPotential,
    alpha: &BigRational,
    theta: &BigRational,
    lo: &BigRational,
    hi: &BigRational,
) -> Vec<(BigRational, BreakpointKind)> {
    let mut out = Vec::new();
    if alpha.is_zero() || lo > hi {
        return out;
    }
    debug_assert!(alpha.is_positive());
    for (b, kind) in p.cell_breakpoints() {
        // x ∈ [lo, hi] ⟺ k ∈ [lo·α + θ - b, hi·α + θ - b].
        let k_lo = (lo * alpha + theta - &b).ceil();
        let k_hi = (hi * alpha + theta - &b).floor();
        let mut k = k_lo;
        while k <= k_hi {
            let x = (&b + &k - theta) / alpha;
            out.push((x, kind));
            k += BigRational::one();
        }
    }
    dedup_breakpoints(&mut out);
    out
}

// ---------------------------------------------------------------------------
// Uniform-local L¹ norms
// ---------------------------------------------------------------------------

/// ∫₀¹ |p(x) - shift| dx for a 1-periodic sampling function. Exact for steps,
/// closed form for the singular family, adaptive quadrature for trig
/// polynomials, and a triangle-inequality upper bound for mixed sums.
pub fn l1_period_norm(p: &PeriodicPotential, shift: f64) -> f64 {
    if let Some(s) = p.flatten_steps() {
        return s.l1_shifted(shift);
    }
    match p {
        PeriodicPotential::Step(s) => s.l1_shifted(shift),
        PeriodicPotential::Smooth(t) => {
            adaptive_simpson(&|x| (t.eval_phase(x) - shift).abs(), 0.0, 1.0, 1e-12, 40).value
        }
        PeriodicPotential::PowerSingular { gamma, scale } => {
            singular_l1_shifted(*gamma, *scale, shift)
        }
        PeriodicPotential::Sum(parts) => {
            let base: f64 = parts
                .iter()
                .map(|(c, q)| c.abs() * l1_period_norm(q, 0.0))
                .sum();
            base + shift.abs()
        }
    }
}

/// 2·∫₀^{1/2} |c·t^{-γ} - E| dt by the antiderivative F(t) = c·t^{1-γ}/(1-γ).
fn singular_l1_shifted(gamma: f64, c: f64, e: f64) -> f64 {
    let f = |t: f64| c * t.powf(1.0 - gamma) / (1.0 - gamma);
    let half = 0.5;
    if e <= 0.0 {
        return 2.0 * f(half) - e;
    }
    let t_star = (c / e).powf(1.0 / gamma);
    if t_star >= half {
        2.0 * f(half) - e
    } else {
        2.0 * (2.0 * f(t_star) - f(half) - 2.0 * e * t_star + e * half)
    }
}

/// ‖p‖_{1,unif} = sup_x ∫_x^{x+1} |p| dx. For a 1-periodic function every
/// unit window covers exactly one period, so this equals ∫₀¹|p|.
pub fn l1_unif_norm(p: &PeriodicPotential) -> f64 {
    l1_period_norm(p, 0.0)
}

/// ‖W‖_{1,unif} for a q_m-periodic approximant. Exact window scan for
/// piecewise-constant sampling (the window integral is piecewise linear in
/// the window position, so the sup is attained with a window end on a
/// breakpoint); upper bound ∫₀¹|V₁| + (1/α_m)∫₀¹|V₂| otherwise.
pub fn l1_unif_norm_approximant(w: &ApproximantPotential) -> f64 {
    if w.source.v1.piecewise_constant() && w.source.v2.piecewise_constant() {
        let period = w.period();
        let lo = BigRational::zero();
        let hi = &period + BigRational::one();
        let mut pts: Vec<BigRational> = vec![lo.clone(), hi.clone()];
        for (x, _) in scaled_breakpoints(
            &w.source.v1,
            &BigRational::one(),
            &BigRational::zero(),
            &lo,
            &hi,
        ) {
            pts.push(x);
        }
        for (x, _) in scaled_breakpoints(&w.source.v2, &w.alpha_m, &w.source.theta, &lo, &hi) {
            pts.push(x);
        }
        pts.sort();
        pts.dedup();
        let two = BigRational::from(BigInt::from(2));
        // Prefix integrals of |W| over [0, t] at every partition point.
        let mut prefix = vec![0.0f64];
        for i in 0..pts.len() - 1 {
            let mid = (&pts[i] + &pts[i + 1]) / &two;
            let v = w
                .eval_rational(&mid)
                .expect("piecewise-constant eval cannot hit singularities");
            let len = rational_to_f64(&(&pts[i + 1] - &pts[i]));
            prefix.push(prefix[i] + v.abs() * len);
        }
        let integral_upto = |x: &BigRational| -> f64 {
            match pts.binary_search(x) {
                Ok(i) => prefix[i],
                Err(i) => {
                    // x strictly inside piece i-1.
                    let mid = (&pts[i - 1] + x) / &two;
                    let v = w.eval_rational(&mid).unwrap().abs();
                    prefix[i - 1] + v * rational_to_f64(&(x - &pts[i - 1]))
                }
            }
        };
        // Candidate window starts: every breakpoint b and b-1 inside the
        // period, plus 0.
        let mut candidates: Vec<BigRational> = vec![BigRational::zero()];
        for b in &pts {
            if b >= &BigRational::zero() && b < &period {
                candidates.push(b.clone());
            }
            let shifted = b - BigRational::one();
            if shifted >= BigRational::zero() && shifted < period {
                candidates.push(shifted);
            }
        }
        candidates.sort();
        candidates.dedup();
        let mut best = 0.0f64;
        for x in &candidates {
            let upper = x + BigRational::one();
            let val = integral_upto(&upper) - integral_upto(x);
            if val > best {
                best = val;
            }
        }
        best
    } else {
        let alpha = rational_to_f64(&w.alpha_m);
        l1_period_norm(&w.source.v1, 0.0)
            + if alpha > 0.0 {
                l1_period_norm(&w.source.v2, 0.0) / alpha.min(1.0)
            } else {
                l1_period_norm(&w.source.v2, 0.0)
            }
    }
}

/// Upper bound on ‖V₁ + V₂(α·+θ) - E‖_{1,unif}: the V₁ window covers one
/// exact period, the sampled V₂ part contributes at most (1/α)∫₀¹|V₂| since a
/// unit x-window maps to a phase window of length α < 1.
pub fn l1_unif_upper_quasi(
    v1: &PeriodicPotential,
    v2: &PeriodicPotential,
    alpha_f64: f64,
    e: f64,
) -> f64 {
    let head = l1_period_norm(v1, e);
    let tail = if alpha_f64 > 0.0 {
        l1_period_norm(v2, 0.0) / alpha_f64.min(1.0)
    } else {
        l1_period_norm(v2, 0.0)
    };
    head + tail
}

// ---------------------------------------------------------------------------
// Oscillation functional
// ---------------------------------------------------------------------------

/// ∫₀¹ osc_{p,ε}(x) dx with osc_{p,ε}(x) = sup_{y,z ∈ (x-ε,x+ε)} |p(y)-p(z)|.
///
/// Exact for step functions (window membership of each jump changes only at
/// x = bᵢ ± ε, so the oscillation is piecewise constant with rational
/// breakpoints); numeric sup-scan for trig polynomials; +∞ for the singular
/// family (its oscillation near the lattice is unbounded, so the Hölder
/// route does not apply); triangle-inequality upper bound for mixed sums.
pub fn osc_integral(p: &PeriodicPotential, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!(
            "oscillation radius must be positive, got {eps}"
        )));
    }
    if eps >= 0.25 {
        return Err(Error::Domain(format!(
            "oscillation radius must satisfy ε < 1/4 (window wraps ambiguously), got {eps}"
        )));
    }
    if let Some(s) = p.flatten_steps() {
        return Ok(osc_integral_step_exact(&s, eps));
    }
    match p {
        PeriodicPotential::Step(s) => Ok(osc_integral_step_exact(s, eps)),
        PeriodicPotential::Smooth(t) => Ok(osc_integral_smooth_scan(t, eps)),
        PeriodicPotential::PowerSingular { .. } => Ok(f64::INFINITY),
        PeriodicPotential::Sum(parts) => {
            let mut acc = 0.0;
            for (c, q) in parts {
                let o = osc_integral(q, eps)?;
                if o.is_infinite() {
                    return Ok(f64::INFINITY);
                }
                acc += c.abs() * o;
            }
            Ok(acc)
        }
    }
}

fn osc_integral_step_exact(s: &StepPotential, eps: f64) -> f64 {
    if s.values.len() <= 1 {
        return 0.0; // constant
    }
    let eps_r = rational_from_f64(eps).expect("finite eps");
    let one = BigRational::one();
    // Critical positions where window membership changes, reduced mod 1.
    let mut critical: Vec<BigRational> = Vec::with_capacity(2 * s.breakpoints.len());
    for b in &s.breakpoints {
        critical.push(mod_one(&(b - &eps_r)));
        critical.push(mod_one(&(b + &eps_r)));
    }
    critical.push(BigRational::zero());
    critical.sort();
    critical.dedup();
    critical.push(one.clone());

    let two = BigRational::from(BigInt::from(2));
    let mut acc_f = 0.0f64;
    for i in 0..critical.len() - 1 {
        let x = (&critical[i] + &critical[i + 1]) / &two;
        let w_lo = &x - &eps_r;
        let w_hi = &x + &eps_r;
        // Values attained on the open window (w_lo, w_hi): the piece at the
        // left edge plus every piece entered at a contained breakpoint
        // (breakpoints shifted by -1, 0, +1 unroll the circle; ε < 1/4 keeps
        // the window within one wrap).
        let v_edge = s.value_at_phase(&mod_one(&w_lo));
        let mut vmin = v_edge;
        let mut vmax = v_edge;
        for (j, b) in s.breakpoints.iter().enumerate() {
            for shift in [-1i8, 0, 1] {
                let pos = match shift {
                    -1 => b - &one,
                    0 => b.clone(),
                    _ => b + &one,
                };
                if pos > w_lo && pos < w_hi {
                    let v = s.values[j];
                    vmin = vmin.min(v);
                    vmax = vmax.max(v);
                }
            }
        }
        let osc = vmax - vmin;
        if osc != 0.0 {
            let len = &critical[i + 1] - &critical[i];
            acc_f += osc * rational_to_f64(&len);
        }
    }
    acc_f
}

fn osc_integral_smooth_scan(t: &TrigPoly, eps: f64) -> f64 {
    const NX: usize = 1024;
    const NW: usize = 64;
    let mut total = 0.0;
    for i in 0..NX {
        let x = (i as f64 + 0.5) / NX as f64;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..=NW {
            let y = x - eps + 2.0 * eps * j as f64 / NW as f64;
            let v = t.eval_phase(y.rem_euclid(1.0));
            lo = lo.min(v);
            hi = hi.max(v);
        }
        total += hi - lo;
    }
    total / NX as f64
}

/// Result of fitting ∫osc ≤ D·ε^δ on a grid of radii.
#[derive(Debug, Clone, PartialEq)]
pub enum HolderCertificate {
    /// Least-squares fit of log ∫osc against log ε. `eps_range` records the
    /// radii actually fitted; whether they are "sufficiently small" for the
    /// theory is left to the caller's judgement.
    Fit {
        d: f64,
        delta: f64,
        eps_range: (f64, f64),
        max_log_residual: f64,
    },
    Failed { reason: String },
}

/// Fit (D, δ) with δ > 0 such that ∫₀¹ osc_{p,ε} ≈ D ε^δ over `eps_grid`
/// (decreasing, all < 1/4). Unbounded oscillation (the singular family) or a
/// non-decaying integral yields `Failed`; a constant potential fits D = 0.
pub fn holder_certificate(p: &PeriodicPotential, eps_grid: &[f64]) -> Result<HolderCertificate> {
    if eps_grid.len() < 2 {
        return Err(Error::Domain("need at least two radii to fit".into()));
    }
    for w in eps_grid.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Domain("eps grid must be strictly decreasing".into()));
        }
    }
    let mut oscs = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let o = osc_integral(p, eps)?;
        if o.is_infinite() {
            return Ok(HolderCertificate::Failed {
                reason: "oscillation integral is unbounded".into(),
            });
        }
        oscs.push(o);
    }
    if oscs.iter().all(|&o| o == 0.0) {
        return Ok(HolderCertificate::Fit {
            d: 0.0,
            delta: 1.0,
            eps_range: (*eps_grid.last().unwrap(), eps_grid[0]),
            max_log_residual: 0.0,
        });
    }
    if oscs.iter().any(|&o| o <= 0.0) {
        return Ok(HolderCertificate::Failed {
            reason: "oscillation integral vanishes on part of the grid".into(),
        });
    }
    // Least squares on (ln ε, ln osc).
    let n = eps_grid.len() as f64;
    let xs: Vec<f64> = eps_grid.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = oscs.iter().map(|o| o.ln()).collect();
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Ok(HolderCertificate::Failed {
            reason: "degenerate radii grid".into(),
        });
    }
    let delta = (n * sxy - sx * sy) / denom;
    let intercept = (sy - delta * sx) / n;
    if delta <= 0.0 {
        return Ok(HolderCertificate::Failed {
            reason: format!("fitted exponent δ = {delta:.4} is not positive (no decay)"),
        });
    }
    let d = intercept.exp();
    let max_log_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + delta * x)).abs())
        .fold(0.0f64, f64::max);
    Ok(HolderCertificate::Fit {
        d,
        delta,
        eps_range: (*eps_grid.last().unwrap(), eps_grid[0]),
        max_log_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{build_liouville, parse_rational, DigitBudget, GrowthRule};

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn half_step() -> PeriodicPotential {
        // 1 on [0, 1/2), 0 on [1/2, 1).
        PeriodicPotential::Step(StepPotential::new(vec![(rat(0, 1), 1.0), (rat(1, 2), 0.0)]).unwrap())
    }

    fn cosine() -> PeriodicPotential {
        PeriodicPotential::Smooth(
            TrigPoly::new(vec![TrigTerm {
                harmonic: 1,
                amplitude: 1.0,
                phase: 0.0,
            }])
            .unwrap(),
        )
    }

    #[test]
    fn step_eval_wraps_periodically() {
        let p = half_step();
        assert_eq!(p.eval_rational(&rat(5, 4)).unwrap(), 1.0);
        assert_eq!(p.eval_rational(&rat(1, 2)).unwrap(), 0.0); // right-continuous
        assert_eq!(p.eval_rational(&rat(-1, 4)).unwrap(), 0.0); // wraps to 3/4
        assert_eq!(p.eval_rational(&rat(0, 1)).unwrap(), 1.0);
    }

    #[test]
    fn singular_eval_quarter() {
        let p = PeriodicPotential::power_singular(0.5, 1.0).unwrap();
        assert!((p.eval_rational(&rat(1, 4)).unwrap() - 2.0).abs() < 1e-14);
        // Symmetric point measured from the other side.
        assert!((p.eval_rational(&rat(3, 4)).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_eval_signals_lattice_hit() {
        let p = PeriodicPotential::power_singular(0.5, 1.0).unwrap();
        assert!(matches!(
            p.eval_rational(&rat(3, 1)),
            Err(Error::SingularityHit { .. })
        ));
        assert!(matches!(p.eval_f64(2.0), Err(Error::SingularityHit { .. })));
    }

    #[test]
    fn singular_rejects_bad_parameters() {
        assert!(PeriodicPotential::power_singular(1.0, 1.0).is_err());
        assert!(PeriodicPotential::power_singular(0.0, 1.0).is_err());
        assert!(PeriodicPotential::power_singular(0.5, -1.0).is_err());
    }

    #[test]
    fn sum_eval_is_linear_combination() {
        let p = PeriodicPotential::sum(vec![(2.0, half_step()), (1.0, cosine())]);
        assert!((p.eval_rational(&rat(0, 1)).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn sums_flatten() {
        let inner = PeriodicPotential::sum(vec![(2.0, half_step())]);
        let outer = PeriodicPotential::sum(vec![(3.0, inner), (1.0, cosine())]);
        match &outer {
            PeriodicPotential::Sum(parts) => {
                assert_eq!(parts.len(), 2);
                assert!((parts[0].0 - 6.0).abs() < 1e-15);
                assert!(!matches!(parts[0].1, PeriodicPotential::Sum(_)));
            }
            _ => panic!("expected sum"),
        }
    }

    #[test]
    fn step_linearity_is_exact() {
        // Linearity of the class, exact for steps at rational points.
        let p = PeriodicPotential::sum(vec![(2.5, half_step()), (-3.0, half_step())]);
        for x in [rat(1, 3), rat(2, 3), rat(7, 5), rat(-1, 7)] {
            let direct = p.eval_rational(&x).unwrap();
            let parts = 2.5 * half_step().eval_rational(&x).unwrap()
                - 3.0 * half_step().eval_rational(&x).unwrap();
            assert_eq!(direct, parts);
        }
    }

    #[test]
    fn quasi_eval_exact_phase() {
        // V₁ = 0, V₂ half step, α = 1/2, θ = 0, x = 3 → V₂(3/2 mod 1) = V₂(1/2) = 0.
        let q = QuasiPotential::new(
            PeriodicPotential::zero(),
            half_step(),
            FrequencySpec::exact(rat(1, 2)).unwrap(),
            rat(0, 1),
        );
        assert_eq!(q.eval_rational(&rat(3, 1)).unwrap(), 0.0);

        // V₁ = cos(2πx), V₂ = 0 at x = 1/2 → -1.
        let q2 = QuasiPotential::new(
            cosine(),
            PeriodicPotential::zero(),
            FrequencySpec::exact(rat(1, 3)).unwrap(),
            rat(0, 1),
        );
        assert!((q2.eval_rational(&rat(1, 2)).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn quasi_eval_liouville_proxy() {
        // α from the default Liouville CF; x = q₃ = 25: phase = 25·α₄,
        // exact rational arithmetic all the way.
        let cf = build_liouville(1, &GrowthRule::Default, 4, DigitBudget::default()).unwrap();
        let alpha = FrequencySpec::from_cf(cf.clone());
        let q = QuasiPotential::new(PeriodicPotential::zero(), half_step(), alpha, rat(0, 1));
        let got = q.eval_rational(&rat(25, 1)).unwrap();
        // Oracle: exact rational phase mod 1 compared against 1/2.
        let phase = mod_one(&(rat(25, 1) * cf.alpha_m(4).unwrap()));
        let expect = if phase < rat(1, 2) { 1.0 } else { 0.0 };
        assert_eq!(got, expect);
    }

    #[test]
    fn approximant_is_q_m_periodic() {
        let cf = build_liouville(1, &GrowthRule::Default, 4, DigitBudget::default()).unwrap();
        let q = QuasiPotential::new(
            half_step(),
            half_step(),
            FrequencySpec::from_cf(cf),
            parse_rational("1/7").unwrap(),
        );
        let w = q.approximant(3).unwrap();
        assert_eq!(w.q_m, BigInt::from(25));
        // Deterministic pseudo-random rationals; periodicity must be exact.
        let mut num = 17i64;
        let mut den = 97i64;
        for _ in 0..10_000 {
            num = (num * 31 + 7) % 4999;
            den = (den * 17 + 3) % 293 + 2;
            let x = rat(num, den);
            let a = w.eval_rational(&x).unwrap();
            let b = w.eval_rational(&(&x + w.period())).unwrap();
            assert_eq!(a, b, "x={x}");
        }
    }

    #[test]
    fn scaled_breakpoint_enumeration() {
        // Half step sampled at α = 2/3, θ = 0 on [0, 3]: breaks where
        // (2/3)x mod 1 ∈ {0, 1/2} → x ∈ {0, 3/4, 3/2, 9/4, 3}.
        let pts = scaled_breakpoints(&half_step(), &rat(2, 3), &rat(0, 1), &rat(0, 1), &rat(3, 1));
        let xs: Vec<BigRational> = pts.iter().map(|(x, _)| x.clone()).collect();
        assert_eq!(
            xs,
            vec![rat(0, 1), rat(3, 4), rat(3, 2), rat(9, 4), rat(3, 1)]
        );
    }

    #[test]
    fn l1_norm_examples() {
        assert!((l1_unif_norm(&half_step()) - 0.5).abs() < 1e-15);
        let sing = PeriodicPotential::power_singular(0.5, 1.0).unwrap();
        assert!((l1_unif_norm(&sing) - 2.0 * 2.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(l1_unif_norm(&PeriodicPotential::zero()), 0.0);
    }

    #[test]
    fn l1_norm_of_sum_obeys_triangle() {
        let p = PeriodicPotential::sum(vec![(2.0, half_step()), (1.5, cosine())]);
        let triangle = 2.0 * l1_unif_norm(&half_step()) + 1.5 * l1_unif_norm(&cosine());
        assert!(l1_unif_norm(&p) <= triangle + 1e-12);
    }

    #[test]
    fn l1_shifted_singular_closed_form() {
        // γ = 1/2, c = 1, E = 2: t* = 1/4. Cross-check with quadrature on a
        // slightly clipped interval plus the closed-form tail.
        let direct = singular_l1_shifted(0.5, 1.0, 2.0);
        let clip = 1e-10;
        let tail = 2.0 * (clip as f64).sqrt() - 2.0 * clip; // ∫₀^clip (t^{-1/2} - 2)
        let quad = adaptive_simpson(&|t: f64| (t.powf(-0.5) - 2.0).abs(), clip, 0.5, 1e-10, 48).value;
        let reference = 2.0 * (quad + tail);
        assert!((direct - reference).abs() < 1e-4, "{direct} vs {reference}");
    }

    #[test]
    fn approximant_unif_norm_window_scan() {
        // V₁ = 0, V₂ = half step, α₁ = 1/2 (period 2): W = 1 on [0,1), 0 on [1,2).
        // The best unit window captures the full mass 1.
        let q = QuasiPotential::new(
            PeriodicPotential::zero(),
            half_step(),
            FrequencySpec::exact(rat(1, 2)).unwrap(),
            rat(0, 1),
        );
        let w = q.approximant(1).unwrap();
        assert_eq!(w.alpha_m, rat(1, 2));
        let norm = l1_unif_norm_approximant(&w);
        assert!((norm - 1.0).abs() < 1e-12, "{norm}");
    }

    #[test]
    fn osc_step_small_radius_law() {
        // Two jumps of height 1: ∫osc = 4ε below half the minimal gap.
        let got = osc_integral(&half_step(), 0.01).unwrap();
        assert!((got - 0.04).abs() < 1e-15, "{got}");
    }

    #[test]
    fn osc_step_overlapping_windows() {
        // Breakpoints {0, 1/10}, values {1, 0}, ε = 1/10: the membership
        // intervals (b-ε, b+ε) of the two jumps overlap on (0, 1/10); the
        // oscillation is 1 on their union (-1/10, 1/5) of measure 3/10.
        let p = PeriodicPotential::Step(
            StepPotential::new(vec![(rat(0, 1), 1.0), (rat(1, 10), 0.0)]).unwrap(),
        );
        let got = osc_integral(&p, 0.1).unwrap();
        assert!((got - 0.3).abs() < 1e-15, "{got}");
    }

    #[test]
    fn osc_constant_is_zero() {
        let c = PeriodicPotential::Step(StepPotential::constant(7.0));
        assert_eq!(osc_integral(&c, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn osc_smooth_lipschitz_bound() {
        let got = osc_integral(&cosine(), 0.01).unwrap();
        assert!(got > 0.0);
        // Lipschitz constant 2π: osc ≤ 2ε·2π pointwise.
        assert!(got <= 4.0 * std::f64::consts::PI * 0.01 + 1e-9, "{got}");
        // For cos the law is ∫osc ≈ 2ε·∫|f'| = 8ε at small radii.
        assert!((got - 0.08).abs() < 0.002, "{got}");
    }

    #[test]
    fn osc_singular_is_unbounded() {
        let sing = PeriodicPotential::power_singular(0.5, 1.0).unwrap();
        assert!(osc_integral(&sing, 0.01).unwrap().is_infinite());
    }

    #[test]
    fn osc_rejects_bad_radius() {
        assert!(matches!(osc_integral(&half_step(), 0.25), Err(Error::Domain(_))));
        assert!(matches!(osc_integral(&half_step(), 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn holder_fit_step() {
        let grid = [0.02, 0.01, 0.005, 0.0025, 0.00125];
        match holder_certificate(&half_step(), &grid).unwrap() {
            HolderCertificate::Fit { d, delta, .. } => {
                assert!((delta - 1.0).abs() < 1e-9, "δ = {delta}");
                assert!((d - 4.0).abs() < 1e-6, "D = {d}");
            }
            other => panic!("expected fit, got {other:?}"),
        }
    }

    #[test]
    fn holder_fit_cosine() {
        let grid = [0.02, 0.01, 0.005, 0.0025];
        match holder_certificate(&cosine(), &grid).unwrap() {
            HolderCertificate::Fit { delta, .. } => {
                assert!((delta - 1.0).abs() < 0.05, "δ = {delta}");
            }
            other => panic!("expected fit, got {other:?}"),
        }
    }

    #[test]
    fn holder_fails_for_singular() {
        let sing = PeriodicPotential::power_singular(0.5, 1.0).unwrap();
        let grid = [0.02, 0.01, 0.005];
        assert!(matches!(
            holder_certificate(&sing, &grid).unwrap(),
            HolderCertificate::Failed { .. }
        ));
    }

    #[test]
    fn holder_constant_fits_zero_d() {
        let c = PeriodicPotential::Step(StepPotential::constant(3.0));
        let grid = [0.02, 0.01, 0.005];
        match holder_certificate(&c, &grid).unwrap() {
            HolderCertificate::Fit { d, delta, .. } => {
                assert_eq!(d, 0.0);
                assert!(delta > 0.0);
            }
            other => panic!("expected degenerate fit, got {other:?}"),
        }
    }

    #[test]
    fn theta_reduced_mod_one() {
        let q = QuasiPotential::new(
            PeriodicPotential::zero(),
            half_step(),
            FrequencySpec::exact(rat(1, 3)).unwrap(),
            rat(7, 3), // ≡ 1/3
        );
        assert_eq!(q.theta, rat(1, 3));
    }

    #[test]
    fn step_rejects_disorder() {
        assert!(StepPotential::new(vec![(rat(1, 2), 0.0), (rat(0, 1), 1.0)]).is_err());
        assert!(StepPotential::new(vec![(rat(1, 2), 0.0), (rat(1, 2), 1.0)]).is_err());
        assert!(StepPotential::new(vec![(rat(3, 2), 0.0)]).is_err());
    }

    #[test]
    fn flatten_steps_merges_values() {
        let a = PeriodicPotential::Step(
            StepPotential::new(vec![(rat(0, 1), 1.0), (rat(1, 2), 0.0)]).unwrap(),
        );
        let b = PeriodicPotential::Step(
            StepPotential::new(vec![(rat(0, 1), 0.0), (rat(1, 4), 2.0)]).unwrap(),
        );
        let sum = PeriodicPotential::sum(vec![(1.0, a), (3.0, b)]);
        let flat = sum.flatten_steps().unwrap();
        assert_eq!(flat.breakpoints().len(), 3);
        // On [0,1/4): 1 + 3·0 = 1; [1/4,1/2): 1 + 6 = 7; [1/2,1): 0 + 6 = 6.
        assert_eq!(flat.value_at_phase(&rat(1, 8)), 1.0);
        assert_eq!(flat.value_at_phase(&rat(3, 8)), 7.0);
        assert_eq!(flat.value_at_phase(&rat(3, 4)), 6.0);
    }
}
