//! Independent reference computations for cross-checking the production
//! paths. Nothing here shares code with the exact integrators or the
//! oscillation machinery: the Riemann sampler walks phases point by point,
//! and the oscillation scan brute-forces the sup over a grid. Used by unit
//! tests and the acceptance suite.

use num_traits::{One, Signed, ToPrimitive};

use crate::exact::{mod_one, rational_to_f64, BigRational};
use crate::potential::{PeriodicPotential, StepPotential};

/// One exact phase stream on the integer lattice: the midpoint phases
/// x_i·α + θ all lie on the grid ℤ/D for a common denominator D, so the walk
/// is integer addition mod D with breakpoint thresholds scaled onto the same
/// grid. Right-continuity convention: value j on [B_j, B_{j+1}) wrapping.
struct LatticeWalker {
    modulus: BigInt,
    position: BigInt,
    step: BigInt,
    /// Sorted thresholds b_j·D with their piece values.
    thresholds: Vec<BigInt>,
    values: Vec<f64>,
}

use num_bigint::BigInt;
use num_integer::Integer as _;

impl LatticeWalker {
    fn new(v2: &StepPotential, freq: &BigRational, theta: &BigRational, x0: &BigRational, h: &BigRational) -> Self {
        let phase0 = mod_one(&(x0 * freq + theta));
        let step = mod_one(&(h * freq));
        let mut modulus = phase0.denom().lcm(step.denom());
        for b in v2.breakpoints() {
            modulus = modulus.lcm(b.denom());
        }
        let scale = |r: &BigRational| -> BigInt { (r * BigRational::from(modulus.clone())).to_integer() };
        let thresholds: Vec<BigInt> = v2.breakpoints().iter().map(&scale).collect();
        LatticeWalker {
            position: scale(&phase0),
            step: scale(&step),
            modulus,
            thresholds,
            values: v2.values().to_vec(),
        }
    }

    fn value(&self) -> f64 {
        let idx = self.thresholds.partition_point(|t| t <= &self.position);
        if idx == 0 {
            *self.values.last().unwrap()
        } else {
            self.values[idx - 1]
        }
    }

    fn advance(&mut self) {
        self.position += &self.step;
        if self.position >= self.modulus {
            self.position -= &self.modulus;
        }
    }
}

/// Midpoint Riemann sum of |V₂(xα+θ) - V₂(xα_m+θ)| over [a, b] with n
/// sample points and exact integer-lattice phase arithmetic. Returns the sum
/// and a provable error bound for piecewise-constant integrands: each sample
/// cell without a discontinuity contributes exactly, and a cell containing
/// discontinuities errs by at most h times the jump mass inside, so
/// |∫ - sum| ≤ h · (total jump mass) ≤ h · (#crossings of both phase maps) ·
/// max|jump|.
pub fn riemann_l1_step(
    v2: &StepPotential,
    alpha: &BigRational,
    alpha_m: &BigRational,
    theta: &BigRational,
    a: &BigRational,
    b: &BigRational,
    n: usize,
) -> (f64, f64) {
    assert!(n > 0 && b > a);
    let h = (b - a) / BigRational::from(BigInt::from(n as i64));
    let h_f = rational_to_f64(&h);
    let two = BigRational::from(BigInt::from(2));
    let x0 = a + &h / &two;

    let mut walk_f = LatticeWalker::new(v2, alpha, theta, &x0, &h);
    let mut walk_g = LatticeWalker::new(v2, alpha_m, theta, &x0, &h);
    let mut acc = 0.0f64;
    for _ in 0..n {
        acc += (walk_f.value() - walk_g.value()).abs();
        walk_f.advance();
        walk_g.advance();
    }
    let value = acc * h_f;

    // Crossing count: for each cell breakpoint c of v2, the phase map
    // x·α + θ crosses c + k for k in [aα+θ-c, bα+θ-c].
    let mut crossings: i64 = 0;
    for alpha_i in [alpha, alpha_m] {
        for c in v2.breakpoints() {
            let lo = (a * alpha_i + theta - c).ceil();
            let hi = (b * alpha_i + theta - c).floor();
            let k = (hi - lo).to_integer().to_i64().unwrap_or(0) + 1;
            if k > 0 {
                crossings += k;
            }
        }
    }
    let max_jump = v2
        .jumps()
        .iter()
        .fold(0.0f64, |m, j| m.max(j.abs()));
    let error_bound = h_f * crossings as f64 * max_jump;
    (value, error_bound)
}

/// Brute-force grid estimate of ∫₀¹ osc_{p,ε}: sup minus inf over `nwin`
/// window samples, averaged over `nx` positions. A sampled sup never exceeds
/// the true one, so this approaches the integral from below as the grids
/// refine.
pub fn osc_integral_grid(p: &PeriodicPotential, eps: f64, nx: usize, nwin: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..nx {
        let x = (i as f64 + 0.5) / nx as f64;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..=nwin {
            let y = x - eps + 2.0 * eps * j as f64 / nwin as f64;
            // Interior sampling keeps clear of exact singular lattice points.
            if let Ok(v) = p.eval_f64(y) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if hi >= lo {
            total += hi - lo;
        }
    }
    total / nx as f64
}

/// Plain f64 quadrature of |V₂(xα+θ) - V₂(xα_m+θ)| by midpoint sampling —
/// the low-tech cross-check for the closed-form singular path at orders
/// where f64 phases still resolve α - α_m. Singular samples are skipped,
/// which makes this a slight underestimate near lattice points.
pub fn riemann_l1_f64(
    v2: &PeriodicPotential,
    alpha: f64,
    alpha_m: f64,
    theta: f64,
    a: f64,
    b: f64,
    n: usize,
) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let x = a + (i as f64 + 0.5) * h;
        let f = v2.eval_f64(x * alpha + theta);
        let g = v2.eval_f64(x * alpha_m + theta);
        if let (Ok(f), Ok(g)) = (f, g) {
            acc += (f - g).abs();
        }
    }
    acc * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn riemann_identical_frequencies_vanishes() {
        let v2 = StepPotential::new(vec![(rat(0, 1), 1.0), (rat(1, 2), 0.0)]).unwrap();
        let (v, _) = riemann_l1_step(&v2, &rat(2, 3), &rat(2, 3), &rat(0, 1), &rat(-1, 1), &rat(2, 1), 1000);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn riemann_hand_checked_case() {
        // α = 1, α_m = 1/2, θ = 0 on [0, 2]: f = 1 on [0,1/2)∪[1,3/2),
        // g = 1 on [0,1); |f-g| = 1 on [1/2,1)∪[1,3/2) → ∫ = 1.
        let v2 = StepPotential::new(vec![(rat(0, 1), 1.0), (rat(1, 2), 0.0)]).unwrap();
        let (v, err) = riemann_l1_step(
            &v2,
            &rat(1, 1),
            &rat(1, 2),
            &rat(0, 1),
            &rat(0, 1),
            &rat(2, 1),
            100_000,
        );
        assert!((v - 1.0).abs() <= err + 1e-12, "v = {v}, err = {err}");
        assert!(err < 1e-3);
    }

    #[test]
    fn osc_grid_matches_step_law() {
        let p = PeriodicPotential::Step(
            StepPotential::new(vec![(rat(0, 1), 1.0), (rat(1, 2), 0.0)]).unwrap(),
        );
        let got = osc_integral_grid(&p, 0.01, 5000, 128);
        assert!((got - 0.04).abs() < 2e-3, "{got}");
    }
}
