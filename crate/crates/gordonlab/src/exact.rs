//! Exact rational arithmetic, continued fractions, convergents, and
//! Liouville-number construction/certification.
//!
//! Frequencies are never held as floats. An irrational α enters as a list of
//! partial quotients and is represented downstream by a high-order exact
//! convergent proxy α_M = p_M/q_M, so every phase computation xα + θ stays in
//! exact rational arithmetic.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::Error;
use crate::Result;

/// Arbitrary-precision rational in canonical form (denominator > 0,
/// gcd(|numerator|, denominator) = 1). `num_rational::Ratio` maintains the
/// canonical form on construction and after every arithmetic operation.
pub type BigRational = num_rational::BigRational;

/// Parse "p/q" or "p" into a canonical rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad integer {num:?} in rational {s:?}")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad integer {den:?} in rational {s:?}")))?;
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in rational {s:?}")));
    }
    Ok(BigRational::new(n, d))
}

/// Exact fractional part in [0, 1): x - floor(x).
pub fn mod_one(x: &BigRational) -> BigRational {
    x - x.floor()
}

/// Rational-to-f64 conversion that stays finite for huge numerators and
/// denominators by shifting both into f64 range first. `Ratio::to_f64`
/// divides the raw parts and returns inf/0 once either exceeds ~1e308.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let n = x.numer();
    let d = x.denom();
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    // Keep roughly 100 significant bits on each side before dividing.
    let shift_n = (nb - 100).max(0);
    let shift_d = (db - 100).max(0);
    let nf = (n >> shift_n).to_f64().unwrap_or(f64::NAN);
    let df = (d >> shift_d).to_f64().unwrap_or(f64::NAN);
    let mut v = nf / df;
    let net = shift_n - shift_d;
    if net != 0 {
        v *= 2f64.powi(net.clamp(-2000, 2000) as i32);
    }
    v
}

/// log10 of a positive rational, computed from bit lengths; accurate to
/// ~1e-12 even when the parts have millions of digits.
pub fn rational_log10(x: &BigRational) -> f64 {
    assert!(x.is_positive(), "rational_log10 needs a positive argument");
    big_log10(x.numer()) - big_log10(x.denom())
}

fn big_log10(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 52 {
        return n.to_f64().unwrap().abs().log10();
    }
    let shift = bits - 52;
    let head = (n.magnitude() >> shift).to_f64().unwrap();
    head.log10() + (shift as f64) * std::f64::consts::LOG10_2
}

/// JSON form {"rational": ["p", "q"]} with decimal strings, so arbitrary
/// precision survives serialization.
pub fn rational_to_json(x: &BigRational) -> Value {
    json!({ "rational": [x.numer().to_string(), x.denom().to_string()] })
}

/// Inverse of [`rational_to_json`].
pub fn rational_from_json(v: &Value) -> Result<BigRational> {
    let arr = v
        .get("rational")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("expected {\"rational\": [p, q]}".into()))?;
    if arr.len() != 2 {
        return Err(Error::Parse("rational must have exactly [p, q]".into()));
    }
    let p = arr[0]
        .as_str()
        .ok_or_else(|| Error::Parse("rational parts must be decimal strings".into()))?;
    let q = arr[1]
        .as_str()
        .ok_or_else(|| Error::Parse("rational parts must be decimal strings".into()))?;
    parse_rational(&format!("{p}/{q}"))
}

/// Decimal-digit budget guarding the explosive growth of Liouville
/// denominators. Exceeding it is a clean resource error, not a crash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DigitBudget(pub u64);

impl Default for DigitBudget {
    fn default() -> Self {
        // 10^6 decimal digits.
        DigitBudget(1_000_000)
    }
}

impl DigitBudget {
    /// Read the budget from the GORDONLAB_DIGIT_BUDGET environment variable,
    /// falling back to the default.
    pub fn from_env() -> Self {
        match std::env::var("GORDONLAB_DIGIT_BUDGET") {
            Ok(s) => s.parse().map(DigitBudget).unwrap_or_default(),
            Err(_) => Self::default(),
        }
    }

    fn check_digits(&self, m: usize, digits: u64) -> Result<()> {
        if digits > self.0 {
            Err(Error::Resource {
                m,
                needed: digits,
                budget: self.0,
                unit: "decimal digits",
            })
        } else {
            Ok(())
        }
    }
}

/// A finite simple continued fraction [a₁, a₂, …, a_M] of a number in (0, 1),
/// together with its convergents p_m/q_m.
///
/// Storage convention: `convergents[m] = (p_m, q_m)` for m = 0..=M with the
/// seeds p₀ = 0, p₁ = 1, q₀ = 1, q₁ = a₁ and the recurrences
/// p_m = a_m p_{m-1} + p_{m-2}, q_m = a_m q_{m-1} + q_{m-2}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuedFraction {
    partial_quotients: Vec<BigInt>,
    convergents: Vec<(BigInt, BigInt)>,
}

impl ContinuedFraction {
    /// Build from partial quotients; all must be ≥ 1.
    pub fn new<I, T>(quotients: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<BigInt>,
    {
        let a: Vec<BigInt> = quotients.into_iter().map(Into::into).collect();
        if a.is_empty() {
            return Err(Error::Domain("continued fraction needs at least one partial quotient".into()));
        }
        if a.iter().any(|q| q < &BigInt::one()) {
            return Err(Error::Domain("partial quotients must be positive integers".into()));
        }
        let mut cf = ContinuedFraction {
            partial_quotients: Vec::new(),
            convergents: vec![(BigInt::zero(), BigInt::one())],
        };
        for q in a {
            cf.push(q);
        }
        Ok(cf)
    }

    fn push(&mut self, a: BigInt) {
        debug_assert!(a >= BigInt::one());
        let m = self.partial_quotients.len(); // index of the new quotient is m+1
        let (p_prev, q_prev) = if m == 0 {
            (BigInt::zero(), BigInt::one())
        } else {
            self.convergents[m].clone()
        };
        let (p_prev2, q_prev2) = if m == 0 {
            // Seeds p₁ = 1, q₁ = a₁ correspond to virtual (p₋₁, q₋₁) = (1, 0).
            (BigInt::one(), BigInt::zero())
        } else {
            self.convergents[m - 1].clone()
        };
        let p = &a * &p_prev + p_prev2;
        let q = &a * &q_prev + q_prev2;
        self.partial_quotients.push(a);
        self.convergents.push((p, q));
    }

    /// Number of stored partial quotients M.
    pub fn len(&self) -> usize {
        self.partial_quotients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partial_quotients.is_empty()
    }

    /// Partial quotients a₁..a_M.
    pub fn partial_quotients(&self) -> &[BigInt] {
        &self.partial_quotients
    }

    /// Convergent pair (p_m, q_m); m = 0 gives the seed (0, 1).
    pub fn convergent(&self, m: usize) -> Result<(&BigInt, &BigInt)> {
        self.convergents
            .get(m)
            .map(|(p, q)| (p, q))
            .ok_or_else(|| Error::Range(format!("convergent order {m} exceeds available {}", self.len())))
    }

    /// α_m = p_m/q_m as an exact rational.
    pub fn alpha_m(&self, m: usize) -> Result<BigRational> {
        let (p, q) = self.convergent(m)?;
        Ok(BigRational::new(p.clone(), q.clone()))
    }

    /// Denominator q_m.
    pub fn q_m(&self, m: usize) -> Result<&BigInt> {
        Ok(self.convergent(m)?.1)
    }

    /// The convergent list [(p_0, q_0), …, (p_{m_max}, q_{m_max})].
    pub fn convergents(&self, m_max: usize) -> Result<&[(BigInt, BigInt)]> {
        if m_max > self.len() {
            return Err(Error::Range(format!(
                "m_max={m_max} exceeds available partial quotients ({})",
                self.len()
            )));
        }
        Ok(&self.convergents[..=m_max])
    }

    /// Exact value of the full fraction, [a₁, …, a_M] = p_M/q_M.
    pub fn value(&self) -> BigRational {
        let (p, q) = &self.convergents[self.len()];
        BigRational::new(p.clone(), q.clone())
    }

    /// Exact width of the enclosure |α - α_m| < 1/(q_m q_{m+1}) valid for
    /// every real α whose expansion extends this one past order m.
    pub fn enclosure_width(&self, m: usize) -> Result<BigRational> {
        if m + 1 > self.len() {
            return Err(Error::Range(format!(
                "enclosure at m={m} needs convergent {} (have {})",
                m + 1,
                self.len()
            )));
        }
        let q_m = &self.convergents[m].1;
        let q_next = &self.convergents[m + 1].1;
        Ok(BigRational::new(BigInt::one(), q_m * q_next))
    }

    /// Exact check of the determinant identity
    /// p_m q_{m-1} - p_{m-1} q_m = (-1)^{m-1} for all stored m ≥ 1.
    pub fn determinant_identity_holds(&self) -> bool {
        for m in 1..=self.len() {
            let (p_m, q_m) = &self.convergents[m];
            let (p_prev, q_prev) = &self.convergents[m - 1];
            let det = p_m * q_prev - p_prev * q_m;
            let expect = if (m - 1) % 2 == 0 { BigInt::one() } else { -BigInt::one() };
            if det != expect {
                return false;
            }
        }
        true
    }

    /// JSON form {"cf": ["a1", "a2", …]} with decimal strings.
    pub fn to_json(&self) -> Value {
        json!({ "cf": self.partial_quotients.iter().map(|a| a.to_string()).collect::<Vec<_>>() })
    }

    /// Inverse of [`to_json`].
    pub fn from_json(v: &Value) -> Result<Self> {
        let arr = v
            .get("cf")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("expected {\"cf\": [a1, a2, ...]}".into()))?;
        let mut quotients = Vec::with_capacity(arr.len());
        for item in arr {
            let s = match item {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                _ => return Err(Error::Parse("cf entries must be integers or decimal strings".into())),
            };
            let a: BigInt = s
                .parse()
                .map_err(|_| Error::Parse(format!("bad partial quotient {s:?}")))?;
            quotients.push(a);
        }
        ContinuedFraction::new(quotients)
    }
}

impl fmt::Display for ContinuedFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, a) in self.partial_quotients.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "]")
    }
}

/// Continued fraction expansion of a rational in (0, 1) by the Euclidean
/// algorithm. The terminating expansion is canonical: the last partial
/// quotient is ≥ 2 except for single-term expansions 1/a₁ (where a₁ ≥ 2
/// follows from x < 1 anyway), so reconstruction is the exact inverse.
pub fn cf_expand(x: &BigRational) -> Result<ContinuedFraction> {
    if !(x > &BigRational::zero() && x < &BigRational::one()) {
        return Err(Error::Domain(format!("cf_expand needs 0 < x < 1, got {x}")));
    }
    // x = p/q in lowest terms; run Euclid on (q, p).
    let mut a = x.denom().clone();
    let mut b = x.numer().clone();
    let mut quotients = Vec::new();
    while !b.is_zero() {
        let (quot, rem) = a.div_rem(&b);
        quotients.push(quot);
        a = b;
        b = rem;
    }
    ContinuedFraction::new(quotients)
}

/// Growth rule for [`build_liouville`]: maps (m, q_m) to a_{m+1}.
#[derive(Debug, Clone)]
pub enum GrowthRule {
    /// a_{m+1} = max(2, m^{q_m}); provably yields |α - α_m| ≤ m^{-q_m}
    /// (Liouville with B = 1) via the standard convergent enclosure.
    Default,
    /// a_{m+1} = c for every m. c = 1 gives the golden-mean-type frequency,
    /// which is not Liouville.
    Constant(u64),
}

impl GrowthRule {
    /// Decimal digits a_{m+1} would need, without materializing it.
    fn digit_estimate(&self, m: usize, q_m: &BigInt) -> u64 {
        match self {
            GrowthRule::Constant(c) => (*c.max(&1) as f64).log10() as u64 + 1,
            GrowthRule::Default => {
                if m <= 1 {
                    return 1;
                }
                let qf = q_m.to_f64().unwrap_or(f64::INFINITY);
                let digits = qf * (m as f64).log10();
                if digits > u64::MAX as f64 {
                    u64::MAX
                } else {
                    digits as u64 + 1
                }
            }
        }
    }

    fn next_quotient(&self, m: usize, q_m: &BigInt) -> BigInt {
        match self {
            GrowthRule::Constant(c) => BigInt::from((*c).max(1)),
            GrowthRule::Default => {
                // max(2, m^{q_m}); the digit budget has already vetted the size,
                // so the exponent fits in u64.
                if m <= 1 {
                    return BigInt::from(2u32);
                }
                let exp = q_m.to_u64().expect("budget check bounds the exponent");
                let pow = num_traits::pow::Pow::pow(BigInt::from(m), exp);
                if pow < BigInt::from(2u32) {
                    BigInt::from(2u32)
                } else {
                    pow
                }
            }
        }
    }
}

/// Construct a continued fraction with rapidly growing partial quotients,
/// a₁ given and a_{m+1} = rule(m, q_m), stopping after m_max quotients.
///
/// Under the default rule the result satisfies
/// |α - α_m| < 1/(q_m q_{m+1}) ≤ m^{-q_m} for 1 ≤ m < m_max, certifiable
/// exactly via [`liouville_certify`] with B = 1.
pub fn build_liouville(a1: u64, rule: &GrowthRule, m_max: usize, budget: DigitBudget) -> Result<ContinuedFraction> {
    if a1 < 1 || m_max < 1 {
        return Err(Error::Domain("build_liouville needs a1 ≥ 1 and m_max ≥ 1".into()));
    }
    let mut cf = ContinuedFraction::new([a1])?;
    for m in 1..m_max {
        let q_m = cf.convergents[m].1.clone();
        let digits = rule.digit_estimate(m, &q_m);
        budget.check_digits(m + 1, digits)?;
        let a_next = rule.next_quotient(m, &q_m);
        // q_{m+1} ≈ a_{m+1} q_m also has to fit.
        let q_digits = digits + (q_m.bits() as u64) / 3 + 1;
        budget.check_digits(m + 1, q_digits)?;
        cf.push(a_next);
    }
    Ok(cf)
}

/// One row of a Liouville certificate.
#[derive(Debug, Clone)]
pub struct LiouvilleCert {
    pub m: usize,
    /// Exact enclosure width 1/(q_m q_{m+1}) bounding |α - α_m|.
    pub enclosure: BigRational,
    /// Whether 1/(q_m q_{m+1}) ≤ B·m^{-q_m} holds (exact integer
    /// comparison). This is sufficient for the Liouville inequality at m.
    pub certified: bool,
    /// log10 of the target B·m^{-q_m}, for display.
    pub target_log10: f64,
}

/// Certify |α - α_m| ≤ B·m^{-q_m} for m = 1..=m_max via the sufficient
/// exact comparison 1/(q_m q_{m+1}) ≤ B·m^{-q_m}. Needs m_max+1 convergents.
pub fn liouville_certify(cf: &ContinuedFraction, b: &BigRational, m_max: usize) -> Result<Vec<LiouvilleCert>> {
    if m_max + 1 > cf.len() {
        return Err(Error::Range(format!(
            "certificate to m={m_max} needs {} convergents, have {}",
            m_max + 1,
            cf.len()
        )));
    }
    if !b.is_positive() {
        return Err(Error::Domain("Liouville constant B must be positive".into()));
    }
    let mut rows = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let enclosure = cf.enclosure_width(m)?;
        let q_m = &cf.convergents[m].1;
        // Condition: 1/(q_m q_{m+1}) ≤ B/m^{q_m}
        //        ⟺  m^{q_m} · b_den ≤ b_num · q_m · q_{m+1}.
        let target_log10 =
            rational_log10(b) - (m as f64).log10() * q_m.to_f64().unwrap_or(f64::INFINITY);
        let certified = if m == 1 {
            // 1^{q_1} = 1: condition is 1/(q₁q₂) ≤ B.
            &enclosure <= b
        } else {
            let qf = q_m.to_f64().unwrap_or(f64::INFINITY);
            let lhs_bits = qf * (m as f64).log2() + b.denom().bits() as f64;
            let rhs_bits = (b.numer().bits() + q_m.bits() + cf.convergents[m + 1].1.bits()) as f64;
            if lhs_bits > rhs_bits + 64.0 {
                // m^{q_m}·b_den outweighs the right side by ≥ 2^64: certainly false,
                // and materializing m^{q_m} might burst the digit budget.
                false
            } else if rhs_bits > lhs_bits + 64.0 {
                true
            } else {
                let exp = q_m.to_u64().expect("bit filter keeps exponent materializable");
                let lhs = num_traits::pow::Pow::pow(BigInt::from(m), exp) * b.denom();
                let rhs = b.numer() * q_m * &cf.convergents[m + 1].1;
                lhs <= rhs
            }
        };
        rows.push(LiouvilleCert {
            m,
            enclosure,
            certified,
            target_log10,
        });
    }
    Ok(rows)
}

/// Frequency specification: either an exact rational, or a continued
/// fraction with a designated proxy order M. A CF-specified frequency is
/// represented exactly by α_M for all downstream arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub enum FrequencySpec {
    Exact(BigRational),
    Convergent {
        cf: ContinuedFraction,
        proxy_order: usize,
    },
}

impl FrequencySpec {
    /// CF-specified frequency with proxy order M = full expansion length.
    pub fn from_cf(cf: ContinuedFraction) -> Self {
        let m = cf.len();
        FrequencySpec::Convergent { cf, proxy_order: m }
    }

    pub fn exact(r: BigRational) -> Result<Self> {
        if r < BigRational::zero() || r >= BigRational::one() {
            return Err(Error::Domain(format!("frequency must lie in [0,1), got {r}")));
        }
        Ok(FrequencySpec::Exact(r))
    }

    /// The exact rational representative used by all downstream arithmetic.
    pub fn resolve(&self) -> BigRational {
        match self {
            FrequencySpec::Exact(r) => r.clone(),
            FrequencySpec::Convergent { cf, proxy_order } => cf
                .alpha_m(*proxy_order)
                .expect("proxy order validated at construction"),
        }
    }

    /// The continued fraction backing this frequency (expanding exact
    /// rationals on the fly).
    pub fn continued_fraction(&self) -> Result<ContinuedFraction> {
        match self {
            FrequencySpec::Exact(r) => cf_expand(r),
            FrequencySpec::Convergent { cf, .. } => Ok(cf.clone()),
        }
    }

    /// Convergent α_m = p_m/q_m of the underlying expansion.
    pub fn alpha_m(&self, m: usize) -> Result<BigRational> {
        self.continued_fraction()?.alpha_m(m)
    }

    /// Highest approximation order this spec can serve.
    pub fn max_order(&self) -> Result<usize> {
        match self {
            FrequencySpec::Exact(r) => Ok(cf_expand(r)?.len()),
            FrequencySpec::Convergent { proxy_order, .. } => Ok(*proxy_order),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            FrequencySpec::Exact(r) => rational_to_json(r),
            FrequencySpec::Convergent { cf, proxy_order } => {
                let mut v = cf.to_json();
                v["proxy_order"] = json!(proxy_order);
                v
            }
        }
    }
}

/// Exact rational from an f64 (every finite f64 is a dyadic rational).
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::Domain(format!("non-finite float {x}")))
}

/// Reconstruct the nested fraction 1/(a₁ + 1/(a₂ + …)) exactly; the
/// round-trip inverse of [`cf_expand`].
pub fn cf_reconstruct(cf: &ContinuedFraction) -> BigRational {
    let mut acc = BigRational::zero();
    for a in cf.partial_quotients().iter().rev() {
        let a_rat = BigRational::from(a.clone());
        acc = (a_rat + acc).recip();
    }
    acc
}
