//! Exact rational arithmetic for the Lᵖ bootstrap chain and the interpolated
//! exponent triple `(r_p, s_p, t_p)`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `a/b`, an integer, or a finite decimal such as `2.4` exactly.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || Error::InvalidArgument(format!("not a rational number: '{text}'"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (int, frac) = t.split_once('.').unwrap_or((t, ""));
    if frac.chars().any(|c| !c.is_ascii_digit()) || int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let digits = if digits == "-" || digits == "+" { format!("{digits}0") } else { digits };
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let d = BigInt::from(10).pow(frac.len() as u32);
    Ok(BigRational::new(n, d))
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `q₀ = 2N/(N+2)`, `q_{n+1} = min{q, N·qₙ/(N − 2qₙ)}` until `qₙ = q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentChain {
    pub n: u32,
    pub q: BigRational,
    pub chain: Vec<BigRational>,
    /// `θ = (Nq + 2q − 2N)/(q(N − 2))`
    pub theta: BigRational,
}

impl ExponentChain {
    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    /// The successor of `qₙ`; a nonpositive denominator stands for `+∞`.
    pub fn successor(&self, qn: &BigRational) -> BigRational {
        next_exponent(self.n, &self.q, qn)
    }

    /// True when every consecutive pair obeys the induction rule exactly and
    /// the chain starts at `2N/(N+2)` and ends at `q`.
    pub fn satisfies_induction(&self) -> bool {
        let n = i64::from(self.n);
        self.chain.first() == Some(&rat(2 * n, n + 2))
            && self.chain.last() == Some(&self.q)
            && self.chain.windows(2).all(|w| w[1] == self.successor(&w[0]) && w[0] < w[1])
    }

    pub fn chain_f64(&self) -> Vec<f64> {
        self.chain.iter().map(rational_to_f64).collect()
    }

    pub fn exponents_at(&self, p: &BigRational) -> Result<InterpolatedExponents> {
        interpolation_exponents(self.n, &self.q, p)
    }
}

impl fmt::Display for ExponentChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.chain.iter().map(|x| x.to_string()).collect();
        f.write_str(&parts.join(", "))
    }
}

fn next_exponent(n: u32, q: &BigRational, qn: &BigRational) -> BigRational {
    let nr = BigRational::from_integer(BigInt::from(n));
    let den = &nr - qn * BigRational::from_integer(BigInt::from(2));
    if !den.is_positive() {
        return q.clone();
    }
    let cand = &nr * qn / den;
    if &cand < q {
        cand
    } else {
        q.clone()
    }
}

fn check_range(n: u32, q: &BigRational) -> Result<()> {
    if n < 3 {
        return Err(Error::ExponentRange(format!("dimension must be at least 3, got {n}")));
    }
    let ni = i64::from(n);
    let lo = rat(2 * ni, ni + 2);
    let hi = rat(ni, 2);
    if q < &lo || q > &hi {
        return Err(Error::ExponentRange(format!("q = {q} outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn theta(n: u32, q: &BigRational) -> BigRational {
    let nr = BigRational::from_integer(BigInt::from(n));
    let two = BigRational::from_integer(BigInt::from(2));
    (&nr * q + &two * q - &two * &nr) / (q * (&nr - &two))
}

pub fn exponent_bootstrap(n: u32, q: &BigRational) -> Result<ExponentChain> {
    check_range(n, q)?;
    let ni = i64::from(n);
    let mut chain = vec![rat(2 * ni, ni + 2)];
    // qₙ ≥ (N/(N−2))ⁿ q₀ while below q, so the loop ends after O(log) steps
    while chain.last() != Some(q) {
        let next = next_exponent(n, q, chain.last().expect("nonempty"));
        chain.push(next);
    }
    Ok(ExponentChain {
        n,
        q: q.clone(),
        theta: theta(n, q),
        chain,
    })
}

/// `θ` and the triple with `1/r = (1−θ)/r₀ + θ/r₁` (likewise `s`, `t`),
/// `(r₀, s₀, t₀) = (2N/(N+2), 2, 2(N−1)/N)`, `(r₁, s₁, t₁) = (p/2, p, p−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolatedExponents {
    pub theta: BigRational,
    pub r: BigRational,
    pub s: BigRational,
    pub t: BigRational,
}

impl InterpolatedExponents {
    pub fn to_f64(&self) -> (f64, f64, f64, f64) {
        (
            rational_to_f64(&self.theta),
            rational_to_f64(&self.r),
            rational_to_f64(&self.s),
            rational_to_f64(&self.t),
        )
    }
}

pub fn interpolation_exponents(n: u32, q: &BigRational, p: &BigRational) -> Result<InterpolatedExponents> {
    if n < 3 {
        return Err(Error::ExponentRange(format!("dimension must be at least 3, got {n}")));
    }
    let nr = BigRational::from_integer(BigInt::from(n));
    if p <= &nr {
        return Err(Error::ExponentRange(format!("p = {p} must exceed N = {n}")));
    }
    let th = theta(n, q);
    if th.is_negative() || th > BigRational::one() {
        return Err(Error::ExponentRange(format!("theta = {th} outside [0, 1]")));
    }
    let ni = i64::from(n);
    let one = BigRational::one();
    let combine = |e0: BigRational, e1: BigRational| {
        let inv = (&one - &th) / e0 + &th / e1;
        one.clone() / inv
    };
    let two = BigRational::from_integer(BigInt::from(2));
    Ok(InterpolatedExponents {
        r: combine(rat(2 * ni, ni + 2), p / &two),
        s: combine(two.clone(), p.clone()),
        t: combine(rat(2 * (ni - 1), ni), p - &one),
        theta: th,
    })
}
