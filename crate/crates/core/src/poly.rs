//! Exact orthogonal-polynomial families.
//!
//! Both families are generated by a monic three-term recurrence
//!
//! ```text
//! p_0 = 1,  p_1 = x - a_1,  p_{k+1} = (x - a_{k+1}) p_k - b_k^2 p_{k-1}
//! ```
//!
//! with coefficients
//!
//! | family                          | `a_k`            | `b_k^2`              |
//! |---------------------------------|------------------|----------------------|
//! | associated Hermite              | `0`              | `k + c`              |
//! | associated Laguerre (Model I)   | `α + 2c + 2k - 1`| `(α + c + k)(c + k)` |
//!
//! The companions `q_n` run the same recurrence from `q_0 = 0, q_1 = 1`.
//! All coefficients are exact rationals, so the differential identities in
//! [`check_identity_gaussian`] and [`check_identity_laguerre`] are decided
//! without tolerance.

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::params::Ensemble;

pub type Rational = BigRational;

/// Largest degree the family constructors will build unless overridden.
pub const DEFAULT_DEGREE_CAP: usize = 64;

/// Dense univariate polynomial with exact rational coefficients.
///
/// `coeffs[k]` is the coefficient of `x^k`; trailing zeros are never stored,
/// so the zero polynomial has an empty coefficient vector.
#[derive(Clone, Debug, PartialEq, Eq, Default, Hash)]
pub struct Polynomial {
    coeffs: Vec<Rational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn x() -> Self {
        Polynomial::from_coeffs(vec![Rational::zero(), Rational::one()])
    }

    pub fn constant(value: Rational) -> Self {
        Polynomial::from_coeffs(vec![value])
    }

    pub fn from_coeffs(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Polynomial::from_coeffs(
            coeffs
                .iter()
                .map(|&c| Rational::from_integer(c.into()))
                .collect(),
        )
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of `x^k` (zero past the degree).
    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(One::is_one)
    }

    /// True when every odd-power coefficient vanishes.
    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(Zero::is_zero)
    }

    /// True when every even-power coefficient vanishes.
    pub fn is_odd(&self) -> bool {
        self.coeffs.iter().step_by(2).all(Zero::is_zero)
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        Polynomial::from_coeffs(self.coeffs.iter().map(|a| a * factor).collect())
    }

    /// Multiplication by `x`.
    pub fn shift(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(Rational::zero());
        coeffs.extend(self.coeffs.iter().cloned());
        Polynomial { coeffs }
    }

    pub fn derivative(&self) -> Self {
        Polynomial::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, a)| a * Rational::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(Rational::zero());
        for (k, a) in self.coeffs.iter().enumerate() {
            coeffs.push(a / Rational::from_integer(BigInt::from(k + 1)));
        }
        Polynomial { coeffs }
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, a| acc * x + a)
    }

    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(rational_to_f64).collect()
    }

    /// Horner evaluation after rounding the coefficients to `f64`.
    pub fn eval_f64(&self, x: f64) -> f64 {
        horner(&self.to_f64_coeffs(), x)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, a) in self.coeffs.iter().enumerate().rev() {
            if a.is_zero() {
                continue;
            }
            let sign = if a.is_negative() { "-" } else { "+" };
            if first {
                if a.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mag = a.abs();
            match (k, mag.is_one()) {
                (0, _) => write!(f, "{mag}")?,
                (1, true) => f.write_str("x")?,
                (1, false) => write!(f, "{mag}*x")?,
                (_, true) => write!(f, "x^{k}")?,
                (_, false) => write!(f, "{mag}*x^{k}")?,
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::from_coeffs((0..len).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::from_coeffs((0..len).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut coeffs = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Polynomial::from_coeffs(coeffs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        Polynomial::from_coeffs(self.coeffs.iter().map(|a| -a).collect())
    }
}

pub(crate) fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational value of a finite float (binary expansion, not decimal).
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::invalid(format!("non-finite value {x}")))
}

/// Parses `"3"`, `"-1/2"`, `"0.25"` or `"1.5e-2"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::invalid(format!("cannot parse `{s}` as a rational"));
    if s.contains('/') {
        let r = Rational::from_str(s).map_err(|_| bad())?;
        return Ok(r);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|ch| ch.is_ascii_digit())
    {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if all_digits.is_empty() {
        "0"
    } else {
        &all_digits
    })
    .map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    GaussianAssocHermite,
    LaguerreAssocModelI,
}

/// How the integration constant of a primitive is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimitiveConvention {
    /// Pure parity opposite to the integrand's (Gaussian family). When the
    /// integrand is odd the even primitive is taken with zero constant.
    ParityMatched,
    /// Zero constant term (Laguerre family).
    ZeroConstant,
}

/// Parameters of one polynomial family. `alpha` is unused for Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFamilyParams {
    pub kind: FamilyKind,
    pub c: Rational,
    pub alpha: Rational,
    pub degree_cap: usize,
}

impl PolyFamilyParams {
    pub fn gaussian(c: Rational) -> Result<Self> {
        if c.is_negative() {
            return Err(Error::invalid(format!("c must be nonnegative, got {c}")));
        }
        Ok(PolyFamilyParams {
            kind: FamilyKind::GaussianAssocHermite,
            c,
            alpha: Rational::zero(),
            degree_cap: DEFAULT_DEGREE_CAP,
        })
    }

    pub fn laguerre(alpha: Rational, c: Rational) -> Result<Self> {
        if c.is_negative() {
            return Err(Error::invalid(format!("c must be nonnegative, got {c}")));
        }
        if alpha <= Rational::new(1.into(), 2.into()) {
            return Err(Error::invalid(format!(
                "alpha must exceed 1/2, got {alpha}"
            )));
        }
        Ok(PolyFamilyParams {
            kind: FamilyKind::LaguerreAssocModelI,
            c,
            alpha,
            degree_cap: DEFAULT_DEGREE_CAP,
        })
    }

    /// Family whose `P_n` statistics diagonalise the fluctuations of `ensemble`.
    pub fn for_ensemble(ensemble: &Ensemble) -> Result<Self> {
        match *ensemble {
            Ensemble::Gaussian { c } => Self::gaussian(rational_from_f64(c)?),
            Ensemble::Laguerre { alpha, c } => {
                Self::laguerre(rational_from_f64(alpha)?, rational_from_f64(c)?)
            }
        }
    }

    pub fn with_degree_cap(mut self, cap: usize) -> Self {
        self.degree_cap = cap;
        self
    }

    /// Diagonal recurrence coefficient `a_k`, `k ≥ 1`.
    pub fn recurrence_diag(&self, k: usize) -> Rational {
        match self.kind {
            FamilyKind::GaussianAssocHermite => Rational::zero(),
            FamilyKind::LaguerreAssocModelI => {
                &self.alpha + &self.c * int(2) + int(2 * k as i64 - 1)
            }
        }
    }

    /// Squared off-diagonal recurrence coefficient `b_k^2`, `k ≥ 1`.
    pub fn recurrence_offdiag_sq(&self, k: usize) -> Rational {
        let ck = &self.c + int(k as i64);
        match self.kind {
            FamilyKind::GaussianAssocHermite => ck,
            FamilyKind::LaguerreAssocModelI => (&self.alpha + &ck) * ck,
        }
    }

    pub fn primitive_convention(&self) -> PrimitiveConvention {
        match self.kind {
            FamilyKind::GaussianAssocHermite => PrimitiveConvention::ParityMatched,
            FamilyKind::LaguerreAssocModelI => PrimitiveConvention::ZeroConstant,
        }
    }

    fn check_degree(&self, n: usize) -> Result<()> {
        if n > self.degree_cap {
            return Err(Error::invalid(format!(
                "degree {n} exceeds the configured cap {}",
                self.degree_cap
            )));
        }
        Ok(())
    }

    fn run_recurrence(&self, n: usize, first: Polynomial, second: Polynomial) -> Vec<Polynomial> {
        let mut seq = Vec::with_capacity(n + 1);
        seq.push(first);
        if n == 0 {
            return seq;
        }
        seq.push(second);
        for k in 1..n {
            let next = &(&seq[k].shift() - &seq[k].scale(&self.recurrence_diag(k + 1)))
                - &seq[k - 1].scale(&self.recurrence_offdiag_sq(k));
            seq.push(next);
        }
        seq
    }

    /// `p_0, …, p_n`.
    pub fn p_sequence(&self, n: usize) -> Result<Vec<Polynomial>> {
        self.check_degree(n)?;
        let p1 = &Polynomial::x() - &Polynomial::constant(self.recurrence_diag(1));
        Ok(self.run_recurrence(n, Polynomial::one(), p1))
    }

    /// `q_0, …, q_n`.
    pub fn q_sequence(&self, n: usize) -> Result<Vec<Polynomial>> {
        self.check_degree(n)?;
        Ok(self.run_recurrence(n, Polynomial::zero(), Polynomial::one()))
    }

    pub fn p(&self, n: usize) -> Result<Polynomial> {
        Ok(self.p_sequence(n)?.pop().expect("sequence is nonempty"))
    }

    pub fn q(&self, n: usize) -> Result<Polynomial> {
        Ok(self.q_sequence(n)?.pop().expect("sequence is nonempty"))
    }

    /// The primitive `P_n` under this family's constant convention.
    pub fn primitive(&self, n: usize) -> Result<Polynomial> {
        Ok(primitive(&self.p(n)?, self.primitive_convention()))
    }

    /// `⟨p_n, p_n⟩ = ∏_{i=1}^n b_i^2` under the orthogonality measure.
    pub fn norm_squared(&self, n: usize) -> Rational {
        (1..=n).fold(Rational::one(), |acc, i| {
            acc * self.recurrence_offdiag_sq(i)
        })
    }

    /// `P_n(t, x)` as a polynomial in `(t, x)`: `t^{(n+1)/2} P_n(x/√t)` for
    /// the Gaussian family, `t^{n+1} P_n(x/t)` for Laguerre.
    pub fn scaled_primitive(&self, n: usize) -> Result<BivariatePoly> {
        let prim = self.primitive(n)?;
        let mut terms = Vec::new();
        for (k, a) in prim.coeffs().iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let t_pow = match self.kind {
                FamilyKind::GaussianAssocHermite => {
                    debug_assert!((n + 1 - k) % 2 == 0, "primitive lost parity");
                    (n + 1 - k) / 2
                }
                FamilyKind::LaguerreAssocModelI => n + 1 - k,
            };
            terms.push(Term {
                t_pow,
                x_pow: k,
                coeff: rational_to_f64(a),
            });
        }
        Ok(BivariatePoly { terms })
    }
}

fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// One term `coeff · t^t_pow · x^x_pow`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub t_pow: usize,
    pub x_pow: usize,
    pub coeff: f64,
}

/// Polynomial in time and space with floating coefficients, in the form
/// consumed by the fluctuation-covariance machinery.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BivariatePoly {
    pub terms: Vec<Term>,
}

impl BivariatePoly {
    /// Time-independent lift of a univariate polynomial.
    pub fn from_x_poly(p: &Polynomial) -> Self {
        BivariatePoly {
            terms: p
                .to_f64_coeffs()
                .into_iter()
                .enumerate()
                .filter(|(_, a)| *a != 0.0)
                .map(|(k, coeff)| Term {
                    t_pow: 0,
                    x_pow: k,
                    coeff,
                })
                .collect(),
        }
    }

    pub fn monomial(x_pow: usize) -> Self {
        BivariatePoly {
            terms: vec![Term {
                t_pow: 0,
                x_pow,
                coeff: 1.0,
            }],
        }
    }

    pub fn x_degree(&self) -> usize {
        self.terms.iter().map(|t| t.x_pow).max().unwrap_or(0)
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| term.coeff * t.powi(term.t_pow as i32) * x.powi(term.x_pow as i32))
            .sum()
    }

    /// Coefficients in `x` after fixing the time, index `k` ↔ `x^k`.
    pub fn x_coeffs_at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.x_degree() + 1];
        for term in &self.terms {
            out[term.x_pow] += term.coeff * t.powi(term.t_pow as i32);
        }
        out
    }
}

pub fn assoc_hermite(n: usize, c: &Rational) -> Result<Polynomial> {
    PolyFamilyParams::gaussian(c.clone())?.p(n)
}

pub fn assoc_hermite_q(n: usize, c: &Rational) -> Result<Polynomial> {
    PolyFamilyParams::gaussian(c.clone())?.q(n)
}

pub fn assoc_laguerre(n: usize, alpha: &Rational, c: &Rational) -> Result<Polynomial> {
    PolyFamilyParams::laguerre(alpha.clone(), c.clone())?.p(n)
}

pub fn assoc_laguerre_q(n: usize, alpha: &Rational, c: &Rational) -> Result<Polynomial> {
    PolyFamilyParams::laguerre(alpha.clone(), c.clone())?.q(n)
}

/// Antiderivative of `p`. For pure-parity input both conventions give the
/// zero-constant primitive, which is the one returned.
pub fn primitive(p: &Polynomial, convention: PrimitiveConvention) -> Polynomial {
    match convention {
        PrimitiveConvention::ParityMatched | PrimitiveConvention::ZeroConstant => {
            p.antiderivative()
        }
    }
}

/// `P_n(t, x)` evaluated in floating point; see [`PolyFamilyParams::scaled_primitive`].
pub fn scaled_primitive_eval(n: usize, family: &PolyFamilyParams, t: f64, x: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("time must be nonnegative, got {t}")));
    }
    Ok(family.scaled_primitive(n)?.eval(t, x))
}

pub fn norm_squared(n: usize, family: &PolyFamilyParams) -> Rational {
    family.norm_squared(n)
}

/// Decides, exactly, the Gaussian pair
/// `c q_n' + p_n''/2 + (n/2) p_n - x p_n'/2 = 0` and
/// `p_n' + c q_n - (n + c) p_{n-1} = 0`.
pub fn check_identity_gaussian(n: usize, c: &Rational) -> Result<bool> {
    if n == 0 {
        return Err(Error::invalid("identity checks need n >= 1"));
    }
    let family = PolyFamilyParams::gaussian(c.clone())?;
    let p = family.p_sequence(n)?;
    let q = family.q(n)?;
    let (pn, pm) = (&p[n], &p[n - 1]);
    let half = Rational::new(1.into(), 2.into());
    let dp = pn.derivative();

    let first = &(&(&q.derivative().scale(c) + &dp.derivative().scale(&half))
        + &pn.scale(&(int(n as i64) * &half)))
        - &dp.shift().scale(&half);
    let second = &(&dp + &q.scale(c)) - &pm.scale(&(c + int(n as i64)));
    Ok(first.is_zero() && second.is_zero())
}

/// Decides, exactly, the Laguerre pair
/// `(α+2c+1) p_n' + 2c(α+c) q_n' + x p_n'' + n p_n - x p_n' = 0` and
/// `x p_n' - n p_n + c(c+α) q_n - (α+c+n)(c+n) p_{n-1} = 0`.
pub fn check_identity_laguerre(n: usize, alpha: &Rational, c: &Rational) -> Result<bool> {
    if n == 0 {
        return Err(Error::invalid("identity checks need n >= 1"));
    }
    let family = PolyFamilyParams::laguerre(alpha.clone(), c.clone())?;
    let p = family.p_sequence(n)?;
    let q = family.q(n)?;
    let (pn, pm) = (&p[n], &p[n - 1]);
    let nn = int(n as i64);
    let ac = alpha + c;
    let dp = pn.derivative();
    let xdp = dp.shift();

    let first = &(&(&(&dp.scale(&(&ac + c + int(1)))
        + &q.derivative().scale(&(c * int(2) * &ac)))
        + &dp.derivative().shift())
        + &pn.scale(&nn))
        - &xdp;
    let second =
        &(&(&xdp - &pn.scale(&nn)) + &q.scale(&(c * &ac))) - &pm.scale(&((&ac + &nn) * (c + &nn)));
    Ok(first.is_zero() && second.is_zero())
}
