//! Exact continued-fraction arithmetic on rationals in (0, 1].
//!
//! A rational `x` is written `x = [a_1, a_2, ..., a_L] = 1/(a_1 + 1/(a_2 + ...))`
//! with every digit `a_k >= 1`. Finite expansions are ambiguous in their last
//! digit (`[.., a] = [.., a - 1, 1]`), so an expansion is kept canonical: when
//! `L >= 2` the final digit is at least 2. The only canonical expansion with a
//! trailing 1 is `[1]`, i.e. `x = 1`, and the empty expansion denotes `x = 0`.
//!
//! [`swap_digits`] and [`s_pq`] implement the digit-exchange operator
//! `S_{p,q}`. Positions beyond the expansion length have no well-defined
//! digit for a rational, so a swap that touches such a position leaves the
//! expansion unchanged. That affects a measure-zero set of abscissas only.

use arrayvec::ArrayVec;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Canonical continued-fraction digits of a rational in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CfExpansion {
    digits: Vec<BigUint>,
}

impl CfExpansion {
    /// Builds an expansion from arbitrary positive digits, folding a trailing
    /// 1 into its predecessor so the result is canonical. The value is
    /// unchanged by the folding.
    pub fn from_digits(digits: Vec<BigUint>) -> Result<Self> {
        if digits.iter().any(Zero::is_zero) {
            return Err(Error::Domain(
                "continued-fraction digits must be positive".into(),
            ));
        }
        let mut digits = digits;
        canonicalize(&mut digits);
        Ok(Self { digits })
    }

    pub fn from_u64_digits(digits: &[u64]) -> Result<Self> {
        Self::from_digits(digits.iter().map(|&d| BigUint::from(d)).collect())
    }

    pub fn digits(&self) -> &[BigUint] {
        &self.digits
    }

    /// Digits as `u64`, or `None` when some digit does not fit.
    pub fn to_u64_digits(&self) -> Option<Vec<u64>> {
        self.digits.iter().map(ToPrimitive::to_u64).collect()
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn is_canonical(&self) -> bool {
        let n = self.digits.len();
        self.digits.iter().all(|d| !d.is_zero()) && (n < 2 || !self.digits[n - 1].is_one())
    }

    /// The expansion with its first digit removed.
    pub fn tail(&self) -> Self {
        Self {
            digits: self.digits.iter().skip(1).cloned().collect(),
        }
    }
}

fn canonicalize<T>(digits: &mut Vec<T>)
where
    T: One + PartialEq + std::ops::AddAssign,
{
    let n = digits.len();
    if n >= 2 && digits[n - 1].is_one() {
        digits.pop();
        digits[n - 2] += T::one();
    }
}

fn check_unit_interval(x: &Rational) -> Result<()> {
    if !x.is_positive() || *x > Rational::one() {
        return Err(Error::Domain(format!("{x} is outside (0, 1]")));
    }
    Ok(())
}

/// Expands `0 < x <= 1` by the Euclidean algorithm.
pub fn cf_expand(x: &Rational) -> Result<CfExpansion> {
    check_unit_interval(x)?;
    // x = p/q with p, q > 0 in lowest terms.
    let mut p = x.numer().magnitude().clone();
    let mut q = x.denom().magnitude().clone();
    let mut digits = Vec::new();
    while !p.is_zero() {
        let a = &q / &p;
        let r = &q - &a * &p;
        digits.push(a);
        q = p;
        p = r;
    }
    // The Euclidean algorithm already ends on a digit >= 2 unless x = 1.
    debug_assert!(CfExpansion {
        digits: digits.clone()
    }
    .is_canonical());
    Ok(CfExpansion { digits })
}

/// Evaluates an expansion exactly. The empty expansion evaluates to 0.
pub fn cf_value(e: &CfExpansion) -> Rational {
    let (num, den) =
        e.digits
            .iter()
            .rev()
            .fold((BigUint::zero(), BigUint::one()), |(num, den), a| {
                let next_den = a * &den + num;
                (den, next_den)
            });
    // Consecutive continuants are coprime, so this is already reduced.
    Rational::new_raw(BigInt::from(num), BigInt::from(den))
}

/// The Gauss map `h(x) = 1/x - floor(1/x)`, which drops the first digit.
pub fn gauss_map(x: &Rational) -> Result<Rational> {
    check_unit_interval(x)?;
    Ok(x.recip().fract())
}

/// Exchanges the digits at 1-based positions `p` and `q`.
///
/// If either position lies beyond the expansion the input is returned as is.
/// The result is re-canonicalized, since a swap can move a 1 into the final
/// position.
///
/// # Panics
///
/// Panics if `p` or `q` is zero.
pub fn swap_digits(e: &CfExpansion, p: usize, q: usize) -> CfExpansion {
    assert!(p >= 1 && q >= 1, "digit positions are 1-based");
    let len = e.digits.len();
    if p > len || q > len || p == q {
        return e.clone();
    }
    let mut digits = e.digits.clone();
    digits.swap(p - 1, q - 1);
    canonicalize(&mut digits);
    CfExpansion { digits }
}

/// `S_{p,q}(x)`: expand, swap digits `p` and `q`, evaluate.
pub fn s_pq(x: &Rational, p: usize, q: usize) -> Result<Rational> {
    check_positions(p, q)?;
    let e = cf_expand(x)?;
    Ok(cf_value(&swap_digits(&e, p, q)))
}

pub(crate) fn check_positions(p: usize, q: usize) -> Result<()> {
    if p == 0 || q == 0 {
        return Err(Error::InvalidParameter(format!(
            "digit positions must be >= 1 (got p = {p}, q = {q})"
        )));
    }
    Ok(())
}

/// Nearest `f64` to an exact rational.
pub fn rational_to_f64(x: &Rational) -> f64 {
    x.to_f64().expect("finite rational converts to f64")
}

// Machine-word path used when building abscissa tables. A u64 denominator
// has at most 93 continued-fraction digits (Fibonacci bound), and the swapped
// continuants are checked for u128 overflow with an exact fallback.

const MAX_WORD_DIGITS: usize = 96;
type WordDigits = ArrayVec<u64, MAX_WORD_DIGITS>;

fn expand_word(mut p: u64, mut q: u64) -> WordDigits {
    let mut digits = WordDigits::new();
    while p != 0 {
        digits.push(q / p);
        let r = q % p;
        q = p;
        p = r;
    }
    digits
}

fn value_word(digits: &[u64]) -> Option<(u128, u128)> {
    let mut num: u128 = 0;
    let mut den: u128 = 1;
    for &a in digits.iter().rev() {
        let next = (a as u128).checked_mul(den)?.checked_add(num)?;
        num = den;
        den = next;
    }
    Some((num, den))
}

const F64_EXACT_INT: u128 = 1 << 53;

fn ratio_u128_to_f64(num: u128, den: u128) -> f64 {
    if num < F64_EXACT_INT && den < F64_EXACT_INT {
        // Both operands are exact, so the single division is correctly rounded.
        num as f64 / den as f64
    } else {
        rational_to_f64(&Rational::new(BigInt::from(num), BigInt::from(den)))
    }
}

/// `S_{p,q}(num/den)` rounded to `f64`, for `0 < num <= den`.
///
/// Agrees bit for bit with `rational_to_f64(&s_pq(x, p, q)?)`.
pub fn s_pq_word(num: u64, den: u64, p: usize, q: usize) -> f64 {
    debug_assert!(num > 0 && num <= den && p >= 1 && q >= 1);
    let g = num_integer::gcd(num, den);
    let (num, den) = (num / g, den / g);
    let mut digits = expand_word(num, den);
    let len = digits.len();
    if p > len || q > len || p == q {
        return ratio_u128_to_f64(num as u128, den as u128);
    }
    digits.swap(p - 1, q - 1);
    if len >= 2 && digits[len - 1] == 1 {
        digits.pop();
        match digits[len - 2].checked_add(1) {
            Some(v) => digits[len - 2] = v,
            None => return s_pq_exact_f64(num, den, p, q),
        }
    }
    match value_word(&digits) {
        Some((n, d)) => ratio_u128_to_f64(n, d),
        None => s_pq_exact_f64(num, den, p, q),
    }
}

fn s_pq_exact_f64(num: u64, den: u64, p: usize, q: usize) -> f64 {
    let x = Rational::new(BigInt::from(num), BigInt::from(den));
    rational_to_f64(&s_pq(&x, p, q).expect("argument checked to lie in (0, 1]"))
}

/// `h(num/den)` rounded to `f64`, for `0 < num <= den`.
pub fn gauss_map_word(num: u64, den: u64) -> f64 {
    debug_assert!(num > 0 && num <= den);
    let g = num_integer::gcd(num, den);
    let (num, den) = (num / g, den / g);
    ratio_u128_to_f64((den % num) as u128, num as u128)
}
