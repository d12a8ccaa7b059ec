//! Piecewise-Möbius evaluation of `integral_0^1 S_{1,2}(x) x^(s-1) dx`.
//!
//! On the cell of abscissas whose first two digits are `(a1, a2)`,
//! `S_{1,2}(x) = (a x + b)/(c x + d)` with
//!
//! ```text
//! a = 1 + a1 (a2 - a1)        b = a1 - a2
//! c = (a2 - a1)(1 + a1 a2)    d = 1 + a2 (a1 - a2)
//! ```
//!
//! and `a d - b c = 1`. Writing `alpha = d/c`, the cell integral splits into
//! `(a/c) F(s, alpha) + (b/c) F(s-1, alpha)` with the antiderivative
//! `F(s, alpha; x) = integral x^s / (x + alpha) dx`.
//!
//! `F` is evaluated by one of three convergent expansions, chosen per cell by
//! the smallest geometric ratio:
//!
//! * [`Expansion::PoleCentered`]: the Newton series in `y = x + alpha`,
//!   `(-alpha)^s [ln|y| + sum_k (-1)^k/k C(s,k) (y/alpha)^k]`, which converges
//!   for `|1 + x/alpha| < 1`. This is [`f_series`] and covers every `S_{1,2}`
//!   cell except `(1, 2)`.
//! * [`Expansion::Inner`]: `1/(x+alpha)` expanded in `x/alpha`.
//! * [`Expansion::Outer`]: `1/(x+alpha)` expanded in `alpha/x`.
//!
//! Each cell's series is summed to convergence before cells are accumulated;
//! exchanging the `k` sum with the cell sums diverges.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf::{rational_to_f64, Rational};
use crate::error::{Error, Result};
use crate::reduce::pairwise;

type C = Complex64;

/// Stop doubling `kmax` once the cell value changes by less than this, relatively.
pub const KMAX_REL_TOL: f64 = 1e-10;
pub const KMAX_CAP: usize = 4096;

/// One Möbius piece of `S_{1,2}` with its exact validity interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MobiusPiece {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
    pub cell_lo: Rational,
    pub cell_hi: Rational,
    pub a1: u64,
    pub a2: u64,
}

impl MobiusPiece {
    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    /// `(a x + b)/(c x + d)`, or `None` at the pole.
    pub fn apply(&self, x: &Rational) -> Option<Rational> {
        let a = Rational::from_integer(self.a.clone());
        let b = Rational::from_integer(self.b.clone());
        let c = Rational::from_integer(self.c.clone());
        let d = Rational::from_integer(self.d.clone());
        let den = c * x + d;
        (!den.is_zero()).then(|| (a * x + b) / den)
    }

    /// `-d/c`, where the piece is singular.
    pub fn pole(&self) -> Option<Rational> {
        (!self.c.is_zero()).then(|| Rational::new(-self.d.clone(), self.c.clone()))
    }

    pub fn contains(&self, x: &Rational) -> bool {
        *x > self.cell_lo && *x < self.cell_hi
    }

    pub fn width(&self) -> Rational {
        &self.cell_hi - &self.cell_lo
    }
}

/// The `S_{1,2}` piece for leading digits `(a1, a2)`.
pub fn mobius_coeffs(a1: u64, a2: u64) -> Result<MobiusPiece> {
    if a1 == 0 || a2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "cell digits must be >= 1 (got {a1}, {a2})"
        )));
    }
    let (x1, x2) = (BigInt::from(a1), BigInt::from(a2));
    let one = BigInt::one();
    let a = &one + &x1 * (&x2 - &x1);
    let b = &x1 - &x2;
    let c = (&x2 - &x1) * (&one + &x1 * &x2);
    let d = &one + &x2 * (&x1 - &x2);
    let cell_lo = Rational::new(x2.clone(), &one + &x1 * &x2);
    let cell_hi = Rational::new(&one + &x2, &one + &x1 + &x1 * &x2);
    Ok(MobiusPiece {
        a,
        b,
        c,
        d,
        cell_lo,
        cell_hi,
        a1,
        a2,
    })
}

/// Truncation of the `k` series and of the cell double sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesTruncation {
    pub kmax: usize,
    pub a1max: u64,
    pub a2max: u64,
}

impl Default for SeriesTruncation {
    fn default() -> Self {
        Self {
            kmax: 64,
            a1max: 200,
            a2max: 200,
        }
    }
}

impl SeriesTruncation {
    pub fn validate(&self) -> Result<()> {
        if self.kmax == 0 || self.a1max == 0 || self.a2max == 0 {
            return Err(Error::InvalidParameter(
                "kmax, a1max and a2max must all be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expansion {
    PoleCentered,
    Inner,
    Outer,
    /// `c = 0` cells, where the piece is `(a x + b)/d`.
    ClosedForm,
}

/// Truncated `F(s, alpha; x)` together with its convergence ratio `|1 + x/alpha|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FSeriesValue {
    pub value: C,
    pub ratio: f64,
    /// `s` is a non-negative integer `<= kmax`, so the binomial series is finite.
    pub terminates: bool,
}

impl FSeriesValue {
    pub fn diverges(&self) -> bool {
        self.ratio >= 1.0 && !self.terminates
    }
}

fn terminates(s: C, kmax: usize) -> bool {
    s.im == 0.0 && s.re >= 0.0 && s.re.fract() == 0.0 && s.re <= kmax as f64
}

/// `(-alpha)^s` on the principal branch.
fn neg_alpha_pow(s: C, alpha: f64) -> C {
    let base = -alpha;
    if base > 0.0 {
        (s * base.ln()).exp()
    } else {
        (s * C::new(base.abs().ln(), std::f64::consts::PI)).exp()
    }
}

/// Pole-centered series with `y = x + alpha` supplied separately so callers
/// holding exact endpoints can avoid cancellation in the sum.
fn pole_centered(s: C, alpha: f64, y: f64, kmax: usize) -> C {
    let u = y / alpha;
    let mut binom = C::new(1.0, 0.0);
    let mut neg_u_pow = 1.0;
    let mut series = C::new(0.0, 0.0);
    for k in 1..=kmax {
        binom = binom * (s - (k - 1) as f64) / k as f64;
        if binom.is_zero() {
            break;
        }
        neg_u_pow *= -u;
        series += binom * (neg_u_pow / k as f64);
    }
    neg_alpha_pow(s, alpha) * (y.abs().ln() + series)
}

/// `F(s, alpha; x) = (-alpha)^s [ln(x + alpha) + sum_{k=1}^{kmax} (-1)^k/k C(s,k) (1 + x/alpha)^k]`.
///
/// The logarithm is taken of `|x + alpha|`; the constant `i pi` offset of a
/// negative argument cancels in every definite difference on one side of
/// the pole.
pub fn f_series(s: C, alpha: &Rational, x: f64, kmax: usize) -> Result<FSeriesValue> {
    if kmax == 0 {
        return Err(Error::InvalidParameter("kmax must be >= 1".into()));
    }
    if alpha.is_zero() {
        return Err(Error::Singular("alpha = 0".into()));
    }
    let alpha = rational_to_f64(alpha);
    let y = x + alpha;
    if y == 0.0 {
        return Err(Error::Singular(format!("x = -alpha = {x}")));
    }
    let out = FSeriesValue {
        value: pole_centered(s, alpha, y, kmax),
        ratio: (y / alpha).abs(),
        terminates: terminates(s, kmax),
    };
    if out.diverges() {
        log::warn!(
            "F series evaluated outside its convergence region (|1 + x/alpha| = {})",
            out.ratio
        );
    }
    Ok(out)
}

/// `integral x^e dx` as a function value: `x^e / e`, or `ln x` when `e = 0`.
fn power_antiderivative(e: C, ln_x: f64) -> C {
    if e.is_zero() {
        C::new(ln_x, 0.0)
    } else {
        (e * ln_x).exp() / e
    }
}

/// `sum_{k<kmax} (-1)^k alpha^(-k-1) integral x^(sigma+k) dx`, valid for `|x| < |alpha|`.
fn inner(sigma: C, alpha: f64, x: f64, kmax: usize) -> C {
    let ln_x = x.ln();
    let mut coeff = 1.0 / alpha;
    let mut total = C::new(0.0, 0.0);
    for k in 0..kmax {
        total += power_antiderivative(sigma + (k + 1) as f64, ln_x) * coeff;
        coeff *= -1.0 / alpha;
    }
    total
}

/// `sum_{k<kmax} (-alpha)^k integral x^(sigma-1-k) dx`, valid for `|alpha| < |x|`.
fn outer(sigma: C, alpha: f64, x: f64, kmax: usize) -> C {
    let ln_x = x.ln();
    let mut coeff = 1.0;
    let mut total = C::new(0.0, 0.0);
    for k in 0..kmax {
        total += power_antiderivative(sigma - k as f64, ln_x) * coeff;
        coeff *= -alpha;
    }
    total
}

/// Endpoints of a cell in the forms the expansions need.
#[derive(Debug, Clone, Copy)]
struct Endpoints {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    alpha: f64,
}

impl Endpoints {
    fn new(lo: &Rational, hi: &Rational, alpha: &Rational) -> Self {
        Self {
            x0: rational_to_f64(lo),
            x1: rational_to_f64(hi),
            y0: rational_to_f64(&(lo + alpha)),
            y1: rational_to_f64(&(hi + alpha)),
            alpha: rational_to_f64(alpha),
        }
    }

    fn ratio(&self, expansion: Expansion) -> f64 {
        let a = self.alpha.abs();
        match expansion {
            Expansion::PoleCentered => (self.y0.abs().max(self.y1.abs())) / a,
            Expansion::Inner => self.x0.abs().max(self.x1.abs()) / a,
            Expansion::Outer => a / self.x0.abs().min(self.x1.abs()),
            Expansion::ClosedForm => 0.0,
        }
    }

    fn best_expansion(&self) -> Expansion {
        [Expansion::PoleCentered, Expansion::Inner, Expansion::Outer]
            .into_iter()
            .min_by(|a, b| self.ratio(*a).total_cmp(&self.ratio(*b)))
            .unwrap()
    }

    /// `integral_{x0}^{x1} x^sigma / (x + alpha) dx`.
    fn definite(&self, expansion: Expansion, sigma: C, kmax: usize) -> C {
        match expansion {
            Expansion::PoleCentered => {
                pole_centered(sigma, self.alpha, self.y1, kmax)
                    - pole_centered(sigma, self.alpha, self.y0, kmax)
            }
            Expansion::Inner => {
                inner(sigma, self.alpha, self.x1, kmax) - inner(sigma, self.alpha, self.x0, kmax)
            }
            Expansion::Outer => {
                outer(sigma, self.alpha, self.x1, kmax) - outer(sigma, self.alpha, self.x0, kmax)
            }
            Expansion::ClosedForm => unreachable!("closed-form cells have no alpha"),
        }
    }
}

/// Doubles `kmax` from `start` until the relative change drops below
/// [`KMAX_REL_TOL`] or `kmax` reaches [`KMAX_CAP`].
fn converge(start: usize, eval: impl Fn(usize) -> C) -> (C, usize, bool) {
    let mut k = start;
    let mut prev = eval(k);
    let cap = start.max(KMAX_CAP);
    while k < cap {
        let next_k = (2 * k).min(cap);
        let next = eval(next_k);
        let change = (next - prev).norm();
        prev = next;
        k = next_k;
        if change <= KMAX_REL_TOL * next.norm() || change == 0.0 {
            return (prev, k, true);
        }
    }
    (prev, k, false)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellIntegral {
    pub value: C,
    pub expansion: Expansion,
    pub kmax_used: usize,
    pub converged: bool,
}

fn check_s(s: C) -> Result<()> {
    if s == C::new(0.0, 0.0) || s == C::new(1.0, 0.0) {
        return Err(Error::InvalidParameter(format!(
            "s = {s} is excluded (s must avoid 0 and 1)"
        )));
    }
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite s = {s}")));
    }
    Ok(())
}

fn big_ratio(num: &BigInt, den: &BigInt) -> f64 {
    rational_to_f64(&Rational::new(num.clone(), den.clone()))
}

/// `integral over the cell of (a x + b)/(c x + d) x^(s-1) dx`, with diagnostics.
pub fn mobius_cell_integral_detail(
    piece: &MobiusPiece,
    s: C,
    trunc: &SeriesTruncation,
) -> Result<CellIntegral> {
    check_s(s)?;
    trunc.validate()?;
    if piece.c.is_zero() {
        if piece.d.is_zero() {
            return Err(Error::Singular("c = d = 0".into()));
        }
        let (ln_lo, ln_hi) = (
            rational_to_f64(&piece.cell_lo).ln(),
            rational_to_f64(&piece.cell_hi).ln(),
        );
        let prim = |e: C| power_antiderivative(e, ln_hi) - power_antiderivative(e, ln_lo);
        let value =
            prim(s + 1.0) * big_ratio(&piece.a, &piece.d) + prim(s) * big_ratio(&piece.b, &piece.d);
        return Ok(CellIntegral {
            value,
            expansion: Expansion::ClosedForm,
            kmax_used: 0,
            converged: true,
        });
    }
    let pole = piece.pole().expect("c != 0");
    if pole >= piece.cell_lo && pole <= piece.cell_hi {
        return Err(Error::Singular(format!(
            "pole {pole} lies in cell [{}, {}]",
            piece.cell_lo, piece.cell_hi
        )));
    }
    if !piece.cell_lo.is_positive() {
        return Err(Error::Domain("cell must lie in (0, 1]".into()));
    }
    let alpha = Rational::new(piece.d.clone(), piece.c.clone());
    let ends = Endpoints::new(&piece.cell_lo, &piece.cell_hi, &alpha);
    let expansion = ends.best_expansion();
    let (a_c, b_c) = (big_ratio(&piece.a, &piece.c), big_ratio(&piece.b, &piece.c));
    let (value, kmax_used, converged) = converge(trunc.kmax, |k| {
        ends.definite(expansion, s, k) * a_c + ends.definite(expansion, s - 1.0, k) * b_c
    });
    Ok(CellIntegral {
        value,
        expansion,
        kmax_used,
        converged,
    })
}

pub fn mobius_cell_integral(piece: &MobiusPiece, s: C, trunc: &SeriesTruncation) -> Result<C> {
    mobius_cell_integral_detail(piece, s, trunc).map(|c| c.value)
}

/// The single-series form of a cell integral,
///
/// ```text
/// (-d)^(s-1) / c^(s+1) [ -det ln(x + d/c)
///     + sum_k (-1)^k/k C(s-1,k) (1 + c x/d)^k (det s + k b c)/(k - s) ]
/// ```
///
/// evaluated literally with principal-branch powers. For `S_{1,2}` pieces `c`
/// and `d` have opposite signs, so either `-d > 0` and `c > 0`, or both bases
/// are negative and their `i pi` phases cancel; in both cases this equals the
/// two-`F` form. Only meaningful where `|1 + c x/d| < 1` on the cell.
pub fn consolidated_cell_integral(piece: &MobiusPiece, s: C, kmax: usize) -> Result<C> {
    check_s(s)?;
    if piece.c.is_zero() || piece.d.is_zero() {
        return Err(Error::Singular(
            "single-series form needs c != 0 and d != 0".into(),
        ));
    }
    let det = piece
        .det()
        .to_f64()
        .ok_or_else(|| Error::InvalidParameter("determinant out of range".into()))?;
    let c = piece.c.to_f64().unwrap_or(f64::INFINITY);
    let d = piece.d.to_f64().unwrap_or(f64::INFINITY);
    let bc = (&piece.b * &piece.c).to_f64().unwrap_or(f64::INFINITY);
    let alpha = Rational::new(piece.d.clone(), piece.c.clone());
    let ends = Endpoints::new(&piece.cell_lo, &piece.cell_hi, &alpha);
    let sm1 = s - 1.0;
    let series = |y: f64, kmax: usize| -> C {
        let u = y / ends.alpha;
        let mut binom = C::new(1.0, 0.0);
        let mut neg_u_pow = 1.0;
        let mut total = C::new(-det * y.abs().ln(), 0.0);
        for k in 1..=kmax {
            let kf = k as f64;
            binom = binom * (sm1 - (kf - 1.0)) / kf;
            neg_u_pow *= -u;
            if binom.is_zero() {
                break;
            }
            total += binom * (neg_u_pow / kf) * ((s * det + kf * bc) / (kf - s));
        }
        total
    };
    let pow = |base: f64, e: C| -> C { C::new(base, 0.0).powc(e) };
    let prefactor = pow(-d, sm1) / pow(c, s + 1.0);
    let (value, _, _) = converge(kmax, |k| {
        prefactor * (series(ends.y1, k) - series(ends.y0, k))
    });
    Ok(value)
}

/// Result of the truncated double sum over `S_{1,2}` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticZeta {
    /// `s/(s-1) - s * integral`.
    pub value: C,
    /// Truncated `integral_0^1 S_{1,2}(x) x^(s-1) dx`.
    pub integral: C,
    /// `|sum|` over the outermost shell of cells (`a1 = a1max` or `a2 = a2max`).
    pub last_shell: f64,
    pub cells: usize,
    pub max_kmax_used: usize,
    pub unconverged_cells: usize,
}

/// Assembles `zeta_{1,2}(s)` from the cell integrals with `a1 <= a1max`,
/// `a2 <= a2max`. The double sum converges only conditionally, so the
/// truncation matters and is reported alongside the value.
pub fn analytic_zeta_12(s: C, trunc: &SeriesTruncation) -> Result<AnalyticZeta> {
    check_s(s)?;
    trunc.validate()?;
    let width = trunc.a2max as usize;
    let cells = trunc.a1max as usize * width;
    let integrals: Vec<CellIntegral> = (0..cells)
        .into_par_iter()
        .map(|i| {
            let (a1, a2) = ((i / width) as u64 + 1, (i % width) as u64 + 1);
            mobius_cell_integral_detail(&mobius_coeffs(a1, a2)?, s, trunc)
        })
        .collect::<Result<_>>()?;
    let values: Vec<C> = integrals.iter().map(|c| c.value).collect();
    let integral = pairwise(&values);
    let shell: Vec<C> = values
        .iter()
        .enumerate()
        .filter(|(i, _)| i / width + 1 == trunc.a1max as usize || i % width + 1 == width)
        .map(|(_, v)| *v)
        .collect();
    let unconverged_cells = integrals.iter().filter(|c| !c.converged).count();
    if unconverged_cells > 0 {
        log::warn!("{unconverged_cells} cell series hit kmax = {KMAX_CAP} before converging");
    }
    Ok(AnalyticZeta {
        value: s / (s - 1.0) - s * integral,
        integral,
        last_shell: pairwise(&shell).norm(),
        cells,
        max_kmax_used: integrals.iter().map(|c| c.kmax_used).max().unwrap_or(0),
        unconverged_cells,
    })
}

/// Total exact width of the cells with `a1 <= a1max`, `a2 <= a2max`.
pub fn covered_measure(a1max: u64, a2max: u64) -> Result<Rational> {
    let mut total = Rational::zero();
    for a1 in 1..=a1max {
        for a2 in 1..=a2max {
            total += mobius_coeffs(a1, a2)?.width();
        }
    }
    Ok(total)
}
