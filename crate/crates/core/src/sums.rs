//! Truncated midpoint sums and the scan/trace drivers built on them.
//!
//! With `x_n = (2n+1)/(2N)` the three abscissa sums share one form,
//!
//! ```text
//! sum(s) = s/(s-1) - (s/N) * sum_{n<N} w(x_n) * x_n^(s-1)
//! ```
//!
//! where `w` is `S_{p,q}` (permuted), the Gauss map (baseline) or the
//! identity (shadow). The fourth family is the partial zeta sum
//! `Z_N(s) = sum_{n=1..N} n^(-s)`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf::check_positions;
use crate::error::{Error, Result};
use crate::reduce::chunked_sum;
use crate::table::{log_abscissas, TableCache, WeightKind};

pub type ComplexValue = Complex64;

// exp overflows just above 709.78.
const EXP_LIMIT: f64 = 709.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SumKind {
    Permuted { p: usize, q: usize },
    Baseline,
    Shadow,
    PartialZeta,
}

impl fmt::Display for SumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SumKind::Permuted { p, q } => write!(f, "permuted({p},{q})"),
            SumKind::Baseline => f.write_str("baseline"),
            SumKind::Shadow => f.write_str("shadow"),
            SumKind::PartialZeta => f.write_str("partial-zeta"),
        }
    }
}

/// Which sum to evaluate and with how many terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SumSpec {
    pub n: u64,
    pub kind: SumKind,
}

impl SumSpec {
    pub fn new(n: u64, kind: SumKind) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if let SumKind::Permuted { p, q } = kind {
            check_positions(p, q)?;
        }
        Ok(Self { n, kind })
    }

    pub fn permuted(n: u64, p: usize, q: usize) -> Result<Self> {
        Self::new(n, SumKind::Permuted { p, q })
    }

    pub fn baseline(n: u64) -> Result<Self> {
        Self::new(n, SumKind::Baseline)
    }

    pub fn shadow(n: u64) -> Result<Self> {
        Self::new(n, SumKind::Shadow)
    }

    pub fn partial_zeta(n: u64) -> Result<Self> {
        Self::new(n, SumKind::PartialZeta)
    }

    fn weight_kind(&self) -> Option<WeightKind> {
        match self.kind {
            SumKind::Permuted { p, q } => Some(WeightKind::Swap { p, q }),
            SumKind::Baseline => Some(WeightKind::Gauss),
            SumKind::Shadow => Some(WeightKind::Identity),
            SumKind::PartialZeta => None,
        }
    }
}

/// A sum with its `s`-independent tables built, ready for many evaluations.
#[derive(Debug, Clone)]
pub struct SumEvaluator {
    spec: SumSpec,
    logs: Arc<Vec<f64>>,
    weights: Option<Arc<Vec<f64>>>,
    max_abs_log: f64,
}

impl SumEvaluator {
    pub fn new(spec: SumSpec) -> Self {
        Self::with_cache(spec, &TableCache::in_memory())
    }

    pub fn with_cache(spec: SumSpec, cache: &TableCache) -> Self {
        let (logs, weights) = match spec.weight_kind() {
            Some(kind) => (log_abscissas(spec.n), Some(cache.weights(spec.n, kind))),
            None => ((1..=spec.n).map(|k| (k as f64).ln()).collect(), None),
        };
        let max_abs_log = logs.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        Self {
            spec,
            logs: Arc::new(logs),
            weights,
            max_abs_log,
        }
    }

    pub fn spec(&self) -> SumSpec {
        self.spec
    }

    pub fn eval(&self, s: ComplexValue) -> Result<ComplexValue> {
        if !(s.re.is_finite() && s.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite s = {s}")));
        }
        let overflow = || Error::Overflow { re: s.re, im: s.im };
        let value = match &self.weights {
            None => {
                if s.re.abs() * self.max_abs_log > EXP_LIMIT {
                    return Err(overflow());
                }
                let logs = &self.logs;
                chunked_sum(logs.len(), |i| cis_exp(-s, logs[i], 1.0))
            }
            Some(weights) => {
                if s == ComplexValue::new(1.0, 0.0) {
                    return Err(Error::Pole);
                }
                let sm1 = s - 1.0;
                if sm1.re.abs() * self.max_abs_log > EXP_LIMIT {
                    return Err(overflow());
                }
                let logs = &self.logs;
                let sum = chunked_sum(logs.len(), |i| cis_exp(sm1, logs[i], weights[i]));
                s / sm1 - s / self.spec.n as f64 * sum
            }
        };
        if value.re.is_finite() && value.im.is_finite() {
            Ok(value)
        } else {
            Err(overflow())
        }
    }
}

/// `weight * exp(z * log)` for real `log`.
#[inline]
fn cis_exp(z: ComplexValue, log: f64, weight: f64) -> ComplexValue {
    let mag = weight * (z.re * log).exp();
    let (sin, cos) = (z.im * log).sin_cos();
    ComplexValue::new(mag * cos, mag * sin)
}

pub fn zeta_pq_sum(n: u64, p: usize, q: usize, s: ComplexValue) -> Result<ComplexValue> {
    SumEvaluator::new(SumSpec::permuted(n, p, q)?).eval(s)
}

pub fn zeta_baseline_sum(n: u64, s: ComplexValue) -> Result<ComplexValue> {
    SumEvaluator::new(SumSpec::baseline(n)?).eval(s)
}

pub fn eta_sum(n: u64, s: ComplexValue) -> Result<ComplexValue> {
    SumEvaluator::new(SumSpec::shadow(n)?).eval(s)
}

pub fn partial_zeta(n: u64, s: ComplexValue) -> Result<ComplexValue> {
    SumEvaluator::new(SumSpec::partial_zeta(n)?).eval(s)
}

/// Relative mismatch of the rewrite
/// `sum_{n<N} ((2n+1)/(2N))^s = (2N)^(-s) [Z_{2N-1}(-s) - 2^s Z_{N-1}(-s)]`,
/// reported as `|lhs - rhs| / (|lhs| + 1)`.
pub fn shadow_identity_residual(n: u64, s: ComplexValue) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let logs = log_abscissas(n);
    let lhs: ComplexValue = chunked_sum(logs.len(), |i| cis_exp(s, logs[i], 1.0));
    let power_sum = |m: u64| -> ComplexValue {
        chunked_sum(m as usize, |i| cis_exp(s, ((i + 1) as f64).ln(), 1.0))
    };
    let two_n = (2 * n) as f64;
    let rhs = cis_exp(-s, two_n.ln(), 1.0)
        * (power_sum(2 * n - 1) - cis_exp(s, 2f64.ln(), 1.0) * power_sum(n - 1));
    let residual = (lhs - rhs).norm() / (lhs.norm() + 1.0);
    if residual.is_finite() {
        Ok(residual)
    } else {
        Err(Error::Overflow { re: s.re, im: s.im })
    }
}

/// A rectangular lattice of `s` values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
    pub re_step: f64,
    pub im_step: f64,
}

impl GridSpec {
    pub fn new(re: (f64, f64), im: (f64, f64), re_step: f64, im_step: f64) -> Result<Self> {
        let grid = Self {
            re_lo: re.0,
            re_hi: re.1,
            im_lo: im.0,
            im_hi: im.1,
            re_step,
            im_step,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.re_lo,
            self.re_hi,
            self.im_lo,
            self.im_hi,
            self.re_step,
            self.im_step,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite || self.re_lo >= self.re_hi || self.im_lo >= self.im_hi {
            return Err(Error::InvalidParameter(
                "grid ranges must be finite with lo < hi".into(),
            ));
        }
        if self.re_step <= 0.0 || self.im_step <= 0.0 {
            return Err(Error::InvalidParameter(
                "grid steps must be positive".into(),
            ));
        }
        Ok(())
    }

    fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        // Tolerate the rounding in (hi - lo) / step so that hi itself is a node.
        let count = ((hi - lo) / step * (1.0 + 1e-12)).floor() as usize + 1;
        (0..count).map(|i| lo + i as f64 * step).collect()
    }

    pub fn re_values(&self) -> Vec<f64> {
        Self::axis(self.re_lo, self.re_hi, self.re_step)
    }

    pub fn im_values(&self) -> Vec<f64> {
        Self::axis(self.im_lo, self.im_hi, self.im_step)
    }
}

/// `|sum(s)|` on a grid. Rows run over `im` ascending, columns over `re`
/// ascending; `cells[row * re_values.len() + col]`. Nodes where the sum is
/// undefined (pole, overflow) are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct StripScan {
    pub re_values: Vec<f64>,
    pub im_values: Vec<f64>,
    pub cells: Vec<Option<f64>>,
}

impl StripScan {
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row * self.re_values.len() + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Option<f64>]> {
        self.cells.chunks(self.re_values.len())
    }
}

/// Evaluates one scan row (fixed `im`).
pub fn scan_row(eval: &SumEvaluator, re_values: &[f64], im: f64) -> Vec<Option<f64>> {
    re_values
        .iter()
        .map(|&re| eval.eval(ComplexValue::new(re, im)).ok().map(|v| v.norm()))
        .collect()
}

pub fn strip_scan(eval: &SumEvaluator, grid: &GridSpec) -> Result<StripScan> {
    grid.validate()?;
    let re_values = grid.re_values();
    let im_values = grid.im_values();
    let rows: Vec<Vec<Option<f64>>> = im_values
        .par_iter()
        .map(|&im| scan_row(eval, &re_values, im))
        .collect();
    Ok(StripScan {
        re_values,
        im_values,
        cells: rows.into_iter().flatten().collect(),
    })
}

/// Parameter values `t_i` of a phase trace.
pub fn trace_parameters(t_lo: f64, t_hi: f64, steps: usize) -> Result<Vec<f64>> {
    if t_lo.partial_cmp(&t_hi) != Some(std::cmp::Ordering::Less) || steps == 0 {
        return Err(Error::InvalidParameter(
            "phase trace needs t_lo < t_hi and at least one step".into(),
        ));
    }
    if steps == 1 {
        return Ok(vec![t_lo]);
    }
    let dt = (t_hi - t_lo) / (steps - 1) as f64;
    Ok((0..steps).map(|i| t_lo + i as f64 * dt).collect())
}

/// `(re sum, im sum)` along `s = 1/2 + i t`.
pub fn phase_trace(
    eval: &SumEvaluator,
    t_lo: f64,
    t_hi: f64,
    steps: usize,
) -> Result<Vec<(f64, f64)>> {
    trace_parameters(t_lo, t_hi, steps)?
        .par_iter()
        .map(|&t| eval.eval(ComplexValue::new(0.5, t)).map(|v| (v.re, v.im)))
        .collect()
}

/// Parses `a+bi`, `a-bi`, `a`, `bi` (also with `j`).
pub fn parse_complex(text: &str) -> Result<ComplexValue> {
    let err = || Error::InvalidParameter(format!("cannot parse complex number {text:?}"));
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(err());
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return f64::from_str(&t)
            .map(|re| ComplexValue::new(re, 0.0))
            .map_err(|_| err());
    };
    // Split at the last sign that is not part of an exponent or the leading sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => f64::from_str(v).map_err(|_| err())?,
    };
    let re = f64::from_str(re).map_err(|_| err())?;
    Ok(ComplexValue::new(re, im))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> ComplexValue {
        ComplexValue::new(re, im)
    }

    #[test]
    fn single_term_examples() {
        let v = zeta_pq_sum(1, 1, 2, c(2.0, 0.0)).unwrap();
        assert!((v - c(1.5, 0.0)).norm() < 1e-15);
        let v = zeta_baseline_sum(1, c(2.0, 0.0)).unwrap();
        assert!((v - c(2.0, 0.0)).norm() < 1e-15);
        let v = eta_sum(1, c(2.0, 0.0)).unwrap();
        assert!((v - c(1.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn partial_zeta_examples() {
        let v = partial_zeta(3, c(1.0, 0.0)).unwrap();
        assert!((v.re - 11.0 / 6.0).abs() < 1e-15 && v.im == 0.0);
        for s in [c(0.3, 7.0), c(-4.0, 2.0), c(1.0, 0.0)] {
            assert_eq!(partial_zeta(1, s).unwrap(), c(1.0, 0.0));
        }
    }

    #[test]
    fn shadow_rewrite_by_hand() {
        // sum_{n<5} ((2n+1)/10)^2 = 1.65 = (285 - 4 * 30) / 100
        let lhs: f64 = (0..5).map(|n| ((2 * n + 1) as f64 / 10.0).powi(2)).sum();
        assert!((lhs - 1.65).abs() < 1e-15);
        let z9 = partial_zeta(9, c(-2.0, 0.0)).unwrap().re;
        let z4 = partial_zeta(4, c(-2.0, 0.0)).unwrap().re;
        assert_eq!((z9, z4), (285.0, 30.0));
        assert!(shadow_identity_residual(5, c(2.0, 0.0)).unwrap() <= 1e-14);
        assert!(shadow_identity_residual(2, c(0.0, 0.0)).unwrap() <= 1e-15);
        assert!(shadow_identity_residual(11051, c(0.5, 20.0)).unwrap() <= 1e-11);
    }

    #[test]
    fn pole_and_zero() {
        assert_eq!(eta_sum(10, c(1.0, 0.0)), Err(Error::Pole));
        assert_eq!(zeta_pq_sum(10, 1, 2, c(1.0, 0.0)), Err(Error::Pole));
        for v in [
            zeta_pq_sum(17, 1, 3, c(0.0, 0.0)),
            zeta_baseline_sum(17, c(0.0, 0.0)),
            eta_sum(17, c(0.0, 0.0)),
        ] {
            assert_eq!(v.unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(
            eta_sum(1000, c(-400.0, 0.0)),
            Err(Error::Overflow { .. })
        ));
        assert!(matches!(
            partial_zeta(1000, c(-400.0, 0.0)),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn diagonal_swap_equals_shadow_bitwise() {
        for s in [c(2.0, 0.0), c(0.5, 14.92), c(-1.5, 3.0)] {
            for p in [1, 2, 5] {
                let a = zeta_pq_sum(2049, p, p, s).unwrap();
                let b = eta_sum(2049, s).unwrap();
                assert_eq!(
                    (a.re.to_bits(), a.im.to_bits()),
                    (b.re.to_bits(), b.im.to_bits())
                );
            }
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let eval = SumEvaluator::new(SumSpec::baseline(3001).unwrap());
        let s = c(0.4, 14.1);
        let a = eval.eval(s).unwrap();
        let b = eval.eval(s.conj()).unwrap();
        assert_eq!(a, b.conj());
    }

    #[test]
    fn grid_axes() {
        let g = GridSpec::new((0.0, 1.0), (13.0, 34.0), 0.05, 0.05).unwrap();
        assert_eq!(g.re_values().len(), 21);
        assert_eq!(g.im_values().len(), 421);
        assert_eq!(*g.im_values().last().unwrap(), 13.0 + 420.0 * 0.05);
        let single = GridSpec::new((0.5, 0.6), (14.0, 14.5), 1.0, 1.0).unwrap();
        assert_eq!(
            (single.re_values(), single.im_values()),
            (vec![0.5], vec![14.0])
        );
        assert!(GridSpec::new((1.0, 0.0), (0.0, 1.0), 0.1, 0.1).is_err());
        assert!(GridSpec::new((0.0, 1.0), (0.0, 1.0), 0.0, 0.1).is_err());
    }

    #[test]
    fn one_node_scan_matches_point_eval() {
        let eval = SumEvaluator::new(SumSpec::permuted(500, 1, 2).unwrap());
        let g = GridSpec::new((0.5, 0.6), (14.0, 14.5), 1.0, 1.0).unwrap();
        let scan = strip_scan(&eval, &g).unwrap();
        assert_eq!(scan.cells.len(), 1);
        assert_eq!(
            scan.get(0, 0),
            Some(eval.eval(c(0.5, 14.0)).unwrap().norm())
        );
    }

    #[test]
    fn scan_flags_the_pole() {
        let eval = SumEvaluator::new(SumSpec::shadow(100).unwrap());
        let g = GridSpec::new((0.5, 1.5), (-0.5, 0.5), 0.5, 0.5).unwrap();
        let scan = strip_scan(&eval, &g).unwrap();
        assert_eq!(scan.get(1, 1), None);
        assert_eq!(scan.cells.iter().filter(|c| c.is_none()).count(), 1);
    }

    #[test]
    fn shadow_scan_near_two_is_smooth() {
        let eval = SumEvaluator::new(SumSpec::shadow(100_000).unwrap());
        let g = GridSpec::new((1.8, 2.2), (-0.2, 0.2), 0.1, 0.1).unwrap();
        let scan = strip_scan(&eval, &g).unwrap();
        for (r, &im) in scan.im_values.iter().enumerate() {
            for (col, &re) in scan.re_values.iter().enumerate() {
                let s = c(re, im);
                let limit = (2.0 * s / (s * s - 1.0)).norm();
                assert!((scan.get(r, col).unwrap() - limit).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn phase_trace_single_step() {
        let eval = SumEvaluator::new(SumSpec::baseline(1051).unwrap());
        let trace = phase_trace(&eval, 13.0, 34.0, 1).unwrap();
        let v = eval.eval(c(0.5, 13.0)).unwrap();
        assert_eq!(trace, vec![(v.re, v.im)]);
        assert!(phase_trace(&eval, 2.0, 1.0, 5).is_err());
    }

    #[test]
    fn shadow_trace_stays_away_from_origin() {
        let eval = SumEvaluator::new(SumSpec::shadow(11051).unwrap());
        let trace = phase_trace(&eval, 13.0, 34.0, 400).unwrap();
        let min = trace
            .iter()
            .map(|(a, b)| a.hypot(*b))
            .fold(f64::MAX, f64::min);
        // |2s/(s^2-1)| >= 0.05 on this segment.
        assert!(min > 0.04, "min |eta| = {min}");
    }

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("2+0i").unwrap(), c(2.0, 0.0));
        assert_eq!(parse_complex("0.5+14.92i").unwrap(), c(0.5, 14.92));
        assert_eq!(parse_complex("0.5-14.92i").unwrap(), c(0.5, -14.92));
        assert_eq!(parse_complex("-3").unwrap(), c(-3.0, 0.0));
        assert_eq!(parse_complex("-2i").unwrap(), c(0.0, -2.0));
        assert_eq!(parse_complex("1e-3+2e+1j").unwrap(), c(1e-3, 20.0));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("").is_err());
    }
}
