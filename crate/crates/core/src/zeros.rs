//! Locating and refining zeros of the truncated sums.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nelder_mead::{nelder_mead, NelderMeadOptions};
use crate::sums::{strip_scan, ComplexValue, GridSpec, SumEvaluator, SumKind, SumSpec};
use crate::table::TableCache;

/// Where the first nontrivial zero of `zeta_{N;1,2}` sits.
pub const FIRST_ZERO_SEED: Complex64 = Complex64::new(0.5, 14.92);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    /// Simplex size (in both coordinates of `s`) at which refinement stops.
    pub tol: f64,
    pub max_iter: usize,
    pub initial_step: f64,
    /// Refinement is abandoned if the best point strays this far from the seed.
    pub max_radius: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 500,
            initial_step: 0.05,
            max_radius: 1.0,
        }
    }
}

/// Residual below which a refined minimum counts as a zero at `N >= 10^4`.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroRecord {
    pub s_re: f64,
    pub s_im: f64,
    /// `|sum|` at the refined point.
    pub residual: f64,
    pub n: u64,
    pub kind: SumKind,
    pub iterations: usize,
    pub converged: bool,
}

impl ZeroRecord {
    pub fn s(&self) -> ComplexValue {
        ComplexValue::new(self.s_re, self.s_im)
    }

    pub fn admitted(&self, threshold: f64) -> bool {
        self.converged && self.residual < threshold
    }
}

/// Minimizes `|sum(s)|^2` from `seed` with Nelder–Mead.
///
/// The record is returned whether or not the simplex converged; `converged`
/// is false when `max_iter` ran out or the search left `max_radius`.
pub fn refine_zero(
    eval: &SumEvaluator,
    seed: ComplexValue,
    opts: &RefineOptions,
) -> Result<ZeroRecord> {
    if opts.tol <= 0.0 || opts.initial_step <= 0.0 || opts.max_radius <= 0.0 {
        return Err(Error::InvalidParameter(
            "tol, initial_step and max_radius must be positive".into(),
        ));
    }
    eval.eval(seed)?;
    let objective = |x: &[f64; 2]| {
        eval.eval(ComplexValue::new(x[0], x[1]))
            .map(|v| v.norm_sqr())
            .unwrap_or(f64::INFINITY)
    };
    // Stop a tenth below tol so the reported point is well inside the
    // tolerance box rather than on its edge.
    let nm = NelderMeadOptions {
        initial_step: opts.initial_step,
        tol: 0.1 * opts.tol,
        max_iter: opts.max_iter,
    };
    let result = nelder_mead(objective, [seed.re, seed.im], &nm, |x| {
        (x[0] - seed.re).hypot(x[1] - seed.im) <= opts.max_radius
    });
    let spec = eval.spec();
    Ok(ZeroRecord {
        s_re: result.x[0],
        s_im: result.x[1],
        residual: result.f.sqrt(),
        n: spec.n,
        kind: spec.kind,
        iterations: result.iterations,
        converged: result.converged,
    })
}

/// True when `|sum|` at the four axis neighbours `s ± tol`, `s ± i tol` is
/// no smaller than the record's residual.
pub fn is_local_minimum(eval: &SumEvaluator, record: &ZeroRecord, tol: f64) -> bool {
    let s = record.s();
    [
        ComplexValue::new(tol, 0.0),
        ComplexValue::new(-tol, 0.0),
        ComplexValue::new(0.0, tol),
        ComplexValue::new(0.0, -tol),
    ]
    .iter()
    .all(|d| {
        eval.eval(s + d)
            .map(|v| v.norm() >= record.residual)
            .unwrap_or(true)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub s: ComplexValue,
    pub modulus: f64,
}

/// Interior grid nodes whose `|sum|` is below `threshold` and strictly below
/// all eight neighbours.
pub fn scan_zero_candidates(
    eval: &SumEvaluator,
    grid: &GridSpec,
    threshold: f64,
) -> Result<Vec<Candidate>> {
    let scan = strip_scan(eval, grid)?;
    let (rows, cols) = (scan.im_values.len(), scan.re_values.len());
    let mut out = Vec::new();
    for r in 1..rows.saturating_sub(1) {
        for c in 1..cols.saturating_sub(1) {
            let Some(v) = scan.get(r, c) else { continue };
            if v >= threshold {
                continue;
            }
            let is_min = (r - 1..=r + 1)
                .flat_map(|rr| (c - 1..=c + 1).map(move |cc| (rr, cc)))
                .filter(|&(rr, cc)| (rr, cc) != (r, c))
                .all(|(rr, cc)| scan.get(rr, cc).is_none_or(|n| v < n));
            if is_min {
                out.push(Candidate {
                    s: ComplexValue::new(scan.re_values[c], scan.im_values[r]),
                    modulus: v,
                });
            }
        }
    }
    Ok(out)
}

/// Refines several seeds independently, in parallel.
pub fn refine_many(
    eval: &SumEvaluator,
    seeds: &[ComplexValue],
    opts: &RefineOptions,
) -> Result<Vec<ZeroRecord>> {
    seeds
        .par_iter()
        .map(|&s| refine_zero(eval, s, opts))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroClass {
    /// Survives doubling `N` with a small residual and a stable location.
    Dominant,
    Artifact,
}

/// Re-refines `record` at `2N` and compares.
pub fn classify_zero(
    record: &ZeroRecord,
    opts: &RefineOptions,
    threshold: f64,
    cache: &TableCache,
) -> Result<ZeroClass> {
    let doubled = SumEvaluator::with_cache(SumSpec::new(2 * record.n, record.kind)?, cache);
    let again = refine_zero(&doubled, record.s(), opts)?;
    let stable = (again.s() - record.s()).norm() < 0.1;
    Ok(
        if record.admitted(threshold) && again.admitted(threshold) && stable {
            ZeroClass::Dominant
        } else {
            ZeroClass::Artifact
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum SeedPolicy {
    /// Start every `N` from the same seed.
    Fixed { seed: [f64; 2] },
    /// Start the first `N` from `seed`, later ones from the latest admitted zero.
    WarmStart { seed: [f64; 2] },
}

impl SeedPolicy {
    fn initial(&self) -> ComplexValue {
        let (SeedPolicy::Fixed { seed } | SeedPolicy::WarmStart { seed }) = self;
        ComplexValue::new(seed[0], seed[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroSeriesConfig {
    pub kind: SumKind,
    pub n_lo: u64,
    pub n_hi: u64,
    pub n_step: u64,
    pub seed: SeedPolicy,
    pub refine: RefineOptions,
    pub threshold: f64,
}

impl ZeroSeriesConfig {
    /// Warm-started series for `S_{p,q}` from the first-zero seed.
    pub fn permuted(p: usize, q: usize, n_lo: u64, n_hi: u64, n_step: u64) -> Self {
        Self {
            kind: SumKind::Permuted { p, q },
            n_lo,
            n_hi,
            n_step,
            seed: SeedPolicy::WarmStart {
                seed: [FIRST_ZERO_SEED.re, FIRST_ZERO_SEED.im],
            },
            refine: RefineOptions::default(),
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_lo == 0 || self.n_lo > self.n_hi || self.n_step == 0 {
            return Err(Error::InvalidParameter(
                "zero series needs 1 <= N_lo <= N_hi and step >= 1".into(),
            ));
        }
        SumSpec::new(self.n_lo, self.kind).map(|_| ())
    }

    pub fn n_values(&self) -> impl Iterator<Item = u64> {
        (self.n_lo..=self.n_hi).step_by(self.n_step as usize)
    }

    /// Seed for the next `N` given the records so far.
    pub fn next_seed(&self, previous: &[ZeroRecord]) -> ComplexValue {
        match self.seed {
            SeedPolicy::Fixed { .. } => self.seed.initial(),
            SeedPolicy::WarmStart { .. } => previous
                .iter()
                .rev()
                .find(|r| r.admitted(self.threshold))
                .map(ZeroRecord::s)
                .unwrap_or_else(|| self.seed.initial()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSeries {
    pub n_values: Vec<u64>,
    pub zeros: Vec<ZeroRecord>,
}

impl ZeroSeries {
    pub fn component(&self, imaginary: bool) -> Vec<f64> {
        self.zeros
            .iter()
            .map(|z| if imaginary { z.s_im } else { z.s_re })
            .collect()
    }
}

/// Tracks one zero across `N`, sequentially so warm starts are reproducible.
///
/// `resume` holds records already computed for a prefix of the `N` range;
/// `on_record` is called for every newly computed record, in order.
pub fn zero_series_with(
    cfg: &ZeroSeriesConfig,
    cache: &TableCache,
    resume: Vec<ZeroRecord>,
    mut on_record: impl FnMut(&ZeroRecord) -> Result<()>,
) -> Result<ZeroSeries> {
    cfg.validate()?;
    let mut zeros = resume;
    let n_values: Vec<u64> = cfg.n_values().collect();
    if zeros.len() > n_values.len()
        || zeros
            .iter()
            .zip(&n_values)
            .any(|(z, &n)| z.n != n || z.kind != cfg.kind)
    {
        return Err(Error::InvalidParameter(
            "resumed records do not match the configured N range".into(),
        ));
    }
    for &n in &n_values[zeros.len()..] {
        let spec = SumSpec::new(n, cfg.kind)?;
        let eval = SumEvaluator::with_cache(spec, cache);
        cache.evict(spec.n);
        let record = refine_zero(&eval, cfg.next_seed(&zeros), &cfg.refine)?;
        on_record(&record)?;
        zeros.push(record);
    }
    Ok(ZeroSeries { n_values, zeros })
}

pub fn zero_series(cfg: &ZeroSeriesConfig, cache: &TableCache) -> Result<ZeroSeries> {
    zero_series_with(cfg, cache, Vec::new(), |_| Ok(()))
}
