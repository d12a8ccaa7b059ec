//! Zeta-like functions built from continued-fraction digit permutations.
//!
//! For `S_{p,q}`, the map that exchanges the `p`-th and `q`-th continued
//! fraction digits of `x`, the crate evaluates
//!
//! ```text
//! zeta_{p,q}(s) = s/(s-1) - s * integral_0^1 S_{p,q}(x) x^(s-1) dx
//! ```
//!
//! by midpoint sums over exact rational abscissas ([`sums`]), and for
//! `S_{1,2}` by summing exact Möbius pieces ([`mobius`]). [`zeros`] tracks
//! zeros of the truncated sums and [`spectral`] analyses the noise in their
//! locations.

pub mod cf;
pub mod error;
pub mod mobius;
pub mod nelder_mead;
pub mod output;
pub mod quadrature;
pub mod reduce;
pub mod spectral;
pub mod sums;
pub mod table;
pub mod zeros;

pub use cf::{cf_expand, cf_value, gauss_map, s_pq, swap_digits, CfExpansion, Rational};
pub use error::{Error, Result};
pub use mobius::{
    analytic_zeta_12, f_series, mobius_cell_integral, mobius_coeffs, MobiusPiece, SeriesTruncation,
};
pub use spectral::{fit_slope, power_spectrum, SpectrumFit};
pub use sums::{
    eta_sum, partial_zeta, phase_trace, shadow_identity_residual, strip_scan, zeta_baseline_sum,
    zeta_pq_sum, ComplexValue, GridSpec, SumEvaluator, SumKind, SumSpec,
};
pub use table::TableCache;
pub use zeros::{
    refine_zero, scan_zero_candidates, zero_series, RefineOptions, ZeroRecord, ZeroSeries,
};
