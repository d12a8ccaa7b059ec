//! Power spectra of zero-location series and log-log slope fits.
//!
//! The periodogram is one-sided and normalized so that the total power equals
//! `sum_j (x_j - mean)^2`, i.e. `len * variance`. Fits are ordinary least
//! squares in `log10 f`, `log10 P`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SERIES_LEN: usize = 8;
pub const MIN_FIT_BINS: usize = 8;
/// Fraction of the lowest positive-frequency bins left out of the default fit band.
pub const LOW_FREQ_EXCLUSION: f64 = 0.05;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

/// One-sided spectrum; `freqs[k] = k / len` cycles per sample, `k = 0..=len/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    pub len: usize,
    pub window: Window,
}

pub fn power_spectrum(series: &[f64]) -> Result<Spectrum> {
    power_spectrum_windowed(series, Window::Rectangular)
}

pub fn power_spectrum_windowed(series: &[f64], window: Window) -> Result<Spectrum> {
    let n = series.len();
    if n < MIN_SERIES_LEN {
        return Err(Error::SeriesTooShort {
            len: n,
            min: MIN_SERIES_LEN,
        });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = series
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let w = match window {
                Window::Rectangular => 1.0,
                Window::Hann => {
                    0.5 - 0.5 * (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos()
                }
            };
            Complex64::new((x - mean) * w, 0.0)
        })
        .collect();
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut buf);

    let half = n / 2;
    let freqs = (0..=half).map(|k| k as f64 / n as f64).collect();
    let power = (0..=half)
        .map(|k| {
            let p = buf[k].norm_sqr() / n as f64;
            // Bins other than DC and (for even n) Nyquist have a mirror image.
            if k == 0 || (n.is_multiple_of(2) && k == half) {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    Ok(Spectrum {
        freqs,
        power,
        len: n,
        window,
    })
}

/// Positive-frequency band with the lowest [`LOW_FREQ_EXCLUSION`] of bins dropped.
pub fn default_band(spectrum: &Spectrum) -> (f64, f64) {
    let positive = spectrum.freqs.len().saturating_sub(1);
    let skip = (LOW_FREQ_EXCLUSION * positive as f64).ceil() as usize;
    let lo = (1 + skip).min(spectrum.freqs.len() - 1);
    (spectrum.freqs[lo], *spectrum.freqs.last().unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFit {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    pub slope: f64,
    /// Intercept of `log10 P = intercept + slope * log10 f`.
    pub intercept: f64,
    pub fit_band: (f64, f64),
    pub n_bins: usize,
}

/// Least-squares line through `(log10 f, log10 P)` for bins with
/// `f_lo <= f <= f_hi`, `f > 0` and `P > 0`.
pub fn fit_slope(spectrum: &Spectrum, band: (f64, f64)) -> Result<SpectrumFit> {
    let (f_lo, f_hi) = band;
    let points: Vec<(f64, f64)> = spectrum
        .freqs
        .iter()
        .zip(&spectrum.power)
        .filter(|(&f, &p)| f > 0.0 && f >= f_lo && f <= f_hi && p > 0.0)
        .map(|(f, p)| (f.log10(), p.log10()))
        .collect();
    if points.len() < MIN_FIT_BINS {
        return Err(Error::EmptyBand {
            f_lo,
            f_hi,
            bins: points.len(),
            min: MIN_FIT_BINS,
        });
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    Ok(SpectrumFit {
        freqs: spectrum.freqs.clone(),
        power: spectrum.power.clone(),
        slope,
        intercept: my - slope * mx,
        fit_band: band,
        n_bins: points.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub freq: f64,
    /// `1 / freq`, in samples.
    pub period: f64,
    pub power: f64,
}

/// The `count` strongest positive-frequency bins that exceed both neighbours.
/// Purely diagnostic.
pub fn spectral_peaks(spectrum: &Spectrum, count: usize) -> Vec<Peak> {
    let p = &spectrum.power;
    let mut peaks: Vec<Peak> = (1..p.len().saturating_sub(1))
        .filter(|&k| p[k] > p[k - 1] && p[k] > p[k + 1])
        .map(|k| Peak {
            freq: spectrum.freqs[k],
            period: 1.0 / spectrum.freqs[k],
            power: p[k],
        })
        .collect();
    peaks.sort_by(|a, b| b.power.total_cmp(&a.power));
    peaks.truncate(count);
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoid_has_one_dominant_bin() {
        let n = 1024;
        let k0 = 37;
        let series: Vec<f64> = (0..n)
            .map(|j| (2.0 * std::f64::consts::PI * k0 as f64 * j as f64 / n as f64).sin())
            .collect();
        let spec = power_spectrum(&series).unwrap();
        let (argmax, _) = spec
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(argmax, k0);
        let rest: f64 = spec
            .power
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != k0)
            .map(|(_, p)| p)
            .sum();
        assert!(rest < 1e-20 * spec.power[k0].max(1.0) + 1e-18);
        let peaks = spectral_peaks(&spec, 1);
        assert_eq!(peaks[0].freq, k0 as f64 / n as f64);
    }

    #[test]
    fn constant_series_has_no_power() {
        let spec = power_spectrum(&[3.5; 64]).unwrap();
        assert!(spec.power.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn short_series_is_rejected() {
        assert!(matches!(
            power_spectrum(&[1.0; 7]),
            Err(Error::SeriesTooShort { len: 7, .. })
        ));
    }

    #[test]
    fn parseval_odd_and_even_lengths() {
        for n in [64usize, 101] {
            let series: Vec<f64> = (0..n)
                .map(|j| ((j * j) as f64 * 0.013).sin() + 0.1 * j as f64)
                .collect();
            let spec = power_spectrum(&series).unwrap();
            let mean = series.iter().sum::<f64>() / n as f64;
            let ss: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
            let total: f64 = spec.power.iter().sum();
            assert!((total - ss).abs() / ss < 1e-10);
        }
    }

    #[test]
    fn band_and_fit_errors() {
        let spec = power_spectrum(&(0..64).map(|j| (j as f64).sin()).collect::<Vec<_>>()).unwrap();
        let (lo, hi) = default_band(&spec);
        assert_eq!(hi, 0.5);
        assert_eq!(lo, spec.freqs[3]);
        assert!(matches!(
            fit_slope(&spec, (0.2, 0.21)),
            Err(Error::EmptyBand { .. })
        ));
    }

    #[test]
    fn exact_power_law_is_recovered() {
        // Power exactly proportional to f^-1 gives slope -1 to rounding.
        let n = 512;
        let mut spec = power_spectrum(&vec![0.0; n]).unwrap();
        for (f, p) in spec.freqs.iter().zip(spec.power.iter_mut()) {
            *p = if *f > 0.0 { 3.0 / f } else { 0.0 };
        }
        let fit = fit_slope(&spec, default_band(&spec)).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.log10()).abs() < 1e-12);
    }
}
