//! Text interchange formats.
//!
//! Every CSV file starts with a metadata block of `# key: value` lines,
//! followed by a header row and data rows. Floats are written with 17
//! significant digits so they parse back to the same `f64`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Spectrum, SpectrumFit, Window, LOW_FREQ_EXCLUSION};
use crate::sums::ComplexValue;
use crate::zeros::ZeroRecord;

pub const SCAN_HEADER: &str = "re_s,im_s,abs_zeta";
pub const PHASE_HEADER: &str = "re_s,im_s,re_zeta,im_zeta";
pub const ZERO_SERIES_HEADER: &str = "N,re_s,im_s,residual,converged";
pub const SPECTRUM_HEADER: &str = "freq,power";

pub const DETERMINISM_NOTE: &str =
    "sums use fixed-order chunked pairwise reduction (chunk 1024); data rows are identical for every worker count";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "nan".into())
}

/// Ordered `# key: value` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.push("tool", concat!("cfzeta ", env!("CARGO_PKG_VERSION")));
        m.push("command", command);
        m.push("determinism", DETERMINISM_NOTE);
        m
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let v = v.replace('\n', " ");
            writeln!(out, "# {k}: {v}").unwrap();
        }
        out
    }
}

/// Data lines for one scan row (fixed `im`), columns in ascending `re`.
pub fn scan_row_lines(re_values: &[f64], im: f64, row: &[Option<f64>]) -> String {
    let mut out = String::new();
    for (&re, &v) in re_values.iter().zip(row) {
        writeln!(out, "{},{},{}", fmt_f64(re), fmt_f64(im), fmt_opt(v)).unwrap();
    }
    out
}

pub fn phase_line(s: ComplexValue, value: (f64, f64)) -> String {
    format!(
        "{},{},{},{}\n",
        fmt_f64(s.re),
        fmt_f64(s.im),
        fmt_f64(value.0),
        fmt_f64(value.1)
    )
}

pub fn zero_record_line(r: &ZeroRecord) -> String {
    format!(
        "{},{},{},{},{}\n",
        r.n,
        fmt_f64(r.s_re),
        fmt_f64(r.s_im),
        fmt_f64(r.residual),
        r.converged
    )
}

pub fn spectrum_lines(spectrum: &Spectrum) -> String {
    let mut out = String::new();
    for (f, p) in spectrum.freqs.iter().zip(&spectrum.power) {
        writeln!(out, "{},{}", fmt_f64(*f), fmt_f64(*p)).unwrap();
    }
    out
}

/// Scalar summary of a slope fit, with the analysis choices spelled out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub n_bins: usize,
    pub series_len: usize,
    pub window: Window,
    pub detrend: String,
    pub low_freq_exclusion: f64,
    pub log_base: u32,
}

impl FitSummary {
    pub fn new(fit: &SpectrumFit, spectrum: &Spectrum) -> Self {
        Self {
            slope: fit.slope,
            intercept: fit.intercept,
            f_lo: fit.fit_band.0,
            f_hi: fit.fit_band.1,
            n_bins: fit.n_bins,
            series_len: spectrum.len,
            window: spectrum.window,
            detrend: "mean".into(),
            low_freq_exclusion: LOW_FREQ_EXCLUSION,
            log_base: 10,
        }
    }
}

/// A CSV body split into header names and rows, metadata lines skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::InvalidParameter("CSV has no header row".into()))?
            .split(',')
            .map(|h| h.trim().to_string())
            .collect();
        let rows: Vec<Vec<String>> = lines
            .map(|l| l.split(',').map(|f| f.trim().to_string()).collect())
            .collect();
        if let Some((i, _)) = rows
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != header.len())
        {
            return Err(Error::InvalidParameter(format!(
                "CSV row {} has the wrong number of fields",
                i + 1
            )));
        }
        Ok(Self { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidParameter(format!("CSV has no column {name:?}")))
    }

    pub fn f64_column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        self.rows
            .iter()
            .map(|r| {
                r[i].parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad number {:?}", r[i])))
            })
            .collect()
    }
}

/// Rebuilds zero records from a zero-series CSV (iteration counts are not stored).
pub fn parse_zero_series(text: &str, kind: crate::sums::SumKind) -> Result<Vec<ZeroRecord>> {
    let table = CsvTable::parse(text)?;
    if table.header.join(",") != ZERO_SERIES_HEADER {
        return Err(Error::InvalidParameter("not a zero-series CSV".into()));
    }
    let bad = |f: &str| Error::InvalidParameter(format!("bad zero-series field {f:?}"));
    table
        .rows
        .iter()
        .map(|r| {
            let num = |f: &String| f.parse::<f64>().map_err(|_| bad(f));
            Ok(ZeroRecord {
                n: r[0].parse().map_err(|_| bad(&r[0]))?,
                s_re: num(&r[1])?,
                s_im: num(&r[2])?,
                residual: num(&r[3])?,
                converged: r[4].parse().map_err(|_| bad(&r[4]))?,
                kind,
                iterations: 0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sums::SumKind;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn floats_round_trip(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn metadata_block() {
        let mut m = Metadata::new("scan");
        m.push("N", 10).push("note", "a\nb");
        let text = m.render();
        assert!(text.lines().all(|l| l.starts_with("# ")));
        assert!(text.contains("# N: 10\n") && text.contains("# note: a b\n"));
    }

    #[test]
    fn zero_series_round_trip() {
        let kind = SumKind::Permuted { p: 1, q: 2 };
        let rec = ZeroRecord {
            s_re: 0.4987654321,
            s_im: 14.92000001,
            residual: 1.25e-3,
            n: 9000,
            kind,
            iterations: 0,
            converged: true,
        };
        let text = format!(
            "{}{ZERO_SERIES_HEADER}\n{}",
            Metadata::new("zero-series").render(),
            zero_record_line(&rec)
        );
        assert_eq!(parse_zero_series(&text, kind).unwrap(), vec![rec]);
        let table = CsvTable::parse(&text).unwrap();
        assert_eq!(table.f64_column("im_s").unwrap(), vec![14.92000001]);
        assert!(table.f64_column("nope").is_err());
    }

    #[test]
    fn flagged_scan_cells() {
        let lines = scan_row_lines(&[0.5, 1.0], 0.0, &[Some(2.0), None]);
        assert_eq!(
            lines,
            "5.0000000000000000e-1,0.0000000000000000e0,2.0000000000000000e0\n\
             1.0000000000000000e0,0.0000000000000000e0,nan\n"
        );
    }
}
