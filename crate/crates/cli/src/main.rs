//! `cfzeta` command-line harness.
//!
//! Every command validates its configuration before computing, echoes the
//! full configuration (defaults included) into a `# key: value` metadata
//! block, and writes floats with 17 significant digits. Long CSV outputs are
//! written row by row and can be continued with `--resume`.
//!
//! Exit status: 0 success, 1 computational error, 2 usage error.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cfzeta::cf::{cf_expand, cf_value, s_pq, Rational};
use cfzeta::mobius::{analytic_zeta_12, mobius_coeffs, SeriesTruncation};
use cfzeta::output::{
    fmt_f64, parse_zero_series, phase_line, scan_row_lines, spectrum_lines, zero_record_line,
    CsvTable, FitSummary, Metadata, PHASE_HEADER, SCAN_HEADER, ZERO_SERIES_HEADER,
};
use cfzeta::spectral::{default_band, fit_slope, power_spectrum, power_spectrum_windowed, Window};
use cfzeta::sums::{
    parse_complex, shadow_identity_residual, trace_parameters, ComplexValue, GridSpec,
    SumEvaluator, SumKind, SumSpec,
};
use cfzeta::table::{build_weights, TableCache, WeightKind};
use cfzeta::zeros::{
    refine_zero, zero_series_with, RefineOptions, SeedPolicy, ZeroSeriesConfig, DEFAULT_THRESHOLD,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(
    name = "cfzeta",
    version,
    about = "Zeta-like sums over continued-fraction digit permutations"
)]
#[command(allow_negative_numbers = true)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Continue an interrupted `scan` or `zero-series` output file.
    #[arg(long, global = true)]
    resume: bool,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "CFZETA_THREADS")]
    threads: Option<usize>,
    /// Directory for the abscissa weight-table cache.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one sum at one point.
    Eval(EvalArgs),
    /// |sum| on a rectangular grid of s values (CSV).
    Scan(ScanArgs),
    /// Real and imaginary parts along s = 1/2 + i t (CSV).
    Phase(PhaseArgs),
    /// Refine one zero from a seed (JSON).
    FindZero(FindZeroArgs),
    /// Track one zero across a range of N (CSV).
    ZeroSeries(ZeroSeriesArgs),
    /// Power spectrum and log-log slope of a zero-series component.
    Spectrum(SpectrumArgs),
    /// zeta_{1,2} from the exact Möbius-piece decomposition (JSON).
    Analytic(AnalyticArgs),
    /// Run the exact-identity checks.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum KindName {
    Permuted,
    Baseline,
    Shadow,
    PartialZeta,
}

#[derive(Args, Serialize)]
struct KindArgs {
    #[arg(long, value_enum, default_value_t = KindName::Permuted)]
    kind: KindName,
    /// First swapped digit position (permuted sums).
    #[arg(long, default_value_t = 1)]
    p: usize,
    /// Second swapped digit position (permuted sums).
    #[arg(long, default_value_t = 2)]
    q: usize,
}

impl KindArgs {
    fn kind(&self) -> SumKind {
        match self.kind {
            KindName::Permuted => SumKind::Permuted {
                p: self.p,
                q: self.q,
            },
            KindName::Baseline => SumKind::Baseline,
            KindName::Shadow => SumKind::Shadow,
            KindName::PartialZeta => SumKind::PartialZeta,
        }
    }
}

#[derive(Args, Serialize)]
struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    kind: KindArgs,
    /// Number of midpoint nodes (or terms of the partial zeta sum).
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: u64,
    /// Point of evaluation, e.g. 2, 0.5+14.1i, 3-2i.
    #[arg(long)]
    s: String,
    /// Print JSON instead of plain text.
    #[arg(long)]
    #[serde(skip)]
    json: bool,
}

#[derive(Args, Serialize)]
struct ScanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    kind: KindArgs,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: u64,
    #[arg(long, default_value_t = 0.0)]
    re_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    re_hi: f64,
    #[arg(long, default_value_t = 13.0)]
    im_lo: f64,
    #[arg(long, default_value_t = 34.0)]
    im_hi: f64,
    #[arg(long, default_value_t = 0.05)]
    re_step: f64,
    #[arg(long, default_value_t = 0.05)]
    im_step: f64,
}

#[derive(Args, Serialize)]
struct PhaseArgs {
    #[command(flatten)]
    #[serde(flatten)]
    kind: KindArgs,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: u64,
    #[arg(long, default_value_t = 0.0)]
    t_lo: f64,
    #[arg(long, default_value_t = 40.0)]
    t_hi: f64,
    /// Number of equally spaced t values, both ends included.
    #[arg(long, default_value_t = 4001)]
    steps: usize,
}

#[derive(Args, Serialize)]
struct RefineArgs {
    /// Simplex size at which refinement stops.
    #[arg(long, default_value_t = RefineOptions::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = RefineOptions::default().max_iter)]
    max_iter: usize,
    #[arg(long, default_value_t = RefineOptions::default().initial_step)]
    initial_step: f64,
    /// Refinement fails if it strays this far from its seed.
    #[arg(long, default_value_t = RefineOptions::default().max_radius)]
    max_radius: f64,
    /// Residual |sum| below which a converged minimum counts as a zero.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
}

impl RefineArgs {
    fn options(&self) -> RefineOptions {
        RefineOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            initial_step: self.initial_step,
            max_radius: self.max_radius,
        }
    }
}

#[derive(Args, Serialize)]
struct FindZeroArgs {
    #[command(flatten)]
    #[serde(flatten)]
    kind: KindArgs,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: u64,
    #[arg(long, default_value = "0.5+14.92i")]
    seed: String,
    #[command(flatten)]
    #[serde(flatten)]
    refine: RefineArgs,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SeedPolicyName {
    /// Every N starts from --seed.
    Fixed,
    /// Each N starts from the latest admitted zero.
    WarmStart,
}

#[derive(Args, Serialize)]
struct ZeroSeriesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    kind: KindArgs,
    #[arg(long = "N-lo")]
    #[serde(rename = "N_lo")]
    n_lo: u64,
    #[arg(long = "N-hi")]
    #[serde(rename = "N_hi")]
    n_hi: u64,
    #[arg(long = "N-step", default_value_t = 1)]
    #[serde(rename = "N_step")]
    n_step: u64,
    #[arg(long, default_value = "0.5+14.92i")]
    seed: String,
    #[arg(long, value_enum, default_value_t = SeedPolicyName::WarmStart)]
    seed_policy: SeedPolicyName,
    #[command(flatten)]
    #[serde(flatten)]
    refine: RefineArgs,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Component {
    Re,
    Im,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum WindowName {
    Rectangular,
    Hann,
}

#[derive(Args, Serialize)]
struct SpectrumArgs {
    /// Zero-series CSV to analyse.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Component::Im)]
    component: Component,
    #[arg(long, value_enum, default_value_t = WindowName::Rectangular)]
    window: WindowName,
    /// Lower edge of the fit band (default: skip the lowest 5% of bins).
    #[arg(long)]
    f_lo: Option<f64>,
    /// Upper edge of the fit band (default: Nyquist).
    #[arg(long)]
    f_hi: Option<f64>,
}

#[derive(Args, Serialize)]
struct AnalyticArgs {
    #[arg(long, default_value = "2")]
    s: String,
    #[arg(long, default_value_t = SeriesTruncation::default().a1max)]
    a1max: u64,
    #[arg(long, default_value_t = SeriesTruncation::default().a2max)]
    a2max: u64,
    /// Initial number of series terms per cell (doubled until converged).
    #[arg(long, default_value_t = SeriesTruncation::default().kmax)]
    kmax: usize,
}

#[derive(Args, Serialize)]
struct SelftestArgs {
    /// Determinant sweep bound: all pieces with a1, a2 <= max-a.
    #[arg(long, default_value_t = 100)]
    max_a: u64,
}

/// Why a command failed; decides the exit status.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Compute(String),
}

type CmdResult<T = ()> = Result<T, Failure>;

impl From<cfzeta::Error> for Failure {
    fn from(e: cfzeta::Error) -> Self {
        match e {
            cfzeta::Error::InvalidParameter(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Compute(format!("I/O error: {e}"))
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn complex_arg(name: &str, text: &str) -> CmdResult<ComplexValue> {
    parse_complex(text).map_err(|_| {
        usage(format!(
            "--{name}: cannot parse {text:?} as a complex number"
        ))
    })
}

/// Metadata block echoing every serialized configuration field.
fn metadata(command: &str, config: &impl Serialize) -> Metadata {
    let mut m = Metadata::new(command);
    if let Ok(Value::Object(fields)) = serde_json::to_value(config) {
        for (k, v) in fields {
            match v {
                Value::String(s) => m.push(k, s),
                Value::Null => m.push(k, "default"),
                other => m.push(k, other),
            };
        }
    }
    m
}

fn metadata_json(m: &Metadata) -> Value {
    Value::Object(
        m.entries()
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect::<Map<_, _>>(),
    )
}

fn cache(global: &Global) -> TableCache {
    match &global.cache_dir {
        Some(dir) => TableCache::on_disk(dir),
        None => TableCache::in_memory(),
    }
}

fn write_text(out: &Option<PathBuf>, text: &str) -> CmdResult {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// A CSV sink that writes a preamble (metadata + header) and then whole
/// records, optionally continuing a file left behind by an interrupted run.
struct CsvSink {
    writer: Box<dyn Write>,
    /// Data lines already present when resuming (complete records only).
    resumed: String,
}

impl CsvSink {
    fn open(global: &Global, preamble: &str, lines_per_record: usize) -> CmdResult<Self> {
        if global.resume {
            let path = global
                .out
                .as_ref()
                .ok_or_else(|| usage("--resume needs --out"))?;
            if path.exists() {
                return Self::resume(path, preamble, lines_per_record);
            }
        }
        let mut writer: Box<dyn Write> = match &global.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        writer.write_all(preamble.as_bytes())?;
        writer.flush()?;
        Ok(Self {
            writer,
            resumed: String::new(),
        })
    }

    fn resume(path: &Path, preamble: &str, lines_per_record: usize) -> CmdResult<Self> {
        let text = fs::read_to_string(path)?;
        let Some(data) = text.strip_prefix(preamble) else {
            return Err(usage(format!(
                "{} was written with a different configuration; refusing to resume",
                path.display()
            )));
        };
        // Keep complete lines only, then whole records only.
        let complete = &data[..data.rfind('\n').map_or(0, |i| i + 1)];
        let lines = complete.lines().count();
        let keep_lines = lines - lines % lines_per_record;
        let keep_bytes: usize = complete
            .split_inclusive('\n')
            .take(keep_lines)
            .map(str::len)
            .sum();
        let file = OpenOptions::new().write(true).open(path)?;
        file.set_len((preamble.len() + keep_bytes) as u64)?;
        drop(file);
        let writer = BufWriter::new(OpenOptions::new().append(true).open(path)?);
        eprintln!(
            "resuming {}: {} complete records kept",
            path.display(),
            keep_lines / lines_per_record
        );
        Ok(Self {
            writer: Box::new(writer),
            resumed: complete[..keep_bytes].to_string(),
        })
    }

    fn records_done(&self, lines_per_record: usize) -> usize {
        self.resumed.lines().count() / lines_per_record
    }

    fn record(&mut self, text: &str) -> CmdResult {
        self.writer.write_all(text.as_bytes())?;
        self.writer.flush()?;
        Ok(())
    }
}

fn partial(global: &Global, done: usize, total: usize, err: Failure) -> Failure {
    let target = global
        .out
        .as_ref()
        .map_or("standard output".to_string(), |p| p.display().to_string());
    eprintln!("output is partial: {done} of {total} records written to {target}; rerun with --resume to continue");
    err
}

fn cmd_eval(global: &Global, args: &EvalArgs) -> CmdResult {
    let spec = SumSpec::new(args.n, args.kind.kind())?;
    let s = complex_arg("s", &args.s)?;
    let value = SumEvaluator::with_cache(spec, &cache(global)).eval(s)?;
    let meta = metadata("eval", args);
    let text = if args.json {
        let doc = json!({
            "metadata": metadata_json(&meta),
            "s": [s.re, s.im],
            "value": [value.re, value.im],
            "abs": value.norm(),
        });
        format!(
            "{}\n",
            serde_json::to_string_pretty(&doc).expect("serializable")
        )
    } else {
        format!(
            "{}{} {}\n",
            meta.render(),
            fmt_f64(value.re),
            fmt_f64(value.im)
        )
    };
    write_text(&global.out, &text)
}

fn cmd_scan(global: &Global, args: &ScanArgs) -> CmdResult {
    let spec = SumSpec::new(args.n, args.kind.kind())?;
    let grid = GridSpec::new(
        (args.re_lo, args.re_hi),
        (args.im_lo, args.im_hi),
        args.re_step,
        args.im_step,
    )?;
    let re_values = grid.re_values();
    let im_values = grid.im_values();
    let mut meta = metadata("scan", args);
    meta.push("columns", re_values.len())
        .push("rows", im_values.len());
    let preamble = format!("{}{SCAN_HEADER}\n", meta.render());
    let mut sink = CsvSink::open(global, &preamble, re_values.len())?;
    let eval = SumEvaluator::with_cache(spec, &cache(global));
    let start = sink.records_done(re_values.len());
    for (row, &im) in im_values.iter().enumerate().skip(start) {
        let cells: Vec<Option<f64>> = re_values
            .par_iter()
            .map(|&re| eval.eval(ComplexValue::new(re, im)).ok().map(|v| v.norm()))
            .collect();
        sink.record(&scan_row_lines(&re_values, im, &cells))
            .map_err(|e| partial(global, row, im_values.len(), e))?;
    }
    Ok(())
}

fn cmd_phase(global: &Global, args: &PhaseArgs) -> CmdResult {
    let spec = SumSpec::new(args.n, args.kind.kind())?;
    let ts = trace_parameters(args.t_lo, args.t_hi, args.steps)?;
    let eval = SumEvaluator::with_cache(spec, &cache(global));
    let values: Vec<ComplexValue> = ts
        .par_iter()
        .map(|&t| eval.eval(ComplexValue::new(0.5, t)))
        .collect::<Result<_, _>>()?;
    let mut text = format!("{}{PHASE_HEADER}\n", metadata("phase", args).render());
    for (&t, v) in ts.iter().zip(&values) {
        text.push_str(&phase_line(ComplexValue::new(0.5, t), (v.re, v.im)));
    }
    write_text(&global.out, &text)
}

fn cmd_find_zero(global: &Global, args: &FindZeroArgs) -> CmdResult {
    let spec = SumSpec::new(args.n, args.kind.kind())?;
    let seed = complex_arg("seed", &args.seed)?;
    let eval = SumEvaluator::with_cache(spec, &cache(global));
    let record = refine_zero(&eval, seed, &args.refine.options())?;
    let admitted = record.admitted(args.refine.threshold);
    if !admitted {
        eprintln!(
            "warning: no zero admitted (converged: {}, residual {:.3e}, threshold {})",
            record.converged, record.residual, args.refine.threshold
        );
    }
    let doc = json!({
        "metadata": metadata_json(&metadata("find-zero", args)),
        "record": record,
        "admitted": admitted,
    });
    write_text(
        &global.out,
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&doc).expect("serializable")
        ),
    )
}

fn cmd_zero_series(global: &Global, args: &ZeroSeriesArgs) -> CmdResult {
    let seed = complex_arg("seed", &args.seed)?;
    let seed = [seed.re, seed.im];
    let cfg = ZeroSeriesConfig {
        kind: args.kind.kind(),
        n_lo: args.n_lo,
        n_hi: args.n_hi,
        n_step: args.n_step,
        seed: match args.seed_policy {
            SeedPolicyName::Fixed => SeedPolicy::Fixed { seed },
            SeedPolicyName::WarmStart => SeedPolicy::WarmStart { seed },
        },
        refine: args.refine.options(),
        threshold: args.refine.threshold,
    };
    cfg.validate()?;
    let total = cfg.n_values().count();
    let preamble = format!(
        "{}{ZERO_SERIES_HEADER}\n",
        metadata("zero-series", args).render()
    );
    let mut sink = CsvSink::open(global, &preamble, 1)?;
    let resumed = if sink.resumed.is_empty() {
        Vec::new()
    } else {
        parse_zero_series(&format!("{ZERO_SERIES_HEADER}\n{}", sink.resumed), cfg.kind)?
    };
    let mut done = resumed.len();
    let result = zero_series_with(&cfg, &cache(global), resumed, |record| {
        sink.record(&zero_record_line(record))
            .map_err(|_| cfzeta::Error::Domain("cannot write output".into()))?;
        done += 1;
        Ok(())
    });
    let series = result.map_err(|e| partial(global, done, total, e.into()))?;
    let admitted = series
        .zeros
        .iter()
        .filter(|z| z.admitted(cfg.threshold))
        .count();
    eprintln!("{admitted} of {total} refinements admitted as zeros");
    Ok(())
}

fn cmd_spectrum(global: &Global, args: &SpectrumArgs) -> CmdResult {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| usage(format!("cannot read {}: {e}", args.input.display())))?;
    let table = CsvTable::parse(&text)?;
    let column = match args.component {
        Component::Re => "re_s",
        Component::Im => "im_s",
    };
    let series = table.f64_column(column)?;
    let window = match args.window {
        WindowName::Rectangular => Window::Rectangular,
        WindowName::Hann => Window::Hann,
    };
    let spectrum = power_spectrum_windowed(&series, window)?;
    let (lo, hi) = default_band(&spectrum);
    let band = (args.f_lo.unwrap_or(lo), args.f_hi.unwrap_or(hi));
    let fit = fit_slope(&spectrum, band)?;
    let meta = metadata("spectrum", args);
    if let Some(path) = &global.out {
        let csv = format!(
            "{}{}\n{}",
            meta.render(),
            cfzeta::output::SPECTRUM_HEADER,
            spectrum_lines(&spectrum)
        );
        fs::write(path, csv)?;
    }
    let doc = json!({
        "metadata": metadata_json(&meta),
        "fit": FitSummary::new(&fit, &spectrum),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).expect("serializable")
    );
    Ok(())
}

fn cmd_analytic(global: &Global, args: &AnalyticArgs) -> CmdResult {
    let s = complex_arg("s", &args.s)?;
    let trunc = SeriesTruncation {
        kmax: args.kmax,
        a1max: args.a1max,
        a2max: args.a2max,
    };
    let result = analytic_zeta_12(s, &trunc)?;
    let doc = json!({
        "metadata": metadata_json(&metadata("analytic", args)),
        "s": [s.re, s.im],
        "value": [result.value.re, result.value.im],
        "integral": [result.integral.re, result.integral.im],
        "last_shell": result.last_shell,
        "cells": result.cells,
        "max_kmax_used": result.max_kmax_used,
        "unconverged_cells": result.unconverged_cells,
    });
    write_text(
        &global.out,
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&doc).expect("serializable")
        ),
    )
}

type Check = Result<String, String>;

fn check_round_trip() -> Check {
    let mut count = 0;
    for big_n in [10i64, 1000] {
        for n in 0..big_n {
            let x = Rational::new((2 * n + 1).into(), (2 * big_n).into());
            let e = cf_expand(&x).map_err(|e| e.to_string())?;
            if cf_value(&e) != x || !e.is_canonical() {
                return Err(format!("round trip failed at {x}"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} abscissas"))
}

/// All rationals num/den with den <= 60 and all position pairs within the
/// expansion. Swaps that leave a 1 in last place collapse to a shorter
/// expansion and are not invertible, so they are counted and skipped.
fn check_involution() -> Check {
    let (mut checked, mut collapsed) = (0, 0);
    for den in 1i64..=60 {
        for num in 1..=den {
            let x = Rational::new(num.into(), den.into());
            let digits = cf_expand(&x)
                .map_err(|e| e.to_string())?
                .to_u64_digits()
                .unwrap();
            let len = digits.len();
            for p in 1..=len + 1 {
                for q in 1..=len + 1 {
                    let last_becomes_one = (p == len && q <= len && digits[q - 1] == 1)
                        || (q == len && p <= len && digits[p - 1] == 1);
                    if p != q && last_becomes_one {
                        collapsed += 1;
                        continue;
                    }
                    let once = s_pq(&x, p, q).map_err(|e| e.to_string())?;
                    if s_pq(&once, p, q).map_err(|e| e.to_string())? != x {
                        return Err(format!("S_{{{p},{q}}} is not an involution at {x}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!(
        "{checked} swaps ({collapsed} collapsing swaps skipped)"
    ))
}

fn check_determinants(max_a: u64) -> Check {
    for a1 in 1..=max_a {
        for a2 in 1..=max_a {
            let piece = mobius_coeffs(a1, a2).map_err(|e| e.to_string())?;
            if piece.det() != 1.into() {
                return Err(format!("det = {} at ({a1},{a2})", piece.det()));
            }
        }
    }
    Ok(format!("{} pieces, all det = 1", max_a * max_a))
}

fn check_shadow() -> Check {
    let mut worst: f64 = 0.0;
    for n in [2u64, 10, 100, 1001] {
        for re in [-2.0, -0.5, 0.5, 2.0, 3.0] {
            for im in [0.0, 7.5, 14.13, 34.0] {
                let r = shadow_identity_residual(n, ComplexValue::new(re, im))
                    .map_err(|e| e.to_string())?;
                worst = worst.max(r);
            }
        }
    }
    if worst <= 1e-12 {
        Ok(format!("max residual {worst:.2e}"))
    } else {
        Err(format!("max residual {worst:.2e} exceeds 1e-12"))
    }
}

fn check_parseval() -> Check {
    let series: Vec<f64> = (0..1000)
        .map(|i| {
            let t = i as f64;
            (0.37 * t).sin() + 0.01 * t + ((i * 7919) % 13) as f64 / 13.0
        })
        .collect();
    let spectrum = power_spectrum(&series).map_err(|e| e.to_string())?;
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let ss: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
    let rel = (spectrum.power.iter().sum::<f64>() - ss).abs() / ss;
    if rel < 1e-10 {
        Ok(format!("relative error {rel:.2e}"))
    } else {
        Err(format!("relative error {rel:.2e}"))
    }
}

/// Writes a table to disk, corrupts it, and checks that a fresh cache
/// rejects the file and rebuilds identical weights.
fn check_cache(dir: &Path) -> Check {
    let kind = WeightKind::Swap { p: 1, q: 2 };
    let n = 2000;
    let expected = build_weights(n, kind);
    let first = TableCache::on_disk(dir);
    let path = first.path_for(n, kind).expect("disk cache has paths");
    let _ = first.weights(n, kind);
    let mut bytes = fs::read(&path).map_err(|e| format!("cache file not written: {e}"))?;
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x5a;
    fs::write(&path, &bytes).map_err(|e| e.to_string())?;
    let rebuilt = TableCache::on_disk(dir).weights(n, kind);
    let identical = rebuilt.len() == expected.len()
        && rebuilt
            .iter()
            .zip(&expected)
            .all(|(a, b)| a.to_bits() == b.to_bits());
    let rewritten = fs::read(&path).map_err(|e| e.to_string())? != bytes;
    if identical && rewritten {
        Ok("corrupted table rejected and rebuilt".into())
    } else {
        Err(format!(
            "rebuilt identical: {identical}, file rewritten: {rewritten}"
        ))
    }
}

fn cmd_selftest(global: &Global, args: &SelftestArgs) -> CmdResult {
    if args.max_a == 0 {
        return Err(usage("--max-a must be >= 1"));
    }
    let scratch;
    let cache_dir = match &global.cache_dir {
        Some(dir) => dir.clone(),
        None => {
            scratch = std::env::temp_dir().join(format!("cfzeta-selftest-{}", std::process::id()));
            scratch.clone()
        }
    };
    let checks: Vec<(&str, Check)> = vec![
        ("cf round trip", check_round_trip()),
        ("swap involution", check_involution()),
        ("determinant sweep", check_determinants(args.max_a)),
        ("shadow identity", check_shadow()),
        ("parseval", check_parseval()),
        ("cache corruption", check_cache(&cache_dir)),
    ];
    if global.cache_dir.is_none() {
        let _ = fs::remove_dir_all(&cache_dir);
    }
    let mut text = metadata("selftest", args).render();
    let mut failed = 0;
    for (name, outcome) in &checks {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        text.push_str(&format!("{tag} {name}: {detail}\n"));
    }
    write_text(&global.out, &text)?;
    if failed > 0 {
        return Err(Failure::Compute(format!(
            "{failed} self-test checks failed"
        )));
    }
    Ok(())
}

fn run(cli: &Cli) -> CmdResult {
    let g = &cli.global;
    if g.resume && !matches!(cli.command, Command::Scan(_) | Command::ZeroSeries(_)) {
        return Err(usage("--resume applies to scan and zero-series only"));
    }
    match &cli.command {
        Command::Eval(a) => cmd_eval(g, a),
        Command::Scan(a) => cmd_scan(g, a),
        Command::Phase(a) => cmd_phase(g, a),
        Command::FindZero(a) => cmd_find_zero(g, a),
        Command::ZeroSeries(a) => cmd_zero_series(g, a),
        Command::Spectrum(a) => cmd_spectrum(g, a),
        Command::Analytic(a) => cmd_analytic(g, a),
        Command::Selftest(a) => cmd_selftest(g, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.global.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
