//! Command-line front end: `add-noise`, `denoise`, `metrics` and `benchmark`.
//!
//! Set `SURESHRINK_THREADS` to cap the number of worker threads. Output files
//! and CSV rows do not depend on the worker count.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::bss::{write_round_csv, BssConfig, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::image::{load_pgm, save_pgm, GrayImage};
use crate::metrics::{format_psnr, quality};
use crate::nlm::{bandwidth_from_fraction, nlm_denoise, NlmParams};
use crate::noise::{add_gaussian, estimate_sigma, NoiseSpec};
use crate::pipeline::{denoise, shrink, Denoised, Method};

pub const THREADS_ENV: &str = "SURESHRINK_THREADS";

pub const BENCHMARK_HEADER: &str =
    "image,sigma,patch,search,h_abs,h_frac,method,seed,psnr_db,ssim,nlm_s,sure_s,bss_round_s,bss_rounds";

pub const METRICS_HEADER: &str = "mse,psnr_db,ssim";

#[derive(Debug, Parser)]
#[command(name = "sureshrink", version, about = "NLM denoising with blockwise SURE shrinkage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Add seeded Gaussian noise to a PGM image.
    AddNoise(AddNoiseArgs),
    /// Denoise a PGM image.
    Denoise(DenoiseArgs),
    /// Compare two PGM images (MSE, PSNR, SSIM).
    Metrics(MetricsArgs),
    /// Noise a clean image and sweep methods and bandwidths.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
struct AddNoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct NlmArgs {
    /// Patch side length (odd).
    #[arg(long, default_value_t = 3)]
    patch: usize,
    /// Search window side length (odd).
    #[arg(long, default_value_t = 15)]
    search: usize,
    /// Convergence tolerance of the shrinkage rounds.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Debug, Args)]
struct DenoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Noise standard deviation; estimated from the input when omitted.
    #[arg(long)]
    sigma: Option<f64>,
    #[command(flatten)]
    nlm: NlmArgs,
    #[arg(long, default_value = "bss")]
    method: String,
    /// Absolute bandwidth, or `auto` for |P| sigma^2 / 2.
    #[arg(long, conflicts_with = "h_frac")]
    h: Option<String>,
    /// Bandwidth as a fraction of |P| sigma^2.
    #[arg(long)]
    h_frac: Option<f64>,
    /// Clean reference; enables the quality report and `--dump-diff`.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Write the per-pixel SURE map as CSV.
    #[arg(long)]
    dump_psure: Option<PathBuf>,
    /// Write |output - reference| as a PGM.
    #[arg(long, requires = "reference")]
    dump_diff: Option<PathBuf>,
    /// Write per-round shrinkage diagnostics as CSV.
    #[arg(long)]
    rounds_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[arg(long)]
    clean: PathBuf,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    nlm: NlmArgs,
    /// Comma-separated methods.
    #[arg(long, default_value = "zero,std,max,bss")]
    methods: String,
    /// Bandwidth fraction grid `lo:step:hi` of |P| sigma^2.
    #[arg(long, conflicts_with_all = ["h", "h_frac"])]
    h_sweep: Option<String>,
    /// Absolute bandwidth, or `auto` for |P| sigma^2 / 2.
    #[arg(long, conflicts_with = "h_frac")]
    h: Option<String>,
    #[arg(long)]
    h_frac: Option<f64>,
    /// CSV with one row per (bandwidth, method).
    #[arg(long)]
    report: PathBuf,
    /// Also write the best-over-h rows here (they always go to stdout).
    #[arg(long)]
    best_report: Option<PathBuf>,
    /// Directory for the noisy image and the best result of each method.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Image name in the CSV; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
}

/// Parses arguments (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match with_thread_cap(|| execute(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn with_thread_cap(f: impl FnOnce() -> Result<()> + Send) -> Result<()> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::InvalidParam(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParam(format!("cannot build thread pool: {e}")))?;
            pool.install(f)
        }
        Err(_) => f(),
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::AddNoise(a) => cmd_add_noise(a),
        Command::Denoise(a) => cmd_denoise(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    }
}

fn cmd_add_noise(a: AddNoiseArgs) -> Result<()> {
    let clean = load_pgm(&a.input)?;
    let noisy = add_gaussian(&clean, &NoiseSpec { sigma: a.sigma, seed: a.seed })?;
    save_pgm(&noisy, &a.output)
}

fn side_to_radius(side: usize, what: &str) -> Result<usize> {
    if side == 0 || side % 2 == 0 {
        return Err(Error::InvalidParam(format!(
            "--{what} must be an odd side length, got {side}"
        )));
    }
    Ok(side / 2)
}

fn check_sigma(sigma: f64) -> Result<f64> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(sigma)
    } else {
        Err(Error::InvalidParam(format!("--sigma must be finite and non-negative, got {sigma}")))
    }
}

/// Bandwidth selection shared by `denoise` and `benchmark`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Bandwidth {
    Absolute(f64),
    Fraction(f64),
}

impl Bandwidth {
    fn from_flags(h: Option<&str>, h_frac: Option<f64>) -> Result<Self> {
        match (h, h_frac) {
            (Some("auto"), _) | (None, None) => Ok(Bandwidth::Fraction(0.5)),
            (Some(v), _) => f64::from_str(v)
                .map(Bandwidth::Absolute)
                .map_err(|_| Error::InvalidParam(format!("--h must be a number or 'auto', got '{v}'"))),
            (None, Some(f)) => Ok(Bandwidth::Fraction(f)),
        }
    }

    /// Returns `(h_abs, h_frac)`.
    fn resolve(self, patch_area: usize, sigma: f64) -> Result<(f64, f64)> {
        let scale = patch_area as f64 * sigma * sigma;
        let (h, frac) = match self {
            Bandwidth::Absolute(h) => (h, h / scale),
            Bandwidth::Fraction(f) => (bandwidth_from_fraction(f, patch_area, sigma), f),
        };
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParam(format!(
                "bandwidth must be positive (h = {h}); fractional bandwidths need sigma > 0"
            )));
        }
        Ok((h, frac))
    }
}

fn cmd_denoise(a: DenoiseArgs) -> Result<()> {
    let y = load_pgm(&a.input)?;
    let sigma = match a.sigma {
        Some(s) => check_sigma(s)?,
        None => estimate_sigma(&y)?,
    };
    let method = Method::from_str(&a.method)?;
    let pr = side_to_radius(a.nlm.patch, "patch")?;
    let sr = side_to_radius(a.nlm.search, "search")?;
    let patch_area = (2 * pr + 1) * (2 * pr + 1);
    let (h, _) = Bandwidth::from_flags(a.h.as_deref(), a.h_frac)?.resolve(patch_area, sigma)?;
    let params = NlmParams::new(pr, sr, h)?;
    let config = bss_config(a.nlm.tol)?;
    let result = denoise(&y, &params, sigma, method, &config)?;
    save_pgm(&result.image, &a.output)?;

    if let Some(path) = &a.dump_psure {
        let psure = result.nlm.psure().ok_or_else(|| {
            Error::InvalidParam(format!("--dump-psure needs method std or bss, not {method}"))
        })?;
        fs::write(path, plane_csv(psure))?;
    }
    if let Some(path) = &a.rounds_csv {
        let file = fs::File::create(path)?;
        write_round_csv(std::io::BufWriter::new(file), &result.rounds)?;
    }
    if let Some(reference) = &a.reference {
        let clean = load_pgm(reference)?;
        let q = quality(&clean, &result.image)?;
        println!("{METRICS_HEADER}");
        println!("{:.6},{},{:.6}", q.mse, format_psnr(q.psnr), q.ssim);
        if let Some(path) = &a.dump_diff {
            save_pgm(&result.image.abs_diff(&clean)?, path)?;
        }
    }
    Ok(())
}

fn bss_config(tol: f64) -> Result<BssConfig> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParam(format!("--tol must be positive, got {tol}")));
    }
    Ok(BssConfig { tol, ..BssConfig::default() })
}

/// One image row per CSV line.
pub fn plane_csv(plane: &GrayImage) -> String {
    let mut out = String::new();
    for row in plane.data().chunks(plane.width()) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn cmd_metrics(a: MetricsArgs) -> Result<()> {
    let reference = load_pgm(&a.reference)?;
    let test = load_pgm(&a.test)?;
    let q = quality(&reference, &test)?;
    let csv = format!(
        "{METRICS_HEADER}\n{:.6},{},{:.6}\n",
        q.mse,
        format_psnr(q.psnr),
        q.ssim
    );
    match &a.report {
        Some(path) => fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

/// Parses `lo:step:hi` into an inclusive grid `lo + i * step`.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParam(format!("--h-sweep must look like lo:step:hi, got '{spec}'"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    let [lo, step, hi] = parts[..] else {
        return Err(bad());
    };
    if !(lo > 0.0 && step > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(bad());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| lo + i as f64 * step).collect())
}

/// One line of the benchmark report.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub image: String,
    pub sigma: f64,
    pub patch: usize,
    pub search: usize,
    pub h_abs: f64,
    pub h_frac: f64,
    pub method: Method,
    pub seed: u64,
    pub psnr: f64,
    pub ssim: f64,
    pub nlm_s: f64,
    pub sure_s: f64,
    pub bss_round_s: f64,
    pub bss_rounds: usize,
}

impl BenchmarkRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{},{},{},{:.6},{:.6},{:.6},{:.6},{}",
            self.image,
            self.sigma,
            self.patch,
            self.search,
            self.h_abs,
            self.h_frac,
            self.method,
            self.seed,
            format_psnr(self.psnr),
            self.ssim,
            self.nlm_s,
            self.sure_s,
            self.bss_round_s,
            self.bss_rounds
        )
    }
}

/// Picks the highest-PSNR row per method, in the order methods first appear.
pub fn best_rows(rows: &[BenchmarkRow]) -> Vec<BenchmarkRow> {
    let mut best: Vec<BenchmarkRow> = Vec::new();
    for row in rows {
        match best.iter_mut().find(|b| b.method == row.method) {
            Some(b) if row.psnr > b.psnr => *b = row.clone(),
            Some(_) => {}
            None => best.push(row.clone()),
        }
    }
    best
}

fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let mut methods = Vec::new();
    for m in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m = Method::from_str(m)?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(Error::InvalidParam("--methods is empty".to_string()));
    }
    Ok(methods)
}

struct GridResult {
    rows: Vec<BenchmarkRow>,
    images: Vec<GrayImage>,
}

fn cmd_benchmark(a: BenchmarkArgs) -> Result<()> {
    let clean = load_pgm(&a.clean)?;
    let sigma = check_sigma(a.sigma)?;
    if sigma == 0.0 {
        return Err(Error::InvalidParam("benchmark needs --sigma > 0".to_string()));
    }
    let methods = parse_methods(&a.methods)?;
    let pr = side_to_radius(a.nlm.patch, "patch")?;
    let sr = side_to_radius(a.nlm.search, "search")?;
    let patch_area = (2 * pr + 1) * (2 * pr + 1);
    let config = bss_config(a.nlm.tol)?;
    let bandwidths: Vec<Bandwidth> = match &a.h_sweep {
        Some(spec) => parse_sweep(spec)?.into_iter().map(Bandwidth::Fraction).collect(),
        None => vec![Bandwidth::from_flags(a.h.as_deref(), a.h_frac)?],
    };
    let grid: Vec<(f64, f64)> = bandwidths
        .iter()
        .map(|b| b.resolve(patch_area, sigma))
        .collect::<Result<_>>()?;
    let name = a.name.clone().unwrap_or_else(|| {
        a.clean
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "image".to_string())
    });

    let noisy = add_gaussian(&clean, &NoiseSpec { sigma, seed: a.seed })?;
    let results: Vec<GridResult> = grid
        .par_iter()
        .map(|&(h, frac)| {
            let params = NlmParams::new(pr, sr, h)?;
            let mut rows = Vec::new();
            let mut images = Vec::new();
            let mut std_nlm = None;
            for &method in &methods {
                let run = match method {
                    Method::Std | Method::Bss => {
                        let nlm = match &std_nlm {
                            Some(n) => Clone::clone(n),
                            None => {
                                let n = nlm_denoise(&noisy, &params, sigma)?;
                                std_nlm = Some(n.clone());
                                n
                            }
                        };
                        if method == Method::Bss {
                            shrink(&noisy, nlm, &config)?
                        } else {
                            Denoised::unshrunk(nlm)
                        }
                    }
                    _ => denoise(&noisy, &params, sigma, method, &config)?,
                };
                let q = quality(&clean, &run.image)?;
                let timing = run.nlm.timing;
                rows.push(BenchmarkRow {
                    image: name.clone(),
                    sigma,
                    patch: a.nlm.patch,
                    search: a.nlm.search,
                    h_abs: h,
                    h_frac: frac,
                    method,
                    seed: a.seed,
                    psnr: q.psnr,
                    ssim: q.ssim,
                    nlm_s: timing.weights.as_secs_f64(),
                    sure_s: if run.nlm.risk.is_some() { timing.risk.as_secs_f64() } else { 0.0 },
                    bss_round_s: run.mean_round_time().as_secs_f64(),
                    bss_rounds: run.rounds.len(),
                });
                images.push(run.image);
            }
            Ok(GridResult { rows, images })
        })
        .collect::<Result<_>>()?;

    let mut report = format!("{BENCHMARK_HEADER}\n");
    let mut all_rows = Vec::new();
    for g in &results {
        for row in &g.rows {
            let _ = writeln!(report, "{}", row.to_csv());
            all_rows.push(row.clone());
        }
    }
    fs::write(&a.report, report)?;

    let best = best_rows(&all_rows);
    let mut best_csv = format!("{BENCHMARK_HEADER}\n");
    for row in &best {
        let _ = writeln!(best_csv, "{}", row.to_csv());
    }
    print!("{best_csv}");
    if let Some(path) = &a.best_report {
        fs::write(path, &best_csv)?;
    }

    if let Some(dir) = &a.output_dir {
        fs::create_dir_all(dir)?;
        save_pgm(&noisy, dir.join(format!("{name}_noisy.pgm")))?;
        for b in &best {
            let (gi, mi) = locate(&results, b);
            let img = &results[gi].images[mi];
            save_pgm(img, dir.join(format!("{name}_{}.pgm", b.method)))?;
            save_pgm(&img.abs_diff(&clean)?, dir.join(format!("{name}_{}_diff.pgm", b.method)))?;
        }
    }
    Ok(())
}

fn locate(results: &[GridResult], row: &BenchmarkRow) -> (usize, usize) {
    for (gi, g) in results.iter().enumerate() {
        if let Some(mi) = g.rows.iter().position(|r| r == row) {
            return (gi, mi);
        }
    }
    unreachable!("best row comes from the grid")
}

/// Drops the three timing columns, for comparing reports across runs.
pub fn strip_time_columns(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            let keep: Vec<&str> = cols
                .iter()
                .enumerate()
                .filter(|(i, _)| !(10..=12).contains(i))
                .map(|(_, c)| *c)
                .collect();
            keep.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}
