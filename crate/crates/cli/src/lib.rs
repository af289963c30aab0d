//! Subcommand implementations for the `kinship` binary.
//!
//! Every command takes its parsed arguments plus stdout/stderr sinks and
//! returns a [`CliError`] whose [`CliError::exit_code`] is the process
//! status: 2 for invalid input, 3 for runtime failures.

pub mod args;

use std::fs;
use std::io::Write;
use std::path::Path;

use kinship_core::freqs::{FrequencyTable, PoolWeights, TableMeta};
use kinship_core::lrstats::{lr_all, Statistic};
use kinship_core::mcengine::{SampleMatrix, SimConfig, Simulator, DESK_REPLICATES, PAPER_REPLICATES};
use kinship_core::powerest::{
    all_subpop_powers, curve_rows, default_curve_grid, pairwise_diff_cis, power, power_curve, power_report,
    recombined_power, write_rows, PowerCurve, POWER_CI_LEVEL, PowerReport, ReportRow, SortedSample, MIN_EXPECTED_EXCEEDANCES,
};
use kinship_core::profile::Profile;
use kinship_core::synth::{synth_table, SynthSpec};
use kinship_core::{DataError, Error, PowerError, SimError};
use serde::Serialize;

use args::{Cli, Command, LrArgs, RunArgs, SynthArgs, TableArgs, ValidateArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Pool(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<PowerError> for CliError {
    fn from(e: PowerError) -> Self {
        match e {
            PowerError::InvalidAlpha(_) | PowerError::InvalidLevel(_) => CliError::Validation(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Data(e) => e.into(),
            Error::Sim(e) => e.into(),
            Error::Power(e) => e.into(),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Lr(a) => cmd_lr(&a, out),
        Command::Power(a) => cmd_power(&a, out, err),
        Command::PowerCurve(a) => cmd_power_curve(&a, out, err),
        Command::SubpopBias(a) => cmd_subpop_bias(&a, out, err),
        Command::SynthFreqs(a) => cmd_synth_freqs(&a, out),
        Command::Validate(a) => cmd_validate(&a, out),
    }
}

fn load_table(t: &TableArgs) -> Result<FrequencyTable, CliError> {
    Ok(FrequencyTable::load_files(&t.meta, t.freqs.as_deref())?)
}

fn load_profile(path: &Path) -> Result<Profile, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(Profile::from_csv_reader(file, &path.display().to_string())?)
}

fn pool_weights(choice: Option<args::CbWeights>, table: &FrequencyTable) -> PoolWeights {
    choice.map(PoolWeights::from).unwrap_or_else(|| PoolWeights::default_for(table))
}

// `write!` failures on stdout are not actionable.
macro_rules! say {
    ($dst:expr, $($arg:tt)*) => {
        {
            let _ = writeln!($dst, $($arg)*);
        }
    };
}

fn cmd_lr(a: &LrArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let table = load_table(&a.table)?;
    let (t0, t1) = a.test.thetas()?;
    let x1 = load_profile(&a.profile1)?;
    let x2 = load_profile(&a.profile2)?;
    let weights = pool_weights(a.cb_weights, &table);
    let b = lr_all(&x1, &x2, &t0, &t1, &table, weights)?;
    say!(out, "theta0 = {t0}, theta1 = {t1}, CB weights = {}", weights.name());
    say!(out, "{:<14} {:>16} {:>16}", "subpopulation", "log LR", "LR");
    for (k, sp) in table.subpops().iter().enumerate() {
        let v = b.subpop_log_lr(k);
        say!(out, "{:<14} {:>16.6} {:>16.6}", sp.name, v, v.exp());
    }
    say!(out, "{:<14} {:>16} {:>16}", "statistic", "log LR", "LR");
    for s in Statistic::ALL {
        let v = b.log_value(s);
        say!(out, "{:<14} {:>16.6} {:>16.6}", s.name(), v, v.exp());
    }
    Ok(())
}

/// Everything shared by the simulation-backed commands.
struct Run {
    table: FrequencyTable,
    cfg: SimConfig,
    test_name: &'static str,
    weights: PoolWeights,
}

fn prepare(a: &RunArgs, default_stats: &[Statistic]) -> Result<Run, CliError> {
    let table = load_table(&a.table)?;
    let (theta0, theta1) = a.test.thetas()?;
    let mut cfg = SimConfig::new(theta0, theta1);
    cfg.replicates = a
        .replicates
        .unwrap_or(if a.paper_scale { PAPER_REPLICATES } else { DESK_REPLICATES });
    cfg.seed = a.seed;
    cfg.statistics = if a.stats.is_empty() {
        default_stats.to_vec()
    } else {
        let mut s = a.stats.clone();
        s.dedup();
        s
    };
    if a.workers == Some(0) {
        return Err(CliError::Validation("--workers must be at least 1".into()));
    }
    cfg.workers = a.workers;
    cfg.null_same_subpop = a.null_same_subpop;
    cfg.validate()?;
    if let Some(&bad) = a.alpha.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(CliError::Validation(format!("alpha {bad} must lie in (0, 1)")));
    }
    let weights = pool_weights(a.cb_weights, &table);
    Ok(Run {
        table,
        cfg,
        test_name: a.test.test.name(),
        weights,
    })
}

fn alphas_or_default(a: &RunArgs) -> Result<Vec<f64>, CliError> {
    if !a.alpha.is_empty() {
        return Ok(a.alpha.clone());
    }
    a.test
        .test
        .default_alpha()
        .map(|x| vec![x])
        .ok_or_else(|| CliError::Validation("--test custom needs --alpha".into()))
}

fn simulate(run: &Run) -> Result<(Simulator, SampleMatrix, SampleMatrix), CliError> {
    let sim = Simulator::new(&run.table, run.weights)?;
    let null = sim.simulate_null(&run.cfg)?;
    let alt = sim.simulate_alt(&run.cfg)?;
    Ok((sim, null, alt))
}

fn create_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_csv_file<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    write_rows(std::io::BufWriter::new(file), rows).map_err(|e| io_err(path, e))
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

#[derive(Debug, Serialize)]
struct RunInfo<'a> {
    test: &'a str,
    theta0: [f64; 3],
    theta1: [f64; 3],
    replicates: usize,
    seed: u64,
    cb_weights: &'static str,
    null_same_subpop: bool,
    subpops: Vec<&'a str>,
}

impl<'a> RunInfo<'a> {
    fn new(run: &'a Run) -> Self {
        RunInfo {
            test: run.test_name,
            theta0: run.cfg.theta0.as_array(),
            theta1: run.cfg.theta1.as_array(),
            replicates: run.cfg.replicates,
            seed: run.cfg.seed,
            cb_weights: run.weights.name(),
            null_same_subpop: run.cfg.null_same_subpop,
            subpops: run.table.subpops().iter().map(|s| s.name.as_str()).collect(),
        }
    }
}

fn warn_resolution(alphas: &[f64], b: usize, err: &mut dyn Write) {
    for &alpha in alphas {
        let product = alpha * b as f64;
        if product < MIN_EXPECTED_EXCEEDANCES {
            say!(
                err,
                "warning: AlphaTooSmallForB: alpha={alpha} with B={b} expects {product:.2} null exceedances; the threshold is unstable"
            );
        }
    }
}

fn subpop_names(table: &FrequencyTable) -> Vec<String> {
    table.subpops().iter().map(|s| s.name.clone()).collect()
}

#[derive(Debug, Serialize)]
struct SubpopRow<'a> {
    statistic: Statistic,
    alpha: f64,
    subpop: &'a str,
    power: f64,
    n_pairs: u64,
    ci_low: f64,
    ci_high: f64,
}

fn cmd_power(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let run = prepare(a, &Statistic::ALL)?;
    let alphas = alphas_or_default(a)?;
    let b = run.cfg.replicates;
    if let Some(&alpha) = alphas.iter().find(|&&x| x * (b as f64) < 1.0) {
        return Err(PowerError::AlphaBelowResolution { product: alpha * b as f64 }.into());
    }
    warn_resolution(&alphas, b, err);
    let (_, null, alt) = simulate(&run)?;
    let names = subpop_names(&run.table);

    let mut reports: Vec<PowerReport> = Vec::new();
    for &stat in &run.cfg.statistics {
        let sorted = SortedSample::new(null.values(stat).expect("simulated statistic"));
        for &alpha in &alphas {
            reports.push(power_report(stat, alpha, &sorted, &alt, &names)?);
        }
    }

    create_out_dir(&a.out)?;
    let rows: Vec<ReportRow> = reports.iter().map(ReportRow::from).collect();
    write_csv_file(&a.out.join("power.csv"), &rows)?;
    let per_subpop: Vec<SubpopRow> = reports
        .iter()
        .flat_map(|r| {
            r.per_subpop.iter().map(move |s| SubpopRow {
                statistic: r.statistic,
                alpha: r.alpha,
                subpop: &s.name,
                power: s.power,
                n_pairs: s.n_pairs,
                ci_low: s.ci_low,
                ci_high: s.ci_high,
            })
        })
        .collect();
    write_csv_file(&a.out.join("power_by_subpop.csv"), &per_subpop)?;

    #[derive(Serialize)]
    struct PowerJson<'a> {
        run: RunInfo<'a>,
        reports: &'a [PowerReport],
    }
    write_json_file(
        &a.out.join("power.json"),
        &PowerJson {
            run: RunInfo::new(&run),
            reports: &reports,
        },
    )?;

    say!(out, "{} test, B = {}, seed = {}, CB weights = {}", run.test_name, b, run.cfg.seed, run.weights.name());
    say!(out, "{:<6} {:>10} {:>14} {:>8} {:>22}", "stat", "alpha", "threshold", "power", "95% CI");
    for r in &reports {
        say!(
            out,
            "{:<6} {:>10} {:>14.1} {:>8.3} {:>22}",
            r.statistic.name(),
            r.alpha,
            r.threshold,
            r.power,
            format!("({:.4}, {:.4})", r.ci_low, r.ci_high)
        );
    }
    say!(out, "wrote {}", a.out.display());
    Ok(())
}

const CURVE_STATS: [Statistic; 5] = [Statistic::Laf, Statistic::Avg, Statistic::Max, Statistic::Min, Statistic::Cb];

fn cmd_power_curve(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let run = prepare(a, &CURVE_STATS)?;
    let grid = if a.alpha.is_empty() { default_curve_grid() } else { a.alpha.clone() };
    let b = run.cfg.replicates;
    warn_resolution(&grid, b, err);
    let (_, null, alt) = simulate(&run)?;
    let mut curves: Vec<PowerCurve> = Vec::new();
    for &stat in &run.cfg.statistics {
        let n = SortedSample::new(null.values(stat).expect("simulated statistic"));
        let s = SortedSample::new(alt.values(stat).expect("simulated statistic"));
        curves.push(power_curve(stat, &n, &s, &grid)?);
    }
    create_out_dir(&a.out)?;
    write_csv_file(&a.out.join("curve.csv"), &curve_rows(&curves))?;

    #[derive(Serialize)]
    struct CurveJson<'a> {
        run: RunInfo<'a>,
        curves: &'a [PowerCurve],
    }
    write_json_file(
        &a.out.join("curve.json"),
        &CurveJson {
            run: RunInfo::new(&run),
            curves: &curves,
        },
    )?;
    say!(out, "{} test, B = {}, {} grid points, {} statistics", run.test_name, b, grid.len(), curves.len());
    for c in &curves {
        let (first, last) = (c.points.first().unwrap(), c.points.last().unwrap());
        say!(
            out,
            "{:<6} power {:.4} at alpha={:e} .. {:.4} at alpha={:e}",
            c.statistic.name(),
            first.power,
            first.alpha,
            last.power,
            last.alpha
        );
    }
    say!(out, "wrote {}", a.out.display());
    Ok(())
}

const BIAS_STATS: [Statistic; 3] = [Statistic::Laf, Statistic::Min, Statistic::Cb];

#[derive(Debug, Serialize)]
struct SubpopCurveRow<'a> {
    statistic: Statistic,
    subpop: &'a str,
    alpha: f64,
    power: f64,
    n_pairs: u64,
    ci_low: f64,
    ci_high: f64,
}

fn alpha_tag(alpha: f64) -> String {
    format!("{alpha:e}")
}

fn cmd_subpop_bias(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let run = prepare(a, &BIAS_STATS)?;
    let k = run.table.num_subpops();
    if k < 2 {
        return Err(CliError::Validation(format!(
            "subpop-bias requires ≥2 subpopulations; {} has {k}",
            a.table.meta.display()
        )));
    }
    let diff_alphas = alphas_or_default(a)?;
    let mut grid = default_curve_grid();
    grid.extend(&diff_alphas);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let b = run.cfg.replicates;
    warn_resolution(&diff_alphas, b, err);
    let (_, null, alt) = simulate(&run)?;
    let names = subpop_names(&run.table);

    create_out_dir(&a.out)?;
    let mut curve_rows: Vec<SubpopCurveRow> = Vec::new();
    say!(out, "{} test, B = {}, {k} subpopulations", run.test_name, b);
    for &stat in &run.cfg.statistics {
        let sorted = SortedSample::new(null.values(stat).expect("simulated statistic"));
        let alt_values = alt.values(stat).expect("simulated statistic");
        for &alpha in &grid {
            let t = sorted.threshold(alpha)?;
            for s in all_subpop_powers(&alt, stat, t.log_value, &names)? {
                curve_rows.push(SubpopCurveRow {
                    statistic: stat,
                    subpop: &run.table.subpops()[s.subpop].name,
                    alpha,
                    power: s.power,
                    n_pairs: s.n_pairs,
                    ci_low: s.ci_low,
                    ci_high: s.ci_high,
                });
            }
        }
        for &alpha in &diff_alphas {
            let t = sorted.threshold(alpha)?;
            let per = all_subpop_powers(&alt, stat, t.log_value, &names)?;
            let overall = power(alt_values, t.log_value)?.power;
            let recombined = recombined_power(&per);
            let ok = (recombined - overall).abs() <= 1e-12;
            say!(
                out,
                "self-test recombination {} alpha={alpha:e}: sum_k n_k/B * power_k = {recombined:.6}, overall = {overall:.6} ... {}",
                stat.name(),
                if ok { "PASS" } else { "FAIL" }
            );
            if !ok {
                return Err(CliError::Runtime("recombination identity failed".into()));
            }
            let diffs = pairwise_diff_cis(&per, POWER_CI_LEVEL)?;
            for d in &diffs {
                if let Some(w) = &d.warning {
                    say!(err, "warning: {} vs {}: {w}", d.subpop_i, d.subpop_j);
                }
                say!(
                    out,
                    "  {:<6} {} - {}: {:+.4} ({:+.4}, {:+.4})",
                    stat.name(),
                    d.subpop_i,
                    d.subpop_j,
                    d.estimate,
                    d.ci_low,
                    d.ci_high
                );
            }
            let path = a.out.join(format!("diff_ci_{}_alpha{}.csv", stat.name(), alpha_tag(alpha)));
            write_csv_file(&path, &diffs)?;
        }
    }
    write_csv_file(&a.out.join("subpop_curve.csv"), &curve_rows)?;
    say!(out, "wrote {}", a.out.display());
    Ok(())
}

fn cmd_synth_freqs(a: &SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut spec = match &a.meta {
        Some(path) => {
            let meta = TableMeta::from_path(path)?;
            SynthSpec::from_meta(&meta, a.alleles.clone(), a.divergence, a.seed)
        }
        None => {
            if a.loci == 0 || a.subpops == 0 {
                return Err(CliError::Validation("--loci and --subpops must be at least 1".into()));
            }
            SynthSpec::uniform(a.loci, 0, a.subpops, a.divergence, a.seed)
        }
    };
    spec.allele_counts = a.alleles.clone();
    let table = synth_table(&spec)?;

    create_out_dir(&a.out)?;
    let csv_path = a.out.join("freqs.csv");
    let meta_path = a.out.join("meta.toml");
    let file = fs::File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    table
        .write_csv(std::io::BufWriter::new(file))
        .map_err(|e| io_err(&csv_path, e))?;
    let mut meta = table.meta();
    meta.name = Some(format!("synthetic divergence={} seed={}", a.divergence, a.seed));
    meta.freqs = Some("freqs.csv".into());
    fs::write(&meta_path, meta.to_toml_string()).map_err(|e| io_err(&meta_path, e))?;

    // the written pair must load cleanly
    let back = FrequencyTable::load_files(&meta_path, None)
        .map_err(|e| CliError::Runtime(format!("synthetic table failed validation: {e}")))?;
    say!(
        out,
        "wrote {} and {}: {} subpopulations, {} loci",
        csv_path.display(),
        meta_path.display(),
        back.num_subpops(),
        back.num_loci()
    );
    Ok(())
}

fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let table = load_table(&a.table)?;
    say!(out, "ok: {} subpopulations, {} loci, floor {}", table.num_subpops(), table.num_loci(), table.floor());
    for sp in table.subpops() {
        match sp.sample_size {
            Some(n) => say!(out, "  {:<14} proportion {:.6}  n = {n}", sp.name, sp.proportion),
            None => say!(out, "  {:<14} proportion {:.6}", sp.name, sp.proportion),
        };
    }
    for (l, locus) in table.panel().iter().enumerate() {
        say!(out, "  {:<10} {} alleles", locus, table.locus_alleles(l).len());
    }
    for path in &a.profiles {
        let p = load_profile(path)?;
        table.encode(&p)?;
        say!(out, "ok: {}", path.display());
    }
    Ok(())
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    match run(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            say!(err, "error: {e}");
            e.exit_code()
        }
    }
}
