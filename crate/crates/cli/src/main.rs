use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracsig::caputo::{scalar_exp_error, verification_battery, BatteryConfig};
use fracsig::features::{
    data_dir, export_features, extract_features_with, load_split, standardize, ExtractOptions, Split,
    DEFAULT_MAX_LEVEL,
};
use fracsig::quadrature::aligned_cells;
use fracsig::words::enumerate_words;
use fracsig::{classical, discrete, fractional, Alpha, Error, PiecewiseLinearPath};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

/// Expansion tolerance reported by `verify-fde`.
const FDE_TOL: f64 = 1e-4;
const EXP_TOL: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(name = "fracsig", version, about = "Classical, fractional and discrete fractional path signatures")]
struct Cli {
    /// key=value file supplying defaults for any flag (command line wins)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (defaults to all cores)
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Signature of a path given as CSV (one knot per row)
    Sig(SigArgs),
    /// Discrete fractional signature features for MNIST-format IDX files
    MnistFeatures(FeatureArgs),
    /// Compare Picard iterates with their signature expansion
    VerifyFde(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Classical,
    Fractional,
    Discrete,
}

#[derive(Args, Debug)]
struct SigArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, value_parser = parse_alpha)]
    alpha: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    level: u64,
    /// Quadrature cells (fractional only); rounded up to a multiple of the segment count
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    input: PathBuf,
    /// Defaults to standard output
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FeatureArgs {
    #[arg(long, value_parser = parse_alpha, conflicts_with = "alpha_sweep", required_unless_present = "alpha_sweep")]
    alpha: Option<f64>,
    /// Comma-separated α values; with no list, 0.80 to 1.40 in steps of 0.05
    #[arg(long, value_delimiter = ',', num_args = 0.., value_parser = parse_alpha)]
    alpha_sweep: Option<Vec<f64>>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    level: u64,
    /// Refuse levels above this
    #[arg(long, default_value_t = DEFAULT_MAX_LEVEL as u64)]
    max_level: u64,
    /// Directory with the IDX files (else $FRACSIG_DATA_DIR, else ./data)
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// Use only the first N training images
    #[arg(long)]
    train_limit: Option<usize>,
    /// Use only the first N test images
    #[arg(long)]
    test_limit: Option<usize>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = BatteryConfig::default().seed)]
    seed: u64,
    /// Random cases per α
    #[arg(long, default_value_t = BatteryConfig::default().cases_per_alpha)]
    cases: usize,
    #[arg(long, default_value_t = BatteryConfig::default().grid_n)]
    grid: usize,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("alpha must be positive, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn default_sweep() -> Vec<f64> {
    (80..=140).step_by(5).map(|h| h as f64 / 100.0).collect()
}

/// Appends `--key value` for every config entry whose flag is absent from `argv`.
fn merge_config(mut argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let pos = argv.iter().position(|a| a == "--config");
    let file = match pos {
        Some(i) => argv.get(i + 1).cloned().ok_or("--config needs a file")?,
        None => match argv.iter().find_map(|a| a.to_str()?.strip_prefix("--config=").map(OsString::from)) {
            Some(f) => f,
            None => return Ok(argv),
        },
    };
    let text = fs::read_to_string(&file).map_err(|e| format!("cannot read config {}: {e}", file.to_string_lossy()))?;
    let present: Vec<String> = argv
        .iter()
        .filter_map(|a| a.to_str()?.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", n + 1))?;
        let key = key.trim().replace('_', "-");
        if key == "config" || present.contains(&key) {
            continue;
        }
        let value = value.trim();
        if value == "true" {
            argv.push(format!("--{key}").into());
        } else if value != "false" {
            argv.push(format!("--{key}={value}").into());
        }
    }
    Ok(argv)
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Budget(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

fn io_fail(path: &Path, e: io::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

fn run_sig(args: &SigArgs) -> Result<(), Failure> {
    let level = args.level as usize;
    let path = PiecewiseLinearPath::read_csv(&args.input)?;
    let alpha = || -> Result<Alpha, Failure> {
        let a = args
            .alpha
            .ok_or_else(|| Failure::Usage("--alpha is required for this kind".into()))?;
        Ok(Alpha::new(a)?)
    };
    let sig = match args.kind {
        Kind::Classical => classical::signature(&path, level)?,
        Kind::Discrete => discrete::discrete_signature(&path, alpha()?, level)?,
        Kind::Fractional => {
            let grid = args
                .grid
                .ok_or_else(|| Failure::Usage("--grid is required for --kind fractional".into()))?;
            let cells = aligned_cells(path.n_segments(), grid.max(2 * path.n_segments()));
            if cells != grid {
                eprintln!("note: using {cells} quadrature cells ({} segments)", path.n_segments());
            }
            fractional::fractional_signature(&path, alpha()?, level, cells)?
        }
    };
    let header: Vec<String> = enumerate_words(path.dim(), level)?.iter().map(|w| w.column_name()).collect();
    let values: Vec<String> = sig.flatten().iter().map(f64::to_string).collect();
    let text = format!("{}\n{}\n", header.join(","), values.join(","));
    match &args.output {
        Some(out) => fs::write(out, text).map_err(|e| io_fail(out, e)),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Data(e.to_string())),
    }
}

fn limited<T>(mut v: Vec<T>, limit: Option<usize>) -> Vec<T> {
    if let Some(n) = limit {
        v.truncate(n);
    }
    v
}

fn run_features(args: &FeatureArgs) -> Result<(), Failure> {
    if args.level > args.max_level {
        return Err(Failure::Usage(format!(
            "level {} exceeds --max-level {}",
            args.level, args.max_level
        )));
    }
    let dir = data_dir(args.data_dir.as_deref());
    let train = limited(load_split(&dir, Split::Train)?, args.train_limit);
    let test = limited(load_split(&dir, Split::Test)?, args.test_limit);
    let alphas = match (&args.alpha_sweep, args.alpha) {
        (Some(list), _) if list.is_empty() => default_sweep(),
        (Some(list), _) => list.clone(),
        (None, Some(a)) => vec![a],
        (None, None) => return Err(Failure::Usage("give --alpha or --alpha-sweep".into())),
    };
    fs::create_dir_all(&args.output_dir).map_err(|e| io_fail(&args.output_dir, e))?;
    let options = ExtractOptions {
        max_level: args.max_level as usize,
        ..ExtractOptions::default()
    };
    let level = args.level as usize;
    for a in alphas {
        let alpha = Alpha::new(a)?;
        let train_m = extract_features_with(&train, alpha, level, options)?;
        let test_m = extract_features_with(&test, alpha, level, options)?;
        let (train_s, test_s, stats) = standardize(&train_m, &test_m)?;
        for (split, m) in [("train", &train_s), ("test", &test_s)] {
            let out = args.output_dir.join(format!("features_alpha{a}_L{level}_{split}.csv"));
            export_features(m, &stats, &out)?;
            eprintln!("wrote {} ({} rows)", out.display(), m.n_rows());
        }
    }
    Ok(())
}

fn run_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let config = BatteryConfig {
        seed: args.seed,
        cases_per_alpha: args.cases,
        grid_n: args.grid,
        ..BatteryConfig::default()
    };
    let rows = verification_battery(&config)?;
    let mut out = String::from("case,alpha,e,d,knots,iterate,max_rel_err,status\n");
    let mut ok = true;
    for r in &rows {
        let pass = r.max_rel_err < FDE_TOL;
        ok &= pass;
        out += &format!(
            "{},{},{},{},{},{},{:.3e},{}\n",
            r.case,
            r.alpha,
            r.e,
            r.d,
            r.n_knots,
            r.iterate,
            r.max_rel_err,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    let exp_err = scalar_exp_error(20, 1024)?;
    let exp_pass = exp_err < EXP_TOL;
    ok &= exp_pass;
    out += &format!(
        "# alpha=1 scalar exp limit, 20 iterates: |Y(1) - e| = {exp_err:.3e} {}\n",
        if exp_pass { "PASS" } else { "FAIL" }
    );
    io::stdout().write_all(out.as_bytes()).map_err(|e| Failure::Data(e.to_string()))?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Data(format!("verification exceeded tolerance {FDE_TOL:e}")))
    }
}

fn main() -> ExitCode {
    let argv = match merge_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let result = match &cli.command {
        Command::Sig(a) => run_sig(a),
        Command::MnistFeatures(a) => run_features(a),
        Command::VerifyFde(a) => run_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
