use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sidtw::baselines::{data_splitting_test, permutation_test, si_dtw_oc_p_value};
use sidtw::harness::experiment::{run_experiment, run_timing};
use sidtw::harness::report::{write_report, write_timing, Format};
use sidtw::harness::{load_ucr_pair, Covariance, ExperimentConfig, Method, Noise, VarianceMode};
use sidtw::inference::{observe, selective_p_value, selective_p_value_with, z1_for, Z1Route};
use sidtw::parametric::{envelope_bruteforce, para_dtw};
use sidtw::{alignment::enumerate_alignments, Error, IntervalUnion, Result, TimeSeriesPair};

#[derive(Parser)]
#[command(name = "sidtw", version, about = "Selective inference for the DTW distance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test one pair of series read from UCR-style files.
    Test(TestArgs),
    /// Run a simulation experiment and write its report.
    Simulate(SimulateArgs),
    /// Cross-check parametric DTW against brute-force enumeration.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct TestArgs {
    /// File holding the first series.
    x_file: PathBuf,
    /// File holding the second series.
    y_file: PathBuf,
    /// Row of the first file to use (0-based).
    #[arg(long, default_value_t = 0)]
    row_x: usize,
    /// Row of the second file to use (0-based).
    #[arg(long, default_value_t = 0)]
    row_y: usize,
    #[arg(long, default_value = "si-dtw")]
    method: Method,
    #[arg(long, default_value = "known")]
    variance: VarianceMode,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long = "perm-B", default_value_t = 1000)]
    perm_b: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Flat TOML file with experiment settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// fpr, tpr, ci or timing.
    #[arg(long, default_value = "tpr")]
    experiment: String,
    /// Sizes n = m for timing runs.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
    sizes: Vec<usize>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    cov: Option<Covariance>,
    #[arg(long)]
    noise: Option<Noise>,
    #[arg(long)]
    variance: Option<VarianceMode>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "perm-B")]
    perm_b: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json-lines")]
    format: Format,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Points per instance at which the two envelopes are compared.
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer(&mut out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TestRecord {
    method: Method,
    n: usize,
    m: usize,
    p_value: f64,
    alpha: f64,
    rejected: bool,
    distance: Option<f64>,
    alignment: Option<Vec<(usize, usize)>>,
    z_obs: Option<f64>,
    sigma: Option<f64>,
    region: Option<IntervalUnion>,
    ci: Option<(f64, f64)>,
}

fn cmd_test(args: TestArgs) -> Result<()> {
    let pair = load_ucr_pair(&args.x_file, args.row_x, &args.y_file, args.row_y, args.variance)?;
    let mut record = TestRecord {
        method: args.method,
        n: pair.n(),
        m: pair.m(),
        p_value: f64::NAN,
        alpha: args.alpha,
        rejected: false,
        distance: None,
        alignment: None,
        z_obs: None,
        sigma: None,
        region: None,
        ci: None,
    };
    let selective = match args.method {
        Method::SiDtw => Some(selective_p_value(&pair)?),
        Method::SiDtwOc => Some(si_dtw_oc_p_value(&pair)?),
        Method::Permutation => {
            record.p_value = permutation_test(&pair, args.perm_b, args.seed)?;
            None
        }
        Method::DataSplit => {
            record.p_value = data_splitting_test(&pair)?;
            None
        }
    };
    if let Some(result) = selective {
        let result = result.with_ci(args.alpha)?;
        record.p_value = result.p_selective;
        record.distance = Some(result.distance);
        record.alignment = Some(result.alignment.cells().to_vec());
        record.z_obs = Some(result.z_obs);
        record.sigma = Some(result.sigma);
        record.ci = result.ci;
        record.region = Some(result.region);
    }
    record.rejected = record.p_value <= args.alpha;
    emit(&record, args.out.as_deref())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    macro_rules! apply {
        ($($flag:ident => $field:ident),*) => { $(if let Some(v) = args.$flag { cfg.$field = v; })* };
    }
    apply!(method => method, n => n, m => m, delta => delta, cov => covariance, noise => noise,
        variance => variance_mode, alpha => alpha, trials => trials, repetitions => repetitions,
        seed => seed, perm_b => perm_b);
    cfg.validate()?;
    let mut out = output(args.out.as_deref())?;
    match args.experiment.as_str() {
        "fpr" if cfg.delta != 0.0 => {
            return Err(Error::Config(format!("fpr experiments need delta = 0, got {}", cfg.delta)));
        }
        "fpr" | "tpr" => write_report(&run_experiment(&cfg, false)?, args.format, &mut out, true)?,
        "ci" => write_report(&run_experiment(&cfg, true)?, args.format, &mut out, true)?,
        "timing" => write_timing(&run_timing(&cfg, &args.sizes)?, args.format, &mut out)?,
        other => return Err(Error::Config(format!("unknown experiment `{other}` (fpr, tpr, ci, timing)"))),
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct OracleSummary {
    n: usize,
    m: usize,
    instances: usize,
    alignments: usize,
    max_envelope_rel_error: f64,
    max_region_endpoint_error: f64,
    max_p_value_difference: f64,
    agree: bool,
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let all = enumerate_alignments(args.n, args.m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let (mut env_err, mut end_err, mut p_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut endpoint_count_mismatch = false;
    for _ in 0..args.trials {
        let x: Vec<f64> = (0..args.n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let y: Vec<f64> = (0..args.m).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let pair = TimeSeriesPair::with_identity(x, y)?;
        let sel = observe(&pair)?;
        let para = para_dtw(&sel.line);
        let brute = envelope_bruteforce(&all, &sel.line)?;
        for k in 0..args.samples {
            let z = sel.z_obs + sel.sigma * (-6.0 + 12.0 * k as f64 / (args.samples.max(2) - 1) as f64);
            let (a, b) = (para.value_at(z), brute.value_at(z));
            env_err = env_err.max((a - b).abs() / b.abs().max(1.0));
        }
        let (za, zb) = (z1_for(&sel, Z1Route::Parametric)?, z1_for(&sel, Z1Route::BruteForce)?);
        let (ea, eb) = (za.finite_endpoints(), zb.finite_endpoints());
        if ea.len() != eb.len() {
            endpoint_count_mismatch = true;
        }
        for (u, v) in ea.iter().zip(&eb) {
            end_err = end_err.max((u - v).abs());
        }
        let pa = selective_p_value_with(&pair, Z1Route::Parametric)?.p_selective;
        let pb = selective_p_value_with(&pair, Z1Route::BruteForce)?.p_selective;
        p_err = p_err.max((pa - pb).abs());
    }
    let agree = !endpoint_count_mismatch && env_err <= 1e-8 && end_err <= 1e-9 && p_err <= 1e-9;
    let summary = OracleSummary {
        n: args.n,
        m: args.m,
        instances: args.trials,
        alignments: all.len(),
        max_envelope_rel_error: env_err,
        max_region_endpoint_error: if endpoint_count_mismatch { f64::INFINITY } else { end_err },
        max_p_value_difference: p_err,
        agree,
    };
    emit(&summary, args.out.as_deref())?;
    if agree {
        Ok(())
    } else {
        Err(Error::OracleMismatch("parametric and brute-force results differ".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
