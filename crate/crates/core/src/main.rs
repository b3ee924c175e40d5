use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ldtensor::harness::{self, ExperimentConfig, LambdaSpec, Mode};
use ldtensor::{Error, Result};

#[derive(Parser)]
#[command(name = "ldtensor", version, about = "Low-degree oracle, bounds and tensor-network estimator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact degree-D correlation and MMSE with both upper bounds
    Oracle(RunArgs),
    /// Closed-form hard-regime bound
    Bound(RunArgs),
    /// Tensor-network estimator errors
    Estimate(RunArgs),
    /// Full identity and inequality suite; exits nonzero on any failure
    Verify(RunArgs),
    /// Estimator error against exact MMSE and the lower bound
    Sweep(RunArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// JSON config file; the flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for `<mode>.csv` (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    r: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long = "D", value_delimiter = ',')]
    degree: Vec<usize>,
    /// Explicit weights, e.g. `1,1/2,1/3`
    #[arg(long, value_delimiter = ',', conflicts_with = "delta")]
    lambda: Vec<String>,
    /// Spike on the first component: weights 1 and 1/(1+delta)
    #[arg(long)]
    delta: Option<String>,
    #[arg(long = "lambda-min", value_delimiter = ',')]
    lambda_min: Vec<String>,
    #[arg(long)]
    lambda2: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    #[arg(long = "override-D")]
    override_degree: Option<usize>,
    /// Bound mode: place r at the hard-regime threshold
    #[arg(long)]
    r_at_threshold: bool,
}

impl RunArgs {
    fn config(&self, mode: Mode) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(m) = c.mode {
            if m != mode {
                eprintln!("note: config mode {} overridden by subcommand {}", m.name(), mode.name());
            }
        }
        c.mode = Some(mode);
        if !self.n.is_empty() {
            c.grid.n = self.n.clone();
        }
        if !self.r.is_empty() {
            c.grid.r = self.r.clone();
        }
        if !self.k.is_empty() {
            c.grid.k = self.k.clone();
        }
        if !self.degree.is_empty() {
            c.grid.degree = self.degree.clone();
        }
        if !self.lambda.is_empty() {
            c.lambda = LambdaSpec::Explicit(self.lambda.clone());
        }
        if let Some(delta) = &self.delta {
            c.lambda = LambdaSpec::Spike { delta: delta.clone() };
        }
        if !self.lambda_min.is_empty() {
            c.lambda_min = self.lambda_min.clone();
        }
        if self.lambda2.is_some() {
            c.lambda2 = self.lambda2.clone();
        }
        if let Some(s) = self.samples {
            c.samples = s;
        }
        if !self.seed.is_empty() {
            c.seeds = self.seed.clone();
        }
        if let Ok(text) = std::env::var("LDTENSOR_SEED") {
            let seed = text
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("LDTENSOR_SEED={text:?} is not a u64")))?;
            c.seeds = vec![seed];
        }
        if self.override_degree.is_some() {
            c.override_degree = self.override_degree;
        }
        c.r_at_threshold |= self.r_at_threshold;
        if let Some(out) = &self.out {
            c.output_path = Some(out.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

fn execute(mode: Mode, args: &RunArgs) -> Result<bool> {
    if let Some(t) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    }
    let config = args.config(mode)?;
    let report = harness::run(&config, mode)?;
    for check in &report.checks {
        eprintln!("{check}");
    }
    match &config.output_path {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{}.csv", mode.name()));
            harness::write_csv(BufWriter::new(File::create(&path)?), mode, &config, &report.table)?;
            eprintln!("wrote {}", path.display());
        }
        None => harness::write_csv(io::stdout().lock(), mode, &config, &report.table)?,
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::Oracle(a) => (Mode::Oracle, a),
        Command::Bound(a) => (Mode::Bound, a),
        Command::Estimate(a) => (Mode::Estimate, a),
        Command::Verify(a) => (Mode::Verify, a),
        Command::Sweep(a) => (Mode::Sweep, a),
    };
    match execute(mode, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::FAILURE
        }
        Err(e @ Error::Usage(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
