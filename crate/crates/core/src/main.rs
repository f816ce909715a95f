//! Command-line front end: one subcommand per experiment, plus `defaults`
//! to print the built-in configs.
//!
//! Exit codes: 0 when the run passed its checks, 1 when it computed but a
//! check failed (artifacts are still written), 2 on unusable input, where
//! nothing is written.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use grale::config::{ExperimentConfig, ExperimentKind, OutputFormat};
use grale::runner;

#[derive(Parser)]
#[command(
    name = "grale",
    version,
    about = "Grand Lebesgue norms, fractional seminorms and continuity certificates",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; the built-in defaults apply when omitted
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the config's random seed
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads for the path sampler (default: all cores)
    #[arg(long, value_name = "N")]
    workers: Option<usize>,

    /// Output directory (default: config `output.dir`, then $GRALE_OUT, then ./out)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Artifact format: csv, json or both (default: config, then csv)
    #[arg(long, value_name = "FMT")]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Fractional seminorm of a closed-form function
    Seminorm(RunArgs),
    /// Grand Lebesgue norm against a weight
    Glnorm(RunArgs),
    /// Fundamental function of a weighted scale over a gap grid
    Fundamental(RunArgs),
    /// Continuity certificate for a line function
    #[command(name = "certify-1d")]
    Certify1d(RunArgs),
    /// Continuity certificate for a planar function over gap vectors
    #[command(name = "certify-nd")]
    CertifyNd(RunArgs),
    /// Sharpness of the bound near the critical exponent
    Exactness(RunArgs),
    /// Dilation homogeneity of the seminorm
    Scaling(RunArgs),
    /// Weight to Young function and back, with the equivalence band
    #[command(name = "orlicz-roundtrip")]
    OrliczRoundtrip(RunArgs),
    /// Expected modulus of a random field against its certified bound
    #[command(name = "field-modulus")]
    FieldModulus(RunArgs),
    /// Modulus envelope under a power moment kernel
    #[command(name = "field-envelope")]
    FieldEnvelope(RunArgs),
    /// Exceedance frequencies of the normalized modulus against tail bounds
    #[command(name = "field-tails")]
    FieldTails(RunArgs),
    /// Rectangle distance axioms on random index triples
    #[command(name = "distance-axioms")]
    DistanceAxioms(RunArgs),
    /// Print the built-in config for one experiment, or for all of them
    Defaults {
        /// Experiment name; every config is printed when omitted
        experiment: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Seminorm(a) => run_experiment(ExperimentKind::Seminorm, a),
        Command::Glnorm(a) => run_experiment(ExperimentKind::Glnorm, a),
        Command::Fundamental(a) => run_experiment(ExperimentKind::Fundamental, a),
        Command::Certify1d(a) => run_experiment(ExperimentKind::Certify1d, a),
        Command::CertifyNd(a) => run_experiment(ExperimentKind::CertifyNd, a),
        Command::Exactness(a) => run_experiment(ExperimentKind::Exactness, a),
        Command::Scaling(a) => run_experiment(ExperimentKind::Scaling, a),
        Command::OrliczRoundtrip(a) => run_experiment(ExperimentKind::OrliczRoundtrip, a),
        Command::FieldModulus(a) => run_experiment(ExperimentKind::FieldModulus, a),
        Command::FieldEnvelope(a) => run_experiment(ExperimentKind::FieldEnvelope, a),
        Command::FieldTails(a) => run_experiment(ExperimentKind::FieldTails, a),
        Command::DistanceAxioms(a) => run_experiment(ExperimentKind::DistanceAxioms, a),
        Command::Defaults { experiment } => print_defaults(experiment),
    };
    ExitCode::from(code)
}

fn fail_input(msg: &str) -> u8 {
    eprintln!("error: {msg}");
    2
}

fn run_experiment(kind: ExperimentKind, args: RunArgs) -> u8 {
    let mut cfg = match &args.config {
        None => ExperimentConfig::default_for(kind),
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return fail_input(&format!("{}: {e}", path.display())),
            };
            match ExperimentConfig::from_toml_str(&text) {
                Ok(c) => c,
                Err(e) => return fail_input(&format!("{}: {e}", path.display())),
            }
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(workers) = args.workers {
        if workers == 0 {
            return fail_input("workers must be positive");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            return fail_input(&format!("worker pool: {e}"));
        }
    }
    let format = match args.format.as_deref() {
        Some(s) => match s.parse::<OutputFormat>() {
            Ok(f) => f,
            Err(e) => return fail_input(&e.to_string()),
        },
        None => cfg
            .output
            .as_ref()
            .and_then(|o| o.format)
            .unwrap_or(OutputFormat::Csv),
    };
    let out_dir = args
        .out
        .clone()
        .or_else(|| {
            cfg.output
                .as_ref()
                .and_then(|o| o.dir.clone())
                .map(PathBuf::from)
        })
        .or_else(|| std::env::var_os("GRALE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let report = match runner::run(kind, &cfg) {
        Ok(r) => r,
        Err(e) => return fail_input(&e.to_string()),
    };
    match runner::write_artifacts(&report, &out_dir, format) {
        Ok(paths) => {
            println!("{}", report.summary);
            for p in paths {
                println!("wrote {}", p.display());
            }
            if report.passed {
                0
            } else {
                1
            }
        }
        Err(e) => fail_input(&format!("writing artifacts: {e}")),
    }
}

fn print_defaults(experiment: Option<String>) -> u8 {
    let render = |kind: ExperimentKind| {
        ExperimentConfig::default_for(kind)
            .to_toml_string()
            .expect("built-in config serializes")
    };
    match experiment {
        Some(name) => match name.parse::<ExperimentKind>() {
            Ok(kind) => {
                print!("{}", render(kind));
                0
            }
            Err(e) => fail_input(&e.to_string()),
        },
        None => {
            for kind in ExperimentKind::ALL {
                println!("# {kind}");
                print!("{}", render(kind));
                println!();
            }
            0
        }
    }
}
