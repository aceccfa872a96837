//! Command-line front end for satisfaction densities of quantifier-free
//! formulas over finite and interval mappings.
//!
//! Exit codes: 0 success, 1 unusable input (parse errors, bad flags),
//! 2 tripped resource guard, 3 violated structural hypothesis.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, GlobalOpts};
use manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(
    name = "qfmap",
    version,
    about = "Satisfaction densities of quantifier-free formulas over finite mappings",
    propagate_version = true
)]
struct Cli {
    /// seed for every randomized step; fixed default keeps runs reproducible
    #[arg(long, global = true, default_value_t = 271_828)]
    seed: u64,
    /// worker threads for parallel enumeration (0 = library default)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// print values as decimals (12 significant digits) instead of exact ratios
    #[arg(long, global = true)]
    decimal: bool,
    /// refuse exact enumerations that need more than this many tuples
    #[arg(long, global = true, value_name = "TUPLES")]
    budget: Option<u64>,
    /// write a reproducibility manifest (input/output digests, parameters)
    #[arg(long, global = true, value_name = "FILE")]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Satisfaction densities of formulas on one structure
    Density(commands::DensityArgs),
    /// Sample, uniformize, and blow an interval mapping into a finite one
    Approximate(commands::ApproximateArgs),
    /// Test structural hypotheses: mass transport, image monotonicity, cycle preservation
    Check(commands::CheckArgs),
    /// Ball-type histogram, residuality, and dispersion of a finite mapping
    Stats(commands::StatsArgs),
    /// Densities along a structure sequence, with successive deviations
    Converge(commands::ConvergeArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Density(_) => "density",
            Command::Approximate(_) => "approximate",
            Command::Check(_) => "check",
            Command::Stats(_) => "stats",
            Command::Converge(_) => "converge",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits with 2 on usage errors; 2 is reserved for resource
            // guards here, so usage problems are remapped to 1.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Input(format!("--threads: {e}")))?;
    }
    let g = GlobalOpts {
        seed: cli.seed,
        decimal: cli.decimal,
        budget: cli
            .budget
            .unwrap_or(mapping_limits::density::DEFAULT_TUPLE_BUDGET),
    };
    let mut manifest = RunManifest::new(cli.command.name(), cli.seed);
    let out = match &cli.command {
        Command::Density(args) => commands::density(args, &g, &mut manifest)?,
        Command::Approximate(args) => commands::cmd_approximate(args, &g, &mut manifest)?,
        Command::Check(args) => commands::check(args, &g, &mut manifest)?,
        Command::Stats(args) => commands::stats(args, &g, &mut manifest)?,
        Command::Converge(args) => commands::converge(args, &g, &mut manifest)?,
    };
    print!("{}", out.stdout);
    if let Some(path) = &cli.manifest {
        manifest.record_output("stdout", &out.stdout);
        for (file, digest) in &out.files {
            manifest.record_output_digest(&file.display().to_string(), digest);
        }
        manifest.write(path)?;
    }
    Ok(())
}
