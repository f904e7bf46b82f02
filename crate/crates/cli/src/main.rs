use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qce_dfrc::{run, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "qce-dfrc", version, about = "QCE dual-function radar-communication waveform design")]
struct Cli {
    /// Overrides `system.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `out_dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design one waveform; writes beampattern.csv, convergence.csv, waveform.csv, summary.json.
    Solve { config: PathBuf },
    /// Solve over the b x L x seed grid; writes tradeoff.csv and tradeoff_mean.csv.
    Sweep { config: PathBuf },
    /// Compare against exhaustive enumeration on small instances; writes oracle.csv.
    OracleCheck { config: PathBuf },
    /// Simulate the symbol error rate of a stored waveform; writes ser.csv.
    Ser {
        config: PathBuf,
        #[arg(long)]
        waveform: PathBuf,
    },
}

fn load(cli: &Cli, path: &PathBuf) -> qce_dfrc::Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.system.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> qce_dfrc::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Solve { config } => {
            let cfg = load(cli, config)?;
            let s = run::run_solve(&cfg)?;
            println!(
                "mse {} alpha {} min_margin {} feasible {} converged {} stages {} outer {}",
                s.mse,
                s.alpha,
                s.min_margin,
                !s.infeasible,
                s.vertex_converged && s.all_stages_converged,
                s.stages.len(),
                s.outer_iterations
            );
            if s.infeasible {
                eprintln!(
                    "warning: {} communication constraints violated (max {})",
                    s.ci_violations, s.max_ci_violation
                );
            }
        }
        Command::Sweep { config } => {
            let cfg = load(cli, config)?;
            let rows = run::run_sweep(&cfg)?;
            println!("{} rows written to {}", rows.len(), cfg.out_dir.join("tradeoff.csv").display());
        }
        Command::OracleCheck { config } => {
            let cfg = load(cli, config)?;
            let s = run::run_oracle_check(&cfg)?;
            println!(
                "oracle-feasible {}/{} agreeing {} ({:.3}) pass {}",
                s.oracle_feasible, s.seeds, s.agreeing, s.agreement_fraction, s.pass
            );
        }
        Command::Ser { config, waveform } => {
            let cfg = load(cli, config)?;
            for r in run::run_ser(&cfg, waveform)? {
                println!("snr_db {} ser {} ({} / {})", r.snr_db, r.ser, r.errors, r.symbols);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
