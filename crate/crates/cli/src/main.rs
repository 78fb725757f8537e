use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use pcfb_cli::{emit_config, emit_results, parse_bits, parse_config, parse_snr, resolve, CliError, OutputFormat, Overrides};
use pcfb_core::montecarlo::{run_experiment, ExperimentKind};

const PRECEDENCE: &str = "\
Precedence: command-line flags override values from --config, which override the
built-in defaults (snr-db 10, trials 100000, seed 0, no bit budgets). Flags apply to
every experiment in the config. Without --config, --r and --t are required.

The worker thread count defaults to MIMOFB_THREADS, or to the number of CPUs.
Results do not depend on the thread count.

Errors are printed to stderr as one JSON line: {\"error\":kind,\"message\":..}.";

#[derive(Parser)]
#[command(name = "pcfb", version, about = "Limited-feedback MIMO post-coder simulator", after_help = PRECEDENCE)]
struct Cli {
    /// Worker threads for Monte Carlo trials.
    #[arg(long, global = true, env = "MIMOFB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Water-filling level, received power and full-CSI capacity per SNR.
    #[command(after_help = PRECEDENCE)]
    Capacity(Common),
    /// Train Lloyd codebooks for every angle class; --bits is bits per parameter.
    #[command(after_help = PRECEDENCE)]
    TrainCodebook(Common),
    /// Post-coder quantization MSE and its bounds against total feedback bits.
    #[command(after_help = PRECEDENCE)]
    MseSweep(Common),
    /// Achievable-rate lower bounds against total feedback bits, per SNR.
    #[command(after_help = PRECEDENCE)]
    RateSweep(Common),
    /// Tight bound as a percentage of capacity against SNR, per budget.
    #[command(after_help = PRECEDENCE)]
    RateRatio(Common),
    /// Single-vector feedback against the full-matrix bound.
    #[command(after_help = PRECEDENCE)]
    SingleVsFull(Common),
    /// Uncoded QPSK bit error rate on the dominant mode.
    #[command(after_help = PRECEDENCE)]
    Ber {
        #[command(flatten)]
        common: Common,
        /// QPSK symbols sent per channel draw.
        #[arg(long)]
        symbols_per_trial: Option<usize>,
    },
    /// Run every experiment in a config file, whatever its kind.
    #[command(after_help = PRECEDENCE)]
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
        #[arg(short, long, action = clap::ArgAction::Count)]
        verbose: u8,
        /// Print the resolved config and exit.
        #[arg(long)]
        print_config: bool,
    },
}

/// A comma-separated flag value, parsed as one argument.
#[derive(Clone)]
struct List<T>(Vec<T>);

#[derive(Args)]
struct Common {
    /// JSON config file: one experiment, or {"experiments": [...], "output", "output_path", "verbosity"}.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Receive antennas.
    #[arg(long)]
    r: Option<usize>,
    /// Transmit antennas.
    #[arg(long)]
    t: Option<usize>,
    /// SNRs in dB, comma separated.
    #[arg(long, value_parser = |s: &str| parse_snr(s).map(List), allow_hyphen_values = true)]
    snr_db: Option<List<f64>>,
    /// Bit budgets: a list such as 2,4,6 or inclusive ranges lo:hi[:step].
    #[arg(long, value_parser = |s: &str| parse_bits(s).map(List))]
    bits: Option<List<u32>>,
    /// Monte Carlo trials per point.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Progress on stderr; repeat for more.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Print the resolved config and exit.
    #[arg(long)]
    print_config: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            r: self.r,
            t: self.t,
            snr_db: self.snr_db.clone().map(|l| l.0),
            bits: self.bits.clone().map(|l| l.0),
            trials: self.trials,
            seed: self.seed,
            symbols_per_trial: None,
            out: self.out.clone(),
            format: self.format,
            verbosity: self.verbose,
        }
    }
}

fn read_config(path: &PathBuf) -> Result<pcfb_cli::RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    parse_config(&text)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let (kind, config_path, overrides, print_config) = match cli.command {
        Command::Run { config, out, format, verbose, print_config } => {
            let o = Overrides { out, format, verbosity: verbose, ..Overrides::default() };
            (None, Some(config), o, print_config)
        }
        Command::Ber { common, symbols_per_trial } => {
            let mut o = common.overrides();
            o.symbols_per_trial = symbols_per_trial;
            (Some(ExperimentKind::Ber), common.config, o, common.print_config)
        }
        Command::Capacity(c) => (Some(ExperimentKind::Capacity), c.config.clone(), c.overrides(), c.print_config),
        Command::TrainCodebook(c) => (Some(ExperimentKind::TrainCodebook), c.config.clone(), c.overrides(), c.print_config),
        Command::MseSweep(c) => (Some(ExperimentKind::MseSweep), c.config.clone(), c.overrides(), c.print_config),
        Command::RateSweep(c) => (Some(ExperimentKind::RateSweep), c.config.clone(), c.overrides(), c.print_config),
        Command::RateRatio(c) => (Some(ExperimentKind::RateRatio), c.config.clone(), c.overrides(), c.print_config),
        Command::SingleVsFull(c) => (Some(ExperimentKind::SingleVsFull), c.config.clone(), c.overrides(), c.print_config),
    };
    let file_config = config_path.as_ref().map(read_config).transpose()?;
    let config = resolve(kind, file_config, &overrides)?;
    if print_config {
        println!("{}", emit_config(&config));
        return Ok(());
    }
    for (i, spec) in config.experiments.iter().enumerate() {
        let start = Instant::now();
        if config.verbosity > 0 {
            eprintln!("running {} r={} t={} trials={} seed={}", spec.kind.as_str(), spec.r, spec.t, spec.trials, spec.seed);
        }
        let table = run_experiment(spec)?;
        let path = config.output_for(i);
        emit_results(&table, config.output, path.as_deref())?;
        if config.verbosity > 0 {
            let dest = path.map(|p| p.display().to_string()).unwrap_or_else(|| "stdout".into());
            eprintln!("wrote {} rows to {dest} in {:.2} s", table.rows(), start.elapsed().as_secs_f64());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::Usage(first).to_json_line());
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::FAILURE
        }
    }
}
