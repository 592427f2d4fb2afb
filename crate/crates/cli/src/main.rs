use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use wgqed_cli::error::CliError;
use wgqed_cli::scenario::Format;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wgqed", version, about = "Few-photon waveguide-QED scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    /// Output format; overrides the scenario's own setting.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario file.
    Run { scenario: PathBuf },
    /// Run a scenario once per value of a scalar parameter.
    Sweep {
        scenario: PathBuf,
        /// Dotted path of the parameter, e.g. `task.width_rate`.
        #[arg(long)]
        param: String,
        /// Comma-separated values; may be empty.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
}

fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| CliError::InvalidScenario(format!("bad sweep value {s:?}"))))
        .collect()
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::InvalidScenario(format!("thread pool: {e}")))?;
    }
    let format = cli.format.map(Format::from);
    match &cli.command {
        Command::Run { scenario } => {
            let summary = wgqed_cli::run_file(scenario, &cli.output_dir, format)?;
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
        }
        Command::Sweep { scenario, param, values } => {
            let values = parse_values(values)?;
            let (index, runs) = wgqed_cli::sweep_file(scenario, param, &values, &cli.output_dir, format)?;
            for s in &runs {
                println!("{}", serde_json::to_string(s).expect("summary serializes"));
            }
            println!("{{\"index\": {}}}", serde_json::to_string(&index.display().to_string()).expect("path"));
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
