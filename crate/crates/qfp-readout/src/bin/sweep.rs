use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qfp_readout::sweep::{execute, list_recipes, ConfigSources};

#[derive(Parser)]
#[command(name = "sweep", version, about = "Parameter sweeps of flux-qubit readout through a parametron")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Recipe or figure preset name.
    #[arg(long)]
    recipe: Option<String>,
    /// TOML file with [sweep], [model], [measurement], [storage], [overlap], [dispersive] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one parameter, e.g. `--set measurement.alpha=2`. Applied after the file.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    sets: Vec<String>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// List recipes and figure presets.
    Recipes,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_POINT_FAILURE: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(Command::Recipes) = cli.command {
        print!("{}", list_recipes());
        return ExitCode::SUCCESS;
    }
    let Some(out) = cli.out else {
        eprintln!("config error: --out is required");
        return ExitCode::from(EXIT_CONFIG);
    };
    let file = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(src) => Some((p.display().to_string(), src)),
            Err(e) => {
                eprintln!("config error: {}: {e}", p.display());
                return ExitCode::from(EXIT_CONFIG);
            }
        },
        None => None,
    };
    let sources = ConfigSources { recipe: cli.recipe, file, overrides: cli.sets, out_path: Some(out.clone()) };
    let cfg = match sources.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let result = match execute(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("cannot write {}: {e}", out.display());
            return ExitCode::FAILURE;
        }
    };
    let failed = result.failures();
    eprintln!("{} rows written to {} ({failed} failed)", result.rows.len(), out.display());
    if failed > 0 {
        ExitCode::from(EXIT_POINT_FAILURE)
    } else {
        ExitCode::SUCCESS
    }
}
