use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use vnsim_cli::{
    cmd_compare, cmd_constants, cmd_evolve, parse_methods, CliError, CompareConfig, RunConfig,
};
use vnsim_core::models::{preset, ModelFile};
use vnsim_core::{AnchorPolicy, Method};

#[derive(Parser)]
#[command(
    name = "vnsim",
    version,
    about = "Von Neumann dynamics in the Pauli-string basis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Anchor {
    /// Restart the α chart whenever V(α) gets ill-conditioned.
    Rebase,
    /// Single chart from α = 0; fails at a singular V(α).
    Never,
}

#[derive(Subcommand)]
enum Command {
    /// Print the non-zero structure constants as CSV.
    Constants {
        #[arg(long)]
        sites: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propagate one model with one method.
    Evolve {
        /// Preset name or path to a JSON model file.
        #[arg(long)]
        model: String,
        #[arg(long)]
        method: String,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_final: f64,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, default_value_t = vnsim_cli::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Anchor::Rebase)]
        anchor: Anchor,
        /// Also write the circuit block listing (circuit methods).
        #[arg(long)]
        plan: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several methods against a refined oracle and report deviations.
    Compare {
        #[arg(long)]
        model: String,
        /// Comma-separated method names.
        #[arg(long)]
        methods: String,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        t_final: f64,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, default_value_t = vnsim_cli::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = vnsim_cli::DEFAULT_REFINE)]
        refine: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// JSON tolerances; exit code 4 when any check fails.
        #[arg(long = "assert")]
        assert: Option<PathBuf>,
    },
    /// Print a preset as a JSON model file.
    ExportModel {
        #[arg(long)]
        name: String,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Constants { sites, out } => {
            let n = match out {
                Some(path) => {
                    let mut f = std::fs::File::create(&path).map_err(|source| CliError::Io {
                        path: path.display().to_string(),
                        source,
                    })?;
                    cmd_constants(sites, &mut f)?
                }
                None => cmd_constants(sites, &mut std::io::stdout().lock())?,
            };
            log::info!("{n} non-zero structure constants");
        }
        Command::Evolve {
            model,
            method,
            dt,
            t_final,
            stride,
            shots,
            seed,
            anchor,
            plan,
            out,
        } => {
            let method: Method = method
                .parse()
                .map_err(|_| CliError::Config(format!("unknown method {method:?}")))?;
            let config = RunConfig {
                dt,
                stride,
                shots,
                seed,
                anchor: match anchor {
                    Anchor::Rebase => AnchorPolicy::default(),
                    Anchor::Never => AnchorPolicy::Never,
                },
                dump_plan: plan,
                ..RunConfig::new(&model, method, t_final, out)
            };
            let summary = cmd_evolve(&config)?;
            println!(
                "method {} dt {} steps {}",
                summary.method, summary.dt, summary.steps
            );
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Compare {
            model,
            methods,
            dt,
            t_final,
            stride,
            shots,
            seed,
            refine,
            out,
            assert,
        } => {
            let config = CompareConfig {
                dt,
                stride,
                shots,
                seed,
                refine,
                assert,
                ..CompareConfig::new(&model, parse_methods(&methods)?, t_final, out)
            };
            let result = cmd_compare(&config);
            if let Ok(report) = &result {
                print!("{}", report.to_text());
            }
            result?;
        }
        Command::ExportModel { name } => {
            let spec = preset(&name)?;
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{}", ModelFile::from_spec(&spec).to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
