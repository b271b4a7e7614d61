use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use wnd_core::bench::{self, BenchConfig};
use wnd_core::cycles;
use wnd_core::milp_export;
use wnd_core::model::{self, GeneratorParams};
use wnd_core::relaxation::{self, Scope};
use wnd_core::solver::{self, CutMode, SolveReport, SolverConfig};
use wnd_core::{Instance, Parallelism};

#[derive(Parser)]
#[command(name = "wnd", version, about = "Wireless network design: generate, solve, separate, export")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic instance.
    Generate {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve an instance and print the JSON report.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        /// Split the search tree over threads.
        #[arg(long)]
        parallel: bool,
        /// Check candidate extensions exactly before counting them in bounds.
        #[arg(long)]
        lookahead: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List the two-cycle cuts of an instance.
    Separate {
        instance: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the big-M model in LP format.
    ExportMilp {
        instance: PathBuf,
        /// `two-cycle` appends the two-cycle cuts.
        #[arg(long, value_enum, default_value_t = Cuts::None)]
        cuts: Cuts,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve a seeded suite with and without cuts; prints a table, writes CSV.
    Bench {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value_t = 10)]
        instances: usize,
        #[arg(long, default_value_t = 60.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 100_000)]
        node_limit: u64,
        /// Run the instances one after another.
        #[arg(long)]
        sequential: bool,
        /// CSV output path.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the table of a bench CSV file.
    Report { csv: PathBuf },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    receivers: usize,
    #[arg(long, default_value_t = 5)]
    transmitters: usize,
    #[arg(long, default_value_t = 3.5)]
    gamma: f64,
    /// SIR threshold in dB.
    #[arg(long, default_value_t = 8.0, allow_negative_numbers = true)]
    delta_db: f64,
    #[arg(long, default_value_t = 1e-5)]
    noise: f64,
    #[arg(long, default_value_t = 1.0)]
    p_max: f64,
    /// Log-normal shadowing std in dB, 0 for none.
    #[arg(long, default_value_t = 0.0)]
    shadowing_db: f64,
}

impl GenArgs {
    fn params(&self) -> GeneratorParams {
        GeneratorParams {
            gamma: self.gamma,
            shadowing_db: self.shadowing_db,
            sir_threshold: model::db_to_linear(self.delta_db),
            noise: self.noise,
            p_max: self.p_max,
            ..GeneratorParams::default()
        }
    }
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, value_enum, default_value_t = Cuts::None)]
    cuts: Cuts,
    /// Seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1_000_000)]
    node_limit: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cuts {
    None,
    TwoCycle,
}

impl From<Cuts> for CutMode {
    fn from(c: Cuts) -> Self {
        match c {
            Cuts::None => CutMode::None,
            Cuts::TwoCycle => CutMode::TwoCycle,
        }
    }
}

fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).with_context(|| format!("time limit {s} is not a valid duration"))
}

fn load(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    model::read_instance(&text).with_context(|| format!("loading {}", path.display()))
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { gen, output } => {
            let inst = model::generate(gen.seed, gen.receivers, gen.transmitters, &gen.params())?;
            emit(&model::write_instance(&inst), output.as_deref())
        }
        Command::Solve {
            instance,
            search,
            parallel,
            lookahead,
            output,
        } => {
            let inst = load(&instance)?;
            let config = SolverConfig {
                cuts: search.cuts.into(),
                node_limit: search.node_limit,
                time_limit: seconds(search.time_limit)?,
                parallelism: if parallel { Parallelism::Parallel } else { Parallelism::Sequential },
                lookahead,
                ..SolverConfig::default()
            };
            let result = solver::solve(&inst, &config)?;
            info!("explored {} nodes", result.nodes_explored);
            let report = SolveReport::new(&result, &inst);
            let mut text = serde_json::to_string_pretty(&report)?;
            text.push('\n');
            emit(&text, output.as_deref())
        }
        Command::Separate { instance, output } => {
            let inst = load(&instance)?;
            let cuts = cycles::enumerate_two_cycles_with(
                &relaxation::build_graph(&inst, Scope::All),
                Parallelism::Parallel,
            );
            info!("{} two-cycle cuts", cuts.len());
            emit(&cycles::dump_cuts(&cuts), output.as_deref())
        }
        Command::ExportMilp { instance, cuts, output } => {
            let inst = load(&instance)?;
            let strengthen = matches!(cuts, Cuts::TwoCycle);
            emit(&milp_export::export_bm(&inst, strengthen), output.as_deref())
        }
        Command::Bench {
            gen,
            instances,
            time_limit,
            node_limit,
            sequential,
            output,
        } => {
            let config = BenchConfig {
                seed: gen.seed,
                instances,
                receivers: gen.receivers,
                transmitters: gen.transmitters,
                params: gen.params(),
                node_limit,
                time_limit: seconds(time_limit)?,
                parallelism: if sequential { Parallelism::Sequential } else { Parallelism::Parallel },
            };
            let report = bench::run_bench(&config)?;
            print!("{}", bench::format_table(&report));
            if let Some(path) = output {
                fs::write(&path, bench::to_csv(&report)).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        Command::Report { csv } => {
            let text = fs::read_to_string(&csv).with_context(|| format!("reading {}", csv.display()))?;
            let report = bench::from_csv(&text).with_context(|| format!("parsing {}", csv.display()))?;
            print!("{}", bench::format_table(&report));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("WND_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // help and version exit 0, usage errors 2
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
