use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mocohda::benchmark::ZdtParams;
use mocohda::cpes::Setting;
use mocohda::netsim::TopologyKind;
use mocohda::nsga2::GaConfig;
use mocohda::problems::ZdtVariant;
use mocohda_cli::{
    cmd_report, cmd_run_baseline, cmd_run_benchmark, cmd_run_cpes, NetworkOptions, RunRecord, StatsSummary,
};

#[derive(Parser)]
#[command(name = "mocohda", version, about = "Distributed multi-objective negotiation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Problem {
    Zdt1,
    Zdt2,
    Zdt3,
}

impl From<Problem> for ZdtVariant {
    fn from(p: Problem) -> Self {
        match p {
            Problem::Zdt1 => ZdtVariant::Zdt1,
            Problem::Zdt2 => ZdtVariant::Zdt2,
            Problem::Zdt3 => ZdtVariant::Zdt3,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SettingArg {
    #[value(name = "A")]
    A,
    #[value(name = "B")]
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    SmallWorld,
    Ring,
    Full,
}

#[derive(clap::Args)]
struct Common {
    /// Number of seeded runs.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Base seed; every run derives its own seed from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct Network {
    #[arg(long, value_enum, default_value = "small-world")]
    topology: TopologyArg,
    /// Neighbours per side for the small-world overlay.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Rewiring probability for the small-world overlay.
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    /// Send every message through the JSON wire format.
    #[arg(long)]
    serialize: bool,
}

impl Network {
    fn options(&self) -> NetworkOptions {
        let topology = match self.topology {
            TopologyArg::SmallWorld => TopologyKind::SmallWorld { k: self.k, p: self.p },
            TopologyArg::Ring => TopologyKind::Ring,
            TopologyArg::Full => TopologyKind::Full,
        };
        NetworkOptions {
            topology,
            serialize_messages: self.serialize,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Negotiate a ZDT front with one agent per variable.
    RunBenchmark {
        #[arg(long, value_enum)]
        problem: Problem,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        network: Network,
        #[arg(long)]
        min_change: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        agents: Option<usize>,
    },
    /// Negotiate generation schedules for the CHP and wind cluster.
    RunCpes {
        #[arg(long, value_enum, ignore_case = true)]
        setting: SettingArg,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        network: Network,
    },
    /// Central NSGA-II on a ZDT problem.
    RunBaseline {
        #[arg(long, value_enum)]
        problem: Problem,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        population: Option<usize>,
    },
    /// Recompute summary and plots from an output directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn progress(r: &RunRecord) {
    eprintln!(
        "run {:>3}  hv {:.6}  converged {}  messages {}  {:.2}s",
        r.run,
        r.hypervolume,
        r.converged,
        r.messages.map_or("-".to_string(), |m| m.to_string()),
        r.wall_time_s
    );
}

fn print_summary(s: &StatsSummary) {
    println!(
        "hv mean {:.6} std {:.6} (min {:.6}, max {:.6})",
        s.hypervolume.mean, s.hypervolume.std, s.hypervolume.min, s.hypervolume.max
    );
    println!("aggregated hv {:.6}", s.aggregated_hypervolume);
    if let Some(m) = s.messages {
        println!("messages mean {:.1} std {:.1}", m.mean, m.std);
    }
    if let Some(d) = s.decide_calls {
        println!("decide calls per agent mean {:.1} std {:.1}", d.mean, d.std);
    }
    println!("converged {}/{}", s.converged_runs, s.runs);
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::RunBenchmark {
            problem,
            common,
            network,
            min_change,
            points,
            agents,
        } => {
            let variant = ZdtVariant::from(problem);
            let defaults = ZdtParams::defaults(variant);
            let params = ZdtParams {
                min_change: min_change.unwrap_or(defaults.min_change),
                points: points.unwrap_or(defaults.points),
                agents: agents.unwrap_or(defaults.agents),
                ..defaults
            };
            let out = common
                .out
                .unwrap_or_else(|| PathBuf::from(format!("results/benchmark-{variant}")));
            cmd_run_benchmark(&params, &network.options(), common.runs, common.seed, &out, progress)
        }
        Command::RunCpes {
            setting,
            common,
            network,
        } => {
            let setting = match setting {
                SettingArg::A => Setting::A,
                SettingArg::B => Setting::B,
            };
            let out = common
                .out
                .unwrap_or_else(|| PathBuf::from(format!("results/cpes-{setting}")));
            cmd_run_cpes(setting, &network.options(), common.runs, common.seed, &out, progress)
        }
        Command::RunBaseline {
            problem,
            common,
            generations,
            population,
        } => {
            let variant = ZdtVariant::from(problem);
            let defaults = GaConfig::default();
            let ga = GaConfig {
                generations: generations.unwrap_or(defaults.generations),
                population: population.unwrap_or(defaults.population),
                ..defaults
            };
            let out = common
                .out
                .unwrap_or_else(|| PathBuf::from(format!("results/baseline-{variant}")));
            cmd_run_baseline(variant, &ga, common.runs, common.seed, &out, progress)
        }
        Command::Report { input, out } => cmd_report(&input, &out),
    };
    match result {
        Ok(summary) => {
            print_summary(&summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
