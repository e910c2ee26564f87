//! `ftcbf`: runs single episodes, method comparisons and the canned
//! experiment tables, and writes plot-ready CSV.

use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ftcbf_core::experiments::{self, ExperimentId, SummaryTable, DEFAULT_SEED, DEFAULT_TRIALS};
use ftcbf_core::simulator::{run_batch, run_episode, FailureKind};
use ftcbf_core::trace_io::{format_real, write_trace_file};
use ftcbf_core::{BicycleGeometry, EpisodeTrace, ExpHocbfParams, FtBaselineParams, InitBox, Method, ModelKind, SimConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "ftcbf", version, about = "Fixed-time HOCBF safety filter benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one episode, print its convergence time and optionally write the trace.
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// Trace CSV to write.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the fixed-time method and the finite-time baseline from one initial state.
    #[command(allow_negative_numbers = true)]
    Compare {
        #[command(flatten)]
        sim: SimArgs,
        /// Directory receiving the two trace CSVs.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Reproduce one of the canned experiments as summary CSV.
    #[command(allow_negative_numbers = true)]
    Table {
        #[arg(long)]
        experiment: ExperimentId,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Scenario for `--experiment custom`; baseline gains also apply to table3.
        #[command(flatten)]
        sim: SimArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct SimArgs {
    #[arg(long, default_value_t = ModelKind::PointMass)]
    model: ModelKind,
    #[arg(long, default_value_t = Method::FixedTime)]
    method: Method,
    /// Prescribed convergence time in seconds.
    #[arg(long = "T", default_value_t = 10.0)]
    prescribed_time: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Defaults to 1.5T for single episodes and 5T for comparisons.
    #[arg(long)]
    horizon: Option<f64>,
    /// Initial state `x,y,a,b` in the model's own ordering.
    #[arg(long, value_parser = parse_init, allow_hyphen_values = true, default_value = "0,0,0,0")]
    init: [f64; 4],
    /// Bicycle rear-axle distance.
    #[arg(long, default_value_t = 10.0)]
    lr: f64,
    #[arg(long, default_value_t = 1.0)]
    k1: f64,
    #[arg(long, default_value_t = 2.0)]
    k2: f64,
    #[arg(long, default_value_t = 1.0)]
    p1: f64,
    #[arg(long, default_value_t = 1.0)]
    p2: f64,
    #[arg(long, default_value_t = 0.5)]
    q1: f64,
    #[arg(long, default_value_t = 0.5)]
    q2: f64,
    #[arg(long, default_value_t = 1e-6)]
    eps0: f64,
}

fn parse_init(s: &str) -> Result<[f64; 4], String> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    values.try_into().map_err(|v: Vec<f64>| format!("expected 4 comma-separated values, got {}", v.len()))
}

impl SimArgs {
    fn baseline(&self) -> ftcbf_core::Result<FtBaselineParams> {
        FtBaselineParams::new(self.p1, self.p2, self.q1, self.q2, self.eps0)
    }

    fn config(&self, default_horizon_factor: Option<f64>) -> ftcbf_core::Result<SimConfig> {
        let mut cfg = SimConfig::new(self.model, self.method, self.prescribed_time, self.dt, self.init);
        if let Some(factor) = default_horizon_factor {
            cfg = cfg.with_horizon(factor * self.prescribed_time);
        }
        if let Some(h) = self.horizon {
            cfg = cfg.with_horizon(h);
        }
        if self.model == ModelKind::Bicycle {
            cfg.geom = Some(BicycleGeometry::new(self.lr)?);
        }
        cfg.exp = ExpHocbfParams::new(self.k1, self.k2)?;
        cfg.baseline = self.baseline()?;
        cfg.validate()?;
        for w in cfg.warnings() {
            eprintln!("warning: {w}");
        }
        Ok(cfg)
    }
}

/// Number of decimals that resolves one step of size `dt`.
fn decimals_for(dt: f64) -> usize {
    (-dt.log10() - 1e-9).ceil().clamp(0.0, 12.0) as usize
}

fn format_time(t: Option<f64>, dt: f64) -> String {
    t.map_or_else(|| "none".to_owned(), |t| format!("{t:.*}", decimals_for(dt)))
}

/// Reports a trace's failure on stderr; returns true if it was infeasible.
fn report_failure(label: &str, trace: &EpisodeTrace) -> bool {
    match trace.failure {
        Some(f) => match f.kind {
            FailureKind::Infeasible { bound } => {
                eprintln!("{label}infeasible constraint at t = {} (bound {bound}); episode stopped", f.time);
                true
            }
            FailureKind::Diverged => {
                eprintln!("warning: {label}state diverged at t = {}; episode stopped", f.time);
                false
            }
        },
        None => false,
    }
}

fn simulate(sim: &SimArgs, out: Option<&Path>) -> Result<ExitCode, Box<dyn Error>> {
    let cfg = sim.config(None)?;
    let trace = run_episode(&cfg)?;
    if let Some(path) = out {
        write_trace_file(&trace, path)?;
    }
    println!("{}", format_time(trace.convergence_time(), cfg.dt));
    Ok(if report_failure("", &trace) { ExitCode::from(EXIT_INFEASIBLE) } else { ExitCode::SUCCESS })
}

fn compare(sim: &SimArgs, out_dir: &Path) -> Result<ExitCode, Box<dyn Error>> {
    let cfg = sim.config(Some(5.0))?;
    let cmp = experiments::compare(&cfg, cfg.baseline)?;
    std::fs::create_dir_all(out_dir)?;
    for (method, trace) in [(Method::FixedTime, &cmp.proposed), (Method::FtBaseline, &cmp.baseline)] {
        let path = out_dir.join(format!("compare_{method}.csv"));
        write_trace_file(trace, &path)?;
        report_failure(&format!("{method}: "), trace);
        println!("{method}: {} -> {}", format_time(trace.convergence_time(), cfg.dt), path.display());
    }
    println!("{}", cmp.verdict());
    Ok(ExitCode::SUCCESS)
}

fn write_summary(table: &SummaryTable, out_dir: &Path, name: &str) -> Result<(), Box<dyn Error>> {
    let path = out_dir.join(name);
    table.write_file(&path)?;
    println!("{}", table.header.join(","));
    for row in &table.rows {
        println!("{}", row.join(","));
    }
    println!("wrote {}", path.display());
    Ok(())
}

/// Per-trial convergence of a batch built from the command-line scenario.
fn custom(sim: &SimArgs, seed: u64, trials: usize) -> Result<SummaryTable, Box<dyn Error>> {
    let cfg = sim.config(None)?;
    let report = run_batch(&cfg, trials, seed, &InitBox::default())?;
    let header = ["trial", "seed", "x1", "x2", "x3", "x4", "convergence_time", "failure"];
    let rows = report
        .outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let mut row = vec![i.to_string(), o.seed.to_string()];
            row.extend(o.init.iter().map(|&v| format_real(v)));
            row.push(o.converged_time().map_or_else(|| "none".to_owned(), format_real));
            row.push(match o.failure.map(|f| f.kind) {
                None => "none".to_owned(),
                Some(FailureKind::Infeasible { .. }) => "infeasible".to_owned(),
                Some(FailureKind::Diverged) => "diverged".to_owned(),
            });
            row
        })
        .collect();
    eprintln!(
        "{} of {} trials converged by T, {} by 1.5T",
        report.converged_by(cfg.prescribed_time),
        report.trials(),
        report.converged_by(1.5 * cfg.prescribed_time)
    );
    Ok(SummaryTable { header: header.map(String::from).to_vec(), rows })
}

fn table(experiment: ExperimentId, seed: u64, trials: usize, out_dir: &Path, sim: &SimArgs) -> Result<ExitCode, Box<dyn Error>> {
    std::fs::create_dir_all(out_dir)?;
    match experiment {
        ExperimentId::Fig1 => {
            for (path, t) in experiments::fig1(out_dir)? {
                println!("{} -> {}", format_time(t, 1e-3), path.display());
            }
        }
        ExperimentId::Table1 => write_summary(&experiments::table1_summary(&experiments::table1()?), out_dir, "table1.csv")?,
        ExperimentId::Table2 => {
            write_summary(&experiments::table2_summary(&experiments::table2(seed, trials)?), out_dir, "table2.csv")?
        }
        ExperimentId::Table3Compare => {
            let summary = experiments::table3(seed, trials, sim.baseline()?)?;
            write_summary(&experiments::table3_summary(&summary), out_dir, "table3.csv")?
        }
        ExperimentId::Custom => write_summary(&custom(sim, seed, trials)?, out_dir, "custom.csv")?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Simulate { sim, out } => simulate(sim, out.as_deref()),
        Command::Compare { sim, out_dir } => compare(sim, out_dir),
        Command::Table { experiment, seed, trials, out_dir, sim } => table(*experiment, *seed, *trials, out_dir, sim),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_USAGE)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_parsing() {
        assert_eq!(parse_init("0,0,-10,0").unwrap(), [0.0, 0.0, -10.0, 0.0]);
        assert!(parse_init("1,2,3").is_err());
        assert!(parse_init("1,2,x,4").is_err());
    }

    #[test]
    fn decimals_follow_step_size() {
        assert_eq!(decimals_for(1e-3), 3);
        assert_eq!(decimals_for(1e-4), 4);
        assert_eq!(decimals_for(0.05), 2);
        assert_eq!(format_time(Some(10.0046), 1e-3), "10.005");
        assert_eq!(format_time(None, 1e-3), "none");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
