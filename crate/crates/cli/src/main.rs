use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use mobicell_core::scenario::{parse_scenario_with_report, LoadError};
use mobicell_core::{load_scenario, run_scenario, ScenarioDescription, SimOutput, SplitTable};

#[derive(Parser)]
#[command(name = "mobicell", version, about = "Mobile-cell private 5G network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and print every diagnostic.
    Validate {
        file: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario and write trace.log, metrics.json and series/.
    Run {
        file: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "end-time")]
        end_time: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Run this many consecutive seeds in parallel, one subdirectory each.
        #[arg(long = "sweep-seeds")]
        sweep_seeds: Option<u64>,
    },
    /// Run two scenarios and print a delta table for one metric.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = Metric::Coverage)]
        metric: Metric,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Split transport requirements.
    Splits {
        #[command(subcommand)]
        command: SplitsCommand,
    },
    /// Sample a mobility trace as CSV (t_s,x_m,y_m).
    TraceCsv {
        file: PathBuf,
        #[arg(long = "trace-id")]
        trace_id: String,
        /// Sampling step; defaults to the scenario sample period.
        #[arg(long)]
        step: Option<f64>,
    },
}

#[derive(Subcommand)]
enum SplitsCommand {
    /// Print the default table, or the effective one of a scenario.
    DumpTable {
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Coverage,
    Outage,
    Latency,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Invalid { .. } => Failure::Invalid(e.to_string()),
            LoadError::Io { .. } => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Validate { file, json } => validate(&file, json),
        Command::Run { file, seed, end_time, out, sweep_seeds } => {
            let s = load_scenario(&file)?;
            match sweep_seeds {
                None => {
                    let output = simulate(&s, seed, end_time)?;
                    write(&output, &out)?;
                    print_summary(&output);
                    Ok(())
                }
                Some(n) => {
                    let first = seed.unwrap_or(s.metadata.seed);
                    let results: Vec<Result<(u64, SimOutput), Failure>> = (first..first + n)
                        .into_par_iter()
                        .map(|k| simulate(&s, Some(k), end_time).map(|o| (k, o)))
                        .collect();
                    for r in results {
                        let (k, output) = r?;
                        write(&output, &out.join(format!("seed_{k}")))?;
                        print_summary(&output);
                    }
                    Ok(())
                }
            }
        }
        Command::Compare { a, b, metric, seed } => {
            let (sa, sb) = (load_scenario(&a)?, load_scenario(&b)?);
            let (ra, rb) = rayon::join(|| simulate(&sa, seed, None), || simulate(&sb, seed, None));
            let (ra, rb) = (ra?, rb?);
            let rows: Vec<(&str, f64, f64)> = match metric {
                Metric::Coverage => vec![
                    (
                        "final_coverage",
                        ra.metrics.final_coverage().unwrap_or(0.0),
                        rb.metrics.final_coverage().unwrap_or(0.0),
                    ),
                    ("mean_coverage", mean_coverage(&ra), mean_coverage(&rb)),
                ],
                Metric::Outage => vec![("total_ue_outage_s", total_outage(&ra), total_outage(&rb))],
                Metric::Latency => vec![("mean_e2e_latency_s", mean_latency(&ra), mean_latency(&rb))],
            };
            println!("{:<22} {:>14} {:>14} {:>14}", "metric", sa.metadata.name, sb.metadata.name, "delta");
            for (name, x, y) in rows {
                println!("{name:<22} {x:>14.6} {y:>14.6} {:>+14.6}", y - x);
            }
            Ok(())
        }
        Command::Splits { command: SplitsCommand::DumpTable { scenario } } => {
            let table = match scenario {
                Some(p) => load_scenario(&p)?.split_table(),
                None => SplitTable::default(),
            };
            print!("{}", table.to_toml());
            Ok(())
        }
        Command::TraceCsv { file, trace_id, step } => {
            let s = load_scenario(&file)?;
            let traces = s.mobility_traces();
            let trace = traces
                .get(&trace_id)
                .ok_or_else(|| Failure::Invalid(format!("no trace `{trace_id}` in {}", file.display())))?;
            let step = step.unwrap_or(s.metadata.sample_period_s);
            if step.is_nan() || step <= 0.0 {
                return Err(Failure::Invalid("--step must be > 0".into()));
            }
            println!("t_s,x_m,y_m");
            let mut k = 0u64;
            loop {
                let t = k as f64 * step;
                if t > s.metadata.end_time_s + 1e-9 {
                    break;
                }
                match trace.position_at(t) {
                    Some(p) => println!("{t},{},{}", p.x, p.y),
                    None => println!("{t},,"),
                }
                k += 1;
            }
            Ok(())
        }
    }
}

fn validate(file: &Path, json: bool) -> Result<(), Failure> {
    let text =
        std::fs::read_to_string(file).map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", file.display())))?;
    let (_, report) = parse_scenario_with_report(&text);
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        for d in &report.diagnostics {
            eprintln!("{}: {d}", file.display());
        }
    }
    if report.has_errors() {
        return Err(Failure::Invalid(format!("{}: {} error(s)", file.display(), report.errors().count())));
    }
    if !json {
        println!("{}: ok", file.display());
    }
    Ok(())
}

fn simulate(s: &ScenarioDescription, seed: Option<u64>, end_time: Option<f64>) -> Result<SimOutput, Failure> {
    run_scenario(s, seed, end_time).map_err(|e| Failure::Runtime(e.to_string()))
}

fn write(output: &SimOutput, dir: &Path) -> Result<(), Failure> {
    output.write_to(dir).map_err(|e| Failure::Runtime(format!("writing {}: {e}", dir.display())))
}

fn print_summary(o: &SimOutput) {
    let m = &o.metrics;
    println!(
        "{} seed={} coverage={:.6} messages sent={} delivered={} dropped={} pending={}",
        m.scenario,
        m.seed,
        m.final_coverage().unwrap_or(0.0),
        m.messages.sent,
        m.messages.delivered,
        m.messages.dropped,
        m.messages.pending
    );
    for (id, mc) in &m.mobile_cells {
        let first = mc.first_on_air_s.map_or("never".to_string(), |t| format!("{t}s"));
        println!("  {id} ({}) first on air: {first}, on air {:.1}s", mc.arch, mc.on_air_time_s);
    }
    for (id, ue) in &m.ues {
        println!("  {id} outage {:.1}s over {} interval(s)", ue.outage_total_s, ue.outage_intervals.len());
    }
}

fn mean_coverage(o: &SimOutput) -> f64 {
    let c = &o.metrics.coverage;
    if c.is_empty() {
        0.0
    } else {
        c.iter().map(|s| s.fraction).sum::<f64>() / c.len() as f64
    }
}

fn total_outage(o: &SimOutput) -> f64 {
    o.metrics.ues.values().map(|u| u.outage_total_s).sum()
}

fn mean_latency(o: &SimOutput) -> f64 {
    let v: Vec<f64> = o.metrics.ues.values().flat_map(|u| u.samples.iter().filter_map(|s| s.e2e_latency_s)).collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}
