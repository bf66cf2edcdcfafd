//! `safesim` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use safesim::metrics::baseline_asymptote;
use safesim::reports::{
    band_chart_svg, compare_csv, parse_compare_csv, severity_counts_csv, table2_csv,
    trajectory_csv, ChartSeries, Metric,
};
use safesim::{load_scenario, run_ensemble, run_simulation, PolicySpec, Scenario};

#[derive(Parser)]
#[command(
    name = "safesim",
    version,
    about = "Safety-environment simulator for benchmarking observer-allocation policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file; the bundled seven-area case study when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Simulated days; defaults to the scenario's horizon_days (365).
    #[arg(long)]
    horizon: Option<u32>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write trajectory.csv.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "uniform")]
        policy: String,
    },
    /// Incident-count percentiles without feedback; writes table2.csv.
    Table2 {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        reps: usize,
    },
    /// Compare policies over an ensemble; writes compare_<policy>.csv,
    /// expected_loss.svg, tail_probability.svg and severity_counts.csv.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Repeatable. Defaults to uniform, counts, severity and weighted.
        #[arg(long = "policy")]
        policies: Vec<String>,
        #[arg(long, default_value_t = 100)]
        reps: usize,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn io(path: &Path, err: std::io::Error) -> Failure {
        Failure::Runtime(format!("cannot write {}: {err}", path.display()))
    }
}

fn load(common: &Common) -> Result<(Scenario, u32), Failure> {
    let scenario = match &common.scenario {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            load_scenario(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => Scenario::case_study(),
    };
    let horizon = common.horizon.unwrap_or(scenario.horizon_days);
    if horizon == 0 {
        return Err(Failure::Usage("--horizon must be at least 1".into()));
    }
    Ok((scenario, horizon))
}

fn parse_policy(s: &str) -> Result<PolicySpec, Failure> {
    s.parse().map_err(|e| Failure::Usage(format!("{e}")))
}

fn check_policy_fits(spec: &PolicySpec, scenario: &Scenario) -> Result<(), Failure> {
    if let PolicySpec::Weighted(w) = spec {
        if w.len() != scenario.n_areas() {
            return Err(Failure::Usage(format!(
                "weighted policy has {} weights but the scenario has {} areas",
                w.len(),
                scenario.n_areas()
            )));
        }
    }
    Ok(())
}

fn write(out_dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(out_dir).map_err(|e| Failure::io(out_dir, e))?;
    let path = out_dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::io(&path, e))?;
    Ok(path)
}

fn check_reps(reps: usize) -> Result<(), Failure> {
    if reps == 0 {
        Err(Failure::Usage("--reps must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn cmd_run(common: &Common, policy: &str) -> Result<(), Failure> {
    let (scenario, horizon) = load(common)?;
    let spec = parse_policy(policy)?;
    check_policy_fits(&spec, &scenario)?;
    let traj = run_simulation(&scenario, spec.build().as_ref(), common.seed, horizon);
    let path = write(
        &common.out_dir,
        "trajectory.csv",
        &trajectory_csv(&scenario, &traj),
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_table2(common: &Common, reps: usize) -> Result<(), Failure> {
    check_reps(reps)?;
    let (scenario, horizon) = load(common)?;
    let scenario = scenario.without_feedback();
    let policy = PolicySpec::None.build();
    let summary = run_ensemble(&scenario, policy.as_ref(), reps, common.seed, horizon);
    let path = write(
        &common.out_dir,
        "table2.csv",
        &table2_csv(&scenario, &summary),
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_compare(common: &Common, policies: &[String], reps: usize) -> Result<(), Failure> {
    check_reps(reps)?;
    let (scenario, horizon) = load(common)?;
    let mut specs = if policies.is_empty() {
        vec![
            PolicySpec::Uniform,
            PolicySpec::Counts,
            PolicySpec::Severity,
            PolicySpec::Weighted(safesim::policies::CASE_STUDY_WEIGHTS.to_vec()),
        ]
    } else {
        policies
            .iter()
            .map(|p| parse_policy(p))
            .collect::<Result<Vec<_>, _>>()?
    };
    // the baseline curve is always drawn, and drawn first
    specs.retain(|s| *s != PolicySpec::None);
    specs.insert(0, PolicySpec::None);
    for spec in &specs {
        check_policy_fits(spec, &scenario)?;
    }

    let mut series = Vec::new();
    let mut severity_rows = Vec::new();
    for spec in &specs {
        let policy = spec.build();
        let summary = run_ensemble(&scenario, policy.as_ref(), reps, common.seed, horizon);
        let label = if *spec == PolicySpec::None {
            "baseline"
        } else {
            spec.label()
        };
        let csv = compare_csv(&summary);
        let path = write(
            &common.out_dir,
            &format!("compare_{}.csv", spec.label()),
            &csv,
        )?;
        println!("wrote {}", path.display());
        let days = parse_compare_csv(&csv).map_err(|e| Failure::Runtime(e.to_string()))?;
        series.push(ChartSeries {
            label: label.to_string(),
            days,
        });

        let single = run_simulation(&scenario, policy.as_ref(), common.seed, horizon);
        severity_rows.push((label.to_string(), single.severity_counts()));
    }

    let limit = baseline_asymptote(&scenario);
    for (metric, name, asymptote) in [
        (
            Metric::ExpectedLoss,
            "expected_loss.svg",
            limit.expected_loss,
        ),
        (
            Metric::TailProbability,
            "tail_probability.svg",
            limit.tail_prob,
        ),
    ] {
        let svg = band_chart_svg(metric, &series, Some(asymptote));
        let path = write(&common.out_dir, name, &svg)?;
        println!("wrote {}", path.display());
    }
    let path = write(
        &common.out_dir,
        "severity_counts.csv",
        &severity_counts_csv(&severity_rows),
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { common, policy } => cmd_run(common, policy),
        Command::Table2 { common, reps } => cmd_table2(common, *reps),
        Command::Compare {
            common,
            policies,
            reps,
        } => cmd_compare(common, policies, *reps),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
