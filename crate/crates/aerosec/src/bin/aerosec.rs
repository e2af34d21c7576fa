use std::path::PathBuf;
use std::process::ExitCode;

use aerosec::experiment::{apply_overrides, first_internal, run_experiment, run_scenario, write_reports, Outcome, RunOptions};
use aerosec::oracle::OracleReport;
use aerosec::preset::ExperimentPreset;
use aerosec::scenario_file::load_scenario;
use aerosec::summary::{summarize, write_summary};
use aerosec::{AppError, AppResult};
use aerosec_core::driver::RunStatus;
use aerosec_core::scenario::desk_scenario;
use aerosec_core::{Error, Infeasibility, Scenario};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aerosec", version, about = "Robust secure offloading for multi-UAV edge computing")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a scenario or preset file without solving it.
    Validate {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        scenario: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
    },
    /// Solve one scenario (the desk scenario drawn from --seed by default).
    Run {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "results/run")]
        out: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Run every axis value and seed of a preset.
    Sweep {
        #[arg(long)]
        preset: String,
        /// Defaults to the preset's own directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads, 0 for one per core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Aggregate the results.csv of a run or sweep.
    Summarize {
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-check the solver building blocks against brute force.
    Oracle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value_t = 30)]
    max_rounds: usize,
    /// Overrides the scenario's convergence accuracy (J).
    #[arg(long)]
    zeta: Option<f64>,
    /// Overrides the scenario's conic duality-gap tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Monte-Carlo draws per deadline.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

impl SolveArgs {
    fn options(&self, jobs: usize) -> RunOptions {
        RunOptions { jobs, max_rounds: self.max_rounds, zeta: self.zeta, tol: self.tol, samples: self.samples }
    }
}

fn describe(s: &Scenario) -> String {
    format!("{} GUs, {} S-UAVs, {} slots", s.num_gus(), s.num_uavs(), s.num_slots())
}

fn run(cmd: Cmd) -> AppResult<()> {
    match cmd {
        Cmd::Validate { scenario: Some(path), .. } => {
            let s = load_scenario(&path)?;
            println!("{}: ok ({})", path.display(), describe(&s));
        }
        Cmd::Validate { preset, .. } => {
            let name = preset.unwrap_or_default();
            let p = ExperimentPreset::resolve(&name)?;
            let params = aerosec_core::NetworkParams::default();
            for &seed in &p.seeds {
                let base = p.base_scenario(seed, &params)?;
                for &v in &p.values {
                    p.axis.apply(&base, v)?;
                }
            }
            println!(
                "preset {}: ok ({} values of {}, {} seeds)",
                p.name,
                p.values.len(),
                p.axis.name(),
                p.seeds.len()
            );
        }
        Cmd::Run { scenario, seed, out, solve } => {
            let opts = solve.options(1);
            let base = match &scenario {
                Some(path) => load_scenario(path)?,
                None => desk_scenario(seed),
            };
            let s = apply_overrides(&base, &opts)?;
            let rec = run_scenario(&s, 0.0, seed, true, &opts);
            write_reports(&out, "run", "none", std::slice::from_ref(&rec))?;
            if let Some(e) = first_internal(std::slice::from_ref(&rec)) {
                return Err(e);
            }
            if let Outcome::Solved(r) = &rec.robust {
                if r.status == RunStatus::Infeasible {
                    for d in &r.diagnosis {
                        eprintln!("infeasible: {d}");
                    }
                    let first = r.diagnosis.first().cloned().unwrap_or(Infeasibility {
                        slot: None,
                        gu: None,
                        reason: "no feasible decision".into(),
                    });
                    return Err(Error::Infeasible(first).into());
                }
                println!("robust: gamma {:.6} J, {} rounds, {:?}", r.gamma(), r.rounds, r.status);
            }
            if let Some(i) = rec.ideal.feasible() {
                println!("ideal:  gamma {:.6} J, {} rounds, {:?}", i.gamma(), i.rounds, i.status);
            }
            if let Some(ratio) = rec.ratio() {
                println!("robust/ideal energy ratio: {ratio:.6}");
            }
            println!("wrote {}", out.display());
        }
        Cmd::Sweep { preset, out, jobs, solve } => {
            let p = ExperimentPreset::resolve(&preset)?;
            let out = out.unwrap_or_else(|| p.out.clone());
            let records = run_experiment(&p, &out, &solve.options(jobs))?;
            let infeasible = records.iter().filter(|r| r.robust.feasible().is_none()).count();
            println!("{} runs written to {} ({infeasible} without a robust solution)", records.len(), out.display());
            if let Some(e) = first_internal(&records) {
                return Err(e);
            }
        }
        Cmd::Summarize { out } => {
            let s = summarize(&out)?;
            write_summary(&out, &s)?;
            print!("{}", s.text());
        }
        Cmd::Oracle { seed } => {
            let r = OracleReport::run(seed);
            print!("{r}");
            if !r.passed() {
                return Err(AppError::Core(Error::Internal("oracle disagreement".into())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
