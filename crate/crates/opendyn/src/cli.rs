//! Command-line interface. Every `run` flag can also be set through an
//! `OPENDYN_*` environment variable; flags win over the environment, which
//! wins over a scenario file's `[run]` section.

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use opendyn_core::models::{Scenario, PRESETS};

use crate::config::{RunSection, ScenarioFile};
use crate::run::{self, RunConfig};
use crate::trajectory::{self, GridMismatch};

#[derive(Debug, Parser)]
#[command(name = "opendyn", version, about = "Variational open-system dynamics with a Lindblad reference")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a scenario and write trajectory and summary files.
    Run(RunArgs),
    /// Compare two trajectory files column by column.
    Compare {
        a: PathBuf,
        b: PathBuf,
    },
    /// Print a preset as a scenario file.
    Export {
        preset: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List the built-in scenarios.
    List,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum IntegratorArg {
    Euler,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Exact,
    Shots,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ZdotArg {
    RealProjected,
    ComplexThenReal,
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Preset name or scenario file.
    #[arg(long, env = "OPENDYN_SCENARIO", conflicts_with = "config")]
    pub scenario: Option<String>,
    /// Scenario file whose `[run]` section supplies defaults.
    #[arg(long, env = "OPENDYN_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "OPENDYN_T_FINAL")]
    pub t_final: Option<f64>,
    #[arg(long, env = "OPENDYN_DT")]
    pub dt: Option<f64>,
    #[arg(long, value_enum, env = "OPENDYN_INTEGRATOR")]
    pub integrator: Option<IntegratorArg>,
    #[arg(long, value_enum, env = "OPENDYN_ESTIMATOR")]
    pub estimator: Option<EstimatorArg>,
    #[arg(long, env = "OPENDYN_SHOTS")]
    pub shots: Option<u64>,
    #[arg(long, env = "OPENDYN_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "OPENDYN_REL_CUTOFF")]
    pub rel_cutoff: Option<f64>,
    #[arg(long, value_enum, env = "OPENDYN_ZDOT_SOLVE")]
    pub zdot_solve: Option<ZdotArg>,
    /// Also propagate the dense Lindblad reference.
    #[arg(long, env = "OPENDYN_ORACLE")]
    pub oracle: bool,
    #[arg(long, env = "OPENDYN_ORACLE_DT")]
    pub oracle_dt: Option<f64>,
    #[arg(long, env = "OPENDYN_OUTPUT")]
    pub output: Option<PathBuf>,
    /// Summary JSON; defaults to the output path with a `.summary.json` suffix.
    #[arg(long, env = "OPENDYN_SUMMARY")]
    pub summary: Option<PathBuf>,
    #[arg(long, env = "OPENDYN_OUTPUT_EVERY")]
    pub output_every: Option<usize>,
}

fn value_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

impl RunArgs {
    /// Merge flags over the file's `[run]` section over the defaults.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c = RunConfig::default();
        let file_run = match &self.config {
            Some(path) => {
                c.scenario = path.display().to_string();
                ScenarioFile::load(path)?.run
            }
            None => RunSection::default(),
        };
        if let Some(s) = &self.scenario {
            c.scenario = s.clone();
        }
        let f = file_run;
        c.t_final = self.t_final.or(f.t_final).unwrap_or(c.t_final);
        c.dt = self.dt.or(f.dt).unwrap_or(c.dt);
        c.output_every = self.output_every.or(f.output_every).unwrap_or(c.output_every);
        c.integrator = self.integrator.map(value_name).or(f.integrator).unwrap_or(c.integrator);
        c.estimator = self.estimator.map(value_name).or(f.estimator).unwrap_or(c.estimator);
        c.shots = self.shots.or(f.shots).unwrap_or(c.shots);
        c.seed = self.seed.or(f.seed).unwrap_or(c.seed);
        c.rel_cutoff = self.rel_cutoff.or(f.rel_cutoff).unwrap_or(c.rel_cutoff);
        c.zdot_solve = self.zdot_solve.map(value_name).or(f.zdot_solve).unwrap_or(c.zdot_solve);
        c.oracle = self.oracle || f.oracle.unwrap_or(false);
        c.oracle_dt = self.oracle_dt.or(f.oracle_dt).unwrap_or(c.oracle_dt);
        if let Some(o) = &self.output {
            c.output = o.clone();
        }
        c.summary = match &self.summary {
            Some(s) => s.clone(),
            None => {
                let mut s = c.output.clone().into_os_string();
                s.push(".summary.json");
                s.into()
            }
        };
        Ok(c)
    }
}

fn export(preset: &str) -> anyhow::Result<String> {
    let s = Scenario::preset(preset)?;
    ScenarioFile::from_scenario(&s).to_toml()
}

/// Parse `args` and execute; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match cli.command {
        Command::Run(args) => {
            let config = match args.resolve() {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("invalid configuration: {e:#}");
                    return 2;
                }
            };
            match run::run(&config) {
                Ok(summary) => {
                    let dev = summary.max_deviation.map_or(String::new(), |d| format!(", max deviation {d:.3e}"));
                    eprintln!(
                        "{}: {} steps, {} rows in {:.2} s{dev}; wrote {}",
                        summary.scenario,
                        summary.steps,
                        summary.rows,
                        summary.wall_time_s,
                        config.output.display()
                    );
                    0
                }
                Err(e) => {
                    eprintln!("{e}");
                    e.exit_code()
                }
            }
        }
        Command::Compare { a, b } => {
            let result = trajectory::read_file(&a)
                .and_then(|ra| Ok((ra, trajectory::read_file(&b)?)))
                .and_then(|(ra, rb)| trajectory::compare(&ra, &rb));
            match result {
                Ok(cmp) => {
                    println!("{}", serde_json::to_string_pretty(&cmp).expect("serializable"));
                    0
                }
                Err(e) => {
                    eprintln!("compare failed: {e:#}");
                    if e.downcast_ref::<GridMismatch>().is_some() {
                        2
                    } else {
                        1
                    }
                }
            }
        }
        Command::Export { preset, output } => {
            let text = match export(&preset) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("{e:#}");
                    return 2;
                }
            };
            match output {
                Some(path) => match std::fs::write(&path, text).with_context(|| format!("writing {}", path.display())) {
                    Ok(()) => 0,
                    Err(e) => {
                        eprintln!("{e:#}");
                        1
                    }
                },
                None => {
                    print!("{text}");
                    0
                }
            }
        }
        Command::List => {
            for p in PRESETS {
                println!("{p}");
            }
            0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunArgs {
        match Cli::try_parse_from(args).unwrap().command {
            Command::Run(a) => a,
            _ => panic!("not a run command"),
        }
    }

    #[test]
    fn flags_override_defaults() {
        let a = parse(&["opendyn", "run", "--scenario", "damping", "--dt", "0.002", "--integrator", "euler", "--oracle"]);
        let c = a.resolve().unwrap();
        assert_eq!(c.scenario, "damping");
        assert_eq!(c.dt, 0.002);
        assert_eq!(c.integrator, "euler");
        assert!(c.oracle);
        assert_eq!(c.summary, PathBuf::from("trajectory.csv.summary.json"));
    }

    #[test]
    fn zdot_names_parse_in_core() {
        for v in [ZdotArg::RealProjected, ZdotArg::ComplexThenReal] {
            assert!(value_name(v).parse::<opendyn_core::tdvp::ZdotSolve>().is_ok());
        }
        for v in [IntegratorArg::Euler, IntegratorArg::Rk4] {
            assert!(value_name(v).parse::<opendyn_core::Integrator>().is_ok());
        }
    }

    #[test]
    fn scenario_and_config_conflict() {
        assert!(Cli::try_parse_from(["opendyn", "run", "--scenario", "x", "--config", "y"]).is_err());
    }
}
