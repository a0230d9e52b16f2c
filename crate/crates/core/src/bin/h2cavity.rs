use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use h2cavity::runner;
use h2cavity::scenario::{Scenario, BUILTINS};
use h2cavity::{Error, Result};

#[derive(Parser)]
#[command(name = "h2cavity", version, about = "Cavity-QED hydrogen association/dissociation simulator")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run a scenario and write trajectory.csv, scenario.cfg and manifest.json.
    Run {
        #[command(flatten)]
        sel: Select,
        /// Output directory.
        #[arg(long, env = "H2CAVITY_OUT", default_value = "out")]
        out: PathBuf,
    },
    /// Check a scenario without running it.
    Validate {
        #[command(flatten)]
        sel: Select,
        /// Also rerun at n_max+1 and dt/2 and compare final populations.
        #[arg(long)]
        convergence: bool,
    },
    /// Run a scenario once per value of one config key.
    Sweep {
        #[command(flatten)]
        sel: Select,
        /// Config key to vary, e.g. integrator.dt or basis.n_max.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
        #[arg(long, env = "H2CAVITY_OUT", default_value = "out")]
        out: PathBuf,
        /// Concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// List the built-in scenarios.
    ListScenarios,
}

#[derive(Args)]
struct Select {
    /// Built-in scenario name.
    #[arg(default_value = "assoc-quantum")]
    scenario: String,
    /// Config file; overrides the built-in.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key: --set section.key=value (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Schedule shape for classical scenarios: straight | trig.
    #[arg(long)]
    shape: Option<String>,
}

impl Select {
    fn load(&self) -> Result<Scenario> {
        let mut sc = match &self.config {
            Some(path) => Scenario::from_config(&std::fs::read_to_string(path)?)?,
            None => Scenario::builtin(&self.scenario)?,
        };
        if let Some(shape) = &self.shape {
            sc.set("scenario.shape", shape)?;
        }
        for kv in &self.sets {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config {
                line: 0,
                message: format!("--set expects key=value, got '{kv}'"),
            })?;
            sc.set(k.trim(), v.trim())?;
        }
        sc.check()?;
        Ok(sc)
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result: Result<()> = (|| match cli.verb {
        Verb::ListScenarios => {
            for name in BUILTINS {
                println!("{name:18} {}", Scenario::describe(name));
            }
            Ok(())
        }
        Verb::Validate { sel, convergence } => {
            let sc = sel.load()?;
            println!("{}", json(&runner::validate(&sc)?));
            if convergence {
                let c = runner::convergence(&sc)?;
                println!("{}", json(&c));
                if !c.passed {
                    return Err(Error::InvalidParameter(format!(
                        "convergence check failed: n_max shift {:e}, dt shift {:e}",
                        c.n_max_shift, c.dt_shift
                    )));
                }
            }
            Ok(())
        }
        Verb::Run { sel, out } => {
            let sc = sel.load()?;
            let rec = runner::run(&sc, &out)?;
            println!("{}", json(&rec));
            Ok(())
        }
        Verb::Sweep {
            sel,
            axis,
            values,
            out,
            jobs,
        } => {
            let sc = sel.load()?;
            let recs = runner::sweep(&sc, &axis, &values, &out, jobs)?;
            for r in &recs {
                println!("{}  t_final={:e}  {:?}", r.scenario, r.summary.t_final, r.summary.final_values);
            }
            Ok(())
        }
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
