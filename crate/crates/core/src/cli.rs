//! Command-line front end. Exit codes: 0 ok, 1 usage, 2 data error,
//! 3 numerical failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::adp::{train_value_surrogate, ValueSurrogate};
use crate::config::Config;
use crate::cycles::{self, DrivingCycle, SpeedUnit};
use crate::dp::{dp_backward, ControlGrid, ValueTable};
use crate::error::{Error, Result};
use crate::harness::{compare, export_plot_data, run_episode, AdpTwoStep, Controller, DpOneStep, DpTwoStep, FrontMirror};
use crate::ocp::OcpSpec;
use crate::powertrain::{fit_motor_model, load_envelope, load_motor_map};
use crate::rl::{greedy_policy, train_ddpg, train_dqn, Agent, AgentKind, EcoAccEnv};

#[derive(Debug, Parser)]
#[command(name = "ecoacc", version, about = "Energy-optimal car-following for electric vehicles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CycleArg {
    /// Built-in cycle name or a `time_s,speed` CSV file.
    #[arg(long)]
    cycle: String,
    /// Speed unit of a CSV cycle: mps, kph or mph.
    #[arg(long = "unit", visible_alias = "speed-unit", default_value = "mps")]
    speed_unit: String,
}

#[derive(Debug, Args)]
struct Sources {
    /// Value table (otherwise solved from the config).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Value surrogate for `adp` (otherwise fitted to the table).
    #[arg(long)]
    surrogate: Option<PathBuf>,
    /// Trained agent directory; may be repeated for dqn and ddpg.
    #[arg(long)]
    agent: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    cycle: CycleArg,
    /// Output directory for the agent bundle and `training_log.csv`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overrides `[rl] episodes`.
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the motor power map and force envelope from sample CSVs.
    Fit {
        #[arg(long)]
        motor_map: PathBuf,
        #[arg(long)]
        envelope: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the value table by value iteration.
    DpBackward {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the table as `d,v,vf,value` CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Fit the neural value surrogate to a value table.
    FitSurrogate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a DQN agent.
    TrainDqn(TrainArgs),
    /// Train a DDPG agent.
    TrainDdpg(TrainArgs),
    /// Run one controller behind a cycle and write its trace.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// dp1, dp2, adp, dqn, ddpg or front-mirror.
        #[arg(long)]
        controller: String,
        #[command(flatten)]
        cycle: CycleArg,
        #[command(flatten)]
        sources: Sources,
        #[arg(long)]
        trace: PathBuf,
        /// Count only traction energy.
        #[arg(long)]
        no_regen_credit: bool,
    },
    /// Run several controllers and report efficiency against the front vehicle.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        cycle: CycleArg,
        /// Comma-separated controller names (default from the config).
        #[arg(long, value_delimiter = ',')]
        controllers: Vec<String>,
        #[command(flatten)]
        sources: Sources,
        #[arg(long)]
        report: PathBuf,
        /// Directory for one trace CSV per controller.
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long)]
        no_regen_credit: bool,
    },
    /// Convert a trace into plot-ready CSVs, or a value table into CSV.
    Export {
        #[arg(long, requires = "plot_data")]
        trace: Option<PathBuf>,
        #[arg(long)]
        plot_data: Option<PathBuf>,
        #[arg(long, requires = "csv")]
        table: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failed(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

enum Failure {
    Usage(String),
    Failed(Error),
}
use Failure::{Failed, Usage};

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failed(e)
    }
}

type CliResult = std::result::Result<(), Failure>;

fn load_config(path: &Option<PathBuf>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn load_cycle(arg: &CycleArg) -> Result<DrivingCycle> {
    if let Some(c) = cycles::builtin(&arg.cycle) {
        return Ok(c);
    }
    let unit: SpeedUnit = arg.speed_unit.parse()?;
    cycles::load_cycle(&arg.cycle, unit)
}

fn solve_table(cfg: &Config, spec: &OcpSpec, controls: &ControlGrid) -> Result<ValueTable> {
    log::info!("solving the value table from the configuration");
    dp_backward(spec, &cfg.grid(spec)?, controls, &cfg.dp)
}

fn execute(cmd: Command) -> CliResult {
    match cmd {
        Command::Fit { motor_map, envelope, out } => {
            let fit = fit_motor_model(&load_motor_map(motor_map)?, &load_envelope(envelope)?)?;
            fit.model.save(&out)?;
            println!(
                "power-map RRMSE {:.4}, envelope RRMSE {:.4}; model written to {}",
                fit.power_rrmse,
                fit.envelope_rrmse,
                out.display()
            );
        }
        Command::DpBackward { config, out, csv } => {
            let cfg = load_config(&config)?;
            let spec = cfg.spec()?;
            let table = solve_table(&cfg, &spec, &cfg.controls(&spec)?)?;
            table.save(&out)?;
            if let Some(csv) = csv {
                table.export_csv(csv)?;
            }
            println!(
                "{} sweeps, residual {:.3} J{}",
                table.iterations,
                table.residual,
                if table.converged(cfg.dp.tol) { "" } else { " (not converged)" }
            );
        }
        Command::FitSurrogate { config, table, out } => {
            let cfg = load_config(&config)?;
            let sur = train_value_surrogate(&ValueTable::load(table)?, &cfg.adp)?;
            sur.save(&out)?;
            println!(
                "held-out RRMSE {:.4} (train {:.4})",
                sur.report.holdout_rrmse, sur.report.train_rrmse
            );
        }
        Command::TrainDqn(args) => train(args, AgentKind::Dqn)?,
        Command::TrainDdpg(args) => train(args, AgentKind::Ddpg)?,
        Command::Simulate {
            config,
            controller,
            cycle,
            sources,
            trace,
            no_regen_credit,
        } => {
            let cfg = load_config(&config)?;
            let spec = cfg.spec()?;
            let cycle = load_cycle(&cycle)?;
            let deps = Deps::load(&cfg, &spec, std::slice::from_ref(&controller), &sources)?;
            let mut ctrls = deps.controllers(std::slice::from_ref(&controller)).map_err(Usage)?;
            let t = run_episode(&spec, &cycle, &mut ctrls[0], true)?;
            t.save_csv(&trace)?;
            let energy = crate::harness::trace_energy(&t, !no_regen_credit && cfg.harness.regen_credit);
            println!(
                "{} on {}: {}, {:.2} m, {:.4} kWh; trace written to {}",
                t.controller,
                t.scenario,
                t.status,
                t.host_distance,
                energy / 3.6e6,
                trace.display()
            );
        }
        Command::Compare {
            config,
            cycle,
            controllers,
            sources,
            report,
            traces,
            no_regen_credit,
        } => {
            let cfg = load_config(&config)?;
            let spec = cfg.spec()?;
            let cycle = load_cycle(&cycle)?;
            let names = if controllers.is_empty() {
                cfg.harness.controllers.clone()
            } else {
                controllers
            };
            let deps = Deps::load(&cfg, &spec, &names, &sources)?;
            let mut ctrls = deps.controllers(&names).map_err(Usage)?;
            let regen = !no_regen_credit && cfg.harness.regen_credit;
            let (rep, runs) = compare(&spec, &cycle, &mut ctrls, regen)?;
            rep.save_csv(&report)?;
            if let Some(dir) = traces {
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                for t in &runs {
                    t.save_csv(dir.join(format!("{}-{}.csv", t.scenario, t.controller)))?;
                }
            }
            print!("{}", rep.to_table());
        }
        Command::Export {
            trace,
            plot_data,
            table,
            csv,
        } => match (trace, plot_data, table, csv) {
            (Some(trace), Some(out), None, None) => export_plot_data(trace, out)?,
            (None, None, Some(table), Some(csv)) => ValueTable::load(table)?.export_csv(csv)?,
            _ => {
                return Err(Usage(
                    "export needs either --trace with --plot-data, or --table with --csv".into(),
                ))
            }
        },
    }
    Ok(())
}

fn train(args: TrainArgs, kind: AgentKind) -> CliResult {
    let mut cfg = load_config(&args.config)?;
    if let Some(n) = args.episodes {
        cfg.rl.episodes = n;
    }
    let spec = cfg.spec()?;
    let cycle = load_cycle(&args.cycle)?;
    let mut env = EcoAccEnv::new(spec, &cycle, cfg.rl.rewards())?;
    let (agent, log) = match kind {
        AgentKind::Dqn => train_dqn(&mut env, &cfg.rl, args.seed, cycle.name())?,
        AgentKind::Ddpg => train_ddpg(&mut env, &cfg.rl, args.seed, cycle.name())?,
    };
    agent.save(&args.out)?;
    log.save_csv(args.out.join("training_log.csv"))?;
    let n = log.episodes.len();
    let k = (n / 10).max(1);
    println!(
        "{} episodes; mean reward first {k}: {:.1}, last {k}: {:.1}; agent written to {}",
        n,
        log.mean_reward(0..k.min(n)),
        log.mean_reward(n.saturating_sub(k)..n),
        args.out.display()
    );
    Ok(())
}

/// Artifacts the requested controllers depend on, loaded or built once.
struct Deps {
    controls: ControlGrid,
    table: Option<ValueTable>,
    surrogate: Option<ValueSurrogate>,
    agents: Vec<Agent>,
}

impl Deps {
    fn load(cfg: &Config, spec: &OcpSpec, names: &[String], src: &Sources) -> Result<Self> {
        let wants = |n: &str| names.iter().any(|x| x == n);
        let controls = cfg.controls(spec)?;
        let surrogate = match (&src.surrogate, wants("adp")) {
            (Some(p), true) => Some(ValueSurrogate::load(p)?),
            _ => None,
        };
        let needs_table = wants("dp1") || wants("dp2") || (wants("adp") && surrogate.is_none());
        let table = match (&src.table, needs_table) {
            (Some(p), true) => Some(ValueTable::load(p)?),
            (None, true) => Some(solve_table(cfg, spec, &controls)?),
            _ => None,
        };
        let surrogate = match (surrogate, &table, wants("adp")) {
            (Some(s), _, _) => Some(s),
            (None, Some(t), true) => {
                log::info!("fitting the value surrogate to the table");
                Some(train_value_surrogate(t, &cfg.adp)?)
            }
            _ => None,
        };
        let agents = src.agent.iter().map(Agent::load).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            controls,
            table,
            surrogate,
            agents,
        })
    }

    fn controllers(&self, names: &[String]) -> std::result::Result<Vec<Box<dyn Controller + '_>>, String> {
        let mut out: Vec<Box<dyn Controller + '_>> = Vec::with_capacity(names.len());
        for name in names {
            let agent = |kind: AgentKind| {
                self.agents
                    .iter()
                    .find(|a| a.kind() == kind)
                    .ok_or_else(|| format!("controller {name} needs --agent with a trained {} agent", kind.name()))
            };
            let c: Box<dyn Controller + '_> = match name.as_str() {
                "dp1" => Box::new(DpOneStep {
                    table: self.table.as_ref().expect("table loaded for dp1"),
                    controls: &self.controls,
                }),
                "dp2" => Box::new(DpTwoStep {
                    table: self.table.as_ref().expect("table loaded for dp2"),
                    controls: &self.controls,
                }),
                "adp" => Box::new(AdpTwoStep {
                    surrogate: self.surrogate.as_ref().expect("surrogate loaded for adp"),
                    controls: &self.controls,
                }),
                "dqn" => Box::new(greedy_policy(agent(AgentKind::Dqn)?)),
                "ddpg" => Box::new(greedy_policy(agent(AgentKind::Ddpg)?)),
                "front-mirror" => Box::new(FrontMirror),
                other => {
                    return Err(format!(
                        "unknown controller `{other}` (dp1, dp2, adp, dqn, ddpg, front-mirror)"
                    ))
                }
            };
            out.push(c);
        }
        if out.is_empty() {
            return Err("no controllers given".into());
        }
        Ok(out)
    }
}
