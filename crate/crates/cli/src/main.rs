//! `impedance`: validate robot descriptions, run scenarios, sweep a parameter.
//!
//! Exit codes: 0 success, 1 input or schema error, 2 I/O error, 3 numerical abort.
//! Log verbosity comes from `IMPEDANCE_LOG` (`error`, `warn`, `info`, `debug`, `trace`).

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use impedance_core::model::{dump_model_json, extract_chain, parse_robot_description, JointKind, RobotModel};
use impedance_core::record::{write_log, LogFormat};
use impedance_core::scenario::Scenario;
use impedance_core::sim::{run_scenario, steady_state_report, sweep, SimError, SweepError};
use impedance_core::scenario::ScenarioError;
use impedance_core::Chain;

#[derive(Debug, Parser)]
#[command(name = "impedance", version, about = "Cartesian impedance controller simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Parse a robot description and print a summary.
    Validate {
        /// URDF file.
        model: PathBuf,
        /// Also extract the chain between these two links.
        #[arg(long, requires = "tip")]
        base: Option<String>,
        #[arg(long, requires = "base")]
        tip: Option<String>,
        /// Print the parsed model as canonical JSON instead of the summary.
        #[arg(long)]
        dump_model: bool,
    },
    /// Run a scenario and write its log.
    Run {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Log file to write.
        #[arg(short, long)]
        output: PathBuf,
        /// Log format: csv or ndjson.
        #[arg(long, default_value = "csv")]
        format: LogFormat,
        /// Trailing window of the printed steady-state report, in seconds.
        #[arg(long, default_value_t = 1.0)]
        window: f64,
    },
    /// Run a scenario once per value of one setting and print a CSV table of
    /// steady-state metrics.
    Sweep {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Dotted setting key, e.g. `gains.k_ca.trans.x`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Trailing window of the metrics, in seconds.
        #[arg(long, default_value_t = 1.0)]
        window: f64,
    },
}

/// A failed command: what to print and the exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl std::fmt::Display) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }

    fn io(message: impl std::fmt::Display) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }

    fn numeric(message: impl std::fmt::Display) -> Self {
        Self {
            code: 3,
            message: message.to_string(),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        if e.is_io() {
            Failure::io(e)
        } else {
            Failure::input(e)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("IMPEDANCE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Cmd::Validate {
            model,
            base,
            tip,
            dump_model,
        } => validate(&model, base.zip(tip), dump_model),
        Cmd::Run {
            scenario,
            output,
            format,
            window,
        } => run(&scenario, &output, format, window),
        Cmd::Sweep {
            scenario,
            param,
            values,
            window,
        } => run_sweep(&scenario, &param, &values, window),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn validate(path: &Path, chain: Option<(String, String)>, dump: bool) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
    let parsed = parse_robot_description(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    for warning in &parsed.warnings {
        log::warn!("{}: {warning}", path.display());
    }
    let model = parsed.model;
    let chain = match chain {
        Some((base, tip)) => Some(extract_chain::<f64>(&model, &base, &tip).map_err(Failure::input)?),
        None => None,
    };
    if dump {
        println!("{}", dump_model_json(&model));
    } else {
        print_summary(&model, chain.as_ref());
    }
    Ok(())
}

fn print_summary(model: &RobotModel, chain: Option<&Chain>) {
    let n = chain.map_or_else(|| model.actuated_joint_count(), Chain::dof);
    println!("robot {}: n={n}", model.name);
    if let Some(chain) = chain {
        println!("chain {} -> {}: {}", chain.base(), chain.tip(), chain.joint_names().join(", "));
    }
    let total: f64 = model.links.iter().map(|l| l.mass).sum();
    println!("links ({}, total mass {total} kg):", model.links.len());
    for link in &model.links {
        println!("  {:<16} {} kg", link.name, link.mass);
    }
    println!("joints:");
    for joint in &model.joints {
        let limits = match (joint.kind, joint.position_limits) {
            (JointKind::Fixed, _) => String::new(),
            (_, Some([lo, hi])) => format!(" [{lo}, {hi}] rad"),
            (_, None) => " unlimited".to_string(),
        };
        let effort = joint.effort_limit.map_or(String::new(), |e| format!(", effort {e} N·m"));
        println!(
            "  {:<16} {:<9} {} -> {}{limits}{effort}",
            joint.name,
            joint.kind.as_str(),
            joint.parent,
            joint.child
        );
    }
}

fn run(path: &Path, output: &Path, format: LogFormat, window: f64) -> Result<(), Failure> {
    let scenario = Scenario::load(path)?;
    if !scenario.warnings.is_empty() {
        log::warn!(
            "{}: {} warnings, see `impedance validate`",
            scenario.robot_path.display(),
            scenario.warnings.len()
        );
    }
    log::info!(
        "running {} ({} joints, {} s at dt = {} s)",
        path.display(),
        scenario.chain.dof(),
        scenario.duration,
        scenario.dt
    );
    let (records, abort) = match run_scenario(&scenario) {
        Ok(records) => (records, None),
        Err(SimError::NonFiniteState { last_good, records }) => (
            records,
            Some(Failure::numeric(format!("state became non-finite; last good t = {last_good} s"))),
        ),
        Err(e) => return Err(Failure::numeric(e)),
    };
    write_file(output, |out| write_log(out, &records, format))?;
    if let Some(abort) = abort {
        return Err(abort);
    }
    let report = steady_state_report(&records, window.min(scenario.duration)).map_err(Failure::input)?;
    println!("wrote {} records to {}", records.len(), output.display());
    println!("{report}");
    Ok(())
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), Failure> {
    let fail = |e: io::Error| Failure::io(format!("cannot write {}: {e}", path.display()));
    let file = File::create(path).map_err(fail)?;
    let mut out = BufWriter::new(file);
    body(&mut out).map_err(fail)?;
    out.flush().map_err(fail)
}

fn parse_values(text: &str) -> Result<Vec<f64>, Failure> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Failure::input(format!("not a number: '{s}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(Failure::input("no values to sweep"));
    }
    Ok(values)
}

fn run_sweep(path: &Path, key: &str, values: &str, window: f64) -> Result<(), Failure> {
    let values = parse_values(values)?;
    let text = fs::read_to_string(path).map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
    let document: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::input(format!("scenario schema: {e}")))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let rows = sweep(&document, dir, key, &values, window).map_err(|e| match e {
        SweepError::UnknownKey(u) => Failure::input(format!("{u}; known keys:\n  {}", u.known.join("\n  "))),
        SweepError::Scenario { source, .. } if source.is_io() => Failure::io(source),
        SweepError::Sim { .. } => Failure::numeric(e),
        other => Failure::input(other),
    })?;
    println!("value,samples,mean_dx,mean_dy,mean_dz,mean_drx,mean_dry,mean_drz,mean_translation,mean_rotation,max_torque_norm");
    for (value, report) in rows {
        let e = report.mean_pose_error;
        println!(
            "{value},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            report.samples,
            e[0],
            e[1],
            e[2],
            e[3],
            e[4],
            e[5],
            report.mean_translation_error(),
            report.mean_rotation_error(),
            report.max_torque_norm
        );
    }
    Ok(())
}
