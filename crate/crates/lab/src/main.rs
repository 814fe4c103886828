use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use toral_lab::config::{load_config_file, parse_assignment, ExperimentConfig, Format};
use toral_lab::emit::{emit_report, to_csv, to_json};
use toral_lab::registry::{registry, run_experiment, Experiment};
use toral_lab::{LabError, Result};

fn key_help(exp: &Experiment) -> String {
    let mut out = String::from("Parameters (--param key=value):\n");
    for k in exp.keys {
        let default = k.default.map_or("required".to_string(), |d| if d.is_empty() { "empty".into() } else { format!("default {d}") });
        out.push_str(&format!("  {:<16} {} [{}]\n", k.name, k.help, default));
    }
    out
}

fn cli() -> Command {
    let common = [
        Arg::new("param")
            .short('p')
            .long("param")
            .value_name("KEY=VALUE")
            .action(ArgAction::Append)
            .help("experiment parameter; repeatable, later values win"),
        Arg::new("config").short('c').long("config").value_name("FILE").help("key = value config file, applied first"),
        Arg::new("seed").long("seed").value_name("N").help("base seed"),
        Arg::new("budget").long("budget").value_name("N").help("operation ceiling"),
        Arg::new("out").short('o').long("out").value_name("PATH").value_parser(clap::value_parser!(PathBuf)).help("output file; stdout when absent"),
        Arg::new("format")
            .long("format")
            .value_parser(clap::builder::EnumValueParser::<Format>::new())
            .help("report format"),
    ];
    Command::new("toral-lab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Deterministic experiments on lattice points, surface transforms and toral eigenfunctions")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommands(
            registry()
                .iter()
                .map(|exp| Command::new(exp.name).about(exp.about).after_help(key_help(exp)).args(common.clone())),
        )
}

fn config_from(name: &str, m: &ArgMatches) -> Result<ExperimentConfig> {
    let mut entries: Vec<(String, String)> = Vec::new();
    if let Some(path) = m.get_one::<String>("config") {
        entries.extend(load_config_file(path.as_ref())?);
    }
    entries.push(("experiment".into(), name.into()));
    for raw in m.get_many::<String>("param").into_iter().flatten() {
        let pair = parse_assignment(raw)
            .ok_or_else(|| LabError::bad_value("--param", format!("{raw:?} is not key=value")))?;
        entries.push(pair);
    }
    for key in ["seed", "budget"] {
        if let Some(v) = m.get_one::<String>(key) {
            entries.push((key.into(), v.clone()));
        }
    }
    if let Some(p) = m.get_one::<PathBuf>("out") {
        entries.push(("output".into(), p.display().to_string()));
    }
    if let Some(f) = m.get_one::<Format>("format") {
        entries.push(("format".into(), f.to_string()));
    }
    if entries.iter().any(|(k, v)| k == "experiment" && v != name) {
        let other = entries.iter().find(|(k, v)| k == "experiment" && v != name).map(|(_, v)| v.clone()).unwrap_or_default();
        return Err(LabError::bad_value("experiment", format!("config file names {other:?} but the subcommand is {name:?}")));
    }
    ExperimentConfig::from_entries(entries)
}

fn execute(name: &str, m: &ArgMatches) -> Result<()> {
    let config = config_from(name, m)?;
    let report = run_experiment(&config)?;
    match &config.output {
        Some(path) => {
            emit_report(&report, config.format, path)?;
            eprintln!("{}: {} rows written to {}", report.experiment, report.per_sample.len(), path.display());
        }
        None => match config.format {
            Format::Csv => print!("{}", to_csv(&report)?),
            Format::Json => print!("{}", to_json(&report)?),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    match execute(name, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
