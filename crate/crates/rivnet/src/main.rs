use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rivnet::config::{parse_json, Task};
use rivnet::{load_config, RunError};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "rivnet", version, about = "Persistence metrics and dynamics on river networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario and write network.csv.
    Validate(Common),
    /// Principal eigenvalue λ*.
    Lambda(Common),
    /// Net reproductive rate R₀.
    R0(Common),
    /// Positive steady state, or the extinction sentinel.
    Steady(Common),
    /// Time integration from a constant initial state.
    Simulate(Common),
    /// R₀ over a grid of parameter values.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Replace network.preset.
    #[arg(long)]
    preset: Option<String>,
    /// Replace target_h (meters).
    #[arg(long)]
    target_h: Option<f64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Prefix each CSV with a `# rivnet <version> <unix time>` line.
    #[arg(long)]
    stamp: bool,
}

fn report(level: &str, kind: &str, path: &str, message: &str) {
    eprintln!("{}", json!({ "level": level, "kind": kind, "path": path, "message": message }));
}

fn execute(task: Task, args: &Common) -> Result<(), RunError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| RunError::Io { path: args.config.display().to_string(), message: e.to_string() })?;
    let mut doc = parse_json(&text)?;
    if let Some(obj) = doc.as_object_mut() {
        if !obj.contains_key("id") {
            let stem = args.config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            obj.insert("id".into(), Value::String(stem));
        }
        if let Some(p) = &args.preset {
            if let Some(net) = obj.get_mut("network").and_then(Value::as_object_mut) {
                net.insert("preset".into(), Value::String(p.clone()));
            }
        }
        if let Some(h) = args.target_h {
            obj.insert("target_h".into(), h.into());
        }
    }
    let scenario = load_config(&doc)?;
    if let Some(declared) = scenario.task {
        if task != Task::Validate && declared != task {
            return Err(RunError::Config(rivnet::ConfigError::SchemaViolation {
                path: "task".into(),
                message: format!("document declares task {:?}, command is {:?}", declared.name(), task.name()),
            }));
        }
    }
    for w in &scenario.warnings {
        report("warning", "UnitRangeWarning", &w.path, &w.message);
    }
    let tables = rivnet::run(&scenario, task, args.jobs)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| RunError::Io { path: args.out.display().to_string(), message: e.to_string() })?;
    let stamp = args.stamp.then(|| {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        format!("rivnet {} {secs}", env!("CARGO_PKG_VERSION"))
    });
    for t in &tables {
        let path = t
            .write(&args.out, stamp.as_deref())
            .map_err(|e| RunError::Io { path: args.out.join(t.file).display().to_string(), message: e.to_string() })?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args) = match &cli.command {
        Command::Validate(a) => (Task::Validate, a),
        Command::Lambda(a) => (Task::Lambda, a),
        Command::R0(a) => (Task::R0, a),
        Command::Steady(a) => (Task::Steady, a),
        Command::Simulate(a) => (Task::Simulate, a),
        Command::Sweep(a) => (Task::Sweep, a),
    };
    match execute(task, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let path = match &e {
                RunError::Config(c) => c.path().to_string(),
                RunError::Io { path, .. } => path.clone(),
                RunError::Numerical { .. } => String::new(),
            };
            report("error", e.kind(), &path, &e.to_string());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
