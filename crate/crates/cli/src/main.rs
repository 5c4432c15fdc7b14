#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod models;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};

use config::{Action, RunConfig};
use error::CliError;
use run::Outputs;

const DEFAULT_OUT: &str = "phfem_out";

/// Port-Hamiltonian finite elements for Mindlin plates and Timoshenko beams.
#[derive(Debug, Parser)]
#[command(name = "phfem", version)]
struct Args {
    action: Action,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the linear-algebra kernels.
    #[arg(long, env = "PHFEM_THREADS", default_value_t = 1)]
    threads: usize,
    /// Reorient clockwise triangles instead of rejecting the mesh.
    #[arg(long)]
    fix_orientation: bool,
}

fn resolve(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.resolve_action(args.action)?;
    cfg.fix_orientation |= args.fix_orientation;
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    }
    cfg.output_dir.get_or_insert_with(|| PathBuf::from(DEFAULT_OUT));
    cfg.validate_action()?;
    if args.threads == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    phfem::linalg::set_threads(args.threads);

    let resolved = resolve(&args);
    let out_dir = match &resolved {
        Ok(cfg) => cfg.output_dir.clone().unwrap_or_default(),
        Err(_) => args.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
    };
    let mut outputs = match Outputs::new(&out_dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("phfem: {e}");
            return ExitCode::from(e.exit_code());
        }
    };

    let (config, result) = match resolved {
        Ok(cfg) => {
            let r = run::execute(&cfg, &mut outputs);
            (serde_json::to_value(&cfg).unwrap_or(Value::Null), r)
        }
        Err(e) => (Value::Null, Err(e)),
    };
    let (status, code, model) = match &result {
        Ok(facts) => (json!({ "ok": true, "exit_code": 0 }), 0, facts.clone()),
        Err(e) => (
            json!({ "ok": false, "exit_code": e.exit_code(), "error": e.to_string() }),
            e.exit_code(),
            Value::Null,
        ),
    };
    let mut files = outputs.files.clone();
    files.push("manifest.json".into());
    let manifest = json!({
        "program": "phfem",
        "version": env!("CARGO_PKG_VERSION"),
        "action": args.action.name(),
        "config_path": args.config.display().to_string(),
        "threads": args.threads,
        "config": config,
        "model": model,
        "outputs": files,
        "status": status,
    });
    if let Err(e) = outputs.write_json("manifest.json", &manifest) {
        eprintln!("phfem: {e}");
        return ExitCode::from(e.exit_code());
    }
    if let Err(e) = &result {
        eprintln!("phfem: {e}");
    }
    ExitCode::from(code)
}
