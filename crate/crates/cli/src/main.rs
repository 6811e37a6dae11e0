//! Configuration-driven front end: select a model, grid, initial data,
//! and task; emit wavefunction snapshots, run metadata, and verification
//! reports. Exit codes: 0 success, 2 validation error, 3 numerical
//! failure.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::json;

use quadprop::evolution::{apply_forward, apply_inverse};
use quadprop::nonlinear::{picard_solve, PicardOptions};
use quadprop::verify::{format_table, run_battery};
use quadprop::wavefunction::{fmt17, WaveFunction};
use quadprop::Propagator;

use config::{
    build_grid, build_initial, build_model, build_nonlinear, RunConfig, Task,
};

#[derive(Parser, Debug)]
#[command(name = "quadprop", about = "Propagator engine for quadratic Hamiltonians")]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,

    /// Override the task from the configuration file.
    #[arg(long)]
    task: Option<String>,

    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Suppress the textual report on stdout.
    #[arg(long, default_value_t = false)]
    quiet: bool,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    std::process::exit(run());
}

const EXIT_OK: i32 = 0;
const EXIT_VALIDATION: i32 = 2;
const EXIT_NUMERICAL: i32 = 3;

fn run() -> i32 {
    let cli = Cli::parse();

    let raw = match fs::read_to_string(&cli.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", cli.config.display());
            return EXIT_VALIDATION;
        }
    };
    let mut cfg: RunConfig = match serde_json::from_str(&raw) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return EXIT_VALIDATION;
        }
    };
    if let Some(task) = &cli.task {
        match task.parse() {
            Ok(t) => cfg.task = t,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_VALIDATION;
            }
        }
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.display().to_string();
    }

    match execute(&cfg, cli.quiet) {
        Ok(code) => code,
        Err(e) => {
            let code = match &e {
                quadprop::Error::Validation(_)
                | quadprop::Error::UnknownModel { .. }
                | quadprop::Error::BadExpression(_)
                | quadprop::Error::OutOfRange { .. } => EXIT_VALIDATION,
                _ => EXIT_NUMERICAL,
            };
            eprintln!("error: {e}");
            code
        }
    }
}

fn execute(cfg: &RunConfig, quiet: bool) -> quadprop::Result<i32> {
    validate(cfg)?;
    let out_dir = Path::new(&cfg.output_dir);
    fs::create_dir_all(out_dir)?;

    let model = build_model(&cfg.model)?;
    let model_name = model.coeffs.name.clone();
    let prop = Propagator::new(model)?;

    for &t in &cfg.times {
        prop.check_time(t)?;
    }

    match cfg.task {
        Task::Verify => {
            let reports = run_battery(&prop)?;
            let all_pass = reports.iter().all(|r| r.pass);
            fs::write(
                out_dir.join("verify_report.json"),
                serde_json::to_string_pretty(&reports).expect("serializable"),
            )?;
            if !quiet {
                print!("{}", format_table(&reports));
            }
            Ok(if all_pass { EXIT_OK } else { EXIT_NUMERICAL })
        }
        Task::Evolve | Task::Invert | Task::Nonlinear => {
            let grid = build_grid(&cfg.grid)?;
            let psi0 = build_initial(&cfg.initial, grid)?;
            let mut snapshots = Vec::new();

            for (idx, &t) in cfg.times.iter().enumerate() {
                let (psi_t, extra) = match cfg.task {
                    Task::Evolve => (apply_forward(&prop, &psi0, t)?, json!({})),
                    Task::Invert => (apply_inverse(&prop, &psi0, t)?, json!({})),
                    Task::Nonlinear => {
                        let ncfg = cfg.nonlinear.as_ref().expect("validated");
                        let nl = build_nonlinear(ncfg)?;
                        let opts = PicardOptions {
                            n_time_nodes: ncfg.time_nodes,
                            ..Default::default()
                        };
                        let res = picard_solve(
                            &prop, &psi0, &nl, t, ncfg.tol, ncfg.max_iter, &opts,
                        )?;
                        let log_path = out_dir.join(format!("iterations_{idx:03}.json"));
                        fs::write(
                            &log_path,
                            serde_json::to_string_pretty(&res.iteration_log())
                                .expect("serializable"),
                        )?;
                        let extra = json!({
                            "converged": res.converged,
                            "iterations": res.iterations,
                            "iteration_log": log_path.file_name().unwrap().to_str(),
                        });
                        (res.psi, extra)
                    }
                    Task::Verify => unreachable!(),
                };

                let csv_name = format!("psi_{idx:03}.csv");
                write_csv(&out_dir.join(&csv_name), &psi_t)?;

                let data = prop.phase_data(t)?;
                snapshots.push(json!({
                    "index": idx,
                    "t": t,
                    "file": csv_name,
                    "mu": data.mu,
                    "weight": data.w,
                    "phases": data.phases,
                    "norm_l1": psi_t.norm_l1(),
                    "norm_l2": psi_t.norm_l2(),
                    "norm_sup": psi_t.norm_sup(),
                    "task_detail": extra,
                }));
                if !quiet {
                    println!("t = {t}: wrote {csv_name}");
                }
            }

            let metadata = json!({
                "model": model_name,
                "validity_interval": [0.0, prop.validity_end()],
                "config": cfg,
                "snapshots": snapshots,
            });
            fs::write(
                out_dir.join("metadata.json"),
                serde_json::to_string_pretty(&metadata).expect("serializable"),
            )?;
            Ok(EXIT_OK)
        }
    }
}

fn validate(cfg: &RunConfig) -> quadprop::Result<()> {
    let err = |m: String| Err(quadprop::Error::Validation(m));
    if cfg.task != Task::Verify && cfg.times.is_empty() {
        return err("times list must not be empty".into());
    }
    if cfg.times.iter().any(|t| !t.is_finite() || *t <= 0.0) {
        return err("times must be positive and finite".into());
    }
    if cfg.task == Task::Nonlinear {
        match &cfg.nonlinear {
            None => return err("nonlinear task requires a `nonlinear` section".into()),
            Some(n) => {
                if n.source_re.is_none() && !(n.nu > 0.0 && n.nu <= 1.0) {
                    return err(format!("nonlinear exponent nu must be in (0, 1], got {}", n.nu));
                }
                if !(n.tol > 0.0) || n.max_iter == 0 {
                    return err("nonlinear tol must be positive and max_iter at least 1".into());
                }
            }
        }
    }
    Ok(())
}

/// CSV snapshot with columns x, re, im, abs at 17 significant digits.
fn write_csv(path: &Path, psi: &WaveFunction) -> quadprop::Result<()> {
    let mut out = Vec::new();
    writeln!(out, "x,re,im,abs").map_err(quadprop::Error::from)?;
    for (j, v) in psi.values.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            fmt17(psi.grid.node(j)),
            fmt17(v.re),
            fmt17(v.im),
            fmt17(v.norm())
        )
        .map_err(quadprop::Error::from)?;
    }
    fs::write(path, out)?;
    Ok(())
}
