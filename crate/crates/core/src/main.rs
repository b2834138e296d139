use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mclfem::config::{parse_config, RunConfig};
use mclfem::error::Result;
use mclfem::output::{write_cesaro_csv, write_consistency_csv, write_eoc_csv};
use mclfem::studies;

#[derive(Parser)]
#[command(name = "mclfem", version, about = "Edge-limited FEM solver for hyperbolic conservation laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads for edge-parallel kernels (overrides the config).
    #[arg(long)]
    threads: Option<usize>,
    /// RNG seed recorded with the run (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct LevelArgs {
    /// Mesh sizes (cells per axis), e.g. --levels 64,128,256.
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Single simulation: snapshots, diagnostics CSV, configured assertions.
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Error norms against the exact reference across mesh levels.
    Convergence {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        levels: LevelArgs,
    },
    /// Space–time consistency defects across mesh levels.
    Consistency {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        levels: LevelArgs,
    },
    /// Cesàro-average Cauchy increments across mesh levels.
    Cesaro {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        levels: LevelArgs,
        /// Probe points per axis for the shared evaluation grid.
        #[arg(long, default_value_t = 1024)]
        probes: usize,
    },
    /// Assemble a mesh and verify the discrete operator identities.
    CheckOperators {
        /// Take the mesh from a run configuration...
        #[arg(long)]
        config: Option<PathBuf>,
        /// ...or specify it inline.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        cells: Option<usize>,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let text = std::fs::read_to_string(&common.config).map_err(|source| {
        mclfem::Error::Io { path: common.config.display().to_string(), source }
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if cfg.threads == 0 {
        return Err(mclfem::Error::config("threads must be at least 1"));
    }
    Ok(cfg)
}

fn init_thread_pool(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| mclfem::Error::config(format!("thread pool setup failed: {e}")))
}

fn output_dir<'a>(common: &'a CommonArgs, cfg: &'a RunConfig) -> &'a Path {
    common
        .output_dir
        .as_deref()
        .unwrap_or_else(|| Path::new(&cfg.output.dir))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| mclfem::Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

/// Ok(true) = success, Ok(false) = an enabled assertion failed.
fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { common } => {
            let cfg = load_config(&common)?;
            init_thread_pool(cfg.threads)?;
            let dir = output_dir(&common, &cfg).to_path_buf();
            let art = studies::run_single(&cfg, Some(&dir))?;
            println!(
                "run finished: t = {}, {} steps, {} file(s) written to {}",
                art.trajectory.final_state.time,
                art.record.n_rows().saturating_sub(1),
                art.written_files.len(),
                dir.display()
            );
            println!(
                "conservation drift {:.3e}, entropy max step change {:+.3e}",
                art.record.max_conservation_drift(),
                art.record.max_entropy_step_increase()
            );
            for failure in &art.assertion_failures {
                eprintln!("assertion failed: {failure}");
            }
            Ok(art.assertion_failures.is_empty())
        }
        Command::Convergence { common, levels } => {
            let cfg = load_config(&common)?;
            init_thread_pool(cfg.threads)?;
            let out = studies::convergence_study(&cfg, &levels.levels)?;
            let dir = output_dir(&common, &cfg).to_path_buf();
            ensure_dir(&dir)?;
            let path = dir.join(format!("{}_eoc.csv", cfg.output.prefix));
            write_eoc_csv(&out.table, &path)?;
            println!("reference: {}", out.reference);
            println!("{:>12} {:>13} {:>13} {:>13} {:>8}", "h", "L1", "L2", "Linf", "EOC(L1)");
            for r in &out.table.rows {
                println!(
                    "{:>12.6e} {:>13.6e} {:>13.6e} {:>13.6e} {:>8}",
                    r.h,
                    r.l1,
                    r.l2,
                    r.linf,
                    r.eoc_l1.map_or("-".into(), |e| format!("{e:.3}"))
                );
            }
            if let Some(slope) = out.table.fitted_slope_l1() {
                println!("fitted L1 slope: {slope:.4}");
            }
            println!("table written to {}", path.display());
            Ok(true)
        }
        Command::Consistency { common, levels } => {
            let cfg = load_config(&common)?;
            init_thread_pool(cfg.threads)?;
            let report = studies::consistency_study(&cfg, &levels.levels)?;
            let dir = output_dir(&common, &cfg).to_path_buf();
            ensure_dir(&dir)?;
            let path = dir.join(format!("{}_consistency.csv", cfg.output.prefix));
            write_consistency_csv(&report, &path)?;
            println!("test function: {}", report.test_function);
            println!("{:>12} {:>13} {:>13} {:>13}", "h", "R1", "R2", "R3");
            for r in &report.rows {
                println!("{:>12.6e} {:>13.6e} {:>13.6e} {:>13.6e}", r.h, r.r1, r.r2, r.r3);
            }
            let [s1, s2, s3] = report.slopes();
            let s = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
            println!("fitted slopes: R1 {}, R2 {}, R3 {}", s(s1), s(s2), s(s3));
            println!("table written to {}", path.display());
            Ok(true)
        }
        Command::Cesaro { common, levels, probes } => {
            let cfg = load_config(&common)?;
            init_thread_pool(cfg.threads)?;
            let out = studies::cesaro_study(&cfg, &levels.levels, probes)?;
            let dir = output_dir(&common, &cfg).to_path_buf();
            ensure_dir(&dir)?;
            let path = dir.join(format!("{}_cesaro.csv", cfg.output.prefix));
            write_cesaro_csv(&out.diffs, &path)?;
            for (k, d) in out.diffs.iter().enumerate() {
                println!("|Avg_{} - Avg_{}|_L1 = {:.6e}", k + 2, k + 1, d);
            }
            println!("table written to {}", path.display());
            Ok(true)
        }
        Command::CheckOperators { config, dim, cells } => {
            let (dim, cells, extent) = match (config, dim, cells) {
                (Some(path), None, None) => {
                    let text = std::fs::read_to_string(&path).map_err(|source| {
                        mclfem::Error::Io { path: path.display().to_string(), source }
                    })?;
                    let cfg = parse_config(&text)?;
                    (cfg.mesh.dim, cfg.mesh.cells, cfg.mesh_extent()?)
                }
                (None, Some(dim), Some(cells)) => (dim, cells, vec![1.0; dim]),
                _ => {
                    return Err(mclfem::Error::config(
                        "check-operators needs either --config or both --dim and --cells",
                    ))
                }
            };
            let report = studies::check_operators(dim, cells, &extent)?;
            println!("{report}");
            Ok(report.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
