use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use memstab::output::{summary, write_energy_csv, write_snapshots_csv, write_summary, write_trace_csv};
use memstab::{expand_sweep, parse_config, preset, preset_full, run, self_convergence, Error, RunManifest, RunOptions};
use rayon::prelude::*;

const PLOT_SCRIPT: &str = include_str!("plots.py");
const PLOT_SCRIPT_NAME: &str = "plots.py";

#[derive(Parser)]
#[command(name = "memstab", version, about = "KdV-Burgers / Kuramoto-Sivashinsky runs with boundary memory feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write energy.csv, snapshots.csv, trace.csv, summary.txt.
    Run(Source),
    /// Print the hypothesis report.
    Check(Source),
    /// Run every point of the [sweep] axes, one subdirectory each, plus index.csv.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Worker threads (defaults to available cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Self-convergence study over doubling grids.
    Convergence {
        #[command(flatten)]
        source: Source,
        /// Comma-separated interval counts, each twice the previous (default M, 2M, 4M).
        #[arg(long, value_delimiter = ',')]
        levels: Vec<usize>,
    },
    /// Write the plotting script (plot-energy / plot-solution).
    Plotscript {
        /// Directory to write plots.py into.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Source {
    /// Configuration file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Shipped preset: case1 .. case5.
    #[arg(long)]
    preset: Option<String>,
    /// Use the reference grids for a preset instead of the desk-scale ones.
    #[arg(long, requires = "preset")]
    full_scale: bool,
    /// Output directory (overrides out_dir from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Refuse to run when a hypothesis fails.
    #[arg(long)]
    strict: bool,
    /// Keep every K-th step in snapshots.csv (0: first and last only).
    #[arg(long)]
    snapshot_stride: Option<usize>,
}

impl Source {
    fn load(&self) -> anyhow::Result<RunManifest> {
        let mut m = match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                parse_config(&text).with_context(|| format!("in {}", path.display()))?
            }
            (None, Some(name)) if self.full_scale => preset_full(name)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => bail!("one of --config or --preset is required"),
        };
        if let Some(out) = &self.out {
            m.out_dir = out.clone();
        }
        if let Some(k) = self.snapshot_stride {
            m.snapshot_stride = k;
        }
        m.config.strict_hypotheses |= self.strict;
        Ok(m)
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_plot_script(dir: &Path) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(PLOT_SCRIPT_NAME);
    fs::write(&path, PLOT_SCRIPT).with_context(|| format!("writing {}", path.display()))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(&path, fs::Permissions::from_mode(0o755))?;
    }
    Ok(path)
}

/// Runs one configuration into `dir` and returns its summary entries.
fn run_into(m: &RunManifest, dir: &Path) -> anyhow::Result<Vec<(String, String)>> {
    let out = run(&m.config, &RunOptions { snapshot_stride: m.snapshot_stride })?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut w = create(&dir.join("energy.csv"))?;
    write_energy_csv(&mut w, &out.energy)?;
    w.flush()?;
    let mut w = create(&dir.join("snapshots.csv"))?;
    write_snapshots_csv(&mut w, &out.snapshots, out.dx)?;
    w.flush()?;
    let mut w = create(&dir.join("trace.csv"))?;
    write_trace_csv(&mut w, &out.trace)?;
    w.flush()?;
    let entries = summary(&m.config, &out);
    let mut w = create(&dir.join("summary.txt"))?;
    write_summary(&mut w, &entries)?;
    w.flush()?;
    if m.emit_plot {
        write_plot_script(dir)?;
    }
    Ok(entries)
}

fn cmd_run(src: &Source) -> anyhow::Result<()> {
    let m = src.load()?;
    let entries = run_into(&m, &m.out_dir)?;
    for key in ["steps", "hypotheses", "energy_final", "exp_fit_rate", "poly_fit_rate"] {
        if let Some((_, v)) = entries.iter().find(|(k, _)| k == key) {
            println!("{key} = {v}");
        }
    }
    println!("wrote {}", m.out_dir.display());
    Ok(())
}

fn cmd_check(src: &Source) -> anyhow::Result<()> {
    let m = src.load()?;
    let report = m.config.hypothesis_report();
    print!("{report}");
    println!();
    print!("{}", report.key_values());
    if m.config.strict_hypotheses {
        report.require()?;
    }
    Ok(())
}

fn lookup<'a>(entries: &'a [(String, String)], key: &str) -> &'a str {
    entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str()).unwrap_or("")
}

fn cmd_sweep(src: &Source, workers: Option<usize>) -> anyhow::Result<()> {
    let m = src.load()?;
    let points = expand_sweep(&m)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(Error::Parse("--workers must be at least 1".into()).into());
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    info!("sweep: {} points on {} workers", points.len(), pool.current_num_threads());

    let results: Vec<_> = pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                let dir = m.out_dir.join(format!("point_{:04}", p.index));
                let pm = RunManifest { config: p.config.clone(), sweep: Vec::new(), ..m.clone() };
                (dir.clone(), run_into(&pm, &dir))
            })
            .collect()
    });

    fs::create_dir_all(&m.out_dir).with_context(|| format!("creating {}", m.out_dir.display()))?;
    let index_path = m.out_dir.join("index.csv");
    let mut index = csv::Writer::from_writer(create(&index_path)?);
    let mut header = vec!["index".to_string(), "dir".to_string()];
    header.extend(m.sweep.iter().map(|a| a.name.clone()));
    header.extend(["status", "steps", "energy_final", "exp_fit_rate", "poly_fit_rate"].map(String::from));
    index.write_record(&header)?;
    let mut first_error = None;
    for (p, (dir, result)) in points.iter().zip(results) {
        let mut row = vec![p.index.to_string(), dir.file_name().unwrap().to_string_lossy().into_owned()];
        row.extend(p.assignments.iter().map(|(_, v)| format!("{v:?}")));
        match result {
            Ok(entries) => {
                row.push("ok".into());
                for key in ["steps", "energy_final", "exp_fit_rate", "poly_fit_rate"] {
                    row.push(lookup(&entries, key).to_string());
                }
            }
            Err(e) => {
                warn!("point {}: {e:#}", p.index);
                row.push(format!("error: {e}"));
                row.extend(std::iter::repeat_n(String::new(), 4));
                first_error.get_or_insert(e);
            }
        }
        index.write_record(&row)?;
    }
    index.flush()?;
    println!("wrote {} points, index at {}", points.len(), index_path.display());
    match first_error {
        Some(e) => Err(e.context("one or more sweep points failed")),
        None => Ok(()),
    }
}

fn cmd_convergence(src: &Source, levels: &[usize]) -> anyhow::Result<()> {
    let m = src.load()?;
    let base = m.config.m;
    let levels = if levels.is_empty() { vec![base, 2 * base, 4 * base] } else { levels.to_vec() };
    let study = self_convergence(&m.config, &levels)?;
    println!("{:>12} {:>14} {:>8}", "levels", "difference", "order");
    for (i, pair) in study.levels.windows(2).enumerate() {
        let order = if i == 0 { String::new() } else { format!("{:.3}", study.orders[i - 1]) };
        println!("{:>12} {:>14.6e} {:>8}", format!("{}/{}", pair[0], pair[1]), study.differences[i], order);
    }
    println!("observed_order = {:.6}", study.observed_order());
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let Some(err) = e.chain().find_map(|c| c.downcast_ref::<Error>()) else {
        return if e.chain().any(|c| c.is::<clap::Error>()) { 2 } else { 1 };
    };
    match err {
        Error::Config { .. } | Error::Parse(_) | Error::UnknownPreset(_) | Error::InvalidParameter { .. } => 2,
        Error::HypothesisFailed(_) => 3,
        Error::Divergence { .. } | Error::PicardNotConverged { .. } | Error::SingularPivot { .. } => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(src) => cmd_run(src),
        Command::Check(src) => cmd_check(src),
        Command::Sweep { source, workers } => cmd_sweep(source, *workers),
        Command::Convergence { source, levels } => cmd_convergence(source, levels),
        Command::Plotscript { out } => write_plot_script(out).map(|p| println!("wrote {}", p.display())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
