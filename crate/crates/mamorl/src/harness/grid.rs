//! Variant x seed grid execution with CSV output.
//!
//! Layout under the output directory:
//!
//! ```text
//! out/
//!   <variant>_s<seed>/
//!     run.csv         one row per training episode
//!     result.csv      GU / HV / front size / reference point
//!     front.csv       reference row plus non-dominated points
//!     checkpoint.ckpt trained online networks
//!     error.txt       only when the cell failed
//!   summary.csv       mean and std per variant across seeds
//! ```
//!
//! Every CSV starts with a `# schema=1` line. All numbers are written in
//! round-trip form, so re-running an identical config reproduces the
//! files byte for byte except the wall_ms column.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::metrics::{
    build_front_from_sweep, evaluate_gu, hypervolume_exact, preference_grid, ParetoFront,
    RolloutPolicy,
};
use crate::nets::save_checkpoint;
use crate::prefs::build_generators;
use crate::train::{run_training, EpisodeLog, PrefCase, PrefSetup, Variant};
use crate::{derive_seed, harness::ExperimentConfig};

pub const SCHEMA_LINE: &str = "# schema=1";

#[derive(Clone, Debug)]
pub struct CellResult {
    pub variant: Variant,
    pub seed: u64,
    pub gu: f64,
    pub hv: f64,
    pub n_front_points: usize,
    pub reference: Vec<f64>,
    pub error: Option<String>,
}

pub struct GridOutcome {
    pub cells: Vec<CellResult>,
    pub summary_path: PathBuf,
}

impl GridOutcome {
    pub fn all_ok(&self) -> bool {
        self.cells.iter().all(|c| c.error.is_none())
    }
}

fn cell_dir(out: &Path, variant: Variant, seed: u64) -> PathBuf {
    out.join(format!("{}_s{seed}", variant.as_str()))
}

fn write_run_csv(path: &Path, variant: Variant, seed: u64, logs: &[EpisodeLog]) -> Result<()> {
    let n = logs.first().map(|l| l.returns.len()).unwrap_or(0);
    let mut out = String::from(SCHEMA_LINE);
    out.push('\n');
    out.push_str("variant,seed,episode,env_steps");
    for i in 0..n {
        out.push_str(&format!(",return_{i}"));
    }
    out.push_str(",motd_loss,noise_sigma,wall_ms\n");
    for l in logs {
        out.push_str(&format!("{},{seed},{},{}", variant.as_str(), l.episode, l.env_steps));
        for r in &l.returns {
            out.push_str(&format!(",{r}"));
        }
        out.push_str(&format!(",{},{},{}\n", l.mean_loss, l.noise_sigma, l.wall_ms));
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_result_csv(path: &Path, cell: &CellResult) -> Result<()> {
    let mut out = String::from(SCHEMA_LINE);
    out.push('\n');
    out.push_str("variant,seed,gu,hv,n_front_points");
    for j in 0..cell.reference.len() {
        out.push_str(&format!(",ref_{j}"));
    }
    out.push('\n');
    out.push_str(&format!(
        "{},{},{},{},{}",
        cell.variant.as_str(),
        cell.seed,
        cell.gu,
        cell.hv,
        cell.n_front_points
    ));
    for r in &cell.reference {
        out.push_str(&format!(",{r}"));
    }
    out.push('\n');
    fs::write(path, out)?;
    Ok(())
}

fn write_front_csv(path: &Path, front: &ParetoFront) -> Result<()> {
    let m = front.m();
    let mut out = String::from(SCHEMA_LINE);
    out.push('\n');
    out.push_str("kind");
    for j in 0..m {
        out.push_str(&format!(",c{j}"));
    }
    out.push('\n');
    out.push_str("ref");
    for r in &front.reference {
        out.push_str(&format!(",{r}"));
    }
    out.push('\n');
    for p in &front.points {
        out.push_str("point");
        for v in p {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Parse a front CSV written by [`run_grid`] back into a [`ParetoFront`].
pub fn read_front_csv(path: &Path) -> Result<ParetoFront> {
    let text = fs::read_to_string(path)?;
    let mut reference: Option<Vec<f64>> = None;
    let mut points = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("kind") {
            continue;
        }
        let mut parts = line.split(',');
        let kind = parts.next().unwrap_or_default();
        let values: Vec<f64> = parts
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: idx + 1, msg: format!("bad number: {e}") })?;
        match kind {
            "ref" => reference = Some(values),
            "point" => points.push(values),
            other => {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("unknown row kind `{other}`"),
                })
            }
        }
    }
    let reference =
        reference.ok_or_else(|| Error::Parse { line: 0, msg: "front CSV has no ref row".into() })?;
    ParetoFront::new(points, reference)
}

pub(crate) fn pref_setup_for(cfg: &ExperimentConfig) -> Result<PrefSetup> {
    match cfg.pref_case {
        PrefCase::Random => Ok(PrefSetup::random()),
        PrefCase::Observation => Ok(PrefSetup::observation(build_generators(
            cfg.generator_seed,
            cfg.env.total_agents(),
            cfg.env.reward_dim(),
            cfg.env.obs_dim(),
            cfg.generator_scale,
        )?)),
    }
}

fn run_cell(cfg: &ExperimentConfig, variant: Variant, seed: u64, dir: &Path) -> Result<CellResult> {
    fs::create_dir_all(dir)?;
    let setup = pref_setup_for(cfg)?;
    let (learner, logs) = run_training(variant, &cfg.env, &cfg.train, &setup, seed)?;
    write_run_csv(&dir.join("run.csv"), variant, seed, &logs)?;

    let report = evaluate_gu(
        &RolloutPolicy::Learner(&learner),
        &cfg.env,
        &setup,
        cfg.eval_states,
        derive_seed(seed, 1001),
    )?;
    let grid = preference_grid(cfg.env.reward_dim(), cfg.grid_size)?;
    let sweep = build_front_from_sweep(&learner, &grid, cfg.episodes_per_point, derive_seed(seed, 1002))?;
    let hv = hypervolume_exact(&sweep.front)?;
    write_front_csv(&dir.join("front.csv"), &sweep.front)?;
    save_checkpoint(&dir.join("checkpoint.ckpt"), &learner.to_checkpoint()?)?;

    let cell = CellResult {
        variant,
        seed,
        gu: report.gu,
        hv,
        n_front_points: sweep.front.points.len(),
        reference: sweep.front.reference.clone(),
        error: None,
    };
    write_result_csv(&dir.join("result.csv"), &cell)?;
    Ok(cell)
}

/// Run every (variant, seed) cell, up to `jobs` in parallel, then write
/// the cross-seed summary. Cell failures are recorded in the cell's
/// directory and the grid continues.
pub fn run_grid(cfg: &ExperimentConfig, jobs: usize, force: bool) -> Result<GridOutcome> {
    let out = &cfg.output_dir;
    if out.exists() {
        let occupied = fs::read_dir(out)?.next().is_some();
        if occupied && !force {
            return Err(Error::Config(format!(
                "output dir {} is not empty; pass --force to overwrite",
                out.display()
            )));
        }
    }
    fs::create_dir_all(out)?;

    let cells: Vec<(Variant, u64)> = cfg
        .variants
        .iter()
        .flat_map(|v| cfg.seeds.iter().map(move |s| (*v, *s)))
        .collect();
    let results: Mutex<Vec<Option<CellResult>>> = Mutex::new(vec![None; cells.len()]);
    let next = AtomicUsize::new(0);
    let workers = jobs.max(1).min(cells.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= cells.len() {
                    break;
                }
                let (variant, seed) = cells[idx];
                let dir = cell_dir(out, variant, seed);
                let cell = match run_cell(cfg, variant, seed, &dir) {
                    Ok(cell) => cell,
                    Err(e) => {
                        let _ = fs::create_dir_all(&dir);
                        let _ = fs::write(dir.join("error.txt"), format!("{e}\n"));
                        CellResult {
                            variant,
                            seed,
                            gu: f64::NAN,
                            hv: f64::NAN,
                            n_front_points: 0,
                            reference: Vec::new(),
                            error: Some(e.to_string()),
                        }
                    }
                };
                results.lock().expect("poisoned")[idx] = Some(cell);
            });
        }
    });

    let cells: Vec<CellResult> = results
        .into_inner()
        .expect("poisoned")
        .into_iter()
        .map(|c| c.expect("all cells visited"))
        .collect();

    let summary_path = out.join("summary.csv");
    write_summary_csv(&summary_path, cfg, &cells)?;
    Ok(GridOutcome { cells, summary_path })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn write_summary_csv(path: &Path, cfg: &ExperimentConfig, cells: &[CellResult]) -> Result<()> {
    let mut out = String::from(SCHEMA_LINE);
    out.push('\n');
    out.push_str("variant,n_runs,gu_mean,gu_std,hv_mean,hv_std\n");
    for variant in &cfg.variants {
        let ok: Vec<&CellResult> = cells
            .iter()
            .filter(|c| c.variant == *variant && c.error.is_none())
            .collect();
        if ok.is_empty() {
            out.push_str(&format!("{},0,,,,\n", variant.as_str()));
            continue;
        }
        let gus: Vec<f64> = ok.iter().map(|c| c.gu).collect();
        let hvs: Vec<f64> = ok.iter().map(|c| c.hv).collect();
        let (gm, gs) = mean_std(&gus);
        let (hm, hs) = mean_std(&hvs);
        out.push_str(&format!("{},{},{gm},{gs},{hm},{hs}\n", variant.as_str(), ok.len()));
    }
    fs::write(path, out)?;
    Ok(())
}
