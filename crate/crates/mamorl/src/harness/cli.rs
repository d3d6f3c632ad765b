//! Command-line entry point.
//!
//! Subcommands: `train`, `evaluate`, `metrics`, `gradcheck`. Exit codes:
//! 0 on success, 1 when a check or run fails, 2 on usage errors.

use std::fs;
use std::path::PathBuf;

use super::config::parse_config;
use super::gradsuite::gradient_suite;
use super::grid::{pref_setup_for, read_front_csv, run_grid};
use crate::error::Result;
use crate::metrics::{
    build_front_from_sweep, evaluate_gu, hypervolume_exact, preference_grid, RolloutPolicy,
};
use crate::nets::load_checkpoint;
use crate::train::Learner;

const USAGE: &str = "\
usage: mamorl <subcommand> [flags]

subcommands:
  train      --config PATH [--jobs N] [--force] [--seed-override K]
             run the variant x seed grid from a config file
  evaluate   --checkpoint PATH --config PATH
             recompute GU and HV for a saved checkpoint
  metrics    --front PATH
             recompute hypervolume from a saved front CSV
  gradcheck  [--seeds N]
             finite-difference check of every network (default 10 seeds)

The MAMORL_OUT environment variable overrides the configured output
directory.";

fn usage_error(msg: &str) -> i32 {
    eprintln!("error: {msg}\n\n{USAGE}");
    2
}

struct Flags {
    config: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    front: Option<PathBuf>,
    jobs: usize,
    force: bool,
    seed_override: Option<u64>,
    seeds: u64,
}

fn parse_flags(args: &[String]) -> std::result::Result<Flags, String> {
    let mut flags = Flags {
        config: None,
        checkpoint: None,
        front: None,
        jobs: 1,
        force: false,
        seed_override: None,
        seeds: 10,
    };
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let mut take = || -> std::result::Result<&String, String> {
            it.next().ok_or_else(|| format!("flag {arg} needs a value"))
        };
        match arg.as_str() {
            "--config" => flags.config = Some(PathBuf::from(take()?)),
            "--checkpoint" => flags.checkpoint = Some(PathBuf::from(take()?)),
            "--front" => flags.front = Some(PathBuf::from(take()?)),
            "--jobs" => {
                flags.jobs = take()?
                    .parse()
                    .map_err(|_| "--jobs expects a positive integer".to_string())?
            }
            "--force" => flags.force = true,
            "--seed-override" => {
                flags.seed_override = Some(
                    take()?
                        .parse()
                        .map_err(|_| "--seed-override expects an integer".to_string())?,
                )
            }
            "--seeds" => {
                flags.seeds = take()?
                    .parse()
                    .map_err(|_| "--seeds expects a positive integer".to_string())?
            }
            other => return Err(format!("unknown flag `{other}`")),
        }
    }
    Ok(flags)
}

fn load_config(flags: &Flags) -> Result<super::ExperimentConfig> {
    let path = flags.config.as_ref().expect("checked by caller");
    let text = fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    if let Ok(out) = std::env::var("MAMORL_OUT") {
        if !out.is_empty() {
            cfg.output_dir = PathBuf::from(out);
        }
    }
    if let Some(seed) = flags.seed_override {
        cfg.seeds = vec![seed];
    }
    Ok(cfg)
}

fn cmd_train(flags: Flags) -> i32 {
    let cfg = match load_config(&flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match run_grid(&cfg, flags.jobs, flags.force) {
        Ok(outcome) => {
            for cell in &outcome.cells {
                match &cell.error {
                    None => println!(
                        "{}_s{}: GU={:.4} HV={:.4} front={}",
                        cell.variant.as_str(),
                        cell.seed,
                        cell.gu,
                        cell.hv,
                        cell.n_front_points
                    ),
                    Some(e) => println!("{}_s{}: FAILED ({e})", cell.variant.as_str(), cell.seed),
                }
            }
            println!("summary: {}", outcome.summary_path.display());
            if outcome.all_ok() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn cmd_evaluate(flags: Flags) -> i32 {
    let cfg = match load_config(&flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let run = || -> Result<()> {
        let ckpt = load_checkpoint(flags.checkpoint.as_ref().expect("checked by caller"))?;
        let setup = pref_setup_for(&cfg)?;
        let learner = Learner::from_checkpoint(&ckpt, &cfg.env, &cfg.train, &setup)?;
        let report = evaluate_gu(
            &RolloutPolicy::Learner(&learner),
            &cfg.env,
            &setup,
            cfg.eval_states,
            crate::derive_seed(learner.seed, 1001),
        )?;
        let grid = preference_grid(cfg.env.reward_dim(), cfg.grid_size)?;
        let sweep = build_front_from_sweep(
            &learner,
            &grid,
            cfg.episodes_per_point,
            crate::derive_seed(learner.seed, 1002),
        )?;
        let hv = hypervolume_exact(&sweep.front)?;
        println!("variant,seed,gu,hv,n_front_points");
        println!(
            "{},{},{},{},{}",
            learner.variant.as_str(),
            learner.seed,
            report.gu,
            hv,
            sweep.front.points.len()
        );
        Ok(())
    };
    match run() {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn cmd_metrics(flags: Flags) -> i32 {
    let run = || -> Result<()> {
        let front = read_front_csv(flags.front.as_ref().expect("checked by caller"))?;
        let hv = hypervolume_exact(&front)?;
        println!("n_front_points,hv");
        println!("{},{}", front.points.len(), hv);
        Ok(())
    };
    match run() {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn cmd_gradcheck(flags: Flags) -> i32 {
    match gradient_suite(flags.seeds) {
        Ok(reports) => {
            let mut ok = true;
            for r in &reports {
                let pass = r.max_rel_error < 1e-4;
                ok &= pass;
                println!(
                    "{:<22} max_rel_error={:.3e} {}",
                    r.network,
                    r.max_rel_error,
                    if pass { "PASS" } else { "FAIL" }
                );
            }
            if ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Dispatch `argv` (including the program name) and return the exit code.
pub fn cli(argv: Vec<String>) -> i32 {
    let Some(sub) = argv.get(1) else {
        return usage_error("missing subcommand");
    };
    let flags = match parse_flags(&argv[2..]) {
        Ok(flags) => flags,
        Err(msg) => return usage_error(&msg),
    };
    match sub.as_str() {
        "train" => {
            if flags.config.is_none() {
                return usage_error("train requires --config");
            }
            cmd_train(flags)
        }
        "evaluate" => {
            if flags.checkpoint.is_none() {
                return usage_error("evaluate requires --checkpoint");
            }
            if flags.config.is_none() {
                return usage_error("evaluate requires --config");
            }
            cmd_evaluate(flags)
        }
        "metrics" => {
            if flags.front.is_none() {
                return usage_error("metrics requires --front");
            }
            cmd_metrics(flags)
        }
        "gradcheck" => cmd_gradcheck(flags),
        other => usage_error(&format!("unknown subcommand `{other}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(parts: &[&str]) -> Vec<String> {
        std::iter::once("mamorl")
            .chain(parts.iter().copied())
            .map(String::from)
            .collect()
    }

    #[test]
    fn missing_subcommand_and_flags_are_usage_errors() {
        assert_eq!(cli(args(&[])), 2);
        assert_eq!(cli(args(&["fit"])), 2);
        assert_eq!(cli(args(&["evaluate"])), 2);
        assert_eq!(cli(args(&["evaluate", "--checkpoint", "x.ckpt"])), 2);
        assert_eq!(cli(args(&["metrics"])), 2);
        assert_eq!(cli(args(&["train"])), 2);
        assert_eq!(cli(args(&["train", "--config"])), 2);
        assert_eq!(cli(args(&["train", "--config", "a", "--bogus"])), 2);
    }

    #[test]
    fn metrics_recomputes_hv_from_front_csv() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("front.csv");
        std::fs::write(
            &path,
            "# schema=1\nkind,c0,c1\nref,0,0\npoint,2,1\npoint,1,2\n",
        )
        .unwrap();
        assert_eq!(cli(args(&["metrics", "--front", path.to_str().unwrap()])), 0);
        assert_eq!(cli(args(&["metrics", "--front", "/nonexistent/front.csv"])), 1);
    }

    #[test]
    fn gradcheck_one_seed_passes() {
        assert_eq!(cli(args(&["gradcheck", "--seeds", "1"])), 0);
    }
}
