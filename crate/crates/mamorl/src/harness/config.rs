//! Line-oriented experiment configuration.
//!
//! Grammar: `[section]` headers, one `key = value` entry per line,
//! `#` comments, blank lines ignored. Sections are `env`, `train`,
//! `preference`, `eval`, and `experiment`. Unknown sections or keys are
//! parse errors; so are out-of-range values and cross-field conflicts,
//! each reported with its line number. An empty file yields the full
//! default configuration.

use std::path::PathBuf;

use crate::env::{EnvConfig, EnvKind};
use crate::error::{Error, Result};
use crate::train::{PrefCase, TrainConfig, Variant};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub pref_case: PrefCase,
    pub generator_seed: u64,
    pub generator_scale: f64,
    /// Initial states per GU evaluation.
    pub eval_states: usize,
    /// Preference grid resolution for the front sweep.
    pub grid_size: usize,
    pub episodes_per_point: usize,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: EnvConfig::default(),
            train: TrainConfig::default(),
            pref_case: PrefCase::Observation,
            generator_seed: 0,
            generator_scale: 1.0,
            eval_states: 128,
            grid_size: 11,
            episodes_per_point: 16,
            variants: vec![Variant::Aa],
            seeds: vec![0],
            output_dir: PathBuf::from("out"),
        }
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| perr(line, format!("`{key}` expects a real number, got `{v}`")))
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| perr(line, format!("`{key}` expects a non-negative integer, got `{v}`")))
}

fn parse_u64(line: usize, key: &str, v: &str) -> Result<u64> {
    v.parse::<u64>()
        .map_err(|_| perr(line, format!("`{key}` expects an integer, got `{v}`")))
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(perr(line, format!("`{key}` expects true or false, got `{v}`"))),
    }
}

fn check_range(line: usize, key: &str, ok: bool, want: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(perr(line, format!("`{key}` out of range: expected {want}")))
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut section: Option<&str> = None;
    let mut section_line = 0usize;
    let mut variants_line = 0usize;
    let mut case_line = 0usize;
    let mut env_section_line = 0usize;
    let mut train_section_line = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.split_once('#') {
            Some((before, _)) => before,
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| perr(line, "unterminated section header"))?
                .trim();
            section = match name {
                "env" | "train" | "preference" | "eval" | "experiment" => {
                    section_line = line;
                    match name {
                        "env" => env_section_line = line,
                        "train" => train_section_line = line,
                        _ => {}
                    }
                    Some(match name {
                        "env" => "env",
                        "train" => "train",
                        "preference" => "preference",
                        "eval" => "eval",
                        _ => "experiment",
                    })
                }
                other => return Err(perr(line, format!("unknown section `[{other}]`"))),
            };
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| perr(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let v = value.trim();
        let section = section.ok_or_else(|| perr(line, "entry before any [section] header"))?;
        match (section, key) {
            ("env", "kind") => {
                cfg.env.kind = EnvKind::parse(v).map_err(|e| perr(line, e.to_string()))?
            }
            ("env", "n_agents") => {
                cfg.env.n_agents = parse_usize(line, key, v)?;
                check_range(line, key, cfg.env.n_agents >= 1, ">= 1")?;
            }
            ("env", "n_landmarks") => cfg.env.n_landmarks = parse_usize(line, key, v)?,
            ("env", "n_adversaries") => cfg.env.n_adversaries = parse_usize(line, key, v)?,
            ("env", "world_size") => {
                cfg.env.world_size = parse_f64(line, key, v)?;
                check_range(line, key, cfg.env.world_size > 0.0, "> 0")?;
            }
            ("env", "dt") => {
                cfg.env.dt = parse_f64(line, key, v)?;
                check_range(line, key, cfg.env.dt > 0.0, "> 0")?;
            }
            ("env", "max_steps") => {
                cfg.env.max_steps = parse_usize(line, key, v)?;
                check_range(line, key, cfg.env.max_steps >= 1, ">= 1")?;
            }
            ("env", "energy_coeff") => {
                cfg.env.energy_coeff = parse_f64(line, key, v)?;
                check_range(line, key, cfg.env.energy_coeff >= 0.0, ">= 0")?;
            }
            ("env", "seed") => cfg.env.seed = parse_u64(line, key, v)?,

            ("train", "gamma") => {
                cfg.train.gamma = parse_f64(line, key, v)?;
                check_range(line, key, (0.0..=1.0).contains(&cfg.train.gamma), "within [0, 1]")?;
            }
            ("train", "tau") => {
                cfg.train.tau = parse_f64(line, key, v)?;
                check_range(line, key, cfg.train.tau > 0.0 && cfg.train.tau <= 1.0, "within (0, 1]")?;
            }
            ("train", "batch") => {
                cfg.train.batch = parse_usize(line, key, v)?;
                check_range(line, key, cfg.train.batch >= 1, ">= 1")?;
            }
            ("train", "actor_lr") => cfg.train.actor_lr = parse_f64(line, key, v)?,
            ("train", "critic_lr") => cfg.train.critic_lr = parse_f64(line, key, v)?,
            ("train", "gpi_candidates") => cfg.train.gpi_candidates = parse_usize(line, key, v)?,
            ("train", "noise_sigma_start") => {
                cfg.train.noise_sigma_start = parse_f64(line, key, v)?
            }
            ("train", "noise_sigma_end") => cfg.train.noise_sigma_end = parse_f64(line, key, v)?,
            ("train", "noise_decay_steps") => {
                cfg.train.noise_decay_steps = parse_usize(line, key, v)?
            }
            ("train", "update_every") => {
                cfg.train.update_every = parse_usize(line, key, v)?;
                check_range(line, key, cfg.train.update_every >= 1, ">= 1")?;
            }
            ("train", "warmup_steps") => cfg.train.warmup_steps = parse_usize(line, key, v)?,
            ("train", "episodes") => {
                cfg.train.episodes = parse_usize(line, key, v)?;
                check_range(line, key, cfg.train.episodes >= 1, ">= 1")?;
            }
            ("train", "buffer_capacity") => {
                cfg.train.buffer_capacity = parse_usize(line, key, v)?;
                check_range(line, key, cfg.train.buffer_capacity >= 1, ">= 1")?;
            }
            ("train", "actor_hidden1") => cfg.train.dims.actor_hidden1 = parse_usize(line, key, v)?,
            ("train", "actor_hidden2") => cfg.train.dims.actor_hidden2 = parse_usize(line, key, v)?,
            ("train", "critic_hidden1") => {
                cfg.train.dims.critic_hidden1 = parse_usize(line, key, v)?
            }
            ("train", "critic_hidden2") => {
                cfg.train.dims.critic_hidden2 = parse_usize(line, key, v)?
            }
            ("train", "embed_dim") => cfg.train.dims.embed_dim = parse_usize(line, key, v)?,
            ("train", "attn_heads") => cfg.train.dims.attn_heads = parse_usize(line, key, v)?,
            ("train", "ffn_hidden") => cfg.train.dims.ffn_hidden = parse_usize(line, key, v)?,
            ("train", "qhead_hidden1") => cfg.train.dims.qhead_hidden1 = parse_usize(line, key, v)?,
            ("train", "qhead_hidden2") => cfg.train.dims.qhead_hidden2 = parse_usize(line, key, v)?,
            ("train", "embed_relu") => cfg.train.dims.embed_relu = parse_bool(line, key, v)?,

            ("preference", "case") => {
                cfg.pref_case = PrefCase::parse(v).map_err(|e| perr(line, e.to_string()))?;
                case_line = line;
            }
            ("preference", "generator_seed") => cfg.generator_seed = parse_u64(line, key, v)?,
            ("preference", "scale") => {
                cfg.generator_scale = parse_f64(line, key, v)?;
                check_range(line, key, cfg.generator_scale > 0.0, "> 0")?;
            }

            ("eval", "n_states") => {
                cfg.eval_states = parse_usize(line, key, v)?;
                check_range(line, key, cfg.eval_states >= 1, ">= 1")?;
            }
            ("eval", "grid_size") => {
                cfg.grid_size = parse_usize(line, key, v)?;
                check_range(line, key, cfg.grid_size >= 1, ">= 1")?;
            }
            ("eval", "episodes_per_point") => {
                cfg.episodes_per_point = parse_usize(line, key, v)?;
                check_range(line, key, cfg.episodes_per_point >= 1, ">= 1")?;
            }

            ("experiment", "variants") => {
                variants_line = line;
                cfg.variants = v
                    .split(',')
                    .map(|s| Variant::parse(s.trim()))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| perr(line, e.to_string()))?;
                if cfg.variants.is_empty() {
                    return Err(perr(line, "variants list must be nonempty"));
                }
            }
            ("experiment", "seeds") => {
                cfg.seeds = v
                    .split(',')
                    .map(|s| parse_u64(line, "seeds", s.trim()))
                    .collect::<Result<Vec<_>>>()?;
                if cfg.seeds.is_empty() {
                    return Err(perr(line, "seeds list must be nonempty"));
                }
            }
            ("experiment", "output_dir") => cfg.output_dir = PathBuf::from(v),

            (section, key) => {
                return Err(perr(line, format!("unknown key `{key}` in section [{section}]")))
            }
        }
    }

    // Cross-field checks, attributed to the most specific line seen.
    let pairing_line = if variants_line > 0 { variants_line } else { case_line.max(section_line) };
    for variant in &cfg.variants {
        let want_random = variant.is_global_preference();
        let have_random = cfg.pref_case == PrefCase::Random;
        if want_random != have_random {
            return Err(perr(
                pairing_line,
                format!(
                    "variant `{}` requires preference case `{}`, config has `{}`",
                    variant.as_str(),
                    if want_random { "random" } else { "observation" },
                    cfg.pref_case.as_str()
                ),
            ));
        }
    }
    cfg.env
        .validate()
        .map_err(|e| perr(env_section_line, e.to_string()))?;
    cfg.train
        .validate()
        .map_err(|e| perr(train_section_line, e.to_string()))?;
    Ok(cfg)
}

pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let d = &cfg.train.dims;
    format!(
        "[env]\n\
         kind = {}\n\
         n_agents = {}\n\
         n_landmarks = {}\n\
         n_adversaries = {}\n\
         world_size = {}\n\
         dt = {}\n\
         max_steps = {}\n\
         energy_coeff = {}\n\
         seed = {}\n\
         \n[train]\n\
         gamma = {}\n\
         tau = {}\n\
         batch = {}\n\
         actor_lr = {}\n\
         critic_lr = {}\n\
         gpi_candidates = {}\n\
         noise_sigma_start = {}\n\
         noise_sigma_end = {}\n\
         noise_decay_steps = {}\n\
         update_every = {}\n\
         warmup_steps = {}\n\
         episodes = {}\n\
         buffer_capacity = {}\n\
         actor_hidden1 = {}\n\
         actor_hidden2 = {}\n\
         critic_hidden1 = {}\n\
         critic_hidden2 = {}\n\
         embed_dim = {}\n\
         attn_heads = {}\n\
         ffn_hidden = {}\n\
         qhead_hidden1 = {}\n\
         qhead_hidden2 = {}\n\
         embed_relu = {}\n\
         \n[preference]\n\
         case = {}\n\
         generator_seed = {}\n\
         scale = {}\n\
         \n[eval]\n\
         n_states = {}\n\
         grid_size = {}\n\
         episodes_per_point = {}\n\
         \n[experiment]\n\
         variants = {}\n\
         seeds = {}\n\
         output_dir = {}\n",
        cfg.env.kind.as_str(),
        cfg.env.n_agents,
        cfg.env.n_landmarks,
        cfg.env.n_adversaries,
        cfg.env.world_size,
        cfg.env.dt,
        cfg.env.max_steps,
        cfg.env.energy_coeff,
        cfg.env.seed,
        cfg.train.gamma,
        cfg.train.tau,
        cfg.train.batch,
        cfg.train.actor_lr,
        cfg.train.critic_lr,
        cfg.train.gpi_candidates,
        cfg.train.noise_sigma_start,
        cfg.train.noise_sigma_end,
        cfg.train.noise_decay_steps,
        cfg.train.update_every,
        cfg.train.warmup_steps,
        cfg.train.episodes,
        cfg.train.buffer_capacity,
        d.actor_hidden1,
        d.actor_hidden2,
        d.critic_hidden1,
        d.critic_hidden2,
        d.embed_dim,
        d.attn_heads,
        d.ffn_hidden,
        d.qhead_hidden1,
        d.qhead_hidden2,
        d.embed_relu,
        cfg.pref_case.as_str(),
        cfg.generator_seed,
        cfg.generator_scale,
        cfg.eval_states,
        cfg.grid_size,
        cfg.episodes_per_point,
        cfg.variants.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(","),
        cfg.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
        cfg.output_dir.display(),
    )
}
