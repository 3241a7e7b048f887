//! Batch campaigns: a JSON config of check jobs, run in parallel with results
//! in job order.

use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::ltcheck::{check_lt_1d, check_theorem2_separable, LtReport};
use crate::potentials::{random_psd_potential, PotentialSpec};
use crate::report::OutputFormat;

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "LTLAB_WORKERS";
pub const DEFAULT_HALF_WIDTH: f64 = 20.0;
pub const DEFAULT_SPACING: f64 = 0.01;

/// Seed for item `index` of stream `stream`, derived from `seed` so that
/// parallel scheduling cannot change it.
pub fn split_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(2 * index as u128);
    rng.next_u64()
}

/// A batch of seeded random matrix potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomPotentials {
    #[serde(rename = "M")]
    pub channels: usize,
    #[serde(default = "default_bumps")]
    pub bumps: usize,
    pub count: usize,
}

fn default_bumps() -> usize {
    3
}

fn default_gammas() -> Vec<f64> {
    vec![1.0]
}

fn default_d() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignJob {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<PotentialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_file: Option<PathBuf>,
    /// Second factor for `d = 2` separable checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec2: Option<PotentialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec2_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomPotentials>,
    #[serde(default = "default_gammas")]
    pub gamma: Vec<f64>,
    #[serde(default = "default_d")]
    pub d: u32,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub jobs: Vec<CampaignJob>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; `None` uses all cores.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn load_spec(path: &Path) -> Result<PotentialSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read spec file {}: {e}", path.display())))?;
    PotentialSpec::from_json_str(&text)
}

impl CampaignConfig {
    /// Parses a config file; relative spec paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for job in &mut cfg.jobs {
            for file in [&mut job.spec_file, &mut job.spec2_file].into_iter().flatten() {
                if file.is_relative() {
                    *file = base.join(&*file);
                }
            }
        }
        cfg.resolve()?;
        Ok(cfg)
    }

    /// Inlines spec files and checks every job.
    pub fn resolve(&mut self) -> Result<()> {
        for (i, job) in self.jobs.iter_mut().enumerate() {
            if let Some(path) = job.spec_file.take() {
                job.spec = Some(load_spec(&path)?);
            }
            if let Some(path) = job.spec2_file.take() {
                job.spec2 = Some(load_spec(&path)?);
            }
            let sources = job.spec.is_some() as u8 + job.random.is_some() as u8;
            if sources != 1 {
                return invalid(format!("job {i}: give exactly one of spec, spec_file, random"));
            }
            if job.gamma.is_empty() || job.gamma.iter().any(|g| !(*g >= 1.0)) {
                return invalid(format!("job {i}: gamma values must be >= 1"));
            }
            match job.d {
                1 if job.spec2.is_some() => return invalid(format!("job {i}: spec2 only applies to d = 2")),
                1 => {}
                2 if job.spec2.is_none() || job.random.is_some() => {
                    return invalid(format!("job {i}: d = 2 needs spec and spec2"))
                }
                2 => {}
                d => return invalid(format!("job {i}: unsupported dimension {d}")),
            }
            if let Some(spec) = &job.spec {
                spec.validate()?;
            }
            job.grid()?;
        }
        Ok(())
    }
}

impl Default for CampaignJob {
    fn default() -> Self {
        Self {
            spec: None,
            spec_file: None,
            spec2: None,
            spec2_file: None,
            random: None,
            gamma: default_gammas(),
            d: default_d(),
            half_width: None,
            h: None,
        }
    }
}

impl CampaignJob {
    pub fn grid(&self) -> Result<Grid> {
        Grid::with_spacing(self.half_width.unwrap_or(DEFAULT_HALF_WIDTH), self.h.unwrap_or(DEFAULT_SPACING))
    }

    fn specs(&self, seed: u64, job_index: usize) -> Result<Vec<PotentialSpec>> {
        match (&self.spec, &self.random) {
            (Some(s), _) => Ok(vec![s.clone()]),
            (None, Some(r)) => (0..r.count as u64)
                .map(|k| random_psd_potential(r.channels, r.bumps, split_seed(seed, job_index as u64, k)))
                .collect(),
            (None, None) => invalid(format!("job {job_index} has no potential")),
        }
    }
}

/// Worker count: `LTLAB_WORKERS`, then the config value, then all cores.
pub fn worker_count(configured: Option<usize>) -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
        .or(configured.filter(|&n| n > 0))
        .unwrap_or_else(rayon::current_num_threads)
}

/// Runs `f` over `items` on a pool of `workers` threads, keeping input order.
pub fn par_map<T: Sync, R: Send>(workers: usize, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Result<Vec<R>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

struct Task {
    spec: PotentialSpec,
    spec2: Option<PotentialSpec>,
    gamma: f64,
    grid: Grid,
}

/// Runs every job; reports are ordered by job, then potential, then gamma.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<Vec<LtReport>> {
    let mut cfg = cfg.clone();
    cfg.resolve()?;
    let mut tasks = Vec::new();
    for (i, job) in cfg.jobs.iter().enumerate() {
        let grid = job.grid()?;
        for spec in job.specs(cfg.seed, i)? {
            for &gamma in &job.gamma {
                tasks.push(Task { spec: spec.clone(), spec2: job.spec2.clone(), gamma, grid });
            }
        }
    }
    par_map(worker_count(cfg.workers), &tasks, |t| match &t.spec2 {
        None => check_lt_1d(&t.spec, &t.grid, t.gamma),
        Some(s2) => check_theorem2_separable(&t.spec, s2, t.gamma, &t.grid),
    })?
    .into_iter()
    .collect()
}
