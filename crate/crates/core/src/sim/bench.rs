//! Benchmark suites and per-category success-rate reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::policy::{self, Failure, PolicyConfig, PolicyKind};
use super::scene::{Scene, SceneError};
use crate::predictor::MaskPredictor;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("suite has no scenes")]
    EmptySuite,
    #[error("no policies requested")]
    NoPolicies,
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("cannot read suite directory {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scene {path}: {source}")]
    Scene {
        path: PathBuf,
        #[source]
        source: SceneError,
    },
}

/// Scenes grouped by category. Categories may be empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Suite {
    pub categories: BTreeMap<String, Vec<Scene>>,
}

impl Suite {
    pub fn scene_count(&self) -> usize {
        self.categories.values().map(Vec::len).sum()
    }

    /// Subdirectories are categories and hold `*.json` scenes. JSON files at
    /// the top level form a category named after the directory itself.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Suite, BenchError> {
        let dir = dir.as_ref();
        let mut suite = Suite::default();
        let top = json_files(dir)?;
        if !top.is_empty() {
            let name = dir
                .file_name()
                .map_or_else(|| "default".to_string(), |n| n.to_string_lossy().into_owned());
            suite.categories.insert(name, load_scenes(&top)?);
        }
        let mut subdirs = Vec::new();
        for entry in read_dir(dir)? {
            let path = entry.path();
            if path.is_dir() {
                subdirs.push(path);
            }
        }
        subdirs.sort();
        for sub in subdirs {
            let name = sub.file_name().expect("directory entries have names").to_string_lossy().into_owned();
            let scenes = load_scenes(&json_files(&sub)?)?;
            suite.categories.insert(name, scenes);
        }
        Ok(suite)
    }
}

fn read_dir(dir: &Path) -> Result<Vec<fs::DirEntry>, BenchError> {
    let io = |source| BenchError::Io {
        path: dir.to_path_buf(),
        source,
    };
    fs::read_dir(dir).map_err(io)?.collect::<Result<Vec<_>, _>>().map_err(io)
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    let mut files: Vec<PathBuf> = read_dir(dir)?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn load_scenes(files: &[PathBuf]) -> Result<Vec<Scene>, BenchError> {
    files
        .iter()
        .map(|path| {
            Scene::load(path).map_err(|source| BenchError::Scene {
                path: path.clone(),
                source,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub policies: Vec<PolicyKind>,
    /// Trials per scene.
    pub trials: usize,
    pub seed: u64,
    pub policy: PolicyConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            policies: vec![PolicyKind::OneStep, PolicyKind::RandomPoint],
            trials: 1,
            seed: 0,
            policy: PolicyConfig::default(),
        }
    }
}

/// Seed of trial `trial` in a suite run with `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add(trial as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryRate {
    pub category: String,
    pub successes: usize,
    pub trials: usize,
    /// `None` for categories without scenes.
    pub rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyRates {
    pub policy: PolicyKind,
    pub categories: Vec<CategoryRate>,
    /// Mean of the per-category rates over non-empty categories.
    pub average: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub policy: PolicyKind,
    pub category: String,
    pub scene: String,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub gated_out: bool,
    pub total_dq: f64,
    pub failure: Option<Failure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub trials: usize,
    pub predictor: String,
    pub policies: Vec<PolicyRates>,
    /// Categories without any scene; reported and left out of averages.
    pub empty_categories: Vec<String>,
    pub outcomes: Vec<TrialOutcome>,
}

impl BenchmarkReport {
    pub fn rates(&self, policy: PolicyKind) -> Option<&PolicyRates> {
        self.policies.iter().find(|p| p.policy == policy)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// Policy rows, one column per category, then AVG.
    pub fn to_table(&self) -> String {
        let Some(first) = self.policies.first() else {
            return String::new();
        };
        let cats: Vec<&str> = first.categories.iter().map(|c| c.category.as_str()).collect();
        let width = cats.iter().map(|c| c.len()).max().unwrap_or(0).max(5);
        let mut out = format!("{:<10}", "Policy");
        for c in cats.iter().copied().chain(["AVG"]) {
            let _ = write!(out, " {c:>width$}");
        }
        out.push('\n');
        let fmt = |r: Option<f64>| r.map_or_else(|| "-".to_string(), |r| format!("{r:.2}"));
        for p in &self.policies {
            let _ = write!(out, "{:<10}", p.policy.as_str());
            for c in &p.categories {
                let _ = write!(out, " {:>width$}", fmt(c.rate));
            }
            let _ = writeln!(out, " {:>width$}", fmt(p.average));
        }
        out
    }
}

/// Run every policy on every scene for `cfg.trials` seeded trials.
///
/// Trials run in parallel; the report depends only on the inputs.
pub fn run_benchmark(
    suite: &Suite,
    predictor: &dyn MaskPredictor,
    predictor_name: &str,
    cfg: &BenchConfig,
) -> Result<BenchmarkReport, BenchError> {
    if suite.scene_count() == 0 {
        return Err(BenchError::EmptySuite);
    }
    if cfg.policies.is_empty() {
        return Err(BenchError::NoPolicies);
    }
    if cfg.trials == 0 {
        return Err(BenchError::NoTrials);
    }

    let mut jobs = Vec::new();
    for &policy in &cfg.policies {
        for (category, scenes) in &suite.categories {
            for scene in scenes {
                for trial in 0..cfg.trials {
                    jobs.push((policy, category.as_str(), scene, trial));
                }
            }
        }
    }

    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(policy, category, scene, trial)| {
            let seed = trial_seed(cfg.seed, trial);
            let trace = policy::run_policy(policy, scene, predictor, &cfg.policy.with_seed(seed));
            TrialOutcome {
                policy,
                category: category.to_string(),
                scene: scene.name.clone(),
                trial,
                seed,
                success: trace.success,
                gated_out: trace.gated_out,
                total_dq: trace.total_dq,
                failure: trace.failure,
            }
        })
        .collect();

    let policies = cfg
        .policies
        .iter()
        .map(|&policy| {
            let categories: Vec<CategoryRate> = suite
                .categories
                .keys()
                .map(|category| {
                    let mine = outcomes.iter().filter(|o| o.policy == policy && &o.category == category);
                    let (trials, successes) = mine.fold((0, 0), |(t, s), o| (t + 1, s + o.success as usize));
                    CategoryRate {
                        category: category.clone(),
                        successes,
                        trials,
                        rate: (trials > 0).then(|| successes as f64 / trials as f64),
                    }
                })
                .collect();
            let rated: Vec<f64> = categories.iter().filter_map(|c| c.rate).collect();
            let average = (!rated.is_empty()).then(|| rated.iter().sum::<f64>() / rated.len() as f64);
            PolicyRates {
                policy,
                categories,
                average,
            }
        })
        .collect();

    Ok(BenchmarkReport {
        seed: cfg.seed,
        trials: cfg.trials,
        predictor: predictor_name.to_string(),
        policies,
        empty_categories: suite
            .categories
            .iter()
            .filter(|(_, s)| s.is_empty())
            .map(|(c, _)| c.clone())
            .collect(),
        outcomes,
    })
}
