//! Mask providers standing in for a learned affordance segmenter.
//!
//! `oracle` returns the rendered ground-truth mask, `noisy` corrupts it with
//! morphology and pixel flips, and `file` reads masks written by an external
//! model (`<dir>/<scene name>.png`).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{self, BinaryMask, RasterError};
use crate::seed;
use crate::sim::{Observation, Scene};

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("mask for scene {scene:?}: {source}")]
    Mask {
        scene: String,
        #[source]
        source: RasterError,
    },
    #[error("invalid predictor spec {0:?}")]
    Spec(String),
}

pub trait MaskPredictor: Send + Sync {
    /// Mask of the scene's target part. `seed` is the per-trial seed.
    fn predict(&self, scene: &Scene, obs: &Observation, seed: u64) -> Result<BinaryMask, PredictError>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct OraclePredictor;

impl MaskPredictor for OraclePredictor {
    fn predict(&self, scene: &Scene, obs: &Observation, _seed: u64) -> Result<BinaryMask, PredictError> {
        Ok(obs.target_mask(scene))
    }
}

/// Ground truth, dilated, then eroded, then with Bernoulli pixel flips.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyOracle {
    pub dilate: usize,
    pub erode: usize,
    pub flip: f64,
    pub seed: u64,
}

impl NoisyOracle {
    pub fn corrupt(&self, gt: &BinaryMask, trial_seed: u64) -> BinaryMask {
        let mut m = gt.dilate(self.dilate).erode(self.erode);
        if self.flip > 0.0 {
            let mut rng = seed::rng(seed::mix(
                seed::mix(self.seed, trial_seed),
                seed::tag::PREDICTOR,
            ));
            for y in 0..m.height() {
                for x in 0..m.width() {
                    if rng.random_bool(self.flip) {
                        let v = m.at(x, y);
                        m.set(x, y, !v);
                    }
                }
            }
        }
        m
    }
}

impl MaskPredictor for NoisyOracle {
    fn predict(&self, scene: &Scene, obs: &Observation, seed: u64) -> Result<BinaryMask, PredictError> {
        Ok(self.corrupt(&obs.target_mask(scene), seed))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilePredictor {
    pub dir: PathBuf,
}

impl MaskPredictor for FilePredictor {
    fn predict(&self, scene: &Scene, obs: &Observation, _seed: u64) -> Result<BinaryMask, PredictError> {
        let err = |source| PredictError::Mask {
            scene: scene.name.clone(),
            source,
        };
        let mask = raster::load_mask(self.dir.join(format!("{}.png", scene.name))).map_err(err)?;
        mask.ensure_same_dims((obs.width(), obs.height())).map_err(err)?;
        Ok(mask)
    }
}

/// Textual predictor selection: `oracle`, `noisy:dilate=2,erode=0,flip=0.01,seed=3`,
/// or `file:<dir>`.
#[derive(Clone, Debug, PartialEq)]
pub enum PredictorSpec {
    Oracle,
    Noisy(NoisyOracle),
    File(PathBuf),
}

impl PredictorSpec {
    pub fn build(&self) -> Box<dyn MaskPredictor> {
        match self {
            PredictorSpec::Oracle => Box::new(OraclePredictor),
            PredictorSpec::Noisy(n) => Box::new(*n),
            PredictorSpec::File(dir) => Box::new(FilePredictor { dir: dir.clone() }),
        }
    }
}

impl FromStr for PredictorSpec {
    type Err = PredictError;

    fn from_str(s: &str) -> Result<Self, PredictError> {
        let bad = || PredictError::Spec(s.to_string());
        let (kind, params) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "oracle" if params.is_empty() => Ok(PredictorSpec::Oracle),
            "noisy" | "noisy_oracle" => {
                let mut n = NoisyOracle {
                    dilate: 0,
                    erode: 0,
                    flip: 0.0,
                    seed: 0,
                };
                for kv in params.split(',').filter(|p| !p.is_empty()) {
                    let (k, v) = kv.split_once('=').ok_or_else(bad)?;
                    match k.trim() {
                        "dilate" => n.dilate = v.trim().parse().map_err(|_| bad())?,
                        "erode" => n.erode = v.trim().parse().map_err(|_| bad())?,
                        "flip" => n.flip = v.trim().parse().map_err(|_| bad())?,
                        "seed" => n.seed = v.trim().parse().map_err(|_| bad())?,
                        _ => return Err(bad()),
                    }
                }
                if !(0.0..=1.0).contains(&n.flip) {
                    return Err(bad());
                }
                Ok(PredictorSpec::Noisy(n))
            }
            "file" => {
                let dir = PathBuf::from(params);
                if params.is_empty() || !dir.is_dir() {
                    return Err(bad());
                }
                Ok(PredictorSpec::File(dir))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for PredictorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictorSpec::Oracle => write!(f, "oracle"),
            PredictorSpec::Noisy(n) => write!(
                f,
                "noisy:dilate={},erode={},flip={},seed={}",
                n.dilate, n.erode, n.flip, n.seed
            ),
            PredictorSpec::File(dir) => write!(f, "file:{}", dir.display()),
        }
    }
}
