use rand::Rng;
use serde::{Deserialize, Serialize};
use simsync_framework::RandomSource;

use crate::EnvError;

/// An action submitted for one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Action {
    Discrete(u64),
    Continuous(Vec<f64>),
}

pub type Observation = Vec<f64>;

/// Set of valid observations or actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Space {
    /// `{0, 1, ..., n - 1}`.
    Discrete { n: u64 },
    /// Row-major array with elementwise closed bounds.
    Box {
        low: Vec<f64>,
        high: Vec<f64>,
        shape: Vec<usize>,
    },
}

impl Space {
    pub fn discrete(n: u64) -> Result<Space, EnvError> {
        if n == 0 {
            return Err(EnvError::Space("a discrete space needs n >= 1".into()));
        }
        Ok(Space::Discrete { n })
    }

    pub fn boxed(low: Vec<f64>, high: Vec<f64>, shape: Vec<usize>) -> Result<Space, EnvError> {
        let len: usize = shape.iter().product();
        if low.len() != len || high.len() != len {
            return Err(EnvError::Space(format!(
                "bounds have {} and {} elements but shape {:?} holds {len}",
                low.len(),
                high.len(),
                shape
            )));
        }
        for (i, (lo, hi)) in low.iter().zip(&high).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(EnvError::Space(format!("bad bounds at {i}: [{lo}, {hi}]")));
            }
        }
        Ok(Space::Box { low, high, shape })
    }

    /// Same bounds for every element.
    pub fn uniform_box(low: f64, high: f64, shape: Vec<usize>) -> Result<Space, EnvError> {
        let len = shape.iter().product();
        Space::boxed(vec![low; len], vec![high; len], shape)
    }

    pub fn contains(&self, action: &Action) -> bool {
        match (self, action) {
            (Space::Discrete { n }, Action::Discrete(k)) => k < n,
            (Space::Box { low, high, .. }, Action::Continuous(v)) => {
                v.len() == low.len() && v.iter().zip(low.iter().zip(high)).all(|(x, (lo, hi))| lo <= x && x <= hi)
            }
            _ => false,
        }
    }

    pub fn contains_observation(&self, obs: &[f64]) -> bool {
        match self {
            Space::Box { low, high, .. } => {
                obs.len() == low.len() && obs.iter().zip(low.iter().zip(high)).all(|(x, (lo, hi))| lo <= x && x <= hi)
            }
            Space::Discrete { n } => obs.len() == 1 && obs[0] >= 0.0 && obs[0] < *n as f64 && obs[0].fract() == 0.0,
        }
    }

    pub fn sample(&self, rng: &mut RandomSource) -> Action {
        match self {
            Space::Discrete { n } => Action::Discrete(rng.rng().gen_range(0..*n)),
            Space::Box { low, high, .. } => {
                Action::Continuous(low.iter().zip(high).map(|(lo, hi)| rng.uniform(*lo, *hi)).collect())
            }
        }
    }

    /// The action substituted for agents that submit none: 0, or zeros clamped into the box.
    pub fn noop(&self) -> Action {
        match self {
            Space::Discrete { .. } => Action::Discrete(0),
            Space::Box { low, high, .. } => {
                Action::Continuous(low.iter().zip(high).map(|(lo, hi)| 0.0f64.clamp(*lo, *hi)).collect())
            }
        }
    }
}
