//! Domain randomizers for visual colors and light parameters.
//!
//! Configs are JSON documents tagged by `"kind"`:
//!
//! ```json
//! {"kind":"model_visual","level":"LINK","color_min":{"r":0.0,"g":0.0,"b":0.0,"a":1.0},
//!  "color_max":{"r":1.0,"g":1.0,"b":1.0,"a":1.0},"num_selection":2,"model_names":["box0"]}
//! {"kind":"light","light_names":["sun"],"color_min":{..},"color_max":{..},
//!  "attenuation_constant":{"min":0.5,"max":1.0},"attenuation_linear":{"min":0.0,"max":0.1},
//!  "attenuation_quadratic":{"min":0.0,"max":0.01}}
//! ```
//!
//! Each RGB channel is sampled independently and uniformly from its closed range. Alpha is
//! sampled only when `color_min.a < color_max.a`; otherwise the current alpha is kept.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use simsync_core::Color;
use simsync_protocol::{EntryStatus, LightState, VisualKey, VisualState};

use crate::cache::SceneCache;
use crate::FrameworkError;

/// Seeded deterministic generator.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Uniform in the closed range `[lo, hi]`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if lo == hi {
            lo
        } else {
            self.rng.gen_range(lo..=hi)
        }
    }

    /// `amount` distinct indices below `len` (clamped to `len`).
    pub fn choose_indices(&mut self, len: usize, amount: usize) -> Vec<usize> {
        index::sample(&mut self.rng, len, amount.min(len)).into_vec()
    }
}

/// Closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueRange {
    pub min: f64,
    pub max: f64,
}

impl ValueRange {
    pub fn new(min: f64, max: f64) -> Self {
        ValueRange { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }

    fn validate(&self, what: &str) -> Result<(), FrameworkError> {
        if !(self.min.is_finite() && self.max.is_finite() && 0.0 <= self.min && self.min <= self.max) {
            return Err(FrameworkError::Config(format!(
                "{what} range must satisfy 0 <= min <= max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

fn validate_colors(min: &Color, max: &Color) -> Result<(), FrameworkError> {
    if !min.is_valid() || !max.is_valid() {
        return Err(FrameworkError::Config("color channels must lie in [0, 1]".into()));
    }
    for (lo, hi) in min.channels().into_iter().zip(max.channels()) {
        if lo > hi {
            return Err(FrameworkError::Config("color_min exceeds color_max".into()));
        }
    }
    Ok(())
}

fn sample_color(rng: &mut RandomSource, min: &Color, max: &Color) -> (f64, f64, f64, Option<f64>) {
    let r = rng.uniform(min.r, max.r);
    let g = rng.uniform(min.g, max.g);
    let b = rng.uniform(min.b, max.b);
    let a = (min.a < max.a).then(|| rng.uniform(min.a, max.a));
    (r, g, b, a)
}

fn with_sample(existing: Color, sample: (f64, f64, f64, Option<f64>)) -> Color {
    let (r, g, b, a) = sample;
    Color { r, g, b, a: a.unwrap_or(existing.a) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RandomizerLevel {
    /// All visuals of a selected model share one color.
    Model,
    /// All visuals of a selected link share one color.
    Link,
    Visual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelVisualRandomizerConfig {
    pub level: RandomizerLevel,
    pub color_min: Color,
    pub color_max: Color,
    pub num_selection: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visual_names: Option<Vec<String>>,
}

impl ModelVisualRandomizerConfig {
    pub fn validate(&self) -> Result<(), FrameworkError> {
        validate_colors(&self.color_min, &self.color_max)?;
        if self.num_selection == 0 {
            return Err(FrameworkError::Config("num_selection must be at least 1".into()));
        }
        Ok(())
    }

    fn admits(&self, k: &VisualKey) -> bool {
        fn ok(filter: &Option<Vec<String>>, name: &str) -> bool {
            filter.as_ref().map_or(true, |f| f.iter().any(|n| n == name))
        }
        ok(&self.model_names, &k.model_name)
            && ok(&self.link_names, &k.link_name)
            && ok(&self.visual_names, &k.visual_name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightRandomizerConfig {
    pub light_names: Vec<String>,
    pub color_min: Color,
    pub color_max: Color,
    pub attenuation_constant: ValueRange,
    pub attenuation_linear: ValueRange,
    pub attenuation_quadratic: ValueRange,
}

impl LightRandomizerConfig {
    pub fn validate(&self) -> Result<(), FrameworkError> {
        validate_colors(&self.color_min, &self.color_max)?;
        self.attenuation_constant.validate("attenuation_constant")?;
        self.attenuation_linear.validate("attenuation_linear")?;
        self.attenuation_quadratic.validate("attenuation_quadratic")?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RandomizerConfig {
    ModelVisual(ModelVisualRandomizerConfig),
    Light(LightRandomizerConfig),
}

impl RandomizerConfig {
    pub fn from_json(text: &str) -> Result<Self, FrameworkError> {
        let cfg: RandomizerConfig =
            serde_json::from_str(text).map_err(|e| FrameworkError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FrameworkError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| FrameworkError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), FrameworkError> {
        match self {
            RandomizerConfig::ModelVisual(c) => c.validate(),
            RandomizerConfig::Light(c) => c.validate(),
        }
    }

    pub fn into_randomizer(self) -> Box<dyn Randomizer> {
        match self {
            RandomizerConfig::ModelVisual(c) => Box::new(ModelVisualRandomizer { config: c }),
            RandomizerConfig::Light(c) => Box::new(LightRandomizer { config: c }),
        }
    }
}

/// State writes produced by one randomization step, in write order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RandomizerWrites {
    pub visuals: Vec<VisualState>,
    pub lights: Vec<LightState>,
    /// Set when nothing could be randomized.
    #[serde(skip)]
    pub diagnostic: Option<String>,
}

/// A randomization step over the framework's cached scene state.
pub trait Randomizer: Send {
    /// Lights that must be tracked before [`randomize`](Self::randomize) runs.
    fn required_lights(&self) -> Vec<String> {
        Vec::new()
    }

    fn randomize(&mut self, cache: &SceneCache, rng: &mut RandomSource) -> Result<RandomizerWrites, FrameworkError>;
}

#[derive(Debug, Clone)]
pub struct ModelVisualRandomizer {
    config: ModelVisualRandomizerConfig,
}

impl ModelVisualRandomizer {
    pub fn new(config: ModelVisualRandomizerConfig) -> Result<Self, FrameworkError> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &ModelVisualRandomizerConfig {
        &self.config
    }

    /// Filtered units at the configured level, sorted, each with its visuals.
    pub fn units(&self, cache: &SceneCache) -> Vec<Vec<VisualKey>> {
        let mut groups: BTreeMap<(String, String, String), Vec<VisualKey>> = BTreeMap::new();
        for k in cache.visual_keys().into_iter().filter(|k| self.config.admits(k)) {
            let unit = match self.config.level {
                RandomizerLevel::Model => (k.model_name.clone(), String::new(), String::new()),
                RandomizerLevel::Link => (k.model_name.clone(), k.link_name.clone(), String::new()),
                RandomizerLevel::Visual => (k.model_name.clone(), k.link_name.clone(), k.visual_name.clone()),
            };
            groups.entry(unit).or_default().push(k);
        }
        groups.into_values().collect()
    }
}

impl Randomizer for ModelVisualRandomizer {
    fn randomize(&mut self, cache: &SceneCache, rng: &mut RandomSource) -> Result<RandomizerWrites, FrameworkError> {
        let units = self.units(cache);
        let mut out = RandomizerWrites::default();
        if units.is_empty() {
            let msg = "model visual randomizer: no visuals match the filters".to_string();
            log::warn!("{msg}");
            out.diagnostic = Some(msg);
            return Ok(out);
        }
        let cfg = &self.config;
        for i in rng.choose_indices(units.len(), cfg.num_selection) {
            let sample = sample_color(rng, &cfg.color_min, &cfg.color_max);
            for key in &units[i] {
                let Some(mut state) = cache.visual(key) else { continue };
                state.material.diffuse = with_sample(state.material.diffuse, sample);
                state.material.ambient = with_sample(state.material.ambient, sample);
                out.visuals.push(state);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct LightRandomizer {
    config: LightRandomizerConfig,
}

impl LightRandomizer {
    pub fn new(config: LightRandomizerConfig) -> Result<Self, FrameworkError> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &LightRandomizerConfig {
        &self.config
    }
}

impl Randomizer for LightRandomizer {
    fn required_lights(&self) -> Vec<String> {
        self.config.light_names.clone()
    }

    fn randomize(&mut self, cache: &SceneCache, rng: &mut RandomSource) -> Result<RandomizerWrites, FrameworkError> {
        let cfg = &self.config;
        let mut out = RandomizerWrites::default();
        for name in &cfg.light_names {
            let mut state = cache.light(name).ok_or_else(|| FrameworkError::Rejected {
                name: name.clone(),
                status: EntryStatus::NotFound,
            })?;
            state.color = with_sample(state.color, sample_color(rng, &cfg.color_min, &cfg.color_max));
            state.attenuation_constant = rng.uniform(cfg.attenuation_constant.min, cfg.attenuation_constant.max);
            state.attenuation_linear = rng.uniform(cfg.attenuation_linear.min, cfg.attenuation_linear.max);
            state.attenuation_quadratic = rng.uniform(cfg.attenuation_quadratic.min, cfg.attenuation_quadratic.max);
            out.lights.push(state);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_degenerate_range_is_exact() {
        let mut r = RandomSource::new(1);
        assert_eq!(r.uniform(0.5, 0.5), 0.5);
    }

    #[test]
    fn choose_indices_clamps() {
        let mut r = RandomSource::new(3);
        let mut idx = r.choose_indices(4, 10);
        idx.sort_unstable();
        assert_eq!(idx, [0, 1, 2, 3]);
    }

    #[test]
    fn config_validation() {
        let mut c = ModelVisualRandomizerConfig {
            level: RandomizerLevel::Visual,
            color_min: Color::BLACK,
            color_max: Color::WHITE,
            num_selection: 1,
            model_names: None,
            link_names: None,
            visual_names: None,
        };
        assert!(c.validate().is_ok());
        c.num_selection = 0;
        assert!(c.validate().is_err());
        c.num_selection = 1;
        c.color_min = Color::WHITE;
        c.color_max = Color::BLACK;
        assert!(c.validate().is_err());
        assert!(ValueRange::new(-0.1, 1.0).validate("x").is_err());
        assert!(ValueRange::new(1.0, 0.5).validate("x").is_err());
    }

    #[test]
    fn config_json_tagging() {
        let text = r#"{"kind":"light","light_names":["sun"],
            "color_min":{"r":0.0,"g":0.0,"b":0.0,"a":1.0},"color_max":{"r":1.0,"g":1.0,"b":1.0,"a":1.0},
            "attenuation_constant":{"min":0.5,"max":0.5},"attenuation_linear":{"min":0.0,"max":1.0},
            "attenuation_quadratic":{"min":0.0,"max":0.0}}"#;
        assert!(matches!(RandomizerConfig::from_json(text).unwrap(), RandomizerConfig::Light(_)));
        assert!(RandomizerConfig::from_json(r#"{"kind":"texture"}"#).is_err());
    }
}
