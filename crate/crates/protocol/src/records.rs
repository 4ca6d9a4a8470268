//! Scene-state records exchanged over the wire.

use serde::{Deserialize, Serialize};
use simsync_core::{Color, Pose, Twist};

use crate::ValidationError;

pub const WORLD_FRAME: &str = "world";

fn world_frame() -> String {
    WORLD_FRAME.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub name: String,
    pub pose: Pose,
    #[serde(default)]
    pub twist: Twist,
    #[serde(default = "world_frame")]
    pub reference_frame: String,
}

impl ModelState {
    pub fn new(name: impl Into<String>, pose: Pose, twist: Twist) -> Self {
        Self {
            name: name.into(),
            pose,
            twist,
            reference_frame: world_frame(),
        }
    }
}

/// Link pose and twist, always in the world frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub model_name: String,
    pub link_name: String,
    pub pose: Pose,
    #[serde(default)]
    pub twist: Twist,
}

impl LinkState {
    pub fn key(&self) -> LinkKey {
        LinkKey {
            model_name: self.model_name.clone(),
            link_name: self.link_name.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub ambient: Color,
    pub diffuse: Color,
    pub specular: Color,
    pub emissive: Color,
}

impl Default for Material {
    fn default() -> Self {
        Material {
            ambient: Color::new(0.7, 0.7, 0.7, 1.0),
            diffuse: Color::new(0.7, 0.7, 0.7, 1.0),
            specular: Color::new(0.01, 0.01, 0.01, 1.0),
            emissive: Color::new(0.0, 0.0, 0.0, 1.0),
        }
    }
}

impl Material {
    fn validate(&self) -> Result<(), ValidationError> {
        for (field, c) in [
            ("ambient", self.ambient),
            ("diffuse", self.diffuse),
            ("specular", self.specular),
            ("emissive", self.emissive),
        ] {
            if !c.is_valid() {
                return Err(ValidationError::OutOfRange(field));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualState {
    pub model_name: String,
    pub link_name: String,
    pub visual_name: String,
    pub material: Material,
    pub transparency: f64,
    pub visible: bool,
}

impl VisualState {
    pub fn key(&self) -> VisualKey {
        VisualKey {
            model_name: self.model_name.clone(),
            link_name: self.link_name.clone(),
            visual_name: self.visual_name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightState {
    pub name: String,
    /// Diffuse color.
    pub color: Color,
    pub attenuation_constant: f64,
    pub attenuation_linear: f64,
    pub attenuation_quadratic: f64,
}

impl LightState {
    pub fn new(name: impl Into<String>, color: Color) -> Self {
        Self {
            name: name.into(),
            color,
            attenuation_constant: 1.0,
            attenuation_linear: 0.0,
            attenuation_quadratic: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkKey {
    pub model_name: String,
    pub link_name: String,
}

impl LinkKey {
    pub fn new(model: impl Into<String>, link: impl Into<String>) -> Self {
        Self {
            model_name: model.into(),
            link_name: link.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VisualKey {
    pub model_name: String,
    pub link_name: String,
    pub visual_name: String,
}

impl VisualKey {
    pub fn new(model: impl Into<String>, link: impl Into<String>, visual: impl Into<String>) -> Self {
        Self {
            model_name: model.into(),
            link_name: link.into(),
            visual_name: visual.into(),
        }
    }
}

/// Per-entry outcome of a batched operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntryStatus {
    Ok,
    NotFound,
    Invalid,
}

impl EntryStatus {
    pub fn is_ok(self) -> bool {
        self == EntryStatus::Ok
    }
}

/// One result of a batched get: the state, or a not-found marker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GetEntry<T> {
    pub status: EntryStatus,
    #[serde(default = "Option::default", skip_serializing_if = "Option::is_none")]
    pub state: Option<T>,
}

impl<T> GetEntry<T> {
    pub fn found(state: T) -> Self {
        Self {
            status: EntryStatus::Ok,
            state: Some(state),
        }
    }

    pub fn not_found() -> Self {
        Self {
            status: EntryStatus::NotFound,
            state: None,
        }
    }

    pub fn into_option(self) -> Option<T> {
        match self.status {
            EntryStatus::Ok => self.state,
            _ => None,
        }
    }
}

/// Wire-level invariants. Orientation normalization is deliberately not checked here: the
/// server reports non-normalized orientations as a per-entry `INVALID` status.
pub trait Validate {
    fn validate(&self) -> Result<(), ValidationError>;
}

fn nonempty(field: &'static str, s: &str) -> Result<(), ValidationError> {
    if s.is_empty() {
        Err(ValidationError::EmptyName(field))
    } else {
        Ok(())
    }
}

fn finite(field: &'static str, ok: bool) -> Result<(), ValidationError> {
    if ok {
        Ok(())
    } else {
        Err(ValidationError::NonFinite(field))
    }
}

impl Validate for Pose {
    fn validate(&self) -> Result<(), ValidationError> {
        finite("pose.position", self.position.is_finite())?;
        finite("pose.orientation", self.orientation.is_finite())
    }
}

impl Validate for Twist {
    fn validate(&self) -> Result<(), ValidationError> {
        finite("twist", self.is_finite())
    }
}

impl Validate for ModelState {
    fn validate(&self) -> Result<(), ValidationError> {
        nonempty("name", &self.name)?;
        nonempty("reference_frame", &self.reference_frame)?;
        self.pose.validate()?;
        self.twist.validate()
    }
}

impl Validate for LinkState {
    fn validate(&self) -> Result<(), ValidationError> {
        nonempty("model_name", &self.model_name)?;
        nonempty("link_name", &self.link_name)?;
        self.pose.validate()?;
        self.twist.validate()
    }
}

impl Validate for VisualState {
    fn validate(&self) -> Result<(), ValidationError> {
        nonempty("model_name", &self.model_name)?;
        nonempty("link_name", &self.link_name)?;
        nonempty("visual_name", &self.visual_name)?;
        self.material.validate()?;
        if !(0.0..=1.0).contains(&self.transparency) {
            return Err(ValidationError::OutOfRange("transparency"));
        }
        Ok(())
    }
}

impl Validate for LightState {
    fn validate(&self) -> Result<(), ValidationError> {
        nonempty("name", &self.name)?;
        if !self.color.is_valid() {
            return Err(ValidationError::OutOfRange("color"));
        }
        for (field, v) in [
            ("attenuation_constant", self.attenuation_constant),
            ("attenuation_linear", self.attenuation_linear),
            ("attenuation_quadratic", self.attenuation_quadratic),
        ] {
            finite(field, v.is_finite())?;
            if v < 0.0 {
                return Err(ValidationError::OutOfRange(field));
            }
        }
        Ok(())
    }
}

impl Validate for LinkKey {
    fn validate(&self) -> Result<(), ValidationError> {
        nonempty("model_name", &self.model_name)?;
        nonempty("link_name", &self.link_name)
    }
}

impl Validate for VisualKey {
    fn validate(&self) -> Result<(), ValidationError> {
        nonempty("model_name", &self.model_name)?;
        nonempty("link_name", &self.link_name)?;
        nonempty("visual_name", &self.visual_name)
    }
}

impl<T: Validate> Validate for [T] {
    fn validate(&self) -> Result<(), ValidationError> {
        self.iter().try_for_each(Validate::validate)
    }
}

impl<T: Validate> Validate for GetEntry<T> {
    fn validate(&self) -> Result<(), ValidationError> {
        match &self.state {
            Some(s) => s.validate(),
            None => Ok(()),
        }
    }
}
