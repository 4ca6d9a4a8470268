//! Authoritative scene state and its request handlers, independent of any transport.

use std::collections::BTreeMap;

use simsync_core::{Pose, Twist};
use simsync_protocol::model_xml::{self, ModelXmlDocument, XmlDocument};
use simsync_protocol::{
    EntryStatus, ErrorCode, ErrorReply, GetEntry, LightState, LinkKey, LinkQuery, LinkState,
    Material, ModelState, Validate, VisualKey, VisualQuery, VisualState, WORLD_FRAME,
};

pub const DEFAULT_STEP_NS: u64 = 1_000_000;

/// Name of the light every fresh world starts with.
pub const DEFAULT_LIGHT: &str = "sun";

/// Models, links, visuals and lights plus the simulation clock.
///
/// Maps are ordered so that whole-world iteration (topic payloads, per-model link listings) is
/// deterministic.
#[derive(Debug, Clone)]
pub struct World {
    models: BTreeMap<String, ModelState>,
    links: BTreeMap<LinkKey, LinkState>,
    visuals: BTreeMap<VisualKey, VisualState>,
    lights: BTreeMap<String, LightState>,
    sim_time_ns: u64,
    step_ns: u64,
}

impl Default for World {
    fn default() -> Self {
        World::new(DEFAULT_STEP_NS)
    }
}

fn not_found(kind: &str, name: &str) -> ErrorReply {
    ErrorReply::new(ErrorCode::NotFound, format!("{kind} '{name}' does not exist"))
}

impl World {
    /// An empty world holding only the default light. Panics if `step_ns` is zero.
    pub fn new(step_ns: u64) -> Self {
        assert!(step_ns > 0, "step size must be positive");
        let mut lights = BTreeMap::new();
        lights.insert(
            DEFAULT_LIGHT.to_string(),
            LightState::new(DEFAULT_LIGHT, simsync_core::Color::new(0.8, 0.8, 0.8, 1.0)),
        );
        World {
            models: BTreeMap::new(),
            links: BTreeMap::new(),
            visuals: BTreeMap::new(),
            lights,
            sim_time_ns: 0,
            step_ns,
        }
    }

    pub fn sim_time_ns(&self) -> u64 {
        self.sim_time_ns
    }

    pub fn step_ns(&self) -> u64 {
        self.step_ns
    }

    pub fn model_count(&self) -> usize {
        self.models.len()
    }

    pub fn model(&self, name: &str) -> Option<&ModelState> {
        self.models.get(name)
    }

    pub fn models(&self) -> impl Iterator<Item = &ModelState> {
        self.models.values()
    }

    pub fn links(&self) -> impl Iterator<Item = &LinkState> {
        self.links.values()
    }

    pub fn visuals(&self) -> impl Iterator<Item = &VisualState> {
        self.visuals.values()
    }

    pub fn lights(&self) -> impl Iterator<Item = &LightState> {
        self.lights.values()
    }

    fn model_links(&self, model: &str) -> impl Iterator<Item = &LinkState> + '_ {
        let start = LinkKey::new(model, "");
        let model = model.to_string();
        self.links
            .range(start..)
            .take_while(move |(k, _)| k.model_name == model)
            .map(|(_, v)| v)
    }

    fn model_visuals(&self, model: &str) -> impl Iterator<Item = &VisualState> + '_ {
        let start = VisualKey::new(model, "", "");
        let model = model.to_string();
        self.visuals
            .range(start..)
            .take_while(move |(k, _)| k.model_name == model)
            .map(|(_, v)| v)
    }

    pub fn get_model_states<S: AsRef<str>>(&self, names: &[S]) -> Vec<GetEntry<ModelState>> {
        names
            .iter()
            .map(|n| match self.models.get(n.as_ref()) {
                Some(s) => GetEntry::found(s.clone()),
                None => GetEntry::not_found(),
            })
            .collect()
    }

    /// Resolves `state` to a world-frame pose, or the status explaining why it cannot be applied.
    fn resolve_model_write(&self, state: &ModelState) -> Result<(Pose, Twist), EntryStatus> {
        if state.validate().is_err() || !state.pose.orientation.is_normalized() {
            return Err(EntryStatus::Invalid);
        }
        if !self.models.contains_key(&state.name) {
            return Err(EntryStatus::NotFound);
        }
        if state.reference_frame == WORLD_FRAME || state.reference_frame.is_empty() {
            return Ok((state.pose, state.twist));
        }
        // A pose relative to another model's frame.
        match self.models.get(&state.reference_frame) {
            Some(frame) => Ok((frame.pose.compose(&state.pose), state.twist)),
            None => Err(EntryStatus::Invalid),
        }
    }

    /// Applies a batch; entries are resolved against the pre-batch state and applied in order,
    /// so a repeated name ends with its last entry.
    pub fn set_model_states(&mut self, states: &[ModelState]) -> Vec<EntryStatus> {
        let resolved: Vec<_> = states.iter().map(|s| self.resolve_model_write(s)).collect();
        states
            .iter()
            .zip(resolved)
            .map(|(s, r)| match r {
                Ok((pose, twist)) => {
                    let m = self.models.get_mut(&s.name).expect("resolved model exists");
                    m.pose = pose;
                    m.twist = twist;
                    EntryStatus::Ok
                }
                Err(status) => status,
            })
            .collect()
    }

    pub fn get_model_state(&self, name: &str) -> Result<ModelState, ErrorReply> {
        self.models
            .get(name)
            .cloned()
            .ok_or_else(|| not_found("model", name))
    }

    pub fn set_model_state(&mut self, state: &ModelState) -> EntryStatus {
        self.set_model_states(std::slice::from_ref(state))[0]
    }

    /// Keyed results first, in request order, then every link of each listed model.
    pub fn get_link_states(&self, query: &LinkQuery) -> Vec<GetEntry<LinkState>> {
        let mut out: Vec<_> = query
            .keys
            .iter()
            .map(|k| match self.links.get(k) {
                Some(s) => GetEntry::found(s.clone()),
                None => GetEntry::not_found(),
            })
            .collect();
        for m in &query.models {
            if self.models.contains_key(m) {
                out.extend(self.model_links(m).cloned().map(GetEntry::found));
            } else {
                out.push(GetEntry::not_found());
            }
        }
        out
    }

    pub fn set_link_states(&mut self, states: &[LinkState]) -> Vec<EntryStatus> {
        states
            .iter()
            .map(|s| {
                if s.validate().is_err() || !s.pose.orientation.is_normalized() {
                    return EntryStatus::Invalid;
                }
                match self.links.get_mut(&s.key()) {
                    Some(l) => {
                        l.pose = s.pose;
                        l.twist = s.twist;
                        EntryStatus::Ok
                    }
                    None => EntryStatus::NotFound,
                }
            })
            .collect()
    }

    /// Keyed results first, in request order, then every visual of each listed model.
    pub fn get_visual_states(&self, query: &VisualQuery) -> Vec<GetEntry<VisualState>> {
        let mut out: Vec<_> = query
            .keys
            .iter()
            .map(|k| match self.visuals.get(k) {
                Some(s) => GetEntry::found(s.clone()),
                None => GetEntry::not_found(),
            })
            .collect();
        for m in &query.models {
            if self.models.contains_key(m) {
                out.extend(self.model_visuals(m).cloned().map(GetEntry::found));
            } else {
                out.push(GetEntry::not_found());
            }
        }
        out
    }

    pub fn set_visual_states(&mut self, states: &[VisualState]) -> Vec<EntryStatus> {
        states
            .iter()
            .map(|s| {
                if s.validate().is_err() {
                    return EntryStatus::Invalid;
                }
                match self.visuals.get_mut(&s.key()) {
                    Some(v) => {
                        v.material = s.material;
                        v.transparency = s.transparency;
                        v.visible = s.visible;
                        EntryStatus::Ok
                    }
                    None => EntryStatus::NotFound,
                }
            })
            .collect()
    }

    pub fn get_light_states<S: AsRef<str>>(&self, names: &[S]) -> Vec<GetEntry<LightState>> {
        names
            .iter()
            .map(|n| match self.lights.get(n.as_ref()) {
                Some(s) => GetEntry::found(s.clone()),
                None => GetEntry::not_found(),
            })
            .collect()
    }

    pub fn set_light_states(&mut self, states: &[LightState]) -> Vec<EntryStatus> {
        states
            .iter()
            .map(|s| {
                if s.validate().is_err() {
                    return EntryStatus::Invalid;
                }
                match self.lights.get_mut(&s.name) {
                    Some(l) => {
                        *l = s.clone();
                        EntryStatus::Ok
                    }
                    None => EntryStatus::NotFound,
                }
            })
            .collect()
    }

    /// Adds a light; fails if the name is taken.
    pub fn add_light(&mut self, light: LightState) -> Result<(), ErrorReply> {
        if light.validate().is_err() {
            return Err(ErrorReply::new(ErrorCode::Invalid, "invalid light"));
        }
        if self.lights.contains_key(&light.name) {
            return Err(ErrorReply::new(
                ErrorCode::DuplicateName,
                format!("light '{}' already exists", light.name),
            ));
        }
        self.lights.insert(light.name.clone(), light);
        Ok(())
    }

    /// Parses `model_xml` and registers the model under `name`. The document's own model name
    /// is ignored so one file can be spawned many times.
    pub fn spawn(&mut self, name: &str, model_xml: &str, initial_pose: Pose) -> Result<(), ErrorReply> {
        if self.models.contains_key(name) {
            return Err(ErrorReply::new(
                ErrorCode::DuplicateName,
                format!("model '{name}' already exists"),
            ));
        }
        let doc = model_xml::parse_model_xml(model_xml)
            .map_err(|e| ErrorReply::new(ErrorCode::ParseError, e.to_string()))?;
        self.spawn_document(name, &doc, initial_pose)
    }

    pub fn spawn_document(
        &mut self,
        name: &str,
        doc: &ModelXmlDocument,
        initial_pose: Pose,
    ) -> Result<(), ErrorReply> {
        if name.is_empty() {
            return Err(ErrorReply::new(ErrorCode::Invalid, "model name must not be empty"));
        }
        if self.models.contains_key(name) {
            return Err(ErrorReply::new(
                ErrorCode::DuplicateName,
                format!("model '{name}' already exists"),
            ));
        }
        if !initial_pose.is_finite() || !initial_pose.orientation.is_normalized() {
            return Err(ErrorReply::new(
                ErrorCode::Invalid,
                "initial pose must be finite with a unit orientation",
            ));
        }
        self.models.insert(
            name.to_string(),
            ModelState::new(name, initial_pose, Twist::ZERO),
        );
        for link in &doc.links {
            let key = LinkKey::new(name, link.name.as_str());
            self.links.insert(
                key,
                LinkState {
                    model_name: name.to_string(),
                    link_name: link.name.clone(),
                    pose: initial_pose.compose(&link.pose.to_pose()),
                    twist: Twist::ZERO,
                },
            );
            for v in &link.visuals {
                let key = VisualKey::new(name, link.name.as_str(), v.name.as_str());
                self.visuals.insert(
                    key,
                    VisualState {
                        model_name: name.to_string(),
                        link_name: link.name.clone(),
                        visual_name: v.name.clone(),
                        material: v.material.unwrap_or_else(Material::default),
                        transparency: 0.0,
                        visible: true,
                    },
                );
            }
        }
        Ok(())
    }

    /// Loads a seed document: models spawn at the identity pose under their own name, lights
    /// are added.
    pub fn load_seed(&mut self, text: &str) -> Result<(), ErrorReply> {
        match model_xml::parse_document(text)
            .map_err(|e| ErrorReply::new(ErrorCode::ParseError, e.to_string()))?
        {
            XmlDocument::Model(m) => {
                let name = m.name.clone();
                self.spawn_document(&name, &m, Pose::IDENTITY)
            }
            XmlDocument::Light(l) => self.add_light(l.to_state()),
        }
    }

    /// Removes the model with all of its links and visuals.
    pub fn delete(&mut self, name: &str) -> Result<(), ErrorReply> {
        if self.models.remove(name).is_none() {
            return Err(not_found("model", name));
        }
        self.links.retain(|k, _| k.model_name != name);
        self.visuals.retain(|k, _| k.model_name != name);
        Ok(())
    }

    /// One simulation step: advance the clock and integrate every moving model and link.
    pub fn tick(&mut self) -> u64 {
        let dt = self.step_ns as f64 * 1e-9;
        for m in self.models.values_mut() {
            if !m.twist.is_zero() {
                m.pose = m.twist.integrate(&m.pose, dt);
            }
        }
        for l in self.links.values_mut() {
            if !l.twist.is_zero() {
                l.pose = l.twist.integrate(&l.pose, dt);
            }
        }
        self.sim_time_ns += self.step_ns;
        self.sim_time_ns
    }

    /// Checks that every link and visual belongs to an existing model.
    pub fn referentially_intact(&self) -> bool {
        self.links.keys().all(|k| self.models.contains_key(&k.model_name))
            && self.visuals.keys().all(|k| {
                self.links
                    .contains_key(&LinkKey::new(k.model_name.as_str(), k.link_name.as_str()))
            })
    }
}
