//! Cached link, visual and light states with the same dirty/merge rules as transforms.

use std::collections::BTreeMap;

use parking_lot::Mutex;
use simsync_protocol::{
    Client, ClientError, EntryStatus, LightState, LinkKey, LinkQuery, LinkState, VisualKey,
    VisualQuery, VisualState,
};

#[derive(Debug, Clone)]
struct Entry<T> {
    value: T,
    dirty: bool,
    generation: u64,
}

#[derive(Debug)]
struct Table<K, T> {
    entries: BTreeMap<K, Entry<T>>,
}

impl<K: Ord + Clone, T: Clone + PartialEq> Table<K, T> {
    fn new() -> Self {
        Table {
            entries: BTreeMap::new(),
        }
    }

    fn track(&mut self, key: K, value: T) {
        self.entries.insert(
            key,
            Entry {
                value,
                dirty: false,
                generation: 0,
            },
        );
    }

    fn get(&self, key: &K) -> Option<T> {
        self.entries.get(key).map(|e| e.value.clone())
    }

    /// Returns false if the key is not tracked. Identical values do not mark the entry dirty.
    fn write(&mut self, key: &K, value: T) -> bool {
        match self.entries.get_mut(key) {
            Some(e) => {
                if e.value != value {
                    e.value = value;
                    e.dirty = true;
                    e.generation += 1;
                }
                true
            }
            None => false,
        }
    }

    fn merge(&mut self, key: &K, value: T) {
        if let Some(e) = self.entries.get_mut(key) {
            if !e.dirty {
                e.value = value;
            }
        }
    }

    fn dirty(&self) -> Vec<(K, T, u64)> {
        self.entries
            .iter()
            .filter(|(_, e)| e.dirty)
            .map(|(k, e)| (k.clone(), e.value.clone(), e.generation))
            .collect()
    }

    fn clear_if(&mut self, key: &K, generation: u64) {
        if let Some(e) = self.entries.get_mut(key) {
            if e.generation == generation {
                e.dirty = false;
            }
        }
    }

    fn keys(&self) -> Vec<K> {
        self.entries.keys().cloned().collect()
    }
}

/// A non-OK per-entry status from a flush.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlushRejection {
    pub kind: &'static str,
    pub name: String,
    pub status: EntryStatus,
}

/// Framework-tracked links, visuals and lights.
#[derive(Debug)]
pub struct SceneCache {
    links: Mutex<Table<LinkKey, LinkState>>,
    visuals: Mutex<Table<VisualKey, VisualState>>,
    lights: Mutex<Table<String, LightState>>,
}

impl Default for SceneCache {
    fn default() -> Self {
        SceneCache {
            links: Mutex::new(Table::new()),
            visuals: Mutex::new(Table::new()),
            lights: Mutex::new(Table::new()),
        }
    }
}

impl SceneCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn track_link(&self, state: LinkState) {
        self.links.lock().track(state.key(), state);
    }

    pub fn track_visual(&self, state: VisualState) {
        self.visuals.lock().track(state.key(), state);
    }

    pub fn track_light(&self, state: LightState) {
        self.lights.lock().track(state.name.clone(), state);
    }

    /// Forgets every link and visual of a model.
    pub fn untrack_model(&self, model: &str) {
        self.links.lock().entries.retain(|k, _| k.model_name != model);
        self.visuals.lock().entries.retain(|k, _| k.model_name != model);
    }

    pub fn link(&self, key: &LinkKey) -> Option<LinkState> {
        self.links.lock().get(key)
    }

    pub fn visual(&self, key: &VisualKey) -> Option<VisualState> {
        self.visuals.lock().get(key)
    }

    pub fn light(&self, name: &str) -> Option<LightState> {
        self.lights.lock().get(&name.to_string())
    }

    pub fn link_keys(&self) -> Vec<LinkKey> {
        self.links.lock().keys()
    }

    /// Tracked visual keys in sorted order.
    pub fn visual_keys(&self) -> Vec<VisualKey> {
        self.visuals.lock().keys()
    }

    pub fn light_names(&self) -> Vec<String> {
        self.lights.lock().keys()
    }

    /// Returns false if the link is not tracked.
    pub fn write_link(&self, state: LinkState) -> bool {
        self.links.lock().write(&state.key(), state)
    }

    /// Returns false if the visual is not tracked.
    pub fn write_visual(&self, state: VisualState) -> bool {
        self.visuals.lock().write(&state.key(), state)
    }

    /// Returns false if the light is not tracked.
    pub fn write_light(&self, state: LightState) -> bool {
        self.lights.lock().write(&state.name.clone(), state)
    }

    pub fn has_dirty(&self) -> bool {
        self.links.lock().entries.values().any(|e| e.dirty)
            || self.visuals.lock().entries.values().any(|e| e.dirty)
            || self.lights.lock().entries.values().any(|e| e.dirty)
    }

    /// One batched get per non-empty record kind; dirty entries keep their local value.
    pub fn refresh(&self, client: &Client) -> Result<(), ClientError> {
        let keys = self.link_keys();
        if !keys.is_empty() {
            let results = client.get_link_states(LinkQuery {
                keys: keys.clone(),
                models: Vec::new(),
            })?;
            let mut table = self.links.lock();
            for (key, entry) in keys.iter().zip(results) {
                if let Some(s) = entry.state {
                    table.merge(key, s);
                }
            }
        }
        let keys = self.visual_keys();
        if !keys.is_empty() {
            let results = client.get_visual_states(VisualQuery {
                keys: keys.clone(),
                models: Vec::new(),
            })?;
            let mut table = self.visuals.lock();
            for (key, entry) in keys.iter().zip(results) {
                if let Some(s) = entry.state {
                    table.merge(key, s);
                }
            }
        }
        let names = self.light_names();
        if !names.is_empty() {
            let results = client.get_light_states(&names)?;
            let mut table = self.lights.lock();
            for (name, entry) in names.iter().zip(results) {
                if let Some(s) = entry.state {
                    table.merge(name, s);
                }
            }
        }
        Ok(())
    }

    /// One batched set per record kind that has dirty entries.
    pub fn flush(&self, client: &Client) -> Result<Vec<FlushRejection>, ClientError> {
        let mut rejected = Vec::new();

        let dirty = self.links.lock().dirty();
        if !dirty.is_empty() {
            let states: Vec<_> = dirty.iter().map(|(_, s, _)| s.clone()).collect();
            let statuses = client.set_link_states(&states)?;
            let mut table = self.links.lock();
            for ((key, _, gen), status) in dirty.iter().zip(statuses) {
                if status.is_ok() {
                    table.clear_if(key, *gen);
                } else {
                    rejected.push(FlushRejection {
                        kind: "link",
                        name: format!("{}::{}", key.model_name, key.link_name),
                        status,
                    });
                }
            }
        }

        let dirty = self.visuals.lock().dirty();
        if !dirty.is_empty() {
            let states: Vec<_> = dirty.iter().map(|(_, s, _)| s.clone()).collect();
            let statuses = client.set_visual_states(&states)?;
            let mut table = self.visuals.lock();
            for ((key, _, gen), status) in dirty.iter().zip(statuses) {
                if status.is_ok() {
                    table.clear_if(key, *gen);
                } else {
                    rejected.push(FlushRejection {
                        kind: "visual",
                        name: format!("{}::{}::{}", key.model_name, key.link_name, key.visual_name),
                        status,
                    });
                }
            }
        }

        let dirty = self.lights.lock().dirty();
        if !dirty.is_empty() {
            let states: Vec<_> = dirty.iter().map(|(_, s, _)| s.clone()).collect();
            let statuses = client.set_light_states(&states)?;
            let mut table = self.lights.lock();
            for ((key, _, gen), status) in dirty.iter().zip(statuses) {
                if status.is_ok() {
                    table.clear_if(key, *gen);
                } else {
                    rejected.push(FlushRejection {
                        kind: "light",
                        name: key.clone(),
                        status,
                    });
                }
            }
        }
        Ok(rejected)
    }
}
