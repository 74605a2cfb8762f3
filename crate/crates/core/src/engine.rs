//! The notice engine: active collection sessions folded over the registry
//! into a [`CubeState`].
//!
//! [`EngineState`] mutations are atomic: on error the state is untouched,
//! and every successful mutation bumps `version` by exactly one. Rendering
//! ([`compute_cube_state`]) is a pure function of the state.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cube::{Contributor, CubeState, DeviceIcon, IconState, StorageIcon};
use crate::profile::{DeviceId, DevicePrivacyProfile};
use crate::registry::{Registry, RegistryEntry, RegistryError};
use crate::taxonomy::{AccessParty, DataCategory, UsagePurpose};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("device `{0}` is not registered")]
    UnknownDevice(String),
    #[error("device `{0}` is already registered")]
    DuplicateDeviceId(DeviceId),
    #[error("stop for `{0}` which has no active session")]
    StopWithoutSession(DeviceId),
    #[error("device `{device_id}` does not declare category `{category}`")]
    CategoryNotDeclared {
        device_id: DeviceId,
        category: DataCategory,
    },
    #[error("start event lists an empty category set")]
    EmptyCategories,
    #[error("stop events do not take categories")]
    CategoriesOnStop,
}

impl EngineError {
    /// Stable machine-readable code, used in API error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::UnknownDevice(_) => "unknown_device",
            EngineError::DuplicateDeviceId(_) => "duplicate_device_id",
            EngineError::StopWithoutSession(_) => "stop_without_session",
            EngineError::CategoryNotDeclared { .. } => "category_not_declared",
            EngineError::EmptyCategories => "empty_categories",
            EngineError::CategoriesOnStop => "categories_on_stop",
        }
    }
}

impl From<RegistryError> for EngineError {
    fn from(err: RegistryError) -> Self {
        match err {
            RegistryError::DuplicateDeviceId(id) => EngineError::DuplicateDeviceId(id),
            RegistryError::UnknownDevice(id) => EngineError::UnknownDevice(id),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Start,
    Stop,
}

/// A device starting or stopping data collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionEvent {
    #[serde(rename = "type")]
    pub kind: EventKind,
    pub device_id: DeviceId,
    pub timestamp_ms: u64,
    /// START only; `None` means every declared category.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<BTreeSet<DataCategory>>,
}

impl CollectionEvent {
    pub fn start(device_id: DeviceId, timestamp_ms: u64) -> Self {
        CollectionEvent {
            kind: EventKind::Start,
            device_id,
            timestamp_ms,
            categories: None,
        }
    }

    pub fn start_with(
        device_id: DeviceId,
        timestamp_ms: u64,
        categories: impl IntoIterator<Item = DataCategory>,
    ) -> Self {
        CollectionEvent {
            categories: Some(categories.into_iter().collect()),
            ..Self::start(device_id, timestamp_ms)
        }
    }

    pub fn stop(device_id: DeviceId, timestamp_ms: u64) -> Self {
        CollectionEvent {
            kind: EventKind::Stop,
            device_id,
            timestamp_ms,
            categories: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Session {
    pub device_id: DeviceId,
    pub started_at_ms: u64,
    pub active_categories: BTreeSet<DataCategory>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineState {
    registry: Registry,
    sessions: BTreeMap<DeviceId, Session>,
    focus: Option<DeviceId>,
    version: u64,
    timestamp_ms: u64,
}

impl EngineState {
    pub fn new(registry: Registry) -> Self {
        EngineState {
            registry,
            sessions: BTreeMap::new(),
            focus: None,
            version: 0,
            timestamp_ms: 0,
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn sessions(&self) -> &BTreeMap<DeviceId, Session> {
        &self.sessions
    }

    pub fn focus(&self) -> Option<&DeviceId> {
        self.focus.as_ref()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Timestamp of the most recent mutation, 0 before any.
    pub fn timestamp_ms(&self) -> u64 {
        self.timestamp_ms
    }

    /// START opens (or replaces) the device's session; STOP closes it.
    pub fn apply_event(&mut self, event: &CollectionEvent) -> Result<(), EngineError> {
        let entry = self
            .registry
            .get(event.device_id.as_str())
            .ok_or_else(|| EngineError::UnknownDevice(event.device_id.to_string()))?;

        match event.kind {
            EventKind::Start => {
                let active_categories = match &event.categories {
                    None => entry.profile.categories(),
                    Some(cats) if cats.is_empty() => return Err(EngineError::EmptyCategories),
                    Some(cats) => {
                        if let Some(&category) = cats.iter().find(|c| !entry.profile.declares(**c)) {
                            return Err(EngineError::CategoryNotDeclared {
                                device_id: event.device_id.clone(),
                                category,
                            });
                        }
                        cats.clone()
                    }
                };
                self.sessions.insert(
                    event.device_id.clone(),
                    Session {
                        device_id: event.device_id.clone(),
                        started_at_ms: event.timestamp_ms,
                        active_categories,
                    },
                );
            }
            EventKind::Stop => {
                if event.categories.is_some() {
                    return Err(EngineError::CategoriesOnStop);
                }
                if self.sessions.remove(&event.device_id).is_none() {
                    return Err(EngineError::StopWithoutSession(event.device_id.clone()));
                }
            }
        }
        self.bump(event.timestamp_ms);
        Ok(())
    }

    /// Restricts the four notice faces to one device (`None` clears).
    pub fn set_focus(&mut self, target: Option<&str>, timestamp_ms: u64) -> Result<(), EngineError> {
        let focus = match target {
            None => None,
            Some(id) => Some(
                self.registry
                    .get(id)
                    .ok_or_else(|| EngineError::UnknownDevice(id.to_owned()))?
                    .device_id()
                    .clone(),
            ),
        };
        self.focus = focus;
        self.bump(timestamp_ms);
        Ok(())
    }

    pub fn register(
        &mut self,
        profile: DevicePrivacyProfile,
        timestamp_ms: u64,
    ) -> Result<&RegistryEntry, EngineError> {
        let id = profile.device_id().clone();
        self.registry.register(profile)?;
        self.bump(timestamp_ms);
        Ok(self.registry.get(id.as_str()).expect("just registered"))
    }

    /// Removing a device also ends its session and clears focus on it.
    pub fn unregister(&mut self, device_id: &str, timestamp_ms: u64) -> Result<RegistryEntry, EngineError> {
        let entry = self.registry.unregister(device_id)?;
        self.sessions.remove(entry.device_id());
        if self.focus.as_ref() == Some(entry.device_id()) {
            self.focus = None;
        }
        self.bump(timestamp_ms);
        Ok(entry)
    }

    pub fn cube_state(&self) -> CubeState {
        compute_cube_state(self)
    }

    fn bump(&mut self, timestamp_ms: u64) {
        self.version += 1;
        self.timestamp_ms = timestamp_ms;
    }
}

/// Renders every face. Notice faces only consider the focused device's
/// session when focus is set; the top face always shows every device.
pub fn compute_cube_state(state: &EngineState) -> CubeState {
    let active: Vec<(&RegistryEntry, &Session)> = state
        .registry
        .entries()
        .iter()
        .filter_map(|e| state.sessions.get(e.device_id()).map(|s| (e, s)))
        .collect();
    let shown: Vec<(&RegistryEntry, &Session)> = match &state.focus {
        None => active.clone(),
        Some(focus) => active
            .iter()
            .copied()
            .filter(|(e, _)| e.device_id() == focus)
            .collect(),
    };

    let top_face = state
        .registry
        .entries()
        .iter()
        .map(|entry| {
            let lit = state.sessions.contains_key(entry.device_id());
            DeviceIcon {
                device_id: entry.device_id().clone(),
                display_name: entry.profile.display_name().to_owned(),
                device_kind: entry.profile.device_kind().to_owned(),
                registration_index: entry.registration_index,
                colour: entry.colour.to_rgb(),
                lit,
                contributors: if lit { vec![contributor(entry)] } else { Vec::new() },
            }
        })
        .collect();

    let data_face = DataCategory::ALL
        .iter()
        .map(|&category| {
            let lighting: Vec<&RegistryEntry> = shown
                .iter()
                .filter(|(_, s)| s.active_categories.contains(&category))
                .map(|(e, _)| *e)
                .collect();
            let identifiable = lighting.iter().any(|e| e.profile.is_identifiable(category));
            IconState {
                identifiable: Some(identifiable),
                ..icon(category, &lighting)
            }
        })
        .collect();

    let storage_face = StorageIcon::all()
        .map(|storage| {
            let lighting: Vec<&RegistryEntry> = shown
                .iter()
                .map(|(e, _)| *e)
                .filter(|e| match storage {
                    StorageIcon::Region(region) => {
                        e.profile.storage_countries().iter().any(|c| c.region() == region)
                    }
                    StorageIcon::Retention(bucket) => e.profile.retention().bucket() == bucket,
                })
                .collect();
            icon(storage, &lighting)
        })
        .collect();

    let access_face = AccessParty::ALL
        .iter()
        .map(|&party| icon(party, &declaring(&shown, |p| p.access().contains(&party))))
        .collect();

    let usage_face = UsagePurpose::ALL
        .iter()
        .map(|&purpose| icon(purpose, &declaring(&shown, |p| p.purposes().contains(&purpose))))
        .collect();

    CubeState {
        version: state.version,
        timestamp_ms: state.timestamp_ms,
        focus: state.focus.clone(),
        top_face,
        data_face,
        storage_face,
        access_face,
        usage_face,
    }
}

fn declaring<'a>(
    shown: &[(&'a RegistryEntry, &Session)],
    declares: impl Fn(&DevicePrivacyProfile) -> bool,
) -> Vec<&'a RegistryEntry> {
    shown
        .iter()
        .map(|(e, _)| *e)
        .filter(|e| declares(&e.profile))
        .collect()
}

fn contributor(entry: &RegistryEntry) -> Contributor {
    Contributor {
        device_id: entry.device_id().clone(),
        colour: entry.colour.to_rgb(),
    }
}

fn icon<I>(id: I, lighting: &[&RegistryEntry]) -> IconState<I> {
    IconState {
        icon: id,
        lit: !lighting.is_empty(),
        contributors: lighting.iter().map(|e| contributor(e)).collect(),
        identifiable: None,
    }
}
