//! Rendered cube: the top face plus four notice faces, and deltas between
//! two renderings.
//!
//! [`CubeState`]'s JSON serialization is the golden format shared by notice
//! logs, the service API and tests. Icons appear in fixed vocabulary order,
//! contributors in registration order, colours as `#rrggbb`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::DeviceId;
use crate::taxonomy::{AccessParty, DataCategory, Region, RetentionBucket, Rgb, UsagePurpose};

/// An active device lighting an icon, with the colour it lights it in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Contributor {
    pub device_id: DeviceId,
    pub colour: Rgb,
}

/// One icon on a notice face. `lit` is true exactly when `contributors` is
/// non-empty. `identifiable` is present on data-face icons only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IconState<I> {
    pub icon: I,
    pub lit: bool,
    pub contributors: Vec<Contributor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identifiable: Option<bool>,
}

/// A device on the top face. Unlit devices are still shown, in their colour.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceIcon {
    pub device_id: DeviceId,
    pub display_name: String,
    pub device_kind: String,
    pub registration_index: u64,
    pub colour: Rgb,
    pub lit: bool,
    pub contributors: Vec<Contributor>,
}

/// The storage face carries the world map and the time-bar side by side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StorageIcon {
    Region(Region),
    Retention(RetentionBucket),
}

impl StorageIcon {
    /// Map regions first, then time-bar segments.
    pub fn all() -> impl Iterator<Item = StorageIcon> {
        Region::ALL
            .iter()
            .copied()
            .map(StorageIcon::Region)
            .chain(RetentionBucket::ALL.iter().copied().map(StorageIcon::Retention))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeState {
    pub version: u64,
    pub timestamp_ms: u64,
    pub focus: Option<DeviceId>,
    pub top_face: Vec<DeviceIcon>,
    pub data_face: Vec<IconState<DataCategory>>,
    pub storage_face: Vec<IconState<StorageIcon>>,
    pub access_face: Vec<IconState<AccessParty>>,
    pub usage_face: Vec<IconState<UsagePurpose>>,
}

impl CubeState {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("cube state always serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn lit_devices(&self) -> Vec<&DeviceId> {
        self.top_face.iter().filter(|d| d.lit).map(|d| &d.device_id).collect()
    }

    pub fn lit_categories(&self) -> Vec<DataCategory> {
        lit_icons(&self.data_face)
    }

    pub fn lit_storage(&self) -> Vec<StorageIcon> {
        lit_icons(&self.storage_face)
    }

    pub fn lit_parties(&self) -> Vec<AccessParty> {
        lit_icons(&self.access_face)
    }

    pub fn lit_purposes(&self) -> Vec<UsagePurpose> {
        lit_icons(&self.usage_face)
    }
}

fn lit_icons<I: Copy>(face: &[IconState<I>]) -> Vec<I> {
    face.iter().filter(|i| i.lit).map(|i| i.icon).collect()
}

/// Changes between two cube states. Only icons that differ are listed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDelta {
    pub from_version: u64,
    pub version: u64,
    pub timestamp_ms: u64,
    pub focus: Option<DeviceId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub top_face: Vec<DeviceIcon>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub top_removed: Vec<DeviceId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub data_face: Vec<IconState<DataCategory>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub storage_face: Vec<IconState<StorageIcon>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub access_face: Vec<IconState<AccessParty>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub usage_face: Vec<IconState<UsagePurpose>>,
}

impl StateDelta {
    /// True when no icon changed (version and timestamp may still move).
    pub fn is_empty(&self) -> bool {
        self.top_face.is_empty()
            && self.top_removed.is_empty()
            && self.data_face.is_empty()
            && self.storage_face.is_empty()
            && self.access_face.is_empty()
            && self.usage_face.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeltaError {
    #[error("version regression: {old} -> {new}")]
    VersionRegression { old: u64, new: u64 },
    #[error("delta starts at version {delta_from} but state is at version {state}")]
    VersionMismatch { state: u64, delta_from: u64 },
    #[error("delta names icon {0} which is not on the cube")]
    UnknownIcon(String),
}

pub fn diff_states(old: &CubeState, new: &CubeState) -> Result<StateDelta, DeltaError> {
    if new.version < old.version {
        return Err(DeltaError::VersionRegression {
            old: old.version,
            new: new.version,
        });
    }
    let top_face = new
        .top_face
        .iter()
        .filter(|icon| !old.top_face.contains(icon))
        .cloned()
        .collect();
    let top_removed = old
        .top_face
        .iter()
        .filter(|old_icon| !new.top_face.iter().any(|n| n.device_id == old_icon.device_id))
        .map(|icon| icon.device_id.clone())
        .collect();
    Ok(StateDelta {
        from_version: old.version,
        version: new.version,
        timestamp_ms: new.timestamp_ms,
        focus: new.focus.clone(),
        top_face,
        top_removed,
        data_face: diff_face(&old.data_face, &new.data_face),
        storage_face: diff_face(&old.storage_face, &new.storage_face),
        access_face: diff_face(&old.access_face, &new.access_face),
        usage_face: diff_face(&old.usage_face, &new.usage_face),
    })
}

fn diff_face<I: PartialEq + Clone>(old: &[IconState<I>], new: &[IconState<I>]) -> Vec<IconState<I>> {
    new.iter()
        .filter(|n| old.iter().find(|o| o.icon == n.icon) != Some(*n))
        .cloned()
        .collect()
}

pub fn apply_delta(state: &CubeState, delta: &StateDelta) -> Result<CubeState, DeltaError> {
    if delta.from_version != state.version {
        return Err(DeltaError::VersionMismatch {
            state: state.version,
            delta_from: delta.from_version,
        });
    }
    let mut next = state.clone();
    next.version = delta.version;
    next.timestamp_ms = delta.timestamp_ms;
    next.focus = delta.focus.clone();

    next.top_face.retain(|icon| !delta.top_removed.contains(&icon.device_id));
    for changed in &delta.top_face {
        match next.top_face.iter_mut().find(|i| i.device_id == changed.device_id) {
            Some(slot) => *slot = changed.clone(),
            None => next.top_face.push(changed.clone()),
        }
    }
    next.top_face.sort_by_key(|i| i.registration_index);

    patch_face(&mut next.data_face, &delta.data_face)?;
    patch_face(&mut next.storage_face, &delta.storage_face)?;
    patch_face(&mut next.access_face, &delta.access_face)?;
    patch_face(&mut next.usage_face, &delta.usage_face)?;
    Ok(next)
}

fn patch_face<I>(face: &mut [IconState<I>], changes: &[IconState<I>]) -> Result<(), DeltaError>
where
    I: PartialEq + Clone + Serialize,
{
    for changed in changes {
        let slot = face
            .iter_mut()
            .find(|i| i.icon == changed.icon)
            .ok_or_else(|| {
                DeltaError::UnknownIcon(serde_json::to_string(&changed.icon).unwrap_or_default())
            })?;
        *slot = changed.clone();
    }
    Ok(())
}
