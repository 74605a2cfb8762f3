//! The set of devices the cube knows about, each with a stable colour.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::profile::{
    parse_profile, profile_to_value, DeviceId, DevicePrivacyProfile, ProfileError,
    PROFILE_EXTENSION,
};
use crate::taxonomy::{colour_for_index, Colour};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("device `{0}` is already registered")]
    DuplicateDeviceId(DeviceId),
    #[error("device `{0}` is not registered")]
    UnknownDevice(String),
}

impl RegistryError {
    pub fn code(&self) -> &'static str {
        match self {
            RegistryError::DuplicateDeviceId(_) => "duplicate_device_id",
            RegistryError::UnknownDevice(_) => "unknown_device",
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", file.display())]
    Profile {
        file: PathBuf,
        #[source]
        source: ProfileError,
    },
    #[error("{}: {source}", file.display())]
    Registry {
        file: PathBuf,
        #[source]
        source: RegistryError,
    },
}

impl LoadError {
    /// The file that failed, if the failure was in a specific profile.
    pub fn file(&self) -> Option<&Path> {
        match self {
            LoadError::Io { .. } => None,
            LoadError::Profile { file, .. } | LoadError::Registry { file, .. } => Some(file),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub profile: Arc<DevicePrivacyProfile>,
    pub colour: Colour,
    pub registration_index: u64,
}

impl RegistryEntry {
    pub fn device_id(&self) -> &DeviceId {
        self.profile.device_id()
    }
}

/// Registered profiles in registration order.
///
/// Indices are never reused: after an unregistration the remaining devices
/// keep their colours and new devices continue from the highest index ever
/// handed out.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    entries: Vec<RegistryEntry>,
    next_index: u64,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, profile: DevicePrivacyProfile) -> Result<&RegistryEntry, RegistryError> {
        if self.get(profile.device_id().as_str()).is_some() {
            return Err(RegistryError::DuplicateDeviceId(profile.device_id().clone()));
        }
        let index = self.next_index;
        self.entries.push(RegistryEntry {
            profile: Arc::new(profile),
            colour: colour_for_index(index),
            registration_index: index,
        });
        self.next_index += 1;
        Ok(self.entries.last().expect("just pushed"))
    }

    pub fn unregister(&mut self, device_id: &str) -> Result<RegistryEntry, RegistryError> {
        let pos = self
            .entries
            .iter()
            .position(|e| e.device_id().as_str() == device_id)
            .ok_or_else(|| RegistryError::UnknownDevice(device_id.to_owned()))?;
        Ok(self.entries.remove(pos))
    }

    pub fn get(&self, device_id: &str) -> Option<&RegistryEntry> {
        self.entries.iter().find(|e| e.device_id().as_str() == device_id)
    }

    pub fn contains(&self, device_id: &str) -> bool {
        self.get(device_id).is_some()
    }

    /// Entries ordered by registration index.
    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    /// One JSON line per entry: index, colour and canonical profile.
    pub fn canonical_dump(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for entry in &self.entries {
            serde_json::to_writer(&mut out, &RegistryListing::from(entry))
                .expect("listing always serializes");
            out.push(b'\n');
        }
        out
    }
}

/// How a registry entry is presented to clients.
#[derive(Debug, Clone, Serialize)]
pub struct RegistryListing {
    pub device_id: DeviceId,
    pub registration_index: u64,
    pub colour: Colour,
    pub profile: serde_json::Value,
}

impl From<&RegistryEntry> for RegistryListing {
    fn from(entry: &RegistryEntry) -> Self {
        RegistryListing {
            device_id: entry.device_id().clone(),
            registration_index: entry.registration_index,
            colour: entry.colour,
            profile: profile_to_value(&entry.profile),
        }
    }
}

/// Lists `*.pcp.json` files in a directory, sorted by file name.
pub fn profile_files(dir: &Path) -> Result<Vec<PathBuf>, LoadError> {
    let io_err = |source| LoadError::Io {
        path: dir.to_owned(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        let name = entry.file_name();
        let is_profile = name
            .to_str()
            .is_some_and(|n| n.ends_with(PROFILE_EXTENSION));
        if is_profile && entry.path().is_file() {
            files.push(entry.path());
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Loads every profile in `dir` in lexicographic file-name order. Any
/// failure aborts the whole load; no partial registry is returned.
pub fn load_profile_dir(dir: &Path) -> Result<Registry, LoadError> {
    let mut registry = Registry::new();
    for file in profile_files(dir)? {
        let bytes = fs::read(&file).map_err(|source| LoadError::Io {
            path: file.clone(),
            source,
        })?;
        let profile = parse_profile(&bytes).map_err(|source| LoadError::Profile {
            file: file.clone(),
            source,
        })?;
        registry
            .register(profile)
            .map_err(|source| LoadError::Registry { file, source })?;
    }
    Ok(registry)
}
