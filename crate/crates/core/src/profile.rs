//! Device privacy profiles: the `.pcp.json` document format.
//!
//! A profile declares, for one device, every data practice the cube can
//! show: which data categories it collects (and whether each is
//! identifiable), the purposes and parties the data goes to, where it is
//! stored and for how long.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::{
    AccessParty, CountryCode, DataCategory, Retention, TaxonomyError, TermKind, UsagePurpose,
};

pub const PROFILE_EXTENSION: &str = ".pcp.json";

const MAX_DEVICE_ID_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("malformed document at line {line}, column {column}: {message}")]
    MalformedDocument {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("field `{0}` must not be empty")]
    EmptyField(&'static str),
    #[error("unknown {kind} term {text:?}")]
    UnknownTerm { kind: TermKind, text: String },
    #[error("category `{0}` declared more than once")]
    DuplicateDeclaration(DataCategory),
    #[error("duplicate entry {value:?} in `{field}`")]
    DuplicateEntry { field: &'static str, value: String },
    #[error("invalid country code {0:?}")]
    InvalidCountry(String),
    #[error("invalid device id {id:?}: {reason}")]
    InvalidDeviceId { id: String, reason: &'static str },
    #[error("invalid retention {text:?}: {cause}")]
    InvalidRetention { text: String, cause: TaxonomyError },
}

impl ProfileError {
    pub fn code(&self) -> &'static str {
        match self {
            ProfileError::MalformedDocument { .. } => "malformed_document",
            ProfileError::MissingField(_) => "missing_field",
            ProfileError::EmptyField(_) => "empty_field",
            ProfileError::UnknownTerm { .. } => "unknown_term",
            ProfileError::DuplicateDeclaration(_) => "duplicate_declaration",
            ProfileError::DuplicateEntry { .. } => "duplicate_entry",
            ProfileError::InvalidCountry(_) => "invalid_country",
            ProfileError::InvalidDeviceId { .. } => "invalid_device_id",
            ProfileError::InvalidRetention { .. } => "invalid_retention",
        }
    }
}

impl From<serde_json::Error> for ProfileError {
    fn from(err: serde_json::Error) -> Self {
        ProfileError::MalformedDocument {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

/// Lowercase identifier of a registered device: `[a-z0-9_-]{1,64}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct DeviceId(String);

impl DeviceId {
    pub fn new(id: impl Into<String>) -> Result<Self, ProfileError> {
        let id = id.into();
        let reason = if id.is_empty() {
            Some("empty")
        } else if id.len() > MAX_DEVICE_ID_LEN {
            Some("longer than 64 characters")
        } else if !id
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'-')
        {
            Some("only a-z, 0-9, '_' and '-' are allowed")
        } else {
            None
        };
        match reason {
            Some(reason) => Err(ProfileError::InvalidDeviceId { id, reason }),
            None => Ok(DeviceId(id)),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for DeviceId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        DeviceId::new(s).map_err(serde::de::Error::custom)
    }
}

impl AsRef<str> for DeviceId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CollectionDeclaration {
    pub category: DataCategory,
    pub identifiable: bool,
}

/// A validated profile. Construct through [`parse_profile`] or
/// [`DevicePrivacyProfile::new`]; all sets are non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DevicePrivacyProfile {
    device_id: DeviceId,
    display_name: String,
    device_kind: String,
    /// category -> identifiable
    declarations: BTreeMap<DataCategory, bool>,
    purposes: BTreeSet<UsagePurpose>,
    access: BTreeSet<AccessParty>,
    storage_countries: BTreeSet<CountryCode>,
    retention: Retention,
}

/// Field values for [`DevicePrivacyProfile::new`].
#[derive(Debug, Clone)]
pub struct ProfileFields {
    pub device_id: DeviceId,
    pub display_name: String,
    pub device_kind: String,
    pub declarations: Vec<CollectionDeclaration>,
    pub purposes: Vec<UsagePurpose>,
    pub access: Vec<AccessParty>,
    pub storage_countries: Vec<CountryCode>,
    pub retention: Retention,
}

impl DevicePrivacyProfile {
    pub fn new(fields: ProfileFields) -> Result<Self, ProfileError> {
        if fields.display_name.trim().is_empty() {
            return Err(ProfileError::EmptyField("display_name"));
        }
        if fields.device_kind.trim().is_empty() {
            return Err(ProfileError::EmptyField("device_kind"));
        }

        let mut declarations = BTreeMap::new();
        for decl in &fields.declarations {
            if declarations.insert(decl.category, decl.identifiable).is_some() {
                return Err(ProfileError::DuplicateDeclaration(decl.category));
            }
        }
        if declarations.is_empty() {
            return Err(ProfileError::EmptyField("declarations"));
        }

        Ok(DevicePrivacyProfile {
            device_id: fields.device_id,
            display_name: fields.display_name,
            device_kind: fields.device_kind,
            declarations,
            purposes: unique_set("purposes", fields.purposes, |p| p.as_str().to_owned())?,
            access: unique_set("access", fields.access, |p| p.as_str().to_owned())?,
            storage_countries: unique_set("storage_countries", fields.storage_countries, |c| {
                c.to_string()
            })?,
            retention: fields.retention,
        })
    }

    pub fn device_id(&self) -> &DeviceId {
        &self.device_id
    }

    pub fn display_name(&self) -> &str {
        &self.display_name
    }

    pub fn device_kind(&self) -> &str {
        &self.device_kind
    }

    pub fn declarations(&self) -> impl Iterator<Item = CollectionDeclaration> + '_ {
        self.declarations
            .iter()
            .map(|(&category, &identifiable)| CollectionDeclaration {
                category,
                identifiable,
            })
    }

    pub fn declares(&self, category: DataCategory) -> bool {
        self.declarations.contains_key(&category)
    }

    pub fn is_identifiable(&self, category: DataCategory) -> bool {
        self.declarations.get(&category).copied().unwrap_or(false)
    }

    pub fn categories(&self) -> BTreeSet<DataCategory> {
        self.declarations.keys().copied().collect()
    }

    pub fn purposes(&self) -> &BTreeSet<UsagePurpose> {
        &self.purposes
    }

    pub fn access(&self) -> &BTreeSet<AccessParty> {
        &self.access
    }

    pub fn storage_countries(&self) -> &BTreeSet<CountryCode> {
        &self.storage_countries
    }

    pub fn retention(&self) -> Retention {
        self.retention
    }
}

fn unique_set<T: Ord>(
    field: &'static str,
    items: Vec<T>,
    describe: impl Fn(&T) -> String,
) -> Result<BTreeSet<T>, ProfileError> {
    let mut set = BTreeSet::new();
    for item in items {
        if let Some(dup) = set.get(&item) {
            return Err(ProfileError::DuplicateEntry {
                field,
                value: describe(dup),
            });
        }
        set.insert(item);
    }
    if set.is_empty() {
        return Err(ProfileError::EmptyField(field));
    }
    Ok(set)
}

/// Wire shape of a profile document. Terms stay as raw strings so they can
/// be resolved leniently and reported with the offending text.
#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ProfileDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    device_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    display_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    device_kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declarations: Option<Vec<DeclarationDocument>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    purposes: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    access: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    storage_countries: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    retention: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct DeclarationDocument {
    category: String,
    identifiable: bool,
}

pub fn parse_profile(document: &[u8]) -> Result<DevicePrivacyProfile, ProfileError> {
    let doc: ProfileDocument = serde_json::from_slice(document)?;
    profile_from_document(doc)
}

/// Parses a profile already decoded as a JSON value (e.g. an API body).
pub fn profile_from_value(value: serde_json::Value) -> Result<DevicePrivacyProfile, ProfileError> {
    let doc: ProfileDocument = serde_json::from_value(value)?;
    profile_from_document(doc)
}

fn profile_from_document(doc: ProfileDocument) -> Result<DevicePrivacyProfile, ProfileError> {
    let device_id = DeviceId::new(doc.device_id.ok_or(ProfileError::MissingField("device_id"))?)?;
    let display_name = doc
        .display_name
        .ok_or(ProfileError::MissingField("display_name"))?;
    let device_kind = doc
        .device_kind
        .ok_or(ProfileError::MissingField("device_kind"))?;
    let declarations = doc
        .declarations
        .ok_or(ProfileError::MissingField("declarations"))?;
    let purposes = doc.purposes.ok_or(ProfileError::MissingField("purposes"))?;
    let access = doc.access.ok_or(ProfileError::MissingField("access"))?;
    let countries = doc
        .storage_countries
        .ok_or(ProfileError::MissingField("storage_countries"))?;
    let retention_text = doc.retention.ok_or(ProfileError::MissingField("retention"))?;

    let declarations = declarations
        .into_iter()
        .map(|d| {
            Ok(CollectionDeclaration {
                category: DataCategory::parse(&d.category).map_err(term_error)?,
                identifiable: d.identifiable,
            })
        })
        .collect::<Result<Vec<_>, ProfileError>>()?;
    let purposes = purposes
        .iter()
        .map(|p| UsagePurpose::parse(p).map_err(term_error))
        .collect::<Result<Vec<_>, _>>()?;
    let access = access
        .iter()
        .map(|p| AccessParty::parse(p).map_err(term_error))
        .collect::<Result<Vec<_>, _>>()?;
    let storage_countries = countries
        .iter()
        .map(|c| CountryCode::parse(c).map_err(|_| ProfileError::InvalidCountry(c.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let retention =
        Retention::parse(&retention_text).map_err(|cause| ProfileError::InvalidRetention {
            text: retention_text.clone(),
            cause,
        })?;

    DevicePrivacyProfile::new(ProfileFields {
        device_id,
        display_name,
        device_kind,
        declarations,
        purposes,
        access,
        storage_countries,
        retention,
    })
}

fn term_error(err: TaxonomyError) -> ProfileError {
    match err {
        TaxonomyError::UnknownTerm { kind, text } => ProfileError::UnknownTerm { kind, text },
        other => unreachable!("vocabulary parse only reports unknown terms, got {other:?}"),
    }
}

fn canonical_document(profile: &DevicePrivacyProfile) -> ProfileDocument {
    let mut declarations: Vec<_> = profile.declarations().collect();
    declarations.sort_by_key(|d| d.category.as_str());
    let mut purposes: Vec<_> = profile.purposes.iter().map(|p| p.as_str().to_owned()).collect();
    purposes.sort();
    let mut access: Vec<_> = profile.access.iter().map(|p| p.as_str().to_owned()).collect();
    access.sort();

    ProfileDocument {
        device_id: Some(profile.device_id.0.clone()),
        display_name: Some(profile.display_name.clone()),
        device_kind: Some(profile.device_kind.clone()),
        declarations: Some(
            declarations
                .into_iter()
                .map(|d| DeclarationDocument {
                    category: d.category.as_str().to_owned(),
                    identifiable: d.identifiable,
                })
                .collect(),
        ),
        purposes: Some(purposes),
        access: Some(access),
        // CountryCode orders by its two bytes, i.e. by spelling
        storage_countries: Some(
            profile
                .storage_countries
                .iter()
                .map(|c| c.to_string())
                .collect(),
        ),
        retention: Some(profile.retention.to_string()),
    }
}

impl Serialize for DevicePrivacyProfile {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        canonical_document(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DevicePrivacyProfile {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = ProfileDocument::deserialize(deserializer)?;
        profile_from_document(doc).map_err(serde::de::Error::custom)
    }
}

/// Deterministic single-line JSON: fixed field order, set members sorted by
/// canonical spelling, retention as an ISO-8601 duration.
pub fn canonicalize_profile(profile: &DevicePrivacyProfile) -> Vec<u8> {
    serde_json::to_vec(&canonical_document(profile)).expect("profile document always serializes")
}

/// The canonical document as a JSON value, for embedding in other messages.
pub fn profile_to_value(profile: &DevicePrivacyProfile) -> serde_json::Value {
    serde_json::to_value(canonical_document(profile)).expect("profile document always serializes")
}
