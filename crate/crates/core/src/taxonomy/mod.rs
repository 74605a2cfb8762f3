//! Closed vocabularies for the five data-practice dimensions.
//!
//! Every term has exactly one canonical lowercase-underscore spelling
//! (`targeted_ads`, `resource_owner`, ...). That spelling is what appears in
//! profile documents, scenarios, notice logs and wire messages. Human input
//! goes through [`parse_taxonomy_term`], which also accepts the display
//! labels (`"Targeted Ads"`, `"law-enforcement"`).

mod colour;
mod countries;
mod retention;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use colour::{colour_for_index, palette_hue_millidegrees, Colour, Rgb};
pub use countries::{region_of_country, CountryCode, COUNTRY_TABLE};
pub use retention::{bucket_retention, Retention, RetentionBucket};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("unknown {kind} term {text:?}")]
    UnknownTerm { kind: TermKind, text: String },
    #[error("retention duration is negative")]
    NegativeDuration,
    #[error("invalid retention duration {0:?}")]
    InvalidDuration(String),
    #[error("unknown country code {0:?}")]
    UnknownCountry(String),
}

/// Which vocabulary a free-text term is resolved against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermKind {
    Category,
    Purpose,
    Party,
}

impl fmt::Display for TermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TermKind::Category => "category",
            TermKind::Purpose => "purpose",
            TermKind::Party => "party",
        })
    }
}

macro_rules! vocabulary {
    (
        $(#[$meta:meta])*
        $name:ident, $kind:expr, { $($variant:ident => $text:literal),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            /// Every value, in display order.
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub const fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            /// Lenient parse: case-insensitive, spaces and hyphens read as underscores.
            pub fn parse(text: &str) -> Result<Self, TaxonomyError> {
                let normalized = normalize_term(text);
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str() == normalized)
                    .ok_or_else(|| TaxonomyError::UnknownTerm {
                        kind: $kind,
                        text: text.to_owned(),
                    })
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = TaxonomyError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::parse(s)
            }
        }
    };
}

vocabulary! {
    /// Type of data a device collects (the data face).
    DataCategory, TermKind::Category, {
        Environmental => "environmental",
        Biometric => "biometric",
        Audio => "audio",
        Location => "location",
        Visual => "visual",
        Usage => "usage",
    }
}

vocabulary! {
    /// What collected data is used for (the usage face).
    UsagePurpose, TermKind::Purpose, {
        Revenue => "revenue",
        Surveillance => "surveillance",
        Analytics => "analytics",
        Security => "security",
        TargetedAds => "targeted_ads",
        Lifestyle => "lifestyle",
        Productivity => "productivity",
        Research => "research",
    }
}

vocabulary! {
    /// Who can access collected data (the access face).
    AccessParty, TermKind::Party, {
        ResourceOwner => "resource_owner",
        TrustedParty => "trusted_party",
        ServiceProvider => "service_provider",
        DeviceManufacturer => "device_manufacturer",
        LawEnforcement => "law_enforcement",
        ThirdParty => "third_party",
        Marketing => "marketing",
    }
}

/// Continental section of the world map on the storage face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    NorthAmerica,
    SouthAmerica,
    Europe,
    Africa,
    Asia,
    Oceania,
    Antarctica,
}

impl Region {
    pub const ALL: &'static [Region] = &[
        Region::NorthAmerica,
        Region::SouthAmerica,
        Region::Europe,
        Region::Africa,
        Region::Asia,
        Region::Oceania,
        Region::Antarctica,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            Region::NorthAmerica => "north_america",
            Region::SouthAmerica => "south_america",
            Region::Europe => "europe",
            Region::Africa => "africa",
            Region::Asia => "asia",
            Region::Oceania => "oceania",
            Region::Antarctica => "antarctica",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A resolved term from one of the three free-text vocabularies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaxonomyTerm {
    Category(DataCategory),
    Purpose(UsagePurpose),
    Party(AccessParty),
}

impl TaxonomyTerm {
    pub fn kind(self) -> TermKind {
        match self {
            TaxonomyTerm::Category(_) => TermKind::Category,
            TaxonomyTerm::Purpose(_) => TermKind::Purpose,
            TaxonomyTerm::Party(_) => TermKind::Party,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaxonomyTerm::Category(c) => c.as_str(),
            TaxonomyTerm::Purpose(p) => p.as_str(),
            TaxonomyTerm::Party(p) => p.as_str(),
        }
    }
}

pub fn parse_taxonomy_term(kind: TermKind, text: &str) -> Result<TaxonomyTerm, TaxonomyError> {
    match kind {
        TermKind::Category => DataCategory::parse(text).map(TaxonomyTerm::Category),
        TermKind::Purpose => UsagePurpose::parse(text).map(TaxonomyTerm::Purpose),
        TermKind::Party => AccessParty::parse(text).map(TaxonomyTerm::Party),
    }
}

fn normalize_term(text: &str) -> String {
    text.trim()
        .chars()
        .map(|c| match c {
            ' ' | '-' => '_',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}
