//! proptest strategies for valid profiles and registries.

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::sample::subsequence;

use crate::profile::{CollectionDeclaration, DeviceId, DevicePrivacyProfile, ProfileFields};
use crate::registry::Registry;
use crate::taxonomy::{
    AccessParty, CountryCode, DataCategory, Retention, UsagePurpose, COUNTRY_TABLE,
};

const HOUR_MS: u64 = 3_600_000;

fn non_empty_subset<T: Clone + std::fmt::Debug>(all: &'static [T]) -> impl Strategy<Value = Vec<T>> {
    subsequence(all, 1..=all.len())
}

pub fn retention() -> impl Strategy<Value = Retention> {
    prop_oneof![
        1 => Just(Retention::Indefinite),
        1 => Just(Retention::from_millis(0)),
        2 => prop::sample::select(vec![24u64, 168, 720, 8760])
            .prop_flat_map(|h| (h * HOUR_MS - 1)..=(h * HOUR_MS + 1))
            .prop_map(Retention::from_millis),
        4 => (0..20_000 * HOUR_MS).prop_map(Retention::from_millis),
    ]
}

pub fn device_id() -> impl Strategy<Value = DeviceId> {
    "[a-z0-9][a-z0-9_-]{0,20}".prop_map(|s| DeviceId::new(s).expect("pattern matches id rules"))
}

pub fn profile_for(id: DeviceId) -> impl Strategy<Value = DevicePrivacyProfile> {
    let declarations = non_empty_subset(DataCategory::ALL)
        .prop_flat_map(|cats| {
            let n = cats.len();
            (Just(cats), prop::collection::vec(any::<bool>(), n))
        })
        .prop_map(|(cats, flags)| {
            cats.into_iter()
                .zip(flags)
                .map(|(category, identifiable)| CollectionDeclaration {
                    category,
                    identifiable,
                })
                .collect::<Vec<_>>()
        })
        .prop_shuffle();
    let countries = subsequence(
        COUNTRY_TABLE.iter().map(|(c, _)| *c).collect::<Vec<_>>(),
        1..=5,
    )
    .prop_map(|codes| {
        codes
            .into_iter()
            .map(|c| CountryCode::parse(c).expect("table codes are valid"))
            .collect::<Vec<_>>()
    })
    .prop_shuffle();
    (
        "[A-Za-z][A-Za-z0-9 ]{0,15}",
        prop::sample::select(vec!["lock", "camera", "speaker", "thermostat", "tv", "plug"]),
        declarations,
        non_empty_subset(UsagePurpose::ALL).prop_shuffle(),
        non_empty_subset(AccessParty::ALL).prop_shuffle(),
        countries,
        retention(),
    )
        .prop_map(
            move |(display_name, kind, declarations, purposes, access, storage_countries, retention)| {
                DevicePrivacyProfile::new(ProfileFields {
                    device_id: id.clone(),
                    display_name,
                    device_kind: kind.to_owned(),
                    declarations,
                    purposes,
                    access,
                    storage_countries,
                    retention,
                })
                .expect("generated fields are valid")
            },
        )
}

pub fn profile() -> impl Strategy<Value = DevicePrivacyProfile> {
    device_id().prop_flat_map(profile_for)
}

/// A registry of `size` devices named `dev0`, `dev1`, ...
pub fn registry(size: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Registry> {
    size.prop_flat_map(|n| {
        (0..n)
            .map(|i| profile_for(DeviceId::new(format!("dev{i}")).expect("valid id")))
            .collect::<Vec<_>>()
    })
    .prop_map(|profiles| {
        let mut registry = Registry::new();
        for p in profiles {
            registry.register(p).expect("ids are distinct");
        }
        registry
    })
}

/// For each registry entry, `None` (idle) or the declared categories it is
/// actively collecting (a non-empty subset).
pub fn sessions_for(registry: &Registry) -> impl Strategy<Value = Vec<Option<BTreeSet<DataCategory>>>> {
    registry
        .entries()
        .iter()
        .map(|entry| {
            let declared: Vec<DataCategory> = entry.profile.categories().into_iter().collect();
            let n = declared.len();
            prop::option::of(subsequence(declared, 1..=n).prop_map(|c| c.into_iter().collect()))
        })
        .collect::<Vec<_>>()
}
