use std::collections::BTreeSet;

use privacycube_core::taxonomy::{AccessParty, DataCategory, UsagePurpose};
use privacycube_core::{
    apply_delta, diff_states, parse_profile, read_notice_log, run_scenario, write_notice_log, Clock,
    CollectionEvent, CubeState, DeviceId, EngineError, EngineState, Registry, Scenario, StateDelta,
};
use privacycube_core::scenario::ScenarioEvent;
use proptest::prelude::*;
use proptest::sample::subsequence;
use serde_json::json;

const COUNTRIES: &[&str] = &["US", "DE", "BR", "JP", "AU", "ZA", "AQ", "IN", "FR", "CA"];
const RETENTIONS: &[&str] = &["PT0S", "PT12H", "P1D", "P7D", "P30D", "P1Y", "P2Y", "indefinite"];

fn names<T: ToString>(all: &[T]) -> Vec<String> {
    all.iter().map(ToString::to_string).collect()
}

/// Profiles built as JSON documents, so generation also goes through the parser.
fn profile_doc(id: String) -> impl Strategy<Value = serde_json::Value> {
    (
        subsequence(names(DataCategory::ALL), 1..=6).prop_flat_map(|cats| {
            let n = cats.len();
            (Just(cats), prop::collection::vec(any::<bool>(), n))
        }),
        subsequence(names(UsagePurpose::ALL), 1..=8),
        subsequence(names(AccessParty::ALL), 1..=7),
        subsequence(COUNTRIES.to_vec(), 1..=3),
        prop::sample::select(RETENTIONS.to_vec()),
    )
        .prop_map(move |((cats, flags), purposes, access, countries, retention)| {
            let declarations: Vec<_> = cats
                .iter()
                .zip(flags)
                .map(|(c, f)| json!({"category": c, "identifiable": f}))
                .collect();
            json!({
                "device_id": id,
                "display_name": format!("Device {id}"),
                "device_kind": "sensor",
                "declarations": declarations,
                "purposes": purposes,
                "access": access,
                "storage_countries": countries,
                "retention": retention,
            })
        })
}

fn registry(max: usize) -> impl Strategy<Value = Registry> {
    (1..=max)
        .prop_flat_map(|n| (0..n).map(|i| profile_doc(format!("d{i}"))).collect::<Vec<_>>())
        .prop_map(|docs| {
            let mut r = Registry::new();
            for doc in docs {
                r.register(parse_profile(doc.to_string().as_bytes()).unwrap()).unwrap();
            }
            r
        })
}

/// Registry plus, per device, an optional non-empty set of its declared categories.
fn with_sessions(max: usize) -> impl Strategy<Value = (Registry, Vec<Option<BTreeSet<DataCategory>>>)> {
    registry(max).prop_flat_map(|r| {
        let sessions: Vec<_> = r
            .entries()
            .iter()
            .map(|e| {
                let declared: Vec<DataCategory> = e.profile.categories().into_iter().collect();
                let n = declared.len();
                prop::option::of(subsequence(declared, 1..=n).prop_map(|v| v.into_iter().collect::<BTreeSet<_>>()))
            })
            .collect();
        (Just(r), sessions)
    })
}

fn engine(registry: &Registry, sessions: &[Option<BTreeSet<DataCategory>>]) -> EngineState {
    let mut e = EngineState::new(registry.clone());
    for (entry, s) in registry.entries().iter().zip(sessions) {
        if let Some(cats) = s {
            e.apply_event(&CollectionEvent::start_with(entry.device_id().clone(), 1, cats.clone()))
                .unwrap();
        }
    }
    e
}

fn notice_lit(s: &CubeState) -> (Vec<DataCategory>, Vec<String>, Vec<AccessParty>, Vec<UsagePurpose>) {
    (
        s.lit_categories(),
        s.lit_storage().iter().map(|i| format!("{i:?}")).collect(),
        s.lit_parties(),
        s.lit_purposes(),
    )
}

fn notice_faces(s: &CubeState) -> String {
    serde_json::to_string(&(&s.data_face, &s.storage_face, &s.access_face, &s.usage_face)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lit_sets_are_the_union_of_single_sessions((registry, sessions) in with_sessions(6)) {
        let full = engine(&registry, &sessions).cube_state();
        let mut data = BTreeSet::new();
        let mut storage = BTreeSet::new();
        let mut access = BTreeSet::new();
        let mut usage = BTreeSet::new();
        for (i, s) in sessions.iter().enumerate() {
            if s.is_none() {
                continue;
            }
            let mut only = vec![None; sessions.len()];
            only[i] = s.clone();
            let (d, st, a, u) = notice_lit(&engine(&registry, &only).cube_state());
            data.extend(d);
            storage.extend(st);
            access.extend(a);
            usage.extend(u);
        }
        let (d, st, a, u) = notice_lit(&full);
        prop_assert_eq!(d.into_iter().collect::<BTreeSet<_>>(), data);
        prop_assert_eq!(st.into_iter().collect::<BTreeSet<_>>(), storage);
        prop_assert_eq!(a.into_iter().collect::<BTreeSet<_>>(), access);
        prop_assert_eq!(u.into_iter().collect::<BTreeSet<_>>(), usage);
    }

    #[test]
    fn focus_shows_one_device_and_leaves_the_top_face((registry, sessions) in with_sessions(6), pick in any::<prop::sample::Index>()) {
        let mut focused = engine(&registry, &sessions);
        let before = focused.cube_state();
        let i = pick.index(registry.len());
        let id = registry.entries()[i].device_id().clone();
        focused.set_focus(Some(id.as_str()), 2).unwrap();
        let after = focused.cube_state();
        prop_assert_eq!(&after.top_face, &before.top_face);

        let mut only = vec![None; sessions.len()];
        only[i] = sessions[i].clone();
        prop_assert_eq!(notice_faces(&after), notice_faces(&engine(&registry, &only).cube_state()));

        focused.set_focus(None, 3).unwrap();
        prop_assert_eq!(notice_faces(&focused.cube_state()), notice_faces(&before));
    }

    #[test]
    fn diff_and_apply_are_inverse((registry, a) in with_sessions(5), b_mask in prop::collection::vec(any::<bool>(), 5)) {
        // flip a random subset of devices between idle and active
        let mut old_engine = engine(&registry, &a);
        let old = old_engine.cube_state();
        for (entry, (session, flip)) in registry.entries().iter().zip(a.iter().zip(&b_mask)) {
            if !*flip {
                continue;
            }
            let id = entry.device_id().clone();
            let event = if session.is_some() { CollectionEvent::stop(id, 9) } else { CollectionEvent::start(id, 9) };
            old_engine.apply_event(&event).unwrap();
        }
        let new = old_engine.cube_state();
        let delta = diff_states(&old, &new).unwrap();
        let wire: StateDelta = serde_json::from_str(&serde_json::to_string(&delta).unwrap()).unwrap();
        prop_assert_eq!(&wire, &delta);
        prop_assert_eq!(apply_delta(&old, &wire).unwrap(), new.clone());
        prop_assert_eq!(delta.is_empty(), notice_faces(&old) == notice_faces(&new) && old.top_face == new.top_face);
        prop_assert!(diff_states(&new, &old).is_err() || new.version == old.version);
    }

    #[test]
    fn rejected_events_change_nothing((registry, sessions) in with_sessions(4), pick in any::<prop::sample::Index>()) {
        let mut e = engine(&registry, &sessions);
        let before = (e.cube_state(), e.version());
        let i = pick.index(registry.len());
        let entry = &registry.entries()[i];
        let id = entry.device_id().clone();
        let result = if sessions[i].is_none() {
            e.apply_event(&CollectionEvent::stop(id, 5))
        } else {
            let undeclared: Vec<DataCategory> = DataCategory::ALL
                .iter()
                .copied()
                .filter(|c| !entry.profile.declares(*c))
                .collect();
            match undeclared.first() {
                Some(c) => e.apply_event(&CollectionEvent::start_with(id, 5, [*c])),
                None => e.apply_event(&CollectionEvent::start_with(id, 5, [])),
            }
        };
        let rejected = matches!(
            result,
            Err(EngineError::StopWithoutSession(_) | EngineError::CategoryNotDeclared { .. } | EngineError::EmptyCategories)
        );
        prop_assert!(rejected, "unexpected result {:?}", result);
        prop_assert_eq!((e.cube_state(), e.version()), before);
    }

    #[test]
    fn scenario_logs_are_clock_independent_and_round_trip(
        (registry, sessions) in with_sessions(4),
        gaps in prop::collection::vec(0u64..500, 8),
    ) {
        let mut events = Vec::new();
        let mut t = 0;
        for ((entry, s), gap) in registry.entries().iter().zip(&sessions).zip(&gaps) {
            t += gap;
            events.push(ScenarioEvent::Start { t_ms: t, device_id: entry.device_id().clone(), categories: s.clone() });
        }
        events.push(ScenarioEvent::Focus { t_ms: t, device_id: Some(DeviceId::new("d0").unwrap()) });
        let scenario = Scenario {
            name: "generated".into(),
            profile_refs: registry.entries().iter().map(|e| e.device_id().clone()).collect(),
            events,
        };
        let instant = run_scenario(&scenario, &registry, Clock::Instant).unwrap();
        let scaled = run_scenario(&scenario, &registry, Clock::Scaled(1_000_000.0)).unwrap();
        prop_assert_eq!(instant.entries.len(), scenario.events.len() + 1);
        prop_assert!(scaled.entries.iter().all(|e| e.wall_elapsed_ms.is_some()));
        prop_assert_eq!(write_notice_log(&scaled.without_wall_clock()), write_notice_log(&instant));

        let bytes = write_notice_log(&scaled);
        prop_assert_eq!(read_notice_log(&bytes).unwrap(), scaled);
    }
}
