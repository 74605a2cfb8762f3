//! Privacy-notice engine for a tangible smart-home privacy cube.
//!
//! Devices declare their data practices in profiles. While a device is
//! collecting data it has an active session, and the engine lights the
//! matching icons on the cube: the device itself on the top face, and its
//! data categories, storage regions and retention, access parties and
//! usage purposes on the four notice faces.
//!
//! ```
//! use privacycube_core::{parse_profile, CollectionEvent, EngineState, Registry};
//!
//! let doc = br#"{
//!     "device_id": "plug", "display_name": "Smart Plug", "device_kind": "plug",
//!     "declarations": [{"category": "usage", "identifiable": false}],
//!     "purposes": ["analytics"], "access": ["service_provider"],
//!     "storage_countries": ["IE"], "retention": "P1D"
//! }"#;
//! let mut registry = Registry::new();
//! registry.register(parse_profile(doc).unwrap()).unwrap();
//!
//! let mut engine = EngineState::new(registry);
//! let plug = engine.registry().entries()[0].device_id().clone();
//! engine.apply_event(&CollectionEvent::start(plug, 1_000)).unwrap();
//! assert_eq!(engine.cube_state().lit_purposes().len(), 1);
//! ```

pub mod cube;
pub mod engine;
pub mod profile;
pub mod registry;
pub mod scenario;
pub mod taxonomy;

#[cfg(feature = "arbitrary")]
pub mod arbitrary;

pub use cube::{apply_delta, diff_states, CubeState, DeltaError, StateDelta};
pub use engine::{compute_cube_state, CollectionEvent, EngineError, EngineState, EventKind};
pub use profile::{canonicalize_profile, parse_profile, DeviceId, DevicePrivacyProfile, ProfileError};
pub use registry::{load_profile_dir, LoadError, Registry, RegistryEntry, RegistryError};
pub use scenario::{
    parse_scenario, read_notice_log, run_scenario, write_notice_log, Clock, NoticeLog, Scenario,
};
