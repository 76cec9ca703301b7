//! Scenario description language: parsing, `extends` resolution and scene
//! document generation.

mod ast;
mod error;
mod parser;
mod resolve;
mod scene;

pub use ast::{Block, Body, DslAst, Entry, Span, TupleItem, Value, ValueKind};
pub use error::DslError;
pub use parser::{parse, parse_bytes};
pub use resolve::{merge_bodies, merged_body, resolve, Control, Player, Pose, Registry, ResolvedScenario};
pub use scene::generate_scene;

/// Base car-to-car-rear-stationary scenario shipped with the crate.
pub const CCRS_BASE: &str = include_str!("../../fixtures/ccrs_base.scn");
/// Concrete 25 km/h scenario extending [`CCRS_BASE`].
pub const CCRS_25KMH: &str = include_str!("../../fixtures/ccrs_25kmh.scn");

/// Registry holding the built-in fixture scenarios.
pub fn builtin_registry() -> Registry {
    Registry::from_sources([CCRS_BASE, CCRS_25KMH]).expect("built-in fixtures parse")
}
