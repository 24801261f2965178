//! Constant-factor gap and approximation algorithms for edit distance.
//!
//! The library is organized around a hierarchy of *certified boxes*: weighted
//! substring-pair rectangles whose weight upper-bounds the normalized edit cost
//! of the pair. A multi-level engine ([`engine`]) classifies aligned substring
//! pairs as close or far using a sub-oracle, assembles certified boxes into a
//! shortcut graph, and answers gap-threshold queries with a sweep-line pass
//! ([`shortcut`]). The outer driver ([`driver`]) reduces approximation to a
//! sequence of gap decisions over dyadic thresholds.
//!
//! All randomness flows from a single `u64` seed through named streams, so
//! every decision is reproducible. Exact quadratic oracles ([`strings`]) back
//! both the base case of the gap engine and the verification harnesses
//! ([`verify`]).

pub mod corpus;
pub mod driver;
pub mod dyadic;
pub mod engine;
pub mod intervals;
pub mod params;
pub mod shortcut;
pub mod strings;
pub mod verify;

mod par;

pub use driver::{build_tower, faed, pad_to_power_of_two, FaedOutcome, TowerConfig};
pub use engine::{Engine, EngineOptions, EngineError, GapOracle};
pub use intervals::{Stack, WeightedBox};
pub use params::{LevelParams, QualityMode};
pub use strings::{Decision, GridBox, Interval, Symbol, Text, SENTINEL};
