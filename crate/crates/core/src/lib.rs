//! Process planning for aluminum extrusion dies.
//!
//! A profile description is encoded into a fixed binary vector, a small
//! feedforward network maps it to an encoded die design, and a rule/frame
//! knowledge base expands the design into an ordered machining plan whose
//! operations are timed from material-removal-rate formulas.

pub mod codec;
pub mod domain;
pub mod estimator;
pub mod fixtures;
pub mod kb;
pub mod library;
pub mod nn;
pub mod planner;

pub use codec::{decode_output, encode_design, encode_profile, validate_output, EncodingConfig};
pub use domain::*;
pub use estimator::{estimate_plan, EstimatorConfig};
pub use kb::KnowledgeBase;
pub use library::{generate_synthetic_cases, load_library, nearest_neighbors, save_library, Library};
pub use nn::{Mlp, TrainConfig};
pub use planner::{evaluate, DesignSource, PlanDocument, Planner};
