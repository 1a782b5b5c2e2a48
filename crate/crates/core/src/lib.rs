//! Semantic-aware UAV handover assessment.
//!
//! Scenarios of UAV state and serving/target/neighbor radio measurements are
//! labeled by a deterministic rule oracle over a fixed 41-label schema
//! (4 decisions, 9 exclusive reason-tag groups, 4 independent tags). A
//! classifier's 41 logits are post-processed into a valid [`Assessment`],
//! which is turned into a one-line semantic message and a 16-byte frame.
//!
//! Numeric code in [`learner`], [`post`] and [`eval`] is generic over
//! [`Scalar`] (`f32` or `f64`); the aliases below pick `f64`.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod learner;
pub mod message;
pub mod oracle;
pub mod post;
pub mod scalar;
pub mod scenario;
pub mod schema;
pub mod text;
pub mod wire;

pub use error::{Error, ErrorKind, Result};
pub use post::Assessment;
pub use scalar::Scalar;
pub use scenario::{BsMeasurement, GenConfig, Scenario};
pub use schema::{canonical_schema, DecisionClass, LabelSchema, LabelVector};

pub type Logits = post::LogitVector<f64>;
pub type Logits32 = post::LogitVector<f32>;
pub type Model = learner::MlpModel<f64>;
pub type Model32 = learner::MlpModel<f32>;
pub type TrainConfig = learner::TrainConfig<f64>;
pub type Prf = eval::Prf<f64>;
