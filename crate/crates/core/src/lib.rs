//! Content-aware layout generation as a reinforcement learning problem.
//!
//! * [`geometry`] and [`layout`]: boxes, canvases and layouts.
//! * [`protocol`]: masked prompts and `<think>`/`<answer>` response parsing.
//! * [`reward`]: the hybrid format/quality/IoU reward.
//! * [`metrics`]: overlay, underlay effectiveness and occlusion.
//! * [`grpo`]: group-relative advantages and the clipped, KL-regularized
//!   objective.
//! * [`backends`]: candidate generation (remote chat model, random, replay)
//!   and group evaluation.
//! * [`toy`]: a Gaussian layout policy trained with group-relative
//!   score-function updates.

pub mod backends;
pub mod dataset;
pub mod demo;
pub mod error;
pub mod geometry;
pub mod grpo;
pub mod layout;
pub mod metrics;
pub mod protocol;
pub mod render;
pub mod reward;
pub mod toy;

pub use error::{DatasetError, GrpoError, LayoutError, RewardError, RolloutError, TrainError};
pub use geometry::BBox;
pub use layout::{Canvas, Element, ElementCategory, Layout, LayoutDocument, SaliencyRegion};
pub use reward::{hybrid_reward, RewardBreakdown, RewardConfig, RewardWeights};
