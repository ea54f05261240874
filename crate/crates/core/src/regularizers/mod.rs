//! The convex separable part `phi` and the subtracted convex part `h`.

mod concave;
mod largest_k;
mod phi;
mod scad;

pub use concave::{ConcaveH, HKind, HState};
pub use largest_k::{largest_k_subgrad, largest_k_value, top_k_indices, TopKTracker};
pub use phi::{soft_threshold, PhiKind, SeparablePhi};
pub use scad::{scad_h_subgrad, scad_h_value};
