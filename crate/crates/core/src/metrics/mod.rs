//! Overlap and surface-distance metrics between binary masks.

mod components;
mod edt;
mod hausdorff;
mod overlap;
mod result;
mod surface;

pub use components::{connected_components, label_components, Component, ComponentLabels};
pub use edt::{distance_transform, DistanceField};
pub use hausdorff::{directed_hausdorff, hausdorff, HausdorffDistances};
pub use overlap::dice;
pub use result::{evaluate_metrics, ComponentDiagnostic, MetricResult};
pub use surface::{extract_surface, SurfaceSet};
