//! Image-level ROCAUC, pixel-level ROCAUC and the per-region overlap curve.

pub mod components;
pub mod pro;
pub mod report;
pub mod roc;

pub use components::{connected_components, ComponentSet};
pub use pro::{integrate_curve, pro_curve, pro_curve_binned, ProCurve};
pub use report::{evaluate_class, ClassMetrics, EvalReport, MeanMetrics};
pub use roc::{pixel_roc_auc, roc_auc};

/// Default FPR integration limit for PRO.
pub const PRO_FPR_LIMIT: f64 = 0.3;
