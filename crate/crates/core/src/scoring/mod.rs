//! Memory bank of normal patch descriptors and nearest-neighbour scoring.

pub mod bank;
pub mod coreset;
pub mod knn;
pub mod map;

pub use bank::{fit_memory_bank, BankMeta, MemoryBank};
pub use coreset::{coreset_select, greedy_k_center};
pub use knn::{knn_distance, score_sample, KnnIndex, KnnScratch, PatchScores};
pub use map::{render_anomaly_map, render_anomaly_map_hw, AnomalyMap};
