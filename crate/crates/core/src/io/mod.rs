//! Tensor container, images, and the on-disk dataset layout.

pub mod dataset;
pub mod image;
pub mod tensor;

pub use dataset::{list_samples, load_ref, load_sample, write_sample, Label, Sample, SampleRef, Split, GOOD};
pub use image::{is_valid_point, read_image_tensor, read_png, write_png, DepthMap, Mask, OrganizedPointCloud, PngImage, RgbImage};
pub use tensor::{read_tensor, write_tensor, DType, Tensor, TensorData};
