//! Shape-color differential moment invariants (SCDMIs) for color images.

pub mod algebra;
pub mod bench;
pub mod error;
pub mod image;
pub mod moments;
pub mod numeric;
pub mod oracle;
pub mod synthetic;
pub mod transform;

pub use error::{Error, Result};
pub use image::RasterImage;
pub use moments::{scdmi50, FeatureExtractor, FeatureVector};
