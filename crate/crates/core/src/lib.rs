//! Incremental texture reconstruction for known, UV-mapped meshes from posed
//! RGB frames, and surface-color instance classification with
//! texture-coordinate hue templates.
//!
//! The reconstruction pipeline, per frame:
//!
//! 1. exposure normalization against the first frame ([`exposure`]),
//! 2. focused, slope-biased depth rendering and discontinuity masking
//!    ([`raster`]),
//! 3. reverse texture-space sampling of the frame ([`raster::texel`]),
//! 4. scoring, boundary blending and merging into a persistent texture
//!    ([`fusion`]).
//!
//! Reconstructed textures plug into [`matcher`], which looks up expected
//! colors through per-pixel texture coordinates and assigns candidate
//! detections to instance hypotheses.

pub mod error;
pub mod eval;
pub mod exposure;
pub mod fusion;
pub mod matcher;
pub mod pipeline;
pub mod plane;
pub mod raster;
pub mod scene_io;
pub mod synth;

pub use error::{Error, Result};
pub use plane::{Plane, RgbImage};
