//! Textured 2D Gaussian splatting: primitives carrying small color and alpha
//! textures over their local plane, a tiled CPU rasterizer with a brute-force
//! oracle, analytic gradients, projective texture initialization, fitting,
//! image metrics and file formats.

pub mod bench;
pub mod error;
pub mod geometry;
pub mod grad;
pub mod image;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod optim;
pub mod primitive;
pub mod project;
pub mod raster;
pub mod real;
pub mod sampler;
pub mod sh;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{Camera, SplatProjection};
pub use image::{ColorSpace, ImageBuffer};
pub use primitive::TexturedPrimitive;
pub use raster::{render, render_reference, RenderConfig, RenderMode, RenderOutput};
pub use real::Real;
