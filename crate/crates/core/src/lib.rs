//! Interpolation, resampling and artifact analysis on 3-D vertex-centered grids.

pub mod analysis;
pub mod error;
pub mod gibbs;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod morphology;
pub mod phantom;
pub mod resample;

pub use error::{Error, Result};
pub use grid::{Fov, Grid3, LabelVolume, ScalarVolume};
pub use kernels::{Kernel, KernelConstants, KernelFamily};
pub use morphology::BoolMask;
