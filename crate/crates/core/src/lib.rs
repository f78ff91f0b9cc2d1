//! Multi-norm Littlewood-Paley theory made executable.
//!
//! The crate is organised bottom-up:
//!
//! * [`matrix`]: exponents, standard matrices, the two dilation families and their norms
//! * [`partitions`]: marked partitions, cones and dominant sets
//! * [`scales`]: the admissible scale lattice, tubes and frequency blocks
//! * [`dyadic`]: anisotropic dyadic cubes and rectangles
//! * [`grid`]: periodic sampling grids, FFT convolution and the binary array format
//! * [`calderon`]: one-parameter and multi-norm reproducing families
//! * [`squarefn`]: square functions and the strong maximal operator
//! * [`kernels`]: multipliers, dyadic kernel synthesis and local Riesz symbols
//! * [`hardy`]: the local Hardy norm, atoms and the atomic decomposition
//! * [`journe`]: covering computations in a finite dyadic product model

pub mod calderon;
pub mod config;
pub mod dyadic;
pub mod error;
pub mod grid;
pub mod hardy;
pub mod journe;
pub mod kernels;
pub mod lp;
pub mod matrix;
pub mod partitions;
pub mod plot;
pub mod rational;
pub mod scales;
pub mod squarefn;

pub use error::{Error, Result};
pub use matrix::{Exponents, LogPoint, StandardMatrix, Violation};
pub use partitions::{Cone, MarkedPartition};
pub use rational::Rat;
pub use scales::{Scale, ScaleLattice, Tube};
pub use dyadic::{DyadicCube, DyadicRectangle};
pub use grid::SampledFunction;
