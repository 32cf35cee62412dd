//! Max-min fair downlink design for cell-free MIMO networks whose access
//! points carry rotatable directional antennas.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the whole numerical
//! pipeline:
//!
//! * [`scenario`]: network geometry, element grids, poses and unit conversions.
//! * [`channel`]: orientation-dependent LoS + bistatic NLoS channels together
//!   with first/second derivatives with respect to each boresight.
//! * [`conic`]: a dense primal-dual interior-point solver for second-order
//!   cone programs.
//! * [`beamform`]: SINR evaluation and max-min beamforming by bisection over
//!   SOC power-minimization probes.
//! * [`orient_sca`]: successive convex approximation of the orientation
//!   subproblem for fixed beamformers.
//! * [`orient_fw`]: proportional-fair Frank-Wolfe orientation design on the
//!   spherical cap.
//! * [`drivers`]: alternating optimization, the two-stage scheme and the
//!   reference baselines.
//!
//! IO, configuration files and the command-line front end live in the
//! `rotcf-sim` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod beamform;
pub mod channel;
pub mod conic;
pub mod drivers;
mod error;
pub mod math;
pub mod orient_fw;
pub mod orient_sca;
pub mod scenario;

pub use error::{Error, Result};
pub use math::{RotationMatrix, Vec3};
