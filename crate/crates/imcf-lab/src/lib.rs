//! A numerical laboratory for rotationally symmetric self-expanders of
//! inverse mean curvature flow.
//!
//! A hypersurface moving with normal speed 1/H (inverse mean curvature
//! flow) admits self-similarly expanding solutions: surfaces satisfying
//! −1/H = C ⟨F, ν⟩ for a constant C > 0, which evolve by pure dilation
//! F_t = e^{C t} F. For surfaces of revolution this condition closes into
//! a three-dimensional ODE for the arclength profile (r, z, θ), which the
//! crate integrates by adaptive shooting ([`shooting`]), classifies at
//! its ends ([`asymptotics`]), and probes with several independent
//! verification instruments:
//!
//! * exact pointwise identities of the profile geometry ([`geometry`],
//!   [`curves`]),
//! * kernels of the linearized expander operator in symmetry-reduced
//!   form ([`linearized`]) and on a genuine triangle mesh ([`mesh`]),
//! * a direct curve-shortening-style simulation of the flow compared
//!   against the predicted dilation ([`flow`]),
//! * a two-sided sweep searching for profiles with two cylindrical ends
//!   ([`sweep`]).
//!
//! The `imcf-lab` binary exposes all of it behind a CLI ([`io`]).

pub mod asymptotics;
pub mod curves;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod linearized;
pub mod mesh;
pub mod numerics;
pub mod shooting;
pub mod sweep;

pub use geometry::{ExpanderParams, GeometricSample, GeometryError, ProfileState, RotationField};
pub use shooting::{
    shoot_axis, Direction, IntegratorConfig, ShootError, Trajectory, TerminationCause,
};

use serde::{Deserialize, Serialize};

/// A named residual series with its norms: the common currency of the
/// verification instruments. `h` records the discretization step the
/// series was computed at; `order` is filled by refinement studies that
/// ran the same residual at three or more resolutions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    pub name: String,
    /// discretization step (grid spacing, time step, or mesh size)
    pub h: f64,
    pub sup: f64,
    pub l2: f64,
    /// (abscissa, residual) pairs
    pub series: Vec<(f64, f64)>,
    /// observed convergence order, when a refinement study produced one
    pub order: Option<f64>,
}

impl ResidualReport {
    pub fn new(name: &str, h: f64, sup: f64, l2: f64, series: Vec<(f64, f64)>) -> Self {
        ResidualReport { name: name.to_string(), h, sup, l2, series, order: None }
    }

    /// Build from a residual series, computing the norms.
    pub fn from_series(name: &str, h: f64, series: Vec<(f64, f64)>) -> Self {
        let sup = series.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
        let l2 = if series.is_empty() {
            0.0
        } else {
            (series.iter().map(|(_, v)| v * v).sum::<f64>() / series.len() as f64).sqrt()
        };
        ResidualReport { name: name.to_string(), h, sup, l2, series, order: None }
    }
}
