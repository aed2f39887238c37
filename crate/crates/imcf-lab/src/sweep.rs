//! Grid sweep over profile initial data in search of two-ended immersed
//! expanders ("bottles": both ends asymptotic to coaxial cylinders of
//! distinct radii, profile self-intersecting), plus the planar
//! self-intersection machinery the search needs.
//!
//! Seeds live on the unit circle: (r₀, z₀) = (cos β, sin β) with
//! β ∈ (−π/2, π/2) — dilation invariance of the expander equation makes
//! the seed magnitude redundant, so it is normalized away — and the
//! initial tangent angle θ₀ comes from its own grid. Each seed is
//! integrated in both arclength directions, both ends are classified,
//! and the combined profile is scanned for transversal self-crossings.
//!
//! With C = 1/(n−1) every seed with θ₀ = π/2 is an exact cylinder
//! (the default grid is a line of fixed points), and tilted seeds open
//! into one-signed trumpets; a sweep that finds no bottle reports that
//! explicitly rather than silently returning an empty list.

use crate::asymptotics::{classify_end, EndClassification, EndVerdict};
use crate::geometry::{ExpanderParams, ProfileState};
use crate::shooting::{integrate, Direction, IntegratorConfig, ShootError, Trajectory};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Minimum |sin| of the tangent crossing angle for a crossing to count
/// as transversal.
const TRANSVERSALITY_MIN_SIN: f64 = 1e-3;
/// Newton target for the refined crossing residual |A(u) − B(v)|.
const CROSSING_PRECISION: f64 = 1e-12;
/// Relative radius gap above which two cylindrical ends count as distinct.
const DISTINCT_RADII_REL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("empty sweep grid")]
    EmptyGrid,
    #[error("invalid seed: {0}")]
    InvalidSeed(String),
    #[error(transparent)]
    Shoot(#[from] ShootError),
}

/// A transversal crossing of planar curves, with the two parameter
/// values and the meeting point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PlaneCrossing {
    pub u_a: f64,
    pub u_b: f64,
    pub point: [f64; 2],
}

/// One grid point of the sweep: the end verdicts in both integration
/// directions, the asymptotic radii where cylindrical, and the number of
/// transversal self-crossings of the combined profile. `candidate` marks
/// the full bottle signature: two cylindrical ends of distinct radii on
/// a self-intersecting profile.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub theta0: f64,
    pub forward: EndVerdict,
    pub backward: EndVerdict,
    pub rho_forward: Option<f64>,
    pub rho_backward: Option<f64>,
    pub crossings: usize,
    pub both_cylindrical: bool,
    pub distinct_radii: bool,
    pub candidate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// indices into `rows` of bottle candidates
    pub candidates: Vec<usize>,
    pub found: bool,
}

pub fn default_beta_grid() -> Vec<f64> {
    (-8..=8).map(|k| k as f64 * 0.05).collect()
}

pub fn default_theta0_grid() -> Vec<f64> {
    vec![std::f64::consts::FRAC_PI_2]
}

/// Interior crossings of the polyline `(u[i], pts[i])`, skipping segment
/// pairs closer in parameter than 10 × the larger local step (adjacent
/// arcs meet at shared endpoints, not crossings). Quadratic in the
/// segment count with a bounding-box prefilter; intended for candidate
/// detection at sample resolution, to be sharpened by `refine_crossing`.
pub fn polyline_crossings(u: &[f64], pts: &[[f64; 2]], min_param_gap: f64) -> Vec<PlaneCrossing> {
    assert_eq!(u.len(), pts.len());
    let m = pts.len();
    let mut out: Vec<PlaneCrossing> = Vec::new();
    if m < 4 {
        return out;
    }
    for i in 0..m - 1 {
        let (a0, a1) = (pts[i], pts[i + 1]);
        let du_i = (u[i + 1] - u[i]).abs();
        let mid_i = 0.5 * (u[i] + u[i + 1]);
        for j in i + 2..m - 1 {
            let du_j = (u[j + 1] - u[j]).abs();
            let gap = (0.5 * (u[j] + u[j + 1]) - mid_i).abs();
            if gap <= min_param_gap.max(10.0 * du_i.max(du_j)) {
                continue;
            }
            let (b0, b1) = (pts[j], pts[j + 1]);
            if a0[0].min(a1[0]) > b0[0].max(b1[0])
                || a0[0].max(a1[0]) < b0[0].min(b1[0])
                || a0[1].min(a1[1]) > b0[1].max(b1[1])
                || a0[1].max(a1[1]) < b0[1].min(b1[1])
            {
                continue;
            }
            // a0 + t (a1-a0) = b0 + w (b1-b0), t, w in [0,1)
            let d_a = [a1[0] - a0[0], a1[1] - a0[1]];
            let d_b = [b1[0] - b0[0], b1[1] - b0[1]];
            let det = d_a[0] * d_b[1] - d_a[1] * d_b[0];
            let scale = d_a[0].hypot(d_a[1]) * d_b[0].hypot(d_b[1]);
            if det.abs() <= f64::EPSILON * 16.0 * scale {
                continue; // parallel segments
            }
            let rhs = [b0[0] - a0[0], b0[1] - a0[1]];
            let t = (rhs[0] * d_b[1] - rhs[1] * d_b[0]) / det;
            let w = (rhs[0] * d_a[1] - rhs[1] * d_a[0]) / det;
            if !(0.0..1.0).contains(&t) || !(0.0..1.0).contains(&w) {
                continue;
            }
            let crossing = PlaneCrossing {
                u_a: u[i] + t * (u[i + 1] - u[i]),
                u_b: u[j] + w * (u[j + 1] - u[j]),
                point: [a0[0] + t * d_a[0], a0[1] + t * d_a[1]],
            };
            let dup = out.iter().any(|c| {
                (c.u_a - crossing.u_a).abs() <= 1e-6 && (c.u_b - crossing.u_b).abs() <= 1e-6
            });
            if !dup {
                out.push(crossing);
            }
        }
    }
    out
}

/// Sharpen a candidate crossing by a 2×2 Newton iteration on
/// A(u) = B(v); each curve closure returns (point, tangent). Returns the
/// refined crossing once |A − B| ≤ 1e−12, or `None` when the iteration
/// leaves the curves, stalls, or the crossing is not transversal.
pub fn refine_crossing(
    curve_a: impl Fn(f64) -> Option<([f64; 2], [f64; 2])>,
    curve_b: impl Fn(f64) -> Option<([f64; 2], [f64; 2])>,
    u0: f64,
    v0: f64,
) -> Option<PlaneCrossing> {
    let (mut u, mut v) = (u0, v0);
    for _ in 0..40 {
        let (pa, ta) = curve_a(u)?;
        let (pb, tb) = curve_b(v)?;
        let res = [pa[0] - pb[0], pa[1] - pb[1]];
        let det = -ta[0] * tb[1] + ta[1] * tb[0]; // det [ta | -tb]
        let norm = ta[0].hypot(ta[1]) * tb[0].hypot(tb[1]);
        if det.abs() < TRANSVERSALITY_MIN_SIN * norm {
            return None;
        }
        if res[0].hypot(res[1]) <= CROSSING_PRECISION {
            return Some(PlaneCrossing { u_a: u, u_b: v, point: pa });
        }
        // solve [ta | -tb] (du, dv)^T = -res
        let du = (-res[0] * -tb[1] - -res[1] * -tb[0]) / det;
        let dv = (ta[0] * -res[1] - ta[1] * -res[0]) / det;
        u += du;
        v += dv;
    }
    None
}

/// All transversal self-crossings of a trajectory's profile, refined
/// through re-integrated curve evaluations to ≤ 1e−12 plane residual.
pub fn detect_self_intersection(traj: &Trajectory) -> Vec<PlaneCrossing> {
    let u: Vec<f64> = traj.samples.iter().map(|s| s.state.s).collect();
    let pts: Vec<[f64; 2]> = traj.samples.iter().map(|s| [s.state.r, s.state.z]).collect();
    let eval = |s: f64| -> Option<([f64; 2], [f64; 2])> {
        let st = traj.state_at(s).ok()?;
        Some(([st.r, st.z], [st.theta.cos(), st.theta.sin()]))
    };
    polyline_crossings(&u, &pts, 0.0)
        .into_iter()
        .filter_map(|c| refine_crossing(eval, eval, c.u_a, c.u_b))
        .collect()
}

fn seed_state(beta: f64, theta0: f64) -> Result<ProfileState, SweepError> {
    if !(beta.abs() < std::f64::consts::FRAC_PI_2 - 1e-9) {
        return Err(SweepError::InvalidSeed(format!(
            "beta = {beta} puts the seed on the axis (r0 = cos beta must be positive)"
        )));
    }
    let state = ProfileState::new(0.0, beta.cos(), beta.sin(), theta0);
    if state.psi() >= 0.0 {
        return Err(SweepError::InvalidSeed(format!(
            "seed (beta={beta}, theta0={theta0}) is off-branch: psi = {}",
            state.psi()
        )));
    }
    Ok(state)
}

fn rho_of(class: &EndClassification) -> Option<f64> {
    match &class.verdict {
        EndVerdict::CylindricalEnd { model, .. } => Some(model.rho),
        _ => None,
    }
}

/// Crossings of the combined (backward ∪ forward) profile through one
/// seed, refined against whichever trajectory owns each parameter value.
fn combined_crossings(fwd: &Trajectory, bwd: &Trajectory) -> Vec<PlaneCrossing> {
    // backward samples reversed carry s ∈ [−S, 0], forward s ∈ [0, S]:
    // one strictly monotone parameter across the junction
    let mut u = Vec::with_capacity(fwd.samples.len() + bwd.samples.len());
    let mut pts = Vec::with_capacity(u.capacity());
    for smp in bwd.samples.iter().rev() {
        u.push(smp.state.s);
        pts.push([smp.state.r, smp.state.z]);
    }
    for smp in fwd.samples.iter().skip(1) {
        u.push(smp.state.s);
        pts.push([smp.state.r, smp.state.z]);
    }
    let eval = |s: f64| -> Option<([f64; 2], [f64; 2])> {
        let traj = if s < 0.0 { bwd } else { fwd };
        let st = traj.state_at(s).ok()?;
        Some(([st.r, st.z], [st.theta.cos(), st.theta.sin()]))
    };
    polyline_crossings(&u, &pts, 0.0)
        .into_iter()
        .filter_map(|c| refine_crossing(eval, eval, c.u_a, c.u_b))
        .collect()
}

fn sweep_one(
    beta: f64,
    theta0: f64,
    params: &ExpanderParams,
    config: &IntegratorConfig,
) -> Result<SweepRow, SweepError> {
    let seed = seed_state(beta, theta0)?;
    let fwd = integrate(seed, params, config, Direction::Forward)?;
    let bwd = integrate(seed, params, config, Direction::Backward)?;
    let class_f = classify_end(&fwd);
    let class_b = classify_end(&bwd);
    let rho_forward = rho_of(&class_f);
    let rho_backward = rho_of(&class_b);
    let both_cylindrical = rho_forward.is_some() && rho_backward.is_some();
    let distinct_radii = match (rho_forward, rho_backward) {
        (Some(a), Some(b)) => (a - b).abs() > DISTINCT_RADII_REL * a.max(b),
        _ => false,
    };
    let crossings = combined_crossings(&fwd, &bwd).len();
    Ok(SweepRow {
        beta,
        theta0,
        forward: class_f.verdict,
        backward: class_b.verdict,
        rho_forward,
        rho_backward,
        crossings,
        both_cylindrical,
        distinct_radii,
        candidate: both_cylindrical && distinct_radii && crossings >= 1,
    })
}

/// Sweep the seed grid, integrating each seed both ways and classifying
/// both ends. Grid points run in parallel; rows come back in grid order
/// (β outer, θ₀ inner) regardless of scheduling.
pub fn sweep_bottle(
    beta_grid: &[f64],
    theta0_grid: &[f64],
    params: &ExpanderParams,
    config: &IntegratorConfig,
) -> Result<SweepReport, SweepError> {
    if beta_grid.is_empty() || theta0_grid.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    let mut grid = Vec::with_capacity(beta_grid.len() * theta0_grid.len());
    for &beta in beta_grid {
        for &theta0 in theta0_grid {
            seed_state(beta, theta0)?; // validate the whole grid up front
            grid.push((beta, theta0));
        }
    }
    let rows: Result<Vec<SweepRow>, SweepError> = grid
        .par_iter()
        .map(|&(beta, theta0)| sweep_one(beta, theta0, params, config))
        .collect();
    let rows = rows?;
    let candidates: Vec<usize> =
        rows.iter().enumerate().filter(|(_, r)| r.candidate).map(|(i, _)| i).collect();
    let found = !candidates.is_empty();
    Ok(SweepReport { rows, candidates, found })
}
