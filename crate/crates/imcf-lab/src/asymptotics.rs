//! End classification against the round-cylinder model.
//!
//! An end is cylindrical when the surface is eventually a normal graph
//! over a fixed round cylinder F_cyl(ω, z) = (ρ ω, z) and the graph
//! function u(z) = r(z) − ρ decays together with its weighted
//! derivatives. A finite trajectory can exhibit only a trend, never the
//! limit, so the tail is cut into successive arclength windows, six sup
//! statistics are tracked per window, and the cylindrical verdict
//! requires monotone decrease (with 5% slack) across the last three
//! windows plus absolute smallness in the final one.
//!
//! The six statistics: the graph decay measures sup |u|, sup |u_z|,
//! sup |z u_z|, and the model gaps sup |F − F_cyl|, sup |ν − ν_cyl|,
//! sup |⟨F, ν⟩ + ρ|. On a surface of revolution u_z = cot θ exactly and
//! every gap collapses to a closed form in (r, z, θ):
//!
//!   |F − F_cyl| = |u|,   |ν − ν_cyl| = √(2(1 − sin θ)),
//!   |⟨F, ν⟩ + ρ| = |ψ + ρ|,
//!
//! so no finite differencing enters. The support gap obeys the pointwise
//! bound |ψ + ρ| ≤ |u| + √(ρ² + z²) · √(2(1 − sin θ)) — two
//! Cauchy–Schwarz steps after splitting ⟨F, ν⟩ − ⟨F_cyl, ν_cyl⟩ =
//! ⟨F − F_cyl, ν⟩ + ⟨F_cyl, ν − ν_cyl⟩ — which holds for arbitrary
//! (r, z, θ), soliton or not; `support_gap_bound_check` certifies it as a
//! guard against sign or normalization drift in the statistics.
//!
//! ρ is estimated as the median of −ψ over the trailing window: on the
//! expander branch ψ is the quantity with a forced limit −ρ, and the
//! discrepancy against the cruder mean-of-r estimate doubles as a
//! convergence diagnostic.

use crate::geometry::ProfileState;
use crate::shooting::{Sample, TerminationCause, Trajectory};
use crate::numerics::median;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fraction of the arclength span used for the radius estimate.
const ESTIMATE_TAIL_FRACTION: f64 = 0.25;
/// Fraction of the arclength span carrying the windowed statistics.
const GROWTH_TAIL_FRACTION: f64 = 0.5;
/// Default number of windows for `classify_end`.
pub const DEFAULT_WINDOWS: usize = 5;
/// Allowed relative increase between successive window sups.
const TREND_SLACK: f64 = 1.05;
/// Sups below threshold × this are integrator noise (the cylinder family
/// is neutral in radius, so accepted-step noise random-walks r at the
/// 100 × rk_tol level); monotonicity is meaningless there and the trend
/// check is waived. Tying the floor to the threshold keeps it correctly
/// scaled under ambient dilation.
const TREND_FLOOR_RELATIVE: f64 = 1e-4;
/// Tails with |sin θ| below this are too tilted to be graphs over the axis.
const MIN_GRAPH_SIN: f64 = 0.05;
/// κ₁ above this at an underflow end counts as a curvature blow-up.
const CURVATURE_BLOWUP: f64 = 1e6;

#[derive(Debug, Error)]
pub enum EndError {
    #[error("trajectory ended {0:?}, not at the arclength budget")]
    WrongTermination(TerminationCause),
    #[error("tail is not a graph over the axis: {0}")]
    NotAGraphTail(String),
    #[error("window too short: {0} samples")]
    WindowTooShort(usize),
    #[error("need at least 3 windows, got {0}")]
    TooFewWindows(usize),
}

/// Round cylinder (ρ ω, z); the axis is the z-axis by the conventions of
/// the profile reduction. `z0` records where the analyzed graph domain
/// begins.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CylinderModel {
    pub rho: f64,
    pub z0: f64,
}

/// Radius estimate plus its cross-check: the median of −ψ (the model
/// value) against the mean of r, whose gap measures tail convergence.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CylinderEstimate {
    pub model: CylinderModel,
    pub rho_from_r: f64,
    pub discrepancy: f64,
}

/// Sup statistics of one trailing window, all against a fixed model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EndWindowStats {
    pub s_start: f64,
    pub s_end: f64,
    pub sup_u: f64,
    pub sup_du: f64,
    pub sup_zuz: f64,
    pub sup_position_gap: f64,
    pub sup_normal_gap: f64,
    pub sup_support_gap: f64,
}

impl EndWindowStats {
    /// The six sups in the fixed reporting order
    /// (u, du, zuz, position, normal, support).
    pub fn sups(&self) -> [f64; 6] {
        [
            self.sup_u,
            self.sup_du,
            self.sup_zuz,
            self.sup_position_gap,
            self.sup_normal_gap,
            self.sup_support_gap,
        ]
    }

    pub const NAMES: [&'static str; 6] =
        ["u", "du", "zuz", "position_gap", "normal_gap", "support_gap"];
}

/// Final-window thresholds per statistic. The dimensionless statistics
/// (u_z and the normal gap) are scale-invariant; the length-valued ones
/// scale linearly under an ambient dilation, which `scaled` applies.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowthThresholds {
    pub u: f64,
    pub du: f64,
    pub zuz: f64,
    pub position_gap: f64,
    pub normal_gap: f64,
    pub support_gap: f64,
}

impl Default for GrowthThresholds {
    fn default() -> Self {
        GrowthThresholds {
            u: 1e-3,
            du: 1e-3,
            zuz: 1e-2,
            position_gap: 1e-3,
            normal_gap: 1e-3,
            support_gap: 1e-2,
        }
    }
}

impl GrowthThresholds {
    pub fn scaled(&self, lambda: f64) -> GrowthThresholds {
        GrowthThresholds {
            u: self.u * lambda,
            du: self.du,
            zuz: self.zuz * lambda,
            position_gap: self.position_gap * lambda,
            normal_gap: self.normal_gap,
            support_gap: self.support_gap * lambda,
        }
    }

    fn as_array(&self) -> [f64; 6] {
        [self.u, self.du, self.zuz, self.position_gap, self.normal_gap, self.support_gap]
    }
}

/// Windowed statistics plus the per-condition verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub stats: Vec<EndWindowStats>,
    pub thresholds: GrowthThresholds,
    /// order: (u, du, zuz, position, normal, support)
    pub pass: [bool; 6],
    pub all_pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub enum EndVerdict {
    CylindricalEnd { model: CylinderModel, trend: EndWindowStats },
    AxisCap,
    SupportSingular,
    CurvatureSingular,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct EndClassification {
    pub verdict: EndVerdict,
    pub evidence: Vec<EndWindowStats>,
}

/// Samples whose arclength lies within the trailing `fraction` of the span.
fn tail_of(traj: &Trajectory, fraction: f64) -> &[Sample] {
    let (s0, s1) = traj.arc_span();
    let cut = fraction * (s1 - s0).abs();
    let start = traj
        .samples
        .iter()
        .position(|smp| (smp.state.s - s1).abs() <= cut)
        .unwrap_or(traj.samples.len() - 1);
    &traj.samples[start..]
}

fn graph_check(tail: &[Sample]) -> Result<(), EndError> {
    let mut sign = 0.0_f64;
    for smp in tail {
        let sin_t = smp.state.theta.sin();
        if sin_t.abs() < MIN_GRAPH_SIN {
            return Err(EndError::NotAGraphTail(format!(
                "|sin theta| = {} at s = {}",
                sin_t.abs(),
                smp.state.s
            )));
        }
        if sign == 0.0 {
            sign = sin_t.signum();
        } else if sin_t.signum() != sign {
            return Err(EndError::NotAGraphTail(format!(
                "sin theta changes sign at s = {}",
                smp.state.s
            )));
        }
    }
    Ok(())
}

/// Fit the round-cylinder model to the trailing quarter of a trajectory
/// that exhausted its arclength budget.
pub fn estimate_cylinder(traj: &Trajectory) -> Result<CylinderEstimate, EndError> {
    if traj.termination != TerminationCause::ReachedSMax {
        return Err(EndError::WrongTermination(traj.termination));
    }
    let tail = tail_of(traj, ESTIMATE_TAIL_FRACTION);
    if tail.len() < 16 {
        return Err(EndError::WindowTooShort(tail.len()));
    }
    graph_check(tail)?;
    let rho = median(&tail.iter().map(|s| -s.state.psi()).collect::<Vec<_>>());
    if !(rho > 0.0) {
        return Err(EndError::NotAGraphTail(format!("support limit estimate {rho} is not positive")));
    }
    let rho_from_r = tail.iter().map(|s| s.state.r).sum::<f64>() / tail.len() as f64;
    Ok(CylinderEstimate {
        model: CylinderModel { rho, z0: tail[0].state.z },
        rho_from_r,
        discrepancy: (rho - rho_from_r).abs(),
    })
}

fn window_stats(window: &[Sample], model: &CylinderModel) -> EndWindowStats {
    let mut st = EndWindowStats {
        s_start: window[0].state.s,
        s_end: window[window.len() - 1].state.s,
        sup_u: 0.0,
        sup_du: 0.0,
        sup_zuz: 0.0,
        sup_position_gap: 0.0,
        sup_normal_gap: 0.0,
        sup_support_gap: 0.0,
    };
    for smp in window {
        let ProfileState { r, z, theta, .. } = smp.state;
        let (sin_t, cos_t) = theta.sin_cos();
        let u = r - model.rho;
        let du = cos_t / sin_t;
        st.sup_u = st.sup_u.max(u.abs());
        st.sup_du = st.sup_du.max(du.abs());
        st.sup_zuz = st.sup_zuz.max((z * du).abs());
        // rotational collapse: |F - F_cyl| = |u| pointwise
        st.sup_position_gap = st.sup_position_gap.max(u.abs());
        st.sup_normal_gap = st.sup_normal_gap.max((2.0 * (1.0 - sin_t)).max(0.0).sqrt());
        st.sup_support_gap = st.sup_support_gap.max((smp.state.psi() + model.rho).abs());
    }
    st
}

fn trend_ok(values: &[f64], floor: f64) -> bool {
    let last = *values.last().unwrap();
    if last <= floor {
        return true;
    }
    let k = values.len();
    (k.saturating_sub(3)..k - 1).all(|i| values[i + 1] <= TREND_SLACK * values[i])
}

/// Windowed decay statistics of the tail against a fixed cylinder model.
/// Each of the six conditions passes when its sups decrease monotonically
/// (5% slack, or at rounding floor) over the last three windows and the
/// final window is below its threshold.
pub fn check_growth_conditions(
    traj: &Trajectory,
    model: &CylinderModel,
    windows: usize,
    thresholds: &GrowthThresholds,
) -> Result<GrowthReport, EndError> {
    if windows < 3 {
        return Err(EndError::TooFewWindows(windows));
    }
    let tail = tail_of(traj, GROWTH_TAIL_FRACTION);
    if tail.len() < 4 * windows {
        return Err(EndError::WindowTooShort(tail.len()));
    }
    graph_check(tail)?;
    let s_a = tail[0].state.s;
    let s_b = tail[tail.len() - 1].state.s;
    let mut stats = Vec::with_capacity(windows);
    let mut begin = 0usize;
    for w in 0..windows {
        let s_cut = s_a + (s_b - s_a) * (w + 1) as f64 / windows as f64;
        let mut end = begin;
        while end < tail.len() && ((tail[end].state.s - s_a) / (s_b - s_a)).abs() * windows as f64 <= (w + 1) as f64 + 1e-12 {
            end += 1;
        }
        let _ = s_cut;
        if w == windows - 1 {
            end = tail.len();
        }
        if end - begin < 4 {
            return Err(EndError::WindowTooShort(end - begin));
        }
        stats.push(window_stats(&tail[begin..end], model));
        begin = end;
    }
    let th = thresholds.as_array();
    let mut pass = [false; 6];
    for i in 0..6 {
        let series: Vec<f64> = stats.iter().map(|s| s.sups()[i]).collect();
        pass[i] = trend_ok(&series, TREND_FLOOR_RELATIVE * th[i]) && *series.last().unwrap() <= th[i];
    }
    Ok(GrowthReport { stats, thresholds: *thresholds, pass, all_pass: pass.iter().all(|&p| p) })
}

/// Max violation of the pointwise support-gap bound
/// |ψ + ρ| ≤ |u| + √(ρ² + z²) √(2(1 − sin θ)) over the trailing half.
/// The bound is forced by Cauchy–Schwarz for arbitrary states, so any
/// positive return beyond rounding exposes an implementation error.
pub fn support_gap_bound_check(traj: &Trajectory, model: &CylinderModel) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for smp in tail_of(traj, GROWTH_TAIL_FRACTION) {
        let ProfileState { r, z, theta, .. } = smp.state;
        let sin_t = theta.sin();
        let lhs = (smp.state.psi() + model.rho).abs();
        let rhs = (r - model.rho).abs()
            + model.rho.hypot(z) * (2.0 * (1.0 - sin_t)).max(0.0).sqrt();
        worst = worst.max(lhs - rhs);
    }
    worst
}

/// Classify a completed trajectory end. Terminal events map directly;
/// an exhausted arclength budget triggers the cylinder fit, with
/// thresholds scaled by the estimated radius so the verdict is invariant
/// under ambient dilation.
pub fn classify_end(traj: &Trajectory) -> EndClassification {
    match traj.termination {
        TerminationCause::AxisCap => {
            EndClassification { verdict: EndVerdict::AxisCap, evidence: Vec::new() }
        }
        TerminationCause::SupportVanishing => {
            EndClassification { verdict: EndVerdict::SupportSingular, evidence: Vec::new() }
        }
        // the rotational curvature sin θ / r diverges at a non-cap axis
        // meeting, so this is a curvature singularity
        TerminationCause::AxisHit => {
            EndClassification { verdict: EndVerdict::CurvatureSingular, evidence: Vec::new() }
        }
        TerminationCause::StepUnderflow => {
            let verdict = if traj.end().geom.kappa1.abs() > CURVATURE_BLOWUP {
                EndVerdict::CurvatureSingular
            } else {
                EndVerdict::Inconclusive
            };
            EndClassification { verdict, evidence: Vec::new() }
        }
        TerminationCause::NumericalFailure => {
            EndClassification { verdict: EndVerdict::Inconclusive, evidence: Vec::new() }
        }
        TerminationCause::ReachedSMax => {
            let est = match estimate_cylinder(traj) {
                Ok(e) => e,
                Err(_) => {
                    return EndClassification {
                        verdict: EndVerdict::Inconclusive,
                        evidence: Vec::new(),
                    }
                }
            };
            let thresholds = GrowthThresholds::default().scaled(est.model.rho);
            match check_growth_conditions(traj, &est.model, DEFAULT_WINDOWS, &thresholds) {
                Ok(rep) if rep.all_pass => EndClassification {
                    verdict: EndVerdict::CylindricalEnd {
                        model: est.model,
                        trend: *rep.stats.last().unwrap(),
                    },
                    evidence: rep.stats,
                },
                Ok(rep) => EndClassification {
                    verdict: EndVerdict::Inconclusive,
                    evidence: rep.stats,
                },
                Err(_) => EndClassification {
                    verdict: EndVerdict::Inconclusive,
                    evidence: Vec::new(),
                },
            }
        }
    }
}
