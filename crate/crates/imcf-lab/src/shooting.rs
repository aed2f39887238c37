//! Adaptive integration of the profile ODE with event detection.
//!
//! The integrator is an embedded Dormand–Prince 5(4) pair (FSAL) with a
//! PI step-size controller and a scaled RMS error norm. Trajectories end
//! in one of six ways:
//!
//! * `ReachedSMax` — the arclength budget ran out while the solution was
//!   still healthy (the asymptotically cylindrical case).
//! * `AxisCap` — the profile met the rotation axis with θ ≡ 0 (mod π):
//!   a smooth cap, as on the round sphere.
//! * `AxisHit` — the profile met the axis at a genuine angle. The
//!   rotational curvature sin θ / r diverges there. (Dynamically this is
//!   almost impossible: near the axis the −(n−1) sin θ / r term in θ'
//!   dominates and deflects any profile with sin θ ≠ 0 into a turnaround
//!   before r reaches 0, so smooth caps are the only axis meetings; the
//!   variant exists for robustness against corrupt or off-branch input.)
//! * `SupportVanishing` — ψ → 0⁻ in finite arclength with curvature
//!   blow-up. Near such a death ψ has a square-root singularity,
//!   ψ(s) ≈ −√(2|g|(s*−s)/C), so no representable step lands on
//!   |ψ| ≤ 1e−10 directly; the integrator stops at a barrier
//!   ψ = −1e−7 and finishes with one analytic endgame step of the local
//!   model (ψ² linear in s, θ solved pointwise), which is accurate to
//!   O(ψ_barrier²) ≈ 1e−14 in arclength.
//! * `StepUnderflow` — the controller collapsed below `h_min` for a
//!   reason the endgames cannot classify.
//! * `NumericalFailure` — NaN/∞ or the step budget was exhausted.
//!
//! Axis events are refined by safeguarded Newton iteration on r(s) = 0
//! (each trial evaluation re-integrates from the last good state), and
//! terminal samples satisfy |r| ≤ 1e−10 resp. |ψ| ≤ 1e−10.
//!
//! Inbound axis approaches are ill-conditioned: the deviation of θ from
//! a multiple of π carries a homogeneous r^{−(n−1)} mode, so integrating
//! a cap all the way in amplifies accumulated tolerance-scale noise by
//! (r_from/r_to)^{n−1} — fatally for n ≥ 3. A cap-consistent approach is
//! therefore recognised early (r ≈ 5e−3, tangent offset matching the
//! regular cap mode) and finished with one analytic step of the local
//! cap model, whose closure error is ≲ 1e−10.

use crate::geometry::{
    geometric_sample, geometric_sample_with_kappa1, ode_rhs, ExpanderParams, GeometricSample,
    GeometryError, ProfileState,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_RK_TOL: f64 = 1e-10;
pub const DEFAULT_S_MAX: f64 = 200.0;
pub const DEFAULT_STARTUP_EPS: f64 = 1e-6;

/// Support-function barrier that arms the vanishing-support endgame.
const PSI_BARRIER: f64 = 1e-7;
/// Target |r| and |psi| at refined terminal samples.
const EVENT_PRECISION: f64 = 1e-10;
/// Angular distance from 0 (mod pi) below which an axis meeting is a cap.
const CAP_ANGLE_TOL: f64 = 1e-3;
/// Radius that arms axis-event refinement while θ is still trustworthy.
/// The θ-equation has a +cos θ (n−1)/r ≈ +1/r instability toward the
/// axis, so θ errors accumulated between radii amplify like r_from/r_to;
/// detecting early keeps the classification honest.
const AXIS_DETECT_RADIUS: f64 = 1e-5;
/// Radius at which the classification angle is recorded: small enough
/// that a smooth cap's own angular offset (≈ κ·r) is ≤ 1e−4 for κ ≤ 100,
/// large enough that amplified integration noise is also ≤ 1e−4.
const AXIS_CLASSIFY_RADIUS: f64 = 1e-6;
/// Radius that arms the early cap event. Near θ = kπ the tangent
/// deviation u = θ − kπ obeys du/dr = ±h − (n−1)u/r, whose homogeneous
/// mode u ∝ r^{−(n−1)} amplifies upstream θ noise by (r_from/r_to)^{n−1}
/// on the way in: waiting until r = AXIS_DETECT_RADIUS multiplies
/// rk_tol-scale noise past CAP_ANGLE_TOL for n ≥ 3. At 5e−3 the
/// amplification from unit scale is ≤ (200)^{n−1}·ε ≈ 1e−6 even at
/// n = 5, while the analytic closure error from here is ≲ 1e−10.
const CAP_DETECT_RADIUS: f64 = 5e-3;
/// Slack factor on the cap-model offset |u| ≈ (h/n)·r accepted by the
/// early cap gate; covers the O(r³) profile correction and detection
/// falling mid-step rather than exactly at CAP_DETECT_RADIUS.
const CAP_SLOPE_SLACK: f64 = 4.0;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// local error tolerance (absolute and relative)
    pub rk_tol: f64,
    /// arclength budget measured from the initial state
    pub s_max: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// arclength of the series startup point for cap shots
    pub startup_eps: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rk_tol: DEFAULT_RK_TOL,
            s_max: DEFAULT_S_MAX,
            h_min: 1e-13,
            h_max: 1.0,
            startup_eps: DEFAULT_STARTUP_EPS,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), ShootError> {
        if !(self.h_min > 0.0 && self.h_min < self.h_max && self.h_max < self.s_max) {
            return Err(ShootError::InvalidConfig(format!(
                "need 0 < h_min < h_max < s_max, got h_min={} h_max={} s_max={}",
                self.h_min, self.h_max, self.s_max
            )));
        }
        if !(self.rk_tol > 1e-15 && self.rk_tol < 1e-2) {
            return Err(ShootError::InvalidConfig(format!("rk_tol out of range: {}", self.rk_tol)));
        }
        if !(self.startup_eps > 0.0 && self.startup_eps <= 1e-1) {
            return Err(ShootError::InvalidConfig(format!(
                "startup_eps out of range: {}",
                self.startup_eps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationCause {
    ReachedSMax,
    AxisHit,
    AxisCap,
    SupportVanishing,
    StepUnderflow,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(&self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub state: ProfileState,
    pub geom: GeometricSample,
}

#[derive(Debug, Error)]
pub enum ShootError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid cap height: z0 must be negative, got {0}")]
    InvalidCap(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("integration failure: {0}")]
    Numerical(String),
}

/// An integrated profile trajectory: accepted-step samples (strictly
/// monotone in s, ψ < 0 at each), the cause of termination, and enough
/// context to re-integrate (event refinement, resampling).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: ExpanderParams,
    pub config: IntegratorConfig,
    pub direction: Direction,
    pub samples: Vec<Sample>,
    pub termination: TerminationCause,
    /// Earliest sample that is a genuine ODE state (cap shots prepend a
    /// synthetic axis sample that cannot seed re-integration).
    restart_index: usize,
}

type Y = [f64; 3]; // (r, z, theta)

fn state_of(s: f64, y: &Y) -> ProfileState {
    ProfileState::new(s, y[0], y[1], y[2])
}

fn psi_of(y: &Y) -> f64 {
    y[1] * y[2].cos() - y[0] * y[2].sin()
}

fn g_of(y: &Y) -> f64 {
    y[0] * y[2].cos() + y[1] * y[2].sin()
}

// Dormand-Prince 5(4) tableau (the ODE is autonomous: no stage abscissae)
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Stepper<'a> {
    params: &'a ExpanderParams,
    dir: f64,
    tol: f64,
}

enum StepOutcome {
    Accepted { y: Y, err: f64, k_end: Y },
    ErrReject { err: f64 },
    RhsReject,
}

impl<'a> Stepper<'a> {
    fn rhs(&self, y: &Y) -> Result<Y, GeometryError> {
        let f = ode_rhs(&state_of(0.0, y), self.params)?;
        Ok([self.dir * f[0], self.dir * f[1], self.dir * f[2]])
    }

    /// One trial Dormand-Prince step of size h (in traversed arclength)
    /// from y with cached derivative k1 = rhs(y).
    fn try_step(&self, y: &Y, k1: &Y, h: f64) -> StepOutcome {
        let add = |y: &Y, coeffs: &[(f64, &Y)]| -> Y {
            let mut out = *y;
            for (c, k) in coeffs {
                for i in 0..3 {
                    out[i] += h * c * k[i];
                }
            }
            out
        };
        macro_rules! stage {
            ($y:expr) => {
                match self.rhs(&$y) {
                    Ok(k) => k,
                    Err(_) => return StepOutcome::RhsReject,
                }
            };
        }
        let k2 = stage!(add(y, &[(A21, k1)]));
        let k3 = stage!(add(y, &[(A31, k1), (A32, &k2)]));
        let k4 = stage!(add(y, &[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = stage!(add(y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = stage!(add(y, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y5 = add(y, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = stage!(y5);
        let mut err = 0.0;
        for i in 0..3 {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.tol + self.tol * y[i].abs().max(y5[i].abs());
            let q = e / scale;
            err += q * q;
        }
        let err = (err / 3.0).sqrt();
        if !err.is_finite() {
            return StepOutcome::ErrReject { err: f64::INFINITY };
        }
        if err > 1.0 {
            StepOutcome::ErrReject { err }
        } else {
            StepOutcome::Accepted { y: y5, err, k_end: k7 }
        }
    }

    /// Integrate from (s0, y0) to exactly s1 with no event checks; used
    /// for event refinement and resampling inside already-accepted spans.
    fn advance(&self, y0: &Y, s0: f64, s1: f64, cfg: &IntegratorConfig) -> Result<Y, ShootError> {
        let total = (s1 - s0) * self.dir;
        if total < 0.0 {
            return Err(ShootError::Numerical("advance target behind start".into()));
        }
        if total == 0.0 {
            return Ok(*y0);
        }
        let mut y = *y0;
        let mut tau = 0.0;
        let mut k1 = self.rhs(&y).map_err(ShootError::Geometry)?;
        let mut h = (total / 4.0).min(cfg.h_max).max(cfg.h_min);
        let mut err_prev: f64 = 1e-4;
        for _ in 0..200_000 {
            let mut last = false;
            if tau + h >= total {
                h = total - tau;
                last = true;
            }
            if h <= 0.0 {
                return Ok(y);
            }
            match self.try_step(&y, &k1, h) {
                StepOutcome::Accepted { y: ynew, err, k_end } => {
                    y = ynew;
                    tau += h;
                    k1 = k_end;
                    if last {
                        return Ok(y);
                    }
                    let fac = (0.9 * err.max(1e-10).powf(-0.17) * err_prev.powf(0.04))
                        .clamp(0.2, 5.0);
                    err_prev = err.max(1e-10);
                    h = (h * fac).min(cfg.h_max);
                }
                StepOutcome::ErrReject { err } => {
                    h *= (0.9 * err.powf(-0.2)).clamp(0.2, 0.9);
                    if h < cfg.h_min {
                        return Err(ShootError::Numerical("step underflow in advance".into()));
                    }
                }
                StepOutcome::RhsReject => {
                    h *= 0.5;
                    if h < cfg.h_min {
                        return Err(ShootError::Numerical(
                            "domain boundary reached in advance".into(),
                        ));
                    }
                }
            }
        }
        Err(ShootError::Numerical("step budget exhausted in advance".into()))
    }
}

fn angle_from_axis_multiple(theta: f64) -> f64 {
    let t = theta.rem_euclid(std::f64::consts::PI);
    t.min(std::f64::consts::PI - t)
}

/// Integrate the profile ODE from an explicit initial state until an
/// event fires or the arclength budget `config.s_max` is spent.
pub fn integrate(
    initial: ProfileState,
    params: &ExpanderParams,
    config: &IntegratorConfig,
    direction: Direction,
) -> Result<Trajectory, ShootError> {
    config.validate()?;
    let geom0 = geometric_sample(&initial, params)?;
    let mut samples = vec![Sample { state: initial, geom: geom0 }];
    let termination = run_core(initial, params, config, direction, &mut samples)?;
    Ok(Trajectory { params: *params, config: *config, direction, samples, termination, restart_index: 0 })
}

fn run_core(
    initial: ProfileState,
    params: &ExpanderParams,
    config: &IntegratorConfig,
    direction: Direction,
    samples: &mut Vec<Sample>,
) -> Result<TerminationCause, ShootError> {
    let stepper = Stepper { params, dir: direction.sign(), tol: config.rk_tol };
    let mut y: Y = [initial.r, initial.z, initial.theta];
    let mut s = initial.s;
    let s_end = initial.s + direction.sign() * config.s_max;
    let mut k1 = stepper.rhs(&y).map_err(ShootError::Geometry)?;
    let rhs_norm = k1.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut h = (1e-2 / (1.0 + rhs_norm)).clamp(config.h_min * 10.0, config.h_max);
    let mut err_prev: f64 = 1e-4;

    for _ in 0..5_000_000 {
        let remaining = (s_end - s) * stepper.dir;
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        match stepper.try_step(&y, &k1, h) {
            StepOutcome::Accepted { y: ynew, err, k_end } => {
                if ynew.iter().any(|v| !v.is_finite()) {
                    return Ok(TerminationCause::NumericalFailure);
                }
                let s_new = if last { s_end } else { s + stepper.dir * h };
                // events inside the accepted span [s, s_new]
                let psi_new = psi_of(&ynew);
                let r_event = ynew[0] <= AXIS_DETECT_RADIUS && k_end[0] < 0.0;
                let cap_event = !r_event
                    && ynew[0] <= CAP_DETECT_RADIUS
                    && k_end[0] < 0.0
                    && cap_approach(params, &ynew);
                let psi_event = psi_new >= -PSI_BARRIER;
                if r_event || cap_event || psi_event {
                    let mut terminals: Vec<EventTerminal> = Vec::new();
                    if r_event {
                        if let Some(t) = refine_axis(&stepper, config, &y, s) {
                            terminals.push(t);
                        }
                    }
                    if cap_event {
                        terminals.push(close_cap(&ynew, s_new, stepper.dir));
                    }
                    if psi_event {
                        // locate the barrier crossing, then take the
                        // analytic endgame step
                        let (s_b, y_b) =
                            refine_barrier(&stepper, config, &y, s, &ynew, s_new);
                        if let Some(t) = support_endgame(params, &y_b, s_b, stepper.dir) {
                            terminals.push(t);
                        }
                    }
                    if let Some(term) = terminals.into_iter().min_by(|a, b| {
                        ((a.s - s) * stepper.dir).partial_cmp(&((b.s - s) * stepper.dir)).unwrap()
                    }) {
                        return Ok(finish_event(samples, params, term));
                    }
                    // no refinement confirmed an event: keep integrating
                }
                y = ynew;
                s = s_new;
                k1 = k_end;
                let st = state_of(s, &y);
                samples.push(Sample { state: st, geom: geometric_sample(&st, params)? });
                if last {
                    return Ok(TerminationCause::ReachedSMax);
                }
                let fac =
                    (0.9 * err.max(1e-10).powf(-0.17) * err_prev.powf(0.04)).clamp(0.2, 5.0);
                err_prev = err.max(1e-10);
                h = (h * fac).min(config.h_max);
            }
            StepOutcome::ErrReject { err } => {
                if !err.is_finite() {
                    return Ok(TerminationCause::NumericalFailure);
                }
                h *= (0.9 * err.powf(-0.2)).clamp(0.2, 0.9);
                if h < config.h_min {
                    return Ok(diagnose_underflow(&stepper, config, params, samples, &y, s));
                }
            }
            StepOutcome::RhsReject => {
                h *= 0.5;
                if h < config.h_min {
                    return Ok(diagnose_underflow(&stepper, config, params, samples, &y, s));
                }
            }
        }
    }
    Ok(TerminationCause::NumericalFailure)
}

/// A refined event endpoint, ready to become the terminal sample.
#[derive(Debug, Clone, Copy)]
struct EventTerminal {
    s: f64,
    y: Y,
    kind: EventKind,
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    /// Axis meeting. `theta_cls` is the tangent angle recorded at radius
    /// ≈ AXIS_CLASSIFY_RADIUS on the way in, where it is still reliable;
    /// θ inside `y` itself is amplifier noise by r = 1e−10 and must not
    /// be used for cap classification.
    Axis { theta_cls: f64 },
    Support,
}

/// Append the terminal sample for a refined event and name its cause.
///
/// Axis caps are reported in their exact limit: θ snapped to the nearest
/// multiple of π and the umbilic curvatures κ₁ = κ₂ = H/n with
/// H = −1/(Cψ) — mirroring the synthetic cap sample that `shoot_axis`
/// starts from, and replacing the instability-polluted integrated θ.
fn finish_event(
    samples: &mut Vec<Sample>,
    params: &ExpanderParams,
    term: EventTerminal,
) -> TerminationCause {
    let push_raw = |samples: &mut Vec<Sample>, st: ProfileState| {
        let geom = geometric_sample(&st, params)
            .unwrap_or_else(|_| geometric_sample_with_kappa1(&st, params.n, f64::NAN));
        samples.push(Sample { state: st, geom });
    };
    match term.kind {
        EventKind::Support => {
            push_raw(samples, state_of(term.s, &term.y));
            TerminationCause::SupportVanishing
        }
        EventKind::Axis { theta_cls } if angle_from_axis_multiple(theta_cls) <= CAP_ANGLE_TOL => {
            let pi = std::f64::consts::PI;
            let theta_t = (theta_cls / pi).round() * pi;
            let st = ProfileState::new(term.s, term.y[0], term.y[1], theta_t);
            let psi = st.psi();
            let h = -1.0 / (params.c * psi);
            let a = h / params.n as f64;
            let geom = GeometricSample {
                kappa1: a,
                kappa2: a,
                h,
                a2: params.n as f64 * a * a,
                psi,
                g: st.g(),
            };
            samples.push(Sample { state: st, geom });
            TerminationCause::AxisCap
        }
        EventKind::Axis { .. } => {
            push_raw(samples, state_of(term.s, &term.y));
            TerminationCause::AxisHit
        }
    }
}

/// Step-size collapse without a detected event: see whether the state
/// explains it (support about to vanish, or an axis meeting), otherwise
/// report the underflow itself.
fn diagnose_underflow(
    stepper: &Stepper,
    config: &IntegratorConfig,
    params: &ExpanderParams,
    samples: &mut Vec<Sample>,
    y: &Y,
    s: f64,
) -> TerminationCause {
    let psi = psi_of(y);
    if psi > -1e-5 && g_of(y).abs() > 1e-9 {
        if let Some(term) = support_endgame(params, y, s, stepper.dir) {
            return finish_event(samples, params, term);
        }
    }
    if y[0] < 1e-4 {
        if let Some(term) = refine_axis(stepper, config, y, s) {
            return finish_event(samples, params, term);
        }
    }
    TerminationCause::StepUnderflow
}

/// Whether a state inside CAP_DETECT_RADIUS is on a cap-consistent axis
/// approach: tangent nearly parallel to the axis, with the offset from
/// kπ matching the regular cap mode u = ±(h/n)·r up to CAP_SLOPE_SLACK.
/// Solutions of du/dr = ±h − (n−1)u/r that stay inside this cone as
/// r → 0 carry no r^{−(n−1)} component above ≈ CAP_SLOPE_SLACK·h/n·r^n,
/// so they close as smooth caps to well below EVENT_PRECISION; anything
/// with a larger singular component leaves the cone before reaching
/// AXIS_DETECT_RADIUS and keeps integrating.
fn cap_approach(params: &ExpanderParams, y: &Y) -> bool {
    let psi = psi_of(y);
    if psi >= 0.0 {
        return false;
    }
    let a_loc = -1.0 / (params.n as f64 * params.c * psi);
    let delta = angle_from_axis_multiple(y[2]);
    delta <= 0.3 && delta <= (CAP_SLOPE_SLACK * a_loc).max(1.0) * y[0]
}

/// Close a cap-consistent approach analytically from r ≈ CAP_DETECT_RADIUS.
/// The local model θ = kπ + slope·r gives dz/dr = ±tan(slope·r) and
/// ds/dr = ±1/cos(slope·r); integrating to r_t keeps the position error
/// at O((slope·r)⁴·r) ≲ 1e−10 — far better than grinding the ODE in,
/// which would amplify θ noise by (r/r_t)^{n−1}. The recorded
/// classification angle is the model's own value at r_t, where a cap's
/// offset is ≪ CAP_ANGLE_TOL.
fn close_cap(y: &Y, s: f64, dir: f64) -> EventTerminal {
    let pi = std::f64::consts::PI;
    let k = (y[2] / pi).round();
    let slope = (y[2] - k * pi) / y[0];
    let r_t = 0.5 * EVENT_PRECISION;
    let s_t = s + dir * ((y[0] - r_t) + slope * slope * (y[0].powi(3) - r_t.powi(3)) / 6.0);
    let z_t = y[1] + slope * (r_t * r_t - y[0] * y[0]) / 2.0;
    let theta_t = k * pi + slope * r_t;
    EventTerminal { s: s_t, y: [r_t, z_t, theta_t], kind: EventKind::Axis { theta_cls: theta_t } }
}

/// Refine an axis meeting r(s*) = 0 starting from the last state with
/// r > 0. The ODE walk stops at r ≈ AXIS_CLASSIFY_RADIUS, where the
/// tangent angle is still reliable; a confirmed cap then finishes with
/// one analytic step of the local cap model θ = kπ + slope·r (so
/// dz/dr = tan θ ≈ slope·r and |dr/ds| = 1 + O((slope·r)²), with model
/// error far below EVENT_PRECISION from r ≤ 1e−6). Only the robustness
/// path for a genuine-angle hit grinds the raw ODE further in.
fn refine_axis(
    stepper: &Stepper,
    config: &IntegratorConfig,
    y0: &Y,
    s0: f64,
) -> Option<EventTerminal> {
    let mut lo = (s0, *y0);
    if lo.1[0] > AXIS_CLASSIFY_RADIUS {
        lo = newton_walk_in(stepper, config, lo, AXIS_CLASSIFY_RADIUS)?;
    }
    let theta_cls = lo.1[2];
    if angle_from_axis_multiple(theta_cls) <= CAP_ANGLE_TOL {
        let pi = std::f64::consts::PI;
        let k = (theta_cls / pi).round();
        let slope = (theta_cls - k * pi) / lo.1[0];
        let r_t = 0.5 * EVENT_PRECISION;
        let s_t = lo.0 + stepper.dir * (lo.1[0] - r_t);
        let z_t = lo.1[1] + slope * (r_t * r_t - lo.1[0] * lo.1[0]) / 2.0;
        let y_t = [r_t, z_t, k * pi + slope * r_t];
        return Some(EventTerminal { s: s_t, y: y_t, kind: EventKind::Axis { theta_cls } });
    }
    let lo = newton_walk_in(stepper, config, lo, 0.5 * EVENT_PRECISION)?;
    (lo.1[0] <= EVENT_PRECISION)
        .then_some(EventTerminal { s: lo.0, y: lo.1, kind: EventKind::Axis { theta_cls } })
}

/// Safeguarded Newton walk toward r = target along the ODE. Trial
/// evaluations re-integrate from the last good state; trials that step
/// past the axis fail their stage evaluations and tighten the upper
/// bracket instead. Returns the first state with r ≤ target, or the best
/// bracketed state once s-increments degenerate; `None` if the profile
/// stops approaching the axis (a near-miss, not an event).
fn newton_walk_in(
    stepper: &Stepper,
    config: &IntegratorConfig,
    start: (f64, Y),
    target: f64,
) -> Option<(f64, Y)> {
    let mut lo = start;
    let mut hi: Option<f64> = None;
    for _ in 0..80 {
        let r = lo.1[0];
        if r <= target {
            return Some(lo);
        }
        let drds = match stepper.rhs(&lo.1) {
            Ok(k) => k[0],
            Err(_) => return None,
        };
        if drds >= 0.0 {
            return None;
        }
        // Newton proposal toward r = target/2, safeguarded by the bracket
        let mut s_prop = lo.0 + stepper.dir * ((r - 0.5 * target) / -drds);
        if let Some(h) = hi {
            if (s_prop - h) * stepper.dir >= 0.0 || (s_prop - lo.0) * stepper.dir <= 0.0 {
                s_prop = 0.5 * (lo.0 + h);
            }
        }
        if (s_prop - lo.0) * stepper.dir <= 0.0 {
            return Some(lo); // working precision in s
        }
        match stepper.advance(&lo.1, lo.0, s_prop, config) {
            Ok(y) if y[0] > 0.0 => lo = (s_prop, y),
            _ => hi = Some(s_prop),
        }
    }
    Some(lo)
}

/// Bisect the crossing of the barrier ψ = −PSI_BARRIER inside an
/// accepted step, to 1e−12 in arclength.
fn refine_barrier(
    stepper: &Stepper,
    config: &IntegratorConfig,
    y0: &Y,
    s0: f64,
    y1: &Y,
    s1: f64,
) -> (f64, Y) {
    if psi_of(y0) >= -PSI_BARRIER {
        return (s0, *y0);
    }
    let mut lo = (s0, *y0);
    let mut hi_s = s1;
    let mut best_hi: Option<(f64, Y)> = None;
    for _ in 0..80 {
        if (hi_s - lo.0).abs() <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo.0 + hi_s);
        match stepper.advance(&lo.1, lo.0, mid, config) {
            Ok(y) => {
                if psi_of(&y) < -PSI_BARRIER {
                    lo = (mid, y);
                } else {
                    hi_s = mid;
                    best_hi = Some((mid, y));
                }
            }
            Err(_) => {
                hi_s = mid;
            }
        }
    }
    // prefer the first state at or past the barrier (still psi < 0)
    if let Some((s, y)) = best_hi {
        if psi_of(&y) < 0.0 {
            return (s, y);
        }
    }
    let _ = y1;
    lo
}

/// Analytic endgame for a vanishing-support death. Near ψ → 0⁻ the
/// dominant balance θ' ≈ −1/(Cψ) gives d(ψ²)/dτ = −2|g|/C, so the death
/// lies Δτ = C ψ_b² / (2|g_b|) past the barrier state; r and z move by
/// O(Δτ) ≈ 1e−14 and are frozen, while θ is solved pointwise from
/// ψ(r, z, θ*) = −1e−12 by Newton iteration (dψ/dθ = −g).
fn support_endgame(params: &ExpanderParams, y_b: &Y, s_b: f64, dir: f64) -> Option<EventTerminal> {
    let psi_b = psi_of(y_b);
    let g_b = g_of(y_b);
    // ψ' = −κ₁ g with κ₁ → +∞ near the death, so ψ can only reach 0 when
    // g and the direction of travel disagree in sign
    if psi_b >= 0.0 || g_b.abs() < 1e-9 || dir * g_b > 0.0 {
        return None;
    }
    let dtau = params.c * psi_b * psi_b / (2.0 * g_b.abs());
    let s_star = s_b + dir * dtau;
    let target = -1e-12;
    let mut th = y_b[2];
    for _ in 0..40 {
        let (sin_t, cos_t) = th.sin_cos();
        let psi = y_b[1] * cos_t - y_b[0] * sin_t;
        let dpsi = -(y_b[0] * cos_t + y_b[1] * sin_t);
        if dpsi.abs() < 1e-12 {
            return None;
        }
        let step = (psi - target) / dpsi;
        th -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    let y_t = [y_b[0], y_b[1], th];
    (psi_of(&y_t) < 0.0 && psi_of(&y_t).abs() <= EVENT_PRECISION)
        .then_some(EventTerminal { s: s_star, y: y_t, kind: EventKind::Support })
}

/// Shoot from a smooth axis cap at height z0 < 0. At the cap the surface
/// is umbilic with H = −1/(C z0) and θ'(0) = H/n; the integration starts
/// at arclength ε = `startup_eps` from the series
/// r = ε, z = z0 + (H/2n) ε², θ = (H/n) ε (error O(ε³)), and the exact
/// axis point (0, z0) is prepended as a synthetic first sample.
pub fn shoot_axis(
    z0: f64,
    params: &ExpanderParams,
    config: &IntegratorConfig,
) -> Result<Trajectory, ShootError> {
    config.validate()?;
    if !(z0 < 0.0) {
        return Err(ShootError::InvalidCap(z0));
    }
    let h0 = -1.0 / (params.c * z0);
    let a = h0 / params.n as f64;
    let eps = config.startup_eps;
    let start = ProfileState::new(eps, eps, z0 + 0.5 * a * eps * eps, a * eps);
    let geom_start = geometric_sample(&start, params)?;

    let cap_state = ProfileState::new(0.0, 0.0, z0, 0.0);
    let nm1 = params.n as f64 - 1.0;
    let cap_geom = GeometricSample {
        kappa1: a,
        kappa2: a,
        h: h0,
        a2: a * a + nm1 * a * a,
        psi: z0,
        g: 0.0,
    };

    let mut samples = vec![Sample { state: cap_state, geom: cap_geom }, Sample { state: start, geom: geom_start }];
    let termination = run_core(start, params, config, Direction::Forward, &mut samples)?;
    Ok(Trajectory {
        params: *params,
        config: *config,
        direction: Direction::Forward,
        samples,
        termination,
        restart_index: 1,
    })
}

impl Trajectory {
    /// Assemble a trajectory from precomputed samples (CSV re-import,
    /// synthetic tails in tests). The samples are trusted as-is.
    pub fn from_samples(
        params: ExpanderParams,
        config: IntegratorConfig,
        direction: Direction,
        samples: Vec<Sample>,
        termination: TerminationCause,
    ) -> Trajectory {
        Trajectory { params, config, direction, samples, termination, restart_index: 0 }
    }

    pub fn end(&self) -> &Sample {
        self.samples.last().expect("trajectory has samples")
    }

    /// First and last arclength values (in integration order).
    pub fn arc_span(&self) -> (f64, f64) {
        (self.samples[self.restart_index].state.s, self.end().state.s)
    }

    fn stepper(&self) -> Stepper<'_> {
        Stepper { params: &self.params, dir: self.direction.sign(), tol: self.config.rk_tol }
    }

    /// State at an arbitrary arclength inside the integrated span,
    /// re-integrated from the nearest earlier accepted sample.
    pub fn state_at(&self, s: f64) -> Result<ProfileState, ShootError> {
        let dir = self.direction.sign();
        let (s_first, s_last) = self.arc_span();
        if (s - s_first) * dir < -1e-12 || (s - s_last) * dir > 1e-12 {
            return Err(ShootError::Numerical(format!(
                "arclength {s} outside the integrated span [{s_first}, {s_last}]"
            )));
        }
        // nearest sample not past s in integration order
        let mut lo = self.restart_index;
        let mut hi = self.samples.len() - 1;
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            if (self.samples[mid].state.s - s) * dir <= 0.0 {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let base = &self.samples[lo].state;
        if (s - base.s).abs() <= 1e-14 * s.abs().max(1.0) {
            return Ok(*base);
        }
        let y = self.stepper().advance(&[base.r, base.z, base.theta], base.s, s, &self.config)?;
        Ok(state_of(s, &y))
    }

    /// Re-integrate the span [a, b] in a single continuous pass, emitting
    /// a sample at each of `m` uniformly spaced arclengths. One pass keeps
    /// the local-error history continuous across output points, so finite
    /// differences of the result see smooth noise instead of step-boundary
    /// jumps.
    pub fn resample_uniform(&self, a: f64, b: f64, m: usize) -> Result<Vec<Sample>, ShootError> {
        if m < 2 {
            return Err(ShootError::Numerical("resample needs at least two points".into()));
        }
        let step = (b - a) / (m - 1) as f64;
        let grid: Vec<f64> =
            (0..m).map(|i| if i == m - 1 { b } else { a + i as f64 * step }).collect();
        self.resample_at(&grid)
    }

    /// Re-integrate in a single continuous pass, emitting a sample at
    /// each requested arclength. The grid must be strictly monotone in
    /// the trajectory's direction and inside the integrated span.
    pub fn resample_at(&self, grid: &[f64]) -> Result<Vec<Sample>, ShootError> {
        let dir = self.direction.sign();
        if grid.len() < 2 || grid.windows(2).any(|w| (w[1] - w[0]) * dir <= 0.0) {
            return Err(ShootError::Numerical(
                "resample grid must be strictly monotone in the integration direction".into(),
            ));
        }
        let (a, b) = (grid[0], grid[grid.len() - 1]);
        let (s_first, s_last) = self.arc_span();
        if (a - s_first) * dir < -1e-12 || (b - s_last) * dir > 1e-12 {
            return Err(ShootError::Numerical(format!(
                "resample span [{a}, {b}] outside integrated span [{s_first}, {s_last}]"
            )));
        }
        let stepper = self.stepper();
        let first = self.state_at(a)?;
        let mut y: Y = [first.r, first.z, first.theta];
        let mut out = Vec::with_capacity(grid.len());
        out.push(Sample { state: first, geom: geometric_sample(&first, &self.params)? });
        let mut s_cur = a;
        for &s_next in &grid[1..] {
            y = stepper.advance(&y, s_cur, s_next, &self.config)?;
            s_cur = s_next;
            let st = state_of(s_next, &y);
            out.push(Sample { state: st, geom: geometric_sample(&st, &self.params)? });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn p(n: u32, c: f64) -> ExpanderParams {
        ExpanderParams::new(n, c).unwrap()
    }

    #[test]
    fn config_validation() {
        let mut cfg = IntegratorConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.h_min = 2.0;
        assert!(cfg.validate().is_err());
        let cfg = IntegratorConfig { s_max: 0.5, h_max: 1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn cylinder_seed_is_a_fixed_point() {
        // r = 1, theta = pi/2 with C = 1/(n-1): theta' = 0 exactly, so the
        // trajectory must stay on the cylinder to integration accuracy
        let params = p(2, 1.0);
        let cfg = IntegratorConfig { s_max: 50.0, ..Default::default() };
        let traj = integrate(
            ProfileState::new(0.0, 1.0, 0.0, FRAC_PI_2),
            &params,
            &cfg,
            Direction::Forward,
        )
        .unwrap();
        assert_eq!(traj.termination, TerminationCause::ReachedSMax);
        let max_dev = traj
            .samples
            .iter()
            .map(|s| (s.state.r - 1.0).abs().max((s.state.theta - FRAC_PI_2).abs()))
            .fold(0.0, f64::max);
        assert!(max_dev <= 1e-9, "cylinder drift {max_dev}");
        let s_end = traj.end().state.s;
        assert!((s_end - 50.0).abs() < 1e-12);
    }

    #[test]
    fn backward_integration_mirrors_forward_on_cylinder() {
        let params = p(3, 0.5);
        let cfg = IntegratorConfig { s_max: 10.0, ..Default::default() };
        let seed = ProfileState::new(0.0, 2.0, 0.0, FRAC_PI_2);
        let back = integrate(seed, &params, &cfg, Direction::Backward).unwrap();
        assert_eq!(back.termination, TerminationCause::ReachedSMax);
        let end = back.end().state;
        assert!((end.s + 10.0).abs() < 1e-12);
        assert!((end.r - 2.0).abs() < 1e-9);
        assert!((end.z + 10.0).abs() < 1e-9);
    }

    #[test]
    fn sphere_shot_caps_on_the_far_pole() {
        // C = 1/n: the round unit sphere; shoot from the bottom cap
        let params = p(2, 0.5);
        let cfg = IntegratorConfig::default();
        let traj = shoot_axis(-1.0, &params, &cfg).unwrap();
        assert_eq!(traj.termination, TerminationCause::AxisCap);
        let end = traj.end().state;
        assert!(end.r.abs() <= 1e-10, "terminal r = {}", end.r);
        assert!((end.z - 1.0).abs() <= 1e-8, "terminal z = {}", end.z);
        assert!((end.s - PI).abs() <= 1e-7, "total arclength {}", end.s);
        // every sample sits on the unit circle
        let worst = traj
            .samples
            .iter()
            .map(|smp| ((smp.state.r.powi(2) + smp.state.z.powi(2)).sqrt() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "sphere deviation {worst}");
    }

    #[test]
    fn higher_dimensional_spheres_cap_despite_axis_instability() {
        // the r^{−(n−1)} tangent mode makes the inbound pole hopeless to
        // integrate directly for n ≥ 3; the early cap event must close
        // these analytically while the state is still clean. Position
        // noise still integrates to ≈ rk_tol·r^{−(n−2)} before detection
        // at r = 5e−3, hence the tight tolerance and the n = 5 budget.
        for (n, budget) in [(3u32, 1e-8), (4, 1e-8), (5, 1e-6)] {
            let params = p(n, 1.0 / f64::from(n));
            let cfg = IntegratorConfig { rk_tol: 1e-13, ..Default::default() };
            let traj = shoot_axis(-1.0, &params, &cfg).unwrap();
            assert_eq!(traj.termination, TerminationCause::AxisCap, "n = {n}");
            let end = traj.end().state;
            assert!(end.r.abs() <= 1e-10, "n = {n}: terminal r = {}", end.r);
            assert!((end.z - 1.0).abs() <= budget, "n = {n}: terminal z = {}", end.z);
            assert!((end.s - PI).abs() <= 1e-6, "n = {n}: total arclength {}", end.s);
            let worst = traj
                .samples
                .iter()
                .map(|smp| ((smp.state.r.powi(2) + smp.state.z.powi(2)).sqrt() - 1.0).abs())
                .fold(0.0, f64::max);
            assert!(worst <= budget, "n = {n}: sphere deviation {worst}");
        }
    }

    #[test]
    fn shoot_axis_rejects_nonnegative_cap_height() {
        let params = p(2, 1.0);
        let err = shoot_axis(0.5, &params, &IntegratorConfig::default()).unwrap_err();
        assert!(matches!(err, ShootError::InvalidCap(_)));
        assert!(shoot_axis(0.0, &params, &IntegratorConfig::default()).is_err());
    }

    #[test]
    fn soliton_residual_vanishes_at_accepted_steps() {
        let params = p(2, 1.0);
        let cfg = IntegratorConfig { s_max: 30.0, ..Default::default() };
        let traj = shoot_axis(-1.0, &params, &cfg).unwrap();
        for smp in &traj.samples[1..] {
            let res = crate::geometry::soliton_residual(&smp.geom, &params).unwrap();
            assert!(res.abs() <= 10.0 * cfg.rk_tol, "residual {res} at s={}", smp.state.s);
        }
    }

    #[test]
    fn consecutive_samples_satisfy_the_ode_locally() {
        // re-integrating each accepted step reproduces the next sample to
        // a few times the local tolerance
        let params = p(2, 1.0);
        let cfg = IntegratorConfig { s_max: 5.0, ..Default::default() };
        let traj = shoot_axis(-1.0, &params, &cfg).unwrap();
        let stepper = Stepper { params: &params, dir: 1.0, tol: cfg.rk_tol };
        for w in traj.samples[1..].windows(2) {
            let (a, b) = (&w[0].state, &w[1].state);
            let y = stepper.advance(&[a.r, a.z, a.theta], a.s, b.s, &cfg).unwrap();
            let diff = (y[0] - b.r).abs().max((y[1] - b.z).abs()).max((y[2] - b.theta).abs());
            assert!(diff <= 10.0 * cfg.rk_tol, "local defect {diff} at s={}", b.s);
        }
    }

    #[test]
    fn trajectory_is_scale_equivariant() {
        // lambda-dilation: (r, z)(s) -> (lambda r, lambda z)(s / lambda)
        // is again a solution (C fixed); compare via state_at
        let params = p(2, 1.0);
        let base = shoot_axis(-1.0, &params, &IntegratorConfig { s_max: 8.0, ..Default::default() })
            .unwrap();
        for lambda in [0.5, 2.0, 10.0] {
            let cfg = IntegratorConfig { s_max: 8.0 * lambda, ..Default::default() };
            let scaled = shoot_axis(-lambda, &params, &cfg).unwrap();
            for &s in &[1.0, 3.0, 7.5] {
                let a = base.state_at(s).unwrap();
                let b = scaled.state_at(lambda * s).unwrap();
                let tol = 10.0 * DEFAULT_RK_TOL * lambda.max(1.0);
                assert!(
                    (b.r - lambda * a.r).abs() <= tol && (b.z - lambda * a.z).abs() <= tol,
                    "lambda={lambda} s={s}: ({}, {}) vs scaled ({}, {})",
                    b.r,
                    b.z,
                    lambda * a.r,
                    lambda * a.z
                );
                assert!((b.theta - a.theta).abs() <= tol);
            }
        }
    }

    #[test]
    fn fixed_step_rk4_oracle_agrees() {
        // classic RK4 with h = 1e-5 from the same startup state: an
        // independent check that the adaptive pair integrates this ODE
        let params = p(2, 1.0);
        let cfg = IntegratorConfig { s_max: 1.2, ..Default::default() };
        let traj = shoot_axis(-1.0, &params, &cfg).unwrap();
        let start = traj.samples[1].state;
        let f = |y: &Y| -> Y {
            let k = ode_rhs(&state_of(0.0, y), &params).unwrap();
            k
        };
        let mut y: Y = [start.r, start.z, start.theta];
        let h = 1e-5;
        let n_steps = ((1.0 + cfg.startup_eps - start.s) / h).round() as usize;
        let h = (1.0 + cfg.startup_eps - start.s) / n_steps as f64;
        for _ in 0..n_steps {
            let k1 = f(&y);
            let k2 = f(&[y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1], y[2] + 0.5 * h * k1[2]]);
            let k3 = f(&[y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1], y[2] + 0.5 * h * k2[2]]);
            let k4 = f(&[y[0] + h * k3[0], y[1] + h * k3[1], y[2] + h * k3[2]]);
            for i in 0..3 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        let end = traj.state_at(1.0 + cfg.startup_eps).unwrap();
        let diff = (y[0] - end.r).abs().max((y[1] - end.z).abs()).max((y[2] - end.theta).abs());
        assert!(diff <= 1e-7, "RK4 oracle disagreement {diff}");
    }

    #[test]
    fn tolerance_halving_moves_terminal_state_within_band() {
        let params = p(2, 1.0);
        let cfg = IntegratorConfig { s_max: 20.0, ..Default::default() };
        let a = shoot_axis(-1.0, &params, &cfg).unwrap();
        let cfg2 = IntegratorConfig { rk_tol: cfg.rk_tol / 2.0, ..cfg };
        let b = shoot_axis(-1.0, &params, &cfg2).unwrap();
        let ea = a.end().state;
        let eb = b.end().state;
        let diff = (ea.r - eb.r).abs().max((ea.z - eb.z).abs()).max((ea.theta - eb.theta).abs());
        assert!(diff <= 10.0 * cfg.rk_tol, "terminal sensitivity {diff}");
    }

    #[test]
    fn startup_series_error_shrinks_at_second_order_or_better() {
        // Richardson in startup_eps at fixed, tight rk_tol. The series
        // truncation is O(eps^3), so the eps decades must sit well above
        // the integrator noise floor (~1e-12 at rk_tol = 1e-13) for the
        // shrink factor to be visible.
        let params = p(2, 1.0);
        let mut ends = Vec::new();
        for eps in [1e-2, 1e-3, 1e-4] {
            let cfg = IntegratorConfig { rk_tol: 1e-13, s_max: 2.0, startup_eps: eps, ..Default::default() };
            let traj = shoot_axis(-1.0, &params, &cfg).unwrap();
            let st = traj.state_at(1.0).unwrap();
            ends.push([st.r, st.z, st.theta]);
        }
        let d1 = (0..3).map(|i| (ends[0][i] - ends[1][i]).abs()).fold(0.0, f64::max);
        let d2 = (0..3).map(|i| (ends[1][i] - ends[2][i]).abs()).fold(0.0, f64::max);
        assert!(d1 <= 1e-4, "startup sensitivity d1 = {d1}");
        assert!(d2 <= 1e-7, "startup sensitivity d2 = {d2}");
        // order >= 2 means a factor >= 100 per eps decade; allow slack
        assert!(d2 <= d1 / 50.0, "startup refinement did not shrink: d1={d1} d2={d2}");
    }

    #[test]
    fn support_vanishing_death_matches_frozen_case() {
        // seed (1, 0, pi/2 + 0.72), n=2, C=1 collapses with psi -> 0^-;
        // terminal data frozen from an independent high-accuracy run
        let params = p(2, 1.0);
        let cfg = IntegratorConfig { s_max: 10.0, ..Default::default() };
        let seed = ProfileState::new(0.0, 1.0, 0.0, FRAC_PI_2 + 0.72);
        let traj = integrate(seed, &params, &cfg, Direction::Forward).unwrap();
        assert_eq!(traj.termination, TerminationCause::SupportVanishing);
        let end = traj.end();
        assert!(end.state.psi().abs() <= 1e-10, "terminal |psi| = {}", end.state.psi().abs());
        assert!((end.state.s - 0.950083491).abs() < 1e-6, "death arclength {}", end.state.s);
        assert!((end.state.r - 0.188366770).abs() < 1e-6);
        assert!((end.state.z - 0.333010249).abs() < 1e-6);
        assert!((end.state.theta - 4.197610689).abs() < 1e-5);
        // psi < 0 at every sample (branch invariant)
        for smp in &traj.samples {
            assert!(smp.state.psi() < 0.0);
        }
    }

    #[test]
    fn axis_angle_classifier() {
        assert!(angle_from_axis_multiple(1e-5) <= CAP_ANGLE_TOL);
        assert!(angle_from_axis_multiple(PI - 1e-5) <= CAP_ANGLE_TOL);
        assert!(angle_from_axis_multiple(2.0 * PI + 1e-6) <= CAP_ANGLE_TOL);
        assert!(angle_from_axis_multiple(FRAC_PI_2) > CAP_ANGLE_TOL);
        assert!(angle_from_axis_multiple(-0.3) > CAP_ANGLE_TOL);
    }

    #[test]
    fn state_at_and_resample_are_consistent() {
        let params = p(2, 1.0);
        let cfg = IntegratorConfig { s_max: 6.0, ..Default::default() };
        let traj = shoot_axis(-1.0, &params, &cfg).unwrap();
        let re = traj.resample_uniform(1.0, 3.0, 21).unwrap();
        assert_eq!(re.len(), 21);
        for smp in re.iter().step_by(5) {
            let st = traj.state_at(smp.state.s).unwrap();
            let d = (st.r - smp.state.r).abs().max((st.z - smp.state.z).abs());
            assert!(d <= 1e-9, "resample/state_at mismatch {d}");
        }
        assert!(traj.state_at(100.0).is_err());
    }

    #[test]
    fn samples_strictly_monotone_in_s() {
        let params = p(2, 1.0);
        let traj = shoot_axis(-1.0, &params, &IntegratorConfig { s_max: 15.0, ..Default::default() }).unwrap();
        for w in traj.samples.windows(2) {
            assert!(w[1].state.s > w[0].state.s);
        }
        let back = integrate(
            ProfileState::new(0.0, 1.0, 0.0, FRAC_PI_2),
            &params,
            &IntegratorConfig { s_max: 5.0, ..Default::default() },
            Direction::Backward,
        )
        .unwrap();
        for w in back.samples.windows(2) {
            assert!(w[1].state.s < w[0].state.s);
        }
    }
}
