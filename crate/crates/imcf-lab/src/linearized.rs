//! The linearized expander operator, reduced onto spherical harmonics of
//! the rotational orbit, and the kernel functions its symmetries supply.
//!
//! On a self-expanding soliton the stability operator
//!
//!   𝓛 f = Δf + C H² ⟨F, ∇f⟩ + (|A|² − C H²) f
//!
//! annihilates ⟨F, ν⟩ = ψ (dilations map solitons to solitons) and
//! ⟨R, ν⟩ for every ambient rotation field R (rotations do too). On a
//! surface of revolution the symmetry-axis rotation is tangential, so
//! its normal component vanishes identically and carries no information;
//! the orthogonal-axis rotation gives ⟨R, ν⟩ = −g(s) · Y₁(ω), where Y₁
//! is a first spherical harmonic on the S^{n−1} orbit (Laplace
//! eigenvalue −(n−1) on the unit sphere). Separating variables reduces
//! 𝓛 to one-dimensional operators along the profile:
//!
//!   mode 0:  f″ + c₁ f′ + (|A|² − C H²) f            with f = ψ,
//!   mode 1:  f″ + c₁ f′ + (|A|² − C H² − (n−1)/r²) f with f = g,
//!   c₁ = (n−1) r′/r + C H² g,
//!
//! both with exact kernels. The quotient q = −g/ψ then satisfies the
//! pure drift equation q″ + (c₁ + 2ψ′/ψ) q′ − (n−1) q/r² = 0.
//!
//! All derivatives come from closed-form differentiation of the profile
//! ODE (ψ′ = −κ₁ g, g′ = 1 + κ₁ ψ, κ₂′ = (r′/r)(κ₁ − κ₂), and θ″ from
//! the ODE itself), never from finite differences of samples. A
//! consequence worth stating: because a soliton profile passes through
//! every on-branch phase point (r, z, θ), and dilation/rotation families
//! exist through each of them, these reduced identities hold *pointwise
//! in phase space*, not merely along well-integrated trajectories. The
//! residuals below therefore sit at rounding level (~1e−14 · scale)
//! regardless of integrator tolerance; what they falsify is the operator
//! reduction and the hand-derived jet algebra, which is exactly the
//! claim under test. Finite-difference cross-checks against resampled
//! trajectories live in the tests.

use crate::geometry::{
    geometric_sample, soliton_residual, ExpanderParams, GeometryError, ProfileState, RotationField,
};
use crate::shooting::Trajectory;
use crate::ResidualReport;
use thiserror::Error;

/// Stored-sample soliton-consistency gate, as a multiple of `rk_tol`.
const SOLITON_CHECK_FACTOR: f64 = 100.0;

#[derive(Debug, Error)]
pub enum LinearizedError {
    #[error("not a soliton: max |-1/H - C psi| = {residual:.3e} exceeds {limit:.3e}")]
    NotASoliton { residual: f64, limit: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Closed-form 2-jet of the profile geometry along a soliton: the
/// curvatures and support functions together with their first and second
/// arclength derivatives, obtained by differentiating the profile ODE
/// analytically. Valid only where the soliton equation holds; the
/// residual instruments enforce that before trusting the jet.
#[derive(Debug, Clone, Copy)]
pub struct SolitonJet {
    pub kappa1: f64,
    pub kappa2: f64,
    pub h: f64,
    pub a2: f64,
    pub psi: f64,
    pub g: f64,
    pub dkappa1: f64,
    pub dkappa2: f64,
    pub dh: f64,
    pub dpsi: f64,
    pub dg: f64,
    pub d2psi: f64,
    pub d2g: f64,
}

pub fn soliton_jet(state: &ProfileState, params: &ExpanderParams) -> Result<SolitonJet, GeometryError> {
    let geom = geometric_sample(state, params)?;
    let nm1 = (params.n - 1) as f64;
    let cos_t = state.theta.cos();
    let dpsi = -geom.kappa1 * geom.g;
    let dg = 1.0 + geom.kappa1 * geom.psi;
    let dkappa2 = (cos_t / state.r) * (geom.kappa1 - geom.kappa2);
    // theta'' from d/ds of kappa1 = -1/(C psi) - (n-1) kappa2
    let dkappa1 = dpsi / (params.c * geom.psi * geom.psi) - nm1 * dkappa2;
    let dh = dkappa1 + nm1 * dkappa2;
    let d2psi = -dkappa1 * geom.g - geom.kappa1 * dg;
    let d2g = dkappa1 * geom.psi + geom.kappa1 * dpsi;
    Ok(SolitonJet {
        kappa1: geom.kappa1,
        kappa2: geom.kappa2,
        h: geom.h,
        a2: geom.a2,
        psi: geom.psi,
        g: geom.g,
        dkappa1,
        dkappa2,
        dh,
        dpsi,
        dg,
        d2psi,
        d2g,
    })
}

/// Coefficients of the mode-reduced operators f″ + c1 f′ + c0 f at one
/// profile point (the leading coefficient is 1).
#[derive(Debug, Clone, Copy)]
pub struct ModeReducedCoefficients {
    pub c1: f64,
    pub c0_mode0: f64,
    pub c0_mode1: f64,
}

pub fn mode_coefficients(
    state: &ProfileState,
    jet: &SolitonJet,
    params: &ExpanderParams,
) -> ModeReducedCoefficients {
    let nm1 = (params.n - 1) as f64;
    let chh = params.c * jet.h * jet.h;
    let c1 = nm1 * state.theta.cos() / state.r + chh * jet.g;
    let c0_mode0 = jet.a2 - chh;
    ModeReducedCoefficients { c1, c0_mode0, c0_mode1: c0_mode0 - nm1 / (state.r * state.r) }
}

/// Reject trajectories whose stored samples do not satisfy the soliton
/// relation to 100 × rk_tol (NaN geometry counts as failure).
fn check_soliton(traj: &Trajectory) -> Result<(), LinearizedError> {
    let limit = SOLITON_CHECK_FACTOR * traj.config.rk_tol;
    let mut worst: f64 = 0.0;
    for smp in &traj.samples {
        let res = soliton_residual(&smp.geom, &traj.params)?;
        if !res.is_finite() {
            worst = f64::INFINITY;
        } else {
            worst = worst.max(res.abs());
        }
    }
    if worst > limit {
        return Err(LinearizedError::NotASoliton { residual: worst, limit });
    }
    Ok(())
}

fn kernel_report(
    traj: &Trajectory,
    name: &str,
    res_at: impl Fn(&ProfileState, &SolitonJet, &ModeReducedCoefficients) -> f64,
) -> Result<ResidualReport, LinearizedError> {
    check_soliton(traj)?;
    let mut series = Vec::with_capacity(traj.samples.len());
    for smp in &traj.samples {
        let jet = soliton_jet(&smp.state, &traj.params)?;
        let co = mode_coefficients(&smp.state, &jet, &traj.params);
        series.push((smp.state.s, res_at(&smp.state, &jet, &co)));
    }
    Ok(ResidualReport::from_series(name, traj.config.rk_tol, series))
}

/// Residual of the mode-0 kernel identity 𝓛₀ψ = 0 (dilation symmetry)
/// at every stored sample. `h` in the report records the integrator
/// tolerance the trajectory was produced at.
pub fn kernel_residual_mode0(traj: &Trajectory) -> Result<ResidualReport, LinearizedError> {
    kernel_report(traj, "kernel-mode0", |_, jet, co| {
        jet.d2psi + co.c1 * jet.dpsi + co.c0_mode0 * jet.psi
    })
}

/// Residual of the mode-1 kernel identity 𝓛₁g = 0 (orthogonal-axis
/// rotation symmetry; the angular factor Y₁ is divided out).
pub fn kernel_residual_mode1(traj: &Trajectory) -> Result<ResidualReport, LinearizedError> {
    kernel_report(traj, "kernel-mode1", |_, jet, co| {
        jet.d2g + co.c1 * jet.dg + co.c0_mode1 * jet.g
    })
}

/// Residual of the pure drift equation satisfied by the kernel quotient
/// q = −g/ψ: q″ + (c₁ + 2ψ′/ψ) q′ − (n−1) q / r² = 0. Algebraically this
/// is −(mode1 + q · mode0)/ψ, so it vanishes with the two kernels; it is
/// evaluated directly from quotient-rule jets, and the algebraic
/// relation itself is a separate test.
pub fn quotient_residual(traj: &Trajectory) -> Result<ResidualReport, LinearizedError> {
    check_soliton(traj)?;
    let nm1 = (traj.params.n - 1) as f64;
    let mut series = Vec::with_capacity(traj.samples.len());
    for smp in &traj.samples {
        let jet = soliton_jet(&smp.state, &traj.params)?;
        if jet.psi >= 0.0 {
            return Err(GeometryError::WrongBranch { psi: jet.psi }.into());
        }
        let co = mode_coefficients(&smp.state, &jet, &traj.params);
        let (psi, g) = (jet.psi, jet.g);
        let q = -g / psi;
        let dq = -(jet.dg * psi - g * jet.dpsi) / (psi * psi);
        let d2q = (-psi * (jet.d2g * psi - g * jet.d2psi)
            + 2.0 * jet.dpsi * (jet.dg * psi - g * jet.dpsi))
            / (psi * psi * psi);
        let res = d2q + (co.c1 + 2.0 * jet.dpsi / psi) * dq - nm1 * q / (smp.state.r * smp.state.r);
        series.push((smp.state.s, res));
    }
    Ok(ResidualReport::from_series("quotient-drift", traj.config.rk_tol, series))
}

/// Max |⟨R, ν⟩| over all samples and 16 orbit directions for the
/// symmetry-axis rotation field. Tangential on any surface of
/// revolution, so this must sit at rounding level; it guards the ambient
/// frame conventions used by the honest vector evaluation.
pub fn symmetry_axis_rotation_kernel(traj: &Trajectory) -> f64 {
    let n = traj.params.n as usize;
    let mut worst: f64 = 0.0;
    for smp in &traj.samples {
        for k in 0..16 {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
            let mut omega = vec![0.0; n];
            omega[0] = phi.cos();
            omega[1] = phi.sin();
            let val =
                RotationField::SymmetryAxis.normal_component(&smp.state, traj.params.n, &omega);
            worst = worst.max(val.abs());
        }
    }
    worst
}
