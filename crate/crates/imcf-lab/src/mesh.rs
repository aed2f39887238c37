//! Triangulated meshes of revolution and a discrete form of the
//! linearized operator, used to confirm the kernel identities with no
//! mode reduction in the loop: the two-dimensional surface operator is
//! assembled from the embedded triangles alone and applied to exactly
//! sampled kernel functions, and its residual must converge to zero
//! under refinement.
//!
//! The discrete pieces are standard: cotangent edge weights with mixed
//! Voronoi vertex areas for the Laplacian, per-face linear-interpolation
//! gradients averaged over the vertex star (then projected onto the
//! exact tangent plane) for ⟨F, ∇f⟩. Rings are graded uniformly in the
//! conformal profile coordinate t with dt = ds/r, which unrolls the
//! surface onto a near-uniform flat grid (exactly uniform on a cylinder)
//! and keeps the stencils symmetric enough for second-order pointwise
//! consistency; two boundary rings on each side are excluded from norms
//! so no boundary condition is ever invented.
//!
//! Built for surfaces in R³ (n = 2).

use crate::geometry::{ExpanderParams, GeometryError};
use crate::shooting::{Sample, ShootError, Trajectory};
use crate::ResidualReport;
use thiserror::Error;

/// Minimum grid resolution for residual evaluation: below this the
/// interior (after dropping two boundary rings per side) is too thin to
/// mean anything.
const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("meshes require a surface in R^3 (n = 2), got n = {0}")]
    UnsupportedDimension(u32),
    #[error("degenerate mesh range: {0}")]
    DegenerateRange(String),
    #[error("mesh too coarse: {n_s} x {n_phi}, need at least {MIN_RESOLUTION} x {MIN_RESOLUTION}")]
    MeshTooCoarse { n_s: usize, n_phi: usize },
    #[error("vertex-value vector has length {got}, mesh has {want} vertices")]
    SizeMismatch { got: usize, want: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Shoot(#[from] ShootError),
}

/// A structured triangulation of the revolution of a profile window:
/// `n_s` rings of `n_phi` vertices each, closed in the angular
/// direction, with the exact profile geometry stored per ring.
#[derive(Debug, Clone)]
pub struct MeshOfRevolution {
    pub params: ExpanderParams,
    pub n_s: usize,
    pub n_phi: usize,
    /// exact profile sample backing ring i
    pub rings: Vec<Sample>,
    /// angular grid, phi[j] = 2π j / n_phi
    pub phi: Vec<f64>,
    /// ring-major vertex positions: index(i, j) = i · n_phi + j
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl MeshOfRevolution {
    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }

    /// Exact inward unit normal at vertex (i, j).
    pub fn normal(&self, i: usize, j: usize) -> [f64; 3] {
        let (sin_t, cos_t) = self.rings[i].state.theta.sin_cos();
        let (sin_p, cos_p) = self.phi[j].sin_cos();
        [-sin_t * cos_p, -sin_t * sin_p, cos_t]
    }

    /// Ring indices whose vertices enter residual norms (two boundary
    /// rings on each side are excluded).
    pub fn interior_rings(&self) -> std::ops::Range<usize> {
        2..self.n_s - 2
    }

    /// Longest triangle edge: the resolution the residual reports carry.
    pub fn max_edge(&self) -> f64 {
        let mut h: f64 = 0.0;
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                h = h.max(dist(&self.vertices[a], &self.vertices[b]));
            }
        }
        h
    }
}

/// The two exactly-known kernel functions of the linearized operator,
/// sampled per vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFunction {
    /// ⟨F, ν⟩ = ψ(s): the dilation direction (angular mode 0)
    Dilation,
    /// ⟨R, ν⟩ = −g(s)·cos φ for the orthogonal-axis rotation (mode 1)
    TiltRotation,
}

pub fn kernel_values(mesh: &MeshOfRevolution, which: KernelFunction) -> Vec<f64> {
    let mut f = Vec::with_capacity(mesh.vertices.len());
    for i in 0..mesh.n_s {
        for j in 0..mesh.n_phi {
            f.push(match which {
                KernelFunction::Dilation => mesh.rings[i].geom.psi,
                KernelFunction::TiltRotation => -mesh.rings[i].geom.g * mesh.phi[j].cos(),
            });
        }
    }
    f
}

/// Build an (n_s × n_phi) mesh over the profile window [s_lo, s_hi]
/// (ordered in the trajectory's integration direction). Ring arclengths
/// are graded uniformly in t with dt = ds/r and re-integrated in one
/// continuous pass; vertex positions and per-ring geometry are exact.
pub fn build_mesh(
    traj: &Trajectory,
    s_lo: f64,
    s_hi: f64,
    n_s: usize,
    n_phi: usize,
) -> Result<MeshOfRevolution, MeshError> {
    if traj.params.n != 2 {
        return Err(MeshError::UnsupportedDimension(traj.params.n));
    }
    if n_s < 2 || n_phi < 3 {
        return Err(MeshError::DegenerateRange(format!("grid {n_s} x {n_phi} cannot be meshed")));
    }
    let dir = traj.direction.sign();
    if (s_hi - s_lo) * dir <= 0.0 {
        return Err(MeshError::DegenerateRange(format!(
            "window [{s_lo}, {s_hi}] is empty in the integration direction"
        )));
    }
    // conformal grading: accumulate t over a dense uniform probe, then
    // place rings at equal t increments
    let probe = traj.resample_uniform(s_lo, s_hi, 8 * n_s + 1)?;
    let mut t_cum = Vec::with_capacity(probe.len());
    t_cum.push(0.0);
    for w in probe.windows(2) {
        let dt = (w[1].state.s - w[0].state.s).abs() * 0.5
            * (1.0 / w[0].state.r + 1.0 / w[1].state.r);
        t_cum.push(t_cum.last().unwrap() + dt);
    }
    let t_total = *t_cum.last().unwrap();
    let mut grid = Vec::with_capacity(n_s);
    let mut k = 0;
    for i in 0..n_s {
        if i == 0 {
            grid.push(s_lo);
            continue;
        }
        if i == n_s - 1 {
            grid.push(s_hi);
            continue;
        }
        let target = t_total * i as f64 / (n_s - 1) as f64;
        while k + 1 < t_cum.len() && t_cum[k + 1] < target {
            k += 1;
        }
        let w = (target - t_cum[k]) / (t_cum[k + 1] - t_cum[k]);
        grid.push(probe[k].state.s + w * (probe[k + 1].state.s - probe[k].state.s));
    }
    let rings = traj.resample_at(&grid)?;
    let phi: Vec<f64> = (0..n_phi).map(|j| 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64).collect();
    let mut vertices = Vec::with_capacity(n_s * n_phi);
    for ring in &rings {
        for &p in &phi {
            let (sin_p, cos_p) = p.sin_cos();
            vertices.push([ring.state.r * cos_p, ring.state.r * sin_p, ring.state.z]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * (n_s - 1) * n_phi);
    for i in 0..n_s - 1 {
        for j in 0..n_phi {
            let j2 = (j + 1) % n_phi;
            let (a, b, c, d) =
                (i * n_phi + j, (i + 1) * n_phi + j, (i + 1) * n_phi + j2, i * n_phi + j2);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Ok(MeshOfRevolution { params: traj.params, n_s, n_phi, rings, phi, vertices, triangles })
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    norm(&sub(a, b))
}

/// Residual of the discrete linearized operator applied to per-vertex
/// values `f`, over interior vertices. The report's `h` is the longest
/// mesh edge; the series abscissa is the ring arclength.
pub fn discrete_linearized_residual(
    mesh: &MeshOfRevolution,
    f: &[f64],
) -> Result<ResidualReport, MeshError> {
    if mesh.n_s < MIN_RESOLUTION || mesh.n_phi < MIN_RESOLUTION {
        return Err(MeshError::MeshTooCoarse { n_s: mesh.n_s, n_phi: mesh.n_phi });
    }
    let nv = mesh.vertices.len();
    if f.len() != nv {
        return Err(MeshError::SizeMismatch { got: f.len(), want: nv });
    }
    let mut lap = vec![0.0; nv]; // Σ cot · (f_u − f_v), before the 1/(2A) factor
    let mut area = vec![0.0; nv]; // mixed Voronoi areas
    let mut grad = vec![[0.0; 3]; nv]; // area-weighted face gradients
    let mut star_area = vec![0.0; nv];
    for tri in &mesh.triangles {
        let [ia, ib, ic] = *tri;
        let (a, b, c) = (&mesh.vertices[ia], &mesh.vertices[ib], &mesh.vertices[ic]);
        let (ab, ac, bc) = (sub(b, a), sub(c, a), sub(c, b));
        let n_vec = cross(&ab, &ac);
        let double_area = norm(&n_vec);
        if double_area <= 0.0 {
            return Err(MeshError::DegenerateRange("zero-area triangle".into()));
        }
        let t_area = 0.5 * double_area;
        // interior angles' cotangents: dot / |cross| of the two edges
        let cot_a = dot(&ab, &ac) / double_area;
        let cot_b = dot(&sub(a, b), &bc) / double_area;
        let cot_c = dot(&sub(a, c), &sub(b, c)) / double_area;
        for (u, v, cot) in [(ib, ic, cot_a), (ia, ic, cot_b), (ia, ib, cot_c)] {
            lap[u] += cot * (f[v] - f[u]);
            lap[v] += cot * (f[u] - f[v]);
        }
        // mixed Voronoi: circumcentric for non-obtuse triangles, else
        // half the area to the obtuse corner and a quarter elsewhere
        if cot_a >= 0.0 && cot_b >= 0.0 && cot_c >= 0.0 {
            let (l_ab, l_ac, l_bc) = (dot(&ab, &ab), dot(&ac, &ac), dot(&bc, &bc));
            area[ia] += 0.125 * (l_ab * cot_c + l_ac * cot_b);
            area[ib] += 0.125 * (l_ab * cot_c + l_bc * cot_a);
            area[ic] += 0.125 * (l_ac * cot_b + l_bc * cot_a);
        } else {
            for (idx, cot) in [(ia, cot_a), (ib, cot_b), (ic, cot_c)] {
                area[idx] += if cot < 0.0 { 0.5 * t_area } else { 0.25 * t_area };
            }
        }
        // face gradient of the linear interpolant:
        // ∇f = (n̂ × Σ f_i e_i) / (2 A), e_i the edge opposite vertex i
        let n_hat = [n_vec[0] / double_area, n_vec[1] / double_area, n_vec[2] / double_area];
        let mut s_vec = [0.0; 3];
        for (fi, e) in [(f[ia], &bc), (f[ib], &sub(a, c)), (f[ic], &ab)] {
            s_vec[0] += fi * e[0];
            s_vec[1] += fi * e[1];
            s_vec[2] += fi * e[2];
        }
        let g_face = cross(&n_hat, &s_vec);
        for idx in [ia, ib, ic] {
            for d in 0..3 {
                grad[idx][d] += t_area * g_face[d] / double_area;
            }
            star_area[idx] += t_area;
        }
    }
    let c = mesh.params.c;
    let mut series = Vec::new();
    for i in mesh.interior_rings() {
        let ring = &mesh.rings[i];
        let chh = c * ring.geom.h * ring.geom.h;
        let c0 = ring.geom.a2 - chh;
        for j in 0..mesh.n_phi {
            let v = mesh.vertex_index(i, j);
            let laplacian = lap[v] / (2.0 * area[v]);
            // star-averaged gradient, projected onto the exact tangent plane
            let mut g_v = [
                grad[v][0] / star_area[v],
                grad[v][1] / star_area[v],
                grad[v][2] / star_area[v],
            ];
            let nu = mesh.normal(i, j);
            let gn = dot(&g_v, &nu);
            for d in 0..3 {
                g_v[d] -= gn * nu[d];
            }
            let advect = chh * dot(&mesh.vertices[v], &g_v);
            series.push((ring.state.s, laplacian + advect + c0 * f[v]));
        }
    }
    Ok(ResidualReport::from_series("discrete-linearized", mesh.max_edge(), series))
}

/// Run the discrete residual at `levels` doubling resolutions starting
/// from (n_s, n_phi), and stamp the observed convergence order on the
/// final report (needs ≥ 3 levels).
pub fn refinement_study(
    traj: &Trajectory,
    s_lo: f64,
    s_hi: f64,
    n_s: usize,
    n_phi: usize,
    levels: usize,
    which: KernelFunction,
) -> Result<Vec<ResidualReport>, MeshError> {
    let mut reports = Vec::with_capacity(levels);
    for level in 0..levels {
        let mesh = build_mesh(traj, s_lo, s_hi, n_s << level, n_phi << level)?;
        let f = kernel_values(&mesh, which);
        reports.push(discrete_linearized_residual(&mesh, &f)?);
    }
    if reports.len() >= 3 {
        let sups: Vec<f64> = reports.iter().map(|r| r.sup).collect();
        let order = crate::numerics::order_estimate(&sups);
        if let Some(last) = reports.last_mut() {
            last.order = Some(order);
        }
    }
    Ok(reports)
}

/// Wavefront OBJ text for the mesh (positions and 1-indexed faces).
pub fn export_obj(mesh: &MeshOfRevolution) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        out.push_str(&format!("v {:.17e} {:.17e} {:.17e}\n", v[0], v[1], v[2]));
    }
    for t in &mesh.triangles {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    out
}
