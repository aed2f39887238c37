//! Command-line laboratory for rotationally symmetric self-expanders to
//! inverse mean curvature flow: shoot profiles, sweep seed grids for
//! two-ended self-intersecting candidates, and re-run the analytic
//! verification suites with pinned tolerances.
//!
//! Exit codes: 0 success; 1 a verification residual exceeded its
//! tolerance (or an artifact could not be written); 2 invalid arguments;
//! 3 the profile integration failed; 4 a sweep finished cleanly but
//! found no candidate.

use clap::{Parser, Subcommand};
use imcf_lab::asymptotics::{classify_end, EndClassification, EndVerdict};
use imcf_lab::curves::{support_identity_residual, SampledCurve};
use imcf_lab::flow::{
    dilation_compare, flow_evolution_checks, imcf_flow, support_variation_check, FlowConfig,
    ResampleMode,
};
use imcf_lab::geometry::{ExpanderParams, ProfileState};
use imcf_lab::io::{
    out_dir, read_trajectory_csv, render_profile_svg, write_json_report, write_trajectory_csv,
    RunManifest, VerificationReport,
};
use imcf_lab::linearized::{
    kernel_residual_mode0, kernel_residual_mode1, quotient_residual,
    symmetry_axis_rotation_kernel,
};
use imcf_lab::mesh::{
    build_mesh, discrete_linearized_residual, kernel_values, refinement_study, KernelFunction,
};
use imcf_lab::numerics::order_estimate;
use imcf_lab::shooting::{integrate, Direction, IntegratorConfig, Trajectory};
use imcf_lab::sweep::{default_beta_grid, default_theta0_grid, sweep_bottle};
use imcf_lab::ResidualReport;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_TOLERANCE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INTEGRATION: u8 = 3;
const EXIT_NOT_FOUND: u8 = 4;

#[derive(Parser)]
#[command(name = "imcf-lab", version, about, disable_help_subcommand = true)]
struct Cli {
    /// Output directory for artifacts (default: $IMCF_LAB_OUT, else ".")
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Timestamp recorded in manifests (for byte-reproducible artifacts)
    #[arg(long, global = true)]
    timestamp: Option<String>,
    /// RNG seed recorded in manifests
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one profile from an axis seed; writes CSV, JSON and SVG
    Shoot {
        /// Hypersurface dimension (the surface lives in R^{n+1})
        #[arg(long, default_value_t = 2)]
        n: u32,
        /// Expander constant
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        /// Height of the axis seed point (must be negative)
        #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
        z0: f64,
        /// Arclength budget
        #[arg(long, default_value_t = 50.0)]
        smax: f64,
        /// Local error tolerance of the integrator
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Grid-search equator seeds for a candidate with two cylindrical
    /// ends of distinct radii and a self-intersection
    SweepBottle {
        #[arg(long, default_value_t = 2)]
        n: u32,
        /// Expander constant (default: the cylinder-neutral value 1/(n−1))
        #[arg(long = "C")]
        c: Option<f64>,
        #[arg(long, default_value_t = 50.0)]
        smax: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Re-run an analytic verification suite and write a JSON report
    Verify {
        #[command(subcommand)]
        target: VerifyTarget,
    },
}

#[derive(Subcommand)]
enum VerifyTarget {
    /// Mode-reduced kernels of the linearized operator plus rotation
    /// tangency, on a freshly shot expander
    Kernels,
    /// Second-order support-function identity on closed-form curves
    Identity,
    /// Drift equation for the support quotient
    Quotient {
        /// Verify a stored trajectory CSV instead of shooting afresh
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
    },
    /// Exponential dilation law and evolution identities under the flow
    Flow,
    /// Discrete linearized operator on meshes of revolution
    Mesh,
}

struct Ctx {
    out: PathBuf,
    seed: u64,
    timestamp: Option<String>,
}

impl Ctx {
    fn manifest(&self, command: &str) -> RunManifest {
        let m = RunManifest::new(command, self.seed);
        match &self.timestamp {
            Some(t) => m.with_timestamp(t),
            None => m,
        }
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), u8> {
        std::fs::create_dir_all(&self.out).map_err(|e| {
            eprintln!("error: cannot create {}: {e}", self.out.display());
            EXIT_TOLERANCE
        })?;
        let path = self.out.join(name);
        std::fs::write(&path, bytes).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            EXIT_TOLERANCE
        })?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        out: cli.out.unwrap_or_else(out_dir),
        seed: cli.seed,
        timestamp: cli.timestamp,
    };
    let code = match cli.command {
        Cmd::Shoot { n, c, z0, smax, tol } => cmd_shoot(&ctx, n, c, z0, smax, tol),
        Cmd::SweepBottle { n, c, smax, tol } => cmd_sweep(&ctx, n, c, smax, tol),
        Cmd::Verify { target } => cmd_verify(&ctx, target),
    };
    ExitCode::from(code.unwrap_or_else(|e| e))
}

fn usage_error(msg: &str) -> u8 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn build_params(n: u32, c: f64) -> Result<ExpanderParams, u8> {
    ExpanderParams::new(n, c).map_err(|e| usage_error(&e.to_string()))
}

fn build_config(smax: f64, tol: f64) -> Result<IntegratorConfig, u8> {
    let config = IntegratorConfig { s_max: smax, rk_tol: tol, ..Default::default() };
    config.validate().map_err(|e| usage_error(&e.to_string()))?;
    Ok(config)
}

/// Seed on the rotation axis below the origin: the profile leaves the
/// axis orthogonally and the integrator's series startup handles the
/// κ₂ = sin θ / r limit.
fn axis_seed(z0: f64) -> ProfileState {
    ProfileState::new(0.0, f64::EPSILON.sqrt(), z0, 0.0)
}

fn verdict_summary(v: &EndVerdict) -> String {
    match v {
        EndVerdict::CylindricalEnd { model, .. } => format!("cylinder(rho={:.6})", model.rho),
        EndVerdict::AxisCap => "axis-cap".into(),
        EndVerdict::SupportSingular => "support-singular".into(),
        EndVerdict::CurvatureSingular => "curvature-singular".into(),
        EndVerdict::Inconclusive => "inconclusive".into(),
    }
}

#[derive(Serialize)]
struct ShootReport<'a> {
    manifest: &'a RunManifest,
    params: ExpanderParams,
    termination: imcf_lab::shooting::TerminationCause,
    samples: usize,
    arc_span: (f64, f64),
    classification: &'a EndClassification,
}

fn cmd_shoot(ctx: &Ctx, n: u32, c: f64, z0: f64, smax: f64, tol: f64) -> Result<u8, u8> {
    if z0 >= 0.0 {
        return Err(usage_error("z0 must be negative"));
    }
    let params = build_params(n, c)?;
    let config = build_config(smax, tol)?;
    let traj = integrate(axis_seed(z0), &params, &config, Direction::Forward).map_err(|e| {
        eprintln!("error: integration failed: {e}");
        EXIT_INTEGRATION
    })?;
    let classification = classify_end(&traj);
    let manifest = ctx
        .manifest("shoot")
        .with_param("n", n)
        .with_param("C", c)
        .with_param("z0", z0)
        .with_param("smax", smax)
        .with_param("tol", tol);

    let mut csv = Vec::new();
    write_trajectory_csv(&mut csv, &traj).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_TOLERANCE
    })?;
    ctx.write("shoot.csv", &csv)?;

    let radii: Vec<f64> = match &classification.verdict {
        EndVerdict::CylindricalEnd { model, .. } => vec![model.rho],
        _ => vec![],
    };
    ctx.write("shoot.svg", render_profile_svg(&traj, &radii).as_bytes())?;

    let report = ShootReport {
        manifest: &manifest,
        params,
        termination: traj.termination,
        samples: traj.samples.len(),
        arc_span: traj.arc_span(),
        classification: &classification,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_TOLERANCE
    })?;
    ctx.write("shoot.json", format!("{json}\n").as_bytes())?;

    println!(
        "shoot n={} C={} z0={}: {} samples, termination {:?}, end {}",
        n,
        c,
        z0,
        traj.samples.len(),
        traj.termination,
        verdict_summary(&classification.verdict),
    );
    Ok(0)
}

#[derive(Serialize)]
struct SweepArtifact<'a> {
    manifest: &'a RunManifest,
    params: ExpanderParams,
    report: &'a imcf_lab::sweep::SweepReport,
}

fn cmd_sweep(ctx: &Ctx, n: u32, c: Option<f64>, smax: f64, tol: f64) -> Result<u8, u8> {
    let c = c.unwrap_or_else(|| ExpanderParams::cylinder_constant(n));
    let params = build_params(n, c)?;
    let config = build_config(smax, tol)?;
    let report = sweep_bottle(&default_beta_grid(), &default_theta0_grid(), &params, &config)
        .map_err(|e| {
            eprintln!("error: sweep failed: {e}");
            match e {
                imcf_lab::sweep::SweepError::Shoot(_) => EXIT_INTEGRATION,
                _ => EXIT_USAGE,
            }
        })?;

    println!(
        "{:>8} {:>8} {:>28} {:>28} {:>6} {:>5}",
        "beta", "theta0", "forward end", "backward end", "cross", "cand"
    );
    for row in &report.rows {
        println!(
            "{:>8.4} {:>8.4} {:>28} {:>28} {:>6} {:>5}",
            row.beta,
            row.theta0,
            verdict_summary(&row.forward),
            verdict_summary(&row.backward),
            row.crossings,
            if row.candidate { "yes" } else { "no" },
        );
    }

    let manifest = ctx
        .manifest("sweep-bottle")
        .with_param("n", n)
        .with_param("C", c)
        .with_param("smax", smax)
        .with_param("tol", tol);
    let artifact = SweepArtifact { manifest: &manifest, params, report: &report };
    let json = serde_json::to_string_pretty(&artifact).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_TOLERANCE
    })?;
    ctx.write("sweep.json", format!("{json}\n").as_bytes())?;

    if report.found {
        println!(
            "candidate seeds found at grid rows {:?}: two cylindrical ends of distinct \
             radii with a profile self-intersection",
            report.candidates
        );
        Ok(0)
    } else {
        println!(
            "no candidate found in grid: every seed classified with matching end radii \
             or without a self-intersection (see sweep.json for the per-seed table)"
        );
        Ok(EXIT_NOT_FOUND)
    }
}

struct Check {
    report: ResidualReport,
    passed: bool,
    detail: String,
}

fn check_sup(report: ResidualReport, tol: f64) -> Check {
    let passed = report.sup <= tol;
    let detail = format!("sup {:.3e} <= {:.1e}", report.sup, tol);
    Check { report, passed, detail }
}

fn check_order(report: ResidualReport, min_order: f64) -> Check {
    let order = report.order.unwrap_or(f64::NAN);
    let passed = order >= min_order;
    let detail = format!("order {order:.2} >= {min_order:.1}");
    Check { report, passed, detail }
}

fn finish_verify(
    ctx: &Ctx,
    name: &str,
    manifest: RunManifest,
    tolerances: BTreeMap<String, f64>,
    checks: Vec<Check>,
) -> Result<u8, u8> {
    let mut passed = true;
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.report.name,
            c.detail
        );
        passed &= c.passed;
    }
    let report = VerificationReport {
        manifest,
        tolerances,
        residuals: checks.into_iter().map(|c| c.report).collect(),
        passed,
    };
    let mut buf = Vec::new();
    write_json_report(&mut buf, &report).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_TOLERANCE
    })?;
    ctx.write(&format!("verify-{name}.json"), &buf)?;
    Ok(if passed { 0 } else { EXIT_TOLERANCE })
}

fn shoot_expander() -> Result<Trajectory, u8> {
    let params = ExpanderParams::new(2, 1.0).expect("valid");
    let config = IntegratorConfig { s_max: 30.0, ..Default::default() };
    integrate(axis_seed(-1.0), &params, &config, Direction::Forward).map_err(|e| {
        eprintln!("error: integration failed: {e}");
        EXIT_INTEGRATION
    })
}

fn cylinder_trajectory() -> Result<Trajectory, u8> {
    let params = ExpanderParams::new(2, ExpanderParams::cylinder_constant(2)).expect("valid");
    let config = IntegratorConfig { s_max: 4.0, ..Default::default() };
    let seed = ProfileState::new(0.0, 1.0, -2.0, std::f64::consts::FRAC_PI_2);
    integrate(seed, &params, &config, Direction::Forward).map_err(|e| {
        eprintln!("error: integration failed: {e}");
        EXIT_INTEGRATION
    })
}

fn verification_failure(e: impl std::fmt::Display) -> u8 {
    eprintln!("error: verification aborted: {e}");
    EXIT_TOLERANCE
}

fn cmd_verify(ctx: &Ctx, target: VerifyTarget) -> Result<u8, u8> {
    match target {
        VerifyTarget::Kernels => {
            let traj = shoot_expander()?;
            let tols = BTreeMap::from([
                ("kernel_sup".into(), 1e-8),
                ("rotation_tangency_sup".into(), 1e-14),
            ]);
            let r0 = kernel_residual_mode0(&traj).map_err(verification_failure)?;
            let r1 = kernel_residual_mode1(&traj).map_err(verification_failure)?;
            let sym = symmetry_axis_rotation_kernel(&traj);
            let sym_report =
                ResidualReport::from_series("rotation-tangency", 0.0, vec![(0.0, sym)]);
            let checks = vec![
                check_sup(r0, 1e-8),
                check_sup(r1, 1e-8),
                check_sup(sym_report, 1e-14),
            ];
            finish_verify(ctx, "kernels", ctx.manifest("verify kernels"), tols, checks)
        }
        VerifyTarget::Identity => {
            let tols = BTreeMap::from([
                ("identity_final_sup".into(), 1e-6),
                ("identity_min_order".into(), 2.0),
            ]);
            let steps = [3.2e-2, 1.6e-2, 8e-3];
            let families: [(&str, Box<dyn Fn(f64) -> SampledCurve>); 3] = [
                ("catenoid", Box::new(|h| SampledCurve::catenoid(1.0, 1.5, h))),
                ("ellipse", Box::new(|h| SampledCurve::ellipse(1.3, 0.7, 0.5, 2.5, h))),
                ("torus", Box::new(|h| SampledCurve::torus(2.0, 0.5, h))),
            ];
            let mut checks = Vec::new();
            for (name, make) in &families {
                let reports: Vec<ResidualReport> = steps
                    .iter()
                    .map(|&h| support_identity_residual(&make(h), 2))
                    .collect::<Result<_, _>>()
                    .map_err(verification_failure)?;
                let sups: Vec<f64> = reports.iter().map(|r| r.sup).collect();
                let mut finest = reports.into_iter().last().expect("nonempty");
                finest.name = format!("support-identity-{name}");
                finest.order = Some(order_estimate(&sups));
                checks.push(check_order(finest.clone(), 2.0));
                checks.push(check_sup(finest, 1e-6));
            }
            finish_verify(ctx, "identity", ctx.manifest("verify identity"), tols, checks)
        }
        VerifyTarget::Quotient { input, n, c } => {
            let traj = match &input {
                Some(path) => {
                    let params = build_params(n, c)?;
                    let file = std::fs::File::open(path).map_err(|e| {
                        eprintln!("error: cannot open {}: {e}", path.display());
                        EXIT_USAGE
                    })?;
                    read_trajectory_csv(file, &params, &IntegratorConfig::default())
                        .map_err(verification_failure)?
                }
                None => shoot_expander()?,
            };
            let tols = BTreeMap::from([("quotient_sup".into(), 1e-7)]);
            let rq = quotient_residual(&traj).map_err(verification_failure)?;
            let checks = vec![check_sup(rq, 1e-7)];
            finish_verify(ctx, "quotient", ctx.manifest("verify quotient"), tols, checks)
        }
        VerifyTarget::Flow => {
            let tols = BTreeMap::from([
                ("dilation_deviation".into(), 1e-5),
                ("evolution_sup".into(), 1e-6),
            ]);
            let mut checks = Vec::new();

            // cylinder and sphere must follow their e^{Ct} radius laws
            let p_cyl = ExpanderParams::new(2, 1.0).expect("valid");
            let m = 401;
            let cyl: Vec<[f64; 2]> =
                (0..m).map(|i| [1.0, -2.0 + 4.0 * i as f64 / (m - 1) as f64]).collect();
            let config = FlowConfig { n_s: m, store_every: 1000, ..Default::default() };
            let states = imcf_flow(&cyl, &config, &p_cyl).map_err(verification_failure)?;
            let dev = dilation_compare(&states, &cyl, &p_cyl, config.window)
                .map_err(verification_failure)?;
            let series: Vec<(f64, f64)> = dev.clone();
            checks.push(check_sup(
                ResidualReport::from_series("flow-dilation-cylinder", config.dt, series),
                
                1e-5,
            ));

            let p_sph = ExpanderParams::new(2, 0.5).expect("valid");
            let m = 255;
            let sph: Vec<[f64; 2]> = (0..m)
                .map(|i| {
                    let t = 0.3 + (std::f64::consts::PI - 0.6) * i as f64 / (m - 1) as f64;
                    [t.sin(), -t.cos()]
                })
                .collect();
            let config = FlowConfig { n_s: m, store_every: 1000, ..Default::default() };
            let states = imcf_flow(&sph, &config, &p_sph).map_err(verification_failure)?;
            let dev = dilation_compare(&states, &sph, &p_sph, config.window)
                .map_err(verification_failure)?;
            checks.push(check_sup(
                ResidualReport::from_series("flow-dilation-sphere", config.dt, dev),
                
                1e-5,
            ));

            // evolution identities at material points on the cylinder
            let config = FlowConfig {
                dt: 1e-6,
                t_end: 2e-6,
                n_s: cyl.len(),
                resample: ResampleMode::Never,
                store_every: 1,
                ..Default::default()
            };
            let states = imcf_flow(&cyl, &config, &p_cyl).map_err(verification_failure)?;
            let (rh, rnu) =
                flow_evolution_checks(&states, &p_cyl, (0.2, 0.8), 1).map_err(verification_failure)?;
            let rs =
                support_variation_check(&states, (0.2, 0.8), 1).map_err(verification_failure)?;
            checks.push(check_sup(rh, 1e-6));
            checks.push(check_sup(rnu, 1e-6));
            checks.push(check_sup(rs, 1e-6));

            finish_verify(ctx, "flow", ctx.manifest("verify flow"), tols, checks)
        }
        VerifyTarget::Mesh => {
            let tols = BTreeMap::from([
                ("cylinder_dilation_sup".into(), 1e-10),
                ("mesh_min_order".into(), 1.5),
            ]);
            let traj = cylinder_trajectory()?;
            let mesh = build_mesh(&traj, 0.5, 3.5, 24, 24).map_err(verification_failure)?;
            let f = kernel_values(&mesh, KernelFunction::Dilation);
            let exact =
                discrete_linearized_residual(&mesh, &f).map_err(verification_failure)?;
            let study = refinement_study(&traj, 0.5, 3.5, 12, 12, 3, KernelFunction::TiltRotation)
                .map_err(verification_failure)?;
            let finest = study.into_iter().last().expect("levels >= 1");
            let checks = vec![
                check_sup(exact, 1e-10),
                check_order(finest, 1.5),
            ];
            finish_verify(ctx, "mesh", ctx.manifest("verify mesh"), tols, checks)
        }
    }
}
