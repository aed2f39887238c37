//! Acceptance gate: one test per shipping criterion, each printing a
//! single `ACCEPTANCE <nn> <name>: PASS/FAIL (<evidence>)` line (visible
//! with `cargo test --test acceptance -- --nocapture`). Tolerances and
//! runtime budgets are pinned here, not configurable: loosening them is
//! a code change that shows up in review.

use imcf_lab::asymptotics::{
    check_growth_conditions, classify_end, estimate_cylinder, EndVerdict, EndWindowStats,
    GrowthThresholds, DEFAULT_WINDOWS,
};
use imcf_lab::curves::{support_identity_residual, SampledCurve};
use imcf_lab::flow::{
    dilation_compare, flow_evolution_checks, imcf_flow, stable_time_step,
    support_variation_check, FlowConfig, ResampleMode,
};
use imcf_lab::geometry::{geometric_sample_with_kappa1, ExpanderParams, ProfileState};
use imcf_lab::io::{read_trajectory_csv, write_trajectory_csv};
use imcf_lab::linearized::{kernel_residual_mode0, kernel_residual_mode1, quotient_residual};
use imcf_lab::mesh::{refinement_study, KernelFunction};
use imcf_lab::numerics::order_estimate;
use imcf_lab::shooting::{
    integrate, shoot_axis, Direction, IntegratorConfig, Sample, TerminationCause, Trajectory,
};
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

/// Collects per-criterion failures so each test emits exactly one
/// verdict line before panicking.
struct Gate {
    label: &'static str,
    failures: Vec<String>,
    t0: Instant,
}

impl Gate {
    fn new(label: &'static str) -> Gate {
        Gate { label, failures: Vec::new(), t0: Instant::now() }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(msg());
        }
    }

    /// Asserts the runtime budget (seconds; infinite if none is pinned),
    /// prints the verdict line, and panics if anything failed.
    fn finish(mut self, budget_s: f64, detail: String) {
        let elapsed = self.t0.elapsed().as_secs_f64();
        if budget_s.is_finite() {
            self.check(elapsed <= budget_s, || {
                format!("runtime {elapsed:.2}s exceeds budget {budget_s}s")
            });
        }
        if self.failures.is_empty() {
            println!("ACCEPTANCE {}: PASS ({detail}; {elapsed:.2}s)", self.label);
        } else {
            println!(
                "ACCEPTANCE {}: FAIL ({})",
                self.label,
                self.failures.join("; ")
            );
            panic!("{}: {}", self.label, self.failures.join("; "));
        }
    }
}

fn params(n: u32, c: f64) -> ExpanderParams {
    ExpanderParams::new(n, c).expect("valid parameters")
}

fn config(s_max: f64, rk_tol: f64) -> IntegratorConfig {
    IntegratorConfig { s_max, rk_tol, ..Default::default() }
}

/// Seed on the axis below the origin, entering the branch horizontally.
fn axis_seed(z0: f64) -> ProfileState {
    ProfileState::new(0.0, f64::EPSILON.sqrt(), z0, 0.0)
}

fn hi_trajectory(s_max: f64) -> Trajectory {
    integrate(axis_seed(-1.0), &params(2, 1.0), &config(s_max, 1e-10), Direction::Forward)
        .expect("expander shot fails")
}

/// Exact cylinder trajectory assembled from closed-form samples.
fn cylinder_traj(n: u32, rho: f64, z_lo: f64, z_hi: f64, m: usize) -> Trajectory {
    let p = params(n, ExpanderParams::cylinder_constant(n));
    let mut samples = Vec::with_capacity(m);
    for k in 0..m {
        let z = z_lo + (z_hi - z_lo) * k as f64 / (m - 1) as f64;
        let state = ProfileState::new(z - z_lo, rho, z, FRAC_PI_2);
        let geom = geometric_sample_with_kappa1(&state, n, 0.0);
        samples.push(Sample { state, geom });
    }
    Trajectory::from_samples(
        p,
        IntegratorConfig::default(),
        Direction::Forward,
        samples,
        TerminationCause::ReachedSMax,
    )
}

/// Exact origin-centered sphere trajectory, poles excluded.
fn sphere_traj(radius: f64, m: usize) -> Trajectory {
    let p = params(2, ExpanderParams::sphere_constant(2));
    let mut samples = Vec::with_capacity(m);
    for k in 0..m {
        let t = 0.1 + (PI - 0.2) * k as f64 / (m - 1) as f64;
        let state = ProfileState::new(radius * t, radius * t.sin(), -radius * t.cos(), t);
        let geom = geometric_sample_with_kappa1(&state, 2, 1.0 / radius);
        samples.push(Sample { state, geom });
    }
    Trajectory::from_samples(
        p,
        IntegratorConfig::default(),
        Direction::Forward,
        samples,
        TerminationCause::ReachedSMax,
    )
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_imcf-lab"))
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("imcf-lab-acceptance-{}-{tag}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("create scratch dir");
    dir
}

#[test]
fn criterion_01_closed_form_solitons() {
    let mut gate = Gate::new("01 closed-form-solitons");
    let mut detail = Vec::new();
    for n in [2u32, 3, 4] {
        // cylinder at the neutral constant stays at r = 1 over s in [0, 200];
        // rk_tol 1e-12 because radius errors sit on a neutral direction and
        // accumulate ~100x the local tolerance over this arc
        let t_cyl = Instant::now();
        let p = params(n, ExpanderParams::cylinder_constant(n));
        let seed = ProfileState::new(0.0, 1.0, -1.0, FRAC_PI_2);
        match integrate(seed, &p, &config(200.0, 1e-12), Direction::Forward) {
            Ok(traj) => {
                gate.check(traj.termination == TerminationCause::ReachedSMax, || {
                    format!("n={n} cylinder terminated {:?}", traj.termination)
                });
                let dev = traj
                    .samples
                    .iter()
                    .map(|s| (s.state.r - 1.0).abs())
                    .fold(0.0, f64::max);
                gate.check(dev <= 1e-9, || format!("n={n} cylinder radius drift {dev:.3e}"));
                gate.check(t_cyl.elapsed().as_secs_f64() < 1.0, || {
                    format!("n={n} cylinder run took {:.2}s", t_cyl.elapsed().as_secs_f64())
                });
                detail.push(format!("n={n} cyl {dev:.1e}"));
            }
            Err(e) => gate.check(false, || format!("n={n} cylinder: {e}")),
        }
        // sphere at C = 1/n caps on the axis tracing the unit circle;
        // rk_tol 1e-13 because tolerance-scale noise near the inbound pole
        // integrates to a position offset ≈ rk_tol·r^{−(n−2)} before the
        // cap event closes at r = 5e-3 (≈ 4e4·rk_tol at n = 4)
        let t_sph = Instant::now();
        let p = params(n, ExpanderParams::sphere_constant(n));
        match shoot_axis(-1.0, &p, &config(50.0, 1e-13)) {
            Ok(traj) => {
                gate.check(traj.termination == TerminationCause::AxisCap, || {
                    format!("n={n} sphere terminated {:?}", traj.termination)
                });
                let dev = traj
                    .samples
                    .iter()
                    .map(|s| (s.state.r.hypot(s.state.z) - 1.0).abs())
                    .fold(0.0, f64::max);
                gate.check(dev <= 1e-8, || format!("n={n} sphere circle gap {dev:.3e}"));
                gate.check(t_sph.elapsed().as_secs_f64() < 1.0, || {
                    format!("n={n} sphere run took {:.2}s", t_sph.elapsed().as_secs_f64())
                });
                detail.push(format!("n={n} sph {dev:.1e}"));
            }
            Err(e) => gate.check(false, || format!("n={n} sphere: {e}")),
        }
    }
    gate.finish(f64::INFINITY, detail.join(", "));
}

#[test]
fn criterion_02_soliton_consistency() {
    // |−1/H − Cψ| ≤ 10 rk_tol at every accepted step, rk_tol = 1e-10,
    // across a representative spread of seeds and dimensions
    let mut gate = Gate::new("02 soliton-consistency");
    let tol = 10.0 * 1e-10;
    let mut worst: f64 = 0.0;
    let runs: Vec<(String, Trajectory)> = vec![
        ("expander n=2".into(), hi_trajectory(200.0)),
        (
            "expander n=3".into(),
            integrate(axis_seed(-1.0), &params(3, 0.5), &config(200.0, 1e-10), Direction::Forward)
                .expect("n=3 shot"),
        ),
        (
            "trumpet forward".into(),
            integrate(
                ProfileState::new(0.0, 1.0, 0.0, FRAC_PI_2 + 0.1),
                &params(2, 1.0),
                &config(50.0, 1e-10),
                Direction::Forward,
            )
            .expect("trumpet forward"),
        ),
        (
            "trumpet backward".into(),
            integrate(
                ProfileState::new(0.0, 1.0, 0.0, FRAC_PI_2 + 0.1),
                &params(2, 1.0),
                &config(50.0, 1e-10),
                Direction::Backward,
            )
            .expect("trumpet backward"),
        ),
        ("sphere n=4".into(), shoot_axis(-1.0, &params(4, 0.25), &config(50.0, 1e-10)).expect("cap")),
    ];
    for (name, traj) in &runs {
        let c = traj.params.c;
        let sup = traj
            .samples
            .iter()
            .map(|s| (-1.0 / s.geom.h - c * s.geom.psi).abs())
            .fold(0.0, f64::max);
        worst = worst.max(sup);
        gate.check(sup <= tol, || format!("{name}: sup |−1/H − Cψ| = {sup:.3e} > {tol:.1e}"));
    }
    gate.finish(f64::INFINITY, format!("worst {worst:.2e} over {} trajectories", runs.len()));
}

#[test]
fn criterion_03_cylindrical_end_classification() {
    let mut gate = Gate::new("03 cylindrical-end-classification");
    let traj = hi_trajectory(200.0);
    let class = classify_end(&traj);
    let rho = match &class.verdict {
        EndVerdict::CylindricalEnd { model, .. } => model.rho,
        other => {
            gate.check(false, || format!("verdict {other:?}"));
            f64::NAN
        }
    };
    gate.check(class.evidence.len() >= 3, || {
        format!("only {} evidence windows", class.evidence.len())
    });
    // all six window statistics pass the formal trend check: monotone
    // decrease across the trailing windows or already at the rounding
    // floor (1e-4 of the threshold), plus final-window smallness. By
    // s = 200 every statistic sits at the integrator noise floor
    // (~4e-8 of accumulated tolerance drift), so raw window-to-window
    // decrease is not meaningful there.
    let est200 = estimate_cylinder(&traj).expect("estimate at s_max 200");
    let th = GrowthThresholds::default().scaled(est200.model.rho);
    match check_growth_conditions(&traj, &est200.model, DEFAULT_WINDOWS, &th) {
        Ok(rep) => {
            for (k, name) in EndWindowStats::NAMES.iter().enumerate() {
                gate.check(rep.pass[k], || {
                    format!(
                        "{name} failed the trend/threshold check: windows {:?}",
                        rep.stats.iter().map(|w| w.sups()[k]).collect::<Vec<_>>()
                    )
                });
            }
        }
        Err(e) => gate.check(false, || format!("growth check: {e}")),
    }
    // on a short, densely sampled arc the convergence transient is still
    // far above that floor, so every statistic must decrease outright
    let short = integrate(
        axis_seed(-1.0),
        &params(2, 1.0),
        &IntegratorConfig { s_max: 40.0, h_max: 0.25, ..Default::default() },
        Direction::Forward,
    )
    .expect("short expander shot");
    let short_class = classify_end(&short);
    gate.check(matches!(short_class.verdict, EndVerdict::CylindricalEnd { .. }), || {
        format!("short-arc verdict {:?}", short_class.verdict)
    });
    if let (Some(first), Some(last)) =
        (short_class.evidence.first(), short_class.evidence.last())
    {
        for (k, name) in EndWindowStats::NAMES.iter().enumerate() {
            let (a, b) = (first.sups()[k], last.sups()[k]);
            gate.check(b < a, || {
                format!("{name} did not decay on the short arc: first {a:.3e}, last {b:.3e}")
            });
        }
    }
    // radius estimates from −ψ and from r agree, and the estimate is
    // stable under doubling the arc budget
    gate.check((est200.model.rho - est200.rho_from_r).abs() <= 1e-4, || {
        format!(
            "radius estimates disagree: −ψ {:.8}, r {:.8}",
            est200.model.rho, est200.rho_from_r
        )
    });
    let est400 = estimate_cylinder(&hi_trajectory(400.0)).expect("estimate at s_max 400");
    gate.check((est400.model.rho - est200.model.rho).abs() <= 1e-4, || {
        format!("doubling s_max moved rho {:.8} -> {:.8}", est200.model.rho, est400.model.rho)
    });
    gate.finish(5.0, format!("rho_inf = {rho:.9} (recorded), {} windows", class.evidence.len()));
}

#[test]
fn criterion_04_linearized_kernels() {
    let mut gate = Gate::new("04 linearized-kernels");
    let hi = hi_trajectory(200.0);
    let r0 = kernel_residual_mode0(&hi).expect("mode 0");
    let r1 = kernel_residual_mode1(&hi).expect("mode 1");
    gate.check(r0.sup <= 1e-8, || format!("mode-0 sup {:.3e}", r0.sup));
    gate.check(r1.sup <= 1e-8, || format!("mode-1 sup {:.3e}", r1.sup));
    // closed forms sit at the rounding floor
    for (name, traj, tol) in [
        ("cylinder n=2", cylinder_traj(2, 1.0, -10.0, 10.0, 41), 1e-13),
        ("cylinder n=3", cylinder_traj(3, 0.7, -8.0, 8.0, 33), 1e-13),
        ("sphere", sphere_traj(1.3, 37), 1e-12),
    ] {
        let k0 = kernel_residual_mode0(&traj).expect("closed-form mode 0");
        let k1 = kernel_residual_mode1(&traj).expect("closed-form mode 1");
        gate.check(k0.sup <= tol, || format!("{name} mode-0 sup {:.3e}", k0.sup));
        gate.check(k1.sup <= tol, || format!("{name} mode-1 sup {:.3e}", k1.sup));
    }
    gate.finish(1.0, format!("mode0 {:.2e}, mode1 {:.2e}", r0.sup, r1.sup));
}

#[test]
fn criterion_05_quotient_drift() {
    let mut gate = Gate::new("05 quotient-drift");
    let rq = quotient_residual(&hi_trajectory(200.0)).expect("quotient");
    gate.check(rq.sup <= 1e-7, || format!("expander sup {:.3e}", rq.sup));
    let rc = quotient_residual(&cylinder_traj(2, 1.0, -10.0, 10.0, 41)).expect("cylinder");
    gate.check(rc.sup <= 1e-13, || format!("cylinder sup {:.3e}", rc.sup));
    gate.finish(f64::INFINITY, format!("expander {:.2e}, cylinder {:.2e}", rq.sup, rc.sup));
}

#[test]
fn criterion_06_support_identity_refinement() {
    let mut gate = Gate::new("06 support-identity-refinement");
    let steps = [3.2e-2, 1.6e-2, 8e-3];
    let families: [(&str, Box<dyn Fn(f64) -> SampledCurve>); 3] = [
        ("catenoid", Box::new(|h| SampledCurve::catenoid(1.0, 1.5, h))),
        ("ellipse", Box::new(|h| SampledCurve::ellipse(1.3, 0.7, 0.5, 2.5, h))),
        ("torus", Box::new(|h| SampledCurve::torus(2.0, 0.5, h))),
    ];
    let mut detail = Vec::new();
    for (name, make) in &families {
        let sups: Vec<f64> = steps
            .iter()
            .map(|&h| support_identity_residual(&make(h), 2).expect("residual").sup)
            .collect();
        let order = order_estimate(&sups);
        gate.check(order >= 2.0, || format!("{name}: order {order:.2} from {sups:?}"));
        gate.check(sups[2] <= 1e-6, || format!("{name}: finest sup {:.3e}", sups[2]));
        detail.push(format!("{name} order {order:.2} final {:.1e}", sups[2]));
    }
    gate.finish(f64::INFINITY, detail.join(", "));
}

#[test]
fn criterion_07_discrete_mesh_operator() {
    let mut gate = Gate::new("07 discrete-mesh-operator");
    let cyl = integrate(
        ProfileState::new(0.0, 1.0, -2.0, FRAC_PI_2),
        &params(2, 1.0),
        &config(4.0, 1e-10),
        Direction::Forward,
    )
    .expect("cylinder shot");
    let hi = hi_trajectory(4.0);
    let mut detail = Vec::new();
    for (surface, traj, s_lo, s_hi) in [("cylinder", &cyl, 0.5, 3.5), ("expander", &hi, 0.5, 2.5)]
    {
        for which in [KernelFunction::Dilation, KernelFunction::TiltRotation] {
            let reports = refinement_study(traj, s_lo, s_hi, 12, 12, 3, which)
                .expect("refinement study");
            let finest = reports.last().expect("3 levels");
            let order = finest.order.unwrap_or(f64::NAN);
            let sups: Vec<f64> = reports.iter().map(|r| r.sup).collect();
            // the dilation kernel is constant on an exact cylinder, so the
            // discrete operator annihilates it to rounding at every level;
            // refinement then measures rounding growth, and exactness is
            // the stronger statement
            let at_floor = sups.iter().all(|s| *s <= 1e-12);
            gate.check(order >= 1.5 || at_floor, || {
                format!("{surface} {which:?}: order {order:.2} from {sups:?}")
            });
            detail.push(if at_floor {
                format!("{surface} {which:?} exact ({:.1e})", finest.sup)
            } else {
                format!("{surface} {which:?} {order:.2}")
            });
        }
    }
    gate.finish(30.0, detail.join(", "));
}

#[test]
fn criterion_08_flow_verification() {
    let mut gate = Gate::new("08 flow-verification");

    // exponential radius laws at the pinned discretization
    // (dt = 1e-4, Δs = 1e-2, t = 0.1)
    let p2 = params(2, 1.0);
    let m = 401;
    let cyl: Vec<[f64; 2]> =
        (0..m).map(|i| [1.0, -2.0 + 4.0 * i as f64 / (m - 1) as f64]).collect();
    let cfg = FlowConfig { n_s: m, store_every: 1000, ..Default::default() };
    let states = imcf_flow(&cyl, &cfg, &p2).expect("cylinder flow");
    let dev_cyl = dilation_compare(&states, &cyl, &p2, cfg.window)
        .expect("cylinder dilation")
        .last()
        .expect("stored level")
        .1;
    gate.check(dev_cyl <= 1e-5, || format!("cylinder radius law deviation {dev_cyl:.3e}"));

    let p_sph = params(2, 0.5);
    let m = 255;
    let sph: Vec<[f64; 2]> = (0..m)
        .map(|i| {
            let t = 0.3 + (PI - 0.6) * i as f64 / (m - 1) as f64;
            [t.sin(), -t.cos()]
        })
        .collect();
    let cfg = FlowConfig { n_s: m, store_every: 1000, ..Default::default() };
    let states = imcf_flow(&sph, &cfg, &p_sph).expect("sphere flow");
    let dev_sph = dilation_compare(&states, &sph, &p_sph, cfg.window)
        .expect("sphere dilation")
        .last()
        .expect("stored level")
        .1;
    gate.check(dev_sph <= 1e-5, || format!("sphere radius law deviation {dev_sph:.3e}"));

    // expander window: dilation deviation halves when dt and Δs² halve
    let window = (0.3, 0.7);
    let hi = hi_trajectory(4.0);
    let window_profile = |ds: f64| -> Vec<[f64; 2]> {
        let m = (2.0 / ds).round() as usize + 1;
        hi.resample_uniform(0.5, 2.5, m)
            .expect("resample")
            .iter()
            .map(|s| [s.state.r, s.state.z])
            .collect()
    };
    let mut devs = Vec::new();
    for (ds, dt) in [(0.025, 1e-4), (0.025 / std::f64::consts::SQRT_2, 5e-5)] {
        let initial = window_profile(ds);
        let cfg = FlowConfig {
            dt,
            t_end: 0.05,
            n_s: initial.len(),
            window,
            store_every: 1000,
            ..Default::default()
        };
        let states = imcf_flow(&initial, &cfg, &p2).expect("expander flow");
        devs.push(
            dilation_compare(&states, &initial, &p2, window)
                .expect("expander dilation")
                .last()
                .expect("stored level")
                .1,
        );
    }
    gate.check(devs[0] <= 1e-3, || format!("expander dilation deviation {:.3e}", devs[0]));
    let ratio = devs[0] / devs[1];
    gate.check((1.6..=2.4).contains(&ratio), || {
        format!("dilation refinement ratio {ratio:.2} from {devs:?}")
    });

    // evolution and support-variation residuals refine at second order
    let mut sups: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for level in 0..3 {
        let ds = 0.05 / (1 << level) as f64;
        let dt = 0.35 * stable_time_step(ds, 0.64);
        let initial = window_profile(ds);
        let spacing = 10;
        let cfg = FlowConfig {
            dt,
            t_end: 2.0 * spacing as f64 * dt,
            n_s: initial.len(),
            resample: ResampleMode::Never,
            store_every: spacing,
            ..Default::default()
        };
        let states = imcf_flow(&initial, &cfg, &p2).expect("burst");
        let (rh, rnu) = flow_evolution_checks(&states, &p2, (0.2, 0.8), 1).expect("evolution");
        let rs = support_variation_check(&states, (0.2, 0.8), 1).expect("support variation");
        sups[0].push(rh.sup);
        sups[1].push(rnu.sup);
        sups[2].push(rs.sup);
    }
    let mut orders = Vec::new();
    for (name, series) in ["dH", "dnu", "support"].iter().zip(&sups) {
        gate.check(series[0] <= 1e-4, || format!("{name} level-0 sup {:.3e}", series[0]));
        let order = order_estimate(series);
        gate.check(order >= 1.8, || format!("{name}: order {order:.2} from {series:?}"));
        orders.push(format!("{name} {order:.2}"));
    }
    gate.finish(
        60.0,
        format!(
            "laws cyl {dev_cyl:.1e} sph {dev_sph:.1e}, dilation ratio {ratio:.2}, orders {}",
            orders.join(" ")
        ),
    );
}

#[test]
fn criterion_09_bottle_sweep() {
    let mut gate = Gate::new("09 bottle-sweep");
    let dir = scratch_dir("sweep");
    let out = bin()
        .args(["--out", dir.to_str().unwrap(), "sweep-bottle", "--n", "2"])
        .output()
        .expect("run sweep");
    let stdout = String::from_utf8_lossy(&out.stdout);
    let code = out.status.code();
    let outcome = match code {
        Some(0) => {
            gate.check(stdout.contains("candidate seeds found"), || {
                format!("exit 0 without a candidate report: {stdout}")
            });
            "candidate found"
        }
        Some(4) => {
            // the default grid seeds all lie on the neutral cylinder
            // family, so the documented explicit not-found outcome is
            // the expected result at default resolution
            gate.check(stdout.contains("no candidate found in grid"), || {
                format!("exit 4 without the explicit not-found line: {stdout}")
            });
            "explicit not-found status"
        }
        other => {
            gate.check(false, || format!("unexpected exit {other:?}: {stdout}"));
            "error"
        }
    };
    let table: serde_json::Value = serde_json::from_slice(
        &std::fs::read(dir.join("sweep.json")).expect("sweep.json written"),
    )
    .expect("sweep.json parses");
    let rows = table["report"]["rows"].as_array().map(|r| r.len()).unwrap_or(0);
    gate.check(rows == 17, || format!("expected 17 grid rows, got {rows}"));
    let _ = std::fs::remove_dir_all(&dir);
    gate.finish(120.0, format!("{outcome}, {rows} grid rows"));
}

#[test]
fn criterion_10_determinism_round_trip() {
    let mut gate = Gate::new("10 determinism-round-trip");
    let args = |dir: &PathBuf| {
        vec![
            "--out".into(),
            dir.to_str().unwrap().to_string(),
            "--timestamp".into(),
            "2026-08-15T00:00:00Z".into(),
            "--seed".into(),
            "7".into(),
            "shoot".into(),
            "--n".into(),
            "2".into(),
            "--C".into(),
            "1".into(),
            "--z0".into(),
            "-1".into(),
            "--smax".into(),
            "50".into(),
        ]
    };
    let dir_a = scratch_dir("det-a");
    let dir_b = scratch_dir("det-b");
    for dir in [&dir_a, &dir_b] {
        let out = bin().args(args(dir)).output().expect("run shoot");
        gate.check(out.status.success(), || {
            format!("shoot failed: {}", String::from_utf8_lossy(&out.stderr))
        });
    }
    for name in ["shoot.csv", "shoot.json", "shoot.svg"] {
        let a = std::fs::read(dir_a.join(name)).expect("artifact A");
        let b = std::fs::read(dir_b.join(name)).expect("artifact B");
        gate.check(a == b, || format!("{name} differs between identical runs"));
    }
    // float round-trip: parse the CSV and re-serialize to identical bytes
    let original = std::fs::read(dir_a.join("shoot.csv")).expect("csv");
    let traj = read_trajectory_csv(original.as_slice(), &params(2, 1.0), &config(50.0, 1e-10))
        .expect("csv parses");
    let mut rewritten = Vec::new();
    write_trajectory_csv(&mut rewritten, &traj).expect("csv rewrites");
    gate.check(rewritten == original, || "CSV round-trip is not byte-exact".into());
    let _ = std::fs::remove_dir_all(&dir_a);
    let _ = std::fs::remove_dir_all(&dir_b);
    gate.finish(
        f64::INFINITY,
        format!("3 artifacts byte-identical, CSV round-trip exact ({} bytes)", original.len()),
    );
}
