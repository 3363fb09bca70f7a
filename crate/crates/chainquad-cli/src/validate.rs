//! Randomized validation suites: deterministic, seeded re-runs of the
//! library's structural invariants. Each check returns `Ok(detail)` or
//! `Err(what failed)` so the CLI can print one line per check and exit
//! nonzero if anything regressed.

use chainquad_core::dynamics::{
    rk4_step, solve_accel_qform, solve_accel_wform, wform_system, ControlInput,
};
use chainquad_core::gains::solve_lyapunov;
use chainquad_core::geom::{exp_so3, hat, renormalize, vee, UnitVector};
use chainquad_core::linearize::fd_jacobian_check;
use chainquad_core::model::{
    linear_momentum, total_energy, SystemParams, SystemState,
};
use chainquad_core::sim::{metrics, run, Scenario};
use chainquad_core::{DMat, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CheckResult = Result<String, String>;

fn rand_vec3(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

fn bench_params_with_links(n: usize) -> SystemParams {
    let mut p = Scenario::paper_sim().params;
    p.link_masses = vec![0.1; n];
    p.link_lengths = vec![0.1; n];
    p.dist_force = Vec3::zeros();
    p.dist_moment = Vec3::zeros();
    p
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> SystemState {
    let mut s = SystemState::hanging_equilibrium(n, rand_vec3(rng, 1.0));
    s.velocity = rand_vec3(rng, 1.0);
    s.attitude = exp_so3(&rand_vec3(rng, 2.0));
    s.body_rate = rand_vec3(rng, 1.0);
    for i in 0..n {
        let (q, w) = renormalize(&rand_vec3(rng, 1.0), &rand_vec3(rng, 1.0))
            .expect("random direction nondegenerate");
        s.link_dirs[i] = q;
        s.link_rates[i] = w;
    }
    s
}

/// hat/vee inversion, exponential-map validity, and renormalize idempotence
/// over random draws.
pub fn check_geom(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_orth: f64 = 0.0;
    for _ in 0..10_000 {
        let v = rand_vec3(&mut rng, 10.0 / 3.0f64.sqrt());
        let r = exp_so3(&v);
        worst_orth = worst_orth
            .max(r.orthogonality_error())
            .max((r.matrix().determinant() - 1.0).abs());
        let round = vee(&hat(&v)).map_err(|e| format!("vee(hat(v)) failed: {e}"))?;
        if (round - v).norm() > 1e-12 {
            return Err(format!("vee(hat(v)) mismatch by {}", (round - v).norm()));
        }
    }
    if worst_orth > 1e-10 {
        return Err(format!("exp_so3 left SO(3) by {worst_orth:e}"));
    }
    for _ in 0..1000 {
        let q = rand_vec3(&mut rng, 1.0);
        if q.norm() <= 1e-3 {
            continue;
        }
        let w = rand_vec3(&mut rng, 2.0);
        let (q1, w1) = renormalize(&q, &w).map_err(|e| format!("renormalize: {e}"))?;
        let (q2, w2) = renormalize(q1.vector(), &w1).unwrap();
        if (q2.vector() - q1.vector()).norm() > 1e-15
            || (w2 - w1).norm() > 1e-15 * (1.0 + w1.norm())
        {
            return Err("renormalize is not idempotent".into());
        }
    }
    Ok(format!("worst SO(3) defect {worst_orth:.2e}"))
}

/// The two acceleration formulations agree on random feasible states and the
/// ω-form matrix is symmetric.
pub fn check_formulations(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    for &n in &[1usize, 2, 5] {
        let p = bench_params_with_links(n);
        for _ in 0..1000 {
            let s = random_state(&mut rng, n);
            let u = ControlInput {
                thrust: rng.gen_range(-5.0..15.0),
                moment: rand_vec3(&mut rng, 0.1),
            };
            let aq = solve_accel_qform(&s, &u, &p).map_err(|e| format!("q-form: {e}"))?;
            let aw = solve_accel_wform(&s, &u, &p).map_err(|e| format!("w-form: {e}"))?;
            worst = worst.max((aq.linear - aw.linear).amax());
            for i in 0..n {
                worst = worst.max((aq.link_rate[i] - aw.link_rate[i]).amax());
                worst = worst.max((aq.link_dir[i] - aw.link_dir[i]).amax());
            }
            let (a, _) = wform_system(&s, &u, &p);
            worst_sym = worst_sym.max((&a - a.transpose()).norm());
        }
    }
    if worst > 1e-9 {
        return Err(format!("formulations disagree by {worst:e}"));
    }
    if worst_sym > 1e-12 {
        return Err(format!("w-form asymmetry {worst_sym:e}"));
    }
    Ok(format!("max disagreement {worst:.2e}, max asymmetry {worst_sym:.2e}"))
}

/// Free-dynamics energy and momentum conservation over 5 s.
pub fn check_conservation(_seed: u64) -> CheckResult {
    let p = bench_params_with_links(5);
    let mut s = Scenario::paper_sim().initial_state();
    s.body_rate = Vec3::new(0.1, -0.2, 0.3);
    let e0 = total_energy(&s, &p).total;
    let m0 = linear_momentum(&s, &p);
    let dt = 1e-3;
    let steps = 5000;
    for _ in 0..steps {
        s = rk4_step(&s, &ControlInput::zero(), &p, dt).map_err(|e| format!("{e}"))?;
    }
    let e1 = total_energy(&s, &p).total;
    let m1 = linear_momentum(&s, &p);
    let de = ((e1 - e0) / e0).abs();
    let dh = (m1.x - m0.x).abs().max((m1.y - m0.y).abs());
    let dv = ((m1.z - m0.z) - 1.0 * p.gravity * dt * steps as f64).abs() / (p.gravity * dt * steps as f64);
    if de > 1e-4 {
        return Err(format!("energy drift {de:e} at dt=1e-3"));
    }
    if dh > 1e-8 {
        return Err(format!("horizontal momentum drift {dh:e}"));
    }
    if dv > 1e-6 {
        return Err(format!("vertical momentum error {dv:e}"));
    }
    Ok(format!("energy drift {de:.2e}, momentum drift {dh:.2e}"))
}

/// Constraint preservation along the full closed-loop benchmark run.
pub fn check_constraints(_seed: u64) -> CheckResult {
    let log = run(&Scenario::paper_sim()).map_err(|e| format!("{e}"))?;
    let mut worst_norm: f64 = 0.0;
    let mut worst_dot: f64 = 0.0;
    for smp in &log.samples {
        for i in 0..log.n {
            let q = smp.state.link_dirs[i].vector();
            worst_norm = worst_norm.max((q.norm() - 1.0).abs());
            worst_dot = worst_dot.max(q.dot(&smp.state.link_rates[i]).abs());
        }
    }
    if worst_norm >= 1e-12 {
        return Err(format!("|q| drift {worst_norm:e}"));
    }
    if worst_dot >= 1e-9 {
        return Err(format!("q.w drift {worst_dot:e}"));
    }
    Ok(format!("|q|-1 max {worst_norm:.1e}, q.w max {worst_dot:.1e}"))
}

/// Finite-difference Jacobian agreement for the open- and closed-loop
/// linearizations.
pub fn check_linearization(_seed: u64) -> CheckResult {
    let sc = Scenario::paper_sim();
    let kx = sc.gains.kx_matrix();
    let kdx = sc.gains.kdx_matrix();
    let closed = fd_jacobian_check(&sc.params, &kx, &kdx, 1e-6).map_err(|e| format!("{e}"))?;
    let zero = DMat::zeros(3, 13);
    let open = fd_jacobian_check(&sc.params, &zero, &zero, 1e-6).map_err(|e| format!("{e}"))?;
    if closed > 1e-4 || open > 1e-4 {
        return Err(format!("fd error closed {closed:e}, open {open:e}"));
    }
    Ok(format!("fd error closed {closed:.2e}, open {open:.2e}"))
}

/// Lyapunov solves on random Hurwitz matrices keep small residuals and
/// positive definite solutions.
pub fn check_lyapunov(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_res: f64 = 0.0;
    for k in 0..100 {
        let d = 2 + k % 7;
        let raw = DMat::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
        // Shift left of the imaginary axis.
        let shift = raw.norm() + 0.2;
        let a = raw - DMat::identity(d, d) * shift;
        let q = DMat::identity(d, d);
        let p = solve_lyapunov(&a, &q).map_err(|e| format!("solve: {e}"))?;
        let res = ((a.transpose() * &p) + (&p * &a) + &q).norm() / q.norm();
        worst_res = worst_res.max(res);
        let min_eig = p.symmetric_eigenvalues().min();
        if min_eig <= 0.0 {
            return Err(format!("P not positive definite (min eig {min_eig})"));
        }
    }
    if worst_res > 1e-10 {
        return Err(format!("worst residual {worst_res:e}"));
    }
    Ok(format!("worst residual {worst_res:.2e}"))
}

/// Controller identities along the benchmark trajectory: the thrust
/// magnitude identity and invariance of the commanded attitude under
/// positive scaling of the ideal force.
pub fn check_controller_identities(seed: u64) -> CheckResult {
    use chainquad_core::controller::desired_attitude;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b1d = UnitVector::new(Vec3::x()).unwrap();
    let mut worst_f: f64 = 0.0;
    let mut worst_rc: f64 = 0.0;
    for _ in 0..2000 {
        let a = Vec3::new(
            rng.gen_range(-8.0..8.0),
            rng.gen_range(-8.0..8.0),
            rng.gen_range(-14.0..-2.0),
        );
        let r = exp_so3(&rand_vec3(&mut rng, 0.6));
        let rc = desired_attitude(&a, &b1d).map_err(|e| format!("{e}"))?;
        // f = -A . Re3 must equal |A| (e3' Rc' R e3).
        let f = -a.dot(&(r.matrix() * Vec3::z()));
        let ident = a.norm()
            * (Vec3::z().transpose() * rc.matrix().transpose() * r.matrix() * Vec3::z())[(0, 0)];
        worst_f = worst_f.max((f - ident).abs());
        let rc_scaled = desired_attitude(&(a * rng.gen_range(0.1..10.0)), &b1d).unwrap();
        worst_rc = worst_rc.max((rc.matrix() - rc_scaled.matrix()).norm());
    }
    if worst_f > 1e-12 {
        return Err(format!("thrust identity off by {worst_f:e}"));
    }
    if worst_rc > 1e-12 {
        return Err(format!("commanded attitude not scale invariant: {worst_rc:e}"));
    }
    Ok(format!("identity residual {worst_f:.1e}, scaling residual {worst_rc:.1e}"))
}

/// Closed loop started at the exact equilibrium stays there.
pub fn check_equilibrium_hold(_seed: u64) -> CheckResult {
    let mut sc = Scenario::paper_sim();
    sc.params.dist_force = Vec3::zeros();
    sc.params.dist_moment = Vec3::zeros();
    sc.x0 = Vec3::zeros();
    sc.link_dirs0 = (0..5).map(|_| UnitVector::e3()).collect();
    let log = run(&sc).map_err(|e| format!("{e}"))?;
    let m = metrics(&log, &Vec3::zeros()).map_err(|e| format!("{e}"))?;
    let worst = log
        .samples
        .iter()
        .map(|s| s.state.position.norm().max(s.e_q).max(s.e_r_norm))
        .fold(0.0f64, f64::max);
    if worst > 1e-6 {
        return Err(format!("equilibrium drift {worst:e}"));
    }
    Ok(format!("max drift {worst:.2e}, final error {:.2e}", m.final_pos_error))
}

/// All suites in order, with their display names.
pub fn run_all(seed: u64) -> Vec<(&'static str, CheckResult)> {
    vec![
        ("geom-invariants", check_geom(seed)),
        ("formulation-equivalence", check_formulations(seed.wrapping_add(1))),
        ("conservation", check_conservation(seed.wrapping_add(2))),
        ("constraint-drift", check_constraints(seed.wrapping_add(3))),
        ("linearization-fd", check_linearization(seed.wrapping_add(4))),
        ("lyapunov-solver", check_lyapunov(seed.wrapping_add(5))),
        ("controller-identities", check_controller_identities(seed.wrapping_add(6))),
        ("equilibrium-hold", check_equilibrium_hold(seed.wrapping_add(7))),
    ]
}
