//! Closed-loop behavior beyond the acceptance gate: integral-state
//! boundedness, tracking-error convergence, zero-order-hold operation, and
//! concurrent independent runs.

use chainquad_core::controller::{control_step, ControllerConfig, ControllerState};
use chainquad_core::dynamics::rk4_step;
use chainquad_core::gains::solve_lyapunov;
use chainquad_core::linearize::{build_linear_model, closed_loop};
use chainquad_core::sim::{metrics, run, Scenario};
use chainquad_core::{DMat, Vec3};

/// Drives the benchmark scenario manually and returns the peak integral
/// state norms (|e_I|, |e_x|) over the run.
fn integral_peaks(sc: &Scenario) -> (f64, f64) {
    let p = &sc.params;
    let lm = build_linear_model(p);
    let (a, b) = closed_loop(&lm, &sc.gains.kx_matrix(), &sc.gains.kdx_matrix()).unwrap();
    let q = DMat::identity(a.nrows(), a.ncols());
    let pmat = solve_lyapunov(&a, &q).unwrap();
    let cfg = ControllerConfig::new(sc.gains.clone(), sc.target, &pmat * &b, sc.dt_ctrl);

    let mut state = sc.initial_state();
    let mut cs = ControllerState::new(p.link_count());
    let steps = (sc.duration / sc.dt_int).round() as usize;
    let (mut peak_ei, mut peak_ex) = (0.0f64, 0.0f64);
    for _ in 0..steps {
        let (u, csn) = control_step(&state, cs, &cfg, p, sc.dt_ctrl).unwrap();
        cs = csn;
        peak_ei = peak_ei.max(cs.ei.norm());
        peak_ex = peak_ex.max(cs.ex.norm());
        state = rk4_step(&state, &u, p, sc.dt_int).unwrap();
    }
    (peak_ei, peak_ex)
}

#[test]
fn integral_states_remain_bounded() {
    let nominal = Scenario::paper_sim();
    let (peak_ei, peak_ex) = integral_peaks(&nominal);
    assert!(peak_ei.is_finite() && peak_ex.is_finite());
    assert!(peak_ei > 0.0 && peak_ex > 0.0);

    // A second run from a milder initial condition stays within 10x the
    // nominal peaks.
    let mut milder = Scenario::paper_sim();
    milder.x0 *= 0.5;
    let (ei2, ex2) = integral_peaks(&milder);
    assert!(ei2 <= 10.0 * peak_ei, "e_I peak {ei2} vs nominal {peak_ei}");
    assert!(ex2 <= 10.0 * peak_ex, "e_x peak {ex2} vs nominal {peak_ex}");
}

#[test]
fn attitude_errors_converge_by_end_of_run() {
    let log = run(&Scenario::paper_sim()).unwrap();
    let last = log.samples.last().unwrap();
    assert!(last.e_r_norm < 1e-2, "|e_R|(10) = {}", last.e_r_norm);
    assert!(last.e_omega_norm < 1e-2, "|e_W|(10) = {}", last.e_omega_norm);

    let m = metrics(&log, &Scenario::paper_sim().target).unwrap();
    let settle = m.settling_time.expect("benchmark run settles");
    assert!(settle < 10.0, "settling time {settle}");
}

#[test]
fn integral_unneeded_without_disturbances() {
    // With the disturbances removed, the plain feedback already converges;
    // the integral action only matters against the fixed offsets.
    let mut sc = Scenario::paper_sim();
    sc.enable_integral = false;
    sc.params.dist_force = Vec3::zeros();
    sc.params.dist_moment = Vec3::zeros();
    // The slowest closed-loop mode has a ~2 s time constant, so 10 s leaves
    // e^-5 of the initial 0.92 m offset: well under the steady offset the
    // same controller shows when the disturbances are active (0.041 m).
    let m = metrics(&run(&sc).unwrap(), &sc.target).unwrap();
    assert!(m.final_pos_error < 0.01, "final error {}", m.final_pos_error);
    assert!(m.final_e_q < 0.05, "final e_q {}", m.final_e_q);
}

#[test]
fn log_time_strictly_increases() {
    let mut sc = Scenario::paper_sim();
    sc.duration = 0.5;
    sc.dt_log = 5e-3;
    let log = run(&sc).unwrap();
    assert_eq!(log.samples.len(), 101);
    for pair in log.samples.windows(2) {
        assert!(pair[1].t > pair[0].t);
    }
}

#[test]
fn zero_order_hold_still_converges() {
    let mut sc = Scenario::paper_sim();
    sc.dt_ctrl = 5e-3;
    sc.dt_log = 5e-3;
    let log = run(&sc).unwrap();
    let m = metrics(&log, &sc.target).unwrap();
    assert!(m.final_pos_error < 0.05, "final error {}", m.final_pos_error);
    assert!(m.final_e_q < 0.1);
}

#[test]
fn independent_runs_on_threads_match_serial() {
    let sc_a = {
        let mut s = Scenario::paper_sim();
        s.duration = 1.0;
        s
    };
    let sc_b = {
        let mut s = Scenario::paper_sim();
        s.duration = 1.0;
        s.enable_integral = false;
        s
    };
    let serial_a = run(&sc_a).unwrap();
    let serial_b = run(&sc_b).unwrap();

    let (ta, tb) = {
        let sa = sc_a.clone();
        let sb = sc_b.clone();
        let ha = std::thread::spawn(move || run(&sa).unwrap());
        let hb = std::thread::spawn(move || run(&sb).unwrap());
        (ha.join().unwrap(), hb.join().unwrap())
    };
    let last = |log: &chainquad_core::sim::TrajectoryLog| -> Vec3 {
        log.samples.last().unwrap().state.position
    };
    assert_eq!(last(&serial_a), last(&ta));
    assert_eq!(last(&serial_b), last(&tb));
}
