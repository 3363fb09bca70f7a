//! Plain-text reports: run metrics, certificate evidence, and the
//! with/without-integral comparison.

use chainquad_core::gains::Certificate;
use chainquad_core::sim::Metrics;
use std::fmt::Write as _;

pub fn metrics_report(m: &Metrics) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "final_pos_error_m: {}", m.final_pos_error);
    let _ = writeln!(s, "final_e_q: {}", m.final_e_q);
    let _ = writeln!(s, "final_e_w: {}", m.final_e_w);
    let _ = writeln!(s, "final_eR_norm: {}", m.final_e_r_norm);
    match m.settling_time {
        Some(t) => {
            let _ = writeln!(s, "settling_time_5pct_s: {t}");
        }
        None => {
            let _ = writeln!(s, "settling_time_5pct_s: none");
        }
    }
    let _ = writeln!(s, "peak_thrust_N: {}", m.peak_thrust);
    let _ = writeln!(s, "peak_moment_Nm: {}", m.peak_moment_norm);
    s
}

pub fn certificate_report(c: &Certificate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "hurwitz_margin: {}", c.hurwitz_margin);
    let _ = writeln!(s, "lyap_residual: {}", c.lyap_residual);
    let _ = writeln!(s, "p_min_eig: {}", c.p_min_eig);
    let _ = writeln!(s, "c2: {}", c.c2);
    let _ = writeln!(s, "c2_bound: {}", c.c2_bound);
    let _ = writeln!(s, "w2_min_eig: {}", c.w2_min_eig);
    let _ = writeln!(s, "w_min_eig: {}", c.w_min_eig);
    let _ = writeln!(s, "integral_feasible: {}", c.integral_feasible);
    let _ = writeln!(s, "delta: {}", c.delta);
    let _ = writeln!(s, "b1: {}", c.b1);
    let _ = writeln!(s, "b2: {}", c.b2);
    let _ = writeln!(s, "c3: {}", c.c3);
    let _ = writeln!(s, "alpha: {}", c.alpha);
    let _ = writeln!(s, "kmax: {}", c.kmax);
    let _ = writeln!(s, "kzm: {}", c.kzm);
    let failures = c.failures();
    if failures.is_empty() {
        let _ = writeln!(s, "result: PASS");
    } else {
        let _ = writeln!(s, "result: FAIL");
        for f in failures {
            let _ = writeln!(s, "failed: {f}");
        }
    }
    s
}

/// Side-by-side comparison of integral-on vs integral-off runs under the
/// same disturbances.
pub fn comparison_report(with_integral: &Metrics, without_integral: &Metrics) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# integral action comparison under fixed disturbances");
    let _ = writeln!(s, "with_integral.final_pos_error_m: {}", with_integral.final_pos_error);
    let _ = writeln!(
        s,
        "without_integral.final_pos_error_m: {}",
        without_integral.final_pos_error
    );
    let _ = writeln!(s, "with_integral.final_e_q: {}", with_integral.final_e_q);
    let _ = writeln!(s, "without_integral.final_e_q: {}", without_integral.final_e_q);
    let _ = writeln!(s, "with_integral.final_eR_norm: {}", with_integral.final_e_r_norm);
    let _ = writeln!(
        s,
        "without_integral.final_eR_norm: {}",
        without_integral.final_e_r_norm
    );
    let ratio = if with_integral.final_pos_error > 0.0 {
        without_integral.final_pos_error / with_integral.final_pos_error
    } else {
        f64::INFINITY
    };
    let _ = writeln!(s, "steady_offset_ratio_without_over_with: {ratio}");
    s
}
