//! Scenario definition, closed-loop simulation loop, composite Lyapunov
//! bookkeeping, and summary metrics.
//!
//! A scenario owns everything needed for a deterministic run: parameters,
//! gains, initial conditions, the target, step sizes, and whether the
//! integral action is enabled. Identical scenarios produce bitwise
//! identical logs on one platform.

use crate::controller::{control_step, saturate, ControlError, ControllerConfig, ControllerState};
use crate::dynamics::{rk4_step, ControlInput, DynamicsError};
use crate::gains::{certify, solve_lyapunov, Certificate, CertifyOptions, GainsError, GainSet};
use crate::geom::{RotationMatrix, UnitVector};
use crate::linearize::{build_linear_model, closed_loop, lin_state};
use crate::model::{
    attitude_error_psi, link_errors, total_energy, ModelError, SystemParams, SystemState,
};
use crate::{DMat, DVec, Mat3, Vec3};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
#[cfg(not(feature = "std"))]
use nalgebra::ComplexField;

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    InvalidScenario(String),
    Gains(GainsError),
    /// Controller failure, stamped with the simulation time.
    Control { t: f64, source: ControlError },
    /// Dynamics failure, stamped with the simulation time.
    Dynamics { t: f64, source: DynamicsError },
    EmptyLog,
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::InvalidScenario(msg) => write!(f, "invalid scenario: {msg}"),
            SimError::Gains(e) => write!(f, "gain setup failed: {e}"),
            SimError::Control { t, source } => write!(f, "controller failed at t = {t}: {source}"),
            SimError::Dynamics { t, source } => write!(f, "dynamics failed at t = {t}: {source}"),
            SimError::EmptyLog => write!(f, "trajectory log is empty"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SimError {}

impl From<ModelError> for SimError {
    fn from(e: ModelError) -> Self {
        SimError::InvalidScenario(format!("{e}"))
    }
}

impl From<GainsError> for SimError {
    fn from(e: GainsError) -> Self {
        SimError::Gains(e)
    }
}

/// A complete, deterministic simulation setup.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: SystemParams,
    pub gains: GainSet,
    pub x0: Vec3,
    pub v0: Vec3,
    pub r0: RotationMatrix,
    pub omega0: Vec3,
    pub link_dirs0: Vec<UnitVector>,
    pub link_rates0: Vec<Vec3>,
    /// Desired quadrotor position.
    pub target: Vec3,
    /// Total simulated time (s).
    pub duration: f64,
    /// Integrator step (s).
    pub dt_int: f64,
    /// Controller period (s), an integer multiple of `dt_int`.
    pub dt_ctrl: f64,
    /// Logging period (s), an integer multiple of `dt_int`.
    pub dt_log: f64,
    /// When false, the integral gains `K_z` and `k_I` are zeroed.
    pub enable_integral: bool,
    /// Lyapunov weight `Q = q_scale · I` used for the integral term and the
    /// logged composite value.
    pub q_scale: f64,
}

impl Scenario {
    /// The benchmark stabilization scenario: a 0.5 kg quadrotor with five
    /// 0.1 kg / 0.1 m links, started 0.9 m off target with the cable curved
    /// along the horizontal, under fixed force and moment disturbances.
    pub fn paper_sim() -> Self {
        let params = SystemParams {
            quad_mass: 0.5,
            inertia: Mat3::from_diagonal(&Vec3::new(0.557e-2, 0.557e-2, 1.05e-2)),
            link_masses: alloc::vec![0.1; 5],
            link_lengths: alloc::vec![0.1; 5],
            gravity: 9.81,
            dist_force: Vec3::new(-0.0125, 0.0125, 0.01),
            dist_moment: Vec3::new(0.03, -0.02, 0.01),
        };
        let gains = GainSet {
            kx: 12.8,
            kdx: 4.22,
            kq: alloc::vec![11.01, 6.67, 1.97, 0.41, 0.069],
            kw: alloc::vec![0.93, 0.24, 0.032, 0.030, 0.025],
            kz: alloc::vec![1.0; 6],
            kr: 0.65,
            komega: 0.11,
            ki: 1.5,
            c1: 0.7,
            c2: 0.7,
            sigma: 0.1,
            b1d: UnitVector::new(Vec3::x()).unwrap(),
        };
        let tilt_deg = [60.0, 50.0, 40.0, 30.0, 20.0];
        let link_dirs0 = tilt_deg
            .iter()
            .map(|d: &f64| {
                let th = d.to_radians();
                UnitVector::normalize(Vec3::new(th.sin(), 0.0, th.cos())).unwrap()
            })
            .collect();
        Scenario {
            params,
            gains,
            x0: Vec3::new(0.6, -0.7, 0.2),
            v0: Vec3::zeros(),
            r0: RotationMatrix::identity(),
            omega0: Vec3::zeros(),
            link_dirs0,
            link_rates0: alloc::vec![Vec3::zeros(); 5],
            target: Vec3::zeros(),
            duration: 10.0,
            dt_int: 1e-3,
            dt_ctrl: 1e-3,
            dt_log: 1e-3,
            enable_integral: true,
            q_scale: 1.0,
        }
    }

    pub fn initial_state(&self) -> SystemState {
        SystemState {
            position: self.x0,
            velocity: self.v0,
            attitude: self.r0,
            body_rate: self.omega0,
            link_dirs: self.link_dirs0.clone(),
            link_rates: self.link_rates0.clone(),
        }
    }

    /// Gains actually applied in the loop: integral gains zeroed when the
    /// integral action is disabled.
    pub fn effective_gains(&self) -> GainSet {
        let mut g = self.gains.clone();
        if !self.enable_integral {
            g.kz.iter_mut().for_each(|k| *k = 0.0);
            g.ki = 0.0;
        }
        g
    }

    /// Disturbance bound `δ = |Δ_x|_∞`.
    pub fn disturbance_bound(&self) -> f64 {
        self.params.dist_force.amax()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.params.validate()?;
        self.gains.validate(self.params.link_count())?;
        let err = |msg: String| Err(SimError::InvalidScenario(msg));
        if !(self.duration > 0.0) {
            return err(format!("duration {} must be > 0", self.duration));
        }
        if !(self.dt_int > 0.0) || !(self.dt_ctrl > 0.0) || !(self.dt_log > 0.0) {
            return err("all step sizes must be > 0".into());
        }
        if self.dt_int > self.dt_ctrl {
            return err(format!("dt_int {} exceeds dt_ctrl {}", self.dt_int, self.dt_ctrl));
        }
        for (name, dt) in [("dt_ctrl", self.dt_ctrl), ("dt_log", self.dt_log)] {
            let ratio = dt / self.dt_int;
            if (ratio - ratio.round()).abs() > 1e-9 {
                return err(format!("{name} {dt} is not a multiple of dt_int {}", self.dt_int));
            }
        }
        if !(self.q_scale > 0.0) {
            return err("q_scale must be > 0".into());
        }
        self.initial_state()
            .validate(self.params.link_count())
            .map_err(SimError::from)
    }
}

/// One logged instant of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSample {
    pub t: f64,
    pub state: SystemState,
    pub thrust: f64,
    pub moment: Vec3,
    /// Aggregate link direction error `Σ|qᵢ − e₃|`.
    pub e_q: f64,
    /// Aggregate link rate error `Σ|ωᵢ|`.
    pub e_w: f64,
    /// Attitude configuration error against the commanded attitude.
    pub psi: f64,
    pub e_r_norm: f64,
    pub e_omega_norm: f64,
    /// Total mechanical energy (J).
    pub energy: f64,
    /// Composite Lyapunov value (present when the integral action is on).
    pub lyap: Option<f64>,
}

/// Time series produced by [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub n: usize,
    pub samples: Vec<LogSample>,
    /// Largest feedforward coupling `|(2J − tr(J) I) Rᵀ R_c Ω_c|` observed;
    /// feeds the certificate's `B₂` bound.
    pub b2_observed: f64,
}

/// Runs the closed loop: the controller fires every `dt_ctrl` (held between
/// updates), the dynamics advance by RK4 every `dt_int`, disturbances from
/// the parameters act throughout, and a sample is logged every `dt_log`.
pub fn run(sc: &Scenario) -> Result<TrajectoryLog, SimError> {
    sc.validate()?;
    let p = &sc.params;
    let n = p.link_count();
    let gains = sc.effective_gains();

    let lm = build_linear_model(p);
    let kx = gains.kx_matrix();
    let kdx = gains.kdx_matrix();
    let (a, b) = closed_loop(&lm, &kx, &kdx)
        .map_err(|e| SimError::InvalidScenario(format!("{e}")))?;
    let dim = a.nrows();
    let q = DMat::identity(dim, dim) * sc.q_scale;
    let pmat = solve_lyapunov(&a, &q)?;
    let pb = &pmat * &b;
    let cfg = ControllerConfig::new(gains.clone(), sc.target, pb, sc.dt_ctrl);

    let mut state = sc.initial_state();
    let mut cs = ControllerState::new(n);
    let mut u = ControlInput::zero();

    let steps = (sc.duration / sc.dt_int).round() as usize;
    let ctrl_every = (sc.dt_ctrl / sc.dt_int).round() as usize;
    let log_every = (sc.dt_log / sc.dt_int).round() as usize;

    // Composite Lyapunov bookkeeping: the integral-term contribution is
    // accumulated along the trajectory (trapezoid in e_x), anchored by a
    // straight-line quadrature from the saturated-integral equilibrium
    // point to e_x(0) = 0.
    let kz_mat = gains.kz_matrix();
    let bin = &lm.input;
    let field = |ex: &DVec| -> DVec { bin * (&kz_mat * saturate(ex, gains.sigma) - p.dist_force) };
    let mut v_int = 0.0;
    let mut prev_ex = cs.ex.clone();
    let mut prev_field = field(&cs.ex);
    if sc.enable_integral && gains.kz[0] > 0.0 {
        let mut p_eq = DVec::zeros(2 * n + 3);
        for k in 0..3 {
            p_eq[k] = p.dist_force[k] / gains.kz[0];
        }
        // 2 * integral from p_eq to 0 of field(mu) . d(mu), midpoint rule.
        let segs = 256;
        let dmu = -&p_eq / segs as f64;
        for k in 0..segs {
            let mu = &p_eq + &dmu * (k as f64 + 0.5);
            v_int += 2.0 * field(&mu).dot(&dmu);
        }
    }

    let mut log = TrajectoryLog { n, samples: Vec::with_capacity(steps / log_every + 1), b2_observed: 0.0 };
    let tr_j = p.inertia.trace();
    let d_mat = p.inertia * 2.0 - Mat3::identity() * tr_j;

    for s in 0..=steps {
        let t = s as f64 * sc.dt_int;
        if s % ctrl_every == 0 {
            let (un, csn) =
                control_step(&state, cs, &cfg, p, sc.dt_ctrl).map_err(|e| SimError::Control { t, source: e })?;
            u = un;
            cs = csn;
            let f_new = field(&cs.ex);
            v_int += (&cs.ex - &prev_ex).dot(&(&f_new + &prev_field));
            prev_ex = cs.ex.clone();
            prev_field = f_new;

            let rc = cs.prev_attitude_cmd.as_ref().expect("set by control_step");
            let coupling =
                (d_mat * (state.attitude.matrix().transpose() * rc.matrix() * cs.prev_rate_cmd)).norm();
            log.b2_observed = log.b2_observed.max(coupling);
        }

        if s % log_every == 0 {
            let rc = cs.prev_attitude_cmd.as_ref().expect("controller ran at s = 0");
            let (e_r, e_w_vec) =
                crate::controller::attitude_errors(&state.attitude, &state.body_rate, rc, &cs.prev_rate_cmd);
            let psi = attitude_error_psi(&state.attitude, rc);
            let (e_q, e_w) = link_errors(&state);
            let energy = total_energy(&state, p).total;
            let lyap = if sc.enable_integral {
                let z1 = lin_state(&state, &sc.target);
                let mut v = (z1.0.transpose() * &pmat * &z1.0)[(0, 0)] + v_int;
                v += 0.5 * e_w_vec.dot(&(p.inertia * e_w_vec));
                v += gains.kr * psi + gains.c2 * e_r.dot(&e_w_vec);
                if gains.ki > 0.0 {
                    let shift = cs.ei - p.dist_moment / gains.ki;
                    v += 0.5 * gains.ki * shift.norm_squared();
                }
                Some(v)
            } else {
                None
            };
            log.samples.push(LogSample {
                t,
                state: state.clone(),
                thrust: u.thrust,
                moment: u.moment,
                e_q,
                e_w,
                psi,
                e_r_norm: e_r.norm(),
                e_omega_norm: e_w_vec.norm(),
                energy,
                lyap,
            });
        }

        if s < steps {
            state = rk4_step(&state, &u, p, sc.dt_int).map_err(|e| SimError::Dynamics { t, source: e })?;
        }
    }
    Ok(log)
}

/// Summary numbers extracted from a log.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub final_pos_error: f64,
    pub final_e_q: f64,
    pub final_e_w: f64,
    pub final_e_r_norm: f64,
    /// First time after which the position error stays within 5% of its
    /// initial value; `None` if it never settles.
    pub settling_time: Option<f64>,
    pub peak_thrust: f64,
    pub peak_moment_norm: f64,
}

pub fn metrics(log: &TrajectoryLog, xd: &Vec3) -> Result<Metrics, SimError> {
    let first = log.samples.first().ok_or(SimError::EmptyLog)?;
    let last = log.samples.last().ok_or(SimError::EmptyLog)?;
    let initial_err = (first.state.position - xd).norm();
    // Absolute floor keeps the settling criterion meaningful when the run
    // starts on target.
    let threshold = (0.05 * initial_err).max(1e-9);

    let mut settling_time = None;
    for s in log.samples.iter().rev() {
        if (s.state.position - xd).norm() <= threshold {
            settling_time = Some(s.t);
        } else {
            break;
        }
    }
    Ok(Metrics {
        final_pos_error: (last.state.position - xd).norm(),
        final_e_q: last.e_q,
        final_e_w: last.e_w,
        final_e_r_norm: last.e_r_norm,
        settling_time,
        peak_thrust: log.samples.iter().map(|s| s.thrust).fold(f64::NEG_INFINITY, f64::max),
        peak_moment_norm: log
            .samples
            .iter()
            .map(|s| s.moment.norm())
            .fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Runs the scenario once and returns the observed feedforward coupling
/// bound `B₂` for the certificate.
pub fn estimate_b2(sc: &Scenario) -> Result<f64, SimError> {
    Ok(run(sc)?.b2_observed)
}

/// Full certification of a scenario: builds the linear model, measures `B₂`
/// on a nominal run, and evaluates every certificate inequality with
/// `δ = |Δ_x|_∞` and `Q = q_scale·I`.
pub fn certify_scenario(sc: &Scenario) -> Result<Certificate, SimError> {
    sc.validate()?;
    let lm = build_linear_model(&sc.params);
    let b2 = estimate_b2(sc)?;
    let dim = 2 * (2 * sc.params.link_count() + 3);
    let opts = CertifyOptions {
        b2,
        q: Some(DMat::identity(dim, dim) * sc.q_scale),
        ..CertifyOptions::default()
    };
    certify(&lm, &sc.gains, &sc.params, sc.disturbance_bound(), &opts).map_err(SimError::from)
}
