//! Geometric stabilizing controller: an ideal force with saturated integral
//! action, the desired attitude construction, attitude tracking errors, and
//! the thrust/moment outputs.
//!
//! The ideal force `A` is the desired value of the thrust vector `−f R e₃`,
//! so hover corresponds to `A = −m₀₀ g e₃`, the commanded third body axis
//! `b₃c = −A/|A|` equals `e₃`, and the thrust magnitude `f = −A·Re₃` comes
//! out positive.

use crate::dynamics::ControlInput;
use crate::gains::GainSet;
use crate::geom::{hat, vee, RotationMatrix, UnitVector};
use crate::linearize::{lin_state, LinState};
use crate::model::{inertia_couplings, SystemParams, SystemState};
use crate::{DMat, DVec, Mat3, Vec3};
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlError {
    /// The ideal force vanished; no thrust direction can be defined.
    DegenerateForce { norm: f64 },
    /// The yaw reference is parallel to the commanded thrust axis.
    ParallelAxes,
}

impl fmt::Display for ControlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlError::DegenerateForce { norm } => {
                write!(f, "ideal force norm {norm:e} too small to define an attitude")
            }
            ControlError::ParallelAxes => {
                write!(f, "desired first body axis is parallel to the commanded thrust axis")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ControlError {}

/// Immutable controller configuration. The feedback matrices are expanded
/// from the gain set once at construction; `pb` is the precomputed `P𝔹`
/// weight of the translational integral.
#[derive(Debug, Clone)]
pub struct ControllerConfig {
    pub gains: GainSet,
    /// Desired quadrotor position.
    pub target: Vec3,
    /// `P𝔹`, (4n+6)×(2n+3), from the certified Lyapunov pair.
    pub pb: DMat,
    /// Control period (s).
    pub dt_ctrl: f64,
    kx: DMat,
    kdx: DMat,
    kz: DMat,
}

impl ControllerConfig {
    pub fn new(gains: GainSet, target: Vec3, pb: DMat, dt_ctrl: f64) -> Self {
        let kx = gains.kx_matrix();
        let kdx = gains.kdx_matrix();
        let kz = gains.kz_matrix();
        ControllerConfig { gains, target, pb, dt_ctrl, kx, kdx, kz }
    }
}

/// Mutable controller memory: the two integral states and the previous
/// attitude command used to finite-difference `Ω_c` and `Ω̇_c`.
///
/// The translational integral is stored unsaturated; the clamp is applied
/// on readout inside the force law.
#[derive(Debug, Clone)]
pub struct ControllerState {
    /// Translational integral `e_𝐱 ∈ R^{2n+3}`.
    pub ex: DVec,
    /// Attitude integral `e_I ∈ R³`.
    pub ei: Vec3,
    pub prev_attitude_cmd: Option<RotationMatrix>,
    pub prev_rate_cmd: Vec3,
    /// Time accumulated over the calls so far (s).
    pub t_last: f64,
}

impl ControllerState {
    pub fn new(n: usize) -> Self {
        ControllerState {
            ex: DVec::zeros(2 * n + 3),
            ei: Vec3::zeros(),
            prev_attitude_cmd: None,
            prev_rate_cmd: Vec3::zeros(),
            t_last: 0.0,
        }
    }
}

/// Elementwise clamp of a vector to `[−σ, σ]`.
pub fn saturate(y: &DVec, sigma: f64) -> DVec {
    y.map(|v| v.clamp(-sigma, sigma))
}

/// Ideal total thrust vector
/// `A = −K_x 𝐱 − K_ẋ 𝐱̇ − K_z sat_σ(e_𝐱) − m₀₀ g e₃`.
pub fn ideal_force(
    z1: &LinState,
    ex: &DVec,
    cfg: &ControllerConfig,
    p: &SystemParams,
) -> Result<Vec3, ControlError> {
    let m00 = inertia_couplings(p).m00;
    let fb = &cfg.kx * z1.config() + &cfg.kdx * z1.rate() + &cfg.kz * saturate(ex, cfg.gains.sigma);
    let a = -Vec3::new(fb[0], fb[1], fb[2]) - Vec3::z() * (m00 * p.gravity);
    if a.norm() < 1e-9 {
        return Err(ControlError::DegenerateForce { norm: a.norm() });
    }
    Ok(a)
}

/// Desired attitude from the ideal force: `b₃c = −A/|A|`, the yaw reference
/// `b₁d` projected into the plane normal to `b₃c`, and the second axis
/// completing the orthonormal frame:
/// `R_c = [−b̂₃c² b₁d/|·|, b̂₃c b₁d/|·|, b₃c]`.
pub fn desired_attitude(a: &Vec3, b1d: &UnitVector) -> Result<RotationMatrix, ControlError> {
    let norm = a.norm();
    if norm < 1e-9 {
        return Err(ControlError::DegenerateForce { norm });
    }
    let b3c = -a / norm;
    let h = hat(&b3c);
    let hb = h * b1d.vector();
    // |b̂₃c b₁d| is the sine of the angle between the axes.
    if hb.norm() <= 1e-6 {
        return Err(ControlError::ParallelAxes);
    }
    let col2 = hb / hb.norm();
    let hhb = -h * hb;
    let col1 = hhb / hhb.norm();
    let rc = Mat3::from_columns(&[col1, col2, b3c]);
    Ok(RotationMatrix::from_matrix(rc).expect("columns are orthonormal by construction"))
}

/// Attitude tracking errors
/// `e_R = ½(R_cᵀR − RᵀR_c)∨`, `e_Ω = Ω − RᵀR_c Ω_c`.
pub fn attitude_errors(
    r: &RotationMatrix,
    omega: &Vec3,
    rc: &RotationMatrix,
    omega_c: &Vec3,
) -> (Vec3, Vec3) {
    let rr = rc.matrix().transpose() * r.matrix();
    let skew = (rr - rr.transpose()) * 0.5;
    let e_r = vee(&skew).expect("difference with own transpose is skew");
    let e_w = omega - r.matrix().transpose() * rc.matrix() * omega_c;
    (e_r, e_w)
}

/// One controller update over a period `dt`.
///
/// Computes the ideal force and desired attitude, finite-differences the
/// attitude command for `Ω_c` and `Ω̇_c` (zero on the first call), forms the
/// thrust `f = −A·Re₃` and the moment
/// `M = −k_R e_R − k_Ω e_Ω − k_I e_I + Ω×JΩ − J(Ω̂ RᵀR_c Ω_c − RᵀR_c Ω̇_c)`,
/// then advances both integrals by explicit Euler.
pub fn control_step(
    s: &SystemState,
    cs: ControllerState,
    cfg: &ControllerConfig,
    p: &SystemParams,
    dt: f64,
) -> Result<(ControlInput, ControllerState), ControlError> {
    let z1 = lin_state(s, &cfg.target);
    let a = ideal_force(&z1, &cs.ex, cfg, p)?;
    let rc = desired_attitude(&a, &cfg.gains.b1d)?;

    let (omega_c, omega_c_dot) = match &cs.prev_attitude_cmd {
        None => (Vec3::zeros(), Vec3::zeros()),
        Some(prev) => {
            let rc_dot = (rc.matrix() - prev.matrix()) / dt;
            let m = rc.matrix().transpose() * rc_dot;
            let skew = (m - m.transpose()) * 0.5;
            let wc = vee(&skew).expect("skew part is skew");
            ((wc), (wc - cs.prev_rate_cmd) / dt)
        }
    };

    let r = s.attitude.matrix();
    let thrust = -a.dot(&(r * Vec3::z()));
    let (e_r, e_w) = attitude_errors(&s.attitude, &s.body_rate, &rc, &omega_c);

    let g = &cfg.gains;
    let j = &p.inertia;
    let rt_rc = r.transpose() * rc.matrix();
    let moment = -e_r * g.kr - e_w * g.komega - cs.ei * g.ki
        + s.body_rate.cross(&(j * s.body_rate))
        - j * (hat(&s.body_rate) * rt_rc * omega_c - rt_rc * omega_c_dot);

    let mut ex = cs.ex;
    ex += cfg.pb.transpose() * &z1.0 * dt;
    let ei = cs.ei + (e_w + e_r * g.c2) * dt;

    Ok((
        ControlInput { thrust, moment },
        ControllerState {
            ex,
            ei,
            prev_attitude_cmd: Some(rc),
            prev_rate_cmd: omega_c,
            t_last: cs.t_last + dt,
        },
    ))
}
