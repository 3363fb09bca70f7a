//! Full equations of motion of the quadrotor/chain system and a fixed-step
//! integrator.
//!
//! The translational/link dynamics form a dense linear system in the
//! accelerations. Two equivalent assemblies are provided: the primary one
//! solves for `(ẍ, q̈₁…q̈ₙ)` (its diagonal blocks `mᵢᵢ·I` make it
//! nonsingular without tangent-space bookkeeping), and a symmetric one
//! solves for `(ẍ, ω̇₁…ω̇ₙ)` and is kept as a cross-check oracle. The
//! rotational dynamics `J Ω̇ + Ω × JΩ = M + Δ_R` are decoupled from both.

use crate::geom::{self, hat, RotationMatrix};
use crate::model::{inertia_couplings, InertiaCouplings, SystemParams, SystemState};
use crate::{DMat, DVec, Mat3, Vec3};
use alloc::vec::Vec;
use core::fmt;

/// Condition-number proxy above which the acceleration solve is rejected.
const COND_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DynamicsError {
    /// The assembled acceleration system is numerically rank-deficient.
    SingularSystem { cond_estimate: f64 },
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsError::SingularSystem { cond_estimate } => {
                write!(f, "singular acceleration system (condition estimate {cond_estimate:e})")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DynamicsError {}

/// Control input: total thrust magnitude `f` (the thrust vector is
/// `-f R e₃`) and the body-frame moment `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    pub thrust: f64,
    pub moment: Vec3,
}

impl ControlInput {
    pub fn zero() -> Self {
        ControlInput { thrust: 0.0, moment: Vec3::zeros() }
    }
}

/// Accelerations of every configuration variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Acceleration {
    /// Quadrotor acceleration `ẍ` (m/s²).
    pub linear: Vec3,
    /// Link direction accelerations `q̈ᵢ` (1/s²).
    pub link_dir: Vec<Vec3>,
    /// Link angular accelerations `ω̇ᵢ` (rad/s²).
    pub link_rate: Vec<Vec3>,
    /// Body angular acceleration `Ω̇` (rad/s²).
    pub body_rate: Vec3,
}

/// Solves the dense linear system `A sol = rhs` with partial-pivoting LU,
/// rejecting it when the diagonal-ratio condition estimate blows up.
fn solve_dense(a: DMat, rhs: DVec) -> Result<DVec, DynamicsError> {
    let lu = a.lu();
    let diag = lu.u().diagonal();
    let mut dmax: f64 = 0.0;
    let mut dmin = f64::INFINITY;
    for d in diag.iter() {
        dmax = dmax.max(d.abs());
        dmin = dmin.min(d.abs());
    }
    let cond = if dmin > 0.0 { dmax / dmin } else { f64::INFINITY };
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(DynamicsError::SingularSystem { cond_estimate: cond });
    }
    lu.solve(&rhs).ok_or(DynamicsError::SingularSystem { cond_estimate: cond })
}

/// Chain part of the q-form system: given the total applied force on the
/// translational equation (thrust + disturbance for the full model, or a
/// fictitious input for the simplified one), solves for `(ẍ, q̈₁…q̈ₙ)`.
///
/// Raw (possibly slightly off-unit) link directions are accepted so that
/// integrator stages can evaluate the field off the constraint manifold.
pub(crate) fn chain_accel_qform(
    dirs: &[Vec3],
    rates: &[Vec3],
    applied_force: Vec3,
    c: &InertiaCouplings,
    p: &SystemParams,
) -> Result<(Vec3, Vec<Vec3>), DynamicsError> {
    let n = dirs.len();
    let dim = 3 + 3 * n;
    let mut a = DMat::zeros(dim, dim);
    let mut rhs = DVec::zeros(dim);
    let e3 = Vec3::z();

    a.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Mat3::identity() * c.m00));
    for j in 0..n {
        a.fixed_view_mut::<3, 3>(0, 3 + 3 * j)
            .copy_from(&(Mat3::identity() * c.m0(j)));
    }
    rhs.fixed_rows_mut::<3>(0)
        .copy_from(&(applied_force + e3 * (c.m00 * p.gravity)));

    for i in 0..n {
        let qi = dirs[i];
        let h2 = hat(&qi) * hat(&qi);
        let row = 3 + 3 * i;
        a.fixed_view_mut::<3, 3>(row, 0).copy_from(&(-h2 * c.m0(i)));
        for j in 0..n {
            let block = if i == j {
                Mat3::identity() * c.m(i, i)
            } else {
                -h2 * c.m(i, j)
            };
            a.fixed_view_mut::<3, 3>(row, 3 + 3 * j).copy_from(&block);
        }
        let qdot = rates[i].cross(&qi);
        let weight = p.link_masses[i..].iter().sum::<f64>() * p.gravity * p.link_lengths[i];
        rhs.fixed_rows_mut::<3>(row)
            .copy_from(&(-qi * (c.m(i, i) * qdot.norm_squared()) - h2 * e3 * weight));
    }

    let sol = solve_dense(a, rhs)?;
    let linear = Vec3::new(sol[0], sol[1], sol[2]);
    let link_dir = (0..n)
        .map(|i| Vec3::new(sol[3 + 3 * i], sol[4 + 3 * i], sol[5 + 3 * i]))
        .collect();
    Ok((linear, link_dir))
}

/// Body angular acceleration `Ω̇ = J⁻¹ (M + Δ_R − Ω × JΩ)`.
pub fn attitude_accel(s: &SystemState, u: &ControlInput, p: &SystemParams) -> Vec3 {
    let j_omega = p.inertia * s.body_rate;
    let rhs = u.moment + p.dist_moment - s.body_rate.cross(&j_omega);
    p.inertia
        .try_inverse()
        .expect("inertia matrix is positive definite")
        * rhs
}

/// Full accelerations from the q-form assembly (primary solve path).
///
/// After solving, `ω̇ᵢ` is recovered from `q̈ᵢ = −q̂ᵢ ω̇ᵢ − |ωᵢ|² qᵢ` as
/// `ω̇ᵢ = qᵢ × q̈ᵢ`.
pub fn solve_accel_qform(
    s: &SystemState,
    u: &ControlInput,
    p: &SystemParams,
) -> Result<Acceleration, DynamicsError> {
    let c = inertia_couplings(p);
    let dirs: Vec<Vec3> = s.link_dirs.iter().map(|q| *q.vector()).collect();
    let force = s.attitude.matrix() * Vec3::z() * (-u.thrust) + p.dist_force;
    let (linear, link_dir) = chain_accel_qform(&dirs, &s.link_rates, force, &c, p)?;
    let link_rate = dirs
        .iter()
        .zip(&link_dir)
        .map(|(q, qdd)| q.cross(qdd))
        .collect();
    Ok(Acceleration { linear, link_dir, link_rate, body_rate: attitude_accel(s, u, p) })
}

/// Assembles the symmetric angular-velocity form of the translational/link
/// dynamics: the block matrix acting on `(ẍ, ω̇₁…ω̇ₙ)` and its right-hand
/// side. Exposed for the symmetry diagnostics.
pub fn wform_system(s: &SystemState, u: &ControlInput, p: &SystemParams) -> (DMat, DVec) {
    let c = inertia_couplings(p);
    let n = s.link_count();
    let dim = 3 + 3 * n;
    let mut a = DMat::zeros(dim, dim);
    let mut rhs = DVec::zeros(dim);
    let e3 = Vec3::z();

    a.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Mat3::identity() * c.m00));
    let mut top = s.attitude.matrix() * e3 * (-u.thrust) + p.dist_force + e3 * (c.m00 * p.gravity);
    for j in 0..n {
        let qj = s.link_dirs[j].vector();
        a.fixed_view_mut::<3, 3>(0, 3 + 3 * j)
            .copy_from(&(-hat(qj) * c.m0(j)));
        top += qj * (c.m0(j) * s.link_rates[j].norm_squared());
    }
    rhs.fixed_rows_mut::<3>(0).copy_from(&top);

    for i in 0..n {
        let qi = s.link_dirs[i].vector();
        let hi = hat(qi);
        let row = 3 + 3 * i;
        a.fixed_view_mut::<3, 3>(row, 0).copy_from(&(hi * c.m0(i)));
        let mut bi = hi * e3 * (p.link_masses[i..].iter().sum::<f64>() * p.gravity * p.link_lengths[i]);
        for j in 0..n {
            if i == j {
                a.fixed_view_mut::<3, 3>(row, 3 + 3 * i)
                    .copy_from(&(Mat3::identity() * c.m(i, i)));
            } else {
                let qj = s.link_dirs[j].vector();
                a.fixed_view_mut::<3, 3>(row, 3 + 3 * j)
                    .copy_from(&(-hi * hat(qj) * c.m(i, j)));
                bi += hi * qj * (c.m(i, j) * s.link_rates[j].norm_squared());
            }
        }
        rhs.fixed_rows_mut::<3>(row).copy_from(&bi);
    }
    (a, rhs)
}

/// Full accelerations from the symmetric ω-form assembly.
///
/// The structure of the system keeps each solution `ω̇ᵢ` normal to `qᵢ`
/// without tangent-space elimination (dotting row `i` with `qᵢ` annihilates
/// everything except `mᵢᵢ qᵢ·ω̇ᵢ`); the residual is left to the caller's
/// diagnostics. `q̈ᵢ` is reconstructed as `−q̂ᵢ ω̇ᵢ − |ωᵢ|² qᵢ`.
pub fn solve_accel_wform(
    s: &SystemState,
    u: &ControlInput,
    p: &SystemParams,
) -> Result<Acceleration, DynamicsError> {
    let n = s.link_count();
    let (a, rhs) = wform_system(s, u, p);
    let sol = solve_dense(a, rhs)?;
    let linear = Vec3::new(sol[0], sol[1], sol[2]);
    let link_rate: Vec<Vec3> = (0..n)
        .map(|i| Vec3::new(sol[3 + 3 * i], sol[4 + 3 * i], sol[5 + 3 * i]))
        .collect();
    let link_dir = (0..n)
        .map(|i| {
            let qi = s.link_dirs[i].vector();
            -hat(qi) * link_rate[i] - qi * s.link_rates[i].norm_squared()
        })
        .collect();
    Ok(Acceleration { linear, link_dir, link_rate, body_rate: attitude_accel(s, u, p) })
}

/// Raw state used inside integrator stages, where the manifold constraints
/// may be transiently violated.
struct RawState {
    x: Vec3,
    v: Vec3,
    r: Mat3,
    w: Vec3,
    q: Vec<Vec3>,
    wl: Vec<Vec3>,
}

struct Deriv {
    xd: Vec3,
    vd: Vec3,
    rd: Mat3,
    wd: Vec3,
    qd: Vec<Vec3>,
    wld: Vec<Vec3>,
}

fn raw_deriv(st: &RawState, u: &ControlInput, c: &InertiaCouplings, p: &SystemParams) -> Result<Deriv, DynamicsError> {
    let force = st.r * Vec3::z() * (-u.thrust) + p.dist_force;
    let (vd, qdd) = chain_accel_qform(&st.q, &st.wl, force, c, p)?;
    let j_omega = p.inertia * st.w;
    let wd = p.inertia.try_inverse().expect("inertia positive definite")
        * (u.moment + p.dist_moment - st.w.cross(&j_omega));
    let qd: Vec<Vec3> = st.wl.iter().zip(&st.q).map(|(w, q)| w.cross(q)).collect();
    let wld: Vec<Vec3> = st.q.iter().zip(&qdd).map(|(q, qdd)| q.cross(qdd)).collect();
    Ok(Deriv { xd: st.v, vd, rd: st.r * hat(&st.w), wd, qd, wld })
}

fn raw_add(st: &RawState, k: &Deriv, h: f64) -> RawState {
    RawState {
        x: st.x + k.xd * h,
        v: st.v + k.vd * h,
        r: st.r + k.rd * h,
        w: st.w + k.wd * h,
        q: st.q.iter().zip(&k.qd).map(|(q, d)| q + d * h).collect(),
        wl: st.wl.iter().zip(&k.wld).map(|(w, d)| w + d * h).collect(),
    }
}

/// Classical fixed-step RK4 on the state derivative `(ẋ, ẍ, Ṙ = RΩ̂, Ω̇,
/// q̇ᵢ = ωᵢ×qᵢ, ω̇ᵢ)` with the control held constant across the step.
///
/// After the step every link pair is passed through [`geom::renormalize`]
/// and the attitude is re-orthonormalized, so the constraint drift does not
/// accumulate.
pub fn rk4_step(
    s: &SystemState,
    u: &ControlInput,
    p: &SystemParams,
    dt: f64,
) -> Result<SystemState, DynamicsError> {
    let c = inertia_couplings(p);
    let st = RawState {
        x: s.position,
        v: s.velocity,
        r: *s.attitude.matrix(),
        w: s.body_rate,
        q: s.link_dirs.iter().map(|q| *q.vector()).collect(),
        wl: s.link_rates.clone(),
    };

    let k1 = raw_deriv(&st, u, &c, p)?;
    let k2 = raw_deriv(&raw_add(&st, &k1, 0.5 * dt), u, &c, p)?;
    let k3 = raw_deriv(&raw_add(&st, &k2, 0.5 * dt), u, &c, p)?;
    let k4 = raw_deriv(&raw_add(&st, &k3, dt), u, &c, p)?;

    let h = dt / 6.0;
    let n = s.link_count();
    let mut dirs = Vec::with_capacity(n);
    let mut rates = Vec::with_capacity(n);
    for i in 0..n {
        let q = st.q[i] + (k1.qd[i] + k2.qd[i] * 2.0 + k3.qd[i] * 2.0 + k4.qd[i]) * h;
        let w = st.wl[i] + (k1.wld[i] + k2.wld[i] * 2.0 + k3.wld[i] * 2.0 + k4.wld[i]) * h;
        let (qn, wn) = geom::renormalize(&q, &w)
            .expect("integrator step left a link direction degenerate");
        dirs.push(qn);
        rates.push(wn);
    }

    Ok(SystemState {
        position: st.x + (k1.xd + k2.xd * 2.0 + k3.xd * 2.0 + k4.xd) * h,
        velocity: st.v + (k1.vd + k2.vd * 2.0 + k3.vd * 2.0 + k4.vd) * h,
        attitude: RotationMatrix::project(
            st.r + (k1.rd + k2.rd * 2.0 + k3.rd * 2.0 + k4.rd) * h,
        ),
        body_rate: st.w + (k1.wd + k2.wd * 2.0 + k3.wd * 2.0 + k4.wd) * h,
        link_dirs: dirs,
        link_rates: rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{linear_momentum, total_energy};
    use approx::assert_relative_eq;

    fn bench_params() -> SystemParams {
        SystemParams {
            quad_mass: 0.5,
            inertia: Mat3::from_diagonal(&Vec3::new(0.557e-2, 0.557e-2, 1.05e-2)),
            link_masses: alloc::vec![0.1; 5],
            link_lengths: alloc::vec![0.1; 5],
            gravity: 9.81,
            dist_force: Vec3::zeros(),
            dist_moment: Vec3::zeros(),
        }
    }

    fn hover_input(p: &SystemParams) -> ControlInput {
        let m00 = p.quad_mass + p.link_masses.iter().sum::<f64>();
        ControlInput { thrust: m00 * p.gravity, moment: Vec3::zeros() }
    }

    #[test]
    fn hanging_equilibrium_is_stationary() {
        let p = bench_params();
        let s = SystemState::hanging_equilibrium(5, Vec3::zeros());
        let acc = solve_accel_qform(&s, &hover_input(&p), &p).unwrap();
        assert_relative_eq!(acc.linear, Vec3::zeros(), epsilon = 1e-12);
        for i in 0..5 {
            assert_relative_eq!(acc.link_dir[i], Vec3::zeros(), epsilon = 1e-12);
            assert_relative_eq!(acc.link_rate[i], Vec3::zeros(), epsilon = 1e-12);
        }
        assert_eq!(acc.body_rate, Vec3::zeros());
    }

    #[test]
    fn free_fall_has_no_internal_forces() {
        let p = bench_params();
        let s = SystemState::hanging_equilibrium(5, Vec3::zeros());
        let acc = solve_accel_qform(&s, &ControlInput::zero(), &p).unwrap();
        assert_relative_eq!(acc.linear, Vec3::new(0.0, 0.0, 9.81), epsilon = 1e-12);
        for i in 0..5 {
            assert_relative_eq!(acc.link_dir[i], Vec3::zeros(), epsilon = 1e-11);
        }
    }

    #[test]
    fn attitude_accel_principal_axis() {
        let p = bench_params();
        let mut s = SystemState::hanging_equilibrium(5, Vec3::zeros());
        let u = ControlInput { thrust: 0.0, moment: Vec3::new(0.01, 0.0, 0.0) };
        let wd = attitude_accel(&s, &u, &p);
        assert_relative_eq!(wd, Vec3::new(0.01 / 0.557e-2, 0.0, 0.0), epsilon = 1e-10);
        assert_relative_eq!(wd.x, 1.7953, epsilon = 1e-4);

        // Spin about a principal axis: no gyroscopic moment.
        s.body_rate = Vec3::z();
        let wd = attitude_accel(&s, &ControlInput::zero(), &p);
        assert_relative_eq!(wd, Vec3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn acceleration_respects_sphere_constraints() {
        let p = bench_params();
        let mut s = SystemState::hanging_equilibrium(5, Vec3::zeros());
        for (i, q) in s.link_dirs.iter_mut().enumerate() {
            let ang = 0.3 + 0.2 * i as f64;
            *q = crate::geom::UnitVector::normalize(Vec3::new(ang.sin(), 0.1 * ang, ang.cos()))
                .unwrap();
        }
        for (i, w) in s.link_rates.iter_mut().enumerate() {
            let raw = Vec3::new(0.2 * i as f64, -0.5, 0.3);
            let q = s.link_dirs[i].vector();
            *w = raw - q * q.dot(&raw);
        }
        let u = ControlInput { thrust: 4.0, moment: Vec3::new(0.01, -0.02, 0.005) };
        let acc = solve_accel_qform(&s, &u, &p).unwrap();
        for i in 0..5 {
            let q = s.link_dirs[i].vector();
            let qd = s.link_dir_rate(i);
            assert_relative_eq!(q.dot(&acc.link_dir[i]), -qd.norm_squared(), epsilon = 1e-8);
            assert!(q.dot(&acc.link_rate[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn wform_matrix_is_symmetric() {
        let p = bench_params();
        let mut s = SystemState::hanging_equilibrium(5, Vec3::zeros());
        for (i, q) in s.link_dirs.iter_mut().enumerate() {
            let ang = 0.9 - 0.11 * i as f64;
            *q = crate::geom::UnitVector::normalize(Vec3::new(ang.sin(), ang.cos() * 0.4, ang.cos()))
                .unwrap();
        }
        let (a, _) = wform_system(&s, &hover_input(&p), &p);
        assert!((a.clone() - a.transpose()).norm() < 1e-12);
    }

    #[test]
    fn rk4_fixed_point_at_equilibrium() {
        let p = bench_params();
        let s = SystemState::hanging_equilibrium(5, Vec3::zeros());
        let s1 = rk4_step(&s, &hover_input(&p), &p, 1e-3).unwrap();
        assert_relative_eq!(s1.position, s.position, epsilon = 1e-12);
        assert_relative_eq!(s1.velocity, s.velocity, epsilon = 1e-12);
        for i in 0..5 {
            assert_relative_eq!(s1.link_dirs[i].vector(), s.link_dirs[i].vector(), epsilon = 1e-12);
        }
    }

    #[test]
    fn free_dynamics_conserves_energy_and_momentum() {
        // Short-horizon check; the acceptance suite runs the full-length one.
        let p = bench_params();
        let mut s = SystemState::hanging_equilibrium(5, Vec3::zeros());
        for (i, q) in s.link_dirs.iter_mut().enumerate() {
            let ang = (60.0 - 10.0 * i as f64).to_radians();
            *q = crate::geom::UnitVector::normalize(Vec3::new(ang.sin(), 0.0, ang.cos())).unwrap();
        }
        for w in s.link_rates.iter_mut() {
            *w = Vec3::new(0.1, 0.2, 0.0);
        }
        let mut s = {
            let mut st = s;
            for i in 0..5 {
                let (q, w) = geom::renormalize(st.link_dirs[i].vector(), &st.link_rates[i]).unwrap();
                st.link_dirs[i] = q;
                st.link_rates[i] = w;
            }
            st.body_rate = Vec3::new(0.1, -0.2, 0.3);
            st
        };
        let e0 = total_energy(&s, &p);
        let p0 = linear_momentum(&s, &p);
        let dt = 1e-3;
        let steps = 1000;
        for _ in 0..steps {
            s = rk4_step(&s, &ControlInput::zero(), &p, dt).unwrap();
        }
        let e1 = total_energy(&s, &p);
        let p1 = linear_momentum(&s, &p);
        assert!(((e1.total - e0.total) / e0.total).abs() < 1e-9);
        assert!((p1.x - p0.x).abs() < 1e-10 && (p1.y - p0.y).abs() < 1e-10);
        let m00 = 1.0;
        assert_relative_eq!(
            p1.z - p0.z,
            m00 * p.gravity * dt * steps as f64,
            max_relative = 1e-8
        );
    }

    #[test]
    fn rotational_dynamics_decoupled_from_translation() {
        let p = bench_params();
        let mut s1 = SystemState::hanging_equilibrium(5, Vec3::zeros());
        s1.body_rate = Vec3::new(0.3, -0.1, 0.2);
        let mut s2 = s1.clone();
        s2.position = Vec3::new(2.0, -1.0, 0.5);
        s2.velocity = Vec3::new(0.4, 0.0, -0.2);
        for (i, q) in s2.link_dirs.iter_mut().enumerate() {
            let ang = 0.2 + 0.1 * i as f64;
            *q = crate::geom::UnitVector::normalize(Vec3::new(ang.sin(), 0.0, ang.cos())).unwrap();
        }
        let u = ControlInput { thrust: 7.0, moment: Vec3::new(0.003, 0.001, -0.002) };
        for _ in 0..200 {
            s1 = rk4_step(&s1, &u, &p, 1e-3).unwrap();
            s2 = rk4_step(&s2, &u, &p, 1e-3).unwrap();
        }
        assert_relative_eq!(s1.body_rate, s2.body_rate, epsilon = 1e-12);
        assert_relative_eq!(s1.attitude.matrix(), s2.attitude.matrix(), epsilon = 1e-12);
    }

    #[test]
    fn singular_system_detected() {
        // Zero-length links make the chain blocks vanish.
        let mut p = bench_params();
        p.link_lengths = alloc::vec![0.0; 5];
        let s = SystemState::hanging_equilibrium(5, Vec3::zeros());
        assert!(matches!(
            solve_accel_qform(&s, &ControlInput::zero(), &p),
            Err(DynamicsError::SingularSystem { .. })
        ));
    }
}
