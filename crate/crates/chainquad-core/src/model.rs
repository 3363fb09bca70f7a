//! System parameters, state container, inertia couplings, energies, payload
//! positions, and the scalar error metrics used to judge link stabilization.

use crate::geom::{RotationMatrix, UnitVector};
use crate::{Mat3, Vec3};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    InvalidParams(String),
    InvalidState(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            ModelError::InvalidState(msg) => write!(f, "invalid state: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ModelError {}

/// Physical constants of the vehicle, the cable links, and the fixed
/// disturbances acting on the translational and rotational dynamics.
///
/// Units are SI throughout: kg, m, s, N, N·m.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Quadrotor mass (kg).
    pub quad_mass: f64,
    /// Quadrotor inertia matrix (kg·m²), symmetric positive definite.
    pub inertia: Mat3,
    /// Mass of each link, outboard point mass (kg); the last entry is the payload.
    pub link_masses: Vec<f64>,
    /// Length of each link (m).
    pub link_lengths: Vec<f64>,
    /// Gravitational acceleration (m/s²); `e₃` points along gravity.
    pub gravity: f64,
    /// Fixed disturbance force on the translational dynamics (N).
    pub dist_force: Vec3,
    /// Fixed disturbance moment on the rotational dynamics (N·m).
    pub dist_moment: Vec3,
}

impl SystemParams {
    /// Number of cable links.
    pub fn link_count(&self) -> usize {
        self.link_masses.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |msg: String| Err(ModelError::InvalidParams(msg));
        if !(self.quad_mass > 0.0) {
            return err(alloc::format!("quad_mass {} must be > 0", self.quad_mass));
        }
        if !(self.gravity > 0.0) {
            return err(alloc::format!("gravity {} must be > 0", self.gravity));
        }
        if self.link_masses.is_empty() {
            return err("at least one link is required".into());
        }
        if self.link_masses.len() != self.link_lengths.len() {
            return err(alloc::format!(
                "{} link masses vs {} link lengths",
                self.link_masses.len(),
                self.link_lengths.len()
            ));
        }
        if self.link_masses.iter().any(|&m| !(m > 0.0)) {
            return err("all link masses must be > 0".into());
        }
        if self.link_lengths.iter().any(|&l| !(l > 0.0)) {
            return err("all link lengths must be > 0".into());
        }
        if (self.inertia - self.inertia.transpose()).norm() > 1e-12 {
            return err("inertia matrix must be symmetric".into());
        }
        let eigs = self.inertia.symmetric_eigenvalues();
        if eigs.iter().any(|&e| !(e > 0.0)) {
            return err("inertia matrix must be positive definite".into());
        }
        Ok(())
    }

    /// Smallest and largest eigenvalue of the inertia matrix.
    pub fn inertia_eig_bounds(&self) -> (f64, f64) {
        let eigs = self.inertia.symmetric_eigenvalues();
        (eigs.min(), eigs.max())
    }
}

/// The scalar inertia couplings of the quadrotor/chain system.
///
/// `m00` couples translation to itself, `m0i` couples translation to link
/// `i`, and `mij` couples links `i` and `j` (all 0-indexed here).
#[derive(Debug, Clone, PartialEq)]
pub struct InertiaCouplings {
    pub m00: f64,
    pub m0i: Vec<f64>,
    pub mij: Vec<Vec<f64>>,
}

impl InertiaCouplings {
    pub fn m0(&self, i: usize) -> f64 {
        self.m0i[i]
    }

    pub fn m(&self, i: usize, j: usize) -> f64 {
        self.mij[i][j]
    }
}

/// Builds the inertia couplings from the parameters:
/// `m00 = m + Σ mᵢ`, `m0i = (Σ_{a≥i} m_a) lᵢ`, `mij = (Σ_{a≥max(i,j)} m_a) lᵢ lⱼ`.
pub fn inertia_couplings(p: &SystemParams) -> InertiaCouplings {
    let n = p.link_count();
    let tail_mass = |i: usize| -> f64 { p.link_masses[i..].iter().sum() };
    let m00 = p.quad_mass + tail_mass(0);
    let m0i: Vec<f64> = (0..n).map(|i| tail_mass(i) * p.link_lengths[i]).collect();
    // Grouping l_i * l_j first keeps m(i,j) exactly symmetric in floats.
    let mij: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| tail_mass(i.max(j)) * (p.link_lengths[i] * p.link_lengths[j]))
                .collect()
        })
        .collect();
    InertiaCouplings { m00, m0i, mij }
}

/// A point on SO(3) × R³ × (S²)ⁿ together with its velocities.
///
/// Link angular velocities are stored in the inertial frame and stay normal
/// to their link (`qᵢ · ωᵢ = 0`); the link direction rate is always derived
/// as `q̇ᵢ = ωᵢ × qᵢ`, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    /// Quadrotor mass-center position (m).
    pub position: Vec3,
    /// Quadrotor velocity (m/s).
    pub velocity: Vec3,
    /// Quadrotor attitude, body to inertial.
    pub attitude: RotationMatrix,
    /// Quadrotor angular velocity in the body frame (rad/s).
    pub body_rate: Vec3,
    /// Direction of each link, unit vectors pointing outward toward the payload.
    pub link_dirs: Vec<UnitVector>,
    /// Angular velocity of each link in the inertial frame (rad/s).
    pub link_rates: Vec<Vec3>,
}

impl SystemState {
    /// The hanging equilibrium: all links aligned with gravity below a
    /// stationary, level quadrotor at `position`.
    pub fn hanging_equilibrium(n: usize, position: Vec3) -> Self {
        SystemState {
            position,
            velocity: Vec3::zeros(),
            attitude: RotationMatrix::identity(),
            body_rate: Vec3::zeros(),
            link_dirs: (0..n).map(|_| UnitVector::e3()).collect(),
            link_rates: (0..n).map(|_| Vec3::zeros()).collect(),
        }
    }

    pub fn link_count(&self) -> usize {
        self.link_dirs.len()
    }

    /// Direction rate of link `i`, `q̇ᵢ = ωᵢ × qᵢ`.
    pub fn link_dir_rate(&self, i: usize) -> Vec3 {
        self.link_rates[i].cross(self.link_dirs[i].vector())
    }

    pub fn validate(&self, n: usize) -> Result<(), ModelError> {
        let err = |msg: String| Err(ModelError::InvalidState(msg));
        if self.link_dirs.len() != n || self.link_rates.len() != n {
            return err(alloc::format!(
                "state has {} link directions / {} rates, expected {n}",
                self.link_dirs.len(),
                self.link_rates.len()
            ));
        }
        for (i, (q, w)) in self.link_dirs.iter().zip(&self.link_rates).enumerate() {
            if (q.vector().norm() - 1.0).abs() > 1e-9 {
                return err(alloc::format!("link {i} direction norm {}", q.vector().norm()));
            }
            if q.vector().dot(w).abs() >= 1e-9 {
                return err(alloc::format!("link {i} rate not normal: q·w = {}", q.vector().dot(w)));
            }
        }
        if self.attitude.orthogonality_error() > crate::geom::ROTATION_TOL {
            return err("attitude is not a rotation".into());
        }
        Ok(())
    }
}

/// Position of each link's point mass: `xᵢ = x + Σ_{a≤i} l_a q_a`.
/// The last entry is the payload position.
pub fn payload_positions(s: &SystemState, p: &SystemParams) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(p.link_count());
    let mut pos = s.position;
    for (l, q) in p.link_lengths.iter().zip(&s.link_dirs) {
        pos += q.vector() * *l;
        out.push(pos);
    }
    out
}

/// Kinetic, potential, and total energy of the system (J).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
}

/// Total energy: the kinetic term assembles the inertia couplings with
/// `q̇ᵢ = ωᵢ × qᵢ`, the potential measures height along `e₃` (gravity
/// direction, so hanging configurations have negative potential).
pub fn total_energy(s: &SystemState, p: &SystemParams) -> Energy {
    let c = inertia_couplings(p);
    let n = p.link_count();
    let qdot: Vec<Vec3> = (0..n).map(|i| s.link_dir_rate(i)).collect();

    let mut kinetic = 0.5 * c.m00 * s.velocity.norm_squared();
    for i in 0..n {
        kinetic += c.m0(i) * s.velocity.dot(&qdot[i]);
        for j in 0..n {
            kinetic += 0.5 * c.m(i, j) * qdot[i].dot(&qdot[j]);
        }
    }
    kinetic += 0.5 * s.body_rate.dot(&(p.inertia * s.body_rate));

    let e3 = Vec3::z();
    let mut potential = -c.m00 * p.gravity * e3.dot(&s.position);
    for i in 0..n {
        let tail: f64 = p.link_masses[i..].iter().sum();
        potential -= tail * p.gravity * p.link_lengths[i] * e3.dot(s.link_dirs[i].vector());
    }

    Energy { kinetic, potential, total: kinetic + potential }
}

/// Aggregate link errors `(e_q, e_ω) = (Σᵢ |qᵢ − e₃|, Σᵢ |ωᵢ|)`.
pub fn link_errors(s: &SystemState) -> (f64, f64) {
    let e3 = Vec3::z();
    let e_q = s.link_dirs.iter().map(|q| (q.vector() - e3).norm()).sum();
    let e_w = s.link_rates.iter().map(|w| w.norm()).sum();
    (e_q, e_w)
}

/// Attitude configuration error `Ψ = ½ tr(I − R_cᵀ R) ∈ [0, 2]`.
pub fn attitude_error_psi(r: &RotationMatrix, rc: &RotationMatrix) -> f64 {
    0.5 * (Mat3::identity() - rc.matrix().transpose() * r.matrix()).trace()
}

/// Total linear momentum `m00 ẋ + Σᵢ m0i (ωᵢ × qᵢ)` (kg·m/s).
///
/// A conservation oracle for the free dynamics: the horizontal components
/// are conserved and the vertical component grows as `m00 g t`.
pub fn linear_momentum(s: &SystemState, p: &SystemParams) -> Vec3 {
    let c = inertia_couplings(p);
    let mut mom = s.velocity * c.m00;
    for i in 0..p.link_count() {
        mom += s.link_dir_rate(i) * c.m0(i);
    }
    mom
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Five identical 0.1 kg / 0.1 m links under a 0.5 kg quadrotor.
    pub(crate) fn bench_params() -> SystemParams {
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

    #[test]
    fn couplings_bench_values() {
        let c = inertia_couplings(&bench_params());
        assert_relative_eq!(c.m00, 1.0, epsilon = 1e-15);
        assert_relative_eq!(c.m0(0), 0.05, epsilon = 1e-15);
        // m23 in 1-based indexing: tail mass 0.3 times 0.1 * 0.1.
        assert_relative_eq!(c.m(1, 2), 0.003, epsilon = 1e-15);
    }

    #[test]
    fn couplings_symmetric() {
        let p = SystemParams {
            link_masses: alloc::vec![0.2, 0.05, 0.4],
            link_lengths: alloc::vec![0.3, 0.1, 0.25],
            ..bench_params()
        };
        let c = inertia_couplings(&p);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c.m(i, j), c.m(j, i));
                assert!(c.m(i, j) > 0.0);
            }
        }
        assert_relative_eq!(c.m00, 0.5 + 0.65, epsilon = 1e-15);
    }

    #[test]
    fn payload_positions_hanging() {
        let p = bench_params();
        let s = SystemState::hanging_equilibrium(5, Vec3::zeros());
        let xs = payload_positions(&s, &p);
        assert_relative_eq!(xs[4], Vec3::new(0.0, 0.0, 0.5), epsilon = 1e-15);
    }

    #[test]
    fn payload_positions_single_link() {
        let p = SystemParams {
            link_masses: alloc::vec![0.036],
            link_lengths: alloc::vec![0.7],
            ..bench_params()
        };
        let mut s = SystemState::hanging_equilibrium(1, Vec3::new(1.0, 0.0, 0.0));
        s.link_dirs[0] = UnitVector::new(Vec3::x()).unwrap();
        let xs = payload_positions(&s, &p);
        assert_relative_eq!(xs[0], Vec3::new(1.7, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn energy_at_hanging_equilibrium() {
        let p = bench_params();
        let s = SystemState::hanging_equilibrium(5, Vec3::zeros());
        let e = total_energy(&s, &p);
        assert_eq!(e.kinetic, 0.0);
        // -g * sum_i (tail mass)_i * l_i = -9.81 * (0.5+0.4+0.3+0.2+0.1) * 0.1
        assert_relative_eq!(e.potential, -1.4715, epsilon = 1e-12);
        assert_relative_eq!(e.total, -1.4715, epsilon = 1e-12);
    }

    #[test]
    fn energy_pure_spin() {
        let p = bench_params();
        let mut s = SystemState::hanging_equilibrium(5, Vec3::zeros());
        s.body_rate = Vec3::z();
        let e = total_energy(&s, &p);
        assert_relative_eq!(e.kinetic, 0.5 * 1.05e-2, epsilon = 1e-15);
    }

    #[test]
    fn link_errors_cases() {
        let s = SystemState::hanging_equilibrium(5, Vec3::zeros());
        assert_eq!(link_errors(&s), (0.0, 0.0));

        let mut s = SystemState::hanging_equilibrium(1, Vec3::zeros());
        s.link_dirs[0] = UnitVector::new(Vec3::x()).unwrap();
        let (eq, ew) = link_errors(&s);
        assert_relative_eq!(eq, 2.0f64.sqrt(), epsilon = 1e-15);
        assert_eq!(ew, 0.0);

        let mut s = SystemState::hanging_equilibrium(2, Vec3::zeros());
        s.link_rates[0] = Vec3::new(1.0, 0.0, 0.0);
        s.link_rates[1] = Vec3::new(0.0, 2.0, 0.0);
        let (eq, ew) = link_errors(&s);
        assert_eq!(eq, 0.0);
        assert_relative_eq!(ew, 3.0, epsilon = 1e-15);
    }

    #[test]
    fn psi_cases() {
        use crate::geom::exp_so3;
        let r = exp_so3(&Vec3::new(0.7, -0.3, 0.2));
        assert_relative_eq!(attitude_error_psi(&r, &r), 0.0, epsilon = 1e-14);

        let i = RotationMatrix::identity();
        let r = exp_so3(&Vec3::new(core::f64::consts::FRAC_PI_2, 0.0, 0.0));
        assert_relative_eq!(attitude_error_psi(&r, &i), 1.0, epsilon = 1e-14);

        let r = exp_so3(&Vec3::new(core::f64::consts::PI, 0.0, 0.0));
        assert_relative_eq!(attitude_error_psi(&r, &i), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn momentum_cases() {
        let p = bench_params();
        let s = SystemState::hanging_equilibrium(5, Vec3::zeros());
        assert_eq!(linear_momentum(&s, &p), Vec3::zeros());

        let mut s = SystemState::hanging_equilibrium(5, Vec3::zeros());
        s.velocity = Vec3::x();
        assert_relative_eq!(linear_momentum(&s, &p), Vec3::x(), epsilon = 1e-15);

        // Single link: m01 (w x q) with w = e1, q = e3 gives m01 * (-e2).
        let p1 = SystemParams {
            link_masses: alloc::vec![0.5],
            link_lengths: alloc::vec![0.1],
            ..bench_params()
        };
        let mut s = SystemState::hanging_equilibrium(1, Vec3::zeros());
        s.link_rates[0] = Vec3::x();
        assert_relative_eq!(
            linear_momentum(&s, &p1),
            Vec3::new(0.0, -0.05, 0.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn params_validation_rejects_bad_inputs() {
        let mut p = bench_params();
        p.link_lengths[2] = 0.0;
        assert!(p.validate().is_err());

        let mut p = bench_params();
        p.quad_mass = -1.0;
        assert!(p.validate().is_err());

        let mut p = bench_params();
        p.inertia[(0, 1)] = 0.5;
        assert!(p.validate().is_err());

        assert!(bench_params().validate().is_ok());
    }
}
