//! Linearization of the simplified (fictitious-input) model about the
//! hanging equilibrium, the closed-loop system matrices, and a
//! finite-difference validation of the linearization against the nonlinear
//! dynamics.
//!
//! Reduced coordinates: each link direction contributes the two horizontal
//! components of its deflection representative `ξᵢ = e₃ × qᵢ`, extracted
//! with `C = [e₁, e₂]`. The reduced configuration is
//! `𝐱 = [δx; Cᵀξ₁; …; Cᵀξₙ] ∈ R^{2n+3}` and the first-order state is
//! `z₁ = [𝐱; 𝐱̇] ∈ R^{4n+6}`.

use crate::dynamics::chain_accel_qform;
use crate::geom::{exp_so3, hat};
use crate::model::{inertia_couplings, SystemParams, SystemState};
use crate::{DMat, DVec, Mat3, Vec3};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearizeError {
    /// The reduced mass matrix could not be inverted.
    SingularMass,
    /// Finite-difference step outside the supported range.
    BadStep { eps: f64 },
}

impl fmt::Display for LinearizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinearizeError::SingularMass => write!(f, "reduced mass matrix is singular"),
            LinearizeError::BadStep { eps } => {
                write!(f, "finite-difference step {eps:e} outside [1e-8, 1e-4]")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LinearizeError {}

/// Second-order linear model `𝐌 𝐱̈ + 𝐆 𝐱 = 𝐁 δu` about the hanging
/// equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// Reduced mass matrix `𝐌`, (2n+3)×(2n+3), symmetric positive definite.
    pub mass: DMat,
    /// Stiffness `𝐆`: zero on the translational block, positive diagonal on
    /// the link blocks.
    pub stiffness: DMat,
    /// Input matrix `𝐁 = [I₃; 0]`, (2n+3)×3.
    pub input: DMat,
    pub n: usize,
}

/// First-order state `z₁ = [𝐱; 𝐱̇]` of the linearized model.
#[derive(Debug, Clone, PartialEq)]
pub struct LinState(pub DVec);

impl LinState {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Configuration half `𝐱`.
    pub fn config(&self) -> DVec {
        self.0.rows(0, self.0.len() / 2).into_owned()
    }

    /// Velocity half `𝐱̇`.
    pub fn rate(&self) -> DVec {
        let h = self.0.len() / 2;
        self.0.rows(h, h).into_owned()
    }
}

/// Closed-loop first-order model `ż₁ = 𝔸 z₁ + 𝔹 (…)` together with a
/// Lyapunov certificate pair `(P, Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopModel {
    pub a: DMat,
    pub b: DMat,
    pub p: DMat,
    pub q: DMat,
}

impl ClosedLoopModel {
    /// Relative residual `|𝔸ᵀP + P𝔸 + Q| / |Q|` (Frobenius).
    pub fn lyapunov_residual(&self) -> f64 {
        ((self.a.transpose() * &self.p) + (&self.p * &self.a) + &self.q).norm() / self.q.norm()
    }
}

/// Projection `C = [e₁, e₂]` onto the horizontal components.
fn c_matrix() -> nalgebra::Matrix3x2<f64> {
    nalgebra::Matrix3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)
}

/// Builds `𝐌`, `𝐆`, `𝐁` of the linearized model from the parameters.
pub fn build_linear_model(p: &SystemParams) -> LinearModel {
    let n = p.link_count();
    let c = inertia_couplings(p);
    let dim = 2 * n + 3;
    let cm = c_matrix();
    let e3 = Vec3::z();

    let mut mass = DMat::zeros(dim, dim);
    mass.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(Mat3::identity() * c.m00));
    for i in 0..n {
        let block = -hat(&e3) * cm * c.m0(i); // 3x2
        mass.fixed_view_mut::<3, 2>(0, 3 + 2 * i).copy_from(&block);
        mass.fixed_view_mut::<2, 3>(3 + 2 * i, 0).copy_from(&block.transpose());
        for j in 0..n {
            mass.fixed_view_mut::<2, 2>(3 + 2 * i, 3 + 2 * j)
                .copy_from(&(nalgebra::Matrix2::identity() * c.m(i, j)));
        }
    }

    let mut stiffness = DMat::zeros(dim, dim);
    for i in 0..n {
        let weight = p.link_masses[i..].iter().sum::<f64>() * p.gravity * p.link_lengths[i];
        stiffness.fixed_view_mut::<2, 2>(3 + 2 * i, 3 + 2 * i)
            .copy_from(&(nalgebra::Matrix2::identity() * weight));
    }

    let mut input = DMat::zeros(dim, 3);
    input.fixed_view_mut::<3, 3>(0, 0).copy_from(&Mat3::identity());

    LinearModel { mass, stiffness, input, n }
}

/// Assembles the closed-loop matrices for feedback `δu = −K_x 𝐱 − K_ẋ 𝐱̇`:
///
/// `𝔸 = [[0, I], [−𝐌⁻¹(𝐆 + 𝐁K_x), −𝐌⁻¹𝐁K_ẋ]]`, `𝔹 = [[0], [𝐌⁻¹]]`.
pub fn closed_loop(
    lm: &LinearModel,
    kx: &DMat,
    kdx: &DMat,
) -> Result<(DMat, DMat), LinearizeError> {
    let dim = lm.mass.nrows();
    let minv = lm.mass.clone().try_inverse().ok_or(LinearizeError::SingularMass)?;
    let mut a = DMat::zeros(2 * dim, 2 * dim);
    a.view_mut((0, dim), (dim, dim)).copy_from(&DMat::identity(dim, dim));
    let lower_left = -(&minv * (&lm.stiffness + &lm.input * kx));
    let lower_right = -(&minv * (&lm.input * kdx));
    a.view_mut((dim, 0), (dim, dim)).copy_from(&lower_left);
    a.view_mut((dim, dim), (dim, dim)).copy_from(&lower_right);

    let mut b = DMat::zeros(2 * dim, dim);
    b.view_mut((dim, 0), (dim, dim)).copy_from(&minv);
    Ok((a, b))
}

/// Extracts the first-order state `z₁` of a nonlinear state about the
/// target `x_d`: `𝐱 = [x − x_d; Cᵀ(e₃×qᵢ)…]`, `𝐱̇ = [ẋ; Cᵀωᵢ…]`.
pub fn lin_state(s: &SystemState, xd: &Vec3) -> LinState {
    let n = s.link_count();
    let dim = 2 * n + 3;
    let mut z = DVec::zeros(2 * dim);
    let e3 = Vec3::z();
    for k in 0..3 {
        z[k] = s.position[k] - xd[k];
        z[dim + k] = s.velocity[k];
    }
    for i in 0..n {
        let xi = e3.cross(s.link_dirs[i].vector());
        let w = &s.link_rates[i];
        z[3 + 2 * i] = xi.x;
        z[4 + 2 * i] = xi.y;
        z[dim + 3 + 2 * i] = w.x;
        z[dim + 4 + 2 * i] = w.y;
    }
    LinState(z)
}

/// Right-hand side of the closed-loop simplified model in the reduced chart,
/// used by the finite-difference validation: reconstructs a nonlinear state
/// from `z`, applies the fictitious input `u = −M00 g e₃ − K_x 𝐱 − K_ẋ 𝐱̇`,
/// and maps the resulting accelerations back into the chart.
fn simplified_rhs(
    z: &DVec,
    p: &SystemParams,
    kx: &DMat,
    kdx: &DMat,
) -> Result<DVec, LinearizeError> {
    let n = p.link_count();
    let dim = 2 * n + 3;
    let c = inertia_couplings(p);
    let e3 = Vec3::z();

    let v = Vec3::new(z[dim], z[dim + 1], z[dim + 2]);
    let mut dirs = Vec::with_capacity(n);
    let mut rates = Vec::with_capacity(n);
    for i in 0..n {
        let xi = Vec3::new(z[3 + 2 * i], z[4 + 2 * i], 0.0);
        let q = exp_so3(&xi).matrix() * e3;
        let w_raw = Vec3::new(z[dim + 3 + 2 * i], z[dim + 4 + 2 * i], 0.0);
        let w = w_raw - q * q.dot(&w_raw);
        dirs.push(q);
        rates.push(w);
    }

    // Reduced coordinates recomputed from the reconstructed state.
    let mut xq = DVec::zeros(dim);
    let mut xqd = DVec::zeros(dim);
    for k in 0..3 {
        xq[k] = z[k];
        xqd[k] = v[k];
    }
    for i in 0..n {
        let xi = e3.cross(&dirs[i]);
        xq[3 + 2 * i] = xi.x;
        xq[4 + 2 * i] = xi.y;
        xqd[3 + 2 * i] = rates[i].x;
        xqd[4 + 2 * i] = rates[i].y;
    }

    let du = kx * &xq + kdx * &xqd;
    let u = -e3 * (c.m00 * p.gravity) - Vec3::new(du[0], du[1], du[2]);
    let (xdd, qdd) =
        chain_accel_qform(&dirs, &rates, u, &c, p).map_err(|_| LinearizeError::SingularMass)?;

    let mut out = DVec::zeros(2 * dim);
    for k in 0..3 {
        out[k] = v[k];
        out[dim + k] = xdd[k];
    }
    for i in 0..n {
        let qdot = rates[i].cross(&dirs[i]);
        let d_xi = e3.cross(&qdot);
        let wd = dirs[i].cross(&qdd[i]);
        out[3 + 2 * i] = d_xi.x;
        out[4 + 2 * i] = d_xi.y;
        out[dim + 3 + 2 * i] = wd.x;
        out[dim + 4 + 2 * i] = wd.y;
    }
    Ok(out)
}

/// Central finite differences of the closed-loop simplified dynamics at the
/// hanging equilibrium, compared column-by-column against the assembled `𝔸`.
/// Returns the largest column error relative to `max(|𝔸 column|, 1)`.
pub fn fd_jacobian_check(
    p: &SystemParams,
    kx: &DMat,
    kdx: &DMat,
    eps: f64,
) -> Result<f64, LinearizeError> {
    if !(1e-8..=1e-4).contains(&eps) {
        return Err(LinearizeError::BadStep { eps });
    }
    let lm = build_linear_model(p);
    let (a, _) = closed_loop(&lm, kx, kdx)?;
    let dim = a.nrows();

    let mut worst: f64 = 0.0;
    for k in 0..dim {
        let mut zp = DVec::zeros(dim);
        zp[k] = eps;
        let mut zm = DVec::zeros(dim);
        zm[k] = -eps;
        let fp = simplified_rhs(&zp, p, kx, kdx)?;
        let fm = simplified_rhs(&zm, p, kx, kdx)?;
        let col_fd = (fp - fm) / (2.0 * eps);
        let col_a = a.column(k).into_owned();
        let err = (col_fd - &col_a).norm() / col_a.norm().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}
