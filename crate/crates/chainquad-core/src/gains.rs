//! Controller gain containers and the numeric stability certificates: the
//! Hurwitz/Lyapunov checks on the closed-loop linearization, the attitude
//! coupling bound on `c₂`, and the coupled translation/attitude matrices
//! `W₂` and `W` whose positive definiteness underwrites the stability
//! argument. Every inequality is evaluated numerically and reported with
//! its margin; nothing is assumed.

use crate::geom::{hat, UnitVector};
use crate::linearize::{ClosedLoopModel, LinearModel};
use crate::model::SystemParams;
use crate::{DMat, Vec3};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
#[cfg(not(feature = "std"))]
use nalgebra::ComplexField;

#[derive(Debug, Clone, PartialEq)]
pub enum GainsError {
    /// The closed-loop matrix has spectral abscissa ≥ 0.
    NotHurwitz { margin: f64 },
    /// Inputs to a certificate computation are malformed.
    InvalidInput(String),
    /// One or more certificate inequalities failed.
    CertificateFailed { failed: Vec<String> },
}

impl fmt::Display for GainsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GainsError::NotHurwitz { margin } => {
                write!(f, "closed-loop matrix is not Hurwitz (spectral abscissa {margin})")
            }
            GainsError::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            GainsError::CertificateFailed { failed } => {
                write!(f, "certificate failed: {}", failed.join(", "))
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GainsError {}

/// Full controller gain set.
///
/// `kq`/`kw` hold one gain per link; `kz` holds the integral gains, one for
/// the translational block followed by one per link. `c1` is carried for
/// completeness of the benchmark parameter set but enters no computation.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSet {
    pub kx: f64,
    pub kdx: f64,
    pub kq: Vec<f64>,
    pub kw: Vec<f64>,
    pub kz: Vec<f64>,
    pub kr: f64,
    pub komega: f64,
    pub ki: f64,
    pub c1: f64,
    pub c2: f64,
    /// Saturation bound on the translational integral readout.
    pub sigma: f64,
    /// Desired first body axis used to fix the yaw degree of freedom.
    pub b1d: UnitVector,
}

impl GainSet {
    pub fn validate(&self, n: usize) -> Result<(), GainsError> {
        let err = |msg: String| Err(GainsError::InvalidInput(msg));
        if self.kq.len() != n || self.kw.len() != n {
            return err(format!("{} kq / {} kw gains for {n} links", self.kq.len(), self.kw.len()));
        }
        if self.kz.len() != n + 1 {
            return err(format!("{} kz gains, expected {}", self.kz.len(), n + 1));
        }
        let scalars = [self.kx, self.kdx, self.kr, self.komega, self.ki, self.c2, self.sigma];
        if scalars.iter().any(|&g| !(g > 0.0))
            || self.kq.iter().chain(&self.kw).chain(&self.kz).any(|&g| !(g > 0.0))
        {
            return err("all gains must be positive".into());
        }
        Ok(())
    }

    /// Number of links this gain set is sized for.
    pub fn link_count(&self) -> usize {
        self.kq.len()
    }

    /// Places a scalar-per-block gain row: `[k₀ I₃ | k₁ H | … | kₙ H]` where
    /// `H = ê₃ C` routes each link's two reduced coordinates `Cᵀ(e₃×qᵢ)`
    /// back as horizontal deflection feedback. With this placement a
    /// positive link gain leans the commanded force into the deflection,
    /// which is what lets the position channel damp the chain; the identity
    /// placement destabilizes the closed loop at these magnitudes.
    fn block_row(k0: f64, ks: &[f64]) -> DMat {
        let n = ks.len();
        let mut m = DMat::zeros(3, 2 * n + 3);
        for d in 0..3 {
            m[(d, d)] = k0;
        }
        let h = hat(&Vec3::z()) * nalgebra::Matrix3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        for (i, &k) in ks.iter().enumerate() {
            m.fixed_view_mut::<3, 2>(0, 3 + 2 * i).copy_from(&(h * k));
        }
        m
    }

    /// Position feedback matrix `K_x`, 3×(2n+3).
    pub fn kx_matrix(&self) -> DMat {
        Self::block_row(self.kx, &self.kq)
    }

    /// Velocity feedback matrix `K_ẋ`, 3×(2n+3).
    pub fn kdx_matrix(&self) -> DMat {
        Self::block_row(self.kdx, &self.kw)
    }

    /// Integral feedback matrix `K_z`, 3×(2n+3).
    pub fn kz_matrix(&self) -> DMat {
        Self::block_row(self.kz[0], &self.kz[1..])
    }
}

/// Options for [`certify`]. `b2` is the feedforward coupling bound: supply a
/// value measured from a nominal run, or leave 0 for the pure stabilization
/// bound. `q` overrides the Lyapunov weight (identity by default).
#[derive(Debug, Clone)]
pub struct CertifyOptions {
    pub b2: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub q: Option<DMat>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { b2: 0.0, psi1: 0.9, psi2: 1.9, q: None }
    }
}

/// Pass/fail evidence for every certificate inequality, with the audit
/// scalars that produced it.
#[derive(Debug, Clone)]
pub struct Certificate {
    /// Largest real part among the closed-loop eigenvalues.
    pub hurwitz_margin: f64,
    /// Relative residual of the Lyapunov equation solve.
    pub lyap_residual: f64,
    /// Smallest eigenvalue of `P`.
    pub p_min_eig: f64,
    /// Upper bound that `c₂` must stay below.
    pub c2_bound: f64,
    pub c2: f64,
    pub w2_min_eig: f64,
    pub w_min_eig: f64,
    /// Whether the disturbance bound is inside the integral authority,
    /// `δ < min(k_z)·σ`.
    pub integral_feasible: bool,
    pub delta: f64,
    pub b1: f64,
    pub b2: f64,
    pub c3: f64,
    pub alpha: f64,
    pub kmax: f64,
    pub kzm: f64,
    /// Closed-loop model with the certified `(P, Q)` pair.
    pub model: ClosedLoopModel,
}

impl Certificate {
    /// Names of the inequalities that failed, empty when all hold.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !(self.hurwitz_margin < 0.0) {
            out.push("hurwitz_margin < 0");
        }
        if !(self.lyap_residual < 1e-10) {
            out.push("lyap_residual < 1e-10");
        }
        if !(self.p_min_eig > 0.0) {
            out.push("P positive definite");
        }
        if !(self.c2 < self.c2_bound) {
            out.push("c2 < c2_bound");
        }
        if !(self.w2_min_eig > 0.0) {
            out.push("W2 min eig > 0");
        }
        if !(self.w_min_eig > 0.0) {
            out.push("W min eig > 0");
        }
        if !self.integral_feasible {
            out.push("delta < kz*sigma");
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn ensure(&self) -> Result<(), GainsError> {
        let failed = self.failures();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(GainsError::CertificateFailed {
                failed: failed.into_iter().map(String::from).collect(),
            })
        }
    }
}

/// Eigenvalues of a square matrix via a bounded Schur iteration.
///
/// nalgebra's unbounded `complex_eigenvalues` can stall on defective
/// matrices; this variant caps the iteration and reads the spectrum off the
/// quasi-triangular factor (1×1 and 2×2 diagonal blocks) itself.
pub fn eigenvalues(a: &DMat) -> Result<Vec<nalgebra::Complex<f64>>, GainsError> {
    let schur = a
        .clone()
        .try_schur(1e-13, 100_000)
        .ok_or_else(|| GainsError::InvalidInput("eigenvalue iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    let d = t.nrows();
    let mut eigs = Vec::with_capacity(d);
    let mut i = 0;
    while i < d {
        let sub = if i + 1 < d { t[(i + 1, i)].abs() } else { 0.0 };
        let scale = t[(i, i)].abs() + if i + 1 < d { t[(i + 1, i + 1)].abs() } else { 0.0 };
        if i + 1 < d && sub > 1e-14 * scale.max(1.0) {
            // 2x2 block [a b; c d]: roots of the characteristic quadratic.
            let (a11, a12, a21, a22) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let mean = 0.5 * (a11 + a22);
            let disc = 0.25 * (a11 - a22) * (a11 - a22) + a12 * a21;
            if disc >= 0.0 {
                let r = disc.sqrt();
                eigs.push(nalgebra::Complex::new(mean + r, 0.0));
                eigs.push(nalgebra::Complex::new(mean - r, 0.0));
            } else {
                let r = (-disc).sqrt();
                eigs.push(nalgebra::Complex::new(mean, r));
                eigs.push(nalgebra::Complex::new(mean, -r));
            }
            i += 2;
        } else {
            eigs.push(nalgebra::Complex::new(t[(i, i)], 0.0));
            i += 1;
        }
    }
    Ok(eigs)
}

/// Largest real part among the eigenvalues of a square matrix.
pub fn spectral_abscissa(a: &DMat) -> Result<f64, GainsError> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|c| c.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Spectral norm (largest singular value).
fn spectral_norm(m: &DMat) -> f64 {
    let gram = m.transpose() * m;
    let sym = (&gram + gram.transpose()) * 0.5;
    sym.symmetric_eigenvalues().max().max(0.0).sqrt()
}

fn min_sym_eig(m: &DMat) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Smallest eigenvalue of the symmetric 2×2 matrix `[[a, b], [b, d]]`.
fn sym2_min_eig(a: f64, b: f64, d: f64) -> f64 {
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    mean - rad
}

/// Solves `𝔸ᵀP + P𝔸 = −Q` for symmetric positive definite `P`.
///
/// Direct Kronecker-vectorized solve, `(I⊗𝔸ᵀ + 𝔸ᵀ⊗I) vec(P) = −vec(Q)`,
/// which is exact up to one dense LU at the (4n+6)² sizes used here. The
/// result is symmetrized to remove rounding skew.
pub fn solve_lyapunov(a: &DMat, q: &DMat) -> Result<DMat, GainsError> {
    let d = a.nrows();
    if a.ncols() != d || q.nrows() != d || q.ncols() != d {
        return Err(GainsError::InvalidInput(format!(
            "dimension mismatch: A is {}x{}, Q is {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    if (q - q.transpose()).norm() > 1e-10 * q.norm().max(1.0) || min_sym_eig(q) <= 0.0 {
        return Err(GainsError::InvalidInput("Q must be symmetric positive definite".into()));
    }
    let margin = spectral_abscissa(a)?;
    if margin >= 0.0 {
        return Err(GainsError::NotHurwitz { margin });
    }

    let at = a.transpose();
    let eye = DMat::identity(d, d);
    let op = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = nalgebra::DVector::from_column_slice((-q).as_slice());
    let vec_p = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| GainsError::InvalidInput("Lyapunov operator is singular".into()))?;
    let p = DMat::from_column_slice(d, d, vec_p.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

/// Upper bound on `c₂` for `W₂` to be positive definite:
/// `min{ √(k_R λ_m)/λ_M, 4k_Ω / (8 k_R λ_M + (k_Ω + B₂)²) }`.
pub fn c2_bound(kr: f64, komega: f64, lam_m: f64, lam_max: f64, b2: f64) -> f64 {
    let first = (kr * lam_m).sqrt() / lam_max;
    let second = 4.0 * komega / (8.0 * kr * lam_max + (komega + b2) * (komega + b2));
    first.min(second)
}

/// Evaluates every certificate inequality for the closed loop formed by
/// `gains` on the linear model, with disturbance bound `δ ≥ |Δ_x|_∞`.
pub fn certify(
    lm: &LinearModel,
    gains: &GainSet,
    p: &SystemParams,
    delta: f64,
    opts: &CertifyOptions,
) -> Result<Certificate, GainsError> {
    let n = lm.n;
    if gains.link_count() != n {
        return Err(GainsError::InvalidInput(format!(
            "gain set sized for {} links, model has {n}",
            gains.link_count()
        )));
    }
    if !(opts.psi1 > 0.0 && opts.psi1 < 1.0) || !(opts.psi2 > 0.0 && opts.psi2 < 2.0) {
        return Err(GainsError::InvalidInput(format!(
            "domain parameters psi1 {} / psi2 {} outside (0,1) / (0,2)",
            opts.psi1, opts.psi2
        )));
    }

    let kx = gains.kx_matrix();
    let kdx = gains.kdx_matrix();
    let kz = gains.kz_matrix();
    let (a, b) = crate::linearize::closed_loop(lm, &kx, &kdx)
        .map_err(|e| GainsError::InvalidInput(format!("{e}")))?;

    let hurwitz_margin = spectral_abscissa(&a)?;
    if hurwitz_margin >= 0.0 {
        return Err(GainsError::NotHurwitz { margin: hurwitz_margin });
    }
    let q = opts.q.clone().unwrap_or_else(|| DMat::identity(a.nrows(), a.ncols()));
    let pmat = solve_lyapunov(&a, &q)?;
    let model = ClosedLoopModel { a, b, p: pmat, q };
    let lyap_residual = model.lyapunov_residual();
    let p_min_eig = min_sym_eig(&model.p);

    let (lam_m, lam_max) = p.inertia_eig_bounds();
    let bound = c2_bound(gains.kr, gains.komega, lam_m, lam_max, opts.b2);
    let w2_min = sym2_min_eig(
        gains.c2 * gains.kr,
        -0.5 * gains.c2 * (gains.komega + opts.b2),
        gains.komega - 2.0 * gains.c2 * lam_max,
    );

    let m00 = p.quad_mass + p.link_masses.iter().sum::<f64>();
    let b1 = m00 * p.gravity;
    let alpha = (opts.psi1 * (2.0 - opts.psi1)).sqrt();
    let dim_f = (2 * n + 3) as f64;
    let kmax = kx.amax().max(kdx.amax()) * (3.0 * dim_f).sqrt();
    let kzm = 3.0f64.sqrt() * dim_f * kz.amax();
    let c3 = 2.0 * spectral_norm(&(&model.p * &model.b * &lm.input));
    let lam_min_q = min_sym_eig(&model.q);
    let w_min = sym2_min_eig(
        lam_min_q - 2.0 * c3 * kmax * alpha,
        -0.5 * c3 * (b1 + gains.sigma * kzm),
        w2_min,
    );

    let kz_min = gains.kz.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Certificate {
        hurwitz_margin,
        lyap_residual,
        p_min_eig,
        c2_bound: bound,
        c2: gains.c2,
        w2_min_eig: w2_min,
        w_min_eig: w_min,
        integral_feasible: delta < kz_min * gains.sigma,
        delta,
        b1,
        b2: opts.b2,
        c3,
        alpha,
        kmax,
        kzm,
        model,
    })
}
