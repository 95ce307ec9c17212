//! Covariance matrix of the filtered pair and its logarithmic negativity.
//!
//! Quadratures are `X = (D + D†)/√2`, `P = (D − D†)/(i√2)`, ordered
//! `(X₁, P₁, X₂, P₂)`, with `V_ij = ⟨{ΔR_i, ΔR_j}⟩/2` so that vacuum is `I/2`.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::spectra::{moments, FilterSpec, MomentSet};

/// Eigenvalue floor of `V + iΩ/2`, relative to `max(1, ‖V‖)`.
pub const BONA_FIDE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix {
    pub entries: Matrix4<f64>,
}

/// Two-mode symplectic form `⊕ [[0, 1], [−1, 0]]`.
pub fn symplectic_form() -> Matrix4<f64> {
    let mut o = Matrix4::zeros();
    o[(0, 1)] = 1.0;
    o[(1, 0)] = -1.0;
    o[(2, 3)] = 1.0;
    o[(3, 2)] = -1.0;
    o
}

impl CovarianceMatrix {
    pub fn vacuum() -> Self {
        CovarianceMatrix {
            entries: Matrix4::identity() * 0.5,
        }
    }

    pub fn block_a(&self) -> Matrix2<f64> {
        self.entries.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn block_b(&self) -> Matrix2<f64> {
        self.entries.fixed_view::<2, 2>(2, 2).into_owned()
    }

    pub fn block_c(&self) -> Matrix2<f64> {
        self.entries.fixed_view::<2, 2>(0, 2).into_owned()
    }

    /// `P₂ → −P₂`.
    pub fn partial_transpose(&self) -> Self {
        let lambda = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0));
        CovarianceMatrix {
            entries: lambda * self.entries * lambda,
        }
    }

    /// `det V` through the Schur complement `det A · det(B − Cᵀ A⁻¹ C)`.
    pub fn determinant(&self) -> f64 {
        let a = self.block_a();
        let det_a = a.determinant();
        let a_inv = Matrix2::new(a[(1, 1)], -a[(0, 1)], -a[(1, 0)], a[(0, 0)]) / det_a;
        let c = self.block_c();
        let schur = self.block_b() - c.transpose() * a_inv * c;
        det_a * schur.determinant()
    }

    /// Smallest eigenvalue of the Hermitian matrix `V + iΩ/2`.
    pub fn uncertainty_margin(&self) -> f64 {
        let omega = symplectic_form();
        let m: Matrix4<Complex64> =
            Matrix4::from_fn(|r, c| Complex64::new(self.entries[(r, c)], 0.5 * omega[(r, c)]));
        SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_bona_fide(&self) -> Result<()> {
        let asym = (self.entries - self.entries.transpose()).amax();
        let scale = self.entries.amax().max(1.0);
        if asym > 1e-12 * scale {
            return Err(Error::Unphysical(format!("covariance matrix not symmetric ({asym:.3e})")));
        }
        let margin = self.uncertainty_margin();
        if margin < -BONA_FIDE_TOL * scale {
            return Err(Error::Unphysical(format!(
                "uncertainty principle violated: min eig(V + iΩ/2) = {margin:.3e}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementResult {
    pub e_n: f64,
    pub nu_minus: f64,
    pub moments: Option<MomentSet>,
}

/// Exact map from the six moments to `V`; no moment is assumed to vanish.
pub fn covariance_from_moments(m: &MomentSet) -> Result<CovarianceMatrix> {
    let cov = covariance_unchecked(m);
    cov.check_bona_fide()?;
    Ok(cov)
}

fn covariance_unchecked(m: &MomentSet) -> CovarianceMatrix {
    // Gram entries ⟨L_a L_b⟩ for L = (D₁, D₁†, D₂, D₂†); modes 1 and 2 commute.
    let one = Complex64::new(1.0, 0.0);
    let n1 = Complex64::new(m.n1, 0.0);
    let n2 = Complex64::new(m.n2, 0.0);
    let (c, x) = (m.c12, m.x12);
    #[rustfmt::skip]
    let gram = [
        [m.m11,     n1 + one,     c,         x.conj()],
        [n1,        m.m11.conj(), x,         c.conj()],
        [c,         x,            m.m22,     n2 + one],
        [x.conj(),  c.conj(),     n2,        m.m22.conj()],
    ];
    // ⟨R_i R_j⟩ for R = X or P of modes j, k, with a = D_j, b = D_k:
    //   XX = ½(ab + ab† + a†b + a†b†)
    //   PP = −½(ab − ab† − a†b + a†b†)
    //   XP = −(i/2)(ab − ab† + a†b − a†b†)
    let quad = |j: usize, k: usize, rj: bool, rk: bool| -> f64 {
        let (a, ad) = (2 * j, 2 * j + 1);
        let (b, bd) = (2 * k, 2 * k + 1);
        let (ab, abd, adb, adbd) = (gram[a][b], gram[a][bd], gram[ad][b], gram[ad][bd]);
        let v = match (rj, rk) {
            (false, false) => (ab + abd + adb + adbd) * 0.5,
            (true, true) => -(ab - abd - adb + adbd) * 0.5,
            (false, true) => (ab - abd + adb - adbd) * Complex64::new(0.0, -0.5),
            (true, false) => (ab + abd - adb - adbd) * Complex64::new(0.0, -0.5),
        };
        v.re
    };
    let entries = Matrix4::from_fn(|r, col| {
        let forward = quad(r / 2, col / 2, r % 2 == 1, col % 2 == 1);
        let backward = quad(col / 2, r / 2, col % 2 == 1, r % 2 == 1);
        0.5 * (forward + backward)
    });
    CovarianceMatrix { entries }
}

/// `E_N = max(0, −ln 2ν̃₋)` from the 2×2 block invariants of the partially
/// transposed matrix.
pub fn log_negativity(v: &CovarianceMatrix) -> Result<EntanglementResult> {
    let det_a = v.block_a().determinant();
    let det_b = v.block_b().determinant();
    let det_c = v.block_c().determinant();
    let det_v = v.determinant();
    if !(det_v > 0.0) {
        return Err(Error::Unphysical(format!("det V = {det_v:.3e} is not positive")));
    }
    let delta = det_a + det_b - 2.0 * det_c;
    let disc = delta * delta - 4.0 * det_v;
    if disc < -BONA_FIDE_TOL * delta * delta {
        return Err(Error::Unphysical(format!(
            "complex symplectic eigenvalue (Δ̃² − 4 det V = {disc:.3e})"
        )));
    }
    // ν̃₋² = (Δ̃ − √disc)/2, written through the product of the roots
    let nu2 = 2.0 * det_v / (delta + disc.max(0.0).sqrt());
    let nu_minus = nu2.sqrt();
    let e_n = (-(2.0 * nu_minus).ln()).max(0.0);
    Ok(EntanglementResult {
        e_n,
        nu_minus,
        moments: None,
    })
}

/// Moments, covariance matrix and `E_N` of the filtered pair.
pub fn entanglement(p: &SystemParams, f: &FilterSpec) -> Result<EntanglementResult> {
    let m = moments(p, f)?;
    entanglement_from_moments(&m)
}

pub fn entanglement_from_moments(m: &MomentSet) -> Result<EntanglementResult> {
    let v = covariance_from_moments(m)?;
    let mut r = log_negativity(&v)?;
    r.moments = Some(*m);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vacuum() {
        let v = covariance_from_moments(&MomentSet::vacuum()).unwrap();
        assert_eq!(v.entries, Matrix4::identity() * 0.5);
        let r = log_negativity(&v).unwrap();
        assert_eq!(r.e_n, 0.0);
        assert_relative_eq!(r.nu_minus, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn two_mode_squeezed_vacuum_is_textbook() {
        for r in [0.1, 1.0, 3.0] {
            let v = covariance_from_moments(&MomentSet::two_mode_squeezed(r)).unwrap();
            let (c, s) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
            #[rustfmt::skip]
            let expected = Matrix4::new(
                c, 0.0, s, 0.0,
                0.0, c, 0.0, -s,
                s, 0.0, c, 0.0,
                0.0, -s, 0.0, c,
            );
            assert!((v.entries - expected).amax() < 1e-12 * c, "r={r}");
            let e = log_negativity(&v).unwrap().e_n;
            assert!((e - 2.0 * r).abs() < 1e-10, "r={r}: {e}");
        }
    }

    #[test]
    fn local_rotation_invariance() {
        let m = MomentSet {
            n1: 1.3,
            n2: 0.9,
            c12: Complex64::new(0.7, 0.4),
            ..MomentSet::vacuum()
        };
        let e0 = entanglement_from_moments(&m).unwrap().e_n;
        for phi in [0.3, 1.7, -2.9] {
            let e = entanglement_from_moments(&m.rotate_mode1(phi)).unwrap().e_n;
            assert!((e - e0).abs() < 1e-10);
        }
    }

    #[test]
    fn unphysical_moments_rejected() {
        let m = MomentSet {
            n1: 0.1,
            n2: 0.1,
            c12: Complex64::new(2.0, 0.0),
            ..MomentSet::vacuum()
        };
        assert!(matches!(covariance_from_moments(&m), Err(Error::Unphysical(_))));
    }

    #[test]
    fn schur_determinant_matches_lu() {
        let v = covariance_from_moments(&MomentSet {
            n1: 2.0,
            n2: 1.5,
            c12: Complex64::new(1.1, -0.3),
            m11: Complex64::new(0.2, 0.1),
            m22: Complex64::new(-0.1, 0.05),
            x12: Complex64::new(0.05, 0.02),
        })
        .unwrap();
        assert_relative_eq!(v.determinant(), v.entries.determinant(), max_relative = 1e-12);
    }
}
