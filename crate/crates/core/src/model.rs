//! Linearized three-mode model: one mechanical resonator `b` coupled to cavity 1
//! through a beam-splitter interaction and to cavity 2 through a
//! parametric-amplifier interaction.
//!
//! # Conventions
//!
//! Fourier transforms use `o(t) = (2π)^{-1/2} ∫ dω e^{-iωt} o(ω)`, so `d/dt → -iω`
//! and the transform of `o†(t)` at frequency `ω` is `o(-ω)†`. Input noise is
//! delta-correlated in frequency with no `2π` factor:
//! `⟨a_in(ω) a_in†(ω')⟩ = (N + 1) δ(ω - ω')`. The input-output relation is
//! `a_out = a_in + √rate · a`, consistent with the `-√rate · a_in` drive in the
//! Langevin equations.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Condition number of `(-iω - M)` above which [`scattering`] refuses to solve.
pub const NEAR_SINGULAR_CONDITION: f64 = 1e12;

/// Relative tolerance on the closed-form stability inequality inside which the
/// verdict is [`StabilityVerdict::Marginal`].
pub const MARGINAL_REL_TOL: f64 = 1e-9;

/// Physical rates, couplings and thermal populations of the linearized model.
///
/// Rates are amplitude-decay rates in angular-frequency units; couplings are
/// the effective (drive-enhanced) couplings, taken real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub gamma: f64,
    pub g1: f64,
    pub g2: f64,
    pub n_m: f64,
    pub n1: f64,
    pub n2: f64,
}

impl SystemParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kappa1: f64,
        kappa2: f64,
        gamma: f64,
        g1: f64,
        g2: f64,
        n_m: f64,
        n1: f64,
        n2: f64,
    ) -> Result<Self> {
        let p = SystemParams {
            kappa1,
            kappa2,
            gamma,
            g1,
            g2,
            n_m,
            n1,
            n2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Equal cavity decay `kappa`, zero temperature.
    pub fn symmetric(gamma: f64, kappa: f64, g1: f64, g2: f64) -> Result<Self> {
        Self::new(kappa, kappa, gamma, g1, g2, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma", self.gamma),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("g1", self.g1),
            ("g2", self.g2),
            ("n_m", self.n_m),
            ("n1", self.n1),
            ("n2", self.n2),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn with_g1(self, g1: f64) -> Self {
        SystemParams { g1, ..self }
    }

    pub fn with_g2(self, g2: f64) -> Self {
        SystemParams { g2, ..self }
    }

    /// Largest `G₂` allowed by the closed-form stability condition at this `G₁`.
    pub fn g2_stability_limit(&self) -> f64 {
        let r = self.kappa1 / self.kappa2;
        self.g1 / r.max(1.0 / r).sqrt()
    }

    /// Cooperativities `(C₁, C₂)` with `Cᵢ = 4Gᵢ²/(γκᵢ)`.
    pub fn cooperativities(&self) -> (f64, f64) {
        (
            4.0 * self.g1 * self.g1 / (self.gamma * self.kappa1),
            4.0 * self.g2 * self.g2 / (self.gamma * self.kappa2),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityVerdict {
    Stable,
    Unstable,
    Marginal,
}

impl std::fmt::Display for StabilityVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StabilityVerdict::Stable => "stable",
            StabilityVerdict::Unstable => "unstable",
            StabilityVerdict::Marginal => "marginal",
        })
    }
}

/// Closed-form stability verdict valid at strong cooperativity and `κᵢ ≫ γ`:
/// stable iff `G₁²/G₂² > max(κ₁/κ₂, κ₂/κ₁)`; for `κ₁ = κ₂` this reads `G₂ ≤ G₁`
/// with equality reported as marginal.
pub fn check_stability(p: &SystemParams) -> StabilityVerdict {
    if p.g2 == 0.0 {
        return StabilityVerdict::Stable;
    }
    let ratio = (p.g1 / p.g2).powi(2);
    let r = p.kappa1 / p.kappa2;
    let bound = r.max(1.0 / r);
    if (ratio - bound).abs() <= MARGINAL_REL_TOL * bound {
        StabilityVerdict::Marginal
    } else if ratio > bound {
        StabilityVerdict::Stable
    } else {
        StabilityVerdict::Unstable
    }
}

/// Drift matrix for the operator vector `(b, d₁, d₂†)`.
pub fn drift_matrix(p: &SystemParams) -> Matrix3<Complex64> {
    let i = Complex64::i();
    let re = |x: f64| Complex64::new(x, 0.0);
    Matrix3::new(
        re(-p.gamma / 2.0),
        -i * p.g1,
        -i * p.g2,
        -i * p.g1,
        re(-p.kappa1 / 2.0),
        re(0.0),
        i * p.g2,
        re(0.0),
        re(-p.kappa2 / 2.0),
    )
}

/// Eigenvalues of the drift matrix from a complex Schur decomposition.
pub fn drift_eigenvalues(p: &SystemParams) -> [Complex64; 3] {
    let t = drift_matrix(p).schur().unpack().1;
    [t[(0, 0)], t[(1, 1)], t[(2, 2)]]
}

/// Largest real part among the drift eigenvalues; negative means stable.
pub fn spectral_abscissa(p: &SystemParams) -> f64 {
    drift_eigenvalues(p)
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Stability decided from the drift eigenvalues. Authoritative outside the
/// strong-cooperativity regime where [`check_stability`] is only advisory.
pub fn eigen_stable(p: &SystemParams) -> bool {
    spectral_abscissa(p) < 0.0
}

/// Frequency response `S(ω')` mapping `(d₁_in, d₂_in†, b_in)` to
/// `(d₁_out, d₂_out†, b_out)`, indexed in that order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringMatrix {
    pub freq: f64,
    pub entries: Matrix3<Complex64>,
}

impl ScatteringMatrix {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn row(&self, row: usize) -> [Complex64; 3] {
        [self.get(row, 0), self.get(row, 1), self.get(row, 2)]
    }

    /// `|S₁₁|² − |S₁₂|² + |S₁₃|²`, equal to 1 when `[d₁_out, d₁_out†]` is preserved.
    pub fn cavity1_identity(&self) -> f64 {
        let [a, b, c] = self.row(0);
        a.norm_sqr() - b.norm_sqr() + c.norm_sqr()
    }

    /// `|S₂₂|² − |S₂₁|² − |S₂₃|²`, equal to 1 when `[d₂_out, d₂_out†]` is preserved.
    pub fn cavity2_identity(&self) -> f64 {
        let [a, b, c] = self.row(1);
        b.norm_sqr() - a.norm_sqr() - c.norm_sqr()
    }

    /// `|S₃₃|² + |S₃₁|² − |S₃₂|²` for the mechanical output row.
    pub fn mechanical_identity(&self) -> f64 {
        let [a, b, c] = self.row(2);
        c.norm_sqr() + a.norm_sqr() - b.norm_sqr()
    }
}

// Internal ordering is (b, d1, d2†); external ordering is (d1, d2†, b).
const EXTERNAL_TO_INTERNAL: [usize; 3] = [1, 2, 0];

/// Solves `(-iω' − M) v = −L v_in`, `L = diag(√γ, √κ₁, √κ₂)`, and applies
/// `out = in + L v`, i.e. `S = I − L (−iω' − M)⁻¹ L`.
pub fn scattering(p: &SystemParams, freq: f64) -> Result<ScatteringMatrix> {
    if !freq.is_finite() {
        return Err(Error::InvalidParams(format!("frequency must be finite, got {freq}")));
    }
    let a = Matrix3::from_diagonal_element(Complex64::new(0.0, -freq)) - drift_matrix(p);
    let inv = a.lu().try_inverse().ok_or(Error::NearSingular {
        freq,
        condition: f64::INFINITY,
    })?;
    let condition = norm1(&a) * norm1(&inv);
    if !(condition <= NEAR_SINGULAR_CONDITION) {
        return Err(Error::NearSingular { freq, condition });
    }
    let l = Vector3::new(p.gamma.sqrt(), p.kappa1.sqrt(), p.kappa2.sqrt());
    let entries = Matrix3::from_fn(|r, c| {
        let (ir, ic) = (EXTERNAL_TO_INTERNAL[r], EXTERNAL_TO_INTERNAL[c]);
        let delta = if ir == ic { 1.0 } else { 0.0 };
        Complex64::new(delta, 0.0) - inv[(ir, ic)] * (l[ir] * l[ic])
    });
    Ok(ScatteringMatrix { freq, entries })
}

fn norm1(m: &Matrix3<Complex64>) -> f64 {
    (0..3)
        .map(|c| (0..3).map(|r| m[(r, c)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
