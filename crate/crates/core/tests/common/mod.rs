//! Independent oracles shared by the integration tests. Nothing here calls the
//! library code path it is used to check.

#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::Matrix4;
use num_complex::Complex64 as C;
use optoent_core::SystemParams;

/// Scattering matrix in external order `(d1, d2†, b)`, written directly from the
/// Langevin equations in that order and inverted by the adjugate formula.
///
/// `ḋ₁ = −κ₁/2 d₁ − iG₁ b − √κ₁ d₁in`, `ḋ₂† = −κ₂/2 d₂† + iG₂ b − √κ₂ d₂in†`,
/// `ḃ = −γ/2 b − iG₁ d₁ − iG₂ d₂† − √γ bin`; with `d/dt → −iω`,
/// `(−iω − M) v = −L vin` and `vout = vin + L v`.
pub fn oracle_scattering(p: &SystemParams, w: f64) -> [[C; 3]; 3] {
    let i = C::i();
    let z = C::new(0.0, 0.0);
    let r = |x: f64| C::new(x, 0.0);
    let m = [
        [r(-p.kappa1 / 2.0), z, -i * p.g1],
        [z, r(-p.kappa2 / 2.0), i * p.g2],
        [-i * p.g1, -i * p.g2, r(-p.gamma / 2.0)],
    ];
    let mut a = [[z; 3]; 3];
    for (row, mrow) in a.iter_mut().zip(&m) {
        for (x, mx) in row.iter_mut().zip(mrow) {
            *x = -mx;
        }
    }
    for (k, row) in a.iter_mut().enumerate() {
        row[k] += C::new(0.0, -w);
    }
    let inv = adjugate_inverse(&a);
    let l = [p.kappa1.sqrt(), p.kappa2.sqrt(), p.gamma.sqrt()];
    let mut s = [[z; 3]; 3];
    for rr in 0..3 {
        for cc in 0..3 {
            let delta = if rr == cc { 1.0 } else { 0.0 };
            s[rr][cc] = r(delta) - inv[rr][cc] * l[rr] * l[cc];
        }
    }
    s
}

fn adjugate_inverse(a: &[[C; 3]; 3]) -> [[C; 3]; 3] {
    let cof = |r: usize, c: usize| {
        let rows: Vec<usize> = (0..3).filter(|&x| x != r).collect();
        let cols: Vec<usize> = (0..3).filter(|&x| x != c).collect();
        let minor = a[rows[0]][cols[0]] * a[rows[1]][cols[1]] - a[rows[0]][cols[1]] * a[rows[1]][cols[0]];
        if (r + c).is_multiple_of(2) { minor } else { -minor }
    };
    let det = (0..3).map(|c| a[0][c] * cof(0, c)).sum::<C>();
    let mut inv = [[C::new(0.0, 0.0); 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            inv[r][c] = cof(c, r) / det;
        }
    }
    inv
}

/// Routh–Hurwitz test on the real characteristic cubic
/// `(λ+γ/2)(λ+κ₁/2)(λ+κ₂/2) + G₁²(λ+κ₂/2) − G₂²(λ+κ₁/2)`.
pub fn routh_hurwitz_stable(p: &SystemParams) -> bool {
    let (g, k1, k2) = (p.gamma / 2.0, p.kappa1 / 2.0, p.kappa2 / 2.0);
    let (a, b) = (p.g1 * p.g1, p.g2 * p.g2);
    let a2 = g + k1 + k2;
    let a1 = g * k1 + g * k2 + k1 * k2 + a - b;
    let a0 = g * k1 * k2 + a * k2 - b * k1;
    a2 > 0.0 && a0 > 0.0 && a2 * a1 > a0
}

/// Smallest partially transposed symplectic eigenvalue from the spectrum of
/// `Ω Ṽ`, whose eigenvalues are `±i ν̃ₖ`.
pub fn oracle_nu_minus(v: &Matrix4<f64>) -> f64 {
    let mut vt = *v;
    for k in 0..4 {
        vt[(3, k)] = -vt[(3, k)];
        vt[(k, 3)] = -vt[(k, 3)];
    }
    let mut omega = Matrix4::zeros();
    omega[(0, 1)] = 1.0;
    omega[(1, 0)] = -1.0;
    omega[(2, 3)] = 1.0;
    omega[(3, 2)] = -1.0;
    (omega * vt)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.im.abs())
        .fold(f64::INFINITY, f64::min)
}

pub fn oracle_log_negativity(v: &Matrix4<f64>) -> f64 {
    (-(2.0 * oracle_nu_minus(v)).ln()).max(0.0)
}

/// Random stable parameter set from unit-interval draws: `κ₁ ∈ [10³, 10⁶]`,
/// `κ₂/κ₁ ∈ [½, 2]`, `γ/κ₁ ∈ [10⁻⁶, 10⁻¹]`, `G₁/κ₁ ∈ [0.1, 20]`, `G₂` up to 99%
/// of the stability limit, thermal populations up to 3.
pub fn random_stable(u: [f64; 8]) -> SystemParams {
    let kappa1 = 10f64.powf(3.0 + 3.0 * u[0]);
    let kappa2 = kappa1 * 2f64.powf(2.0 * u[1] - 1.0);
    let gamma = kappa1 * 10f64.powf(-6.0 + 5.0 * u[2]);
    let g1 = kappa1 * 10f64.powf(-1.0 + (200f64).log10() * u[3]);
    let limit = g1 / (kappa1 / kappa2).max(kappa2 / kappa1).sqrt();
    let g2 = 0.99 * limit * u[4];
    SystemParams::new(kappa1, kappa2, gamma, g1, g2, 3.0 * u[5], 3.0 * u[6], 3.0 * u[7]).unwrap()
}
