//! Closed-form optima for equal cavity decay `κ₁ = κ₂ = κ`, valid for
//! `γ ≪ κ, σ, G`.
//!
//! Several expressions share the bracket `K = 15κ²σ + 4σ³ − 3αβ` with
//! `α = 5κ² + 3σ²` and `β = κ atan(σ/κ)`. Its Taylor series in `s = σ/κ` starts
//! at `(12/35) s⁷`, so direct evaluation loses all significant digits for
//! small `s`; [`bracket_k`] switches to the series there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticInputs {
    pub kappa: f64,
    pub sigma: f64,
    pub g1: f64,
}

impl AnalyticInputs {
    pub fn new(kappa: f64, sigma: f64, g1: f64) -> Result<Self> {
        for (name, v) in [("kappa", kappa), ("sigma", sigma), ("g1", g1)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(AnalyticInputs { kappa, sigma, g1 })
    }

    pub fn alpha(&self) -> f64 {
        5.0 * self.kappa * self.kappa + 3.0 * self.sigma * self.sigma
    }

    pub fn beta(&self) -> f64 {
        self.kappa * (self.sigma / self.kappa).atan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegimeWarning {
    /// Small-bandwidth formula used at `σ ≥ σ_b`.
    NotSmallBandwidth { sigma: f64, sigma_b: f64 },
    /// Strong-drive formula used at `G₁ < 5 max(κ, σ)`.
    WeakDrive { g1: f64, required: f64 },
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegimeWarning::NotSmallBandwidth { sigma, sigma_b } => {
                write!(f, "small-bandwidth formula at sigma={sigma:.4e} >= sigma_b={sigma_b:.4e}")
            }
            RegimeWarning::WeakDrive { g1, required } => {
                write!(f, "strong-drive formula at g1={g1:.4e} < {required:.4e}")
            }
        }
    }
}

/// A value together with non-fatal regime annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotated<T> {
    pub value: T,
    pub warnings: Vec<RegimeWarning>,
}

impl<T> Annotated<T> {
    fn clean(value: T) -> Self {
        Annotated {
            value,
            warnings: Vec::new(),
        }
    }
}

/// `K = 15κ²σ + 4σ³ − 3αβ`.
pub fn bracket_k(kappa: f64, sigma: f64) -> f64 {
    let s = sigma / kappa;
    let k3 = kappa.powi(3);
    if s < 0.5 {
        // K/κ³ = Σ_{m≥3} (−1)^{m+1} 12(m−2)/(4m²−1) s^{2m+1}
        let s2 = s * s;
        let mut pow = s.powi(7);
        let mut acc = 0.0;
        for m in 3..200 {
            let mf = m as f64;
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            let term = sign * 12.0 * (mf - 2.0) / (4.0 * mf * mf - 1.0) * pow;
            acc += term;
            if term.abs() <= 1e-17 * acc.abs() {
                break;
            }
            pow *= s2;
        }
        acc * k3
    } else {
        let alpha = 5.0 * kappa * kappa + 3.0 * sigma * sigma;
        let beta = kappa * s.atan();
        15.0 * kappa * kappa * sigma + 4.0 * sigma.powi(3) - 3.0 * alpha * beta
    }
}

/// Optimal delay at resonance,
/// `[20(G₂² − G₁²) + 5κ² + 3σ²] / [10(G₁² + G₂²)κ]`. May be negative.
pub fn tau_opt(a: &AnalyticInputs, g2: f64) -> f64 {
    let (k, s, g1) = (a.kappa, a.sigma, a.g1);
    (20.0 * (g2 * g2 - g1 * g1) + 5.0 * k * k + 3.0 * s * s) / (10.0 * (g1 * g1 + g2 * g2) * k)
}

/// Large-bandwidth optimal coupling at zero delay, the root of [`tau_opt`]:
/// `½ √(4G₁² − κ² − 3σ²/5)`.
pub fn g2_opt_large_bw(a: &AnalyticInputs) -> Result<f64> {
    let radicand = 4.0 * a.g1 * a.g1 - a.kappa * a.kappa - 0.6 * a.sigma * a.sigma;
    if !(radicand > 0.0) {
        return Err(Error::Domain(format!(
            "4G1² − κ² − 3σ²/5 = {radicand:.4e} is not positive"
        )));
    }
    Ok(0.5 * radicand.sqrt())
}

/// Small-bandwidth optimal coupling at zero delay,
/// `G₁ + G₁σ/(2√3κ) − √(κσ)/(2·3^{1/4})`.
pub fn g2_opt_small_bw(a: &AnalyticInputs) -> Annotated<f64> {
    let value = a.g1 + a.g1 * a.sigma / (2.0 * 3f64.sqrt() * a.kappa)
        - (a.kappa * a.sigma).sqrt() / (2.0 * 3f64.powf(0.25));
    let sigma_b = sigma_boundary(a.g1, a.kappa);
    let mut out = Annotated::clean(value);
    if a.sigma >= sigma_b {
        out.warnings.push(RegimeWarning::NotSmallBandwidth {
            sigma: a.sigma,
            sigma_b,
        });
    }
    out
}

/// Crossover bandwidth between the two zero-delay regimes, `√3κ³/(4G₁²)`.
pub fn sigma_boundary(g1: f64, kappa: f64) -> f64 {
    3f64.sqrt() * kappa.powi(3) / (4.0 * g1 * g1)
}

/// Drive scale `√(κ⁵/(√3σ³))` well above which the zero-delay optimum saturates.
pub fn saturation_threshold(sigma: f64, kappa: f64) -> f64 {
    (kappa.powi(5) / (3f64.sqrt() * sigma.powi(3))).sqrt()
}

/// Saturated zero-delay entanglement,
/// `−ln √[(κ² + σ²) K² / (9κ²σ²α²)]`.
pub fn e_n_saturation(sigma: f64, kappa: f64) -> f64 {
    let alpha = 5.0 * kappa * kappa + 3.0 * sigma * sigma;
    let k = bracket_k(kappa, sigma);
    let ratio = (kappa * kappa + sigma * sigma) * k * k / (9.0 * kappa * kappa * sigma * sigma * alpha * alpha);
    -0.5 * ratio.ln()
}

/// Same as [`e_n_saturation`] but evaluated literally, without the series
/// for the cancelling bracket.
pub fn e_n_saturation_direct(sigma: f64, kappa: f64) -> f64 {
    let alpha = 5.0 * kappa * kappa + 3.0 * sigma * sigma;
    let beta = kappa * (sigma / kappa).atan();
    let k = 15.0 * kappa * kappa * sigma + 4.0 * sigma.powi(3) - 3.0 * alpha * beta;
    let ratio = (kappa * kappa + sigma * sigma) * k * k / (9.0 * kappa * kappa * sigma * sigma * alpha * alpha);
    -0.5 * ratio.ln()
}

/// Small-bandwidth asymptote of the saturation value, `ln[175κ⁶/(4σ⁶)]`.
///
/// This is the leading term of [`e_n_saturation`] as `σ/κ → 0`; it is kept
/// separate so the two can be compared.
pub fn e_n_saturation_small_sigma(sigma: f64, kappa: f64) -> f64 {
    (175.0 * kappa.powi(6) / (4.0 * sigma.powi(6))).ln()
}

/// Relative difference between the asymptote and the full saturation value.
pub fn saturation_asymptote_gap(sigma: f64, kappa: f64) -> f64 {
    let full = e_n_saturation(sigma, kappa);
    (e_n_saturation_small_sigma(sigma, kappa) - full) / full
}

fn strong_drive_check(a: &AnalyticInputs) -> Vec<RegimeWarning> {
    let required = 5.0 * a.kappa.max(a.sigma);
    if a.g1 < required {
        vec![RegimeWarning::WeakDrive { g1: a.g1, required }]
    } else {
        Vec::new()
    }
}

/// Optimal coupling with optimal delay,
/// `G₁ − [αK / (400(6σ − 3β))]^{1/4}`.
pub fn g2_opt_with_delay(a: &AnalyticInputs) -> Annotated<f64> {
    let k = bracket_k(a.kappa, a.sigma);
    let correction = (a.alpha() * k / (400.0 * (6.0 * a.sigma - 3.0 * a.beta()))).powf(0.25);
    Annotated {
        value: a.g1 - correction,
        warnings: strong_drive_check(a),
    }
}

/// Optimal entanglement with optimal delay and coupling,
/// `−ln √[α(2σ − β)K / (4800 G₁⁴ σ²)]`.
pub fn e_n_opt_with_delay(a: &AnalyticInputs) -> Annotated<f64> {
    let k = bracket_k(a.kappa, a.sigma);
    let ratio = a.alpha() * (2.0 * a.sigma - a.beta()) * k / (4800.0 * a.g1.powi(4) * a.sigma * a.sigma);
    Annotated {
        value: -0.5 * ratio.ln(),
        warnings: strong_drive_check(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const K: f64 = 1e5;

    fn inputs(sigma: f64, g1: f64) -> AnalyticInputs {
        AnalyticInputs::new(K, sigma, g1).unwrap()
    }

    #[test]
    fn bracket_series_matches_direct_where_both_are_accurate() {
        for s in [0.3f64, 0.45, 0.49] {
            let direct = {
                let alpha = 5.0 + 3.0 * s * s;
                15.0 * s + 4.0 * s * s * s - 3.0 * alpha * s.atan()
            };
            assert_relative_eq!(bracket_k(1.0, s), direct, max_relative = 1e-9);
        }
        // continuity across the switch
        assert_relative_eq!(bracket_k(1.0, 0.5 - 1e-12), bracket_k(1.0, 0.5), max_relative = 1e-9);
        assert_relative_eq!(bracket_k(1.0, 1e-3), 12.0 / 35.0 * 1e-21, max_relative = 1e-5);
    }

    #[test]
    fn tau_opt_examples() {
        let g = 10.0 * K;
        let tiny = inputs(1e-6 * K, g);
        assert_relative_eq!(tau_opt(&tiny, g), K / (4.0 * g * g), max_relative = 1e-9);
        assert_relative_eq!(tau_opt(&inputs(K, g), g), 4e-3 / K, max_relative = 1e-12);
        let a = inputs(K, g);
        let root = g2_opt_large_bw(&a).unwrap();
        assert!(tau_opt(&a, root).abs() < 1e-12 / K);
    }

    #[test]
    fn large_bandwidth_coupling() {
        let v = g2_opt_large_bw(&inputs(K, 10.0 * K)).unwrap();
        assert_relative_eq!(v, 0.5 * 398.4f64.sqrt() * K, max_relative = 1e-14);
        assert_relative_eq!(v / K, 9.979980, max_relative = 1e-6);
        let g1 = 100.0 * K;
        let v = g2_opt_large_bw(&inputs(1e-9 * K, g1)).unwrap();
        assert!(v < g1);
        assert_relative_eq!(v, g1 * (1.0 - K * K / (4.0 * g1 * g1)).sqrt(), max_relative = 1e-12);
        assert!(matches!(
            g2_opt_large_bw(&inputs(1e-300, 0.5 * K)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn small_bandwidth_coupling() {
        let g1 = 10.0 * K;
        let v = g2_opt_small_bw(&inputs(1e-4 * K, g1));
        let expected = g1 * (1.0 + 1e-4 / (2.0 * 3f64.sqrt())) - 1e-2 * K / (2.0 * 3f64.powf(0.25));
        assert_relative_eq!(v.value, expected, max_relative = 1e-14);
        assert_relative_eq!(v.value / K, 9.9964895, max_relative = 1e-7);
        assert!(v.warnings.is_empty());
        assert_relative_eq!(g2_opt_small_bw(&inputs(1e-12 * K, g1)).value, g1, max_relative = 1e-6);
        assert_eq!(g2_opt_small_bw(&inputs(K, g1)).warnings.len(), 1);
    }

    #[test]
    fn boundary_bandwidth() {
        let sb = sigma_boundary(10.0 * K, K);
        assert_relative_eq!(sb, 3f64.sqrt() * K / 400.0, max_relative = 1e-14);
        assert_relative_eq!(sb / K, 4.330127e-3, max_relative = 1e-6);
        let a = inputs(sb, 10.0 * K);
        let large = g2_opt_large_bw(&a).unwrap();
        let small = g2_opt_small_bw(&a).value;
        assert!((large - small).abs() / large < 0.02);
        assert!(sigma_boundary(1e12 * K, K) < 1e-20 * K);
    }

    #[test]
    fn saturation_threshold_values() {
        assert_relative_eq!(saturation_threshold(K, K) / K, 3f64.powf(-0.25), max_relative = 1e-14);
        assert_relative_eq!(saturation_threshold(K, K) / K, 0.7598357, max_relative = 1e-6);
        assert_relative_eq!(saturation_threshold(0.5 * K, K) / K, (8.0 / 3f64.sqrt()).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(saturation_threshold(0.5 * K, K) / K, 2.1491399, max_relative = 1e-6);
        assert!(saturation_threshold(1e-100, K).is_infinite() || saturation_threshold(1e-100, K) > 1e100);
    }

    #[test]
    fn saturation_value_at_unit_bandwidth() {
        // α = 8κ², β = πκ/4
        let k = 19.0 - 6.0 * std::f64::consts::PI;
        let expected = -0.5 * (2.0 * k * k / 576.0).ln();
        assert_relative_eq!(e_n_saturation(K, K), expected, max_relative = 1e-12);
        assert_relative_eq!(e_n_saturation(K, K), 4.7255, epsilon = 1e-3);
    }

    #[test]
    fn small_sigma_asymptote_is_leading_term() {
        let gaps: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|s| saturation_asymptote_gap(s * K, K).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
        assert!(gaps[2] < 1e-5);
    }

    #[test]
    fn delay_optimized_values() {
        let a = inputs(K, 10.0 * K);
        let g2 = g2_opt_with_delay(&a);
        assert!(g2.warnings.is_empty());
        assert!(g2.value < a.g1);
        assert_relative_eq!(g2.value / K, 9.83049, epsilon = 1e-4);
        let e = e_n_opt_with_delay(&a).value;
        assert_relative_eq!(e, 8.6535, epsilon = 1e-3);
        let e2 = e_n_opt_with_delay(&inputs(K, 20.0 * K)).value;
        assert_relative_eq!(e2 - e, 4f64.ln(), max_relative = 1e-12);
        assert!(e2 > e_n_saturation(K, K));
        assert_eq!(g2_opt_with_delay(&inputs(K, 2.0 * K)).warnings.len(), 1);
    }

    #[test]
    fn scale_invariance() {
        let lambda = 7.3;
        for (s, g1, g2) in [(1.0, 10.0, 9.9), (0.1, 20.0, 19.5), (1e-3, 5.0, 4.9)] {
            let a = AnalyticInputs::new(1.0, s, g1).unwrap();
            let b = AnalyticInputs::new(lambda, lambda * s, lambda * g1).unwrap();
            assert_relative_eq!(tau_opt(&b, lambda * g2), tau_opt(&a, g2) / lambda, max_relative = 1e-12);
            assert_relative_eq!(e_n_saturation(lambda * s, lambda), e_n_saturation(s, 1.0), max_relative = 1e-12);
            assert_relative_eq!(
                e_n_opt_with_delay(&b).value,
                e_n_opt_with_delay(&a).value,
                max_relative = 1e-12
            );
        }
    }
}
