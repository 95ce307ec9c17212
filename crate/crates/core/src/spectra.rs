//! Second moments of the filtered output modes `D₁[ω, σ, τ]` and `D₂[−ω, σ, 0]`.
//!
//! With the conventions of [`crate::model`], the output vector at frequency `u`
//! is `O(u) = S(u) c(u)` with `c(u) = (d₁_in(u), d₂_in(−u)†, b_in(u))`. Mode 2
//! is filtered around `−ω`, so after `v → −v` both `D₁` and `D₂†` are integrals
//! of `O(u)` over the same band `[ω − σ/2, ω + σ/2]`:
//!
//! ```text
//! D₁  = σ^{-1/2} ∫ du e^{-iuτ} O₁(u)
//! D₂† = σ^{-1/2} ∫ du O₂(u)
//! ```
//!
//! Delta-correlated inputs collapse every double integral to a single band
//! integral. Normal-type moments (`n1`, `n2`, `c12`) pair `u` with itself;
//! anomalous-type moments (`m11`, `m22`, `x12`) pair `u` with its partner `−u`
//! through the phase-sensitive input correlator `⟨c_k(u) c_l(u')⟩ = A_kl δ(u+u')`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{drift_eigenvalues, scattering, spectral_abscissa, ScatteringMatrix, SystemParams};
use crate::quadrature::{band_average, QuadratureConfig};

/// Rectangle filter of unit norm: `f(u) = 1/√σ` on `[center − σ/2, center + σ/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub center: f64,
    pub bandwidth: f64,
    /// Emission time of the mode-1 wave packet; mode 2 is emitted at 0.
    pub delay: f64,
}

impl FilterSpec {
    pub fn new(center: f64, bandwidth: f64, delay: f64) -> Result<Self> {
        let f = FilterSpec {
            center,
            bandwidth,
            delay,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(Error::InvalidParams(format!(
                "filter bandwidth must be finite and > 0, got {}",
                self.bandwidth
            )));
        }
        if !self.center.is_finite() || !self.delay.is_finite() {
            return Err(Error::InvalidParams("filter center and delay must be finite".into()));
        }
        Ok(())
    }

    pub fn with_delay(self, delay: f64) -> Self {
        FilterSpec { delay, ..self }
    }

    /// Mode-1 band `(ω₋, ω₊)`.
    pub fn band(&self) -> (f64, f64) {
        (
            self.center - 0.5 * self.bandwidth,
            self.center + 0.5 * self.bandwidth,
        )
    }

    /// `|f(u)|²` of the rectangle filter.
    pub fn weight(&self, u: f64) -> f64 {
        let (lo, hi) = self.band();
        if u >= lo && u <= hi {
            1.0 / self.bandwidth
        } else {
            0.0
        }
    }
}

/// Moments of the filtered pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    /// `⟨D₁†D₁⟩`
    pub n1: f64,
    /// `⟨D₂†D₂⟩`
    pub n2: f64,
    /// `⟨D₁D₂⟩`
    pub c12: Complex64,
    /// `⟨D₁D₁⟩`
    pub m11: Complex64,
    /// `⟨D₂D₂⟩`
    pub m22: Complex64,
    /// `⟨D₁†D₂⟩`
    pub x12: Complex64,
}

impl MomentSet {
    pub fn vacuum() -> Self {
        let z = Complex64::new(0.0, 0.0);
        MomentSet {
            n1: 0.0,
            n2: 0.0,
            c12: z,
            m11: z,
            m22: z,
            x12: z,
        }
    }

    /// Two-mode squeezed vacuum with squeezing parameter `r`.
    pub fn two_mode_squeezed(r: f64) -> Self {
        let s = r.sinh();
        MomentSet {
            n1: s * s,
            n2: s * s,
            c12: Complex64::new(r.cosh() * s, 0.0),
            ..Self::vacuum()
        }
    }

    /// `(n1+1)(n2+1) − |c12|²`; negative values are unphysical.
    pub fn physicality_margin(&self) -> f64 {
        (self.n1 + 1.0) * (self.n2 + 1.0) - self.c12.norm_sqr()
    }

    /// Applies the local rotation `D₁ → e^{iφ} D₁`.
    pub fn rotate_mode1(&self, phi: f64) -> Self {
        let e = Complex64::from_polar(1.0, phi);
        MomentSet {
            c12: self.c12 * e,
            m11: self.m11 * e * e,
            x12: self.x12 * e.conj(),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentId {
    N1,
    N2,
    C12,
    M11,
    M22,
    X12,
}

/// Input correlators in the basis `c(u) = (d₁_in(u), d₂_in(−u)†, b_in(u))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputNoise {
    /// `⟨c_k(u)† c_k(u')⟩ / δ(u − u')`
    pub normal: [f64; 3],
    /// `⟨c_k(u) c_k(u')†⟩ / δ(u − u')`
    pub antinormal: [f64; 3],
    /// `⟨c_k(u) c_l(u')⟩ / δ(u + u')`
    pub anomalous: [[Complex64; 3]; 3],
}

impl InputNoise {
    /// Independent thermal baths. The `d₂` channel enters as a creation
    /// operator, which swaps its `N` and `N + 1` weights.
    pub fn thermal(p: &SystemParams) -> Self {
        InputNoise {
            normal: [p.n1, p.n2 + 1.0, p.n_m],
            antinormal: [p.n1 + 1.0, p.n2, p.n_m + 1.0],
            anomalous: [[Complex64::new(0.0, 0.0); 3]; 3],
        }
    }

    fn anomalous_form(&self, x: [Complex64; 3], y: [Complex64; 3]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..3 {
            for l in 0..3 {
                acc += x[k] * y[l] * self.anomalous[k][l];
            }
        }
        acc
    }
}

fn normal_densities(s: &ScatteringMatrix, noise: &InputNoise) -> (f64, f64, Complex64) {
    let r1 = s.row(0);
    let r2 = s.row(1);
    let mut n1 = 0.0;
    let mut n2 = 0.0;
    let mut c12 = Complex64::new(0.0, 0.0);
    for k in 0..3 {
        n1 += r1[k].norm_sqr() * noise.normal[k];
        n2 += r2[k].norm_sqr() * noise.antinormal[k];
        c12 += r1[k] * r2[k].conj() * noise.antinormal[k];
    }
    (n1, n2, c12)
}

/// Anomalous densities `(m11, m22, x12)` at `u`, pairing with `S(−u)`.
fn anomalous_densities(
    s: &ScatteringMatrix,
    partner: &ScatteringMatrix,
    noise: &InputNoise,
) -> (Complex64, Complex64, Complex64) {
    let m11 = noise.anomalous_form(s.row(0), partner.row(0));
    let m22 = noise.anomalous_form(partner.row(1), s.row(1)).conj();
    let x12 = noise.anomalous_form(partner.row(1), s.row(0)).conj();
    (m11, m22, x12)
}

/// Spectral density at mode-1 frequency `freq` whose band average is the
/// requested moment (before the delay phase is applied).
///
/// For the anomalous moments the density also involves the partner
/// frequency `−freq`; the caller restricts it to the overlap of the band with
/// its mirror image.
pub fn moment_integrand(p: &SystemParams, which: MomentId, freq: f64) -> Result<Complex64> {
    let noise = InputNoise::thermal(p);
    let s = scattering(p, freq)?;
    Ok(match which {
        MomentId::N1 => normal_densities(&s, &noise).0.into(),
        MomentId::N2 => normal_densities(&s, &noise).1.into(),
        MomentId::C12 => normal_densities(&s, &noise).2,
        MomentId::M11 | MomentId::M22 | MomentId::X12 => {
            let partner = scattering(p, -freq)?;
            let (m11, m22, x12) = anomalous_densities(&s, &partner, &noise);
            match which {
                MomentId::M11 => m11,
                MomentId::M22 => m22,
                _ => x12,
            }
        }
    })
}

/// Initial panel boundaries: the band center at zero detuning plus a
/// geometric grading around each drift pole narrower than the panel width.
fn breakpoints(p: &SystemParams, f: &FilterSpec, panel_width: f64) -> Vec<f64> {
    let (lo, hi) = f.band();
    let mut pts = vec![0.0];
    for lambda in drift_eigenvalues(p) {
        let center = -lambda.im;
        let width = lambda.re.abs();
        if !(width > 0.0) || width >= panel_width {
            continue;
        }
        if center + panel_width < lo || center - panel_width > hi {
            continue;
        }
        pts.push(center);
        let mut d = width;
        while d < panel_width {
            pts.push(center - d);
            pts.push(center + d);
            d *= 4.0;
        }
    }
    pts
}

fn initial_panel_width(p: &SystemParams, f: &FilterSpec) -> f64 {
    (f.bandwidth / 16.0).min(p.kappa1.min(p.kappa2) / 16.0)
}

fn ensure_stable(p: &SystemParams) -> Result<()> {
    p.validate()?;
    let abscissa = spectral_abscissa(p);
    if abscissa < 0.0 {
        Ok(())
    } else {
        Err(Error::Unstable { abscissa })
    }
}

/// Correlation strength, relative to `(n₁ + n₂ + 1)/2`, above which its
/// modulus is recomputed without cancellation.
const REFINE_THRESHOLD: f64 = 0.5;

pub fn moments(p: &SystemParams, f: &FilterSpec) -> Result<MomentSet> {
    moments_with(p, f, &QuadratureConfig::default())
}

pub fn moments_with(p: &SystemParams, f: &FilterSpec, cfg: &QuadratureConfig) -> Result<MomentSet> {
    ensure_stable(p)?;
    f.validate()?;
    let noise = InputNoise::thermal(p);
    let (lo, hi) = f.band();
    let width = initial_panel_width(p, f);
    let bps = breakpoints(p, f, width);
    let tau = f.delay;

    let [n1, n2, c_re, c_im] = band_average(
        |u| {
            let s = scattering(p, u)?;
            let (n1, n2, c12) = normal_densities(&s, &noise);
            let c = c12 * Complex64::from_polar(1.0, -u * tau);
            Ok([n1, n2, c.re, c.im])
        },
        lo,
        hi,
        &bps,
        width,
        cfg,
    )?;

    let c12 = refine_correlation(p, f, &noise, &bps, width, cfg, n1, n2, Complex64::new(c_re, c_im))?;

    let z = Complex64::new(0.0, 0.0);
    let (mut m11, mut m22, mut x12) = (z, z, z);
    // Anomalous densities live on the overlap of the band with its mirror.
    // They are always integrated, whatever the input noise model.
    let (olo, ohi) = (lo.max(-hi), hi.min(-lo));
    if olo < ohi {
        let overlap = (ohi - olo) / (hi - lo);
        let [a, b, c, d, e, g] = band_average(
            |u| {
                let s = scattering(p, u)?;
                let partner = scattering(p, -u)?;
                let (m11, m22, x12) = anomalous_densities(&s, &partner, &noise);
                let x12 = x12 * Complex64::from_polar(1.0, u * tau);
                Ok([m11.re, m11.im, m22.re, m22.im, x12.re, x12.im])
            },
            olo,
            ohi,
            &bps,
            width,
            cfg,
        )?;
        m11 = Complex64::new(a, b) * overlap;
        m22 = Complex64::new(c, d) * overlap;
        x12 = Complex64::new(e, g) * overlap;
    }

    Ok(MomentSet {
        n1,
        n2,
        c12,
        m11,
        m22,
        x12,
    })
}

/// Recomputes `|⟨D₁D₂⟩|` so that the entangling combination
/// `(n₁ + n₂ + 1)/2 − |c₁₂|` is accurate even when it is many orders of
/// magnitude below the occupations.
///
/// With `φ = arg c₁₂` and the first-row identity
/// `Σ_k (N̄_k − N_k)|S₁ₖ|² = 1`, that combination equals the band average of the
/// positive density `½ Σ_k N̄_k |S₁ₖ e^{−iuτ} − e^{iφ} S₂ₖ|²`, which has no
/// cancellation between large terms.
#[allow(clippy::too_many_arguments)]
fn refine_correlation(
    p: &SystemParams,
    f: &FilterSpec,
    noise: &InputNoise,
    bps: &[f64],
    width: f64,
    cfg: &QuadratureConfig,
    n1: f64,
    n2: f64,
    c12: Complex64,
) -> Result<Complex64> {
    let modulus = c12.norm();
    let half_sum = 0.5 * (n1 + n2 + 1.0);
    if !(modulus > REFINE_THRESHOLD * half_sum) {
        return Ok(c12);
    }
    let rotation = Complex64::from_polar(1.0, c12.arg());
    let (lo, hi) = f.band();
    let [gap] = band_average(
        |u| {
            let s = scattering(p, u)?;
            let phase = Complex64::from_polar(1.0, -u * f.delay);
            let (r1, r2) = (s.row(0), s.row(1));
            let acc: f64 = (0..3)
                .map(|k| noise.antinormal[k] * (r1[k] * phase - rotation * r2[k]).norm_sqr())
                .sum();
            Ok([0.5 * acc])
        },
        lo,
        hi,
        bps,
        width,
        cfg,
    )?;
    Ok(rotation * (half_sum - gap).max(0.0))
}

/// `|⟨D₁D₂⟩|`, the objective maximized by the optimal delay.
pub fn correlator_modulus(p: &SystemParams, f: &FilterSpec) -> Result<f64> {
    Ok(correlator(p, f, &QuadratureConfig::default())?.norm())
}

/// `⟨D₁D₂⟩` alone, skipping the other moments.
pub fn correlator(p: &SystemParams, f: &FilterSpec, cfg: &QuadratureConfig) -> Result<Complex64> {
    ensure_stable(p)?;
    f.validate()?;
    let noise = InputNoise::thermal(p);
    let (lo, hi) = f.band();
    let width = initial_panel_width(p, f);
    let bps = breakpoints(p, f, width);
    let tau = f.delay;
    let [re, im] = band_average(
        |u| {
            let s = scattering(p, u)?;
            let c = normal_densities(&s, &noise).2 * Complex64::from_polar(1.0, -u * tau);
            Ok([c.re, c.im])
        },
        lo,
        hi,
        &bps,
        width,
        cfg,
    )?;
    Ok(Complex64::new(re, im))
}

/// Band-averaged commutators `([D₁, D₁†], [D₂, D₂†])`; both equal 1 when the
/// normalization conventions are consistent.
pub fn filtered_commutators(p: &SystemParams, f: &FilterSpec) -> Result<(f64, f64)> {
    ensure_stable(p)?;
    f.validate()?;
    let (lo, hi) = f.band();
    let width = initial_panel_width(p, f);
    let bps = breakpoints(p, f, width);
    let [a, b] = band_average(
        |u| {
            let s = scattering(p, u)?;
            Ok([s.cavity1_identity(), s.cavity2_identity()])
        },
        lo,
        hi,
        &bps,
        width,
        &QuadratureConfig::default(),
    )?;
    Ok((a, b))
}
