//! Numerical optima of the full moments → `E_N` pipeline and parameter sweeps.
//!
//! Every one-dimensional search is a coarse scan followed by golden-section
//! refinement around the best scan point, so a multimodal objective cannot
//! trap the refinement in a secondary peak wider than one scan cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::entanglement_from_moments;
use crate::error::{Error, Result};
use crate::formulas::{self, AnalyticInputs};
use crate::model::{check_stability, eigen_stable, StabilityVerdict, SystemParams};
use crate::quadrature::QuadratureConfig;
use crate::spectra::{correlator, moments, FilterSpec, MomentSet};

/// Coarse scan size for the delay search.
pub const TAU_SCAN_POINTS: usize = 401;
/// Coarse grid size for the coupling search.
pub const G2_SCAN_POINTS: usize = 64;
/// Relative tolerance of golden-section refinement.
pub const REFINE_REL_TOL: f64 = 1e-6;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on `[lo, hi]`, stopping when the
/// bracket is narrower than `xtol`. Returns `(x, f(x))` of the best point seen.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut iterations = 0;
    while (b - a) > xtol && iterations < 200 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        iterations += 1;
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// `n` evenly spaced points on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Brute-force argmax over a uniform grid. Points where `f` fails are skipped.
pub fn grid_argmax<F>(f: F, lo: f64, hi: f64, n: usize) -> Option<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    linspace(lo, hi, n)
        .into_par_iter()
        .filter_map(|x| f(x).ok().map(|v| (x, v)))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None, |best: Option<(f64, f64)>, (x, v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((x, v)),
        })
}

/// Coarse scan over `grid` then golden-section refinement between the
/// neighbours of the best grid point.
pub fn scan_then_refine<F>(f: F, grid: &[f64], xtol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&x| f(x).unwrap_or(f64::NEG_INFINITY))
        .collect();
    let (best, &best_value) = values
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, &f64)>, (i, v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((i, v)),
        })
        .ok_or_else(|| Error::NoMaximum("empty scan grid".into()))?;
    if !best_value.is_finite() {
        return Err(Error::NoMaximum("objective undefined on the whole scan".into()));
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    if hi <= lo {
        return Ok((grid[best], best_value));
    }
    let (x, v) = golden_section_max(|x| Ok(f(x).unwrap_or(f64::NEG_INFINITY)), lo, hi, xtol)?;
    Ok(if v >= best_value { (x, v) } else { (grid[best], best_value) })
}

/// Closed-form inputs for `p` and `f`, using the mean cavity decay.
pub fn analytic_inputs(p: &SystemParams, f: &FilterSpec) -> Result<AnalyticInputs> {
    AnalyticInputs::new(0.5 * (p.kappa1 + p.kappa2), f.bandwidth, p.g1)
}

/// Delay maximizing `|⟨D₁D₂⟩|`; `f.delay` is ignored.
pub fn tau_opt_numeric(p: &SystemParams, f: &FilterSpec) -> Result<f64> {
    let tau_a = analytic_inputs(p, f)
        .map(|a| formulas::tau_opt(&a, p.g2))
        .unwrap_or(0.0);
    let scale = tau_a.abs() + 1.0 / f.bandwidth;
    let half = 10.0 * scale;
    let grid = linspace(-half, half, TAU_SCAN_POINTS);
    let cfg = QuadratureConfig::default();
    let objective = |tau: f64| correlator(p, &f.with_delay(tau), &cfg).map(|c| c.norm());

    let values: Vec<f64> = grid
        .par_iter()
        .map(|&t| objective(t))
        .collect::<Result<_>>()?;
    let max = values.iter().copied().fold(0.0, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || (max - min) <= 1e-12 * max {
        return Err(Error::NoMaximum(format!(
            "|<D1 D2>| is flat over the delay scan (max {max:.3e})"
        )));
    }
    let (tau, _) = scan_then_refine(objective, &grid, REFINE_REL_TOL * scale)?;
    Ok(tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayMode {
    /// `τ = 0`.
    Zero,
    /// Closed-form resonant optimum.
    Analytic,
    /// Numerical maximizer of `|⟨D₁D₂⟩|`.
    Numeric,
    /// Use the filter's own delay.
    Fixed,
}

impl std::fmt::Display for DelayMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DelayMode::Zero => "zero",
            DelayMode::Analytic => "analytic",
            DelayMode::Numeric => "numeric",
            DelayMode::Fixed => "fixed",
        })
    }
}

pub fn resolve_delay(p: &SystemParams, f: &FilterSpec, mode: DelayMode) -> Result<f64> {
    match mode {
        DelayMode::Zero => Ok(0.0),
        DelayMode::Fixed => Ok(f.delay),
        DelayMode::Analytic => Ok(formulas::tau_opt(&analytic_inputs(p, f)?, p.g2)),
        DelayMode::Numeric => tau_opt_numeric(p, f),
    }
}

/// One pipeline evaluation with the delay chosen by `mode`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointEval {
    pub e_n: f64,
    pub nu_minus: f64,
    pub tau: f64,
    pub moments: MomentSet,
}

pub fn evaluate(p: &SystemParams, f: &FilterSpec, mode: DelayMode) -> Result<PointEval> {
    let tau = resolve_delay(p, f, mode)?;
    let m = moments(p, &f.with_delay(tau))?;
    let r = entanglement_from_moments(&m)?;
    Ok(PointEval {
        e_n: r.e_n,
        nu_minus: r.nu_minus,
        tau,
        moments: m,
    })
}

/// Coupling `G₂ ∈ (0, limit]` maximizing `E_N`; `p.g2` is ignored. The upper
/// limit is the closed-form stability boundary.
pub fn g2_opt_numeric(p: &SystemParams, f: &FilterSpec, mode: DelayMode) -> Result<(f64, f64)> {
    let limit = p.g2_stability_limit();
    if !(limit > 0.0) {
        return Err(Error::NoMaximum("stable coupling range is empty".into()));
    }
    let grid: Vec<f64> = (1..=G2_SCAN_POINTS)
        .map(|k| limit * k as f64 / G2_SCAN_POINTS as f64)
        .collect();
    let objective = |g2: f64| -> Result<f64> {
        let q = p.with_g2(g2);
        if !eigen_stable(&q) {
            return Err(Error::Unstable { abscissa: 0.0 });
        }
        evaluate(&q, f, mode).map(|e| e.e_n)
    };
    let (g2, e_n) = scan_then_refine(objective, &grid, REFINE_REL_TOL * limit)?;
    if !(e_n > 0.0) {
        return Err(Error::NoMaximum("E_N vanishes over the whole coupling range".into()));
    }
    Ok((g2, e_n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    G2OverG1,
    G1OverKappa,
    OmegaOverKappa,
    /// Delay in units of `1/κ₁`.
    Tau,
}

impl SweepVariable {
    pub fn label(&self) -> &'static str {
        match self {
            SweepVariable::G2OverG1 => "g2_over_g1",
            SweepVariable::G1OverKappa => "g1_over_kappa",
            SweepVariable::OmegaOverKappa => "omega_over_kappa",
            SweepVariable::Tau => "tau_kappa",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// How `G₂` is set at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRule {
    /// Keep `params.g2` (or the swept value).
    #[default]
    Fixed,
    /// Zero-delay large-bandwidth optimum.
    LargeBandwidth,
    /// Zero-delay small-bandwidth optimum.
    SmallBandwidth,
    /// Optimum with optimal delay.
    WithDelay,
    /// `G₂ = G₁`.
    Equal,
}

impl CouplingRule {
    pub fn apply(&self, p: &SystemParams, f: &FilterSpec) -> Result<(f64, Vec<String>)> {
        let a = || analytic_inputs(p, f);
        let notes = |w: Vec<formulas::RegimeWarning>| w.iter().map(|w| w.to_string()).collect();
        Ok(match self {
            CouplingRule::Fixed => (p.g2, Vec::new()),
            CouplingRule::Equal => (p.g1, Vec::new()),
            CouplingRule::LargeBandwidth => (formulas::g2_opt_large_bw(&a()?)?, Vec::new()),
            CouplingRule::SmallBandwidth => {
                let r = formulas::g2_opt_small_bw(&a()?);
                (r.value, notes(r.warnings))
            }
            CouplingRule::WithDelay => {
                let r = formulas::g2_opt_with_delay(&a()?);
                (r.value, notes(r.warnings))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
    pub params: SystemParams,
    pub filter: FilterSpec,
    pub delay_mode: DelayMode,
    #[serde(default)]
    pub coupling: CouplingRule,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidParams(format!(
                "sweep range must satisfy lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.points < 2 {
            return Err(Error::InvalidParams(format!("sweep needs >= 2 points, got {}", self.points)));
        }
        if self.spacing == Spacing::Log && self.lo <= 0.0 {
            return Err(Error::InvalidParams("log spacing needs lo > 0".into()));
        }
        if self.variable == SweepVariable::G2OverG1 && self.coupling != CouplingRule::Fixed {
            return Err(Error::InvalidParams(
                "coupling rule must be fixed when sweeping g2_over_g1".into(),
            ));
        }
        self.params.validate()?;
        self.filter.validate()
    }

    pub fn values(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Linear => linspace(self.lo, self.hi, self.points),
            Spacing::Log => linspace(self.lo.ln(), self.hi.ln(), self.points)
                .into_iter()
                .enumerate()
                .map(|(i, x)| {
                    if i == 0 {
                        self.lo
                    } else if i + 1 == self.points {
                        self.hi
                    } else {
                        x.exp()
                    }
                })
                .collect(),
        }
    }

    /// Parameters, filter and delay mode at one value of the swept variable.
    pub fn point(&self, value: f64) -> (SystemParams, FilterSpec, DelayMode) {
        let mut p = self.params;
        let mut f = self.filter;
        let mut mode = self.delay_mode;
        match self.variable {
            SweepVariable::G2OverG1 => p.g2 = value * p.g1,
            SweepVariable::G1OverKappa => p.g1 = value * p.kappa1,
            SweepVariable::OmegaOverKappa => f.center = value * p.kappa1,
            SweepVariable::Tau => {
                f.delay = value / p.kappa1;
                mode = DelayMode::Fixed;
            }
        }
        (p, f, mode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub g2: f64,
    pub stability: StabilityVerdict,
    pub e_n: Option<f64>,
    pub tau: Option<f64>,
    pub c12_abs: Option<f64>,
    pub n1: Option<f64>,
    pub n2: Option<f64>,
    pub annotations: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
}

fn sweep_row(spec: &SweepSpec, value: f64) -> SweepRow {
    let (mut p, f, mode) = spec.point(value);
    let mut annotations = Vec::new();
    let row = |p: SystemParams, stability, annotations, result: Result<PointEval>| {
        let mut r = SweepRow {
            value,
            g2: p.g2,
            stability,
            e_n: None,
            tau: None,
            c12_abs: None,
            n1: None,
            n2: None,
            annotations,
            error: None,
        };
        match result {
            Ok(e) => {
                r.e_n = Some(e.e_n);
                r.tau = Some(e.tau);
                r.c12_abs = Some(e.moments.c12.norm());
                r.n1 = Some(e.moments.n1);
                r.n2 = Some(e.moments.n2);
            }
            Err(e) => r.error = Some(e.to_string()),
        }
        r
    };
    match spec.coupling.apply(&p, &f) {
        Ok((g2, notes)) => {
            p.g2 = g2;
            annotations.extend(notes);
        }
        Err(e) => return row(p, check_stability(&p), annotations, Err(e)),
    }
    let verdict = check_stability(&p);
    let stable = eigen_stable(&p);
    if stable != (verdict != StabilityVerdict::Unstable) {
        annotations.push(format!(
            "closed-form verdict {verdict} disagrees with drift eigenvalues (stable={stable})"
        ));
    }
    let result = if stable {
        evaluate(&p, &f, mode)
    } else {
        Err(Error::Unstable {
            abscissa: crate::model::spectral_abscissa(&p),
        })
    };
    row(p, verdict, annotations, result)
}

/// Evaluates every sweep point; per-point failures are recorded in the row.
/// Rows come back in point order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let rows = spec
        .values()
        .into_par_iter()
        .map(|v| sweep_row(spec, v))
        .collect();
    Ok(SweepResult {
        variable: spec.variable,
        rows,
    })
}

/// [`run_sweep`] on a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(spec: &SweepSpec, workers: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_sweep(spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    const K: f64 = 1e5;

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, v) = golden_section_max(|x| Ok(-(x - 0.3).powi(2) + 2.0), -1.0, 2.0, 1e-10).unwrap();
        // flatness of the peak limits resolution to ~√ε
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn scan_escapes_secondary_peak() {
        // narrow tall peak at 0.8 next to a broad low one at 0.2
        let f = |x: f64| Ok((-(x - 0.2f64).powi(2) * 10.0).exp() + 2.0 * (-(x - 0.8f64).powi(2) * 4e3).exp());
        let grid = linspace(0.0, 1.0, 101);
        let (x, _) = scan_then_refine(f, &grid, 1e-9).unwrap();
        assert!((x - 0.8).abs() < 1e-3);
        let (gx, _) = grid_argmax(f, 0.0, 1.0, 10_001).unwrap();
        assert!((gx - x).abs() <= 1e-4);
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(0.1, 0.7, 2);
        assert_eq!(v, vec![0.1, 0.7]);
        let v = linspace(0.0, 1.0, 201);
        assert_eq!(v.len(), 201);
        assert_eq!(v[200], 1.0);
    }

    #[test]
    fn no_correlation_means_no_delay_maximum() {
        let p = SystemParams::symmetric(1.0, K, 10.0 * K, 0.0).unwrap();
        let f = FilterSpec::new(0.0, K, 0.0).unwrap();
        assert!(matches!(tau_opt_numeric(&p, &f), Err(Error::NoMaximum(_))));
    }

    fn spec(points: usize) -> SweepSpec {
        SweepSpec {
            variable: SweepVariable::G2OverG1,
            lo: 0.9,
            hi: 1.1,
            points,
            spacing: Spacing::Linear,
            params: SystemParams::symmetric(1.0, K, 10.0 * K, 0.0).unwrap(),
            filter: FilterSpec::new(0.0, K, 0.0).unwrap(),
            delay_mode: DelayMode::Zero,
            coupling: CouplingRule::Fixed,
        }
    }

    #[test]
    fn two_point_sweep_flags_unstable_end() {
        let r = run_sweep(&spec(2)).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].value, 0.9);
        assert_eq!(r.rows[1].value, 1.1);
        assert!(r.rows[0].e_n.unwrap() > 0.0);
        assert_eq!(r.rows[1].stability, StabilityVerdict::Unstable);
        assert!(r.rows[1].e_n.is_none());
        assert!(r.rows[1].error.is_some());
    }

    #[test]
    fn sweep_validation() {
        let mut s = spec(1);
        assert!(run_sweep(&s).is_err());
        s.points = 3;
        s.lo = 2.0;
        assert!(run_sweep(&s).is_err());
        let mut s = spec(3);
        s.coupling = CouplingRule::LargeBandwidth;
        assert!(run_sweep(&s).is_err());
    }

    #[test]
    fn log_spacing_hits_endpoints() {
        let mut s = spec(5);
        s.spacing = Spacing::Log;
        s.lo = 1.0;
        s.hi = 16.0;
        let v = s.values();
        assert_eq!(v[0], 1.0);
        assert_eq!(v[4], 16.0);
        assert!((v[2] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_is_deterministic() {
        let mut s = spec(6);
        s.hi = 1.0;
        s.delay_mode = DelayMode::Analytic;
        let a = run_sweep_with_workers(&s, 3).unwrap();
        let b = run_sweep_with_workers(&s, 1).unwrap();
        assert_eq!(a, b);
    }
}
