//! Adaptive composite Gauss–Legendre quadrature for smooth vector-valued
//! integrands on a finite interval.
//!
//! Each panel is integrated with a 10-point and a 20-point rule; the difference
//! is the local error estimate and the 20-point value is kept. The panel with
//! the largest estimate is bisected until the summed estimate meets the
//! tolerance, so narrow peaks get all the refinement they need.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const DEFAULT_ABS_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_PANELS: usize = 1 << 16;

/// Relative accuracy floor, in units of the result magnitude.
pub const REL_FLOOR: f64 = 1e-14;

/// Panels whose rule difference is below this fraction of their magnitude are
/// at the noise level of the integrand evaluation and cannot improve.
const NOISE_FLOOR: f64 = 1024.0 * f64::EPSILON;

/// Largest relative panel error that may be attributed to roundoff.
const STALL_FLOOR: f64 = 1e-8;

const LOW_ORDER: usize = 10;
const HIGH_ORDER: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Absolute tolerance on the band *average* of each component.
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: DEFAULT_ABS_TOL,
            max_panels: DEFAULT_MAX_PANELS,
        }
    }
}

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rules() -> &'static (GaussLegendre, GaussLegendre) {
    static RULES: OnceLock<(GaussLegendre, GaussLegendre)> = OnceLock::new();
    RULES.get_or_init(|| (GaussLegendre::new(LOW_ORDER), GaussLegendre::new(HIGH_ORDER)))
}

struct PanelEstimate<const N: usize> {
    value: [f64; N],
    error: f64,
    magnitude: f64,
}

fn panel<const N: usize, F>(f: &mut F, a: f64, b: f64, scale: f64) -> Result<PanelEstimate<N>>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    let (low, high) = rules();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a) * scale;
    let mut lo = [0.0; N];
    let mut hi = [0.0; N];
    let mut magnitude = 0.0f64;
    for (x, w) in low.nodes.iter().zip(&low.weights) {
        let v = f(mid + 0.5 * (b - a) * x)?;
        for k in 0..N {
            lo[k] += w * half * v[k];
        }
    }
    for (x, w) in high.nodes.iter().zip(&high.weights) {
        let v = f(mid + 0.5 * (b - a) * x)?;
        for k in 0..N {
            hi[k] += w * half * v[k];
            magnitude = magnitude.max((w * half * v[k]).abs());
        }
    }
    let error = (0..N).map(|k| (hi[k] - lo[k]).abs()).fold(0.0, f64::max);
    Ok(PanelEstimate {
        value: hi,
        error,
        magnitude: magnitude * HIGH_ORDER as f64,
    })
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    est: PanelEstimate<N>,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<const N: usize> Eq for Panel<N> {}

impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const N: usize> Ord for Panel<N> {
    // largest error first; ties broken by position for determinism
    fn cmp(&self, other: &Self) -> Ordering {
        self.est
            .error
            .total_cmp(&other.est.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Average of `f` over `[lo, hi]`, i.e. `(1/(hi−lo)) ∫ f`.
///
/// `breakpoints` inside the interval become initial panel boundaries; the
/// initial panels are further split so none is wider than `max_width`.
pub fn band_average<const N: usize, F>(
    mut f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    max_width: f64,
    cfg: &QuadratureConfig,
) -> Result<[f64; N]>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParams(format!("bad integration interval [{lo}, {hi}]")));
    }
    let width = hi - lo;
    let scale = 1.0 / width;

    let mut edges: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > lo && *x < hi)
        .collect();
    edges.push(lo);
    edges.push(hi);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut stack: Vec<(f64, f64)> = Vec::new();
    for w in edges.windows(2).rev() {
        let (a, b) = (w[0], w[1]);
        if b - a <= 0.0 {
            continue;
        }
        let pieces = if max_width > 0.0 && max_width.is_finite() {
            ((b - a) / max_width).ceil().max(1.0) as usize
        } else {
            1
        };
        for j in (0..pieces).rev() {
            let x0 = a + (b - a) * j as f64 / pieces as f64;
            let x1 = if j + 1 == pieces {
                b
            } else {
                a + (b - a) * (j + 1) as f64 / pieces as f64
            };
            stack.push((x0, x1));
        }
    }

    let mut heap = BinaryHeap::with_capacity(stack.len());
    let mut abs_sums = [0.0f64; N];
    let mut refinable_error = 0.0;
    let mut frozen = [0.0; N];
    let push = |a: f64,
                    b: f64,
                    est: PanelEstimate<N>,
                    stalled: bool,
                    heap: &mut BinaryHeap<Panel<N>>,
                    abs_sums: &mut [f64; N],
                    refinable_error: &mut f64,
                    frozen: &mut [f64; N]| {
        for k in 0..N {
            abs_sums[k] += est.value[k].abs();
        }
        let mid = 0.5 * (a + b);
        // at the evaluation-noise level or unsplittable: splitting cannot help
        if stalled || est.error <= NOISE_FLOOR * est.magnitude || !(mid > a && mid < b) {
            for k in 0..N {
                frozen[k] += est.value[k];
            }
        } else {
            *refinable_error += est.error;
            heap.push(Panel { a, b, est });
        }
    };
    let mut panels = stack.len();
    while let Some((a, b)) = stack.pop() {
        let est = panel(&mut f, a, b, scale)?;
        push(a, b, est, false, &mut heap, &mut abs_sums, &mut refinable_error, &mut frozen);
    }

    loop {
        let magnitude = abs_sums.iter().copied().fold(0.0, f64::max);
        let target = cfg.abs_tol.max(REL_FLOOR * magnitude);
        if refinable_error <= target {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        if panels + 1 > cfg.max_panels {
            return Err(Error::QuadratureFailure {
                tol: cfg.abs_tol,
                panels,
                estimate: refinable_error,
            });
        }
        refinable_error -= worst.est.error;
        for k in 0..N {
            abs_sums[k] -= worst.est.value[k].abs();
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = panel(&mut f, worst.a, mid, scale)?;
        let right = panel(&mut f, mid, worst.b, scale)?;
        panels += 1;
        // Bisection that fails to halve an already tiny error is roundoff in
        // the integrand, not truncation.
        let stalled = left.error + right.error > 0.5 * worst.est.error
            && worst.est.error <= STALL_FLOOR * worst.est.magnitude;
        push(worst.a, mid, left, stalled, &mut heap, &mut abs_sums, &mut refinable_error, &mut frozen);
        push(mid, worst.b, right, stalled, &mut heap, &mut abs_sums, &mut refinable_error, &mut frozen);
        // keep the running error sum from drifting negative through cancellation
        refinable_error = refinable_error.max(0.0);
    }

    let mut rest: Vec<Panel<N>> = heap.into_vec();
    rest.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut total = frozen;
    for p in &rest {
        for k in 0..N {
            total[k] += p.est.value[k];
        }
    }
    Ok(total)
}
