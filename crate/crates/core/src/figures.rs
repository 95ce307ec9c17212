//! Data for the six reproduced figures: numerical sweeps overlaid with the
//! matching closed-form curves. Shared parameters are `γ = 1`, `κ = 10⁵`,
//! `G₁ = 10κ`.

use std::fmt::Write as _;

use crate::config::FigureId;
use crate::error::Result;
use crate::formulas::{self, AnalyticInputs};
use crate::model::SystemParams;
use crate::optimize::{run_sweep, CouplingRule, DelayMode, Spacing, SweepResult, SweepSpec, SweepVariable};
use crate::output::{comment_block, fmt_float, render_svg, row_fields, LineStyle, Series, ROW_COLUMNS};
use crate::spectra::FilterSpec;

pub const KAPPA: f64 = 1e5;
pub const GAMMA: f64 = 1.0;
pub const G1: f64 = 10.0 * KAPPA;
pub const DEFAULT_POINTS: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    EN,
    TauKappa,
}

#[derive(Debug, Clone)]
pub enum CurveData {
    Numeric { spec: SweepSpec, result: SweepResult },
    Analytic(Vec<(f64, Option<f64>)>),
}

#[derive(Debug, Clone)]
pub struct Curve {
    pub label: String,
    pub style: LineStyle,
    pub quantity: Quantity,
    pub data: CurveData,
}

impl Curve {
    pub fn points(&self) -> Vec<(f64, Option<f64>)> {
        match &self.data {
            CurveData::Analytic(p) => p.clone(),
            CurveData::Numeric { result, .. } => result
                .rows
                .iter()
                .map(|r| {
                    let y = match self.quantity {
                        Quantity::EN => r.e_n,
                        Quantity::TauKappa => r.tau.map(|t| t * KAPPA),
                    };
                    (r.value, y)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Figure {
    pub id: FigureId,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub curves: Vec<Curve>,
    /// Derived diagnostics reported in the CSV header.
    pub notes: Vec<String>,
}

fn base(g2_over_g1: f64, sigma_over_kappa: f64) -> (SystemParams, FilterSpec) {
    let p = SystemParams::symmetric(GAMMA, KAPPA, G1, g2_over_g1 * G1).expect("figure parameters are valid");
    let f = FilterSpec::new(0.0, sigma_over_kappa * KAPPA, 0.0).expect("figure filter is valid");
    (p, f)
}

#[allow(clippy::too_many_arguments)]
fn numeric(
    label: String,
    style: LineStyle,
    quantity: Quantity,
    variable: SweepVariable,
    range: (f64, f64),
    points: usize,
    sigma: f64,
    delay_mode: DelayMode,
    coupling: CouplingRule,
    g2_over_g1: f64,
) -> Result<Curve> {
    let (params, filter) = base(g2_over_g1, sigma);
    let spec = SweepSpec {
        variable,
        lo: range.0,
        hi: range.1,
        points,
        spacing: Spacing::Linear,
        params,
        filter,
        delay_mode,
        coupling,
    };
    let result = run_sweep(&spec)?;
    Ok(Curve {
        label,
        style,
        quantity,
        data: CurveData::Numeric { spec, result },
    })
}

fn analytic(label: String, xs: &[f64], y: impl Fn(f64) -> Option<f64>) -> Curve {
    Curve {
        label,
        style: LineStyle::Dashed,
        quantity: Quantity::EN,
        data: CurveData::Analytic(xs.iter().map(|&x| (x, y(x))).collect()),
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    crate::optimize::linspace(lo, hi, n)
}

fn sigma_label(s: f64) -> String {
    format!("sigma={s}kappa")
}

pub fn build(id: FigureId, points: Option<usize>) -> Result<Figure> {
    let n = points.unwrap_or(DEFAULT_POINTS);
    use CouplingRule::Fixed;
    use DelayMode::{Analytic, Numeric, Zero};
    use LineStyle::{Dashed, Solid};
    use Quantity::{TauKappa, EN};
    use SweepVariable::{G1OverKappa, G2OverG1, OmegaOverKappa};
    let mut notes = Vec::new();
    let (title, x_label, y_label, curves) = match id {
        FigureId::Fig2a => {
            let mut curves = Vec::new();
            for s in [1.0, 0.1] {
                let l = sigma_label(s);
                curves.push(numeric(format!("{l} tau=0"), Solid, EN, G2OverG1, (0.98, 1.0), n, s, Zero, Fixed, 1.0)?);
                curves.push(numeric(format!("{l} tau=opt"), Dashed, EN, G2OverG1, (0.98, 1.0), n, s, Numeric, Fixed, 1.0)?);
                let a = AnalyticInputs::new(KAPPA, s * KAPPA, G1)?;
                if let Ok(g) = formulas::g2_opt_large_bw(&a) {
                    notes.push(format!("{l}: zero-delay optimum (closed form) G2/G1 = {}", g / G1));
                }
            }
            ("Fig. 2(a)", "G2/G1", "E_N", curves)
        }
        FigureId::Fig2b => {
            let sigma_b = formulas::sigma_boundary(G1, KAPPA) / KAPPA;
            let mut curves = Vec::new();
            for s in [1e-4, 2e-3, sigma_b] {
                curves.push(numeric(format!("{} tau=0", sigma_label(s)), Solid, EN, G2OverG1, (0.99, 1.0), n, s, Zero, Fixed, 1.0)?);
            }
            curves.push(numeric(format!("{} tau=opt", sigma_label(1e-4)), Dashed, EN, G2OverG1, (0.99, 1.0), n, 1e-4, Numeric, Fixed, 1.0)?);
            let a = AnalyticInputs::new(KAPPA, 1e-4 * KAPPA, G1)?;
            notes.push(format!("sigma_b/kappa = {sigma_b}"));
            notes.push(format!(
                "sigma=1e-4kappa: small-bandwidth optimum (closed form) G2/G1 = {}",
                formulas::g2_opt_small_bw(&a).value / G1
            ));
            ("Fig. 2(b)", "G2/G1", "E_N", curves)
        }
        FigureId::Fig2c => {
            let mut curves = Vec::new();
            let xs = grid(1.0, 20.0, n);
            for s in [0.1, 0.5, 1.0] {
                let l = sigma_label(s);
                let sat = formulas::e_n_saturation(s * KAPPA, KAPPA);
                curves.push(numeric(l.clone(), Solid, EN, G1OverKappa, (1.0, 20.0), n, s, Zero, CouplingRule::LargeBandwidth, 1.0)?);
                curves.push(analytic(format!("{l} saturation"), &xs, |_| Some(sat)));
                notes.push(format!("{l}: saturation value {sat}"));
            }
            ("Fig. 2(c)", "G1/kappa", "E_N(omega=0)", curves)
        }
        FigureId::Fig3a => {
            let a = AnalyticInputs::new(KAPPA, KAPPA, G1)?;
            let xs = grid(0.9, 1.0, n);
            let closed = Curve {
                label: "closed form".into(),
                style: Solid,
                quantity: TauKappa,
                data: CurveData::Analytic(xs.iter().map(|&r| (r, Some(formulas::tau_opt(&a, r * G1) * KAPPA))).collect()),
            };
            let num = numeric("numeric".into(), Dashed, TauKappa, G2OverG1, (0.9, 1.0), n, 1.0, Numeric, Fixed, 1.0)?;
            if let Some(x) = zero_crossing(&num.points()) {
                notes.push(format!(
                    "numeric tau_opt changes sign at G2/G1 = {x} (closed-form zero-delay coupling {})",
                    formulas::g2_opt_large_bw(&a)? / G1
                ));
            }
            ("Fig. 3(a)", "G2/G1", "tau_opt * kappa", vec![closed, num])
        }
        FigureId::Fig3b => {
            let a = AnalyticInputs::new(KAPPA, KAPPA, G1)?;
            let closed = numeric("closed-form delay".into(), Solid, EN, G2OverG1, (0.95, 1.0), n, 1.0, Analytic, Fixed, 1.0)?;
            let num = numeric("numeric delay".into(), Dashed, EN, G2OverG1, (0.95, 1.0), n, 1.0, Numeric, Fixed, 1.0)?;
            let gap = closed
                .points()
                .iter()
                .zip(num.points())
                .filter_map(|(&(x, a), (_, b))| Some((x, (a? - b?).abs())))
                .fold((f64::NAN, 0.0), |acc, (x, d)| if d > acc.1 { (x, d) } else { acc });
            notes.push(format!("max |E_N(closed-form delay) - E_N(numeric delay)| = {} at G2/G1 = {}", gap.1, gap.0));
            let g9 = formulas::g2_opt_with_delay(&a).value / G1;
            let e10 = formulas::e_n_opt_with_delay(&a).value;
            notes.push(format!("optimum with delay (closed form): G2/G1 = {g9}, E_N = {e10}"));
            let xs = grid(0.95, 1.0, n);
            let line = analytic("closed-form optimum".into(), &xs, |_| Some(e10));
            ("Fig. 3(b)", "G2/G1", "E_N(omega=0)", vec![closed, num, line])
        }
        FigureId::Fig3c => {
            let opt = numeric(
                "optimal coupling, tau=opt".into(),
                Solid,
                EN,
                OmegaOverKappa,
                (-3.0, 3.0),
                n,
                1.0,
                Numeric,
                CouplingRule::WithDelay,
                1.0,
            )?;
            let equal = numeric("G2=G1, tau=0".into(), Dashed, EN, OmegaOverKappa, (-3.0, 3.0), n, 1.0, Zero, CouplingRule::Equal, 1.0)?;
            ("Fig. 3(c)", "omega/kappa", "E_N(omega)", vec![opt, equal])
        }
    };
    Ok(Figure {
        id,
        title: title.into(),
        x_label: x_label.into(),
        y_label: y_label.into(),
        curves,
        notes,
    })
}

/// Linear interpolation of the first sign change of `y`.
pub fn zero_crossing(points: &[(f64, Option<f64>)]) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = ((w[0].0, w[0].1?), (w[1].0, w[1].1?));
        if y0 == 0.0 {
            Some(x0)
        } else if y0.signum() != y1.signum() && y1 != 0.0 {
            Some(x0 + (x1 - x0) * y0 / (y0 - y1))
        } else {
            None
        }
    })
}

pub fn figure_csv(fig: &Figure, config_echo: &str) -> String {
    let mut out = comment_block(config_echo);
    for note in &fig.notes {
        let _ = writeln!(out, "# note: {note}");
    }
    let _ = writeln!(out, "curve,x,y,{ROW_COLUMNS}");
    let empty = ",".repeat(ROW_COLUMNS.matches(',').count());
    for c in &fig.curves {
        let label = crate::output::csv_field(&c.label);
        match &c.data {
            CurveData::Analytic(pts) => {
                for &(x, y) in pts {
                    let _ = writeln!(out, "{label},{},{},{empty}", fmt_float(Some(x)), fmt_float(y));
                }
            }
            CurveData::Numeric { spec, result } => {
                for (row, (x, y)) in result.rows.iter().zip(c.points()) {
                    let g1 = spec.point(row.value).0.g1;
                    let _ = writeln!(
                        out,
                        "{label},{},{},{}",
                        fmt_float(Some(x)),
                        fmt_float(y),
                        row_fields(row, g1, KAPPA)
                    );
                }
            }
        }
    }
    out
}

pub fn figure_svg(fig: &Figure) -> String {
    let series: Vec<Series> = fig
        .curves
        .iter()
        .map(|c| Series {
            label: c.label.clone(),
            style: c.style,
            points: c.points(),
        })
        .collect();
    render_svg(&fig.title, &fig.x_label, &fig.y_label, &series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_interpolates() {
        let pts = vec![(0.0, Some(-1.0)), (1.0, Some(-0.5)), (2.0, None), (3.0, Some(-1.0)), (4.0, Some(1.0))];
        assert_eq!(zero_crossing(&pts), Some(3.5));
        assert_eq!(zero_crossing(&[(0.0, Some(1.0)), (1.0, Some(2.0))]), None);
    }

    #[test]
    fn small_figure_2c() {
        let fig = build(FigureId::Fig2c, Some(3)).unwrap();
        assert_eq!(fig.curves.len(), 6);
        let csv = figure_csv(&fig, "mode = \"figure\"");
        assert!(csv.starts_with("# mode = \"figure\"\n"));
        let rows = csv.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, 1 + 6 * 3);
        for line in csv.lines().filter(|l| !l.starts_with('#')) {
            assert_eq!(line.matches(',').count(), 11, "{line}");
        }
        let svg = figure_svg(&fig);
        assert_eq!(svg.matches("stroke-dasharray=\"6 4\"").count(), 3 + 3);
    }
}
