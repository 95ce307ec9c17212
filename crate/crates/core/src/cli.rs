//! Command-line front end: `optoent <config.toml> [--json] [--key=value ...]`.

use std::io::Write;
use std::path::PathBuf;

use clap::Parser;
use serde::Serialize;

use crate::config::{FigureId, Mode, OptimizeTarget, RunConfig};
use crate::error::{Error, Result};
use crate::figures;
use crate::formulas::{self, AnalyticInputs};
use crate::model::{check_stability, eigen_stable, spectral_abscissa, StabilityVerdict, SystemParams};
use crate::optimize::{self, analytic_inputs, DelayMode};
use crate::output::{sweep_csv, write_atomic};
use crate::spectra::{FilterSpec, MomentSet};

#[derive(Debug, Parser)]
#[command(name = "optoent", version, about = "Filtered output entanglement of a three-mode optomechanical system")]
struct Args {
    /// TOML run configuration.
    config: PathBuf,
    /// Machine-readable JSON report (point and optimize modes).
    #[arg(long)]
    json: bool,
}

/// Splits `--key=value` overrides from the arguments clap understands.
fn split_args(args: &[String]) -> (Vec<String>, Vec<String>) {
    let mut plain = Vec::new();
    let mut overrides = Vec::new();
    for (i, a) in args.iter().enumerate() {
        let is_override = i > 0
            && a.starts_with("--")
            && a.contains('=')
            && !a.starts_with("--json=");
        if is_override {
            overrides.push(a.clone());
        } else {
            plain.push(a.clone());
        }
    }
    (plain, overrides)
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run(args: Vec<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let (plain, overrides) = split_args(&args);
    let parsed = match Args::try_parse_from(plain) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = write!(sink, "{e}");
            return code;
        }
    };
    let result = RunConfig::load(&parsed.config, &overrides).and_then(|cfg| execute(&cfg, parsed.json, stdout));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cfg: &RunConfig, json: bool, out: &mut dyn Write) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let text = pool.install(|| -> Result<String> {
        let wrote = |paths: Vec<PathBuf>| paths.iter().map(|p| format!("wrote {}\n", p.display())).collect();
        Ok(match cfg.mode {
            Mode::Point => {
                let report = cmd_point(cfg)?;
                if json {
                    serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
                } else {
                    report.render()
                }
            }
            Mode::Optimize => {
                let report = cmd_optimize(cfg)?;
                if json {
                    serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
                } else {
                    report.render()
                }
            }
            Mode::Sweep => wrote(cmd_sweep(cfg)?),
            Mode::Figure => wrote(cmd_figure(cfg)?),
        })
    })?;
    out.write_all(text.as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedForms {
    pub tau_opt_kappa: f64,
    pub g2_large_bandwidth_over_g1: Option<f64>,
    pub g2_small_bandwidth_over_g1: f64,
    pub sigma_boundary_over_kappa: f64,
    pub saturation_g1_threshold_over_kappa: f64,
    pub e_n_saturation: f64,
    pub g2_with_delay_over_g1: f64,
    pub e_n_with_delay: f64,
}

impl ClosedForms {
    fn new(a: &AnalyticInputs, g2: f64, notes: &mut Vec<String>) -> Self {
        let (k, g1) = (a.kappa, a.g1);
        let small = formulas::g2_opt_small_bw(a);
        let with_delay = formulas::g2_opt_with_delay(a);
        let e_delay = formulas::e_n_opt_with_delay(a);
        for w in small.warnings.iter().chain(&with_delay.warnings).chain(&e_delay.warnings) {
            let s = w.to_string();
            if !notes.contains(&s) {
                notes.push(s);
            }
        }
        ClosedForms {
            tau_opt_kappa: formulas::tau_opt(a, g2) * k,
            g2_large_bandwidth_over_g1: formulas::g2_opt_large_bw(a).ok().map(|g| g / g1),
            g2_small_bandwidth_over_g1: small.value / g1,
            sigma_boundary_over_kappa: formulas::sigma_boundary(g1, k) / k,
            saturation_g1_threshold_over_kappa: formulas::saturation_threshold(a.sigma, k) / k,
            e_n_saturation: formulas::e_n_saturation(a.sigma, k),
            g2_with_delay_over_g1: with_delay.value / g1,
            e_n_with_delay: e_delay.value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    pub stability: StabilityVerdict,
    pub eigen_stable: bool,
    pub spectral_abscissa: f64,
    pub g2_over_g1: f64,
    pub delay_mode: DelayMode,
    pub tau_kappa: f64,
    pub e_n: f64,
    pub nu_minus: f64,
    pub moments: MomentSet,
    pub annotations: Vec<String>,
    pub closed_forms: Option<ClosedForms>,
}

fn closed_forms(p: &SystemParams, f: &FilterSpec, notes: &mut Vec<String>) -> Option<ClosedForms> {
    if p.kappa1 != p.kappa2 {
        notes.push("closed forms assume equal cavity decay rates; omitted".into());
        return None;
    }
    if f.center != 0.0 {
        notes.push("closed forms hold at resonance (omega = 0) only".into());
    }
    analytic_inputs(p, f).ok().map(|a| ClosedForms::new(&a, p.g2, notes))
}

/// System with the coupling rule applied and the stability gate passed.
fn prepared_system(cfg: &RunConfig, notes: &mut Vec<String>) -> Result<(SystemParams, FilterSpec)> {
    let mut p = cfg.system_params()?;
    let f = cfg.filter_spec()?;
    let (g2, extra) = cfg.coupling.unwrap_or_default().apply(&p, &f)?;
    p.g2 = g2;
    notes.extend(extra);
    p.validate().map_err(|e| match e {
        Error::InvalidParams(m) => Error::Config(m),
        e => e,
    })?;
    Ok((p, f))
}

fn gate(p: &SystemParams, notes: &mut Vec<String>) -> Result<(StabilityVerdict, bool, f64)> {
    let verdict = check_stability(p);
    let stable = eigen_stable(p);
    let abscissa = spectral_abscissa(p);
    if stable != (verdict != StabilityVerdict::Unstable) {
        notes.push(format!(
            "closed-form verdict {verdict} disagrees with drift eigenvalues (abscissa {abscissa:e})"
        ));
    }
    if !stable {
        return Err(Error::Unstable { abscissa });
    }
    Ok((verdict, stable, abscissa))
}

pub fn cmd_point(cfg: &RunConfig) -> Result<PointReport> {
    let mut notes = Vec::new();
    let (p, f) = prepared_system(cfg, &mut notes)?;
    let (stability, eigen_stable, spectral_abscissa) = gate(&p, &mut notes)?;
    let mode = cfg.delay_mode.unwrap_or(DelayMode::Fixed);
    let eval = optimize::evaluate(&p, &f, mode)?;
    let closed_forms = closed_forms(&p, &f, &mut notes);
    Ok(PointReport {
        stability,
        eigen_stable,
        spectral_abscissa,
        g2_over_g1: p.g2 / p.g1,
        delay_mode: mode,
        tau_kappa: eval.tau * p.kappa1,
        e_n: eval.e_n,
        nu_minus: eval.nu_minus,
        moments: eval.moments,
        annotations: notes,
        closed_forms,
    })
}

fn fmt_complex(z: num_complex::Complex64) -> String {
    format!("{} {} {}i", z.re, if z.im < 0.0 { '-' } else { '+' }, z.im.abs())
}

impl PointReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let m = &self.moments;
        let mut line = |k: &str, v: String| s.push_str(&format!("{k:<28}{v}\n"));
        line("stability", format!("{} (eigenvalues stable: {})", self.stability, self.eigen_stable));
        line("spectral abscissa", format!("{:e}", self.spectral_abscissa));
        line("G2/G1", format!("{}", self.g2_over_g1));
        line("delay mode", self.delay_mode.to_string());
        line("tau*kappa", format!("{}", self.tau_kappa));
        line("E_N", format!("{}", self.e_n));
        line("nu_minus", format!("{}", self.nu_minus));
        line("n1 = <D1+ D1>", format!("{}", m.n1));
        line("n2 = <D2+ D2>", format!("{}", m.n2));
        line("c12 = <D1 D2>", fmt_complex(m.c12));
        line("m11 = <D1 D1>", fmt_complex(m.m11));
        line("m22 = <D2 D2>", fmt_complex(m.m22));
        line("x12 = <D1+ D2>", fmt_complex(m.x12));
        if let Some(c) = &self.closed_forms {
            s.push_str("closed forms\n");
            let mut line = |k: &str, v: String| s.push_str(&format!("  {k:<40}{v}\n"));
            line("optimal delay tau*kappa", format!("{}", c.tau_opt_kappa));
            line(
                "zero-delay coupling, large sigma, G2/G1",
                c.g2_large_bandwidth_over_g1.map_or("undefined".into(), |g| g.to_string()),
            );
            line("zero-delay coupling, small sigma, G2/G1", format!("{}", c.g2_small_bandwidth_over_g1));
            line("bandwidth boundary sigma_b/kappa", format!("{}", c.sigma_boundary_over_kappa));
            line("saturation threshold G1/kappa", format!("{}", c.saturation_g1_threshold_over_kappa));
            line("saturated E_N", format!("{}", c.e_n_saturation));
            line("coupling with delay G2/G1", format!("{}", c.g2_with_delay_over_g1));
            line("E_N with optimal delay", format!("{}", c.e_n_with_delay));
        }
        for a in &self.annotations {
            s.push_str(&format!("note: {a}\n"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub target: OptimizeTarget,
    pub delay_mode: Option<DelayMode>,
    /// `G₂/G₁` for target g2, `τκ` for target tau.
    pub argmax: f64,
    /// `E_N` for target g2, `|⟨D₁D₂⟩|` for target tau.
    pub maximum: f64,
    /// Matching closed form, when the parameters allow one.
    pub closed_form_argmax: Option<f64>,
    pub closed_form_maximum: Option<f64>,
    pub annotations: Vec<String>,
}

impl OptimizeReport {
    pub fn render(&self) -> String {
        let (what, val) = match self.target {
            OptimizeTarget::G2 => ("G2/G1", "E_N"),
            OptimizeTarget::Tau => ("tau*kappa", "|<D1 D2>|"),
        };
        let mut s = format!("{:<28}{}\n{:<28}{}\n", format!("optimal {what}"), self.argmax, val, self.maximum);
        if let Some(d) = self.delay_mode {
            s.push_str(&format!("{:<28}{d}\n", "delay mode"));
        }
        if let Some(c) = self.closed_form_argmax {
            s.push_str(&format!("{:<28}{c}\n", format!("closed-form {what}")));
        }
        if let Some(c) = self.closed_form_maximum {
            s.push_str(&format!("{:<28}{c}\n", format!("closed-form {val}")));
        }
        for a in &self.annotations {
            s.push_str(&format!("note: {a}\n"));
        }
        s
    }
}

pub fn cmd_optimize(cfg: &RunConfig) -> Result<OptimizeReport> {
    let mut notes = Vec::new();
    let target = cfg.optimize.as_ref().expect("validated").target;
    let mut p = cfg.system_params()?;
    let f = cfg.filter_spec()?;
    let a = if p.kappa1 == p.kappa2 && f.center == 0.0 {
        analytic_inputs(&p, &f).ok()
    } else {
        notes.push("closed forms need equal cavity decay rates and omega = 0; omitted".into());
        None
    };
    match target {
        OptimizeTarget::G2 => {
            let mode = cfg.delay_mode.unwrap_or(DelayMode::Zero);
            p.g2 = p.g2_stability_limit();
            let (g2, e_n) = optimize::g2_opt_numeric(&p, &f, mode)?;
            let (ca, cm) = match (a, mode) {
                (Some(a), DelayMode::Numeric | DelayMode::Analytic) => {
                    let g = formulas::g2_opt_with_delay(&a);
                    let e = formulas::e_n_opt_with_delay(&a);
                    notes.extend(g.warnings.iter().chain(&e.warnings).map(|w| w.to_string()));
                    (Some(g.value / p.g1), Some(e.value))
                }
                (Some(a), _) => {
                    let r = if f.bandwidth < formulas::sigma_boundary(a.g1, a.kappa) {
                        Some(formulas::g2_opt_small_bw(&a).value)
                    } else {
                        formulas::g2_opt_large_bw(&a).ok()
                    };
                    (r.map(|g| g / p.g1), None)
                }
                (None, _) => (None, None),
            };
            Ok(OptimizeReport {
                target,
                delay_mode: Some(mode),
                argmax: g2 / p.g1,
                maximum: e_n,
                closed_form_argmax: ca,
                closed_form_maximum: cm,
                annotations: notes,
            })
        }
        OptimizeTarget::Tau => {
            let (p, f) = prepared_system(cfg, &mut notes)?;
            gate(&p, &mut notes)?;
            let tau = optimize::tau_opt_numeric(&p, &f)?;
            let modulus = crate::spectra::correlator_modulus(&p, &f.with_delay(tau))?;
            Ok(OptimizeReport {
                target,
                delay_mode: None,
                argmax: tau * p.kappa1,
                maximum: modulus,
                closed_form_argmax: a.map(|a| formulas::tau_opt(&a, p.g2) * p.kappa1),
                closed_form_maximum: None,
                annotations: notes,
            })
        }
    }
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let spec = cfg.sweep_spec()?.expect("validated");
    let result = optimize::run_sweep(&spec)?;
    let kappa = spec.params.kappa1;
    let csv = sweep_csv(&result, &cfg.to_toml(), |row| spec.point(row.value).0.g1, kappa);
    let path = cfg.output.as_ref().expect("validated").join("sweep.csv");
    write_atomic(&path, csv.as_bytes())?;
    Ok(vec![path])
}

pub fn cmd_figure(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let fig_cfg = cfg.figure.as_ref().expect("validated");
    let id: FigureId = fig_cfg.id;
    let fig = figures::build(id, fig_cfg.points)?;
    let dir = cfg.output.as_ref().expect("validated");
    let csv_path = dir.join(format!("{}.csv", id.as_str()));
    write_atomic(&csv_path, figures::figure_csv(&fig, &cfg.to_toml()).as_bytes())?;
    let mut written = vec![csv_path];
    if cfg.emit_svg.unwrap_or(true) {
        let svg_path = dir.join(format!("{}.svg", id.as_str()));
        write_atomic(&svg_path, figures::figure_svg(&fig).as_bytes())?;
        written.push(svg_path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_split() {
        let args: Vec<String> = ["optoent", "run.toml", "--json", "--params.g2=3", "--mode=sweep"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let (plain, over) = split_args(&args);
        assert_eq!(plain, vec!["optoent", "run.toml", "--json"]);
        assert_eq!(over, vec!["--params.g2=3", "--mode=sweep"]);
    }
}
