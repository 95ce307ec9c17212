//! Run configuration: a TOML file plus `--key=value` overrides.
//!
//! Units: `params.kappa` is in units of `γ` (`params.gamma`, default 1); every
//! other rate, the filter center and bandwidth are in units of `κ`; the delay
//! is in units of `1/κ`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::optimize::{CouplingRule, DelayMode, Spacing, SweepSpec, SweepVariable};
use crate::spectra::FilterSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Point,
    Sweep,
    Optimize,
    Figure,
}

impl Mode {
    fn name(&self) -> &'static str {
        match self {
            Mode::Point => "point",
            Mode::Sweep => "sweep",
            Mode::Optimize => "optimize",
            Mode::Figure => "figure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FigureId {
    #[serde(rename = "2a")]
    Fig2a,
    #[serde(rename = "2b")]
    Fig2b,
    #[serde(rename = "2c")]
    Fig2c,
    #[serde(rename = "3a")]
    Fig3a,
    #[serde(rename = "3b")]
    Fig3b,
    #[serde(rename = "3c")]
    Fig3c,
}

impl FigureId {
    pub const ALL: [FigureId; 6] = [
        FigureId::Fig2a,
        FigureId::Fig2b,
        FigureId::Fig2c,
        FigureId::Fig3a,
        FigureId::Fig3b,
        FigureId::Fig3c,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FigureId::Fig2a => "2a",
            FigureId::Fig2b => "2b",
            FigureId::Fig2c => "2c",
            FigureId::Fig3a => "3a",
            FigureId::Fig3b => "3b",
            FigureId::Fig3c => "3c",
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(default = "one")]
    pub gamma: f64,
    /// `κ₁` in units of `γ`.
    pub kappa: f64,
    /// `κ₂/κ₁`.
    #[serde(default = "one")]
    pub kappa2: f64,
    pub g1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2: Option<f64>,
    #[serde(default)]
    pub n_m: f64,
    #[serde(default)]
    pub n1: f64,
    #[serde(default)]
    pub n2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    #[serde(default)]
    pub omega: f64,
    pub sigma: f64,
    #[serde(default)]
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizeTarget {
    /// Coupling `G₂` maximizing `E_N`.
    G2,
    /// Delay maximizing `|⟨D₁D₂⟩|`.
    Tau,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub target: OptimizeTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureSection {
    pub id: FigureId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emit_svg: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_mode: Option<DelayMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<FigureSection>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().trim().to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// TOML text that parses back to `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let mode = self.mode.name();
        let check = |present: bool, field: &str, allowed: bool| -> Result<()> {
            match (present, allowed) {
                (true, false) => Err(Error::Config(format!("field `{field}` is not accepted in mode = \"{mode}\""))),
                _ => Ok(()),
            }
        };
        let require = |present: bool, field: &str| -> Result<()> {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("missing field `{field}` required by mode = \"{mode}\"")))
            }
        };
        let (m, p, f) = (self.mode, self.params.is_some(), self.filter.is_some());
        let uses_system = m != Mode::Figure;
        check(p, "params", uses_system)?;
        check(f, "filter", uses_system)?;
        check(self.delay_mode.is_some(), "delay_mode", uses_system)?;
        check(self.coupling.is_some(), "coupling", uses_system)?;
        check(self.sweep.is_some(), "sweep", m == Mode::Sweep)?;
        check(self.optimize.is_some(), "optimize", m == Mode::Optimize)?;
        check(self.figure.is_some(), "figure", m == Mode::Figure)?;
        let writes = matches!(m, Mode::Sweep | Mode::Figure);
        check(self.output.is_some(), "output", writes)?;
        check(self.emit_svg.is_some(), "emit_svg", m == Mode::Figure)?;
        check(self.workers.is_some(), "workers", m != Mode::Point)?;
        if uses_system {
            require(p, "params")?;
            require(f, "filter")?;
        }
        match m {
            Mode::Sweep => {
                require(self.sweep.is_some(), "sweep")?;
                require(self.output.is_some(), "output")?;
            }
            Mode::Optimize => require(self.optimize.is_some(), "optimize")?,
            Mode::Figure => {
                require(self.figure.is_some(), "figure")?;
                require(self.output.is_some(), "output")?;
            }
            Mode::Point => {}
        }
        let coupling = self.coupling.unwrap_or_default();
        let g2_needed = match m {
            Mode::Point => coupling == CouplingRule::Fixed,
            Mode::Sweep => {
                coupling == CouplingRule::Fixed
                    && self.sweep.as_ref().map(|s| s.variable) != Some(SweepVariable::G2OverG1)
            }
            Mode::Optimize => self.optimize.as_ref().map(|o| o.target) == Some(OptimizeTarget::Tau),
            Mode::Figure => false,
        };
        if g2_needed && self.params.as_ref().is_some_and(|p| p.g2.is_none()) {
            return Err(Error::Config(format!(
                "missing field `params.g2` required by mode = \"{mode}\" with coupling = \"fixed\""
            )));
        }
        let target = self.optimize.as_ref().map(|o| o.target).filter(|_| m == Mode::Optimize);
        if target == Some(OptimizeTarget::G2) && self.coupling.is_some() {
            return Err(Error::Config("field `coupling` is not accepted when optimizing g2".into()));
        }
        if target == Some(OptimizeTarget::Tau) && self.delay_mode.is_some() {
            return Err(Error::Config("field `delay_mode` is not accepted when optimizing tau".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("field `workers` must be >= 1".into()));
        }
        if let Some(fig) = &self.figure {
            if fig.points.is_some_and(|n| n < 2) {
                return Err(Error::Config("field `figure.points` must be >= 2".into()));
            }
        }
        if uses_system {
            self.system_params()?;
            self.filter_spec()?;
        }
        if let Some(s) = self.sweep_spec()? {
            s.validate().map_err(as_config)?;
        }
        Ok(())
    }

    /// Absolute-unit parameters; `g2` is zero when absent (set later by a
    /// coupling rule or optimizer).
    pub fn system_params(&self) -> Result<SystemParams> {
        let s = self
            .params
            .as_ref()
            .ok_or_else(|| Error::Config("missing field `params`".into()))?;
        let kappa = s.kappa * s.gamma;
        SystemParams::new(
            kappa,
            s.kappa2 * kappa,
            s.gamma,
            s.g1 * kappa,
            s.g2.unwrap_or(0.0) * kappa,
            s.n_m,
            s.n1,
            s.n2,
        )
        .map_err(as_config)
    }

    pub fn filter_spec(&self) -> Result<FilterSpec> {
        let p = self.system_params()?;
        let f = self
            .filter
            .as_ref()
            .ok_or_else(|| Error::Config("missing field `filter`".into()))?;
        FilterSpec::new(f.omega * p.kappa1, f.sigma * p.kappa1, f.tau / p.kappa1).map_err(as_config)
    }

    pub fn sweep_spec(&self) -> Result<Option<SweepSpec>> {
        let Some(s) = &self.sweep else { return Ok(None) };
        Ok(Some(SweepSpec {
            variable: s.variable,
            lo: s.lo,
            hi: s.hi,
            points: s.points,
            spacing: s.spacing,
            params: self.system_params()?,
            filter: self.filter_spec()?,
            delay_mode: self.delay_mode.unwrap_or(DelayMode::Fixed),
            coupling: self.coupling.unwrap_or_default(),
        }))
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidParams(m) => Error::Config(m),
        other => other,
    }
}

/// Applies `--a.b=value`; the value is read as a TOML literal, falling back to
/// a bare string.
pub fn apply_override(table: &mut toml::Table, arg: &str) -> Result<()> {
    let body = arg.strip_prefix("--").unwrap_or(arg);
    let (key, raw) = body
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{arg}` is not of the form --key=value")))?;
    let path: Vec<&str> = key.split('.').collect();
    if path.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("override `{arg}` has an empty key")));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for k in parents {
        let entry = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{arg}`: `{k}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const POINT: &str = r#"
mode = "point"

[params]
kappa = 1e5
g1 = 10.0
g2 = 9.8

[filter]
sigma = 1.0
"#;

    #[test]
    fn point_config_units() {
        let c = RunConfig::parse(POINT, &[]).unwrap();
        let p = c.system_params().unwrap();
        assert_eq!(p.kappa1, 1e5);
        assert_eq!(p.kappa2, 1e5);
        assert_eq!(p.g1, 1e6);
        assert!((p.g2 - 9.8e5).abs() < 1e-6);
        let f = c.filter_spec().unwrap();
        assert_eq!(f.bandwidth, 1e5);
        assert_eq!(f.delay, 0.0);
    }

    #[test]
    fn unknown_field_is_named() {
        let e = RunConfig::parse(&POINT.replace("g2 = 9.8", "g2 = 9.8\ng3 = 1.0"), &[]).unwrap_err();
        assert!(e.to_string().contains("g3"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn wrong_section_for_mode() {
        let text = format!("{POINT}\n[figure]\nid = \"2a\"\n");
        let e = RunConfig::parse(&text, &[]).unwrap_err();
        assert!(e.to_string().contains("figure"), "{e}");
    }

    #[test]
    fn missing_g2_named() {
        let e = RunConfig::parse(&POINT.replace("g2 = 9.8", ""), &[]).unwrap_err();
        assert!(e.to_string().contains("params.g2"), "{e}");
    }

    #[test]
    fn overrides() {
        let c = RunConfig::parse(POINT, &["--params.g2=5".into(), "--filter.tau=0.25".into()]).unwrap();
        assert_eq!(c.params.as_ref().unwrap().g2, Some(5.0));
        assert_eq!(c.filter.as_ref().unwrap().tau, 0.25);
        let c = RunConfig::parse(POINT, &["--delay_mode=numeric".into()]).unwrap();
        assert_eq!(c.delay_mode, Some(DelayMode::Numeric));
        assert!(RunConfig::parse(POINT, &["--params.g2".into()]).is_err());
        assert!(RunConfig::parse(POINT, &["--params.g1=abc".into()]).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig::parse(POINT, &["--coupling=with_delay".into()]).unwrap();
        let back = RunConfig::parse(&c.to_toml(), &[]).unwrap();
        assert_eq!(c, back);
        let fig = "mode = \"figure\"\noutput = \"out\"\nemit_svg = false\n[figure]\nid = \"3c\"\npoints = 11\n";
        let c = RunConfig::parse(fig, &[]).unwrap();
        assert_eq!(RunConfig::parse(&c.to_toml(), &[]).unwrap(), c);
    }

    #[test]
    fn invalid_physics_is_config_error() {
        let e = RunConfig::parse(&POINT.replace("sigma = 1.0", "sigma = -1.0"), &[]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
