//! TOML run configurations. Each file holds an optional `experiment` name
//! and a list of `[[case]]` tables; every case becomes one record.

use std::path::Path;

use num_rational::BigRational;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::chains::{ChainKind, FitModel};
use crate::embezzlement::vdh_spectrum;
use crate::error::{Error, Result};
use crate::lattice::exact::RationalAmplitudes;
use crate::lattice::ModelDescriptor;
use crate::spectra::{Prune, Spectrum};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig<C> {
    pub experiment: Option<String>,
    #[serde(rename = "case")]
    pub cases: Vec<C>,
}

pub fn load<C: DeserializeOwned>(path: &Path) -> Result<RunConfig<C>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse<C: DeserializeOwned>(text: &str) -> Result<RunConfig<C>> {
    let cfg: RunConfig<C> = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if cfg.cases.is_empty() {
        return Err(Error::Config("config has no [[case]] entries".into()));
    }
    if let Some(name) = &cfg.experiment {
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::Config(format!(
                "experiment name {name:?} must be non-empty ASCII letters, digits, '_' or '-'"
            )));
        }
    }
    Ok(cfg)
}

/// One way of naming a spectrum. Exactly one source field must be set;
/// `copies` takes an exact tensor power of it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// `[1, λ] / (1 + λ)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub powers: Option<f64>,
    /// Uniform over this many entries.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniform: Option<f64>,
    /// Van Dam-Hayden member with this many entries.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vdh: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub copies: Option<usize>,
}

impl SpectrumSpec {
    pub fn build(&self) -> Result<Spectrum> {
        let set = [
            self.weights.is_some(),
            self.powers.is_some(),
            self.uniform.is_some(),
            self.vdh.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if set != 1 {
            return Err(Error::Config(
                "spectrum needs exactly one of weights, powers, uniform, vdh".into(),
            ));
        }
        let base = if let Some(w) = &self.weights {
            Spectrum::new(w)
        } else if let Some(l) = self.powers {
            Spectrum::powers(l)
        } else if let Some(n) = self.uniform {
            Spectrum::uniform(n)
        } else {
            vdh_spectrum(self.vdh.unwrap_or_default())
        };
        let base = base.map_err(config_error)?;
        match self.copies {
            Some(0) => Err(Error::Config("copies must be at least 1".into())),
            Some(k) => Ok(base.tensor_power(k, Prune::EXACT)),
            None => Ok(base),
        }
    }
}

/// Library validation failures triggered by config values are config errors.
pub(crate) fn config_error(e: Error) -> Error {
    match e {
        Error::InvalidInput(m) | Error::Unsupported(m) => Error::Config(m),
        Error::CapExceeded { .. } => Error::Config(e.to_string()),
        other => other,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyCase {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub spectrum: SpectrumSpec,
    /// Tensor the result with I_∞.
    #[serde(default)]
    pub ambient: bool,
    /// Expected full label, e.g. `"III_1"`; a mismatch fails the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `2 sqrt(1 - F^2)`, the scale of the closed-form κ_max.
    #[default]
    Trace,
    /// `sqrt(2 - 2F)`.
    Vector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaCase {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub resource: SpectrumSpec,
    pub schedule: Vec<usize>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub metric: Metric,
    /// Defaults to the closed form when the resource is `powers`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    /// When set, `|κ - target| > tolerance` at the last copy count fails the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

fn default_n() -> usize {
    2
}

fn default_grid_points() -> usize {
    64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfSpace {
    pub axis: usize,
    pub cut: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackSpec {
    pub m: usize,
    pub rho: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeCase {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelDescriptor,
    /// Rational `sqrt(ρ)` entries such as `"4/5"`; required with `--exact`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<String>>,
    /// Bipartition `{x : x[axis] < cut}`; defaults to axis 0, cut `max(1, extent/2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<HalfSpace>,
    /// Second model on the same geometry to stack with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stack: Option<StackSpec>,
}

impl LatticeCase {
    pub fn rational_amplitudes(&self) -> Result<Option<RationalAmplitudes>> {
        let Some(raw) = &self.amplitudes else {
            return Ok(None);
        };
        let parsed = raw
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<BigRational>()
                    .map_err(|e| Error::Config(format!("amplitude {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        RationalAmplitudes::new(parsed).map(Some).map_err(config_error)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainCase {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub chain: ChainKind,
    pub lengths: Vec<usize>,
    #[serde(default = "default_fits")]
    pub fits: Vec<FitModel>,
    /// When set, this fit must have the smallest residual.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefer: Option<FitModel>,
}

fn default_fits() -> Vec<FitModel> {
    vec![FitModel::Log, FitModel::Sqrt, FitModel::Power]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoccCase {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Single conversion `source -> target`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SpectrumSpec>,
    /// Family `base^{⊗L}` for `L = 1..=max_copies`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<SpectrumSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_copies: Option<usize>,
    pub target: SpectrumSpec,
    pub eps: f64,
    /// Expected feasibility (exact conversion, or a finite `L_0` for a family).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<bool>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_cases() {
        let cfg: RunConfig<ClassifyCase> = parse(
            r#"
            experiment = "anchors"
            [[case]]
            spectrum = { weights = [0.5, 0.5] }
            [[case]]
            spectrum = { powers = 0.25 }
            ambient = true
            "#,
        )
        .unwrap();
        assert_eq!(cfg.cases.len(), 2);
        assert!(cfg.cases[1].ambient);
        assert_eq!(cfg.cases[1].spectrum.build().unwrap().num_levels(), 2);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(parse::<ClassifyCase>("experiment = \"x\"").is_err());
        assert!(parse::<ClassifyCase>("[[case]]\nspectrum = { weights = [1] }\nbogus = 1").is_err());
        assert!(parse::<ClassifyCase>("[[case]]\nspectrum = { weights = [1], bogus = 1 }").is_err());
        assert!(parse::<ClassifyCase>("experiment = \"a b\"\n[[case]]\nspectrum = { weights = [1] }").is_err());
        let both: RunConfig<ClassifyCase> = parse("[[case]]\nspectrum = { weights = [1], powers = 0.5 }").unwrap();
        assert!(matches!(both.cases[0].spectrum.build(), Err(Error::Config(_))));
        let bad: RunConfig<ClassifyCase> = parse("[[case]]\nspectrum = { powers = 2.0 }").unwrap();
        assert!(matches!(bad.cases[0].spectrum.build(), Err(Error::Config(_))));
    }

    #[test]
    fn lattice_case_amplitudes() {
        let cfg: RunConfig<LatticeCase> = parse(
            r#"
            [[case]]
            amplitudes = ["4/5", "3/5"]
            model = { dimension = 1, extent = [3], boundary = "open", m = 2, rho = [0.64, 0.36] }
            "#,
        )
        .unwrap();
        let a = cfg.cases[0].rational_amplitudes().unwrap().unwrap();
        assert_eq!(a.amplitudes().len(), 2);
    }
}
