use std::path::PathBuf;

use backaction_core::montecarlo::{ShotConfig, SourceModel};
use backaction_core::optics::BetaConvention;
use backaction_core::schemes::{Hamiltonian, PureQubitState, Scheme};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_SHOTS: u64 = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "UPPERCASE")]
#[value(rename_all = "UPPERCASE")]
pub enum SchemeChoice {
    Tpm,
    Cm,
    #[default]
    Both,
}

impl SchemeChoice {
    pub fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeChoice::Tpm => vec![Scheme::Tpm],
            SchemeChoice::Cm => vec![Scheme::Cm],
            SchemeChoice::Both => vec![Scheme::Cm, Scheme::Tpm],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "UPPERCASE")]
#[value(rename_all = "UPPERCASE")]
pub enum BackendKind {
    #[default]
    Analytic,
    Circuit,
    Montecarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "UPPERCASE")]
#[value(rename_all = "UPPERCASE")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub p0: Option<f64>,
    pub alpha_deg: Option<f64>,
    pub phase_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub theta_deg: Option<f64>,
    pub beta_deg: Option<f64>,
    pub gamma_deg: Option<f64>,
    pub beta_convention: Option<BetaConvention>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSpec {
    #[serde(default)]
    pub kind: BackendKind,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub source_model: Option<SourceModel>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

/// JSON run configuration; every field can be overridden from the command line.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scheme: SchemeChoice,
    #[serde(default)]
    pub state: StateSpec,
    #[serde(default)]
    pub process: ProcessSpec,
    #[serde(default)]
    pub backend: BackendSpec,
    /// `[E0, E1, E0', E1']`; degenerate (all zero) when absent.
    pub energies: Option<[f64; 4]>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    Analytic,
    Circuit,
    MonteCarlo(ShotConfig),
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Analytic => "ANALYTIC",
            Backend::Circuit => "CIRCUIT",
            Backend::MonteCarlo(_) => "MONTECARLO",
        }
    }
}

/// How the process angle was specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessAngle {
    Theta(f64),
    Beta(f64),
    Gamma(f64),
}

/// A validated configuration with derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRun {
    pub schemes: Vec<Scheme>,
    pub state: PureQubitState,
    pub angle: ProcessAngle,
    /// Radians.
    pub theta: f64,
    pub convention: BetaConvention,
    pub convention_given: bool,
    pub backend: Backend,
    pub h: Hamiltonian,
    pub h_prime: Hamiltonian,
}

fn finite(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(field, format!("{v} is not a finite number")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::new("config", e.to_string()))
    }

    pub fn resolve(&self) -> Result<ResolvedRun, ConfigError> {
        let phase = finite("state.phase_deg", self.state.phase_deg.unwrap_or(0.0))?.to_radians();
        let state = match (self.state.p0, self.state.alpha_deg) {
            (Some(_), Some(_)) => return Err(ConfigError::new("state", "give either p0 or alpha_deg, not both")),
            (None, None) => return Err(ConfigError::new("state", "one of p0 or alpha_deg is required")),
            (Some(p0), None) => {
                if !(0.0..=1.0).contains(&p0) {
                    return Err(ConfigError::new("state.p0", format!("{p0} is outside [0, 1]")));
                }
                PureQubitState::with_phase(p0, phase).map_err(|e| ConfigError::new("state.p0", e.to_string()))?
            }
            (None, Some(a)) => {
                let p0 = PureQubitState::from_alpha_degrees(finite("state.alpha_deg", a)?).p0();
                PureQubitState::with_phase(p0, phase).map_err(|e| ConfigError::new("state.alpha_deg", e.to_string()))?
            }
        };
        let p = &self.process;
        let given = [p.theta_deg, p.beta_deg, p.gamma_deg].iter().filter(|x| x.is_some()).count();
        if given != 1 {
            return Err(ConfigError::new("process", "exactly one of theta_deg, beta_deg, gamma_deg is required"));
        }
        let convention = p.beta_convention.unwrap_or_default();
        let (angle, theta) = if let Some(t) = p.theta_deg {
            (ProcessAngle::Theta(t), finite("process.theta_deg", t)?.to_radians())
        } else if let Some(b) = p.beta_deg {
            let b = finite("process.beta_deg", b)?;
            let Some(conv) = p.beta_convention else {
                return Err(ConfigError::new("process.beta_convention", "required when beta_deg is given (text or table)"));
            };
            if !(0.0..=45.0).contains(&b) {
                return Err(ConfigError::new("process.beta_deg", format!("{b} is outside [0, 45]")));
            }
            (ProcessAngle::Beta(b), conv.theta(b))
        } else {
            let g = finite("process.gamma_deg", p.gamma_deg.expect("counted above"))?;
            (ProcessAngle::Gamma(g), (2.0 * g).to_radians())
        };
        let backend = match self.backend.kind {
            BackendKind::Analytic => Backend::Analytic,
            BackendKind::Circuit => {
                if phase != 0.0 {
                    return Err(ConfigError::new("state.phase_deg", "the circuit backend prepares real amplitudes only"));
                }
                Backend::Circuit
            }
            BackendKind::Montecarlo => {
                let cfg = ShotConfig {
                    n_shots: self.backend.shots.unwrap_or(DEFAULT_SHOTS),
                    seed: self.backend.seed.unwrap_or(0),
                    source_model: self.backend.source_model.unwrap_or(SourceModel::FixedN),
                };
                cfg.validate().map_err(|e| ConfigError::new("backend", e.to_string()))?;
                Backend::MonteCarlo(cfg)
            }
        };
        let (h, h_prime) = match self.energies {
            None => (Hamiltonian::degenerate(2), Hamiltonian::degenerate(2)),
            Some(e) => {
                if e.iter().any(|x| !x.is_finite()) {
                    return Err(ConfigError::new("energies", "all four energies must be finite"));
                }
                (Hamiltonian::diagonal(&e[..2]), Hamiltonian::diagonal(&e[2..]))
            }
        };
        Ok(ResolvedRun {
            schemes: self.scheme.schemes(),
            state,
            angle,
            theta,
            convention,
            convention_given: p.beta_convention.is_some(),
            backend,
            h,
            h_prime,
        })
    }
}

/// Parses `E0,E1,E0p,E1p`.
pub fn parse_energies(text: &str) -> Result<[f64; 4], ConfigError> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| ConfigError::new("energies", format!("`{text}`: {e}")))?;
    parts.try_into().map_err(|v: Vec<f64>| ConfigError::new("energies", format!("expected 4 values, got {}", v.len())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        RunConfig {
            state: StateSpec { p0: Some(0.5), ..Default::default() },
            process: ProcessSpec { theta_deg: Some(45.0), ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn json_schema() {
        let cfg = RunConfig::from_json(
            r#"{"scheme":"CM","state":{"alpha_deg":15},"process":{"beta_deg":21,"beta_convention":"table"},
                "backend":{"kind":"MONTECARLO","shots":1000,"seed":9,
                           "source_model":{"kind":"POISSON","rate_per_second":1e4,"duration_seconds":1}},
                "energies":[0,1,0,2],"output":{"format":"JSON"}}"#,
        )
        .unwrap();
        let r = cfg.resolve().unwrap();
        assert!((r.state.p0() - 0.75).abs() < 1e-12);
        assert!((r.theta.to_degrees() - 28.2).abs() < 0.05);
        assert!(matches!(r.backend, Backend::MonteCarlo(c) if c.seed == 9));
        assert!(RunConfig::from_json(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let mut c = base();
        c.state.p0 = Some(1.5);
        assert_eq!(c.resolve().unwrap_err().field, "state.p0");
        let mut c = base();
        c.process.gamma_deg = Some(3.0);
        assert_eq!(c.resolve().unwrap_err().field, "process");
        let mut c = base();
        c.process = ProcessSpec { beta_deg: Some(10.0), ..Default::default() };
        assert_eq!(c.resolve().unwrap_err().field, "process.beta_convention");
        let mut c = base();
        c.state.phase_deg = Some(10.0);
        c.backend.kind = BackendKind::Circuit;
        assert_eq!(c.resolve().unwrap_err().field, "state.phase_deg");
        let mut c = base();
        c.backend = BackendSpec { kind: BackendKind::Montecarlo, shots: Some(0), ..Default::default() };
        assert_eq!(c.resolve().unwrap_err().field, "backend");
    }

    #[test]
    fn energies_flag() {
        assert_eq!(parse_energies("0, 1,2,3.5").unwrap(), [0.0, 1.0, 2.0, 3.5]);
        assert!(parse_energies("1,2").is_err());
        assert!(parse_energies("a,b,c,d").is_err());
    }
}
