use std::collections::BTreeMap;

use backaction_core::montecarlo::{empirical_fidelity, proportions, sample_table, ShotConfig};
use backaction_core::optics::{
    build_module_a, build_module_a_single, build_module_b, build_module_c, module_a_input, module_a_single_input,
    OpticsError,
};
use backaction_core::qmath::{classical_fidelity, UnitaryOperator};
use backaction_core::schemes::{
    avg_work_cm, avg_work_tpm, avg_work_unmeasured, cm_povm, cohering_power_unitary, ideal_final_dist,
    l1_coherence, lambda_max, tpm_povm, transition_probs, OutcomeLabel, Scheme, SchemeError, TransitionTable,
};
use serde::Serialize;
use thiserror::Error;

use crate::config::{Backend, ConfigError, ProcessAngle, ResolvedRun, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Compute(String),
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<OpticsError> for CliError {
    fn from(e: OpticsError) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<backaction_core::montecarlo::MonteCarloError> for CliError {
    fn from(e: backaction_core::montecarlo::MonteCarloError) -> Self {
        CliError::Compute(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeResult {
    pub scheme: Scheme,
    /// CM mixing parameter; `None` for TPM.
    pub lambda: Option<f64>,
    pub table: TransitionTable,
    /// Binomial standard errors (sampled runs only).
    pub std_err: Option<BTreeMap<OutcomeLabel, f64>>,
    pub counts: Option<u64>,
    pub final_marginal: Vec<f64>,
    pub fidelity: f64,
    pub fidelity_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkTriple {
    pub unmeasured: f64,
    pub tpm: f64,
    pub cm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub p0: f64,
    pub phase_deg: f64,
    pub theta_deg: f64,
    pub ideal_final: Vec<f64>,
    pub work: WorkTriple,
    pub coherence_l1: f64,
    pub cohering_power: f64,
    pub results: Vec<SchemeResult>,
}

fn alpha_for(p0: f64) -> f64 {
    p0.sqrt().clamp(0.0, 1.0).acos().to_degrees() / 2.0
}

fn circuit_table(run: &ResolvedRun, scheme: Scheme) -> Result<TransitionTable, CliError> {
    let alpha = alpha_for(run.state.p0());
    let theta_deg = run.theta.to_degrees();
    match scheme {
        Scheme::Tpm => {
            let gamma = match run.angle {
                ProcessAngle::Gamma(g) => g,
                _ => theta_deg / 2.0,
            };
            let field = build_module_a_single(alpha).propagate(&module_a_single_input())?;
            let c = build_module_c(gamma);
            Ok(c.detect(&c.propagate(&field)?)?)
        }
        Scheme::Cm => {
            let beta = match run.angle {
                ProcessAngle::Beta(b) => b,
                _ => {
                    if !(-1e-12..=45.0 + 1e-12).contains(&theta_deg) {
                        return Err(CliError::Input(format!(
                            "theta = {theta_deg} deg has no beta-plate setting; the circuit covers [0, 45] deg"
                        )));
                    }
                    run.convention.beta_deg(run.theta)
                }
            };
            let field = build_module_a(alpha).propagate(&module_a_input())?;
            let c = build_module_b(beta, run.convention);
            Ok(c.detect(&c.propagate(&field)?)?)
        }
    }
}

fn scheme_seed(cfg: &ShotConfig, scheme: Scheme) -> ShotConfig {
    let offset = match scheme {
        Scheme::Tpm => 0,
        Scheme::Cm => 1,
    };
    ShotConfig { seed: cfg.seed.wrapping_add(offset), ..*cfg }
}

/// Evaluates one configuration. Monte Carlo draws are made from the analytic
/// table; TPM uses `seed`, CM uses `seed + 1`.
pub fn execute(run: &ResolvedRun) -> Result<RunRecord, CliError> {
    let u = UnitaryOperator::rotation_family(run.theta);
    let rho = run.state.density();
    let ideal = ideal_final_dist(&u, &run.state)?;
    let lambda = lambda_max(&u, &run.h, &run.h_prime)?;
    let tpm = tpm_povm(&u, &run.h, &run.h_prime)?;
    let cm = cm_povm(&u, &run.h, &run.h_prime, lambda)?;
    let work = WorkTriple {
        unmeasured: avg_work_unmeasured(&rho, &u, &run.h, &run.h_prime)?,
        tpm: avg_work_tpm(&rho, &u, &run.h, &run.h_prime)?,
        cm: avg_work_cm(&rho, &u, &run.h, &run.h_prime, lambda)?,
    };
    let mut results = Vec::new();
    for &scheme in &run.schemes {
        let analytic = match scheme {
            Scheme::Tpm => transition_probs(&tpm, &rho)?,
            Scheme::Cm => transition_probs(&cm, &rho.tensor(&rho))?,
        };
        let (table, std_err, counts, fidelity, fidelity_err) = match run.backend {
            Backend::Analytic | Backend::Circuit => {
                let table = if run.backend == Backend::Circuit { circuit_table(run, scheme)? } else { analytic };
                let f = classical_fidelity(&table.final_marginal(), &ideal).map_err(SchemeError::from)?;
                (table, None, None, f, None)
            }
            Backend::MonteCarlo(cfg) => {
                let counts = sample_table(&analytic, &scheme_seed(&cfg, scheme), 1)?;
                let props = proportions(&counts)?;
                let f = empirical_fidelity(&props.table, &ideal, Some(props.total))?;
                (props.table, Some(props.std_err), Some(props.total), f.value, f.std_err)
            }
        };
        results.push(SchemeResult {
            scheme,
            lambda: (scheme == Scheme::Cm).then_some(lambda),
            final_marginal: table.final_marginal(),
            table,
            std_err,
            counts,
            fidelity,
            fidelity_err,
        });
    }
    Ok(RunRecord {
        p0: run.state.p0(),
        phase_deg: run.state.phase().to_degrees(),
        theta_deg: run.theta.to_degrees(),
        ideal_final: ideal,
        work,
        coherence_l1: l1_coherence(&rho),
        cohering_power: cohering_power_unitary(&u),
        results,
    })
}

pub fn cmd_run(config: &RunConfig) -> Result<RunRecord, CliError> {
    execute(&config.resolve()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{BackendKind, ProcessSpec, SchemeChoice, StateSpec};

    fn cfg(p0: f64, theta: f64) -> RunConfig {
        RunConfig {
            state: StateSpec { p0: Some(p0), ..Default::default() },
            process: ProcessSpec { theta_deg: Some(theta), ..Default::default() },
            ..Default::default()
        }
    }

    fn fid(r: &RunRecord, s: Scheme) -> f64 {
        r.results.iter().find(|x| x.scheme == s).unwrap().fidelity
    }

    #[test]
    fn headline_fidelities() {
        let r = cmd_run(&cfg(0.5, 45.0)).unwrap();
        assert!((fid(&r, Scheme::Cm) - 1.0).abs() < 1e-9);
        assert!((fid(&r, Scheme::Tpm) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(r.work, WorkTriple { unmeasured: 0.0, tpm: 0.0, cm: 0.0 });
        assert!((r.coherence_l1 - 1.0).abs() < 1e-12);
        assert!((r.cohering_power - 1.0).abs() < 1e-12);
    }

    #[test]
    fn incoherent_input_makes_schemes_agree() {
        for theta in [0.0, 10.0, 30.0, 45.0] {
            let r = cmd_run(&cfg(1.0, theta)).unwrap();
            assert!(r.results[0].table.max_abs_diff(&r.results[1].table) < 1e-12);
        }
    }

    #[test]
    fn circuit_backend_matches_analytic() {
        for (p0, theta) in [(0.5, 45.0), (0.75, 30.0), (0.2, 12.0), (1.0, 0.0), (0.0, 33.0)] {
            let a = cmd_run(&cfg(p0, theta)).unwrap();
            let mut c = cfg(p0, theta);
            c.backend.kind = BackendKind::Circuit;
            let c = cmd_run(&c).unwrap();
            for (x, y) in a.results.iter().zip(&c.results) {
                assert!(x.table.max_abs_diff(&y.table) < 1e-9, "p0={p0} theta={theta} {:?}", x.scheme);
            }
        }
        let mut c = cfg(0.5, 60.0);
        c.backend.kind = BackendKind::Circuit;
        c.scheme = SchemeChoice::Cm;
        assert!(matches!(cmd_run(&c), Err(CliError::Input(_))));
    }

    #[test]
    fn nondegenerate_work() {
        let mut c = cfg(0.5, 30.0);
        c.energies = Some([0.0, 1.0, 0.0, 1.0]);
        let r = cmd_run(&c).unwrap();
        let lambda = r.results[0].lambda.unwrap();
        let interp = (1.0 - lambda) * r.work.tpm + lambda * r.work.unmeasured;
        assert!((r.work.cm - interp).abs() < 1e-9);
        assert!((r.work.unmeasured - r.work.tpm).abs() > 1e-3);
    }

    #[test]
    fn montecarlo_is_seeded() {
        let mut c = cfg(0.5, 45.0);
        c.backend.kind = BackendKind::Montecarlo;
        c.backend.shots = Some(20_000);
        c.backend.seed = Some(5);
        let a = cmd_run(&c).unwrap();
        assert_eq!(a, cmd_run(&c).unwrap());
        let cm = &a.results[0];
        assert_eq!(cm.counts, Some(20_000));
        assert!(cm.fidelity_err.unwrap() < 0.01);
        assert_eq!(cm.table.get(OutcomeLabel::new(0, 1)), 0.0);
    }
}
