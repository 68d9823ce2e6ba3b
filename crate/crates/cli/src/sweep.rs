use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, ProcessSpec, RunConfig, StateSpec};
use crate::run::{cmd_run, CliError, RunRecord};

pub const THREADS_ENV: &str = "BACKACTION_SIM_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    Beta,
    Alpha,
    Theta,
    P0,
}

impl SweepVar {
    pub fn column(self) -> &'static str {
        match self {
            SweepVar::Beta => "beta[deg]",
            SweepVar::Alpha => "alpha[deg]",
            SweepVar::Theta => "theta_grid[deg]",
            SweepVar::P0 => "p0_grid[1]",
        }
    }

    fn domain(self) -> (f64, f64) {
        match self {
            SweepVar::Beta | SweepVar::Alpha => (0.0, 45.0),
            SweepVar::Theta => (0.0, 90.0),
            SweepVar::P0 => (0.0, 1.0),
        }
    }

    fn name(self) -> &'static str {
        match self {
            SweepVar::Beta => "beta",
            SweepVar::Alpha => "alpha",
            SweepVar::Theta => "theta",
            SweepVar::P0 => "p0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grid {
    List(Vec<f64>),
    /// `count` evenly spaced points including both ends.
    Range { start: f64, stop: f64, count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVar,
    pub grid: Grid,
}

impl SweepSpec {
    pub fn points(&self) -> Result<Vec<f64>, ConfigError> {
        let pts = match &self.grid {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, count } => match count {
                0 => vec![],
                1 => vec![*start],
                n => (0..*n).map(|k| start + (stop - start) * k as f64 / (*n - 1) as f64).collect(),
            },
        };
        if pts.is_empty() {
            return Err(ConfigError::new("sweep.grid", "grid is empty"));
        }
        let (lo, hi) = self.variable.domain();
        if let Some((k, v)) = pts.iter().enumerate().find(|(_, v)| !(v.is_finite() && (lo..=hi).contains(*v))) {
            return Err(ConfigError::new(
                "sweep.grid",
                format!("grid point {k} ({} = {v}) is outside [{lo}, {hi}]", self.variable.name()),
            ));
        }
        Ok(pts)
    }

    /// Parses `start:stop:count`.
    pub fn parse_range(text: &str) -> Result<Grid, ConfigError> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || ConfigError::new("sweep.range", format!("`{text}` is not start:stop:count"));
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(Grid::Range {
            start: parts[0].trim().parse().map_err(|_| bad())?,
            stop: parts[1].trim().parse().map_err(|_| bad())?,
            count: parts[2].trim().parse().map_err(|_| bad())?,
        })
    }

    pub fn parse_list(text: &str) -> Result<Grid, ConfigError> {
        text.split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map(Grid::List)
            .map_err(|e| ConfigError::new("sweep.grid", format!("`{text}`: {e}")))
    }
}

fn apply(config: &RunConfig, var: SweepVar, v: f64) -> RunConfig {
    let mut c = config.clone();
    match var {
        SweepVar::Beta => {
            c.process = ProcessSpec { beta_deg: Some(v), beta_convention: c.process.beta_convention, ..Default::default() }
        }
        SweepVar::Theta => {
            c.process = ProcessSpec { theta_deg: Some(v), beta_convention: c.process.beta_convention, ..Default::default() }
        }
        SweepVar::Alpha => c.state = StateSpec { alpha_deg: Some(v), phase_deg: c.state.phase_deg, ..Default::default() },
        SweepVar::P0 => c.state = StateSpec { p0: Some(v), phase_deg: c.state.phase_deg, ..Default::default() },
    }
    c
}

/// Thread cap from the environment; `None` when unset or not a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse::<usize>().ok().filter(|&n| n > 0)
}

/// Evaluates grid points in parallel; rows come back in grid order.
pub fn cmd_sweep(config: &RunConfig, sweep: &SweepSpec) -> Result<Vec<(f64, RunRecord)>, CliError> {
    let points = sweep.points()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Compute(e.to_string()))?;
    pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(k, &v)| {
                cmd_run(&apply(config, sweep.variable, v)).map(|r| (v, r)).map_err(|e| match e {
                    CliError::Config(c) => CliError::Config(ConfigError::new(
                        &c.field,
                        format!("grid point {k} ({} = {v}): {}", sweep.variable.name(), c.message),
                    )),
                    other => CliError::Compute(format!("grid point {k} ({} = {v}): {other}", sweep.variable.name())),
                })
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SchemeChoice;
    use backaction_core::schemes::Scheme;

    fn plus_theta() -> RunConfig {
        RunConfig {
            state: StateSpec { p0: Some(0.5), ..Default::default() },
            process: ProcessSpec { theta_deg: Some(0.0), ..Default::default() },
            ..Default::default()
        }
    }

    fn fid(r: &RunRecord, s: Scheme) -> f64 {
        r.results.iter().find(|x| x.scheme == s).unwrap().fidelity
    }

    #[test]
    fn theta_sweep_tpm_non_increasing() {
        let spec = SweepSpec { variable: SweepVar::Theta, grid: Grid::Range { start: 0.0, stop: 45.0, count: 46 } };
        let rows = cmd_sweep(&plus_theta(), &spec).unwrap();
        let f: Vec<f64> = rows.iter().map(|(_, r)| fid(r, Scheme::Tpm)).collect();
        assert!(f.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!((f.last().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn p0_sweep_minimum_near_three_quarters() {
        let mut c = plus_theta();
        c.process.theta_deg = Some(30.0);
        let spec = SweepSpec { variable: SweepVar::P0, grid: Grid::Range { start: 0.0, stop: 1.0, count: 101 } };
        let rows = cmd_sweep(&c, &spec).unwrap();
        for s in [Scheme::Cm, Scheme::Tpm] {
            let (p0, _) = rows
                .iter()
                .map(|(v, r)| (*v, fid(r, s)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!((p0 - 0.75).abs() <= 0.02, "{s}: {p0}");
        }
    }

    #[test]
    fn single_point_equals_run() {
        let mut c = plus_theta();
        c.scheme = SchemeChoice::Cm;
        let spec = SweepSpec { variable: SweepVar::Theta, grid: Grid::List(vec![0.0]) };
        assert_eq!(cmd_sweep(&c, &spec).unwrap()[0].1, cmd_run(&c).unwrap());
    }

    #[test]
    fn domain_errors_name_the_point() {
        let spec = SweepSpec { variable: SweepVar::Beta, grid: Grid::List(vec![3.0, 50.0]) };
        let e = spec.points().unwrap_err();
        assert!(e.message.contains("grid point 1"));
        let empty = SweepSpec { variable: SweepVar::P0, grid: Grid::List(vec![]) };
        assert!(empty.points().is_err());
        assert!(SweepSpec::parse_range("0:45").is_err());
        assert_eq!(
            SweepSpec::parse_range("0:45:16").unwrap(),
            Grid::Range { start: 0.0, stop: 45.0, count: 16 }
        );
    }
}
