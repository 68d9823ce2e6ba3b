use std::collections::BTreeMap;
use std::path::Path;

use backaction_core::dsl::{compile_source, parse_str, Diagnostic};
use backaction_core::optics::compile;
use backaction_core::schemes::{OutcomeLabel, Povm, COMPLETENESS_TOL};
use serde::Serialize;

use crate::run::CliError;

#[derive(Debug, Serialize)]
pub struct CompileReport {
    pub file: String,
    pub params: BTreeMap<String, f64>,
    pub povm: Povm,
    pub completeness_residual: f64,
    pub min_eigenvalues: Vec<(OutcomeLabel, f64)>,
    pub valid: bool,
}

#[derive(Debug)]
pub enum CompileError {
    Diagnostic { file: String, diagnostic: Diagnostic },
    Other(CliError),
}

impl std::fmt::Display for CompileError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CompileError::Diagnostic { file, diagnostic } => write!(f, "{file}: {diagnostic}"),
            CompileError::Other(e) => e.fmt(f),
        }
    }
}

/// Parses `name=value` (degrees).
pub fn parse_param(text: &str) -> Result<(String, f64), CliError> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| CliError::Input(format!("parameter `{text}` is not name=value")))?;
    let value = v
        .trim()
        .trim_end_matches("deg")
        .parse::<f64>()
        .map_err(|e| CliError::Input(format!("parameter `{text}`: {e}")))?;
    Ok((k.trim().to_string(), value))
}

pub fn cmd_compile(path: &Path, overrides: &BTreeMap<String, f64>) -> Result<CompileReport, CompileError> {
    let file = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| CompileError::Other(CliError::Io { path: file.clone(), message: e.to_string() }))?;
    let diag = |diagnostic| CompileError::Diagnostic { file: file.clone(), diagnostic };
    let circuit = compile_source(&text, overrides).map_err(diag)?;
    let mut params: BTreeMap<String, f64> = parse_str(&text).map_err(diag)?.params().into_iter().collect();
    params.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
    let povm = compile(&circuit).map_err(|e| CompileError::Other(e.into()))?;
    let completeness_residual = povm.completeness_residual();
    let min_eigenvalues = povm.min_eigenvalues().map_err(|e| CompileError::Other(e.into()))?;
    let valid = completeness_residual <= COMPLETENESS_TOL && min_eigenvalues.iter().all(|(_, m)| *m >= -COMPLETENESS_TOL);
    Ok(CompileReport { file, params, povm, completeness_residual, min_eigenvalues, valid })
}
