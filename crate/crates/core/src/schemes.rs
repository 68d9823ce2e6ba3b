//! Work-measurement schemes: two projective energy measurements (TPM) and the
//! two-copy collective measurement (CM), plus the statistics built on them.
//!
//! Outcomes are labelled by the transition `|i⟩ → |j′⟩` between an eigenvector
//! of the initial Hamiltonian and one of the final Hamiltonian. The CM acts on
//! `ρ ⊗ ρ`; its effects are
//!
//! ```text
//! M_CM(i,j′) = M_TPM(i,j′) ⊗ I + λ |i⟩⟨i| ⊗ offdiag_H(U† |j′⟩⟨j′| U)
//! ```
//!
//! with the off-diagonal part taken in the eigenbasis of `H`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qmath::{
    self, c64, min_eigenvalue, orthonormality_residual, tensor, ComplexMatrix, DensityMatrix,
    HermitianOperator, QmathError, UnitaryOperator, C64, PROB_TOL, PSD_TOL, STATE_TOL,
};

/// Work values closer than this are one atom of the work distribution.
pub const WORK_MERGE_TOL: f64 = 1e-9;
/// Entrywise slack on `Σ effects = I`.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Absolute width of the final λ bracket.
pub const LAMBDA_TOL: f64 = 1e-9;
const LAMBDA_BISECTION_STEPS: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error(transparent)]
    Math(#[from] QmathError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("Hamiltonian eigenvectors are not orthonormal (deviation {0:.3e})")]
    NonOrthonormalEigenbasis(f64),
    #[error("effect {label} is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { label: OutcomeLabel, min_eigenvalue: f64 },
    #[error("effects do not sum to the identity (max deviation {0:.3e})")]
    Incomplete(f64),
    #[error("POVM has no effects")]
    Empty,
    #[error("duplicate outcome label {0}")]
    DuplicateLabel(OutcomeLabel),
    #[error("collective measurement infeasible at lambda = 0 (min eigenvalue {0:.3e})")]
    InfeasibleAtZero(f64),
    #[error("lambda = {0} is outside [0, 1]")]
    LambdaRange(f64),
    #[error("probability {value} for {label} is outside [0, 1]")]
    ProbabilityRange { label: OutcomeLabel, value: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),
    #[error("no work value for outcome {0}")]
    MissingWork(OutcomeLabel),
    #[error("invalid pure qubit state: {0}")]
    InvalidState(String),
}

/// Transition `|i⟩ → |j′⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct OutcomeLabel {
    pub i: usize,
    pub j_prime: usize,
}

impl OutcomeLabel {
    pub const fn new(i: usize, j_prime: usize) -> Self {
        Self { i, j_prime }
    }
}

impl From<[usize; 2]> for OutcomeLabel {
    fn from([i, j_prime]: [usize; 2]) -> Self {
        Self { i, j_prime }
    }
}

impl From<OutcomeLabel> for [usize; 2] {
    fn from(l: OutcomeLabel) -> Self {
        [l.i, l.j_prime]
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{}')", self.i, self.j_prime)
    }
}

/// Qubit labels in the order 00′, 01′, 10′, 11′.
pub const QUBIT_LABELS: [OutcomeLabel; 4] = [
    OutcomeLabel::new(0, 0),
    OutcomeLabel::new(0, 1),
    OutcomeLabel::new(1, 0),
    OutcomeLabel::new(1, 1),
];

/// `H = Σ_i E_i |i⟩⟨i|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    energies: Vec<f64>,
    eigenvectors: Vec<Vec<C64>>,
}

impl Hamiltonian {
    pub fn new(energies: Vec<f64>, eigenvectors: Vec<Vec<C64>>) -> Result<Self, SchemeError> {
        let d = energies.len();
        if d == 0 || eigenvectors.len() != d || eigenvectors.iter().any(|v| v.len() != d) {
            return Err(SchemeError::Dimension(format!(
                "{} energies need {} eigenvectors of length {}",
                d, d, d
            )));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(SchemeError::Dimension("energies must be finite".into()));
        }
        let dev = orthonormality_residual(&eigenvectors);
        if dev > STATE_TOL {
            return Err(SchemeError::NonOrthonormalEigenbasis(dev));
        }
        Ok(Self { energies, eigenvectors })
    }

    /// Diagonal in the computational basis.
    pub fn diagonal(energies: &[f64]) -> Self {
        let d = energies.len();
        Self {
            energies: energies.to_vec(),
            eigenvectors: (0..d).map(|k| qmath::basis_ket(d, k)).collect(),
        }
    }

    /// All energies zero, computational eigenbasis.
    pub fn degenerate(dim: usize) -> Self {
        Self::diagonal(&vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn eigenvectors(&self) -> &[Vec<C64>] {
        &self.eigenvectors
    }

    pub fn projector(&self, k: usize) -> ComplexMatrix {
        ComplexMatrix::projector(&self.eigenvectors[k])
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let d = self.dim();
        (0..d).fold(ComplexMatrix::zeros(d, d), |acc, k| {
            &acc + &self.projector(k).scale_real(self.energies[k])
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    pub label: OutcomeLabel,
    pub matrix: HermitianOperator,
}

/// Finite set of labelled effects, each PSD, summing to the identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Povm {
    effects: Vec<Effect>,
}

impl Povm {
    pub fn new(effects: Vec<(OutcomeLabel, HermitianOperator)>) -> Result<Self, SchemeError> {
        let first = effects.first().ok_or(SchemeError::Empty)?;
        let d = first.1.dim();
        let mut seen = std::collections::BTreeSet::new();
        for (label, e) in &effects {
            if e.dim() != d {
                return Err(SchemeError::Dimension(format!(
                    "effect {label} has dimension {}, expected {d}",
                    e.dim()
                )));
            }
            if !seen.insert(*label) {
                return Err(SchemeError::DuplicateLabel(*label));
            }
            let min = min_eigenvalue(e)?;
            if min < -PSD_TOL {
                return Err(SchemeError::NotPositive { label: *label, min_eigenvalue: min });
            }
        }
        let povm = Self {
            effects: effects.into_iter().map(|(label, matrix)| Effect { label, matrix }).collect(),
        };
        let dev = povm.completeness_residual();
        if dev > COMPLETENESS_TOL {
            return Err(SchemeError::Incomplete(dev));
        }
        Ok(povm)
    }

    pub fn dim(&self) -> usize {
        self.effects[0].matrix.dim()
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn labels(&self) -> impl Iterator<Item = OutcomeLabel> + '_ {
        self.effects.iter().map(|e| e.label)
    }

    pub fn effect(&self, label: OutcomeLabel) -> Option<&HermitianOperator> {
        self.effects.iter().find(|e| e.label == label).map(|e| &e.matrix)
    }

    /// `max |Σ effects − I|` entrywise.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.dim();
        let sum = self
            .effects
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, e| &acc + e.matrix.matrix());
        sum.max_abs_diff(&ComplexMatrix::identity(d))
    }

    pub fn min_eigenvalues(&self) -> Result<Vec<(OutcomeLabel, f64)>, SchemeError> {
        self.effects
            .iter()
            .map(|e| Ok((e.label, min_eigenvalue(&e.matrix)?)))
            .collect()
    }

    /// Largest entrywise difference between matching effects; infinite if the label sets differ.
    pub fn max_effect_diff(&self, other: &Povm) -> f64 {
        if self.effects.len() != other.effects.len() {
            return f64::INFINITY;
        }
        self.effects
            .iter()
            .map(|e| match other.effect(e.label) {
                Some(o) => e.matrix.matrix().max_abs_diff(o.matrix()),
                None => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }
}

impl<'de> Deserialize<'de> for Povm {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            effects: Vec<Effect>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Povm::new(raw.effects.into_iter().map(|e| (e.label, e.matrix)).collect())
            .map_err(serde::de::Error::custom)
    }
}

/// Probabilities per transition, each in `[0, 1]`, summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr", into = "TableRepr")]
pub struct TransitionTable {
    entries: BTreeMap<OutcomeLabel, f64>,
}

#[derive(Serialize, Deserialize)]
struct TableEntry {
    label: OutcomeLabel,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    entries: Vec<TableEntry>,
}

impl TryFrom<TableRepr> for TransitionTable {
    type Error = SchemeError;

    fn try_from(r: TableRepr) -> Result<Self, SchemeError> {
        TransitionTable::new(r.entries.into_iter().map(|e| (e.label, e.p)))
    }
}

impl From<TransitionTable> for TableRepr {
    fn from(t: TransitionTable) -> Self {
        TableRepr { entries: t.entries.into_iter().map(|(label, p)| TableEntry { label, p }).collect() }
    }
}

impl TransitionTable {
    /// Validates ranges (with `PROB_TOL` slack), clamps into `[0, 1]`, checks the sum.
    pub fn new(entries: impl IntoIterator<Item = (OutcomeLabel, f64)>) -> Result<Self, SchemeError> {
        let mut map = BTreeMap::new();
        for (label, value) in entries {
            if !value.is_finite() || !(-PROB_TOL..=1.0 + PROB_TOL).contains(&value) {
                return Err(SchemeError::ProbabilityRange { label, value });
            }
            if map.insert(label, value.clamp(0.0, 1.0)).is_some() {
                return Err(SchemeError::DuplicateLabel(label));
            }
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(SchemeError::ProbabilitySum(total));
        }
        Ok(Self { entries: map })
    }

    pub fn get(&self, label: OutcomeLabel) -> f64 {
        self.entries.get(&label).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (OutcomeLabel, f64)> + '_ {
        self.entries.iter().map(|(&l, &p)| (l, p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `P(j′) = Σ_i P(i, j′)`, indexed by `j′`.
    pub fn final_marginal(&self) -> Vec<f64> {
        let n = self.entries.keys().map(|l| l.j_prime + 1).max().unwrap_or(0);
        let mut out = vec![0.0; n];
        for (l, p) in &self.entries {
            out[l.j_prime] += p;
        }
        out
    }

    /// `P(i) = Σ_j′ P(i, j′)`, indexed by `i`.
    pub fn initial_marginal(&self) -> Vec<f64> {
        let n = self.entries.keys().map(|l| l.i + 1).max().unwrap_or(0);
        let mut out = vec![0.0; n];
        for (l, p) in &self.entries {
            out[l.i] += p;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &TransitionTable) -> f64 {
        let labels: std::collections::BTreeSet<_> =
            self.entries.keys().chain(other.entries.keys()).copied().collect();
        labels.into_iter().map(|l| (self.get(l) - other.get(l)).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkAtom {
    pub w: f64,
    pub p: f64,
}

/// Discrete work distribution; atoms strictly ascending in `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkDistribution {
    atoms: Vec<WorkAtom>,
}

impl WorkDistribution {
    pub fn atoms(&self) -> &[WorkAtom] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.w * a.p).sum()
    }
}

/// `√p0 |0⟩ + e^{iφ} √p1 |1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureQubitState {
    p0: f64,
    p1: f64,
    #[serde(default)]
    phase: f64,
}

impl PureQubitState {
    pub fn new(p0: f64) -> Result<Self, SchemeError> {
        Self::with_phase(p0, 0.0)
    }

    pub fn with_phase(p0: f64, phase: f64) -> Result<Self, SchemeError> {
        if !(0.0..=1.0).contains(&p0) || !phase.is_finite() {
            return Err(SchemeError::InvalidState(format!("p0 = {p0}, phase = {phase}")));
        }
        Ok(Self { p0, p1: 1.0 - p0, phase })
    }

    /// State prepared by a half-wave plate at `alpha` degrees: `p0 = cos² 2α`.
    pub fn from_alpha_degrees(alpha: f64) -> Self {
        let c = (2.0 * alpha.to_radians()).cos();
        Self { p0: c * c, p1: 1.0 - c * c, phase: 0.0 }
    }

    pub fn plus() -> Self {
        Self { p0: 0.5, p1: 0.5, phase: 0.0 }
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn ket(&self) -> Vec<C64> {
        vec![c64(self.p0.sqrt(), 0.0), C64::from_polar(self.p1.sqrt(), self.phase)]
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::pure(&self.ket()).expect("amplitudes are normalized by construction")
    }
}

fn check_dims(u: &UnitaryOperator, h: &Hamiltonian, h_prime: &Hamiltonian) -> Result<(), SchemeError> {
    if u.dim() != h.dim() || u.dim() != h_prime.dim() {
        return Err(SchemeError::Dimension(format!(
            "U is {}-dimensional, H is {}, H' is {}",
            u.dim(),
            h.dim(),
            h_prime.dim()
        )));
    }
    Ok(())
}

/// `|⟨j′|U|i⟩|²` over the two eigenbases.
fn transition_matrix(u: &UnitaryOperator, h: &Hamiltonian, h_prime: &Hamiltonian) -> Result<Vec<Vec<f64>>, SchemeError> {
    let d = h.dim();
    let mut out = vec![vec![0.0; d]; d];
    for (i, ket_i) in h.eigenvectors().iter().enumerate() {
        for (jp, ket_jp) in h_prime.eigenvectors().iter().enumerate() {
            out[i][jp] = u.matrix().sandwich(ket_jp, ket_i)?.norm_sqr();
        }
    }
    Ok(out)
}

fn herm(m: ComplexMatrix) -> Result<HermitianOperator, SchemeError> {
    Ok(HermitianOperator::new(m)?)
}

/// `M_TPM(i,j′) = |⟨j′|U|i⟩|² |i⟩⟨i|`.
pub fn tpm_povm(u: &UnitaryOperator, h: &Hamiltonian, h_prime: &Hamiltonian) -> Result<Povm, SchemeError> {
    check_dims(u, h, h_prime)?;
    let probs = transition_matrix(u, h, h_prime)?;
    let mut effects = Vec::with_capacity(h.dim() * h_prime.dim());
    for (i, row) in probs.iter().enumerate() {
        for (jp, p) in row.iter().enumerate() {
            effects.push((OutcomeLabel::new(i, jp), herm(h.projector(i).scale_real(*p))?));
        }
    }
    Povm::new(effects)
}

/// Off-diagonal part of `A` in the orthonormal basis `basis`.
fn off_diagonal_in(a: &ComplexMatrix, basis: &[Vec<C64>]) -> Result<ComplexMatrix, SchemeError> {
    let mut diag = ComplexMatrix::zeros(a.rows(), a.cols());
    for k in basis {
        let akk = a.sandwich(k, k)?;
        diag = &diag + &ComplexMatrix::projector(k).scale(akk);
    }
    Ok(a - &diag)
}

/// The two-copy CM operators for a given λ, without positivity checks.
fn cm_operators(
    u: &UnitaryOperator,
    h: &Hamiltonian,
    h_prime: &Hamiltonian,
    lambda: f64,
) -> Result<Vec<(OutcomeLabel, ComplexMatrix)>, SchemeError> {
    check_dims(u, h, h_prime)?;
    let d = h.dim();
    let probs = transition_matrix(u, h, h_prime)?;
    let identity = ComplexMatrix::identity(d);
    let udag = u.matrix().adjoint();
    let off: Vec<ComplexMatrix> = h_prime
        .eigenvectors()
        .iter()
        .map(|jp| {
            let t = &(&udag * &ComplexMatrix::projector(jp)) * u.matrix();
            off_diagonal_in(&t, h.eigenvectors())
        })
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(d * d);
    for (i, row) in probs.iter().enumerate() {
        let proj_i = h.projector(i);
        for (jp, off_jp) in off.iter().enumerate() {
            let tpm = proj_i.scale_real(row[jp]);
            let m = &tensor(&tpm, &identity) + &tensor(&proj_i, off_jp).scale_real(lambda);
            out.push((OutcomeLabel::new(i, jp), m));
        }
    }
    Ok(out)
}

fn worst_cm_eigenvalue(
    u: &UnitaryOperator,
    h: &Hamiltonian,
    h_prime: &Hamiltonian,
    lambda: f64,
) -> Result<f64, SchemeError> {
    let mut worst = f64::INFINITY;
    for (_, m) in cm_operators(u, h, h_prime, lambda)? {
        worst = worst.min(min_eigenvalue(&herm(m)?)?);
    }
    Ok(worst)
}

/// Largest `λ ∈ [0, 1]` keeping every CM effect PSD, found by bisection.
///
/// Feasibility is monotone in λ because each effect is affine in λ and PSD at
/// λ = 0. Operators with vanishing off-diagonal parts (diagonal `U`) return 1.
pub fn lambda_max(u: &UnitaryOperator, h: &Hamiltonian, h_prime: &Hamiltonian) -> Result<f64, SchemeError> {
    let at_zero = worst_cm_eigenvalue(u, h, h_prime, 0.0)?;
    if at_zero < -PSD_TOL {
        return Err(SchemeError::InfeasibleAtZero(at_zero));
    }
    let feasible = |l: f64| worst_cm_eigenvalue(u, h, h_prime, l).map(|m| m >= -PSD_TOL);
    if feasible(1.0)? {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..LAMBDA_BISECTION_STEPS {
        if hi - lo <= LAMBDA_TOL * 1e-3 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// CM POVM on the `d²`-dimensional two-copy space.
pub fn cm_povm(u: &UnitaryOperator, h: &Hamiltonian, h_prime: &Hamiltonian, lambda: f64) -> Result<Povm, SchemeError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(SchemeError::LambdaRange(lambda));
    }
    let effects = cm_operators(u, h, h_prime, lambda)?
        .into_iter()
        .map(|(l, m)| Ok((l, herm(m)?)))
        .collect::<Result<Vec<_>, SchemeError>>()?;
    Povm::new(effects)
}

/// Born rule `P(label) = tr(M ρ)`.
pub fn transition_probs(povm: &Povm, state: &DensityMatrix) -> Result<TransitionTable, SchemeError> {
    if povm.dim() != state.dim() {
        return Err(SchemeError::Dimension(format!(
            "POVM acts on dimension {}, state has dimension {}",
            povm.dim(),
            state.dim()
        )));
    }
    let entries = povm
        .effects()
        .iter()
        .map(|e| Ok((e.label, (e.matrix.matrix() * state.matrix()).trace().re)))
        .collect::<Result<Vec<_>, SchemeError>>()?;
    TransitionTable::new(entries)
}

/// `w(i, j′) = E_i − E′_j′`.
pub fn work_values(h: &Hamiltonian, h_prime: &Hamiltonian) -> BTreeMap<OutcomeLabel, f64> {
    let mut out = BTreeMap::new();
    for (i, e) in h.energies().iter().enumerate() {
        for (jp, ep) in h_prime.energies().iter().enumerate() {
            out.insert(OutcomeLabel::new(i, jp), e - ep);
        }
    }
    out
}

/// Collapses a transition table onto work values, merging atoms closer than
/// [`WORK_MERGE_TOL`].
pub fn work_distribution(
    table: &TransitionTable,
    wmap: &BTreeMap<OutcomeLabel, f64>,
) -> Result<WorkDistribution, SchemeError> {
    let mut pairs = table
        .iter()
        .map(|(l, p)| wmap.get(&l).map(|&w| WorkAtom { w, p }).ok_or(SchemeError::MissingWork(l)))
        .collect::<Result<Vec<_>, _>>()?;
    pairs.sort_by(|a, b| a.w.total_cmp(&b.w));
    let mut atoms: Vec<WorkAtom> = Vec::new();
    // Clusters are anchored at their first (smallest) value so merging never chains.
    let mut anchor = f64::NEG_INFINITY;
    for a in pairs {
        match atoms.last_mut() {
            Some(last) if a.w - anchor < WORK_MERGE_TOL => last.p += a.p,
            _ => {
                anchor = a.w;
                atoms.push(a);
            }
        }
    }
    Ok(WorkDistribution { atoms })
}

fn expect_state_dim(rho: &DensityMatrix, u: &UnitaryOperator, h: &Hamiltonian, h_prime: &Hamiltonian) -> Result<(), SchemeError> {
    check_dims(u, h, h_prime)?;
    if rho.dim() != u.dim() {
        return Err(SchemeError::Dimension(format!("state has dimension {}, U has {}", rho.dim(), u.dim())));
    }
    Ok(())
}

fn energy_difference(rho: &DensityMatrix, u: &UnitaryOperator, h: &Hamiltonian, h_prime: &Hamiltonian) -> Result<f64, SchemeError> {
    let initial = (&h.matrix() * rho.matrix()).trace().re;
    let evolved = rho.evolve(u)?;
    let fin = (&h_prime.matrix() * evolved.matrix()).trace().re;
    Ok(initial - fin)
}

/// Unmeasured average work `tr(Hρ) − tr(H′ U ρ U†)`.
pub fn avg_work_unmeasured(rho: &DensityMatrix, u: &UnitaryOperator, h: &Hamiltonian, h_prime: &Hamiltonian) -> Result<f64, SchemeError> {
    expect_state_dim(rho, u, h, h_prime)?;
    energy_difference(rho, u, h, h_prime)
}

fn mean_work(table: &TransitionTable, wmap: &BTreeMap<OutcomeLabel, f64>) -> Result<f64, SchemeError> {
    table
        .iter()
        .map(|(l, p)| wmap.get(&l).map(|w| w * p).ok_or(SchemeError::MissingWork(l)))
        .sum()
}

/// `Σ P_TPM(i,j′) w(i,j′)`.
pub fn avg_work_tpm(rho: &DensityMatrix, u: &UnitaryOperator, h: &Hamiltonian, h_prime: &Hamiltonian) -> Result<f64, SchemeError> {
    expect_state_dim(rho, u, h, h_prime)?;
    let table = transition_probs(&tpm_povm(u, h, h_prime)?, rho)?;
    mean_work(&table, &work_values(h, h_prime))
}

/// Same quantity as [`avg_work_tpm`], via the dephased state:
/// `tr(H D[ρ]) − tr(H′ U D[ρ] U†)`.
pub fn avg_work_tpm_dephased(rho: &DensityMatrix, u: &UnitaryOperator, h: &Hamiltonian, h_prime: &Hamiltonian) -> Result<f64, SchemeError> {
    expect_state_dim(rho, u, h, h_prime)?;
    let dephased = qmath::dephase(rho, h.eigenvectors())?;
    energy_difference(&dephased, u, h, h_prime)
}

/// `Σ P_CM(i,j′) w(i,j′)` with the CM evaluated on `ρ ⊗ ρ`.
pub fn avg_work_cm(rho: &DensityMatrix, u: &UnitaryOperator, h: &Hamiltonian, h_prime: &Hamiltonian, lambda: f64) -> Result<f64, SchemeError> {
    expect_state_dim(rho, u, h, h_prime)?;
    let table = transition_probs(&cm_povm(u, h, h_prime, lambda)?, &rho.tensor(rho))?;
    mean_work(&table, &work_values(h, h_prime))
}

/// `(1 − λ)⟨W_TPM⟩ + λ⟨W⟩`.
pub fn avg_work_cm_interpolated(rho: &DensityMatrix, u: &UnitaryOperator, h: &Hamiltonian, h_prime: &Hamiltonian, lambda: f64) -> Result<f64, SchemeError> {
    Ok((1.0 - lambda) * avg_work_tpm(rho, u, h, h_prime)? + lambda * avg_work_unmeasured(rho, u, h, h_prime)?)
}

/// `Σ_{i≠j} |ρ_ij|` in the stored basis.
pub fn l1_coherence(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    let d = m.rows();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += m.get(i, j).norm();
            }
        }
    }
    s
}

/// `‖U‖²_{l→1} − 1`, the l1 coherence of the most coherent image `U|i⟩` of an
/// incoherent basis state. The norm is the largest column sum of moduli.
pub fn cohering_power_unitary(u: &UnitaryOperator) -> f64 {
    let m = u.matrix();
    let best = (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| m.get(i, j).norm()).sum::<f64>())
        .fold(0.0, f64::max);
    best * best - 1.0
}

/// `P_Id(j′) = |⟨j′|U|Φ⟩|²` in the computational basis.
pub fn ideal_final_dist(u: &UnitaryOperator, state: &PureQubitState) -> Result<Vec<f64>, SchemeError> {
    if u.dim() != 2 {
        return Err(SchemeError::Dimension(format!("expected a qubit unitary, got dimension {}", u.dim())));
    }
    Ok(u.matrix().apply(&state.ket())?.iter().map(|a| a.norm_sqr()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scheme {
    Tpm,
    Cm,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Tpm => "TPM",
            Scheme::Cm => "CM",
        })
    }
}

/// Transition table of `scheme` for a pure qubit with degenerate qubit
/// Hamiltonians; CM uses `λ = lambda_max(U)` on two copies.
pub fn qubit_table(scheme: Scheme, u: &UnitaryOperator, state: &PureQubitState) -> Result<TransitionTable, SchemeError> {
    let h = Hamiltonian::degenerate(2);
    let rho = state.density();
    match scheme {
        Scheme::Tpm => transition_probs(&tpm_povm(u, &h, &h)?, &rho),
        Scheme::Cm => {
            let lambda = lambda_max(u, &h, &h)?;
            transition_probs(&cm_povm(u, &h, &h, lambda)?, &rho.tensor(&rho))
        }
    }
}

/// Fidelity between the measured final marginal and the unmeasured one.
pub fn backaction_fidelity(scheme: Scheme, u: &UnitaryOperator, state: &PureQubitState) -> Result<f64, SchemeError> {
    let measured = qubit_table(scheme, u, state)?.final_marginal();
    let ideal = ideal_final_dist(u, state)?;
    Ok(qmath::classical_fidelity(&measured, &ideal)?)
}

/// Closed forms for the `U(θ) = cos θ σ_z + sin θ σ_x` family acting on
/// `√p0|0⟩ + √p1|1⟩`, with `λ = tan θ` for the CM (θ ∈ [0, π/4]).
pub mod closed_form {
    fn amps(p0: f64) -> (f64, f64) {
        (p0.sqrt(), (1.0 - p0).max(0.0).sqrt())
    }

    pub fn ideal(p0: f64, theta: f64) -> [f64; 2] {
        let (a, b) = amps(p0);
        let (s, c) = theta.sin_cos();
        [(a * c + b * s).powi(2), (b * c - a * s).powi(2)]
    }

    pub fn tpm(p0: f64, theta: f64) -> [f64; 2] {
        let p1 = 1.0 - p0;
        let (s, c) = theta.sin_cos();
        [p0 * c * c + p1 * s * s, p0 * s * s + p1 * c * c]
    }

    pub fn cm(p0: f64, theta: f64) -> [f64; 2] {
        let (a, b) = amps(p0);
        let p1 = 1.0 - p0;
        let (s, c) = theta.sin_cos();
        let cross = 2.0 * a * b * s * s;
        [p0 * c * c + p1 * s * s + cross, p0 * s * s + p1 * c * c - cross]
    }

    pub fn fidelity_cm(p0: f64, theta: f64) -> f64 {
        let (a, b) = amps(p0);
        let (s, c) = theta.sin_cos();
        let [m0, m1] = cm(p0, theta);
        (a * c + b * s).abs() * m0.max(0.0).sqrt() + (b * c - a * s).abs() * m1.max(0.0).sqrt()
    }

    pub fn fidelity_tpm(p0: f64, theta: f64) -> f64 {
        let (a, b) = amps(p0);
        let (s, c) = theta.sin_cos();
        let [m0, m1] = tpm(p0, theta);
        (a * c + b * s).abs() * m0.sqrt() + (b * c - a * s).abs() * m1.sqrt()
    }

    pub fn cohering_power(theta: f64) -> f64 {
        (2.0 * theta).sin().abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{basis_ket, minus_ket, pauli_x, plus_ket};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    fn deg() -> Hamiltonian {
        Hamiltonian::degenerate(2)
    }

    fn l(i: usize, jp: usize) -> OutcomeLabel {
        OutcomeLabel::new(i, jp)
    }

    /// The four operators written out by hand for `U(θ)` with `λ = tan θ`.
    fn explicit_cm(theta: f64) -> Vec<(OutcomeLabel, ComplexMatrix)> {
        let (s, c) = theta.sin_cos();
        let id = ComplexMatrix::identity(2);
        let p0 = ComplexMatrix::projector(&basis_ket(2, 0));
        let p1 = ComplexMatrix::projector(&basis_ket(2, 1));
        let plus = ComplexMatrix::projector(&plus_ket());
        let minus = ComplexMatrix::projector(&minus_ket());
        vec![
            (l(0, 0), tensor(&p0, &(&id.scale_real(c * c) + &pauli_x().scale_real(s * s)))),
            (l(0, 1), tensor(&p0, &minus).scale_real(2.0 * s * s)),
            (l(1, 0), tensor(&p1, &plus).scale_real(2.0 * s * s)),
            (l(1, 1), tensor(&p1, &(&id.scale_real(c * c) - &pauli_x().scale_real(s * s)))),
        ]
    }

    #[test]
    fn tpm_identity_is_projective() {
        let povm = tpm_povm(&UnitaryOperator::identity(2), &deg(), &deg()).unwrap();
        let p0 = ComplexMatrix::projector(&basis_ket(2, 0));
        let p1 = ComplexMatrix::projector(&basis_ket(2, 1));
        assert_eq!(povm.effect(l(0, 0)).unwrap().matrix(), &p0);
        assert_eq!(povm.effect(l(1, 1)).unwrap().matrix(), &p1);
        assert_eq!(povm.effect(l(0, 1)).unwrap().matrix().max_abs(), 0.0);
        assert_eq!(povm.effect(l(1, 0)).unwrap().matrix().max_abs(), 0.0);
    }

    #[test]
    fn tpm_at_quarter_pi_is_uniform_on_plus() {
        let u = UnitaryOperator::rotation_family(FRAC_PI_4);
        let povm = tpm_povm(&u, &deg(), &deg()).unwrap();
        for e in povm.effects() {
            let half = ComplexMatrix::projector(&basis_ket(2, e.label.i)).scale_real(0.5);
            assert!(e.matrix.matrix().max_abs_diff(&half) < 1e-15);
        }
        let t = transition_probs(&povm, &PureQubitState::plus().density()).unwrap();
        for label in QUBIT_LABELS {
            assert!((t.get(label) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn tpm_incoherent_state_born_rule() {
        let u = UnitaryOperator::rotation_family(0.3);
        let rho = DensityMatrix::new(ComplexMatrix::diag(&[0.2, 0.8])).unwrap();
        let t = transition_probs(&tpm_povm(&u, &deg(), &deg()).unwrap(), &rho).unwrap();
        let (s, c) = 0.3f64.sin_cos();
        assert!((t.get(l(0, 0)) - 0.2 * c * c).abs() < 1e-15);
        assert!((t.get(l(0, 1)) - 0.2 * s * s).abs() < 1e-15);
        assert!((t.get(l(1, 0)) - 0.8 * s * s).abs() < 1e-15);
        assert!((t.get(l(1, 1)) - 0.8 * c * c).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let u = UnitaryOperator::identity(3);
        assert!(matches!(tpm_povm(&u, &deg(), &deg()), Err(SchemeError::Dimension(_))));
        let povm = tpm_povm(&UnitaryOperator::identity(2), &deg(), &deg()).unwrap();
        assert!(matches!(
            transition_probs(&povm, &DensityMatrix::maximally_mixed(4)),
            Err(SchemeError::Dimension(_))
        ));
    }

    #[test]
    fn lambda_examples() {
        let u = UnitaryOperator::rotation_family(FRAC_PI_6);
        assert!((lambda_max(&u, &deg(), &deg()).unwrap() - FRAC_PI_6.tan()).abs() < 1e-7);
        assert_eq!(lambda_max(&UnitaryOperator::identity(2), &deg(), &deg()).unwrap(), 1.0);
        let u = UnitaryOperator::rotation_family(FRAC_PI_4);
        assert!((lambda_max(&u, &deg(), &deg()).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn lambda_beyond_quarter_pi_is_cot() {
        // Outside [0, π/4] the binding constraint switches to the 00′ effect.
        let theta = 1.2;
        let u = UnitaryOperator::rotation_family(theta);
        let lam = lambda_max(&u, &deg(), &deg()).unwrap();
        assert!((lam - 1.0 / theta.tan()).abs() < 1e-7);
    }

    #[test]
    fn cm_matches_explicit_operators() {
        for k in 0..20 {
            let theta = FRAC_PI_4 * k as f64 / 19.0;
            let povm = cm_povm(&UnitaryOperator::rotation_family(theta), &deg(), &deg(), theta.tan()).unwrap();
            for (label, m) in explicit_cm(theta) {
                assert!(povm.effect(label).unwrap().matrix().max_abs_diff(&m) < 1e-10, "theta={theta} {label}");
            }
        }
    }

    #[test]
    fn cm_at_zero_lambda_is_tpm_tensor_identity() {
        let u = UnitaryOperator::rotation_family(0.4);
        let cm = cm_povm(&u, &deg(), &deg(), 0.0).unwrap();
        let tpm = tpm_povm(&u, &deg(), &deg()).unwrap();
        for e in tpm.effects() {
            let lifted = tensor(e.matrix.matrix(), &ComplexMatrix::identity(2));
            assert_eq!(cm.effect(e.label).unwrap().matrix(), &lifted);
        }
    }

    #[test]
    fn cm_rejects_lambda_above_max() {
        let u = UnitaryOperator::rotation_family(FRAC_PI_6);
        assert!(matches!(cm_povm(&u, &deg(), &deg(), 0.7), Err(SchemeError::NotPositive { .. })));
        assert!(matches!(cm_povm(&u, &deg(), &deg(), -0.1), Err(SchemeError::LambdaRange(_))));
    }

    #[test]
    fn cm_on_plus_plus_at_quarter_pi() {
        let u = UnitaryOperator::rotation_family(FRAC_PI_4);
        let rho = PureQubitState::plus().density();
        let t = transition_probs(&cm_povm(&u, &deg(), &deg(), 1.0).unwrap(), &rho.tensor(&rho)).unwrap();
        let expected = [0.5, 0.0, 0.5, 0.0];
        for (label, e) in QUBIT_LABELS.iter().zip(expected) {
            assert!((t.get(*label) - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cm_marginal_for_three_quarter_population() {
        let u = UnitaryOperator::rotation_family(FRAC_PI_6);
        let rho = PureQubitState::new(0.75).unwrap().density();
        let povm = cm_povm(&u, &deg(), &deg(), FRAC_PI_6.tan()).unwrap();
        let marginal = transition_probs(&povm, &rho.tensor(&rho)).unwrap().final_marginal();
        // 0.75·0.75 + 0.25·0.25 + 2·√(0.1875)·0.25
        let oracle = 0.75 * 0.75 + 0.25 * 0.25 + 2.0 * 0.1875f64.sqrt() * 0.25;
        assert!((marginal[0] - oracle).abs() < 1e-12);
        assert!((marginal[0] - 0.84151).abs() < 1e-5);
    }

    #[test]
    fn work_value_examples() {
        assert!(work_values(&deg(), &deg()).values().all(|&w| w == 0.0));
        let h = Hamiltonian::diagonal(&[0.0, 1.0]);
        let w = work_values(&h, &h);
        assert_eq!(w[&l(0, 1)], -1.0);
        assert_eq!(w[&l(1, 0)], 1.0);
        assert_eq!(w[&l(0, 0)], 0.0);
        assert_eq!(w[&l(1, 1)], 0.0);
        let w = work_values(&Hamiltonian::diagonal(&[0.0, 2.0]), &h);
        let mut vals: Vec<f64> = w.values().copied().collect();
        vals.sort_by(f64::total_cmp);
        assert_eq!(vals, vec![-1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn work_distribution_examples() {
        let uniform = TransitionTable::new(QUBIT_LABELS.iter().map(|&l| (l, 0.25))).unwrap();
        let d = work_distribution(&uniform, &work_values(&deg(), &deg())).unwrap();
        assert_eq!(d.atoms(), &[WorkAtom { w: 0.0, p: 1.0 }]);

        let h = Hamiltonian::diagonal(&[0.0, 1.0]);
        let d = work_distribution(&uniform, &work_values(&h, &h)).unwrap();
        assert_eq!(
            d.atoms(),
            &[WorkAtom { w: -1.0, p: 0.25 }, WorkAtom { w: 0.0, p: 0.5 }, WorkAtom { w: 1.0, p: 0.25 }]
        );

        let distinct = work_values(&Hamiltonian::diagonal(&[0.0, 2.0]), &h);
        let d = work_distribution(&uniform, &distinct).unwrap();
        assert_eq!(d.atoms().len(), 4);
        assert!(d.atoms().windows(2).all(|w| w[0].w < w[1].w));

        let mut partial = work_values(&h, &h);
        partial.remove(&l(1, 1));
        assert!(matches!(work_distribution(&uniform, &partial), Err(SchemeError::MissingWork(_))));
    }

    #[test]
    fn average_work_examples() {
        let h = Hamiltonian::diagonal(&[0.0, 1.0]);
        let u = UnitaryOperator::rotation_family(FRAC_PI_4);
        let plus = PureQubitState::plus().density();
        assert!((avg_work_unmeasured(&plus, &u, &h, &h).unwrap() - 0.5).abs() < 1e-12);
        assert!(avg_work_tpm(&plus, &u, &h, &h).unwrap().abs() < 1e-12);
        assert!((avg_work_cm(&plus, &u, &h, &h, 1.0).unwrap() - 0.5).abs() < 1e-12);

        let excited = DensityMatrix::pure(&basis_ket(2, 1)).unwrap();
        let id = UnitaryOperator::identity(2);
        assert_eq!(avg_work_unmeasured(&excited, &id, &h, &h).unwrap(), 0.0);
        assert_eq!(avg_work_unmeasured(&plus, &u, &deg(), &deg()).unwrap(), 0.0);
        assert_eq!(avg_work_tpm(&plus, &u, &deg(), &deg()).unwrap(), 0.0);

        let mixed = DensityMatrix::new(ComplexMatrix::diag(&[0.3, 0.7])).unwrap();
        let a = avg_work_tpm(&mixed, &u, &h, &Hamiltonian::diagonal(&[0.5, -1.0])).unwrap();
        let b = avg_work_unmeasured(&mixed, &u, &h, &Hamiltonian::diagonal(&[0.5, -1.0])).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn coherence_examples() {
        assert_eq!(l1_coherence(&DensityMatrix::new(ComplexMatrix::diag(&[0.4, 0.6])).unwrap()), 0.0);
        assert!((l1_coherence(&PureQubitState::plus().density()) - 1.0).abs() < 1e-15);
        let c = l1_coherence(&PureQubitState::new(0.75).unwrap().density());
        assert!((c - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn cohering_power_examples() {
        assert_eq!(cohering_power_unitary(&UnitaryOperator::identity(2)), 0.0);
        assert_eq!(cohering_power_unitary(&UnitaryOperator::new(pauli_x()).unwrap()), 0.0);
        let c = cohering_power_unitary(&UnitaryOperator::rotation_family(16.7f64.to_radians()));
        assert!((c - 0.551).abs() < 1e-3);
        let c = cohering_power_unitary(&UnitaryOperator::rotation_family(FRAC_PI_4));
        assert!((c - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cohering_power_is_best_incoherent_input() {
        // Non-symmetric unitary: column sums differ from row sums.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (s, c) = 0.3f64.sin_cos();
        let m = ComplexMatrix::from_rows(&[
            &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)],
            &[c64(0.0, 0.0), c64(c, 0.0), c64(-s * h, s * h)],
            &[c64(0.0, 0.0), c64(s, 0.0), c64(c * h, -c * h)],
        ]);
        let u = UnitaryOperator::new(m).unwrap();
        let oracle = (0..3)
            .map(|k| {
                let rho = DensityMatrix::pure(&basis_ket(3, k)).unwrap().evolve(&u).unwrap();
                l1_coherence(&rho)
            })
            .fold(0.0, f64::max);
        assert!((cohering_power_unitary(&u) - oracle).abs() < 1e-12);
    }

    #[test]
    fn ideal_distribution_examples() {
        let d = ideal_final_dist(&UnitaryOperator::rotation_family(FRAC_PI_4), &PureQubitState::plus()).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-15 && d[1].abs() < 1e-15);
        let s = PureQubitState::new(0.3).unwrap();
        let d = ideal_final_dist(&UnitaryOperator::rotation_family(0.0), &s).unwrap();
        assert!((d[0] - 0.3).abs() < 1e-15 && (d[1] - 0.7).abs() < 1e-15);
        let d = ideal_final_dist(&UnitaryOperator::rotation_family(FRAC_PI_6), &PureQubitState::new(0.75).unwrap()).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-15 && d[1].abs() < 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        let u = UnitaryOperator::rotation_family(FRAC_PI_4);
        let plus = PureQubitState::plus();
        assert!((backaction_fidelity(Scheme::Cm, &u, &plus).unwrap() - 1.0).abs() < 1e-12);
        assert!((backaction_fidelity(Scheme::Tpm, &u, &plus).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);

        let u = UnitaryOperator::rotation_family(FRAC_PI_6);
        let s = PureQubitState::new(0.75).unwrap();
        assert!((backaction_fidelity(Scheme::Cm, &u, &s).unwrap() - 0.91734).abs() < 5e-6);
        assert!((backaction_fidelity(Scheme::Tpm, &u, &s).unwrap() - 0.79057).abs() < 5e-6);
    }

    #[test]
    fn closed_forms_match_numerics() {
        for k in 0..=10 {
            let theta = FRAC_PI_4 * k as f64 / 10.0;
            for m in 0..=10 {
                let s = PureQubitState::new(m as f64 / 10.0).unwrap();
                let u = UnitaryOperator::rotation_family(theta);
                let cm = backaction_fidelity(Scheme::Cm, &u, &s).unwrap();
                let tpm = backaction_fidelity(Scheme::Tpm, &u, &s).unwrap();
                assert!((cm - closed_form::fidelity_cm(s.p0(), theta)).abs() < 1e-10);
                assert!((tpm - closed_form::fidelity_tpm(s.p0(), theta)).abs() < 1e-10);
                let marg = qubit_table(Scheme::Cm, &u, &s).unwrap().final_marginal();
                assert!((marg[0] - closed_form::cm(s.p0(), theta)[0]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn povm_validation() {
        let p0 = HermitianOperator::new(ComplexMatrix::projector(&basis_ket(2, 0))).unwrap();
        assert!(matches!(Povm::new(vec![(l(0, 0), p0.clone())]), Err(SchemeError::Incomplete(_))));
        assert!(matches!(Povm::new(vec![]), Err(SchemeError::Empty)));
        let neg = HermitianOperator::new(ComplexMatrix::diag(&[-0.5, 0.0])).unwrap();
        let rest = HermitianOperator::new(ComplexMatrix::diag(&[1.5, 1.0])).unwrap();
        assert!(matches!(Povm::new(vec![(l(0, 0), neg), (l(0, 1), rest)]), Err(SchemeError::NotPositive { .. })));
        assert!(matches!(Povm::new(vec![(l(0, 0), p0.clone()), (l(0, 0), p0)]), Err(SchemeError::DuplicateLabel(_))));
    }

    #[test]
    fn table_validation_and_clamping() {
        let t = TransitionTable::new([(l(0, 0), 1.0 + 5e-10), (l(0, 1), -5e-10)]).unwrap();
        assert_eq!(t.get(l(0, 0)), 1.0);
        assert_eq!(t.get(l(0, 1)), 0.0);
        assert!(TransitionTable::new([(l(0, 0), 0.7), (l(0, 1), 0.2)]).is_err());
        assert!(TransitionTable::new([(l(0, 0), 1.2), (l(0, 1), -0.2)]).is_err());
    }

    #[test]
    fn json_schemas() {
        let povm = tpm_povm(&UnitaryOperator::identity(2), &deg(), &deg()).unwrap();
        let v = serde_json::to_value(&povm).unwrap();
        assert_eq!(v["effects"][1]["label"], serde_json::json!([0, 1]));
        assert_eq!(v["effects"][0]["matrix"][0][0], serde_json::json!([1.0, 0.0]));
        let back: Povm = serde_json::from_value(v).unwrap();
        assert_eq!(back, povm);

        let t = TransitionTable::new([(l(0, 0), 0.25), (l(1, 1), 0.75)]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"entries":[{"label":[0,0],"p":0.25},{"label":[1,1],"p":0.75}]}"#);
        assert_eq!(serde_json::from_str::<TransitionTable>(&s).unwrap(), t);
        assert!(serde_json::from_str::<TransitionTable>(r#"{"entries":[{"label":[0,0],"p":0.5}]}"#).is_err());
    }

    fn arb_unitary() -> impl Strategy<Value = UnitaryOperator> {
        // Euler-angle parameterization of U(2) up to global phase.
        (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU).prop_map(|(t, a, b)| {
            let (s, c) = (t / 2.0).sin_cos();
            let m = ComplexMatrix::from_rows(&[
                &[C64::from_polar(c, a), C64::from_polar(-s, b)],
                &[C64::from_polar(s, -b), C64::from_polar(c, -a)],
            ]);
            UnitaryOperator::new(m).unwrap()
        })
    }

    proptest! {
        #[test]
        fn completeness_and_positivity(u in arb_unitary()) {
            let h = deg();
            let tpm = tpm_povm(&u, &h, &h).unwrap();
            prop_assert!(tpm.completeness_residual() <= 1e-9);
            let lam = lambda_max(&u, &h, &h).unwrap();
            let cm = cm_povm(&u, &h, &h, lam).unwrap();
            prop_assert!(cm.completeness_residual() <= 1e-9);
            for (_, m) in cm.min_eigenvalues().unwrap() {
                prop_assert!(m >= -1e-10);
            }
        }

        #[test]
        fn tpm_average_work_two_routes(u in arb_unitary(), p0 in 0.0f64..1.0, phase in 0.0f64..6.3,
                                       e1 in -2.0f64..2.0, f0 in -2.0f64..2.0, f1 in -2.0f64..2.0) {
            let rho = PureQubitState::with_phase(p0, phase).unwrap().density();
            let h = Hamiltonian::diagonal(&[0.0, e1]);
            let hp = Hamiltonian::diagonal(&[f0, f1]);
            let a = avg_work_tpm(&rho, &u, &h, &hp).unwrap();
            let b = avg_work_tpm_dephased(&rho, &u, &h, &hp).unwrap();
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}
