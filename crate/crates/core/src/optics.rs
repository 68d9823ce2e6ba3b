//! Single-photon linear optics over a path ⊗ polarization mode space.
//!
//! A circuit is an ordered list of half-wave plates and beam displacers
//! followed by detectors. Qubit basis states are encoded as single modes; the
//! circuit is compiled into a POVM on that encoded space by the Born rule.
//! Polarization `H` encodes `|0⟩` and `V` encodes `|1⟩`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qmath::{c64, ComplexMatrix, HermitianOperator, UnitaryOperator, C64};
use crate::schemes::{OutcomeLabel, Povm, SchemeError, TransitionTable};

/// Amplitudes below this modulus count as zero when tracing which modes light reaches.
pub const REACH_TOL: f64 = 1e-12;
/// Slack on `V†V = I` for the encoded transfer matrix.
pub const ISOMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("path `{0}` is declared twice")]
    DuplicatePath(String),
    #[error("unknown path `{0}`")]
    UnknownPath(String),
    #[error("half-wave plate must act on at least one path")]
    EmptyPlate,
    #[error("half-wave plate angle {0} is not finite")]
    NonFiniteAngle(f64),
    #[error("beam displacer has no mappings")]
    EmptyDisplacer,
    #[error("displacement must change path (`{0}` -> `{0}`)")]
    SelfDisplacement(String),
    #[error("beam displacer mapping is not injective at `{0}`")]
    NotInjective(String),
    #[error("beam displacer moves horizontal light onto occupied path `{0}`")]
    Collision(String),
    #[error("relabeling target `{0}` clashes with an existing path")]
    RelabelClash(String),
    #[error("mode {0} is detected twice")]
    DuplicateDetector(Mode),
    #[error("detector on mode {0}, which does not exist after the last element")]
    DetectorOffSpace(Mode),
    #[error("modes reached by light but not detected: {}", list_modes(.0))]
    Undetected(Vec<Mode>),
    #[error("encoding is empty")]
    EmptyEncoding,
    #[error("encoded basis states are not orthonormal (deviation {0:.3e})")]
    EncodingNotOrthonormal(f64),
    #[error("encoding references mode {0} outside the declared paths")]
    EncodingOffSpace(Mode),
    #[error("circuit is not an isometry on the encoded space (deviation {0:.3e})")]
    NotIsometric(f64),
    #[error("input has amplitude on mode {0} outside the circuit's space")]
    InputOffSpace(Mode),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

fn list_modes(modes: &[Mode]) -> String {
    modes.iter().map(Mode::to_string).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn index(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::H => "H",
            Polarization::V => "V",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub path: String,
    pub pol: Polarization,
}

impl Mode {
    pub fn new(path: impl Into<String>, pol: Polarization) -> Self {
        Self { path: path.into(), pol }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.path, self.pol)
    }
}

/// Ordered path list; each path carries an `H` and a `V` mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSpace {
    paths: Vec<String>,
}

impl ModeSpace {
    pub fn new(paths: Vec<String>) -> Result<Self, OpticsError> {
        let mut seen = BTreeSet::new();
        for p in &paths {
            if !seen.insert(p.as_str()) {
                return Err(OpticsError::DuplicatePath(p.clone()));
            }
        }
        Ok(Self { paths })
    }

    pub fn paths(&self) -> &[String] {
        &self.paths
    }

    pub fn contains(&self, path: &str) -> bool {
        self.paths.iter().any(|p| p == path)
    }

    pub fn dim(&self) -> usize {
        2 * self.paths.len()
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        self.paths
            .iter()
            .flat_map(|p| [Mode::new(p.clone(), Polarization::H), Mode::new(p.clone(), Polarization::V)])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OpticalElement {
    /// Half-wave plate at `angle_deg` on the polarization of each listed path.
    Hwp { angle_deg: f64, paths: Vec<String> },
    /// Beam displacer: horizontal light on `from` moves to `to`; vertical light stays.
    Bd { map: Vec<(String, String)> },
    /// Renames paths; no physical action.
    Relabel { map: Vec<(String, String)> },
}

/// `[[cos 2x, sin 2x], [sin 2x, −cos 2x]]` for a plate at `x` degrees.
pub fn hwp_matrix(angle_deg: f64) -> UnitaryOperator {
    let (s, c) = (2.0 * angle_deg.to_radians()).sin_cos();
    UnitaryOperator::new(ComplexMatrix::from_real(&[&[c, s], &[s, -c]]))
        .expect("a reflection matrix is unitary")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub mode: Mode,
    pub label: OutcomeLabel,
}

/// Single-photon amplitudes over modes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModeAmplitudes {
    amplitudes: BTreeMap<Mode, C64>,
}

impl ModeAmplitudes {
    pub fn single(mode: Mode) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(mode, c64(1.0, 0.0));
        Self { amplitudes }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Mode, C64)>) -> Self {
        let mut out = Self::default();
        for (m, a) in pairs {
            *out.amplitudes.entry(m).or_default() += a;
        }
        out
    }

    pub fn get(&self, mode: &Mode) -> C64 {
        self.amplitudes.get(mode).copied().unwrap_or_default()
    }

    pub fn set(&mut self, mode: Mode, amp: C64) {
        self.amplitudes.insert(mode, amp);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Mode, &C64)> {
        self.amplitudes.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &ModeAmplitudes) -> C64 {
        self.amplitudes.iter().map(|(m, a)| a.conj() * other.get(m)).sum()
    }

    /// Modes with modulus above [`REACH_TOL`].
    pub fn support(&self) -> impl Iterator<Item = &Mode> {
        self.amplitudes.iter().filter(|(_, a)| a.norm() > REACH_TOL).map(|(m, _)| m)
    }

    pub fn max_abs_diff(&self, other: &ModeAmplitudes) -> f64 {
        let modes: BTreeSet<&Mode> = self.amplitudes.keys().chain(other.amplitudes.keys()).collect();
        modes.into_iter().map(|m| (self.get(m) - other.get(m)).norm()).fold(0.0, f64::max)
    }
}

/// A lossless circuit with its qubit encoding and detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalCircuit {
    space: ModeSpace,
    /// Basis state `k` enters on `encoding[k]`.
    encoding: Vec<Mode>,
    elements: Vec<OpticalElement>,
    detectors: Vec<Detector>,
}

fn apply_element(el: &OpticalElement, amps: &ModeAmplitudes) -> ModeAmplitudes {
    match el {
        OpticalElement::Hwp { angle_deg, paths } => {
            let m = hwp_matrix(*angle_deg);
            let mut out = amps.clone();
            for p in paths {
                let h = amps.get(&Mode::new(p.clone(), Polarization::H));
                let v = amps.get(&Mode::new(p.clone(), Polarization::V));
                let mm = m.matrix();
                out.set(Mode::new(p.clone(), Polarization::H), mm.get(0, 0) * h + mm.get(0, 1) * v);
                out.set(Mode::new(p.clone(), Polarization::V), mm.get(1, 0) * h + mm.get(1, 1) * v);
            }
            out
        }
        OpticalElement::Bd { map } => {
            let mut out = amps.clone();
            let moved: Vec<(String, C64)> = map
                .iter()
                .map(|(from, to)| (to.clone(), amps.get(&Mode::new(from.clone(), Polarization::H))))
                .collect();
            for (from, _) in map {
                out.amplitudes.remove(&Mode::new(from.clone(), Polarization::H));
            }
            for (to, a) in moved {
                *out.amplitudes.entry(Mode::new(to, Polarization::H)).or_default() += a;
            }
            out
        }
        OpticalElement::Relabel { map } => {
            let rename: BTreeMap<&str, &str> = map.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            ModeAmplitudes::from_pairs(amps.amplitudes.iter().map(|(m, a)| {
                let path = rename.get(m.path.as_str()).map_or(m.path.clone(), |s| s.to_string());
                (Mode::new(path, m.pol), *a)
            }))
        }
    }
}

/// Path list after each element, with structural checks.
fn evolve_paths(space: &ModeSpace, elements: &[OpticalElement]) -> Result<Vec<String>, OpticsError> {
    let mut paths: Vec<String> = space.paths().to_vec();
    let has = |paths: &[String], p: &str| paths.iter().any(|q| q == p);
    for el in elements {
        match el {
            OpticalElement::Hwp { angle_deg, paths: acting } => {
                if !angle_deg.is_finite() {
                    return Err(OpticsError::NonFiniteAngle(*angle_deg));
                }
                if acting.is_empty() {
                    return Err(OpticsError::EmptyPlate);
                }
                if let Some(p) = acting.iter().find(|p| !has(&paths, p)) {
                    return Err(OpticsError::UnknownPath(p.clone()));
                }
            }
            OpticalElement::Bd { map } => {
                if map.is_empty() {
                    return Err(OpticsError::EmptyDisplacer);
                }
                let mut froms = BTreeSet::new();
                let mut tos = BTreeSet::new();
                for (from, to) in map {
                    if from == to {
                        return Err(OpticsError::SelfDisplacement(from.clone()));
                    }
                    if !has(&paths, from) {
                        return Err(OpticsError::UnknownPath(from.clone()));
                    }
                    if !froms.insert(from.as_str()) {
                        return Err(OpticsError::NotInjective(from.clone()));
                    }
                    if !tos.insert(to.as_str()) {
                        return Err(OpticsError::NotInjective(to.clone()));
                    }
                }
                for (_, to) in map {
                    if !has(&paths, to) {
                        paths.push(to.clone());
                    }
                }
            }
            OpticalElement::Relabel { map } => {
                let froms: BTreeSet<&str> = map.iter().map(|(a, _)| a.as_str()).collect();
                let mut tos = BTreeSet::new();
                for (from, to) in map {
                    if !has(&paths, from) {
                        return Err(OpticsError::UnknownPath(from.clone()));
                    }
                    if !tos.insert(to.as_str()) {
                        return Err(OpticsError::NotInjective(to.clone()));
                    }
                    if has(&paths, to) && !froms.contains(to.as_str()) {
                        return Err(OpticsError::RelabelClash(to.clone()));
                    }
                }
                let rename: BTreeMap<&str, &str> = map.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
                paths = paths
                    .iter()
                    .map(|p| rename.get(p.as_str()).map_or(p.clone(), |s| s.to_string()))
                    .collect();
            }
        }
    }
    Ok(paths)
}

impl OpticalCircuit {
    /// Builds and validates a circuit: structure, encoding, collisions,
    /// isometry on the encoded space and full detector coverage.
    pub fn new(
        space: ModeSpace,
        encoding: Vec<Mode>,
        elements: Vec<OpticalElement>,
        detectors: Vec<Detector>,
    ) -> Result<Self, OpticsError> {
        let final_paths = evolve_paths(&space, &elements)?;
        if encoding.is_empty() {
            return Err(OpticsError::EmptyEncoding);
        }
        let mut seen = BTreeSet::new();
        for m in &encoding {
            if !space.contains(&m.path) {
                return Err(OpticsError::EncodingOffSpace(m.clone()));
            }
            if !seen.insert(m) {
                return Err(OpticsError::EncodingNotOrthonormal(1.0));
            }
        }
        let mut detected = BTreeSet::new();
        for d in &detectors {
            if !final_paths.contains(&d.mode.path) {
                return Err(OpticsError::DetectorOffSpace(d.mode.clone()));
            }
            if !detected.insert(d.mode.clone()) {
                return Err(OpticsError::DuplicateDetector(d.mode.clone()));
            }
        }
        let circuit = Self { space, encoding, elements, detectors };
        let inputs = circuit.default_encoding();
        circuit.trace_outputs(&inputs)?;
        Ok(circuit)
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn encoding(&self) -> &[Mode] {
        &self.encoding
    }

    pub fn elements(&self) -> &[OpticalElement] {
        &self.elements
    }

    pub fn detectors(&self) -> &[Detector] {
        &self.detectors
    }

    /// Paths present after the last element, in creation order.
    pub fn output_space(&self) -> ModeSpace {
        let paths = evolve_paths(&self.space, &self.elements).expect("validated at construction");
        ModeSpace { paths }
    }

    /// Outcome labels in ascending order.
    pub fn labels(&self) -> Vec<OutcomeLabel> {
        let set: BTreeSet<OutcomeLabel> = self.detectors.iter().map(|d| d.label).collect();
        set.into_iter().collect()
    }

    pub fn default_encoding(&self) -> Vec<ModeAmplitudes> {
        self.encoding.iter().cloned().map(ModeAmplitudes::single).collect()
    }

    /// Encoded qubit state as mode amplitudes.
    pub fn encode(&self, ket: &[C64]) -> Result<ModeAmplitudes, OpticsError> {
        if ket.len() != self.encoding.len() {
            return Err(SchemeError::Dimension(format!(
                "state of dimension {} for an encoding of {} basis states",
                ket.len(),
                self.encoding.len()
            ))
            .into());
        }
        Ok(ModeAmplitudes::from_pairs(self.encoding.iter().cloned().zip(ket.iter().copied())))
    }

    /// Propagates the inputs element by element, rejecting displacements onto
    /// occupied modes, then checks isometry and detector coverage.
    fn trace_outputs(&self, inputs: &[ModeAmplitudes]) -> Result<Vec<ModeAmplitudes>, OpticsError> {
        let mut states = inputs.to_vec();
        for el in &self.elements {
            if let OpticalElement::Bd { map } = el {
                let froms: BTreeSet<&str> = map.iter().map(|(a, _)| a.as_str()).collect();
                for (_, to) in map {
                    if froms.contains(to.as_str()) {
                        continue;
                    }
                    let target = Mode::new(to.clone(), Polarization::H);
                    if states.iter().any(|s| s.get(&target).norm() > REACH_TOL) {
                        return Err(OpticsError::Collision(to.clone()));
                    }
                }
            }
            states = states.iter().map(|s| apply_element(el, s)).collect();
        }
        let n = states.len();
        let mut dev: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let target = if a == b { 1.0 } else { 0.0 };
                dev = dev.max((states[a].inner(&states[b]) - c64(target, 0.0)).norm());
            }
        }
        if dev > ISOMETRY_TOL {
            return Err(OpticsError::NotIsometric(dev));
        }
        let detected: BTreeSet<&Mode> = self.detectors.iter().map(|d| &d.mode).collect();
        let missing: BTreeSet<Mode> = states
            .iter()
            .flat_map(|s| s.support().filter(|m| !detected.contains(m)).cloned().collect::<Vec<_>>())
            .collect();
        if !missing.is_empty() {
            return Err(OpticsError::Undetected(missing.into_iter().collect()));
        }
        Ok(states)
    }

    /// Applies every element in order. Norm is preserved for inputs in the encoded span.
    pub fn propagate(&self, input: &ModeAmplitudes) -> Result<ModeAmplitudes, OpticsError> {
        if let Some((m, _)) = input.iter().find(|(m, a)| !self.space.contains(&m.path) && a.norm() > 0.0) {
            return Err(OpticsError::InputOffSpace(m.clone()));
        }
        let out = self.elements.iter().fold(input.clone(), |s, el| apply_element(el, &s));
        let detected: BTreeSet<&Mode> = self.detectors.iter().map(|d| &d.mode).collect();
        let missing: Vec<Mode> = out.support().filter(|m| !detected.contains(m)).cloned().collect();
        if !missing.is_empty() {
            return Err(OpticsError::Undetected(missing));
        }
        Ok(out)
    }

    /// Click probabilities per label for an output field.
    pub fn detect(&self, output: &ModeAmplitudes) -> Result<TransitionTable, OpticsError> {
        let mut probs: BTreeMap<OutcomeLabel, f64> = self.labels().into_iter().map(|l| (l, 0.0)).collect();
        for d in &self.detectors {
            *probs.get_mut(&d.label).expect("label collected above") += output.get(&d.mode).norm_sqr();
        }
        Ok(TransitionTable::new(probs)?)
    }

    /// Transfer matrix from the encoded basis to the output modes (rows in `output_space` order).
    pub fn transfer_matrix(&self) -> ComplexMatrix {
        let outs = self.trace_outputs(&self.default_encoding()).expect("validated at construction");
        let modes: Vec<Mode> = self.output_space().modes().collect();
        let mut data = Vec::with_capacity(modes.len() * outs.len());
        for m in &modes {
            for o in &outs {
                data.push(o.get(m));
            }
        }
        ComplexMatrix::new(modes.len(), outs.len(), data).expect("amplitudes are finite")
    }
}

/// Compiles detectors into effects `K†K`, where row `r` of `K` holds the
/// amplitudes each encoded basis state leaves on the `r`-th detector mode of a label.
pub fn compile_to_povm(circuit: &OpticalCircuit, encoding: &[ModeAmplitudes]) -> Result<Povm, OpticsError> {
    if encoding.is_empty() {
        return Err(OpticsError::EmptyEncoding);
    }
    let mut dev: f64 = 0.0;
    for (a, u) in encoding.iter().enumerate() {
        for (b, v) in encoding.iter().enumerate() {
            let target = if a == b { 1.0 } else { 0.0 };
            dev = dev.max((u.inner(v) - c64(target, 0.0)).norm());
        }
    }
    if dev > ISOMETRY_TOL {
        return Err(OpticsError::EncodingNotOrthonormal(dev));
    }
    for enc in encoding {
        if let Some(m) = enc.support().find(|m| !circuit.space.contains(&m.path)) {
            return Err(OpticsError::EncodingOffSpace(m.clone()));
        }
    }
    let outs = circuit.trace_outputs(encoding)?;
    let d = encoding.len();
    let mut effects = Vec::new();
    for label in circuit.labels() {
        let modes: Vec<&Mode> = circuit.detectors.iter().filter(|x| x.label == label).map(|x| &x.mode).collect();
        let data = modes.iter().flat_map(|m| outs.iter().map(move |o| o.get(m))).collect();
        let k = ComplexMatrix::new(modes.len(), d, data).expect("amplitudes are finite");
        let effect = &k.adjoint() * &k;
        effects.push((label, HermitianOperator::new(effect).map_err(SchemeError::from)?));
    }
    Ok(Povm::new(effects)?)
}

/// [`compile_to_povm`] with the circuit's own single-mode encoding.
pub fn compile(circuit: &OpticalCircuit) -> Result<Povm, OpticsError> {
    compile_to_povm(circuit, &circuit.default_encoding())
}

/// How the β-plate angle of the collective-measurement module maps to θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BetaConvention {
    /// `cos² 2β = 2 sin² θ`.
    Text,
    /// `sin² 2β = 2 sin² θ`; reproduces the tabulated (β, θ) pairs.
    #[default]
    Table,
}

impl BetaConvention {
    /// θ in radians for a plate at `beta_deg`.
    pub fn theta(self, beta_deg: f64) -> f64 {
        let b = 2.0 * beta_deg.to_radians();
        let amp = match self {
            BetaConvention::Text => b.cos(),
            BetaConvention::Table => b.sin(),
        };
        (amp.abs() / std::f64::consts::SQRT_2).min(1.0).asin()
    }

    /// Plate angle in `[0°, 45°]` realizing `theta` (radians, in `[0, π/4]`).
    pub fn beta_deg(self, theta: f64) -> f64 {
        let x = (std::f64::consts::SQRT_2 * theta.sin()).clamp(-1.0, 1.0);
        match self {
            BetaConvention::Text => x.acos().to_degrees() / 2.0,
            BetaConvention::Table => x.asin().to_degrees() / 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BetaConvention::Text => "text",
            BetaConvention::Table => "table",
        }
    }
}

impl std::str::FromStr for BetaConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(BetaConvention::Text),
            "table" => Ok(BetaConvention::Table),
            other => Err(format!("unknown beta convention `{other}` (expected text or table)")),
        }
    }
}

fn s(x: &str) -> String {
    x.to_string()
}

fn hwp(angle_deg: f64, paths: &[&str]) -> OpticalElement {
    OpticalElement::Hwp { angle_deg, paths: paths.iter().map(|p| s(p)).collect() }
}

fn bd(map: &[(&str, &str)]) -> OpticalElement {
    OpticalElement::Bd { map: map.iter().map(|(a, b)| (s(a), s(b))).collect() }
}

fn det(path: &str, pol: Polarization, i: usize, jp: usize) -> Detector {
    Detector { mode: Mode::new(path, pol), label: OutcomeLabel::new(i, jp) }
}

fn two_copy_encoding() -> Vec<Mode> {
    use Polarization::*;
    vec![Mode::new("p0", H), Mode::new("p0", V), Mode::new("p1", H), Mode::new("p1", V)]
}

/// Computational-basis readout of the path ⊗ polarization qubit pair.
fn two_copy_readout() -> Vec<Detector> {
    use Polarization::*;
    vec![det("p0", H, 0, 0), det("p0", V, 0, 1), det("p1", H, 1, 0), det("p1", V, 1, 1)]
}

/// Two-copy preparation: a photon entering on `p1:H` leaves as
/// `|Φ⟩_path ⊗ |Φ⟩_pol` with `|Φ⟩ = cos 2α|0⟩ + sin 2α|1⟩`.
///
/// Elements: H₁(α) on p1, BD₁ moving H from p1 to p0, H₂(45°) on p1, H₃(α) on both paths.
pub fn build_module_a(alpha_deg: f64) -> OpticalCircuit {
    OpticalCircuit::new(
        ModeSpace::new(vec![s("p0"), s("p1")]).expect("distinct"),
        vec![Mode::new("p1", Polarization::H), Mode::new("p1", Polarization::V)],
        vec![hwp(alpha_deg, &["p1"]), bd(&[("p1", "p0")]), hwp(45.0, &["p1"]), hwp(alpha_deg, &["p0", "p1"])],
        two_copy_readout(),
    )
    .expect("module A layout is valid for every angle")
}

/// Basis state fed into [`build_module_a`].
pub fn module_a_input() -> ModeAmplitudes {
    ModeAmplitudes::single(Mode::new("p1", Polarization::H))
}

/// One-copy preparation on path `m1` with H₄(α), feeding [`build_module_c`].
pub fn build_module_a_single(alpha_deg: f64) -> OpticalCircuit {
    use Polarization::*;
    OpticalCircuit::new(
        ModeSpace::new(vec![s("m0"), s("m1")]).expect("distinct"),
        vec![Mode::new("m1", H), Mode::new("m1", V)],
        vec![hwp(alpha_deg, &["m1"])],
        vec![det("m1", H, 0, 0), det("m1", V, 0, 1)],
    )
    .expect("one-copy preparation is valid for every angle")
}

pub fn module_a_single_input() -> ModeAmplitudes {
    ModeAmplitudes::single(Mode::new("m1", Polarization::H))
}

/// Collective measurement on the path (first copy) ⊗ polarization (second copy) encoding.
///
/// Path-0 branch: H₈(67.5°) sends `|+⟩ → V`, `|−⟩ → H`; BD₄ splits them,
/// H₉(45°) turns the `|+⟩` part horizontal, the β-plate H₁₀ rotates the `|−⟩`
/// part and BD₅ separates what the plate left horizontal. Path-1 branch
/// mirrors it with H₅(22.5°), BD₂, H₆(45°), β-H₇, BD₃ and the roles of `|±⟩`
/// swapped. The convention decides which output port of each β-plate counts
/// as the `|∓⟩`-only outcome (01′ / 10′).
pub fn build_module_b(beta_deg: f64, convention: BetaConvention) -> OpticalCircuit {
    use Polarization::*;
    let elements = vec![
        hwp(67.5, &["p0"]),
        bd(&[("p0", "p0a")]),
        hwp(45.0, &["p0"]),
        hwp(beta_deg, &["p0a"]),
        bd(&[("p0", "p0a"), ("p0a", "p0b")]),
        hwp(22.5, &["p1"]),
        bd(&[("p1", "p1a")]),
        hwp(45.0, &["p1"]),
        hwp(beta_deg, &["p1a"]),
        bd(&[("p1", "p1a"), ("p1a", "p1b")]),
    ];
    let detectors = match convention {
        BetaConvention::Text => vec![
            det("p0a", H, 0, 0),
            det("p0a", V, 0, 0),
            det("p0b", H, 0, 1),
            det("p1b", H, 1, 0),
            det("p1a", H, 1, 1),
            det("p1a", V, 1, 1),
        ],
        BetaConvention::Table => vec![
            det("p0a", H, 0, 0),
            det("p0b", H, 0, 0),
            det("p0a", V, 0, 1),
            det("p1a", V, 1, 0),
            det("p1a", H, 1, 1),
            det("p1b", H, 1, 1),
        ],
    };
    OpticalCircuit::new(
        ModeSpace::new(vec![s("p0"), s("p1")]).expect("distinct"),
        two_copy_encoding(),
        elements,
        detectors,
    )
    .expect("module B layout is valid for every angle")
}

/// Two projective polarization measurements around `U(2γ)`: BD₆ splits the
/// input by polarization, γ-H₁₁ and γ-H₁₂ act on each branch, BD₇ analyses
/// both branches.
pub fn build_module_c(gamma_deg: f64) -> OpticalCircuit {
    use Polarization::*;
    OpticalCircuit::new(
        ModeSpace::new(vec![s("m0"), s("m1")]).expect("distinct"),
        vec![Mode::new("m1", H), Mode::new("m1", V)],
        vec![
            bd(&[("m1", "m0")]),
            hwp(gamma_deg, &["m0"]),
            hwp(gamma_deg, &["m1"]),
            bd(&[("m0", "m0h"), ("m1", "m1h")]),
        ],
        vec![det("m0h", H, 0, 0), det("m0", V, 0, 1), det("m1h", H, 1, 0), det("m1", V, 1, 1)],
    )
    .expect("module C layout is valid for every angle")
}
