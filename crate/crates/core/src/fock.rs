//! Basis of the four-rail, two-atom system and the operators acting on it.
//!
//! A [`BasisState`] records the photon occupation of the rails `x1, x2, y1,
//! y2` and the level of the two cavity atoms. The [`StateSpace`] is not a
//! hard-coded list: it is the set of configurations reachable from the four
//! dual-rail computational inputs when the gates of the array are applied in
//! order (see [`enumerate_states`]).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, CMatrix, CVector, ONE, ZERO};

/// Upper bound on photons plus atomic excitations anywhere in the array.
pub const MAX_TOTAL_EXCITATION: u8 = 2;

#[derive(Debug, Error, PartialEq)]
pub enum FockError {
    #[error("basis state {0} is not part of the state space")]
    NotInSpace(BasisState),
    #[error("state vector has norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("density matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("density matrix has negative eigenvalue {0:e}")]
    NegativeEigenvalue(f64),
    #[error("density matrix trace {0} outside (0, 1]")]
    BadTrace(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rail {
    X1,
    X2,
    Y1,
    Y2,
}

impl Rail {
    pub const ALL: [Rail; 4] = [Rail::X1, Rail::X2, Rail::Y1, Rail::Y2];

    fn index(self) -> usize {
        match self {
            Rail::X1 => 0,
            Rail::X2 => 1,
            Rail::Y1 => 2,
            Rail::Y2 => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Atom {
    A1,
    A2,
}

impl Atom {
    pub const ALL: [Atom; 2] = [Atom::A1, Atom::A2];

    fn index(self) -> usize {
        match self {
            Atom::A1 => 0,
            Atom::A2 => 1,
        }
    }
}

/// Two-level atom state; `G < E` fixes the lexicographic basis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Level {
    #[default]
    G,
    E,
}

/// Rails mixed by the two beamsplitters.
pub const BEAMSPLITTER_PAIR: (Rail, Rail) = (Rail::X1, Rail::Y1);

/// Cavity atoms and the rail each one couples to.
pub const CAVITIES: [(Atom, Rail); 2] = [(Atom::A1, Rail::X1), (Atom::A2, Rail::Y1)];

/// One configuration of the closed system: four occupations, two atom levels.
///
/// Ordering is lexicographic on `(x1, x2, y1, y2, a1, a2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(into = "[u8; 6]", try_from = "[u8; 6]")]
pub struct BasisState {
    pub photons: [u8; 4],
    pub atoms: [Level; 2],
}

impl BasisState {
    pub fn new(x1: u8, x2: u8, y1: u8, y2: u8, a1: Level, a2: Level) -> Self {
        Self { photons: [x1, x2, y1, y2], atoms: [a1, a2] }
    }

    /// All atoms in the ground state.
    pub fn photonic(x1: u8, x2: u8, y1: u8, y2: u8) -> Self {
        Self::new(x1, x2, y1, y2, Level::G, Level::G)
    }

    pub fn occupation(&self, rail: Rail) -> u8 {
        self.photons[rail.index()]
    }

    pub fn level(&self, atom: Atom) -> Level {
        self.atoms[atom.index()]
    }

    pub fn with_occupation(mut self, rail: Rail, n: u8) -> Self {
        self.photons[rail.index()] = n;
        self
    }

    pub fn with_level(mut self, atom: Atom, level: Level) -> Self {
        self.atoms[atom.index()] = level;
        self
    }

    pub fn photon_number(&self) -> u8 {
        self.photons.iter().sum()
    }

    pub fn atomic_excitations(&self) -> u8 {
        self.atoms.iter().filter(|&&l| l == Level::E).count() as u8
    }

    pub fn total_excitation(&self) -> u8 {
        self.photon_number() + self.atomic_excitations()
    }

    pub fn atoms_ground(&self) -> bool {
        self.atomic_excitations() == 0
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lv = |l: Level| if l == Level::G { 'g' } else { 'e' };
        let [x1, x2, y1, y2] = self.photons;
        write!(f, "|{x1}{x2}{y1}{y2};{}{}>", lv(self.atoms[0]), lv(self.atoms[1]))
    }
}

impl From<BasisState> for [u8; 6] {
    fn from(s: BasisState) -> Self {
        let a = |l: Level| u8::from(l == Level::E);
        let [x1, x2, y1, y2] = s.photons;
        [x1, x2, y1, y2, a(s.atoms[0]), a(s.atoms[1])]
    }
}

impl TryFrom<[u8; 6]> for BasisState {
    type Error = String;

    fn try_from(v: [u8; 6]) -> Result<Self, Self::Error> {
        let lv = |x: u8| match x {
            0 => Ok(Level::G),
            1 => Ok(Level::E),
            other => Err(format!("atom level must be 0 or 1, got {other}")),
        };
        Ok(Self::new(v[0], v[1], v[2], v[3], lv(v[4])?, lv(v[5])?))
    }
}

/// Expansion of `|n, m>` on a rail pair under the 50/50 beamsplitter
/// `a1† -> (a1† + a2†)/√2`, `a2† -> (a1† - a2†)/√2`.
///
/// Returns `(p, q, amplitude)` for every output occupation with nonzero
/// amplitude.
pub fn beamsplitter_expansion(n: u8, m: u8) -> Vec<(u8, u8, f64)> {
    let mut acc: BTreeMap<(u8, u8), f64> = BTreeMap::new();
    let norm = (factorial(n) * factorial(m)).sqrt() * 2f64.powf(f64::from(n + m) / 2.0);
    for i in 0..=n {
        for j in 0..=m {
            let p = i + j;
            let q = (n - i) + (m - j);
            let sign = if (m - j).is_multiple_of(2) { 1.0 } else { -1.0 };
            let coef = binomial(n, i) * binomial(m, j) * sign * (factorial(p) * factorial(q)).sqrt() / norm;
            *acc.entry((p, q)).or_insert(0.0) += coef;
        }
    }
    acc.into_iter()
        .filter(|(_, a)| a.abs() > 1e-14)
        .map(|((p, q), a)| (p, q, a))
        .collect()
}

fn factorial(n: u8) -> f64 {
    (1..=u32::from(n)).map(f64::from).product()
}

fn binomial(n: u8, k: u8) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Elementary processes used to grow the reachable basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    BeamSplitter(Rail, Rail),
    /// Excitation exchange `σ⁺a + a†σ` between an atom and a rail.
    JcExchange(Atom, Rail),
    PhotonLeak(Rail),
    AtomDecay(Atom),
}

impl Generator {
    /// Basis states reached from `s` with nonzero amplitude.
    pub fn images(&self, s: &BasisState) -> Vec<BasisState> {
        match *self {
            Generator::BeamSplitter(r1, r2) => beamsplitter_expansion(s.occupation(r1), s.occupation(r2))
                .into_iter()
                .map(|(p, q, _)| s.with_occupation(r1, p).with_occupation(r2, q))
                .collect(),
            Generator::JcExchange(atom, rail) => {
                let n = s.occupation(rail);
                match s.level(atom) {
                    Level::G if n > 0 => vec![s.with_occupation(rail, n - 1).with_level(atom, Level::E)],
                    Level::E => vec![s.with_occupation(rail, n + 1).with_level(atom, Level::G)],
                    Level::G => vec![],
                }
            }
            Generator::PhotonLeak(rail) => {
                let n = s.occupation(rail);
                if n > 0 {
                    vec![s.with_occupation(rail, n - 1)]
                } else {
                    vec![]
                }
            }
            Generator::AtomDecay(atom) => match s.level(atom) {
                Level::E => vec![s.with_level(atom, Level::G)],
                Level::G => vec![],
            },
        }
    }
}

/// One step of the reachability computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stage {
    /// Single application of each generator to the states produced by the
    /// previous stage (an instantaneous gate).
    Apply(Vec<Generator>),
    /// Repeated application until nothing new appears (continuous dynamics).
    Close(Vec<Generator>),
}

/// The four computational inputs `|qx qy>` in the order 00, 01, 10, 11.
///
/// Logical 1 places the photon on rail 1 of the pair, logical 0 on rail 2.
pub fn computational_states() -> [BasisState; 4] {
    [(0, 0), (0, 1), (1, 0), (1, 1)].map(|(qx, qy)| encode_bits(qx, qy))
}

fn encode_bits(qx: u8, qy: u8) -> BasisState {
    BasisState::photonic(qx, 1 - qx, qy, 1 - qy)
}

/// Generators of the gate array in pipeline order: first beamsplitter, cavity
/// dynamics with photon leakage (and optional atomic decay), second
/// beamsplitter.
pub fn array_stages(with_atom_decay: bool) -> Vec<Stage> {
    let (r1, r2) = BEAMSPLITTER_PAIR;
    let mut ns = Vec::new();
    for (atom, rail) in CAVITIES {
        ns.push(Generator::JcExchange(atom, rail));
        ns.push(Generator::PhotonLeak(rail));
        if with_atom_decay {
            ns.push(Generator::AtomDecay(atom));
        }
    }
    vec![
        Stage::Apply(vec![Generator::BeamSplitter(r1, r2)]),
        Stage::Close(ns),
        Stage::Apply(vec![Generator::BeamSplitter(r1, r2)]),
    ]
}

/// Reachable basis from `seeds` through `stages`, in gate order.
///
/// The result is the union of the seeds and of every stage's output. States
/// whose total excitation exceeds `max_total_excitation` are discarded.
pub fn enumerate_states(max_total_excitation: u8, seeds: &[BasisState], stages: &[Stage]) -> StateSpace {
    let keep = |s: &BasisState| s.total_excitation() <= max_total_excitation;
    let mut all: BTreeSet<BasisState> = seeds.iter().copied().filter(keep).collect();
    let mut live: BTreeSet<BasisState> = all.clone();
    for stage in stages {
        live = match stage {
            Stage::Apply(gens) => live
                .iter()
                .flat_map(|s| gens.iter().flat_map(move |g| g.images(s)))
                .filter(keep)
                .collect(),
            Stage::Close(gens) => {
                let mut closed = live.clone();
                let mut frontier: Vec<BasisState> = live.iter().copied().collect();
                while let Some(s) = frontier.pop() {
                    for g in gens {
                        for img in g.images(&s) {
                            if keep(&img) && closed.insert(img) {
                                frontier.push(img);
                            }
                        }
                    }
                }
                closed
            }
        };
        all.extend(live.iter().copied());
    }
    StateSpace::from_states(all)
}

/// Ordered basis with a reverse index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct StateSpace {
    states: Vec<BasisState>,
    #[serde(skip)]
    index: BTreeMap<BasisState, usize>,
}

impl StateSpace {
    pub fn from_states(states: impl IntoIterator<Item = BasisState>) -> Self {
        let states: Vec<BasisState> = states.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Self { states, index }
    }

    /// Reachable basis of the C-Sign array (photon leakage included).
    pub fn c_sign_array() -> Self {
        enumerate_states(MAX_TOTAL_EXCITATION, &computational_states(), &array_stages(false))
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> BasisState {
        self.states[i]
    }

    pub fn index_of(&self, s: &BasisState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn contains(&self, s: &BasisState) -> bool {
        self.index.contains_key(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("basis states always serialize")
    }

    pub fn from_json(json: &str) -> serde_json::Result<Self> {
        let states: Vec<BasisState> = serde_json::from_str(json)?;
        Ok(Self::from_states(states))
    }

    /// Distinct photon configurations, sorted; the basis after tracing out
    /// the atoms.
    pub fn photonic_states(&self) -> Vec<[u8; 4]> {
        self.states.iter().map(|s| s.photons).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Basis vector for `s`.
    pub fn basis_vector(&self, s: &BasisState) -> Result<CVector, FockError> {
        let i = self.index_of(s).ok_or(FockError::NotInSpace(*s))?;
        let mut v = CVector::zeros(self.dim());
        v[i] = ONE;
        Ok(v)
    }

    /// Matrix of a map that sends each basis state to at most one other basis
    /// state with a real amplitude; targets outside the space are dropped.
    fn sparse_map(&self, f: impl Fn(&BasisState) -> Option<(BasisState, f64)>) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for (col, s) in self.states.iter().enumerate() {
            if let Some((target, amp)) = f(s) {
                if let Some(row) = self.index_of(&target) {
                    m[(row, col)] = ONE * amp;
                }
            }
        }
        m
    }
}

/// Photon annihilation on `rail`: `<s'|a|s> = √n` with `s'` one photon lower.
pub fn annihilation_matrix(rail: Rail, space: &StateSpace) -> CMatrix {
    space.sparse_map(|s| {
        let n = s.occupation(rail);
        (n > 0).then(|| (s.with_occupation(rail, n - 1), f64::from(n).sqrt()))
    })
}

/// Conjugate transpose of [`annihilation_matrix`].
pub fn creation_matrix(rail: Rail, space: &StateSpace) -> CMatrix {
    annihilation_matrix(rail, space).adjoint()
}

/// `σ = |g><e|` on `atom`.
pub fn atom_lowering_matrix(atom: Atom, space: &StateSpace) -> CMatrix {
    space.sparse_map(|s| (s.level(atom) == Level::E).then(|| (s.with_level(atom, Level::G), 1.0)))
}

pub fn atom_raising_matrix(atom: Atom, space: &StateSpace) -> CMatrix {
    atom_lowering_matrix(atom, space).adjoint()
}

/// Diagonal matrix of `f(state)`.
pub fn diagonal_matrix(space: &StateSpace, f: impl Fn(&BasisState) -> f64) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(space.dim(), space.states().iter().map(|s| ONE * f(s))))
}

pub fn number_matrix(rail: Rail, space: &StateSpace) -> CMatrix {
    diagonal_matrix(space, |s| f64::from(s.occupation(rail)))
}

/// Photons plus atomic excitations.
pub fn excitation_matrix(space: &StateSpace) -> CMatrix {
    diagonal_matrix(space, |s| f64::from(s.total_excitation()))
}

/// Projector onto configurations with at least one excited atom.
pub fn atom_excited_projector(space: &StateSpace) -> CMatrix {
    diagonal_matrix(space, |s| if s.atoms_ground() { 0.0 } else { 1.0 })
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState(CVector);

impl PureState {
    pub fn new(v: CVector) -> Result<Self, FockError> {
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(FockError::NotNormalized(norm));
        }
        Ok(Self(v))
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn into_inner(self) -> CVector {
        self.0
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix(&self.0 * self.0.adjoint())
    }
}

/// Dual-rail encoding of `|qx qy>` with both atoms in the ground state.
pub fn dual_rail_encode(qx: bool, qy: bool, space: &StateSpace) -> Result<PureState, FockError> {
    let s = encode_bits(u8::from(qx), u8::from(qy));
    PureState::new(space.basis_vector(&s)?)
}

/// Hermitian, positive, trace at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self, FockError> {
        assert!(m.is_square(), "density matrix must be square");
        let dev = linalg::hermitian_deviation(&m);
        if dev > 1e-12 {
            return Err(FockError::NotHermitian(dev));
        }
        let tr = linalg::trace(&m).re;
        if !(tr > 0.0 && tr <= 1.0 + 1e-12) {
            return Err(FockError::BadTrace(tr));
        }
        let min = linalg::eigvalsh(&m)[0];
        if min < -1e-9 {
            return Err(FockError::NegativeEigenvalue(min));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix produced by trusted evolution code without checks.
    pub fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.0).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::eigvalsh(&self.0)[0]
    }

    /// `tr(ρ P)` for a Hermitian observable.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        linalg::trace(&(&self.0 * op)).re
    }
}

/// Reduced photonic density matrix, basis [`StateSpace::photonic_states`].
///
/// `ρ_ph[p, p'] = Σ_atoms ρ[(p, atoms), (p', atoms)]`.
pub fn partial_trace_atoms(space: &StateSpace, rho: &DensityMatrix) -> DensityMatrix {
    let photonic = space.photonic_states();
    let pindex: BTreeMap<[u8; 4], usize> = photonic.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut by_atoms: BTreeMap<[Level; 2], Vec<(usize, usize)>> = BTreeMap::new();
    for (i, s) in space.states().iter().enumerate() {
        by_atoms.entry(s.atoms).or_default().push((i, pindex[&s.photons]));
    }
    let d = photonic.len();
    let mut out = CMatrix::from_element(d, d, ZERO);
    let m = rho.matrix();
    for group in by_atoms.values() {
        for &(i, pi) in group {
            for &(j, pj) in group {
                out[(pi, pj)] += m[(i, j)];
            }
        }
    }
    DensityMatrix(out)
}

/// Embedding of a purely photonic operator (atoms untouched) into `space`.
///
/// `u_photonic` is indexed by [`StateSpace::photonic_states`].
pub fn lift_photonic(space: &StateSpace, u_photonic: &CMatrix) -> CMatrix {
    let photonic = space.photonic_states();
    let pindex: BTreeMap<[u8; 4], usize> = photonic.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let d = space.dim();
    let mut out = CMatrix::zeros(d, d);
    for (i, si) in space.states().iter().enumerate() {
        for (j, sj) in space.states().iter().enumerate() {
            if si.atoms == sj.atoms {
                out[(i, j)] = u_photonic[(pindex[&si.photons], pindex[&sj.photons])];
            }
        }
    }
    out
}
