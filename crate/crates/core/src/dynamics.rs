//! Jaynes–Cummings physics: eigensystem, closed-form single-cavity
//! evolution, and the Hamiltonian of the whole gate array.
//!
//! Detuning is `Δ = ω_a − ω_c` throughout. Energies use `ħ = 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{BasisState, Level, PureState, StateSpace, CAVITIES};
use crate::linalg::{CMatrix, CVector, C64, I, ONE, ZERO};

#[derive(Debug, Error, PartialEq)]
pub enum PhysicsError {
    #[error("coupling g must be positive and finite, got {0}")]
    Coupling(f64),
    #[error("cavity frequency must be positive and finite, got {0}")]
    CavityFrequency(f64),
    #[error("detuning must be finite, got {0}")]
    Detuning(f64),
    #[error("initial amplitudes have squared norm {0}, expected 1")]
    NotNormalized(f64),
}

/// Reference frame used for the array Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Rotating with `ω_c · (photons + atomic excitations)`; only the detuning
    /// and the coupling remain.
    #[default]
    Rotating,
    /// Literal laboratory-frame Hamiltonian including the `ω_c` terms.
    Lab,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    /// Atom–field coupling.
    pub g: f64,
    pub omega_c: f64,
    /// `ω_a − ω_c`.
    pub delta: f64,
}

impl PhysParams {
    pub fn new(g: f64, omega_c: f64, delta: f64) -> Result<Self, PhysicsError> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(PhysicsError::Coupling(g));
        }
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(PhysicsError::CavityFrequency(omega_c));
        }
        if !delta.is_finite() {
            return Err(PhysicsError::Detuning(delta));
        }
        Ok(Self { g, omega_c, delta })
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_c + self.delta
    }
}

/// Generalized Rabi frequency `Ω_n = √(Δ² + 4g²(n+1))` of block `Λ_n`.
pub fn rabi_frequency(n: u32, p: &PhysParams) -> f64 {
    (p.delta * p.delta + 4.0 * p.g * p.g * f64::from(n + 1)).sqrt()
}

/// Eigen-decomposition of `H_JC = ω_c a†a + ω_a σ_z/2 + g(σ⁺a + σa†)` on the
/// invariant block `Λ_n = span{|g,n+1>, |e,n>}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedBlock {
    pub n: u32,
    /// Mixing angle, `tan θ = 2√(n+1) g / (Ω_n − Δ)`, in `(0, π/2)`.
    pub theta: f64,
    pub eps_plus: f64,
    pub eps_minus: f64,
}

impl DressedBlock {
    /// `|+,n> = cos θ |g,n+1> + sin θ |e,n>` in the `(|g,n+1>, |e,n>)` basis.
    pub fn plus(&self) -> [f64; 2] {
        [self.theta.cos(), self.theta.sin()]
    }

    /// `|−,n> = −sin θ |g,n+1> + cos θ |e,n>`.
    pub fn minus(&self) -> [f64; 2] {
        [-self.theta.sin(), self.theta.cos()]
    }
}

pub fn jc_block_eigensystem(n: u32, p: &PhysParams) -> DressedBlock {
    let omega = rabi_frequency(n, p);
    let coupling = 2.0 * f64::from(n + 1).sqrt() * p.g;
    // atan2 keeps θ in (0, π/2) even when Ω_n − Δ underflows
    let theta = coupling.atan2(omega - p.delta);
    let centre = (f64::from(n) + 0.5) * p.omega_c;
    DressedBlock { n, theta, eps_plus: centre + omega / 2.0, eps_minus: centre - omega / 2.0 }
}

/// Energy of `|g,0>`: `−ω_c/2 − Δ/2`.
pub fn ground_energy(p: &PhysParams) -> f64 {
    -0.5 * p.omega_c - 0.5 * p.delta
}

/// Basis of the single-cavity model, in the order used by
/// [`analytic_evolve`] and [`single_cavity_hamiltonian`].
pub const SINGLE_CAVITY_BASIS: [(Level, u8); 5] =
    [(Level::G, 0), (Level::G, 1), (Level::G, 2), (Level::E, 0), (Level::E, 1)];

/// Interaction-picture Hamiltonian of one cavity with at most two
/// excitations, rotating with `ω_c (a†a + σ⁺σ − 1/2)`:
/// `Δ σ_z / 2 + g(σ⁺a + σa†)`.
pub fn single_cavity_hamiltonian(p: &PhysParams) -> CMatrix {
    let mut h = CMatrix::zeros(5, 5);
    for (i, (level, _)) in SINGLE_CAVITY_BASIS.iter().enumerate() {
        h[(i, i)] = ONE * if *level == Level::E { 0.5 * p.delta } else { -0.5 * p.delta };
    }
    // |g,1> <-> |e,0> and |g,2> <-> |e,1>
    for (g_idx, e_idx, n) in [(1, 3, 1.0_f64), (2, 4, 2.0)] {
        h[(g_idx, e_idx)] = ONE * p.g * n.sqrt();
        h[(e_idx, g_idx)] = ONE * p.g * n.sqrt();
    }
    h
}

/// Closed-form state at time `t` for `ψ(0) = α₀|g,0> + α₁|g,1> + α₂|g,2>`,
/// in the frame of [`single_cavity_hamiltonian`].
pub fn analytic_evolve(alpha: [C64; 3], t: f64, p: &PhysParams) -> Result<PureState, PhysicsError> {
    let norm2: f64 = alpha.iter().map(|a| a.norm_sqr()).sum();
    if (norm2 - 1.0).abs() > 1e-12 {
        return Err(PhysicsError::NotNormalized(norm2));
    }
    let mut psi = CVector::from_element(5, ZERO);
    psi[0] = alpha[0] * C64::from_polar(1.0, t * p.delta / 2.0);
    for n in 0..2u32 {
        let block = jc_block_eigensystem(n, p);
        let omega = rabi_frequency(n, p);
        let (s, c) = (omega * t / 2.0).sin_cos();
        let (s2, c2) = (2.0 * block.theta).sin_cos();
        let a = alpha[n as usize + 1];
        psi[n as usize + 1] = a * (ONE * c - I * c2 * s);
        psi[n as usize + 3] = a * (-I * s2 * s);
    }
    Ok(PureState::new(psi).expect("unitary evolution preserves the norm"))
}

/// `<g,n|U(t)|g,n>` for the cavity rail of the array, in the rotating frame
/// of [`build_array_hamiltonian`] (vacuum phase fixed at zero).
pub fn cavity_amplitude(n: u32, t: f64, p: &PhysParams) -> C64 {
    if n == 0 {
        return ONE;
    }
    let omega = rabi_frequency(n - 1, p);
    let (s, c) = (omega * t / 2.0).sin_cos();
    C64::from_polar(1.0, -p.delta * t / 2.0) * (ONE * c + I * (p.delta / omega) * s)
}

/// Full-array Hamiltonian over `space`:
/// `ω_c Σ_rails n_r + ω_a Σ_atoms σ⁺σ + g Σ_cavities (σ⁺a + a†σ)`.
///
/// In [`Frame::Rotating`] the term `ω_c (Σ n_r + Σ σ⁺σ)` is removed; it
/// commutes with everything else. Couplings to configurations outside `space`
/// are dropped.
pub fn build_array_hamiltonian(space: &StateSpace, p: &PhysParams, frame: Frame) -> CMatrix {
    let d = space.dim();
    let mut h = CMatrix::zeros(d, d);
    let (photon_energy, atom_energy) = match frame {
        Frame::Lab => (p.omega_c, p.omega_a()),
        Frame::Rotating => (0.0, p.delta),
    };
    for (col, s) in space.states().iter().enumerate() {
        h[(col, col)] = ONE
            * (photon_energy * f64::from(s.photon_number()) + atom_energy * f64::from(s.atomic_excitations()));
        for (atom, rail) in CAVITIES {
            // σ⁺a: absorb a photon from the cavity rail
            let n = s.occupation(rail);
            if s.level(atom) == Level::G && n > 0 {
                let target = s.with_occupation(rail, n - 1).with_level(atom, Level::E);
                add_coupling(space, &mut h, &target, col, p.g * f64::from(n).sqrt());
            }
        }
    }
    h
}

fn add_coupling(space: &StateSpace, h: &mut CMatrix, target: &BasisState, col: usize, value: f64) {
    if let Some(row) = space.index_of(target) {
        h[(row, col)] += ONE * value;
        h[(col, row)] += ONE * value;
    }
}
