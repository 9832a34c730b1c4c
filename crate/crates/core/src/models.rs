//! Spin–oscillator model catalog: Hamiltonians, initial states, thermal baths
//! and the commutation-structure classifier.
//!
//! Conventions (fixed once, used everywhere):
//! * spin basis order (e, g) with σ_z|e⟩ = +|e⟩, so σ_z = diag(1, −1);
//! * oscillator Fock basis |0..n_fock−1⟩ with a|n⟩ = √n|n−1⟩;
//! * x = a + a†, p = −i(a − a†);
//! * partition I is the spin, partition II the truncated oscillator;
//! * ħ = 1; energies in one arbitrary unit, time in its inverse.

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{
    commutator, kron, matrix_exp, CMatrix, DensityMatrix, Operator, Side, ONE,
};
use crate::tolerances as tol;

// ---------------------------------------------------------------------------
// elementary operators
// ---------------------------------------------------------------------------

pub fn pauli_x() -> Operator {
    let mut m = CMatrix::zeros((2, 2));
    m[[0, 1]] = ONE;
    m[[1, 0]] = ONE;
    Operator::hermitian(m).unwrap()
}

pub fn pauli_y() -> Operator {
    let mut m = CMatrix::zeros((2, 2));
    m[[0, 1]] = Complex64::new(0.0, -1.0);
    m[[1, 0]] = Complex64::new(0.0, 1.0);
    Operator::hermitian(m).unwrap()
}

pub fn pauli_z() -> Operator {
    Operator::from_real_diagonal(&[1.0, -1.0])
}

/// σ₊ = |e⟩⟨g|.
pub fn sigma_plus() -> Operator {
    let mut m = CMatrix::zeros((2, 2));
    m[[0, 1]] = ONE;
    Operator::from_matrix(m).unwrap()
}

/// σ₋ = |g⟩⟨e|.
pub fn sigma_minus() -> Operator {
    let mut m = CMatrix::zeros((2, 2));
    m[[1, 0]] = ONE;
    Operator::from_matrix(m).unwrap()
}

/// Annihilation operator on the truncated Fock space, a|n⟩ = √n|n−1⟩.
pub fn annihilation(n_fock: usize) -> Operator {
    let mut m = CMatrix::zeros((n_fock, n_fock));
    for n in 1..n_fock {
        m[[n - 1, n]] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Operator::from_matrix(m).unwrap()
}

pub fn creation(n_fock: usize) -> Operator {
    annihilation(n_fock).dagger()
}

/// a†a = diag(0, 1, …, n_fock−1).
pub fn number_op(n_fock: usize) -> Operator {
    Operator::from_real_diagonal(&(0..n_fock).map(|n| n as f64).collect::<Vec<_>>())
}

/// x = a + a†.
pub fn position(n_fock: usize) -> Operator {
    let a = annihilation(n_fock);
    a.add(&a.dagger())
}

/// p = −i(a − a†).
pub fn momentum(n_fock: usize) -> Operator {
    let a = annihilation(n_fock);
    a.sub(&a.dagger()).scaled(Complex64::new(0.0, -1.0))
}

// ---------------------------------------------------------------------------
// bipartite systems
// ---------------------------------------------------------------------------

/// Two partitions with local Hamiltonians and an interaction Σᵢ Aᵢ ⊗ Bᵢ.
/// Every stored factor is itself Hermitian.
#[derive(Clone, Debug)]
pub struct BipartiteSystem {
    d1: usize,
    d2: usize,
    h1: Operator,
    h2: Operator,
    interaction: Vec<(Operator, Operator)>,
}

impl BipartiteSystem {
    pub fn new(h1: Operator, h2: Operator, interaction: Vec<(Operator, Operator)>) -> Result<Self> {
        let d1 = h1.dim();
        let d2 = h2.dim();
        for (label, op) in [("h1", &h1), ("h2", &h2)] {
            let scale = op.max_norm().max(1e-300);
            if !op.is_hermitian_within(tol::HERMITICITY_REL * scale) {
                return Err(Error::InvalidParameter(format!(
                    "{label} must be Hermitian"
                )));
            }
        }
        for (k, (a, b)) in interaction.iter().enumerate() {
            if a.dim() != d1 {
                return Err(Error::DimensionMismatch {
                    context: "interaction A factor",
                    expected: d1,
                    actual: a.dim(),
                });
            }
            if b.dim() != d2 {
                return Err(Error::DimensionMismatch {
                    context: "interaction B factor",
                    expected: d2,
                    actual: b.dim(),
                });
            }
            for (label, op) in [("A", a), ("B", b)] {
                let scale = op.max_norm().max(1e-300);
                if !op.is_hermitian_within(tol::HERMITICITY_REL * scale) {
                    return Err(Error::InvalidParameter(format!(
                        "interaction term {k}: factor {label} must be Hermitian"
                    )));
                }
            }
        }
        Ok(Self {
            d1,
            d2,
            h1,
            h2,
            interaction,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d1, self.d2)
    }

    pub fn total_dim(&self) -> usize {
        self.d1 * self.d2
    }

    pub fn local_hamiltonian(&self, side: Side) -> &Operator {
        match side {
            Side::One => &self.h1,
            Side::Two => &self.h2,
        }
    }

    pub fn interaction(&self) -> &[(Operator, Operator)] {
        &self.interaction
    }

    /// H₁₂ = Σᵢ Aᵢ ⊗ Bᵢ on the full space.
    pub fn interaction_operator(&self) -> Operator {
        let mut h12 = Operator::zeros(self.total_dim());
        for (a, b) in &self.interaction {
            h12 = h12.add(&kron(a, b));
        }
        h12
    }

    /// H = H₁⊗I + I⊗H₂ + Σᵢ Aᵢ⊗Bᵢ.
    pub fn total_hamiltonian(&self) -> Operator {
        let h_local = kron(&self.h1, &Operator::identity(self.d2))
            .add(&kron(&Operator::identity(self.d1), &self.h2));
        h_local.add(&self.interaction_operator())
    }
}

// ---------------------------------------------------------------------------
// catalog models
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    /// H₁₂ = g σ_z ⊗ a†a — fully commuting.
    Dispersive,
    /// H₁₂ = g σ_z ⊗ (a + a†) — partially commuting (σ_z conserved).
    Displaced,
    /// H₁₂ = g(σ₊a + σ₋a†) — non-commuting; on resonance ν = ω₀ the
    /// interaction commutes with H₁⊗I + I⊗H₂.
    JaynesCummings,
    /// H₁ = (ω₀/2)σ_z + Vσ_x with the displaced coupling — non-commuting.
    SpinBosonMode,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dispersive" => Ok(ModelKind::Dispersive),
            "displaced" => Ok(ModelKind::Displaced),
            "jaynes_cummings" => Ok(ModelKind::JaynesCummings),
            "spin_boson_mode" => Ok(ModelKind::SpinBosonMode),
            other => Err(Error::InvalidParameter(format!(
                "unknown model kind `{other}` (expected dispersive | displaced | jaynes_cummings | spin_boson_mode)"
            ))),
        }
    }
}

/// Physical parameters of the catalog models. `v` is the tunnelling amplitude
/// and is only read by [`ModelKind::SpinBosonMode`]; `c`, `x0`, `beta2`
/// parameterize initial states.
#[derive(Clone, Copy, Debug)]
pub struct ModelParams {
    pub omega0: f64,
    pub v: f64,
    pub nu: f64,
    pub g: f64,
    pub n_fock: usize,
    pub c: f64,
    pub x0: f64,
    pub beta2: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega0: 1.0,
            v: 0.0,
            nu: 1.0,
            g: 0.0,
            n_fock: 2,
            c: 0.0,
            x0: 0.0,
            beta2: 1.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_fock < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_fock must be at least 2, got {}",
                self.n_fock
            )));
        }
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::InvalidParameter(format!(
                "mixing weight c must lie in [0,1], got {}",
                self.c
            )));
        }
        for (name, v) in [
            ("omega0", self.omega0),
            ("v", self.v),
            ("nu", self.nu),
            ("g", self.g),
            ("x0", self.x0),
            ("beta2", self.beta2),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

/// Build a catalog model. Partition I is the spin with H₁ = (ω₀/2)σ_z
/// (plus Vσ_x for the spin-boson kind), partition II the truncated
/// oscillator with H₂ = ν a†a. The coupling constant sits on the
/// oscillator factor of each interaction term.
pub fn build_model(kind: ModelKind, p: &ModelParams) -> Result<BipartiteSystem> {
    p.validate()?;
    let n = p.n_fock;
    let h1 = match kind {
        ModelKind::SpinBosonMode => pauli_z()
            .scaled(Complex64::new(p.omega0 / 2.0, 0.0))
            .add(&pauli_x().scaled(Complex64::new(p.v, 0.0))),
        _ => pauli_z().scaled(Complex64::new(p.omega0 / 2.0, 0.0)),
    };
    let h2 = number_op(n).scaled(Complex64::new(p.nu, 0.0));
    let g = Complex64::new(p.g, 0.0);
    let interaction = match kind {
        ModelKind::Dispersive => vec![(pauli_z(), number_op(n).scaled(g))],
        ModelKind::Displaced | ModelKind::SpinBosonMode => {
            vec![(pauli_z(), position(n).scaled(g))]
        }
        // g(σ₊a + σ₋a†) = (g/2)(σ_x⊗x − σ_y⊗p), stored as two Hermitian pairs
        ModelKind::JaynesCummings => vec![
            (pauli_x(), position(n).scaled(g * 0.5)),
            (pauli_y(), momentum(n).scaled(-g * 0.5)),
        ],
    };
    BipartiteSystem::new(h1, h2, interaction)
}

// ---------------------------------------------------------------------------
// commutation classification
// ---------------------------------------------------------------------------

/// Which local Hamiltonians commute with their interaction factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommutationClass {
    /// [H₁, Aᵢ] = 0 and [H₂, Bᵢ] = 0 for every term.
    FullyCommuting,
    /// Only [H₁, Aᵢ] = 0 for every term.
    PartiallyCommuting1,
    /// Only [H₂, Bᵢ] = 0 for every term.
    PartiallyCommuting2,
    NonCommuting,
}

impl CommutationClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommutationClass::FullyCommuting => "fully_commuting",
            CommutationClass::PartiallyCommuting1 => "partially_commuting_1",
            CommutationClass::PartiallyCommuting2 => "partially_commuting_2",
            CommutationClass::NonCommuting => "non_commuting",
        }
    }
}

fn commutes(h: &Operator, x: &Operator) -> bool {
    let comm = commutator(h, x).expect("equal dims by construction");
    comm.max_norm() <= tol::COMMUTATION_REL * h.max_norm() * x.max_norm()
}

/// Classify a system by the commutators ‖[H_s, factor]‖_max, each compared to
/// 1e−10 · ‖H_s‖_max · ‖factor‖_max.
pub fn classify(sys: &BipartiteSystem) -> CommutationClass {
    let side1 = sys
        .interaction()
        .iter()
        .all(|(a, _)| commutes(sys.local_hamiltonian(Side::One), a));
    let side2 = sys
        .interaction()
        .iter()
        .all(|(_, b)| commutes(sys.local_hamiltonian(Side::Two), b));
    match (side1, side2) {
        (true, true) => CommutationClass::FullyCommuting,
        (true, false) => CommutationClass::PartiallyCommuting1,
        (false, true) => CommutationClass::PartiallyCommuting2,
        (false, false) => CommutationClass::NonCommuting,
    }
}

// ---------------------------------------------------------------------------
// initial states
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub enum SpinState {
    Excited,
    Ground,
    /// c|g⟩⟨g| + (1−c)|e⟩⟨e|.
    Mixture(f64),
    /// cos(θ/2)|e⟩ + e^{iφ} sin(θ/2)|g⟩.
    Superposition { theta: f64, phi: f64 },
}

#[derive(Clone, Copy, Debug)]
pub enum ModeState {
    Fock(usize),
    /// Coherent state with real displacement α₀ = x₀ (zero initial momentum).
    Coherent(f64),
    /// ∝ e^{−β₂ ν a†a}, renormalized on the truncated space.
    Thermal(f64),
}

/// A product initial state together with the weight the untruncated state
/// would carry above the Fock cutoff.
#[derive(Clone, Debug)]
pub struct InitialState {
    pub rho: DensityMatrix,
    pub truncation_leakage: f64,
}

impl InitialState {
    pub fn leakage_warning(&self) -> Option<String> {
        (self.truncation_leakage > tol::TRUNCATION_LEAKAGE).then(|| {
            format!(
                "initial mode state carries {:.2e} weight above the Fock truncation; increase n_fock",
                self.truncation_leakage
            )
        })
    }
}

fn spin_density(spin: SpinState) -> Result<DensityMatrix> {
    match spin {
        SpinState::Excited => DensityMatrix::new(Operator::from_real_diagonal(&[1.0, 0.0])),
        SpinState::Ground => DensityMatrix::new(Operator::from_real_diagonal(&[0.0, 1.0])),
        SpinState::Mixture(c) => {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidParameter(format!(
                    "mixture weight c must lie in [0,1], got {c}"
                )));
            }
            DensityMatrix::new(Operator::from_real_diagonal(&[1.0 - c, c]))
        }
        SpinState::Superposition { theta, phi } => {
            let psi = Array1::from(vec![
                Complex64::new((theta / 2.0).cos(), 0.0),
                Complex64::from_polar((theta / 2.0).sin(), phi),
            ]);
            DensityMatrix::from_pure(&psi)
        }
    }
}

/// Weight of the untruncated coherent state |x₀⟩ above Fock level n_fock−1
/// (Poisson tail), computed with scalar arithmetic.
pub fn coherent_leakage(x0: f64, n_fock: usize) -> f64 {
    let mean = x0 * x0;
    let mut term = (-mean).exp();
    let mut below = 0.0;
    for n in 0..n_fock {
        below += term;
        term *= mean / (n as f64 + 1.0);
    }
    (1.0 - below).max(0.0)
}

fn mode_density(mode: ModeState, nu: f64, n_fock: usize) -> Result<(DensityMatrix, f64)> {
    match mode {
        ModeState::Fock(n) => {
            if n >= n_fock {
                return Err(Error::FockIndexOutOfRange {
                    index: n,
                    n_fock,
                });
            }
            let mut diag = vec![0.0; n_fock];
            diag[n] = 1.0;
            Ok((
                DensityMatrix::new(Operator::from_real_diagonal(&diag))?,
                0.0,
            ))
        }
        ModeState::Coherent(x0) => {
            // displacement of |0⟩: D(x₀) = exp(x₀(a†−a)) = exp(−i x₀ p)
            let disp = matrix_exp(&momentum(n_fock), Complex64::new(0.0, -x0))?;
            let mut vac: Array1<Complex64> = Array1::zeros(n_fock);
            vac[0] = ONE;
            let mut psi = disp.matrix().dot(&vac);
            let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
            let norm = norm2.sqrt();
            psi.mapv_inplace(|z| z / norm);
            Ok((DensityMatrix::from_pure(&psi)?, coherent_leakage(x0, n_fock)))
        }
        ModeState::Thermal(beta2) => {
            if beta2 <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "thermal mode state needs beta2 > 0, got {beta2}"
                )));
            }
            let q = (-beta2 * nu).exp();
            let weights: Vec<f64> = (0..n_fock).map(|n| q.powi(n as i32)).collect();
            let z: f64 = weights.iter().sum();
            let diag: Vec<f64> = weights.iter().map(|w| w / z).collect();
            // untruncated geometric tail above n_fock−1
            let leakage = q.powi(n_fock as i32);
            Ok((
                DensityMatrix::new(Operator::from_real_diagonal(&diag))?,
                leakage,
            ))
        }
    }
}

/// Product state ρ₁(0) ⊗ ρ₂(0).
pub fn initial_state(spin: SpinState, mode: ModeState, p: &ModelParams) -> Result<InitialState> {
    p.validate()?;
    let rho1 = spin_density(spin)?;
    let (rho2, leakage) = mode_density(mode, p.nu, p.n_fock)?;
    let joint = kron(rho1.op(), rho2.op());
    Ok(InitialState {
        rho: DensityMatrix::new(joint)?,
        truncation_leakage: leakage,
    })
}

// ---------------------------------------------------------------------------
// baths
// ---------------------------------------------------------------------------

/// Lindblad jump operators with rates, attached to one partition.
#[derive(Clone, Debug)]
pub struct BathSpec {
    pub partition: Side,
    pub jumps: Vec<(Operator, f64)>,
    /// Inverse temperature of the bath.
    pub beta: f64,
}

impl BathSpec {
    pub fn validate(&self, sys: &BipartiteSystem) -> Result<()> {
        let (d1, d2) = sys.dims();
        let expected = match self.partition {
            Side::One => d1,
            Side::Two => d2,
        };
        for (l, rate) in &self.jumps {
            if l.dim() != expected {
                return Err(Error::DimensionMismatch {
                    context: "bath jump operator",
                    expected,
                    actual: l.dim(),
                });
            }
            if *rate < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "bath rate must be non-negative, got {rate}"
                )));
            }
        }
        Ok(())
    }
}

/// Mean occupation 1/(e^{β·gap} − 1), guarded against overflow.
fn bose_occupation(beta: f64, gap: f64) -> f64 {
    let x = beta * gap;
    if x > 700.0 {
        0.0
    } else {
        1.0 / (x.exp() - 1.0)
    }
}

/// Thermal bath on the spin: jumps {(σ₋, γ₀(n̄+1)), (σ₊, γ₀ n̄)} with
/// n̄ = 1/(e^{β·gap} − 1). Detailed balance fixes the rate ratio at e^{−β·gap}.
pub fn thermal_qubit_bath(beta: f64, gap: f64, gamma0: f64) -> Result<BathSpec> {
    if beta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "bath inverse temperature must be positive, got {beta}"
        )));
    }
    if gamma0 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "bath coupling gamma0 must be positive, got {gamma0}"
        )));
    }
    let n_bar = bose_occupation(beta, gap);
    Ok(BathSpec {
        partition: Side::One,
        jumps: vec![
            (sigma_minus(), gamma0 * (n_bar + 1.0)),
            (sigma_plus(), gamma0 * n_bar),
        ],
        beta,
    })
}

/// Thermal bath on the oscillator: jumps {(a, γ₀(n̄+1)), (a†, γ₀ n̄)} on the
/// truncated space.
pub fn thermal_mode_bath(beta: f64, nu: f64, gamma0: f64, n_fock: usize) -> Result<BathSpec> {
    if beta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "bath inverse temperature must be positive, got {beta}"
        )));
    }
    if gamma0 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "bath coupling gamma0 must be positive, got {gamma0}"
        )));
    }
    let n_bar = bose_occupation(beta, nu);
    Ok(BathSpec {
        partition: Side::Two,
        jumps: vec![
            (annihilation(n_fock), gamma0 * (n_bar + 1.0)),
            (creation(n_fock), gamma0 * n_bar),
        ],
        beta,
    })
}
