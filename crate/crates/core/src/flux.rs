//! The LEMBAS decomposition and the work/heat flux formulas.
//!
//! The effective Hamiltonian a partition feels from its partner,
//! `H₁^eff(t) = Σᵢ Aᵢ·Tr{Bᵢ ρ₂(t)}`, splits into a part that commutes with
//! the bare local Hamiltonian and a part that does not:
//! `H₁^eff = H^eff_{1,a} + H^eff_{1,b}`. The commuting part shifts the local
//! measurement basis, `H₁′ = H₁ + H^eff_{1,a}`, and the fluxes read
//!
//! ```text
//! Ẇ₁ = Tr₁{Ḣ^eff_{1,a} ρ₁ − i[H₁′, H^eff_{1,b}] ρ₁}
//! Q̇₁ = −i Tr{[(H₁′⊗I), H₁₂] C₁₂}  (+ Tr₁{H₁′ 𝓛₁[ρ₁]} per attached bath)
//! ```
//!
//! with `C₁₂ = ρ − ρ₁⊗ρ₂`. The commuting/non-commuting split is realized as
//! the orthogonal projection onto the block-diagonal algebra of the local
//! Hamiltonian's eigenspaces (pinching), which is unique, linear, idempotent
//! and reduces to "take the diagonal" for a nondegenerate local Hamiltonian.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::{BathSpec, BipartiteSystem};
use crate::operator::{
    commutator_raw, dagger, hermitize, kron_raw, partial_trace_raw, spectral_decomposition,
    trace_product, CMatrix, DensityMatrix, Operator, Side, IM,
};
use crate::tolerances as tol;

// ---------------------------------------------------------------------------
// pinching
// ---------------------------------------------------------------------------

/// Orthogonal projector onto the commutant (block-diagonal algebra) of a
/// Hermitian operator, under the Hilbert–Schmidt inner product.
///
/// Eigenvalues within `1e−9 · ‖H‖_max` of their predecessor are grouped into
/// one block (inclusive chaining), so exact catalog degeneracies always land
/// in a common block.
#[derive(Clone, Debug)]
pub struct PinchProjector {
    basis: CMatrix,
    block_of: Vec<usize>,
}

impl PinchProjector {
    pub fn new(h_local: &Operator) -> Result<Self> {
        let spec = spectral_decomposition(h_local)?;
        let width = tol::PINCH_DEGENERACY_REL * h_local.max_norm();
        let n = spec.eigenvalues.len();
        let mut block_of = vec![0usize; n];
        let mut block = 0usize;
        for i in 1..n {
            if spec.eigenvalues[i] - spec.eigenvalues[i - 1] > width {
                block += 1;
            }
            block_of[i] = block;
        }
        Ok(Self {
            basis: spec.eigenvectors,
            block_of,
        })
    }

    /// Project onto the block-diagonal part: V (Π ∘ V†MV) V†.
    pub fn apply_raw(&self, m: &CMatrix) -> CMatrix {
        let vd = dagger(&self.basis);
        let mut mt = vd.dot(m).dot(&self.basis);
        let n = self.block_of.len();
        for i in 0..n {
            for j in 0..n {
                if self.block_of[i] != self.block_of[j] {
                    mt[[i, j]] = Complex64::new(0.0, 0.0);
                }
            }
        }
        let back = self.basis.dot(&mt).dot(&vd);
        hermitize(&back)
    }

    pub fn apply(&self, m: &Operator) -> Operator {
        Operator::from_matrix(self.apply_raw(m.matrix())).expect("square by construction")
    }
}

// ---------------------------------------------------------------------------
// LEMBAS split
// ---------------------------------------------------------------------------

/// The split of an effective Hamiltonian relative to a local one.
#[derive(Clone, Debug)]
pub struct LembasSplit {
    pub h_eff: Operator,
    /// Part commuting with the local Hamiltonian.
    pub h_a: Operator,
    /// Non-commuting remainder, h_eff − h_a.
    pub h_b: Operator,
    /// H′ = H_local + h_a, the operator whose eigenbasis defines local energy.
    pub h_prime: Operator,
}

/// Split `h_eff` into its pinched (commuting) part and remainder.
pub fn pinch_split(h_eff: &Operator, h_local: &Operator) -> Result<LembasSplit> {
    if h_eff.dim() != h_local.dim() {
        return Err(Error::DimensionMismatch {
            context: "pinch_split",
            expected: h_local.dim(),
            actual: h_eff.dim(),
        });
    }
    let projector = PinchProjector::new(h_local)?;
    Ok(split_with(&projector, h_eff, h_local))
}

pub(crate) fn split_with(
    projector: &PinchProjector,
    h_eff: &Operator,
    h_local: &Operator,
) -> LembasSplit {
    let h_a = projector.apply(h_eff);
    let h_b = h_eff.sub(&h_a);
    let h_prime = h_local.add(&h_a);
    LembasSplit {
        h_eff: h_eff.clone(),
        h_a,
        h_b,
        h_prime,
    }
}

// ---------------------------------------------------------------------------
// effective Hamiltonians and their time derivative
// ---------------------------------------------------------------------------

fn reduced_states(rho: &CMatrix, d1: usize, d2: usize) -> (CMatrix, CMatrix) {
    (
        partial_trace_raw(rho, d1, d2, Side::One),
        partial_trace_raw(rho, d1, d2, Side::Two),
    )
}

fn check_full_dim(sys: &BipartiteSystem, dim: usize, context: &'static str) -> Result<()> {
    if dim != sys.total_dim() {
        return Err(Error::DimensionMismatch {
            context,
            expected: sys.total_dim(),
            actual: dim,
        });
    }
    Ok(())
}

/// Mean-field Hamiltonian felt by `side`: Σᵢ Aᵢ·Tr{Bᵢρ₂} (side 1) or
/// Σᵢ Bᵢ·Tr{Aᵢρ₁} (side 2).
pub fn effective_hamiltonian(
    sys: &BipartiteSystem,
    rho: &DensityMatrix,
    side: Side,
) -> Result<Operator> {
    check_full_dim(sys, rho.dim(), "effective_hamiltonian")?;
    let (d1, d2) = sys.dims();
    let (rho1, rho2) = reduced_states(rho.matrix(), d1, d2);
    Ok(effective_hamiltonian_from_reduced(sys, &rho1, &rho2, side))
}

pub(crate) fn effective_hamiltonian_from_reduced(
    sys: &BipartiteSystem,
    rho1: &CMatrix,
    rho2: &CMatrix,
    side: Side,
) -> Operator {
    let (d1, d2) = sys.dims();
    let mut acc = match side {
        Side::One => CMatrix::zeros((d1, d1)),
        Side::Two => CMatrix::zeros((d2, d2)),
    };
    for (a, b) in sys.interaction() {
        match side {
            Side::One => {
                let weight = trace_product(b.matrix(), rho2);
                acc = acc + a.matrix().mapv(|z| z * weight);
            }
            Side::Two => {
                let weight = trace_product(a.matrix(), rho1);
                acc = acc + b.matrix().mapv(|z| z * weight);
            }
        }
    }
    Operator::from_matrix(hermitize(&acc)).expect("square by construction")
}

/// Time derivative of the pinched effective Hamiltonian,
/// Σᵢ pinch(Aᵢ)·Tr{Bᵢ·Tr₁ρ̇} for side 1 (mirrored for side 2). The pinch
/// projector of the static local Hamiltonian commutes with d/dt, so pinching
/// the derivative equals differentiating the pinched operator.
pub fn heff_time_derivative(
    sys: &BipartiteSystem,
    rho_dot: &Operator,
    side: Side,
) -> Result<Operator> {
    check_full_dim(sys, rho_dot.dim(), "heff_time_derivative")?;
    let projector = PinchProjector::new(sys.local_hamiltonian(side))?;
    let (d1, d2) = sys.dims();
    let reduced_dot = partial_trace_raw(rho_dot.matrix(), d1, d2, side.other());
    Ok(heff_derivative_with(sys, &projector, &reduced_dot, side))
}

pub(crate) fn heff_derivative_with(
    sys: &BipartiteSystem,
    projector: &PinchProjector,
    partner_rho_dot: &CMatrix,
    side: Side,
) -> Operator {
    let (d1, d2) = sys.dims();
    let mut acc = match side {
        Side::One => CMatrix::zeros((d1, d1)),
        Side::Two => CMatrix::zeros((d2, d2)),
    };
    for (a, b) in sys.interaction() {
        let (own, partner) = match side {
            Side::One => (a, b),
            Side::Two => (b, a),
        };
        let weight = trace_product(partner.matrix(), partner_rho_dot);
        acc = acc + projector.apply_raw(own.matrix()).mapv(|z| z * weight);
    }
    Operator::from_matrix(hermitize(&acc)).expect("square by construction")
}

// ---------------------------------------------------------------------------
// fluxes
// ---------------------------------------------------------------------------

/// Work flux into `side`: Tr{Ḣ^eff_a ρ_s} − i Tr{[H′, H^eff_b] ρ_s}.
pub fn work_flux(
    sys: &BipartiteSystem,
    rho: &DensityMatrix,
    rho_dot: &Operator,
    side: Side,
    split: &LembasSplit,
) -> Result<f64> {
    check_full_dim(sys, rho.dim(), "work_flux")?;
    let (d1, d2) = sys.dims();
    let rho_s = partial_trace_raw(rho.matrix(), d1, d2, side);
    let heff_dot = heff_time_derivative(sys, rho_dot, side)?;
    Ok(work_flux_from_parts(&heff_dot, &rho_s, split))
}

pub(crate) fn work_flux_from_parts(
    pinched_heff_dot: &Operator,
    rho_s: &CMatrix,
    split: &LembasSplit,
) -> f64 {
    let drive = trace_product(pinched_heff_dot.matrix(), rho_s).re;
    let comm = commutator_raw(split.h_prime.matrix(), split.h_b.matrix());
    let coherent = (-IM * trace_product(&comm, rho_s)).re;
    drive + coherent
}

/// Correlation operator C₁₂ = ρ − ρ₁⊗ρ₂; traceless and Hermitian.
pub fn extract_correlations(rho: &DensityMatrix, dims: (usize, usize)) -> Result<Operator> {
    let (d1, d2) = dims;
    if rho.dim() != d1 * d2 {
        return Err(Error::DimensionMismatch {
            context: "extract_correlations",
            expected: d1 * d2,
            actual: rho.dim(),
        });
    }
    let (rho1, rho2) = reduced_states(rho.matrix(), d1, d2);
    let c = rho.matrix() - &kron_raw(&rho1, &rho2);
    Operator::from_matrix(c)
}

/// Dissipator Σ rate·(LρL† − ½{L†L, ρ}) of one bath acting on a reduced state.
pub(crate) fn bath_dissipator_reduced(bath: &BathSpec, rho_s: &CMatrix) -> CMatrix {
    let n = rho_s.nrows();
    let mut acc = CMatrix::zeros((n, n));
    for (l, rate) in &bath.jumps {
        if *rate == 0.0 {
            continue;
        }
        let lm = l.matrix();
        let ld = dagger(lm);
        let ldl = ld.dot(lm);
        let sandwich = lm.dot(rho_s).dot(&ld);
        let anti = ldl.dot(rho_s) + rho_s.dot(&ldl);
        acc = acc + (sandwich - anti.mapv(|z| z * 0.5)).mapv(|z| z * *rate);
    }
    acc
}

/// Heat flux into `side`; returns `(q_total, q_bath)`.
///
/// The internal part is evaluated in two algebraically equivalent forms —
/// the full-space commutator form and the reduced form obtained by tracing
/// the partner out of [H₁₂, C₁₂] first — and both must agree to 1e−9.
pub fn heat_flux(
    sys: &BipartiteSystem,
    rho: &DensityMatrix,
    side: Side,
    split: &LembasSplit,
    baths: &[BathSpec],
) -> Result<(f64, f64)> {
    let (eq9, eq8) = heat_flux_internal_forms(sys, rho, side, split)?;
    let scale = sys.total_hamiltonian().max_norm().max(1.0);
    let discrepancy = (eq9 - eq8).abs();
    if discrepancy > tol::HEAT_FORM_AGREEMENT * scale {
        return Err(Error::HeatFormMismatch {
            t: f64::NAN,
            discrepancy,
            tolerance: tol::HEAT_FORM_AGREEMENT * scale,
        });
    }
    let (d1, d2) = sys.dims();
    let rho_s = partial_trace_raw(rho.matrix(), d1, d2, side);
    let mut q_bath = 0.0;
    for bath in baths.iter().filter(|b| b.partition == side) {
        let diss = bath_dissipator_reduced(bath, &rho_s);
        q_bath += trace_product(split.h_prime.matrix(), &diss).re;
    }
    Ok((eq9 + q_bath, q_bath))
}

/// Both internal-heat forms, (full-space commutator, reduced partial-trace),
/// for equivalence tests.
pub fn heat_flux_internal_forms(
    sys: &BipartiteSystem,
    rho: &DensityMatrix,
    side: Side,
    split: &LembasSplit,
) -> Result<(f64, f64)> {
    check_full_dim(sys, rho.dim(), "heat_flux")?;
    let (d1, d2) = sys.dims();
    let (rho1, rho2) = reduced_states(rho.matrix(), d1, d2);
    let c12 = rho.matrix() - &kron_raw(&rho1, &rho2);

    // full-space form: −i Tr{[(H′ ⊗ I), H₁₂] C₁₂}
    let h_prime_emb = match side {
        Side::One => crate::operator::embed_side1(split.h_prime.matrix(), d2),
        Side::Two => crate::operator::embed_side2(split.h_prime.matrix(), d1),
    };
    let h12 = sys.interaction_operator();
    let comm = commutator_raw(&h_prime_emb, h12.matrix());
    let eq9 = (-IM * trace_product(&comm, &c12)).re;

    // reduced form: −i Tr_s{H′ · Tr_other{[H₁₂, C₁₂]}}
    let mut reduced = CMatrix::zeros(match side {
        Side::One => (d1, d1),
        Side::Two => (d2, d2),
    });
    for (a, b) in sys.interaction() {
        match side {
            Side::One => {
                let g = contract_partner_side1(b.matrix(), &c12, d1, d2);
                reduced = reduced + (a.matrix().dot(&g) - g.dot(a.matrix()));
            }
            Side::Two => {
                let g = contract_partner_side2(a.matrix(), &c12, d1, d2);
                reduced = reduced + (b.matrix().dot(&g) - g.dot(b.matrix()));
            }
        }
    }
    let eq8 = (-IM * trace_product(split.h_prime.matrix(), &reduced)).re;
    Ok((eq9, eq8))
}

/// G[m,n] = Σ_{k,k'} B[k,k']·C[(m,k'),(n,k)], so that
/// Tr₂{[A⊗B, C]} = A·G − G·A.
pub(crate) fn contract_partner_side1(b: &CMatrix, c12: &CMatrix, d1: usize, d2: usize) -> CMatrix {
    let mut g = CMatrix::zeros((d1, d1));
    for m in 0..d1 {
        for n in 0..d1 {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..d2 {
                for kp in 0..d2 {
                    acc += b[[k, kp]] * c12[[m * d2 + kp, n * d2 + k]];
                }
            }
            g[[m, n]] = acc;
        }
    }
    g
}

/// G[x,y] = Σ_{i,i'} A[i,i']·C[(i',x),(i,y)], so that
/// Tr₁{[A⊗B, C]} = B·G − G·B.
pub(crate) fn contract_partner_side2(a: &CMatrix, c12: &CMatrix, d1: usize, d2: usize) -> CMatrix {
    let mut g = CMatrix::zeros((d2, d2));
    for x in 0..d2 {
        for y in 0..d2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..d1 {
                for ip in 0..d1 {
                    acc += a[[i, ip]] * c12[[ip * d2 + x, i * d2 + y]];
                }
            }
            g[[x, y]] = acc;
        }
    }
    g
}

/// Internal energy U_s = Tr{H′ ρ_s}.
pub fn internal_energy(rho: &DensityMatrix, side: Side, split: &LembasSplit) -> Result<f64> {
    let d_side = split.h_prime.dim();
    if rho.dim() % d_side != 0 {
        return Err(Error::DimensionMismatch {
            context: "internal_energy",
            expected: d_side,
            actual: rho.dim(),
        });
    }
    let d_other = rho.dim() / d_side;
    let (d1, d2) = match side {
        Side::One => (d_side, d_other),
        Side::Two => (d_other, d_side),
    };
    let rho_s = partial_trace_raw(rho.matrix(), d1, d2, side);
    Ok(trace_product(split.h_prime.matrix(), &rho_s).re)
}

// ---------------------------------------------------------------------------
// per-sample record
// ---------------------------------------------------------------------------

/// One time sample of the flux bookkeeping along a trajectory.
#[derive(Clone, Copy, Debug)]
pub struct FluxSample {
    pub t: f64,
    /// Work fluxes into partitions I and II.
    pub w1: f64,
    pub w2: f64,
    /// Total heat fluxes (internal + bath).
    pub q1: f64,
    pub q2: f64,
    /// Bath contribution to q1; zero when partition I has no bath.
    pub q1_bath: f64,
    /// Internal energies Tr{H′ρ_s}.
    pub u1: f64,
    pub u2: f64,
    /// Local von Neumann entropies.
    pub s1: f64,
    pub s2: f64,
    /// ‖C₁₂‖_max.
    pub corr_norm: f64,
    /// Tr{Hρ}.
    pub e_total: f64,
    /// |Tr ρ − 1| before renormalization of the sample.
    pub trace_err: f64,
    /// ‖ρ − ρ†‖_max before re-Hermitization of the sample.
    pub herm_err: f64,
    /// Most negative eigenvalue of ρ (exact spectrum for open runs; the
    /// conserved initial spectrum for unitary runs).
    pub min_eig: f64,
}

impl FluxSample {
    pub fn all_finite(&self) -> bool {
        [
            self.t,
            self.w1,
            self.w2,
            self.q1,
            self.q2,
            self.q1_bath,
            self.u1,
            self.u2,
            self.s1,
            self.s2,
            self.corr_norm,
            self.e_total,
            self.trace_err,
            self.herm_err,
            self.min_eig,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        build_model, initial_state, number_op, pauli_x, pauli_z, thermal_qubit_bath, ModeState,
        ModelKind, ModelParams, SpinState,
    };
    use crate::operator::{expectation, kron, partial_trace};

    fn displaced_params(g: f64, c: f64, x0: f64, n_fock: usize) -> ModelParams {
        ModelParams {
            omega0: 1.0,
            nu: 1.0,
            g,
            n_fock,
            c,
            x0,
            ..Default::default()
        }
    }

    #[test]
    fn pinch_split_cases() {
        // commuting: h_a = h_eff, h_b = 0
        let split = pinch_split(&pauli_z().scaled(Complex64::new(0.7, 0.0)), &pauli_z()).unwrap();
        assert!(split.h_b.max_norm() < 1e-14);
        assert!(
            split
                .h_a
                .sub(&pauli_z().scaled(Complex64::new(0.7, 0.0)))
                .max_norm()
                < 1e-14
        );

        // fully off-diagonal: h_a = 0
        let split = pinch_split(&pauli_x(), &pauli_z()).unwrap();
        assert!(split.h_a.max_norm() < 1e-14);
        assert!(split.h_b.sub(&pauli_x()).max_norm() < 1e-14);

        // mixed: σ_z + σ_x splits into diagonal and off-diagonal parts
        let h_eff = pauli_z().add(&pauli_x());
        let split = pinch_split(&h_eff, &pauli_z()).unwrap();
        assert!(split.h_a.sub(&pauli_z()).max_norm() < 1e-12);
        assert!(split.h_b.sub(&pauli_x()).max_norm() < 1e-12);
    }

    #[test]
    fn lembas_split_invariants() {
        let h_local = pauli_z().add(&pauli_x().scaled(Complex64::new(0.3, 0.0)));
        let h_eff = pauli_x()
            .scaled(Complex64::new(0.8, 0.0))
            .add(&pauli_z().scaled(Complex64::new(0.2, 0.0)));
        let split = pinch_split(&h_eff, &h_local).unwrap();
        // additivity
        assert!(split.h_a.add(&split.h_b).sub(&split.h_eff).max_norm() < 1e-12);
        // [h_a, H_local] = 0
        let comm = crate::operator::commutator(&split.h_a, &h_local).unwrap();
        assert!(comm.max_norm() <= 1e-10 * h_local.max_norm().max(1.0));
        // Hilbert–Schmidt orthogonality Tr{h_a† h_b} = 0
        let overlap = trace_product(split.h_a.dagger().matrix(), split.h_b.matrix());
        assert!(overlap.norm() < 1e-10);
    }

    #[test]
    fn effective_hamiltonian_product_state() {
        // single term A⊗B on a product state gives A·⟨B⟩
        let p = displaced_params(0.25, 0.0, 0.8, 20);
        let sys = build_model(ModelKind::Displaced, &p).unwrap();
        let st = initial_state(SpinState::Excited, ModeState::Coherent(0.8), &p).unwrap();
        let heff = effective_hamiltonian(&sys, &st.rho, Side::One).unwrap();
        // ⟨g·x⟩ on |x₀⟩ = 2gx₀
        let expect = pauli_z().scaled(Complex64::new(0.25 * 2.0 * 0.8, 0.0));
        assert!(heff.sub(&expect).max_norm() < 1e-9);

        // zero coupling → zero operator
        let p0 = displaced_params(0.0, 0.0, 0.8, 20);
        let sys0 = build_model(ModelKind::Displaced, &p0).unwrap();
        let heff0 = effective_hamiltonian(&sys0, &st.rho, Side::One).unwrap();
        assert_eq!(heff0.max_norm(), 0.0);
    }

    #[test]
    fn heff_derivative_vanishes_in_known_cases() {
        // stationary full state: ρ Gibbs-like diagonal of H, closed
        let p = displaced_params(0.2, 0.0, 0.0, 6);
        let sys = build_model(ModelKind::Displaced, &p).unwrap();
        let h = sys.total_hamiltonian();
        let spec = spectral_decomposition(&h).unwrap();
        let weights: Vec<f64> = spec
            .eigenvalues
            .iter()
            .map(|e| (-e).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        let gibbs = spec.apply(|x| Complex64::new((-x).exp() / z, 0.0));
        let rho = DensityMatrix::new(Operator::from_matrix(hermitize(&gibbs)).unwrap()).unwrap();
        let rho_dot = crate::dynamics::liouvillian(&sys, &[], &rho).unwrap();
        assert!(rho_dot.max_norm() < 1e-12);
        let hdot = heff_time_derivative(&sys, &rho_dot, Side::One).unwrap();
        assert!(hdot.max_norm() < 1e-12);

        // fully commuting model: Tr{Bρ̇₂} = −i⟨[B,H]⟩ = 0
        let pd = ModelParams {
            omega0: 1.0,
            nu: 1.0,
            g: 0.4,
            n_fock: 8,
            ..Default::default()
        };
        let sysd = build_model(ModelKind::Dispersive, &pd).unwrap();
        let st = initial_state(SpinState::Mixture(0.3), ModeState::Coherent(0.7), &pd).unwrap();
        let rho_dot = crate::dynamics::liouvillian(&sysd, &[], &st.rho).unwrap();
        let hdot = heff_time_derivative(&sysd, &rho_dot, Side::One).unwrap();
        assert!(hdot.max_norm() < 1e-12);

        // displaced model at t=0 with zero initial momentum: ⟨ẋ⟩(0) = 0
        let pm = displaced_params(0.3, 0.25, 1.0, 30);
        let sysm = build_model(ModelKind::Displaced, &pm).unwrap();
        let st = initial_state(SpinState::Mixture(0.25), ModeState::Coherent(1.0), &pm).unwrap();
        let rho_dot = crate::dynamics::liouvillian(&sysm, &[], &st.rho).unwrap();
        let hdot = heff_time_derivative(&sysm, &rho_dot, Side::One).unwrap();
        assert!(hdot.max_norm() < 1e-10);
    }

    #[test]
    fn work_flux_structural_zeros() {
        // fully commuting closed model: Ẇ₁ = 0
        let p = ModelParams {
            omega0: 1.0,
            nu: 1.0,
            g: 0.4,
            n_fock: 10,
            ..Default::default()
        };
        let sys = build_model(ModelKind::Dispersive, &p).unwrap();
        let st = initial_state(SpinState::Mixture(0.3), ModeState::Coherent(0.6), &p).unwrap();
        let rho = crate::dynamics::propagate_closed(&sys, &st.rho, 0.37).unwrap();
        let rho_dot = crate::dynamics::liouvillian(&sys, &[], &rho).unwrap();
        let heff = effective_hamiltonian(&sys, &rho, Side::One).unwrap();
        let split = pinch_split(&heff, sys.local_hamiltonian(Side::One)).unwrap();
        let w1 = work_flux(&sys, &rho, &rho_dot, Side::One, &split).unwrap();
        assert!(w1.abs() < 1e-10);

        // displaced model with c = 1/2: the (1−2c) prefactor kills Ẇ₁
        let pm = displaced_params(0.3, 0.5, 1.0, 40);
        let sysm = build_model(ModelKind::Displaced, &pm).unwrap();
        let st = initial_state(SpinState::Mixture(0.5), ModeState::Coherent(1.0), &pm).unwrap();
        let rho = crate::dynamics::propagate_closed(&sysm, &st.rho, 0.8).unwrap();
        let rho_dot = crate::dynamics::liouvillian(&sysm, &[], &rho).unwrap();
        let heff = effective_hamiltonian(&sysm, &rho, Side::One).unwrap();
        let split = pinch_split(&heff, sysm.local_hamiltonian(Side::One)).unwrap();
        let w1 = work_flux(&sysm, &rho, &rho_dot, Side::One, &split).unwrap();
        assert!(w1.abs() < 1e-10);
    }

    #[test]
    fn work_flux_matches_coherent_formula() {
        // c = 0, x₀ = 1, g = 0.1, ν = 1: |Ẇ₁| = 2g(νx₀+g)|sin νt| to 1%
        let p = displaced_params(0.1, 0.0, 1.0, 40);
        let sys = build_model(ModelKind::Displaced, &p).unwrap();
        let st = initial_state(SpinState::Excited, ModeState::Coherent(1.0), &p).unwrap();
        let amp = 2.0 * 0.1 * (1.0 + 0.1);
        for &t in &[0.4, 1.1, 2.0, 2.9] {
            let rho = crate::dynamics::propagate_closed(&sys, &st.rho, t).unwrap();
            let rho_dot = crate::dynamics::liouvillian(&sys, &[], &rho).unwrap();
            let heff = effective_hamiltonian(&sys, &rho, Side::One).unwrap();
            let split = pinch_split(&heff, sys.local_hamiltonian(Side::One)).unwrap();
            let w1 = work_flux(&sys, &rho, &rho_dot, Side::One, &split).unwrap();
            let expect = amp * t.sin().abs();
            assert!(
                (w1.abs() - expect).abs() <= 0.01 * amp,
                "t={t}: |w1|={} expected {expect}",
                w1.abs()
            );
        }
    }

    #[test]
    fn heat_flux_structural_zeros_and_envelope() {
        // separable state, no baths → q = 0
        let p = displaced_params(0.3, 0.25, 0.5, 20);
        let sys = build_model(ModelKind::Displaced, &p).unwrap();
        let st = initial_state(SpinState::Mixture(0.25), ModeState::Coherent(0.5), &p).unwrap();
        let heff = effective_hamiltonian(&sys, &st.rho, Side::Two).unwrap();
        let split = pinch_split(&heff, sys.local_hamiltonian(Side::Two)).unwrap();
        let (q2, q2_bath) = heat_flux(&sys, &st.rho, Side::Two, &split, &[]).unwrap();
        assert!(q2.abs() < 1e-12);
        assert_eq!(q2_bath, 0.0);

        // partially commuting closed: q₁ ≡ 0 at any t
        let rho_t = crate::dynamics::propagate_closed(&sys, &st.rho, 1.3).unwrap();
        let heff1 = effective_hamiltonian(&sys, &rho_t, Side::One).unwrap();
        let split1 = pinch_split(&heff1, sys.local_hamiltonian(Side::One)).unwrap();
        let (q1, _) = heat_flux(&sys, &rho_t, Side::One, &split1, &[]).unwrap();
        assert!(q1.abs() < 1e-12);

        // c = 1/2, g = 0.1: |q₂| = 0.02|sin t| to 1%, independent of x₀
        for &x0 in &[0.0, 1.0] {
            let p = displaced_params(0.1, 0.5, x0, 40);
            let sys = build_model(ModelKind::Displaced, &p).unwrap();
            let st = initial_state(SpinState::Mixture(0.5), ModeState::Coherent(x0), &p).unwrap();
            for &t in &[0.5, 1.4, 2.2] {
                let rho = crate::dynamics::propagate_closed(&sys, &st.rho, t).unwrap();
                let heff2 = effective_hamiltonian(&sys, &rho, Side::Two).unwrap();
                let split2 = pinch_split(&heff2, sys.local_hamiltonian(Side::Two)).unwrap();
                let (q2, _) = heat_flux(&sys, &rho, Side::Two, &split2, &[]).unwrap();
                let expect = 0.02 * t.sin().abs();
                assert!(
                    (q2.abs() - expect).abs() <= 0.01 * 0.02,
                    "x0={x0} t={t}: |q2|={} expected {expect}",
                    q2.abs()
                );
            }
        }
    }

    #[test]
    fn internal_energy_examples() {
        // g = 0, spin excited → U₁ = ω₀/2
        let p = displaced_params(0.0, 0.0, 0.0, 6);
        let sys = build_model(ModelKind::Displaced, &p).unwrap();
        let st = initial_state(SpinState::Excited, ModeState::Fock(0), &p).unwrap();
        let heff = effective_hamiltonian(&sys, &st.rho, Side::One).unwrap();
        let split = pinch_split(&heff, sys.local_hamiltonian(Side::One)).unwrap();
        let u1 = internal_energy(&st.rho, Side::One, &split).unwrap();
        assert!((u1 - 0.5).abs() < 1e-12);

        // dispersive: U₁ = ω₀⟨σ_z⟩/2 + g⟨σ_z⟩⟨a†a⟩ (direct-trace oracle)
        let pd = ModelParams {
            omega0: 1.4,
            nu: 1.0,
            g: 0.3,
            n_fock: 12,
            ..Default::default()
        };
        let sysd = build_model(ModelKind::Dispersive, &pd).unwrap();
        let st = initial_state(SpinState::Mixture(0.2), ModeState::Coherent(0.9), &pd).unwrap();
        let rho = crate::dynamics::propagate_closed(&sysd, &st.rho, 0.6).unwrap();
        let heff = effective_hamiltonian(&sysd, &rho, Side::One).unwrap();
        let split = pinch_split(&heff, sysd.local_hamiltonian(Side::One)).unwrap();
        let u1 = internal_energy(&rho, Side::One, &split).unwrap();

        let sz = kron(&pauli_z(), &Operator::identity(12));
        let n_emb = kron(&Operator::identity(2), &number_op(12));
        let sz_mean = expectation(&sz, &rho).unwrap();
        let n_mean = expectation(&n_emb, &rho).unwrap();
        let oracle = 1.4 * sz_mean / 2.0 + 0.3 * sz_mean * n_mean;
        assert!((u1 - oracle).abs() < 1e-10);
    }

    #[test]
    fn correlations_examples() {
        // product state → 0
        let p = displaced_params(0.2, 0.3, 0.5, 8);
        let st = initial_state(SpinState::Mixture(0.3), ModeState::Coherent(0.5), &p).unwrap();
        let c = extract_correlations(&st.rho, (2, 8)).unwrap();
        assert!(c.max_norm() < 1e-14);
        assert!(c.trace().norm() < 1e-14);

        // Bell projector → ‖C₁₂‖_max = 1/2
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = ndarray::Array1::from(vec![
            Complex64::new(s, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(s, 0.0),
        ]);
        let bell = DensityMatrix::from_pure(&psi).unwrap();
        let c = extract_correlations(&bell, (2, 2)).unwrap();
        assert!((c.max_norm() - 0.5).abs() < 1e-12);

        // mixture ⊗ coherent under the displaced model correlates for t > 0
        let pm = displaced_params(0.3, 0.5, 1.0, 40);
        let sysm = build_model(ModelKind::Displaced, &pm).unwrap();
        let st = initial_state(SpinState::Mixture(0.5), ModeState::Coherent(1.0), &pm).unwrap();
        let rho = crate::dynamics::propagate_closed(&sysm, &st.rho, 1.5).unwrap();
        let c = extract_correlations(&rho, (2, 40)).unwrap();
        assert!(c.max_norm() > 1e-3);
    }

    #[test]
    fn heat_forms_agree_with_bath_attached() {
        let p = displaced_params(0.3, 0.25, 0.5, 14);
        let sys = build_model(ModelKind::Displaced, &p).unwrap();
        let bath = thermal_qubit_bath(1.2, 1.0, 0.5).unwrap();
        let st = initial_state(SpinState::Mixture(0.25), ModeState::Coherent(0.5), &p).unwrap();
        let mut rho = st.rho.clone();
        for _ in 0..200 {
            rho = crate::dynamics::step_rk4(&sys, std::slice::from_ref(&bath), &rho, 0.005)
                .unwrap();
        }
        let heff = effective_hamiltonian(&sys, &rho, Side::One).unwrap();
        let split = pinch_split(&heff, sys.local_hamiltonian(Side::One)).unwrap();
        let (eq9, eq8) = heat_flux_internal_forms(&sys, &rho, Side::One, &split).unwrap();
        assert!((eq9 - eq8).abs() < 1e-10);
        let (q1, q1_bath) = heat_flux(&sys, &rho, Side::One, &split, &[bath.clone()]).unwrap();
        // internal part is exactly zero for this class; all heat is bath heat
        assert!((q1 - q1_bath).abs() < 1e-10);
        assert!(q1_bath.abs() > 1e-6); // genuinely relaxing
        let rho1 = partial_trace(rho.op(), (2, 14), Side::One).unwrap();
        let diss = bath_dissipator_reduced(&bath, rho1.matrix());
        let oracle = trace_product(split.h_prime.matrix(), &diss).re;
        assert!((q1_bath - oracle).abs() < 1e-12);
    }
}
