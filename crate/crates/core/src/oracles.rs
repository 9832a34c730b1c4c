//! Closed-form reference solutions, used as independent oracles by the test
//! suites. Everything here is built from scalar arithmetic — no reuse of the
//! operator machinery beyond assembling the final matrices — so agreement
//! with the numerical engine is a genuine cross-check.
//!
//! Sign conventions (the same ones the model catalog fixes): σ_z|e⟩ = +|e⟩,
//! the spin mixture c|g⟩⟨g| + (1−c)|e⟩⟨e|, coherent displacement α₀ = x₀
//! real with zero initial momentum, and H₊ = νa†a + g·x acting on the |e⟩
//! branch. Under these conventions ⟨ẋ⟩_{α±} = −2ν(x₀ ± g/ν) sin νt, which
//! fixes every sign below.

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{CMatrix, DensityMatrix, Operator};

/// Parameters of the mixture ⊗ coherent-state example on the displaced
/// spin-oscillator model.
#[derive(Clone, Copy, Debug)]
pub struct CoherentExampleParams {
    /// Spin mixing weight on |g⟩⟨g|.
    pub c: f64,
    pub g: f64,
    pub nu: f64,
    /// Re[α₀]; the initial momentum is zero.
    pub x0: f64,
}

impl CoherentExampleParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::InvalidParameter(format!(
                "mixing weight c must lie in [0,1], got {}",
                self.c
            )));
        }
        if self.nu <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "nu must be positive, got {}",
                self.nu
            )));
        }
        Ok(())
    }
}

/// Closed-form fluxes (Ẇ₁, Q̇₁, Q̇₂) of the coherent-state example:
///
/// ```text
/// Ẇ₁ = −2g(1−2c)[νx₀ + (1−2c)g]·sin νt
/// Q̇₁ = 0
/// Q̇₂ = +8c(1−c)g²·sin νt
/// ```
///
/// Magnitudes and periods are convention-free; the overall signs follow from
/// the conventions in the module docs.
pub fn coherent_example_fluxes(p: &CoherentExampleParams, t: f64) -> (f64, f64, f64) {
    let s = (p.nu * t).sin();
    let w1 = -2.0 * p.g * (1.0 - 2.0 * p.c) * (p.nu * p.x0 + (1.0 - 2.0 * p.c) * p.g) * s;
    let q2 = 8.0 * p.c * (1.0 - p.c) * p.g * p.g * s;
    (w1, 0.0, q2)
}

/// Which spin branch drives the oscillator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// |e⟩, evolving under νa†a + g·x.
    Plus,
    /// |g⟩, evolving under νa†a − g·x.
    Minus,
}

/// Coherent amplitude of a branch in the displaced frame:
/// α±(t) = ∓g/ν + (α₀ ± g/ν)·e^{−iνt}.
///
/// Derivation: with b = a ± g/ν the branch Hamiltonian is ν b†b − g²/ν, so
/// the b-amplitude simply rotates; translating back shifts by ∓g/ν.
pub fn branch_amplitude(p: &CoherentExampleParams, t: f64, branch: Branch) -> Complex64 {
    let shift = match branch {
        Branch::Plus => p.g / p.nu,
        Branch::Minus => -p.g / p.nu,
    };
    let rot = Complex64::cis(-p.nu * t);
    rot * (p.x0 + shift) - shift
}

/// The displaced coherent state |α±(t)⟩ on a truncated Fock space, assembled
/// from the scalar coefficients c_n = e^{−|α|²/2} αⁿ/√n!, renormalized after
/// truncation. Also returns the truncation leakage of the untruncated state.
pub fn displaced_coherent_state(
    p: &CoherentExampleParams,
    t: f64,
    branch: Branch,
    n_fock: usize,
) -> Result<(DensityMatrix, f64)> {
    p.validate()?;
    let alpha = branch_amplitude(p, t, branch);
    let mut coeff = Array1::<Complex64>::zeros(n_fock);
    // c_n = e^{−|α|²/2} αⁿ/√n!, built up iteratively
    let mut cur = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..n_fock {
        coeff[n] = cur;
        cur = cur * alpha / ((n as f64 + 1.0).sqrt());
    }
    let norm2: f64 = coeff.iter().map(|z| z.norm_sqr()).sum();
    let leakage = (1.0 - norm2).max(0.0);
    let norm = norm2.sqrt();
    coeff.mapv_inplace(|z| z / norm);
    let rho = DensityMatrix::from_pure(&coeff)?;
    Ok((rho, leakage))
}

/// Data describing a fully commuting interaction in the joint eigenbasis:
/// H₁ = Σ εᵢ|εᵢ⟩⟨εᵢ|, A₁ = Σ aᵢ|εᵢ⟩⟨εᵢ|, H₂ = Σ E_k|E_k⟩⟨E_k|,
/// B₂ = Σ b_k|E_k⟩⟨E_k|, with p_k = ⟨E_k|ρ₂(0)|E_k⟩.
#[derive(Clone, Debug)]
pub struct AppendixAData {
    pub eps: Vec<f64>,
    pub a: Vec<f64>,
    /// Partner eigenenergies E_k. They cancel from the reduced dynamics of
    /// partition I and are kept only for completeness.
    pub big_e: Vec<f64>,
    pub b: Vec<f64>,
    pub p: Vec<f64>,
    pub rho1_0: DensityMatrix,
}

impl AppendixAData {
    pub fn validate(&self) -> Result<()> {
        let d1 = self.rho1_0.dim();
        if self.eps.len() != d1 || self.a.len() != d1 {
            return Err(Error::DimensionMismatch {
                context: "appendix-a spin coefficients",
                expected: d1,
                actual: self.eps.len().min(self.a.len()),
            });
        }
        if self.big_e.len() != self.b.len() || self.b.len() != self.p.len() {
            return Err(Error::InvalidParameter(
                "partner coefficient vectors must share one length".into(),
            ));
        }
        let total: f64 = self.p.iter().sum();
        if self.p.iter().any(|&w| w < -1e-12) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "p must be a probability vector; sum = {total}"
            )));
        }
        Ok(())
    }
}

/// Reduced state of partition I under a fully commuting interaction:
///
/// ```text
/// ρ₁(t)[i,j] = e^{−i(εᵢ−εⱼ)t} · (Σ_k p_k e^{−i(aᵢ−aⱼ)b_k t}) · ρ₁(0)[i,j]
/// ```
///
/// Populations are frozen; coherences dephase non-unitarily unless the
/// partner starts in an eigenstate (p one-hot).
pub fn appendix_a_reduced_state(d: &AppendixAData, t: f64) -> Result<DensityMatrix> {
    d.validate()?;
    let d1 = d.rho1_0.dim();
    let mut m = CMatrix::zeros((d1, d1));
    for i in 0..d1 {
        for j in 0..d1 {
            let mut dephase = Complex64::new(0.0, 0.0);
            for (k, &pk) in d.p.iter().enumerate() {
                dephase += pk * Complex64::cis(-(d.a[i] - d.a[j]) * d.b[k] * t);
            }
            let free = Complex64::cis(-(d.eps[i] - d.eps[j]) * t);
            m[[i, j]] = free * dephase * d.rho1_0.matrix()[[i, j]];
        }
    }
    Ok(DensityMatrix::unchecked(
        Operator::from_matrix(m)?,
        d.rho1_0.tolerance(),
    ))
}
