//! Entropy bookkeeping: the reversible/irreversible decomposition of the
//! local entropy change, and the effective-temperature diagnostic.
//!
//! For a joint state that starts separable, ρ(0) = ρ₁(0)⊗ρ₂(0), the change
//! of the partition-I entropy between 0 and τ decomposes as
//!
//! ```text
//! ΔS₁(τ) = D[ρ(τ) ‖ ρ₁(τ)⊗ρ₂(0)] + Tr{(ρ₂(τ) − ρ₂(0)) ln ρ₂(0)}
//!          └──── ΔS₁^ir ≥ 0 ────┘   └──────── ΔS₁^re ────────┘
//! ```
//!
//! The identity requires unitary joint evolution, so it is asserted for
//! closed runs only; the decomposition is still *computed* for single-bath
//! runs (entropy production stays non-negative there — it is a relative
//! entropy — but the identity picks up the total entropy change of the
//! dissipative evolution). Runs with two baths are out of scope.
//!
//! The proportionality dS₁ = β*·dQ₁ is implemented strictly as a falsifiable
//! diagnostic: [`clausius_diagnostic`] hunts for intervals where entropy
//! moves while heat does not.

use num_complex::Complex64;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::operator::{
    entropy_from_spectrum, hermitize, kron, partial_trace, relative_entropy,
    spectral_decomposition, trace_product, von_neumann_entropy, CMatrix, DensityMatrix, Operator,
    Side,
};
use crate::tolerances as tol;

/// One time sample of the entropy bookkeeping.
#[derive(Clone, Copy, Debug)]
pub struct EntropyRecord {
    pub t: f64,
    /// S(ρ₁(t)).
    pub s1: f64,
    /// S(ρ₁(t)) − S(ρ₁(0)).
    pub delta_s1: f64,
    /// Entropy production D[ρ(t) ‖ ρ₁(t)⊗ρ₂(0)]; +∞ on support violation.
    pub s_irr: f64,
    /// Reversible part Tr{(ρ₂(t) − ρ₂(0)) ln ρ₂(0)}; −∞ on support violation.
    pub s_rev: f64,
    /// Pointwise ΔS₁/ΔQ₁ over the preceding sample interval, where the heat
    /// increment is resolvable; never interpolated.
    pub beta_star: Option<f64>,
}

/// Result of the standalone decomposition operation.
#[derive(Clone, Debug)]
pub struct EntropyDecomposition {
    pub delta_s1: f64,
    pub s_irr: f64,
    pub s_rev: f64,
    /// Present when the reference state ρ₂(0) lacks support that ρ(τ) reaches,
    /// in which case `s_irr = +∞` and `s_rev = −∞`.
    pub note: Option<String>,
}

/// Reversible/irreversible decomposition of ΔS₁ between τ=0 and the given
/// joint state ρ(τ). Independent of the trajectory fast path: the entropy
/// production is evaluated as a literal relative entropy.
pub fn entropy_decomposition(
    rho_tau: &DensityMatrix,
    rho1_0: &DensityMatrix,
    rho2_0: &DensityMatrix,
    dims: (usize, usize),
) -> Result<EntropyDecomposition> {
    let (d1, d2) = dims;
    if rho_tau.dim() != d1 * d2 || rho1_0.dim() != d1 || rho2_0.dim() != d2 {
        return Err(Error::DimensionMismatch {
            context: "entropy_decomposition",
            expected: d1 * d2,
            actual: rho_tau.dim(),
        });
    }
    let rho1_tau = partial_trace(rho_tau.op(), dims, Side::One)?;
    let rho2_tau = partial_trace(rho_tau.op(), dims, Side::Two)?;
    let rho1_tau = DensityMatrix::new(Operator::from_matrix(hermitize(rho1_tau.matrix()))?)?;
    let delta_s1 = von_neumann_entropy(&rho1_tau) - von_neumann_entropy(rho1_0);

    // s_rev from the spectral decomposition of ρ₂(0); sub-clamp reference
    // directions contribute their true logarithms unless their combined
    // magnitude marks a genuine divergence
    let spec2 = spectral_decomposition(&Operator::from_matrix(hermitize(rho2_0.matrix()))?)?;
    let x = rho2_tau.matrix().dot(&spec2.eigenvectors);
    let mut s_rev = 0.0;
    let mut divergent_mass = 0.0;
    for j in 0..d2 {
        let mut w = Complex64::new(0.0, 0.0);
        for a in 0..d2 {
            w += spec2.eigenvectors[[a, j]].conj() * x[[a, j]];
        }
        let w = w.re;
        let mu = spec2.eigenvalues[j].max(0.0);
        if spec2.eigenvalues[j] < tol::EIG_CLAMP {
            let log_mu = mu.max(tol::LOG_FLOOR).ln();
            divergent_mass += w.max(0.0) * log_mu.abs();
            s_rev += log_mu * (w - mu);
        } else {
            s_rev += mu.ln() * (w - mu);
        }
    }
    if divergent_mass > tol::DIVERGENCE_NATS {
        return Ok(EntropyDecomposition {
            delta_s1,
            s_irr: f64::INFINITY,
            s_rev: f64::NEG_INFINITY,
            note: Some(format!(
                "reduced state carries {divergent_mass:.2e} nats outside the support of rho2(0); \
                 the decomposition diverges"
            )),
        });
    }

    let reference = DensityMatrix::new(kron(rho1_tau.op(), rho2_0.op()))?;
    let s_irr = relative_entropy(rho_tau, &reference)?;
    let note = s_irr
        .is_infinite()
        .then(|| "rho(tau) reaches outside the support of rho1(tau)⊗rho2(0)".to_string());
    Ok(EntropyDecomposition {
        delta_s1,
        s_irr,
        s_rev,
        note,
    })
}

/// −β₂·(⟨H₂⟩_τ − ⟨H₂⟩_0), valid when ρ₂(0) is thermal for (β₂, H₂).
///
/// Refuses to run when the cached initial partner state is not that thermal
/// state; the identity with the general ΔS^re only holds on the thermal
/// reference.
pub fn reversible_thermal_form(
    traj: &Trajectory,
    beta2: f64,
    h2: &Operator,
) -> Result<Vec<f64>> {
    if beta2 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "reversible_thermal_form needs beta2 > 0, got {beta2}"
        )));
    }
    let spec = spectral_decomposition(h2)?;
    let weights: Vec<f64> = spec.eigenvalues.iter().map(|e| (-beta2 * e).exp()).collect();
    let z: f64 = weights.iter().sum();
    let gibbs = spec.apply(|e| Complex64::new((-beta2 * e).exp() / z, 0.0));
    let diff = &gibbs - traj.rho2_initial.matrix();
    let dev = crate::operator::max_norm(&diff);
    if dev > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "rho2(0) deviates from the thermal state of (beta2, H2) by {dev:.3e}; \
             the thermal form of the reversible entropy does not apply"
        )));
    }
    let h0 = traj.h2_expectation.first().copied().unwrap_or(0.0);
    Ok(traj
        .h2_expectation
        .iter()
        .map(|h| -beta2 * (h - h0))
        .collect())
}

/// Intervals falsifying dS₁ = β*·dQ₁, plus the pointwise β* series.
#[derive(Clone, Debug, Default)]
pub struct ClausiusReport {
    /// Merged (t_start, t_end) intervals where |ΔS₁| > 1e−8 while
    /// |ΔQ₁| < 1e−10 over a sample step.
    pub counterexamples: Vec<(f64, f64)>,
    /// β* = ΔS₁/ΔQ₁ per sample interval, None where ΔQ₁ is unresolvable.
    pub beta_star: Vec<Option<f64>>,
}

impl ClausiusReport {
    pub fn is_empty(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Scan a trajectory for entropy change without heat flow.
pub fn clausius_diagnostic(traj: &Trajectory) -> ClausiusReport {
    let samples = &traj.samples;
    let mut report = ClausiusReport::default();
    let mut open_interval: Option<(f64, f64)> = None;
    for k in 1..samples.len() {
        let prev = &samples[k - 1];
        let cur = &samples[k];
        let dt = cur.t - prev.t;
        let ds = cur.s1 - prev.s1;
        let dq = 0.5 * (cur.q1 + prev.q1) * dt;
        report.beta_star.push((dq.abs() > tol::CLAUSIUS_DQ).then(|| ds / dq));
        if ds.abs() > tol::CLAUSIUS_DS && dq.abs() < tol::CLAUSIUS_DQ {
            open_interval = match open_interval {
                Some((start, _)) => Some((start, cur.t)),
                None => Some((prev.t, cur.t)),
            };
        } else if let Some(iv) = open_interval.take() {
            report.counterexamples.push(iv);
        }
    }
    if let Some(iv) = open_interval {
        report.counterexamples.push(iv);
    }
    report
}

// ---------------------------------------------------------------------------
// streaming fast path used by the trajectory engine
// ---------------------------------------------------------------------------

/// Cached references for per-sample decomposition along a run.
///
/// Closed runs exploit that the full spectrum — hence S(ρ(t)) — is invariant
/// under unitary evolution, so only the cheap marginal terms move; open runs
/// supply the live spectrum of ρ(t) instead. The acceptance suite cross-checks
/// this path against [`entropy_decomposition`].
pub(crate) struct DecompositionContext {
    ln_rho2_0: CMatrix,
    /// Σ |ln μ|·vv† over sub-clamp directions of ρ₂(0): the weight the
    /// evolving state puts here, in nats, decides whether the decomposition
    /// has genuinely diverged.
    divergence_probe: Option<CMatrix>,
    s1_0: f64,
    t2_0: f64,
}

impl DecompositionContext {
    pub(crate) fn new(rho2_0: &CMatrix, s1_0: f64) -> Result<Self> {
        let op = Operator::from_matrix(hermitize(rho2_0))?;
        let spec = spectral_decomposition(&op)?;
        let d2 = rho2_0.nrows();
        let mut ln_m = CMatrix::zeros((d2, d2));
        let mut probe: Option<CMatrix> = None;
        for j in 0..d2 {
            let mu = spec.eigenvalues[j];
            let lnmu = mu.max(tol::LOG_FLOOR).ln();
            for r in 0..d2 {
                for c in 0..d2 {
                    ln_m[[r, c]] +=
                        spec.eigenvectors[[r, j]] * spec.eigenvectors[[c, j]].conj() * lnmu;
                }
            }
            if mu < tol::EIG_CLAMP {
                let probe = probe.get_or_insert_with(|| CMatrix::zeros((d2, d2)));
                for r in 0..d2 {
                    for c in 0..d2 {
                        probe[[r, c]] += spec.eigenvectors[[r, j]]
                            * spec.eigenvectors[[c, j]].conj()
                            * lnmu.abs();
                    }
                }
            }
        }
        let t2_0 = trace_product(rho2_0, &ln_m).re;
        Ok(Self {
            ln_rho2_0: ln_m,
            divergence_probe: probe,
            s1_0,
            t2_0,
        })
    }

    /// Build the record for one sample. `s_total_t` is S(ρ(t)): the cached
    /// initial value for unitary runs, the live value for dissipative ones.
    pub(crate) fn record(&self, t: f64, s1: f64, rho2: &CMatrix, s_total_t: f64) -> EntropyRecord {
        if let Some(probe) = &self.divergence_probe {
            let mass = trace_product(rho2, probe).re;
            if mass > tol::DIVERGENCE_NATS {
                return EntropyRecord {
                    t,
                    s1,
                    delta_s1: s1 - self.s1_0,
                    s_irr: f64::INFINITY,
                    s_rev: f64::NEG_INFINITY,
                    beta_star: None,
                };
            }
        }
        let t2 = trace_product(rho2, &self.ln_rho2_0).re;
        EntropyRecord {
            t,
            s1,
            delta_s1: s1 - self.s1_0,
            s_irr: s1 - s_total_t - t2,
            s_rev: t2 - self.t2_0,
            beta_star: None,
        }
    }
}

pub(crate) fn entropy_identity_residual(rec: &EntropyRecord) -> Option<f64> {
    (rec.s_irr.is_finite() && rec.s_rev.is_finite())
        .then(|| (rec.delta_s1 - (rec.s_irr + rec.s_rev)).abs())
}

// for callers that only need the spectrum-based entropy
pub(crate) fn entropy_of(spectrum: &[f64]) -> f64 {
    entropy_from_spectrum(spectrum)
}
