//! Numerical tolerances used across the crate.
//!
//! Relative tolerances multiply the max-entry norm of the operator(s)
//! involved; absolute ones apply to O(1) quantities (traces, entropies,
//! probabilities). Everything is double precision.

/// Hermiticity residual allowed on operators that claim to be Hermitian,
/// relative to the max-entry norm.
pub const HERMITICITY_REL: f64 = 1e-12;

/// |Tr ρ − 1| allowed on a density matrix.
pub const DM_TRACE: f64 = 1e-10;

/// Density-matrix eigenvalues may undershoot zero by this much.
pub const DM_MIN_EIG: f64 = 1e-10;

/// Eigenvalues below this are treated as exact zeros inside logarithms.
pub const EIG_CLAMP: f64 = 1e-14;

/// State weight above which a missing support direction counts as a genuine
/// divergence of the relative entropy.
pub const SUPPORT_WEIGHT: f64 = 1e-12;

/// Floor under eigenvalues before taking logarithms; everything above it is
/// a representable positive number with a meaningful log.
pub const LOG_FLOOR: f64 = 1e-300;

/// Aggregate |w·ln μ| carried by sub-clamp reference directions above which
/// a relative entropy counts as genuinely divergent. Deep thermal tails
/// (μ ~ 1e−20 with weight ~1e−12) contribute ~1e−10 nats and stay finite;
/// a rank-deficient reference under a correlated state contributes O(1).
pub const DIVERGENCE_NATS: f64 = 1e-6;

/// Spectral reconstruction error ‖VΛV† − M‖_max, relative to ‖M‖_max.
pub const SPECTRAL_RECONSTRUCTION_REL: f64 = 1e-10;

/// Unitarity check ‖U†U − I‖_max for exponentials of i × Hermitian.
pub const UNITARITY: f64 = 1e-10;

/// Eigenvalue grouping width for the pinching projector, relative to the
/// max-entry norm of the local Hamiltonian. Catalog degeneracies are exact,
/// so inclusive grouping at this width is safe.
pub const PINCH_DEGENERACY_REL: f64 = 1e-9;

/// Commutator norm below which two operators count as commuting, relative to
/// the product of their max-entry norms.
pub const COMMUTATION_REL: f64 = 1e-10;

/// Agreement required between the two algebraic forms of the internal heat
/// flux (trace-cyclicity identity), relative to max(1, ‖H‖_max).
pub const HEAT_FORM_AGREEMENT: f64 = 1e-9;

/// First-law residual |dU/dt − (Ẇ + Q̇)| allowed, relative to max(|U|, 1).
/// dU/dt is a central difference over the sample grid.
pub const FIRST_LAW: f64 = 1e-6;

/// Relative drift of Tr{Hρ} allowed over a closed run.
pub const ENERGY_DRIFT_REL: f64 = 1e-8;

/// Flux magnitude counting as zero for a fully commuting interaction,
/// relative to ‖H‖_max.
pub const FLUX_ZERO_REL: f64 = 1e-10;

/// Tolerance on flux sum rules (Ẇ₁+Ẇ₂, Q̇₁+Q̇₂), relative to ‖H‖_max.
pub const FLUX_SUM_REL: f64 = 1e-8;

/// Zero-heat-flux tolerance for the open partially-commuting case, relative
/// to max(1, ‖H‖_max).
pub const OPEN_HEAT_ZERO: f64 = 1e-9;

/// All fluxes must fall below this once a bathed fully-commuting system has
/// thermalized (t ≳ 10/γ₀).
pub const STEADY_STATE_FLUX: f64 = 1e-7;

/// Residual allowed in ΔS₁ = ΔS^ir + ΔS^re.
pub const ENTROPY_IDENTITY: f64 = 1e-8;

/// Entropy production may undershoot zero by this much.
pub const ENTROPY_PRODUCTION_FLOOR: f64 = 1e-10;

/// Initial-state weight above the Fock truncation that triggers a warning.
pub const TRUNCATION_LEAKAGE: f64 = 1e-8;

/// Hard error threshold on the most negative density-matrix eigenvalue
/// produced by the RK4 integrator.
pub const INTEGRATOR_MIN_EIG: f64 = 1e-6;

/// Per-sample |Tr ρ − 1| bound recorded as a trajectory invariant.
pub const TRACE_ERR_MAX: f64 = 1e-8;

/// Recommended RK4 step bound: dt ≤ RK4_STABILITY_FACTOR / ‖H‖_max.
/// A heuristic, not enforced; accuracy is measured against the exact
/// propagator instead.
pub const RK4_STABILITY_FACTOR: f64 = 0.05;

/// |ΔS₁| above this, paired with |ΔQ₁| below [`CLAUSIUS_DQ`], counts as a
/// counterexample to the proportionality dS₁ = β* dQ₁.
pub const CLAUSIUS_DS: f64 = 1e-8;
pub const CLAUSIUS_DQ: f64 = 1e-10;
