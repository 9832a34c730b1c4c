//! Dense complex operators, density matrices and spectral primitives.
//!
//! All matrices here are small (dimension up to a few hundred) and every
//! generator we exponentiate is Hermitian, so exponentials, logarithms and
//! entropies all go through one Hermitian eigendecomposition (LAPACK).
//! Functions are pure; values are immutable once built.

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigValsh, Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerances as tol;

pub type CMatrix = Array2<Complex64>;

pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub(crate) const IM: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Which partition of a bipartite system an operation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    One,
    Two,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::One => 1,
            Side::Two => 2,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::One => Side::Two,
            Side::Two => Side::One,
        }
    }
}

// ---------------------------------------------------------------------------
// raw helpers on CMatrix, shared by the hot paths
// ---------------------------------------------------------------------------

pub(crate) fn dagger(m: &CMatrix) -> CMatrix {
    let (r, c) = m.dim();
    CMatrix::from_shape_fn((c, r), |(i, j)| m[[j, i]].conj())
}

/// ‖·‖_max over the entries of a raw matrix.
pub fn max_norm(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub(crate) fn herm_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

/// (m + m†)/2, cheap symmetrization used after round-trips through a basis.
pub(crate) fn hermitize(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    CMatrix::from_shape_fn((n, n), |(i, j)| (m[[i, j]] + m[[j, i]].conj()) * 0.5)
}

pub(crate) fn trace(m: &CMatrix) -> Complex64 {
    m.diag().sum()
}

/// Tr{a·b} without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[[i, j]] * b[[j, i]];
        }
    }
    acc
}

pub(crate) fn commutator_raw(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) - b.dot(a)
}

pub(crate) fn kron_raw(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = CMatrix::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[[i, j]];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[[i * rb + k, j * cb + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// a ⊗ I_{d₂}
pub(crate) fn embed_side1(a: &CMatrix, d2: usize) -> CMatrix {
    let d1 = a.nrows();
    let mut out = CMatrix::zeros((d1 * d2, d1 * d2));
    for i in 0..d1 {
        for j in 0..d1 {
            let v = a[[i, j]];
            for k in 0..d2 {
                out[[i * d2 + k, j * d2 + k]] = v;
            }
        }
    }
    out
}

/// I_{d₁} ⊗ b
pub(crate) fn embed_side2(b: &CMatrix, d1: usize) -> CMatrix {
    let d2 = b.nrows();
    let mut out = CMatrix::zeros((d1 * d2, d1 * d2));
    for i in 0..d1 {
        for k in 0..d2 {
            for l in 0..d2 {
                out[[i * d2 + k, i * d2 + l]] = b[[k, l]];
            }
        }
    }
    out
}

pub(crate) fn partial_trace_raw(m: &CMatrix, d1: usize, d2: usize, keep: Side) -> CMatrix {
    match keep {
        Side::One => {
            let mut out = CMatrix::zeros((d1, d1));
            for i in 0..d1 {
                for j in 0..d1 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..d2 {
                        acc += m[[i * d2 + k, j * d2 + k]];
                    }
                    out[[i, j]] = acc;
                }
            }
            out
        }
        Side::Two => {
            let mut out = CMatrix::zeros((d2, d2));
            for k in 0..d2 {
                for l in 0..d2 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..d1 {
                        acc += m[[i * d2 + k, i * d2 + l]];
                    }
                    out[[k, l]] = acc;
                }
            }
            out
        }
    }
}

pub(crate) fn identity_raw(dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros((dim, dim));
    for i in 0..dim {
        m[[i, i]] = ONE;
    }
    m
}

/// −Σ λᵢ ln λᵢ with 0·ln 0 := 0; eigenvalues below the clamp are dropped.
pub(crate) fn entropy_from_spectrum(spectrum: &[f64]) -> f64 {
    let mut s = 0.0;
    for &p in spectrum {
        if p > tol::EIG_CLAMP {
            s -= p * p.ln();
        }
    }
    s
}

pub(crate) fn eigvalsh_raw(m: &CMatrix) -> Result<Vec<f64>> {
    let vals = m
        .eigvalsh(UPLO::Lower)
        .map_err(|e| Error::Eigensolver(e.to_string()))?;
    Ok(vals.to_vec())
}

// ---------------------------------------------------------------------------
// Operator
// ---------------------------------------------------------------------------

/// Dense complex square matrix; the carrier for Hamiltonians, observables and
/// the matrices inside density matrices.
///
/// `hermitian_hint` is advisory and re-checkable: constructors measure the
/// residual `max |m[i,j] − conj(m[j,i])|` against `1e−12 · ‖m‖_max`.
#[derive(Clone, Debug)]
pub struct Operator {
    data: CMatrix,
    hermitian_hint: bool,
}

impl Operator {
    /// Wrap a square matrix, detecting hermiticity.
    pub fn from_matrix(data: CMatrix) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::NotSquare {
                rows: data.nrows(),
                cols: data.ncols(),
            });
        }
        let hint = herm_residual(&data) <= tol::HERMITICITY_REL * max_norm(&data).max(1e-300);
        Ok(Self {
            data,
            hermitian_hint: hint,
        })
    }

    /// Wrap a matrix that must be Hermitian.
    pub fn hermitian(data: CMatrix) -> Result<Self> {
        let op = Self::from_matrix(data)?;
        if !op.hermitian_hint {
            return Err(Error::NotHermitian {
                residual: herm_residual(&op.data),
                tolerance: tol::HERMITICITY_REL * op.max_norm(),
            });
        }
        Ok(op)
    }

    /// Hermitian operator from a real diagonal.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = CMatrix::zeros((n, n));
        for (i, &v) in diag.iter().enumerate() {
            m[[i, i]] = Complex64::new(v, 0.0);
        }
        Self {
            data: m,
            hermitian_hint: true,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: CMatrix::zeros((dim, dim)),
            hermitian_hint: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            data: identity_raw(dim),
            hermitian_hint: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    pub fn is_hermitian_within(&self, tolerance: f64) -> bool {
        herm_residual(&self.data) <= tolerance
    }

    pub fn dagger(&self) -> Operator {
        Operator {
            data: dagger(&self.data),
            hermitian_hint: self.hermitian_hint,
        }
    }

    pub fn trace(&self) -> Complex64 {
        trace(&self.data)
    }

    /// Max-entry norm ‖·‖_max, the scale used by relative tolerances.
    pub fn max_norm(&self) -> f64 {
        max_norm(&self.data)
    }

    pub fn scaled(&self, factor: Complex64) -> Operator {
        Operator {
            data: self.data.mapv(|z| z * factor),
            hermitian_hint: self.hermitian_hint && factor.im == 0.0,
        }
    }

    pub fn add(&self, other: &Operator) -> Operator {
        Operator {
            data: &self.data + &other.data,
            hermitian_hint: self.hermitian_hint && other.hermitian_hint,
        }
    }

    pub fn sub(&self, other: &Operator) -> Operator {
        Operator {
            data: &self.data - &other.data,
            hermitian_hint: self.hermitian_hint && other.hermitian_hint,
        }
    }

    pub fn dot(&self, other: &Operator) -> Operator {
        Operator {
            data: self.data.dot(&other.data),
            hermitian_hint: false,
        }
    }
}

/// Kronecker product; `(a ⊗ b)[(i·d_b+k),(j·d_b+l)] = a[i,j]·b[k,l]`.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    Operator {
        data: kron_raw(&a.data, &b.data),
        hermitian_hint: a.hermitian_hint && b.hermitian_hint,
    }
}

/// Trace out one partition of an operator on a `d₁·d₂`-dimensional space,
/// keeping the named side. Preserves the total trace exactly up to rounding.
pub fn partial_trace(m: &Operator, dims: (usize, usize), keep: Side) -> Result<Operator> {
    let (d1, d2) = dims;
    if m.dim() != d1 * d2 {
        return Err(Error::DimensionMismatch {
            context: "partial_trace",
            expected: d1 * d2,
            actual: m.dim(),
        });
    }
    Ok(Operator {
        data: partial_trace_raw(&m.data, d1, d2, keep),
        hermitian_hint: m.hermitian_hint,
    })
}

/// ab − ba.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            context: "commutator",
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(Operator {
        data: commutator_raw(&a.data, &b.data),
        hermitian_hint: false,
    })
}

// ---------------------------------------------------------------------------
// spectral decomposition and functions of Hermitian operators
// ---------------------------------------------------------------------------

/// Eigendecomposition M = VΛV† of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Array1<f64>,
    /// Unitary matrix whose columns are the eigenvectors.
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    /// VΛV†, for reconstruction-error checks.
    pub fn reconstruct(&self) -> CMatrix {
        self.apply(|x| Complex64::new(x, 0.0))
    }

    /// V f(Λ) V†.
    pub fn apply<F: Fn(f64) -> Complex64>(&self, f: F) -> CMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for j in 0..n {
            let fj = f(self.eigenvalues[j]);
            for i in 0..n {
                scaled[[i, j]] *= fj;
            }
        }
        scaled.dot(&dagger(&self.eigenvectors))
    }
}

/// Decompose a Hermitian operator. Non-Hermitian input is an error: nothing
/// in this crate needs a Schur fallback.
///
/// The LAPACK round-trip through ndarray can hand the eigenvector matrix
/// back conjugated (row-/column-major reinterpretation of the workspace), so
/// the reconstruction ‖VΛV† − M‖ is verified here and the conjugate
/// orientation is used when it is the one that reconstructs.
pub fn spectral_decomposition(op: &Operator) -> Result<SpectralDecomposition> {
    let scale = op.max_norm().max(1e-300);
    if !op.is_hermitian_within(tol::HERMITICITY_REL * scale) {
        return Err(Error::NotHermitian {
            residual: herm_residual(&op.data),
            tolerance: tol::HERMITICITY_REL * scale,
        });
    }
    let (vals, vecs) = op
        .data
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Eigensolver(e.to_string()))?;
    let allowed = tol::SPECTRAL_RECONSTRUCTION_REL * scale;
    let candidate = SpectralDecomposition {
        eigenvalues: vals,
        eigenvectors: vecs,
    };
    let residual = max_norm(&(&candidate.reconstruct() - &op.data));
    if residual <= allowed {
        return Ok(candidate);
    }
    let conjugated = SpectralDecomposition {
        eigenvalues: candidate.eigenvalues,
        eigenvectors: candidate.eigenvectors.mapv(|z| z.conj()),
    };
    let residual_conj = max_norm(&(&conjugated.reconstruct() - &op.data));
    if residual_conj <= allowed {
        return Ok(conjugated);
    }
    Err(Error::Eigensolver(format!(
        "eigendecomposition does not reconstruct the input: residuals {residual:.3e} / {residual_conj:.3e}, allowed {allowed:.3e}"
    )))
}

/// `exp(scale · h)` for Hermitian `h`, via the spectral decomposition.
/// Unitary whenever `scale` is purely imaginary.
pub fn matrix_exp(h: &Operator, scale: Complex64) -> Result<Operator> {
    let spec = spectral_decomposition(h)?;
    let m = spec.apply(|x| (scale * x).exp());
    Operator::from_matrix(m)
}

// ---------------------------------------------------------------------------
// DensityMatrix
// ---------------------------------------------------------------------------

/// A validated quantum state: Hermitian within `tolerance`, unit trace,
/// minimum eigenvalue ≥ −1e−10.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    op: Operator,
    tolerance: f64,
}

impl DensityMatrix {
    /// Validate with the default hermiticity tolerance `1e−12 · ‖ρ‖_max`.
    pub fn new(op: Operator) -> Result<Self> {
        let t = tol::HERMITICITY_REL * op.max_norm().max(1e-300);
        Self::with_tolerance(op, t)
    }

    /// Validate with an explicit hermiticity tolerance.
    pub fn with_tolerance(op: Operator, tolerance: f64) -> Result<Self> {
        if tolerance < 0.0 {
            return Err(Error::InvalidParameter(
                "density-matrix tolerance must be non-negative".into(),
            ));
        }
        let residual = herm_residual(&op.data);
        if residual > tolerance {
            return Err(Error::InvalidDensityMatrix(format!(
                "hermiticity residual {residual:.3e} exceeds tolerance {tolerance:.3e}"
            )));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > tol::DM_TRACE || tr.im.abs() > tol::DM_TRACE {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {tr} differs from 1 by more than {:.1e}",
                tol::DM_TRACE
            )));
        }
        let spectrum = eigvalsh_raw(&hermitize(&op.data))?;
        let min_eig = spectrum.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -tol::DM_MIN_EIG {
            return Err(Error::InvalidDensityMatrix(format!(
                "minimum eigenvalue {min_eig:.3e} below -{:.1e}",
                tol::DM_MIN_EIG
            )));
        }
        Ok(Self { op, tolerance })
    }

    /// |ψ⟩⟨ψ| from a normalized state vector.
    pub fn from_pure(psi: &Array1<Complex64>) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > tol::DM_TRACE {
            return Err(Error::InvalidDensityMatrix(format!(
                "state vector norm² = {norm2} is not 1"
            )));
        }
        let n = psi.len();
        let m = CMatrix::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj());
        Self::new(Operator {
            data: m,
            hermitian_hint: true,
        })
    }

    /// Skip validation; internal use on states produced by verified paths.
    pub(crate) fn unchecked(op: Operator, tolerance: f64) -> Self {
        Self { op, tolerance }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Tr{ρ²}.
    pub fn purity(&self) -> f64 {
        trace_product(self.matrix(), self.matrix()).re
    }
}

// ---------------------------------------------------------------------------
// information-theoretic primitives
// ---------------------------------------------------------------------------

/// Von Neumann entropy −Σ λ ln λ (natural log), eigenvalues below 1e−14
/// clamped to zero.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let spectrum = eigvalsh_raw(rho.matrix()).expect("eigvalsh on validated density matrix");
    entropy_from_spectrum(&spectrum)
}

/// Relative entropy D[ρ‖σ] = Tr{ρ ln ρ} − Tr{ρ ln σ}.
///
/// Returns +∞ when σ lacks support where ρ carries weight: directions with a
/// σ-eigenvalue below the 1e−14 clamp are examined, and once the magnitude
/// of their combined contribution |Σ w·ln μ| exceeds 1e−6 nats the
/// divergence is genuine. Deep-but-positive reference tails (thermal states
/// whose occupations underflow the clamp) contribute their true logarithms
/// and stay finite. Non-negative up to a −1e−10 numerical floor.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            context: "relative_entropy",
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    let spec_sigma = spectral_decomposition(&Operator {
        data: hermitize(sigma.matrix()),
        hermitian_hint: true,
    })?;
    // weights w_j = ⟨v_j|ρ|v_j⟩
    let x = rho.matrix().dot(&spec_sigma.eigenvectors);
    let n = rho.dim();
    let mut cross = 0.0;
    let mut divergent_mass = 0.0;
    for j in 0..n {
        let mut w = Complex64::new(0.0, 0.0);
        for a in 0..n {
            w += spec_sigma.eigenvectors[[a, j]].conj() * x[[a, j]];
        }
        let w = w.re.max(0.0);
        let mu = spec_sigma.eigenvalues[j];
        if mu < tol::EIG_CLAMP {
            let log_mu = mu.max(tol::LOG_FLOOR).ln();
            divergent_mass += w * log_mu.abs();
            cross += w * log_mu;
        } else {
            cross += w * mu.ln();
        }
    }
    if divergent_mass > tol::DIVERGENCE_NATS {
        return Ok(f64::INFINITY);
    }
    let s_rho = von_neumann_entropy(rho);
    Ok(-s_rho - cross)
}

/// Tr{obs·ρ} for a Hermitian observable; the imaginary residue (bounded by
/// rounding for valid inputs) is discarded.
pub fn expectation(obs: &Operator, rho: &DensityMatrix) -> Result<f64> {
    let scale = obs.max_norm().max(1e-300);
    if !obs.is_hermitian_within(tol::HERMITICITY_REL * scale) {
        return Err(Error::NotHermitian {
            residual: herm_residual(obs.matrix()),
            tolerance: tol::HERMITICITY_REL * scale,
        });
    }
    if obs.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            context: "expectation",
            expected: rho.dim(),
            actual: obs.dim(),
        });
    }
    Ok(trace_product(obs.matrix(), rho.matrix()).re)
}

// ---------------------------------------------------------------------------
