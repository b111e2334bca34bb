//! Truncated covariant representations of a crossed product by `ℕ`, the
//! crossed Dirac operator and Lip probes.
//!
//! Matrices act on `ℂ^{N+1} ⊗ H` with the `ℕ`-coordinate as the outer
//! (slow) index: basis vector `(n, i)` sits at `n·dim(H) + i`.

mod words;

pub use words::{
    apply_word, eval_monomial, eval_word, interior_columns, normalize_steps, normalize_with,
    normalize_word, parse_word, Angle, CrossedWord, Letter, Monomial, Phase, RawWord, Q,
};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{commutator, kron, operator_norm, ComplexMatrix, C1, CI};

/// `(Wξ)(0) = 0`, `(Wξ)(n) = ξ(n−1)`; the top input block is discarded.
pub fn shift_isometry(n: usize, base_dim: usize) -> Result<ComplexMatrix> {
    if n < 1 || base_dim < 1 {
        return Err(Error::InvalidArgument(
            "shift needs N ≥ 1 and a nonempty base".into(),
        ));
    }
    let size = (n + 1) * base_dim;
    let mut w = ComplexMatrix::zeros(size, size);
    for k in 0..n * base_dim {
        w[(k + base_dim, k)] = C1;
    }
    Ok(w)
}

/// `diag(blocks[0], …, blocks[N])`.
pub fn build_pi_hat(blocks: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    validate_blocks(blocks)?;
    ComplexMatrix::block_diag(blocks)
}

fn validate_blocks(blocks: &[ComplexMatrix]) -> Result<()> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::InvalidArgument("no blocks".into()))?;
    if blocks
        .iter()
        .any(|b| !b.is_square() || b.rows() != first.rows())
    {
        return Err(Error::DimensionMismatch(
            "blocks must be square and of equal size".into(),
        ));
    }
    Ok(())
}

/// `D_ℕ = diag(0, 1, …, N)`.
pub fn number_operator(n: usize) -> ComplexMatrix {
    ComplexMatrix::real_diag(&(0..=n).map(|k| k as f64).collect::<Vec<_>>())
}

/// Blocks `π(α⁻ⁿ(a))` for `n = 0..=N` together with the shift.
#[derive(Clone, Debug)]
pub struct CovariantTruncation {
    blocks: Vec<ComplexMatrix>,
    base_dim: usize,
}

impl CovariantTruncation {
    pub fn new(blocks: Vec<ComplexMatrix>) -> Result<Self> {
        if blocks.len() < 2 {
            return Err(Error::InvalidArgument(
                "need at least two blocks (N ≥ 1)".into(),
            ));
        }
        validate_blocks(&blocks)?;
        let base_dim = blocks[0].rows();
        Ok(Self { blocks, base_dim })
    }

    /// Frequency cutoff `N`.
    pub fn cutoff(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn pi_hat(&self) -> ComplexMatrix {
        build_pi_hat(&self.blocks).expect("validated blocks")
    }

    pub fn shift(&self) -> ComplexMatrix {
        shift_isometry(self.cutoff(), self.base_dim).expect("validated cutoff")
    }

    /// Indices of the blocks `lo..=hi` in the full space.
    fn block_indices(&self, lo: usize, hi: usize) -> Vec<usize> {
        (lo * self.base_dim..(hi + 1) * self.base_dim).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CovarianceReport {
    /// `‖P(π̂(α(a))W − Wπ̂(a))P‖`, `P` the projection on blocks `1..N−1`.
    pub interior_defect: f64,
    /// The same difference without compression.
    pub full_defect: f64,
    /// `max_k ‖[W^kW*^k, π̂(a)]‖` on the interior.
    pub projection_defect: f64,
}

impl CovarianceReport {
    pub fn max_interior(&self) -> f64 {
        self.interior_defect.max(self.projection_defect)
    }
}

/// Checks `π(α(a))W = Wπ(a)` and `W^kW*^k ∈ π(A)'` on a truncation.
/// `blocks_alpha[n]` must be `π(α⁻ⁿ(α(a)))`.
pub fn check_covariance(
    t: &CovariantTruncation,
    blocks_alpha: &[ComplexMatrix],
) -> Result<CovarianceReport> {
    if blocks_alpha.len() != t.blocks.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} blocks for α(a), {} for a",
            blocks_alpha.len(),
            t.blocks.len()
        )));
    }
    let pi_alpha = build_pi_hat(blocks_alpha)?;
    if pi_alpha.rows() != t.pi_hat().rows() {
        return Err(Error::DimensionMismatch("block sizes differ".into()));
    }
    let w = t.shift();
    let pi = t.pi_hat();
    let diff = &(&pi_alpha * &w) - &(&w * &pi);
    let n = t.cutoff();
    let interior = if n >= 2 {
        t.block_indices(1, n - 1)
    } else {
        Vec::new()
    };
    let compressed_norm = |m: &ComplexMatrix| {
        if interior.is_empty() {
            0.0
        } else {
            operator_norm(&m.compress(&interior, &interior))
        }
    };
    let interior_defect = compressed_norm(&diff);
    let full_defect = operator_norm(&diff);
    let wstar = w.adjoint();
    let mut wk = ComplexMatrix::identity(w.rows());
    let mut wk_star = wk.clone();
    let mut projection_defect = 0.0f64;
    for _ in 1..=n {
        wk = &wk * &w;
        wk_star = &wstar * &wk_star;
        let proj = &wk * &wk_star;
        projection_defect = projection_defect.max(compressed_norm(&commutator(&proj, &pi)?));
    }
    Ok(CovarianceReport {
        interior_defect,
        full_defect,
        projection_defect,
    })
}

/// Grading data for [`crossed_dirac`].
#[derive(Clone, Debug)]
pub enum Parity {
    /// Even triple with grading `Γ`.
    Even(ComplexMatrix),
    Odd,
}

fn pauli_pair() -> (ComplexMatrix, ComplexMatrix) {
    let z = Complex64::new(0.0, 0.0);
    (
        ComplexMatrix::from_rows(&[vec![z, C1], vec![C1, z]]),
        ComplexMatrix::from_rows(&[vec![z, -CI], vec![CI, z]]),
    )
}

/// Even case: `D ⊗ I + Γ ⊗ D_ℕ`. Odd case: `D ⊗ I ⊗ ε₁ + I ⊗ D_ℕ ⊗ ε₂`
/// with `ε₁, ε₂` the first two Pauli matrices. In both cases the
/// `ℕ`-coordinate is the outer index and the Pauli factor the innermost.
pub fn crossed_dirac(d: &ComplexMatrix, parity: &Parity, n: usize) -> Result<ComplexMatrix> {
    if !d.is_square() {
        return Err(Error::DimensionMismatch(
            "Dirac operator must be square".into(),
        ));
    }
    let dn = number_operator(n);
    let id_n = ComplexMatrix::identity(n + 1);
    match parity {
        Parity::Even(gamma) => {
            check_grading(d, gamma)?;
            Ok(&kron(&id_n, d) + &kron(&dn, gamma))
        }
        Parity::Odd => {
            let (e1, e2) = pauli_pair();
            let id_h = ComplexMatrix::identity(d.rows());
            Ok(&kron(&id_n, &kron(d, &e1)) + &kron(&dn, &kron(&id_h, &e2)))
        }
    }
}

fn check_grading(d: &ComplexMatrix, gamma: &ComplexMatrix) -> Result<()> {
    if gamma.rows() != d.rows() || !gamma.is_square() {
        return Err(Error::Grading("grading size differs from D".into()));
    }
    let scale = d.max_abs().max(1.0);
    let square = (&(gamma * gamma) - &ComplexMatrix::identity(d.rows())).max_abs();
    if square > 1e-10 {
        return Err(Error::Grading(format!("Γ² − I has entry {square:.3e}")));
    }
    if gamma.hermitian_defect() > 1e-10 {
        return Err(Error::Grading("Γ is not self-adjoint".into()));
    }
    let anti = (&(gamma * d) + &(d * gamma)).max_abs();
    if anti > 1e-10 * scale {
        return Err(Error::Grading(format!("ΓD + DΓ has entry {anti:.3e}")));
    }
    Ok(())
}

/// `‖[Γ ⊗ D_ℕ, W]‖` for a grading on the base and cutoff `N`.
pub fn graded_shift_commutator_norm(gamma: &ComplexMatrix, n: usize) -> Result<f64> {
    let big = kron(&number_operator(n), gamma);
    let w = shift_isometry(n, gamma.rows())?;
    Ok(operator_norm(&commutator(&big, &w)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockCommutatorReport {
    pub block_norms: Vec<f64>,
    pub block_max: f64,
    pub full_norm: f64,
}

/// `‖[D ⊗ I, π̂(a)]‖` next to the per-block norms `‖[D, π(α⁻ⁿ(a))]‖`.
pub fn block_commutator_check(
    d: &ComplexMatrix,
    t: &CovariantTruncation,
) -> Result<BlockCommutatorReport> {
    let block_norms = t
        .blocks()
        .iter()
        .map(|b| commutator(d, b).map(|c| operator_norm(&c)))
        .collect::<Result<Vec<_>>>()?;
    let block_max = block_norms.iter().copied().fold(0.0, f64::max);
    let lifted = kron(&ComplexMatrix::identity(t.cutoff() + 1), d);
    let full_norm = operator_norm(&commutator(&lifted, &t.pi_hat())?);
    Ok(BlockCommutatorReport {
        block_norms,
        block_max,
        full_norm,
    })
}

/// Sequence `‖[D, α⁻ⁿ(a)]‖`, `n = 0..=horizon`, against a model envelope.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipProbe {
    pub model: String,
    pub element: String,
    pub horizon: usize,
    pub norms: Vec<f64>,
    pub sup: f64,
    pub envelope: Vec<f64>,
    pub bounded: bool,
}

pub fn lip_probe(
    model: &str,
    element: &str,
    horizon: usize,
    mut norm_at: impl FnMut(usize) -> Result<f64>,
    mut envelope_at: impl FnMut(usize) -> Result<f64>,
) -> Result<LipProbe> {
    if horizon < 1 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let norms = (0..=horizon)
        .map(&mut norm_at)
        .collect::<Result<Vec<_>>>()?;
    let envelope = (0..=horizon)
        .map(&mut envelope_at)
        .collect::<Result<Vec<_>>>()?;
    let sup = norms.iter().copied().fold(0.0, f64::max);
    let bounded = norms
        .iter()
        .zip(&envelope)
        .all(|(x, e)| x.is_finite() && *x <= e * (1.0 + 1e-9) + 1e-300);
    Ok(LipProbe {
        model: model.into(),
        element: element.into(),
        horizon,
        norms,
        sup,
        envelope,
        bounded,
    })
}
