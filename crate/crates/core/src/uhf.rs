//! `UHF_r` on a finite window of tensor positions: exact level counting,
//! the level-graded Dirac operator on the GNS space, left multiplication,
//! the position shift and the commutator scaling law.
//!
//! GNS basis per position: `√r·e_{ij}` at index `i·r + j`. Positions run
//! from `lo` to `hi`, with `lo` as the slowest index.

use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{commutator, kron_all, operator_norm, ComplexMatrix, MAX_DIM};
use crate::spectral::{nat_spectrum, tensor_spectrum, WeightedSpectrum};

/// Eigenvalue `r^{n·s}` of level `n`.
pub fn ci_level(r: usize, s: f64, n: i64) -> f64 {
    (r as f64).powf(n as f64 * s)
}

/// Levels `0..=N` of the unilateral filtration with the vacuum at 0.
/// Level `n` carries `r^{2(n+1)} − r^{2n}` states, so the total is
/// `r^{2(N+1)}`.
pub fn ci_spectrum(r: usize, s: f64, depth: u32) -> Result<WeightedSpectrum> {
    check_rs(r, s)?;
    let r2 = (r as u128).pow(2);
    let total = r2
        .checked_pow(depth + 1)
        .filter(|&t| t < 1u128 << 53)
        .ok_or(Error::BudgetExceeded {
            what: "exact level multiplicities",
            needed: u128::MAX,
            limit: 1u128 << 53,
        })?;
    let mut points = vec![(0.0, 1.0)];
    let mut below = 1u128;
    for n in 0..=depth {
        let upto = r2.pow(n + 1);
        points.push((ci_level(r, s, n as i64), (upto - below) as f64));
        below = upto;
    }
    debug_assert_eq!(below, total);
    Ok(
        WeightedSpectrum::new(points, format!("ci(r={r},s={s},N={depth})"))?
            .with_exact_below(ci_level(r, s, depth as i64 + 1)),
    )
}

/// Grid `t = r^{ns}` on which the counting function is exactly `r^{2n}`,
/// restricted to the fit window `[4, r^{Ns}/2]`.
pub fn ci_grid(r: usize, s: f64, depth: u32) -> Vec<f64> {
    let top = ci_level(r, s, depth as i64) / 2.0;
    (1..=depth as i64)
        .map(|n| ci_level(r, s, n))
        .filter(|&t| (4.0..=top).contains(&t))
        .collect()
}

/// `ci_spectrum ⊗ D_ℕ` with `D_ℕ` truncated at `nat_cutoff`.
pub fn crossed_ci_spectrum(
    r: usize,
    s: f64,
    depth: u32,
    nat_cutoff: usize,
) -> Result<WeightedSpectrum> {
    tensor_spectrum(&ci_spectrum(r, s, depth)?, &nat_spectrum(nat_cutoff)?)
}

fn check_rs(r: usize, s: f64) -> Result<()> {
    if r < 2 {
        return Err(Error::InvalidArgument(format!("factor size {r} < 2")));
    }
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scale exponent {s} must be positive"
        )));
    }
    Ok(())
}

/// Factor size, exponent and window `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UhfParams {
    r: usize,
    s: f64,
    lo: i64,
    hi: i64,
}

impl UhfParams {
    pub fn new(r: usize, s: f64, lo: i64, hi: i64) -> Result<Self> {
        check_rs(r, s)?;
        if lo > hi {
            return Err(Error::InvalidArgument(format!("empty window [{lo}, {hi}]")));
        }
        let legs = (hi - lo + 1) as u32;
        let dim = (r as u128).checked_pow(2 * legs).unwrap_or(u128::MAX);
        if dim > MAX_DIM as u128 {
            return Err(Error::BudgetExceeded {
                what: "GNS dimension of the window",
                needed: dim,
                limit: MAX_DIM as u128,
            });
        }
        Ok(Self { r, s, lo, hi })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn window(&self) -> RangeInclusive<i64> {
        self.lo..=self.hi
    }

    pub fn legs(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn dim(&self) -> usize {
        (self.r * self.r).pow(self.legs() as u32)
    }

    /// Same data on the window translated by `by` positions.
    pub fn translated(&self, by: i64) -> Self {
        Self {
            lo: self.lo + by,
            hi: self.hi + by,
            ..self.clone()
        }
    }
}

/// Projection of one position onto the identity vector.
fn unit_projection(r: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(r * r, r * r);
    let w = Complex64::new(1.0 / r as f64, 0.0);
    for i in 0..r {
        for k in 0..r {
            e[(i * r + i, k * r + k)] = w;
        }
    }
    e
}

/// `Q_h = I ⊗ … ⊗ I ⊗ F_h ⊗ E ⊗ … ⊗ E`; `h` below the window gives the vacuum
/// projection `E ⊗ … ⊗ E`.
pub fn level_projection(params: &UhfParams, h: i64) -> Result<ComplexMatrix> {
    if h > params.hi {
        return Err(Error::InvalidArgument(format!(
            "level {h} above the window"
        )));
    }
    let r = params.r;
    let e = unit_projection(r);
    let id = ComplexMatrix::identity(r * r);
    let f = &id - &e;
    let legs: Vec<ComplexMatrix> = params
        .window()
        .map(|pos| match pos.cmp(&h) {
            std::cmp::Ordering::Less => id.clone(),
            std::cmp::Ordering::Equal => f.clone(),
            std::cmp::Ordering::Greater => e.clone(),
        })
        .collect();
    Ok(kron_all(&legs))
}

/// `Σ_{h ∈ window} r^{hs} Q_h`, vacuum at eigenvalue 0.
pub fn window_dirac(params: &UhfParams) -> Result<ComplexMatrix> {
    let mut d = ComplexMatrix::zeros(params.dim(), params.dim());
    for h in params.window() {
        d = &d + &level_projection(params, h)?.scale_real(ci_level(params.r, params.s, h));
    }
    Ok(d)
}

/// Matrix on consecutive positions, identity elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowElement {
    lo: i64,
    hi: i64,
    matrix: ComplexMatrix,
}

impl WindowElement {
    pub fn new(positions: RangeInclusive<i64>, matrix: ComplexMatrix) -> Result<Self> {
        let (lo, hi) = positions.into_inner();
        if lo > hi || !matrix.is_square() {
            return Err(Error::InvalidArgument(
                "element needs a square matrix on a nonempty range".into(),
            ));
        }
        Ok(Self { lo, hi, matrix })
    }

    /// `e_{ij}` at a single position.
    pub fn matrix_unit(r: usize, position: i64, i: usize, j: usize) -> Result<Self> {
        if i >= r || j >= r {
            return Err(Error::InvalidArgument(format!(
                "matrix unit ({i},{j}) outside M_{r}"
            )));
        }
        let mut m = ComplexMatrix::zeros(r, r);
        m[(i, j)] = Complex64::new(1.0, 0.0);
        Self::new(position..=position, m)
    }

    pub fn identity(r: usize, position: i64) -> Self {
        Self {
            lo: position,
            hi: position,
            matrix: ComplexMatrix::identity(r),
        }
    }

    pub fn positions(&self) -> RangeInclusive<i64> {
        self.lo..=self.hi
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// `x ↦ f·x` on the GNS basis: `f` acts on the row index of its positions.
pub fn left_mult(params: &UhfParams, f: &WindowElement) -> Result<ComplexMatrix> {
    let r = params.r;
    if f.lo < params.lo || f.hi > params.hi {
        return Err(Error::OutsideDomain(format!(
            "element on [{}, {}] outside window [{}, {}]",
            f.lo, f.hi, params.lo, params.hi
        )));
    }
    let span = (f.hi - f.lo + 1) as u32;
    let fdim = r.pow(span);
    if f.matrix.rows() != fdim {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix on {span} positions of M_{r}",
            f.matrix.rows(),
            f.matrix.cols()
        )));
    }
    let legs = params.legs();
    let n = params.dim();
    // Stride of the row digit at each covered position.
    let strides: Vec<usize> = (f.lo..=f.hi)
        .map(|pos| {
            let leg = (pos - params.lo) as usize;
            (r * r).pow((legs - 1 - leg) as u32) * r
        })
        .collect();
    let row_digits =
        |idx: usize| -> usize { strides.iter().fold(0, |acc, &st| acc * r + (idx / st) % r) };
    let with_digits = |idx: usize, mut multi: usize| -> usize {
        let mut out = idx;
        for &st in strides.iter().rev() {
            let d = multi % r;
            multi /= r;
            out = out - ((idx / st) % r) * st + d * st;
        }
        out
    };
    let mut m = ComplexMatrix::zeros(n, n);
    for col in 0..n {
        let inner = row_digits(col);
        for out in 0..fdim {
            let v = f.matrix[(out, inner)];
            if v != Complex64::new(0.0, 0.0) {
                m[(with_digits(col, out), col)] = v;
            }
        }
    }
    Ok(m)
}

/// Moves the support `k` positions toward `−∞`.
pub fn shift_element(params: &UhfParams, f: &WindowElement, k: i64) -> Result<WindowElement> {
    let moved = WindowElement {
        lo: f.lo - k,
        hi: f.hi - k,
        matrix: f.matrix.clone(),
    };
    if moved.lo < params.lo || moved.hi > params.hi {
        return Err(Error::OutsideDomain(format!(
            "shift by {k} leaves the window [{}, {}]",
            params.lo, params.hi
        )));
    }
    Ok(moved)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingStatus {
    Ok,
    Degenerate,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub k: i64,
    pub norm: f64,
    pub shifted_norm: f64,
    pub ratio: f64,
    pub expected: f64,
    /// Largest commutator block touching the top level, over both elements.
    pub top_block: f64,
    /// Same for the bottom level; informational.
    pub bottom_block: f64,
    pub status: ScalingStatus,
    pub passed: bool,
}

fn boundary_block(c: &ComplexMatrix, q: &ComplexMatrix) -> f64 {
    operator_norm(&(q * c)).max(operator_norm(&(c * q)))
}

/// `‖[D, L(shift f)]‖ / ‖[D, L f]‖` against `r^{−ks}`.
pub fn scaling_check(params: &UhfParams, f: &WindowElement, k: i64) -> Result<ScalingReport> {
    let d = window_dirac(params)?;
    let g = shift_element(params, f, k)?;
    let c = commutator(&d, &left_mult(params, f)?)?;
    let cg = commutator(&d, &left_mult(params, &g)?)?;
    let norm = operator_norm(&c);
    let shifted_norm = operator_norm(&cg);
    let top = level_projection(params, params.hi)?;
    let bottom = level_projection(params, params.lo)?;
    let top_block = boundary_block(&c, &top).max(boundary_block(&cg, &top));
    let bottom_block = boundary_block(&c, &bottom).max(boundary_block(&cg, &bottom));
    let expected = ci_level(params.r, params.s, -k);
    let (ratio, status) = if norm < 1e-12 && shifted_norm < 1e-12 {
        (f64::NAN, ScalingStatus::Degenerate)
    } else if top_block >= 1e-12 || norm < 1e-12 {
        (shifted_norm / norm, ScalingStatus::Inconclusive)
    } else {
        (shifted_norm / norm, ScalingStatus::Ok)
    };
    let passed = status == ScalingStatus::Ok && (ratio - expected).abs() <= 1e-9 * expected;
    Ok(ScalingReport {
        k,
        norm,
        shifted_norm,
        ratio,
        expected,
        top_block,
        bottom_block,
        status,
        passed,
    })
}

/// Blocks `π(α⁻ⁿ(a))` and `π(α⁻ⁿ(α(a)))`, `n = 0..=N`, with `α` moving
/// support one position toward `+∞`.
pub fn covariant_blocks(
    params: &UhfParams,
    a: &WindowElement,
    n_max: usize,
) -> Result<(Vec<ComplexMatrix>, Vec<ComplexMatrix>)> {
    let mut blocks = Vec::with_capacity(n_max + 1);
    let mut blocks_alpha = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max as i64 {
        blocks.push(left_mult(params, &shift_element(params, a, n)?)?);
        blocks_alpha.push(left_mult(params, &shift_element(params, a, n - 1)?)?);
    }
    Ok((blocks, blocks_alpha))
}
