//! The `p`-torus with its Fourier-mode Dirac operator, the covering
//! endomorphism `f ↦ f∘B`, and the solenoid spectrum built from sections of
//! the covering.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{rational_to_f64, Frequency, IntMatrix, RatMatrix};
use crate::operator::{clifford_generators, kron, operator_norm, ComplexMatrix};
use crate::spectral::{WeightedSpectrum, TENSOR_BUDGET};

const TWO_PI: f64 = 2.0 * PI;

/// Cap on grid evaluations in [`grid_commutator_norm`].
pub const GRID_BUDGET: usize = 1 << 24;

/// Integer matrix `B` defining the covering `t ↦ Bt`, with `A = (Bᵀ)⁻¹`.
#[derive(Clone, Debug)]
pub struct CoveringMatrix {
    b: IntMatrix,
    a: RatMatrix,
    r: u64,
}

impl CoveringMatrix {
    /// Requires `|det B| ≥ 2` and every eigenvalue of `B` outside the unit
    /// disc by a margin of `1e−6`.
    pub fn new(b: IntMatrix) -> Result<Self> {
        let det = b.det();
        if det.abs() < 2 {
            return Err(Error::InvalidArgument(format!(
                "covering matrix needs |det B| >= 2, got {det}"
            )));
        }
        let a = b.transpose().to_rational().inverse()?;
        // Eigenvalues of B and Bᵀ agree, so ρ(A) = 1 / min |eig B|.
        let rho = spectral_radius(&a.to_f64_rows());
        if rho.is_nan() || rho * (1.0 + 1e-6) >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "B is not purely expanding (smallest |eigenvalue| ≈ {:.6})",
                1.0 / rho
            )));
        }
        Ok(Self {
            b,
            a,
            r: det.unsigned_abs() as u64,
        })
    }

    pub fn b(&self) -> &IntMatrix {
        &self.b
    }

    pub fn a(&self) -> &RatMatrix {
        &self.a
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    /// `‖B⁻ⁿ‖ = ‖Aⁿ‖`.
    pub fn inverse_power_norm(&self, n: u32) -> f64 {
        self.a.pow(n).spectral_norm()
    }
}

/// Spectral radius by repeated squaring: `ρ = lim ‖M^{2^j}‖^{2^{-j}}`.
fn spectral_radius(m: &[Vec<f64>]) -> f64 {
    let p = m.len();
    let norm = |x: &[Vec<f64>]| x.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let mut cur: Vec<Vec<f64>> = m.to_vec();
    let mut log_scale = 0.0;
    let n0 = norm(&cur);
    if n0 == 0.0 {
        return 0.0;
    }
    for row in cur.iter_mut().flatten() {
        *row /= n0;
    }
    log_scale += n0.ln();
    let mut estimate = n0;
    for j in 1..=60 {
        let mut next = vec![vec![0.0; p]; p];
        for (row, cur_row) in next.iter_mut().zip(&cur) {
            for (c, cur_k) in cur_row.iter().zip(&cur) {
                for (x, y) in row.iter_mut().zip(cur_k) {
                    *x += c * y;
                }
            }
        }
        log_scale *= 2.0;
        let c = norm(&next);
        if c == 0.0 {
            return 0.0;
        }
        for v in next.iter_mut().flatten() {
            *v /= c;
        }
        log_scale += c.ln();
        cur = next;
        estimate = (log_scale / 2f64.powi(j)).exp();
    }
    estimate
}

/// Finite Fourier sum `Σ c_k e^{2πi k·t}` on the torus at level `n`, whose
/// frequencies lie in `Aⁿℤ^p`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusElement {
    level: u32,
    dim: usize,
    coeffs: BTreeMap<Frequency, Complex64>,
}

impl TorusElement {
    /// Level-0 element from integer modes; repeated modes are summed and
    /// zero coefficients dropped.
    pub fn from_modes(p: usize, modes: &[(Vec<i64>, Complex64)]) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (k, c) in modes {
            if k.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "mode {k:?} in dimension {p}"
                )));
            }
            *coeffs
                .entry(Frequency::integer(k))
                .or_insert(Complex64::zero()) += c;
        }
        coeffs.retain(|_, c: &mut Complex64| !c.is_zero());
        Ok(Self {
            level: 0,
            dim: p,
            coeffs,
        })
    }

    /// `e^{2πi k·t}`.
    pub fn mode(k: &[i64]) -> Self {
        Self::from_modes(k.len(), &[(k.to_vec(), Complex64::new(1.0, 0.0))]).unwrap()
    }

    pub fn constant(p: usize, c: Complex64) -> Self {
        Self::from_modes(p, &[(vec![0; p], c)]).unwrap()
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Frequency, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, t: &[f64]) -> Complex64 {
        self.coeffs.iter().map(|(k, c)| c * phase(k, t)).sum()
    }

    /// `(∂₁f, …, ∂_pf)(t)` by exact Fourier differentiation.
    pub fn gradient(&self, t: &[f64]) -> Vec<Complex64> {
        let mut g = vec![Complex64::zero(); self.dim];
        for (k, c) in &self.coeffs {
            let e = c * phase(k, t) * Complex64::new(0.0, TWO_PI);
            for (ga, ka) in g.iter_mut().zip(k.to_f64()) {
                *ga += e * ka;
            }
        }
        g
    }

    /// `2π Σ |c_k|·|k|₂`, an upper bound for `‖[D₀, f]‖`.
    pub fn l1_gradient_bound(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| c.norm() * TWO_PI * k.norm())
            .sum()
    }
}

fn phase(k: &Frequency, t: &[f64]) -> Complex64 {
    let dot: f64 = k.to_f64().iter().zip(t).map(|(a, b)| a * b).sum();
    Complex64::from_polar(1.0, TWO_PI * dot)
}

/// `α⁻ⁿ(f) = f∘B⁻ⁿ`: each frequency `k ↦ Aⁿk`; the level rises by `n`.
pub fn endo_pullback(b: &CoveringMatrix, f: &TorusElement, n: u32) -> Result<TorusElement> {
    check_dim(b, f)?;
    let an = b.a().pow(n);
    Ok(TorusElement {
        level: f.level + n,
        dim: f.dim,
        coeffs: f.coeffs.iter().map(|(k, c)| (an.apply(k), *c)).collect(),
    })
}

/// `α(f) = f∘B`: each frequency `k ↦ Bᵀk`.
pub fn endo_apply(b: &CoveringMatrix, f: &TorusElement) -> Result<TorusElement> {
    check_dim(b, f)?;
    let bt = b.b().transpose().to_rational();
    Ok(TorusElement {
        level: f.level.saturating_sub(1),
        dim: f.dim,
        coeffs: f.coeffs.iter().map(|(k, c)| (bt.apply(k), *c)).collect(),
    })
}

fn check_dim(b: &CoveringMatrix, f: &TorusElement) -> Result<()> {
    if b.dim() != f.dim {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix acting on a {}-torus element",
            b.dim(),
            b.dim(),
            f.dim
        )));
    }
    Ok(())
}

/// `‖[D₀, e_k]‖ = 2π|k|₂`, from the exact squared length.
pub fn mode_commutator_norm(k: &Frequency) -> f64 {
    TWO_PI * k.norm()
}

/// Same quantity as [`mode_commutator_norm`], computed as the operator norm
/// of the Clifford symbol `2π Σ k_a ε_a`.
pub fn clifford_symbol_norm(k: &Frequency) -> Result<f64> {
    let fam = clifford_generators(k.dim())?;
    let x: Vec<f64> = k.to_f64().iter().map(|v| TWO_PI * v).collect();
    Ok(operator_norm(&fam.symbol(&x)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CommutatorBounds {
    /// Largest `|∇f|₂` over the sample grid.
    pub grid: f64,
    /// `2π Σ |c_k|·|k|₂`.
    pub upper: f64,
}

/// Samples `|∇f|₂` on the grid `B^level(j/g)`, `j ∈ {0..g−1}^p`, which
/// covers a fundamental domain of the level-`n` torus.
pub fn grid_commutator_norm(
    b: &CoveringMatrix,
    f: &TorusElement,
    g: usize,
) -> Result<CommutatorBounds> {
    check_dim(b, f)?;
    if g < 16 {
        return Err(Error::InvalidArgument(
            "grid resolution must be at least 16".into(),
        ));
    }
    let p = f.dim;
    let needed = (g as u128).pow(p as u32);
    if needed > GRID_BUDGET as u128 {
        return Err(Error::BudgetExceeded {
            what: "torus grid points",
            needed,
            limit: GRID_BUDGET as u128,
        });
    }
    let bn: Vec<Vec<f64>> = b.b().to_rational().pow(f.level).to_f64_rows();
    let mut idx = vec![0usize; p];
    let mut best = 0.0f64;
    for _ in 0..needed {
        let u: Vec<f64> = idx.iter().map(|&j| j as f64 / g as f64).collect();
        let t: Vec<f64> = bn
            .iter()
            .map(|row| row.iter().zip(&u).map(|(x, y)| x * y).sum())
            .collect();
        let len = f
            .gradient(&t)
            .iter()
            .map(Complex64::norm_sqr)
            .sum::<f64>()
            .sqrt();
        best = best.max(len);
        for d in idx.iter_mut() {
            *d += 1;
            if *d < g {
                break;
            }
            *d = 0;
        }
    }
    Ok(CommutatorBounds {
        grid: best,
        upper: f.l1_gradient_bound(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LipStep {
    pub n: u32,
    pub inverse_power_norm: f64,
    pub grid: f64,
    pub upper: f64,
    /// `‖B⁻ⁿ‖ ×` the level-0 grid value.
    pub envelope: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LipReport {
    pub steps: Vec<LipStep>,
    pub sup: f64,
    pub holds: bool,
}

/// Checks `‖[D, α⁻ⁿf]‖ ≤ ‖B⁻ⁿ‖·‖[D, f]‖` for `n = 0..=n_max`.
///
/// Single modes are compared exactly. Otherwise both sides are sampled on
/// matching grids: `B⁻ⁿ` maps the level-`n` grid onto the level-0 grid and
/// `|∇(f∘B⁻ⁿ)(t)| ≤ ‖B⁻ⁿ‖·|∇f(B⁻ⁿt)|` pointwise, so the grid inequality is
/// itself a theorem.
pub fn lip_inequality_check(
    b: &CoveringMatrix,
    f: &TorusElement,
    n_max: u32,
    g: usize,
) -> Result<LipReport> {
    let single = f.len() <= 1;
    let base = if single {
        let v = f
            .terms()
            .next()
            .map_or(0.0, |(k, c)| c.norm() * mode_commutator_norm(k));
        CommutatorBounds { grid: v, upper: v }
    } else {
        grid_commutator_norm(b, f, g)?
    };
    let mut steps = Vec::new();
    for n in 0..=n_max {
        let fn_ = endo_pullback(b, f, n)?;
        let bounds = if single {
            let v = fn_
                .terms()
                .next()
                .map_or(0.0, |(k, c)| c.norm() * mode_commutator_norm(k));
            CommutatorBounds { grid: v, upper: v }
        } else {
            grid_commutator_norm(b, &fn_, g)?
        };
        let norm = b.inverse_power_norm(n);
        let envelope = norm * base.grid;
        steps.push(LipStep {
            n,
            inverse_power_norm: norm,
            grid: bounds.grid,
            upper: bounds.upper,
            envelope,
            holds: bounds.grid <= envelope * (1.0 + 1e-9) + 1e-300,
        });
    }
    let sup = steps.iter().map(|s| s.grid).fold(0.0, f64::max);
    let holds = steps.iter().all(|s| s.holds);
    Ok(LipReport { steps, sup, holds })
}

/// Coset representatives of `Aℤ^p / ℤ^p`, each in `[0,1)^p`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionMap {
    reps: Vec<Frequency>,
}

impl SectionMap {
    pub fn reps(&self) -> &[Frequency] {
        &self.reps
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }
}

/// Enumerates `Aℤ^p ∩ [0,1)^p`: the points `x ∈ (1/r)ℤ^p ∩ [0,1)^p` with
/// `Bᵀx` integral.
pub fn section_map(b: &CoveringMatrix) -> Result<SectionMap> {
    let p = b.dim();
    let r = b.r() as i128;
    let needed = (r as u128).pow(p as u32);
    if needed > GRID_BUDGET as u128 {
        return Err(Error::BudgetExceeded {
            what: "section candidates",
            needed,
            limit: GRID_BUDGET as u128,
        });
    }
    let bt = b.b().transpose().to_rational();
    let mut reps = Vec::new();
    let mut idx = vec![0i128; p];
    for _ in 0..needed {
        let x = Frequency(
            idx.iter()
                .map(|&j| crate::lattice::Rational::new(j, r))
                .collect(),
        );
        if bt.apply(&x).is_integral() {
            reps.push(x);
        }
        for d in idx.iter_mut() {
            *d += 1;
            if *d < r {
                break;
            }
            *d = 0;
        }
    }
    reps.sort();
    if reps.len() as u64 != b.r() {
        return Err(Error::Consistency(format!(
            "found {} section representatives, expected {}",
            reps.len(),
            b.r()
        )));
    }
    Ok(SectionMap { reps })
}

fn clifford_multiplicity(p: usize) -> f64 {
    (1u64 << (p / 2)) as f64
}

fn integer_box(p: usize, k: usize) -> impl Iterator<Item = Vec<i64>> {
    let side = 2 * k + 1;
    let total = side.pow(p as u32);
    (0..total).map(move |mut idx| {
        (0..p)
            .map(|_| {
                let c = (idx % side) as i64 - k as i64;
                idx /= side;
                c
            })
            .collect()
    })
}

/// `{(2π|k|₂, 2^⌊p/2⌋) : k ∈ ℤ^p, |k|_∞ ≤ K}`. Exact below `2π(K+1)`.
pub fn torus_spectrum(p: usize, k: usize) -> Result<WeightedSpectrum> {
    if p == 0 || k == 0 {
        return Err(Error::InvalidArgument(
            "torus spectrum needs p ≥ 1, K ≥ 1".into(),
        ));
    }
    let needed = ((2 * k + 1) as u128).pow(p as u32);
    if needed > TENSOR_BUDGET as u128 {
        return Err(Error::BudgetExceeded {
            what: "torus modes",
            needed,
            limit: TENSOR_BUDGET as u128,
        });
    }
    let w = clifford_multiplicity(p);
    let points = integer_box(p, k)
        .map(|m| {
            let sq: i64 = m.iter().map(|x| x * x).sum();
            (TWO_PI * (sq as f64).sqrt(), w)
        })
        .collect();
    Ok(
        WeightedSpectrum::new(points, format!("torus(p={p},K={k})"))?
            .compacted()
            .with_exact_below(TWO_PI * (k + 1) as f64),
    )
}

/// Truncated solenoid spectrum: values `2π|k + σ|₂` with offsets
/// `σ = Σ_{h=1}^{H} A^{h−1}s(x_h)` over all section words `x ∈ ẑ_B^H`, and
/// weight `2^⌊p/2⌋·r^{−H}` (normalised trace on the UHF factor).
pub fn solenoid_spectrum(b: &CoveringMatrix, depth: u32, k: usize) -> Result<WeightedSpectrum> {
    let p = b.dim();
    let r = b.r() as u128;
    let words = r.pow(depth);
    let needed = words * ((2 * k + 1) as u128).pow(p as u32);
    if needed > TENSOR_BUDGET as u128 {
        return Err(Error::BudgetExceeded {
            what: "solenoid points",
            needed,
            limit: TENSOR_BUDGET as u128,
        });
    }
    let sections = section_map(b)?;
    // Exact offsets, built one level at a time.
    let mut offsets = vec![Frequency::zero(p)];
    let mut ah = RatMatrix::identity(p);
    for _ in 0..depth {
        let scaled: Vec<Frequency> = sections.reps().iter().map(|s| ah.apply(s)).collect();
        offsets = offsets
            .iter()
            .flat_map(|o| scaled.iter().map(move |s| o.add(s)))
            .collect();
        ah = ah.mul(b.a());
    }
    let max_offset = offsets
        .iter()
        .map(|o| rational_to_f64(&o.max_abs()))
        .fold(0.0, f64::max);
    let weight = clifford_multiplicity(p) / words as f64;
    let offsets_f: Vec<Vec<f64>> = offsets.iter().map(Frequency::to_f64).collect();
    let mut points = Vec::with_capacity(needed as usize);
    for m in integer_box(p, k) {
        for o in &offsets_f {
            let sq: f64 = m.iter().zip(o).map(|(&a, b)| (a as f64 + b).powi(2)).sum();
            points.push((TWO_PI * sq.sqrt(), weight));
        }
    }
    // Points outside the box satisfy |k + σ|₂ ≥ K + 1 − max|σ|_∞.
    let exact = (PI * k as f64).min(TWO_PI * (k as f64 + 1.0 - max_offset));
    Ok(
        WeightedSpectrum::new(points, format!("solenoid(B={},H={depth},K={k})", b.b()))?
            .compacted()
            .with_exact_below(exact),
    )
}

/// Truncated `D₀ = Σ_a diag(2πk_a) ⊗ ε_a` on modes `|k|_∞ ≤ K`, with the
/// chirality grading `I ⊗ γ` when `p` is even.
pub fn torus_dirac(p: usize, k: usize) -> Result<(ComplexMatrix, Option<ComplexMatrix>)> {
    let fam = clifford_generators(p)?;
    let modes: Vec<Vec<i64>> = integer_box(p, k).collect();
    let size = modes.len() * fam.dim();
    if size > crate::operator::MAX_DIM {
        return Err(Error::BudgetExceeded {
            what: "torus Dirac dimension",
            needed: size as u128,
            limit: crate::operator::MAX_DIM as u128,
        });
    }
    let mut d = ComplexMatrix::zeros(size, size);
    for (a, eps) in fam.generators().iter().enumerate() {
        let diag: Vec<f64> = modes.iter().map(|m| TWO_PI * m[a] as f64).collect();
        d = &d + &kron(&ComplexMatrix::real_diag(&diag), eps);
    }
    let grading = fam
        .chirality()
        .map(|g| kron(&ComplexMatrix::identity(modes.len()), &g));
    Ok((d, grading))
}

/// Diagonal point-sample representation `diag(f(x_j))`.
pub fn sample_representation(f: &TorusElement, points: &[Vec<f64>]) -> ComplexMatrix {
    let vals: Vec<Complex64> = points.iter().map(|x| f.eval(x)).collect();
    ComplexMatrix::diag(&vals)
}

/// Blocks `π(α⁻ⁿ(a))` and `π(α⁻ⁿ(α(a)))`, `n = 0..=N`, in the point-sample
/// representation.
pub fn covariant_blocks(
    b: &CoveringMatrix,
    a: &TorusElement,
    n_max: usize,
    points: &[Vec<f64>],
) -> Result<(Vec<ComplexMatrix>, Vec<ComplexMatrix>)> {
    let alpha_a = endo_apply(b, a)?;
    let mut blocks = Vec::with_capacity(n_max + 1);
    let mut blocks_alpha = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max as u32 {
        blocks.push(sample_representation(&endo_pullback(b, a, n)?, points));
        blocks_alpha.push(sample_representation(
            &endo_pullback(b, &alpha_a, n)?,
            points,
        ));
    }
    Ok((blocks, blocks_alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Rational;
    use crate::spectral::{counting, dimension_fit_dyadic};
    use proptest::prelude::*;

    fn cov(rows: Vec<Vec<i64>>) -> CoveringMatrix {
        CoveringMatrix::new(IntMatrix::new(rows).unwrap()).unwrap()
    }

    fn rat(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn covering_validation() {
        assert!(CoveringMatrix::new(IntMatrix::scalar(2, 2)).is_ok());
        assert!(
            CoveringMatrix::new(IntMatrix::new(vec![vec![1, 1], vec![-1, 1]]).unwrap()).is_ok()
        );
        // det 1
        assert!(
            CoveringMatrix::new(IntMatrix::new(vec![vec![4, 1], vec![3, 1]]).unwrap()).is_err()
        );
        // det 2 with an eigenvalue of modulus 1
        assert!(
            CoveringMatrix::new(IntMatrix::new(vec![vec![2, 0], vec![0, 1]]).unwrap()).is_err()
        );
        let c = cov(vec![vec![1, 1], vec![-1, 1]]);
        assert_eq!(c.r(), 2);
        assert!((c.inverse_power_norm(1) - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn spectral_radius_of_non_normal_matrix() {
        // Jordan-like block with eigenvalue 1/2.
        let rho = spectral_radius(&[vec![0.5, 3.0], vec![0.0, 0.5]]);
        assert!((rho - 0.5).abs() < 1e-6);
    }

    #[test]
    fn torus_spectrum_examples() {
        let s = torus_spectrum(1, 1).unwrap();
        assert_eq!(
            s.points().collect::<Vec<_>>(),
            vec![(0.0, 1.0), (TWO_PI, 2.0)]
        );
        let s = torus_spectrum(2, 1).unwrap();
        let pts: Vec<_> = s.points().collect();
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[0], (0.0, 2.0));
        assert!((pts[1].0 - TWO_PI).abs() < 1e-12 && pts[1].1 == 8.0);
        assert!((pts[2].0 - TWO_PI * 2f64.sqrt()).abs() < 1e-12 && pts[2].1 == 8.0);
    }

    #[test]
    fn torus_dimension_small() {
        let fit = dimension_fit_dyadic(&torus_spectrum(2, 40).unwrap()).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.15, "{}", fit.slope);
    }

    #[test]
    fn mode_norms() {
        assert!((mode_commutator_norm(&Frequency::integer(&[3, 4])) - TWO_PI * 5.0).abs() < 1e-12);
        assert_eq!(mode_commutator_norm(&Frequency::integer(&[0, 0])), 0.0);
        assert!((mode_commutator_norm(&Frequency::integer(&[1, 0, 0])) - TWO_PI).abs() < 1e-12);
        for k in [[3i64, 4, 0], [1, -2, 2], [0, 0, 7]] {
            let f = Frequency::integer(&k);
            let a = mode_commutator_norm(&f);
            let b = clifford_symbol_norm(&f).unwrap();
            assert!((a - b).abs() < 1e-10 * a.max(1.0));
        }
    }

    #[test]
    fn pullback_examples() {
        let b = cov(vec![vec![2, 0], vec![0, 2]]);
        let f = TorusElement::mode(&[1, 0]);
        let g = endo_pullback(&b, &f, 1).unwrap();
        assert_eq!(g.level(), 1);
        assert_eq!(g.terms().next().unwrap().0 .0, vec![rat(1, 2), rat(0, 1)]);
        assert_eq!(endo_pullback(&b, &f, 0).unwrap(), f);

        let b = cov(vec![vec![1, 1], vec![-1, 1]]);
        let g = endo_pullback(&b, &f, 1).unwrap();
        let (k, _) = g.terms().next().unwrap();
        assert_eq!(k.0, vec![rat(1, 2), rat(-1, 2)]);
        assert!((mode_commutator_norm(k) - TWO_PI / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn apply_then_pullback_is_identity_shift() {
        let b = cov(vec![vec![2, 1], vec![0, 2]]);
        let f = TorusElement::from_modes(
            2,
            &[
                (vec![1, 2], Complex64::new(1.0, 0.5)),
                (vec![-3, 0], Complex64::new(0.0, 2.0)),
            ],
        )
        .unwrap();
        let g = endo_apply(&b, &f).unwrap();
        let back = endo_pullback(&b, &g, 1).unwrap();
        assert_eq!(
            back.terms().collect::<Vec<_>>(),
            f.terms().collect::<Vec<_>>()
        );
    }

    #[test]
    fn grid_bounds() {
        let b = cov(vec![vec![2, 0], vec![0, 2]]);
        let f = TorusElement::mode(&[2, -1]);
        let bounds = grid_commutator_norm(&b, &f, 16).unwrap();
        let exact = TWO_PI * 5f64.sqrt();
        assert!((bounds.grid - exact).abs() < 1e-12);
        assert!((bounds.upper - exact).abs() < 1e-12);

        let c = TorusElement::constant(2, Complex64::new(3.0, 0.0));
        let bounds = grid_commutator_norm(&b, &c, 16).unwrap();
        assert_eq!((bounds.grid, bounds.upper), (0.0, 0.0));

        let f = TorusElement::from_modes(
            2,
            &[
                (vec![1, 0], Complex64::new(1.0, 0.0)),
                (vec![0, 1], Complex64::new(1.0, 0.0)),
            ],
        )
        .unwrap();
        let bounds = grid_commutator_norm(&b, &f, 256).unwrap();
        // |∇f|² = 4π²·2 for complex exponentials of orthogonal modes.
        assert!((bounds.grid - TWO_PI * 2f64.sqrt()).abs() < 1e-6);
        assert!((bounds.upper - 4.0 * PI).abs() < 1e-12);
        assert!(grid_commutator_norm(&b, &f, 8).is_err());
    }

    #[test]
    fn lip_inequalities() {
        let b = cov(vec![vec![2, 0], vec![0, 2]]);
        let rep = lip_inequality_check(&b, &TorusElement::mode(&[1, 1]), 10, 16).unwrap();
        for s in &rep.steps {
            let expected = TWO_PI * 2f64.sqrt() * 2f64.powi(-(s.n as i32));
            assert!((s.grid - expected).abs() < 1e-12 * expected);
            assert!((s.envelope - expected).abs() < 1e-12 * expected);
        }
        assert!(rep.holds);

        let c = lip_inequality_check(
            &b,
            &TorusElement::constant(2, Complex64::new(1.0, 0.0)),
            5,
            16,
        )
        .unwrap();
        assert!(c.steps.iter().all(|s| s.grid == 0.0) && c.holds);

        let b = cov(vec![vec![2, 1], vec![0, 2]]);
        let f = TorusElement::from_modes(
            2,
            &[
                (vec![1, 0], Complex64::new(0.5, 0.1)),
                (vec![0, 2], Complex64::new(-0.3, 0.0)),
                (vec![-1, 1], Complex64::new(0.0, 0.7)),
                (vec![2, 3], Complex64::new(0.2, -0.2)),
                (vec![-3, -1], Complex64::new(0.1, 0.0)),
            ],
        )
        .unwrap();
        let rep = lip_inequality_check(&b, &f, 12, 32).unwrap();
        assert!(rep.holds);
        assert!(rep.steps.iter().all(|s| s.grid <= s.upper * (1.0 + 1e-12)));
    }

    #[test]
    fn sections() {
        let s = section_map(&cov(vec![vec![2]])).unwrap();
        assert_eq!(
            s.reps(),
            &[Frequency(vec![rat(0, 1)]), Frequency(vec![rat(1, 2)])]
        );
        let s = section_map(&cov(vec![vec![3]])).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.reps()[2], Frequency(vec![rat(2, 3)]));
        let s = section_map(&cov(vec![vec![2, 0], vec![0, 2]])).unwrap();
        assert_eq!(s.len(), 4);
        let s = section_map(&cov(vec![vec![1, 1], vec![-1, 1]])).unwrap();
        assert_eq!(
            s.reps(),
            &[Frequency::zero(2), Frequency(vec![rat(1, 2), rat(1, 2)])]
        );
    }

    #[test]
    fn solenoid_examples() {
        let b = cov(vec![vec![2]]);
        let s0 = solenoid_spectrum(&b, 0, 5).unwrap();
        let t = torus_spectrum(1, 5).unwrap();
        assert_eq!(
            s0.points().collect::<Vec<_>>(),
            t.points().collect::<Vec<_>>()
        );

        let s = solenoid_spectrum(&b, 1, 0).unwrap();
        assert_eq!(s.points().collect::<Vec<_>>(), vec![(0.0, 0.5), (PI, 0.5)]);

        for h in 0..4 {
            let s = solenoid_spectrum(&cov(vec![vec![2, 0], vec![0, 2]]), h, 3).unwrap();
            assert!((s.total_weight() - 49.0 * 2.0).abs() < 1e-9);
        }
        let s = solenoid_spectrum(&b, 4, 64).unwrap();
        let fit = dimension_fit_dyadic(&s).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.12, "{}", fit.slope);
        assert!(counting(&s, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn dirac_matches_spectrum() {
        for p in 1..=3 {
            let (d, grading) = torus_dirac(p, 2).unwrap();
            let mut abs: Vec<f64> = crate::operator::hermitian_eigenvalues(&d)
                .unwrap()
                .into_iter()
                .map(f64::abs)
                .collect();
            abs.sort_by(f64::total_cmp);
            let mut expected: Vec<f64> = torus_spectrum(p, 2)
                .unwrap()
                .points()
                .flat_map(|(v, w)| std::iter::repeat_n(v, w as usize))
                .collect();
            expected.sort_by(f64::total_cmp);
            // |k·ε| = |k|·I on the Clifford factor, so multiplicities match the weights.
            assert_eq!(abs.len(), expected.len());
            for (x, y) in abs.iter().zip(&expected) {
                assert!((x - y).abs() < 1e-9);
            }
            if let Some(g) = grading {
                assert!((&(&g * &d) + &(&d * &g)).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sample_covariance_is_exact() {
        let b = cov(vec![vec![2, 1], vec![0, 2]]);
        let a = TorusElement::mode(&[1, -2]);
        let pts: Vec<Vec<f64>> = (0..5)
            .map(|i| vec![0.13 * i as f64, 0.71 - 0.09 * i as f64])
            .collect();
        let (blocks, blocks_alpha) = covariant_blocks(&b, &a, 4, &pts).unwrap();
        for n in 1..=4 {
            assert_eq!(blocks_alpha[n], blocks[n - 1]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn pullback_composes(m in 0u32..4, n in 0u32..4, k in proptest::collection::vec(-5i64..=5, 2)) {
            let b = cov(vec![vec![2, 1], vec![0, 2]]);
            let f = TorusElement::mode(&k);
            let lhs = endo_pullback(&b, &endo_pullback(&b, &f, n).unwrap(), m).unwrap();
            let rhs = endo_pullback(&b, &f, m + n).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn pulled_back_mode_norm_bounded(n in 0u32..8, k in proptest::collection::vec(-4i64..=4, 2)) {
            for rows in [vec![vec![2, 0], vec![0, 2]], vec![vec![1, 1], vec![-1, 1]], vec![vec![2, 1], vec![0, 2]]] {
                let b = cov(rows);
                let f = TorusElement::mode(&k);
                let g = endo_pullback(&b, &f, n).unwrap();
                let (kn, _) = g.terms().next().unwrap();
                let lhs = mode_commutator_norm(kn);
                let rhs = b.inverse_power_norm(n) * mode_commutator_norm(&Frequency::integer(&k));
                prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-300);
            }
        }
    }
}
