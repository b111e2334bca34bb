//! Rational rotation algebra generated by `U, V` with `VU = λUV`,
//! `λ = e^{2πi p/q}`: generator matrices, the twisted product on
//! monomials, and commutators with the Fourier Dirac operator.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lattice::{Frequency, IntMatrix, RatMatrix};
use crate::operator::{clifford_generators, ComplexMatrix, SparseMatrix};
use crate::torus::CoveringMatrix;

/// Generator matrices of `M_q` for `θ = p/q`, with the commutation sign
/// measured on the matrices themselves.
#[derive(Clone, Debug)]
pub struct RotationParams {
    p: i64,
    q: i64,
    u0: ComplexMatrix,
    v0: ComplexMatrix,
    sigma: i64,
}

fn root_of_unity(k: i64, q: i64) -> Complex64 {
    let k = k.rem_euclid(q);
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / q as f64)
}

impl RotationParams {
    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    pub fn u0(&self) -> &ComplexMatrix {
        &self.u0
    }

    pub fn v0(&self) -> &ComplexMatrix {
        &self.v0
    }

    /// `σ` in `V₀U₀ = λ^σ U₀V₀`.
    pub fn sigma(&self) -> i64 {
        self.sigma
    }

    /// `λ^k`, exact exponent reduced mod `q`.
    pub fn lambda_pow(&self, k: i64) -> Complex64 {
        root_of_unity(self.p * k, self.q)
    }

    pub fn theta(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

/// `U₀ = diag(e^{2πi(k−1)θ})`, `V₀` the cyclic shift `(V₀)_{h,h+1} = 1`,
/// `(V₀)_{q,1} = 1`.
pub fn build_generators(p: i64, q: i64) -> Result<RotationParams> {
    if q < 1 {
        return Err(Error::InvalidArgument("q must be positive".into()));
    }
    if p.gcd(&q) != 1 {
        return Err(Error::InvalidArgument(format!(
            "{p} and {q} are not coprime"
        )));
    }
    let n = q as usize;
    let diag: Vec<Complex64> = (0..q).map(|k| root_of_unity(p * k, q)).collect();
    let u0 = ComplexMatrix::diag(&diag);
    let mut v0 = ComplexMatrix::zeros(n, n);
    for h in 0..n {
        v0[(h, (h + 1) % n)] = Complex64::new(1.0, 0.0);
    }
    let vu = &v0 * &u0;
    let uv = &u0 * &v0;
    let sigma = [1i64, -1]
        .into_iter()
        .find(|&s| (&vu - &uv.scale(root_of_unity(p * s, q))).max_abs() < 1e-12)
        .ok_or_else(|| Error::Consistency("generators do not commute up to λ^{±1}".into()))?;
    Ok(RotationParams {
        p,
        q,
        u0,
        v0,
        sigma,
    })
}

/// `λ^k U^m V^n` with `k` taken mod `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhasedMonomial {
    pub phase: i64,
    pub m: i64,
    pub n: i64,
}

/// `(λ^a U^mV^n)(λ^b U^{m'}V^{n'}) = λ^{a+b+σnm'} U^{m+m'}V^{n+n'}`.
pub fn monomial_product(
    params: &RotationParams,
    x: PhasedMonomial,
    y: PhasedMonomial,
) -> PhasedMonomial {
    PhasedMonomial {
        phase: (x.phase + y.phase + params.sigma * x.n * y.m).rem_euclid(params.q),
        m: x.m + y.m,
        n: x.n + y.n,
    }
}

/// Finite sum `Σ a_{mn} U^mV^n`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct NCMonomialSum {
    coeffs: BTreeMap<(i64, i64), Complex64>,
}

impl NCMonomialSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn monomial(m: i64, n: i64) -> Self {
        let mut s = Self::new();
        s.add(m, n, Complex64::new(1.0, 0.0));
        s
    }

    pub fn one() -> Self {
        Self::monomial(0, 0)
    }

    pub fn add(&mut self, m: i64, n: i64, c: Complex64) {
        let e = self.coeffs.entry((m, n)).or_insert(Complex64::zero());
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&(m, n));
        }
    }

    pub fn plus(mut self, other: &Self) -> Self {
        for (&(m, n), &c) in &other.coeffs {
            self.add(m, n, c);
        }
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i64, i64), &Complex64)> {
        self.coeffs.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest `|m|` or `|n|` among the terms.
    pub fn max_frequency(&self) -> i64 {
        self.coeffs
            .keys()
            .map(|&(m, n)| m.abs().max(n.abs()))
            .max()
            .unwrap_or(0)
    }
}

/// Bilinear extension of [`monomial_product`].
pub fn twisted_product(
    params: &RotationParams,
    x: &NCMonomialSum,
    y: &NCMonomialSum,
) -> NCMonomialSum {
    let mut out = NCMonomialSum::new();
    for (&(m, n), &a) in x.terms() {
        for (&(m2, n2), &b) in y.terms() {
            out.add(
                m + m2,
                n + n2,
                a * b * params.lambda_pow(params.sigma * n * m2),
            );
        }
    }
    out
}

/// `‖[D₀, U^mV^n]‖ = 2π|(m, n)|₂`.
pub fn monomial_commutator_norm(m: i64, n: i64) -> f64 {
    2.0 * PI * ((m * m + n * n) as f64).sqrt()
}

/// Norm of `[D₀, L_x]` on the orthonormal monomial basis `|m|,|n| ≤ K`
/// (times the 2-dim Clifford factor), compressed to source monomials at
/// distance at least `max_frequency(x)` from the boundary.
pub fn regular_rep_commutator_norm(
    params: &RotationParams,
    x: &NCMonomialSum,
    k: i64,
) -> Result<f64> {
    let reach = x.max_frequency();
    if 2 * reach > k {
        return Err(Error::InvalidArgument(format!(
            "cutoff {k} too small for frequencies up to {reach}"
        )));
    }
    let side = (2 * k + 1) as usize;
    let index = |m: i64, n: i64| ((m + k) as usize * side + (n + k) as usize) * 2;
    let fam = clifford_generators(2)?;
    let inner = k - reach;
    let mut triplets = Vec::new();
    let mut col = 0usize;
    for m in -inner..=inner {
        for n in -inner..=inner {
            for (&(dm, dn), &a) in x.terms() {
                // L_x e_{mn} = Σ a λ^{σ·dn·m} e_{m+dm, n+dn}; D₀ contributes the
                // symbol difference 2π(dm ε₁ + dn ε₂).
                let c = a * params.lambda_pow(params.sigma * dn * m);
                let symbol = fam.symbol(&[2.0 * PI * dm as f64, 2.0 * PI * dn as f64]);
                let row = index(m + dm, n + dn);
                for r in 0..2 {
                    for s in 0..2 {
                        let v = c * symbol[(r, s)];
                        if !v.is_zero() {
                            triplets.push((row + r, col + s, v));
                        }
                    }
                }
            }
            col += 2;
        }
    }
    let mat = SparseMatrix::from_triplets(side * side * 2, col, triplets);
    Ok(mat.operator_norm())
}

/// `(m, n) ↦ Aˢ(m, n)` with `A = (Bᵀ)⁻¹`, gated on `det B ≡ 1 (mod q)`.
/// Returns the frequency and `2π|Aˢ(m, n)|₂`.
pub fn endo_frequency(
    b: &IntMatrix,
    q: i64,
    m: i64,
    n: i64,
    steps: u32,
) -> Result<(Frequency, f64)> {
    if b.dim() != 2 {
        return Err(Error::DimensionMismatch(
            "rotation endomorphism needs a 2x2 matrix".into(),
        ));
    }
    let det = b.det() as i64;
    if det.rem_euclid(q) != 1 % q {
        return Err(Error::Congruence { det, q });
    }
    let a = b.transpose().to_rational().inverse()?;
    let k = a.pow(steps).apply(&Frequency::integer(&[m, n]));
    let norm = 2.0 * PI * k.norm();
    Ok((k, norm))
}

/// `Σ a_{mn} e^{2πi⟨T(m,n), t⟩} U₀^m V₀^n` at each sample point, stacked
/// block-diagonally.
fn sample_field(
    params: &RotationParams,
    x: &NCMonomialSum,
    t: &RatMatrix,
    points: &[[f64; 2]],
) -> Result<ComplexMatrix> {
    let q = params.q as usize;
    let coeffs: Vec<(Vec<f64>, Complex64, ComplexMatrix)> = x
        .terms()
        .map(|(&(m, n), &a)| {
            let k = t.apply(&Frequency::integer(&[m, n])).to_f64();
            let mat = &matrix_power(&params.u0, m) * &matrix_power(&params.v0, n);
            (k, a, mat)
        })
        .collect();
    let blocks: Vec<ComplexMatrix> = points
        .iter()
        .map(|pt| {
            coeffs
                .iter()
                .fold(ComplexMatrix::zeros(q, q), |acc, (k, a, mat)| {
                    let phase =
                        Complex64::from_polar(1.0, 2.0 * PI * (k[0] * pt[0] + k[1] * pt[1]));
                    &acc + &mat.scale(a * phase)
                })
        })
        .collect();
    ComplexMatrix::block_diag(&blocks)
}

fn matrix_power(m: &ComplexMatrix, e: i64) -> ComplexMatrix {
    let base = if e >= 0 { m.clone() } else { m.adjoint() };
    (0..e.unsigned_abs()).fold(ComplexMatrix::identity(m.rows()), |acc, _| &acc * &base)
}

/// Blocks `π(α⁻ⁿ(x))` and `π(α⁻ⁿ(α(x)))`, `n = 0..=N`, where `α` sends the
/// frequency `k` to `Bᵀk` and `α⁻ⁿ` to `Aⁿk`, keeping matrix coefficients.
pub fn covariant_blocks(
    params: &RotationParams,
    b: &CoveringMatrix,
    x: &NCMonomialSum,
    n_max: usize,
    points: &[[f64; 2]],
) -> Result<(Vec<ComplexMatrix>, Vec<ComplexMatrix>)> {
    if b.dim() != 2 {
        return Err(Error::DimensionMismatch(
            "rotation endomorphism needs a 2x2 matrix".into(),
        ));
    }
    let det = b.b().det() as i64;
    if det.rem_euclid(params.q) != 1 % params.q {
        return Err(Error::Congruence { det, q: params.q });
    }
    let bt = b.b().transpose().to_rational();
    let mut blocks = Vec::with_capacity(n_max + 1);
    let mut blocks_alpha = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max as u32 {
        let an = b.a().pow(n);
        blocks.push(sample_field(params, x, &an, points)?);
        blocks_alpha.push(sample_field(params, x, &an.mul(&bt), points)?);
    }
    Ok((blocks, blocks_alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossed::{check_covariance, CovariantTruncation};
    use crate::lattice::Rational;
    use proptest::prelude::*;

    #[test]
    fn generators_q3() {
        let g = build_generators(1, 3).unwrap();
        let w = root_of_unity(1, 3);
        assert!((g.u0()[(1, 1)] - w).norm() < 1e-15);
        assert!((g.u0()[(2, 2)] - w * w).norm() < 1e-15);
        assert_eq!(g.v0()[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(g.v0()[(2, 0)], Complex64::new(1.0, 0.0));
        // V₀U₀V₀*U₀* is the scalar λ^σ.
        let c = &(&(g.v0() * g.u0()) * &g.v0().adjoint()) * &g.u0().adjoint();
        let expected = ComplexMatrix::identity(3).scale(g.lambda_pow(g.sigma()));
        assert!((&c - &expected).max_abs() < 1e-12);
        assert_eq!(g.sigma(), 1);
    }

    #[test]
    fn generators_degenerate_and_invalid() {
        let g = build_generators(0, 1).unwrap();
        assert_eq!(g.u0(), &ComplexMatrix::identity(1));
        assert_eq!(g.v0(), &ComplexMatrix::identity(1));
        assert!(build_generators(2, 4).is_err());
        assert!(build_generators(1, 0).is_err());
    }

    #[test]
    fn commutation_scalar_is_qth_root() {
        for (p, q) in [(1, 5), (2, 5), (3, 7), (5, 12)] {
            let g = build_generators(p, q).unwrap();
            let z = g.lambda_pow(g.sigma());
            assert!((z.powi(q as i32) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    fn matrix_of(g: &RotationParams, x: PhasedMonomial) -> ComplexMatrix {
        let mut out = ComplexMatrix::identity(g.q() as usize).scale(g.lambda_pow(x.phase));
        let upow = |k: i64| {
            let base = if k >= 0 {
                g.u0().clone()
            } else {
                g.u0().adjoint()
            };
            (0..k.abs()).fold(ComplexMatrix::identity(g.q() as usize), |acc, _| {
                &acc * &base
            })
        };
        let vpow = |k: i64| {
            let base = if k >= 0 {
                g.v0().clone()
            } else {
                g.v0().adjoint()
            };
            (0..k.abs()).fold(ComplexMatrix::identity(g.q() as usize), |acc, _| {
                &acc * &base
            })
        };
        out = &out * &upow(x.m);
        &out * &vpow(x.n)
    }

    #[test]
    fn twisted_product_matches_matrices() {
        let g = build_generators(2, 7).unwrap();
        let u = NCMonomialSum::monomial(1, 0);
        let v = NCMonomialSum::monomial(0, 1);
        let uv = twisted_product(&g, &u, &v);
        let vu = twisted_product(&g, &v, &u);
        let (_, a) = uv.terms().next().unwrap();
        let (_, b) = vu.terms().next().unwrap();
        assert!((b / a - g.lambda_pow(1)).norm() < 1e-12);
        let uvuv = twisted_product(&g, &uv, &uv);
        let (&key, c) = uvuv.terms().next().unwrap();
        assert_eq!(key, (2, 2));
        assert!((c - g.lambda_pow(1)).norm() < 1e-12);
        assert_eq!(twisted_product(&g, &uv, &NCMonomialSum::one()), uv);

        for (x, y) in [((1, 2), (-1, 3)), ((0, -2), (4, 1)), ((3, 3), (2, -5))] {
            let a = PhasedMonomial {
                phase: 0,
                m: x.0,
                n: x.1,
            };
            let b = PhasedMonomial {
                phase: 0,
                m: y.0,
                n: y.1,
            };
            let lhs = &matrix_of(&g, a) * &matrix_of(&g, b);
            let rhs = matrix_of(&g, monomial_product(&g, a, b));
            assert!((&lhs - &rhs).max_abs() < 1e-12);
        }
    }

    #[test]
    fn monomial_norms() {
        assert_eq!(monomial_commutator_norm(0, 0), 0.0);
        assert!((monomial_commutator_norm(1, 0) - 2.0 * PI).abs() < 1e-15);
        assert!((monomial_commutator_norm(3, 4) - 10.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn regular_rep_single_monomials() {
        let g = build_generators(1, 5).unwrap();
        for m in -4..=4 {
            for n in -4..=4 {
                let x = NCMonomialSum::monomial(m, n);
                let got = regular_rep_commutator_norm(&g, &x, 12).unwrap();
                assert!(
                    (got - monomial_commutator_norm(m, n)).abs() < 1e-9,
                    "{m} {n}"
                );
            }
        }
        assert_eq!(
            regular_rep_commutator_norm(&g, &NCMonomialSum::one(), 8).unwrap(),
            0.0
        );
        assert!(regular_rep_commutator_norm(&g, &NCMonomialSum::monomial(5, 0), 8).is_err());
    }

    #[test]
    fn regular_rep_sum_increases_toward_bound() {
        let g = build_generators(1, 5).unwrap();
        let x = NCMonomialSum::monomial(1, 0).plus(&NCMonomialSum::monomial(0, 1));
        let a = regular_rep_commutator_norm(&g, &x, 8).unwrap();
        let b = regular_rep_commutator_norm(&g, &x, 16).unwrap();
        assert!(
            2.0 * PI <= a && a <= b + 1e-9 && b <= 4.0 * PI + 1e-9,
            "{a} {b}"
        );
    }

    #[test]
    fn endo_frequency_examples() {
        let b = IntMatrix::scalar(2, 2);
        let (k, norm) = endo_frequency(&b, 3, 1, 0, 1).unwrap();
        assert_eq!(k.0, vec![Rational::new(1, 2), Rational::new(0, 1)]);
        assert!((norm - PI).abs() < 1e-15);
        let (k, _) = endo_frequency(&b, 3, 1, 2, 0).unwrap();
        assert_eq!(k, Frequency::integer(&[1, 2]));
        let b = IntMatrix::new(vec![vec![4, 1], vec![3, 1]]).unwrap();
        let (k, _) = endo_frequency(&b, 5, 0, 1, 1).unwrap();
        // Bᵀ = [[4,3],[1,1]], inverse [[1,−3],[−1,4]].
        assert_eq!(k, Frequency::integer(&[-3, 4]));
        assert_eq!(
            endo_frequency(&IntMatrix::scalar(2, 2), 5, 1, 0, 1),
            Err(Error::Congruence { det: 4, q: 5 })
        );
    }

    #[test]
    fn covariance_with_matrix_coefficients() {
        let g = build_generators(1, 3).unwrap();
        let b = CoveringMatrix::new(IntMatrix::scalar(2, 2)).unwrap();
        let x = NCMonomialSum::monomial(1, 0)
            .plus(&NCMonomialSum::monomial(-1, 2))
            .plus(&NCMonomialSum::monomial(0, 1));
        let points: Vec<[f64; 2]> = (0..6)
            .map(|i| [0.13 * i as f64, 0.71 - 0.05 * i as f64])
            .collect();
        let (blocks, alpha) = covariant_blocks(&g, &b, &x, 3, &points).unwrap();
        let t = CovariantTruncation::new(blocks).unwrap();
        assert!(check_covariance(&t, &alpha).unwrap().max_interior() < 1e-12);
        let bad =
            CoveringMatrix::new(IntMatrix::new(vec![vec![1, 1], vec![-1, 1]]).unwrap()).unwrap();
        assert!(matches!(
            covariant_blocks(&g, &bad, &x, 2, &points),
            Err(Error::Congruence { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn twisted_product_associative(
            a in (0i64..7, -5i64..5, -5i64..5),
            b in (0i64..7, -5i64..5, -5i64..5),
            c in (0i64..7, -5i64..5, -5i64..5),
        ) {
            let g = build_generators(3, 7).unwrap();
            let mk = |t: (i64, i64, i64)| PhasedMonomial { phase: t.0, m: t.1, n: t.2 };
            let (x, y, z) = (mk(a), mk(b), mk(c));
            let left = monomial_product(&g, monomial_product(&g, x, y), z);
            let right = monomial_product(&g, x, monomial_product(&g, y, z));
            prop_assert_eq!(left, right);
        }

        #[test]
        fn lip_sequence_bounded(m in -3i64..=3, n in -3i64..=3, s in 0u32..10) {
            // det 4 ≡ 1 (mod 3), purely expanding.
            let b = IntMatrix::scalar(2, 2);
            let cov = CoveringMatrix::new(b.clone()).unwrap();
            let (_, norm) = endo_frequency(&b, 3, m, n, s).unwrap();
            let bound = monomial_commutator_norm(m, n) * (0..=s).map(|j| cov.inverse_power_norm(j)).fold(0.0, f64::max);
            prop_assert!(norm <= bound * (1.0 + 1e-12) + 1e-300);
        }
    }
}
