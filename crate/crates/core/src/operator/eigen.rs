//! Hermitian eigenvalues: Householder reduction to a real symmetric
//! tridiagonal matrix, then implicit QL with Wilkinson shifts.
//!
//! Both stages are deterministic; identical input yields bit-identical
//! output.

use num_complex::Complex64;

use super::{ComplexMatrix, C0};
use crate::error::{Error, Result};

/// Input is accepted as Hermitian if `max|A_ij − conj(A_ji)| ≤ TOL·(1 + max|A_ij|)`.
const HERMITIAN_TOL: f64 = 1e-10;
const MAX_QL_ITERATIONS: usize = 60;

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::NotHermitian {
            asymmetry: a.hermitian_defect(),
        });
    }
    hermitian_eigenvalues_unchecked(a)
}

pub(crate) fn hermitian_eigenvalues_unchecked(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let (diag, off) = tridiagonalize(a);
    symmetric_tridiagonal_eigenvalues(&diag, &off)
}

/// Reduces a Hermitian matrix to real tridiagonal form `(d, e)` where
/// `e[i]` couples rows `i` and `i + 1`.
fn tridiagonalize(a: &ComplexMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows();
    // Symmetrise so that tiny input asymmetry does not leak into the reduction.
    let mut m = vec![C0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (a[(i, j)] + a[(j, i)].conj());
        }
    }
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![C0; n];
    let mut p = vec![C0; n];

    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let norm_x = (lo..n).map(|i| m[i * n + k].norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            off[k] = 0.0;
            continue;
        }
        let x0 = m[lo * n + k];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm_x;
        // v = x − alpha·e₁, normalised.
        for i in lo..n {
            v[i] = m[i * n + k];
        }
        v[lo] -= alpha;
        let norm_v = (lo..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if norm_v == 0.0 {
            off[k] = norm_x;
            continue;
        }
        for vi in v.iter_mut().take(n).skip(lo) {
            *vi /= norm_v;
        }
        // p = 2·A'v on the trailing block.
        for i in lo..n {
            let mut s = C0;
            for j in lo..n {
                s += m[i * n + j] * v[j];
            }
            p[i] = 2.0 * s;
        }
        // c = v*p is real for Hermitian A'.
        let c: f64 = (lo..n).map(|i| (v[i].conj() * p[i]).re).sum();
        // A' ← A' − v w* − w v* with w = p − c·v.
        for i in lo..n {
            p[i] -= c * v[i];
        }
        for i in lo..n {
            for j in lo..n {
                m[i * n + j] -= v[i] * p[j].conj() + p[i] * v[j].conj();
            }
        }
        // Column k below the subdiagonal is now (alpha, 0, …); |alpha| = ‖x‖.
        off[k] = norm_x;
        for i in lo..n {
            m[i * n + k] = C0;
            m[k * n + i] = C0;
        }
    }
    if n >= 2 {
        off[n - 2] = m[(n - 1) * n + (n - 2)].norm();
    }
    let diag = (0..n).map(|i| m[i * n + i].re).collect();
    (diag, off)
}

/// Eigenvalues of the real symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e` (`e.len() == d.len() − 1`), ascending.
pub fn symmetric_tridiagonal_eigenvalues(d: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if e.len() + 1 != n {
        return Err(Error::DimensionMismatch(format!(
            "tridiagonal with {} diagonal and {} off-diagonal entries",
            n,
            e.len()
        )));
    }
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.iter().copied().chain(std::iter::once(0.0)).collect();

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(Error::NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{C1, CI};
    use proptest::prelude::*;

    /// Roots of the characteristic polynomial of a Hermitian matrix of size
    /// ≤ 3, by closed form (trigonometric solution of the cubic).
    fn charpoly_roots(a: &ComplexMatrix) -> Vec<f64> {
        let n = a.rows();
        let re = |i: usize, j: usize| a[(i, j)].re;
        let mut roots = match n {
            1 => vec![re(0, 0)],
            2 => {
                let tr = re(0, 0) + re(1, 1);
                let det = re(0, 0) * re(1, 1) - a[(0, 1)].norm_sqr();
                let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
                vec![tr / 2.0 - disc, tr / 2.0 + disc]
            }
            3 => {
                // λ³ − c2 λ² + c1 λ − c0
                let c2 = re(0, 0) + re(1, 1) + re(2, 2);
                let c1 = re(0, 0) * re(1, 1) + re(0, 0) * re(2, 2) + re(1, 1) * re(2, 2)
                    - a[(0, 1)].norm_sqr()
                    - a[(0, 2)].norm_sqr()
                    - a[(1, 2)].norm_sqr();
                let c0 = {
                    let m = |i, j| a[(i, j)];
                    (m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                        - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0)))
                    .re
                };
                // Depressed cubic via λ = μ + c2/3.
                let shift = c2 / 3.0;
                let pp = c1 - c2 * c2 / 3.0;
                let qq = -(2.0 * c2.powi(3) / 27.0 - c2 * c1 / 3.0 + c0);
                if pp.abs() < 1e-300 {
                    vec![shift; 3]
                } else {
                    let amp = 2.0 * (-pp / 3.0).max(0.0).sqrt();
                    let arg = (3.0 * qq / (pp * amp)).clamp(-1.0, 1.0);
                    let base = arg.acos() / 3.0;
                    (0..3)
                        .map(|k| {
                            shift + amp * (base - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos()
                        })
                        .collect()
                }
            }
            _ => unreachable!(),
        };
        roots.sort_by(f64::total_cmp);
        roots
    }

    #[test]
    fn small_examples() {
        let e3 = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let e1 = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(hermitian_eigenvalues(&e3).unwrap(), vec![-1.0, 1.0]);
        let ev = hermitian_eigenvalues(&e1).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
        assert_eq!(
            hermitian_eigenvalues(&ComplexMatrix::identity(3)).unwrap(),
            vec![1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(
            hermitian_eigenvalues(&a),
            Err(Error::NotHermitian { .. })
        ));
        let b = ComplexMatrix::from_rows(&[vec![C1, CI], vec![CI, C1]]);
        assert!(hermitian_eigenvalues(&b).is_err());
    }

    #[test]
    fn degenerate_and_decoupled() {
        let d = ComplexMatrix::real_diag(&[3.0, -1.0, 3.0, 0.0, 2.0]);
        assert_eq!(
            hermitian_eigenvalues(&d).unwrap(),
            vec![-1.0, 0.0, 2.0, 3.0, 3.0]
        );
    }

    #[test]
    fn large_random_trace_and_frobenius() {
        // Deterministic pseudo-random Hermitian 60×60: eigenvalues must
        // reproduce trace and Frobenius norm.
        let n = 60;
        let mut a = ComplexMatrix::zeros(n, n);
        let mut state = 12345u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            a[(i, i)] = Complex64::new(next(), 0.0);
            for j in i + 1..n {
                let z = Complex64::new(next(), next());
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        let ev = hermitian_eigenvalues(&a).unwrap();
        let tr: f64 = ev.iter().sum();
        let fro2: f64 = ev.iter().map(|x| x * x).sum();
        assert!((tr - a.trace().re).abs() < 1e-10);
        assert!((fro2 - a.frobenius_norm().powi(2)).abs() < 1e-9);
        assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    }

    fn arb_hermitian(max: usize) -> impl Strategy<Value = ComplexMatrix> {
        (1..=max).prop_flat_map(|n| {
            proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), n * n).prop_map(move |v| {
                let mut a = ComplexMatrix::zeros(n, n);
                for i in 0..n {
                    a[(i, i)] = Complex64::new(v[i * n + i].0, 0.0);
                    for j in i + 1..n {
                        let z = Complex64::new(v[i * n + j].0, v[i * n + j].1);
                        a[(i, j)] = z;
                        a[(j, i)] = z.conj();
                    }
                }
                a
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn agrees_with_characteristic_polynomial(a in arb_hermitian(3)) {
            let got = hermitian_eigenvalues(&a).unwrap();
            let want = charpoly_roots(&a);
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() < 1e-8, "{:?} vs {:?}", got, want);
            }
        }
    }
}
