use num_complex::Complex64;

use super::{kron, ComplexMatrix, C0, C1, CI};
use crate::error::{Error, Result};

/// Hermitian unitaries `ε_1, …, ε_p` of size `2^⌊p/2⌋` with
/// `ε_a ε_b + ε_b ε_a = 2δ_ab·I`.
#[derive(Clone, Debug)]
pub struct CliffordFamily {
    p: usize,
    generators: Vec<ComplexMatrix>,
}

impl CliffordFamily {
    pub fn rank(&self) -> usize {
        self.p
    }

    /// Side length of every generator, `2^⌊p/2⌋`.
    pub fn dim(&self) -> usize {
        self.generators[0].rows()
    }

    pub fn generators(&self) -> &[ComplexMatrix] {
        &self.generators
    }

    pub fn generator(&self, a: usize) -> &ComplexMatrix {
        &self.generators[a]
    }

    /// Largest entry of `ε_aε_b + ε_bε_a − 2δ_ab·I` over all pairs.
    pub fn anticommutation_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for (a, ea) in self.generators.iter().enumerate() {
            for (b, eb) in self.generators.iter().enumerate() {
                let mut s = &(ea * eb) + &(eb * ea);
                if a == b {
                    s = &s - &ComplexMatrix::identity(n).scale_real(2.0);
                }
                worst = worst.max(s.max_abs());
            }
        }
        worst
    }

    /// `Σ_a x_a ε_a` for a real vector `x` of length `p`.
    pub fn symbol(&self, x: &[f64]) -> ComplexMatrix {
        assert_eq!(x.len(), self.p);
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for (g, &xa) in self.generators.iter().zip(x) {
            out = &out + &g.scale_real(xa);
        }
        out
    }

    /// Grading `γ` anticommuting with every generator, for even `p`.
    pub fn chirality(&self) -> Option<ComplexMatrix> {
        if self.p % 2 == 1 {
            return None;
        }
        Some(chirality_of(&self.generators))
    }
}

fn pauli() -> [ComplexMatrix; 3] {
    [
        ComplexMatrix::from_rows(&[vec![C0, C1], vec![C1, C0]]),
        ComplexMatrix::from_rows(&[vec![C0, -CI], vec![CI, C0]]),
        ComplexMatrix::from_rows(&[vec![C1, C0], vec![C0, -C1]]),
    ]
}

/// `(−i)^k ε_1⋯ε_{2k}`: Hermitian, squares to I, anticommutes with each ε_a.
fn chirality_of(gens: &[ComplexMatrix]) -> ComplexMatrix {
    let k = gens.len() / 2;
    let n = gens.first().map_or(1, |g| g.rows());
    let product = gens
        .iter()
        .fold(ComplexMatrix::identity(n), |acc, g| &acc * g);
    let phase = (0..k).fold(C1, |acc, _| acc * Complex64::new(0.0, -1.0));
    product.scale(phase)
}

/// Deterministic Clifford generators by recursive tensor extension.
///
/// Even rank `2k` extends rank `2k − 2` by `γ ↦ γ ⊗ ε₃` plus `I ⊗ ε₁`,
/// `I ⊗ ε₂`; odd rank appends the chirality of the even family below it.
/// Rank 2 gives the first two Pauli matrices and rank 3 all three.
pub fn clifford_generators(p: usize) -> Result<CliffordFamily> {
    if p == 0 {
        return Err(Error::InvalidArgument(
            "Clifford rank must be at least 1".into(),
        ));
    }
    let [s1, s2, s3] = pauli();
    let mut even: Vec<ComplexMatrix> = Vec::new();
    let mut size = 1;
    for _ in 0..p / 2 {
        let id = ComplexMatrix::identity(size);
        let mut next: Vec<ComplexMatrix> = even.iter().map(|g| kron(g, &s3)).collect();
        next.push(kron(&id, &s1));
        next.push(kron(&id, &s2));
        even = next;
        size *= 2;
    }
    if p % 2 == 1 {
        let chi = if even.is_empty() {
            ComplexMatrix::identity(1)
        } else {
            chirality_of(&even)
        };
        even.push(chi);
    }
    Ok(CliffordFamily {
        p,
        generators: even,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_is_scalar_one() {
        let f = clifford_generators(1).unwrap();
        assert_eq!(f.generators(), &[ComplexMatrix::identity(1)]);
    }

    #[test]
    fn rank_two_and_three_are_pauli() {
        let [s1, s2, s3] = pauli();
        let f2 = clifford_generators(2).unwrap();
        assert_eq!(f2.generators(), &[s1.clone(), s2.clone()]);
        let f3 = clifford_generators(3).unwrap();
        assert_eq!(f3.generators(), &[s1, s2, s3]);
    }

    #[test]
    fn rank_zero_rejected() {
        assert!(clifford_generators(0).is_err());
    }

    #[test]
    fn relations_up_to_rank_six() {
        for p in 1..=6 {
            let f = clifford_generators(p).unwrap();
            assert_eq!(f.dim(), 1 << (p / 2));
            assert!(f.anticommutation_defect() < 1e-12, "p = {p}");
            for g in f.generators() {
                assert!(g.hermitian_defect() < 1e-15);
            }
        }
    }

    #[test]
    fn chirality_grades_even_families() {
        for p in [2, 4, 6] {
            let f = clifford_generators(p).unwrap();
            let chi = f.chirality().unwrap();
            let id = ComplexMatrix::identity(f.dim());
            assert!((&(&chi * &chi) - &id).max_abs() < 1e-12);
            for g in f.generators() {
                assert!((&(&chi * g) + &(g * &chi)).max_abs() < 1e-12);
            }
        }
        assert!(clifford_generators(3).unwrap().chirality().is_none());
    }

    #[test]
    fn symbol_squares_to_euclidean_length() {
        let f = clifford_generators(3).unwrap();
        let s = f.symbol(&[1.0, 2.0, 2.0]);
        let sq = &s * &s;
        assert!((&sq - &ComplexMatrix::identity(2).scale_real(9.0)).max_abs() < 1e-12);
    }
}
