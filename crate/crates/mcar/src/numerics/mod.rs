//! Dense symmetric linear algebra and chi-square tail probabilities.
//!
//! Everything here is pure and thread-safe; matrices are immutable after
//! construction.

mod gamma;
mod jacobi;

pub use gamma::{chisq_cdf, chisq_quantile, chisq_sf, ln_gamma};
pub(crate) use jacobi::sym_eigen;

use crate::error::{Error, Result};

// Relative asymmetry accepted by the validating constructor.
const SYMMETRY_TOL: f64 = 1e-10;

/// Dense symmetric matrix with finite entries.
///
/// Stored row-major; the validating constructor symmetrizes its input so
/// that `get(i, j) == get(j, i)` holds exactly afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    /// Build from row-major entries, checking finiteness and symmetry
    /// (up to a small relative tolerance). Stores the symmetrized matrix.
    pub fn new(dim: usize, mut entries: Vec<f64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "expected {}x{dim} entries, got {}",
                dim,
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                context: "symmetric matrix entries".into(),
            });
        }
        for i in 0..dim {
            for j in i + 1..dim {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i];
                if (a - b).abs() > SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::NotSymmetric);
                }
                let avg = 0.5 * (a + b);
                entries[i * dim + j] = avg;
                entries[j * dim + i] = avg;
            }
        }
        Ok(SymMatrix { dim, entries })
    }

    /// Build a symmetric matrix from `f(i, j)` evaluated on i <= j and
    /// mirrored, so the result is exactly symmetric by construction.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let x = f(i, j);
                entries[i * dim + j] = x;
                entries[j * dim + i] = x;
            }
        }
        SymMatrix { dim, entries }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// x^T A x
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Principal submatrix on the given (strictly increasing) index set.
    pub fn submatrix(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Outcome of [`invert_or_pseudo`].
#[derive(Debug, Clone)]
pub struct InverseResult {
    pub matrix: SymMatrix,
    /// Number of singular values kept; equals `dim` for an exact inverse.
    pub rank: usize,
    pub used_pseudoinverse: bool,
}

/// Default relative singular-value cutoff for [`invert_or_pseudo`].
pub fn default_pinv_tolerance(dim: usize) -> f64 {
    dim as f64 * f64::EPSILON
}

/// Exact inverse when the matrix is comfortably nonsingular, otherwise
/// the Moore-Penrose pseudoinverse.
///
/// `tol` is relative: singular values at or below `tol * sigma_max` are
/// treated as zero. When every singular value clears that cutoff the
/// exact inverse is returned with `used_pseudoinverse = false`.
pub fn invert_or_pseudo(m: &SymMatrix, tol: f64) -> Result<InverseResult> {
    if !tol.is_finite() || tol < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "pseudoinverse tolerance must be finite and nonnegative, got {tol}"
        )));
    }
    if m.entries().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            context: "matrix passed to invert_or_pseudo".into(),
        });
    }
    let n = m.dim();
    let (values, vectors) = sym_eigen(m);
    let sigma_max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sigma_max == 0.0 {
        return Ok(InverseResult {
            matrix: SymMatrix::zeros(n),
            rank: 0,
            used_pseudoinverse: true,
        });
    }
    let thresh = tol * sigma_max;
    let keep: Vec<bool> = values.iter().map(|v| v.abs() > thresh).collect();
    let rank = keep.iter().filter(|&&k| k).count();
    let inv_values: Vec<f64> = values
        .iter()
        .zip(&keep)
        .map(|(v, &k)| if k { 1.0 / v } else { 0.0 })
        .collect();
    let matrix = SymMatrix::from_fn(n, |i, j| {
        (0..n)
            .map(|k| vectors[i * n + k] * inv_values[k] * vectors[j * n + k])
            .sum()
    });
    Ok(InverseResult {
        matrix,
        rank,
        used_pseudoinverse: rank < n,
    })
}

/// Eigenvalues of a symmetric matrix, in no particular order.
pub fn sym_eigenvalues(m: &SymMatrix) -> Vec<f64> {
    sym_eigen(m).0
}

/// Unbiased sample covariance of two equally long vectors.
pub fn sample_cov(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "covariance of vectors with different lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let mean_a = a.iter().sum::<f64>() / n as f64;
    let mean_b = b.iter().sum::<f64>() / n as f64;
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - mean_a) * (y - mean_b))
        .sum();
    Ok(sum / (n - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mul(a: &SymMatrix, b: &SymMatrix) -> Vec<f64> {
        let n = a.dim();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| a.get(i, k) * b.get(k, j)).sum();
            }
        }
        out
    }

    fn max_residual_from_identity(prod: &[f64], n: usize) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[i * n + j] - want).abs());
            }
        }
        worst
    }

    // Simple deterministic generator for test matrices.
    fn xorshift(seed: &mut u64) -> f64 {
        *seed ^= *seed << 13;
        *seed ^= *seed >> 7;
        *seed ^= *seed << 17;
        (*seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    fn random_spd(n: usize, seed: &mut u64) -> SymMatrix {
        // B^T B + n * I is comfortably positive definite.
        let b: Vec<f64> = (0..n * n).map(|_| xorshift(seed)).collect();
        SymMatrix::from_fn(n, |i, j| {
            let dot: f64 = (0..n).map(|k| b[k * n + i] * b[k * n + j]).sum();
            dot + if i == j { n as f64 } else { 0.0 }
        })
    }

    #[test]
    fn identity_inverts_to_identity() {
        let m = SymMatrix::identity(3);
        let inv = invert_or_pseudo(&m, default_pinv_tolerance(3)).unwrap();
        assert_eq!(inv.rank, 3);
        assert!(!inv.used_pseudoinverse);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((inv.matrix.get(i, j) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn diagonal_pseudoinverse() {
        let m = SymMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => 2.0,
            _ => 0.0,
        });
        let inv = invert_or_pseudo(&m, default_pinv_tolerance(2)).unwrap();
        assert_eq!(inv.rank, 1);
        assert!(inv.used_pseudoinverse);
        assert!((inv.matrix.get(0, 0) - 0.5).abs() < 1e-14);
        assert_eq!(inv.matrix.get(1, 1), 0.0);
        assert_eq!(inv.matrix.get(0, 1), 0.0);
    }

    #[test]
    fn random_spd_multiplies_back_to_identity() {
        let mut seed = 0x9e3779b97f4a7c15u64;
        for n in [2, 5, 5, 12, 30] {
            let m = random_spd(n, &mut seed);
            let inv = invert_or_pseudo(&m, default_pinv_tolerance(n)).unwrap();
            assert!(!inv.used_pseudoinverse);
            let prod = mul(&m, &inv.matrix);
            assert!(max_residual_from_identity(&prod, n) < 1e-8);
        }
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let inv = invert_or_pseudo(&SymMatrix::zeros(4), 1e-12).unwrap();
        assert_eq!(inv.rank, 0);
        assert!(inv.used_pseudoinverse);
        assert_eq!(inv.matrix.max_abs(), 0.0);
    }

    #[test]
    fn pseudoinverse_satisfies_penrose_conditions() {
        let mut seed = 0xdeadbeefcafef00du64;
        for trial in 0..20 {
            let n = 4 + trial % 4;
            let r = 1 + trial % (n - 1); // deliberately deficient rank
            let b: Vec<f64> = (0..r * n).map(|_| xorshift(&mut seed)).collect();
            let m = SymMatrix::from_fn(n, |i, j| {
                (0..r).map(|k| b[k * n + i] * b[k * n + j]).sum()
            });
            let inv = invert_or_pseudo(&m, default_pinv_tolerance(n)).unwrap();
            assert!(inv.used_pseudoinverse);
            assert_eq!(inv.rank, r);

            let a_plus = &inv.matrix;
            let ap = mul(&m, a_plus); // A A+
            let pa = mul(a_plus, &m); // A+ A
            // A A+ A = A and A+ A A+ = A+.
            for i in 0..n {
                for j in 0..n {
                    let aaa: f64 = (0..n).map(|k| ap[i * n + k] * m.get(k, j)).sum();
                    assert!((aaa - m.get(i, j)).abs() < 1e-8);
                    let ppp: f64 = (0..n).map(|k| pa[i * n + k] * a_plus.get(k, j)).sum();
                    assert!((ppp - a_plus.get(i, j)).abs() < 1e-8);
                    // Symmetry of the projectors.
                    assert!((ap[i * n + j] - ap[j * n + i]).abs() < 1e-8);
                    assert!((pa[i * n + j] - pa[j * n + i]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn well_conditioned_inverse_across_condition_numbers() {
        // Diagonal matrices with condition numbers up to 1e6.
        for exp in [2, 4, 6] {
            let kappa = 10f64.powi(exp);
            let n = 8;
            let m = SymMatrix::from_fn(n, |i, j| {
                if i == j {
                    // Log-spaced spectrum from 1/kappa to 1.
                    (10f64).powf(-(exp as f64) * i as f64 / (n - 1) as f64)
                } else {
                    0.0
                }
            });
            let inv = invert_or_pseudo(&m, default_pinv_tolerance(n)).unwrap();
            assert!(!inv.used_pseudoinverse, "kappa = {kappa}");
            let prod = mul(&m, &inv.matrix);
            assert!(max_residual_from_identity(&prod, n) < 1e-8);
        }
    }

    #[test]
    fn rejects_invalid_matrices() {
        assert!(SymMatrix::new(2, vec![1.0, f64::NAN, f64::NAN, 1.0]).is_err());
        assert!(SymMatrix::new(2, vec![1.0, 2.0, 3.0, 1.0]).is_err());
        assert!(SymMatrix::new(2, vec![1.0]).is_err());
        let with_nan = SymMatrix::from_fn(2, |i, j| if i == j { f64::NAN } else { 0.0 });
        assert!(matches!(
            invert_or_pseudo(&with_nan, 1e-12),
            Err(Error::NonFinite { .. })
        ));
        assert!(invert_or_pseudo(&SymMatrix::identity(2), f64::NAN).is_err());
    }

    #[test]
    fn sample_cov_examples() {
        assert_eq!(sample_cov(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(sample_cov(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        // Direct evaluation of the definition gives -0.5.
        assert!(
            (sample_cov(&[1.0, 2.0, 3.0], &[1.0, 1.0, 0.0]).unwrap() + 0.5).abs() < 1e-15
        );
        assert!(sample_cov(&[1.0], &[1.0]).is_err());
        assert!(sample_cov(&[1.0, 2.0], &[1.0]).is_err());
    }
}
