//! Symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! Adequate for the dense matrices this crate produces (dimension well
//! below a hundred). Sweeps continue until the off-diagonal Frobenius
//! mass is negligible relative to the total, so eigenvalues are accurate
//! to machine precision and the inverses built on top of them satisfy
//! tight multiply-back bounds.

use super::SymMatrix;

const MAX_SWEEPS: usize = 64;
// Relative off-diagonal mass at which iteration stops. Quadratic
// convergence makes the final sweeps cheap.
const OFF_MASS_TOL: f64 = 1e-30;

/// Eigenvalues and eigenvectors of a symmetric matrix.
///
/// Returns `(values, vectors)` where `vectors` is row-major and column k
/// holds the eigenvector for `values[k]`, i.e. `a = V diag(values) V^T`.
pub(crate) fn sym_eigen(m: &SymMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.dim();
    let mut a = m.entries().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n == 1 {
        return (vec![a[0]], v);
    }

    let mut prev_off = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        let mut total = 0.0;
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = a[i * n + j] * a[i * n + j];
                total += x;
                if i != j {
                    off += x;
                }
            }
        }
        if off <= total * OFF_MASS_TOL || off == 0.0 || off >= prev_off {
            break;
        }
        prev_off = off;

        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                let app = a[p * n + p];
                let aqq = a[q * n + q];
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let new_rp = arp - s * (arq + tau * arp);
                    let new_rq = arq + s * (arp - tau * arq);
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = vrp - s * (vrq + tau * vrp);
                    v[r * n + q] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }

    let values = (0..n).map(|i| a[i * n + i]).collect();
    (values, v)
}
