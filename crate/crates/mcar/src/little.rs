//! Little's d-squared MCAR test: maximum-likelihood estimation of a
//! multivariate normal under arbitrary missingness patterns (EM), then a
//! pattern-wise quadratic form comparing observed means against the
//! pooled estimate.

use std::collections::BTreeMap;

use crate::data::IncompleteMatrix;
use crate::error::{Error, Result};
use crate::numerics::{
    chisq_sf, default_pinv_tolerance, invert_or_pseudo, sym_eigen, SymMatrix,
};
use crate::ustat::{Method, TestReport};

/// Default relative log-likelihood change at which EM stops.
pub const EM_TOL_DEFAULT: f64 = 1e-6;
/// Default iteration cap for EM.
pub const EM_MAX_ITER_DEFAULT: usize = 500;

/// Rows sharing one missingness pattern.
#[derive(Debug, Clone)]
pub struct PatternGroup {
    /// Per-column observation flags (true = observed).
    pub pattern: Vec<bool>,
    /// Row indices carrying this pattern.
    pub rows: Vec<usize>,
    /// Indices of the observed columns.
    pub observed: Vec<usize>,
    /// Mean of each observed column over the group's rows.
    pub observed_mean: Vec<f64>,
}

impl PatternGroup {
    pub fn count(&self) -> usize {
        self.rows.len()
    }

    fn key(&self) -> String {
        self.pattern
            .iter()
            .map(|&o| if o { '1' } else { '0' })
            .collect()
    }
}

/// Group rows by missingness pattern. Rows without any observed cell are
/// skipped; the remaining groups partition the retained rows.
pub fn pattern_groups(m: &IncompleteMatrix) -> Vec<PatternGroup> {
    let d = m.n_cols();
    let mut map: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
    for i in 0..m.n_rows() {
        let pattern: Vec<bool> = (0..d).map(|j| m.is_observed(i, j)).collect();
        if pattern.iter().any(|&o| o) {
            map.entry(pattern).or_default().push(i);
        }
    }
    map.into_iter()
        .map(|(pattern, rows)| {
            let observed: Vec<usize> = (0..d).filter(|&j| pattern[j]).collect();
            let observed_mean = observed
                .iter()
                .map(|&j| rows.iter().map(|&i| m.col(j)[i]).sum::<f64>() / rows.len() as f64)
                .collect();
            PatternGroup {
                pattern,
                rows,
                observed,
                observed_mean,
            }
        })
        .collect()
}

/// Maximum-likelihood multivariate normal fit to incomplete data.
#[derive(Debug, Clone)]
pub struct MvnEstimate {
    pub mean: Vec<f64>,
    /// ML covariance (denominator n).
    pub cov: SymMatrix,
    /// Observed-data log-likelihood at the final estimates.
    pub loglik: f64,
    /// Number of EM update steps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Observed-data log-likelihood trace, starting at the initial
    /// estimates; never decreasing.
    pub loglik_history: Vec<f64>,
}

// Per-pattern quantities derived from the current covariance: the inverse
// and log-determinant of the observed block, the regression of missing on
// observed, and the conditional covariance of the missing block.
struct PatternDecomp {
    inv: Vec<f64>,      // k x k
    logdet: f64,
    regression: Vec<f64>, // m x k, maps (x_obs - mu_obs) to imputed offsets
    cond_cov: Vec<f64>,   // m x m
}

fn decompose_pattern(
    cov: &SymMatrix,
    observed: &[usize],
    missing: &[usize],
    key: &str,
) -> Result<PatternDecomp> {
    let k = observed.len();
    let sub = cov.submatrix(observed);
    let (values, vectors) = sym_eigen(&sub);
    let sigma_max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let thresh = default_pinv_tolerance(k) * sigma_max;
    if sigma_max == 0.0 || values.iter().any(|&l| l <= thresh) {
        return Err(Error::SingularPattern {
            pattern: key.to_string(),
        });
    }
    let mut inv = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let s: f64 = (0..k)
                .map(|c| vectors[i * k + c] / values[c] * vectors[j * k + c])
                .sum();
            inv[i * k + j] = s;
            inv[j * k + i] = s;
        }
    }
    let logdet: f64 = values.iter().map(|l| l.ln()).sum();

    let nm = missing.len();
    let mut regression = vec![0.0; nm * k];
    for (mi, &mcol) in missing.iter().enumerate() {
        for oj in 0..k {
            regression[mi * k + oj] = (0..k)
                .map(|l| cov.get(mcol, observed[l]) * inv[l * k + oj])
                .sum();
        }
    }
    let mut cond_cov = vec![0.0; nm * nm];
    for (mi, &mci) in missing.iter().enumerate() {
        for (mj, &mcj) in missing.iter().enumerate() {
            let correction: f64 = (0..k)
                .map(|l| regression[mi * k + l] * cov.get(observed[l], mcj))
                .sum();
            cond_cov[mi * nm + mj] = cov.get(mci, mcj) - correction;
        }
    }
    Ok(PatternDecomp {
        inv,
        logdet,
        regression,
        cond_cov,
    })
}

// One E-step: expected sufficient statistics and the observed-data
// log-likelihood at the current parameters.
fn e_step(
    m: &IncompleteMatrix,
    patterns: &[PatternGroup],
    mean: &[f64],
    cov: &SymMatrix,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let d = m.n_cols();
    let mut s1 = vec![0.0; d];
    let mut s2 = vec![0.0; d * d];
    let mut loglik = 0.0;
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();

    for group in patterns {
        let observed = &group.observed;
        let missing: Vec<usize> = (0..d).filter(|j| !group.pattern[*j]).collect();
        let k = observed.len();
        let decomp = decompose_pattern(cov, observed, &missing, &group.key())?;

        let mut xhat = vec![0.0; d];
        for &row in &group.rows {
            let diff: Vec<f64> = observed
                .iter()
                .map(|&j| m.col(j)[row] - mean[j])
                .collect();
            let inv_diff: Vec<f64> = (0..k)
                .map(|i| (0..k).map(|j| decomp.inv[i * k + j] * diff[j]).sum())
                .collect();
            let quad: f64 = diff.iter().zip(&inv_diff).map(|(a, b)| a * b).sum();
            loglik -= 0.5 * (k as f64 * ln_2pi + decomp.logdet + quad);

            for (oi, &j) in observed.iter().enumerate() {
                xhat[j] = mean[j] + diff[oi];
            }
            for (mi, &j) in missing.iter().enumerate() {
                let offset: f64 = (0..k)
                    .map(|l| decomp.regression[mi * k + l] * diff[l])
                    .sum();
                xhat[j] = mean[j] + offset;
            }
            for i in 0..d {
                s1[i] += xhat[i];
                for j in 0..d {
                    s2[i * d + j] += xhat[i] * xhat[j];
                }
            }
            let nm = missing.len();
            for (mi, &ci) in missing.iter().enumerate() {
                for (mj, &cj) in missing.iter().enumerate() {
                    s2[ci * d + cj] += decomp.cond_cov[mi * nm + mj];
                }
            }
        }
    }
    Ok((s1, s2, loglik))
}

fn ml_moments_of(cols: &[Vec<f64>]) -> (Vec<f64>, SymMatrix) {
    let d = cols.len();
    let n = cols[0].len() as f64;
    let mean: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / n).collect();
    let cov = SymMatrix::from_fn(d, |i, j| {
        cols[i]
            .iter()
            .zip(&cols[j])
            .map(|(a, b)| (a - mean[i]) * (b - mean[j]))
            .sum::<f64>()
            / n
    });
    (mean, cov)
}

fn is_nonsingular(cov: &SymMatrix) -> bool {
    let (values, _) = sym_eigen(cov);
    let sigma_max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    sigma_max > 0.0
        && values
            .iter()
            .all(|&l| l > default_pinv_tolerance(cov.dim()) * sigma_max)
}

fn initial_estimates(m: &IncompleteMatrix) -> (Vec<f64>, SymMatrix) {
    let d = m.n_cols();
    let complete_rows: Vec<usize> = (0..m.n_rows())
        .filter(|&i| (0..d).all(|j| m.is_observed(i, j)))
        .collect();
    if complete_rows.len() >= 2 {
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|j| complete_rows.iter().map(|&i| m.col(j)[i]).collect())
            .collect();
        let (mean, cov) = ml_moments_of(&cols);
        // A usable starting point needs an invertible covariance; with few
        // complete rows the complete-case estimate is often rank deficient.
        if is_nonsingular(&cov) {
            return (mean, cov);
        }
    }
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            (0..m.n_rows())
                .map(|i| m.value(i, j).unwrap_or(0.0))
                .collect()
        })
        .collect();
    ml_moments_of(&cols)
}

/// Fit a multivariate normal to incomplete data by EM.
///
/// Missing cells are integrated out exactly through the conditional-normal
/// formulas; the M-step uses the ML covariance (denominator n). Iteration
/// stops when the relative change of the observed-data log-likelihood
/// drops below `tol` or after `max_iter` update steps. Rows without any
/// observed cell are dropped first.
pub fn em_mvn(m: &IncompleteMatrix, tol: f64, max_iter: usize) -> Result<MvnEstimate> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "EM tolerance must be positive, got {tol}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
    }
    let dropped: Vec<usize> = (0..m.n_rows())
        .filter(|&i| (0..m.n_cols()).all(|j| !m.is_observed(i, j)))
        .collect();
    let retained_storage;
    let retained = if dropped.is_empty() {
        m
    } else {
        log::warn!("EM: dropping {} fully missing rows", dropped.len());
        retained_storage = m.drop_rows(&dropped);
        &retained_storage
    };
    let n = retained.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let d = retained.n_cols();

    // Work on data centered by the observed column means: the estimates
    // are shift-equivariant and the centered M-step update loses far less
    // precision to cancellation.
    let offsets: Vec<f64> = (0..d)
        .map(|j| {
            let observed: Vec<f64> = (0..n).filter_map(|i| retained.value(i, j)).collect();
            if observed.is_empty() {
                0.0
            } else {
                observed.iter().sum::<f64>() / observed.len() as f64
            }
        })
        .collect();
    let centered_cols: Vec<Vec<f64>> = (0..d)
        .map(|j| retained.col(j).iter().map(|v| v - offsets[j]).collect())
        .collect();
    let centered_mask: Vec<Vec<bool>> = (0..d).map(|j| retained.mask_col(j).to_vec()).collect();
    let centered =
        IncompleteMatrix::new(retained.names().to_vec(), centered_cols, centered_mask)?;

    let patterns = pattern_groups(&centered);
    let (mut mean, mut cov) = initial_estimates(&centered);
    let mut history: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut steps = 0;

    loop {
        let (s1, s2, loglik) = e_step(&centered, &patterns, &mean, &cov)?;
        if let Some(&prev) = history.last() {
            if (loglik - prev).abs() <= tol * (1.0 + prev.abs()) {
                history.push(loglik);
                converged = true;
                break;
            }
        }
        history.push(loglik);
        if steps == max_iter {
            break;
        }
        mean = s1.iter().map(|v| v / n as f64).collect();
        cov = SymMatrix::from_fn(d, |i, j| s2[i * d + j] / n as f64 - mean[i] * mean[j]);
        steps += 1;
    }

    let mean = mean.iter().zip(&offsets).map(|(m, o)| m + o).collect();
    Ok(MvnEstimate {
        mean,
        cov,
        loglik: *history.last().expect("at least one E-step"),
        iterations: steps,
        converged,
        loglik_history: history,
    })
}

/// Little's d-squared test.
///
/// Fits the multivariate normal by EM, then sums over missingness
/// patterns J the quadratic forms
/// `n_J (xbar_obs,J - mu_obs,J)^T Sigma_obs,J^{-1} (xbar_obs,J - mu_obs,J)`
/// with degrees of freedom `sum_J d_J - d`. Singular pattern blocks fall
/// back to the pseudoinverse and set the rank-deficiency flag.
pub fn little_d2(m: &IncompleteMatrix) -> Result<TestReport> {
    let dropped: Vec<usize> = (0..m.n_rows())
        .filter(|&i| (0..m.n_cols()).all(|j| !m.is_observed(i, j)))
        .collect();
    let retained_storage;
    let retained = if dropped.is_empty() {
        m
    } else {
        log::warn!(
            "little_d2: dropping {} fully missing rows before pattern grouping",
            dropped.len()
        );
        retained_storage = m.drop_rows(&dropped);
        &retained_storage
    };
    if retained.n_rows() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: retained.n_rows(),
        });
    }

    let d = retained.n_cols();
    let patterns = pattern_groups(retained);
    let df = patterns
        .iter()
        .map(|g| g.observed.len() as i64)
        .sum::<i64>()
        - d as i64;
    if patterns.len() < 2 || df < 1 {
        return Err(Error::NoDegreesOfFreedom { df });
    }

    let em = em_mvn(retained, EM_TOL_DEFAULT, EM_MAX_ITER_DEFAULT)?;

    let mut d2 = 0.0;
    let mut rank_deficient = false;
    for group in &patterns {
        let diff: Vec<f64> = group
            .observed
            .iter()
            .zip(&group.observed_mean)
            .map(|(&j, &xbar)| xbar - em.mean[j])
            .collect();
        let sub = em.cov.submatrix(&group.observed);
        let inv = invert_or_pseudo(&sub, default_pinv_tolerance(sub.dim()))?;
        rank_deficient |= inv.used_pseudoinverse;
        d2 += group.count() as f64 * inv.matrix.quadratic_form(&diff);
    }
    let d2 = d2.max(0.0);
    let df = df as usize;
    let p_value = chisq_sf(d2, df)?;
    Ok(TestReport {
        method: Method::LittleD2,
        statistic: d2,
        df,
        p_value,
        rank_deficient,
        pair_stats: Vec::new(),
    })
}
