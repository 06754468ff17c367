//! Indicator-covariance MCAR tests.
//!
//! The pairwise statistics estimate (minus) the covariance between a data
//! column and a response indicator. They are stacked into a vector whose
//! estimated limiting covariance defines a chi-square quadratic form:
//! `test_an` uses only fully observed columns, `test_an_prime` extends the
//! vector with zero-filled incomplete columns and detects alternatives
//! where missingness depends on the incomplete columns themselves.

use serde::Serialize;

use crate::data::{indicators, zero_fill, ColumnRoles, IncompleteMatrix, IndicatorMatrix};
use crate::error::{Error, Result};
use crate::numerics::{
    chisq_sf, default_pinv_tolerance, invert_or_pseudo, sample_cov, InverseResult, SymMatrix,
};

/// Which group a pairwise statistic belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PairKind {
    /// Fully observed data column against a response indicator.
    X,
    /// Zero-filled incomplete column against another column's indicator.
    Y,
}

/// One pairwise statistic.
///
/// `u` indexes the data column within its role group (X columns for
/// [`PairKind::X`], Y columns for [`PairKind::Y`]) and `v` indexes the
/// response indicator; both are 0-based. Y pairs always have `u != v`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairStat {
    pub kind: PairKind,
    pub u: usize,
    pub v: usize,
    pub value: f64,
}

/// The ordered vector of pairwise statistics: all X pairs (data column
/// major, indicator minor), then all Y pairs in the same order skipping
/// the diagonal. Its length is p*q + q*(q-1).
#[derive(Debug, Clone)]
pub struct StatVector {
    pairs: Vec<PairStat>,
}

impl StatVector {
    pub fn pairs(&self) -> &[PairStat] {
        &self.pairs
    }

    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Estimated limiting covariance of the scaled statistic vector, together
/// with its (pseudo)inverse.
#[derive(Debug, Clone)]
pub struct LambdaMatrix {
    pub matrix: SymMatrix,
    pub inverse: InverseResult,
}

/// Test identifier used in reports and benchmark output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    #[serde(rename = "A_n")]
    An,
    #[serde(rename = "A_n_prime")]
    AnPrime,
    #[serde(rename = "little_d2")]
    LittleD2,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::An => "A_n",
            Method::AnPrime => "A_n_prime",
            Method::LittleD2 => "little_d2",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "an" | "a_n" | "A_n" => Ok(Method::An),
            "an-prime" | "an_prime" | "A_n_prime" => Ok(Method::AnPrime),
            "little" | "little-d2" | "little_d2" => Ok(Method::LittleD2),
            other => Err(Error::InvalidArgument(format!(
                "unknown method {other:?} (expected an, an-prime or little)"
            ))),
        }
    }
}

/// Outcome of a single MCAR test.
#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub method: Method,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// True when the covariance estimate was singular and the quadratic
    /// form used a pseudoinverse.
    pub rank_deficient: bool,
    /// Per-pair statistics (empty for Little's test).
    pub pair_stats: Vec<PairStat>,
}

/// Optional knobs for the quadratic-form tests.
#[derive(Debug, Clone, Default)]
pub struct TestOptions {
    /// Relative singular-value cutoff for the (pseudo)inverse; defaults to
    /// `dim * machine epsilon`.
    pub pinv_tolerance: Option<f64>,
    /// Report the rank of the covariance estimate as the degrees of
    /// freedom instead of the nominal pair count.
    pub df_from_rank: bool,
}

/// Monotone per-column transform applied before testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    /// Natural log; every observed value must be strictly positive.
    Log,
    /// Average ranks of the observed values within each column.
    Rank,
}

impl Transform {
    pub fn apply(&self, m: &IncompleteMatrix) -> Result<IncompleteMatrix> {
        match self {
            Transform::Identity => Ok(m.clone()),
            Transform::Log => {
                let mut cols = Vec::with_capacity(m.n_cols());
                for j in 0..m.n_cols() {
                    let mut col = m.col(j).to_vec();
                    for (i, v) in col.iter_mut().enumerate() {
                        if m.is_observed(i, j) {
                            if *v <= 0.0 {
                                return Err(Error::InvalidArgument(format!(
                                    "log transform needs positive values; column {} row {} is {v}",
                                    m.names()[j],
                                    i + 1
                                )));
                            }
                            *v = v.ln();
                        }
                    }
                    cols.push(col);
                }
                IncompleteMatrix::new(
                    m.names().to_vec(),
                    cols,
                    (0..m.n_cols()).map(|j| m.mask_col(j).to_vec()).collect(),
                )
            }
            Transform::Rank => {
                let mut cols = Vec::with_capacity(m.n_cols());
                for j in 0..m.n_cols() {
                    cols.push(rank_column(m.col(j), m.mask_col(j)));
                }
                IncompleteMatrix::new(
                    m.names().to_vec(),
                    cols,
                    (0..m.n_cols()).map(|j| m.mask_col(j).to_vec()).collect(),
                )
            }
        }
    }
}

// Average ranks (1-based, midranks on ties) of the observed entries;
// missing entries stay NaN.
fn rank_column(values: &[f64], mask: &[bool]) -> Vec<f64> {
    let mut observed: Vec<usize> = (0..values.len()).filter(|&i| mask[i]).collect();
    observed.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![f64::NAN; values.len()];
    let mut k = 0;
    while k < observed.len() {
        let mut end = k + 1;
        while end < observed.len() && values[observed[end]] == values[observed[k]] {
            end += 1;
        }
        // Ranks k+1 ..= end averaged over the tie run.
        let avg = (k + 1 + end) as f64 / 2.0;
        for &i in &observed[k..end] {
            out[i] = avg;
        }
        k = end;
    }
    out
}

fn check_lengths(n: usize, others: &[usize]) -> Result<()> {
    if others.iter().any(|&l| l != n) {
        return Err(Error::InvalidArgument(
            "pairwise statistic inputs must have equal lengths".into(),
        ));
    }
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    Ok(())
}

/// Pairwise statistic for a fully observed column `x` against a response
/// indicator `r`.
///
/// Equals the double-sum form
/// `sum_{i != j} x_i r_j / (n (n-1)) - sum_i x_i r_i / n`, computed in the
/// algebraically identical closed form
/// `((sum x)(sum r) - n sum xr) / (n (n-1))`, which is also minus the
/// unbiased sample covariance of x and r.
pub fn t_x(x: &[f64], r: &[f64]) -> Result<f64> {
    check_lengths(x.len(), &[r.len()])?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "pairwise statistic data column".into(),
        });
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "pairwise statistic indicator column".into(),
        });
    }
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sr: f64 = r.iter().sum();
    let sxr: f64 = x.iter().zip(r).map(|(a, b)| a * b).sum();
    Ok((sx * sr - n * sxr) / (n * (n - 1.0)))
}

/// Pairwise statistic for an incomplete column: [`t_x`] applied to the
/// zero-filled column y*r_u against the indicator `r_v`.
pub fn t_y_hat(y: &[f64], r_u: &[f64], r_v: &[f64]) -> Result<f64> {
    check_lengths(y.len(), &[r_u.len(), r_v.len()])?;
    let y_tilde: Vec<f64> = y
        .iter()
        .zip(r_u)
        .map(|(&v, &r)| if r > 0.5 { v } else { 0.0 })
        .collect();
    t_x(&y_tilde, r_v)
}

/// Complete-case variant: the pairwise statistic computed on the subsample
/// of rows where the incomplete column is observed.
///
/// Diagnostic only; the combined tests use [`t_y_hat`] instead.
pub fn t_y_complete_case(y: &[f64], r_u: &[f64], r_v: &[f64]) -> Result<f64> {
    check_lengths(y.len(), &[r_u.len(), r_v.len()])?;
    let mut ys = Vec::new();
    let mut rs = Vec::new();
    for i in 0..y.len() {
        if r_u[i] > 0.5 {
            ys.push(y[i]);
            rs.push(r_v[i]);
        }
    }
    if ys.len() < 2 {
        return Err(Error::TooFewObserved {
            column: "complete-case statistic".into(),
            needed: 2,
            got: ys.len(),
        });
    }
    t_x(&ys, &rs)
}

// Internal description of the pair layout shared by both tests. Sources
// hold the data columns in pair order (X columns, then zero-filled Y
// columns); each pair references a source and an indicator.
struct PairBasis {
    n: usize,
    sources: Vec<Vec<f64>>,
    indicators: IndicatorMatrix,
    pairs: Vec<(PairKind, usize, usize, usize)>, // (kind, source, u, v)
}

fn build_basis(
    m: &IncompleteMatrix,
    roles: &ColumnRoles,
    include_y_pairs: bool,
) -> Result<PairBasis> {
    roles.check_against(m)?;
    let n = m.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let p = roles.p();
    let q = roles.q();
    if q == 0 {
        return Err(Error::NothingToTest(
            "no incomplete columns (q = 0)".into(),
        ));
    }

    let ind = indicators(m, roles);
    let filled = zero_fill(m, roles);
    let mut sources: Vec<Vec<f64>> = Vec::with_capacity(p + q);
    for &j in roles.x_indices() {
        sources.push(filled[j].clone());
    }
    for &j in roles.y_indices() {
        sources.push(filled[j].clone());
    }

    let mut pairs = Vec::new();
    for u in 0..p {
        for v in 0..q {
            pairs.push((PairKind::X, u, u, v));
        }
    }
    if include_y_pairs {
        for u in 0..q {
            for v in 0..q {
                if v != u {
                    pairs.push((PairKind::Y, p + u, u, v));
                }
            }
        }
    }
    Ok(PairBasis {
        n,
        sources,
        indicators: ind,
        pairs,
    })
}

fn basis_stat_vector(basis: &PairBasis) -> Result<StatVector> {
    let pairs = basis
        .pairs
        .iter()
        .map(|&(kind, src, u, v)| {
            let value = t_x(&basis.sources[src], basis.indicators.col(v))?;
            Ok(PairStat { kind, u, v, value })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StatVector { pairs })
}

fn basis_lambda(basis: &PairBasis) -> Result<SymMatrix> {
    let k = basis.sources.len();
    let q = basis.indicators.q();

    let mut cov_src = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let c = sample_cov(&basis.sources[a], &basis.sources[b])?;
            cov_src[a * k + b] = c;
            cov_src[b * k + a] = c;
        }
    }
    let mut cov_ind = vec![0.0; q * q];
    for v in 0..q {
        for s in v..q {
            let c = sample_cov(basis.indicators.col(v), basis.indicators.col(s))?;
            cov_ind[v * q + s] = c;
            cov_ind[s * q + v] = c;
        }
    }

    let dim = basis.pairs.len();
    Ok(SymMatrix::from_fn(dim, |i, j| {
        let (_, src_i, _, v_i) = basis.pairs[i];
        let (_, src_j, _, v_j) = basis.pairs[j];
        cov_src[src_i * k + src_j] * cov_ind[v_i * q + v_j]
    }))
}

/// The ordered statistic vector for the combined test.
pub fn stat_vector(m: &IncompleteMatrix, roles: &ColumnRoles) -> Result<StatVector> {
    let basis = build_basis(m, roles, true)?;
    basis_stat_vector(&basis)
}

/// Estimated limiting covariance of the scaled statistic vector and its
/// (pseudo)inverse at the default tolerance.
///
/// The entry for pairs (a, v) and (b, s) is the product of the sample
/// covariance of the two data columns (zero-filled for Y pairs) and the
/// sample covariance of the two indicator columns, all over n rows with
/// the n-1 denominator.
pub fn lambda_hat(m: &IncompleteMatrix, roles: &ColumnRoles) -> Result<LambdaMatrix> {
    let basis = build_basis(m, roles, true)?;
    let matrix = basis_lambda(&basis)?;
    let inverse = invert_or_pseudo(&matrix, default_pinv_tolerance(matrix.dim()))?;
    Ok(LambdaMatrix { matrix, inverse })
}

fn quadratic_form_test(method: Method, basis: &PairBasis, opts: &TestOptions) -> Result<TestReport> {
    if basis.pairs.is_empty() {
        return Err(Error::NothingToTest("no testable pairs".into()));
    }
    let stats = basis_stat_vector(basis)?;
    let lambda = basis_lambda(basis)?;
    let tol = opts
        .pinv_tolerance
        .unwrap_or_else(|| default_pinv_tolerance(lambda.dim()));
    let inverse = invert_or_pseudo(&lambda, tol)?;
    if inverse.rank == 0 {
        return Err(Error::DegenerateSample);
    }
    let values = stats.values();
    let quad = inverse.matrix.quadratic_form(&values);
    // Roundoff can push an essentially-zero form slightly negative.
    let statistic = (basis.n as f64 * quad).max(0.0);
    let df = if opts.df_from_rank {
        inverse.rank
    } else {
        stats.len()
    };
    let p_value = chisq_sf(statistic, df)?;
    Ok(TestReport {
        method,
        statistic,
        df,
        p_value,
        rank_deficient: inverse.used_pseudoinverse,
        pair_stats: stats.pairs,
    })
}

/// The combined indicator-covariance test using both fully observed and
/// incomplete columns. Degrees of freedom: p*q + q*(q-1).
///
/// ```
/// use mcar::data::{classify_columns, IncompleteMatrix};
/// use mcar::ustat::test_an_prime;
///
/// let m = IncompleteMatrix::new(
///     vec!["x".into(), "y".into()],
///     vec![
///         vec![0.1, 1.4, -0.8, 2.0, 0.3, -1.1],
///         vec![1.0, 0.4, f64::NAN, 0.9, f64::NAN, 1.7],
///     ],
///     vec![vec![true; 6], vec![true, true, false, true, false, true]],
/// )?;
/// let report = test_an_prime(&m, &classify_columns(&m))?;
/// assert_eq!(report.df, 1);
/// assert!(report.p_value > 0.0 && report.p_value <= 1.0);
/// # Ok::<(), mcar::Error>(())
/// ```
pub fn test_an_prime(m: &IncompleteMatrix, roles: &ColumnRoles) -> Result<TestReport> {
    test_an_prime_with(m, roles, &TestOptions::default())
}

/// [`test_an_prime`] with explicit options.
pub fn test_an_prime_with(
    m: &IncompleteMatrix,
    roles: &ColumnRoles,
    opts: &TestOptions,
) -> Result<TestReport> {
    if let Some(row) = m.fully_missing_row() {
        return Err(Error::FullyMissingRow { row: row + 1 });
    }
    let basis = build_basis(m, roles, true)?;
    quadratic_form_test(Method::AnPrime, &basis, opts)
}

/// The predecessor test restricted to fully observed columns. Degrees of
/// freedom: p*q. Requires at least one fully observed column.
pub fn test_an(m: &IncompleteMatrix, roles: &ColumnRoles) -> Result<TestReport> {
    test_an_with(m, roles, &TestOptions::default())
}

/// [`test_an`] with explicit options.
pub fn test_an_with(
    m: &IncompleteMatrix,
    roles: &ColumnRoles,
    opts: &TestOptions,
) -> Result<TestReport> {
    if roles.q() > 0 && roles.p() == 0 {
        return Err(Error::NoCompleteColumns);
    }
    let basis = build_basis(m, roles, false)?;
    quadratic_form_test(Method::An, &basis, opts)
}
