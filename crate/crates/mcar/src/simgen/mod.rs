//! Sample generation and missingness mechanisms (amputation).
//!
//! Complete samples come from a handful of multivariate distributions;
//! holes are then punched by exact-count mechanisms: per target column,
//! exactly round(rate * n) cells are deleted, with row selection weighted
//! according to the mechanism. A scenario chains mechanisms in order, and
//! control columns always read the original complete values, so a column
//! may control missingness elsewhere and lose cells itself afterwards.

pub mod builtin;
pub mod stream;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::data::IncompleteMatrix;
use crate::error::{Error, Result};
use crate::numerics::chisq_quantile;

/// Supported sampling distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    /// Independent standard normal entries.
    StdNormal,
    /// Clayton copula (parameter 1) with Exp(1) margins.
    ClaytonExp1,
    /// Clayton copula (parameter 1) with chi-square(4) margins.
    ClaytonChisq4,
    /// Multivariate Student t with 2 degrees of freedom.
    StudentT2,
}

/// A complete-data distribution over `dim` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    pub kind: DistributionKind,
    pub dim: usize,
    /// Off-diagonal entry of the t|2 scale matrix (unit diagonal). Must be
    /// zero for the other distributions.
    pub scale_offdiag: f64,
}

impl DistributionSpec {
    pub fn new(kind: DistributionKind, dim: usize) -> Self {
        DistributionSpec {
            kind,
            dim,
            scale_offdiag: 0.0,
        }
    }

    pub fn student_t2(dim: usize, scale_offdiag: f64) -> Self {
        DistributionSpec {
            kind: DistributionKind::StudentT2,
            dim,
            scale_offdiag,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("distribution dim must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.scale_offdiag) {
            return Err(Error::InvalidArgument(format!(
                "scale_offdiag must be in [0, 1), got {}",
                self.scale_offdiag
            )));
        }
        if self.scale_offdiag != 0.0 && self.kind != DistributionKind::StudentT2 {
            return Err(Error::InvalidArgument(
                "scale_offdiag only applies to the Student t distribution".into(),
            ));
        }
        Ok(())
    }
}

/// Missingness mechanism kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MechanismKind {
    /// Uniform row selection.
    Mcar,
    /// Rows above the control column's median are `ratio_x` times more
    /// likely to lose the target cell.
    Mar1ToX,
    /// Deletion weight proportional to the rank of the control value.
    MarRank,
    /// Deterministically delete the largest values of the target column.
    MnarUpperCensor,
}

impl MechanismKind {
    fn needs_control(self) -> bool {
        matches!(self, MechanismKind::Mar1ToX | MechanismKind::MarRank)
    }
}

/// One amputation step: delete round(rate * n) cells from each target
/// column, selecting rows per the mechanism kind.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    /// Columns to punch holes into (0-based).
    pub targets: Vec<usize>,
    /// For the MAR kinds, `controls[i]` drives missingness in `targets[i]`.
    pub controls: Vec<usize>,
    /// Fraction of cells to delete per target column, in (0, 1).
    pub rate: f64,
    /// Weight ratio for [`MechanismKind::Mar1ToX`].
    pub ratio_x: f64,
}

impl MechanismSpec {
    pub fn mcar(targets: Vec<usize>, rate: f64) -> Self {
        MechanismSpec {
            kind: MechanismKind::Mcar,
            targets,
            controls: Vec::new(),
            rate,
            ratio_x: 9.0,
        }
    }

    pub fn mar_1_to_x(targets: Vec<usize>, controls: Vec<usize>, rate: f64, ratio_x: f64) -> Self {
        MechanismSpec {
            kind: MechanismKind::Mar1ToX,
            targets,
            controls,
            rate,
            ratio_x,
        }
    }

    pub fn mar_rank(targets: Vec<usize>, controls: Vec<usize>, rate: f64) -> Self {
        MechanismSpec {
            kind: MechanismKind::MarRank,
            targets,
            controls,
            rate,
            ratio_x: 9.0,
        }
    }

    pub fn mnar_upper_censor(targets: Vec<usize>, rate: f64) -> Self {
        MechanismSpec {
            kind: MechanismKind::MnarUpperCensor,
            targets,
            controls: Vec::new(),
            rate,
            ratio_x: 9.0,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::InvalidArgument("mechanism has no target columns".into()));
        }
        if self.targets.iter().any(|&t| t >= dim) {
            return Err(Error::InvalidArgument(format!(
                "mechanism target out of range for {dim} columns: {:?}",
                self.targets
            )));
        }
        if !(self.rate > 0.0 && self.rate < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "missingness rate must be in (0, 1), got {}",
                self.rate
            )));
        }
        if self.kind.needs_control() {
            if self.controls.len() != self.targets.len() {
                return Err(Error::InvalidArgument(
                    "MAR mechanisms need one control column per target".into(),
                ));
            }
            if self.controls.iter().any(|&c| c >= dim) {
                return Err(Error::InvalidArgument(format!(
                    "mechanism control out of range for {dim} columns: {:?}",
                    self.controls
                )));
            }
            if self.controls.iter().any(|c| self.targets.contains(c)) {
                return Err(Error::InvalidArgument(
                    "control columns must be disjoint from target columns".into(),
                ));
            }
        }
        if self.kind == MechanismKind::Mar1ToX && !(self.ratio_x > 0.0 && self.ratio_x.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "MAR 1-to-x ratio must be positive, got {}",
                self.ratio_x
            )));
        }
        Ok(())
    }
}

/// A full simulation scenario: distribution, sample size, an ordered
/// mechanism chain, and the seed that makes it reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub distribution: DistributionSpec,
    pub n: usize,
    pub mechanisms: Vec<MechanismSpec>,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.distribution.validate()?;
        if self.n == 0 {
            return Err(Error::InvalidArgument("sample size must be >= 1".into()));
        }
        for mech in &self.mechanisms {
            mech.validate(self.distribution.dim)?;
        }
        Ok(())
    }
}

// Lower-triangular Cholesky factor of the equicorrelation scale matrix
// with unit diagonal and `rho` off-diagonal.
fn equicorrelation_cholesky(dim: usize, rho: f64) -> Vec<f64> {
    let mut s = vec![rho; dim * dim];
    for i in 0..dim {
        s[i * dim + i] = 1.0;
    }
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = s[i * dim + j];
            for k in 0..j {
                sum -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                l[i * dim + i] = sum.sqrt();
            } else {
                l[i * dim + j] = sum / l[j * dim + j];
            }
        }
    }
    l
}

fn clamp_unit(u: f64) -> f64 {
    u.clamp(1e-300, 1.0 - 1e-16)
}

/// Draw a complete sample, returned column-major (`dim` columns of `n`
/// values each).
pub fn sample(dist: &DistributionSpec, n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let d = dist.dim;
    let mut cols = vec![Vec::with_capacity(n); d];
    match dist.kind {
        DistributionKind::StdNormal => {
            for _ in 0..n {
                for col in cols.iter_mut() {
                    col.push(StandardNormal.sample(rng));
                }
            }
        }
        DistributionKind::ClaytonExp1 | DistributionKind::ClaytonChisq4 => {
            // Clayton(theta = 1) by the frailty construction: V ~ Exp(1),
            // U_k = (1 + E_k / V)^(-1) with E_k iid Exp(1), then margins
            // by inverse CDF.
            for _ in 0..n {
                let v: f64 = Exp1.sample(rng);
                let v = v.max(1e-300);
                for col in cols.iter_mut() {
                    let e: f64 = Exp1.sample(rng);
                    let u = clamp_unit(v / (v + e));
                    let x = match dist.kind {
                        DistributionKind::ClaytonExp1 => -(-u).ln_1p(), // -ln(1 - u)
                        DistributionKind::ClaytonChisq4 => {
                            chisq_quantile(u, 4).expect("u in (0, 1)")
                        }
                        _ => unreachable!(),
                    };
                    col.push(x);
                }
            }
        }
        DistributionKind::StudentT2 => {
            let chol = equicorrelation_cholesky(d, dist.scale_offdiag);
            let mut g = vec![0.0; d];
            for _ in 0..n {
                for gk in g.iter_mut() {
                    *gk = StandardNormal.sample(rng);
                }
                // W ~ chi-square(2) shared across the row.
                let e: f64 = Exp1.sample(rng);
                let w = 2.0 * e;
                let scale = (w.max(1e-300) / 2.0).sqrt();
                for (j, col) in cols.iter_mut().enumerate() {
                    let z: f64 = (0..=j).map(|k| chol[j * d + k] * g[k]).sum();
                    col.push(z / scale);
                }
            }
        }
    }
    cols
}

// Average ranks (1-based, midranks on ties) of a complete column.
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && values[order[end]] == values[order[k]] {
            end += 1;
        }
        let avg = (k + 1 + end) as f64 / 2.0;
        for &i in &order[k..end] {
            out[i] = avg;
        }
        k = end;
    }
    out
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

// Draw k distinct indices with probability proportional to the weights,
// removing each selected index from the pool (sequential weighted
// sampling without replacement).
fn weighted_without_replacement(weights: &[f64], k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut remaining: Vec<f64> = weights.to_vec();
    let mut total: f64 = remaining.iter().sum();
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let mut target = rng.random::<f64>() * total;
        let mut choice = None;
        for (i, &w) in remaining.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            if target < w {
                choice = Some(i);
                break;
            }
            target -= w;
        }
        // Roundoff in the running subtraction can walk past the end.
        let i = choice.unwrap_or_else(|| {
            remaining
                .iter()
                .rposition(|&w| w > 0.0)
                .expect("positive weight remains")
        });
        picked.push(i);
        total -= remaining[i];
        remaining[i] = 0.0;
    }
    picked
}

// Indices of the k largest values; ties broken by row order.
fn top_k_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

fn holes_for_target(
    complete: &[Vec<f64>],
    mech: &MechanismSpec,
    target_pos: usize,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    let target = mech.targets[target_pos];
    let n = complete[0].len();
    let k = (mech.rate * n as f64).round() as usize;
    if k >= n {
        return Err(Error::WouldEmptyColumn {
            column: target + 1,
            requested: k,
            rows: n,
        });
    }
    let rows = match mech.kind {
        MechanismKind::Mcar => weighted_without_replacement(&vec![1.0; n], k, rng),
        MechanismKind::Mar1ToX => {
            let control = &complete[mech.controls[target_pos]];
            let med = median(control);
            // Ties at the median count as the low group.
            let weights: Vec<f64> = control
                .iter()
                .map(|&v| if v <= med { 1.0 } else { mech.ratio_x })
                .collect();
            weighted_without_replacement(&weights, k, rng)
        }
        MechanismKind::MarRank => {
            let control = &complete[mech.controls[target_pos]];
            weighted_without_replacement(&midranks(control), k, rng)
        }
        MechanismKind::MnarUpperCensor => top_k_indices(&complete[target], k),
    };
    Ok(rows)
}

fn apply_mechanism(
    complete: &[Vec<f64>],
    mask: &mut [Vec<bool>],
    mech: &MechanismSpec,
    rng: &mut impl Rng,
) -> Result<()> {
    for pos in 0..mech.targets.len() {
        let rows = holes_for_target(complete, mech, pos, rng)?;
        for row in rows {
            mask[mech.targets[pos]][row] = false;
        }
    }
    Ok(())
}

fn materialize(complete: Vec<Vec<f64>>, mask: Vec<Vec<bool>>) -> Result<IncompleteMatrix> {
    let names = (1..=complete.len()).map(|j| format!("var{j}")).collect();
    IncompleteMatrix::new(names, complete, mask)
}

/// Apply a single mechanism to a complete matrix (column-major).
pub fn ampute(
    complete: &[Vec<f64>],
    mech: &MechanismSpec,
    rng: &mut impl Rng,
) -> Result<IncompleteMatrix> {
    if complete.is_empty() || complete[0].is_empty() {
        return Err(Error::InvalidArgument("empty data matrix".into()));
    }
    mech.validate(complete.len())?;
    let mut mask: Vec<Vec<bool>> = complete.iter().map(|c| vec![true; c.len()]).collect();
    apply_mechanism(complete, &mut mask, mech, rng)?;
    materialize(complete.to_vec(), mask)
}

/// Generate a complete sample and run the scenario's mechanism chain over
/// it, in order.
///
/// Identical specs (including the seed) produce bit-identical output.
/// Each mechanism draws from its own derived substream, and control
/// columns always read the original complete values, so a mechanism's
/// holes are unaffected by later or earlier steps in the chain.
///
/// ```
/// use mcar::simgen::{run_scenario, DistributionKind, DistributionSpec, MechanismSpec, ScenarioSpec};
///
/// let spec = ScenarioSpec {
///     distribution: DistributionSpec::new(DistributionKind::StdNormal, 3),
///     n: 50,
///     mechanisms: vec![MechanismSpec::mcar(vec![2], 0.2)],
///     seed: 1,
/// };
/// let data = run_scenario(&spec)?;
/// assert_eq!(data.missing_count(2), 10);
/// # Ok::<(), mcar::Error>(())
/// ```
pub fn run_scenario(spec: &ScenarioSpec) -> Result<IncompleteMatrix> {
    spec.validate()?;
    let mut gen_rng = stream::derive_rng(spec.seed, &[0, 0]);
    let complete = sample(&spec.distribution, spec.n, &mut gen_rng);
    let mut mask: Vec<Vec<bool>> = complete.iter().map(|c| vec![true; c.len()]).collect();
    for (i, mech) in spec.mechanisms.iter().enumerate() {
        let mut mech_rng = stream::derive_rng(spec.seed, &[1, i as u64]);
        apply_mechanism(&complete, &mut mask, mech, &mut mech_rng)?;
    }
    materialize(complete, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::chisq_sf;

    fn rng_for(seed: u64) -> rand_chacha::ChaCha12Rng {
        stream::derive_rng(seed, &[42])
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len();
        let mut concordant = 0i64;
        let mut discordant = 0i64;
        for i in 0..n {
            for j in i + 1..n {
                let s = (a[i] - a[j]) * (b[i] - b[j]);
                if s > 0.0 {
                    concordant += 1;
                } else if s < 0.0 {
                    discordant += 1;
                }
            }
        }
        (concordant - discordant) as f64 / (n * (n - 1) / 2) as f64
    }

    #[test]
    fn std_normal_moments() {
        let dist = DistributionSpec::new(DistributionKind::StdNormal, 3);
        let cols = sample(&dist, 10_000, &mut rng_for(1));
        for col in &cols {
            let (mean, var) = mean_var(col);
            assert!(mean.abs() < 0.05, "mean {mean}");
            assert!((var - 1.0).abs() < 0.08, "var {var}");
        }
    }

    #[test]
    fn clayton_exp1_margins_and_dependence() {
        let dist = DistributionSpec::new(DistributionKind::ClaytonExp1, 2);
        let cols = sample(&dist, 10_000, &mut rng_for(2));
        for col in &cols {
            let (mean, var) = mean_var(col);
            assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
            assert!((var - 1.0).abs() < 0.12, "var {var}");
        }
        // Kendall tau of a Clayton(1) copula is 1/3.
        let tau = kendall_tau(&cols[0][..3000], &cols[1][..3000]);
        assert!((tau - 1.0 / 3.0).abs() < 0.05, "tau {tau}");
    }

    #[test]
    fn clayton_chisq4_margins() {
        let dist = DistributionSpec::new(DistributionKind::ClaytonChisq4, 2);
        let cols = sample(&dist, 10_000, &mut rng_for(3));
        for col in &cols {
            let (mean, var) = mean_var(col);
            assert!((mean - 4.0).abs() < 0.2, "mean {mean}");
            assert!((var - 8.0).abs() < 1.0, "var {var}");
        }
    }

    #[test]
    fn student_t2_dependence_follows_scale() {
        // For elliptical distributions Kendall tau = (2/pi) asin(rho).
        let dist = DistributionSpec::student_t2(2, 0.5);
        let cols = sample(&dist, 4_000, &mut rng_for(4));
        let tau = kendall_tau(&cols[0], &cols[1]);
        assert!((tau - 1.0 / 3.0).abs() < 0.05, "tau {tau}");

        let dist0 = DistributionSpec::student_t2(2, 0.0);
        let cols0 = sample(&dist0, 4_000, &mut rng_for(5));
        let tau0 = kendall_tau(&cols0[0], &cols0[1]);
        assert!(tau0.abs() < 0.05, "tau {tau0}");
    }

    #[test]
    fn scale_offdiag_restricted_to_t2() {
        let mut dist = DistributionSpec::new(DistributionKind::StdNormal, 2);
        dist.scale_offdiag = 0.5;
        assert!(dist.validate().is_err());
        assert!(DistributionSpec::student_t2(2, 0.5).validate().is_ok());
        assert!(DistributionSpec::student_t2(2, 1.0).validate().is_err());
    }

    #[test]
    fn mcar_deletes_exact_counts() {
        let complete: Vec<Vec<f64>> = (0..3).map(|j| (0..100).map(|i| (i + j) as f64).collect()).collect();
        let mech = MechanismSpec::mcar(vec![1, 2], 0.10);
        let m = ampute(&complete, &mech, &mut rng_for(6)).unwrap();
        assert_eq!(m.missing_count(0), 0);
        assert_eq!(m.missing_count(1), 10);
        assert_eq!(m.missing_count(2), 10);
    }

    #[test]
    fn ampute_rejects_emptying_a_column() {
        let complete = vec![vec![1.0, 2.0, 3.0]];
        let mech = MechanismSpec::mcar(vec![0], 0.99);
        assert!(matches!(
            ampute(&complete, &mech, &mut rng_for(7)),
            Err(Error::WouldEmptyColumn { .. })
        ));
    }

    #[test]
    fn mar_1_to_9_prefers_upper_half() {
        // With weights 9:1 above/below the control median, close to 90% of
        // the holes land in the upper half.
        let n = 200;
        let control: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut upper = 0usize;
        let mut total = 0usize;
        let mut rng = rng_for(8);
        for _ in 0..300 {
            let complete = vec![control.clone(), vec![0.0; n]];
            let mech = MechanismSpec::mar_1_to_x(vec![1], vec![0], 0.10, 9.0);
            let mut mask: Vec<Vec<bool>> = complete.iter().map(|c| vec![true; c.len()]).collect();
            apply_mechanism(&complete, &mut mask, &mech, &mut rng).unwrap();
            for i in 0..n {
                if !mask[1][i] {
                    total += 1;
                    if control[i] > median(&control) {
                        upper += 1;
                    }
                }
            }
        }
        let frac = upper as f64 / total as f64;
        assert!((0.84..=0.93).contains(&frac), "upper fraction {frac}");
    }

    #[test]
    fn median_ties_go_to_low_group() {
        let control = vec![1.0, 2.0, 2.0, 3.0];
        assert_eq!(median(&control), 2.0);
        let mech = MechanismSpec::mar_1_to_x(vec![1], vec![0], 0.25, 9.0);
        // Weight layout: rows 0..3 get (1, 1, 1, 9).
        let weights: Vec<f64> = control
            .iter()
            .map(|&v| if v <= 2.0 { 1.0 } else { mech.ratio_x })
            .collect();
        assert_eq!(weights, vec![1.0, 1.0, 1.0, 9.0]);
    }

    #[test]
    fn mar_rank_prefers_high_ranks() {
        // Weight of the top half relative to all ranks of 1..n is about
        // 0.75 for n = 200.
        let n = 200;
        let control: Vec<f64> = (0..n).map(|i| (i * 7 % n) as f64).collect();
        let med = median(&control);
        let mut upper = 0usize;
        let mut total = 0usize;
        let mut rng = rng_for(9);
        for _ in 0..300 {
            let complete = vec![control.clone(), vec![0.0; n]];
            let mech = MechanismSpec::mar_rank(vec![1], vec![0], 0.10);
            let mut mask: Vec<Vec<bool>> = complete.iter().map(|c| vec![true; c.len()]).collect();
            apply_mechanism(&complete, &mut mask, &mech, &mut rng).unwrap();
            for i in 0..n {
                if !mask[1][i] {
                    total += 1;
                    if control[i] > med {
                        upper += 1;
                    }
                }
            }
        }
        let frac = upper as f64 / total as f64;
        assert!((0.69..=0.80).contains(&frac), "upper fraction {frac}");
    }

    #[test]
    fn mnar_censors_the_largest_values() {
        let complete = vec![vec![5.0, 1.0, 9.0, 3.0, 7.0, 2.0, 8.0, 4.0, 6.0, 0.0]];
        let mech = MechanismSpec::mnar_upper_censor(vec![0], 0.2);
        let m = ampute(&complete, &mech, &mut rng_for(10)).unwrap();
        assert_eq!(m.missing_count(0), 2);
        let deleted_min = complete[0]
            .iter()
            .enumerate()
            .filter(|(i, _)| !m.is_observed(*i, 0))
            .map(|(_, &v)| v)
            .fold(f64::INFINITY, f64::min);
        let retained_max = complete[0]
            .iter()
            .enumerate()
            .filter(|(i, _)| m.is_observed(*i, 0))
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(deleted_min >= retained_max);
        assert_eq!(deleted_min, 8.0);
    }

    #[test]
    fn scenario_is_deterministic() {
        let spec = ScenarioSpec {
            distribution: DistributionSpec::new(DistributionKind::StdNormal, 4),
            n: 60,
            mechanisms: vec![
                MechanismSpec::mar_rank(vec![2, 3], vec![0, 1], 0.2),
                MechanismSpec::mcar(vec![1], 0.1),
            ],
            seed: 0xfeed,
        };
        let a = run_scenario(&spec).unwrap();
        let b = run_scenario(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.missing_count(2), 12);
        assert_eq!(a.missing_count(3), 12);
        assert_eq!(a.missing_count(1), 6);
    }

    #[test]
    fn later_mechanisms_do_not_disturb_earlier_ones() {
        // The composite scenario punches MCAR holes into the control column
        // after the MAR step; the MAR holes must be unchanged because each
        // mechanism has its own substream and reads original values.
        let base = ScenarioSpec {
            distribution: DistributionSpec::new(DistributionKind::StdNormal, 5),
            n: 80,
            mechanisms: vec![MechanismSpec::mar_rank(vec![3, 4], vec![2, 2], 0.25)],
            seed: 31337,
        };
        let mut composite = base.clone();
        composite
            .mechanisms
            .push(MechanismSpec::mcar(vec![2], 0.25));

        let solo = run_scenario(&base).unwrap();
        let combo = run_scenario(&composite).unwrap();
        for j in [3usize, 4] {
            assert_eq!(solo.mask_col(j), combo.mask_col(j));
        }
        assert_eq!(combo.missing_count(2), 20);
    }

    #[test]
    fn mcar_hole_subsets_are_uniform() {
        // Chi-square goodness of fit over all C(10, 3) = 120 subsets.
        let n = 10;
        let k = 3;
        let reps = 10_000;
        let mut counts = std::collections::HashMap::new();
        let mut rng = rng_for(11);
        for _ in 0..reps {
            let mut rows = weighted_without_replacement(&vec![1.0; n], k, &mut rng);
            rows.sort_unstable();
            *counts.entry(rows).or_insert(0usize) += 1;
        }
        let cells = 120usize;
        let expected = reps as f64 / cells as f64;
        let mut chi2 = 0.0;
        let mut seen = 0;
        for &c in counts.values() {
            chi2 += (c as f64 - expected).powi(2) / expected;
            seen += 1;
        }
        chi2 += (cells - seen) as f64 * expected; // unseen subsets
        let p = chisq_sf(chi2, cells - 1).unwrap();
        assert!(p > 0.001, "chi2 = {chi2}, p = {p}");
    }

    #[test]
    fn invalid_mechanisms_rejected() {
        assert!(MechanismSpec::mcar(vec![], 0.1).validate(3).is_err());
        assert!(MechanismSpec::mcar(vec![5], 0.1).validate(3).is_err());
        assert!(MechanismSpec::mcar(vec![0], 0.0).validate(3).is_err());
        assert!(MechanismSpec::mar_rank(vec![1], vec![1], 0.1)
            .validate(3)
            .is_err());
        assert!(MechanismSpec::mar_rank(vec![1], vec![], 0.1)
            .validate(3)
            .is_err());
        assert!(MechanismSpec::mar_1_to_x(vec![1], vec![0], 0.1, 0.0)
            .validate(3)
            .is_err());
    }
}
