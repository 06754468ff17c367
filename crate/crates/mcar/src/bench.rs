//! Monte Carlo harness estimating empirical size and power over a grid of
//! (scenario, sample size, missingness rate, method).
//!
//! Replications are embarrassingly parallel; each derives its own random
//! substream from (master seed, cell index, replication index), and the
//! per-replication outcomes are reduced in replication order, so the
//! statistical outputs are identical regardless of worker count.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::data::{classify_columns, ColumnRoles, IncompleteMatrix};
use crate::error::{Error, Result};
use crate::little::little_d2;
use crate::simgen::builtin::ScenarioTemplate;
use crate::simgen::{run_scenario, stream};
use crate::ustat::{test_an, test_an_prime, Method, TestReport};

/// Grid definition for a benchmark run.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub scenarios: Vec<ScenarioTemplate>,
    pub sample_sizes: Vec<usize>,
    pub rates: Vec<f64>,
    pub methods: Vec<Method>,
    pub replications: usize,
    pub alpha: f64,
    pub master_seed: u64,
}

impl BenchConfig {
    /// Desk-scale defaults: quick enough for interactive use.
    pub fn desk_profile(scenarios: Vec<ScenarioTemplate>, master_seed: u64) -> Self {
        BenchConfig {
            scenarios,
            sample_sizes: vec![100, 200],
            rates: vec![0.05, 0.15, 0.30],
            methods: vec![Method::An, Method::AnPrime, Method::LittleD2],
            replications: 500,
            alpha: 0.05,
            master_seed,
        }
    }

    /// Full study grid: 2000 replications, rates from 3% to 30%.
    pub fn paper_profile(scenarios: Vec<ScenarioTemplate>, master_seed: u64) -> Self {
        BenchConfig {
            scenarios,
            sample_sizes: vec![100, 200, 300],
            rates: (1..=10).map(|i| 0.03 * i as f64).collect(),
            methods: vec![Method::An, Method::AnPrime, Method::LittleD2],
            replications: 2000,
            alpha: 0.05,
            master_seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty()
            || self.sample_sizes.is_empty()
            || self.rates.is_empty()
            || self.methods.is_empty()
        {
            return Err(Error::Config(
                "benchmark needs at least one scenario, sample size, rate and method".into(),
            ));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        for t in &self.scenarios {
            for &rate in &self.rates {
                t.instantiate(*self.sample_sizes.iter().max().unwrap(), rate, 0)
                    .validate()?;
            }
        }
        Ok(())
    }
}

/// Aggregated outcome of one grid cell for one method.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub method: Method,
    pub scenario: String,
    pub n: usize,
    pub rate: f64,
    /// Replications with p-value below alpha.
    pub rejections: u64,
    /// Replications where the method produced a report.
    pub completed: u64,
    /// Inapplicable or degenerate replications, excluded from the rate.
    pub failures: u64,
    total_runtime_nanos: u128,
}

impl CellResult {
    pub fn rejection_rate(&self) -> f64 {
        self.rejections as f64 / self.completed as f64
    }

    /// Binomial Monte Carlo standard error of the rejection rate.
    pub fn standard_error(&self) -> f64 {
        let r = self.rejection_rate();
        (r * (1.0 - r) / self.completed as f64).sqrt()
    }

    /// Mean wall-clock seconds per attempted replication.
    pub fn mean_runtime_secs(&self) -> f64 {
        let attempts = self.completed + self.failures;
        self.total_runtime_nanos as f64 / 1e9 / attempts as f64
    }
}

/// All cell results, in (scenario, n, rate, method) iteration order.
#[derive(Debug, Clone)]
pub struct BenchResult {
    pub cells: Vec<CellResult>,
}

impl BenchResult {
    pub fn get(&self, scenario: &str, n: usize, rate: f64, method: Method) -> Option<&CellResult> {
        self.cells.iter().find(|c| {
            c.scenario == scenario && c.n == n && (c.rate - rate).abs() < 1e-12 && c.method == method
        })
    }

    /// True when some cell failed on every single replication.
    pub fn any_cell_all_failed(&self) -> bool {
        self.cells.iter().any(|c| c.completed == 0)
    }
}

fn run_method(method: Method, data: &IncompleteMatrix, roles: &ColumnRoles) -> Result<TestReport> {
    match method {
        Method::An => test_an(data, roles),
        Method::AnPrime => test_an_prime(data, roles),
        Method::LittleD2 => little_d2(data),
    }
}

// Outcome of one replication: per method, Some(reject) or None on failure,
// plus the time spent inside the method call.
struct RepOutcome {
    decisions: Vec<Option<bool>>,
    nanos: Vec<u128>,
}

/// Run the full grid.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchResult> {
    cfg.validate()?;
    let mut cells = Vec::new();
    let mut cell_idx: u64 = 0;

    for template in &cfg.scenarios {
        for &n in &cfg.sample_sizes {
            for &rate in &cfg.rates {
                let outcomes: Vec<RepOutcome> = (0..cfg.replications)
                    .into_par_iter()
                    .map(|rep| {
                        let seed =
                            stream::derive_seed(cfg.master_seed, &[cell_idx, rep as u64]);
                        let spec = template.instantiate(n, rate, seed);
                        let data = run_scenario(&spec).ok();
                        let roles = data.as_ref().map(classify_columns);
                        let mut decisions = Vec::with_capacity(cfg.methods.len());
                        let mut nanos = Vec::with_capacity(cfg.methods.len());
                        for &method in &cfg.methods {
                            let start = Instant::now();
                            let decision = match (&data, &roles) {
                                (Some(m), Some(r)) => run_method(method, m, r)
                                    .ok()
                                    .map(|report| report.p_value < cfg.alpha),
                                _ => None,
                            };
                            nanos.push(start.elapsed().as_nanos());
                            decisions.push(decision);
                        }
                        RepOutcome { decisions, nanos }
                    })
                    .collect();

                for (mi, &method) in cfg.methods.iter().enumerate() {
                    let mut cell = CellResult {
                        method,
                        scenario: template.name.clone(),
                        n,
                        rate,
                        rejections: 0,
                        completed: 0,
                        failures: 0,
                        total_runtime_nanos: 0,
                    };
                    for rep in &outcomes {
                        match rep.decisions[mi] {
                            Some(true) => {
                                cell.completed += 1;
                                cell.rejections += 1;
                            }
                            Some(false) => cell.completed += 1,
                            None => cell.failures += 1,
                        }
                        cell.total_runtime_nanos += rep.nanos[mi];
                    }
                    cells.push(cell);
                }
                cell_idx += 1;
            }
        }
    }
    Ok(BenchResult { cells })
}

/// Long-format CSV: one row per (method, scenario, n, rate).
pub fn export_csv(result: &BenchResult, path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "method,scenario,n,rate,rejection_rate,se,failures")?;
    for c in &result.cells {
        let (rate, se) = if c.completed > 0 {
            (c.rejection_rate().to_string(), c.standard_error().to_string())
        } else {
            // No completed replications: leave the statistics empty.
            (String::new(), String::new())
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            c.method, c.scenario, c.n, c.rate, rate, se, c.failures
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Panel-grouped rejection rates for external plotting: one block per
/// (scenario, n) with the rate grid as rows and one column per method.
pub fn export_plotdata(result: &BenchResult, path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut panels: Vec<(String, usize)> = Vec::new();
    for c in &result.cells {
        if !panels.iter().any(|(s, n)| *s == c.scenario && *n == c.n) {
            panels.push((c.scenario.clone(), c.n));
        }
    }
    let mut methods: Vec<Method> = Vec::new();
    for c in &result.cells {
        if !methods.contains(&c.method) {
            methods.push(c.method);
        }
    }
    for (scenario, n) in panels {
        writeln!(w, "# scenario={scenario} n={n}")?;
        let header: Vec<String> = std::iter::once("rate".to_string())
            .chain(methods.iter().map(|m| m.to_string()))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        let mut rates: Vec<f64> = result
            .cells
            .iter()
            .filter(|c| c.scenario == scenario && c.n == n)
            .map(|c| c.rate)
            .collect();
        rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rates.dedup();
        for rate in rates {
            let mut fields = vec![format!("{rate}")];
            for &m in &methods {
                let cell = result.get(&scenario, n, rate, m);
                fields.push(match cell {
                    Some(c) if c.completed > 0 => format!("{}", c.rejection_rate()),
                    _ => String::new(),
                });
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::builtin;

    fn tiny_config(replications: usize) -> BenchConfig {
        BenchConfig {
            scenarios: vec![builtin::find("2x3y-normal-mcar").unwrap()],
            sample_sizes: vec![40],
            rates: vec![0.2],
            methods: vec![Method::An, Method::AnPrime, Method::LittleD2],
            replications,
            alpha: 0.05,
            master_seed: 77,
        }
    }

    #[test]
    fn single_replication_smoke() {
        let result = run_bench(&tiny_config(1)).unwrap();
        assert_eq!(result.cells.len(), 3);
        for cell in &result.cells {
            assert_eq!(cell.completed + cell.failures, 1);
            if cell.completed == 1 {
                let rate = cell.rejection_rate();
                assert!(rate == 0.0 || rate == 1.0);
                assert_eq!(cell.standard_error(), 0.0);
            }
        }
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let cfg = tiny_config(24);
        let run_with = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_bench(&cfg).unwrap())
        };
        let a = run_with(1);
        let b = run_with(4);
        assert_eq!(a.cells.len(), b.cells.len());
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert_eq!(x.method, y.method);
            assert_eq!(x.rejections, y.rejections);
            assert_eq!(x.completed, y.completed);
            assert_eq!(x.failures, y.failures);
        }
    }

    #[test]
    fn inapplicable_methods_count_as_failures() {
        // Both columns incomplete: the X-only test can never run.
        let template = ScenarioTemplate {
            name: "0x2y".into(),
            summary: String::new(),
            distribution: crate::simgen::DistributionSpec::new(
                crate::simgen::DistributionKind::StdNormal,
                2,
            ),
            mechanisms: vec![crate::simgen::builtin::MechanismTemplate {
                kind: crate::simgen::MechanismKind::Mcar,
                targets: vec![0, 1],
                controls: vec![],
                ratio_x: 9.0,
            }],
        };
        let cfg = BenchConfig {
            scenarios: vec![template],
            sample_sizes: vec![30],
            rates: vec![0.2],
            methods: vec![Method::An, Method::AnPrime],
            replications: 5,
            alpha: 0.05,
            master_seed: 1,
        };
        let result = run_bench(&cfg).unwrap();
        let an = result.get("0x2y", 30, 0.2, Method::An).unwrap();
        assert_eq!(an.failures, 5);
        assert_eq!(an.completed, 0);
        assert!(result.any_cell_all_failed());
        // The extended test may still fail on replications where a row
        // loses both cells; the counts always add up.
        let anp = result.get("0x2y", 30, 0.2, Method::AnPrime).unwrap();
        assert_eq!(anp.completed + anp.failures, 5);
    }

    #[test]
    fn exports_write_well_formed_files() {
        let result = run_bench(&tiny_config(3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("results.csv");
        let plot_path = dir.path().join("plotdata.csv");
        export_csv(&result, &csv_path).unwrap();
        export_plotdata(&result, &plot_path).unwrap();

        let text = std::fs::read_to_string(&csv_path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "method,scenario,n,rate,rejection_rate,se,failures");
        assert_eq!(lines.len(), 1 + result.cells.len());

        let plot = std::fs::read_to_string(&plot_path).unwrap();
        assert!(plot.contains("# scenario=2x3y-normal-mcar n=40"));
        assert!(plot.contains("rate,A_n,A_n_prime,little_d2"));
    }

    #[test]
    fn rejection_rate_spread_matches_binomial_error() {
        // Across independent master seeds, the spread of the null
        // rejection rate is governed by the binomial standard error.
        let mut rates = Vec::new();
        let replications = 250;
        for seed in 0..12u64 {
            let cfg = BenchConfig {
                scenarios: vec![builtin::find("2x3y-normal-mcar").unwrap()],
                sample_sizes: vec![60],
                rates: vec![0.15],
                methods: vec![Method::AnPrime],
                replications,
                alpha: 0.05,
                master_seed: 1000 + seed,
            };
            let r = run_bench(&cfg).unwrap();
            rates.push(r.cells[0].rejection_rate());
        }
        let k = rates.len() as f64;
        let mean = rates.iter().sum::<f64>() / k;
        let sd = (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
        let se = (mean * (1.0 - mean) / replications as f64).sqrt();
        assert!(
            sd < 2.0 * se && sd > se / 2.0,
            "spread {sd:.4} vs binomial se {se:.4}"
        );
    }

    #[test]
    fn config_validation() {
        let mut cfg = tiny_config(1);
        cfg.alpha = 1.5;
        assert!(run_bench(&cfg).is_err());
        let mut cfg = tiny_config(0);
        cfg.replications = 0;
        assert!(run_bench(&cfg).is_err());
        let mut cfg = tiny_config(1);
        cfg.methods.clear();
        assert!(run_bench(&cfg).is_err());
    }
}
