//! Command-line interface: run MCAR tests on CSV files, generate
//! amputated datasets, and drive Monte Carlo size/power benchmarks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mcar::bench::{export_csv, export_plotdata, run_bench, BenchConfig};
use mcar::config;
use mcar::data::{classify_with_forced_y, read_csv, write_csv, ColumnRoles, IncompleteMatrix};
use mcar::error::Error;
use mcar::little::little_d2;
use mcar::simgen::{builtin, run_scenario, ScenarioSpec};
use mcar::ustat::{test_an, test_an_prime, Method, PairKind, TestReport, Transform};

#[derive(Parser)]
#[command(
    name = "mcar",
    about = "MCAR tests for incomplete data, plus simulation and benchmarking",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a CSV dataset for MCAR.
    ///
    /// Exit status: 0 when the test completed (regardless of decision),
    /// 2 when the test is inapplicable to the data, 1 on input errors.
    Test {
        /// CSV file with a header row.
        file: PathBuf,
        /// Missing-value marker (empty fields always count as missing).
        #[arg(long, default_value = "NA", allow_hyphen_values = true)]
        na: String,
        #[arg(long, value_enum, default_value_t = MethodArg::AnPrime)]
        method: MethodArg,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Force these columns (1-based) into the incomplete group even if
        /// they have no realized holes.
        #[arg(long, value_delimiter = ',')]
        y_cols: Vec<usize>,
        /// Monotone per-column transform applied before testing.
        #[arg(long, value_enum, default_value_t = TransformArg::Identity)]
        transform: TransformArg,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
        /// Also print the per-pair statistic table.
        #[arg(long)]
        verbose: bool,
    },
    /// Generate an amputated dataset from a scenario.
    Simulate {
        /// Scenario config file (TOML).
        #[arg(long, conflicts_with = "scenario")]
        config: Option<PathBuf>,
        /// Built-in scenario name (see scenario-list).
        #[arg(long, requires = "n", requires = "rate")]
        scenario: Option<String>,
        /// Sample size (with --scenario).
        #[arg(long)]
        n: Option<usize>,
        /// Missingness rate (with --scenario).
        #[arg(long)]
        rate: Option<f64>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "NA", allow_hyphen_values = true)]
        na: String,
    },
    /// Run a Monte Carlo size/power benchmark grid.
    ///
    /// Exit status is nonzero when some grid cell failed on every
    /// replication.
    Bench {
        /// Benchmark config file (TOML); omit to use a profile.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Grid defaults when no config file is given.
        #[arg(long, value_enum, default_value_t = ProfileArg::Desk)]
        profile: ProfileArg,
        /// Built-in scenarios for profile runs.
        #[arg(long, value_delimiter = ',')]
        scenarios: Vec<String>,
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Directory for results.csv and plotdata.csv.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// List the built-in scenarios.
    ScenarioList,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    An,
    AnPrime,
    Little,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformArg {
    Identity,
    Log,
    Rank,
}

impl From<TransformArg> for Transform {
    fn from(t: TransformArg) -> Transform {
        match t {
            TransformArg::Identity => Transform::Identity,
            TransformArg::Log => Transform::Log,
            TransformArg::Rank => Transform::Rank,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_test_inapplicable() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> mcar::Result<u8> {
    match cli.command {
        Command::Test {
            file,
            na,
            method,
            alpha,
            y_cols,
            transform,
            format,
            verbose,
        } => cmd_test(&file, &na, method, alpha, &y_cols, transform, format, verbose),
        Command::Simulate {
            config,
            scenario,
            n,
            rate,
            seed,
            out,
            na,
        } => cmd_simulate(config, scenario, n, rate, seed, &out, &na),
        Command::Bench {
            config,
            profile,
            scenarios,
            replications,
            seed,
            threads,
            out_dir,
        } => cmd_bench(config, profile, scenarios, replications, seed, threads, &out_dir),
        Command::ScenarioList => {
            for t in builtin::all() {
                println!("{:32} {}", t.name, t.summary);
            }
            Ok(0)
        }
    }
}

// Six significant digits, switching to scientific notation for tiny values.
fn fmt_pvalue(p: f64) -> String {
    if p >= 1e-3 {
        format!("{p:.6}")
    } else {
        format!("{p:.5e}")
    }
}

fn run_one(method: Method, data: &IncompleteMatrix, roles: &ColumnRoles) -> mcar::Result<TestReport> {
    match method {
        Method::An => test_an(data, roles),
        Method::AnPrime => test_an_prime(data, roles),
        Method::LittleD2 => little_d2(data),
    }
}

fn print_text_report(report: &TestReport, alpha: f64, roles: &ColumnRoles, m: &IncompleteMatrix, verbose: bool) {
    println!("method: {}", report.method);
    println!("statistic: {:.6}", report.statistic);
    println!("df: {}", report.df);
    println!("p-value: {}", fmt_pvalue(report.p_value));
    println!(
        "rank-deficient: {}",
        if report.rank_deficient { "yes" } else { "no" }
    );
    let decision = if report.p_value < alpha {
        "reject MCAR"
    } else {
        "fail to reject MCAR"
    };
    println!("decision at alpha={alpha}: {decision}");
    if verbose && !report.pair_stats.is_empty() {
        println!("pair statistics:");
        println!("  {:6} {:12} {:14} value", "kind", "data-column", "indicator-of");
        let names = m.names();
        for stat in &report.pair_stats {
            let data_col = match stat.kind {
                PairKind::X => &names[roles.x_indices()[stat.u]],
                PairKind::Y => &names[roles.y_indices()[stat.u]],
            };
            let ind_col = &names[roles.y_indices()[stat.v]];
            let kind = match stat.kind {
                PairKind::X => "X",
                PairKind::Y => "Y",
            };
            println!("  {kind:6} {data_col:12} {ind_col:14} {:+.6e}", stat.value);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_test(
    file: &PathBuf,
    na: &str,
    method: MethodArg,
    alpha: f64,
    y_cols: &[usize],
    transform: TransformArg,
    format: FormatArg,
    verbose: bool,
) -> mcar::Result<u8> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    let raw = read_csv(file, na)?;
    let data = Transform::from(transform).apply(&raw)?;
    let forced: Vec<usize> = y_cols
        .iter()
        .map(|&c| {
            c.checked_sub(1).ok_or_else(|| {
                Error::InvalidArgument("--y-cols are numbered from 1".into())
            })
        })
        .collect::<mcar::Result<_>>()?;
    let roles = classify_with_forced_y(&data, &forced)?;

    let methods: Vec<Method> = match method {
        MethodArg::An => vec![Method::An],
        MethodArg::AnPrime => vec![Method::AnPrime],
        MethodArg::Little => vec![Method::LittleD2],
        MethodArg::All => vec![Method::AnPrime, Method::An, Method::LittleD2],
    };

    let mut reports = Vec::new();
    let mut skipped: Vec<(Method, Error)> = Vec::new();
    for &m in &methods {
        match run_one(m, &data, &roles) {
            Ok(report) => reports.push(report),
            Err(e) if methods.len() > 1 && e.is_test_inapplicable() => skipped.push((m, e)),
            Err(e) => return Err(e),
        }
    }
    if reports.is_empty() {
        // Everything was inapplicable; surface the first reason.
        return Err(skipped.remove(0).1);
    }

    match format {
        FormatArg::Text => {
            println!(
                "{}: n = {}, columns = {} ({} complete, {} incomplete)",
                file.display(),
                data.n_rows(),
                data.n_cols(),
                roles.p(),
                roles.q()
            );
            for report in &reports {
                println!();
                print_text_report(report, alpha, &roles, &data, verbose);
            }
            for (m, e) in &skipped {
                println!();
                println!("method: {m}");
                println!("skipped: {e}");
            }
        }
        FormatArg::Json => {
            let payload = serde_json::json!({
                "file": file.display().to_string(),
                "n_rows": data.n_rows(),
                "alpha": alpha,
                "reports": reports.iter().map(|r| {
                    let mut v = serde_json::to_value(r).expect("report serializes");
                    v["reject"] = serde_json::json!(r.p_value < alpha);
                    v
                }).collect::<Vec<_>>(),
                "skipped": skipped.iter().map(|(m, e)| {
                    serde_json::json!({ "method": m.to_string(), "reason": e.to_string() })
                }).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&payload).expect("json"));
        }
    }
    Ok(0)
}

fn cmd_simulate(
    config: Option<PathBuf>,
    scenario: Option<String>,
    n: Option<usize>,
    rate: Option<f64>,
    seed: Option<u64>,
    out: &PathBuf,
    na: &str,
) -> mcar::Result<u8> {
    let mut spec: ScenarioSpec = match (config, scenario) {
        (Some(path), None) => config::load_scenario(&path)?,
        (None, Some(name)) => {
            let template = builtin::find(&name)?;
            template.instantiate(
                n.expect("clap enforces --n"),
                rate.expect("clap enforces --rate"),
                seed.unwrap_or(0),
            )
        }
        _ => {
            return Err(Error::InvalidArgument(
                "simulate needs either --config or --scenario".into(),
            ))
        }
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let data = run_scenario(&spec)?;
    write_csv(&data, out, na)?;
    println!("wrote {} ({} rows, {} columns)", out.display(), data.n_rows(), data.n_cols());
    println!("realized missingness:");
    for (j, name) in data.names().iter().enumerate() {
        let missing = data.missing_count(j);
        println!(
            "  {name}: {missing}/{} ({:.1}%)",
            data.n_rows(),
            100.0 * missing as f64 / data.n_rows() as f64
        );
    }
    Ok(0)
}

fn cmd_bench(
    config: Option<PathBuf>,
    profile: ProfileArg,
    scenario_names: Vec<String>,
    replications: Option<usize>,
    seed: Option<u64>,
    threads: Option<usize>,
    out_dir: &PathBuf,
) -> mcar::Result<u8> {
    let mut cfg: BenchConfig = match config {
        Some(path) => config::load_bench(&path)?,
        None => {
            let names = if scenario_names.is_empty() {
                vec![
                    "2x3y-normal-mcar".to_string(),
                    "2x3y-normal-mar1to9".to_string(),
                    "2x3y-normal-marrank-mcar3".to_string(),
                ]
            } else {
                scenario_names
            };
            let templates = names
                .iter()
                .map(|n| builtin::find(n))
                .collect::<mcar::Result<Vec<_>>>()?;
            match profile {
                ProfileArg::Desk => BenchConfig::desk_profile(templates, 0),
                ProfileArg::Paper => BenchConfig::paper_profile(templates, 0),
            }
        }
    };
    if let Some(n) = replications {
        cfg.replications = n;
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }

    let result = if let Some(k) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| run_bench(&cfg))?
    } else {
        run_bench(&cfg)?
    };

    std::fs::create_dir_all(out_dir)?;
    let results_path = out_dir.join("results.csv");
    let plot_path = out_dir.join("plotdata.csv");
    export_csv(&result, &results_path)?;
    export_plotdata(&result, &plot_path)?;

    println!(
        "{:32} {:>5} {:>6} {:12} {:>9} {:>8} {:>8}",
        "scenario", "n", "rate", "method", "reject", "se", "failures"
    );
    for c in &result.cells {
        let (rate, se) = if c.completed > 0 {
            (
                format!("{:.4}", c.rejection_rate()),
                format!("{:.4}", c.standard_error()),
            )
        } else {
            ("-".into(), "-".into())
        };
        println!(
            "{:32} {:>5} {:>6.2} {:12} {:>9} {:>8} {:>8}",
            c.scenario,
            c.n,
            c.rate,
            c.method.to_string(),
            rate,
            se,
            c.failures
        );
    }
    println!("wrote {} and {}", results_path.display(), plot_path.display());

    if result.any_cell_all_failed() {
        eprintln!("error: some grid cell failed on every replication");
        return Ok(3);
    }
    Ok(0)
}
