//! Declarative TOML configs for scenarios and benchmark runs.
//!
//! Column numbers in config files are 1-based, matching how the built-in
//! scenario descriptions refer to variables.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::BenchConfig;
use crate::error::{Error, Result};
use crate::simgen::builtin::{self, MechanismTemplate, ScenarioTemplate};
use crate::simgen::{
    DistributionKind, DistributionSpec, MechanismKind, MechanismSpec, ScenarioSpec,
};
use crate::ustat::Method;

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    scenario: ScenarioSection,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioSection {
    distribution: String,
    dim: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    scale_offdiag: f64,
    n: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default, rename = "mechanism")]
    mechanisms: Vec<MechanismSection>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MechanismSection {
    kind: String,
    targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    controls: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn parse_distribution(name: &str, dim: usize, scale_offdiag: f64) -> Result<DistributionSpec> {
    let kind = match name {
        "std-normal" => DistributionKind::StdNormal,
        "clayton-exp1" => DistributionKind::ClaytonExp1,
        "clayton-chisq4" => DistributionKind::ClaytonChisq4,
        "student-t2" => DistributionKind::StudentT2,
        other => {
            return Err(Error::Config(format!(
                "unknown distribution {other:?} (expected std-normal, clayton-exp1, \
                 clayton-chisq4 or student-t2)"
            )))
        }
    };
    Ok(DistributionSpec {
        kind,
        dim,
        scale_offdiag,
    })
}

fn distribution_name(kind: DistributionKind) -> &'static str {
    match kind {
        DistributionKind::StdNormal => "std-normal",
        DistributionKind::ClaytonExp1 => "clayton-exp1",
        DistributionKind::ClaytonChisq4 => "clayton-chisq4",
        DistributionKind::StudentT2 => "student-t2",
    }
}

fn parse_kind(name: &str) -> Result<MechanismKind> {
    match name {
        "mcar" => Ok(MechanismKind::Mcar),
        "mar-1-to-x" => Ok(MechanismKind::Mar1ToX),
        "mar-rank" => Ok(MechanismKind::MarRank),
        "mnar-upper-censor" => Ok(MechanismKind::MnarUpperCensor),
        other => Err(Error::Config(format!(
            "unknown mechanism kind {other:?} (expected mcar, mar-1-to-x, mar-rank \
             or mnar-upper-censor)"
        ))),
    }
}

fn kind_name(kind: MechanismKind) -> &'static str {
    match kind {
        MechanismKind::Mcar => "mcar",
        MechanismKind::Mar1ToX => "mar-1-to-x",
        MechanismKind::MarRank => "mar-rank",
        MechanismKind::MnarUpperCensor => "mnar-upper-censor",
    }
}

// Config files number columns from 1.
fn to_zero_based(cols: &[usize], what: &str) -> Result<Vec<usize>> {
    cols.iter()
        .map(|&c| {
            c.checked_sub(1).ok_or_else(|| {
                Error::Config(format!("{what} columns are numbered from 1, got 0"))
            })
        })
        .collect()
}

fn to_one_based(cols: &[usize]) -> Vec<usize> {
    cols.iter().map(|&c| c + 1).collect()
}

fn mechanism_from_section(section: &MechanismSection, require_rate: bool) -> Result<MechanismSpec> {
    let kind = parse_kind(&section.kind)?;
    let rate = match (section.rate, require_rate) {
        (Some(r), _) => r,
        // Placeholder for templates; overwritten at instantiation.
        (None, false) => 0.5,
        (None, true) => {
            return Err(Error::Config(format!(
                "mechanism {:?} needs a rate",
                section.kind
            )))
        }
    };
    Ok(MechanismSpec {
        kind,
        targets: to_zero_based(&section.targets, "target")?,
        controls: to_zero_based(&section.controls, "control")?,
        rate,
        ratio_x: section.x.unwrap_or(9.0),
    })
}

fn mechanism_to_section(mech: &MechanismSpec) -> MechanismSection {
    MechanismSection {
        kind: kind_name(mech.kind).to_string(),
        targets: to_one_based(&mech.targets),
        controls: to_one_based(&mech.controls),
        rate: Some(mech.rate),
        x: (mech.kind == MechanismKind::Mar1ToX).then_some(mech.ratio_x),
    }
}

/// Parse a scenario config from TOML text.
pub fn scenario_from_toml(text: &str) -> Result<ScenarioSpec> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let s = file.scenario;
    let spec = ScenarioSpec {
        distribution: parse_distribution(&s.distribution, s.dim, s.scale_offdiag)?,
        n: s.n,
        mechanisms: s
            .mechanisms
            .iter()
            .map(|m| mechanism_from_section(m, true))
            .collect::<Result<Vec<_>>>()?,
        seed: s.seed,
    };
    spec.validate()?;
    Ok(spec)
}

/// Serialize a scenario to the TOML config format.
pub fn scenario_to_toml(spec: &ScenarioSpec) -> String {
    let file = ScenarioFile {
        scenario: ScenarioSection {
            distribution: distribution_name(spec.distribution.kind).to_string(),
            dim: spec.distribution.dim,
            scale_offdiag: spec.distribution.scale_offdiag,
            n: spec.n,
            seed: spec.seed,
            mechanisms: spec.mechanisms.iter().map(mechanism_to_section).collect(),
        },
    };
    toml::to_string(&file).expect("scenario serializes")
}

/// Load a scenario config file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec> {
    scenario_from_toml(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Deserialize)]
struct BenchFile {
    bench: BenchSection,
}

#[derive(Debug, Deserialize)]
struct BenchSection {
    replications: usize,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default)]
    master_seed: u64,
    #[serde(default = "default_methods")]
    methods: Vec<String>,
    sample_sizes: Vec<usize>,
    rates: Vec<f64>,
    #[serde(default)]
    scenarios: Vec<String>,
    #[serde(default, rename = "scenario")]
    inline: Vec<InlineTemplate>,
}

#[derive(Debug, Deserialize)]
struct InlineTemplate {
    name: String,
    distribution: String,
    dim: usize,
    #[serde(default)]
    scale_offdiag: f64,
    #[serde(rename = "mechanism")]
    mechanisms: Vec<MechanismSection>,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_methods() -> Vec<String> {
    vec!["an".into(), "an-prime".into(), "little".into()]
}

/// Parse a benchmark config from TOML text. Scenarios may reference
/// built-in template names or be defined inline.
pub fn bench_from_toml(text: &str) -> Result<BenchConfig> {
    let file: BenchFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let b = file.bench;

    let mut scenarios = Vec::new();
    for name in &b.scenarios {
        scenarios.push(builtin::find(name)?);
    }
    for inline in &b.inline {
        let mechanisms = inline
            .mechanisms
            .iter()
            .map(|m| {
                let spec = mechanism_from_section(m, false)?;
                Ok(MechanismTemplate {
                    kind: spec.kind,
                    targets: spec.targets,
                    controls: spec.controls,
                    ratio_x: spec.ratio_x,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        scenarios.push(ScenarioTemplate {
            name: inline.name.clone(),
            summary: format!("custom scenario from config ({})", inline.distribution),
            distribution: parse_distribution(&inline.distribution, inline.dim, inline.scale_offdiag)?,
            mechanisms,
        });
    }

    let methods = b
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>>>()?;

    Ok(BenchConfig {
        scenarios,
        sample_sizes: b.sample_sizes,
        rates: b.rates,
        methods,
        replications: b.replications,
        alpha: b.alpha,
        master_seed: b.master_seed,
    })
}

/// Load a benchmark config file.
pub fn load_bench(path: impl AsRef<Path>) -> Result<BenchConfig> {
    bench_from_toml(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_round_trip() {
        let spec = ScenarioSpec {
            distribution: DistributionSpec::student_t2(5, 0.5),
            n: 150,
            mechanisms: vec![
                MechanismSpec::mar_1_to_x(vec![2, 4], vec![0, 1], 0.15, 9.0),
                MechanismSpec::mcar(vec![3], 0.1),
            ],
            seed: 99,
        };
        let text = scenario_to_toml(&spec);
        let back = scenario_from_toml(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn scenario_parses_one_based_columns() {
        let text = r#"
            [scenario]
            distribution = "std-normal"
            dim = 5
            n = 100
            seed = 3

            [[scenario.mechanism]]
            kind = "mar-rank"
            targets = [4, 5]
            controls = [3, 3]
            rate = 0.2
        "#;
        let spec = scenario_from_toml(text).unwrap();
        assert_eq!(spec.mechanisms[0].targets, vec![3, 4]);
        assert_eq!(spec.mechanisms[0].controls, vec![2, 2]);
    }

    #[test]
    fn scenario_rejects_bad_input() {
        assert!(scenario_from_toml("not toml at all [").is_err());
        let bad_kind = r#"
            [scenario]
            distribution = "std-normal"
            dim = 3
            n = 50
            [[scenario.mechanism]]
            kind = "mar-ran"
            targets = [2]
            controls = [1]
            rate = 0.2
        "#;
        assert!(scenario_from_toml(bad_kind).is_err());
        let zero_col = r#"
            [scenario]
            distribution = "std-normal"
            dim = 3
            n = 50
            [[scenario.mechanism]]
            kind = "mcar"
            targets = [0]
            rate = 0.2
        "#;
        assert!(scenario_from_toml(zero_col).is_err());
        let missing_rate = r#"
            [scenario]
            distribution = "std-normal"
            dim = 3
            n = 50
            [[scenario.mechanism]]
            kind = "mcar"
            targets = [2]
        "#;
        assert!(scenario_from_toml(missing_rate).is_err());
    }

    #[test]
    fn bench_config_with_builtin_and_inline_scenarios() {
        let text = r#"
            [bench]
            replications = 100
            sample_sizes = [50, 100]
            rates = [0.1, 0.2]
            scenarios = ["2x3y-normal-mcar"]
            methods = ["an-prime", "little"]
            master_seed = 5

            [[bench.scenario]]
            name = "custom-0x2y"
            distribution = "clayton-exp1"
            dim = 2
            [[bench.scenario.mechanism]]
            kind = "mcar"
            targets = [1, 2]
        "#;
        let cfg = bench_from_toml(text).unwrap();
        assert_eq!(cfg.replications, 100);
        assert_eq!(cfg.alpha, 0.05);
        assert_eq!(cfg.scenarios.len(), 2);
        assert_eq!(cfg.scenarios[1].name, "custom-0x2y");
        assert_eq!(cfg.scenarios[1].mechanisms[0].targets, vec![0, 1]);
        assert_eq!(cfg.methods, vec![Method::AnPrime, Method::LittleD2]);
    }

    #[test]
    fn bench_config_rejects_unknown_scenario() {
        let text = r#"
            [bench]
            replications = 10
            sample_sizes = [50]
            rates = [0.1]
            scenarios = ["no-such-scenario"]
        "#;
        assert!(bench_from_toml(text).is_err());
    }
}
