//! Named scenario templates covering the standard study layouts.
//!
//! Templates fix the distribution and the mechanism chain; sample size,
//! missingness rate and seed are supplied at instantiation, which is what
//! the benchmark grid varies.

use crate::error::{Error, Result};
use crate::simgen::{
    DistributionKind, DistributionSpec, MechanismKind, MechanismSpec, ScenarioSpec,
};

/// A mechanism with every knob fixed except the missingness rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismTemplate {
    pub kind: MechanismKind,
    pub targets: Vec<usize>,
    pub controls: Vec<usize>,
    pub ratio_x: f64,
}

impl MechanismTemplate {
    pub fn with_rate(&self, rate: f64) -> MechanismSpec {
        MechanismSpec {
            kind: self.kind,
            targets: self.targets.clone(),
            controls: self.controls.clone(),
            rate,
            ratio_x: self.ratio_x,
        }
    }
}

/// A reusable scenario: distribution plus mechanism chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTemplate {
    pub name: String,
    pub summary: String,
    pub distribution: DistributionSpec,
    pub mechanisms: Vec<MechanismTemplate>,
}

impl ScenarioTemplate {
    pub fn instantiate(&self, n: usize, rate: f64, seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            distribution: self.distribution.clone(),
            n,
            mechanisms: self.mechanisms.iter().map(|m| m.with_rate(rate)).collect(),
            seed,
        }
    }
}

fn template(
    name: &str,
    summary: &str,
    distribution: DistributionSpec,
    mechanisms: Vec<MechanismTemplate>,
) -> ScenarioTemplate {
    ScenarioTemplate {
        name: name.to_string(),
        summary: summary.to_string(),
        distribution,
        mechanisms,
    }
}

fn mech(kind: MechanismKind, targets: Vec<usize>, controls: Vec<usize>) -> MechanismTemplate {
    MechanismTemplate {
        kind,
        targets,
        controls,
        ratio_x: 9.0,
    }
}

// 2X3Y layouts: five columns, the last three incomplete.
fn mcar_2x3y() -> Vec<MechanismTemplate> {
    vec![mech(MechanismKind::Mcar, vec![2, 3, 4], vec![])]
}

// var 1 controls vars 3 and 5, var 2 controls var 4.
fn mar_2x3y(kind: MechanismKind) -> Vec<MechanismTemplate> {
    vec![mech(kind, vec![2, 3, 4], vec![0, 1, 0])]
}

// var 3 controls vars 4 and 5 by rank, then MCAR holes in var 3 itself.
fn marrank_mcar3_2x3y() -> Vec<MechanismTemplate> {
    vec![
        mech(MechanismKind::MarRank, vec![3, 4], vec![2, 2]),
        mech(MechanismKind::Mcar, vec![2], vec![]),
    ]
}

fn censor_2x3y() -> Vec<MechanismTemplate> {
    vec![mech(MechanismKind::MnarUpperCensor, vec![2, 3, 4], vec![])]
}

fn normal(dim: usize) -> DistributionSpec {
    DistributionSpec::new(DistributionKind::StdNormal, dim)
}

/// All built-in scenario templates.
pub fn all() -> Vec<ScenarioTemplate> {
    vec![
        template(
            "2x3y-normal-mcar",
            "2X3Y standard normal, MCAR in vars 3-5",
            normal(5),
            mcar_2x3y(),
        ),
        template(
            "2x3y-clayton-exp1-mcar",
            "2X3Y Clayton(1) copula with Exp(1) margins, MCAR in vars 3-5",
            DistributionSpec::new(DistributionKind::ClaytonExp1, 5),
            mcar_2x3y(),
        ),
        template(
            "2x3y-clayton-chisq4-mcar",
            "2X3Y Clayton(1) copula with chi-square(4) margins, MCAR in vars 3-5",
            DistributionSpec::new(DistributionKind::ClaytonChisq4, 5),
            mcar_2x3y(),
        ),
        template(
            "2x3y-t2-mcar",
            "2X3Y Student t(2), MCAR in vars 3-5",
            DistributionSpec::student_t2(5, 0.0),
            mcar_2x3y(),
        ),
        template(
            "2x3y-normal-mar1to9",
            "2X3Y standard normal, MAR 1-to-9 (var 1 controls vars 3 and 5, var 2 controls var 4)",
            normal(5),
            mar_2x3y(MechanismKind::Mar1ToX),
        ),
        template(
            "2x3y-t2-mar1to9",
            "2X3Y Student t(2), MAR 1-to-9 (var 1 controls vars 3 and 5, var 2 controls var 4)",
            DistributionSpec::student_t2(5, 0.0),
            mar_2x3y(MechanismKind::Mar1ToX),
        ),
        template(
            "2x3y-normal-marrank",
            "2X3Y standard normal, MAR rank (var 1 controls vars 3 and 5, var 2 controls var 4)",
            normal(5),
            mar_2x3y(MechanismKind::MarRank),
        ),
        template(
            "2x3y-normal-marrank-mcar3",
            "2X3Y standard normal, MAR rank from var 3 into vars 4-5, then MCAR in var 3",
            normal(5),
            marrank_mcar3_2x3y(),
        ),
        template(
            "2x3y-clayton-exp1-marrank-mcar3",
            "2X3Y Clayton(1)/Exp(1), MAR rank from var 3 into vars 4-5, then MCAR in var 3",
            DistributionSpec::new(DistributionKind::ClaytonExp1, 5),
            marrank_mcar3_2x3y(),
        ),
        template(
            "2x3y-clayton-chisq4-marrank-mcar3",
            "2X3Y Clayton(1)/chi-square(4), MAR rank from var 3 into vars 4-5, then MCAR in var 3",
            DistributionSpec::new(DistributionKind::ClaytonChisq4, 5),
            marrank_mcar3_2x3y(),
        ),
        template(
            "2x3y-normal-censor",
            "2X3Y standard normal, MNAR upper censoring of vars 3-5",
            normal(5),
            censor_2x3y(),
        ),
        template(
            "2x3y-clayton-exp1-censor",
            "2X3Y Clayton(1)/Exp(1), MNAR upper censoring of vars 3-5",
            DistributionSpec::new(DistributionKind::ClaytonExp1, 5),
            censor_2x3y(),
        ),
        template(
            "2x3y-t2-censor",
            "2X3Y Student t(2), MNAR upper censoring of vars 3-5",
            DistributionSpec::student_t2(5, 0.0),
            censor_2x3y(),
        ),
        template(
            "2x3y-t2-rho01-censor",
            "2X3Y Student t(2) with 0.1 off-diagonal scale, MNAR upper censoring of vars 3-5",
            DistributionSpec::student_t2(5, 0.1),
            censor_2x3y(),
        ),
        template(
            "2x3y-t2-rho05-censor",
            "2X3Y Student t(2) with 0.5 off-diagonal scale, MNAR upper censoring of vars 3-5",
            DistributionSpec::student_t2(5, 0.5),
            censor_2x3y(),
        ),
        template(
            "1x2y-normal-marrank",
            "1X2Y standard normal, MAR rank (var 1 controls vars 2 and 3)",
            normal(3),
            vec![mech(MechanismKind::MarRank, vec![1, 2], vec![0, 0])],
        ),
        template(
            "5x5y-normal-marrank",
            "5X5Y standard normal, MAR rank (vars 1-5 control vars 6-10)",
            normal(10),
            vec![mech(
                MechanismKind::MarRank,
                vec![5, 6, 7, 8, 9],
                vec![0, 1, 2, 3, 4],
            )],
        ),
    ]
}

/// Look up a template by name.
pub fn find(name: &str) -> Result<ScenarioTemplate> {
    all()
        .into_iter()
        .find(|t| t.name == name)
        .ok_or_else(|| Error::Config(format!("unknown scenario {name:?}; see scenario-list")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_templates_instantiate_and_validate() {
        for t in all() {
            let spec = t.instantiate(40, 0.1, 7);
            spec.validate().unwrap_or_else(|e| panic!("{}: {e}", t.name));
        }
    }

    #[test]
    fn figure_scenarios_are_present() {
        let names: Vec<String> = all().into_iter().map(|t| t.name).collect();
        for required in [
            "2x3y-normal-mcar",
            "2x3y-clayton-exp1-mcar",
            "2x3y-clayton-chisq4-mcar",
            "2x3y-t2-mcar",
            "2x3y-normal-mar1to9",
            "2x3y-t2-mar1to9",
            "2x3y-normal-marrank-mcar3",
            "2x3y-clayton-exp1-marrank-mcar3",
            "2x3y-clayton-chisq4-marrank-mcar3",
            "2x3y-normal-censor",
            "2x3y-clayton-exp1-censor",
            "2x3y-t2-censor",
            "1x2y-normal-marrank",
            "2x3y-normal-marrank",
            "5x5y-normal-marrank",
        ] {
            assert!(names.iter().any(|n| n == required), "missing {required}");
        }
    }

    #[test]
    fn find_rejects_unknown_names() {
        assert!(find("2x3y-normal-mcar").is_ok());
        assert!(find("nope").is_err());
    }
}
