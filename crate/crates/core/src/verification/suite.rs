use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::distributions::{
    bernoulli_exp_mean, bernoulli_mean, check_refinement_consistency, check_scaled_geometric,
    check_truncated_geometric, geometric_gof, shuffle_gof, uniform_gof,
};
use super::equivalence::{mechanism_equivalence, EquivalenceFixture};
use super::exhaustive::{
    check_refinement_identity, check_rounddown_sensitivity, check_rounding_identity, ExactReport,
};
use super::stats::{GofReport, MomentCheck};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::scaled::Resolution;

/// Geometric parameters `(s, t)` of the sampler suite.
pub const GEOMETRIC_CASES: [(u64, u64); 4] = [(1, 1), (1, 10), (1, 40), (3, 2)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemmas,
    Samplers,
    Equivalence,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemmas" => Ok(Suite::Lemmas),
            "samplers" => Ok(Suite::Samplers),
            "equivalence" => Ok(Suite::Equivalence),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidArgument(format!(
                "unknown suite {other:?}; expected lemmas, samplers, equivalence or all"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Lemmas => "lemmas",
            Suite::Samplers => "samplers",
            Suite::Equivalence => "equivalence",
            Suite::All => "all",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Draws per distributional check.
    pub samples: u64,
    /// Runs per side for each equivalence fixture.
    pub equivalence_runs: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            samples: 300_000,
            equivalence_runs: 200_000,
        }
    }
}

/// One line of a suite report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    fn exact(suite: &str, name: impl Into<String>, r: &ExactReport) -> Self {
        Self {
            suite: suite.into(),
            name: name.into(),
            pass: r.pass(),
            statistic: None,
            p_value: None,
            detail: match &r.counterexample {
                None => format!("{} cases, no counterexample", r.checked),
                Some(c) => format!("counterexample after {} cases: {c}", r.checked),
            },
        }
    }

    fn gof(suite: &str, name: impl Into<String>, r: &GofReport) -> Self {
        Self {
            suite: suite.into(),
            name: name.into(),
            pass: r.pass,
            statistic: Some(r.statistic),
            p_value: Some(r.p_value),
            detail: format!("chi-square dof {}", r.dof),
        }
    }

    fn moment(suite: &str, m: &MomentCheck) -> Self {
        Self {
            suite: suite.into(),
            name: m.name.clone(),
            pass: m.pass,
            statistic: Some(m.z()),
            p_value: None,
            detail: format!(
                "observed {:.6}, expected {:.6}, z {:.2}",
                m.observed,
                m.expected,
                m.z()
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

fn r(s: &str) -> Rational {
    s.parse().expect("literal fraction")
}

fn lemmas() -> Result<Vec<CheckResult>> {
    const S: &str = "lemmas";
    let mut out = Vec::new();
    for gamma in ["1/10", "1/20"] {
        let rep = check_rounding_identity(&r("1/100"), &r("3"), &r(gamma))?;
        out.push(CheckResult::exact(
            S,
            format!("rounding identity, gamma {gamma}"),
            &rep,
        ));
    }
    for gamma in ["1/10", "1/4"] {
        let rep = check_rounddown_sensitivity(1, &r(gamma), &r("1/40"), &r("3"))?;
        out.push(CheckResult::exact(
            S,
            format!("round-down sensitivity, gamma {gamma}"),
            &rep,
        ));
    }
    let rep = check_refinement_identity(Resolution::new(10, 10)?, 5_000, 1)?;
    out.push(CheckResult::exact(S, "refinement identity", &rep));
    Ok(out)
}

fn samplers(opts: &SuiteOptions) -> Result<Vec<CheckResult>> {
    const S: &str = "samplers";
    let n = opts.samples;
    let seed = opts.seed;
    let mut out = Vec::new();
    for (i, &(s, t)) in GEOMETRIC_CASES.iter().enumerate() {
        let seed = seed + i as u64;
        out.push(CheckResult::gof(
            S,
            format!("geometric({s},{t})"),
            &geometric_gof(s, t, n, seed)?,
        ));
        out.push(CheckResult::moment(
            S,
            &bernoulli_exp_mean(s, t, n, seed + 100)?,
        ));
    }
    out.push(CheckResult::gof(
        S,
        "uniform_below(6)",
        &uniform_gof(6, n, seed + 200)?,
    ));
    out.push(CheckResult::moment(
        S,
        &bernoulli_mean(1, 3, n, seed + 201)?,
    ));
    out.push(CheckResult::gof(
        S,
        "shuffle of 3",
        &shuffle_gof(3, n, seed + 202)?,
    ));

    let beta = Rational::from_integer(2);
    let sg = check_scaled_geometric(&beta, &r("1/10"), n, seed + 300)?;
    out.push(CheckResult::gof(S, "scaled geometric", &sg.gof));
    out.push(CheckResult::moment(S, &sg.mean));
    out.push(CheckResult {
        suite: S.into(),
        name: "scaled geometric mode".into(),
        pass: sg.mode == 0,
        statistic: None,
        p_value: None,
        detail: format!("mode {}", sg.mode),
    });
    out.push(CheckResult::gof(
        S,
        "truncated geometric (1/20 mod 10)",
        &check_truncated_geometric(1, 20, 10, n, seed + 301)?,
    ));
    let rc = check_refinement_consistency(&r("1/10"), 10, &beta, n, seed + 302)?;
    out.push(CheckResult::exact(S, "refinement identity", &rc.exact));
    out.push(CheckResult::gof(S, "refinement increment", &rc.increment));
    out.push(CheckResult::gof(
        S,
        "refinement independence",
        &rc.independence,
    ));
    Ok(out)
}

fn equivalence(opts: &SuiteOptions) -> Result<Vec<CheckResult>> {
    const S: &str = "equivalence";
    let mut out = Vec::new();
    for (i, fx) in EquivalenceFixture::standard().iter().enumerate() {
        let rep = mechanism_equivalence(fx, opts.equivalence_runs, opts.seed + 1000 * i as u64)?;
        out.push(CheckResult {
            suite: S.into(),
            name: format!("{} total variation", fx.name),
            pass: rep.tv < rep.threshold,
            statistic: Some(rep.tv),
            p_value: None,
            detail: format!(
                "threshold {}, noise floor {:.4}, bucket width {}, tail above {}, {} cells",
                rep.threshold, rep.noise_floor, rep.bucket_width, rep.tail_cutoff, rep.cells
            ),
        });
        out.push(CheckResult::gof(
            S,
            format!("{} two-sample chi-square", fx.name),
            &rep.chi_square,
        ));
        out.extend(rep.marginals.iter().map(|m| {
            let mut c = CheckResult::moment(S, m);
            c.name = format!("{} {}", fx.name, m.name);
            c
        }));
    }
    Ok(out)
}

/// Runs a suite. Statistical checks use fixed seeds derived from `opts.seed`.
pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Lemmas => lemmas()?,
        Suite::Samplers => samplers(opts)?,
        Suite::Equivalence => equivalence(opts)?,
        Suite::All => {
            let mut all = lemmas()?;
            all.extend(samplers(opts)?);
            all.extend(equivalence(opts)?);
            all
        }
    };
    let pass = checks.iter().all(|c| c.pass);
    Ok(SuiteReport {
        suite,
        checks,
        pass,
    })
}
