use std::time::{Duration, Instant};

use clap::ValueEnum;
use gaptopk::{
    ideal_baseline_top_k_gap, rounded_reference_top_k_gap, secure_top_k_gap_with_key,
    MechanismConfig, PhaseTimings, QueryVector, Rational, SamplerStats, StreamKey,
};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Floating-point free mechanism.
    Secure,
    /// f64 exponential noise with rounded gaps. Insecure; testing only.
    RoundedReference,
    /// f64 exponential noise with raw gaps. Insecure; benchmarking only.
    IdealBaseline,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Secure => "secure",
            Variant::RoundedReference => "rounded-reference",
            Variant::IdealBaseline => "ideal-baseline",
        }
    }
}

/// Parses `"num/den"` or an integer. Decimals are rejected.
pub fn parse_epsilon(s: &str) -> Result<Rational> {
    let eps: Rational = s
        .parse()
        .map_err(|e| usage(format!("epsilon {s:?}: {e} (write it as num/den)")))?;
    if !eps.is_positive() {
        return Err(usage("epsilon must be positive"));
    }
    Ok(eps)
}

/// Parses `gamma_star = 1/d` and returns `d`.
pub fn parse_gamma(s: &str) -> Result<u64> {
    let g: Rational = s
        .parse()
        .map_err(|e| usage(format!("gamma {s:?}: {e} (write it as 1/d)")))?;
    g.reciprocal_integer()
        .and_then(|d| u64::try_from(d).ok())
        .ok_or_else(|| usage(format!("gamma {s} must be 1/d for a positive integer d")))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunParams {
    pub k: usize,
    pub epsilon: Rational,
    pub base_denom: u64,
    pub refine_factor: u64,
    /// `None` draws a fresh key from the operating system.
    pub seed: Option<u64>,
    pub variant: Variant,
    pub prune: bool,
}

impl RunParams {
    pub fn config(&self) -> Result<MechanismConfig> {
        Ok(MechanismConfig::new(self.k, self.epsilon.clone())?
            .with_resolution(self.base_denom, self.refine_factor)?
            .with_prune(self.prune)
            .with_seed(self.seed.unwrap_or(0)))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseMs {
    pub initial: f64,
    pub ties: f64,
    pub gaps: f64,
}

pub(crate) fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

impl From<PhaseTimings> for PhaseMs {
    fn from(t: PhaseTimings) -> Self {
        Self {
            initial: ms(t.initial),
            ties: ms(t.ties),
            gaps: ms(t.gaps),
        }
    }
}

/// JSON output of `run`. Indices are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub variant: Variant,
    pub k: usize,
    pub epsilon: String,
    pub gamma_star: String,
    pub indices: Vec<usize>,
    /// Exact multiples of `gamma_star` for the secure and rounded variants;
    /// shortest round-trip `f64` text for the ideal baseline.
    pub gaps: Vec<String>,
    pub refine_levels: u32,
    pub sampler_stats: SamplerStats,
    /// The ideal baseline has no phases; its whole run is under `initial`.
    pub phase_ms: PhaseMs,
}

fn fraction(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn run(q: &QueryVector, p: &RunParams) -> Result<RunOutput> {
    let n = q.len();
    if p.variant == Variant::Secure && n < p.k + 2 {
        return Err(usage(format!(
            "k = {} needs at least k + 2 = {} queries, got {n}",
            p.k,
            p.k + 2
        )));
    }
    if n < p.k + 1 {
        return Err(usage(format!(
            "k = {} needs at least {} queries, got {n}",
            p.k,
            p.k + 1
        )));
    }
    let mut cfg = p.config()?;
    let head = |indices: Vec<usize>, gaps, refine_levels, sampler_stats, phase_ms| RunOutput {
        variant: p.variant,
        k: p.k,
        epsilon: fraction(&p.epsilon),
        gamma_star: format!("1/{}", p.base_denom),
        indices: indices.into_iter().map(|i| i + 1).collect(),
        gaps,
        refine_levels,
        sampler_stats,
        phase_ms,
    };
    Ok(match p.variant {
        Variant::Secure => {
            let key = match p.seed {
                Some(s) => StreamKey::from_seed(s),
                None => StreamKey::from_os_entropy(),
            };
            let out = secure_top_k_gap_with_key(q, &cfg, &key)?;
            head(
                out.indices(),
                out.gaps().iter().map(|g| g.to_exact_string()).collect(),
                out.refine_levels,
                out.stats,
                out.timings.into(),
            )
        }
        Variant::RoundedReference => {
            cfg.seed = p.seed.unwrap_or_else(rand::random);
            let out = rounded_reference_top_k_gap(q, &cfg)?;
            head(
                out.indices(),
                out.gaps().iter().map(|g| g.to_exact_string()).collect(),
                0,
                SamplerStats::default(),
                out.timings.into(),
            )
        }
        Variant::IdealBaseline => {
            cfg.seed = p.seed.unwrap_or_else(rand::random);
            let start = Instant::now();
            let out = ideal_baseline_top_k_gap(q, &cfg)?;
            let phase_ms = PhaseMs {
                initial: ms(start.elapsed()),
                ..PhaseMs::default()
            };
            let gaps = out.gaps[..p.k].iter().map(|g| g.to_string()).collect();
            head(out.indices, gaps, 0, SamplerStats::default(), phase_ms)
        }
    })
}

/// Reads a secure or rounded gap string back into `gamma_star` units.
pub fn gap_units(s: &str, base_denom: u64) -> Result<BigUint> {
    Ok(gaptopk::GapValue::parse_exact(s, base_denom)?
        .units()
        .clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k: usize, variant: Variant) -> RunParams {
        RunParams {
            k,
            epsilon: parse_epsilon("1/1").unwrap(),
            base_denom: 10,
            refine_factor: 10,
            seed: Some(3),
            variant,
            prune: true,
        }
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_gamma("1/10").unwrap(), 10);
        assert_eq!(parse_gamma("1").unwrap(), 1);
        assert!(parse_gamma("2/10").is_ok());
        assert!(parse_gamma("3/10").is_err());
        assert!(parse_gamma("0.1").is_err());
        assert!(parse_epsilon("0.5").is_err());
        assert!(parse_epsilon("0/1").is_err());
        assert_eq!(parse_epsilon("2/4").unwrap(), "1/2".parse().unwrap());
    }

    #[test]
    fn secure_needs_k_plus_two() {
        let q = QueryVector::from_counts(&[5, 4, 3], 10);
        assert!(run(&q, &params(2, Variant::Secure)).is_err());
        assert!(run(&q, &params(1, Variant::Secure)).is_ok());
        assert!(run(&q, &params(2, Variant::RoundedReference)).is_ok());
    }

    #[test]
    fn output_is_one_based_and_exact() {
        let q = QueryVector::from_counts(&[0, 50, 0, 0], 10);
        for v in [
            Variant::Secure,
            Variant::RoundedReference,
            Variant::IdealBaseline,
        ] {
            let out = run(&q, &params(1, v)).unwrap();
            assert_eq!(out.indices, vec![2]);
            assert_eq!(out.gaps.len(), 1);
            assert_eq!(out.epsilon, "1/1");
            assert_eq!(out.gamma_star, "1/10");
        }
        let out = run(&q, &params(1, Variant::Secure)).unwrap();
        assert!(gap_units(&out.gaps[0], 10).is_ok());
    }
}
