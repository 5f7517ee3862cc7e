use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use clap::ValueEnum;
use gaptopk::{ideal_baseline_top_k_gap, secure_top_k_gap, MechanismConfig, QueryVector, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::run::{ms, PhaseMs};

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, ValueEnum, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum BenchVariant {
    /// Secure mechanism refining every query.
    Secure,
    /// Secure mechanism with early query pruning.
    OptSecure,
    /// Unrounded f64 mechanism.
    Baseline,
}

impl BenchVariant {
    pub fn name(self) -> &'static str {
        match self {
            BenchVariant::Secure => "secure",
            BenchVariant::OptSecure => "opt-secure",
            BenchVariant::Baseline => "baseline",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchParams {
    pub ks: Vec<usize>,
    pub trials: usize,
    pub variants: Vec<BenchVariant>,
    pub epsilon: Rational,
    pub base_denom: u64,
    pub refine_factor: u64,
    pub master_seed: u64,
}

/// Mean invocations per run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplerMeans {
    pub geometric: f64,
    pub bernoulli: f64,
    pub uniform: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub k: usize,
    pub variant: BenchVariant,
    pub trials: usize,
    pub mean_ms: f64,
    pub stddev_ms: f64,
    /// Mean per-phase time; secure variants only.
    pub phase_ms: Option<PhaseMs>,
    pub sampler: Option<SamplerMeans>,
    /// Runs by final refinement level; secure variants only.
    pub refine_levels: BTreeMap<u32, u64>,
    /// Runs whose geometric count equals `n + sum of pool sizes`.
    pub count_identity_runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub dataset: String,
    pub n: usize,
    pub master_seed: u64,
    pub rows: Vec<BenchRow>,
}

/// One seed per trial, shared by every `(k, variant)` cell.
pub fn trial_seeds(master: u64, trials: usize) -> Vec<u64> {
    let mut rng = ChaCha12Rng::seed_from_u64(master);
    (0..trials).map(|_| rng.random()).collect()
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Times `trials` runs of every `(k, variant)`. Only the mechanism call is
/// inside the timer; trials run sequentially so timings do not contend.
pub fn bench(q: &QueryVector, dataset: &str, p: &BenchParams) -> Result<BenchReport> {
    if p.trials == 0 {
        return Err(usage("trials must be at least 1"));
    }
    let n = q.len();
    let seeds = trial_seeds(p.master_seed, p.trials);
    let mut rows = Vec::new();
    for &k in &p.ks {
        if n < k + 2 {
            return Err(usage(format!(
                "k = {k} needs at least {} queries, got {n}",
                k + 2
            )));
        }
        let base = MechanismConfig::new(k, p.epsilon.clone())?
            .with_resolution(p.base_denom, p.refine_factor)?;
        for &variant in &p.variants {
            let mut times = Vec::with_capacity(p.trials);
            let mut phases = PhaseMs::default();
            let mut sampler = SamplerMeans::default();
            let mut levels = BTreeMap::new();
            let mut identity = 0;
            for &seed in &seeds {
                let cfg = base.clone().with_seed(seed);
                match variant {
                    BenchVariant::Baseline => {
                        let start = Instant::now();
                        let out = ideal_baseline_top_k_gap(q, &cfg)?;
                        times.push(ms(start.elapsed()));
                        std::hint::black_box(out);
                    }
                    BenchVariant::Secure | BenchVariant::OptSecure => {
                        let cfg = cfg.with_prune(variant == BenchVariant::OptSecure);
                        let start = Instant::now();
                        let out = secure_top_k_gap(q, &cfg)?;
                        times.push(ms(start.elapsed()));
                        let ph = PhaseMs::from(out.timings);
                        phases.initial += ph.initial;
                        phases.ties += ph.ties;
                        phases.gaps += ph.gaps;
                        sampler.geometric += out.stats.geometric_calls as f64;
                        sampler.bernoulli += out.stats.bernoulli_calls as f64;
                        sampler.uniform += out.stats.uniform_calls as f64;
                        *levels.entry(out.refine_levels).or_insert(0) += 1;
                        let refined: usize = out.pool_sizes.iter().sum();
                        identity += usize::from(out.stats.geometric_calls == (n + refined) as u64);
                    }
                }
            }
            let t = p.trials as f64;
            let (mean_ms, stddev_ms) = mean_sd(&times);
            let secure = variant != BenchVariant::Baseline;
            rows.push(BenchRow {
                k,
                variant,
                trials: p.trials,
                mean_ms,
                stddev_ms,
                phase_ms: secure.then(|| PhaseMs {
                    initial: phases.initial / t,
                    ties: phases.ties / t,
                    gaps: phases.gaps / t,
                }),
                sampler: secure.then(|| SamplerMeans {
                    geometric: sampler.geometric / t,
                    bernoulli: sampler.bernoulli / t,
                    uniform: sampler.uniform / t,
                }),
                refine_levels: levels,
                count_identity_runs: identity,
            });
        }
    }
    Ok(BenchReport {
        dataset: dataset.to_owned(),
        n,
        master_seed: p.master_seed,
        rows,
    })
}

impl BenchReport {
    pub fn row(&self, k: usize, variant: BenchVariant) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.k == k && r.variant == variant)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "dataset {} (n = {}), master seed {}",
            self.dataset, self.n, self.master_seed
        );
        let _ = writeln!(
            s,
            "{:>6}  {:<10}  {:>10}  {:>9}  {:>10}  {:>9}  {:>9}  {:>10}  {:>8}  {:>8}  levels",
            "k",
            "variant",
            "mean ms",
            "sd ms",
            "top-k ms",
            "ties ms",
            "gaps ms",
            "geom/run",
            "bern/g",
            "unif/g"
        );
        // Columns a variant does not measure print as "-".
        let cell =
            |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |x| format!("{x:.prec$}"));
        for r in &self.rows {
            let ph = r.phase_ms;
            let sm = r.sampler.filter(|m| m.geometric > 0.0);
            let levels: Vec<String> = r
                .refine_levels
                .iter()
                .map(|(l, c)| format!("{l}:{c}"))
                .collect();
            let _ = writeln!(
                s,
                "{:>6}  {:<10}  {:>10.3}  {:>9.3}  {:>10}  {:>9}  {:>9}  {:>10}  {:>8}  {:>8}  {}",
                r.k,
                r.variant.name(),
                r.mean_ms,
                r.stddev_ms,
                cell(ph.map(|p| p.initial), 3),
                cell(ph.map(|p| p.ties), 3),
                cell(ph.map(|p| p.gaps), 3),
                cell(sm.map(|m| m.geometric), 1),
                cell(sm.map(|m| m.bernoulli / m.geometric), 2),
                cell(sm.map(|m| m.uniform / m.geometric), 2),
                levels.join(" ")
            );
        }
        s
    }
}
