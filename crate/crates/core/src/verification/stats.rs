use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Significance level for every statistical check.
pub const ALPHA: f64 = 0.001;

/// Minimum expected count per chi-square cell.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub statistic: f64,
    pub p_value: f64,
    pub dof: u64,
    /// `p_value > ALPHA`.
    pub pass: bool,
}

impl GofReport {
    pub fn from_statistic(statistic: f64, dof: u64) -> Self {
        let p_value = chi_square_sf(statistic, dof);
        Self {
            statistic,
            p_value,
            dof,
            pass: p_value > ALPHA,
        }
    }

    /// Report for a degenerate test with a single cell.
    pub fn trivial(pass: bool) -> Self {
        Self {
            statistic: 0.0,
            p_value: if pass { 1.0 } else { 0.0 },
            dof: 0,
            pass,
        }
    }
}

/// A sample mean compared with its analytic value at three standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub std_err: f64,
    pub pass: bool,
}

impl MomentCheck {
    pub fn new(name: impl Into<String>, observed: f64, expected: f64, std_err: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            expected,
            std_err,
            pass: (observed - expected).abs() <= 3.0 * std_err,
        }
    }

    /// Bernoulli proportion `hits / n` against probability `p`.
    pub fn proportion(name: impl Into<String>, hits: u64, n: u64, p: f64) -> Self {
        let se = (p * (1.0 - p) / n as f64).sqrt();
        Self::new(name, hits as f64 / n as f64, p, se)
    }

    pub fn z(&self) -> f64 {
        if self.std_err == 0.0 {
            0.0
        } else {
            (self.observed - self.expected) / self.std_err
        }
    }
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(statistic: f64, dof: u64) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .sf(statistic)
}

/// Groups consecutive cells so that each group's weight reaches `min`. A short
/// final run joins the group before it. Returns the group of every cell.
fn group_cells(weights: &[f64], min: f64) -> (Vec<usize>, usize) {
    let mut group = vec![0; weights.len()];
    let mut current = 0;
    let mut acc = 0.0;
    let mut closed = 0;
    for (i, &w) in weights.iter().enumerate() {
        group[i] = current;
        acc += w;
        if acc >= min {
            closed = current + 1;
            current += 1;
            acc = 0.0;
        }
    }
    let groups = closed.max(1);
    for g in &mut group {
        *g = (*g).min(groups - 1);
    }
    (group, groups)
}

/// Pearson goodness of fit. `expected` holds counts (summing to the sample
/// size, tail cell included); adjacent cells are merged until each expects at
/// least five observations.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> GofReport {
    assert_eq!(observed.len(), expected.len());
    let (group, groups) = group_cells(expected, MIN_EXPECTED);
    let mut obs = vec![0.0; groups];
    let mut exp = vec![0.0; groups];
    for i in 0..observed.len() {
        obs[group[i]] += observed[i] as f64;
        exp[group[i]] += expected[i];
    }
    let statistic = obs
        .iter()
        .zip(&exp)
        .filter(|(_, &e)| e > 0.0)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    GofReport::from_statistic(statistic, groups as u64 - 1)
}

/// Goodness of fit of non-negative integer samples against a PMF on
/// `{0, 1, ...}`, with an upper tail cell.
pub fn chi_square_gof_pmf(
    samples: &BTreeMap<u64, u64>,
    n: u64,
    pmf: impl Fn(u64) -> f64,
) -> GofReport {
    let nf = n as f64;
    let mut expected = Vec::new();
    let mut mass = 0.0;
    let mut m = 0;
    loop {
        let e = nf * pmf(m);
        if e < MIN_EXPECTED && m > 0 {
            break;
        }
        expected.push(e);
        mass += e;
        m += 1;
    }
    expected.push((nf - mass).max(0.0));
    let cut = m;
    let mut observed = vec![0u64; expected.len()];
    for (&v, &c) in samples {
        observed[v.min(cut) as usize] += c;
    }
    chi_square_gof(&observed, &expected)
}

/// Chi-square test of independence on a contingency table of counts. Rows
/// and then columns are merged until every expected cell reaches five.
pub fn chi_square_independence(table: &[Vec<u64>]) -> GofReport {
    let cols = table.first().map_or(0, Vec::len);
    let total: f64 = table.iter().flatten().map(|&c| c as f64).sum();
    if total == 0.0 || cols == 0 {
        return GofReport::trivial(true);
    }
    let col_tot: Vec<f64> = (0..cols)
        .map(|j| table.iter().map(|r| r[j] as f64).sum())
        .collect();
    let row_tot: Vec<f64> = table
        .iter()
        .map(|r| r.iter().map(|&c| c as f64).sum())
        .collect();
    // Column groups hold at least 1% of the mass; row groups are then sized
    // so that even the thinnest column expects five per cell.
    let (cg, ncols) = group_cells(&col_tot, total * 0.01);
    let mut merged_col = vec![0.0; ncols];
    for j in 0..cols {
        merged_col[cg[j]] += col_tot[j];
    }
    let min_col_share = merged_col.iter().cloned().fold(f64::INFINITY, f64::min) / total;
    let (rg, nrows) = group_cells(&row_tot, MIN_EXPECTED / min_col_share);
    let mut cells = vec![vec![0.0; ncols]; nrows];
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            cells[rg[i]][cg[j]] += c as f64;
        }
    }
    let rows: Vec<f64> = cells.iter().map(|r| r.iter().sum()).collect();
    let mut statistic = 0.0;
    for (i, row) in cells.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rows[i] * merged_col[j] / total;
            if e > 0.0 {
                statistic += (o - e).powi(2) / e;
            }
        }
    }
    let dof = (nrows.saturating_sub(1) * ncols.saturating_sub(1)) as u64;
    GofReport::from_statistic(statistic, dof)
}

/// Two-sample chi-square homogeneity test over shared cells. Cells with fewer
/// than ten combined observations are pooled into one.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> GofReport {
    assert_eq!(a.len(), b.len());
    let na: f64 = a.iter().map(|&c| c as f64).sum();
    let nb: f64 = b.iter().map(|&c| c as f64).sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut rare = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        if x + y < 2 * MIN_EXPECTED as u64 {
            rare.0 += x as f64;
            rare.1 += y as f64;
        } else {
            cells.push((x as f64, y as f64));
        }
    }
    if rare.0 + rare.1 > 0.0 {
        cells.push(rare);
    }
    if cells.len() < 2 || na == 0.0 || nb == 0.0 {
        return GofReport::trivial(true);
    }
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let statistic = cells
        .iter()
        .map(|&(x, y)| (ka * x - kb * y).powi(2) / (x + y))
        .sum();
    GofReport::from_statistic(statistic, cells.len() as u64 - 1)
}

/// One observed mechanism output: selected indices and gaps in `gamma_star`
/// units. Bucketed gaps use [`Outcome::TAIL`] for the pooled tail.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Outcome {
    pub indices: Vec<usize>,
    pub gaps: Vec<u64>,
}

impl Outcome {
    pub const TAIL: u64 = u64::MAX;
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.indices.iter().map(|i| (i + 1).to_string()).collect();
        let gaps: Vec<String> = self
            .gaps
            .iter()
            .map(|&g| {
                if g == Self::TAIL {
                    "tail".into()
                } else {
                    g.to_string()
                }
            })
            .collect();
        write!(f, "({}; {})", idx.join(","), gaps.join(","))
    }
}

/// Outcome counts. `total` always equals the sum of `counts`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EmpiricalDistribution {
    counts: BTreeMap<Outcome, u64>,
    total: u64,
}

impl EmpiricalDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, outcome: Outcome) {
        *self.counts.entry(outcome).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: EmpiricalDistribution) {
        for (o, c) in other.counts {
            *self.counts.entry(o).or_insert(0) += c;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<Outcome, u64> {
        &self.counts
    }

    pub fn count(&self, outcome: &Outcome) -> u64 {
        self.counts.get(outcome).copied().unwrap_or(0)
    }

    pub fn probability(&self, outcome: &Outcome) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(outcome) as f64 / self.total as f64
        }
    }

    /// Image under a cell-merging map.
    pub fn map(&self, f: impl Fn(&Outcome) -> Outcome) -> Self {
        let mut out = Self::new();
        for (o, &c) in &self.counts {
            *out.counts.entry(f(o)).or_insert(0) += c;
        }
        out.total = self.total;
        out
    }

    pub fn tv_distance(&self, other: &Self) -> f64 {
        let mut keys: Vec<&Outcome> = self.counts.keys().chain(other.counts.keys()).collect();
        keys.sort();
        keys.dedup();
        0.5 * keys
            .into_iter()
            .map(|o| (self.probability(o) - other.probability(o)).abs())
            .sum::<f64>()
    }

    /// Count vectors of both distributions over the union of their outcomes.
    pub fn aligned_counts(&self, other: &Self) -> (Vec<u64>, Vec<u64>) {
        let mut keys: Vec<&Outcome> = self.counts.keys().chain(other.counts.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|o| (self.count(o), other.count(o)))
            .unzip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_tail_values() {
        // Reference values of the chi-square survival function.
        assert!((chi_square_sf(3.841_458_820_694_124, 1) - 0.05).abs() < 1e-9);
        assert!((chi_square_sf(18.307_038_053_275_14, 10) - 0.05).abs() < 1e-9);
        assert_eq!(chi_square_sf(5.0, 0), 1.0);
    }

    #[test]
    fn perfect_fit_has_zero_statistic() {
        let r = chi_square_gof(&[10, 20, 30], &[10.0, 20.0, 30.0]);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.dof, 2);
        assert!(r.pass);
    }

    #[test]
    fn small_cells_are_merged() {
        // cells 2 and 3 expect 2 + 2 < 5 and join cell 1
        let r = chi_square_gof(&[50, 10, 2, 2], &[50.0, 10.0, 2.0, 2.0]);
        assert_eq!(r.dof, 1);
        let (g, n) = group_cells(&[1.0, 1.0, 1.0], 5.0);
        assert_eq!((g, n), (vec![0, 0, 0], 1));
    }

    #[test]
    fn gross_misfit_fails() {
        let r = chi_square_gof(&[900, 100], &[500.0, 500.0]);
        assert!(!r.pass);
    }

    #[test]
    fn independence_detects_dependence() {
        let indep = vec![vec![100, 200], vec![300, 600]];
        assert!(chi_square_independence(&indep).statistic < 1e-9);
        let dep = vec![vec![500, 10], vec![10, 500]];
        assert!(!chi_square_independence(&dep).pass);
    }

    #[test]
    fn two_sample_and_tv() {
        let mut a = EmpiricalDistribution::new();
        let mut b = EmpiricalDistribution::new();
        let o = |i| Outcome {
            indices: vec![i],
            gaps: vec![0],
        };
        for _ in 0..300 {
            a.record(o(0));
            b.record(o(1));
        }
        for _ in 0..100 {
            a.record(o(1));
            b.record(o(0));
        }
        assert!((a.tv_distance(&b) - 0.5).abs() < 1e-12);
        let (x, y) = a.aligned_counts(&b);
        assert!(!chi_square_two_sample(&x, &y).pass);
        assert_eq!(a.tv_distance(&a), 0.0);
        let merged = a.map(|_| o(7));
        assert_eq!(merged.count(&o(7)), 400);
        assert_eq!(o(0).to_string(), "(1; 0)");
    }
}
