//! Synthetic Zipf-distributed item frequencies, standing in for public
//! transaction corpora.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson, Zipf};

use crate::error::{usage, CliError, Result};

/// Deterministic frequencies `max(1, floor(total * p_i))` with
/// `p_i` proportional to `1 / i^skew`, `i = 1..=n`.
pub fn zipf_counts(n: usize, total: u64, skew: f64) -> Vec<u64> {
    let weights: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-skew)).collect();
    let norm: f64 = weights.iter().sum();
    weights
        .iter()
        .map(|w| ((total as f64 * w / norm).floor() as u64).max(1))
        .collect()
}

/// Writes `records` transactions over items `i0 .. i{n-1}`. Each transaction
/// holds `1 + Poisson(mean_len - 1)` Zipf-drawn items, duplicates removed.
pub fn write_transactions(
    path: &Path,
    items: usize,
    records: u64,
    skew: f64,
    mean_len: f64,
    seed: u64,
) -> Result<()> {
    if items == 0 || records == 0 {
        return Err(usage("need at least one item and one record"));
    }
    let zipf = Zipf::new(items as f64, skew).map_err(|e| usage(format!("zipf: {e}")))?;
    let extra = if mean_len > 1.0 {
        Some(Poisson::new(mean_len - 1.0).map_err(|e| usage(format!("poisson: {e}")))?)
    } else {
        None
    };
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut tx: Vec<u64> = Vec::new();
    for _ in 0..records {
        let len = 1 + extra.as_ref().map_or(0, |p| rng.sample(p) as usize);
        tx.clear();
        tx.extend((0..len).map(|_| zipf.sample(&mut rng) as u64 - 1));
        tx.sort_unstable();
        tx.dedup();
        let line: Vec<String> = tx.iter().map(|i| format!("i{i}")).collect();
        writeln!(out, "{}", line.join(" ")).map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ingest;

    #[test]
    fn counts_follow_the_power_law() {
        let c = zipf_counts(1000, 1_000_000, 1.0);
        assert_eq!(c.len(), 1000);
        assert!(c.windows(2).all(|w| w[0] >= w[1]));
        assert!(c.iter().all(|&x| x >= 1));
        // c_1 / c_10 = 10 up to flooring
        assert!((c[0] as f64 / c[9] as f64 - 10.0).abs() < 0.01);
    }

    #[test]
    fn written_file_ingests() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.dat");
        write_transactions(&path, 50, 2000, 1.1, 4.0, 3).unwrap();
        let ds = ingest(&path).unwrap();
        assert_eq!(ds.n_records, 2000);
        assert!(ds.unique_items() <= 50);
        assert!(ds.counts.iter().all(|&c| c <= 2000));
        let top = ds.item_index["i0"];
        assert_eq!(ds.counts[top], *ds.counts.iter().max().unwrap());
    }
}
