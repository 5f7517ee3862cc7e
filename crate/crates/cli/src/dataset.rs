//! Transaction files: one transaction per line, whitespace-separated item
//! tokens. Each query counts the transactions an item appears in.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use gaptopk::{QueryVector, Rational};

use crate::error::{usage, CliError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransactionDataset {
    pub path: PathBuf,
    pub n_records: u64,
    /// Items in first-appearance order; `items[i]` is query `i`.
    pub items: Vec<String>,
    pub item_index: HashMap<String, usize>,
    /// Transactions containing each item; never above `n_records`.
    pub counts: Vec<u64>,
}

impl TransactionDataset {
    pub fn unique_items(&self) -> usize {
        self.items.len()
    }

    /// Counts on the grid `1/base_denom`.
    pub fn queries(&self, base_denom: u64) -> QueryVector {
        QueryVector::from_counts(&self.counts, base_denom)
    }
}

pub fn ingest(path: &Path) -> Result<TransactionDataset> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io)?;
    ingest_reader(file, path)
}

/// [`ingest`] over any reader; `path` is used only in messages.
pub fn ingest_reader(reader: impl Read, path: &Path) -> Result<TransactionDataset> {
    let mut reader = BufReader::new(reader);
    let mut ds = TransactionDataset {
        path: path.to_path_buf(),
        n_records: 0,
        items: Vec::new(),
        item_index: HashMap::new(),
        counts: Vec::new(),
    };
    let mut buf = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let read = reader
            .read_until(b'\n', &mut buf)
            .map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        if read == 0 {
            break;
        }
        line_no += 1;
        let malformed = |msg: &str| CliError::Malformed {
            path: path.to_path_buf(),
            line: line_no,
            msg: msg.into(),
        };
        let line = std::str::from_utf8(&buf).map_err(|_| malformed("not valid UTF-8"))?;
        seen.clear();
        for token in line.split_whitespace() {
            let next = ds.items.len();
            let idx = *ds.item_index.entry(token.to_owned()).or_insert(next);
            if idx == next {
                ds.items.push(token.to_owned());
                ds.counts.push(0);
            }
            seen.push(idx);
        }
        if seen.is_empty() {
            return Err(malformed("empty transaction"));
        }
        seen.sort_unstable();
        seen.dedup();
        for &i in &seen {
            ds.counts[i] += 1;
        }
        ds.n_records += 1;
    }
    if ds.n_records == 0 {
        return Err(usage(format!("{}: no transactions", path.display())));
    }
    Ok(ds)
}

/// Inline answers such as `"3,2,1/2,0"`, rounded down onto `1/base_denom`.
/// Decimal notation is rejected; use fractions.
pub fn parse_queries(s: &str, base_denom: u64) -> Result<QueryVector> {
    let values = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<Rational>()
                .map_err(|e| usage(format!("query answer {t:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QueryVector::round_down_from(&values, base_denom)?)
}
