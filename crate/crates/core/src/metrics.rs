//! Partition agreement scores.

use std::collections::BTreeMap;

use crate::error::{MfpcError, Result};

struct Contingency {
    cells: BTreeMap<(usize, usize), usize>,
    rows: BTreeMap<usize, usize>,
    cols: BTreeMap<usize, usize>,
    n: usize,
}

fn contingency(truth: &[usize], pred: &[usize]) -> Result<Contingency> {
    if truth.len() != pred.len() {
        return Err(MfpcError::LengthMismatch {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    if truth.len() < 2 {
        return Err(MfpcError::InvalidConfig(
            "partition scores need at least two samples".into(),
        ));
    }
    let mut table = Contingency {
        cells: BTreeMap::new(),
        rows: BTreeMap::new(),
        cols: BTreeMap::new(),
        n: truth.len(),
    };
    for (&a, &b) in truth.iter().zip(pred) {
        *table.cells.entry((a, b)).or_default() += 1;
        *table.rows.entry(a).or_default() += 1;
        *table.cols.entry(b).or_default() += 1;
    }
    Ok(table)
}

fn pairs(n: usize) -> u128 {
    let n = n as u128;
    n * n.saturating_sub(1) / 2
}

/// Sum in ascending order, so that the result does not depend on how the
/// clusters happen to be numbered.
fn ordered_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

/// Adjusted Rand index (Hubert and Arabie). Defined as 1 when both
/// partitions are trivial in the same way and the index is undefined.
pub fn ari(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let t = contingency(truth, pred)?;
    let index = t.cells.values().map(|&c| pairs(c)).sum::<u128>() as f64;
    let row_pairs = t.rows.values().map(|&c| pairs(c)).sum::<u128>() as f64;
    let col_pairs = t.cols.values().map(|&c| pairs(c)).sum::<u128>() as f64;
    let expected = row_pairs * col_pairs / pairs(t.n) as f64;
    let max = 0.5 * (row_pairs + col_pairs);
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

/// Normalised mutual information with the arithmetic mean of the two
/// entropies as normaliser (natural logarithms).
///
/// Two single-cluster partitions score 1; a single cluster against several
/// scores 0.
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let t = contingency(truth, pred)?;
    let n = t.n as f64;
    let entropy = |counts: &BTreeMap<usize, usize>| -> f64 {
        ordered_sum(
            counts
                .values()
                .map(|&c| {
                    let p = c as f64 / n;
                    -p * p.ln()
                })
                .collect(),
        )
    };
    let (h_true, h_pred) = (entropy(&t.rows), entropy(&t.cols));
    if t.rows.len() == 1 && t.cols.len() == 1 {
        return Ok(1.0);
    }
    if t.rows.len() == 1 || t.cols.len() == 1 {
        return Ok(0.0);
    }
    let mi = ordered_sum(
        t.cells
            .iter()
            .map(|(&(a, b), &c)| {
                let joint = c as f64 / n;
                let pa = t.rows[&a] as f64 / n;
                let pb = t.cols[&b] as f64 / n;
                joint * (joint / (pa * pb)).ln()
            })
            .collect(),
    );
    let score = mi / (0.5 * (h_true + h_pred));
    Ok(score.clamp(0.0, 1.0))
}
