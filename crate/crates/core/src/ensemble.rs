//! Strict-majority combination of boundary sets.

use crate::corpus::Segmentation;
use crate::error::{Error, Result};

/// A position is a boundary when more than half of the inputs have one
/// there. With an even number of inputs a tie means no boundary.
pub fn majority_vote(sets: &[Segmentation]) -> Result<Segmentation> {
    let first = sets
        .first()
        .ok_or_else(|| Error::InvalidParams("majority vote over zero segmentations".into()))?;
    let n_chars = first.n_chars();
    if let Some(bad) = sets.iter().find(|s| s.n_chars() != n_chars) {
        return Err(Error::CorpusMismatch(format!(
            "segmentations cover {} and {} characters",
            n_chars,
            bad.n_chars()
        )));
    }
    let mut votes = vec![0u32; n_chars];
    for s in sets {
        for &p in s.positions() {
            votes[p as usize] += 1;
        }
    }
    let k = sets.len() as u32;
    let positions = (0..n_chars as u32).filter(|&p| 2 * votes[p as usize] > k).collect();
    Ok(Segmentation::from_sorted_unchecked(n_chars, positions))
}
