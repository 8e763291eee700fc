use super::edit::wer;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramBin {
    pub index: usize,
    pub low: f64,
    pub count: usize,
}

/// Histogram of sentence-level WER. Bins `[k·w, (k+1)·w)` run from zero to
/// the bin holding the largest value; empty input gives no bins.
pub fn wer_histogram<T: PartialEq, H: AsRef<[T]>, R: AsRef<[T]>>(
    pairs: &[(H, R)],
    bin_width: f64,
) -> Result<Vec<HistogramBin>> {
    if !(bin_width > 0.0) {
        return Err(crate::Error::Usage("bin width must be positive".into()));
    }
    let mut counts: Vec<usize> = Vec::new();
    for (h, r) in pairs {
        let w = wer(h.as_ref(), r.as_ref())?;
        let k = (w / bin_width + 1e-9).floor() as usize;
        if counts.len() <= k {
            counts.resize(k + 1, 0);
        }
        counts[k] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(index, count)| HistogramBin {
            index,
            low: index as f64 * bin_width,
            count,
        })
        .collect())
}

pub fn render_histogram(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_low\tcount\n");
    for b in bins {
        out.push_str(&format!("{:.4}\t{}\n", b.low, b.count));
    }
    out
}
