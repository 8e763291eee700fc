use std::fmt::Write as _;

use super::eval::Evaluation;
use crate::corpus::Split;
use crate::metrics::paired_randomization_test;
use crate::rng::derive_seed;
use crate::{Error, Result};

/// One evaluated system on one split, ready for reporting.
#[derive(Clone, Debug)]
pub struct ScoredRun {
    pub name: String,
    pub split: Split,
    pub seed: u64,
    pub config_hash: String,
    pub evaluation: Evaluation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub split: Split,
    pub bleu: f64,
    pub ter: f64,
    pub wer: f64,
    /// Paired randomization p-value of BLEU against the baseline.
    pub p_value: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationReport {
    pub corpus_hash: String,
    pub baseline: String,
    pub rows: Vec<ReportRow>,
}

pub const TSV_HEADER: &str = "variant\tsplit\tBLEU\tTER\tWER\tp_vs_baseline\tseed\tconfig_hash";

/// Builds report rows; every non-baseline run is tested against the
/// baseline run on the same split. With a single system no test is run.
pub fn build_report(
    runs: &[ScoredRun],
    baseline: &str,
    corpus_hash: &str,
    trials: usize,
    seed: u64,
) -> Result<EvaluationReport> {
    if runs.is_empty() {
        return Err(Error::Usage("report needs at least one row".into()));
    }
    let single_system = runs.iter().all(|r| r.name == runs[0].name);
    if !single_system && !runs.iter().any(|r| r.name == baseline) {
        return Err(Error::Usage(format!("unknown baseline {baseline:?}")));
    }
    let mut rows = Vec::with_capacity(runs.len());
    for (k, run) in runs.iter().enumerate() {
        let p_value = if single_system || run.name == baseline {
            None
        } else {
            let base = runs
                .iter()
                .find(|b| b.name == baseline && b.split == run.split)
                .ok_or_else(|| Error::Usage(format!("baseline {baseline:?} has no {} row", run.split.name())))?;
            Some(paired_randomization_test(
                &run.evaluation.sentence_stats,
                &base.evaluation.sentence_stats,
                trials,
                derive_seed(seed, k as u64),
            )?)
        };
        rows.push(ReportRow {
            name: run.name.clone(),
            split: run.split,
            bleu: run.evaluation.bleu,
            ter: run.evaluation.ter,
            wer: run.evaluation.wer,
            p_value,
            seed: run.seed,
            config_hash: run.config_hash.clone(),
        });
    }
    Ok(EvaluationReport {
        corpus_hash: corpus_hash.to_string(),
        baseline: baseline.to_string(),
        rows,
    })
}

impl EvaluationReport {
    /// Machine-readable table. Floats use the shortest representation that
    /// parses back to the same value.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# corpus_hash {}\n# baseline {}\n{TSV_HEADER}\n", self.corpus_hash, self.baseline);
        for r in &self.rows {
            let p = r.p_value.map_or("-".to_string(), |p| format!("{p}"));
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{p}\t{}\t{}",
                r.name,
                r.split.name(),
                r.bleu,
                r.ter,
                r.wer,
                r.seed,
                r.config_hash
            );
        }
        out
    }

    /// Human-readable table; `*` marks p < 0.005.
    pub fn to_markdown(&self) -> String {
        let mut out = format!(
            "corpus `{}`, baseline `{}`\n\n| variant | split | BLEU | TER | WER | p vs baseline |\n|---|---|---:|---:|---:|---:|\n",
            self.corpus_hash, self.baseline
        );
        for r in &self.rows {
            let p = match r.p_value {
                Some(p) if p < 0.005 => format!("{p:.4}*"),
                Some(p) => format!("{p:.4}"),
                None => String::new(),
            };
            let _ = writeln!(
                out,
                "| {} | {} | {:.2} | {:.2} | {:.2} | {p} |",
                r.name,
                r.split.name(),
                r.bleu,
                100.0 * r.ter,
                100.0 * r.wer
            );
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::Data(format!("report line {line}: {msg}"));
        let mut corpus_hash = None;
        let mut baseline = None;
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            if let Some(rest) = line.strip_prefix("# ") {
                match rest.split_once(' ') {
                    Some(("corpus_hash", h)) => corpus_hash = Some(h.to_string()),
                    Some(("baseline", b)) => baseline = Some(b.to_string()),
                    _ => return Err(bad(n, format!("unknown metadata {rest:?}"))),
                }
                continue;
            }
            if !header_seen {
                if line != TSV_HEADER {
                    return Err(bad(n, "missing column header".into()));
                }
                header_seen = true;
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 8 {
                return Err(bad(n, format!("expected 8 columns, found {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(n, format!("{s:?}: {e}")));
            rows.push(ReportRow {
                name: f[0].to_string(),
                split: f[1].parse().map_err(|_| bad(n, format!("unknown split {:?}", f[1])))?,
                bleu: num(f[2])?,
                ter: num(f[3])?,
                wer: num(f[4])?,
                p_value: if f[5] == "-" { None } else { Some(num(f[5])?) },
                seed: f[6].parse().map_err(|e| bad(n, format!("seed: {e}")))?,
                config_hash: f[7].to_string(),
            });
        }
        Ok(Self {
            corpus_hash: corpus_hash.ok_or_else(|| bad(0, "missing corpus hash".into()))?,
            baseline: baseline.ok_or_else(|| bad(0, "missing baseline".into()))?,
            rows,
        })
    }

    /// Concatenates rows of reports computed on the same corpus.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.corpus_hash != other.corpus_hash {
            return Err(Error::Usage(format!(
                "refusing to merge reports over different corpora ({} vs {})",
                self.corpus_hash, other.corpus_hash
            )));
        }
        if self.baseline != other.baseline {
            return Err(Error::Usage("refusing to merge reports with different baselines".into()));
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(Self {
            corpus_hash: self.corpus_hash.clone(),
            baseline: self.baseline.clone(),
            rows,
        })
    }

    pub fn row(&self, name: &str, split: Split) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.name == name && r.split == split)
    }
}
