use std::sync::Arc;

use super::linalg::{log_softmax, sigmoid};
use super::{Params, Trainable};
use crate::corpus::TokenId;
use crate::{Error, Result};

/// Label smoothing factor of the standard cross-entropy baseline.
pub const LABEL_SMOOTHING: f64 = 0.1;

/// Mean loss over supervised positions and its parameter gradient.
#[derive(Clone, Debug)]
pub struct LossOutput {
    pub loss: f64,
    pub grads: Params,
    pub positions: usize,
}

/// Expert correction for one prefix.
#[derive(Clone, Debug, PartialEq)]
pub enum DaggerTarget {
    /// Expert argmax token.
    Token(TokenId),
    /// Full expert next-token distribution.
    Distribution(Arc<Vec<f64>>),
}

/// One-step correction `(y_<t, x, v*_t)` collected on a rolled-in prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct DaggerRecord {
    pub prefix: Vec<TokenId>,
    pub student_input: Arc<Vec<TokenId>>,
    pub expert_input: Arc<Vec<TokenId>>,
    pub target: DaggerTarget,
}

/// Exploration record `(y_<t, x, a_t, reward-to-go)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AggrevateRecord {
    pub prefix: Vec<TokenId>,
    pub student_input: Arc<Vec<TokenId>>,
    pub expert_input: Arc<Vec<TokenId>>,
    pub action: TokenId,
    pub reward: f64,
}

/// Teacher-forced KD item: expert distributions for every position of a
/// complete target sequence.
#[derive(Clone, Copy, Debug)]
pub struct KdItem<'a> {
    pub source: &'a [TokenId],
    pub target: &'a [TokenId],
    pub expert: &'a [Vec<f64>],
}

enum PositionTarget<'a> {
    Smoothed(TokenId, f64),
    Soft(&'a [f64]),
    Value(TokenId, f64),
}

struct Group<'a> {
    source: &'a [TokenId],
    prefix: &'a [TokenId],
    targets: Vec<(usize, PositionTarget<'a>)>,
}

fn check_distribution(q: &[f64], vocab: usize) -> Result<()> {
    if q.len() != vocab {
        return Err(Error::Usage(format!(
            "expert distribution has {} entries for a vocabulary of {vocab}",
            q.len()
        )));
    }
    let s: f64 = q.iter().sum();
    if (s - 1.0).abs() > 1e-4 || q.iter().any(|&v| v < 0.0) {
        return Err(Error::Usage(format!("expert distribution sums to {s}")));
    }
    Ok(())
}

fn run_groups<P: Trainable>(policy: &P, groups: &[Group<'_>]) -> Result<LossOutput> {
    let n: usize = groups.iter().map(|g| g.targets.len()).sum();
    if n == 0 {
        return Err(Error::Usage("loss needs at least one supervised position".into()));
    }
    let vocab = policy.target_vocab_size();
    let scale = 1.0 / n as f64;
    let mut grads = policy.params().zeros_like();
    let mut total = 0.0;
    for g in groups {
        let (rows, tape) = policy.forward(g.source, g.prefix)?;
        let mut d = vec![vec![0.0; vocab]; rows.len()];
        for (pos, target) in &g.targets {
            let z = &rows[*pos];
            let dz = &mut d[*pos];
            match *target {
                PositionTarget::Smoothed(tok, eps) => {
                    let lp = log_softmax(z);
                    let t = tok as usize;
                    let mut l = -(1.0 - eps) * lp[t];
                    if eps != 0.0 {
                        l -= eps / vocab as f64 * lp.iter().sum::<f64>();
                    }
                    total += l;
                    for v in 0..vocab {
                        let q = if v == t { 1.0 - eps } else { 0.0 } + eps / vocab as f64;
                        dz[v] += (lp[v].exp() - q) * scale;
                    }
                }
                PositionTarget::Soft(q) => {
                    let lp = log_softmax(z);
                    let mut l = 0.0;
                    for v in 0..vocab {
                        if q[v] != 0.0 {
                            l += q[v] * lp[v];
                        }
                    }
                    total -= l;
                    for v in 0..vocab {
                        dz[v] += (lp[v].exp() - q[v]) * scale;
                    }
                }
                PositionTarget::Value(action, r) => {
                    let a = action as usize;
                    let s = sigmoid(z[a]);
                    total += (s - r) * (s - r);
                    dz[a] += 2.0 * (s - r) * s * (1.0 - s) * scale;
                }
            }
        }
        policy.backward(&tape, &d, &mut grads);
    }
    Ok(LossOutput {
        loss: total * scale,
        grads,
        positions: n,
    })
}

/// Label-smoothed cross-entropy on reference targets; mean over positions.
/// `batch` holds `(source, complete target)` pairs.
pub fn smoothed_ce_loss<P: Trainable>(policy: &P, batch: &[(&[TokenId], &[TokenId])], epsilon: f64) -> Result<LossOutput> {
    if batch.is_empty() {
        return Err(Error::Usage("empty batch".into()));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Usage(format!("label smoothing {epsilon} outside [0, 1)")));
    }
    let groups: Vec<Group<'_>> = batch
        .iter()
        .map(|&(source, target)| Group {
            source,
            prefix: &target[..target.len().saturating_sub(1)],
            targets: target
                .iter()
                .enumerate()
                .map(|(t, &tok)| (t, PositionTarget::Smoothed(tok, epsilon)))
                .collect(),
        })
        .collect();
    run_groups(policy, &groups)
}

/// Word-level KD: cross-entropy against the expert's full distribution on
/// reference prefixes; mean over positions.
pub fn kd_plus_loss<P: Trainable>(policy: &P, batch: &[KdItem<'_>]) -> Result<LossOutput> {
    if batch.is_empty() {
        return Err(Error::Usage("empty batch".into()));
    }
    let vocab = policy.target_vocab_size();
    let mut groups = Vec::with_capacity(batch.len());
    for item in batch {
        if item.expert.len() != item.target.len() {
            return Err(Error::Usage("one expert distribution per target position required".into()));
        }
        for q in item.expert {
            check_distribution(q, vocab)?;
        }
        groups.push(Group {
            source: item.source,
            prefix: &item.target[..item.target.len().saturating_sub(1)],
            targets: item
                .expert
                .iter()
                .enumerate()
                .map(|(t, q)| (t, PositionTarget::Soft(q)))
                .collect(),
        });
    }
    run_groups(policy, &groups)
}

/// Merges consecutive records that extend the same prefix chain into one
/// teacher-forced pass.
fn group_dagger<'a>(records: &'a [DaggerRecord], vocab: usize) -> Result<Vec<Group<'a>>> {
    let mut groups: Vec<Group<'a>> = Vec::new();
    let mut last: Option<&DaggerRecord> = None;
    for r in records {
        let target = match &r.target {
            DaggerTarget::Token(t) => {
                if *t as usize >= vocab {
                    return Err(Error::Usage(format!("target token {t} outside vocabulary")));
                }
                PositionTarget::Smoothed(*t, 0.0)
            }
            DaggerTarget::Distribution(q) => {
                check_distribution(q, vocab)?;
                PositionTarget::Soft(q)
            }
        };
        let extends = last.is_some_and(|l| {
            (Arc::ptr_eq(&l.student_input, &r.student_input) || l.student_input == r.student_input)
                && r.prefix.len() == l.prefix.len() + 1
                && r.prefix.starts_with(&l.prefix)
        });
        if extends {
            let g = groups.last_mut().unwrap();
            g.prefix = &r.prefix;
            g.targets.push((r.prefix.len(), target));
        } else {
            groups.push(Group {
                source: &r.student_input,
                prefix: &r.prefix,
                targets: vec![(r.prefix.len(), target)],
            });
        }
        last = Some(r);
    }
    Ok(groups)
}

/// Cross-entropy against the expert's argmax corrections; mean over records.
pub fn ikd_loss<P: Trainable>(policy: &P, records: &[DaggerRecord]) -> Result<LossOutput> {
    if records.is_empty() {
        return Err(Error::Usage("empty record set".into()));
    }
    if records.iter().any(|r| !matches!(r.target, DaggerTarget::Token(_))) {
        return Err(Error::Usage("IKD records must carry argmax targets".into()));
    }
    run_groups(policy, &group_dagger(records, policy.target_vocab_size())?)
}

/// Cross-entropy against the expert's full distribution on record prefixes.
/// Argmax targets are treated as one-hot distributions.
pub fn ikd_plus_loss<P: Trainable>(policy: &P, records: &[DaggerRecord]) -> Result<LossOutput> {
    if records.is_empty() {
        return Err(Error::Usage("empty record set".into()));
    }
    run_groups(policy, &group_dagger(records, policy.target_vocab_size())?)
}

/// Square loss between σ(Q(a_t)) and the reward-to-go rescaled to [0, 1].
pub fn aggrevate_loss<P: Trainable>(policy: &P, records: &[AggrevateRecord]) -> Result<LossOutput> {
    if records.is_empty() {
        return Err(Error::Usage("empty record set".into()));
    }
    let vocab = policy.target_vocab_size();
    let mut groups = Vec::with_capacity(records.len());
    for r in records {
        if !(-100.0..=100.0).contains(&r.reward) {
            return Err(Error::Usage(format!("reward {} outside [-100, 100]", r.reward)));
        }
        if r.action as usize >= vocab {
            return Err(Error::Usage(format!("action {} outside vocabulary", r.action)));
        }
        groups.push(Group {
            source: &r.student_input,
            prefix: &r.prefix,
            targets: vec![(r.prefix.len(), PositionTarget::Value(r.action, (r.reward / 100.0).clamp(0.0, 1.0)))],
        });
    }
    run_groups(policy, &groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::TabularPolicy;

    const LN4: f64 = 1.386_294_361_119_890_6;

    fn uniform4() -> TabularPolicy {
        TabularPolicy::uniform(4, 8)
    }

    fn record(prefix: &[TokenId], target: DaggerTarget) -> DaggerRecord {
        DaggerRecord {
            prefix: prefix.to_vec(),
            student_input: Arc::new(vec![5, 2]),
            expert_input: Arc::new(vec![5, 2]),
            target,
        }
    }

    #[test]
    fn smoothed_ce_on_uniform_is_ln_v() {
        let p = uniform4();
        let out = smoothed_ce_loss(&p, &[(&[5, 2], &[1, 3, 2])], LABEL_SMOOTHING).unwrap();
        assert!((out.loss - LN4).abs() < 1e-12);
        assert_eq!(out.positions, 3);
    }

    #[test]
    fn smoothed_ce_minimum_is_target_entropy() {
        let q = vec![0.925, 0.025, 0.025, 0.025];
        let p = TabularPolicy::uniform(4, 8).with_default(q.clone()).unwrap();
        let out = smoothed_ce_loss(&p, &[(&[5, 2], &[0])], LABEL_SMOOTHING).unwrap();
        let entropy: f64 = -q.iter().map(|v| v * v.ln()).sum::<f64>();
        assert!((out.loss - entropy).abs() < 1e-12);
    }

    #[test]
    fn smoothed_ce_without_smoothing_is_nll() {
        let p = TabularPolicy::uniform(4, 8).with_default(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let out = smoothed_ce_loss(&p, &[(&[5, 2], &[3, 1])], 0.0).unwrap();
        assert!((out.loss + (0.4f64.ln() + 0.2f64.ln()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn kd_plus_cases() {
        let p = uniform4();
        let target = [1, 2];
        let q = vec![vec![0.25; 4], vec![0.5, 0.5, 0.0, 0.0]];
        let out = kd_plus_loss(&p, &[KdItem { source: &[5, 2], target: &target, expert: &q }]).unwrap();
        assert!((out.loss - LN4).abs() < 1e-12);
        let bad = vec![vec![0.5; 4], vec![0.25; 4]];
        assert!(matches!(
            kd_plus_loss(&p, &[KdItem { source: &[5, 2], target: &target, expert: &bad }]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn kd_plus_one_hot_is_plain_ce() {
        let p = TabularPolicy::uniform(4, 8).with_default(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let target = [3, 1];
        let q = vec![vec![0.0, 0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0, 0.0]];
        let kd = kd_plus_loss(&p, &[KdItem { source: &[5, 2], target: &target, expert: &q }]).unwrap();
        let ce = smoothed_ce_loss(&p, &[(&[5, 2], &target)], 0.0).unwrap();
        assert_eq!(kd.loss, ce.loss);
    }

    #[test]
    fn ikd_cases() {
        let p = uniform4();
        let out = ikd_loss(&p, &[record(&[], DaggerTarget::Token(1))]).unwrap();
        assert!((out.loss - LN4).abs() < 1e-12);

        let mut t = TabularPolicy::uniform(4, 8);
        t.set(&[], vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        t.set(&[0], vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        let recs = [record(&[], DaggerTarget::Token(0)), record(&[0], DaggerTarget::Token(3))];
        let out = ikd_loss(&t, &recs).unwrap();
        assert!((out.loss - (2f64.ln() + 4f64.ln()) / 2.0).abs() < 1e-12);
        assert!(ikd_loss(&t, &[]).is_err());
    }

    #[test]
    fn ikd_near_certain_student() {
        let eps = 1e-9;
        let p = TabularPolicy::uniform(4, 8)
            .with_default(vec![1.0 - eps, eps / 3.0, eps / 3.0, eps / 3.0])
            .unwrap();
        let out = ikd_loss(&p, &[record(&[], DaggerTarget::Token(0))]).unwrap();
        assert!((out.loss - 1e-9).abs() < 1e-12);
    }

    #[test]
    fn ikd_plus_uniform_and_one_hot() {
        let p = uniform4();
        let q = Arc::new(vec![0.25; 4]);
        let out = ikd_plus_loss(&p, &[record(&[], DaggerTarget::Distribution(q))]).unwrap();
        assert!((out.loss - LN4).abs() < 1e-12);

        let t = TabularPolicy::uniform(4, 8).with_default(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let onehot = |k: usize| {
            let mut v = vec![0.0; 4];
            v[k] = 1.0;
            DaggerTarget::Distribution(Arc::new(v))
        };
        let soft = [record(&[], onehot(2)), record(&[2], onehot(1))];
        let hard = [record(&[], DaggerTarget::Token(2)), record(&[2], DaggerTarget::Token(1))];
        assert_eq!(ikd_plus_loss(&t, &soft).unwrap().loss, ikd_loss(&t, &hard).unwrap().loss);
    }

    fn agg(logit_prob: f64, reward: f64) -> (TabularPolicy, AggrevateRecord) {
        // tabular logits are log-probabilities; pick p so that ln p = Q
        let mut row = vec![0.0; 4];
        row[1] = logit_prob;
        row[0] = 1.0 - logit_prob;
        let p = TabularPolicy::uniform(4, 8).with_default(row).unwrap();
        let r = AggrevateRecord {
            prefix: vec![],
            student_input: Arc::new(vec![5, 2]),
            expert_input: Arc::new(vec![5, 2]),
            action: 1,
            reward,
        };
        (p, r)
    }

    #[test]
    fn aggrevate_cases() {
        // Q = ln 1 = 0, sigma = 0.5
        let (p, mut r) = agg(1.0, 50.0);
        assert!(aggrevate_loss(&p, &[r.clone()]).unwrap().loss.abs() < 1e-15);
        r.reward = 100.0;
        assert!((aggrevate_loss(&p, &[r.clone()]).unwrap().loss - 0.25).abs() < 1e-15);
        r.reward = 150.0;
        assert!(aggrevate_loss(&p, &[r.clone()]).is_err());

        let p = TabularPolicy::uniform(4, 8)
            .with_default_logits(vec![0.0, 3f64.ln(), 0.0, 0.0])
            .unwrap();
        r.reward = 0.0;
        assert!((aggrevate_loss(&p, &[r]).unwrap().loss - 0.5625).abs() < 1e-15);
    }
}
