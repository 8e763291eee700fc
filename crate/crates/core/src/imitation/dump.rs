use crate::corpus::{TokenId, Vocabulary};
use crate::policy::{argmax, AggrevateRecord, DaggerRecord, DaggerTarget};

fn body(ids: &[TokenId], vocab: &Vocabulary) -> String {
    vocab.render(ids.strip_suffix(&[crate::corpus::EOS]).unwrap_or(ids))
}

/// D_i as TSV `prefix x_transcript target_or_action reward`; Dagger rows
/// carry the expert argmax and an empty reward.
pub fn render_dagger_records(records: &[DaggerRecord], source: &Vocabulary, target: &Vocabulary) -> String {
    let mut out = String::from("prefix\tx_transcript\ttarget_or_action\treward\n");
    for r in records {
        let tok = match &r.target {
            DaggerTarget::Token(t) => *t,
            DaggerTarget::Distribution(q) => argmax(q),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t\n",
            target.render(&r.prefix),
            body(&r.expert_input, source),
            target.symbol(tok).unwrap_or("?"),
        ));
    }
    out
}

pub fn render_aggrevate_records(records: &[AggrevateRecord], source: &Vocabulary, target: &Vocabulary) -> String {
    let mut out = String::from("prefix\tx_transcript\ttarget_or_action\treward\n");
    for r in records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.4}\n",
            target.render(&r.prefix),
            body(&r.expert_input, source),
            target.symbol(r.action).unwrap_or("?"),
            r.reward
        ));
    }
    out
}
