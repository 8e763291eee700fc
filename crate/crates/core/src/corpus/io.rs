use std::fmt::Write as _;
use std::path::Path;

use super::sequence::{ParallelExample, Role, TokenSequence};
use super::task::Vocabularies;
use super::vocab::{TokenId, Vocabulary};
use crate::{Error, Result};

/// Writes one example per line: `x_s \t x_a \t y [\t x̂_s]`, each field a
/// space-separated token string without the end marker.
pub fn save_corpus(path: &Path, examples: &[ParallelExample], vocabs: &Vocabularies) -> Result<()> {
    std::fs::write(path, render_corpus(examples, vocabs)).map_err(|e| Error::io(path, e))
}

pub fn render_corpus(examples: &[ParallelExample], vocabs: &Vocabularies) -> String {
    let mut out = String::new();
    for ex in examples {
        let _ = write!(
            out,
            "{}\t{}\t{}",
            vocabs.source.render(ex.transcript.body()),
            vocabs.acoustic.render(ex.acoustic.body()),
            vocabs.target.render(ex.translation.body()),
        );
        if let Some(s) = &ex.synthetic {
            let _ = write!(out, "\t{}", vocabs.source.render(s.body()));
        }
        out.push('\n');
    }
    out
}

pub fn load_corpus(path: &Path, vocabs: &Vocabularies) -> Result<Vec<ParallelExample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, vocabs).map_err(|(line, msg)| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    })
}

/// Parses corpus text; errors carry the 1-based line number.
pub fn parse_corpus(text: &str, vocabs: &Vocabularies) -> std::result::Result<Vec<ParallelExample>, (usize, String)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err((lineno, format!("expected 3 or 4 tab-separated fields, found {}", fields.len())));
        }
        let parse = |field: &str, vocab: &Vocabulary, role: Role| {
            field
                .split_whitespace()
                .map(|tok| match vocab.lookup(tok) {
                    Some(id) if vocab.is_content(id) => Ok(id),
                    _ => Err((lineno, format!("unknown {role:?} token {tok:?}"))),
                })
                .collect::<std::result::Result<Vec<TokenId>, _>>()
                .map(|ids| TokenSequence::complete(role, ids))
        };
        out.push(ParallelExample {
            transcript: parse(fields[0], &vocabs.source, Role::Transcript)?,
            acoustic: parse(fields[1], &vocabs.acoustic, Role::Acoustic)?,
            translation: parse(fields[2], &vocabs.target, Role::Translation)?,
            synthetic: match fields.get(3) {
                Some(f) => Some(parse(f, &vocabs.source, Role::Transcript)?),
                None => None,
            },
        });
    }
    Ok(out)
}
