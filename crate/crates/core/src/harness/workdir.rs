use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{
    load_corpus, save_corpus, ParallelExample, Split, SplitCorpus, TaskSpec, TokenId, Vocabularies, Vocabulary,
};
use crate::policy::{load_checkpoint, save_checkpoint, NeuralSeq2SeqPolicy, Optimizer};
use crate::{Error, Result};

/// Files of one experiment:
///
/// ```text
/// task.toml  vocab.{source,acoustic,target}.txt  corpus/{train,dev,test}.tsv
/// models/<name>.ckpt  logs/<name>.*.tsv  eval/<name>.<split>.hyp  eval/<name>.toml
/// reports/<name>.{tsv,md}
/// ```
#[derive(Clone, Debug)]
pub struct Workdir {
    pub root: PathBuf,
}

/// Provenance of stored hypotheses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInfo {
    pub name: String,
    pub seed: u64,
    pub config_hash: String,
    /// `translation` or `transcript`.
    pub output: String,
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    create_parent(path)?;
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl Workdir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn task_path(&self) -> PathBuf {
        self.root.join("task.toml")
    }

    pub fn vocab_path(&self, kind: &str) -> PathBuf {
        self.root.join(format!("vocab.{kind}.txt"))
    }

    pub fn corpus_path(&self, split: Split) -> PathBuf {
        self.root.join("corpus").join(format!("{}.tsv", split.name()))
    }

    pub fn model_path(&self, name: &str) -> PathBuf {
        self.root.join("models").join(format!("{name}.ckpt"))
    }

    pub fn log_path(&self, name: &str, what: &str) -> PathBuf {
        self.root.join("logs").join(format!("{name}.{what}.tsv"))
    }

    pub fn hyp_path(&self, name: &str, split: Split) -> PathBuf {
        self.root.join("eval").join(format!("{name}.{}.hyp", split.name()))
    }

    pub fn info_path(&self, name: &str) -> PathBuf {
        self.root.join("eval").join(format!("{name}.toml"))
    }

    pub fn report_path(&self, name: &str, ext: &str) -> PathBuf {
        self.root.join("reports").join(format!("{name}.{ext}"))
    }

    pub fn save_task(&self, spec: &TaskSpec, corpus: &SplitCorpus) -> Result<Vocabularies> {
        let vocabs = spec.vocabularies();
        let text = toml::to_string(spec).map_err(|e| Error::Data(e.to_string()))?;
        write_file(&self.task_path(), text)?;
        create_parent(&self.vocab_path("source"))?;
        vocabs.source.save(&self.vocab_path("source"))?;
        vocabs.acoustic.save(&self.vocab_path("acoustic"))?;
        vocabs.target.save(&self.vocab_path("target"))?;
        for split in [Split::Train, Split::Dev, Split::Test] {
            let p = self.corpus_path(split);
            create_parent(&p)?;
            save_corpus(&p, corpus.get(split), &vocabs)?;
        }
        Ok(vocabs)
    }

    pub fn load_task(&self) -> Result<TaskSpec> {
        let path = self.task_path();
        let text = read_file(&path).map_err(|_| Error::Config(format!("{} missing; run gen-data first", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path,
            line: 0,
            msg: e.to_string(),
        })
    }

    pub fn load_vocabs(&self) -> Result<Vocabularies> {
        if !self.vocab_path("source").exists() {
            return Err(Error::Config(format!(
                "no vocabularies in {}; run gen-data first",
                self.root.display()
            )));
        }
        Ok(Vocabularies {
            source: Vocabulary::load(&self.vocab_path("source"))?,
            acoustic: Vocabulary::load(&self.vocab_path("acoustic"))?,
            target: Vocabulary::load(&self.vocab_path("target"))?,
        })
    }

    pub fn load_split(&self, split: Split, vocabs: &Vocabularies) -> Result<Vec<ParallelExample>> {
        load_corpus(&self.corpus_path(split), vocabs)
    }

    pub fn load_corpus(&self, vocabs: &Vocabularies) -> Result<SplitCorpus> {
        Ok(SplitCorpus {
            train: self.load_split(Split::Train, vocabs)?,
            dev: self.load_split(Split::Dev, vocabs)?,
            test: self.load_split(Split::Test, vocabs)?,
        })
    }

    /// First 16 hex digits of the SHA-256 over vocabularies and corpus files.
    pub fn corpus_hash(&self) -> Result<String> {
        let mut h = Sha256::new();
        let mut paths: Vec<PathBuf> = ["source", "acoustic", "target"].iter().map(|k| self.vocab_path(k)).collect();
        paths.extend([Split::Train, Split::Dev, Split::Test].map(|s| self.corpus_path(s)));
        for p in paths {
            let bytes = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(&bytes);
        }
        Ok(h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn save_model(&self, name: &str, model: &NeuralSeq2SeqPolicy, opt: Option<&Optimizer>) -> Result<()> {
        let p = self.model_path(name);
        create_parent(&p)?;
        save_checkpoint(&p, model, opt)
    }

    /// Loads `models/<name>.ckpt`; a missing file is a configuration error.
    pub fn load_model(&self, name: &str) -> Result<NeuralSeq2SeqPolicy> {
        load_model_file(&self.model_path(name))
    }

    pub fn has_model(&self, name: &str) -> bool {
        self.model_path(name).exists()
    }

    pub fn save_hypotheses(&self, info: &RunInfo, split: Split, hyps: &[Vec<TokenId>], vocab: &Vocabulary) -> Result<()> {
        let mut text = String::new();
        for h in hyps {
            text.push_str(&vocab.render(h));
            text.push('\n');
        }
        write_file(&self.hyp_path(&info.name, split), text)?;
        let info_text = toml::to_string(info).map_err(|e| Error::Data(e.to_string()))?;
        write_file(&self.info_path(&info.name), info_text)
    }

    pub fn load_run_info(&self, name: &str) -> Result<RunInfo> {
        let path = self.info_path(name);
        let text = read_file(&path).map_err(|_| Error::Config(format!("no evaluation stored for {name:?}")))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path,
            line: 0,
            msg: e.to_string(),
        })
    }

    /// Names of every stored evaluation of a translation model, sorted.
    pub fn translation_runs(&self) -> Result<Vec<String>> {
        let dir = self.root.join("eval");
        let entries = match std::fs::read_dir(&dir) {
            Ok(e) => e,
            Err(_) => return Ok(Vec::new()),
        };
        let mut names = Vec::new();
        for entry in entries {
            let path = entry.map_err(|source| Error::Io { path: dir.clone(), source })?.path();
            if path.extension().is_some_and(|x| x == "toml") {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                let info = self.load_run_info(stem)?;
                if info.output == "translation" {
                    names.push(info.name);
                }
            }
        }
        names.sort();
        Ok(names)
    }

    pub fn load_hypotheses(&self, name: &str, split: Split, vocab: &Vocabulary) -> Result<Vec<Vec<TokenId>>> {
        let path = self.hyp_path(name, split);
        let text = read_file(&path)?;
        text.lines()
            .enumerate()
            .map(|(i, line)| {
                line.split_whitespace()
                    .map(|t| {
                        vocab.lookup(t).ok_or_else(|| Error::Parse {
                            path: path.clone(),
                            line: i + 1,
                            msg: format!("unknown token {t:?}"),
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

/// Loads a checkpoint file; a missing file is a configuration error.
pub fn load_model_file(path: &Path) -> Result<NeuralSeq2SeqPolicy> {
    if !path.exists() {
        return Err(Error::Config(format!("checkpoint {} does not exist", path.display())));
    }
    Ok(load_checkpoint(path)?.model)
}
