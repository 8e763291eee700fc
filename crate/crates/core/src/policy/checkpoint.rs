//! Checkpoint container.
//!
//! A checkpoint is a UTF-8 header followed by a binary payload:
//!
//! ```text
//! IMITKD-CHECKPOINT
//! format_version 1
//! emb_dim <n>
//! hidden_dim <n>
//! source_vocab <n>
//! target_vocab <n>
//! source_vocab_hash <hex>
//! target_vocab_hash <hex>
//! step <n>
//! optimizer none | adam <lr> <clip> <beta1> <beta2> <eps>   (f64 bit patterns, hex)
//! tensor <name> <d0>x<d1>...                                  (one line per tensor)
//! <empty line>
//! <parameters, tensor order, little-endian f64>
//! <adam first moments, then second moments, same order; only with adam>
//! ```

use std::path::Path;

use super::optim::{Optimizer, OptimizerConfig};
use super::params::{Params, Tensor};
use super::seq2seq::{NeuralSeq2SeqPolicy, Seq2SeqConfig};
use super::Trainable;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "IMITKD-CHECKPOINT";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: NeuralSeq2SeqPolicy,
    pub optimizer: Option<Optimizer>,
}

fn hex(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

fn unhex(s: &str) -> Option<f64> {
    u64::from_str_radix(s, 16).ok().map(f64::from_bits)
}

fn push_tensors(out: &mut Vec<u8>, p: &Params) {
    for t in &p.tensors {
        for x in &t.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
}

pub fn encode_checkpoint(model: &NeuralSeq2SeqPolicy, optimizer: Option<&Optimizer>) -> Vec<u8> {
    let cfg = model.config();
    let mut header = format!(
        "{MAGIC}\nformat_version {FORMAT_VERSION}\nemb_dim {}\nhidden_dim {}\nsource_vocab {}\ntarget_vocab {}\nsource_vocab_hash {}\ntarget_vocab_hash {}\nstep {}\n",
        cfg.emb_dim,
        cfg.hidden_dim,
        cfg.source_vocab,
        cfg.target_vocab,
        if model.source_vocab_hash.is_empty() { "-" } else { &model.source_vocab_hash },
        if model.target_vocab_hash.is_empty() { "-" } else { &model.target_vocab_hash },
        optimizer.map_or(0, |o| o.step),
    );
    let with_moments = optimizer.is_some_and(|o| !o.first_moment.is_empty());
    match optimizer {
        Some(o) => {
            let c = &o.config;
            header.push_str(&format!(
                "optimizer adam {} {} {} {} {} {}\n",
                hex(c.learning_rate),
                hex(c.clip_norm),
                hex(c.beta1),
                hex(c.beta2),
                hex(c.epsilon),
                u8::from(with_moments)
            ));
        }
        None => header.push_str("optimizer none\n"),
    }
    for t in &model.params().tensors {
        let dims: Vec<String> = t.shape.iter().map(usize::to_string).collect();
        header.push_str(&format!("tensor {} {}\n", t.name, dims.join("x")));
    }
    header.push('\n');
    let mut out = header.into_bytes();
    push_tensors(&mut out, model.params());
    if let Some(o) = optimizer.filter(|_| with_moments) {
        push_tensors(&mut out, &o.first_moment);
        push_tensors(&mut out, &o.second_moment);
    }
    out
}

pub fn save_checkpoint(path: &Path, model: &NeuralSeq2SeqPolicy, optimizer: Option<&Optimizer>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, encode_checkpoint(model, optimizer)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes).map_err(|msg| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg,
    })
}

pub fn decode_checkpoint(bytes: &[u8]) -> std::result::Result<Checkpoint, String> {
    let split = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or("missing header terminator")?;
    let header = std::str::from_utf8(&bytes[..split]).map_err(|_| "header is not UTF-8")?;
    let mut payload = &bytes[split + 2..];
    let mut lines = header.lines();
    if lines.next() != Some(MAGIC) {
        return Err("not a checkpoint file".into());
    }
    let mut fields = std::collections::HashMap::new();
    let mut shapes: Vec<(String, Vec<usize>)> = Vec::new();
    let mut optimizer_line = None;
    for line in lines {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("tensor") => {
                let name = parts.next().ok_or("tensor line without name")?.to_string();
                let dims = parts
                    .next()
                    .ok_or("tensor line without shape")?
                    .split('x')
                    .map(|d| d.parse::<usize>().map_err(|_| format!("bad dimension {d:?}")))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                shapes.push((name, dims));
            }
            Some("optimizer") => optimizer_line = Some(parts.map(str::to_string).collect::<Vec<_>>()),
            Some(key) => {
                fields.insert(key.to_string(), parts.next().unwrap_or("").to_string());
            }
            None => {}
        }
    }
    let num = |k: &str| -> std::result::Result<usize, String> {
        fields
            .get(k)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| format!("missing or invalid header field {k}"))
    };
    let version = num("format_version")?;
    if version != FORMAT_VERSION as usize {
        return Err(format!("unsupported checkpoint version {version}"));
    }
    let cfg = Seq2SeqConfig {
        emb_dim: num("emb_dim")?,
        hidden_dim: num("hidden_dim")?,
        source_vocab: num("source_vocab")?,
        target_vocab: num("target_vocab")?,
    };
    let step = num("step")? as u64;
    let hash = |k: &str| {
        let v = fields.get(k).cloned().unwrap_or_default();
        if v == "-" { String::new() } else { v }
    };
    let read_params = |payload: &mut &[u8]| -> std::result::Result<Params, String> {
        let mut tensors = Vec::with_capacity(shapes.len());
        for (name, shape) in &shapes {
            let mut t = Tensor::zeros(name, shape);
            let need = t.data.len() * 8;
            if payload.len() < need {
                return Err(format!("payload truncated in tensor {name}"));
            }
            for (x, chunk) in t.data.iter_mut().zip(payload[..need].chunks_exact(8)) {
                *x = f64::from_le_bytes(chunk.try_into().unwrap());
            }
            *payload = &payload[need..];
            tensors.push(t);
        }
        Ok(Params { tensors })
    };
    let params = read_params(&mut payload)?;
    let model = NeuralSeq2SeqPolicy::from_parts(cfg, params, hash("source_vocab_hash"), hash("target_vocab_hash"))
        .map_err(|e| e.to_string())?;
    let optimizer = match optimizer_line.as_deref() {
        None | Some([]) => return Err("missing optimizer line".into()),
        Some([kind]) if kind == "none" => None,
        Some([kind, rest @ ..]) if kind == "adam" && rest.len() == 6 => {
            let f = |i: usize| unhex(&rest[i]).ok_or_else(|| format!("bad optimizer field {}", rest[i]));
            let config = OptimizerConfig {
                learning_rate: f(0)?,
                clip_norm: f(1)?,
                beta1: f(2)?,
                beta2: f(3)?,
                epsilon: f(4)?,
            };
            let (first_moment, second_moment) = if rest[5] == "1" {
                (read_params(&mut payload)?, read_params(&mut payload)?)
            } else {
                (Params::default(), Params::default())
            };
            Some(Optimizer {
                config,
                step,
                first_moment,
                second_moment,
            })
        }
        Some(other) => return Err(format!("unknown optimizer line {other:?}")),
    };
    if !payload.is_empty() {
        return Err(format!("{} trailing bytes after payload", payload.len()));
    }
    Ok(Checkpoint { model, optimizer })
}

/// Elementwise arithmetic mean of the parameters of several checkpoints.
pub fn average_checkpoints(paths: &[impl AsRef<Path>]) -> Result<NeuralSeq2SeqPolicy> {
    let models = paths
        .iter()
        .map(|p| load_checkpoint(p.as_ref()).map(|c| c.model))
        .collect::<Result<Vec<_>>>()?;
    average_models(&models)
}

pub fn average_models(models: &[NeuralSeq2SeqPolicy]) -> Result<NeuralSeq2SeqPolicy> {
    let first = models
        .first()
        .ok_or_else(|| Error::Usage("no checkpoints to average".into()))?;
    let mut acc = first.clone();
    for m in &models[1..] {
        if m.config() != first.config() || !m.params().same_layout(first.params()) {
            return Err(Error::Usage("cannot average checkpoints of different architectures".into()));
        }
        acc.params_mut().add_assign(m.params());
    }
    if models.len() > 1 {
        let n = models.len() as f64;
        for t in &mut acc.params_mut().tensors {
            t.data.iter_mut().for_each(|x| *x /= n);
        }
    }
    Ok(acc)
}
