use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{axpy, dot, matvec_add, matvec_t_add, outer_add, sigmoid, softmax_in_place};
use super::params::{Params, Tensor};
use super::{check_ids, Policy, Trainable};
use crate::corpus::{TokenId, BOS};
use crate::rng::rng;
use crate::{Error, Result};

/// Architecture hyperparameters of [`NeuralSeq2SeqPolicy`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seq2SeqConfig {
    pub emb_dim: usize,
    pub hidden_dim: usize,
    pub source_vocab: usize,
    pub target_vocab: usize,
}

impl Seq2SeqConfig {
    pub fn new(source_vocab: usize, target_vocab: usize) -> Self {
        Self {
            emb_dim: 64,
            hidden_dim: 128,
            source_vocab,
            target_vocab,
        }
    }

    pub fn with_dims(mut self, emb_dim: usize, hidden_dim: usize) -> Self {
        self.emb_dim = emb_dim;
        self.hidden_dim = hidden_dim;
        self
    }
}

// parameter block indices
const SRC_EMB: usize = 0;
const ENC_FWD: usize = 1;
const ENC_BWD: usize = 5;
/// Blocks `0..ENCODER_BLOCKS` form the encoder (embeddings + both GRUs).
pub const ENCODER_BLOCKS: usize = 9;
const TGT_EMB: usize = 9;
const INIT_W: usize = 10;
const INIT_B: usize = 11;
const DEC: usize = 12;
const ATT_K: usize = 16;
const COMB_W: usize = 17;
const COMB_B: usize = 18;
const OUT_W: usize = 19;
const OUT_B: usize = 20;

/// Attentional GRU encoder-decoder.
///
/// The encoder is a bidirectional single-layer GRU over source embeddings.
/// The decoder is a single-layer GRU fed with the previous token embedding
/// and the previous attentional vector; it scores encoder annotations by a
/// dot product with projected keys, mixes state and context through a tanh
/// layer and projects onto the target vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct NeuralSeq2SeqPolicy {
    cfg: Seq2SeqConfig,
    params: Params,
    pub source_vocab_hash: String,
    pub target_vocab_hash: String,
}

struct GruCache {
    x: Vec<f64>,
    h: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    n: Vec<f64>,
    ghn: Vec<f64>,
}

/// Encoder output shared by all decoder states of one source.
#[derive(Debug)]
pub struct Encoded {
    len: usize,
    ann: Vec<f64>,
    keys: Vec<f64>,
    s0: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct NeuralState {
    enc: Arc<Encoded>,
    s: Vec<f64>,
    o: Vec<f64>,
    logits: Vec<f64>,
}

struct StepCache {
    token: TokenId,
    gru: GruCache,
    s: Vec<f64>,
    attn: Vec<f64>,
    u: Vec<f64>,
    o: Vec<f64>,
}

/// Everything the backward pass needs from one teacher-forced forward.
pub struct Seq2SeqTape {
    source: Vec<TokenId>,
    enc: Encoded,
    init_in: Vec<f64>,
    fwd: Vec<GruCache>,
    bwd: Vec<GruCache>,
    steps: Vec<StepCache>,
}

impl NeuralSeq2SeqPolicy {
    pub fn new(cfg: Seq2SeqConfig, seed: u64) -> Result<Self> {
        if cfg.emb_dim == 0 || cfg.hidden_dim == 0 || cfg.source_vocab == 0 || cfg.target_vocab == 0 {
            return Err(Error::Config("network dimensions must be positive".into()));
        }
        let (e, h) = (cfg.emb_dim, cfg.hidden_dim);
        let mut r = rng(seed);
        let mut uniform = |name: &str, shape: &[usize], k: f64| {
            let mut t = Tensor::zeros(name, shape);
            t.data.iter_mut().for_each(|x| *x = r.gen_range(-k..k));
            t
        };
        let gk = 1.0 / (h as f64).sqrt();
        let mut tensors = vec![uniform("src_emb", &[cfg.source_vocab, e], 0.5)];
        for dir in ["enc_fwd", "enc_bwd"] {
            tensors.push(uniform(&format!("{dir}.w_x"), &[3 * h, e], gk));
            tensors.push(uniform(&format!("{dir}.w_h"), &[3 * h, h], gk));
            tensors.push(Tensor::zeros(&format!("{dir}.b_x"), &[3 * h]));
            tensors.push(Tensor::zeros(&format!("{dir}.b_h"), &[3 * h]));
        }
        tensors.push(uniform("tgt_emb", &[cfg.target_vocab, e], 0.5));
        tensors.push(uniform("init.w", &[h, 2 * h], 1.0 / (2.0 * h as f64).sqrt()));
        tensors.push(Tensor::zeros("init.b", &[h]));
        tensors.push(uniform("dec.w_x", &[3 * h, e + h], gk));
        tensors.push(uniform("dec.w_h", &[3 * h, h], gk));
        tensors.push(Tensor::zeros("dec.b_x", &[3 * h]));
        tensors.push(Tensor::zeros("dec.b_h", &[3 * h]));
        tensors.push(uniform("attn.w_k", &[h, 2 * h], 1.0 / (2.0 * h as f64).sqrt()));
        tensors.push(uniform("comb.w", &[h, 3 * h], 1.0 / (3.0 * h as f64).sqrt()));
        tensors.push(Tensor::zeros("comb.b", &[h]));
        tensors.push(uniform("out.w", &[cfg.target_vocab, h], gk));
        tensors.push(Tensor::zeros("out.b", &[cfg.target_vocab]));
        Ok(Self {
            cfg,
            params: Params { tensors },
            source_vocab_hash: String::new(),
            target_vocab_hash: String::new(),
        })
    }

    /// Rebuilds a policy from stored parameters, checking their layout.
    pub fn from_parts(cfg: Seq2SeqConfig, params: Params, source_vocab_hash: String, target_vocab_hash: String) -> Result<Self> {
        let reference = Self::new(cfg, 0)?;
        if !reference.params.same_layout(&params) {
            return Err(Error::Data("parameter tensors do not match the architecture".into()));
        }
        Ok(Self {
            cfg,
            params,
            source_vocab_hash,
            target_vocab_hash,
        })
    }

    pub fn with_vocab_hashes(mut self, source: String, target: String) -> Self {
        self.source_vocab_hash = source;
        self.target_vocab_hash = target;
        self
    }

    pub fn config(&self) -> &Seq2SeqConfig {
        &self.cfg
    }

    fn h(&self) -> usize {
        self.cfg.hidden_dim
    }

    fn emb<'a>(&'a self, block: usize, tok: TokenId) -> &'a [f64] {
        let e = self.cfg.emb_dim;
        &self.params.data(block)[tok as usize * e..(tok as usize + 1) * e]
    }

    fn gru_step(&self, g: usize, x: &[f64], h: &[f64], cache: Option<&mut Vec<GruCache>>) -> Vec<f64> {
        let hd = self.h();
        let p = &self.params;
        let mut gx = p.data(g + 2).to_vec();
        matvec_add(&mut gx, p.data(g), x);
        let mut gh = p.data(g + 3).to_vec();
        matvec_add(&mut gh, p.data(g + 1), h);
        let mut out = vec![0.0; hd];
        let mut r = vec![0.0; hd];
        let mut z = vec![0.0; hd];
        let mut n = vec![0.0; hd];
        for i in 0..hd {
            r[i] = sigmoid(gx[i] + gh[i]);
            z[i] = sigmoid(gx[hd + i] + gh[hd + i]);
            n[i] = (gx[2 * hd + i] + r[i] * gh[2 * hd + i]).tanh();
            out[i] = (1.0 - z[i]) * n[i] + z[i] * h[i];
        }
        if let Some(c) = cache {
            c.push(GruCache {
                x: x.to_vec(),
                h: h.to_vec(),
                r,
                z,
                n,
                ghn: gh[2 * hd..].to_vec(),
            });
        }
        out
    }

    fn gru_backward(&self, g: usize, c: &GruCache, dh_new: &[f64], grads: &mut Params, dx: &mut [f64], dh_prev: &mut [f64]) {
        let hd = self.h();
        let mut dgx = vec![0.0; 3 * hd];
        let mut dgh = vec![0.0; 3 * hd];
        for i in 0..hd {
            let d = dh_new[i];
            let (r, z, n) = (c.r[i], c.z[i], c.n[i]);
            dh_prev[i] += d * z;
            let dnp = d * (1.0 - z) * (1.0 - n * n);
            let dzp = d * (c.h[i] - n) * z * (1.0 - z);
            let drp = dnp * c.ghn[i] * r * (1.0 - r);
            dgx[i] = drp;
            dgh[i] = drp;
            dgx[hd + i] = dzp;
            dgh[hd + i] = dzp;
            dgx[2 * hd + i] = dnp;
            dgh[2 * hd + i] = dnp * r;
        }
        let p = &self.params;
        outer_add(grads.data_mut(g), &dgx, &c.x);
        outer_add(grads.data_mut(g + 1), &dgh, &c.h);
        axpy(grads.data_mut(g + 2), 1.0, &dgx);
        axpy(grads.data_mut(g + 3), 1.0, &dgh);
        matvec_t_add(dx, p.data(g), &dgx);
        matvec_t_add(dh_prev, p.data(g + 1), &dgh);
    }

    fn encode(&self, source: &[TokenId], mut tape: Option<(&mut Vec<GruCache>, &mut Vec<GruCache>, &mut Vec<f64>)>) -> Encoded {
        let hd = self.h();
        let m = source.len();
        let mut ann = vec![0.0; m * 2 * hd];
        let mut h = vec![0.0; hd];
        for (j, &tok) in source.iter().enumerate() {
            h = self.gru_step(ENC_FWD, self.emb(SRC_EMB, tok), &h, tape.as_mut().map(|t| &mut *t.0));
            ann[j * 2 * hd..j * 2 * hd + hd].copy_from_slice(&h);
        }
        let mut h = vec![0.0; hd];
        let mut bwd_rev = Vec::new();
        for j in (0..m).rev() {
            h = self.gru_step(ENC_BWD, self.emb(SRC_EMB, source[j]), &h, tape.as_ref().map(|_| &mut bwd_rev));
            ann[j * 2 * hd + hd..(j + 1) * 2 * hd].copy_from_slice(&h);
        }
        let mut keys = vec![0.0; m * hd];
        for j in 0..m {
            matvec_add(&mut keys[j * hd..(j + 1) * hd], self.params.data(ATT_K), &ann[j * 2 * hd..(j + 1) * 2 * hd]);
        }
        let mut init_in = Vec::with_capacity(2 * hd);
        init_in.extend_from_slice(&ann[(m - 1) * 2 * hd..(m - 1) * 2 * hd + hd]);
        init_in.extend_from_slice(&ann[hd..2 * hd]);
        let mut s0 = self.params.data(INIT_B).to_vec();
        matvec_add(&mut s0, self.params.data(INIT_W), &init_in);
        s0.iter_mut().for_each(|v| *v = v.tanh());
        if let Some((_, bwd, input)) = tape {
            // stored by source position
            bwd_rev.reverse();
            *bwd = bwd_rev;
            *input = init_in;
        }
        Encoded { len: m, ann, keys, s0 }
    }

    fn dec_step(&self, enc: &Encoded, s_prev: &[f64], o_prev: &[f64], token: TokenId, cache: Option<&mut Vec<StepCache>>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let hd = self.h();
        let mut x = Vec::with_capacity(self.cfg.emb_dim + hd);
        x.extend_from_slice(self.emb(TGT_EMB, token));
        x.extend_from_slice(o_prev);
        let mut gru = Vec::with_capacity(1);
        let s = self.gru_step(DEC, &x, s_prev, cache.is_some().then_some(&mut gru));
        let mut attn: Vec<f64> = (0..enc.len).map(|j| dot(&s, &enc.keys[j * hd..(j + 1) * hd])).collect();
        softmax_in_place(&mut attn);
        let mut u = vec![0.0; 3 * hd];
        u[..hd].copy_from_slice(&s);
        for (j, &a) in attn.iter().enumerate() {
            axpy(&mut u[hd..], a, &enc.ann[j * 2 * hd..(j + 1) * 2 * hd]);
        }
        let mut o = self.params.data(COMB_B).to_vec();
        matvec_add(&mut o, self.params.data(COMB_W), &u);
        o.iter_mut().for_each(|v| *v = v.tanh());
        let mut logits = self.params.data(OUT_B).to_vec();
        matvec_add(&mut logits, self.params.data(OUT_W), &o);
        if let Some(c) = cache {
            c.push(StepCache {
                token,
                gru: gru.pop().unwrap(),
                s: s.clone(),
                attn,
                u,
                o: o.clone(),
            });
        }
        (s, o, logits)
    }
}

impl Policy for NeuralSeq2SeqPolicy {
    type State = NeuralState;

    fn source_vocab_size(&self) -> usize {
        self.cfg.source_vocab
    }

    fn target_vocab_size(&self) -> usize {
        self.cfg.target_vocab
    }

    fn start(&self, source: &[TokenId]) -> Result<NeuralState> {
        self.check_source(source)?;
        let enc = Arc::new(self.encode(source, None));
        let o = vec![0.0; self.h()];
        let (s, o, logits) = self.dec_step(&enc, &enc.s0, &o, BOS, None);
        Ok(NeuralState { enc, s, o, logits })
    }

    fn logits<'s>(&self, state: &'s NeuralState) -> &'s [f64] {
        &state.logits
    }

    fn advance(&self, state: &NeuralState, token: TokenId) -> NeuralState {
        let (s, o, logits) = self.dec_step(&state.enc, &state.s, &state.o, token, None);
        NeuralState {
            enc: Arc::clone(&state.enc),
            s,
            o,
            logits,
        }
    }
}

impl Trainable for NeuralSeq2SeqPolicy {
    type Tape = Seq2SeqTape;

    fn params(&self) -> &Params {
        &self.params
    }

    fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    fn forward(&self, source: &[TokenId], prefix: &[TokenId]) -> Result<(Vec<Vec<f64>>, Seq2SeqTape)> {
        self.check_source(source)?;
        check_ids(prefix, self.cfg.target_vocab, "prefix")?;
        let mut fwd = Vec::with_capacity(source.len());
        let mut bwd = Vec::new();
        let mut init_in = Vec::new();
        let enc = self.encode(source, Some((&mut fwd, &mut bwd, &mut init_in)));
        let mut steps = Vec::with_capacity(prefix.len() + 1);
        let mut rows = Vec::with_capacity(prefix.len() + 1);
        let mut s = enc.s0.clone();
        let mut o = vec![0.0; self.h()];
        for t in 0..=prefix.len() {
            let tok = if t == 0 { BOS } else { prefix[t - 1] };
            let (s1, o1, logits) = self.dec_step(&enc, &s, &o, tok, Some(&mut steps));
            s = s1;
            o = o1;
            rows.push(logits);
        }
        Ok((
            rows,
            Seq2SeqTape {
                source: source.to_vec(),
                enc,
                init_in,
                fwd,
                bwd,
                steps,
            },
        ))
    }

    fn backward(&self, tape: &Seq2SeqTape, dlogits: &[Vec<f64>], grads: &mut Params) {
        let hd = self.h();
        let e = self.cfg.emb_dim;
        let enc = &tape.enc;
        let m = enc.len;
        let p = &self.params;
        let mut d_ann = vec![0.0; m * 2 * hd];
        let mut d_keys = vec![0.0; m * hd];
        let mut ds_next = vec![0.0; hd];
        let mut do_next = vec![0.0; hd];
        for (t, c) in tape.steps.iter().enumerate().rev() {
            let mut d_o = std::mem::take(&mut do_next);
            let dz = &dlogits[t];
            if dz.iter().any(|&v| v != 0.0) {
                outer_add(grads.data_mut(OUT_W), dz, &c.o);
                axpy(grads.data_mut(OUT_B), 1.0, dz);
                matvec_t_add(&mut d_o, p.data(OUT_W), dz);
            }
            let dpre: Vec<f64> = d_o.iter().zip(&c.o).map(|(d, o)| d * (1.0 - o * o)).collect();
            outer_add(grads.data_mut(COMB_W), &dpre, &c.u);
            axpy(grads.data_mut(COMB_B), 1.0, &dpre);
            let mut du = vec![0.0; 3 * hd];
            matvec_t_add(&mut du, p.data(COMB_W), &dpre);
            let mut ds = std::mem::take(&mut ds_next);
            axpy(&mut ds, 1.0, &du[..hd]);
            let dctx = &du[hd..];
            let da: Vec<f64> = (0..m).map(|j| dot(dctx, &enc.ann[j * 2 * hd..(j + 1) * 2 * hd])).collect();
            let mean: f64 = c.attn.iter().zip(&da).map(|(a, d)| a * d).sum();
            for j in 0..m {
                let a = c.attn[j];
                axpy(&mut d_ann[j * 2 * hd..(j + 1) * 2 * hd], a, dctx);
                let de = a * (da[j] - mean);
                if de != 0.0 {
                    axpy(&mut ds, de, &enc.keys[j * hd..(j + 1) * hd]);
                    axpy(&mut d_keys[j * hd..(j + 1) * hd], de, &c.s);
                }
            }
            let mut dx = vec![0.0; e + hd];
            let mut ds_prev = vec![0.0; hd];
            self.gru_backward(DEC, &c.gru, &ds, grads, &mut dx, &mut ds_prev);
            let tok = c.token as usize;
            axpy(&mut grads.data_mut(TGT_EMB)[tok * e..(tok + 1) * e], 1.0, &dx[..e]);
            do_next = dx[e..].to_vec();
            ds_next = ds_prev;
        }
        // decoder initial state
        let dpre: Vec<f64> = ds_next.iter().zip(&enc.s0).map(|(d, s)| d * (1.0 - s * s)).collect();
        outer_add(grads.data_mut(INIT_W), &dpre, &tape.init_in);
        axpy(grads.data_mut(INIT_B), 1.0, &dpre);
        let mut d_in = vec![0.0; 2 * hd];
        matvec_t_add(&mut d_in, p.data(INIT_W), &dpre);
        axpy(&mut d_ann[(m - 1) * 2 * hd..(m - 1) * 2 * hd + hd], 1.0, &d_in[..hd]);
        axpy(&mut d_ann[hd..2 * hd], 1.0, &d_in[hd..]);
        for j in 0..m {
            let dk = &d_keys[j * hd..(j + 1) * hd];
            let a = &enc.ann[j * 2 * hd..(j + 1) * 2 * hd];
            outer_add(grads.data_mut(ATT_K), dk, a);
            matvec_t_add(&mut d_ann[j * 2 * hd..(j + 1) * 2 * hd], p.data(ATT_K), dk);
        }
        let mut dh = vec![0.0; hd];
        for j in (0..m).rev() {
            axpy(&mut dh, 1.0, &d_ann[j * 2 * hd..j * 2 * hd + hd]);
            let mut dx = vec![0.0; e];
            let mut dh_prev = vec![0.0; hd];
            self.gru_backward(ENC_FWD, &tape.fwd[j], &dh, grads, &mut dx, &mut dh_prev);
            let tok = tape.source[j] as usize;
            axpy(&mut grads.data_mut(SRC_EMB)[tok * e..(tok + 1) * e], 1.0, &dx);
            dh = dh_prev;
        }
        let mut dh = vec![0.0; hd];
        for j in 0..m {
            axpy(&mut dh, 1.0, &d_ann[j * 2 * hd + hd..(j + 1) * 2 * hd]);
            let mut dx = vec![0.0; e];
            let mut dh_prev = vec![0.0; hd];
            self.gru_backward(ENC_BWD, &tape.bwd[j], &dh, grads, &mut dx, &mut dh_prev);
            let tok = tape.source[j] as usize;
            axpy(&mut grads.data_mut(SRC_EMB)[tok * e..(tok + 1) * e], 1.0, &dx);
            dh = dh_prev;
        }
    }
}

/// Copies the encoder blocks of a trained ASR model into an AST model.
pub fn warm_start_encoder(ast: &mut NeuralSeq2SeqPolicy, asr: &NeuralSeq2SeqPolicy) -> Result<()> {
    let (a, b) = (&ast.cfg, &asr.cfg);
    if a.emb_dim != b.emb_dim || a.hidden_dim != b.hidden_dim || a.source_vocab != b.source_vocab {
        return Err(Error::Usage(format!(
            "encoder shapes differ: emb {}/{} hidden {}/{} vocab {}/{}",
            a.emb_dim, b.emb_dim, a.hidden_dim, b.hidden_dim, a.source_vocab, b.source_vocab
        )));
    }
    if !ast.source_vocab_hash.is_empty() && !asr.source_vocab_hash.is_empty() && ast.source_vocab_hash != asr.source_vocab_hash {
        return Err(Error::Usage("encoder vocabularies differ".into()));
    }
    for i in 0..ENCODER_BLOCKS {
        let src = asr.params.tensors[i].data.clone();
        ast.params.tensors[i].data = src;
    }
    Ok(())
}
