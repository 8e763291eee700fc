use serde::{Deserialize, Serialize};

use super::{Params, Trainable};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            clip_norm: 10.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.clip_norm > 0.0) {
            return Err(Error::Config("learning rate and clip norm must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("moment decay rates must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Adam state: first/second moments and the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimizer {
    pub config: OptimizerConfig,
    pub step: u64,
    pub first_moment: Params,
    pub second_moment: Params,
}

/// Norms of one update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateStats {
    pub grad_norm: f64,
    pub applied_norm: f64,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            step: 0,
            first_moment: Params::default(),
            second_moment: Params::default(),
        })
    }
}

/// Clips `grads` to the configured global norm, then takes one Adam step.
pub fn apply_update<P: Trainable>(policy: &mut P, grads: &Params, opt: &mut Optimizer) -> Result<UpdateStats> {
    policy.params().check_layout(grads)?;
    if let Some(name) = grads.first_non_finite() {
        return Err(Error::Training(format!("non-finite gradient in parameter block {name}")));
    }
    if opt.first_moment.is_empty() && !grads.is_empty() {
        opt.first_moment = grads.zeros_like();
        opt.second_moment = grads.zeros_like();
    }
    let cfg = opt.config;
    let grad_norm = grads.norm();
    let clip = if grad_norm > cfg.clip_norm { cfg.clip_norm / grad_norm } else { 1.0 };
    opt.step += 1;
    let t = opt.step as i32;
    let bias1 = 1.0 - cfg.beta1.powi(t);
    let bias2 = 1.0 - cfg.beta2.powi(t);
    let params = policy.params_mut();
    for (i, g) in grads.tensors.iter().enumerate() {
        let m = &mut opt.first_moment.tensors[i].data;
        let v = &mut opt.second_moment.tensors[i].data;
        let w = &mut params.tensors[i].data;
        for k in 0..g.data.len() {
            let gk = g.data[k] * clip;
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
            let mh = m[k] / bias1;
            let vh = v[k] / bias2;
            w[k] -= cfg.learning_rate * mh / (vh.sqrt() + cfg.epsilon);
        }
    }
    Ok(UpdateStats {
        grad_norm,
        applied_norm: grad_norm * clip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{NeuralSeq2SeqPolicy, Seq2SeqConfig, Tensor};

    fn policy() -> NeuralSeq2SeqPolicy {
        NeuralSeq2SeqPolicy::new(Seq2SeqConfig::new(6, 6).with_dims(3, 4), 5).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = policy();
        let before = p.params().clone();
        let mut opt = Optimizer::new(OptimizerConfig::default()).unwrap();
        apply_update(&mut p, &before.zeros_like(), &mut opt).unwrap();
        assert_eq!(p.params(), &before);
        assert_eq!(opt.step, 1);
    }

    #[test]
    fn clipping_caps_global_norm() {
        let mut p = policy();
        let mut g = p.params().zeros_like();
        g.tensors[0].data[0] = 12.0;
        g.tensors[3].data[1] = 16.0;
        let mut opt = Optimizer::new(OptimizerConfig::default()).unwrap();
        let s = apply_update(&mut p, &g, &mut opt).unwrap();
        assert_eq!(s.grad_norm, 20.0);
        assert!((s.applied_norm - 10.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_names_block() {
        let mut p = policy();
        let mut g = p.params().zeros_like();
        g.tensors[2].data[0] = f64::NAN;
        let mut opt = Optimizer::new(OptimizerConfig::default()).unwrap();
        match apply_update(&mut p, &g, &mut opt) {
            Err(Error::Training(msg)) => assert!(msg.contains("enc_fwd.w_h"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    /// Scalar Adam simulated by hand for three steps.
    #[test]
    fn scalar_trace_matches_hand_simulation() {
        #[derive(Clone)]
        struct Scalar(Params);
        impl crate::policy::Policy for Scalar {
            type State = ();
            fn source_vocab_size(&self) -> usize {
                1
            }
            fn target_vocab_size(&self) -> usize {
                1
            }
            fn start(&self, _: &[u32]) -> Result<()> {
                Ok(())
            }
            fn logits<'s>(&self, _: &'s ()) -> &'s [f64] {
                &[]
            }
            fn advance(&self, _: &(), _: u32) {}
        }
        impl Trainable for Scalar {
            type Tape = ();
            fn params(&self) -> &Params {
                &self.0
            }
            fn params_mut(&mut self) -> &mut Params {
                &mut self.0
            }
            fn forward(&self, _: &[u32], _: &[u32]) -> Result<(Vec<Vec<f64>>, ())> {
                Ok((vec![], ()))
            }
            fn backward(&self, _: &(), _: &[Vec<f64>], _: &mut Params) {}
        }
        let mut t = Tensor::zeros("w", &[1]);
        t.data[0] = 1.0;
        let mut p = Scalar(Params { tensors: vec![t] });
        let mut g = p.params().zeros_like();
        g.tensors[0].data[0] = 0.5;
        let cfg = OptimizerConfig {
            learning_rate: 0.1,
            ..OptimizerConfig::default()
        };
        let mut opt = Optimizer::new(cfg).unwrap();
        let (mut w, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        for step in 1..=3 {
            apply_update(&mut p, &g, &mut opt).unwrap();
            m = 0.9 * m + 0.1 * 0.5;
            v = 0.999 * v + 0.001 * 0.25;
            let mh = m / (1.0 - 0.9f64.powi(step));
            let vh = v / (1.0 - 0.999f64.powi(step));
            w -= 0.1 * mh / (vh.sqrt() + 1e-8);
            assert!((p.params().data(0)[0] - w).abs() < 1e-15);
        }
        // constant gradient: each Adam step moves by almost exactly lr
        assert!((w - 0.7).abs() < 1e-6);
    }
}
