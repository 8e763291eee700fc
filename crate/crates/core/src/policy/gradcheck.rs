use rand::seq::index::sample;

use super::{LossOutput, Trainable};
use crate::rng::rng;
use crate::{Error, Result};

/// Relative-error floor so that coordinates with vanishing gradient do not
/// dominate the maximum.
const REL_FLOOR: f64 = 1e-5;

/// Compares the analytic gradient of `loss` with central finite differences
/// on at least `coords` parameter coordinates (spread over every tensor) and
/// returns the largest relative error `|g - fd| / max(|fd|, 1e-5)`.
pub fn gradient_check<P, F>(policy: &P, loss: F, epsilon: f64, coords: usize, seed: u64) -> Result<f64>
where
    P: Trainable,
    F: Fn(&P) -> Result<LossOutput>,
{
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::Usage(format!("finite-difference step {epsilon} outside [1e-7, 1e-3]")));
    }
    let analytic = loss(policy)?.grads;
    let total = policy.params().numel();
    if total == 0 {
        return Ok(0.0);
    }
    let mut r = rng(seed);
    let mut picks: Vec<usize> = Vec::new();
    let mut offset = 0;
    let per_tensor = coords.div_ceil(policy.params().len()).max(1);
    for t in &policy.params().tensors {
        let n = t.data.len();
        picks.extend(sample(&mut r, n, per_tensor.min(n)).into_iter().map(|i| offset + i));
        offset += n;
    }
    let mut probe = policy.clone();
    let mut worst: f64 = 0.0;
    for idx in picks {
        let x = probe.params().get_flat(idx);
        probe.params_mut().set_flat(idx, x + epsilon);
        let up = loss(&probe)?.loss;
        probe.params_mut().set_flat(idx, x - epsilon);
        let down = loss(&probe)?.loss;
        probe.params_mut().set_flat(idx, x);
        let fd = (up - down) / (2.0 * epsilon);
        let g = analytic.get_flat(idx);
        worst = worst.max((g - fd).abs() / fd.abs().max(REL_FLOOR));
    }
    Ok(worst)
}
