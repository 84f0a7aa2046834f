//! Clipped-surrogate PPO update over shuffled minibatches.
//!
//! Minibatch loss:
//!   L = -mean_i min(r_i A_i, clip(r_i, 1-e, 1+e) A_i)
//!       + c_v mean_i (v_i - R_i)^2
//!       - c_e H(log_std)
//! with r_i the probability ratio of the stored pre-clip action under the
//! current vs. rollout-time policy. Advantages are GAE, normalized to zero
//! mean and unit std over the whole buffer before the epochs run.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::{compute_gae, normalize_advantages, Adam, Layer, Policy, PpoConfig, RolloutBuffer, Value};
use crate::Result;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    /// True when a non-finite loss aborted the update; parameters are left
    /// as they were before the update.
    pub aborted: bool,
}

struct Batch {
    obs: Array2<f64>,
    actions: Array2<f64>,
    old_logp: Array1<f64>,
    advantages: Array1<f64>,
    returns: Array1<f64>,
}

struct MinibatchGrads {
    actor: Vec<Layer>,
    log_std: Array1<f64>,
    critic: Vec<Layer>,
    policy_loss: f64,
    value_loss: f64,
    entropy: f64,
    clip_fraction: f64,
}

/// Loss gradients for one minibatch; shared by the optimizer path and the
/// finite-difference oracle in the tests.
fn minibatch_grads(policy: &Policy, value: &Value, batch: &Batch, cfg: &PpoConfig) -> MinibatchGrads {
    let b = batch.obs.nrows();
    let bf = b as f64;
    let act_dim = policy.act_dim();
    let eps = cfg.clip_epsilon;

    let tape = policy.actor.forward(batch.obs.clone());
    let mean = tape.output();

    // Per-sample new log-probability and ratio.
    let sigma: Vec<f64> = policy.log_std.iter().map(|ls| ls.exp()).collect();
    let log_std_sum: f64 = policy.log_std.sum();
    let mut new_logp = Array1::<f64>::zeros(b);
    for i in 0..b {
        let mut acc = 0.0;
        for d in 0..act_dim {
            let z = (batch.actions[(i, d)] - mean[(i, d)]) / sigma[d];
            acc += -0.5 * z * z;
        }
        new_logp[i] = acc - log_std_sum - 0.5 * act_dim as f64 * super::LN_2PI;
    }

    let mut d_mean = Array2::<f64>::zeros((b, act_dim));
    let mut d_log_std = Array1::<f64>::zeros(act_dim);
    let mut policy_loss = 0.0;
    let mut clipped = 0usize;
    for i in 0..b {
        let adv = batch.advantages[i];
        let ratio = (new_logp[i] - batch.old_logp[i]).exp();
        let unclipped = ratio * adv;
        let clipped_term = ratio.clamp(1.0 - eps, 1.0 + eps) * adv;
        policy_loss += -unclipped.min(clipped_term) / bf;
        if ratio < 1.0 - eps || ratio > 1.0 + eps {
            clipped += 1;
        }
        // Gradient flows through the unclipped branch exactly when it is the
        // active minimum.
        if unclipped <= clipped_term {
            let coef = -adv * ratio / bf;
            for d in 0..act_dim {
                let diff = batch.actions[(i, d)] - mean[(i, d)];
                let z2 = (diff / sigma[d]) * (diff / sigma[d]);
                d_mean[(i, d)] = coef * diff / (sigma[d] * sigma[d]);
                d_log_std[d] += coef * (z2 - 1.0);
            }
        }
    }
    // Entropy bonus: H depends only on log_std.
    for d in 0..act_dim {
        d_log_std[d] -= cfg.entropy_coeff;
    }
    let actor_grads = policy.actor.backward(&tape, d_mean);

    // Critic: c_v * mean squared error against the GAE returns.
    let tape_v = value.critic.forward(batch.obs.clone());
    let v = tape_v.output().index_axis(Axis(1), 0).to_owned();
    let mut d_v = Array2::<f64>::zeros((b, 1));
    let mut value_loss = 0.0;
    for i in 0..b {
        let err = v[i] - batch.returns[i];
        value_loss += err * err / bf;
        d_v[(i, 0)] = cfg.value_coeff * 2.0 * err / bf;
    }
    let critic_grads = value.critic.backward(&tape_v, d_v);

    MinibatchGrads {
        actor: actor_grads,
        log_std: d_log_std,
        critic: critic_grads,
        policy_loss,
        value_loss,
        entropy: policy.entropy(),
        clip_fraction: clipped as f64 / bf,
    }
}

fn grad_norm(grads: &MinibatchGrads) -> f64 {
    let mut sq = 0.0;
    for layer in grads.actor.iter().chain(grads.critic.iter()) {
        sq += layer.w.iter().map(|g| g * g).sum::<f64>();
        sq += layer.b.iter().map(|g| g * g).sum::<f64>();
    }
    sq += grads.log_std.iter().map(|g| g * g).sum::<f64>();
    sq.sqrt()
}

fn scale_grads(grads: &mut MinibatchGrads, factor: f64) {
    for layer in grads.actor.iter_mut().chain(grads.critic.iter_mut()) {
        layer.w.mapv_inplace(|g| g * factor);
        layer.b.mapv_inplace(|g| g * factor);
    }
    grads.log_std.mapv_inplace(|g| g * factor);
}

/// Run `num_epoch` passes of shuffled minibatches over the buffer, updating
/// the policy and value networks in place with Adam. A non-finite loss
/// aborts the update and restores the pre-update parameters.
pub fn ppo_update(
    policy: &mut Policy,
    value: &mut Value,
    adam_policy: &mut Adam,
    adam_value: &mut Adam,
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateStats> {
    let (mut advantages, returns) = compute_gae(buffer, cfg.gamma, cfg.gae_lambda)?;
    normalize_advantages(&mut advantages);

    let n = buffer.len();
    let obs_dim = policy.obs_dim();
    let act_dim = policy.act_dim();
    let mut obs = Array2::<f64>::zeros((n, obs_dim));
    let mut actions = Array2::<f64>::zeros((n, act_dim));
    let mut old_logp = Array1::<f64>::zeros(n);
    for (i, step) in buffer.iter_flat().enumerate() {
        obs.row_mut(i).assign(&ndarray::ArrayView1::from(&step.obs[..]));
        actions.row_mut(i).assign(&ndarray::ArrayView1::from(&step.action[..]));
        old_logp[i] = step.log_prob;
    }

    let snapshot = (policy.clone(), value.clone());
    let mut stats = UpdateStats::default();
    let mut minibatches = 0usize;
    let mut indices: Vec<usize> = (0..n).collect();

    for _ in 0..cfg.num_epoch {
        indices.shuffle(rng);
        for chunk in indices.chunks(cfg.batch_size.min(n)) {
            let batch = Batch {
                obs: gather(&obs, chunk),
                actions: gather(&actions, chunk),
                old_logp: chunk.iter().map(|&i| old_logp[i]).collect(),
                advantages: chunk.iter().map(|&i| advantages[i]).collect(),
                returns: chunk.iter().map(|&i| returns[i]).collect(),
            };
            let mut grads = minibatch_grads(policy, value, &batch, cfg);
            let total_loss = grads.policy_loss + cfg.value_coeff * grads.value_loss
                - cfg.entropy_coeff * grads.entropy;
            if !total_loss.is_finite() {
                *policy = snapshot.0;
                *value = snapshot.1;
                stats.aborted = true;
                return Ok(stats);
            }
            let norm = grad_norm(&grads);
            if cfg.grad_clip > 0.0 && norm > cfg.grad_clip {
                scale_grads(&mut grads, cfg.grad_clip / norm);
            }
            let mut log_std = policy.log_std.clone();
            adam_policy.step(&mut policy.actor, &grads.actor, Some((&mut log_std, &grads.log_std)));
            policy.log_std = log_std;
            adam_value.step(&mut value.critic, &grads.critic, None);

            stats.policy_loss += grads.policy_loss;
            stats.value_loss += grads.value_loss;
            stats.entropy += grads.entropy;
            stats.clip_fraction += grads.clip_fraction;
            minibatches += 1;
        }
    }
    if minibatches > 0 {
        let m = minibatches as f64;
        stats.policy_loss /= m;
        stats.value_loss /= m;
        stats.entropy /= m;
        stats.clip_fraction /= m;
    }
    Ok(stats)
}

fn gather(src: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((idx.len(), src.ncols()));
    for (row, &i) in idx.iter().enumerate() {
        out.row_mut(row).assign(&src.row(i));
    }
    out
}

/// Maximum relative error between the analytic loss gradients and central
/// finite differences over *every* parameter of a randomly initialized
/// policy/value pair on a random batch. Diagnostic for the optimizer path.
pub fn finite_difference_check(
    obs_dim: usize,
    act_dim: usize,
    actor_hidden: &[usize],
    critic_hidden: &[usize],
    batch_size: usize,
    seed: u64,
    h: f64,
) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = Policy::new(obs_dim, act_dim, actor_hidden, -0.7, &mut rng);
    let mut value = Value::new(obs_dim, critic_hidden, &mut rng);
    let cfg = PpoConfig {
        batch_size,
        buffer_size: batch_size,
        clip_epsilon: 0.2,
        entropy_coeff: 0.01,
        value_coeff: 0.5,
        ..Default::default()
    };
    let obs = Array2::from_shape_fn((batch_size, obs_dim), |_| rng.gen_range(-1.0..1.0));
    let actions = Array2::from_shape_fn((batch_size, act_dim), |_| rng.gen_range(-1.0..1.0));
    // Stale log-probs from a shifted parameter point keep the ratios off 1.
    let mut stale = policy.clone();
    stale.log_std.mapv_inplace(|v| v + 0.1);
    for layer in stale.actor.layers.iter_mut() {
        layer.b.mapv_inplace(|v| v + 0.01);
    }
    let old_logp = Array1::from_shape_fn(batch_size, |i| {
        let mean = stale.mean_raw(&obs.row(i).to_vec());
        stale.log_prob(&mean, &actions.row(i).to_vec())
    });
    let batch = Batch {
        obs,
        actions,
        old_logp,
        advantages: Array1::from_shape_fn(batch_size, |_| rng.gen_range(-2.0..2.0)),
        returns: Array1::from_shape_fn(batch_size, |_| rng.gen_range(-1.0..1.0)),
    };

    let loss = |policy: &Policy, value: &Value| -> f64 {
        let b = batch.obs.nrows();
        let mut policy_loss = 0.0;
        let mut value_loss = 0.0;
        for i in 0..b {
            let o = batch.obs.row(i).to_vec();
            let mean = policy.mean_raw(&o);
            let logp = policy.log_prob(&mean, &batch.actions.row(i).to_vec());
            let ratio = (logp - batch.old_logp[i]).exp();
            let adv = batch.advantages[i];
            let clipped = ratio.clamp(1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * adv;
            policy_loss += -(ratio * adv).min(clipped) / b as f64;
            value_loss += (value.predict(&o) - batch.returns[i]).powi(2) / b as f64;
        }
        policy_loss + cfg.value_coeff * value_loss - cfg.entropy_coeff * policy.entropy()
    };

    let grads = minibatch_grads(&policy, &value, &batch, &cfg);
    let mut max_rel: f64 = 0.0;

    macro_rules! fd {
        ($analytic:expr, $slot:expr) => {{
            let orig = $slot;
            $slot = orig + h;
            let up = loss(&policy, &value);
            $slot = orig - h;
            let down = loss(&policy, &value);
            $slot = orig;
            let numeric = (up - down) / (2.0 * h);
            let denom = numeric.abs().max($analytic.abs()).max(1e-7);
            max_rel = max_rel.max(($analytic - numeric).abs() / denom);
        }};
    }

    for l in 0..grads.actor.len() {
        for idx in 0..grads.actor[l].w.len() {
            let (r, c) = (idx / grads.actor[l].w.ncols(), idx % grads.actor[l].w.ncols());
            let g = grads.actor[l].w[(r, c)];
            fd!(g, policy.actor.layers[l].w[(r, c)]);
        }
        for j in 0..grads.actor[l].b.len() {
            let g = grads.actor[l].b[j];
            fd!(g, policy.actor.layers[l].b[j]);
        }
    }
    for d in 0..grads.log_std.len() {
        let g = grads.log_std[d];
        fd!(g, policy.log_std[d]);
    }
    for l in 0..grads.critic.len() {
        for idx in 0..grads.critic[l].w.len() {
            let (r, c) = (idx / grads.critic[l].w.ncols(), idx % grads.critic[l].w.ncols());
            let g = grads.critic[l].w[(r, c)];
            fd!(g, value.critic.layers[l].w[(r, c)]);
        }
        for j in 0..grads.critic[l].b.len() {
            let g = grads.critic[l].b[j];
            fd!(g, value.critic.layers[l].b[j]);
        }
    }
    max_rel
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppo::StepRecord;
    use rand::{Rng, SeedableRng};

    fn tiny_setup(seed: u64) -> (Policy, Value, PpoConfig, Batch) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let policy = Policy::new(3, 2, &[5, 4], -0.7, &mut rng);
        let value = Value::new(3, &[4], &mut rng);
        let cfg = PpoConfig {
            batch_size: 16,
            buffer_size: 16,
            clip_epsilon: 0.2,
            entropy_coeff: 0.01,
            value_coeff: 0.5,
            ..Default::default()
        };
        let b = 16;
        let obs = Array2::from_shape_fn((b, 3), |_| rng.gen_range(-1.0..1.0));
        let actions = Array2::from_shape_fn((b, 2), |_| rng.gen_range(-1.0..1.0));
        // Old log-probs from a different parameter point so ratios != 1.
        let mut other = Policy::new(3, 2, &[5, 4], -0.6, &mut rng);
        other.log_std.fill(-0.5);
        let old_logp = Array1::from_shape_fn(b, |i| {
            let mean = other.mean_raw(&obs.row(i).to_vec());
            other.log_prob(&mean, &actions.row(i).to_vec())
        });
        let advantages = Array1::from_shape_fn(b, |_| rng.gen_range(-2.0..2.0));
        let returns = Array1::from_shape_fn(b, |_| rng.gen_range(-1.0..1.0));
        (policy, value, cfg, Batch { obs, actions, old_logp, advantages, returns })
    }

    /// The exact scalar loss that `minibatch_grads` differentiates.
    fn loss_of(policy: &Policy, value: &Value, batch: &Batch, cfg: &PpoConfig) -> f64 {
        let b = batch.obs.nrows();
        let mut policy_loss = 0.0;
        let mut value_loss = 0.0;
        for i in 0..b {
            let obs = batch.obs.row(i).to_vec();
            let mean = policy.mean_raw(&obs);
            let logp = policy.log_prob(&mean, &batch.actions.row(i).to_vec());
            let ratio = (logp - batch.old_logp[i]).exp();
            let adv = batch.advantages[i];
            let clipped = ratio.clamp(1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * adv;
            policy_loss += -(ratio * adv).min(clipped) / b as f64;
            let v = value.predict(&obs);
            value_loss += (v - batch.returns[i]).powi(2) / b as f64;
        }
        policy_loss + cfg.value_coeff * value_loss - cfg.entropy_coeff * policy.entropy()
    }

    #[test]
    fn analytic_gradients_match_central_differences() {
        let (mut policy, mut value, cfg, batch) = tiny_setup(42);
        let grads = minibatch_grads(&policy, &value, &batch, &cfg);
        let h = 1e-6;
        let tol = 1e-5;
        let check = |analytic: f64, up: f64, down: f64, what: &str| {
            let numeric = (up - down) / (2.0 * h);
            let denom = numeric.abs().max(analytic.abs()).max(1e-7);
            assert!(
                (analytic - numeric).abs() / denom < tol,
                "{what}: analytic {analytic} vs numeric {numeric}"
            );
        };

        // Every actor layer: a few weights plus a bias element.
        for l in 0..policy.actor.layers.len() {
            let (rows, cols) = (policy.actor.layers[l].w.nrows(), policy.actor.layers[l].w.ncols());
            for &(r, c) in &[(0usize, 0usize), (rows - 1, cols - 1), (rows / 2, cols / 2)] {
                let orig = policy.actor.layers[l].w[(r, c)];
                policy.actor.layers[l].w[(r, c)] = orig + h;
                let up = loss_of(&policy, &value, &batch, &cfg);
                policy.actor.layers[l].w[(r, c)] = orig - h;
                let down = loss_of(&policy, &value, &batch, &cfg);
                policy.actor.layers[l].w[(r, c)] = orig;
                check(grads.actor[l].w[(r, c)], up, down, &format!("actor layer {l} w[{r},{c}]"));
            }
            let orig = policy.actor.layers[l].b[0];
            policy.actor.layers[l].b[0] = orig + h;
            let up = loss_of(&policy, &value, &batch, &cfg);
            policy.actor.layers[l].b[0] = orig - h;
            let down = loss_of(&policy, &value, &batch, &cfg);
            policy.actor.layers[l].b[0] = orig;
            check(grads.actor[l].b[0], up, down, &format!("actor layer {l} bias"));
        }

        // log_std entries.
        for d in 0..policy.log_std.len() {
            let orig = policy.log_std[d];
            policy.log_std[d] = orig + h;
            let up = loss_of(&policy, &value, &batch, &cfg);
            policy.log_std[d] = orig - h;
            let down = loss_of(&policy, &value, &batch, &cfg);
            policy.log_std[d] = orig;
            check(grads.log_std[d], up, down, &format!("log_std[{d}]"));
        }

        // Critic layers.
        for l in 0..value.critic.layers.len() {
            let orig = value.critic.layers[l].w[(0, 0)];
            value.critic.layers[l].w[(0, 0)] = orig + h;
            let up = loss_of(&policy, &value, &batch, &cfg);
            value.critic.layers[l].w[(0, 0)] = orig - h;
            let down = loss_of(&policy, &value, &batch, &cfg);
            value.critic.layers[l].w[(0, 0)] = orig;
            check(grads.critic[l].w[(0, 0)], up, down, &format!("critic layer {l} w[0,0]"));
            let orig = value.critic.layers[l].b[0];
            value.critic.layers[l].b[0] = orig + h;
            let up = loss_of(&policy, &value, &batch, &cfg);
            value.critic.layers[l].b[0] = orig - h;
            let down = loss_of(&policy, &value, &batch, &cfg);
            value.critic.layers[l].b[0] = orig;
            check(grads.critic[l].b[0], up, down, &format!("critic layer {l} bias"));
        }
    }

    #[test]
    fn fresh_buffer_ratio_one_surrogate_is_minus_mean_advantage() {
        let (policy, value, cfg, mut batch) = tiny_setup(7);
        // Old log-probs from the same policy: ratio is exactly 1.
        for i in 0..batch.obs.nrows() {
            let mean = policy.mean_raw(&batch.obs.row(i).to_vec());
            batch.old_logp[i] = policy.log_prob(&mean, &batch.actions.row(i).to_vec());
        }
        let grads = minibatch_grads(&policy, &value, &batch, &cfg);
        let mean_adv = batch.advantages.mean().unwrap();
        assert!((grads.policy_loss + mean_adv).abs() < 1e-12);
        assert_eq!(grads.clip_fraction, 0.0);
    }

    #[test]
    fn infinite_epsilon_equals_unclipped_surrogate() {
        let (policy, value, mut cfg, batch) = tiny_setup(13);
        cfg.clip_epsilon = 1e9;
        let grads = minibatch_grads(&policy, &value, &batch, &cfg);
        let b = batch.obs.nrows() as f64;
        let mut unclipped = 0.0;
        for i in 0..batch.obs.nrows() {
            let mean = policy.mean_raw(&batch.obs.row(i).to_vec());
            let logp = policy.log_prob(&mean, &batch.actions.row(i).to_vec());
            let ratio = (logp - batch.old_logp[i]).exp();
            unclipped += -(ratio * batch.advantages[i]) / b;
        }
        assert!((grads.policy_loss - unclipped).abs() < 1e-12);
        assert_eq!(grads.clip_fraction, 0.0);
    }

    #[test]
    fn clip_fraction_in_unit_interval() {
        for seed in 0..5 {
            let (policy, value, cfg, batch) = tiny_setup(seed);
            let grads = minibatch_grads(&policy, &value, &batch, &cfg);
            assert!((0.0..=1.0).contains(&grads.clip_fraction));
        }
    }

    fn fill_buffer(policy: &Policy, value: &Value, n: usize, seed: u64) -> RolloutBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut buf = RolloutBuffer::new(1);
        for t in 0..n {
            let obs: Vec<f64> = (0..policy.obs_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (action, logp) = policy.sample(&obs, &mut rng);
            let v = value.predict(&obs);
            buf.push(
                0,
                StepRecord {
                    obs,
                    action,
                    log_prob: logp,
                    reward: rng.gen_range(-1.0..1.0),
                    value: v,
                    done: t % 7 == 6,
                },
            );
        }
        buf.set_bootstrap(0, 0.1);
        buf
    }

    #[test]
    fn zero_advantages_leave_actor_weights_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut policy = Policy::new(3, 2, &[5], -0.7, &mut rng);
        let mut value = Value::new(3, &[4], &mut rng);
        // Constant reward equal to gamma-discounted self-consistent value 0:
        // rewards 0, values 0 -> advantages all zero.
        let mut buf = RolloutBuffer::new(1);
        let mut vrng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..16 {
            let obs: Vec<f64> = (0..3).map(|_| vrng.gen_range(-1.0..1.0)).collect();
            let (action, logp) = policy.sample(&obs, &mut vrng);
            buf.push(0, StepRecord { obs, action, log_prob: logp, reward: 0.0, value: 0.0, done: false });
        }
        for layer in value.critic.layers.iter_mut() {
            layer.w.fill(0.0);
            layer.b.fill(0.0);
        }
        let cfg = PpoConfig { batch_size: 16, buffer_size: 16, ..Default::default() };
        let actor_before = policy.actor.clone();
        let log_std_before = policy.log_std.clone();
        let mut ap = Adam::new(&policy.actor, policy.log_std.len(), cfg.learning_rate);
        let mut av = Adam::new(&value.critic, 0, cfg.learning_rate);
        ppo_update(&mut policy, &mut value, &mut ap, &mut av, &buf, &cfg, &mut rng).unwrap();
        assert_eq!(policy.actor, actor_before, "zero advantages must not move the actor");
        assert_ne!(policy.log_std, log_std_before, "entropy bonus still moves log_std");
    }

    #[test]
    fn update_is_deterministic_per_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let policy0 = Policy::new(4, 2, &[8, 8], -0.7, &mut rng);
        let value0 = Value::new(4, &[6], &mut rng);
        let buf = fill_buffer(&policy0, &value0, 64, 9);
        let cfg = PpoConfig { batch_size: 16, buffer_size: 64, ..Default::default() };

        let run = || {
            let mut p = policy0.clone();
            let mut v = value0.clone();
            let mut ap = Adam::new(&p.actor, p.log_std.len(), cfg.learning_rate);
            let mut av = Adam::new(&v.critic, 0, cfg.learning_rate);
            let mut urng = ChaCha8Rng::seed_from_u64(77);
            let s1 = ppo_update(&mut p, &mut v, &mut ap, &mut av, &buf, &cfg, &mut urng).unwrap();
            let s2 = ppo_update(&mut p, &mut v, &mut ap, &mut av, &buf, &cfg, &mut urng).unwrap();
            (p, v, s1, s2)
        };
        let (p1, v1, a1, b1) = run();
        let (p2, v2, a2, b2) = run();
        assert_eq!(p1, p2);
        assert_eq!(v1, v2);
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
    }

    #[test]
    fn non_finite_loss_aborts_and_restores() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut policy = Policy::new(3, 2, &[5], -0.7, &mut rng);
        let mut value = Value::new(3, &[4], &mut rng);
        let mut buf = fill_buffer(&policy, &value, 16, 10);
        // Poison one stored log-prob so the ratio is infinite.
        let mut poisoned = RolloutBuffer::new(1);
        for (i, step) in buf.iter_flat().enumerate() {
            let mut s = step.clone();
            if i == 3 {
                s.log_prob = f64::NEG_INFINITY;
            }
            poisoned.push(0, s);
        }
        poisoned.set_bootstrap(0, 0.1);
        buf = poisoned;

        let before = policy.clone();
        let cfg = PpoConfig { batch_size: 16, buffer_size: 16, ..Default::default() };
        let mut ap = Adam::new(&policy.actor, policy.log_std.len(), cfg.learning_rate);
        let mut av = Adam::new(&value.critic, 0, cfg.learning_rate);
        let mut urng = ChaCha8Rng::seed_from_u64(5);
        let stats =
            ppo_update(&mut policy, &mut value, &mut ap, &mut av, &buf, &cfg, &mut urng).unwrap();
        assert!(stats.aborted);
        assert_eq!(policy, before);
    }
}
