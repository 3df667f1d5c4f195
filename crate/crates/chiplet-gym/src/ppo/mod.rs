//! From-scratch PPO over the episodic environment: a multi-categorical
//! policy head per design parameter, a scalar value head, generalized
//! advantage estimation, and the clipped surrogate objective with entropy
//! regularization.
//!
//! Actor shape is [10, 64, 64, sum-of-cardinalities] and critic
//! [10, 64, 64, 1], both tanh. Training is single-threaded and deterministic
//! per seed; parallelism belongs to the multi-seed farm.

pub mod mlp;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{ChipletGymEnv, Observation, OBS_LEN};
use crate::optimizer::{OptKind, OptimizerRun, TracePoint};
use mlp::{Adam, LayerGrads, Mlp, MlpBlob};

#[derive(Debug, Error)]
pub enum PpoError {
    #[error("non-finite loss at update {update}, epoch {epoch}, minibatch {minibatch}: policy {policy_loss}, value {value_loss}, entropy {entropy}")]
    NonFiniteLoss {
        update: usize,
        epoch: usize,
        minibatch: usize,
        policy_loss: f64,
        value_loss: f64,
        entropy: f64,
    },
    #[error("agent expects cardinalities {expected:?}, environment has {got:?}")]
    CardinalityMismatch { expected: Vec<usize>, got: Vec<usize> },
    #[error("bad agent blob: {0}")]
    BadBlob(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub n_steps: usize,
    pub n_epochs: usize,
    pub minibatch: usize,
    pub learning_rate: f64,
    pub clip_eps: f64,
    pub vf_coef: f64,
    pub ent_coef: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub total_timesteps: u64,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            n_steps: 2048,
            n_epochs: 10,
            minibatch: 64,
            learning_rate: 3e-4,
            clip_eps: 0.2,
            vf_coef: 0.5,
            ent_coef: 0.1,
            gamma: 0.99,
            gae_lambda: 0.95,
            total_timesteps: 250_000,
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err("gamma must be in (0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err("gae_lambda must be in [0, 1]".into());
        }
        if self.clip_eps <= 0.0 {
            return Err("clip_eps must be positive".into());
        }
        if self.n_steps == 0 || self.minibatch == 0 || self.n_epochs == 0 {
            return Err("n_steps, minibatch, and n_epochs must be positive".into());
        }
        Ok(())
    }
}

/// One rollout of transitions plus the derived advantages and returns.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub obs: Vec<Observation>,
    pub actions: Vec<Vec<usize>>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }
}

/// Generalized advantage estimation with episode-boundary resets at done
/// flags and a bootstrap of `last_value` past the final transition (0 when it
/// is terminal).
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    assert_eq!(rewards.len(), values.len());
    assert_eq!(rewards.len(), dones.len());
    let n = rewards.len();
    let mut advantages = vec![0.0; n];
    let mut carry = 0.0;
    for t in (0..n).rev() {
        let not_done = if dones[t] { 0.0 } else { 1.0 };
        let next_value = if t + 1 < n { values[t + 1] } else { last_value };
        let delta = rewards[t] + gamma * next_value * not_done - values[t];
        carry = delta + gamma * lambda * not_done * carry;
        advantages[t] = carry;
    }
    advantages
}

/// Multi-categorical head bookkeeping over flat logits.
#[derive(Debug, Clone)]
pub struct MultiHead {
    cards: Vec<usize>,
    offsets: Vec<usize>,
}

impl MultiHead {
    pub fn new(cards: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(cards.len());
        let mut acc = 0;
        for &c in cards {
            offsets.push(acc);
            acc += c;
        }
        MultiHead { cards: cards.to_vec(), offsets }
    }

    pub fn width(&self) -> usize {
        self.offsets.last().map_or(0, |o| o + self.cards[self.cards.len() - 1])
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    fn head_slices<'a>(&'a self, logits: &'a [f64]) -> impl Iterator<Item = &'a [f64]> + 'a {
        self.offsets.iter().zip(&self.cards).map(move |(&o, &c)| &logits[o..o + c])
    }

    /// Sample one action; returns (action, log_prob, entropy).
    pub fn sample(&self, logits: &[f64], rng: &mut impl Rng) -> (Vec<usize>, f64, f64) {
        let mut action = Vec::with_capacity(self.cards.len());
        let mut log_prob = 0.0;
        let mut entropy = 0.0;
        for head in self.head_slices(logits) {
            let (log_p, h) = log_softmax_entropy(head);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = head.len() - 1;
            for (i, lp) in log_p.iter().enumerate() {
                acc += lp.exp();
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            action.push(chosen);
            log_prob += log_p[chosen];
            entropy += h;
        }
        (action, log_prob, entropy)
    }

    /// Log-probability and entropy of a given action under the logits.
    pub fn log_prob_entropy(&self, logits: &[f64], action: &[usize]) -> (f64, f64) {
        let mut log_prob = 0.0;
        let mut entropy = 0.0;
        for (head, &a) in self.head_slices(logits).zip(action) {
            let (log_p, h) = log_softmax_entropy(head);
            log_prob += log_p[a];
            entropy += h;
        }
        (log_prob, entropy)
    }
}

/// Numerically stable per-head log-softmax and entropy.
fn log_softmax_entropy(logits: &[f64]) -> (Vec<f64>, f64) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln() + max;
    let log_p: Vec<f64> = logits.iter().map(|&l| l - log_z).collect();
    let entropy = -log_p.iter().map(|&lp| lp.exp() * lp).sum::<f64>();
    (log_p, entropy)
}

/// Actor-critic pair with the update machinery.
pub struct PpoAgent {
    pub actor: Mlp,
    pub critic: Mlp,
    heads: MultiHead,
    actor_opt: Adam,
    critic_opt: Adam,
    cfg: PpoConfig,
}

/// Loss statistics of one update.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

/// Serialized agent: version header, head layout, and both network blobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentBlob {
    pub version: u32,
    pub cardinalities: Vec<usize>,
    pub actor: MlpBlob,
    pub critic: MlpBlob,
}

pub const AGENT_BLOB_VERSION: u32 = 1;

impl PpoAgent {
    pub fn new(cards: &[usize], cfg: PpoConfig, rng: &mut impl Rng) -> Self {
        let heads = MultiHead::new(cards);
        let actor = Mlp::orthogonal_init(&[OBS_LEN, 64, 64, heads.width()], 0.01, rng);
        let critic = Mlp::orthogonal_init(&[OBS_LEN, 64, 64, 1], 1.0, rng);
        let actor_opt = Adam::new(&actor, cfg.learning_rate);
        let critic_opt = Adam::new(&critic, cfg.learning_rate);
        PpoAgent { actor, critic, heads, actor_opt, critic_opt, cfg }
    }

    pub fn heads(&self) -> &MultiHead {
        &self.heads
    }

    pub fn config(&self) -> &PpoConfig {
        &self.cfg
    }

    /// Forward both networks on one observation: (flat logits, value).
    pub fn policy_forward(&self, obs: &Observation) -> (Vec<f64>, f64) {
        let x = Array2::from_shape_vec((1, OBS_LEN), obs.to_vec()).expect("obs is width 10");
        let logits = self.actor.forward(x.view());
        let value = self.critic.forward(x.view())[[0, 0]];
        (logits.row(0).to_vec(), value)
    }

    pub fn to_blob(&self) -> AgentBlob {
        AgentBlob {
            version: AGENT_BLOB_VERSION,
            cardinalities: self.heads.cards.clone(),
            actor: MlpBlob::from(&self.actor),
            critic: MlpBlob::from(&self.critic),
        }
    }

    pub fn from_blob(blob: &AgentBlob, cfg: PpoConfig) -> Result<Self, PpoError> {
        if blob.version != AGENT_BLOB_VERSION {
            return Err(PpoError::BadBlob(format!("unsupported version {}", blob.version)));
        }
        let heads = MultiHead::new(&blob.cardinalities);
        let actor = Mlp::try_from(&blob.actor).map_err(PpoError::BadBlob)?;
        let critic = Mlp::try_from(&blob.critic).map_err(PpoError::BadBlob)?;
        if actor.sizes().last() != Some(&heads.width()) {
            return Err(PpoError::BadBlob("actor width does not match cardinalities".into()));
        }
        let actor_opt = Adam::new(&actor, cfg.learning_rate);
        let critic_opt = Adam::new(&critic, cfg.learning_rate);
        Ok(PpoAgent { actor, critic, heads, actor_opt, critic_opt, cfg })
    }

    /// Total PPO loss on a minibatch, as a pure function of the current
    /// parameters. Kept separate from the gradient path so finite differences
    /// can check the analytic gradients against it.
    pub fn loss_on_minibatch(&self, buffer: &RolloutBuffer, idx: &[usize]) -> f64 {
        let b = idx.len();
        let x = Array2::from_shape_fn((b, OBS_LEN), |(i, j)| buffer.obs[idx[i]][j]);
        let logits = self.actor.forward(x.view());
        let values = self.critic.forward(x.view());
        let mut policy_loss = 0.0;
        let mut value_loss = 0.0;
        let mut entropy_sum = 0.0;
        for (row, &i) in idx.iter().enumerate() {
            let flat: Vec<f64> = logits.row(row).to_vec();
            let (log_p, h) = self.heads.log_prob_entropy(&flat, &buffer.actions[i]);
            let ratio = (log_p - buffer.log_probs[i]).exp();
            let adv = buffer.advantages[i];
            let unclipped = ratio * adv;
            let clipped = ratio.clamp(1.0 - self.cfg.clip_eps, 1.0 + self.cfg.clip_eps) * adv;
            policy_loss -= unclipped.min(clipped);
            let v = values[[row, 0]];
            value_loss += (v - buffer.returns[i]).powi(2);
            entropy_sum += h;
        }
        let bf = b as f64;
        policy_loss / bf + self.cfg.vf_coef * value_loss / bf - self.cfg.ent_coef * entropy_sum / bf
    }

    /// Loss statistics and parameter gradients on a minibatch. Public so the
    /// analytic gradients can be checked against finite differences of
    /// [`Self::loss_on_minibatch`].
    pub fn minibatch_grads(
        &self,
        buffer: &RolloutBuffer,
        idx: &[usize],
    ) -> (UpdateStats, Vec<LayerGrads>, Vec<LayerGrads>) {
        let b = idx.len();
        let bf = b as f64;
        let x = Array2::from_shape_fn((b, OBS_LEN), |(i, j)| buffer.obs[idx[i]][j]);
        let actor_cache = self.actor.forward_cache(x.view());
        let critic_cache = self.critic.forward_cache(x.view());
        let logits = actor_cache.output();
        let values = critic_cache.output();

        let mut dlogits = Array2::zeros(logits.dim());
        let mut dvalues = Array2::zeros(values.dim());
        let mut stats = UpdateStats::default();

        for (row, &i) in idx.iter().enumerate() {
            let flat: Vec<f64> = logits.row(row).to_vec();
            let action = &buffer.actions[i];
            let adv = buffer.advantages[i];

            let mut log_p_new = 0.0;
            let mut entropy = 0.0;
            // Per-head log-probabilities kept for the gradient pass.
            let mut head_data = Vec::with_capacity(self.heads.cards.len());
            for (head_idx, head) in self.heads.head_slices(&flat).enumerate() {
                let (log_p, h) = log_softmax_entropy(head);
                log_p_new += log_p[action[head_idx]];
                entropy += h;
                head_data.push((log_p, h));
            }
            let ratio = (log_p_new - buffer.log_probs[i]).exp();
            let unclipped = ratio * adv;
            let clipped = ratio.clamp(1.0 - self.cfg.clip_eps, 1.0 + self.cfg.clip_eps) * adv;
            stats.policy_loss -= unclipped.min(clipped) / bf;
            stats.entropy += entropy / bf;

            // dL/dratio is -adv/bf when the unclipped branch is active, else 0.
            let dratio = if unclipped <= clipped { -adv / bf } else { 0.0 };
            let dlogp = dratio * ratio;

            for (head_idx, (log_p, h)) in head_data.iter().enumerate() {
                let offset = self.heads.offsets[head_idx];
                let a = action[head_idx];
                for (k, lp) in log_p.iter().enumerate() {
                    let p = lp.exp();
                    // Policy term: dlogp * (one_hot - p).
                    let one_hot = if k == a { 1.0 } else { 0.0 };
                    let mut g = dlogp * (one_hot - p);
                    // Entropy bonus: d(-ent_coef * H)/dz = ent_coef * p * (log p + H).
                    g += self.cfg.ent_coef / bf * p * (lp + h);
                    dlogits[[row, offset + k]] = g;
                }
            }

            let v = values[[row, 0]];
            let err = v - buffer.returns[i];
            stats.value_loss += self.cfg.vf_coef * err * err / bf;
            dvalues[[row, 0]] = 2.0 * self.cfg.vf_coef * err / bf;
        }

        let actor_grads = self.actor.backward(&actor_cache, dlogits);
        let critic_grads = self.critic.backward(&critic_cache, dvalues);
        (stats, actor_grads, critic_grads)
    }

    /// One PPO update over a full buffer: normalize advantages, then
    /// `n_epochs` passes of shuffled minibatches with Adam steps.
    pub fn update(
        &mut self,
        buffer: &mut RolloutBuffer,
        update_idx: usize,
        rng: &mut impl Rng,
    ) -> Result<UpdateStats, PpoError> {
        normalize_advantages(&mut buffer.advantages);
        let n = buffer.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut last = UpdateStats::default();
        for epoch in 0..self.cfg.n_epochs {
            shuffle(&mut order, rng);
            for (mb_idx, chunk) in order.chunks(self.cfg.minibatch).enumerate() {
                let (stats, actor_grads, critic_grads) = self.minibatch_grads(buffer, chunk);
                let total = stats.policy_loss + stats.value_loss - self.cfg.ent_coef * stats.entropy;
                if !total.is_finite() {
                    return Err(PpoError::NonFiniteLoss {
                        update: update_idx,
                        epoch,
                        minibatch: mb_idx,
                        policy_loss: stats.policy_loss,
                        value_loss: stats.value_loss,
                        entropy: stats.entropy,
                    });
                }
                self.actor_opt.step(&mut self.actor, &actor_grads);
                self.critic_opt.step(&mut self.critic, &critic_grads);
                last = stats;
            }
        }
        Ok(last)
    }
}

/// In-place normalization to mean 0, population std 1 (plus a small epsilon
/// guard for constant batches).
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt() + 1e-8;
    for a in adv {
        *a = (*a - mean) / std;
    }
}

/// Fisher-Yates with the run's own RNG stream.
fn shuffle(order: &mut [usize], rng: &mut impl Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
}

struct BestTracker {
    action: Vec<usize>,
    obj: f64,
}

impl BestTracker {
    fn new() -> Self {
        BestTracker { action: Vec::new(), obj: f64::NEG_INFINITY }
    }

    fn offer(&mut self, action: &[usize], obj: f64) {
        if obj > self.obj {
            self.obj = obj;
            self.action = action.to_vec();
        }
    }
}

/// Collect transitions into a buffer, sampling from the current policy.
/// Returns (mean episodic reward, value bootstrap for the last transition).
fn collect_rollout(
    agent: &PpoAgent,
    env: &mut ChipletGymEnv,
    steps: usize,
    seed: u64,
    rng: &mut impl Rng,
    buffer: &mut RolloutBuffer,
    best: &mut BestTracker,
) -> (f64, f64) {
    *buffer = RolloutBuffer::default();
    let mut obs = env.reset(seed);
    let mut episode_return = 0.0;
    let mut finished_returns = Vec::new();
    let mut last_value = 0.0;
    for _ in 0..steps {
        let (logits, value) = agent.policy_forward(&obs);
        let (action, log_prob, _) = agent.heads.sample(&logits, rng);
        let (next_obs, reward, done) = env.step(&action).expect("episode bookkeeping stays in sync");
        best.offer(&action, reward);
        episode_return += reward;
        buffer.obs.push(obs);
        buffer.actions.push(action);
        buffer.log_probs.push(log_prob);
        buffer.values.push(value);
        buffer.rewards.push(reward);
        buffer.dones.push(done);
        if done {
            finished_returns.push(episode_return);
            episode_return = 0.0;
            obs = env.reset(seed);
            last_value = 0.0;
        } else {
            obs = next_obs;
            let x = Array2::from_shape_vec((1, OBS_LEN), obs.to_vec()).expect("width 10");
            last_value = agent.critic.forward(x.view())[[0, 0]];
        }
    }
    let mean_ep = if finished_returns.is_empty() {
        episode_return
    } else {
        finished_returns.iter().sum::<f64>() / finished_returns.len() as f64
    };
    (mean_ep, last_value)
}

/// Train a fresh agent on the environment. Tracks the best design point over
/// every action evaluated during training, not just final-policy samples.
pub fn train(env: &mut ChipletGymEnv, cfg: PpoConfig) -> Result<(OptimizerRun, PpoAgent), PpoError> {
    cfg.validate().map_err(PpoError::BadBlob)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cards = env.space().cardinalities();
    let mut agent = PpoAgent::new(&cards, cfg.clone(), &mut rng);
    let mut buffer = RolloutBuffer::default();
    let mut best = BestTracker::new();
    let mut trace = Vec::new();
    let mut steps_done: u64 = 0;
    let mut update_idx = 0;
    while steps_done < cfg.total_timesteps {
        let remaining = (cfg.total_timesteps - steps_done) as usize;
        let take = remaining.min(cfg.n_steps);
        let (mean_ep, last_value) =
            collect_rollout(&agent, env, take, cfg.seed, &mut rng, &mut buffer, &mut best);
        steps_done += take as u64;
        if take == cfg.n_steps {
            buffer.advantages =
                gae(&buffer.rewards, &buffer.values, &buffer.dones, last_value, cfg.gamma, cfg.gae_lambda);
            buffer.returns =
                buffer.advantages.iter().zip(&buffer.values).map(|(a, v)| a + v).collect();
            agent.update(&mut buffer, update_idx, &mut rng)?;
            update_idx += 1;
        }
        trace.push(TracePoint { step: steps_done, value: mean_ep, best_obj: best.obj });
    }
    let space = env.space();
    let run = OptimizerRun {
        kind: OptKind::Rl,
        seed: cfg.seed,
        best_point: space.decode(&best.action).expect("sampled actions are in-space"),
        best_action: best.action.clone(),
        best_obj: best.obj,
        trace,
    };
    Ok((run, agent))
}

/// Run a trained agent in inference mode: sample `episodes` episodes and
/// return the best design point seen.
pub fn run_inference(
    agent: &PpoAgent,
    env: &mut ChipletGymEnv,
    episodes: usize,
    seed: u64,
) -> Result<OptimizerRun, PpoError> {
    let cards = env.space().cardinalities();
    if cards != agent.heads.cards {
        return Err(PpoError::CardinalityMismatch { expected: agent.heads.cards.clone(), got: cards });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = BestTracker::new();
    let mut trace = Vec::new();
    let mut steps: u64 = 0;
    for _ in 0..episodes {
        let mut obs = env.reset(seed);
        loop {
            let (logits, _) = agent.policy_forward(&obs);
            let (action, _, _) = agent.heads.sample(&logits, &mut rng);
            let (next_obs, reward, done) = env.step(&action).expect("episode bookkeeping stays in sync");
            best.offer(&action, reward);
            steps += 1;
            obs = next_obs;
            if done {
                break;
            }
        }
        trace.push(TracePoint { step: steps, value: best.obj, best_obj: best.obj });
    }
    Ok(OptimizerRun {
        kind: OptKind::Rl,
        seed,
        best_point: env.space().decode(&best.action).expect("sampled actions are in-space"),
        best_action: best.action.clone(),
        best_obj: best.obj,
        trace,
    })
}
