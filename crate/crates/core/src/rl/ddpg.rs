use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::agent::{Agent, AgentKind, AgentMeta, EpisodeLog, RlHyperparams, TrainingLog};
use super::dqn::{diverged, flat_obs};
use super::env::EcoAccEnv;
use super::replay::{ReplayBuffer, Transition};
use crate::error::Result;
use crate::nn::{Activation, Adam, Gradients, Mlp};

/// `obs → u ∈ [-1, 1]`.
pub fn ddpg_actor(hp: &RlHyperparams, seed: u64) -> Result<Mlp> {
    let mut net = Mlp::uniform(3, hp.actor_layers, hp.actor_units, Activation::Relu, 1, Activation::Tanh, seed)?;
    net.scale_output_layer(hp.head_scale);
    Ok(net)
}

/// `(obs, u) → Q`.
pub fn ddpg_critic(hp: &RlHyperparams, seed: u64) -> Result<Mlp> {
    let mut net = Mlp::uniform(4, hp.critic_layers, hp.critic_units, Activation::Relu, 1, Activation::Linear, seed)?;
    net.scale_output_layer(hp.head_scale);
    Ok(net)
}

fn with_actions(obs: &[f64], actions: &[f64]) -> Vec<f64> {
    obs.chunks_exact(3)
        .zip(actions)
        .flat_map(|(o, &a)| [o[0], o[1], o[2], a])
        .collect()
}

/// Gradient of `−mean_i Q(s_i, μ(s_i))` with respect to the actor
/// parameters, chained through the critic's action input. `obs` holds `n`
/// row-major observations.
pub fn actor_gradient(actor: &Mlp, critic: &Mlp, obs: &[f64], n: usize) -> Gradients {
    let a_cache = actor.forward_batch(obs, n);
    let c_cache = critic.forward_batch(&with_actions(obs, a_cache.output()), n);
    let dq = critic.backward(&c_cache, &vec![-1.0 / n as f64; n]);
    let da: Vec<f64> = dq.input.chunks_exact(4).map(|row| row[3]).collect();
    actor.backward(&a_cache, &da)
}

struct Nets {
    actor: Mlp,
    critic: Mlp,
    actor_target: Mlp,
    critic_target: Mlp,
    actor_opt: Adam,
    critic_opt: Adam,
}

impl Nets {
    /// One step of Algorithm-1 style updates; returns the critic MSE.
    fn update(&mut self, batch: &[Transition], hp: &RlHyperparams) -> Result<f64> {
        let n = batch.len();
        let next_obs = flat_obs(batch.iter().map(|t| &t.next_obs));
        let a_next = self.actor_target.forward_batch(&next_obs, n);
        let q_next = self.critic_target.forward_batch(&with_actions(&next_obs, a_next.output()), n);

        let obs = flat_obs(batch.iter().map(|t| &t.obs));
        let taken: Vec<f64> = batch.iter().map(|t| t.action).collect();
        let cache = self.critic.forward_batch(&with_actions(&obs, &taken), n);
        let mut grad = Vec::with_capacity(n);
        let mut loss = 0.0;
        for ((t, &q), &q_n) in batch.iter().zip(cache.output()).zip(q_next.output()) {
            let y = if t.terminal { t.reward } else { t.reward + hp.gamma * q_n };
            let e = q - y;
            loss += e * e;
            grad.push(2.0 * e / n as f64);
        }
        let mut g = self.critic.backward(&cache, &grad);
        if hp.grad_clip > 0.0 {
            g.clip_norm(hp.grad_clip);
        }
        self.critic_opt.step(&mut self.critic, &g);

        let mut g = actor_gradient(&self.actor, &self.critic, &obs, n);
        if hp.grad_clip > 0.0 {
            g.clip_norm(hp.grad_clip);
        }
        self.actor_opt.step(&mut self.actor, &g);

        self.critic_target.soft_update(&self.critic, hp.tau)?;
        self.actor_target.soft_update(&self.actor, hp.tau)?;
        Ok(loss / n as f64)
    }
}

/// Deterministic policy gradient with Gaussian exploration noise and
/// soft-updated target actor and critic.
pub fn train_ddpg(env: &mut EcoAccEnv, hp: &RlHyperparams, seed: u64, scenario: &str) -> Result<(Agent, TrainingLog)> {
    hp.validate()?;
    let actor = ddpg_actor(hp, seed)?;
    let critic = ddpg_critic(hp, seed.wrapping_add(1))?;
    let mut nets = Nets {
        actor_target: actor.clone(),
        critic_target: critic.clone(),
        actor_opt: Adam::new(&actor, hp.actor_lr),
        critic_opt: Adam::new(&critic, hp.critic_lr),
        actor,
        critic,
    };
    let mut buffer = ReplayBuffer::new(hp.buffer, seed.wrapping_add(2))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
    let mut log = TrainingLog::default();
    let (mut loss_sum, mut loss_n) = (0.0, 0usize);

    for episode in 0..hp.episodes {
        let sigma = RlHyperparams::schedule(hp.noise_start, hp.noise_end, hp.noise_decay, episode);
        let mut obs = env.reset();
        let mut total = 0.0;
        loop {
            let z: f64 = StandardNormal.sample(&mut rng);
            let u = (nets.actor.forward(&obs)[0] + sigma * z).clamp(-1.0, 1.0);
            let out = env.step(u)?;
            total += out.reward;
            buffer.push(Transition {
                obs,
                action: u,
                action_index: 0,
                reward: out.reward * hp.learn_scale,
                next_obs: out.obs,
                terminal: out.terminal,
            });
            if buffer.len() >= hp.warmup {
                let batch = buffer.sample(hp.batch)?;
                let loss = nets.update(&batch, hp)?;
                if !loss.is_finite() {
                    return Err(diverged("critic", loss, episode));
                }
                loss_sum += loss;
                loss_n += 1;
            }
            obs = out.obs;
            if out.done {
                log.episodes.push(EpisodeLog {
                    episode,
                    steps: env.steps_taken(),
                    total_reward: total,
                    total_energy_kwh: env.energy() / 3.6e6,
                    terminated_early: out.terminal,
                });
                break;
            }
        }
        if (episode + 1) % 25 == 0 {
            let from = episode + 1 - 25;
            log::info!(
                "ddpg episode {}: mean reward {:.1} over the last 25, noise {sigma:.3}, critic mse {:.3e}",
                episode + 1,
                log.mean_reward(from..episode + 1),
                loss_sum / loss_n.max(1) as f64
            );
            (loss_sum, loss_n) = (0.0, 0);
        }
    }

    let agent = Agent {
        meta: AgentMeta {
            kind: AgentKind::Ddpg,
            seed,
            scenario: scenario.to_string(),
            hyperparams: hp.clone(),
        },
        critic: nets.critic,
        actor: Some(nets.actor),
    };
    Ok((agent, log))
}
