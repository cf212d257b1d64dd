use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::agent::{greedy_index, Agent, AgentKind, AgentMeta, EpisodeLog, RlHyperparams, TrainingLog};
use super::env::EcoAccEnv;
use super::replay::{ReplayBuffer, Transition};
use crate::error::{Error, Result};
use crate::nn::{Activation, Adam, Mlp};

pub(crate) fn flat_obs<'a>(batch: impl Iterator<Item = &'a [f64; 3]>) -> Vec<f64> {
    batch.flat_map(|o| o.iter().copied()).collect()
}

pub(crate) fn diverged(what: &str, loss: f64, episode: usize) -> Error {
    Error::TrainingDiverged(format!("{what} loss became {loss} in episode {episode}"))
}

/// Critic mapping an observation to one Q value per action level.
pub fn dqn_critic(hp: &RlHyperparams, seed: u64) -> Result<Mlp> {
    let mut net = Mlp::uniform(
        3,
        hp.critic_layers,
        hp.critic_units,
        Activation::Relu,
        hp.actions.len(),
        Activation::Linear,
        seed,
    )?;
    net.scale_output_layer(hp.head_scale);
    Ok(net)
}

/// One minibatch step on the critic towards `r + γ(1 − terminal)·max Q′`.
/// Returns the mean squared TD error.
pub fn dqn_update(
    critic: &mut Mlp,
    target: &Mlp,
    adam: &mut Adam,
    batch: &[Transition],
    hp: &RlHyperparams,
) -> f64 {
    let n = batch.len();
    let n_a = critic.n_outputs();
    let q_next = target.forward_batch(&flat_obs(batch.iter().map(|t| &t.next_obs)), n);
    let cache = critic.forward_batch(&flat_obs(batch.iter().map(|t| &t.obs)), n);
    let q = cache.output();
    let mut grad = vec![0.0; n * n_a];
    let mut loss = 0.0;
    for (i, t) in batch.iter().enumerate() {
        let row = &q_next.output()[i * n_a..(i + 1) * n_a];
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let y = if t.terminal { t.reward } else { t.reward + hp.gamma * best };
        let e = q[i * n_a + t.action_index] - y;
        loss += e * e;
        grad[i * n_a + t.action_index] = 2.0 * e / n as f64;
    }
    let mut g = critic.backward(&cache, &grad);
    if hp.grad_clip > 0.0 {
        g.clip_norm(hp.grad_clip);
    }
    adam.step(critic, &g);
    loss / n as f64
}

/// ε-greedy DQN with a soft-updated target critic.
pub fn train_dqn(env: &mut EcoAccEnv, hp: &RlHyperparams, seed: u64, scenario: &str) -> Result<(Agent, TrainingLog)> {
    hp.validate()?;
    let actions = &hp.actions;
    let mut critic = dqn_critic(hp, seed)?;
    let mut target = critic.clone();
    let mut adam = Adam::new(&critic, hp.critic_lr);
    let mut buffer = ReplayBuffer::new(hp.buffer, seed.wrapping_add(1))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut log = TrainingLog::default();
    let (mut loss_sum, mut loss_n) = (0.0, 0usize);

    for episode in 0..hp.episodes {
        let eps = RlHyperparams::schedule(hp.epsilon_start, hp.epsilon_end, hp.epsilon_decay, episode);
        let mut obs = env.reset();
        let mut total = 0.0;
        loop {
            let idx = if rng.random::<f64>() < eps {
                rng.random_range(0..actions.len())
            } else {
                greedy_index(&critic.forward(&obs), actions)
            };
            let out = env.step(actions[idx])?;
            total += out.reward;
            buffer.push(Transition {
                obs,
                action: actions[idx],
                action_index: idx,
                reward: out.reward * hp.learn_scale,
                next_obs: out.obs,
                terminal: out.terminal,
            });
            if buffer.len() >= hp.warmup {
                let batch = buffer.sample(hp.batch)?;
                let loss = dqn_update(&mut critic, &target, &mut adam, &batch, hp);
                if !loss.is_finite() {
                    return Err(diverged("critic", loss, episode));
                }
                loss_sum += loss;
                loss_n += 1;
                target.soft_update(&critic, hp.tau)?;
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
                "dqn episode {}: mean reward {:.1} over the last 25, epsilon {eps:.3}, critic mse {:.3e}",
                episode + 1,
                log.mean_reward(from..episode + 1),
                loss_sum / loss_n.max(1) as f64
            );
            (loss_sum, loss_n) = (0.0, 0);
        }
    }

    let agent = Agent {
        meta: AgentMeta {
            kind: AgentKind::Dqn,
            seed,
            scenario: scenario.to_string(),
            hyperparams: hp.clone(),
        },
        critic,
        actor: None,
    };
    Ok((agent, log))
}
