use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::env::{action_to_control, observe, Observation, RewardConfig};
use crate::error::{Error, Result};
use crate::harness::{Controller, StepContext};
use crate::nn::Mlp;
use crate::ocp::{Control, OcpSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlHyperparams {
    pub gamma: f64,
    pub tau: f64,
    pub batch: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub actor_layers: usize,
    pub actor_units: usize,
    pub critic_layers: usize,
    pub critic_units: usize,
    pub buffer: usize,
    pub episodes: usize,
    /// Stored transitions before the first update.
    pub warmup: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay: f64,
    pub noise_start: f64,
    pub noise_end: f64,
    pub noise_decay: f64,
    /// Discrete action levels of the DQN agent.
    pub actions: Vec<f64>,
    pub power_scale: f64,
    pub gap_bonus: f64,
    pub split_bonus: f64,
    /// Rewards are multiplied by this before they enter the Bellman targets.
    pub learn_scale: f64,
    /// Global gradient-norm limit per update; 0 disables clipping.
    pub grad_clip: f64,
    /// Factor applied to the initial output-layer parameters of every net.
    pub head_scale: f64,
}

impl Default for RlHyperparams {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            batch: 64,
            actor_lr: 0.01,
            critic_lr: 0.001,
            actor_layers: 2,
            actor_units: 256,
            critic_layers: 3,
            critic_units: 70,
            buffer: 5000,
            episodes: 500,
            warmup: 1000,
            epsilon_start: 1.0,
            epsilon_end: 0.02,
            epsilon_decay: 0.99,
            noise_start: 0.2,
            noise_end: 0.02,
            noise_decay: 0.995,
            actions: vec![-1.0, -0.5, -0.2, 0.0, 0.2, 0.5, 1.0],
            power_scale: 1000.0,
            gap_bonus: 1000.0,
            split_bonus: 1000.0,
            learn_scale: 1e-3,
            grad_clip: 0.0,
            head_scale: 1.0,
        }
    }
}

impl RlHyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if self.batch == 0 || self.batch > self.buffer {
            return bad("batch must be positive and at most the buffer size");
        }
        if self.warmup < self.batch {
            return bad("warmup must hold at least one batch");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if self.actor_units == 0 || self.critic_units == 0 || self.critic_layers == 0 || self.actor_layers == 0 {
            return bad("networks need at least one hidden layer with units");
        }
        for (lo, hi, decay) in [
            (self.epsilon_end, self.epsilon_start, self.epsilon_decay),
            (self.noise_end, self.noise_start, self.noise_decay),
        ] {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0 && decay > 0.0 && decay <= 1.0) {
                return bad("exploration schedules need 0 <= end <= start <= 1 and decay in (0, 1]");
            }
        }
        if self.actions.is_empty() || self.actions.iter().any(|u| !(u.abs() <= 1.0)) {
            return bad("actions must be a non-empty list within [-1, 1]");
        }
        if !(self.power_scale > 0.0 && self.learn_scale > 0.0 && self.grad_clip >= 0.0 && self.head_scale > 0.0) {
            return bad("power_scale, learn_scale and head_scale must be positive, grad_clip non-negative");
        }
        Ok(())
    }

    pub fn rewards(&self) -> RewardConfig {
        RewardConfig {
            power_scale: self.power_scale,
            gap_bonus: self.gap_bonus,
            split_bonus: self.split_bonus,
        }
    }

    /// Exploration level for a zero-based episode: geometric decay with a floor.
    pub fn schedule(start: f64, end: f64, decay: f64, episode: usize) -> f64 {
        (start * decay.powi(episode.min(i32::MAX as usize) as i32)).max(end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub steps: usize,
    pub total_reward: f64,
    pub total_energy_kwh: f64,
    pub terminated_early: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeLog>,
}

pub const LOG_HEADER: &str = "episode,steps,total_reward,total_energy_kwh,terminated_early";

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{LOG_HEADER}\n");
        for e in &self.episodes {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                e.episode, e.steps, e.total_reward, e.total_energy_kwh, e.terminated_early
            );
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            source_name: "training log".into(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == LOG_HEADER => {}
            _ => return Err(parse_err(1, format!("expected header `{LOG_HEADER}`"))),
        }
        let mut episodes = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(parse_err(i + 1, format!("expected 5 fields, found {}", f.len())));
            }
            let bad = |e: &dyn std::fmt::Display| parse_err(i + 1, e.to_string());
            episodes.push(EpisodeLog {
                episode: f[0].parse().map_err(|e| bad(&e))?,
                steps: f[1].parse().map_err(|e| bad(&e))?,
                total_reward: f[2].parse().map_err(|e| bad(&e))?,
                total_energy_kwh: f[3].parse().map_err(|e| bad(&e))?,
                terminated_early: f[4].parse().map_err(|e| bad(&e))?,
            });
        }
        Ok(Self { episodes })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse_csv(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Mean total reward over `episodes[range]`.
    pub fn mean_reward(&self, range: std::ops::Range<usize>) -> f64 {
        let slice = &self.episodes[range];
        slice.iter().map(|e| e.total_reward).sum::<f64>() / slice.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Dqn,
    Ddpg,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Dqn => "dqn",
            AgentKind::Ddpg => "ddpg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMeta {
    #[serde(rename = "type")]
    pub kind: AgentKind,
    pub seed: u64,
    pub scenario: String,
    pub hyperparams: RlHyperparams,
}

/// A trained agent. DQN agents carry only a critic with one output per
/// action level; DDPG agents carry the actor and the `(obs, u)` critic.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub meta: AgentMeta,
    pub critic: Mlp,
    pub actor: Option<Mlp>,
}

/// Index of the largest Q value; ties go to the level with the smaller
/// magnitude, then to the earlier one.
pub fn greedy_index(q: &[f64], actions: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..q.len() {
        if q[i] > q[best] || (q[i] == q[best] && actions[i].abs() < actions[best].abs()) {
            best = i;
        }
    }
    best
}

impl Agent {
    pub fn kind(&self) -> AgentKind {
        self.meta.kind
    }

    /// Noise-free action for an observation.
    pub fn act(&self, obs: &Observation) -> f64 {
        match (&self.actor, self.meta.kind) {
            (Some(actor), AgentKind::Ddpg) => actor.forward(obs)[0].clamp(-1.0, 1.0),
            _ => {
                let actions = &self.meta.hyperparams.actions;
                actions[greedy_index(&self.critic.forward(obs), actions)]
            }
        }
    }

    fn check(&self) -> Result<()> {
        let n_actions = self.meta.hyperparams.actions.len();
        let shape = |net: &Mlp, i: usize, o: usize, what: &str| {
            if net.n_inputs() == i && net.n_outputs() == o {
                Ok(())
            } else {
                Err(Error::ShapeMismatch(format!(
                    "{what} maps {} -> {}, expected {i} -> {o}",
                    net.n_inputs(),
                    net.n_outputs()
                )))
            }
        };
        match self.meta.kind {
            AgentKind::Dqn => shape(&self.critic, 3, n_actions, "dqn critic"),
            AgentKind::Ddpg => {
                shape(&self.critic, 4, 1, "ddpg critic")?;
                let actor = self.actor.as_ref().ok_or_else(|| Error::Format("ddpg agent without actor.json".into()))?;
                shape(actor, 3, 1, "ddpg actor")
            }
        }
    }

    /// Writes `critic.json`, `actor.json` (DDPG) and `agent.toml` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.critic.save(dir.join("critic.json"))?;
        if let Some(actor) = &self.actor {
            actor.save(dir.join("actor.json"))?;
        }
        let meta = toml::to_string(&self.meta).map_err(|e| Error::Toml(e.to_string()))?;
        let path = dir.join("agent.toml");
        std::fs::write(&path, meta).map_err(|e| Error::io(path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join("agent.toml");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let meta: AgentMeta = toml::from_str(&text).map_err(|e| Error::Toml(e.to_string()))?;
        meta.hyperparams.validate()?;
        let critic = Mlp::load(dir.join("critic.json"))?;
        let actor = match meta.kind {
            AgentKind::Ddpg => Some(Mlp::load(dir.join("actor.json"))?),
            AgentKind::Dqn => None,
        };
        let agent = Self { meta, critic, actor };
        agent.check()?;
        Ok(agent)
    }
}

/// Deploys a trained agent as a harness controller.
pub struct GreedyPolicy<'a> {
    pub agent: &'a Agent,
}

pub fn greedy_policy(agent: &Agent) -> GreedyPolicy<'_> {
    GreedyPolicy { agent }
}

impl GreedyPolicy<'_> {
    pub fn control_for(&self, spec: &OcpSpec, s: &crate::ocp::State) -> Control {
        action_to_control(spec, s.v, self.agent.act(&observe(s)))
    }
}

impl Controller for GreedyPolicy<'_> {
    fn name(&self) -> &str {
        self.agent.kind().name()
    }

    fn control(&mut self, spec: &OcpSpec, ctx: &StepContext) -> Control {
        self.control_for(spec, &ctx.state)
    }
}
