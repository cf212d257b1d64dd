//! Model-free controllers: the car-following environment, replay memory,
//! and DQN / DDPG trainers whose greedy policies plug into the harness.

mod agent;
mod ddpg;
mod dqn;
mod env;
mod replay;

pub use agent::{
    greedy_index, greedy_policy, Agent, AgentKind, AgentMeta, EpisodeLog, GreedyPolicy, RlHyperparams, TrainingLog,
    LOG_HEADER,
};
pub use ddpg::{actor_gradient, ddpg_actor, ddpg_critic, train_ddpg};
pub use dqn::{dqn_critic, dqn_update, train_dqn};
pub use env::{action_to_control, env_step, observe, reward, EcoAccEnv, Observation, Outcome, RewardConfig, D_SCALE, V_SCALE};
pub use replay::{ReplayBuffer, Transition};
