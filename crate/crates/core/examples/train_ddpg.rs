//! Train a DDPG agent behind the highway cycle, then drive the noise-free
//! actor through the harness and compare it with the front vehicle.
//!
//! ```bash
//! RUST_LOG=info cargo run --release -p ecoacc --example train_ddpg -- [episodes] [out_dir]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use ecoacc::cycles::builtin;
use ecoacc::harness::compare;
use ecoacc::ocp::OcpSpec;
use ecoacc::rl::{greedy_policy, train_ddpg, EcoAccEnv, RlHyperparams};

fn main() -> ecoacc::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let episodes = args.next().map_or(500, |s| s.parse().expect("episode count"));
    let out = args.next().map_or_else(|| std::env::temp_dir().join("ecoacc-ddpg"), PathBuf::from);

    let spec = OcpSpec::default();
    let cycle = builtin("hwy-synth").expect("builtin");
    let hp = RlHyperparams { episodes, ..Default::default() };
    let mut env = EcoAccEnv::new(spec.clone(), &cycle, hp.rewards())?;

    let start = Instant::now();
    let (agent, log) = train_ddpg(&mut env, &hp, 0, cycle.name())?;
    println!("trained {episodes} episodes in {:.1} s", start.elapsed().as_secs_f64());

    let k = (episodes / 10).max(1);
    let n = log.episodes.len();
    let first = log.mean_reward(0..k);
    let last = log.mean_reward(n - k..n);
    let completed = log.episodes[n - k..].iter().filter(|e| !e.terminated_early).count();
    println!("mean reward: first {k} {first:.0}, last {k} {last:.0} ({:.2}x), {completed}/{k} late episodes complete", last / first);

    agent.save(&out)?;
    log.save_csv(out.join("training_log.csv"))?;

    let (report, _) = compare(&spec, &cycle, &mut [Box::new(greedy_policy(&agent))], true)?;
    print!("{}", report.to_table());
    println!("agent and log in {}", out.display());
    Ok(())
}
