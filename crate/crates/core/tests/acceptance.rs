//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails. Built with `harness = false`.
//!
//! The two 500-episode training runs dominate the runtime.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ecoacc::adp::{train_value_surrogate, SurrogateOptions, ValueSurrogate};
use ecoacc::cycles::{builtin, load_cycle, DrivingCycle, SpeedUnit, BUILTIN_NAMES};
use ecoacc::dp::{dp_backward, dp_forward_one_step, dp_forward_two_step, BackwardOptions, ControlGrid, Grid, ValueTable};
use ecoacc::harness::{compare, AdpTwoStep, Controller, DpOneStep, DpTwoStep, EpisodeTrace, FrontMirror, ScenarioReport};
use ecoacc::nn::{Activation, Mlp};
use ecoacc::ocp::{Control, OcpSpec, State};
use ecoacc::powertrain::{fit_motor_model, synthetic::SyntheticMotorMap, MotorModel};
use ecoacc::rl::{actor_gradient, greedy_policy, train_ddpg, train_dqn, Agent, EcoAccEnv, RlHyperparams, TrainingLog};

struct Line {
    pass: bool,
    detail: String,
}

fn line(pass: bool, detail: impl Into<String>) -> Line {
    Line {
        pass,
        detail: detail.into(),
    }
}

struct Shared {
    spec: OcpSpec,
    controls: ControlGrid,
    table: Option<ValueTable>,
    surrogate: Option<ValueSurrogate>,
    agents: Vec<Agent>,
    runs: Vec<(ScenarioReport, Vec<EpisodeTrace>)>,
}

fn main() {
    let spec = OcpSpec::default();
    let mut sh = Shared {
        controls: ControlGrid::default_for(&spec),
        spec,
        table: None,
        surrogate: None,
        agents: Vec::new(),
        runs: Vec::new(),
    };
    let criteria: [(&str, fn(&mut Shared) -> Line); 11] = [
        ("1 Bellman fixed point", c1_bellman),
        ("2 lookahead oracles", c2_oracles),
        ("3 ADP fit", c3_adp),
        ("4 motor-map fit", c4_motor),
        ("5 gradient checks", c5_gradients),
        ("9 RL learning trend", c9_rl),
        ("6 constraint soundness", c6_constraints),
        ("7 energy accounting", c7_energy),
        ("8 direction of effect", c8_direction),
        ("10 determinism", c10_determinism),
        ("11 format round-trips", c11_roundtrips),
    ];
    let mut results = Vec::new();
    for (name, f) in criteria {
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(|| f(&mut sh))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            line(false, format!("panicked: {msg}"))
        });
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {name}: {} ({:.1} s)", out.detail, start.elapsed().as_secs_f64());
        results.push((name, out.pass));
    }
    results.sort_by_key(|(name, _)| name.split(' ').next().unwrap().parse::<u32>().unwrap());
    println!("\nsummary:");
    for (name, pass) in &results {
        println!("  {} criterion {name}", if *pass { "PASS" } else { "FAIL" });
    }
    let failed = results.iter().filter(|(_, p)| !p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn default_table(sh: &mut Shared) -> &ValueTable {
    if sh.table.is_none() {
        let grid = Grid::default_for(&sh.spec);
        sh.table = Some(dp_backward(&sh.spec, &grid, &sh.controls, &BackwardOptions::default()).unwrap());
    }
    sh.table.as_ref().unwrap()
}

/// Bellman backup written out from the raw level lists.
fn backup(spec: &OcpSpec, table: &ValueTable, controls: &ControlGrid, s: &State) -> f64 {
    let mut best = f64::INFINITY;
    for &f_m in &controls.f_m_levels {
        for &f_b in &controls.f_b_levels {
            let u = Control::new(f_m, f_b);
            if !spec.is_control_feasible(s, &u) {
                continue;
            }
            let next = spec.step_unchecked(s, &u, s.v_f).next;
            let q = spec.stage_cost(s, &u) + spec.gap_penalty(next.d) + table.discount * table.interpolate(&next);
            best = best.min(q);
        }
    }
    best
}

fn c1_bellman(sh: &mut Shared) -> Line {
    let start = Instant::now();
    default_table(sh);
    let solve_s = start.elapsed().as_secs_f64();
    let table = sh.table.as_ref().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let idx = rng.random_range(0..table.grid.len());
        let s = table.grid.state(idx);
        worst = worst.max((backup(&sh.spec, table, &sh.controls, &s) - table.values[idx]).abs());
    }
    let ci_start = Instant::now();
    let ci_grid = Grid::build(&sh.spec, 21, 1.0, 21, 21).unwrap();
    let ci = dp_backward(&sh.spec, &ci_grid, &sh.controls, &BackwardOptions::default()).unwrap();
    let ci_s = ci_start.elapsed().as_secs_f64();
    let pass = table.residual <= 1.0 && table.iterations <= 500 && worst <= 1.0 && solve_s <= 600.0 && ci_s <= 10.0 && ci.residual <= 1.0;
    line(
        pass,
        format!(
            "{} sweeps, residual {:.3} J, audit max |V - backup| {:.3} J over 1000 knots, solve {solve_s:.1} s, 21^3 grid {ci_s:.2} s",
            table.iterations, table.residual, worst
        ),
    )
}

/// Exhaustive enumeration: all candidates first, then the minimum objective,
/// then the smallest `(|F_m|, F_b)` key among exact ties.
fn oracle_one_step(spec: &OcpSpec, table: &ValueTable, controls: &ControlGrid, s: &State, v_f_next: f64) -> Control {
    let mut cands = Vec::new();
    for &f_m in &controls.f_m_levels {
        for &f_b in &controls.f_b_levels {
            let u = Control::new(f_m, f_b);
            if spec.is_control_feasible(s, &u) {
                let next = spec.step_unchecked(s, &u, v_f_next).next;
                let j = spec.stage_cost(s, &u) + spec.gap_penalty(next.d) + table.discount * table.interpolate(&next);
                cands.push((j, [u.f_m.abs(), u.f_b], u));
            }
        }
    }
    pick(cands)
}

fn oracle_two_step(spec: &OcpSpec, table: &ValueTable, controls: &ControlGrid, s: &State, v_f_prev: f64) -> Control {
    let v1 = (2.0 * s.v_f - v_f_prev).max(0.0);
    let v2 = (3.0 * s.v_f - 2.0 * v_f_prev).max(0.0);
    let g = table.discount;
    let all: Vec<Control> = controls
        .f_m_levels
        .iter()
        .flat_map(|&m| controls.f_b_levels.iter().map(move |&b| Control::new(m, b)))
        .collect();
    let mut cands = Vec::new();
    for u in &all {
        if !spec.is_control_feasible(s, u) {
            continue;
        }
        let s1 = spec.step_unchecked(s, u, v1).next;
        for u1 in &all {
            if !spec.is_control_feasible(&s1, u1) {
                continue;
            }
            let s2 = spec.step_unchecked(&s1, u1, v2).next;
            let first = spec.stage_cost(s, u) + spec.gap_penalty(s1.d);
            let second = spec.stage_cost(&s1, u1) + spec.gap_penalty(s2.d);
            let j = first + g * (second + g * table.interpolate(&s2));
            cands.push((j, [u.f_m.abs(), u.f_b, u1.f_m.abs(), u1.f_b], *u));
        }
    }
    pick(cands)
}

fn pick<const N: usize>(cands: Vec<(f64, [f64; N], Control)>) -> Control {
    let best = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    cands
        .into_iter()
        .filter(|c| c.0 == best)
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap()
        .2
}

fn c2_oracles(sh: &mut Shared) -> Line {
    let spec = &sh.spec;
    let controls = &sh.controls;
    let grid = Grid::build(spec, 5, 1.0, 5, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let values: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-2e5..2e6)).collect();
    let table = ValueTable::new(grid.clone(), values, 0.99, 0, 0.0).unwrap();
    // flat table and a power-free motor: every control ties
    let flat_spec = OcpSpec {
        model: MotorModel {
            c: [0.0; 6],
            ..spec.model.clone()
        },
        ..spec.clone()
    };
    let flat = ValueTable::new(grid.clone(), vec![0.0; grid.len()], 0.99, 0, 0.0).unwrap();

    let (mut n, mut ok) = (0, 0);
    for i in 0..1000 {
        let s = State::new(rng.random_range(0.5..2000.0), rng.random_range(0.0..40.0), rng.random_range(0.0..40.0));
        let v_f_next = (s.v_f + rng.random_range(-2.0..2.0)).max(0.0);
        let v_f_prev = (s.v_f + rng.random_range(-2.0..2.0)).max(0.0);
        let (sp, t) = if i % 10 == 9 { (&flat_spec, &flat) } else { (spec, &table) };
        n += 2;
        ok += usize::from(dp_forward_one_step(sp, t, controls, &s, v_f_next).0 == oracle_one_step(sp, t, controls, &s, v_f_next));
        ok += usize::from(dp_forward_two_step(sp, t, controls, &s, v_f_prev).0 == oracle_two_step(sp, t, controls, &s, v_f_prev));
    }
    line(ok == n, format!("{ok}/{n} decisions match (1000 states, one- and two-step, 100 of them all-tie)"))
}

fn c3_adp(sh: &mut Shared) -> Line {
    default_table(sh);
    let sur = train_value_surrogate(sh.table.as_ref().unwrap(), &SurrogateOptions::default()).unwrap();
    let r = sur.report;
    sh.surrogate = Some(sur);
    line(
        r.holdout_rrmse <= 0.10,
        format!("held-out RRMSE {:.4} (train {:.4}), limit 0.10", r.holdout_rrmse, r.train_rrmse),
    )
}

fn c4_motor(_: &mut Shared) -> Line {
    let map = SyntheticMotorMap::default();
    let fit = fit_motor_model(&map.samples(), &map.envelope_samples()).unwrap();
    line(
        fit.power_rrmse <= 0.25 && fit.envelope_rrmse <= 0.35,
        format!(
            "power RRMSE {:.4} (limit 0.25), envelope RRMSE {:.4} (limit 0.35)",
            fit.power_rrmse, fit.envelope_rrmse
        ),
    )
}

fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

fn central_difference(net: &Mlp, h: f64, loss: impl Fn(&Mlp) -> f64) -> Vec<f64> {
    let base = net.flat_params();
    let mut probe = net.clone();
    (0..base.len())
        .map(|i| {
            let mut p = base.clone();
            p[i] += h;
            probe.set_flat_params(&p).unwrap();
            let up = loss(&probe);
            p[i] -= 2.0 * h;
            probe.set_flat_params(&p).unwrap();
            (up - loss(&probe)) / (2.0 * h)
        })
        .collect()
}

fn c5_gradients(_: &mut Shared) -> Line {
    let h = 1e-5;
    let (mut worst_bp, mut worst_actor) = (0.0f64, 0.0f64);
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let net = Mlp::new(&[3, 7, 5, 2], &[Activation::Tanh, Activation::Sigmoid, Activation::Linear], seed).unwrap();
        let n = 5;
        let x: Vec<f64> = (0..3 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = |m: &Mlp| -> f64 { m.forward_batch(&x, n).output().iter().zip(&w).map(|(y, w)| y * w).sum() };
        let g = net.backward(&net.forward_batch(&x, n), &w).flatten();
        worst_bp = worst_bp.max(rel_err(&g, &central_difference(&net, h, loss)));

        let actor = Mlp::uniform(3, 2, 8, Activation::Tanh, 1, Activation::Tanh, 1000 + seed).unwrap();
        let critic = Mlp::uniform(4, 3, 6, Activation::Tanh, 1, Activation::Linear, 2000 + seed).unwrap();
        let obs: Vec<f64> = (0..3 * n).map(|_| rng.random_range(0.0..1.0)).collect();
        let composed = |a: &Mlp| -> f64 {
            let q: f64 = obs
                .chunks_exact(3)
                .map(|o| critic.forward(&[o[0], o[1], o[2], a.forward(o)[0]])[0])
                .sum();
            -q / n as f64
        };
        let g = actor_gradient(&actor, &critic, &obs, n).flatten();
        worst_actor = worst_actor.max(rel_err(&g, &central_difference(&actor, h, composed)));
    }
    line(
        worst_bp <= 1e-4 && worst_actor <= 1e-4,
        format!("max relative error: backprop {worst_bp:.2e}, actor gradient {worst_actor:.2e} (20 nets each, limit 1e-4)"),
    )
}

fn trend(log: &TrainingLog) -> (f64, usize) {
    let n = log.episodes.len();
    let ratio = log.mean_reward(n - 50..n) / log.mean_reward(0..50);
    let done = log.episodes[n - 50..].iter().filter(|e| !e.terminated_early).count();
    (ratio, done)
}

fn c9_rl(sh: &mut Shared) -> Line {
    let hp = RlHyperparams::default();
    let cycle = builtin("hwy-synth").unwrap();
    let mut pass = hp.episodes == 500;
    let mut parts = Vec::new();
    for kind in ["dqn", "ddpg"] {
        let mut env = EcoAccEnv::new(sh.spec.clone(), &cycle, hp.rewards()).unwrap();
        let start = Instant::now();
        let (agent, log) = if kind == "dqn" {
            train_dqn(&mut env, &hp, 0, "hwy-synth").unwrap()
        } else {
            train_ddpg(&mut env, &hp, 0, "hwy-synth").unwrap()
        };
        let secs = start.elapsed().as_secs_f64();
        let (ratio, done) = trend(&log);
        pass &= secs <= 1200.0 && ratio >= 1.2 && done >= 45;
        parts.push(format!("{kind}: {secs:.0} s, last/first-50 reward {ratio:.2}, {done}/50 final episodes complete"));
        sh.agents.push(agent);
    }
    line(pass, parts.join("; "))
}

fn simulate_all(sh: &mut Shared) {
    if !sh.runs.is_empty() {
        return;
    }
    default_table(sh);
    if sh.surrogate.is_none() {
        sh.surrogate = Some(train_value_surrogate(sh.table.as_ref().unwrap(), &SurrogateOptions::default()).unwrap());
    }
    for name in BUILTIN_NAMES {
        let cycle = builtin(name).unwrap();
        let table = sh.table.as_ref().unwrap();
        let mut ctrls: Vec<Box<dyn Controller + '_>> = vec![
            Box::new(DpOneStep { table, controls: &sh.controls }),
            Box::new(DpTwoStep { table, controls: &sh.controls }),
            Box::new(AdpTwoStep {
                surrogate: sh.surrogate.as_ref().unwrap(),
                controls: &sh.controls,
            }),
            Box::new(FrontMirror),
        ];
        for agent in &sh.agents {
            ctrls.push(Box::new(greedy_policy(agent)));
        }
        let run = compare(&sh.spec, &cycle, &mut ctrls, true).unwrap();
        sh.runs.push(run);
    }
}

fn c6_constraints(sh: &mut Shared) -> Line {
    simulate_all(sh);
    let spec = &sh.spec;
    let (mut steps, mut bad) = (0usize, Vec::new());
    for (_, traces) in &sh.runs {
        for t in traces {
            let last = t.rows.len() - 1;
            for (k, r) in t.rows.iter().enumerate() {
                let s = State::new(r.d, r.v, r.v_f);
                let mut ok = spec.is_state_admissible(&s);
                if k < last {
                    let u = Control::new(r.f_m, r.f_b);
                    ok &= spec.is_control_feasible(&s, &u) && u.f_m * u.f_b <= 0.0;
                    steps += 1;
                }
                if !ok {
                    bad.push(format!("{}/{}@{k}", t.scenario, t.controller));
                }
            }
        }
    }
    let n = sh.runs.iter().map(|r| r.1.len()).sum::<usize>();
    line(
        bad.is_empty(),
        format!("{n} simulations, {steps} steps, {} violations {:?}", bad.len(), &bad[..bad.len().min(5)]),
    )
}

fn c7_energy(sh: &mut Shared) -> Line {
    simulate_all(sh);
    let spec = &sh.spec;
    let (mut worst_e, mut worst_d) = (0.0f64, 0.0f64);
    for (_, traces) in &sh.runs {
        for t in traces {
            let applied = &t.rows[..t.rows.len() - 1];
            let costs: f64 = applied
                .iter()
                .map(|r| spec.stage_cost(&State::new(r.d, r.v, r.v_f), &Control::new(r.f_m, r.f_b)))
                .sum();
            let rect: f64 = applied.iter().map(|r| r.p_mot * t.dt).sum();
            for e in [rect, t.energy_rect] {
                worst_e = worst_e.max((costs - e).abs() / costs.abs().max(1.0));
            }
            let d_final = t.rows.last().unwrap().d;
            worst_d = worst_d.max((d_final - (spec.d0 + t.front_distance - t.host_distance)).abs());
        }
    }
    line(
        worst_e <= 1e-9 && worst_d <= 1e-6,
        format!("max relative energy mismatch {worst_e:.2e} (limit 1e-9), max gap-identity error {worst_d:.2e} m (limit 1e-6)"),
    )
}

fn c8_direction(sh: &mut Shared) -> Line {
    simulate_all(sh);
    let mut pass = true;
    let mut parts = Vec::new();
    for (report, _) in &sh.runs {
        let floor_for = |c: &str| match (report.scenario.as_str(), c) {
            ("aggressive-synth", "dp1") => Some(105.0),
            ("aggressive-synth", _) => None,
            (_, "dp1" | "dp2" | "adp") => Some(100.0),
            _ => None,
        };
        for c in ["dp1", "dp2", "adp"] {
            let row = report.row(c).unwrap();
            let ratio = row.ratio_pct;
            parts.push(format!("{}/{c} {}", report.scenario, ratio.map_or("n/a".into(), |r| format!("{r:.1}%"))));
            if let Some(floor) = floor_for(c) {
                pass &= row.status == "finished" && ratio.is_some_and(|r| r >= floor);
            }
        }
    }
    line(pass, parts.join(", "))
}

fn run_cli(args: &[&str]) -> i32 {
    ecoacc::cli::run(std::iter::once("ecoacc").chain(args.iter().copied()))
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    if a.is_dir() {
        let mut names: Vec<_> = std::fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        return names.iter().all(|n| same_bytes(&a.join(n), &b.join(n)));
    }
    std::fs::read(a).unwrap() == std::fs::read(b).unwrap()
}

fn c10_determinism(_: &mut Shared) -> Line {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[grid]\nn_d = 21\nn_v = 21\nn_vf = 21\n\n[rl]\nepisodes = 3\nwarmup = 200\n\n[adp]\nepochs = 5\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let mut checked = Vec::new();
    let mut pass = true;
    for rep in ["a", "b"] {
        let out = |name: &str| dir.path().join(format!("{rep}-{name}")).to_str().unwrap().to_string();
        let (table, csv) = (out("table.ecovt"), out("table.csv"));
        let codes = [
            run_cli(&["dp-backward", "--config", cfg, "--out", &table, "--csv", &csv]),
            run_cli(&["train-dqn", "--config", cfg, "--cycle", "hwy-synth", "--out", &out("dqn"), "--seed", "3"]),
            run_cli(&["train-ddpg", "--config", cfg, "--cycle", "hwy-synth", "--out", &out("ddpg"), "--seed", "3"]),
            run_cli(&[
                "simulate", "--config", cfg, "--controller", "dp2", "--cycle", "mixed-synth", "--table", &table,
                "--trace", &out("trace.csv"),
            ]),
            run_cli(&[
                "compare", "--config", cfg, "--cycle", "aggressive-synth", "--controllers", "dp1,adp,dqn,ddpg,front-mirror",
                "--table", &table, "--agent", &out("dqn"), "--agent", &out("ddpg"), "--report", &out("report.csv"),
            ]),
        ];
        pass &= codes.iter().all(|&c| c == 0);
    }
    for name in ["table.ecovt", "table.csv", "dqn", "ddpg", "trace.csv", "report.csv"] {
        let (a, b) = (dir.path().join(format!("a-{name}")), dir.path().join(format!("b-{name}")));
        let same = a.exists() && same_bytes(&a, &b);
        pass &= same;
        checked.push(format!("{name} {}", if same { "identical" } else { "DIFFERS" }));
    }
    line(pass, checked.join(", "))
}

fn bits(xs: &[f64]) -> Vec<u64> {
    xs.iter().map(|x| x.to_bits()).collect()
}

fn c11_roundtrips(sh: &mut Shared) -> Line {
    let dir = tempfile::tempdir().unwrap();
    let mut parts = Vec::new();
    let mut pass = true;

    let table = default_table(sh).clone();
    let p = dir.path().join("t.ecovt");
    table.save(&p).unwrap();
    let back = ValueTable::load(&p).unwrap();
    let ok = bits(&back.values) == bits(&table.values)
        && bits(&back.grid.d_axis) == bits(&table.grid.d_axis)
        && bits(&back.grid.v_axis) == bits(&table.grid.v_axis)
        && bits(&back.grid.vf_axis) == bits(&table.grid.vf_axis)
        && back.discount.to_bits() == table.discount.to_bits();
    pass &= ok;
    parts.push(format!("value table {}", if ok { "bit-exact" } else { "MISMATCH" }));

    if let Some(sur) = &sh.surrogate {
        let p = dir.path().join("s.json");
        sur.save(&p).unwrap();
        let back = ValueSurrogate::load(&p).unwrap();
        let ok = bits(&back.net.flat_params()) == bits(&sur.net.flat_params()) && back == *sur;
        pass &= ok;
        parts.push(format!("surrogate {}", if ok { "bit-exact" } else { "MISMATCH" }));
    }
    for agent in &sh.agents {
        let p = dir.path().join(agent.kind().name());
        agent.save(&p).unwrap();
        let back = Agent::load(&p).unwrap();
        let nets = |a: &Agent| {
            let mut v = a.critic.flat_params();
            if let Some(actor) = &a.actor {
                v.extend(actor.flat_params());
            }
            bits(&v)
        };
        let ok = nets(&back) == nets(agent) && back == *agent;
        pass &= ok;
        parts.push(format!("{} agent {}", agent.kind().name(), if ok { "bit-exact" } else { "MISMATCH" }));
    }

    let mut worst_rel = 0.0f64;
    let mut exact = true;
    for name in BUILTIN_NAMES {
        let c = builtin(name).unwrap();
        for unit in [SpeedUnit::Mps, SpeedUnit::Kph, SpeedUnit::Mph] {
            let p = dir.path().join(format!("{name}.csv"));
            c.save(&p, unit).unwrap();
            let back: DrivingCycle = load_cycle(&p, unit).unwrap();
            if unit == SpeedUnit::Mps {
                exact &= bits(back.speeds()) == bits(c.speeds()) && bits(back.times()) == bits(c.times());
            }
            for (a, b) in back.speeds().iter().zip(c.speeds()) {
                worst_rel = worst_rel.max((a - b).abs() / b.abs().max(1.0));
            }
        }
    }
    let ok = exact && worst_rel <= 1e-12;
    pass &= ok;
    parts.push(format!("cycles: m/s bit-exact {exact}, worst converted-unit error {worst_rel:.1e}"));
    line(pass, parts.join(", "))
}
