use std::fmt;
use std::path::Path;

use super::controllers::{Controller, StepContext};
use crate::csvio;
use crate::cycles::DrivingCycle;
use crate::error::{Error, Result};
use crate::ocp::{Control, OcpSpec, State};

/// One sample of a simulated episode. For every row but the last, the
/// control is the one applied from this state and `p_mot` its power. The
/// last row is the terminal state and repeats the final control and power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub d: f64,
    pub v: f64,
    pub v_f: f64,
    pub f_m: f64,
    pub f_b: f64,
    pub p_mot: f64,
    /// Trapezoid-integrated energy up to `t` [J].
    pub e_cum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Finished,
    /// The gap left its admissible range on arrival at this step.
    GapViolation { step: usize },
}

impl fmt::Display for Completion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Completion::Finished => f.write_str("finished"),
            Completion::GapViolation { step } => write!(f, "gap-violation@{step}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub controller: String,
    pub scenario: String,
    pub dt: f64,
    pub rows: Vec<TraceRow>,
    pub status: Completion,
    /// Sum of stage costs `P_k·dt` over the applied steps [J].
    pub energy_rect: f64,
    /// Distance driven by the host, `Σ v_k·dt` [m].
    pub host_distance: f64,
    /// Distance driven by the front vehicle, `Σ v_f,k·dt` [m].
    pub front_distance: f64,
}

impl EpisodeTrace {
    pub fn steps(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn completed(&self) -> bool {
        self.status == Completion::Finished
    }

    /// Trapezoid-integrated energy [J].
    pub fn energy(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.e_cum)
    }

    pub fn final_state(&self) -> Option<State> {
        self.rows.last().map(|r| State::new(r.d, r.v, r.v_f))
    }

    /// Every state admissible (until a flagged violation) and every applied
    /// control feasible.
    pub fn audit(&self, spec: &OcpSpec) -> Result<()> {
        let last = self.rows.len().saturating_sub(1);
        for (k, r) in self.rows.iter().enumerate() {
            let s = State::new(r.d, r.v, r.v_f);
            let flagged = matches!(self.status, Completion::GapViolation { step } if step == k);
            if !flagged && !spec.is_state_admissible(&s) {
                return Err(Error::ConstraintViolation(format!("step {k}: inadmissible state {s}")));
            }
            if k < last {
                let u = Control::new(r.f_m, r.f_b);
                if !spec.is_control_feasible(&s, &u) || u.f_m * u.f_b > 0.0 {
                    return Err(Error::ConstraintViolation(format!("step {k}: infeasible control {u:?} at {s}")));
                }
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        csvio::write_file(
            path.as_ref(),
            &TRACE_HEADER,
            self.rows
                .iter()
                .map(|r| vec![r.t, r.d, r.v, r.v_f, r.f_m, r.f_b, r.p_mot, r.e_cum]),
        )
    }
}

pub const TRACE_HEADER: [&str; 8] = ["t", "d", "v", "v_f", "f_m", "f_b", "p_mot", "e_cum"];

/// Reads the rows of a trace CSV written by [`EpisodeTrace::save_csv`].
pub fn load_trace_rows(path: impl AsRef<Path>) -> Result<Vec<TraceRow>> {
    let rows = csvio::read_file(path.as_ref(), &TRACE_HEADER)?;
    Ok(rows
        .into_iter()
        .map(|r| {
            let v = r.values;
            TraceRow {
                t: v[0],
                d: v[1],
                v: v[2],
                v_f: v[3],
                f_m: v[4],
                f_b: v[5],
                p_mot: v[6],
                e_cum: v[7],
            }
        })
        .collect())
}

/// Brings a cycle onto the simulator's time step.
pub fn cycle_on_grid(spec: &OcpSpec, cycle: &DrivingCycle) -> Result<DrivingCycle> {
    let uniform = cycle.times().windows(2).all(|w| ((w[1] - w[0]) - spec.dt).abs() <= 1e-9 * spec.dt);
    if uniform {
        Ok(cycle.clone())
    } else {
        cycle.resample(spec.dt)
    }
}

/// Simulates the host behind the scripted front vehicle until the cycle
/// ends or the gap leaves `(d_min, d_max]`.
pub fn run_episode<C: Controller + ?Sized>(
    spec: &OcpSpec,
    cycle: &DrivingCycle,
    controller: &mut C,
    record: bool,
) -> Result<EpisodeTrace> {
    spec.validate()?;
    let cycle = cycle_on_grid(spec, cycle)?;
    let vf = cycle.speeds();
    let n = vf.len() - 1;
    controller.reset();

    let mut s = spec.initial_state(vf[0]);
    let mut rows = Vec::with_capacity(if record { n + 1 } else { 2 });
    let mut status = Completion::Finished;
    let (mut e_trap, mut e_rect, mut host, mut front) = (0.0, 0.0, 0.0, 0.0);
    let mut last: Option<(Control, f64)> = None;
    let mut t = 0.0;
    for k in 0..n {
        t = cycle.times()[k];
        let ctx = StepContext {
            k,
            t,
            state: s,
            v_f_prev: if k == 0 { vf[0] } else { vf[k - 1] },
            v_f_next: vf[k + 1],
        };
        let u = controller.control(spec, &ctx);
        if !spec.is_control_feasible(&s, &u) {
            return Err(Error::ConstraintViolation(format!(
                "controller {} chose infeasible control (F_m = {}, F_b = {}) at step {k}, {s}",
                controller.name(),
                u.f_m,
                u.f_b
            )));
        }
        let p = spec.step_power(&s, &u);
        if let Some((_, p_prev)) = last {
            e_trap += 0.5 * (p_prev + p) * spec.dt;
        }
        if record {
            rows.push(TraceRow {
                t,
                d: s.d,
                v: s.v,
                v_f: s.v_f,
                f_m: u.f_m,
                f_b: u.f_b,
                p_mot: p,
                e_cum: e_trap,
            });
        }
        e_rect += spec.stage_cost(&s, &u);
        host += s.v * spec.dt;
        front += s.v_f * spec.dt;
        last = Some((u, p));
        s = spec.step_unchecked(&s, &u, vf[k + 1]).next;
        t = cycle.times()[k + 1];
        if !spec.gap_ok(s.d) {
            status = Completion::GapViolation { step: k + 1 };
            break;
        }
    }
    let (u_last, p_last) = last.unwrap_or((Control::COAST, 0.0));
    if last.is_some() {
        e_trap += p_last * spec.dt;
    }
    if !record {
        rows.clear();
    }
    rows.push(TraceRow {
        t,
        d: s.d,
        v: s.v,
        v_f: s.v_f,
        f_m: u_last.f_m,
        f_b: u_last.f_b,
        p_mot: p_last,
        e_cum: e_trap,
    });
    if let Completion::GapViolation { step } = status {
        log::warn!("{} left the gap range at step {step} on {}", controller.name(), cycle.name());
    }
    Ok(EpisodeTrace {
        controller: controller.name().to_string(),
        scenario: cycle.name().to_string(),
        dt: spec.dt,
        rows,
        status,
        energy_rect: e_rect,
        host_distance: host,
        front_distance: front,
    })
}

/// Energy of the scripted front vehicle tracking its own cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontEnergy {
    /// Trapezoid distance of the cycle [m].
    pub distance: f64,
    /// Trapezoid-integrated net energy [J].
    pub energy: f64,
    /// Steps where the cycle demanded more than the envelope or brakes allow.
    pub clamped_steps: usize,
}

impl FrontEnergy {
    pub fn energy_kwh(&self) -> f64 {
        self.energy / 3.6e6
    }
}

/// Inverse dynamics along the cycle: `F = m·a + F_air + F_road`, motor force
/// saturated to the envelope and friction brake taking the excess
/// deceleration. With `regen_credit` off, negative power counts as zero.
pub fn front_vehicle_energy(spec: &OcpSpec, cycle: &DrivingCycle, regen_credit: bool) -> Result<FrontEnergy> {
    let cycle = cycle_on_grid(spec, cycle)?;
    let v = cycle.speeds();
    let p = &spec.params;
    let mut clamped = 0;
    let mut powers = Vec::with_capacity(v.len());
    for k in 0..v.len() - 1 {
        let demand = p.mass * (v[k + 1] - v[k]) / spec.dt + p.aero_drag(v[k]) + p.road_load();
        let (lo, hi) = spec.model.force_limits(v[k]);
        let f_m = demand.clamp(lo, hi);
        if demand > hi || demand < lo - spec.f_b_max {
            clamped += 1;
        }
        let pk = spec.model.power(0.5 * (v[k] + v[k + 1]), f_m);
        powers.push(if regen_credit { pk } else { pk.max(0.0) });
    }
    if clamped > 0 {
        log::warn!("front vehicle on {}: {clamped} steps exceed the force limits and were clamped", cycle.name());
    }
    Ok(FrontEnergy {
        distance: cycle.distance(),
        energy: trapezoid_held(&powers, spec.dt),
        clamped_steps: clamped,
    })
}

/// Trapezoid over `p_0..p_{n-1}` with the last sample held over the final
/// interval.
pub(crate) fn trapezoid_held(p: &[f64], dt: f64) -> f64 {
    let inner: f64 = p.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum();
    inner + p.last().map_or(0.0, |x| x * dt)
}

/// Distance per energy [km/kWh].
pub fn efficiency(distance_m: f64, energy_j: f64) -> Result<f64> {
    if !(energy_j > 0.0) {
        return Err(Error::UndefinedMetric(format!("efficiency with net energy {energy_j} J")));
    }
    Ok((distance_m / 1000.0) / (energy_j / 3.6e6))
}
