use serde::{Deserialize, Serialize};

use super::grid::{locate, ControlGrid, Grid, ValueTable};
use crate::error::{Error, Result};
use crate::ocp::{OcpSpec, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackwardOptions {
    pub discount: f64,
    /// Stop once a Bellman sweep changes no entry by more than this [J].
    pub tol: f64,
    pub max_sweeps: u32,
    /// Policy-evaluation sweeps between Bellman sweeps. 0 is plain value
    /// iteration.
    pub eval_sweeps: u32,
}

impl Default for BackwardOptions {
    fn default() -> Self {
        Self {
            discount: 0.99,
            tol: 1.0,
            max_sweeps: 500,
            eval_sweeps: 20,
        }
    }
}

impl BackwardOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.discount && self.discount < 1.0) {
            return Err(Error::invalid(format!("discount {} outside (0, 1)", self.discount)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::invalid("max_sweeps must be at least 1"));
        }
        Ok(())
    }
}

/// Cost and successor-speed lookup of one control at one speed knot.
#[derive(Debug, Clone, Copy)]
struct Move {
    cost: f64,
    j: u32,
    tv: f64,
}

/// A state's chosen move together with its gap lookup.
#[derive(Debug, Clone, Copy)]
struct Link {
    base: f64,
    i: u32,
    td: f64,
    j: u32,
    tv: f64,
}

struct Model<'a> {
    grid: &'a Grid,
    moves: Vec<Vec<Move>>,
    /// Per (gap, speed, front speed): penalty and gap lookup of the successor.
    gaps: Vec<(f64, u32, f64)>,
}

impl<'a> Model<'a> {
    fn build(spec: &OcpSpec, grid: &'a Grid, controls: &ControlGrid) -> Result<Self> {
        let mut moves = Vec::with_capacity(grid.v_axis.len());
        for &v in &grid.v_axis {
            let feasible = controls.feasible(spec, v);
            if feasible.is_empty() {
                return Err(Error::EmptyControlSet(format!("no feasible control at v = {v} m/s")));
            }
            let s = State::new(spec.d0, v, 0.0);
            moves.push(
                feasible
                    .iter()
                    .map(|u| {
                        let next = spec.step_unchecked(&s, u, 0.0).next;
                        let (j, tv) = locate(&grid.v_axis, next.v);
                        Move {
                            cost: spec.stage_cost(&s, u),
                            j: j as u32,
                            tv,
                        }
                    })
                    .collect(),
            );
        }
        let mut gaps = Vec::with_capacity(grid.len());
        for &d in &grid.d_axis {
            for &v in &grid.v_axis {
                for &v_f in &grid.vf_axis {
                    let d_next = d + (v_f - v) * spec.dt;
                    let (i, td) = locate(&grid.d_axis, d_next);
                    gaps.push((spec.gap_penalty(d_next), i as u32, td));
                }
            }
        }
        Ok(Self { grid, moves, gaps })
    }

    /// Bilinear lookup within the front-speed slice `k`; the front speed
    /// stays on its knot across a step.
    #[inline]
    fn lookup(&self, values: &[f64], i: usize, td: f64, j: usize, tv: f64, k: usize) -> f64 {
        let g = self.grid;
        let i1 = (i + 1).min(g.d_axis.len() - 1);
        let j1 = (j + 1).min(g.v_axis.len() - 1);
        let (sd, sv) = (1.0 - td, 1.0 - tv);
        sd * sv * values[g.offset(i, j, k)]
            + sd * tv * values[g.offset(i, j1, k)]
            + td * sv * values[g.offset(i1, j, k)]
            + td * tv * values[g.offset(i1, j1, k)]
    }

    /// One Jacobi Bellman sweep; returns the largest change.
    fn bellman(&self, gamma: f64, old: &[f64], new: &mut [f64], policy: &mut [Link]) -> f64 {
        let g = self.grid;
        let n_vf = g.vf_axis.len();
        let mut residual = 0.0f64;
        for idx in 0..g.len() {
            let (_, i_v, k) = g.unravel(idx);
            let (pen, i, td) = self.gaps[idx];
            let mut best = f64::INFINITY;
            let mut arg = 0;
            for (m, mv) in self.moves[i_v].iter().enumerate() {
                let q = mv.cost + pen + gamma * self.lookup(old, i as usize, td, mv.j as usize, mv.tv, k);
                if q < best {
                    best = q;
                    arg = m;
                }
            }
            let mv = self.moves[i_v][arg];
            policy[idx] = Link {
                base: mv.cost + pen,
                i,
                td,
                j: mv.j,
                tv: mv.tv,
            };
            residual = residual.max((best - old[idx]).abs());
            new[idx] = best;
        }
        debug_assert_eq!(new.len() % n_vf, 0);
        residual
    }

    fn evaluate(&self, gamma: f64, policy: &[Link], old: &[f64], new: &mut [f64]) {
        let n_vf = self.grid.vf_axis.len();
        for (idx, l) in policy.iter().enumerate() {
            new[idx] = l.base + gamma * self.lookup(old, l.i as usize, l.td, l.j as usize, l.tv, idx % n_vf);
        }
    }
}

/// Discounted infinite-horizon value table with the per-sweep Bellman
/// residuals.
pub fn dp_backward_traced(
    spec: &OcpSpec,
    grid: &Grid,
    controls: &ControlGrid,
    opts: &BackwardOptions,
) -> Result<(ValueTable, Vec<f64>)> {
    spec.validate()?;
    opts.validate()?;
    let model = Model::build(spec, grid, controls)?;
    let n = grid.len();
    let gamma = opts.discount;
    let mut values = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut policy = vec![
        Link {
            base: 0.0,
            i: 0,
            td: 0.0,
            j: 0,
            tv: 0.0
        };
        n
    ];
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        residual = model.bellman(gamma, &values, &mut scratch, &mut policy);
        std::mem::swap(&mut values, &mut scratch);
        history.push(residual);
        log::debug!("sweep {sweeps}: residual {residual:.4} J");
        if residual <= opts.tol {
            break;
        }
        for _ in 0..opts.eval_sweeps {
            model.evaluate(gamma, &policy, &values, &mut scratch);
            std::mem::swap(&mut values, &mut scratch);
        }
    }
    if residual > opts.tol {
        log::warn!(
            "value iteration stopped after {sweeps} sweeps with residual {residual:.3} J > tol {} J",
            opts.tol
        );
    }
    let table = ValueTable::new(grid.clone(), values, gamma, sweeps, residual)?;
    Ok((table, history))
}

/// See [`dp_backward_traced`]. A non-converged table is still returned; check
/// [`ValueTable::converged`].
pub fn dp_backward(spec: &OcpSpec, grid: &Grid, controls: &ControlGrid, opts: &BackwardOptions) -> Result<ValueTable> {
    dp_backward_traced(spec, grid, controls, opts).map(|(t, _)| t)
}

/// Largest `|V(s) - (T V)(s)|` over the grid, with the Bellman operator
/// evaluated by full trilinear interpolation. Independent of the solver's
/// lookup tables.
pub fn bellman_residual(spec: &OcpSpec, table: &ValueTable, controls: &ControlGrid) -> f64 {
    let grid = &table.grid;
    let mut worst = 0.0f64;
    for idx in 0..grid.len() {
        let s = grid.state(idx);
        let best = controls
            .feasible(spec, s.v)
            .iter()
            .map(|u| {
                let next = spec.step_unchecked(&s, u, s.v_f).next;
                spec.stage_cost(&s, u) + spec.gap_penalty(next.d) + table.discount * table.interpolate(&next)
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((best - table.values[idx]).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocp::Control;

    fn small() -> (OcpSpec, Grid, ControlGrid) {
        let spec = OcpSpec::default();
        let grid = Grid::build(&spec, 9, 2.0, 6, 5).unwrap();
        let controls = ControlGrid::uniform(5, -2000.0, 2000.0, 3, 6000.0).unwrap();
        (spec, grid, controls)
    }

    /// Plain value iteration written directly from the Bellman equation.
    fn reference_vi(spec: &OcpSpec, grid: &Grid, controls: &ControlGrid, gamma: f64, sweeps: usize) -> Vec<f64> {
        let mut table = ValueTable::new(grid.clone(), vec![0.0; grid.len()], gamma, 0, 0.0).unwrap();
        for _ in 0..sweeps {
            let mut next = table.values.clone();
            for (idx, slot) in next.iter_mut().enumerate() {
                let s = grid.state(idx);
                let mut best = f64::INFINITY;
                for &f_m in &controls.f_m_levels {
                    for &f_b in &controls.f_b_levels {
                        let u = Control::new(f_m, f_b);
                        if !spec.is_control_feasible(&s, &u) {
                            continue;
                        }
                        let a = spec.params.net_acceleration(s.v, f_m, f_b);
                        let v_next = (s.v + a * spec.dt).clamp(spec.v_min, spec.v_max);
                        let d_next = s.d + (s.v_f - s.v) * spec.dt;
                        let pen = if d_next > spec.d_min && d_next <= spec.d_max { 0.0 } else { spec.violation_penalty };
                        // mean-speed pricing, charged only while moving
                        let raw = s.v + a * spec.dt;
                        let cost = if raw >= spec.v_min {
                            spec.model.power(0.5 * (s.v + v_next), f_m) * spec.dt
                        } else {
                            let tau = (s.v - spec.v_min) / -a;
                            spec.model.power(0.5 * (s.v + spec.v_min), f_m) * tau
                                + spec.model.power(spec.v_min, f_m) * (spec.dt - tau)
                        };
                        let q = cost
                            + pen
                            + gamma * table.interpolate(&State::new(d_next, v_next, s.v_f));
                        best = best.min(q);
                    }
                }
                *slot = best;
            }
            table.values = next;
        }
        table.values
    }

    #[test]
    fn plain_value_iteration_matches_reference_sweep_by_sweep() {
        let (spec, grid, controls) = small();
        for sweeps in [1, 2, 7] {
            let opts = BackwardOptions {
                discount: 0.9,
                tol: 1e-12,
                max_sweeps: sweeps,
                eval_sweeps: 0,
            };
            let got = dp_backward(&spec, &grid, &controls, &opts).unwrap();
            let want = reference_vi(&spec, &grid, &controls, 0.9, sweeps as usize);
            for (a, b) in got.values.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
            }
            assert_eq!(got.iterations, sweeps);
        }
    }

    #[test]
    fn converged_table_satisfies_the_bellman_equation() {
        let (spec, grid, controls) = small();
        let opts = BackwardOptions::default();
        let (table, history) = dp_backward_traced(&spec, &grid, &controls, &opts).unwrap();
        assert!(table.converged(opts.tol), "residual {}", table.residual);
        assert!(table.iterations <= 500);
        assert!(bellman_residual(&spec, &table, &controls) <= opts.tol);
        assert_eq!(history.len(), table.iterations as usize);
        // same fixed point as plain value iteration
        let plain = BackwardOptions { eval_sweeps: 0, max_sweeps: 2000, ..opts };
        let reference = dp_backward(&spec, &grid, &controls, &plain).unwrap();
        for (a, b) in table.values.iter().zip(&reference.values) {
            assert!((a - b).abs() <= 2.0 * opts.tol / (1.0 - opts.discount), "{a} vs {b}");
        }
    }

    #[test]
    fn residuals_contract_in_plain_value_iteration() {
        let (spec, grid, controls) = small();
        let opts = BackwardOptions {
            discount: 0.9,
            eval_sweeps: 0,
            max_sweeps: 300,
            ..Default::default()
        };
        let (_, history) = dp_backward_traced(&spec, &grid, &controls, &opts).unwrap();
        // the contraction bound holds once the initial transient is over
        let tail = &history[history.len() / 2..];
        assert!(tail.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{tail:?}");
    }

    #[test]
    fn sweep_cap_reports_non_convergence() {
        let (spec, grid, controls) = small();
        let opts = BackwardOptions {
            max_sweeps: 2,
            eval_sweeps: 0,
            ..Default::default()
        };
        let t = dp_backward(&spec, &grid, &controls, &opts).unwrap();
        assert_eq!(t.iterations, 2);
        assert!(!t.converged(opts.tol));
    }

    #[test]
    fn degenerate_standstill_problem_has_zero_value() {
        let spec = OcpSpec::default();
        let grid = Grid::new(vec![10.0, 20.0, 50.0], vec![0.0], vec![0.0]).unwrap();
        let controls = ControlGrid::new(vec![0.0], vec![0.0]).unwrap();
        let t = dp_backward(&spec, &grid, &controls, &BackwardOptions::default()).unwrap();
        assert!(t.values.iter().all(|&v| v == 0.0));
        assert_eq!(t.iterations, 1);
    }

    #[test]
    fn empty_control_set_is_an_error() {
        let spec = OcpSpec::default();
        let grid = Grid::new(vec![10.0, 20.0], vec![0.0, 40.0], vec![0.0]).unwrap();
        // the only brake level exceeds f_b_max
        let controls = ControlGrid {
            f_m_levels: vec![0.0],
            f_b_levels: vec![7000.0],
        };
        assert!(matches!(
            dp_backward(&spec, &grid, &controls, &BackwardOptions::default()),
            Err(Error::EmptyControlSet(_))
        ));
    }

    #[test]
    fn bad_options_are_rejected() {
        let (spec, grid, controls) = small();
        for opts in [
            BackwardOptions { discount: 1.0, ..Default::default() },
            BackwardOptions { tol: 0.0, ..Default::default() },
            BackwardOptions { max_sweeps: 0, ..Default::default() },
        ] {
            assert!(dp_backward(&spec, &grid, &controls, &opts).is_err());
        }
    }
}
