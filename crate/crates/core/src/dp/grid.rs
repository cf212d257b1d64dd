use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ocp::{Control, OcpSpec, State};

/// Quantized state space: gap, host speed and front speed knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub d_axis: Vec<f64>,
    pub v_axis: Vec<f64>,
    pub vf_axis: Vec<f64>,
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::invalid(format!("{name} axis is empty")));
    }
    if axis.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("{name} axis has non-finite knots")));
    }
    if axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(format!("{name} axis is not strictly increasing")));
    }
    Ok(())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let mut out: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
            out[n - 1] = hi;
            out
        }
    }
}

/// Knots `lo·(hi/lo)^(i/(n-1))`: dense near `lo`, sparse near `hi`.
fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let ratio = hi / lo;
            let mut out: Vec<f64> = (0..n).map(|i| lo * ratio.powf(i as f64 / (n - 1) as f64)).collect();
            out[0] = lo;
            out[n - 1] = hi;
            out
        }
    }
}

impl Grid {
    /// Axes must be non-empty and strictly increasing. Single-knot axes are
    /// allowed for degenerate problems.
    pub fn new(d_axis: Vec<f64>, v_axis: Vec<f64>, vf_axis: Vec<f64>) -> Result<Self> {
        check_axis("gap", &d_axis)?;
        check_axis("speed", &v_axis)?;
        check_axis("front speed", &vf_axis)?;
        if d_axis[0] <= 0.0 {
            return Err(Error::invalid("gap axis must start at a positive gap"));
        }
        if v_axis[0] < 0.0 || vf_axis[0] < 0.0 {
            return Err(Error::invalid("speed axes must be non-negative"));
        }
        Ok(Self { d_axis, v_axis, vf_axis })
    }

    /// Geometric gap axis on `[d_lo, spec.d_max]`, uniform speed axes on
    /// `[v_min, v_max]`.
    pub fn build(spec: &OcpSpec, n_d: usize, d_lo: f64, n_v: usize, n_vf: usize) -> Result<Self> {
        if n_d < 2 || n_v < 2 || n_vf < 2 {
            return Err(Error::invalid("grid axes need at least two knots"));
        }
        if !(d_lo > 0.0 && d_lo < spec.d_max) {
            return Err(Error::invalid(format!("d_lo = {d_lo} must lie in (0, {})", spec.d_max)));
        }
        Self::new(
            geomspace(d_lo, spec.d_max, n_d),
            linspace(spec.v_min, spec.v_max, n_v),
            linspace(spec.v_min, spec.v_max, n_vf),
        )
    }

    /// 81 × 41 × 41 knots, gap from 1 m.
    pub fn default_for(spec: &OcpSpec) -> Self {
        Self::build(spec, 81, 1.0, 41, 41).expect("default grid is valid")
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.d_axis.len(), self.v_axis.len(), self.vf_axis.len())
    }

    pub fn len(&self) -> usize {
        self.d_axis.len() * self.v_axis.len() * self.vf_axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major offset: gap outermost, front speed innermost.
    #[inline]
    pub fn offset(&self, i_d: usize, i_v: usize, i_vf: usize) -> usize {
        (i_d * self.v_axis.len() + i_v) * self.vf_axis.len() + i_vf
    }

    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let n_vf = self.vf_axis.len();
        let n_v = self.v_axis.len();
        (idx / (n_v * n_vf), (idx / n_vf) % n_v, idx % n_vf)
    }

    pub fn state(&self, idx: usize) -> State {
        let (i, j, k) = self.unravel(idx);
        State::new(self.d_axis[i], self.v_axis[j], self.vf_axis[k])
    }

    /// Clamps `s` into the grid hull.
    pub fn clamp(&self, s: &State) -> State {
        let c = |axis: &[f64], x: f64| x.clamp(axis[0], axis[axis.len() - 1]);
        State::new(c(&self.d_axis, s.d), c(&self.v_axis, s.v), c(&self.vf_axis, s.v_f))
    }
}

/// Lower knot index and fractional position of `x` (clamped to the hull).
/// Single-knot axes return `(0, 0.0)`.
#[inline]
pub(crate) fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let n = axis.len();
    if n == 1 || x <= axis[0] {
        return (0, 0.0);
    }
    if x >= axis[n - 1] {
        return (n - 2, 1.0);
    }
    let i = axis.partition_point(|&k| k <= x) - 1;
    (i, (x - axis[i]) / (axis[i + 1] - axis[i]))
}

/// Motor and brake force levels enumerated by the solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlGrid {
    pub f_m_levels: Vec<f64>,
    pub f_b_levels: Vec<f64>,
}

impl ControlGrid {
    pub fn new(f_m_levels: Vec<f64>, f_b_levels: Vec<f64>) -> Result<Self> {
        check_axis("motor force", &f_m_levels)?;
        check_axis("brake force", &f_b_levels)?;
        if !f_m_levels.contains(&0.0) || !f_b_levels.contains(&0.0) {
            return Err(Error::invalid("control levels must include 0 on both axes"));
        }
        if f_b_levels[0] < 0.0 {
            return Err(Error::invalid("brake levels must be non-negative"));
        }
        Ok(Self { f_m_levels, f_b_levels })
    }

    pub fn uniform(n_fm: usize, f_m_lo: f64, f_m_hi: f64, n_fb: usize, f_b_max: f64) -> Result<Self> {
        Self::new(linspace(f_m_lo, f_m_hi, n_fm), linspace(0.0, f_b_max, n_fb))
    }

    /// 21 motor levels on ±5000 N, 6 brake levels on [0, 6000] N.
    pub fn default_for(spec: &OcpSpec) -> Self {
        Self::uniform(21, -5000.0, 5000.0, 6, spec.f_b_max).expect("default control grid is valid")
    }

    /// Feasible controls at speed `v`, in enumeration order (motor level
    /// outer, brake level inner).
    pub fn feasible(&self, spec: &OcpSpec, v: f64) -> Vec<Control> {
        let probe = State::new(spec.d0, v, 0.0);
        let mut out = Vec::with_capacity(self.f_m_levels.len() * self.f_b_levels.len());
        for &f_m in &self.f_m_levels {
            for &f_b in &self.f_b_levels {
                let u = Control::new(f_m, f_b);
                if spec.is_control_feasible(&probe, &u) {
                    out.push(u);
                }
            }
        }
        out
    }
}

/// Optimal cost-to-go on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub grid: Grid,
    /// Row-major values [J], see [`Grid::offset`].
    pub values: Vec<f64>,
    pub discount: f64,
    pub iterations: u32,
    /// Largest per-entry change of the final sweep [J].
    pub residual: f64,
}

impl ValueTable {
    pub fn new(grid: Grid, values: Vec<f64>, discount: f64, iterations: u32, residual: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "grid has {} knots but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("value table contains non-finite entries"));
        }
        if !(0.0 < discount && discount < 1.0) {
            return Err(Error::invalid(format!("discount {discount} outside (0, 1)")));
        }
        Ok(Self {
            grid,
            values,
            discount,
            iterations,
            residual,
        })
    }

    pub fn converged(&self, tol: f64) -> bool {
        self.residual <= tol
    }

    #[inline]
    pub fn at(&self, i_d: usize, i_v: usize, i_vf: usize) -> f64 {
        self.values[self.grid.offset(i_d, i_v, i_vf)]
    }

    /// Trilinear interpolation, clamped to the grid hull.
    pub fn interpolate(&self, s: &State) -> f64 {
        let g = &self.grid;
        let (i, td) = locate(&g.d_axis, s.d);
        let (j, tv) = locate(&g.v_axis, s.v);
        let (k, tf) = locate(&g.vf_axis, s.v_f);
        let i1 = (i + 1).min(g.d_axis.len() - 1);
        let j1 = (j + 1).min(g.v_axis.len() - 1);
        let k1 = (k + 1).min(g.vf_axis.len() - 1);
        let (sd, sv, sf) = (1.0 - td, 1.0 - tv, 1.0 - tf);
        sd * sv * sf * self.at(i, j, k)
            + sd * sv * tf * self.at(i, j, k1)
            + sd * tv * sf * self.at(i, j1, k)
            + sd * tv * tf * self.at(i, j1, k1)
            + td * sv * sf * self.at(i1, j, k)
            + td * sv * tf * self.at(i1, j, k1)
            + td * tv * sf * self.at(i1, j1, k)
            + td * tv * tf * self.at(i1, j1, k1)
    }
}

pub fn interpolate_value(table: &ValueTable, s: &State) -> f64 {
    table.interpolate(s)
}
