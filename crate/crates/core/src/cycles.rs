//! Front-vehicle drive cycles: loading, validation, interpolation and
//! resampling onto the simulation step.
//!
//! Cycle files are CSV with header `time_s,speed`; the speed unit is chosen
//! by the caller. Three synthetic cycles ship with the crate, standing in
//! for the highway, aggressive and mixed standard cycles:
//!
//! * `hwy-synth`: sustained 20–27 m/s cruising with mild transients,
//! * `aggressive-synth`: hard accelerations up to ~35 m/s and abrupt stops,
//! * `mixed-synth`: low, medium, high and extra-high phases peaking above
//!   120 km/h.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::csvio;
use crate::error::{Error, Result};

const HEADER: [&str; 2] = ["time_s", "speed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpeedUnit {
    #[default]
    Mps,
    Kph,
    Mph,
}

impl SpeedUnit {
    /// Multiplier converting this unit to m/s.
    pub fn to_mps(self) -> f64 {
        match self {
            SpeedUnit::Mps => 1.0,
            SpeedUnit::Kph => 1.0 / 3.6,
            SpeedUnit::Mph => 0.44704,
        }
    }
}

impl FromStr for SpeedUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mps" => Ok(SpeedUnit::Mps),
            "kph" => Ok(SpeedUnit::Kph),
            "mph" => Ok(SpeedUnit::Mph),
            other => Err(Error::invalid(format!("unknown speed unit `{other}` (mps|kph|mph)"))),
        }
    }
}

impl fmt::Display for SpeedUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpeedUnit::Mps => "mps",
            SpeedUnit::Kph => "kph",
            SpeedUnit::Mph => "mph",
        })
    }
}

/// A timestamped front-vehicle speed profile in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingCycle {
    name: String,
    t: Vec<f64>,
    v_f: Vec<f64>,
}

impl DrivingCycle {
    pub fn new(name: impl Into<String>, t: Vec<f64>, v_f: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if t.len() != v_f.len() {
            return Err(Error::invalid(format!(
                "cycle `{name}`: {} times but {} speeds",
                t.len(),
                v_f.len()
            )));
        }
        if t.len() < 2 {
            return Err(Error::invalid(format!("cycle `{name}` needs at least two samples")));
        }
        if t[0] != 0.0 {
            return Err(Error::invalid(format!("cycle `{name}` must start at t = 0, got {}", t[0])));
        }
        if let Some(i) = t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(format!("cycle `{name}`: time not increasing at sample {}", i + 1)));
        }
        if let Some(i) = v_f.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid(format!("cycle `{name}`: invalid speed {} at sample {i}", v_f[i])));
        }
        Ok(Self { name, t, v_f })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn speeds(&self) -> &[f64] {
        &self.v_f
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn duration(&self) -> f64 {
        *self.t.last().expect("cycle has samples")
    }

    pub fn max_speed(&self) -> f64 {
        self.v_f.iter().copied().fold(0.0, f64::max)
    }

    /// Front speed at time `t` by linear interpolation; exact at samples.
    pub fn front_speed(&self, t: f64) -> Result<f64> {
        let duration = self.duration();
        if !(0.0..=duration).contains(&t) {
            return Err(Error::Domain { value: t, lo: 0.0, hi: duration });
        }
        let i = self.t.partition_point(|&ti| ti < t);
        if self.t[i] == t {
            return Ok(self.v_f[i]);
        }
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        let (v0, v1) = (self.v_f[i - 1], self.v_f[i]);
        Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }

    /// Uniform grid `0, dt, …, n·dt` with `n·dt ≥ duration`; the final speed
    /// is held over any padding.
    pub fn resample(&self, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("resample step must be positive, got {dt}")));
        }
        let duration = self.duration();
        let n = ((duration / dt) - 1e-9).ceil().max(1.0) as usize;
        let last = *self.v_f.last().expect("cycle has samples");
        let mut t = Vec::with_capacity(n + 1);
        let mut v = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let tk = k as f64 * dt;
            t.push(tk);
            v.push(if tk >= duration { last } else { self.front_speed(tk)? });
        }
        Self::new(self.name.clone(), t, v)
    }

    /// Distance by the trapezoid rule over the native samples [m].
    pub fn distance(&self) -> f64 {
        self.t
            .windows(2)
            .zip(self.v_f.windows(2))
            .map(|(t, v)| 0.5 * (v[0] + v[1]) * (t[1] - t[0]))
            .sum()
    }

    pub fn save(&self, path: impl AsRef<Path>, unit: SpeedUnit) -> Result<()> {
        let k = unit.to_mps();
        csvio::write_file(
            path.as_ref(),
            &HEADER,
            self.t.iter().zip(&self.v_f).map(|(t, v)| vec![*t, if k == 1.0 { *v } else { v / k }]),
        )
    }
}

/// Reads a `time_s,speed` CSV and converts speeds to m/s.
pub fn load_cycle(path: impl AsRef<Path>, unit: SpeedUnit) -> Result<DrivingCycle> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cycle".to_string());
    parse_cycle(&text, unit, &name, &path.display().to_string())
}

pub fn parse_cycle(text: &str, unit: SpeedUnit, name: &str, source_name: &str) -> Result<DrivingCycle> {
    let rows = csvio::parse(text, &HEADER, source_name)?;
    let err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let k = unit.to_mps();
    let mut t = Vec::with_capacity(rows.len());
    let mut v = Vec::with_capacity(rows.len());
    for row in &rows {
        let (ti, vi) = (row.values[0], row.values[1]);
        if vi < 0.0 {
            return Err(err(row.line, format!("negative speed {vi}")));
        }
        match t.last() {
            None if ti != 0.0 => return Err(err(row.line, format!("cycle must start at t = 0, got {ti}"))),
            Some(&prev) if ti <= prev => {
                return Err(err(row.line, format!("time {ti} is not after previous time {prev}")))
            }
            _ => {}
        }
        t.push(ti);
        v.push(if k == 1.0 { vi } else { vi * k });
    }
    if t.len() < 2 {
        return Err(err(rows.last().map_or(0, |r| r.line), "a cycle needs at least two samples".into()));
    }
    DrivingCycle::new(name, t, v)
}

pub const BUILTIN_NAMES: [&str; 3] = ["hwy-synth", "aggressive-synth", "mixed-synth"];

/// One of the bundled synthetic cycles at 1 Hz.
pub fn builtin(name: &str) -> Option<DrivingCycle> {
    let (waypoints, ripple): (&[(f64, f64)], f64) = match name {
        "hwy-synth" => (HWY, 0.4),
        "aggressive-synth" => (AGGRESSIVE, 0.3),
        "mixed-synth" => (MIXED, 0.3),
        _ => return None,
    };
    Some(from_waypoints(name, waypoints, ripple))
}

/// Piecewise-linear waypoints plus a small speed-gated ripple, rounded to mm/s.
fn from_waypoints(name: &str, waypoints: &[(f64, f64)], ripple: f64) -> DrivingCycle {
    let duration = waypoints.last().expect("waypoints").0;
    let n = duration as usize;
    let mut t = Vec::with_capacity(n + 1);
    let mut v = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let tk = k as f64;
        let j = waypoints.partition_point(|w| w.0 <= tk).clamp(1, waypoints.len() - 1);
        let (t0, v0) = waypoints[j - 1];
        let (t1, v1) = waypoints[j];
        let base = v0 + (v1 - v0) * ((tk - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let gate = ((base - 8.0) / 4.0).clamp(0.0, 1.0);
        let wiggle = ripple
            * gate
            * (0.6 * (2.0 * std::f64::consts::PI * tk / 23.0).sin()
                + 0.4 * (2.0 * std::f64::consts::PI * tk / 61.0).sin());
        let vk = ((base + wiggle).max(0.0) * 1000.0).round() / 1000.0;
        t.push(tk);
        v.push(vk);
    }
    DrivingCycle::new(name, t, v).expect("builtin waypoints are valid")
}

const HWY: &[(f64, f64)] = &[
    (0.0, 0.0), (10.0, 6.0), (25.0, 17.0), (40.0, 22.0), (90.0, 24.0), (130.0, 21.0),
    (170.0, 25.0), (220.0, 26.5), (260.0, 23.0), (300.0, 20.5), (340.0, 24.0), (390.0, 27.0),
    (430.0, 25.0), (470.0, 22.0), (510.0, 24.5), (550.0, 25.0), (575.0, 15.0), (590.0, 5.0),
    (600.0, 0.0),
];

const AGGRESSIVE: &[(f64, f64)] = &[
    (0.0, 0.0), (5.0, 0.0), (14.0, 20.0), (21.0, 28.0), (40.0, 30.0), (50.0, 22.0),
    (58.0, 10.0), (63.0, 0.0), (75.0, 0.0), (83.0, 18.0), (95.0, 33.0), (120.0, 35.0),
    (150.0, 31.0), (165.0, 35.5), (190.0, 33.0), (200.0, 24.0), (210.0, 12.0), (215.0, 0.0),
    (230.0, 0.0), (238.0, 16.0), (246.0, 27.0), (270.0, 31.0), (290.0, 28.0), (300.0, 34.0),
    (330.0, 35.0), (360.0, 32.0), (375.0, 35.0), (400.0, 34.0), (420.0, 26.0), (430.0, 30.0),
    (460.0, 33.0), (480.0, 29.0), (490.0, 20.0), (500.0, 8.0), (505.0, 0.0), (520.0, 0.0),
    (528.0, 15.0), (536.0, 24.0), (560.0, 27.0), (575.0, 20.0), (585.0, 10.0), (592.0, 3.0),
    (600.0, 0.0),
];

const MIXED: &[(f64, f64)] = &[
    // low
    (0.0, 0.0), (12.0, 0.0), (20.0, 5.0), (30.0, 8.0), (40.0, 4.0), (50.0, 0.0), (70.0, 0.0),
    (82.0, 9.0), (100.0, 12.0), (120.0, 10.0), (135.0, 13.0), (150.0, 6.0), (160.0, 0.0),
    (185.0, 0.0), (200.0, 11.0), (230.0, 15.5), (260.0, 13.0), (280.0, 14.5), (300.0, 9.0),
    (315.0, 0.0), (345.0, 0.0), (360.0, 8.0), (380.0, 12.0), (410.0, 10.0), (430.0, 13.0),
    (450.0, 7.0), (465.0, 0.0), (485.0, 0.0), (500.0, 9.0), (530.0, 14.0), (555.0, 10.0),
    (575.0, 4.0), (589.0, 0.0),
    // medium
    (600.0, 0.0), (615.0, 10.0), (640.0, 17.0), (680.0, 19.0), (700.0, 14.0), (720.0, 8.0),
    (735.0, 0.0), (755.0, 0.0), (772.0, 12.0), (800.0, 19.0), (840.0, 21.0), (870.0, 18.0),
    (900.0, 20.0), (940.0, 15.0), (970.0, 10.0), (990.0, 4.0), (1000.0, 0.0), (1022.0, 0.0),
    // high
    (1030.0, 0.0), (1045.0, 12.0), (1070.0, 22.0), (1110.0, 26.0), (1150.0, 24.0),
    (1190.0, 27.0), (1230.0, 23.0), (1260.0, 15.0), (1280.0, 18.0), (1320.0, 25.0),
    (1360.0, 27.0), (1400.0, 22.0), (1430.0, 12.0), (1450.0, 5.0), (1462.0, 0.0), (1477.0, 0.0),
    // extra high
    (1487.0, 10.0), (1505.0, 22.0), (1530.0, 30.0), (1570.0, 33.0), (1610.0, 35.0),
    (1650.0, 36.5), (1690.0, 34.0), (1720.0, 35.0), (1750.0, 30.0), (1770.0, 22.0),
    (1785.0, 10.0), (1795.0, 3.0), (1800.0, 0.0),
];
