use std::fmt::Write as _;
use std::path::Path;

use super::controllers::Controller;
use super::episode::{efficiency, front_vehicle_energy, load_trace_rows, run_episode, EpisodeTrace, TraceRow};
use crate::csvio;
use crate::cycles::DrivingCycle;
use crate::error::{Error, Result};
use crate::ocp::OcpSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub controller: String,
    pub distance_m: f64,
    pub energy_kwh: f64,
    /// `None` when the metric is undefined or the episode violated the gap.
    pub efficiency: Option<f64>,
    pub ratio_pct: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub scenario: String,
    /// Front vehicle first, then the controllers in the order given.
    pub rows: Vec<ReportRow>,
}

fn fmt_opt(x: Option<f64>, digits: usize) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.digits$}"))
}

impl ScenarioReport {
    pub fn row(&self, controller: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.controller == controller)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,controller,distance_m,energy_kwh,efficiency_km_per_kwh,ratio_pct,status\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.2},{:.6},{},{},{}",
                self.scenario,
                r.controller,
                r.distance_m,
                r.energy_kwh,
                fmt_opt(r.efficiency, 4),
                fmt_opt(r.ratio_pct, 1),
                r.status
            );
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Fixed-width table for terminals.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<14} {:>14} {:>12} {:>14} {:>9}  {}\n",
            self.scenario, "distance [m]", "energy [kWh]", "eff [km/kWh]", "ratio [%]", "status"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<14} {:>14.2} {:>12.4} {:>14} {:>9}  {}",
                r.controller,
                r.distance_m,
                r.energy_kwh,
                fmt_opt(r.efficiency, 4),
                fmt_opt(r.ratio_pct, 1),
                r.status
            );
        }
        out
    }
}

fn host_row(trace: &EpisodeTrace, energy: f64, front_eff: Option<f64>) -> ReportRow {
    let eff = if trace.completed() {
        efficiency(trace.host_distance, energy).ok()
    } else {
        None
    };
    ReportRow {
        controller: trace.controller.clone(),
        distance_m: trace.host_distance,
        energy_kwh: energy / 3.6e6,
        efficiency: eff,
        ratio_pct: eff.zip(front_eff).map(|(h, f)| 100.0 * h / f),
        status: trace.status.to_string(),
    }
}

/// Net trapezoid energy of a trace, or traction energy only without
/// regeneration credit.
pub fn trace_energy(trace: &EpisodeTrace, regen_credit: bool) -> f64 {
    if regen_credit {
        return trace.energy();
    }
    let p: Vec<f64> = trace.rows[..trace.rows.len().saturating_sub(1)]
        .iter()
        .map(|r| r.p_mot.max(0.0))
        .collect();
    super::episode::trapezoid_held(&p, trace.dt)
}

/// Runs every controller on the cycle and reports efficiencies relative
/// to the front vehicle. Also returns the traces.
pub fn compare(
    spec: &OcpSpec,
    cycle: &DrivingCycle,
    controllers: &mut [Box<dyn Controller + '_>],
    regen_credit: bool,
) -> Result<(ScenarioReport, Vec<EpisodeTrace>)> {
    if controllers.is_empty() {
        return Err(Error::invalid("compare needs at least one controller"));
    }
    let front = front_vehicle_energy(spec, cycle, regen_credit)?;
    let front_eff = efficiency(front.distance, front.energy).ok();
    let mut rows = vec![ReportRow {
        controller: "front".to_string(),
        distance_m: front.distance,
        energy_kwh: front.energy_kwh(),
        efficiency: front_eff,
        ratio_pct: front_eff.map(|_| 100.0),
        status: if front.clamped_steps > 0 {
            format!("clamped@{}", front.clamped_steps)
        } else {
            "finished".to_string()
        },
    }];
    let mut traces = Vec::with_capacity(controllers.len());
    for c in controllers.iter_mut() {
        let trace = run_episode(spec, cycle, c, true)?;
        rows.push(host_row(&trace, trace_energy(&trace, regen_credit), front_eff));
        traces.push(trace);
    }
    Ok((
        ScenarioReport {
            scenario: cycle.name().to_string(),
            rows,
        },
        traces,
    ))
}

/// Writes `speed.csv`, `distance.csv` and `energy.csv` from a trace CSV.
pub fn export_plot_data(trace_csv: impl AsRef<Path>, out_dir: impl AsRef<Path>) -> Result<()> {
    let rows = load_trace_rows(trace_csv)?;
    write_plot_data(&rows, out_dir.as_ref())
}

pub fn write_plot_data(rows: &[TraceRow], out_dir: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid("trace has no rows"));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    csvio::write_file(
        &out_dir.join("speed.csv"),
        &["t", "host_speed", "front_speed"],
        rows.iter().map(|r| vec![r.t, r.v, r.v_f]),
    )?;
    let mut host = 0.0;
    let mut front = 0.0;
    let mut dist = Vec::with_capacity(rows.len());
    for (k, r) in rows.iter().enumerate() {
        if k > 0 {
            let dt = r.t - rows[k - 1].t;
            host += rows[k - 1].v * dt;
            front += rows[k - 1].v_f * dt;
        }
        dist.push(vec![r.t, host, front, r.d]);
    }
    csvio::write_file(
        &out_dir.join("distance.csv"),
        &["t", "host_distance", "front_distance", "gap"],
        dist,
    )?;
    csvio::write_file(
        &out_dir.join("energy.csv"),
        &["t", "power_kw", "energy_kwh"],
        rows.iter().map(|r| vec![r.t, r.p_mot / 1000.0, r.e_cum / 3.6e6]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::controllers::FrontMirror;

    #[test]
    fn mirror_matches_the_front_vehicle() {
        let spec = OcpSpec::default();
        let cycle = crate::cycles::builtin("hwy-synth").unwrap();
        let mut ctrls: Vec<Box<dyn Controller>> = vec![Box::new(FrontMirror)];
        let (report, traces) = compare(&spec, &cycle, &mut ctrls, true).unwrap();
        assert_eq!(report.rows[0].ratio_pct, Some(100.0));
        let mirror = report.row("front-mirror").unwrap();
        let ratio = mirror.ratio_pct.unwrap();
        assert!((ratio - 100.0).abs() < 3.0, "{ratio}");
        assert_eq!(traces.len(), 1);
        let csv = report.to_csv();
        assert!(csv.starts_with("scenario,controller,"));
        assert_eq!(csv.lines().count(), 3);
        // deterministic output
        let (again, _) = compare(&spec, &cycle, &mut ctrls, true).unwrap();
        assert_eq!(again.to_csv(), csv);
    }

    #[test]
    fn zero_energy_rows_are_na() {
        let spec = OcpSpec::default();
        let cycle = DrivingCycle::new("parked", vec![0.0, 1.0, 2.0], vec![0.0; 3]).unwrap();
        let mut ctrls: Vec<Box<dyn Controller>> = vec![Box::new(FrontMirror)];
        let (report, _) = compare(&spec, &cycle, &mut ctrls, true).unwrap();
        assert!(report.rows.iter().all(|r| r.efficiency.is_none() && r.ratio_pct.is_none()));
        assert!(report.to_csv().contains("n/a"));
        assert!(compare(&spec, &cycle, &mut [], true).is_err());
    }

    #[test]
    fn plot_data_files() {
        let spec = OcpSpec::default();
        let cycle = crate::cycles::builtin("hwy-synth").unwrap();
        let trace = run_episode(&spec, &cycle, &mut FrontMirror, true).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("trace.csv");
        trace.save_csv(&csv).unwrap();
        export_plot_data(&csv, dir.path().join("plots")).unwrap();
        for f in ["speed.csv", "distance.csv", "energy.csv"] {
            let text = std::fs::read_to_string(dir.path().join("plots").join(f)).unwrap();
            assert_eq!(text.lines().count(), trace.rows.len() + 1);
        }
        let dist = std::fs::read_to_string(dir.path().join("plots/distance.csv")).unwrap();
        let last: Vec<f64> = dist.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert!((last[1] - trace.host_distance).abs() < 1e-6);
        assert!((last[3] - (50.0 + last[2] - last[1])).abs() < 1e-6);
    }

    #[test]
    fn regen_credit_flag() {
        let spec = OcpSpec::default();
        let cycle = crate::cycles::builtin("hwy-synth").unwrap();
        let trace = run_episode(&spec, &cycle, &mut FrontMirror, true).unwrap();
        assert!(trace_energy(&trace, false) > trace_energy(&trace, true));
    }
}
