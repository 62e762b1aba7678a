//! Artifact writers. Every formatter is a pure `&T -> String` so the same
//! bytes come out of `run` and `export`; floats are rendered with `{:e}`,
//! which is deterministic and round-trips through `str::parse::<f64>`.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use fracwave::diagnostics::EnergyReport;
use fracwave::harness::{SweepAxis, SweepReport};
use fracwave::rothe::Trajectory;

use crate::config::interior_index;

fn cell(x: f64) -> String {
    format!("{x:e}")
}

/// Ledger columns in physical order: stored, dissipated, supplied, defect.
pub fn energy_csv(report: &EnergyReport) -> String {
    let mut out = String::from("t,kinetic,elastic,penalty,dissipation,work,residual\n");
    for i in 0..report.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            cell(report.times[i]),
            cell(report.kinetic[i]),
            cell(report.elastic[i]),
            cell(report.penalty[i]),
            cell(report.dissipation[i]),
            cell(report.work[i]),
            cell(report.residual[i]),
        ));
    }
    out
}

/// Time series of the interior displacement, decimated by `node_stride`
/// across nodes and `time_stride` across steps. The final time node is
/// always kept so the file ends at T.
pub fn trajectory_csv(traj: &Trajectory, node_stride: usize, time_stride: usize) -> String {
    let grid = traj.grid();
    let kept: Vec<usize> = (0..grid.total_nodes())
        .filter(|&k| interior_index(grid, k).is_some_and(|i| i % node_stride == 0))
        .collect();
    let mut out = String::from("t");
    for &k in &kept {
        out.push_str(&format!(",u_{}", interior_index(grid, k).unwrap()));
    }
    out.push('\n');
    let times = traj.times();
    let last = times.len() - 1;
    for (j, (&t, u)) in times.iter().zip(traj.displacements()).enumerate() {
        if j % time_stride != 0 && j != last {
            continue;
        }
        out.push_str(&cell(t));
        for &k in &kept {
            out.push(',');
            out.push_str(&cell(u.data()[k]));
        }
        out.push('\n');
    }
    out
}

/// One row per axis value. The Cauchy columns compare a row with its
/// predecessor, so the first row leaves them empty.
pub fn sweep_csv(report: &SweepReport) -> String {
    let axis = match report.axis {
        SweepAxis::Epsilon => "epsilon",
        SweepAxis::Viscosity => "viscosity",
        SweepAxis::ExponentS => "exponent_s",
        SweepAxis::Timestep => "timestep",
    };
    let names: Vec<&str> = report
        .rows
        .first()
        .map(|r| r.metrics.iter().map(|(n, _)| *n).collect())
        .unwrap_or_default();
    let mut out = String::from(axis);
    for n in &names {
        out.push(',');
        out.push_str(n);
    }
    out.push_str(",cauchy_qt,cauchy_final\n");
    for (i, row) in report.rows.iter().enumerate() {
        out.push_str(&cell(row.value));
        for (_, v) in &row.metrics {
            out.push(',');
            out.push_str(&cell(*v));
        }
        if i == 0 {
            out.push_str(",,");
        } else {
            out.push_str(&format!(
                ",{},{}",
                cell(report.cauchy_qt[i - 1]),
                cell(report.cauchy_final[i - 1])
            ));
        }
        out.push('\n');
    }
    out
}

/// Energy ledger plus run summary as structured JSON (the `json` output
/// format's counterpart to `energy.csv`).
pub fn run_report_json(report: &EnergyReport, spec: &fracwave::rothe::ProblemSpec) -> String {
    #[derive(Serialize)]
    struct Energy<'a> {
        t: &'a [f64],
        kinetic: &'a [f64],
        elastic: &'a [f64],
        penalty: &'a [f64],
        dissipation: &'a [f64],
        work: &'a [f64],
        residual: &'a [f64],
    }
    #[derive(Serialize)]
    struct RunReport<'a> {
        s: f64,
        nu: f64,
        epsilon: f64,
        interior_nodes: usize,
        max_residual: f64,
        final_residual: f64,
        energy: Energy<'a>,
    }
    let mut out = serde_json::to_string_pretty(&RunReport {
        s: spec.s,
        nu: spec.nu,
        epsilon: spec.eps,
        interior_nodes: spec.grid.interior_count(),
        max_residual: report.max_residual(),
        final_residual: report.final_residual(),
        energy: Energy {
            t: &report.times,
            kinetic: &report.kinetic,
            elastic: &report.elastic,
            penalty: &report.penalty,
            dissipation: &report.dissipation,
            work: &report.work,
            residual: &report.residual,
        },
    })
    .expect("run report serializes");
    out.push('\n');
    out
}

/// Sweep report as structured JSON, mirroring `sweep.csv` plus the verdict
/// fields that have no tabular representation.
pub fn sweep_report_json(report: &SweepReport) -> String {
    #[derive(Serialize)]
    struct Row {
        value: f64,
        metrics: Vec<(String, f64)>,
    }
    #[derive(Serialize)]
    struct Sweep<'a> {
        axis: &'static str,
        #[serde(skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
        rows: Vec<Row>,
        cauchy_qt: &'a [f64],
        cauchy_final: &'a [f64],
        cauchy_decreasing: bool,
        final_decreasing: bool,
        rates_qt: &'a [f64],
        #[serde(skip_serializing_if = "Option::is_none")]
        apriori_spread: Option<f64>,
        pass: bool,
        notes: &'a [String],
    }
    let axis = match report.axis {
        SweepAxis::Epsilon => "epsilon",
        SweepAxis::Viscosity => "viscosity",
        SweepAxis::ExponentS => "exponent_s",
        SweepAxis::Timestep => "timestep",
    };
    let rows = report
        .rows
        .iter()
        .map(|r| Row {
            value: r.value,
            metrics: r.metrics.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
        })
        .collect();
    let mut out = serde_json::to_string_pretty(&Sweep {
        axis,
        sigma: report.sigma,
        rows,
        cauchy_qt: &report.cauchy_qt,
        cauchy_final: &report.cauchy_final,
        cauchy_decreasing: report.cauchy_decreasing,
        final_decreasing: report.final_decreasing,
        rates_qt: &report.rates_qt,
        apriori_spread: report.apriori_spread,
        pass: report.pass,
        notes: &report.notes,
    })
    .expect("sweep report serializes");
    out.push('\n');
    out
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a> {
    /// SHA-256 of the raw config file bytes, hex.
    pub config_sha256: String,
    pub seed: u64,
    pub versions: Versions<'a>,
}

#[derive(Debug, Serialize)]
pub struct Versions<'a> {
    pub fracwave: &'a str,
    pub cli: &'a str,
}

impl Metadata<'_> {
    pub fn new(config_bytes: &[u8], seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(config_bytes);
        Metadata {
            config_sha256: format!("{:x}", hasher.finalize()),
            seed,
            versions: Versions {
                fracwave: fracwave::VERSION,
                cli: env!("CARGO_PKG_VERSION"),
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metadata serializes");
        s.push('\n');
        s
    }
}

/// Creates `dir` if needed and writes each `(name, bytes)` pair into it.
pub fn write_all(dir: &Path, files: &[(&str, &str)]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use fracwave::diagnostics::energy_ledger;
    use fracwave::harness::scenarios;
    use fracwave::rothe::{run, SolverParams};

    fn short_run() -> (Trajectory, fracwave::rothe::ProblemSpec, f64) {
        let (spec, horizon) = scenarios::free_wave(32).unwrap();
        let traj = run(&spec, horizon, 20, &SolverParams::default()).unwrap();
        (traj, spec, horizon)
    }

    #[test]
    fn energy_header_is_pinned() {
        let (traj, spec, _) = short_run();
        let report = energy_ledger(&traj, &spec);
        let csv = energy_csv(&report);
        assert_eq!(
            csv.lines().next().unwrap(),
            "t,kinetic,elastic,penalty,dissipation,work,residual"
        );
        assert_eq!(csv.lines().count(), 1 + report.len());
        // every cell parses back to a finite float
        for line in csv.lines().skip(1) {
            for field in line.split(',') {
                assert!(field.parse::<f64>().unwrap().is_finite());
            }
        }
    }

    #[test]
    fn trajectory_decimation_keeps_first_and_last_times() {
        let (traj, _, _) = short_run();
        let full = trajectory_csv(&traj, 1, 1);
        let n_interior = traj.grid().interior_count();
        let header = full.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 1 + n_interior);
        assert!(header.starts_with("t,u_0,"));
        assert_eq!(full.lines().count(), 1 + traj.times().len());

        let thin = trajectory_csv(&traj, 4, 7);
        let header = thin.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 1 + n_interior.div_ceil(4));
        let rows: Vec<&str> = thin.lines().skip(1).collect();
        let t_first: f64 = rows[0].split(',').next().unwrap().parse().unwrap();
        let t_last: f64 = rows.last().unwrap().split(',').next().unwrap().parse().unwrap();
        assert_eq!(t_first, 0.0);
        assert_eq!(t_last, *traj.times().last().unwrap());
    }

    #[test]
    fn formatting_is_reproducible() {
        let (traj, spec, horizon) = short_run();
        let a = energy_csv(&energy_ledger(&traj, &spec));
        let again = run(&spec, horizon, 20, &SolverParams::default()).unwrap();
        let b = energy_csv(&energy_ledger(&again, &spec));
        assert_eq!(a, b);
    }

    #[test]
    fn metadata_hashes_the_raw_bytes() {
        let m = Metadata::new(b"{}", 42);
        assert_eq!(
            m.config_sha256,
            "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a"
        );
        assert_eq!(m.seed, 42);
        let json = m.to_json();
        assert!(json.contains("\"config_sha256\""));
        assert!(json.ends_with('\n'));
        let reparsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(reparsed["seed"], 42);
    }
}
