//! CSV and JSON output of geodesics and flows.
//!
//! Geodesic CSV rows are `field,i,t,x,y,value`: `rho` rows carry the node
//! index `i`, node time and vertex `x` (with `y` empty); `m` rows carry the
//! interval index, the interval midpoint and the directed edge `(x, y)`.
//! Flow CSV rows are `scheme,step,t,vertex,rho,entropy`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::graph::{GraphSpec, MarkovGraph};
use crate::means::MeanKind;
use crate::solver::GeodesicSolution;

/// Everything needed to reproduce and inspect one geodesic computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicReport {
    pub graph: GraphSpec,
    pub mean: MeanKind,
    pub n_intervals: usize,
    /// `null` in JSON when infinite.
    #[serde(with = "infinite_as_null")]
    pub distance: f64,
    pub clamped_distance: f64,
    pub skipped_entries: usize,
    pub iterations: usize,
    pub converged: bool,
    pub stopping_value: f64,
    pub ce_residual: f64,
    pub min_density: f64,
    pub wall_time_s: f64,
    pub times: Vec<f64>,
    /// `rho[i][x]` at node time `times[i]`.
    pub rho: Vec<Vec<f64>>,
    /// `m[i][e]` on interval `i`, edges in the order of `graph.edges`.
    pub m: Vec<Vec<f64>>,
}

impl GeodesicReport {
    pub fn new(graph: &MarkovGraph, mean: MeanKind, sol: &GeodesicSolution) -> Self {
        let grid = sol.rho.grid();
        GeodesicReport {
            graph: graph.to_spec(),
            mean,
            n_intervals: grid.n_intervals(),
            distance: sol.distance,
            clamped_distance: sol.clamped_distance,
            skipped_entries: sol.skipped_entries,
            iterations: sol.iterations,
            converged: sol.converged,
            stopping_value: sol.stopping_value,
            ce_residual: sol.ce_residual,
            min_density: sol.min_density,
            wall_time_s: sol.wall_time_s,
            times: grid.node_times(),
            rho: sol.rho.to_rows(),
            m: sol.m.to_rows(),
        }
    }

    pub fn to_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn from_json<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }

    pub fn to_csv<W: Write>(&self, w: W) -> Result<()> {
        let graph = self.graph.build()?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["field", "i", "t", "x", "y", "value"])?;
        for (i, row) in self.rho.iter().enumerate() {
            for (x, v) in row.iter().enumerate() {
                out.write_record([
                    "rho".to_string(),
                    i.to_string(),
                    format!("{:.16e}", self.times[i]),
                    x.to_string(),
                    String::new(),
                    format!("{v:.16e}"),
                ])?;
            }
        }
        let h = 1.0 / self.n_intervals as f64;
        for (i, row) in self.m.iter().enumerate() {
            for (edge, v) in graph.edges().iter().zip(row) {
                out.write_record([
                    "m".to_string(),
                    i.to_string(),
                    format!("{:.16e}", (i as f64 + 0.5) * h),
                    edge.from.to_string(),
                    edge.to.to_string(),
                    format!("{v:.16e}"),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads the `rho` rows of a geodesic CSV back into `rho[i][x]`.
pub fn read_geodesic_csv<R: Read>(r: R) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::Reader::from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        if &record[0] != "rho" {
            continue;
        }
        let parse_idx = |k: usize| record[k].parse::<usize>().map_err(|e| Error::Parse(format!("column {k}: {e}")));
        let (i, x) = (parse_idx(1)?, parse_idx(3)?);
        let v: f64 = record[5].parse().map_err(|e| Error::Parse(format!("value: {e}")))?;
        if rows.len() <= i {
            rows.resize(i + 1, Vec::new());
        }
        if rows[i].len() <= x {
            rows[i].resize(x + 1, f64::NAN);
        }
        rows[i][x] = v;
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub scheme: String,
    pub trajectory: FlowTrajectory,
}

impl FlowReport {
    pub fn to_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn from_json<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }
}

/// Writes several trajectories into one flow CSV.
pub fn write_flow_csv<W: Write>(w: W, flows: &[FlowReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["scheme", "step", "t", "vertex", "rho", "entropy"])?;
    for flow in flows {
        let tr = &flow.trajectory;
        for (k, state) in tr.states.iter().enumerate() {
            for (x, v) in state.iter().enumerate() {
                out.write_record([
                    flow.scheme.clone(),
                    k.to_string(),
                    format!("{:.16e}", tr.times[k]),
                    x.to_string(),
                    format!("{v:.16e}"),
                    format!("{:.16e}", tr.entropy_values[k]),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
