//! CSV and JSON writers. Numbers use Rust's shortest round-trip formatting,
//! so output does not depend on locale and is identical across runs.

use std::io::Write;

use formation_core::laplacian::{complex_rows, real_rows, LaplacianBlocks};
use formation_core::maneuver::Plane;
use formation_core::sim::{Maneuver, SimTrace};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CsvKind {
    /// One row per agent per sample.
    Positions,
    /// One row per sample.
    Diagnostics,
}

pub fn position_header(dimension: usize) -> &'static [&'static str] {
    if dimension == 3 {
        &["t", "agent", "x", "y", "z", "x_star", "y_star", "z_star", "err"]
    } else {
        &["t", "agent", "x", "y", "x_star", "y_star", "err"]
    }
}

pub const DIAGNOSTICS_HEADER: [&str; 6] = ["t", "phase", "leader_err", "follower_err", "lyapunov", "min_dist"];

pub fn write_csv<W: Write>(trace: &SimTrace, kind: CsvKind, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match kind {
        CsvKind::Positions => {
            w.write_record(position_header(trace.dimension))?;
            for s in &trace.samples {
                let err = s.errors.magnitudes();
                for (i, (p, q)) in s.positions.iter().zip(&s.targets).enumerate() {
                    let mut row = vec![s.t.to_string(), (i + 1).to_string()];
                    let d = trace.dimension;
                    row.extend(p[..d].iter().map(f64::to_string));
                    row.extend(q[..d].iter().map(f64::to_string));
                    row.push(err[i].to_string());
                    w.write_record(&row)?;
                }
            }
        }
        CsvKind::Diagnostics => {
            w.write_record(DIAGNOSTICS_HEADER)?;
            for s in &trace.samples {
                w.write_record([
                    s.t.to_string(),
                    s.phase.to_string(),
                    s.errors.leader_norm().to_string(),
                    s.errors.follower_norm().to_string(),
                    s.lyapunov.to_string(),
                    s.min_dist.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FollowerWeightsOut {
    follower: usize,
    j: usize,
    k: usize,
    w_ij: [f64; 2],
    w_ik: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    axis: Option<[f64; 2]>,
}

#[derive(Serialize)]
pub struct BlocksOut {
    phase: usize,
    plane: Plane,
    start: f64,
    weights: Vec<FollowerWeightsOut>,
    w_fl: Vec<Vec<[f64; 2]>>,
    w_ff: Vec<Vec<[f64; 2]>>,
    d_ff: Vec<Vec<[f64; 2]>>,
    d_fl: Vec<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_fl: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_ff: Option<Vec<Vec<f64>>>,
    cond_wff: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    cond_mff: Option<f64>,
}

fn blocks_out(phase: usize, plane: Plane, start: f64, b: &LaplacianBlocks) -> BlocksOut {
    let c = |z: formation_core::ComplexScalar| [z.re, z.im];
    BlocksOut {
        phase,
        plane,
        start,
        weights: b
            .weights()
            .iter()
            .map(|w| FollowerWeightsOut {
                follower: w.follower,
                j: w.j,
                k: w.k,
                w_ij: c(w.planar.ij),
                w_ik: c(w.planar.ik),
                axis: w.axis.map(|a| [a.ij, a.ik]),
            })
            .collect(),
        w_fl: complex_rows(&b.w_fl),
        w_ff: complex_rows(&b.w_ff),
        d_ff: complex_rows(&b.d_ff),
        d_fl: complex_rows(&b.d_fl),
        m_fl: b.m_fl.as_ref().map(real_rows),
        m_ff: b.m_ff.as_ref().map(real_rows),
        cond_wff: b.cond_wff,
        cond_mff: b.cond_mff,
    }
}

/// Blocks of every phase (a single entry in 2-D).
pub fn all_blocks(maneuver: &Maneuver) -> Vec<BlocksOut> {
    match maneuver {
        Maneuver::Planar { blocks, schedule } => vec![blocks_out(0, Plane::Yaw, schedule.start(), blocks)],
        Maneuver::Spatial { schedule } => schedule
            .frames()
            .iter()
            .zip(schedule.pieces())
            .enumerate()
            .map(|(idx, (f, p))| blocks_out(idx, f.plane, p.start, &f.blocks))
            .collect(),
    }
}
