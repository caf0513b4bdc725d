//! Time-varying target formations.

pub mod planar;
pub mod profile;
pub mod spatial;

pub use planar::{
    eval_piece_2d, eval_target_2d, shape_interp, shape_interp_to_followers, ManeuverParams,
    ManeuverSchedule2D, Piece2D, ShapeInterp,
};
pub use profile::{smoothstep, Linear, Profile, ShapeProfile};
pub use spatial::{
    eval_target_3d, nominal_for_plane, orientation_plan, reindex_3d, LeaderMotion,
    ManeuverSchedule3D, OrientationPhase, PhaseFrame, Piece3D, Plane, Point3, TargetState3D,
};

use crate::error::Result;
use crate::laplacian::{ComplexScalar, LaplacianBlocks};

/// Largest parameter jump tolerated across a piece boundary.
pub const CONTINUITY_TOL: f64 = 1e-9;

/// Samples per piece used when estimating the leader speed bound.
pub const SPEED_SAMPLES: usize = 10_000;

/// Safety factor applied to the sampled leader speed.
pub const SPEED_MARGIN: f64 = 1.1;

/// Target positions and velocities in a (possibly phase-local) frame. The
/// axis entries are present for 3-D formations only.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    pub p_star: Vec<ComplexScalar>,
    pub p_star_dot: Vec<ComplexScalar>,
    pub tau_star: Option<Vec<f64>>,
    pub tau_star_dot: Option<Vec<f64>>,
}

impl TargetState {
    /// Largest planar or axis target speed over the first `m` agents.
    pub fn leader_speed(&self, m: usize) -> f64 {
        let planar = self.p_star_dot[..m].iter().map(|v| v.norm());
        let axis = self
            .tau_star_dot
            .iter()
            .flat_map(|d| d[..m].iter().map(|v| v.abs()));
        planar.chain(axis).fold(0.0, f64::max)
    }
}

/// Sample times of a piece over `[start, min(end, horizon)]`.
fn piece_samples(start: f64, end: f64, horizon: f64, samples: usize) -> impl Iterator<Item = f64> {
    let stop = end.min(horizon).max(start);
    (0..=samples).map(move |s| start + (stop - start) * s as f64 / samples as f64)
}

/// `δ`: sampled bound on the leader target speed up to `horizon`, with
/// [`SPEED_MARGIN`] applied.
pub fn leader_speed_bound_2d(
    sched: &ManeuverSchedule2D,
    b: &LaplacianBlocks,
    horizon: f64,
    samples: usize,
) -> Result<f64> {
    let mut max = 0.0f64;
    for piece in sched.pieces().iter().filter(|p| p.start <= horizon) {
        for t in piece_samples(piece.start, piece.end, horizon, samples) {
            max = max.max(eval_piece_2d(piece, b, t)?.leader_speed(b.m()));
        }
    }
    Ok(SPEED_MARGIN * max)
}

/// 3-D analogue of [`leader_speed_bound_2d`], over both planar and axis
/// channels of every phase.
pub fn leader_speed_bound_3d(sched: &ManeuverSchedule3D, horizon: f64, samples: usize) -> Result<f64> {
    let mut max = 0.0f64;
    for (idx, piece) in sched.pieces().iter().enumerate() {
        if piece.start > horizon {
            break;
        }
        let m = sched.frames()[idx].blocks.m();
        for t in piece_samples(piece.start, piece.end, horizon, samples) {
            max = max.max(sched.eval_in(idx, t)?.frame.leader_speed(m));
        }
    }
    Ok(SPEED_MARGIN * max)
}
