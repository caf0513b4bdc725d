//! 3-D maneuvers as a sequence of planar phases.
//!
//! Each phase picks a rotation plane (yaw: X-Y, pitch: X-Z, roll: Y-Z). The
//! agent coordinates are re-indexed into a complex plane component and a real
//! axis component, the phase's weights are assembled from the configuration
//! held at phase entry, and the phase's maneuver is applied relative to that
//! configuration.

use serde::{Deserialize, Serialize};

use super::profile::{smoothstep, Profile};
use super::{TargetState, CONTINUITY_TOL};
use crate::error::{FormationError, Result};
use crate::graph::FormationGraph;
use crate::laplacian::{assemble, localizable, solve_followers, ComplexScalar, LaplacianBlocks, NominalConfig};

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plane {
    /// X-Y plane, Z axis.
    Yaw,
    /// X-Z plane, Y axis.
    Pitch,
    /// Y-Z plane, X axis.
    Roll,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Yaw, Plane::Pitch, Plane::Roll];

    /// Splits a point into its plane component and axis component.
    pub fn project(self, [x, y, z]: Point3) -> (ComplexScalar, f64) {
        match self {
            Plane::Yaw => (ComplexScalar::new(x, y), z),
            Plane::Pitch => (ComplexScalar::new(x, z), y),
            Plane::Roll => (ComplexScalar::new(y, z), x),
        }
    }

    /// Inverse of [`Plane::project`].
    pub fn embed(self, p: ComplexScalar, tau: f64) -> Point3 {
        match self {
            Plane::Yaw => [p.re, p.im, tau],
            Plane::Pitch => [p.re, tau, p.im],
            Plane::Roll => [tau, p.re, p.im],
        }
    }
}

/// Nominal configuration of `q` seen from `plane`.
pub fn nominal_for_plane(q: &[Point3], plane: Plane) -> NominalConfig {
    let (r, eps) = q.iter().map(|&p| plane.project(p)).unzip();
    NominalConfig::spatial(r, eps)
}

/// The three re-indexed configurations `(r^a, ε^a)`, `(r^b, ε^b)`, `(r^c, ε^c)`.
pub fn reindex_3d(q: &[Point3]) -> [NominalConfig; 3] {
    Plane::ALL.map(|plane| nominal_for_plane(q, plane))
}

/// Leader shape change within a phase, in world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeaderMotion {
    Hold,
    Smoothstep { to: Vec<Point3> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece3D {
    pub start: f64,
    pub end: f64,
    pub plane: Plane,
    pub translation: Profile<ComplexScalar>,
    pub axis_translation: Profile<f64>,
    pub scale: Profile<f64>,
    pub rotation: Profile<f64>,
    pub leaders: LeaderMotion,
}

impl Piece3D {
    /// A pure rotation in `plane` following `rotation`.
    pub fn rotation(start: f64, end: f64, plane: Plane, rotation: Profile<f64>) -> Self {
        Self {
            start,
            end,
            plane,
            translation: Profile::Constant(ComplexScalar::new(0.0, 0.0)),
            axis_translation: Profile::Constant(0.0),
            scale: Profile::Constant(1.0),
            rotation,
            leaders: LeaderMotion::Hold,
        }
    }

    pub fn hold(start: f64, end: f64, plane: Plane) -> Self {
        Self::rotation(start, end, plane, Profile::Constant(0.0))
    }

    fn starts_at_identity(&self) -> bool {
        let (a, b) = (self.start, self.end);
        self.translation.value(a, a, b).norm() <= CONTINUITY_TOL
            && self.axis_translation.value(a, a, b).abs() <= CONTINUITY_TOL
            && (self.scale.value(a, a, b) - 1.0).abs() <= CONTINUITY_TOL
            && self.rotation.value(a, a, b).abs() <= CONTINUITY_TOL
    }

    fn needs_finite_interval(&self) -> bool {
        self.translation.needs_finite_interval()
            || self.axis_translation.needs_finite_interval()
            || self.scale.needs_finite_interval()
            || self.rotation.needs_finite_interval()
            || matches!(self.leaders, LeaderMotion::Smoothstep { .. })
    }
}

/// Weights active during one phase.
#[derive(Debug, Clone)]
pub struct PhaseFrame {
    pub plane: Plane,
    /// Configuration held at phase entry; the phase's shape parameter.
    pub base: Vec<Point3>,
    pub blocks: LaplacianBlocks,
}

impl PhaseFrame {
    pub fn new(graph: &FormationGraph, plane: Plane, base: Vec<Point3>) -> Result<Self> {
        let blocks = assemble(graph, &nominal_for_plane(&base, plane))?;
        Ok(Self {
            plane,
            base,
            blocks,
        })
    }
}

/// 3-D target with planar/axis components in the phase frame and the same
/// target expressed in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetState3D {
    pub plane: Plane,
    pub frame: TargetState,
    pub world: Vec<Point3>,
    pub world_dot: Vec<Point3>,
}

#[derive(Debug, Clone)]
pub struct ManeuverSchedule3D {
    pieces: Vec<Piece3D>,
    frames: Vec<PhaseFrame>,
}

impl ManeuverSchedule3D {
    pub fn new(graph: &FormationGraph, q0: &[Point3], pieces: Vec<Piece3D>) -> Result<Self> {
        Self::build(graph, q0, pieces).map_err(|mut issues| issues.swap_remove(0))
    }

    /// Builds the phase frames, collecting every problem found.
    pub fn build(
        graph: &FormationGraph,
        q0: &[Point3],
        pieces: Vec<Piece3D>,
    ) -> std::result::Result<Self, Vec<FormationError>> {
        let contract = |msg: String| FormationError::Contract(msg);
        let mut issues = Vec::new();
        if q0.len() != graph.n() {
            return Err(vec![contract(format!(
                "nominal configuration has {} points, graph has {} agents",
                q0.len(),
                graph.n()
            ))]);
        }
        if pieces.is_empty() {
            return Err(vec![contract("schedule has no pieces".into())]);
        }
        for (idx, p) in pieces.iter().enumerate() {
            if !(p.start < p.end) || !p.start.is_finite() {
                issues.push(contract(format!("piece {idx}: empty interval [{}, {}]", p.start, p.end)));
            }
            if p.end.is_infinite() && p.needs_finite_interval() {
                issues.push(contract(format!(
                    "piece {idx}: ramps and smoothsteps need a finite interval"
                )));
            }
            if idx > 0 && !p.starts_at_identity() {
                issues.push(contract(format!(
                    "piece {idx}: maneuver must start from the phase-entry configuration \
                     (zero translation, unit scale, zero rotation)"
                )));
            }
            if let LeaderMotion::Smoothstep { to } = &p.leaders {
                if to.len() != graph.m() {
                    issues.push(contract(format!(
                        "piece {idx}: leader motion needs {} points",
                        graph.m()
                    )));
                }
            }
            let scale_end = if p.end.is_finite() { p.end } else { p.start + 1.0 };
            if (0..=100).any(|s| {
                let t = p.start + (scale_end - p.start) * s as f64 / 100.0;
                p.scale.value(t, p.start, p.end) == 0.0
            }) {
                issues.push(contract(format!("piece {idx}: scale parameter reaches zero")));
            }
        }
        for (idx, pair) in pieces.windows(2).enumerate() {
            if pair[0].end != pair[1].start {
                issues.push(contract(format!(
                    "phases {idx} and {} overlap or leave a gap ({} vs {})",
                    idx + 1,
                    pair[0].end,
                    pair[1].start
                )));
            }
        }
        if !issues.is_empty() {
            return Err(issues);
        }

        let mut frames: Vec<PhaseFrame> = Vec::with_capacity(pieces.len());
        let mut base = q0.to_vec();
        for (idx, piece) in pieces.iter().enumerate() {
            let cfg = nominal_for_plane(&base, piece.plane);
            let assumption = cfg.assumption_issues(graph);
            if !assumption.is_empty() {
                issues.extend(assumption);
                break;
            }
            let frame = match PhaseFrame::new(graph, piece.plane, base.clone()) {
                Ok(f) => f,
                Err(e) => {
                    issues.push(e);
                    break;
                }
            };
            let report = localizable(&frame.blocks);
            if !report.invertible {
                issues.push(FormationError::NotLocalizable { cond: report.cond });
                break;
            }
            if idx + 1 < pieces.len() {
                match eval_target_3d(piece, &frame, piece.end) {
                    Ok(target) => base = target.world,
                    Err(e) => {
                        issues.push(e);
                        break;
                    }
                }
            }
            frames.push(frame);
        }
        if issues.is_empty() {
            Ok(Self { pieces, frames })
        } else {
            Err(issues)
        }
    }

    pub fn pieces(&self) -> &[Piece3D] {
        &self.pieces
    }

    pub fn frames(&self) -> &[PhaseFrame] {
        &self.frames
    }

    pub fn start(&self) -> f64 {
        self.pieces[0].start
    }

    pub fn end(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].end
    }

    /// Index of the phase containing `t`; boundaries belong to the later phase.
    pub fn piece_index(&self, t: f64) -> Result<usize> {
        if !(t >= self.start() && t <= self.end()) {
            return Err(FormationError::OutsideSchedule {
                t,
                start: self.start(),
                end: self.end(),
            });
        }
        Ok(self
            .pieces
            .iter()
            .rposition(|p| t >= p.start)
            .unwrap_or(0))
    }

    pub fn eval(&self, t: f64) -> Result<TargetState3D> {
        let idx = self.piece_index(t)?;
        self.eval_in(idx, t)
    }

    /// Evaluates phase `idx` at `t`, which may sit on either boundary.
    pub fn eval_in(&self, idx: usize, t: f64) -> Result<TargetState3D> {
        let piece = self
            .pieces
            .get(idx)
            .ok_or_else(|| FormationError::Contract(format!("no phase {idx}")))?;
        eval_target_3d(piece, &self.frames[idx], t)
    }

    /// Configuration at the end of the last finite phase.
    pub fn terminal(&self) -> Result<Vec<Point3>> {
        let last = self.pieces.len() - 1;
        let piece = &self.pieces[last];
        let t = if piece.end.is_finite() { piece.end } else { piece.start };
        Ok(self.eval_in(last, t)?.world)
    }
}

/// Target of one phase at `t`. The frame must belong to the phase's plane.
pub fn eval_target_3d(piece: &Piece3D, frame: &PhaseFrame, t: f64) -> Result<TargetState3D> {
    if piece.plane != frame.plane {
        return Err(FormationError::Contract(format!(
            "phase rotates in the {:?} plane but the weights belong to {:?}",
            piece.plane, frame.plane
        )));
    }
    let plane = piece.plane;
    let b = &frame.blocks;
    let m = b.m();
    let (a, e) = (piece.start, piece.end);

    let base_leaders = &frame.base[..m];
    let (leaders, leaders_dot): (Vec<Point3>, Vec<Point3>) = match &piece.leaders {
        LeaderMotion::Hold => (base_leaders.to_vec(), vec![[0.0; 3]; m]),
        LeaderMotion::Smoothstep { to } => {
            let u = ((t - a) / (e - a)).clamp(0.0, 1.0);
            let du = if (a..=e).contains(&t) { 1.0 / (e - a) } else { 0.0 };
            let (s, ds) = smoothstep(u);
            base_leaders
                .iter()
                .zip(to)
                .map(|(from, to)| {
                    let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
                    (
                        [from[0] + s * d[0], from[1] + s * d[1], from[2] + s * d[2]],
                        [ds * du * d[0], ds * du * d[1], ds * du * d[2]],
                    )
                })
                .unzip()
        }
    };
    let (sp_l, st_l): (Vec<_>, Vec<_>) = leaders.iter().map(|&q| plane.project(q)).unzip();
    let (sp_l_dot, st_l_dot): (Vec<_>, Vec<_>) =
        leaders_dot.iter().map(|&q| plane.project(q)).unzip();
    let sp_f = solve_followers(b, &sp_l)?;
    let sp_f_dot = solve_followers(b, &sp_l_dot)?;
    let st_f = b.solve_axis_followers(&st_l)?;
    let st_f_dot = b.solve_axis_followers(&st_l_dot)?;

    let (beta, beta_dot) = piece.translation.eval(t, a, e);
    let (beta_tau, beta_tau_dot) = piece.axis_translation.eval(t, a, e);
    let (h, h_dot) = piece.scale.eval(t, a, e);
    let (theta, theta_dot) = piece.rotation.eval(t, a, e);
    let rot = ComplexScalar::from_polar(1.0, theta);
    let rate = ComplexScalar::new(h_dot, h * theta_dot) * rot;

    let (p_star, p_star_dot): (Vec<_>, Vec<_>) = sp_l
        .iter()
        .chain(&sp_f)
        .zip(sp_l_dot.iter().chain(&sp_f_dot))
        .map(|(&s, &ds)| (beta + rot * s * h, beta_dot + rate * s + rot * ds * h))
        .unzip();
    let (tau_star, tau_star_dot): (Vec<_>, Vec<_>) = st_l
        .iter()
        .chain(&st_f)
        .zip(st_l_dot.iter().chain(&st_f_dot))
        .map(|(&s, &ds)| (beta_tau + h * s, beta_tau_dot + h_dot * s + h * ds))
        .unzip();

    let world = p_star
        .iter()
        .zip(&tau_star)
        .map(|(&p, &tau)| plane.embed(p, tau))
        .collect();
    let world_dot = p_star_dot
        .iter()
        .zip(&tau_star_dot)
        .map(|(&p, &tau)| plane.embed(p, tau))
        .collect();
    Ok(TargetState3D {
        plane,
        frame: TargetState {
            p_star,
            p_star_dot,
            tau_star: Some(tau_star),
            tau_star_dot: Some(tau_star_dot),
        },
        world,
        world_dot,
    })
}

/// One step of an orientation plan: rotate in `plane` following `rotation`
/// (which must start at zero) over `[start, end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationPhase {
    pub plane: Plane,
    pub rotation: Profile<f64>,
    pub start: f64,
    pub end: f64,
}

/// Sequential yaw/pitch/roll plan with per-phase weights. An empty plan holds
/// the initial configuration forever.
pub fn orientation_plan(
    graph: &FormationGraph,
    q0: &[Point3],
    phases: &[OrientationPhase],
) -> Result<ManeuverSchedule3D> {
    if phases.is_empty() {
        return ManeuverSchedule3D::new(graph, q0, vec![Piece3D::hold(0.0, f64::INFINITY, Plane::Yaw)]);
    }
    for (idx, ph) in phases.iter().enumerate() {
        if ph.rotation.value(ph.start, ph.start, ph.end).abs() > CONTINUITY_TOL {
            return Err(FormationError::Contract(format!(
                "phase {idx}: rotation profile must start at zero"
            )));
        }
    }
    for pair in phases.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(FormationError::Contract(format!(
                "phases overlap at t = {}",
                pair[1].start
            )));
        }
    }
    let pieces = phases
        .iter()
        .map(|ph| Piece3D::rotation(ph.start, ph.end, ph.plane, ph.rotation.clone()))
        .collect();
    ManeuverSchedule3D::new(graph, q0, pieces)
}
