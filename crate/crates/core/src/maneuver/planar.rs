use serde::{Deserialize, Serialize};

use super::profile::{Profile, ShapeProfile};
use super::{TargetState, CONTINUITY_TOL};
use crate::error::{FormationError, Result};
use crate::laplacian::{
    shape_feasible, solve_followers, ComplexScalar, LaplacianBlocks, NominalConfig,
};

/// One interval `[start, end)` of a planar maneuver. `end` may be infinite
/// for a final hold. `shape` holds the leader entries of `s(t)` only; the
/// follower entries are always solved from the Laplacian blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece2D {
    pub start: f64,
    pub end: f64,
    pub translation: Profile<ComplexScalar>,
    pub scale: Profile<f64>,
    pub rotation: Profile<f64>,
    pub shape: ShapeProfile<ComplexScalar>,
}

/// Maneuver parameters at one instant, with time derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ManeuverParams {
    pub translation: (ComplexScalar, ComplexScalar),
    pub scale: (f64, f64),
    pub rotation: (f64, f64),
    pub shape_leaders: (Vec<ComplexScalar>, Vec<ComplexScalar>),
}

impl Piece2D {
    /// Identity maneuver (no translation, unit scale, no rotation) holding the
    /// given leader shape.
    pub fn hold(start: f64, end: f64, shape_leaders: Vec<ComplexScalar>) -> Self {
        Self {
            start,
            end,
            translation: Profile::Constant(ComplexScalar::new(0.0, 0.0)),
            scale: Profile::Constant(1.0),
            rotation: Profile::Constant(0.0),
            shape: ShapeProfile::Hold(shape_leaders),
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }

    pub fn params(&self, t: f64) -> ManeuverParams {
        let (a, b) = (self.start, self.end);
        ManeuverParams {
            translation: self.translation.eval(t, a, b),
            scale: self.scale.eval(t, a, b),
            rotation: self.rotation.eval(t, a, b),
            shape_leaders: self.shape.eval(t, a, b),
        }
    }

    fn needs_finite_interval(&self) -> bool {
        self.translation.needs_finite_interval()
            || self.scale.needs_finite_interval()
            || self.rotation.needs_finite_interval()
            || self.shape.needs_finite_interval()
    }
}

/// Piecewise planar maneuver `p*(t) = β(t) + h(t) e^{iθ(t)} s(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManeuverSchedule2D {
    pieces: Vec<Piece2D>,
}

/// Number of interior samples used to confirm that `h(t)` stays away from zero.
const SCALE_SAMPLES: usize = 1000;

impl ManeuverSchedule2D {
    /// Validates contiguity, continuity across boundaries and non-zero scale.
    pub fn new(pieces: Vec<Piece2D>, leaders: usize) -> Result<Self> {
        let issues = Self::issues(&pieces, leaders);
        match issues.into_iter().next() {
            Some(first) => Err(first),
            None => Ok(Self { pieces }),
        }
    }

    pub fn issues(pieces: &[Piece2D], leaders: usize) -> Vec<FormationError> {
        let mut issues = Vec::new();
        let contract = |msg: String| FormationError::Contract(msg);
        if pieces.is_empty() {
            issues.push(contract("schedule has no pieces".into()));
            return issues;
        }
        for (idx, p) in pieces.iter().enumerate() {
            if !(p.start < p.end) || !p.start.is_finite() {
                issues.push(contract(format!("piece {idx}: empty interval [{}, {}]", p.start, p.end)));
                continue;
            }
            if p.end.is_infinite() && p.needs_finite_interval() {
                issues.push(contract(format!(
                    "piece {idx}: ramps and smoothsteps need a finite interval"
                )));
            }
            if p.shape.len() != leaders || !p.shape.is_consistent() {
                issues.push(contract(format!(
                    "piece {idx}: leader shape needs {leaders} entries"
                )));
                continue;
            }
            let span_end = if p.end.is_finite() { p.end } else { p.start + 1.0 };
            let sample = (0..=SCALE_SAMPLES)
                .map(|s| p.start + (span_end - p.start) * s as f64 / SCALE_SAMPLES as f64);
            let min_scale = sample
                .map(|t| p.scale.value(t, p.start, p.end).abs())
                .fold(f64::INFINITY, f64::min);
            if min_scale <= 0.0 {
                issues.push(contract(format!("piece {idx}: scale parameter reaches zero")));
            }
        }
        for (idx, pair) in pieces.windows(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            if a.end != b.start {
                issues.push(contract(format!(
                    "pieces {idx} and {} are not contiguous ({} vs {})",
                    idx + 1,
                    a.end,
                    b.start
                )));
                continue;
            }
            if a.shape.len() != b.shape.len() {
                continue;
            }
            let pa = a.params(a.end);
            let pb = b.params(b.start);
            let jump = (pa.translation.0 - pb.translation.0).norm()
                + (pa.scale.0 - pb.scale.0).abs()
                + (pa.rotation.0 - pb.rotation.0).abs()
                + pa
                    .shape_leaders
                    .0
                    .iter()
                    .zip(&pb.shape_leaders.0)
                    .map(|(x, y)| (x - y).norm())
                    .sum::<f64>();
            if jump > CONTINUITY_TOL {
                issues.push(contract(format!(
                    "schedule is discontinuous at t = {} (jump {jump:.3e})",
                    a.end
                )));
            }
        }
        issues
    }

    pub fn pieces(&self) -> &[Piece2D] {
        &self.pieces
    }

    pub fn start(&self) -> f64 {
        self.pieces[0].start
    }

    pub fn end(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].end
    }

    /// Index of the piece containing `t`; boundaries belong to the later piece.
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
}

/// Target formation of a single piece at `t`, followers solved from `b`.
pub fn eval_piece_2d(piece: &Piece2D, b: &LaplacianBlocks, t: f64) -> Result<TargetState> {
    let params = piece.params(t);
    let (s_l, s_l_dot) = params.shape_leaders;
    let s_f = solve_followers(b, &s_l)?;
    let s_f_dot = solve_followers(b, &s_l_dot)?;
    let (beta, beta_dot) = params.translation;
    let (h, h_dot) = params.scale;
    let (theta, theta_dot) = params.rotation;
    let rot = ComplexScalar::from_polar(1.0, theta);
    // d/dt [h e^{iθ}] = (ḣ + i h θ̇) e^{iθ}
    let rate = ComplexScalar::new(h_dot, h * theta_dot) * rot;
    let (p_star, p_star_dot) = s_l
        .iter()
        .chain(&s_f)
        .zip(s_l_dot.iter().chain(&s_f_dot))
        .map(|(&s, &ds)| (beta + rot * s * h, beta_dot + rate * s + rot * ds * h))
        .unzip();
    Ok(TargetState {
        p_star,
        p_star_dot,
        tau_star: None,
        tau_star_dot: None,
    })
}

/// Target formation and its velocity at `t`.
pub fn eval_target_2d(
    sched: &ManeuverSchedule2D,
    b: &LaplacianBlocks,
    t: f64,
) -> Result<TargetState> {
    let idx = sched.piece_index(t)?;
    eval_piece_2d(&sched.pieces[idx], b, t)
}

/// Outcome of [`shape_interp`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeInterp {
    pub piece: Piece2D,
    /// Full end shape actually reached (followers solved from the leaders).
    pub s_end: Vec<ComplexScalar>,
    /// The supplied follower entries violated the constraints and were
    /// replaced by the solved ones.
    pub recomputed: bool,
}

/// Morph from the nominal shape `r` at `t0` to `s_end` at `t1` with a cubic
/// smoothstep on the leader entries.
pub fn shape_interp(
    r: &NominalConfig,
    s_end: &[ComplexScalar],
    t0: f64,
    t1: f64,
    b: &LaplacianBlocks,
) -> Result<ShapeInterp> {
    let m = b.m();
    if s_end.len() != b.n() || r.len() != b.n() {
        return Err(FormationError::Contract(format!(
            "shape vectors need {} entries",
            b.n()
        )));
    }
    if !(t0 < t1) {
        return Err(FormationError::Contract(format!("empty interval [{t0}, {t1}]")));
    }
    let solved = solve_followers(b, &s_end[..m])?;
    let scale = s_end.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let recomputed = solved
        .iter()
        .zip(&s_end[m..])
        .any(|(a, e)| (a - e).norm() > CONTINUITY_TOL * scale);
    let mut full = s_end[..m].to_vec();
    full.extend(solved);
    let mut piece = Piece2D::hold(t0, t1, Vec::new());
    piece.shape = ShapeProfile::Smoothstep {
        from: r.r[..m].to_vec(),
        to: s_end[..m].to_vec(),
    };
    Ok(ShapeInterp {
        piece,
        s_end: full,
        recomputed,
    })
}

/// Morph toward a follower shape, choosing the minimum-norm leader shape that
/// realises it. Fails when the shape cannot be reached by moving the leaders.
pub fn shape_interp_to_followers(
    r: &NominalConfig,
    s_f_end: &[ComplexScalar],
    t0: f64,
    t1: f64,
    b: &LaplacianBlocks,
) -> Result<ShapeInterp> {
    let s_l = shape_feasible(b, s_f_end)?
        .s_l
        .ok_or(FormationError::InfeasibleShape)?;
    let mut full = s_l;
    full.extend_from_slice(s_f_end);
    shape_interp(r, &full, t0, t1, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplacian::assemble;
    use crate::presets;
    use nalgebra::DVector;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> ComplexScalar {
        ComplexScalar::new(re, im)
    }

    fn blocks() -> (LaplacianBlocks, NominalConfig) {
        let (g, cfg) = presets::default_2d();
        (assemble(&g, &cfg).unwrap(), cfg)
    }

    #[test]
    fn identity_maneuver_reproduces_nominal() {
        let (b, cfg) = blocks();
        let sched = ManeuverSchedule2D::new(vec![Piece2D::hold(0.0, 10.0, cfg.r[..3].to_vec())], 3)
            .unwrap();
        let target = eval_target_2d(&sched, &b, 4.0).unwrap();
        for (p, r) in target.p_star.iter().zip(&cfg.r) {
            assert!((p - r).norm() < 1e-12);
        }
        assert!(target.p_star_dot.iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn translated_scaled_rotated_unit_shape() {
        // s_i = 1 for every agent is a valid shape (rows of W_f sum to zero)
        let (b, _) = blocks();
        let mut piece = Piece2D::hold(0.0, 1.0, vec![c(1.0, 0.0); 3]);
        piece.translation = Profile::Constant(c(2.0, 1.0));
        piece.scale = Profile::Constant(2.0);
        piece.rotation = Profile::Constant(FRAC_PI_2);
        let target = eval_piece_2d(&piece, &b, 0.5).unwrap();
        for p in &target.p_star {
            assert!((p - c(2.0, 3.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn velocity_matches_finite_difference() {
        let (b, cfg) = blocks();
        let piece = Piece2D {
            start: 0.0,
            end: 4.0,
            translation: Profile::Ramp {
                from: c(0.0, 0.0),
                to: c(3.0, -1.0),
            },
            scale: Profile::Sinusoid {
                offset: 1.2,
                amplitude: 0.3,
                omega: 1.1,
                phase: 0.0,
            },
            rotation: Profile::Smoothstep { from: 0.0, to: 1.3 },
            shape: ShapeProfile::Smoothstep {
                from: cfg.r[..3].to_vec(),
                to: vec![c(2.0, 2.0), c(-3.0, 4.0), c(-1.0, -2.0)],
            },
        };
        let h = 1e-6;
        for &t in &[0.7, 1.9, 3.1] {
            let d = eval_piece_2d(&piece, &b, t).unwrap().p_star_dot;
            let plus = eval_piece_2d(&piece, &b, t + h).unwrap().p_star;
            let minus = eval_piece_2d(&piece, &b, t - h).unwrap().p_star;
            for i in 0..6 {
                let fd = (plus[i] - minus[i]) / (2.0 * h);
                assert!((d[i] - fd).norm() <= 1e-6 * d[i].norm().max(1.0), "agent {i} at {t}");
            }
        }
    }

    #[test]
    fn schedule_validation() {
        let shape = vec![c(0.0, 0.0); 3];
        let a = Piece2D::hold(0.0, 1.0, shape.clone());
        let gap = Piece2D::hold(1.5, 2.0, shape.clone());
        assert!(ManeuverSchedule2D::new(vec![a.clone(), gap], 3).is_err());
        let mut jump = Piece2D::hold(1.0, 2.0, shape.clone());
        jump.translation = Profile::Constant(c(1.0, 0.0));
        assert!(ManeuverSchedule2D::new(vec![a.clone(), jump], 3).is_err());
        let mut zero_scale = Piece2D::hold(1.0, 2.0, shape.clone());
        zero_scale.scale = Profile::Ramp { from: 1.0, to: -1.0 };
        assert!(ManeuverSchedule2D::new(vec![a.clone(), zero_scale], 3).is_err());
        assert!(ManeuverSchedule2D::new(vec![a.clone()], 2).is_err());
        let sched =
            ManeuverSchedule2D::new(vec![a, Piece2D::hold(1.0, f64::INFINITY, shape)], 3).unwrap();
        assert_eq!(sched.piece_index(1.0).unwrap(), 1);
        assert_eq!(sched.piece_index(0.5).unwrap(), 0);
        assert!(sched.piece_index(-0.1).is_err());
    }

    #[test]
    fn shape_morph_stays_in_null_space() {
        let (b, cfg) = blocks();
        let target = presets::shape_target_corrected();
        let interp = shape_interp(&cfg, &target, 5.0, 6.0, &b).unwrap();
        // followers 4 and 5 use other neighbors in the default topology
        assert!(interp.recomputed);
        let w_f = b.w_f();
        for step in 0..=20 {
            let t = 5.0 + step as f64 / 20.0;
            let s = eval_piece_2d(&interp.piece, &b, t).unwrap().p_star;
            let res = (&w_f * DVector::from_column_slice(&s)).norm();
            assert!(res <= 1e-9, "residual {res} at {t}");
        }
        let start = eval_piece_2d(&interp.piece, &b, 5.0).unwrap().p_star;
        for (a, e) in start.iter().zip(&cfg.r) {
            assert!((a - e).norm() < 1e-12);
        }
        let end = eval_piece_2d(&interp.piece, &b, 6.0).unwrap().p_star;
        for (a, e) in end.iter().zip(&interp.s_end) {
            assert!((a - e).norm() < 1e-12);
        }
    }

    #[test]
    fn morph_toward_follower_shape() {
        let (b, cfg) = blocks();
        let target = presets::shape_target_corrected();
        let interp = shape_interp_to_followers(&cfg, &target[3..], 0.0, 1.0, &b).unwrap();
        for (a, e) in interp.s_end[3..].iter().zip(&target[3..]) {
            assert!((a - e).norm() < 1e-8);
        }
        let mut bad = cfg.r[3..].to_vec();
        bad[2] += c(1.0, 0.0);
        assert_eq!(
            shape_interp_to_followers(&cfg, &bad, 0.0, 1.0, &b),
            Err(FormationError::InfeasibleShape)
        );
    }
}
