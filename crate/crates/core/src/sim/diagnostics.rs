use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{Scenario, SimTrace};
use crate::error::{FormationError, Result};
use crate::laplacian::{hermitian_extremes, solve_followers, CMatrix, ComplexScalar, LaplacianBlocks};
use crate::maneuver::{Point3, TargetState};

/// Leader errors `e_L = p_L - p_L*` and follower errors
/// `e_F = p_F + W_ff⁻¹ W_fl p_L`, with axis analogues in 3-D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingErrors {
    pub e_l: Vec<ComplexScalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_l_axis: Option<Vec<f64>>,
    pub e_f: Vec<ComplexScalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_f_axis: Option<Vec<f64>>,
}

impl TrackingErrors {
    /// Per-agent error magnitude, leaders first.
    pub fn magnitudes(&self) -> Vec<f64> {
        let planar = self.e_l.iter().chain(&self.e_f).map(|z| z.norm_sqr());
        let axis: Vec<f64> = match (&self.e_l_axis, &self.e_f_axis) {
            (Some(l), Some(f)) => l.iter().chain(f).map(|x| x * x).collect(),
            _ => vec![0.0; self.e_l.len() + self.e_f.len()],
        };
        planar.zip(axis).map(|(a, b)| (a + b).sqrt()).collect()
    }

    pub fn follower_norm(&self) -> f64 {
        let planar: f64 = self.e_f.iter().map(|z| z.norm_sqr()).sum();
        let axis: f64 = self.e_f_axis.iter().flatten().map(|x| x * x).sum();
        (planar + axis).sqrt()
    }

    pub fn leader_norm(&self) -> f64 {
        let planar: f64 = self.e_l.iter().map(|z| z.norm_sqr()).sum();
        let axis: f64 = self.e_l_axis.iter().flatten().map(|x| x * x).sum();
        (planar + axis).sqrt()
    }
}

/// Errors of positions `p` (and axis `tau`) in the frame of `target`.
pub fn tracking_errors(
    b: &LaplacianBlocks,
    p: &[ComplexScalar],
    tau: Option<&[f64]>,
    target: &TargetState,
) -> Result<TrackingErrors> {
    let m = b.m();
    if p.len() != b.n() {
        return Err(FormationError::Contract(format!("expected {} positions", b.n())));
    }
    let e_l = p[..m].iter().zip(&target.p_star).map(|(p, s)| p - s).collect();
    let e_f = p[m..]
        .iter()
        .zip(solve_followers(b, &p[..m])?)
        .map(|(p, s)| p - s)
        .collect();
    let (e_l_axis, e_f_axis) = match (tau, &target.tau_star) {
        (Some(tau), Some(ts)) => {
            let e_l = tau[..m].iter().zip(ts).map(|(x, s)| x - s).collect();
            let e_f = tau[m..]
                .iter()
                .zip(b.solve_axis_followers(&tau[..m])?)
                .map(|(x, s)| x - s)
                .collect();
            (Some(e_l), Some(e_f))
        }
        _ => (None, None),
    };
    Ok(TrackingErrors {
        e_l,
        e_l_axis,
        e_f,
        e_f_axis,
    })
}

/// `V₃ = ½ e_Fᴴ D_ff e_F`, plus `½ |M_ff e_τ|²` when the axis error is given.
pub fn lyapunov_v3(b: &LaplacianBlocks, e_f: &[ComplexScalar], e_f_axis: Option<&[f64]>) -> f64 {
    let e = DVector::from_column_slice(e_f);
    let planar = 0.5 * e.dotc(&(&b.d_ff * &e)).re;
    let axis = match (e_f_axis, &b.m_ff) {
        (Some(x), Some(m_ff)) => 0.5 * (m_ff * DVector::from_column_slice(x)).norm_squared(),
        _ => 0.0,
    };
    planar + axis
}

fn distance(a: &Point3, b: &Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Smallest distance over all unordered pairs; infinite for fewer than two.
pub fn min_pairwise_distance(points: &[Point3]) -> f64 {
    let mut min = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            min = min.min(distance(a, b));
        }
    }
    min
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    /// Error radius of each agent, leaders first.
    pub psi: Vec<f64>,
    /// `min_t min_{i<j} |p_i* - p_j*| - ψ_i - ψ_j`.
    pub margin: f64,
    /// 1-based ids of the binding pair.
    pub pair: (usize, usize),
    pub time: f64,
    pub passed: bool,
}

/// `sqrt(λmax / λmin)` of a Hermitian positive definite matrix.
fn eigen_ratio(d: &CMatrix) -> Result<f64> {
    let (lo, hi) = hermitian_extremes(d)?;
    if lo <= 0.0 {
        return Err(FormationError::NotLocalizable { cond: f64::INFINITY });
    }
    Ok((hi / lo).sqrt())
}

/// Error radii from the initial sample and the certified margin over the
/// recorded targets. The follower radius assumes the leaders track exactly.
pub fn collision_certificate(sc: &Scenario, trace: &SimTrace) -> Result<CollisionReport> {
    let first = trace
        .samples
        .first()
        .ok_or_else(|| FormationError::Contract("empty trace".into()))?;
    let b = sc.maneuver.blocks(first.phase);
    let mut kappa = eigen_ratio(&b.d_ff)?;
    if let Some(m_ff) = &b.m_ff {
        let d = (m_ff.transpose() * m_ff).map(|x| ComplexScalar::new(x, 0.0));
        kappa = kappa.max(eigen_ratio(&d)?);
    }
    let mags = first.errors.magnitudes();
    let m = trace.m;
    let follower_radius = kappa * first.errors.follower_norm();
    let psi: Vec<f64> = (0..trace.n)
        .map(|i| if i < m { mags[i] } else { follower_radius })
        .collect();

    let mut margin = f64::INFINITY;
    let (mut pair, mut time) = ((0, 0), first.t);
    for s in &trace.samples {
        for i in 0..trace.n {
            for j in i + 1..trace.n {
                let slack = distance(&s.targets[i], &s.targets[j]) - psi[i] - psi[j];
                if slack < margin {
                    margin = slack;
                    pair = (i + 1, j + 1);
                    time = s.t;
                }
            }
        }
    }
    Ok(CollisionReport {
        psi,
        margin,
        pair,
        time,
        passed: margin > 0.0,
    })
}

/// `min_t min_{i<j} |p_i - p_j| - (|p_i* - p_j*| - ψ_i - ψ_j)`; nonnegative
/// when the realized distances respect the certified lower bound.
pub fn realized_collision_slack(trace: &SimTrace, report: &CollisionReport) -> f64 {
    let mut min = f64::INFINITY;
    for s in &trace.samples {
        for i in 0..trace.n {
            for j in i + 1..trace.n {
                let bound = distance(&s.targets[i], &s.targets[j]) - report.psi[i] - report.psi[j];
                min = min.min(distance(&s.positions[i], &s.positions[j]) - bound);
            }
        }
    }
    min
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplacian::assemble;
    use crate::presets;

    fn c(re: f64, im: f64) -> ComplexScalar {
        ComplexScalar::new(re, im)
    }

    #[test]
    fn pairwise_distance() {
        assert_eq!(min_pairwise_distance(&[[0.0; 3], [3.0, 4.0, 0.0]]), 5.0);
        assert_eq!(
            min_pairwise_distance(&[[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]),
            1.0
        );
        assert_eq!(min_pairwise_distance(&[[0.0, 0.0, 1.0], [0.0, 0.0, 3.0]]), 2.0);
        assert!(min_pairwise_distance(&[[0.0; 3]]).is_infinite());
    }

    #[test]
    fn errors_on_and_off_target() {
        let (g, cfg) = presets::default_2d();
        let b = assemble(&g, &cfg).unwrap();
        let target = TargetState {
            p_star: cfg.r[..3].to_vec(),
            p_star_dot: vec![c(0.0, 0.0); 3],
            tau_star: None,
            tau_star_dot: None,
        };
        let e = tracking_errors(&b, &cfg.r, None, &target).unwrap();
        assert!(e.leader_norm() < 1e-12 && e.follower_norm() < 1e-12);
        assert!(lyapunov_v3(&b, &e.e_f, None) < 1e-24);

        let u = [c(0.3, -0.1), c(0.0, 2.0), c(-1.0, 0.5)];
        let mut p = cfg.r.clone();
        for (x, du) in p[3..].iter_mut().zip(&u) {
            *x += du;
        }
        let e = tracking_errors(&b, &p, None, &target).unwrap();
        for (a, b) in e.e_f.iter().zip(&u) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn lyapunov_identity_example() {
        let (g, cfg) = presets::default_2d();
        let mut b = assemble(&g, &cfg).unwrap();
        b.d_ff = CMatrix::identity(1, 1);
        assert!((lyapunov_v3(&b, &[c(1.0, 1.0)], None) - 1.0).abs() < 1e-15);
        assert_eq!(lyapunov_v3(&b, &[c(0.0, 0.0)], None), 0.0);
    }
}
