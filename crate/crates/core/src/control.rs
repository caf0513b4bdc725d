//! Leader tracking law, the two follower laws and the position-only gain
//! certificate.
//!
//! Every law is a pure function of local information. The helpers at the end
//! of the module evaluate a law for the whole group at once, which is what the
//! simulator needs.

use nalgebra::{ComplexField, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FormationError, Result};
use crate::graph::FormationGraph;
use crate::laplacian::{xi_bound, ComplexScalar, LaplacianBlocks, WeightPair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    /// `|A| <= sig_epsilon` takes the zero branch of the normalisation.
    #[serde(default)]
    pub sig_epsilon: f64,
}

impl Default for GainConfig {
    fn default() -> Self {
        Self {
            alpha1: 2.0,
            alpha2: 10.0,
            sig_epsilon: 0.0,
        }
    }
}

impl GainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, v: f64| {
            Err(FormationError::Contract(format!("{name} must be positive and finite, got {v}")))
        };
        if !(self.alpha1 > 0.0 && self.alpha1.is_finite()) {
            return bad("alpha1", self.alpha1);
        }
        if !(self.alpha2 > 0.0 && self.alpha2.is_finite()) {
            return bad("alpha2", self.alpha2);
        }
        if !(self.sig_epsilon >= 0.0 && self.sig_epsilon.is_finite()) {
            return Err(FormationError::Contract(format!(
                "sig_epsilon must be nonnegative, got {}",
                self.sig_epsilon
            )));
        }
        Ok(())
    }
}

/// Planar velocity `v` and, in 3-D, the axis velocity `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    pub v: ComplexScalar,
    pub sigma: Option<f64>,
}

/// `v = -tanh(Re e) - i tanh(Im e) + ṗ*` with `e = p - p*`.
pub fn leader_velocity(p: ComplexScalar, p_star: ComplexScalar, p_star_dot: ComplexScalar) -> ControlInput {
    let e = p - p_star;
    ControlInput {
        v: ComplexScalar::new(-e.re.tanh(), -e.im.tanh()) + p_star_dot,
        sigma: None,
    }
}

/// `σ = -tanh(τ - τ*) + τ̇*`.
pub fn leader_axis_velocity(tau: f64, tau_star: f64, tau_star_dot: f64) -> f64 {
    -(tau - tau_star).tanh() + tau_star_dot
}

pub fn leader_velocity_3d(
    (p, p_star, p_star_dot): (ComplexScalar, ComplexScalar, ComplexScalar),
    (tau, tau_star, tau_star_dot): (f64, f64, f64),
) -> ControlInput {
    ControlInput {
        sigma: Some(leader_axis_velocity(tau, tau_star, tau_star_dot)),
        ..leader_velocity(p, p_star, p_star_dot)
    }
}

/// Position and velocity of one constraint neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborState<T> {
    pub p: T,
    pub v: T,
}

/// `v_i = [w_ij (v_j - α₁(p_i - p_j)) + w_ik (v_k - α₁(p_i - p_k))] / (w_ij + w_ik)`.
/// Works on either channel: complex planar weights or real axis weights.
pub fn follower_velocity_feedback<T: ComplexField<RealField = f64>>(
    w: &WeightPair<T>,
    j: NeighborState<T>,
    k: NeighborState<T>,
    p_i: T,
    alpha1: f64,
) -> Result<T> {
    if w.is_zero_sum() {
        return Err(FormationError::DegenerateWeights);
    }
    let pull = |n: NeighborState<T>| n.v - (p_i.clone() - n.p).scale(alpha1);
    Ok((w.ij.clone() * pull(j) + w.ik.clone() * pull(k)) / w.sum())
}

/// `γ_ijk = (w_ij + w_ik)^H [w_ij (p_j - p_i) + w_ik (p_k - p_i)]`.
pub fn gamma_own<T: ComplexField<RealField = f64>>(w: &WeightPair<T>, p_i: T, p_j: T, p_k: T) -> T {
    w.sum().conjugate() * w.residual(p_i, p_j, p_k)
}

/// `γ_gil = w_gi^H [w_gi (p_g - p_i) + w_gl (p_g - p_l)]` for a follower `g`
/// whose constraint neighbors are `i` and `l`.
pub fn gamma_incoming<T: ComplexField<RealField = f64>>(w_gi: T, w_gl: T, p_g: T, p_i: T, p_l: T) -> T {
    w_gi.clone().conjugate() * (w_gi * (p_g.clone() - p_i) + w_gl * (p_g - p_l))
}

/// `A / |A|`, or zero when `|A| <= guard`. On reals this is the sign function.
pub fn normalize<T: ComplexField<RealField = f64>>(a: T, guard: f64) -> T {
    let norm = a.clone().modulus();
    if norm > guard && norm > 0.0 {
        a.unscale(norm)
    } else {
        T::zero()
    }
}

/// `v = A + α₂ Ϝ(A)` with `A = γ_ijk + Σ_g γ_gil`.
pub fn follower_position_only<T: ComplexField<RealField = f64>>(
    own: T,
    incoming: &[T],
    alpha2: f64,
    sig_epsilon: f64,
) -> T {
    let a = incoming.iter().cloned().fold(own, |acc, g| acc + g);
    a.clone() + normalize(a, sig_epsilon).scale(alpha2)
}

/// `ξ (√2 + δ) m`.
pub fn gain_bound(xi: f64, delta: f64, m: usize) -> f64 {
    xi * (std::f64::consts::SQRT_2 + delta) * m as f64
}

/// Smallest `α₂` covered by the convergence certificate. For 3-D blocks
/// `ξ` already covers the axis channel.
pub fn certify_gain(b: &LaplacianBlocks, delta: f64, m: usize) -> Result<f64> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(FormationError::Contract(format!("delta must be nonnegative, got {delta}")));
    }
    Ok(gain_bound(xi_bound(b)?, delta, m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub xi: f64,
    pub delta: f64,
    pub alpha2: f64,
    pub alpha2_min: f64,
    pub passed: bool,
}

impl CertificateReport {
    pub fn new(b: &LaplacianBlocks, delta: f64, alpha2: f64) -> Result<Self> {
        let xi = xi_bound(b)?;
        let alpha2_min = certify_gain(b, delta, b.m())?;
        Ok(Self {
            xi,
            delta,
            alpha2,
            alpha2_min,
            passed: alpha2 >= alpha2_min,
        })
    }

    pub fn require(&self) -> Result<()> {
        if self.passed {
            Ok(())
        } else {
            Err(FormationError::Certificate {
                alpha2: self.alpha2,
                alpha2_min: self.alpha2_min,
            })
        }
    }
}

/// `(w_gi, w_gl, l)` for follower `g` whose pair contains `i`.
fn incoming_weights<T: Clone>(w: &WeightPair<T>, pair: (usize, usize), i: usize) -> (T, T, usize) {
    if pair.0 == i {
        (w.ij.clone(), w.ik.clone(), pair.1)
    } else {
        (w.ik.clone(), w.ij.clone(), pair.0)
    }
}

/// `A_i` for every follower in id order, built from the per-agent terms.
/// `p` holds all `n` positions; `weight` picks the channel.
pub fn position_only_terms<T, F>(g: &FormationGraph, p: &[T], weight: F) -> Result<Vec<T>>
where
    T: ComplexField<RealField = f64> + Copy,
    F: Fn(usize) -> Option<WeightPair<T>>,
{
    let missing = |i| FormationError::Contract(format!("no weights for follower {i}"));
    let at = |id: usize| p[id - 1];
    g.followers()
        .map(|i| {
            let (j, k) = g.constraint_pair(i).ok_or_else(|| missing(i))?;
            let own = gamma_own(&weight(i).ok_or_else(|| missing(i))?, at(i), at(j), at(k));
            let mut acc = own;
            for (gid, _) in g.dependents(i) {
                let wg = weight(gid).ok_or_else(|| missing(gid))?;
                let pair = g.constraint_pair(gid).ok_or_else(|| missing(gid))?;
                let (w_gi, w_gl, l) = incoming_weights(&wg, pair, i);
                acc += gamma_incoming(w_gi, w_gl, at(gid), at(i), at(l));
            }
            Ok(acc)
        })
        .collect()
}

/// Planar position-only inputs of every follower.
pub fn position_only_planar(
    g: &FormationGraph,
    b: &LaplacianBlocks,
    p: &[ComplexScalar],
    gains: &GainConfig,
) -> Result<Vec<ComplexScalar>> {
    let terms = position_only_terms(g, p, |i| b.follower_weights(i).map(|w| w.planar))?;
    Ok(terms
        .into_iter()
        .map(|a| follower_position_only(a, &[], gains.alpha2, gains.sig_epsilon))
        .collect())
}

/// Axis position-only inputs of every follower (η terms on `τ`).
pub fn position_only_axis(g: &FormationGraph, b: &LaplacianBlocks, tau: &[f64], gains: &GainConfig) -> Result<Vec<f64>> {
    let terms = position_only_terms(g, tau, |i| b.follower_weights(i).and_then(|w| w.axis))?;
    Ok(terms
        .into_iter()
        .map(|a| follower_position_only(a, &[], gains.alpha2, gains.sig_epsilon))
        .collect())
}

/// Follower velocities under the velocity-feedback law. The per-agent law
/// couples followers through their neighbors' velocities, so the group
/// velocity is the solution of `W_ff v_F = -W_fl v_L - α₁ W_f p`.
pub fn velocity_feedback_planar(
    b: &LaplacianBlocks,
    p: &[ComplexScalar],
    v_l: &[ComplexScalar],
    alpha1: f64,
) -> Result<Vec<ComplexScalar>> {
    let m = b.m();
    check_lengths(b, p.len(), v_l.len())?;
    let p = DVector::from_column_slice(p);
    let rhs = -(&b.w_fl * DVector::from_column_slice(v_l)) - b.w_f() * p * ComplexScalar::new(alpha1, 0.0);
    debug_assert_eq!(rhs.len(), b.n() - m);
    b.solve_wff(rhs.as_slice())
}

/// Axis analogue of [`velocity_feedback_planar`] on the `M` blocks.
pub fn velocity_feedback_axis(b: &LaplacianBlocks, tau: &[f64], sigma_l: &[f64], alpha1: f64) -> Result<Vec<f64>> {
    check_lengths(b, tau.len(), sigma_l.len())?;
    let (m_fl, m_f) = match (&b.m_fl, b.m_f()) {
        (Some(m_fl), Some(m_f)) => (m_fl, m_f),
        _ => return Err(FormationError::Contract("blocks carry no axis channel".into())),
    };
    let rhs = -(m_fl * DVector::from_column_slice(sigma_l)) - m_f * DVector::from_column_slice(tau) * alpha1;
    b.solve_mff(rhs.as_slice())
}

fn check_lengths(b: &LaplacianBlocks, n: usize, m: usize) -> Result<()> {
    if n != b.n() || m != b.m() {
        return Err(FormationError::Contract(format!(
            "expected {} positions and {} leader velocities, got {n} and {m}",
            b.n(),
            b.m()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplacian::assemble;
    use crate::presets;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> ComplexScalar {
        ComplexScalar::new(re, im)
    }

    fn random_c(rng: &mut impl Rng) -> ComplexScalar {
        c(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))
    }

    #[test]
    fn leader_law() {
        assert_eq!(leader_velocity(c(1.0, 2.0), c(1.0, 2.0), c(0.0, 0.0)).v, c(0.0, 0.0));
        let v = leader_velocity(c(1.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)).v;
        assert_abs_diff_eq!(v.re, -0.761_594_155_955_764_9, epsilon = 1e-12);
        assert_abs_diff_eq!(v.im, -0.761_594_155_955_764_9, epsilon = 1e-12);
        let u = leader_velocity_3d((c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)), (2.0, 2.0, 0.5));
        assert_eq!(u.sigma, Some(0.5));
    }

    #[test]
    fn leader_law_bounded() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let (p, ps, pd) = (
                random_c(&mut rng) * 100.0,
                random_c(&mut rng),
                random_c(&mut rng),
            );
            let v = leader_velocity(p, ps, pd).v;
            assert!((v - pd).norm() <= std::f64::consts::SQRT_2 + 1e-12);
        }
    }

    #[test]
    fn velocity_feedback_examples() {
        let w = WeightPair { ij: c(1.0, 0.0), ik: c(0.0, 1.0) };
        let still = |p| NeighborState { p, v: c(0.0, 0.0) };
        let v = follower_velocity_feedback(&w, still(c(1.0, 0.0)), still(c(0.0, 1.0)), c(0.0, 0.0), 2.0).unwrap();
        assert!(v.norm() < 1e-15);

        let shift = c(3.0, -7.0);
        let moving = |p, v| NeighborState { p, v };
        let a = follower_velocity_feedback(&w, moving(c(2.0, 1.0), c(0.3, 0.0)), moving(c(-1.0, 1.0), c(0.0, 0.2)), c(0.5, 0.5), 1.5)
            .unwrap();
        let b = follower_velocity_feedback(
            &w,
            moving(c(2.0, 1.0) + shift, c(0.3, 0.0)),
            moving(c(-1.0, 1.0) + shift, c(0.0, 0.2)),
            c(0.5, 0.5) + shift,
            1.5,
        )
        .unwrap();
        assert!((a - b).norm() < 1e-12);

        let zero = WeightPair { ij: c(1.0, 0.0), ik: c(-1.0, 0.0) };
        assert_eq!(
            follower_velocity_feedback(&zero, still(c(1.0, 0.0)), still(c(0.0, 1.0)), c(0.0, 0.0), 2.0),
            Err(FormationError::DegenerateWeights)
        );
    }

    #[test]
    fn position_only_examples() {
        assert_eq!(follower_position_only(c(0.0, 0.0), &[], 3.0, 0.0), c(0.0, 0.0));
        assert_eq!(follower_position_only(c(3.0, 4.0), &[], 5.0, 0.0), c(6.0, 8.0));
        assert_eq!(follower_position_only(c(1.0, 2.0), &[c(2.0, 2.0)], 5.0, 0.0), c(6.0, 8.0));
        assert_eq!(follower_position_only(c(1e-10, 0.0), &[], 5.0, 1e-9), c(1e-10, 0.0));
        assert_eq!(follower_position_only(-2.0, &[], 1.5, 0.0), -3.5);
    }

    #[test]
    fn gain_examples() {
        let min = gain_bound(std::f64::consts::FRAC_1_SQRT_2, 1.0, 3);
        assert_abs_diff_eq!(min, 3.0 + 3.0 / 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(gain_bound(1.0, 0.0, 1), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn default_gain_regression() {
        // ξ of the default blocks from an explicit inverse
        let (g, cfg) = presets::default_2d();
        let b = assemble(&g, &cfg).unwrap();
        let inv = b.w_ff.clone().try_inverse().unwrap();
        let xi = (inv * &b.w_fl).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let min = certify_gain(&b, 0.0, 3).unwrap();
        assert_abs_diff_eq!(min, xi * 2f64.sqrt() * 3.0, epsilon = 1e-9);
        let report = CertificateReport::new(&b, 0.0, min * 0.5).unwrap();
        assert!(!report.passed);
        assert!(matches!(report.require(), Err(FormationError::Certificate { .. })));
    }

    #[test]
    fn stacked_feedback_matches_per_agent_law() {
        let (g, cfg) = presets::default_3d();
        let b = assemble(&g, &cfg).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let p: Vec<_> = (0..6).map(|_| random_c(&mut rng)).collect();
            let v_l: Vec<_> = (0..3).map(|_| random_c(&mut rng)).collect();
            let alpha1 = rng.gen_range(0.1..5.0);
            let v_f = velocity_feedback_planar(&b, &p, &v_l, alpha1).unwrap();
            let v: Vec<_> = v_l.iter().chain(&v_f).copied().collect();
            for w in b.weights() {
                let state = |id: usize| NeighborState { p: p[id - 1], v: v[id - 1] };
                let law = follower_velocity_feedback(&w.planar, state(w.j), state(w.k), p[w.follower - 1], alpha1).unwrap();
                assert!((law - v[w.follower - 1]).norm() <= 1e-10 * (1.0 + law.norm()));
            }

            let tau: Vec<f64> = (0..6).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let s_l: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let s_f = velocity_feedback_axis(&b, &tau, &s_l, alpha1).unwrap();
            let s: Vec<_> = s_l.iter().chain(&s_f).copied().collect();
            for w in b.weights() {
                let state = |id: usize| NeighborState { p: tau[id - 1], v: s[id - 1] };
                let law = follower_velocity_feedback(&w.axis.unwrap(), state(w.j), state(w.k), tau[w.follower - 1], alpha1)
                    .unwrap();
                assert!((law - s[w.follower - 1]).abs() <= 1e-10 * (1.0 + law.abs()));
            }
        }
    }

    #[test]
    fn position_only_terms_equal_negative_zeta() {
        let (g, cfg) = presets::default_3d();
        let b = assemble(&g, &cfg).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let p: Vec<_> = (0..6).map(|_| random_c(&mut rng)).collect();
            let terms = position_only_terms(&g, &p, |i| b.follower_weights(i).map(|w| w.planar)).unwrap();
            let pv = DVector::from_column_slice(&p);
            let zeta = &b.d_ff * pv.rows(3, 3) + &b.d_fl * pv.rows(0, 3);
            for (a, z) in terms.iter().zip(zeta.iter()) {
                assert!((a + z).norm() < 1e-10);
            }

            let tau: Vec<f64> = (0..6).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let terms = position_only_terms(&g, &tau, |i| b.follower_weights(i).and_then(|w| w.axis)).unwrap();
            let m_ff = b.m_ff.as_ref().unwrap();
            let m_f = b.m_f().unwrap();
            let zeta = m_ff.transpose() * (m_f * DVector::from_column_slice(&tau));
            for (a, z) in terms.iter().zip(zeta.iter()) {
                assert!((a + z).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn position_only_vanishes_on_target_manifold() {
        let (g, cfg) = presets::default_2d();
        let b = assemble(&g, &cfg).unwrap();
        let gains = GainConfig { sig_epsilon: 1e-9, ..Default::default() };
        let v = position_only_planar(&g, &b, &cfg.r, &gains).unwrap();
        assert!(v.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn gains_validate() {
        assert!(GainConfig::default().validate().is_ok());
        assert!(GainConfig { alpha1: 0.0, ..Default::default() }.validate().is_err());
        assert!(GainConfig { sig_epsilon: -1.0, ..Default::default() }.validate().is_err());
    }
}
