//! Complex constraint weights and the partitioned Laplacian blocks.
//!
//! Each follower `i` with constraint pair `(j, k)` contributes one row to
//! `W_f = [W_fl W_ff]`: the diagonal entry `w_ij + w_ik` and off-diagonal
//! entries `-w_ij`, `-w_ik`. The real axis channel (3-D) builds `M_f` from the
//! same formula restricted to the real line.

use nalgebra::{linalg::LU, ComplexField, DMatrix, DVector, Dyn, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{FormationError, Result};
use crate::graph::FormationGraph;

pub use nalgebra::Complex;

/// A point in the complex plane, `x + y·i`.
pub type ComplexScalar = Complex<f64>;

pub type CMatrix = DMatrix<ComplexScalar>;
pub type RMatrix = DMatrix<f64>;

/// Blocks whose condition number reaches this value count as singular.
pub const DEFAULT_COND_THRESHOLD: f64 = 1e12;
/// Relative singular-value cutoff used for numerical rank.
pub const RANK_CUTOFF: f64 = 1e-10;
/// Relative residual threshold for the shape feasibility test.
pub const SHAPE_RESIDUAL_TOL: f64 = 1e-8;
const ZERO_SUM_TOL: f64 = 1e-12;

/// Constant nominal configuration: planar positions `r` and, for 3-D, the
/// axis positions `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NominalConfig {
    pub r: Vec<ComplexScalar>,
    pub epsilon: Option<Vec<f64>>,
}

impl NominalConfig {
    pub fn planar(r: Vec<ComplexScalar>) -> Self {
        Self { r, epsilon: None }
    }

    pub fn spatial(r: Vec<ComplexScalar>, epsilon: Vec<f64>) -> Self {
        Self {
            r,
            epsilon: Some(epsilon),
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    fn r_of(&self, id: usize) -> ComplexScalar {
        self.r[id - 1]
    }

    /// Every violation of the non-collocation assumptions for the follower
    /// triples of `g`, plus zero-sum weight pairs.
    pub fn assumption_issues(&self, g: &FormationGraph) -> Vec<FormationError> {
        let mut issues = Vec::new();
        if self.r.len() != g.n() || self.epsilon.as_ref().is_some_and(|e| e.len() != g.n()) {
            issues.push(FormationError::Contract(format!(
                "nominal configuration has {} entries, graph has {} agents",
                self.r.len(),
                g.n()
            )));
            return issues;
        }
        for (i, j, k) in g.constraint_triples() {
            let (ri, rj, rk) = (self.r_of(i), self.r_of(j), self.r_of(k));
            check_triple(i, j, k, ri == rj, ri == rk, rj == rk, "planar", &mut issues);
            if let Some(eps) = &self.epsilon {
                let (ei, ej, ek) = (eps[i - 1], eps[j - 1], eps[k - 1]);
                check_triple(i, j, k, ei == ej, ei == ek, ej == ek, "axis", &mut issues);
            }
        }
        issues
    }
}

#[allow(clippy::too_many_arguments)]
fn check_triple(
    i: usize,
    j: usize,
    k: usize,
    ij: bool,
    ik: bool,
    jk: bool,
    what: &'static str,
    issues: &mut Vec<FormationError>,
) {
    if ij {
        issues.push(FormationError::Collocated {
            follower: i,
            neighbor: j,
            what,
        });
    }
    if ik {
        issues.push(FormationError::Collocated {
            follower: i,
            neighbor: k,
            what,
        });
    }
    if jk && !ij && !ik {
        issues.push(FormationError::ZeroSumWeights {
            follower: i,
            j,
            k,
            what,
        });
    }
}

/// The two weights of one follower's constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPair<T> {
    pub ij: T,
    pub ik: T,
}

impl<T: ComplexField<RealField = f64>> WeightPair<T> {
    pub fn sum(&self) -> T {
        self.ij.clone() + self.ik.clone()
    }

    /// `w_ij + w_ik` vanishes (relative to the weight magnitudes); the
    /// follower laws divide by this sum.
    pub fn is_zero_sum(&self) -> bool {
        let scale = self.ij.clone().modulus() + self.ik.clone().modulus();
        self.sum().modulus() <= ZERO_SUM_TOL * scale
    }

    /// `w_ij (x_j - x_i) + w_ik (x_k - x_i)`.
    pub fn residual(&self, xi: T, xj: T, xk: T) -> T {
        self.ij.clone() * (xj - xi.clone()) + self.ik.clone() * (xk - xi)
    }
}

/// `w_ij = (r_j - r_i)^H / d_ij²`, `w_ik = -(r_k - r_i)^H / d_ik²`.
pub fn complex_weights(
    ri: ComplexScalar,
    rj: ComplexScalar,
    rk: ComplexScalar,
) -> Result<WeightPair<ComplexScalar>> {
    let dj = rj - ri;
    let dk = rk - ri;
    if dj.norm_sqr() == 0.0 || dk.norm_sqr() == 0.0 {
        return Err(FormationError::CollocatedPoints);
    }
    Ok(WeightPair {
        ij: dj.conj() / dj.norm_sqr(),
        ik: -dk.conj() / dk.norm_sqr(),
    })
}

/// Real-line specialisation: `w_ij = 1/(ε_j - ε_i)`, `w_ik = -1/(ε_k - ε_i)`.
pub fn real_axis_weights(ei: f64, ej: f64, ek: f64) -> Result<WeightPair<f64>> {
    let dj = ej - ei;
    let dk = ek - ei;
    if dj == 0.0 || dk == 0.0 {
        return Err(FormationError::CollocatedPoints);
    }
    Ok(WeightPair {
        ij: 1.0 / dj,
        ik: -1.0 / dk,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerWeights {
    pub follower: usize,
    pub j: usize,
    pub k: usize,
    pub planar: WeightPair<ComplexScalar>,
    pub axis: Option<WeightPair<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizabilityReport {
    pub invertible: bool,
    /// Worst condition number over the checked blocks.
    pub cond: f64,
}

/// Partitioned weight matrices with the derived `D` blocks.
#[derive(Debug, Clone)]
pub struct LaplacianBlocks {
    n: usize,
    m: usize,
    weights: Vec<FollowerWeights>,
    pub w_fl: CMatrix,
    pub w_ff: CMatrix,
    pub m_fl: Option<RMatrix>,
    pub m_ff: Option<RMatrix>,
    /// `W_ff^H W_ff`
    pub d_ff: CMatrix,
    /// `W_ff^H W_fl`
    pub d_fl: CMatrix,
    pub cond_wff: f64,
    pub cond_mff: Option<f64>,
    /// Followers whose planar or axis weight pair sums to zero.
    pub zero_sum: Vec<usize>,
    planar_lu: LU<ComplexScalar, Dyn, Dyn>,
    axis_lu: Option<LU<f64, Dyn, Dyn>>,
}

/// Condition number from singular values; infinite when singular.
pub fn condition_number<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let sv = a.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Builds `W_f` (and `M_f` when `cfg.epsilon` is present) for `g`.
pub fn assemble(g: &FormationGraph, cfg: &NominalConfig) -> Result<LaplacianBlocks> {
    let (n, m) = (g.n(), g.m());
    if cfg.r.len() != n || cfg.epsilon.as_ref().is_some_and(|e| e.len() != n) {
        return Err(FormationError::Contract(format!(
            "nominal configuration length {} does not match n = {n}",
            cfg.r.len()
        )));
    }
    let nf = n - m;
    let mut w_f = CMatrix::zeros(nf, n);
    let mut m_f = cfg.epsilon.as_ref().map(|_| RMatrix::zeros(nf, n));
    let mut weights = Vec::with_capacity(nf);
    let mut zero_sum = Vec::new();

    for (row, (i, j, k)) in g.constraint_triples().enumerate() {
        let collocated = |neighbor| FormationError::Collocated {
            follower: i,
            neighbor,
            what: "planar",
        };
        let (ri, rj, rk) = (cfg.r[i - 1], cfg.r[j - 1], cfg.r[k - 1]);
        let planar = complex_weights(ri, rj, rk)
            .map_err(|_| collocated(if rj == ri { j } else { k }))?;
        w_f[(row, i - 1)] += planar.sum();
        w_f[(row, j - 1)] -= planar.ij;
        w_f[(row, k - 1)] -= planar.ik;
        let mut flagged = planar.is_zero_sum();

        let axis = match (&cfg.epsilon, m_f.as_mut()) {
            (Some(eps), Some(m_f)) => {
                let (ei, ej, ek) = (eps[i - 1], eps[j - 1], eps[k - 1]);
                let w = real_axis_weights(ei, ej, ek).map_err(|_| FormationError::Collocated {
                    follower: i,
                    neighbor: if ej == ei { j } else { k },
                    what: "axis",
                })?;
                m_f[(row, i - 1)] += w.sum();
                m_f[(row, j - 1)] -= w.ij;
                m_f[(row, k - 1)] -= w.ik;
                flagged |= w.is_zero_sum();
                Some(w)
            }
            _ => None,
        };
        if flagged {
            zero_sum.push(i);
        }
        weights.push(FollowerWeights {
            follower: i,
            j,
            k,
            planar,
            axis,
        });
    }

    let w_fl = w_f.columns(0, m).into_owned();
    let w_ff = w_f.columns(m, nf).into_owned();
    let (m_fl, m_ff) = match m_f {
        Some(mf) => (
            Some(mf.columns(0, m).into_owned()),
            Some(mf.columns(m, nf).into_owned()),
        ),
        None => (None, None),
    };
    let d_ff = w_ff.adjoint() * &w_ff;
    let d_fl = w_ff.adjoint() * &w_fl;
    let cond_wff = condition_number(&w_ff);
    let cond_mff = m_ff.as_ref().map(condition_number);
    let planar_lu = LU::new(w_ff.clone());
    let axis_lu = m_ff.clone().map(LU::new);

    Ok(LaplacianBlocks {
        n,
        m,
        weights,
        w_fl,
        w_ff,
        m_fl,
        m_ff,
        d_ff,
        d_fl,
        cond_wff,
        cond_mff,
        zero_sum,
        planar_lu,
        axis_lu,
    })
}

impl LaplacianBlocks {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn has_axis(&self) -> bool {
        self.m_ff.is_some()
    }

    pub fn weights(&self) -> &[FollowerWeights] {
        &self.weights
    }

    pub fn follower_weights(&self, follower: usize) -> Option<&FollowerWeights> {
        follower
            .checked_sub(self.m + 1)
            .and_then(|idx| self.weights.get(idx))
    }

    /// `W_f = [W_fl W_ff]`
    pub fn w_f(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.n - self.m, self.n);
        out.columns_mut(0, self.m).copy_from(&self.w_fl);
        out.columns_mut(self.m, self.n - self.m).copy_from(&self.w_ff);
        out
    }

    pub fn m_f(&self) -> Option<RMatrix> {
        let (m_fl, m_ff) = (self.m_fl.as_ref()?, self.m_ff.as_ref()?);
        let mut out = RMatrix::zeros(self.n - self.m, self.n);
        out.columns_mut(0, self.m).copy_from(m_fl);
        out.columns_mut(self.m, self.n - self.m).copy_from(m_ff);
        Some(out)
    }

    fn solve_planar(&self, rhs: &DVector<ComplexScalar>) -> Result<DVector<ComplexScalar>> {
        self.require_localizable()?;
        self.planar_lu
            .solve(rhs)
            .ok_or(FormationError::NotLocalizable {
                cond: self.cond_wff,
            })
    }

    fn solve_axis(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.require_localizable()?;
        let lu = self
            .axis_lu
            .as_ref()
            .ok_or_else(|| FormationError::Contract("blocks carry no axis channel".into()))?;
        lu.solve(rhs).ok_or(FormationError::NotLocalizable {
            cond: self.cond_mff.unwrap_or(f64::INFINITY),
        })
    }

    pub fn require_localizable(&self) -> Result<()> {
        let report = localizable(self);
        if report.invertible {
            Ok(())
        } else {
            Err(FormationError::NotLocalizable { cond: report.cond })
        }
    }

    /// Solves `W_ff x = rhs` for an arbitrary right-hand side.
    pub fn solve_wff(&self, rhs: &[ComplexScalar]) -> Result<Vec<ComplexScalar>> {
        if rhs.len() != self.n - self.m {
            return Err(FormationError::Contract("right-hand side length".into()));
        }
        Ok(self
            .solve_planar(&DVector::from_column_slice(rhs))?
            .iter()
            .copied()
            .collect())
    }

    /// Solves `M_ff x = rhs`.
    pub fn solve_mff(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n - self.m {
            return Err(FormationError::Contract("right-hand side length".into()));
        }
        Ok(self
            .solve_axis(&DVector::from_column_slice(rhs))?
            .iter()
            .copied()
            .collect())
    }

    /// Axis analogue of [`solve_followers`]: `τ_F = -M_ff^{-1} M_fl τ_L`.
    pub fn solve_axis_followers(&self, tau_l: &[f64]) -> Result<Vec<f64>> {
        let m_fl = self
            .m_fl
            .as_ref()
            .ok_or_else(|| FormationError::Contract("blocks carry no axis channel".into()))?;
        if tau_l.len() != self.m {
            return Err(FormationError::Contract(format!(
                "expected {} leader entries, got {}",
                self.m,
                tau_l.len()
            )));
        }
        let rhs = -(m_fl * DVector::from_column_slice(tau_l));
        Ok(self.solve_axis(&rhs)?.iter().copied().collect())
    }

    /// `W_ff^{-1} W_fl` computed column-wise by the LU factors.
    pub fn follower_map(&self) -> Result<CMatrix> {
        self.require_localizable()?;
        self.planar_lu
            .solve(&self.w_fl)
            .ok_or(FormationError::NotLocalizable {
                cond: self.cond_wff,
            })
    }

    pub fn axis_follower_map(&self) -> Result<Option<RMatrix>> {
        match (&self.axis_lu, &self.m_fl) {
            (Some(lu), Some(m_fl)) => {
                self.require_localizable()?;
                lu.solve(m_fl)
                    .map(Some)
                    .ok_or(FormationError::NotLocalizable {
                        cond: self.cond_mff.unwrap_or(f64::INFINITY),
                    })
            }
            _ => Ok(None),
        }
    }
}

/// Rank/condition test of `W_ff` (and `M_ff` when present) against
/// [`DEFAULT_COND_THRESHOLD`].
pub fn localizable(b: &LaplacianBlocks) -> LocalizabilityReport {
    localizable_with(b, DEFAULT_COND_THRESHOLD)
}

pub fn localizable_with(b: &LaplacianBlocks, threshold: f64) -> LocalizabilityReport {
    let cond = b.cond_mff.map_or(b.cond_wff, |c| c.max(b.cond_wff));
    LocalizabilityReport {
        invertible: cond.is_finite() && cond < threshold,
        cond,
    }
}

/// Follower positions `p_F = -W_ff^{-1} W_fl p_L` determined by the leaders.
pub fn solve_followers(b: &LaplacianBlocks, p_l: &[ComplexScalar]) -> Result<Vec<ComplexScalar>> {
    if p_l.len() != b.m {
        return Err(FormationError::Contract(format!(
            "expected {} leader entries, got {}",
            b.m,
            p_l.len()
        )));
    }
    let rhs = -(&b.w_fl * DVector::from_column_slice(p_l));
    Ok(b.solve_planar(&rhs)?.iter().copied().collect())
}

/// Largest entry modulus of `W_ff^{-1} W_fl`, and of `M_ff^{-1} M_fl` when
/// the axis channel is present.
pub fn xi_bound(b: &LaplacianBlocks) -> Result<f64> {
    let planar = b.follower_map()?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let axis = b
        .axis_follower_map()?
        .map_or(0.0, |a| a.iter().map(|x| x.abs()).fold(0.0, f64::max));
    Ok(planar.max(axis))
}

/// Smallest and largest eigenvalue of a Hermitian matrix, computed from the
/// real symmetric embedding `[[A, -B], [B, A]]` of `D = A + iB`.
pub fn hermitian_extremes(d: &CMatrix) -> Result<(f64, f64)> {
    if !d.is_square() || d.is_empty() {
        return Err(FormationError::Contract("expected a non-empty square matrix".into()));
    }
    let scale = d.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    if (d - d.adjoint()).iter().any(|z| z.norm() > 1e-12 * scale) {
        return Err(FormationError::Contract("matrix is not Hermitian".into()));
    }
    let k = d.nrows();
    let mut emb = RMatrix::zeros(2 * k, 2 * k);
    for r in 0..k {
        for c in 0..k {
            let z = d[(r, c)];
            emb[(r, c)] = z.re;
            emb[(r + k, c + k)] = z.re;
            emb[(r, c + k)] = -z.im;
            emb[(r + k, c)] = z.im;
        }
    }
    // symmetrise away rounding so the solver sees an exactly symmetric input
    let emb = (&emb + emb.transpose()) * 0.5;
    let eig = SymmetricEigen::new(emb);
    Ok((eig.eigenvalues.min(), eig.eigenvalues.max()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeFeasibility {
    /// Minimum-norm leader shape realising the requested follower shape.
    pub s_l: Option<Vec<ComplexScalar>>,
    /// `W_fl` has full row rank, so every follower shape is reachable.
    pub w_fl_full_row_rank: bool,
    pub rank: usize,
}

fn numerical_rank(sv: &DVector<f64>) -> usize {
    let max = sv.max();
    sv.iter().filter(|&&s| s > RANK_CUTOFF * max && s > 0.0).count()
}

/// Looks for leader positions whose induced follower positions equal `s_f`.
pub fn shape_feasible(b: &LaplacianBlocks, s_f: &[ComplexScalar]) -> Result<ShapeFeasibility> {
    let nf = b.n - b.m;
    if s_f.len() != nf {
        return Err(FormationError::Contract(format!(
            "expected {nf} follower entries, got {}",
            s_f.len()
        )));
    }
    let k = -b.follower_map()?;
    let target = DVector::from_column_slice(s_f);
    let svd = SVD::new(k.clone(), true, true);
    let cutoff = RANK_CUTOFF * svd.singular_values.max();
    let rank = numerical_rank(&svd.singular_values);
    let pinv = svd
        .pseudo_inverse(cutoff.max(f64::MIN_POSITIVE))
        .map_err(|e| FormationError::Contract(e.to_string()))?;
    let s_l = pinv * &target;
    let residual = (&k * &s_l - &target).norm();
    let w_fl_rank = numerical_rank(&b.w_fl.clone().singular_values());
    Ok(ShapeFeasibility {
        s_l: (residual <= SHAPE_RESIDUAL_TOL * target.norm()).then(|| s_l.iter().copied().collect()),
        w_fl_full_row_rank: w_fl_rank == nf,
        rank,
    })
}

/// Serialises a complex matrix as rows of `[re, im]` pairs.
pub fn complex_rows(a: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    a.row_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn real_rows(a: &RMatrix) -> Vec<Vec<f64>> {
    a.row_iter().map(|row| row.iter().copied().collect()).collect()
}
