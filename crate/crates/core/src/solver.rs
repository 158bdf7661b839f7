//! Penalized least squares and generalized cross validation.
//!
//! All fits solve `(B^T B + P) theta = B^T y` through a banded Cholesky
//! factorization. Traces of the smoother `H = B (B^T B + P)^{-1} B^T` are
//! taken on the coefficient scale: `tr(H) = tr(A^{-1} G)` and
//! `tr(H H^T) = tr(A^{-1} G A^{-1} G)` with `A = G + P`, `G = B^T B`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::banded::{BandedCholesky, SymBand};
use crate::basis::BasisMatrix;
use crate::error::{Error, Result};
use crate::penalty::{unit_penalty_band, PenaltySpec};

/// GCV denominators `1 - tr(H)/n` below this are treated as interpolation.
pub const GCV_DENOMINATOR_EPS: f64 = 1e-8;

/// Relative tolerance under which two GCV costs count as tied.
pub const COST_TIE_RTOL: f64 = 1e-12;

/// Costs closer than `COST_FLOOR_FACTOR * ||y||^2` are indistinguishable
/// from each other (round-off in the solve, not signal).
pub const COST_FLOOR_FACTOR: f64 = 1e-16;

/// Solution of one penalized least-squares problem.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub theta: Vec<f64>,
    pub normal_factorization: BandedCholesky,
    pub fitted: Vec<f64>,
    pub residual_ss: f64,
    /// `tr(H)`
    pub effective_dof: f64,
    pub df_res: f64,
}

impl FitResult {
    /// `||y - B theta||^2 / df_res`.
    pub fn sigma2(&self) -> Result<f64> {
        variance_from_rss(self.residual_ss, self.df_res)
    }
}

/// Reusable pieces of `(B^T B + lambda S) theta = B^T y` for one basis and
/// response, where `S = D_q^T D_q`.
#[derive(Debug, Clone)]
pub struct PenalizedSystem<'a> {
    basis: &'a BasisMatrix,
    y: &'a [f64],
    order: usize,
    gram: SymBand,
    unit_penalty: SymBand,
    bty: Vec<f64>,
    cost_floor: f64,
}

impl<'a> PenalizedSystem<'a> {
    pub fn new(basis: &'a BasisMatrix, y: &'a [f64], order: usize) -> Result<Self> {
        if basis.n_rows() != y.len() {
            return Err(Error::InvalidInput(format!(
                "{} basis rows but {} observations",
                basis.n_rows(),
                y.len()
            )));
        }
        if basis.derivative_order() != 0 {
            return Err(Error::InvalidInput("design matrix must hold basis values".into()));
        }
        let c = basis.n_basis();
        if order == 0 || order >= c {
            return Err(Error::InvalidOrder {
                order,
                n_coeffs: c,
            });
        }
        let bw = (basis.window() - 1).max(order);
        let mut gram = SymBand::zeros(c, bw);
        for j in 0..basis.n_rows() {
            let (start, w) = basis.row(j);
            for a in 0..w.len() {
                for b in 0..=a {
                    *gram.at_mut(start + a, a - b) += w[a] * w[b];
                }
            }
        }
        let mut unit_penalty = SymBand::zeros(c, order);
        for (i, row) in unit_penalty_band(order, c).iter().enumerate() {
            for (k, v) in row.iter().enumerate().take(i + 1) {
                *unit_penalty.at_mut(i, k) = *v;
            }
        }
        let yty: f64 = y.iter().map(|v| v * v).sum();
        Ok(Self {
            basis,
            y,
            order,
            gram,
            unit_penalty,
            bty: basis.tr_mul_vec(y),
            cost_floor: (COST_FLOOR_FACTOR * yty).max(f64::MIN_POSITIVE),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn normal_matrix(&self, lambda: f64) -> SymBand {
        self.gram.add_scaled(&self.unit_penalty, lambda)
    }

    /// True when `candidate` beats `incumbent` by more than round-off.
    pub fn improves(&self, candidate: f64, incumbent: f64) -> bool {
        strictly_better(candidate, incumbent, self.cost_floor)
    }

    pub fn cost_floor(&self) -> f64 {
        self.cost_floor
    }

    fn factor(&self, lambda: f64) -> Result<BandedCholesky> {
        let a = self.normal_matrix(lambda);
        // a column with no data and no penalty cannot be determined
        let c = a.dim();
        if let Some(first) = (0..c).find(|&i| a.get(i, i) == 0.0) {
            let last = (first..c).take_while(|&i| a.get(i, i) == 0.0).last().unwrap_or(first);
            return Err(Error::RankDeficient { first, last });
        }
        BandedCholesky::factor(&a)
    }

    /// GCV cost at `lambda`; `+inf` when the fit is degenerate.
    pub fn gcv(&self, lambda: f64) -> f64 {
        self.gcv_terms(lambda).map_or(f64::INFINITY, |g| g.cost)
    }

    fn gcv_terms(&self, lambda: f64) -> Result<GcvTerms> {
        let chol = self.factor(lambda)?;
        let theta = chol.solve(&self.bty);
        let rss = self.rss(&theta);
        let trace = chol.inverse_band().trace_product(&self.gram);
        let n = self.n_obs() as f64;
        let denom = 1.0 - trace / n;
        let cost = if denom < GCV_DENOMINATOR_EPS {
            f64::INFINITY
        } else {
            rss / (denom * denom)
        };
        Ok(GcvTerms { cost, trace })
    }

    fn rss(&self, theta: &[f64]) -> f64 {
        self.basis
            .mul_vec(theta)
            .iter()
            .zip(self.y)
            .map(|(f, y)| (y - f).powi(2))
            .sum()
    }

    /// Full solution at `lambda`, including residual degrees of freedom.
    pub fn solve(&self, lambda: f64) -> Result<FitResult> {
        let chol = self.factor(lambda)?;
        let theta = chol.solve(&self.bty);
        let fitted = self.basis.mul_vec(&theta);
        let residual_ss = fitted
            .iter()
            .zip(self.y)
            .map(|(f, y)| (y - f).powi(2))
            .sum();

        // M = A^{-1} G, column by column
        let c = self.gram.dim();
        let mut m = vec![0.0; c * c];
        let mut col = vec![0.0; c];
        for j in 0..c {
            for (i, v) in col.iter_mut().enumerate() {
                *v = self.gram.get(i, j);
            }
            let x = chol.solve(&col);
            for i in 0..c {
                m[i * c + j] = x[i];
            }
        }
        let trace: f64 = (0..c).map(|i| m[i * c + i]).sum();
        let mut trace_sq = 0.0;
        for i in 0..c {
            for j in 0..c {
                trace_sq += m[i * c + j] * m[j * c + i];
            }
        }
        let n = self.n_obs() as f64;
        Ok(FitResult {
            theta,
            normal_factorization: chol,
            fitted,
            residual_ss,
            effective_dof: trace,
            df_res: n - 2.0 * trace + trace_sq,
        })
    }
}

struct GcvTerms {
    cost: f64,
    trace: f64,
}

pub(crate) fn strictly_better(candidate: f64, incumbent: f64, floor: f64) -> bool {
    if !candidate.is_finite() {
        return false;
    }
    if !incumbent.is_finite() {
        return true;
    }
    incumbent - candidate > COST_TIE_RTOL * incumbent.abs().max(candidate.abs()) + floor
}

fn penalty_system<'a>(
    basis: &'a BasisMatrix,
    y: &'a [f64],
    penalty: &PenaltySpec,
) -> Result<PenalizedSystem<'a>> {
    if penalty.n_coeffs() != basis.n_basis() {
        return Err(Error::InvalidInput(format!(
            "penalty for {} coefficients, basis has {}",
            penalty.n_coeffs(),
            basis.n_basis()
        )));
    }
    PenalizedSystem::new(basis, y, penalty.order())
}

/// Minimizes `||y - B theta||^2 + theta^T P theta`.
pub fn fit_penalized(basis: &BasisMatrix, y: &[f64], penalty: &PenaltySpec) -> Result<FitResult> {
    penalty_system(basis, y, penalty)?.solve(penalty.lambda())
}

/// The `n x n` smoother matrix `B (B^T B + P)^{-1} B^T`.
pub fn smoother_matrix(basis: &BasisMatrix, penalty: &PenaltySpec) -> Result<DMatrix<f64>> {
    let y = vec![0.0; basis.n_rows()];
    let sys = penalty_system(basis, &y, penalty)?;
    let chol = sys.factor(penalty.lambda())?;
    let n = basis.n_rows();
    let c = basis.n_basis();
    let mut h = DMatrix::zeros(n, n);
    let mut e = vec![0.0; c];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        let (start, w) = basis.row(j);
        e[start..start + w.len()].copy_from_slice(w);
        let z = chol.solve(&e);
        for (i, hij) in basis.mul_vec(&z).into_iter().enumerate() {
            h[(i, j)] = hij;
        }
    }
    Ok(h)
}

/// `sum_i [((I - H) y)_i / (1 - tr(H)/n)]^2`.
pub fn gcv_score(basis: &BasisMatrix, y: &[f64], penalty: &PenaltySpec) -> Result<f64> {
    let sys = penalty_system(basis, y, penalty)?;
    let terms = sys.gcv_terms(penalty.lambda())?;
    if terms.cost.is_finite() {
        Ok(terms.cost)
    } else {
        Err(Error::DegenerateGcv {
            trace: terms.trace,
            n: y.len(),
        })
    }
}

/// Search scheme for the smoothing parameter: a log-spaced grid followed by
/// golden-section refinement between the neighbours of the best grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSearch {
    pub log10_min: f64,
    pub log10_max: f64,
    pub grid_points: usize,
    pub refine_iterations: usize,
}

impl Default for LambdaSearch {
    fn default() -> Self {
        Self {
            log10_min: -4.0,
            log10_max: 4.0,
            grid_points: 41,
            refine_iterations: 40,
        }
    }
}

impl LambdaSearch {
    pub fn validate(&self) -> Result<()> {
        if !(self.log10_min.is_finite() && self.log10_max.is_finite())
            || self.log10_min >= self.log10_max
            || self.grid_points < 2
        {
            return Err(Error::InvalidInput(format!(
                "bad lambda grid: 10^[{}, {}] with {} points",
                self.log10_min, self.log10_max, self.grid_points
            )));
        }
        Ok(())
    }

    fn log10_at(&self, k: usize) -> f64 {
        let step = (self.log10_max - self.log10_min) / (self.grid_points - 1) as f64;
        self.log10_min + k as f64 * step
    }

    /// The grid values of lambda, ascending.
    pub fn grid(&self) -> Vec<f64> {
        (0..self.grid_points)
            .map(|k| 10f64.powf(self.log10_at(k)))
            .collect()
    }
}

/// Smoothing parameter picked by [`minimize_gcv_lambda`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaChoice {
    pub lambda: f64,
    pub cost: f64,
}

/// GCV-minimizing lambda with the default search scheme.
pub fn minimize_gcv_lambda(basis: &BasisMatrix, y: &[f64], q: usize) -> Result<LambdaChoice> {
    let sys = PenalizedSystem::new(basis, y, q)?;
    search_lambda(&sys, &LambdaSearch::default())
}

/// Grid search plus golden-section refinement. Ties go to the larger lambda.
pub fn search_lambda(sys: &PenalizedSystem<'_>, search: &LambdaSearch) -> Result<LambdaChoice> {
    search.validate()?;
    let costs: Vec<f64> = search.grid().into_iter().map(|l| sys.gcv(l)).collect();

    let mut best: Option<usize> = None;
    for (k, &cost) in costs.iter().enumerate() {
        match best {
            None if cost.is_finite() => best = Some(k),
            // ascending grid: anything not clearly worse replaces the incumbent
            Some(b) if cost.is_finite() && !sys.improves(costs[b], cost) => best = Some(k),
            _ => {}
        }
    }
    let k = best.ok_or(Error::NoValidLambda)?;
    let mut choice = LambdaChoice {
        lambda: 10f64.powf(search.log10_at(k)),
        cost: costs[k],
    };
    if search.refine_iterations == 0 {
        return Ok(choice);
    }

    let lo = search.log10_at(k.saturating_sub(1));
    let hi = search.log10_at((k + 1).min(search.grid_points - 1));
    let eval = |x: f64| sys.gcv(10f64.powf(x));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    let mut refined = if f2 <= f1 { (x2, f2) } else { (x1, f1) };
    for _ in 0..search.refine_iterations {
        // once the two probes are tied within round-off, further comparisons
        // only follow noise; stopping keeps the result stable under
        // perturbations of y at that level
        if !sys.improves(f1, f2) && !sys.improves(f2, f1) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eval(x1);
            if f1 < refined.1 {
                refined = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eval(x2);
            if f2 <= refined.1 {
                refined = (x2, f2);
            }
        }
    }
    if sys.improves(refined.1, choice.cost) {
        choice = LambdaChoice {
            lambda: 10f64.powf(refined.0),
            cost: refined.1,
        };
    }
    Ok(choice)
}

/// `n - 2 tr(H) + tr(H H^T)`.
pub fn residual_df(h: &DMatrix<f64>) -> Result<f64> {
    if !h.is_square() {
        return Err(Error::InvalidInput(format!(
            "smoother must be square, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let n = h.nrows() as f64;
    Ok(n - 2.0 * h.trace() + h.norm_squared())
}

/// Unbiased error variance `||y - B theta||^2 / df_res`.
pub fn error_variance(y: &[f64], basis: &BasisMatrix, theta: &[f64], df_res: f64) -> Result<f64> {
    if basis.n_rows() != y.len() || basis.n_basis() != theta.len() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let rss = basis
        .mul_vec(theta)
        .iter()
        .zip(y)
        .map(|(f, y)| (y - f).powi(2))
        .sum();
    variance_from_rss(rss, df_res)
}

fn variance_from_rss(rss: f64, df_res: f64) -> Result<f64> {
    if !(df_res > 0.0) {
        return Err(Error::DegenerateVariance(df_res));
    }
    Ok(rss / df_res)
}
