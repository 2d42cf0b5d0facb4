//! Information-theoretic utility over the map posterior.
//!
//! Mutual information is approximated by summing per-point log reductions of
//! marginal variance at the query (inducing) points, so no full covariance
//! matrix is maintained or inverted. The exact log-determinant form is kept
//! as a test oracle; the two coincide on diagonal covariances. Gains are in
//! nats.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gp::{ExtendedPosterior, GpModel, Observation, QueryBasis, VAR_LOG_FLOOR_REL};
use crate::kernels::{KernelParams, SpaceTimePoint};

/// Differential entropy of independent Gaussian marginals, in nats:
/// `sum_i 1/2 log(2 pi e v_i)`.
pub fn differential_entropy(variances: &[f64]) -> Result<f64> {
    let mut h = 0.0;
    for (i, &v) in variances.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::NonPositiveVariance { index: i, value: v });
        }
        h += 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * v).ln();
    }
    Ok(h)
}

/// Marginal-variance information gain:
/// `sum_i 1/2 [log(prior_i) - log(post_i)]`.
pub fn info_gain_marginal(prior_var: &[f64], post_var: &[f64]) -> Result<f64> {
    if prior_var.len() != post_var.len() {
        return Err(Error::LengthMismatch {
            expected: prior_var.len(),
            got: post_var.len(),
        });
    }
    let mut gain = 0.0;
    for (i, (&p, &q)) in prior_var.iter().zip(post_var).enumerate() {
        if !(p > 0.0) {
            return Err(Error::NonPositiveVariance { index: i, value: p });
        }
        if !(q > 0.0) {
            return Err(Error::NonPositiveVariance { index: i, value: q });
        }
        gain += 0.5 * (p.ln() - q.ln());
    }
    Ok(gain)
}

/// Exact mutual information `1/2 [logdet(prior) - logdet(post)]`.
///
/// Used as an oracle against [`info_gain_marginal`]; both matrices must be
/// symmetric positive definite.
pub fn info_gain_exact(prior_cov: &DMatrix<f64>, post_cov: &DMatrix<f64>) -> Result<f64> {
    if prior_cov.shape() != post_cov.shape() {
        return Err(Error::LengthMismatch {
            expected: prior_cov.nrows(),
            got: post_cov.nrows(),
        });
    }
    let logdet = |m: &DMatrix<f64>, name: &str| -> Result<f64> {
        let chol = nalgebra::Cholesky::new(m.clone()).ok_or_else(|| Error::Factorization {
            matrix: name.to_string(),
        })?;
        let l = chol.l();
        Ok(2.0 * (0..m.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
    };
    Ok(0.5 * (logdet(prior_cov, "prior covariance")? - logdet(post_cov, "posterior covariance")?))
}

/// The map estimate a planning phase works against: committed observation
/// sites, the fixed query (inducing) grid, and the marginal variances there.
///
/// Immutable during planning; hypothetical proposals are evaluated against
/// it without mutation, so sibling candidates can run concurrently.
pub struct MapState {
    model: GpModel,
    basis: Arc<QueryBasis>,
    var: Vec<f64>,
}

impl MapState {
    /// Fits the location-only model and caches the query-side solves.
    /// Observation values never enter variance computations.
    pub fn new(
        train_points: &[SpaceTimePoint],
        query_points: Vec<SpaceTimePoint>,
        params: KernelParams,
        noise_var: f64,
    ) -> Result<Self> {
        let obs: Vec<Observation> = train_points
            .iter()
            .map(|p| Observation::new(*p, 0.0))
            .collect();
        let model = GpModel::fit(&obs, params, noise_var)?;
        let basis = Arc::new(model.query_basis(query_points));
        let floor = VAR_LOG_FLOOR_REL * params.sigma2();
        let var = basis.base_var().iter().map(|v| v.max(floor)).collect();
        Ok(Self { model, basis, var })
    }

    pub fn train_points(&self) -> &[SpaceTimePoint] {
        self.model.train_points()
    }

    pub fn query_points(&self) -> &[SpaceTimePoint] {
        self.basis.queries()
    }

    /// Marginal variances at the query points given the committed sites.
    pub fn var(&self) -> &[f64] {
        &self.var
    }

    pub fn params(&self) -> &KernelParams {
        self.model.params()
    }

    pub fn noise_var(&self) -> f64 {
        self.model.noise_var()
    }

    /// Posterior extension rooted at this state, for chained what-if
    /// evaluations (e.g. variance along a candidate path).
    pub fn extended(&self) -> ExtendedPosterior<'_> {
        ExtendedPosterior::new(&self.model, &self.basis)
    }

    pub fn mean_var(&self) -> f64 {
        if self.var.is_empty() {
            0.0
        } else {
            self.var.iter().sum::<f64>() / self.var.len() as f64
        }
    }
}

/// Information gain of observing at `proposed`, with the updated marginal
/// variances at the map's query points.
///
/// Accumulation starts from `near_info` when present (a parent node's
/// accumulated information), else from zero. The hypothetical training set
/// is the map's committed sites plus `proposed`; variances are recomputed
/// exactly and the summed per-point log reduction is added to the seed.
pub fn proposal_information(
    map: &MapState,
    proposed: &SpaceTimePoint,
    near_info: Option<f64>,
) -> (f64, Vec<f64>) {
    let ext = map.extended().peek(proposed);
    (near_info.unwrap_or(0.0) + ext.gain, ext.var)
}
