//! Exact Gaussian-process regression on spatiotemporal observations.
//!
//! [`GpModel::fit`] factors `K(X,X) + sigma_n^2 I` once; predictions reuse
//! the cached Cholesky factor. [`QueryBasis`] and [`ExtendedPosterior`]
//! support the planner's inner loop: marginal variances at a fixed query set
//! under hypothetical extra observations, computed by appending rows to the
//! cached factor instead of refitting. The appended-row path is algebraically
//! identical to a fresh fit with the extended training set, so variances are
//! exact, and `var_new = var_old - e^2` makes per-point information gains
//! nonnegative by construction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec;
use crate::kernels::{gram, product_grid, st_kernel, KernelParams, SpaceTimePoint};

/// Relative diagonal jitter added to Gram matrices before factorization.
///
/// Kept small enough that a noiseless observation still interpolates to
/// variance below 1e-10 at its own site.
pub const GRAM_JITTER_REL: f64 = 1e-12;

/// Floor applied to variances before taking logarithms.
pub(crate) const VAR_LOG_FLOOR_REL: f64 = 1e-15;

/// One scalar field reading at a space-time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub point: SpaceTimePoint,
    pub value: f64,
}

impl Observation {
    pub fn new(point: SpaceTimePoint, value: f64) -> Self {
        Self { point, value }
    }
}

/// Posterior mean and marginal variance at one query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub var: f64,
}

/// Immutable fitted GP posterior.
///
/// An empty observation list yields a prior-only model: zero mean and
/// `sigma2` variance everywhere.
#[derive(Debug, Clone)]
pub struct GpModel {
    train_points: Vec<SpaceTimePoint>,
    train_values: Vec<f64>,
    params: KernelParams,
    noise_var: f64,
    /// Lower Cholesky factor of K(X,X) + (noise_var + jitter) I; None when
    /// the training set is empty.
    chol: Option<DMatrix<f64>>,
    alpha: DVector<f64>,
}

impl GpModel {
    pub fn fit(
        observations: &[Observation],
        params: KernelParams,
        noise_var: f64,
    ) -> Result<Self> {
        if !(noise_var >= 0.0) || !noise_var.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be finite and nonnegative, got {noise_var}"
            )));
        }
        for obs in observations {
            if !obs.point.is_finite() || !obs.value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite observation at ({}, {}, {})",
                    obs.point.x, obs.point.y, obs.point.t
                )));
            }
        }
        let n = observations.len();
        let train_points: Vec<_> = observations.iter().map(|o| o.point).collect();
        let train_values: Vec<_> = observations.iter().map(|o| o.value).collect();
        if n == 0 {
            return Ok(Self {
                train_points,
                train_values,
                params,
                noise_var,
                chol: None,
                alpha: DVector::zeros(0),
            });
        }
        let mut k = gram(&train_points, &train_points, &params);
        let ridge = noise_var + GRAM_JITTER_REL * params.sigma2();
        for i in 0..n {
            k[(i, i)] += ridge;
        }
        let chol = nalgebra::Cholesky::new(k).ok_or_else(|| Error::Factorization {
            matrix: "K(X,X) + sigma_n^2 I".to_string(),
        })?;
        let y = DVector::from_column_slice(&train_values);
        let alpha = chol.solve(&y);
        Ok(Self {
            train_points,
            train_values,
            params,
            noise_var,
            chol: Some(chol.unpack()),
            alpha,
        })
    }

    pub fn train_points(&self) -> &[SpaceTimePoint] {
        &self.train_points
    }

    pub fn train_values(&self) -> &[f64] {
        &self.train_values
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn len(&self) -> usize {
        self.train_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_points.is_empty()
    }

    /// Lower Cholesky factor of the regularized training Gram, if any.
    pub fn chol_factor(&self) -> Option<&DMatrix<f64>> {
        self.chol.as_ref()
    }

    /// Diagonal ridge applied to the training Gram before factorization.
    pub fn ridge(&self) -> f64 {
        self.noise_var + GRAM_JITTER_REL * self.params.sigma2()
    }

    /// Posterior mean and marginal variance at each query point.
    ///
    /// Variances depend only on observation locations, never on values.
    pub fn predict(&self, queries: &[SpaceTimePoint]) -> Vec<Prediction> {
        self.predict_in_batches(queries, exec::DEFAULT_BATCH)
    }

    /// As [`predict`](Self::predict) with an explicit query block size.
    pub fn predict_in_batches(
        &self,
        queries: &[SpaceTimePoint],
        batch: usize,
    ) -> Vec<Prediction> {
        let sigma2 = self.params.sigma2();
        let Some(l) = self.chol.as_ref() else {
            return queries
                .iter()
                .map(|_| Prediction {
                    mean: 0.0,
                    var: sigma2,
                })
                .collect();
        };
        let n = self.train_points.len();
        let chunks = exec::map_chunks(queries, batch, |_, block| {
            let c = block.len();
            let mut kx = DMatrix::zeros(n, c);
            for (j, q) in block.iter().enumerate() {
                for i in 0..n {
                    kx[(i, j)] = st_kernel(&self.train_points[i], q, &self.params);
                }
            }
            let mean = kx.transpose() * &self.alpha;
            let v = l
                .solve_lower_triangular(&kx)
                .expect("cholesky factor has positive diagonal");
            let mut out = Vec::with_capacity(c);
            for j in 0..c {
                let col = v.column(j);
                let var = (sigma2 - col.dot(&col)).max(0.0);
                out.push(Prediction { mean: mean[j], var });
            }
            out
        });
        chunks.into_iter().flatten().collect()
    }

    /// Marginal variance over the product grid, in the grid ordering
    /// contract (time-major, then row-major over (y, x)).
    pub fn predict_var_grid(
        &self,
        spatial_sites: &[(f64, f64)],
        time_indices: &[f64],
    ) -> Vec<f64> {
        let grid = product_grid(spatial_sites, time_indices);
        self.predict(&grid).into_iter().map(|p| p.var).collect()
    }

    /// Precomputes the solve of the cross-covariance against a fixed query
    /// set, shared by all hypothetical extensions of this model.
    pub fn query_basis(&self, queries: Vec<SpaceTimePoint>) -> QueryBasis {
        let sigma2 = self.params.sigma2();
        let n = self.train_points.len();
        let m = queries.len();
        let mut w = DMatrix::zeros(n, m);
        let mut base_var = vec![sigma2; m];
        if let Some(l) = self.chol.as_ref() {
            let cols_per_chunk = (exec::DEFAULT_BATCH / n.max(1)).max(1);
            exec::for_each_chunk_mut(w.as_mut_slice(), cols_per_chunk * n, |offset, block| {
                let j0 = offset / n;
                for (jj, col) in block.chunks_mut(n).enumerate() {
                    let q = &queries[j0 + jj];
                    for (i, entry) in col.iter_mut().enumerate() {
                        *entry = st_kernel(&self.train_points[i], q, &self.params);
                    }
                    solve_lower_in_place(l, col);
                }
            });
            for (j, bv) in base_var.iter_mut().enumerate() {
                let col = w.column(j);
                *bv = (sigma2 - col.dot(&col)).max(0.0);
            }
        }
        QueryBasis {
            queries,
            w,
            base_var,
        }
    }
}

/// Forward-substitution solve `L x = b` in place on a slice.
fn solve_lower_in_place(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = b.len();
    for i in 0..n {
        let mut s = b[i];
        for j in 0..i {
            s -= l[(i, j)] * b[j];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Cached cross-covariance solves for one (model, query set) pair.
#[derive(Debug)]
pub struct QueryBasis {
    queries: Vec<SpaceTimePoint>,
    /// n x m matrix `L^{-1} K(X, Q)`.
    w: DMatrix<f64>,
    /// Marginal variance at each query under the unextended model.
    base_var: Vec<f64>,
}

impl QueryBasis {
    pub fn queries(&self) -> &[SpaceTimePoint] {
        &self.queries
    }

    pub fn base_var(&self) -> &[f64] {
        &self.base_var
    }
}

struct AppendedRow {
    /// Off-diagonal coefficients: n entries against the training factor,
    /// then one per previously appended row.
    head: Vec<f64>,
    /// Diagonal entry of the extended Cholesky factor.
    diag: f64,
    /// Query-side factor row: `e(q)` for each query.
    e: Vec<f64>,
}

/// Candidate evaluation produced by [`ExtendedPosterior::peek`].
pub struct Extension {
    row: AppendedRow,
    /// Information gain in nats relative to the posterior before appending.
    pub gain: f64,
    /// Marginal variances after appending.
    pub var: Vec<f64>,
}

/// Exact posterior variances at a fixed query set under the base model plus
/// a chain of appended hypothetical observations.
pub struct ExtendedPosterior<'a> {
    model: &'a GpModel,
    basis: &'a QueryBasis,
    rows: Vec<AppendedRow>,
    points: Vec<SpaceTimePoint>,
    var: Vec<f64>,
}

impl<'a> ExtendedPosterior<'a> {
    pub fn new(model: &'a GpModel, basis: &'a QueryBasis) -> Self {
        Self {
            model,
            basis,
            rows: Vec::new(),
            points: Vec::new(),
            var: basis.base_var.clone(),
        }
    }

    /// Current marginal variances at the basis queries.
    pub fn var(&self) -> &[f64] {
        &self.var
    }

    pub fn mean_var(&self) -> f64 {
        if self.var.is_empty() {
            return 0.0;
        }
        exec::sum_chunked(&self.var, exec::DEFAULT_BATCH) / self.var.len() as f64
    }

    /// Evaluates appending `z` without committing it.
    pub fn peek(&self, z: &SpaceTimePoint) -> Extension {
        let params = self.model.params();
        let sigma2 = params.sigma2();
        let n = self.model.len();
        // Forward-solve the extended factor against the covariance of z with
        // the training set and previously appended points.
        let mut head = Vec::with_capacity(n + self.rows.len());
        let mut kxz = vec![0.0; n];
        for (i, p) in self.model.train_points().iter().enumerate() {
            kxz[i] = st_kernel(p, z, params);
        }
        if let Some(l) = self.model.chol_factor() {
            solve_lower_in_place(l, &mut kxz);
        }
        head.extend_from_slice(&kxz);
        for (i, row) in self.rows.iter().enumerate() {
            let mut s = st_kernel(&self.points[i], z, params);
            for (j, &h) in row.head.iter().enumerate() {
                s -= h * head[j];
            }
            head.push(s / row.diag);
        }
        // Schur complement of the extended system; the ridge is an exact
        // lower bound, which guards the cancellation near duplicate points.
        let ridge = self.model.ridge();
        let mut d2 = sigma2 + ridge;
        for &h in &head {
            d2 -= h * h;
        }
        let diag = d2.max(ridge).sqrt();

        let floor = VAR_LOG_FLOOR_REL * sigma2;
        let m = self.basis.queries.len();
        let parts = exec::map_chunks(&self.basis.queries[..], exec::DEFAULT_BATCH, |off, qs| {
            let mut e_chunk = Vec::with_capacity(qs.len());
            let mut var_chunk = Vec::with_capacity(qs.len());
            let mut gain = 0.0;
            for (jj, q) in qs.iter().enumerate() {
                let j = off + jj;
                let mut num = st_kernel(z, q, params);
                let wcol = self.basis.w.column(j);
                for i in 0..n {
                    num -= head[i] * wcol[i];
                }
                for (i, row) in self.rows.iter().enumerate() {
                    num -= head[n + i] * row.e[j];
                }
                let e = num / diag;
                let old = self.var[j];
                let new = (old - e * e).max(0.0);
                gain += 0.5 * (old.max(floor).ln() - new.max(floor).ln());
                e_chunk.push(e);
                var_chunk.push(new);
            }
            (e_chunk, var_chunk, gain)
        });
        let mut e = Vec::with_capacity(m);
        let mut var = Vec::with_capacity(m);
        let mut gain = 0.0;
        for (e_chunk, var_chunk, g) in parts {
            e.extend(e_chunk);
            var.extend(var_chunk);
            gain += g;
        }
        Extension {
            row: AppendedRow { head, diag, e },
            gain,
            var,
        }
    }

    /// Commits a previously peeked extension.
    pub fn push_extension(&mut self, z: SpaceTimePoint, ext: Extension) {
        self.var = ext.var;
        self.rows.push(ext.row);
        self.points.push(z);
    }

    /// Appends `z`, returning the information gain it contributed.
    pub fn push(&mut self, z: SpaceTimePoint) -> f64 {
        let ext = self.peek(&z);
        let gain = ext.gain;
        self.push_extension(z, ext);
        gain
    }
}
