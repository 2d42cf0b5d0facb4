//! Covariance functions and Gram-matrix assembly.
//!
//! The field prior is a separable product of a Matérn kernel over the two
//! spatial coordinates and a unit-variance squared-exponential (RBF) kernel
//! over time. Signal variance is carried by the spatial factor only, so the
//! product is not over-parameterized. On product grids the Gram matrix
//! factors as a Kronecker product `K_t ⊗ K_s`; see [`gram_factored`] and the
//! grid ordering contract below.
//!
//! # Grid ordering contract
//!
//! Product grids are enumerated time-major, then row-major over (y, x):
//! index = `t_idx * (n_y * n_x) + y_idx * n_x + x_idx`. Every consumer of
//! factored Grams or grid-shaped variance fields relies on this ordering;
//! [`product_grid`] is the single source of truth for it.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exec;

/// A space-time index: position in map units, time in time units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimePoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }

    pub fn xy(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    /// Euclidean distance between spatial parts, ignoring time.
    pub fn spatial_distance(&self, other: &Self) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.t.is_finite()
    }
}

/// Hyperparameters of the separable space-time kernel.
///
/// Only half-integer smoothness values 1/2, 3/2, 5/2 are supported; each has
/// a closed-form Matérn expression, so no Bessel-function evaluation is
/// needed. `ell_t` may be `f64::INFINITY`, which pins the temporal factor to
/// exactly 1 (the time-blind ablation used by baseline planners).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    nu: f64,
    ell_s: f64,
    ell_t: f64,
    sigma2: f64,
}

impl KernelParams {
    pub fn new(nu: f64, ell_s: f64, ell_t: f64, sigma2: f64) -> Result<Self> {
        if nu != 0.5 && nu != 1.5 && nu != 2.5 {
            return Err(Error::InvalidParameter(format!(
                "unsupported smoothness nu = {nu}; only 1/2, 3/2, 5/2 have closed forms"
            )));
        }
        if !(ell_s > 0.0) || !ell_s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "spatial lengthscale must be positive and finite, got {ell_s}"
            )));
        }
        if !(ell_t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temporal lengthscale must be positive, got {ell_t}"
            )));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "signal variance must be positive and finite, got {sigma2}"
            )));
        }
        Ok(Self {
            nu,
            ell_s,
            ell_t,
            sigma2,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn ell_s(&self) -> f64 {
        self.ell_s
    }

    pub fn ell_t(&self) -> f64 {
        self.ell_t
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Same spatial kernel with the temporal factor pinned to 1.
    pub fn with_static_time(&self) -> Self {
        Self {
            ell_t: f64::INFINITY,
            ..*self
        }
    }
}

/// Matérn correlation for half-integer smoothness, as a function of r/ℓ.
fn matern_corr(nu: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    if nu == 0.5 {
        (-s).exp()
    } else if nu == 1.5 {
        let a = 3.0_f64.sqrt() * s;
        (1.0 + a) * (-a).exp()
    } else {
        let a = 5.0_f64.sqrt() * s;
        (1.0 + a + a * a / 3.0) * (-a).exp()
    }
}

/// Spatial Matérn covariance between the spatial parts of two points.
///
/// Returns `sigma2 * m_nu(r / ell_s)` with `r` the Euclidean spatial
/// distance; equals `sigma2` at r = 0 and decreases monotonically in r.
pub fn matern(p: &SpaceTimePoint, q: &SpaceTimePoint, params: &KernelParams) -> f64 {
    params.sigma2 * matern_corr(params.nu, p.spatial_distance(q) / params.ell_s)
}

/// Temporal RBF correlation `exp(-(t1 - t2)^2 / (2 ell_t^2))`, in (0, 1].
pub fn rbf(t1: f64, t2: f64, params: &KernelParams) -> f64 {
    let lag = t1 - t2;
    (-(lag * lag) / (2.0 * params.ell_t * params.ell_t)).exp()
}

/// Separable space-time covariance: Matérn over space times RBF over time.
pub fn st_kernel(p: &SpaceTimePoint, q: &SpaceTimePoint, params: &KernelParams) -> f64 {
    matern(p, q, params) * rbf(p.t, q.t, params)
}

/// Dense cross-covariance matrix with entry (i, j) = k(a\[i\], b\[j\]).
pub fn gram(
    points_a: &[SpaceTimePoint],
    points_b: &[SpaceTimePoint],
    params: &KernelParams,
) -> DMatrix<f64> {
    let (na, nb) = (points_a.len(), points_b.len());
    let mut m = DMatrix::zeros(na, nb);
    // DMatrix is column-major; parallelize over column blocks.
    let cols_per_chunk = (exec::DEFAULT_BATCH / na.max(1)).max(1);
    exec::for_each_chunk_mut(m.as_mut_slice(), cols_per_chunk * na, |offset, block| {
        let j0 = offset / na;
        for (jj, col) in block.chunks_mut(na).enumerate() {
            let q = &points_b[j0 + jj];
            for (i, entry) in col.iter_mut().enumerate() {
                *entry = st_kernel(&points_a[i], q, params);
            }
        }
    });
    m
}

/// Kronecker factorization of the Gram matrix on a product grid.
#[derive(Debug, Clone)]
pub struct GramFactorization {
    /// Spatial Matérn Gram over the sites, carrying the signal variance.
    pub spatial_factor: DMatrix<f64>,
    /// Unit-diagonal temporal RBF Gram over the time indices.
    pub temporal_factor: DMatrix<f64>,
}

impl GramFactorization {
    /// Expands `K_t ⊗ K_s` to the dense Gram on the time-major product grid.
    pub fn dense(&self) -> DMatrix<f64> {
        let ns = self.spatial_factor.nrows();
        let nt = self.temporal_factor.nrows();
        let n = ns * nt;
        let mut out = DMatrix::zeros(n, n);
        for it in 0..nt {
            for jt in 0..nt {
                let kt = self.temporal_factor[(it, jt)];
                for is in 0..ns {
                    for js in 0..ns {
                        out[(it * ns + is, jt * ns + js)] = kt * self.spatial_factor[(is, js)];
                    }
                }
            }
        }
        out
    }
}

/// Gram factors over a spatial site list and a time-index list.
///
/// The Kronecker product of the factors equals [`gram`] evaluated on
/// [`product_grid`] of the same inputs.
pub fn gram_factored(
    spatial_sites: &[(f64, f64)],
    time_indices: &[f64],
    params: &KernelParams,
) -> GramFactorization {
    let ns = spatial_sites.len();
    let nt = time_indices.len();
    let mut spatial = DMatrix::zeros(ns, ns);
    for j in 0..ns {
        for i in 0..ns {
            let p = SpaceTimePoint::new(spatial_sites[i].0, spatial_sites[i].1, 0.0);
            let q = SpaceTimePoint::new(spatial_sites[j].0, spatial_sites[j].1, 0.0);
            spatial[(i, j)] = matern(&p, &q, params);
        }
    }
    let mut temporal = DMatrix::zeros(nt, nt);
    for j in 0..nt {
        for i in 0..nt {
            temporal[(i, j)] = rbf(time_indices[i], time_indices[j], params);
        }
    }
    GramFactorization {
        spatial_factor: spatial,
        temporal_factor: temporal,
    }
}

/// Enumerates the product grid in the contract ordering: time-major, then
/// row-major over (y, x). Sites must already be listed row-major when they
/// come from a rectangular grid.
pub fn product_grid(spatial_sites: &[(f64, f64)], time_indices: &[f64]) -> Vec<SpaceTimePoint> {
    let mut pts = Vec::with_capacity(spatial_sites.len() * time_indices.len());
    for &t in time_indices {
        for &(x, y) in spatial_sites {
            pts.push(SpaceTimePoint::new(x, y, t));
        }
    }
    pts
}

/// Row-major (y outer, x inner) site list for a rectangular lattice.
pub fn lattice_sites(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    let mut sites = Vec::with_capacity(xs.len() * ys.len());
    for &y in ys {
        for &x in xs {
            sites.push((x, y));
        }
    }
    sites
}

/// `n` evenly spaced values covering [lo, hi] inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(lo + hi) / 2.0];
    }
    let step = (hi - lo) / (n as f64 - 1.0);
    (0..n).map(|i| lo + step * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(nu: f64, ell_s: f64, ell_t: f64, sigma2: f64) -> KernelParams {
        KernelParams::new(nu, ell_s, ell_t, sigma2).unwrap()
    }

    fn random_points(n: usize, rng: &mut ChaCha8Rng) -> Vec<SpaceTimePoint> {
        (0..n)
            .map(|_| {
                SpaceTimePoint::new(
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                    rng.random_range(0.0..20.0),
                )
            })
            .collect()
    }

    #[test]
    fn rejects_unsupported_nu() {
        assert!(KernelParams::new(2.0, 1.0, 1.0, 1.0).is_err());
        assert!(KernelParams::new(0.5, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn rejects_nonpositive_scales() {
        assert!(KernelParams::new(1.5, 0.0, 1.0, 1.0).is_err());
        assert!(KernelParams::new(1.5, 1.0, -1.0, 1.0).is_err());
        assert!(KernelParams::new(1.5, 1.0, 1.0, 0.0).is_err());
        // Infinite temporal lengthscale is the time-blind ablation.
        assert!(KernelParams::new(1.5, 1.0, f64::INFINITY, 1.0).is_ok());
    }

    #[test]
    fn matern_at_zero_distance_is_sigma2() {
        let p = SpaceTimePoint::new(3.0, -2.0, 7.0);
        for nu in [0.5, 1.5, 2.5] {
            let k = params(nu, 2.0, 1.0, 1.7);
            assert_relative_eq!(matern(&p, &p, &k), 1.7, epsilon = 1e-15);
        }
    }

    #[test]
    fn matern_three_halves_closed_form_at_unit_distance() {
        // (1 + sqrt(3)) * exp(-sqrt(3)), evaluated independently at high
        // precision.
        let k = params(1.5, 1.0, 1.0, 1.0);
        let p = SpaceTimePoint::new(0.0, 0.0, 0.0);
        let q = SpaceTimePoint::new(1.0, 0.0, 0.0);
        assert_relative_eq!(
            matern(&p, &q, &k),
            0.483357724596507650,
            epsilon = 1e-15
        );
    }

    #[test]
    fn matern_symmetric_in_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = params(1.5, 3.0, 1.0, 2.0);
        for _ in 0..100 {
            let pts = random_points(2, &mut rng);
            let a = matern(&pts[0], &pts[1], &k);
            let b = matern(&pts[1], &pts[0], &k);
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn matern_monotone_nonincreasing_in_radius() {
        for nu in [0.5, 1.5, 2.5] {
            let k = params(nu, 2.0, 1.0, 1.0);
            let origin = SpaceTimePoint::new(0.0, 0.0, 0.0);
            let mut prev = f64::INFINITY;
            for i in 0..1000 {
                let r = 0.01 * i as f64;
                let v = matern(&origin, &SpaceTimePoint::new(r, 0.0, 0.0), &k);
                assert!(v <= prev + 1e-15, "nu={nu} r={r}");
                prev = v;
            }
        }
    }

    #[test]
    fn rbf_values() {
        let k = params(1.5, 1.0, 4.0, 3.0);
        assert_relative_eq!(rbf(2.5, 2.5, &k), 1.0, epsilon = 1e-15);
        // |dt| = ell_t -> exp(-1/2); independent evaluation.
        assert_relative_eq!(rbf(0.0, 4.0, &k), 0.6065306597126334, epsilon = 1e-15);
        // |dt| = 10 ell_t -> exp(-50), far below 1e-20.
        assert!(rbf(0.0, 40.0, &k) < 1e-20);
        assert_relative_eq!(rbf(1.0, 6.0, &k), rbf(6.0, 1.0, &k), epsilon = 1e-16);
    }

    #[test]
    fn infinite_ell_t_pins_temporal_factor_to_one() {
        let k = params(1.5, 1.0, f64::INFINITY, 1.0);
        assert_eq!(rbf(0.0, 1e9, &k), 1.0);
        assert_eq!(rbf(3.0, 3.0, &k), 1.0);
    }

    #[test]
    fn st_kernel_is_product_of_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = params(2.5, 2.0, 3.0, 1.3);
        for _ in 0..100 {
            let pts = random_points(2, &mut rng);
            let product = matern(&pts[0], &pts[1], &k) * rbf(pts[0].t, pts[1].t, &k);
            assert!((st_kernel(&pts[0], &pts[1], &k) - product).abs() <= 1e-15);
        }
        let p = pts_eq_times();
        // Equal times: temporal factor is 1, so st_kernel equals matern.
        assert_relative_eq!(
            st_kernel(&p[0], &p[1], &k),
            matern(&p[0], &p[1], &k),
            epsilon = 1e-15
        );
        let same = SpaceTimePoint::new(1.0, 2.0, 3.0);
        assert_relative_eq!(st_kernel(&same, &same, &k), 1.3, epsilon = 1e-15);
    }

    fn pts_eq_times() -> [SpaceTimePoint; 2] {
        [
            SpaceTimePoint::new(0.0, 0.0, 5.0),
            SpaceTimePoint::new(1.5, -0.5, 5.0),
        ]
    }

    #[test]
    fn gram_single_point_is_sigma2() {
        let k = params(1.5, 1.0, 1.0, 2.4);
        let pts = [SpaceTimePoint::new(1.0, 1.0, 1.0)];
        let g = gram(&pts, &pts, &k);
        assert_eq!(g.nrows(), 1);
        assert_relative_eq!(g[(0, 0)], 2.4, epsilon = 1e-15);
    }

    #[test]
    fn gram_cross_blocks_are_transposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let k = params(1.5, 2.0, 2.0, 1.0);
        let a = random_points(7, &mut rng);
        let b = random_points(5, &mut rng);
        let gab = gram(&a, &b, &k);
        let gba = gram(&b, &a, &k);
        for i in 0..7 {
            for j in 0..5 {
                assert!((gab[(i, j)] - gba[(j, i)]).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn gram_is_positive_semidefinite() {
        // Independent check via symmetric eigendecomposition.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let k = params(1.5, 2.0, 3.0, 1.0);
        for n in [10, 30] {
            let pts = random_points(n, &mut rng);
            let g = gram(&pts, &pts, &k);
            let sym = (&g + g.transpose()) * 0.5;
            let eig = sym.symmetric_eigen();
            let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-8, "min eigenvalue {min}");
        }
    }

    #[test]
    fn factored_gram_trivial_grid() {
        let k = params(1.5, 1.0, 1.0, 2.0);
        let f = gram_factored(&[(0.0, 0.0)], &[3.0], &k);
        assert_relative_eq!(f.spatial_factor[(0, 0)], 2.0, epsilon = 1e-15);
        assert_relative_eq!(f.temporal_factor[(0, 0)], 1.0, epsilon = 1e-15);
        assert_relative_eq!(f.dense()[(0, 0)], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn factored_gram_matches_dense_gram() {
        let k = params(1.5, 2.0, 5.0, 1.4);
        let sites = [(0.0, 0.0), (3.0, 1.0), (-2.0, 4.0)];
        let times = [0.0, 2.0, 4.0, 6.0];
        let f = gram_factored(&sites, &times, &k);
        let grid = product_grid(&sites, &times);
        let dense = gram(&grid, &grid, &k);
        let kron = f.dense();
        for i in 0..12 {
            for j in 0..12 {
                assert!((dense[(i, j)] - kron[(i, j)]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn factors_are_symmetric() {
        let k = params(2.5, 2.0, 5.0, 1.0);
        let sites = [(0.0, 0.0), (3.0, 1.0), (-2.0, 4.0), (1.0, 1.0)];
        let times = [0.0, 1.5, 4.0];
        let f = gram_factored(&sites, &times, &k);
        for (m, n) in [(&f.spatial_factor, 4), (&f.temporal_factor, 3)] {
            for i in 0..n {
                for j in 0..n {
                    assert!((m[(i, j)] - m[(j, i)]).abs() <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn higher_smoothness_is_closer_to_rbf_profile() {
        // Coarse ordering check: nu = 5/2 tracks the squared-exponential
        // profile more closely than nu = 1/2 at matched r/ell. The radii
        // skip the neighborhood of s = 2 where exp(-s) happens to cross
        // exp(-s^2/2) and the nu = 1/2 gap passes through zero.
        let origin = SpaceTimePoint::new(0.0, 0.0, 0.0);
        let radii: Vec<f64> = (1..=17)
            .map(|i| 0.1 * i as f64)
            .chain([2.5, 3.0, 3.5])
            .collect();
        for s in radii {
            let rbf_analog = (-(s * s) / 2.0).exp();
            let k12 = params(0.5, 1.0, 1.0, 1.0);
            let k52 = params(2.5, 1.0, 1.0, 1.0);
            let q = SpaceTimePoint::new(s, 0.0, 0.0);
            let d12 = (matern(&origin, &q, &k12) - rbf_analog).abs();
            let d52 = (matern(&origin, &q, &k52) - rbf_analog).abs();
            assert!(d52 < d12, "s = {s}: |m52 - rbf| = {d52} vs |m12 - rbf| = {d12}");
        }
    }

    #[test]
    fn linspace_covers_endpoints() {
        let v = linspace(0.0, 100.0, 21);
        assert_eq!(v.len(), 21);
        assert_relative_eq!(v[0], 0.0);
        assert_relative_eq!(v[20], 100.0);
        assert_relative_eq!(v[1] - v[0], 5.0, epsilon = 1e-12);
    }
}
