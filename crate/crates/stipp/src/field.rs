//! Discretized dynamic scalar fields and the point-sensor model.
//!
//! A [`FieldSeries`] is the ground truth a mission samples from: a stack of
//! equally spaced time frames over one spatial extent. Cells holding NaN are
//! masked (no data); sampling them is an error and evaluation skips them.

use rand::RngCore;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::gp::Observation;
use crate::kernels::SpaceTimePoint;

/// Axis-aligned spatial workspace rectangle, in map units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn square(side: f64) -> Self {
        Self::new(0.0, side, 0.0, side)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn min_dimension(&self) -> f64 {
        self.width().min(self.height())
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min - 1e-9
            && x <= self.x_max + 1e-9
            && y >= self.y_min - 1e-9
            && y <= self.y_max + 1e-9
    }
}

/// One time slice of the field on an `n_y x n_x` node-registered grid.
///
/// Grid nodes span the extent inclusively: node (ix, iy) sits at
/// `(x_min + ix * dx, y_min + iy * dy)` with `dx = width / (n_x - 1)`.
/// Values are stored row-major (y outer, x inner); NaN marks masked cells.
#[derive(Debug, Clone)]
pub struct FieldFrame {
    values: Vec<f64>,
    n_x: usize,
    n_y: usize,
    extent: Bounds,
    time: f64,
}

impl FieldFrame {
    pub fn new(values: Vec<f64>, n_x: usize, n_y: usize, extent: Bounds, time: f64) -> Self {
        assert_eq!(values.len(), n_x * n_y, "frame shape mismatch");
        Self {
            values,
            n_x,
            n_y,
            extent,
            time,
        }
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn extent(&self) -> &Bounds {
        &self.extent
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.n_x + ix]
    }

    pub fn is_masked(&self, ix: usize, iy: usize) -> bool {
        self.get(ix, iy).is_nan()
    }

    /// Bilinear interpolation at (x, y); masked corner cells are an error.
    pub fn interpolate(&self, x: f64, y: f64) -> Result<f64> {
        if !self.extent.contains(x, y) {
            return Err(Error::OutOfBounds { x, y, t: self.time });
        }
        let fx = grid_coord(x, self.extent.x_min, self.extent.x_max, self.n_x);
        let fy = grid_coord(y, self.extent.y_min, self.extent.y_max, self.n_y);
        let (i0, fu) = split_coord(fx, self.n_x);
        let (j0, fv) = split_coord(fy, self.n_y);
        let i1 = (i0 + 1).min(self.n_x - 1);
        let j1 = (j0 + 1).min(self.n_y - 1);
        let c00 = self.get(i0, j0);
        let c10 = self.get(i1, j0);
        let c01 = self.get(i0, j1);
        let c11 = self.get(i1, j1);
        // Only corners with nonzero weight participate in the mask check, so
        // a query exactly on an unmasked node next to a masked one succeeds.
        let w = [
            (c00, (1.0 - fu) * (1.0 - fv)),
            (c10, fu * (1.0 - fv)),
            (c01, (1.0 - fu) * fv),
            (c11, fu * fv),
        ];
        let mut acc = 0.0;
        for (c, weight) in w {
            if weight == 0.0 {
                continue;
            }
            if c.is_nan() {
                return Err(Error::MaskedCell { x, y });
            }
            acc += c * weight;
        }
        Ok(acc)
    }
}

/// Fractional grid coordinate of `x` along an inclusive node-registered axis.
fn grid_coord(x: f64, lo: f64, hi: f64, n: usize) -> f64 {
    if n <= 1 || hi <= lo {
        return 0.0;
    }
    ((x - lo) / (hi - lo) * (n as f64 - 1.0)).clamp(0.0, n as f64 - 1.0)
}

fn split_coord(f: f64, n: usize) -> (usize, f64) {
    let i = (f.floor() as usize).min(n.saturating_sub(2));
    (i, f - i as f64)
}

/// Time-ordered stack of frames with constant spacing.
#[derive(Debug, Clone)]
pub struct FieldSeries {
    frames: Vec<FieldFrame>,
    dt: f64,
}

impl FieldSeries {
    pub fn new(frames: Vec<FieldFrame>, dt: f64) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::EmptyInput("field series needs at least one frame"));
        }
        for w in frames.windows(2) {
            let spacing = w[1].time - w[0].time;
            if spacing <= 0.0 {
                return Err(Error::NonMonotoneTime {
                    line: 0,
                    time: w[1].time,
                });
            }
            if (spacing - dt).abs() > 1e-9 * dt.abs().max(1.0) {
                return Err(Error::InconsistentFrame {
                    line: 0,
                    msg: format!("frame spacing {spacing} != dt {dt}"),
                });
            }
            if w[1].n_x() != w[0].n_x() || w[1].n_y() != w[0].n_y() {
                return Err(Error::InconsistentFrame {
                    line: 0,
                    msg: "frame shapes differ".to_string(),
                });
            }
        }
        Ok(Self { frames, dt })
    }

    pub fn frames(&self) -> &[FieldFrame] {
        &self.frames
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn extent(&self) -> &Bounds {
        self.frames[0].extent()
    }

    pub fn time_range(&self) -> (f64, f64) {
        (
            self.frames[0].time(),
            self.frames[self.frames.len() - 1].time(),
        )
    }

    /// Frame whose time is nearest to `t`; `t` must lie inside the series
    /// time range (with half-a-frame slack at the ends).
    pub fn nearest_frame(&self, t: f64) -> Result<&FieldFrame> {
        let (t0, t1) = self.time_range();
        if t < t0 - 0.5 * self.dt - 1e-9 || t > t1 + 0.5 * self.dt + 1e-9 {
            return Err(Error::OutOfBounds {
                x: f64::NAN,
                y: f64::NAN,
                t,
            });
        }
        let idx = (((t - t0) / self.dt).round() as isize)
            .clamp(0, self.frames.len() as isize - 1) as usize;
        Ok(&self.frames[idx])
    }

    /// Noise-free field value at a space-time point (bilinear in space,
    /// nearest frame in time).
    pub fn value_at(&self, p: &SpaceTimePoint) -> Result<f64> {
        self.nearest_frame(p.t)?.interpolate(p.x, p.y)
    }

    /// Mean/std over all unmasked cells of all frames, and the series
    /// rescaled to zero mean and unit variance.
    pub fn standardize(&self) -> (FieldSeries, Standardizer) {
        let mut n = 0usize;
        let mut mean = 0.0;
        for f in &self.frames {
            for &v in f.values() {
                if !v.is_nan() {
                    n += 1;
                    mean += v;
                }
            }
        }
        mean /= n.max(1) as f64;
        let mut var = 0.0;
        for f in &self.frames {
            for &v in f.values() {
                if !v.is_nan() {
                    var += (v - mean) * (v - mean);
                }
            }
        }
        var /= n.max(1) as f64;
        let std = if var > 0.0 { var.sqrt() } else { 1.0 };
        let scaler = Standardizer { mean, std };
        let frames = self
            .frames
            .iter()
            .map(|f| {
                let values = f
                    .values()
                    .iter()
                    .map(|&v| if v.is_nan() { v } else { scaler.apply(v) })
                    .collect();
                FieldFrame::new(values, f.n_x(), f.n_y(), *f.extent(), f.time())
            })
            .collect();
        (
            FieldSeries {
                frames,
                dt: self.dt,
            },
            scaler,
        )
    }
}

/// Affine rescaling `z = (v - mean) / std` with its inverse.
#[derive(Debug, Clone, Copy)]
pub struct Standardizer {
    pub mean: f64,
    pub std: f64,
}

impl Standardizer {
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Additive zero-mean Gaussian measurement noise.
#[derive(Debug, Clone, Copy)]
pub struct SensorModel {
    pub noise_var: f64,
}

impl SensorModel {
    pub fn new(noise_var: f64) -> Result<Self> {
        if !(noise_var >= 0.0) || !noise_var.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sensor noise variance must be finite and nonnegative, got {noise_var}"
            )));
        }
        Ok(Self { noise_var })
    }
}

/// Queries the ground-truth field at a point, adding sensor noise.
pub fn sample(
    series: &FieldSeries,
    p: &SpaceTimePoint,
    sensor: &SensorModel,
    rng: &mut dyn RngCore,
) -> Result<Observation> {
    let truth = series.value_at(p)?;
    let value = if sensor.noise_var > 0.0 {
        let normal = Normal::new(0.0, sensor.noise_var.sqrt()).expect("finite std");
        truth + normal.sample(&mut *rng)
    } else {
        truth
    };
    Ok(Observation::new(*p, value))
}

/// Anything a mission can draw point measurements from.
pub trait Environment {
    fn sample_at(&self, p: &SpaceTimePoint, rng: &mut dyn RngCore) -> Result<f64>;
}

/// A field series observed through a noisy point sensor.
pub struct SampledField<'a> {
    pub series: &'a FieldSeries,
    pub sensor: SensorModel,
}

impl Environment for SampledField<'_> {
    fn sample_at(&self, p: &SpaceTimePoint, rng: &mut dyn RngCore) -> Result<f64> {
        sample(self.series, p, &self.sensor, rng).map(|o| o.value)
    }
}
