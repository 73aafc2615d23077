//! Signal container, synthetic test signals, noise injection and quality metrics.

use crate::error::{Error, Result};

/// Layout of a signal's samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// 1D signal of `n` samples on a uniform grid.
    Length(usize),
    /// 2D grayscale image, row-major.
    Grid { rows: usize, cols: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Length(n) => n,
            Shape::Grid { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A graph signal: real intensities (nominal range [0,1]) plus shape metadata.
///
/// Invariants enforced at construction: the value count matches the shape
/// and every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vec<f64>,
    shape: Shape,
}

impl Signal {
    pub fn new(values: Vec<f64>, shape: Shape) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values do not fill shape {:?}",
                values.len(),
                shape
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Signal { values, shape })
    }

    /// 1D signal from raw samples.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Signal::new(values, Shape::Length(n))
    }

    /// Constant signal over `shape`.
    pub fn constant(shape: Shape, value: f64) -> Self {
        Signal {
            values: vec![value; shape.len()],
            shape,
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Rebuild a signal with the same shape from raw samples.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Signal::new(values, self.shape)
    }
}

/// Additive i.i.d. Gaussian noise, fully determined by (std_dev, seed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub std_dev: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(std_dev: f64, seed: u64) -> Result<Self> {
        if !(std_dev >= 0.0) || !std_dev.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise std_dev must be finite and >= 0, got {std_dev}"
            )));
        }
        Ok(NoiseSpec { std_dev, seed })
    }
}

/// Breakpoints of the default 1D test signal: (position fraction, level).
///
/// Piecewise linear with five steep ascents/descents (width 0.006 of the
/// domain) separated by long, gently sloped plateaus, all levels inside
/// [0,1]. Pinned here so experiment outputs are reproducible across runs.
pub const DEFAULT_BREAKPOINTS: [(f64, f64); 12] = [
    (0.000, 0.30),
    (0.090, 0.30),
    (0.096, 0.65),
    (0.220, 0.63),
    (0.226, 0.30),
    (0.370, 0.32),
    (0.376, 0.70),
    (0.520, 0.72),
    (0.526, 0.35),
    (0.700, 0.33),
    (0.706, 0.68),
    (1.000, 0.66),
];

/// Samples the piecewise-linear interpolant of `breakpoints` on a uniform
/// grid of `n` points over [0,1].
///
/// Positions must be strictly increasing, starting at 0 and ending at 1.
pub fn make_piecewise_linear(n: usize, breakpoints: &[(f64, f64)]) -> Result<Signal> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    if breakpoints.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 breakpoints".into(),
        ));
    }
    let first = breakpoints[0].0;
    let last = breakpoints[breakpoints.len() - 1].0;
    if first != 0.0 || last != 1.0 {
        return Err(Error::InvalidArgument(format!(
            "breakpoint positions must span [0,1], got [{first},{last}]"
        )));
    }
    for w in breakpoints.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::InvalidArgument(format!(
                "breakpoint positions must be strictly increasing ({} then {})",
                w[0].0, w[1].0
            )));
        }
    }

    let mut values = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        while seg + 2 < breakpoints.len() && t > breakpoints[seg + 1].0 {
            seg += 1;
        }
        let (t0, y0) = breakpoints[seg];
        let (t1, y1) = breakpoints[seg + 1];
        let u = (t - t0) / (t1 - t0);
        values.push(y0 + u * (y1 - y0));
    }
    Signal::new(values, Shape::Length(n))
}

/// The pinned test signal used by the experiment harness.
pub fn default_test_signal(n: usize) -> Result<Signal> {
    make_piecewise_linear(n, &DEFAULT_BREAKPOINTS)
}

/// Synthetic grayscale test image: flat regions separated by sharp edges
/// (rectangle, disk and stripe over a uniform background), pinned so the
/// 2D experiments are self-contained.
pub fn make_test_image(rows: usize, cols: usize) -> Result<Signal> {
    if rows < 8 || cols < 8 {
        return Err(Error::InvalidArgument(format!(
            "test image needs at least 8x8 pixels, got {rows}x{cols}"
        )));
    }
    let mut values = vec![0.25; rows * cols];
    let (r0, r1) = (rows * 12 / 100, rows / 2);
    let (c0, c1) = (cols * 12 / 100, cols * 62 / 100);
    for r in r0..r1 {
        for c in c0..c1 {
            values[r * cols + c] = 0.75;
        }
    }
    let center_r = rows as f64 * 0.70;
    let center_c = cols as f64 * 0.30;
    let radius = rows.min(cols) as f64 * 0.18;
    for r in 0..rows {
        for c in 0..cols {
            let dr = r as f64 - center_r;
            let dc = c as f64 - center_c;
            if dr * dr + dc * dc <= radius * radius {
                values[r * cols + c] = 0.9;
            }
        }
    }
    let (s0, s1) = (cols * 75 / 100, cols * 88 / 100);
    for r in 0..rows {
        for c in s0..s1 {
            values[r * cols + c] = 0.1;
        }
    }
    Signal::new(values, Shape::Grid { rows, cols })
}

/// SplitMix64 counter-based uniform stream (Steele, Lea & Flood constants).
///
/// Chosen over a general-purpose RNG so the exact noise vectors are
/// reproducible from the documented algorithm alone: the k-th output is a
/// pure function of (seed, k).
struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in (0, 1]: (bits >> 11) + 1 scaled by 2^-53.
    fn next_unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Returns `x + eta` where `eta` is zero-mean Gaussian with standard
/// deviation `spec.std_dev`.
///
/// Sampling is Box-Muller over the SplitMix64 stream seeded by `spec.seed`:
/// samples 2m and 2m+1 come from the (2m)-th and (2m+1)-th uniforms as
/// `r*cos(2*pi*u2)` and `r*sin(2*pi*u2)` with `r = sqrt(-2*ln(u1))`.
/// Identical (std_dev, seed) reproduce the identical vector bit-for-bit.
pub fn add_gaussian_noise(x: &Signal, spec: &NoiseSpec) -> Signal {
    let mut rng = SplitMix64::new(spec.seed);
    let n = x.len();
    let mut values = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let u1 = rng.next_unit();
        let u2 = rng.next_unit();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        values.push(x.values[i] + spec.std_dev * r * theta.cos());
        if i + 1 < n {
            values.push(x.values[i + 1] + spec.std_dev * r * theta.sin());
        }
        i += 2;
    }
    Signal {
        values,
        shape: x.shape,
    }
}

fn mean_squared_error(reference: &Signal, test: &Signal) -> Result<f64> {
    if reference.shape != test.shape {
        return Err(Error::ShapeMismatch {
            expected: reference.shape,
            actual: test.shape,
        });
    }
    let n = reference.len() as f64;
    let sum: f64 = reference
        .values
        .iter()
        .zip(&test.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / n)
}

/// Peak signal-to-noise ratio in decibels: `10*log10(peak^2 / MSE)`.
///
/// Returns `f64::INFINITY` when the signals are identical (MSE = 0).
pub fn psnr(reference: &Signal, test: &Signal, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "peak must be > 0, got {peak}"
        )));
    }
    let mse = mean_squared_error(reference, test)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Root mean squared difference.
pub fn rmse(reference: &Signal, test: &Signal) -> Result<f64> {
    Ok(mean_squared_error(reference, test)?.sqrt())
}
