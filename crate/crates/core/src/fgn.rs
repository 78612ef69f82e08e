//! Fractional Gaussian noise: the autocovariance kernel and an exact
//! circulant-embedding (Davis–Harte) generator.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::rng;

/// Time scale `c` and memory parameter `d` of the log-intensity kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSpec {
    c: f64,
    d: f64,
}

impl GammaSpec {
    pub fn new(c: f64, d: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
        }
        if !(0.0..0.5).contains(&d) {
            return Err(Error::InvalidParameter(format!("d must lie in [0, 0.5), got {d}")));
        }
        Ok(Self { c, d })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn hurst(&self) -> f64 {
        self.d + 0.5
    }

    /// Points where the kernel is not smooth: 0 and ±1/c.
    pub(crate) fn kinks(&self) -> [f64; 3] {
        let k = 1.0 / self.c;
        [0.0, k, -k]
    }
}

/// Autocovariance of unit-variance fGn at lag `r` (in days).
pub fn gamma_z(spec: &GammaSpec, r: f64) -> f64 {
    let x = (spec.c * r).abs();
    if spec.d == 0.0 {
        return (1.0 - x).max(0.0);
    }
    let a = 2.0 * spec.hurst();
    if x <= 10.0 {
        let v = 0.5 * ((x + 1.0).powf(a) - 2.0 * x.powf(a) + (x - 1.0).abs().powf(a));
        return v.max(0.0);
    }
    // Second difference of x^a loses all digits for large x; expand
    // (1+y)^a + (1-y)^a - 2 = 2 * sum_k C(a, 2k) y^(2k) with y = 1/x instead.
    let y2 = 1.0 / (x * x);
    let mut coef = a * (a - 1.0) / 2.0;
    let mut yp = y2;
    let mut sum = coef * yp;
    let mut k = 1.0;
    loop {
        let j = 2.0 * k;
        coef *= (a - j) * (a - j - 1.0) / ((j + 1.0) * (j + 2.0));
        yp *= y2;
        let term = coef * yp;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    (x.powf(a) * sum).max(0.0)
}

/// Regular grid on which fGn is sampled: `n` points spaced `step` apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgnGrid {
    n: usize,
    step: f64,
}

impl FgnGrid {
    pub fn new(n: usize, step: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two >= 2, got {n}"
            )));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid step must be positive, got {step}"
            )));
        }
        Ok(Self { n, step })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.step
    }
}

/// Precomputed circulant embedding for one (spec, grid) pair. Sampling
/// reuses the eigenvalues and FFT plan, so build once and draw many paths.
pub struct CirculantEmbedding {
    n: usize,
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantEmbedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantEmbedding").field("n", &self.n).finish()
    }
}

/// Largest circulant length tried before giving up on an embedding.
const MAX_EMBEDDING: usize = 1 << 26;

impl CirculantEmbedding {
    /// Embeds the grid covariance in a circulant of length `2n`, doubling the
    /// length while any eigenvalue is below `-1e-10 * max`. The sampled
    /// kernel is concave below lag `1/c` when `d > 0`, so the minimal
    /// embedding can be slightly indefinite on short grids; padding restores
    /// nonnegativity without changing the covariance of the first `n` points.
    pub fn new(spec: &GammaSpec, grid: &FgnGrid) -> Result<Self> {
        let n = grid.n;
        let mut big = 2 * n;
        let mut planner = FftPlanner::<f64>::new();
        loop {
            let half = big / 2;
            let mut row: Vec<Complex64> = Vec::with_capacity(big);
            for k in 0..=half {
                row.push(Complex64::new(gamma_z(spec, k as f64 * grid.step), 0.0));
            }
            for k in (1..half).rev() {
                row.push(row[k]);
            }
            let fft = planner.plan_fft_forward(big);
            fft.process(&mut row);

            let max = row.iter().map(|z| z.re).fold(f64::MIN, f64::max);
            let min = row.iter().map(|z| z.re).fold(f64::MAX, f64::min);
            let tol = 1e-10 * max;
            if min < -tol {
                if big >= MAX_EMBEDDING {
                    return Err(Error::EmbeddingFailure {
                        min_eigenvalue: min,
                        tolerance: tol,
                    });
                }
                big *= 2;
                continue;
            }
            let scale = row.iter().map(|z| (z.re.max(0.0) / big as f64).sqrt()).collect();
            return Ok(Self { n, scale, fft });
        }
    }

    /// Length of the circulant actually used.
    pub fn embedding_len(&self) -> usize {
        self.scale.len()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Two independent sequences from one FFT: real and imaginary parts.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex64> = self
            .scale
            .iter()
            .map(|&s| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                Complex64::new(s * a, s * b)
            })
            .collect();
        self.fft.process(&mut buf);
        buf.truncate(self.n);
        let re = buf.iter().map(|z| z.re).collect();
        let im = buf.iter().map(|z| z.im).collect();
        (re, im)
    }
}

/// One fGn sequence with autocovariance `gamma_z(spec, r * grid.step)`.
pub fn simulate_fgn(spec: &GammaSpec, grid: &FgnGrid, seed: u64) -> Result<Vec<f64>> {
    let emb = CirculantEmbedding::new(spec, grid)?;
    let mut rng = rng::stream(seed, rng::STREAM_FGN);
    Ok(emb.sample_pair(&mut rng).0)
}

/// Stream of fGn sequences that consumes both halves of every embedding draw.
pub struct FgnStream {
    emb: CirculantEmbedding,
    rng: rand_chacha::ChaCha8Rng,
    spare: Option<Vec<f64>>,
}

impl FgnStream {
    pub fn new(spec: &GammaSpec, grid: &FgnGrid, seed: u64) -> Result<Self> {
        Ok(Self {
            emb: CirculantEmbedding::new(spec, grid)?,
            rng: rng::stream(seed, rng::STREAM_FGN),
            spare: None,
        })
    }

    pub fn next_sequence(&mut self) -> Vec<f64> {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let (a, b) = self.emb.sample_pair(&mut self.rng);
        self.spare = Some(b);
        a
    }
}
