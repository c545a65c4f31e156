use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{ChannelImage, FeatureError, FeatureKind, FeatureVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaborParams {
    pub n_scales: usize,
    pub n_orientations: usize,
    /// Odd side length of every kernel, pixels.
    pub kernel_size: usize,
    /// Wavelength of scale 0, pixels.
    pub min_wavelength: f64,
    /// Ratio between consecutive wavelengths.
    pub wavelength_step: f64,
    /// Gaussian σ as a multiple of the wavelength.
    pub sigma_ratio: f64,
    /// Gaussian aspect ratio across the wave direction.
    pub aspect: f64,
}

impl GaborParams {
    /// 8 scales × 6 orientations of 15-pixel kernels, wavelengths from 4 px.
    pub fn full() -> Self {
        GaborParams {
            n_scales: 8,
            n_orientations: 6,
            kernel_size: 15,
            min_wavelength: 4.0,
            wavelength_step: std::f64::consts::SQRT_2,
            sigma_ratio: 0.56,
            aspect: 0.5,
        }
    }

    /// Same bank shrunk for 72×54 images: 9-pixel kernels with the
    /// wavelengths scaled by 9/15.
    pub fn fast() -> Self {
        GaborParams { kernel_size: 9, min_wavelength: 2.4, ..Self::full() }
    }

    pub fn feature_len(&self) -> usize {
        2 * self.n_scales * self.n_orientations
    }

    pub fn wavelength(&self, scale: usize) -> f64 {
        self.min_wavelength * self.wavelength_step.powi(scale as i32)
    }

    fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: &str| Err(FeatureError::InvalidGabor(m.into()));
        if self.n_scales == 0 || self.n_orientations == 0 {
            return bad("need at least one scale and orientation");
        }
        if self.kernel_size % 2 == 0 {
            return bad("kernel size must be odd");
        }
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !(pos(self.min_wavelength) && pos(self.wavelength_step) && pos(self.sigma_ratio) && pos(self.aspect)) {
            return bad("wavelength, step, sigma ratio and aspect must be positive");
        }
        Ok(())
    }
}

impl Default for GaborParams {
    fn default() -> Self {
        Self::full()
    }
}

/// Complex kernel `g(x, y)·(e^{j2πx'/λ} − κ)`, with `κ` chosen so the kernel
/// sums to zero and the whole kernel scaled to unit energy.
#[derive(Clone, Debug, PartialEq)]
pub struct GaborKernel {
    pub scale: usize,
    pub orientation: usize,
    pub wavelength: f64,
    pub theta: f64,
    pub taps: Array2<Complex64>,
}

impl GaborKernel {
    pub fn new(params: &GaborParams, scale: usize, orientation: usize) -> Self {
        let wavelength = params.wavelength(scale);
        let theta = orientation as f64 * PI / params.n_orientations as f64;
        let sigma = params.sigma_ratio * wavelength;
        let n = params.kernel_size;
        let r = (n / 2) as f64;
        let (sin, cos) = theta.sin_cos();
        let mut env = Array2::zeros((n, n));
        let mut wave = Array2::zeros((n, n));
        for ((i, j), e) in env.indexed_iter_mut() {
            let (y, x) = (i as f64 - r, j as f64 - r);
            let xr = x * cos + y * sin;
            let yr = -x * sin + y * cos;
            *e = (-(xr * xr + params.aspect * params.aspect * yr * yr) / (2.0 * sigma * sigma)).exp();
            wave[[i, j]] = Complex64::from_polar(1.0, 2.0 * PI * xr / wavelength);
        }
        let kappa = (&env.mapv(Complex64::from) * &wave).sum() / env.sum();
        let mut taps = Array2::from_shape_fn((n, n), |ij| env[ij] * (wave[ij] - kappa));
        let energy = taps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if energy > 0.0 {
            taps.mapv_inplace(|c| c / energy);
        }
        GaborKernel { scale, orientation, wavelength, theta, taps }
    }

    pub fn dc_gain(&self) -> Complex64 {
        self.taps.sum()
    }
}

/// Scale-major list of kernels plus cached FFT plans per image shape.
#[derive(Debug)]
pub struct GaborBank {
    pub params: GaborParams,
    pub kernels: Vec<GaborKernel>,
    plans: Mutex<HashMap<(usize, usize), Arc<GaborPlan>>>,
}

impl Clone for GaborBank {
    fn clone(&self) -> Self {
        GaborBank { params: self.params.clone(), kernels: self.kernels.clone(), plans: Mutex::default() }
    }
}

impl GaborBank {
    pub fn new(params: GaborParams) -> Result<Self, FeatureError> {
        params.validate()?;
        let kernels = (0..params.n_scales)
            .flat_map(|s| (0..params.n_orientations).map(move |o| (s, o)))
            .map(|(s, o)| GaborKernel::new(&params, s, o))
            .collect();
        Ok(GaborBank { params, kernels, plans: Mutex::default() })
    }

    /// Plan for `height × width` images, built on first use.
    pub fn plan(&self, height: usize, width: usize) -> Result<Arc<GaborPlan>, FeatureError> {
        let k = self.params.kernel_size;
        if height < k || width < k {
            return Err(FeatureError::ImageTooSmall { height, width, min: k });
        }
        let mut plans = self.plans.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(p) = plans.get(&(height, width)) {
            return Ok(p.clone());
        }
        let plan = Arc::new(GaborPlan::new(self, height, width));
        plans.insert((height, width), plan.clone());
        Ok(plan)
    }
}

/// Spectra budget above which kernel spectra are recomputed per image
/// instead of cached.
const CACHE_LIMIT_BYTES: usize = 64 << 20;

/// FFT correlation machinery for one image shape.
pub struct GaborPlan {
    height: usize,
    width: usize,
    ny: usize,
    nx: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    kernels: Vec<Array2<Complex64>>,
    spectra: Option<Vec<Vec<Complex64>>>,
}

impl std::fmt::Debug for GaborPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaborPlan")
            .field("height", &self.height)
            .field("width", &self.width)
            .field("fft", &(self.ny, self.nx))
            .field("cached", &self.spectra.is_some())
            .finish()
    }
}

fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

impl GaborPlan {
    fn new(bank: &GaborBank, height: usize, width: usize) -> Self {
        let k = bank.params.kernel_size;
        let (ny, nx) = (smooth_size(height + k - 1), smooth_size(width + k - 1));
        let mut planner = FftPlanner::new();
        let mut plan = GaborPlan {
            height,
            width,
            ny,
            nx,
            row_fwd: planner.plan_fft_forward(nx),
            row_inv: planner.plan_fft_inverse(nx),
            col_fwd: planner.plan_fft_forward(ny),
            col_inv: planner.plan_fft_inverse(ny),
            kernels: bank.kernels.iter().map(|g| g.taps.clone()).collect(),
            spectra: None,
        };
        let bytes = ny * nx * bank.kernels.len() * std::mem::size_of::<Complex64>();
        if bytes <= CACHE_LIMIT_BYTES {
            plan.spectra = Some(plan.kernels.iter().map(|k| plan.kernel_spectrum(k)).collect());
        }
        plan
    }

    /// Spectrum of the index-reversed kernel, so that a product of spectra
    /// is a correlation rather than a convolution.
    fn kernel_spectrum(&self, k: &Array2<Complex64>) -> Vec<Complex64> {
        let (ny, nx) = (self.ny, self.nx);
        let mut buf = vec![Complex64::default(); ny * nx];
        for ((i, j), &c) in k.indexed_iter() {
            buf[((ny - i) % ny) * nx + (nx - j) % nx] = c;
        }
        self.fft2(&mut buf, false);
        buf
    }

    fn fft2(&self, buf: &mut [Complex64], inverse: bool) {
        let (ny, nx) = (self.ny, self.nx);
        let (rows, cols) = if inverse { (&self.row_inv, &self.col_inv) } else { (&self.row_fwd, &self.col_fwd) };
        rows.process(buf);
        let mut t = vec![Complex64::default(); ny * nx];
        for i in 0..ny {
            for j in 0..nx {
                t[j * ny + i] = buf[i * nx + j];
            }
        }
        cols.process(&mut t);
        for j in 0..nx {
            for i in 0..ny {
                buf[i * nx + j] = t[j * ny + i];
            }
        }
    }

    /// Reflect-padded image (no edge repeat), zero-filled up to the FFT size.
    fn padded_spectrum(&self, img: &Array2<f64>) -> Vec<Complex64> {
        let r = (self.kernels[0].nrows() / 2) as isize;
        let (h, w) = (self.height as isize, self.width as isize);
        let reflect = |i: isize, n: isize| -> usize {
            let i = if i < 0 { -i } else { i };
            (if i >= n { 2 * (n - 1) - i } else { i }) as usize
        };
        let mut buf = vec![Complex64::default(); self.ny * self.nx];
        for y in 0..h + 2 * r {
            for x in 0..w + 2 * r {
                let v = img[[reflect(y - r, h), reflect(x - r, w)]];
                buf[y as usize * self.nx + x as usize] = Complex64::new(v, 0.0);
            }
        }
        self.fft2(&mut buf, false);
        buf
    }

    /// Magnitude responses of every kernel, in bank order.
    pub fn responses(&self, img: &Array2<f64>) -> Vec<Array2<f64>> {
        let spec = self.padded_spectrum(img);
        let norm = 1.0 / (self.ny * self.nx) as f64;
        let mut work = vec![Complex64::default(); self.ny * self.nx];
        (0..self.kernels.len())
            .map(|k| {
                let owned;
                let ks: &[Complex64] = match &self.spectra {
                    Some(s) => &s[k],
                    None => {
                        owned = self.kernel_spectrum(&self.kernels[k]);
                        &owned
                    }
                };
                for ((w, a), b) in work.iter_mut().zip(&spec).zip(ks) {
                    *w = a * b;
                }
                self.fft2(&mut work, true);
                Array2::from_shape_fn((self.height, self.width), |(y, x)| work[y * self.nx + x].norm() * norm)
            })
            .collect()
    }

    /// `(mean, population std)` of each magnitude response, interleaved.
    pub fn features(&self, img: &Array2<f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.kernels.len());
        for r in self.responses(img) {
            let n = r.len() as f64;
            let mean = r.sum() / n;
            let var = r.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            out.push(mean);
            out.push(var.sqrt());
        }
        out
    }
}

/// Gabor statistics of one image: for every kernel (scale-major, then
/// orientation) the mean and population std of the response magnitude.
pub fn gabor_features(img: &ChannelImage, bank: &GaborBank) -> Result<FeatureVector, FeatureError> {
    if !img.pixels.iter().all(|v| v.is_finite()) {
        return Err(FeatureError::NonFinite);
    }
    let plan = bank.plan(img.height(), img.width())?;
    Ok(FeatureVector { values: plan.features(&img.pixels), kind: FeatureKind::Gabor, pair: img.source_pair })
}
