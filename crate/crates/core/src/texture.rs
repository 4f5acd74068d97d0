//! Pixel-aligned fidelity metrics: MSE, PSNR and SSIM.
//!
//! MSE is the per-channel mean: the squared RGB difference summed over all
//! pixels and divided by `3·m·n`, so the 8-bit peak of 255² in PSNR applies
//! per channel. A sum-over-channels reading would be three times larger.

use serde::{Deserialize, Serialize};

use crate::imaging::{threshold::luma_plane, ImageTile};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TextureError {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("image {width}x{height} is smaller than the {window}x{window} SSIM window")]
    TooSmall {
        width: usize,
        height: usize,
        window: usize,
    },
    #[error("invalid SSIM parameters: {0}")]
    InvalidParams(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WindowKind {
    /// Flat window; local (co)variances use the unbiased `N − 1` normalization.
    Uniform,
    /// Normalized Gaussian weights; local moments are weighted population moments.
    Gaussian { sigma: f64 },
}

/// Channel handling for SSIM.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsimMode {
    /// Luma (0.299/0.587/0.114) plane.
    #[default]
    Grayscale,
    /// Mean of the per-channel SSIM values.
    RgbMean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: usize,
    pub window_kind: WindowKind,
    pub c1: f64,
    pub c2: f64,
    #[serde(default)]
    pub mode: SsimMode,
}

impl Default for SsimParams {
    /// 11×11 Gaussian window with σ = 1.5, `c1 = (0.01·255)²`, `c2 = (0.03·255)²`.
    fn default() -> Self {
        Self {
            window: 11,
            window_kind: WindowKind::Gaussian { sigma: 1.5 },
            c1: (0.01f64 * 255.0).powi(2),
            c2: (0.03f64 * 255.0).powi(2),
            mode: SsimMode::Grayscale,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<(), TextureError> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(TextureError::InvalidParams(format!(
                "window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.c1.is_finite() && self.c2.is_finite()) {
            return Err(TextureError::InvalidParams("c1 and c2 must be positive".into()));
        }
        if let WindowKind::Gaussian { sigma } = self.window_kind {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(TextureError::InvalidParams(format!("sigma must be positive, got {sigma}")));
            }
        }
        Ok(())
    }

    /// Normalized 1-D window profile; the 2-D window is its outer product.
    pub fn profile(&self) -> Vec<f64> {
        let n = self.window;
        let raw: Vec<f64> = match self.window_kind {
            WindowKind::Uniform => vec![1.0; n],
            WindowKind::Gaussian { sigma } => {
                let half = (n / 2) as f64;
                (0..n)
                    .map(|i| {
                        let d = i as f64 - half;
                        (-d * d / (2.0 * sigma * sigma)).exp()
                    })
                    .collect()
            }
        };
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }
}

/// Scores for one real/virtual pair. `psnr` is `+∞` exactly when `mse == 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextureScore {
    pub mse: f64,
    #[serde(with = "crate::sentinel")]
    pub psnr: f64,
    pub ssim: f64,
}

fn check_dims(a: &ImageTile, b: &ImageTile) -> Result<(), TextureError> {
    if !a.same_size(b) {
        return Err(TextureError::DimensionMismatch {
            left: (a.width(), a.height()),
            right: (b.width(), b.height()),
        });
    }
    Ok(())
}

pub fn mse(real: &ImageTile, virt: &ImageTile) -> Result<f64, TextureError> {
    check_dims(real, virt)?;
    let sum: u64 = real
        .as_raw()
        .iter()
        .zip(virt.as_raw())
        .map(|(&a, &b)| {
            let d = u64::from(a.abs_diff(b));
            d * d
        })
        .sum();
    Ok(sum as f64 / real.as_raw().len() as f64)
}

/// PSNR in dB from an MSE value; `+∞` when `mse == 0`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

pub fn psnr(real: &ImageTile, virt: &ImageTile) -> Result<f64, TextureError> {
    Ok(psnr_from_mse(mse(real, virt)?))
}

/// Mean SSIM over all valid (fully inside) window positions.
pub fn ssim(real: &ImageTile, virt: &ImageTile, params: &SsimParams) -> Result<f64, TextureError> {
    check_dims(real, virt)?;
    params.validate()?;
    let (w, h) = (real.width(), real.height());
    if w < params.window || h < params.window {
        return Err(TextureError::TooSmall {
            width: w,
            height: h,
            window: params.window,
        });
    }
    match params.mode {
        SsimMode::Grayscale => Ok(ssim_plane(&luma_plane(real), &luma_plane(virt), w, h, params)),
        SsimMode::RgbMean => {
            let total: f64 = (0..3)
                .map(|c| ssim_plane(&channel(real, c), &channel(virt, c), w, h, params))
                .sum();
            Ok(total / 3.0)
        }
    }
}

pub fn score(real: &ImageTile, virt: &ImageTile, params: &SsimParams) -> Result<TextureScore, TextureError> {
    let mse = mse(real, virt)?;
    Ok(TextureScore {
        mse,
        psnr: psnr_from_mse(mse),
        ssim: ssim(real, virt, params)?,
    })
}

fn channel(img: &ImageTile, c: usize) -> Vec<f64> {
    img.as_raw().iter().skip(c).step_by(3).map(|&v| f64::from(v)).collect()
}

fn ssim_plane(x: &[f64], y: &[f64], w: usize, h: usize, params: &SsimParams) -> f64 {
    let g = params.profile();
    let n = params.window;
    let np = (n * n) as f64;
    let cov_norm = match params.window_kind {
        WindowKind::Uniform => np / (np - 1.0),
        WindowKind::Gaussian { .. } => 1.0,
    };
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();

    let mx = filter_valid(x, w, h, &g);
    let my = filter_valid(y, w, h, &g);
    let mxx = filter_valid(&xx, w, h, &g);
    let myy = filter_valid(&yy, w, h, &g);
    let mxy = filter_valid(&xy, w, h, &g);

    let (c1, c2) = (params.c1, params.c2);
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let vx = cov_norm * (mxx[i] - ux * ux);
        let vy = cov_norm * (myy[i] - uy * uy);
        let vxy = cov_norm * (mxy[i] - ux * uy);
        let num = (2.0 * ux * uy + c1) * (2.0 * vxy + c2);
        let den = (ux * ux + uy * uy + c1) * (vx + vy + c2);
        total += num / den;
    }
    total / mx.len() as f64
}

/// Separable correlation keeping only positions where the window fits.
fn filter_valid(src: &[f64], w: usize, h: usize, g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut horizontal = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            horizontal[y * ow + x] = row[x..x + n].iter().zip(g).map(|(v, k)| v * k).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|k| horizontal[(y + k) * ow + x] * g[k]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tile(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ImageTile {
        ImageTile::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()]).unwrap()
    }

    #[test]
    fn mse_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_tile(&mut rng, 8, 8);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let base = ImageTile::from_fn(8, 8, |x, y| [(x * 10) as u8, (y * 10) as u8, 50]).unwrap();
        let shifted = ImageTile::from_fn(8, 8, |x, y| [(x * 10 + 16) as u8, (y * 10 + 16) as u8, 66]).unwrap();
        assert_eq!(mse(&base, &shifted).unwrap(), 256.0);
        let black = ImageTile::filled(4, 4, [0; 3]).unwrap();
        let white = ImageTile::filled(4, 4, [255; 3]).unwrap();
        assert_eq!(mse(&black, &white).unwrap(), 65025.0);
    }

    #[test]
    fn psnr_examples() {
        let black = ImageTile::filled(4, 4, [0; 3]).unwrap();
        let white = ImageTile::filled(4, 4, [255; 3]).unwrap();
        assert_eq!(psnr(&black, &black).unwrap(), f64::INFINITY);
        assert!(psnr(&black, &white).unwrap().abs() < 1e-9);
        assert!((psnr_from_mse(256.0) - 24.0485).abs() < 1e-3);
    }

    #[test]
    fn dimension_and_size_errors() {
        let a = ImageTile::filled(12, 12, [1; 3]).unwrap();
        let b = ImageTile::filled(12, 11, [1; 3]).unwrap();
        assert!(matches!(mse(&a, &b), Err(TextureError::DimensionMismatch { .. })));
        let small = ImageTile::filled(10, 10, [1; 3]).unwrap();
        assert!(matches!(
            ssim(&small, &small, &SsimParams::default()),
            Err(TextureError::TooSmall { .. })
        ));
        let bad = SsimParams { window: 4, ..SsimParams::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn ssim_identity_negative_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = SsimParams::default();
        for _ in 0..5 {
            let a = random_tile(&mut rng, 24, 20);
            assert!((ssim(&a, &a, &params).unwrap() - 1.0).abs() < 1e-9);
        }
        let a = ImageTile::from_fn(32, 32, |_, _| {
            let v = if rng.random::<bool>() { rng.random_range(0..100) } else { rng.random_range(156..=255) };
            [v, v, v]
        })
        .unwrap();
        let neg = ImageTile::from_fn(32, 32, |x, y| a.get(x, y).map(|v| 255 - v)).unwrap();
        assert!(ssim(&a, &neg, &params).unwrap() < 0.0);

        let mean = (a.as_raw().iter().map(|&v| v as f64).sum::<f64>() / a.as_raw().len() as f64).round() as u8;
        let flat = ImageTile::filled(32, 32, [mean; 3]).unwrap();
        let s = ssim(&a, &flat, &params).unwrap();
        assert!(s > 0.0 && s < 1.0, "{s}");
    }

    #[test]
    fn uniform_and_rgb_modes_are_identity_on_equal_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_tile(&mut rng, 16, 16);
        let params = SsimParams {
            window: 7,
            window_kind: WindowKind::Uniform,
            mode: SsimMode::RgbMean,
            ..SsimParams::default()
        };
        assert!((ssim(&a, &a, &params).unwrap() - 1.0).abs() < 1e-9);
    }
}
