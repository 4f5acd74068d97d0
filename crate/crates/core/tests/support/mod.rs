//! Slow reference implementations written straight from the metric
//! definitions. Shared by the integration tests and the acceptance target.
#![allow(dead_code)]

use rand::Rng;
use stainbench_core::imaging::{BinaryMask, ImageTile};
use stainbench_core::texture::{SsimMode, SsimParams, WindowKind};

pub fn random_mask<R: Rng>(rng: &mut R, w: usize, h: usize, density: f64) -> BinaryMask {
    BinaryMask::from_fn(w, h, |_, _| rng.random_bool(density)).unwrap()
}

pub fn random_tile<R: Rng>(rng: &mut R, w: usize, h: usize) -> ImageTile {
    ImageTile::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()]).unwrap()
}

/// Dice, IoU, Hausdorff, TPR and TNR by counting and all-pairs distances.
#[derive(Debug, PartialEq)]
pub struct SegOracle {
    pub dice: f64,
    pub iou: f64,
    pub hausdorff: f64,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
}

fn positives(m: &BinaryMask) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for y in 0..m.height() {
        for x in 0..m.width() {
            if m.get(x, y) {
                out.push((x as i64, y as i64));
            }
        }
    }
    out
}

fn directed(from: &[(i64, i64)], to: &[(i64, i64)]) -> f64 {
    from.iter()
        .map(|&(ax, ay)| {
            to.iter()
                .map(|&(bx, by)| (((ax - bx).pow(2) + (ay - by).pow(2)) as f64).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

pub fn seg_oracle(gt: &BinaryMask, pred: &BinaryMask) -> SegOracle {
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            match (gt.get(x, y), pred.get(x, y)) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
    }
    let g = positives(gt);
    let p = positives(pred);
    let hausdorff = match (g.is_empty(), p.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        _ => directed(&g, &p).max(directed(&p, &g)),
    };
    let ratio = |num: usize, den: usize, empty: f64| if den == 0 { empty } else { num as f64 / den as f64 };
    SegOracle {
        dice: ratio(2 * tp, 2 * tp + fp + fn_, 1.0),
        iou: ratio(tp, tp + fp + fn_, 1.0),
        hausdorff,
        tpr: (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64),
        tnr: (tn + fp > 0).then(|| tn as f64 / (tn + fp) as f64),
    }
}

pub fn mse_oracle(a: &ImageTile, b: &ImageTile) -> f64 {
    let mut sum = 0.0;
    for y in 0..a.height() {
        for x in 0..a.width() {
            for c in 0..3 {
                let d = f64::from(a.get(x, y)[c]) - f64::from(b.get(x, y)[c]);
                sum += d * d;
            }
        }
    }
    sum / (3 * a.width() * a.height()) as f64
}

pub fn psnr_oracle(a: &ImageTile, b: &ImageTile) -> f64 {
    let m = mse_oracle(a, b);
    if m == 0.0 {
        f64::INFINITY
    } else {
        20.0 * 255f64.log10() - 10.0 * m.log10()
    }
}

fn plane(img: &ImageTile, mode: Option<usize>) -> Vec<Vec<f64>> {
    (0..img.height())
        .map(|y| {
            (0..img.width())
                .map(|x| {
                    let [r, g, b] = img.get(x, y);
                    match mode {
                        Some(c) => f64::from([r, g, b][c]),
                        None => (0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)).round(),
                    }
                })
                .collect()
        })
        .collect()
}

fn window_weights(params: &SsimParams) -> Vec<Vec<f64>> {
    let n = params.window;
    let half = (n / 2) as f64;
    let mut w: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match params.window_kind {
                    WindowKind::Uniform => 1.0,
                    WindowKind::Gaussian { sigma } => {
                        let (di, dj) = (i as f64 - half, j as f64 - half);
                        (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp()
                    }
                })
                .collect()
        })
        .collect();
    let total: f64 = w.iter().flatten().sum();
    for v in w.iter_mut().flatten() {
        *v /= total;
    }
    w
}

fn ssim_plane_oracle(x: &[Vec<f64>], y: &[Vec<f64>], params: &SsimParams) -> f64 {
    let n = params.window;
    let w = window_weights(params);
    let uniform = matches!(params.window_kind, WindowKind::Uniform);
    let (h, wd) = (x.len(), x[0].len());
    let mut total = 0.0;
    let mut count = 0;
    for oy in 0..=h - n {
        for ox in 0..=wd - n {
            let mut mx = 0.0;
            let mut my = 0.0;
            for i in 0..n {
                for j in 0..n {
                    mx += w[i][j] * x[oy + i][ox + j];
                    my += w[i][j] * y[oy + i][ox + j];
                }
            }
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let dx = x[oy + i][ox + j] - mx;
                    let dy = y[oy + i][ox + j] - my;
                    vx += w[i][j] * dx * dx;
                    vy += w[i][j] * dy * dy;
                    cxy += w[i][j] * dx * dy;
                }
            }
            if uniform {
                let np = (n * n) as f64;
                vx *= np / (np - 1.0);
                vy *= np / (np - 1.0);
                cxy *= np / (np - 1.0);
            }
            total += (2.0 * mx * my + params.c1) * (2.0 * cxy + params.c2)
                / ((mx * mx + my * my + params.c1) * (vx + vy + params.c2));
            count += 1;
        }
    }
    total / count as f64
}

pub fn ssim_oracle(a: &ImageTile, b: &ImageTile, params: &SsimParams) -> f64 {
    match params.mode {
        SsimMode::Grayscale => ssim_plane_oracle(&plane(a, None), &plane(b, None), params),
        SsimMode::RgbMean => {
            (0..3)
                .map(|c| ssim_plane_oracle(&plane(a, Some(c)), &plane(b, Some(c)), params))
                .sum::<f64>()
                / 3.0
        }
    }
}

/// Otsu by evaluating `w0·w1·(mu0 − mu1)²` from the raw pixel list at every
/// candidate threshold. Scores within a relative 1e-12 of the best count as
/// ties and resolve to the smallest threshold.
pub fn otsu_oracle(pixels: &[u8]) -> Option<u8> {
    let n = pixels.len() as f64;
    let scores: Vec<(u8, f64)> = (0..255u8)
        .filter_map(|t| {
            let (lo, hi): (Vec<f64>, Vec<f64>) = (
                pixels.iter().filter(|&&v| v <= t).map(|&v| f64::from(v)).collect(),
                pixels.iter().filter(|&&v| v > t).map(|&v| f64::from(v)).collect(),
            );
            if lo.is_empty() || hi.is_empty() {
                return None;
            }
            let m0 = lo.iter().sum::<f64>() / lo.len() as f64;
            let m1 = hi.iter().sum::<f64>() / hi.len() as f64;
            Some((t, (lo.len() as f64 / n) * (hi.len() as f64 / n) * (m0 - m1).powi(2)))
        })
        .collect();
    let best = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    scores.iter().find(|s| s.1 >= best * (1.0 - 1e-12)).map(|s| s.0)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Two-sided Student-t p-value by quadrature. With `x = sqrt(dof)·tan θ` the
/// density becomes proportional to `cos^(dof−1) θ` on `[0, π/2)`, so no
/// gamma function is needed.
pub fn t_p_value_oracle(t: f64, dof: f64) -> f64 {
    let f = move |theta: f64| theta.cos().max(0.0).powf(dof - 1.0);
    let theta_t = (t.abs() / dof.sqrt()).atan();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let tail = adaptive_simpson(&f, theta_t, half_pi, 1e-14);
    let body = adaptive_simpson(&f, 0.0, theta_t, 1e-14);
    tail / (tail + body)
}
