//! PSNR and SSIM.
//!
//! SSIM follows Wang et al.: grayscale (channel mean), an 11×11 Gaussian
//! window with σ = 1.5, `K1 = 0.01`, `K2 = 0.03`, dynamic range 1, averaged
//! over every window position that lies fully inside the image.

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::real::Real;

/// Reported PSNR for identical images.
pub const PSNR_MAX: f64 = 99.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn check_shapes<A, B>(a: &ImageBuffer<A>, b: &ImageBuffer<B>) -> Result<()> {
    if a.width != b.width || a.height != b.height || a.channels != b.channels {
        return Err(Error::invalid(format!(
            "image shapes differ: {}×{}×{} vs {}×{}×{}",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )));
    }
    Ok(())
}

pub fn mse<F: Real>(a: &ImageBuffer<F>, b: &ImageBuffer<F>) -> Result<f64> {
    check_shapes(a, b)?;
    let sum: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = x.as_f64() - y.as_f64();
            d * d
        })
        .sum();
    Ok(sum / a.data.len() as f64)
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_MAX;
    }
    (10.0 * (1.0 / mse).log10()).min(PSNR_MAX)
}

/// `10·log10(1/MSE)` over all channels, capped at [`PSNR_MAX`].
pub fn psnr<F: Real>(a: &ImageBuffer<F>, b: &ImageBuffer<F>) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

/// Normalized 1-D Gaussian taps of the SSIM window.
pub fn ssim_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let r = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - r;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable "valid" correlation of a `w × h` plane with the SSIM window.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w + 1 - SSIM_WINDOW, h + 1 - SSIM_WINDOW);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for (i, &kv) in k.iter().enumerate() {
            let row = &tmp[(y + i) * ow..(y + i + 1) * ow];
            for x in 0..ow {
                out[y * ow + x] += kv * row[x];
            }
        }
    }
    out
}

/// Adjoint of [`filter_valid`]: spreads a valid-size map back to `w × h`.
fn filter_valid_adjoint(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w + 1 - SSIM_WINDOW, h + 1 - SSIM_WINDOW);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..oh {
        for (i, &kv) in k.iter().enumerate() {
            let dst = &mut tmp[(y + i) * ow..(y + i + 1) * ow];
            for x in 0..ow {
                dst[x] += kv * src[y * ow + x];
            }
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..ow {
            let v = tmp[y * ow + x];
            for (i, &kv) in k.iter().enumerate() {
                out[y * w + x + i] += kv * v;
            }
        }
    }
    out
}

struct SsimStats {
    mu_x: Vec<f64>,
    mu_y: Vec<f64>,
    var_x: Vec<f64>,
    var_y: Vec<f64>,
    cov: Vec<f64>,
}

fn gray_plane<F: Real>(img: &ImageBuffer<F>) -> Vec<f64> {
    let c = img.channels as f64;
    img.data.chunks(img.channels).map(|p| p.iter().map(|v| v.as_f64()).sum::<f64>() / c).collect()
}

fn ssim_stats(x: &[f64], y: &[f64], w: usize, h: usize) -> SsimStats {
    let k = ssim_kernel();
    let mu_x = filter_valid(x, w, h, &k);
    let mu_y = filter_valid(y, w, h, &k);
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let exx = filter_valid(&xx, w, h, &k);
    let eyy = filter_valid(&yy, w, h, &k);
    let exy = filter_valid(&xy, w, h, &k);
    let n = mu_x.len();
    let mut var_x = vec![0.0; n];
    let mut var_y = vec![0.0; n];
    let mut cov = vec![0.0; n];
    for i in 0..n {
        var_x[i] = exx[i] - mu_x[i] * mu_x[i];
        var_y[i] = eyy[i] - mu_y[i] * mu_y[i];
        cov[i] = exy[i] - mu_x[i] * mu_y[i];
    }
    SsimStats { mu_x, mu_y, var_x, var_y, cov }
}

fn check_ssim_size<F>(a: &ImageBuffer<F>) -> Result<()> {
    if a.width < SSIM_WINDOW || a.height < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "SSIM needs images of at least {SSIM_WINDOW}×{SSIM_WINDOW}, got {}×{}",
            a.width, a.height
        )));
    }
    Ok(())
}

/// Mean SSIM over all valid window positions.
pub fn ssim<F: Real>(a: &ImageBuffer<F>, b: &ImageBuffer<F>) -> Result<f64> {
    check_shapes(a, b)?;
    check_ssim_size(a)?;
    let s = ssim_stats(&gray_plane(a), &gray_plane(b), a.width, a.height);
    let n = s.mu_x.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (mx, my) = (s.mu_x[i], s.mu_y[i]);
            ((2.0 * mx * my + SSIM_C1) * (2.0 * s.cov[i] + SSIM_C2))
                / ((mx * mx + my * my + SSIM_C1) * (s.var_x[i] + s.var_y[i] + SSIM_C2))
        })
        .sum();
    Ok(total / n as f64)
}

/// SSIM of `a` against `b` and its gradient with respect to every value of `a`.
pub fn ssim_with_grad<F: Real>(a: &ImageBuffer<F>, b: &ImageBuffer<F>) -> Result<(f64, ImageBuffer<F>)> {
    check_shapes(a, b)?;
    check_ssim_size(a)?;
    let (w, h) = (a.width, a.height);
    let x = gray_plane(a);
    let y = gray_plane(b);
    let s = ssim_stats(&x, &y, w, h);
    let n = s.mu_x.len();
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut gamma = vec![0.0; n];
    let mut total = 0.0;
    for i in 0..n {
        let (mx, my) = (s.mu_x[i], s.mu_y[i]);
        let a1 = 2.0 * mx * my + SSIM_C1;
        let a2 = 2.0 * s.cov[i] + SSIM_C2;
        let b1 = mx * mx + my * my + SSIM_C1;
        let b2 = s.var_x[i] + s.var_y[i] + SSIM_C2;
        let v = a1 * a2 / (b1 * b2);
        total += v;
        let d_mu = 2.0 * my * a2 / (b1 * b2) - 2.0 * mx * v / b1;
        let d_var = -v / b2;
        let d_cov = 2.0 * a1 / (b1 * b2);
        alpha[i] = d_mu - 2.0 * mx * d_var - my * d_cov;
        beta[i] = d_var;
        gamma[i] = d_cov;
    }
    let k = ssim_kernel();
    let ga = filter_valid_adjoint(&alpha, w, h, &k);
    let gb = filter_valid_adjoint(&beta, w, h, &k);
    let gc = filter_valid_adjoint(&gamma, w, h, &k);
    let inv_n = 1.0 / n as f64;
    let inv_c = 1.0 / a.channels as f64;
    let mut grad = ImageBuffer::new(w, h, a.channels).with_color_space(a.color_space);
    for p in 0..w * h {
        let g = (ga[p] + 2.0 * x[p] * gb[p] + y[p] * gc[p]) * inv_n * inv_c;
        for c in 0..a.channels {
            grad.data[p * a.channels + c] = F::of(g);
        }
    }
    Ok((total * inv_n, grad))
}
