//! Real spherical harmonics up to degree 3, in the sign convention common to
//! Gaussian-splatting renderers. The DC term is not offset by +0.5.

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::real::Real;

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
pub const SH_C1: f64 = 0.488_602_511_902_919_9;
const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

pub const MAX_SH_DEGREE: usize = 3;

pub const fn sh_coeff_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// Basis values `Y_k(dir)` for `k < (degree+1)²`, written into `out`.
pub fn sh_basis<F: Real>(dir: Vec3<F>, degree: usize, out: &mut [F; 16]) {
    let (x, y, z) = (dir.x, dir.y, dir.z);
    let c = F::of;
    out[0] = c(SH_C0);
    if degree == 0 {
        return;
    }
    out[1] = -c(SH_C1) * y;
    out[2] = c(SH_C1) * z;
    out[3] = -c(SH_C1) * x;
    if degree == 1 {
        return;
    }
    let (xx, yy, zz) = (x * x, y * y, z * z);
    out[4] = c(SH_C2[0]) * x * y;
    out[5] = c(SH_C2[1]) * y * z;
    out[6] = c(SH_C2[2]) * (c(2.0) * zz - xx - yy);
    out[7] = c(SH_C2[3]) * x * z;
    out[8] = c(SH_C2[4]) * (xx - yy);
    if degree == 2 {
        return;
    }
    out[9] = c(SH_C3[0]) * y * (c(3.0) * xx - yy);
    out[10] = c(SH_C3[1]) * x * y * z;
    out[11] = c(SH_C3[2]) * y * (c(4.0) * zz - xx - yy);
    out[12] = c(SH_C3[3]) * z * (c(2.0) * zz - c(3.0) * xx - c(3.0) * yy);
    out[13] = c(SH_C3[4]) * x * (c(4.0) * zz - xx - yy);
    out[14] = c(SH_C3[5]) * z * (xx - yy);
    out[15] = c(SH_C3[6]) * x * (xx - c(3.0) * yy);
}

/// Gradients of the basis polynomials with respect to the (unnormalized)
/// direction components.
pub fn sh_basis_grad<F: Real>(dir: Vec3<F>, degree: usize, out: &mut [Vec3<F>; 16]) {
    let (x, y, z) = (dir.x, dir.y, dir.z);
    let c = F::of;
    let zero = F::zero();
    let v = Vec3::new;
    out[0] = Vec3::zero();
    if degree == 0 {
        return;
    }
    out[1] = v(zero, -c(SH_C1), zero);
    out[2] = v(zero, zero, c(SH_C1));
    out[3] = v(-c(SH_C1), zero, zero);
    if degree == 1 {
        return;
    }
    let (xx, yy, zz) = (x * x, y * y, z * z);
    out[4] = v(y, x, zero).scale(c(SH_C2[0]));
    out[5] = v(zero, z, y).scale(c(SH_C2[1]));
    out[6] = v(-c(2.0) * x, -c(2.0) * y, c(4.0) * z).scale(c(SH_C2[2]));
    out[7] = v(z, zero, x).scale(c(SH_C2[3]));
    out[8] = v(c(2.0) * x, -c(2.0) * y, zero).scale(c(SH_C2[4]));
    if degree == 2 {
        return;
    }
    out[9] = v(c(6.0) * x * y, c(3.0) * xx - c(3.0) * yy, zero).scale(c(SH_C3[0]));
    out[10] = v(y * z, x * z, x * y).scale(c(SH_C3[1]));
    out[11] = v(-c(2.0) * x * y, c(4.0) * zz - xx - c(3.0) * yy, c(8.0) * y * z).scale(c(SH_C3[2]));
    out[12] = v(-c(6.0) * x * z, -c(6.0) * y * z, c(6.0) * zz - c(3.0) * xx - c(3.0) * yy).scale(c(SH_C3[3]));
    out[13] = v(c(4.0) * zz - c(3.0) * xx - yy, -c(2.0) * x * y, c(8.0) * x * z).scale(c(SH_C3[4]));
    out[14] = v(c(2.0) * x * z, -c(2.0) * y * z, xx - yy).scale(c(SH_C3[5]));
    out[15] = v(c(3.0) * xx - c(3.0) * yy, -c(6.0) * x * y, zero).scale(c(SH_C3[6]));
}

/// RGB value of the SH expansion `coeffs` at `dir`, truncated to `degree`.
pub fn eval_sh<F: Real>(coeffs: &[[F; 3]], dir: Vec3<F>, degree: usize) -> Result<[F; 3]> {
    if degree > MAX_SH_DEGREE || sh_coeff_count(degree) > coeffs.len() {
        return Err(Error::invalid(format!(
            "SH degree {degree} needs {} coefficients, have {}",
            sh_coeff_count(degree),
            coeffs.len()
        )));
    }
    let n = dir.norm().as_f64();
    if (n - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("SH direction has norm {n}, expected 1")));
    }
    Ok(eval_sh_unchecked(coeffs, dir, degree))
}

#[inline]
pub(crate) fn eval_sh_unchecked<F: Real>(coeffs: &[[F; 3]], dir: Vec3<F>, degree: usize) -> [F; 3] {
    let mut basis = [F::zero(); 16];
    sh_basis(dir, degree, &mut basis);
    let mut rgb = [F::zero(); 3];
    for (k, c) in coeffs.iter().take(sh_coeff_count(degree)).enumerate() {
        for ch in 0..3 {
            rgb[ch] += basis[k] * c[ch];
        }
    }
    rgb
}
