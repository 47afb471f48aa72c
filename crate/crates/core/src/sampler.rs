//! Bilinear texture lookup at splat-local coordinates with border clamping.
//!
//! A `T×T` texture spans local coordinates `[-σ, σ]²`. Coordinates outside
//! that square clamp to the border texels, so color lookups never fade to
//! zero; the rasterizer decides where a splat's support ends.

use crate::linalg::Vec2;
use crate::real::Real;

/// Continuous texel-space position, `0 ≤ pu, pv ≤ T−1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TexelCoord<F> {
    pub pu: F,
    pub pv: F,
}

/// Value stored in a texel: a scalar (alpha) or an RGB triple (color).
pub trait Texel<F: Real>: Copy {
    fn zero() -> Self;
    fn scaled(self, w: F) -> Self;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
}

impl<F: Real> Texel<F> for F {
    #[inline]
    fn zero() -> Self {
        F::zero()
    }
    #[inline]
    fn scaled(self, w: F) -> Self {
        self * w
    }
    #[inline]
    fn add(self, other: Self) -> Self {
        self + other
    }
    #[inline]
    fn sub(self, other: Self) -> Self {
        self - other
    }
}

impl<F: Real> Texel<F> for [F; 3] {
    #[inline]
    fn zero() -> Self {
        [F::zero(); 3]
    }
    #[inline]
    fn scaled(self, w: F) -> Self {
        [self[0] * w, self[1] * w, self[2] * w]
    }
    #[inline]
    fn add(self, o: Self) -> Self {
        [self[0] + o[0], self[1] + o[1], self[2] + o[2]]
    }
    #[inline]
    fn sub(self, o: Self) -> Self {
        [self[0] - o[0], self[1] - o[1], self[2] - o[2]]
    }
}

#[inline]
fn to_pixel<F: Real>(u: F, t: F, sigma: F) -> F {
    (u + sigma) / (F::two() * sigma) * t - F::half()
}

#[inline]
fn clamp_coord<F: Real>(p: F, t: F) -> F {
    p.max(F::zero()).min(t - F::one())
}

/// Local coordinates to clamped texel coordinates.
pub fn local_to_texel<F: Real>(u: Vec2<F>, t: usize, sigma: F) -> TexelCoord<F> {
    let tf = F::of(t as f64);
    TexelCoord {
        pu: clamp_coord(to_pixel(u.x, tf, sigma), tf),
        pv: clamp_coord(to_pixel(u.y, tf, sigma), tf),
    }
}

/// Exact inverse of the unclamped local→texel transform.
pub fn texel_to_local<F: Real>(pu: F, pv: F, t: usize, sigma: F) -> Vec2<F> {
    let tf = F::of(t as f64);
    let back = |p: F| (p + F::half()) / tf * F::two() * sigma - sigma;
    Vec2::new(back(pu), back(pv))
}

/// Four bilinear taps: texel indices (`i_v·T + i_u`) and their weights.
/// Indices repeat when clamping makes corners coincide.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TexelTaps<F> {
    pub index: [usize; 4],
    pub weight: [F; 4],
}

#[derive(Clone, Copy, Debug)]
struct Footprint<F> {
    taps: TexelTaps<F>,
    fu: F,
    fv: F,
    /// `d pu/d u`, zero when the u axis is clamped.
    dpu_du: F,
    dpv_dv: F,
}

#[inline]
fn footprint<F: Real>(u: Vec2<F>, t: usize, sigma: F) -> Footprint<F> {
    let tf = F::of(t as f64);
    let raw_u = to_pixel(u.x, tf, sigma);
    let raw_v = to_pixel(u.y, tf, sigma);
    let pu = clamp_coord(raw_u, tf);
    let pv = clamp_coord(raw_v, tf);
    let iu_f = pu.floor();
    let iv_f = pv.floor();
    let fu = pu - iu_f;
    let fv = pv - iv_f;
    let iu = iu_f.as_f64() as usize;
    let iv = iv_f.as_f64() as usize;
    let iu1 = (iu + 1).min(t - 1);
    let iv1 = (iv + 1).min(t - 1);
    let one = F::one();
    let top = tf - one;
    let slope = tf / (F::two() * sigma);
    let dpu_du = if raw_u < F::zero() || raw_u > top { F::zero() } else { slope };
    let dpv_dv = if raw_v < F::zero() || raw_v > top { F::zero() } else { slope };
    Footprint {
        taps: TexelTaps {
            index: [iv * t + iu, iv * t + iu1, iv1 * t + iu, iv1 * t + iu1],
            weight: [(one - fu) * (one - fv), fu * (one - fv), (one - fu) * fv, fu * fv],
        },
        fu,
        fv,
        dpu_du,
        dpv_dv,
    }
}

#[inline]
fn weighted_sum<F: Real, T: Texel<F>>(tex: &[T], taps: &TexelTaps<F>) -> T {
    tex[taps.index[0]]
        .scaled(taps.weight[0])
        .add(tex[taps.index[1]].scaled(taps.weight[1]))
        .add(tex[taps.index[2]].scaled(taps.weight[2]))
        .add(tex[taps.index[3]].scaled(taps.weight[3]))
}

/// Bilinear lookup `T[u]` of a `t×t` texture.
#[inline]
pub fn bilinear_sample<F: Real, T: Texel<F>>(tex: &[T], t: usize, u: Vec2<F>, sigma: F) -> T {
    debug_assert_eq!(tex.len(), t * t);
    weighted_sum(tex, &footprint(u, t, sigma).taps)
}

/// Sample value with its derivatives.
#[derive(Clone, Copy, Debug)]
pub struct SampleGrad<F, T> {
    pub value: T,
    /// `d value / d texel` for each listed texel.
    pub taps: TexelTaps<F>,
    /// `d value / d u` and `d value / d v`.
    pub d_u: [T; 2],
}

/// Bilinear lookup together with its gradients. Derivatives along a clamped
/// axis are zero.
#[inline]
pub fn bilinear_sample_grad<F: Real, T: Texel<F>>(tex: &[T], t: usize, u: Vec2<F>, sigma: F) -> SampleGrad<F, T> {
    let fp = footprint(u, t, sigma);
    let [i00, i10, i01, i11] = fp.taps.index;
    let (t00, t10, t01, t11) = (tex[i00], tex[i10], tex[i01], tex[i11]);
    let one = F::one();
    let d_fu = t10.sub(t00).scaled(one - fp.fv).add(t11.sub(t01).scaled(fp.fv));
    let d_fv = t01.sub(t00).scaled(one - fp.fu).add(t11.sub(t10).scaled(fp.fu));
    SampleGrad {
        value: weighted_sum(tex, &fp.taps),
        taps: fp.taps,
        d_u: [d_fu.scaled(fp.dpu_du), d_fv.scaled(fp.dpv_dv)],
    }
}
