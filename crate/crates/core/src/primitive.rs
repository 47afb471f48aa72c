use crate::error::{Error, Result};
use crate::geometry::{eval_gaussian, quat_norm};
use crate::linalg::{Vec2, Vec3};
use crate::real::{cast, Real};
use crate::sampler::texel_to_local;
use crate::sh::{sh_coeff_count, SH_C0};

pub const MAX_TEXTURE_SIZE: usize = 256;
pub const DEFAULT_TEXTURE_SIGMA: f64 = 1.0;

/// One textured 2D Gaussian surfel.
///
/// Textures are stored row-major with the `v` texel index selecting the row:
/// texel `(i_u, i_v)` lives at `i_v·T + i_u`.
#[derive(Clone, Debug, PartialEq)]
pub struct TexturedPrimitive<F = f32> {
    pub center: Vec3<F>,
    /// Unit quaternion `(w, x, y, z)`.
    pub rotation: [F; 4],
    pub scale: [F; 2],
    pub opacity: F,
    pub sh_degree: usize,
    /// `(L+1)²` RGB coefficient triples.
    pub sh: Vec<[F; 3]>,
    pub texture_size: usize,
    pub texture_sigma: F,
    pub color_texture: Vec<[F; 3]>,
    pub alpha_texture: Vec<F>,
}

impl<F: Real> TexturedPrimitive<F> {
    /// Degree-0 primitive with a 1×1 texture whose base color is `rgb`.
    pub fn plain(center: [F; 3], rotation: [F; 4], scale: [F; 2], opacity: F, rgb: [F; 3]) -> Self {
        let inv_c0 = F::of(1.0 / SH_C0);
        Self {
            center: Vec3::from_array(center),
            rotation,
            scale,
            opacity,
            sh_degree: 0,
            sh: vec![[rgb[0] * inv_c0, rgb[1] * inv_c0, rgb[2] * inv_c0]],
            texture_size: 1,
            texture_sigma: F::of(DEFAULT_TEXTURE_SIGMA),
            color_texture: vec![[F::zero(); 3]],
            alpha_texture: vec![F::one()],
        }
    }

    /// Sets the raw SH DC coefficient so the degree-0 term evaluates to `rgb`.
    pub fn set_base_color(&mut self, rgb: [F; 3]) {
        let inv_c0 = F::of(1.0 / SH_C0);
        self.sh[0] = [rgb[0] * inv_c0, rgb[1] * inv_c0, rgb[2] * inv_c0];
    }

    /// Resizes the SH coefficient list to `degree`, keeping existing bands.
    pub fn set_sh_degree(&mut self, degree: usize) {
        self.sh.resize(sh_coeff_count(degree), [F::zero(); 3]);
        self.sh_degree = degree;
    }

    /// Zero color texture and discretized-Gaussian alpha texture at size `t`.
    pub fn reset_textures(&mut self, t: usize, sigma: F) {
        self.texture_size = t;
        self.texture_sigma = sigma;
        self.color_texture = vec![[F::zero(); 3]; t * t];
        self.alpha_texture = gaussian_alpha_texture(t, sigma);
    }

    pub fn texel_count(&self) -> usize {
        self.texture_size * self.texture_size
    }

    /// Number of learnable scalars.
    pub fn param_count(&self) -> usize {
        3 + 4 + 2 + 1 + 3 * self.sh.len() + 4 * self.texel_count()
    }

    pub fn is_finite(&self) -> bool {
        self.center.is_finite()
            && self.rotation.iter().all(|v| v.is_finite())
            && self.scale.iter().all(|v| v.is_finite())
            && self.opacity.is_finite()
            && self.texture_sigma.is_finite()
            && self.sh.iter().flatten().all(|v| v.is_finite())
            && self.color_texture.iter().flatten().all(|v| v.is_finite())
            && self.alpha_texture.iter().all(|v| v.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::invalid("primitive has non-finite parameters"));
        }
        let n = quat_norm(self.rotation).as_f64();
        if (n - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("rotation norm {n} is not 1")));
        }
        if self.scale.iter().any(|s| *s <= F::zero()) {
            return Err(Error::invalid("scales must be positive"));
        }
        if self.opacity < F::zero() || self.opacity > F::one() {
            return Err(Error::invalid("opacity must lie in [0, 1]"));
        }
        let t = self.texture_size;
        if !t.is_power_of_two() || t > MAX_TEXTURE_SIZE {
            return Err(Error::invalid(format!("texture size {t} is not a power of two ≤ {MAX_TEXTURE_SIZE}")));
        }
        if self.texture_sigma <= F::zero() {
            return Err(Error::invalid("texture sigma must be positive"));
        }
        if self.sh.len() != sh_coeff_count(self.sh_degree) || self.sh_degree > 3 {
            return Err(Error::invalid("SH coefficient count does not match degree"));
        }
        if self.color_texture.len() != t * t || self.alpha_texture.len() != t * t {
            return Err(Error::invalid("texture buffers do not match texture size"));
        }
        if self.alpha_texture.iter().any(|a| *a < F::zero() || *a > F::one()) {
            return Err(Error::invalid("alpha texels must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn cast<G: Real>(&self) -> TexturedPrimitive<G> {
        TexturedPrimitive {
            center: self.center.cast(),
            rotation: self.rotation.map(cast),
            scale: self.scale.map(cast),
            opacity: cast(self.opacity),
            sh_degree: self.sh_degree,
            sh: self.sh.iter().map(|c| c.map(cast)).collect(),
            texture_size: self.texture_size,
            texture_sigma: cast(self.texture_sigma),
            color_texture: self.color_texture.iter().map(|c| c.map(cast)).collect(),
            alpha_texture: self.alpha_texture.iter().map(|&a| cast(a)).collect(),
        }
    }
}

/// Alpha texture whose texel `(i, j)` is the Gaussian at that texel's center.
pub fn gaussian_alpha_texture<F: Real>(t: usize, sigma: F) -> Vec<F> {
    let mut out = Vec::with_capacity(t * t);
    for iv in 0..t {
        for iu in 0..t {
            let u = texel_to_local(F::of(iu as f64), F::of(iv as f64), t, sigma);
            out.push(eval_gaussian(Vec2::new(u.x, u.y)));
        }
    }
    out
}

pub fn cast_primitives<A: Real, B: Real>(prims: &[TexturedPrimitive<A>]) -> Vec<TexturedPrimitive<B>> {
    prims.iter().map(|p| p.cast()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_primitive_is_valid() {
        let p = TexturedPrimitive::<f32>::plain([0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0], [1.0, 1.0], 0.5, [0.2; 3]);
        p.validate().unwrap();
        assert_eq!(p.param_count(), 17);
    }

    #[test]
    fn validation_catches_bad_fields() {
        let base = TexturedPrimitive::<f64>::plain([0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0], [1.0, 1.0], 0.5, [0.2; 3]);
        let mut p = base.clone();
        p.rotation = [2.0, 0.0, 0.0, 0.0];
        assert!(p.validate().is_err());
        let mut p = base.clone();
        p.scale = [0.0, 1.0];
        assert!(p.validate().is_err());
        let mut p = base.clone();
        p.reset_textures(3, 1.0);
        assert!(p.validate().is_err());
        let mut p = base.clone();
        p.opacity = f64::NAN;
        assert!(p.validate().is_err());
        let mut p = base;
        p.reset_textures(8, 1.0);
        p.validate().unwrap();
        assert_eq!(p.alpha_texture.len(), 64);
    }

    #[test]
    fn gaussian_alpha_is_symmetric() {
        let a = gaussian_alpha_texture::<f64>(4, 3.0);
        assert_eq!(a[0], a[3]);
        assert_eq!(a[0], a[15]);
        assert_eq!(a[5], a[10]);
        // texel 1 of 4 at σ=3 has local coordinate -0.75
        assert!((a[5] - (-0.75f64 * 0.75).exp()).abs() < 1e-15);
    }
}
