//! Projective texturing: paints a source image onto each primitive's texel
//! grid through the plane-to-pixel homography. Occlusion is ignored.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{build_splat_projection, intersect, Camera, SupportConfig};
use crate::image::ImageBuffer;
use crate::metrics::psnr_from_mse;
use crate::primitive::TexturedPrimitive;
use crate::raster::{render, RenderConfig};
use crate::real::Real;
use crate::sampler::{texel_to_local, TexelTaps};

/// Prior color texture of one primitive and the texels that received color.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedTexture<F = f32> {
    pub size: usize,
    pub prior: Vec<[F; 3]>,
    pub mask: Vec<bool>,
}

impl<F: Real> ProjectedTexture<F> {
    fn empty(t: usize) -> Self {
        Self { size: t, prior: vec![[F::zero(); 3]; t * t], mask: vec![false; t * t] }
    }

    pub fn coverage(&self) -> f64 {
        self.mask.iter().filter(|m| **m).count() as f64 / self.mask.len() as f64
    }
}

fn check_view<F: Real>(cam: &Camera, image: &ImageBuffer<F>, t: usize) -> Result<()> {
    cam.validate()?;
    if image.width != cam.width as usize || image.height != cam.height as usize {
        return Err(Error::invalid(format!(
            "image is {}×{}, camera expects {}×{}",
            image.width, image.height, cam.width, cam.height
        )));
    }
    if image.channels != 3 {
        return Err(Error::invalid("projection needs an RGB image"));
    }
    if t == 0 {
        return Err(Error::invalid("texture size must be at least 1"));
    }
    Ok(())
}

fn project_one<F: Real>(p: &TexturedPrimitive<F>, cam: &Camera, image: &ImageBuffer<F>, t: usize) -> ProjectedTexture<F> {
    let mut out = ProjectedTexture::empty(t);
    let sigma = p.texture_sigma;
    let proj = build_splat_projection(p, cam, &SupportConfig::new(sigma.as_f64()));
    if !proj.valid {
        return out;
    }
    let (xmax, ymax) = (F::of((image.width - 1) as f64), F::of((image.height - 1) as f64));
    let mut px = [F::zero(); 3];
    for iv in 0..t {
        for iu in 0..t {
            let u = texel_to_local(F::of(iu as f64), F::of(iv as f64), t, sigma);
            let Some(x) = proj.local_to_pixel(u) else { continue };
            if x.x < F::zero() || x.y < F::zero() || x.x > xmax || x.y > ymax {
                continue;
            }
            image.sample_bilinear(x.x, x.y, &mut px);
            out.prior[iv * t + iu] = px;
            out.mask[iv * t + iu] = true;
        }
    }
    out
}

/// Per-primitive `t×t` priors sampled bilinearly from `image` at the pixel
/// positions of the texel centers.
pub fn project_textures<F: Real>(
    prims: &[TexturedPrimitive<F>],
    cam: &Camera,
    image: &ImageBuffer<F>,
    t: usize,
) -> Result<Vec<ProjectedTexture<F>>> {
    check_view(cam, image, t)?;
    Ok(prims.par_iter().map(|p| project_one(p, cam, image, t)).collect())
}

/// Mask-weighted mean of the single-view priors over all views.
pub fn project_textures_multi<F: Real>(
    prims: &[TexturedPrimitive<F>],
    views: &[(Camera, ImageBuffer<F>)],
    t: usize,
) -> Result<Vec<ProjectedTexture<F>>> {
    if views.is_empty() {
        return Err(Error::invalid("at least one view is required"));
    }
    for (cam, img) in views {
        check_view(cam, img, t)?;
    }
    Ok(prims
        .par_iter()
        .map(|p| {
            let mut sum = vec![[F::zero(); 3]; t * t];
            let mut count = vec![0usize; t * t];
            for (cam, img) in views {
                let one = project_one(p, cam, img, t);
                for i in 0..t * t {
                    if one.mask[i] {
                        for ch in 0..3 {
                            sum[i][ch] += one.prior[i][ch];
                        }
                        count[i] += 1;
                    }
                }
            }
            let mut out = ProjectedTexture::empty(t);
            for i in 0..t * t {
                if count[i] > 0 {
                    let n = F::of(count[i] as f64);
                    out.prior[i] = sum[i].map(|v| v / n);
                    out.mask[i] = true;
                }
            }
            out
        })
        .collect())
}

/// Resets each primitive's textures to size `t` and stores `prior − base` in
/// the covered color texels. With `rebase` the SH DC term is first set to
/// the mean covered prior so the texture holds only the residual detail.
pub fn apply_priors<F: Real>(prims: &mut [TexturedPrimitive<F>], priors: &[ProjectedTexture<F>], rebase: bool) -> Result<()> {
    if prims.len() != priors.len() {
        return Err(Error::invalid(format!("{} primitives but {} priors", prims.len(), priors.len())));
    }
    for (p, prior) in prims.iter_mut().zip(priors) {
        p.reset_textures(prior.size, p.texture_sigma);
        let covered: Vec<&[F; 3]> = prior.prior.iter().zip(&prior.mask).filter(|(_, &m)| m).map(|(c, _)| c).collect();
        if covered.is_empty() {
            continue;
        }
        if rebase {
            let mut sum = [0.0f64; 3];
            for c in &covered {
                for ch in 0..3 {
                    sum[ch] += c[ch].as_f64();
                }
            }
            p.set_base_color(sum.map(|s| F::of(s / covered.len() as f64)));
        }
        let c0 = F::of(crate::sh::SH_C0);
        let base = p.sh[0].map(|v| v * c0);
        for ((tex, c), &m) in p.color_texture.iter_mut().zip(&prior.prior).zip(&prior.mask) {
            if m {
                *tex = [c[0] - base[0], c[1] - base[1], c[2] - base[2]];
            }
        }
    }
    Ok(())
}

fn taps_covered(taps: &TexelTaps<impl Real>, mask: &[bool]) -> bool {
    taps.index.iter().all(|&i| mask[i])
}

/// Projects `image` onto a single opaque primitive, renders it back from the
/// same camera and returns the PSNR over pixels inside the support whose
/// texel taps are all covered by the mask.
pub fn project_and_render_roundtrip<F: Real>(
    prim: &TexturedPrimitive<F>,
    cam: &Camera,
    image: &ImageBuffer<F>,
    t: usize,
) -> Result<f64> {
    let prior = project_textures(std::slice::from_ref(prim), cam, image, t)?.remove(0);
    let mut p = prim.clone();
    p.opacity = F::one();
    p.texture_size = t;
    p.color_texture.clone_from(&prior.prior);
    p.alpha_texture = vec![F::one(); t * t];
    p.sh.iter_mut().for_each(|c| *c = [F::zero(); 3]);
    let cfg = RenderConfig { sh_degree: 0, ..RenderConfig::textured() };
    let out = render(std::slice::from_ref(&p), cam, &cfg)?;

    let proj = build_splat_projection(&p, cam, &SupportConfig::new(p.texture_sigma.as_f64()));
    if !proj.valid {
        return Err(Error::invalid("primitive does not project into the camera"));
    }
    let sigma = p.texture_sigma;
    let (mut sum, mut n) = (0.0, 0usize);
    for y in 0..image.height {
        for x in 0..image.width {
            let Some((u, _)) = intersect(&proj, F::of(x as f64), F::of(y as f64)) else { continue };
            if u.norm_inf() > sigma {
                continue;
            }
            let taps = crate::sampler::bilinear_sample_grad(&p.alpha_texture, t, u, sigma).taps;
            if !taps_covered(&taps, &prior.mask) {
                continue;
            }
            for ch in 0..3 {
                let d = out.color.pixel(x, y)[ch].as_f64() - image.pixel(x, y)[ch].as_f64();
                sum += d * d;
            }
            n += 3;
        }
    }
    if n == 0 {
        return Err(Error::invalid("no covered pixels inside the primitive support"));
    }
    Ok(psnr_from_mse(sum / n as f64))
}
