//! Brute-force renderer used as an oracle: every pixel visits every primitive,
//! no tiles, no screen-bounds culling, no early termination, f64 throughout.
//! The alpha threshold and support rules are part of the image definition and
//! are applied exactly as in the tiled renderer.

use crate::error::Result;
use crate::geometry::{build_splat_projection, eval_gaussian, intersect, Camera, SupportConfig};
use crate::image::{ColorSpace, ImageBuffer};
use crate::primitive::TexturedPrimitive;
use crate::raster::{RenderConfig, RenderMode, RenderOutput};
use crate::real::Real;
use crate::sampler::bilinear_sample;
use crate::sh::eval_sh_unchecked;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReferenceOptions {
    /// Sort contributions per pixel by intersection depth instead of by
    /// primitive center depth.
    pub per_pixel_sort: bool,
}

pub fn render_reference<F: Real>(prims: &[TexturedPrimitive<F>], cam: &Camera, cfg: &RenderConfig) -> Result<RenderOutput<f64>> {
    render_reference_with(prims, cam, cfg, ReferenceOptions::default())
}

pub fn render_reference_with<F: Real>(
    prims: &[TexturedPrimitive<F>],
    cam: &Camera,
    cfg: &RenderConfig,
    opts: ReferenceOptions,
) -> Result<RenderOutput<f64>> {
    cfg.validate()?;
    cam.validate()?;
    let mut skipped = 0;
    let mut views = Vec::new();
    for (i, p) in prims.iter().enumerate() {
        if !p.is_finite() {
            skipped += 1;
            continue;
        }
        let p = p.cast::<f64>();
        let support = SupportConfig::new(cfg.support_half_extent(&p));
        let proj = build_splat_projection(&p, cam, &support);
        if !proj.valid {
            continue;
        }
        let dir = (p.center - cam.center::<f64>()).normalized();
        let color = eval_sh_unchecked(&p.sh, dir, cfg.sh_degree.min(p.sh_degree));
        views.push((i, p, proj, color));
    }
    views.sort_by(|a, b| a.2.center_depth.partial_cmp(&b.2.center_depth).unwrap().then(a.0.cmp(&b.0)));

    let (w, h) = (cam.width as usize, cam.height as usize);
    let mut color = ImageBuffer::<f64>::new(w, h, 3).with_color_space(ColorSpace::Linear);
    let mut trans_img = ImageBuffer::<f64>::new(w, h, 1);
    let mut counts = vec![0u32; w * h];
    let mut hits: Vec<(f64, f64, [f64; 3])> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            hits.clear();
            for (_, p, proj, base) in &views {
                let Some((u, depth)) = intersect(proj, x as f64, y as f64) else { continue };
                let (falloff, c) = match cfg.mode {
                    RenderMode::Plain2dgs => {
                        if (u.x * u.x + u.y * u.y).sqrt() > cfg.gaussian_cutoff {
                            continue;
                        }
                        (eval_gaussian(u), *base)
                    }
                    RenderMode::Textured => {
                        let s = p.texture_sigma;
                        if u.x.abs() > s || u.y.abs() > s {
                            continue;
                        }
                        let a = bilinear_sample(&p.alpha_texture, p.texture_size, u, s);
                        let t: [f64; 3] = bilinear_sample(&p.color_texture, p.texture_size, u, s);
                        (a, [t[0] + base[0], t[1] + base[1], t[2] + base[2]])
                    }
                };
                let alpha = p.opacity * falloff;
                if alpha < cfg.alpha_min {
                    continue;
                }
                hits.push((depth, alpha, c));
            }
            if opts.per_pixel_sort {
                hits.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            }
            let mut trans = 1.0;
            let mut acc = [0.0; 3];
            for (_, alpha, c) in &hits {
                for ch in 0..3 {
                    acc[ch] += alpha * trans * c[ch];
                }
                trans *= 1.0 - alpha;
            }
            let px = color.pixel_mut(x, y);
            for ch in 0..3 {
                px[ch] = acc[ch] + trans * cfg.background[ch];
            }
            trans_img.pixel_mut(x, y)[0] = trans;
            counts[y * w + x] = hits.len() as u32;
        }
    }
    Ok(RenderOutput { color, final_transmittance: trans_img, contrib_count: counts, skipped_nonfinite: skipped })
}

/// Relative margin used by [`threshold_ambiguity`] for f32 comparisons.
pub const AMBIGUITY_MARGIN: f64 = 1e-4;

/// Marks pixels where some primitive sits within relative `margin` of a hard
/// decision: the support boundary or the alpha threshold. Lower-precision
/// renders may legitimately resolve such a decision either way.
pub fn threshold_ambiguity<F: Real>(
    prims: &[TexturedPrimitive<F>],
    cam: &Camera,
    cfg: &RenderConfig,
    margin: f64,
) -> Result<Vec<bool>> {
    cfg.validate()?;
    cam.validate()?;
    let views: Vec<_> = prims
        .iter()
        .filter(|p| p.is_finite())
        .map(|p| p.cast::<f64>())
        .filter_map(|p| {
            let support = SupportConfig::new(cfg.support_half_extent(&p) * (1.0 + margin));
            let proj = build_splat_projection(&p, cam, &support);
            proj.valid.then_some((p, proj))
        })
        .collect();
    let near = |v: f64, edge: f64| (v - edge).abs() <= margin * edge;
    let (w, h) = (cam.width as usize, cam.height as usize);
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = views.iter().any(|(p, proj)| {
                let Some((u, _)) = intersect(proj, x as f64, y as f64) else { return false };
                let (radius, edge, falloff) = match cfg.mode {
                    RenderMode::Plain2dgs => (u.x.hypot(u.y), cfg.gaussian_cutoff, eval_gaussian(u)),
                    RenderMode::Textured => {
                        let s = p.texture_sigma;
                        (u.x.abs().max(u.y.abs()), s, bilinear_sample(&p.alpha_texture, p.texture_size, u, s))
                    }
                };
                if radius > edge * (1.0 + margin) {
                    return false;
                }
                near(radius, edge) || near(p.opacity * falloff, cfg.alpha_min)
            });
        }
    }
    Ok(out)
}
