//! Forward rendering of textured 2D Gaussian splats.
//!
//! Each view is preprocessed once: every primitive gets its homography pair,
//! depth and screen bounds, the valid ones are sorted by center depth (ties
//! broken by index) and binned into square tiles. Tiles are then composited
//! independently, front to back:
//!
//! ```text
//! C = Σᵢ aᵢ·cᵢ·Π_{j<i}(1 − aⱼ) + Π_j(1 − aⱼ)·background
//! ```
//!
//! In plain mode `aᵢ = oᵢ·G(u)` on the disk `‖u‖₂ ≤ cutoff` and `cᵢ` is the SH
//! color. In textured mode `aᵢ = oᵢ·Tᵅ[u]` and `cᵢ = Tᶜ[u] + SH` on the
//! square `‖u‖_∞ ≤ σ`.

mod reference;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_splat_projection, eval_gaussian, intersect, Camera, SplatProjection, SupportConfig};
use crate::image::ImageBuffer;
use crate::linalg::{Vec2, Vec3};
use crate::primitive::TexturedPrimitive;
use crate::real::Real;
use crate::sampler::bilinear_sample;
use crate::sh::eval_sh_unchecked;

pub use crate::image::upsample_bilinear;
pub use reference::{render_reference, render_reference_with, threshold_ambiguity, ReferenceOptions, AMBIGUITY_MARGIN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    Plain2dgs,
    Textured,
}

impl std::str::FromStr for RenderMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain2dgs" | "plain" => Ok(Self::Plain2dgs),
            "textured" => Ok(Self::Textured),
            other => Err(Error::invalid(format!("unknown render mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub mode: RenderMode,
    /// Plain-mode support radius in local units.
    pub gaussian_cutoff: f64,
    /// Contributions with smaller alpha are skipped.
    pub alpha_min: f64,
    /// Compositing stops once transmittance drops below this.
    pub transmittance_min: f64,
    pub tile_size: usize,
    pub sh_degree: usize,
    pub background: [f64; 3],
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            mode: RenderMode::Textured,
            gaussian_cutoff: 3.0,
            alpha_min: 1.0 / 255.0,
            transmittance_min: 1e-4,
            tile_size: 16,
            sh_degree: 1,
            background: [0.0; 3],
        }
    }
}

impl RenderConfig {
    pub fn plain() -> Self {
        Self { mode: RenderMode::Plain2dgs, ..Self::default() }
    }

    pub fn textured() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gaussian_cutoff > 0.0) {
            return Err(Error::invalid("gaussian_cutoff must be positive"));
        }
        if !(self.alpha_min > 0.0 && self.alpha_min < 1.0) {
            return Err(Error::invalid("alpha_min must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.transmittance_min) {
            return Err(Error::invalid("transmittance_min must lie in [0, 1)"));
        }
        if self.tile_size == 0 {
            return Err(Error::invalid("tile_size must be at least 1"));
        }
        if self.sh_degree > crate::sh::MAX_SH_DEGREE {
            return Err(Error::invalid("sh_degree must be at most 3"));
        }
        Ok(())
    }

    /// Half-width of the local square bounding a primitive's support.
    pub fn support_half_extent<F: Real>(&self, p: &TexturedPrimitive<F>) -> f64 {
        match self.mode {
            RenderMode::Plain2dgs => self.gaussian_cutoff,
            RenderMode::Textured => p.texture_sigma.as_f64(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderOutput<F = f32> {
    /// Linear RGB, unclamped.
    pub color: ImageBuffer<F>,
    pub final_transmittance: ImageBuffer<F>,
    pub contrib_count: Vec<u32>,
    /// Primitives skipped because a parameter was NaN or infinite.
    pub skipped_nonfinite: usize,
}

/// A valid primitive prepared for one view.
#[derive(Clone, Debug)]
pub(crate) struct Prepared<F> {
    pub index: usize,
    pub proj: SplatProjection<F>,
    pub base_color: [F; 3],
    /// Unit direction from the camera center to the primitive center.
    pub dir: Vec3<F>,
    /// Distance from the camera center to the primitive center.
    pub dist: F,
    pub sh_degree: usize,
}

pub(crate) struct ViewSetup<F> {
    pub prepared: Vec<Prepared<F>>,
    pub tiles: Vec<Vec<u32>>,
    pub tiles_x: usize,
    pub tiles_y: usize,
    pub tile_size: usize,
    pub skipped_nonfinite: usize,
}

/// Scalar render thresholds converted once to `F`.
#[derive(Clone, Copy)]
pub(crate) struct Thresholds<F> {
    pub mode: RenderMode,
    pub cutoff_sq: F,
    pub alpha_min: F,
    pub transmittance_min: F,
    pub background: [F; 3],
}

impl<F: Real> Thresholds<F> {
    pub fn new(cfg: &RenderConfig) -> Self {
        Self {
            mode: cfg.mode,
            cutoff_sq: F::of(cfg.gaussian_cutoff * cfg.gaussian_cutoff),
            alpha_min: F::of(cfg.alpha_min),
            transmittance_min: F::of(cfg.transmittance_min),
            background: cfg.background.map(F::of),
        }
    }
}

/// One primitive's contribution at one pixel.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Sample<F> {
    pub u: Vec2<F>,
    /// View depth of the intersection, `1/w`.
    pub depth: F,
    /// `G(u)` in plain mode, `Tᵅ[u]` in textured mode.
    pub falloff: F,
    pub alpha: F,
    pub color: [F; 3],
}

pub(crate) fn prepare<F: Real>(p: &TexturedPrimitive<F>, index: usize, cam: &Camera, cfg: &RenderConfig) -> Option<Prepared<F>> {
    let support = SupportConfig::new(cfg.support_half_extent(p));
    let proj = build_splat_projection(p, cam, &support);
    if !proj.valid || proj.screen_bbox.is_empty() {
        return None;
    }
    let offset = p.center - cam.center::<F>();
    let dist = offset.norm();
    let dir = offset.scale(F::one() / dist);
    let sh_degree = cfg.sh_degree.min(p.sh_degree);
    let base_color = eval_sh_unchecked(&p.sh, dir, sh_degree);
    Some(Prepared { index, proj, base_color, dir, dist, sh_degree })
}

pub(crate) fn setup_view<F: Real>(prims: &[TexturedPrimitive<F>], cam: &Camera, cfg: &RenderConfig) -> ViewSetup<F> {
    let finite: Vec<bool> = prims.par_iter().map(|p| p.is_finite()).collect();
    let skipped_nonfinite = finite.iter().filter(|f| !**f).count();
    let mut prepared: Vec<Prepared<F>> = prims
        .par_iter()
        .enumerate()
        .filter(|(i, _)| finite[*i])
        .filter_map(|(i, p)| prepare(p, i, cam, cfg))
        .collect();
    // Stable: equal depths keep index order.
    prepared.sort_by(|a, b| a.proj.center_depth.partial_cmp(&b.proj.center_depth).unwrap_or(std::cmp::Ordering::Equal));

    let ts = cfg.tile_size;
    let tiles_x = (cam.width as usize).div_ceil(ts);
    let tiles_y = (cam.height as usize).div_ceil(ts);
    let mut tiles = vec![Vec::new(); tiles_x * tiles_y];
    for (k, p) in prepared.iter().enumerate() {
        let b = p.proj.screen_bbox;
        let (tx0, tx1) = (b.x0 as usize / ts, (b.x1 as usize - 1) / ts);
        let (ty0, ty1) = (b.y0 as usize / ts, (b.y1 as usize - 1) / ts);
        for ty in ty0..=ty1 {
            for tx in tx0..=tx1 {
                tiles[ty * tiles_x + tx].push(k as u32);
            }
        }
    }
    ViewSetup { prepared, tiles, tiles_x, tiles_y, tile_size: ts, skipped_nonfinite }
}

/// Contribution of one primitive at pixel `(x, y)`, if any.
#[inline]
pub(crate) fn sample_at<F: Real>(
    prep: &Prepared<F>,
    p: &TexturedPrimitive<F>,
    x: F,
    y: F,
    th: &Thresholds<F>,
) -> Option<Sample<F>> {
    let (u, depth) = intersect(&prep.proj, x, y)?;
    let (falloff, color) = match th.mode {
        RenderMode::Plain2dgs => {
            if u.norm_sq() > th.cutoff_sq {
                return None;
            }
            (eval_gaussian(u), prep.base_color)
        }
        RenderMode::Textured => {
            let sigma = p.texture_sigma;
            if u.norm_inf() > sigma {
                return None;
            }
            let t = p.texture_size;
            let a = bilinear_sample(&p.alpha_texture, t, u, sigma);
            let c: [F; 3] = bilinear_sample(&p.color_texture, t, u, sigma);
            let b = prep.base_color;
            (a, [c[0] + b[0], c[1] + b[1], c[2] + b[2]])
        }
    };
    let alpha = p.opacity * falloff;
    if alpha < th.alpha_min {
        return None;
    }
    Some(Sample { u, depth, falloff, alpha, color })
}

struct TileResult<F> {
    color: Vec<F>,
    transmittance: Vec<F>,
    count: Vec<u32>,
}

fn tile_rect(setup: &ViewSetup<impl Real>, tile: usize, cam: &Camera) -> (usize, usize, usize, usize) {
    let ts = setup.tile_size;
    let (tx, ty) = (tile % setup.tiles_x, tile / setup.tiles_x);
    let x0 = tx * ts;
    let y0 = ty * ts;
    (x0, y0, (x0 + ts).min(cam.width as usize), (y0 + ts).min(cam.height as usize))
}

/// Renders `prims` from `cam`.
pub fn render<F: Real>(prims: &[TexturedPrimitive<F>], cam: &Camera, cfg: &RenderConfig) -> Result<RenderOutput<F>> {
    cfg.validate()?;
    cam.validate()?;
    let setup = setup_view(prims, cam, cfg);
    let th = Thresholds::<F>::new(cfg);

    let tiles: Vec<TileResult<F>> = (0..setup.tiles.len())
        .into_par_iter()
        .map(|tile| {
            let (x0, y0, x1, y1) = tile_rect(&setup, tile, cam);
            let n = (x1 - x0) * (y1 - y0);
            let mut out = TileResult { color: vec![F::zero(); n * 3], transmittance: vec![F::one(); n], count: vec![0; n] };
            let list = &setup.tiles[tile];
            for y in y0..y1 {
                for x in x0..x1 {
                    let li = (y - y0) * (x1 - x0) + (x - x0);
                    let (xf, yf) = (F::of(x as f64), F::of(y as f64));
                    let mut trans = F::one();
                    let mut acc = [F::zero(); 3];
                    let mut count = 0u32;
                    for &k in list {
                        let prep = &setup.prepared[k as usize];
                        let Some(s) = sample_at(prep, &prims[prep.index], xf, yf, &th) else { continue };
                        let w = s.alpha * trans;
                        for c in 0..3 {
                            acc[c] += w * s.color[c];
                        }
                        trans *= F::one() - s.alpha;
                        count += 1;
                        if trans < th.transmittance_min {
                            break;
                        }
                    }
                    for c in 0..3 {
                        out.color[li * 3 + c] = acc[c] + trans * th.background[c];
                    }
                    out.transmittance[li] = trans;
                    out.count[li] = count;
                }
            }
            out
        })
        .collect();

    let (w, h) = (cam.width as usize, cam.height as usize);
    let mut color = ImageBuffer::new(w, h, 3).with_color_space(crate::image::ColorSpace::Linear);
    let mut final_transmittance = ImageBuffer::new(w, h, 1);
    let mut contrib_count = vec![0u32; w * h];
    for (tile, res) in tiles.iter().enumerate() {
        let (x0, y0, x1, y1) = tile_rect(&setup, tile, cam);
        let tw = x1 - x0;
        for y in y0..y1 {
            let src = (y - y0) * tw;
            let dst = y * w + x0;
            color.data[dst * 3..(dst + tw) * 3].copy_from_slice(&res.color[src * 3..(src + tw) * 3]);
            final_transmittance.data[dst..dst + tw].copy_from_slice(&res.transmittance[src..src + tw]);
            contrib_count[dst..dst + tw].copy_from_slice(&res.count[src..src + tw]);
        }
    }
    Ok(RenderOutput { color, final_transmittance, contrib_count, skipped_nonfinite: setup.skipped_nonfinite })
}
