//! Per-scene fitting: photometric losses, Adam with per-group learning rates,
//! the fit loop and a projective-texture initialization.
//!
//! Scales are updated in log space, so their learning rate is relative. After
//! every step quaternions are renormalized, opacities and alpha texels are
//! clamped to `[0, 1]` and scales are floored at [`MIN_SCALE`].

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{matrix_to_quat, Camera};
use crate::grad::{param_mut, render_backward, GradientSet, ParamGroup};
use crate::image::ImageBuffer;
use crate::linalg::Vec3;
use crate::metrics::{psnr, ssim, ssim_with_grad, SSIM_WINDOW};
use crate::primitive::TexturedPrimitive;
use crate::project::{apply_priors, project_textures_multi};
use crate::raster::{render, RenderConfig, RenderMode};
use crate::real::Real;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-15;
pub const MIN_SCALE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `(1 − λ)·L1 + λ·(1 − SSIM)/2`
    L1Dssim,
    Mse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Plain 2DGS rendering; textures are neither used nor updated.
    GeometryPretrain,
    /// Textured rendering with every group trainable.
    JointTexture,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextureInit {
    /// Zero color textures and discretized-Gaussian alpha textures.
    Reset,
    /// Start from the textures carried by the initial primitives.
    Keep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningRates {
    pub center: f64,
    pub rotation: f64,
    /// Relative (log-space) rate.
    pub scale: f64,
    pub opacity: f64,
    pub sh: f64,
    pub color_texture: f64,
    pub alpha_texture: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        Self {
            center: 1.6e-4,
            rotation: 1e-3,
            scale: 5e-3,
            opacity: 5e-2,
            sh: 2.5e-3,
            color_texture: 2.5e-2,
            alpha_texture: 2.5e-2,
        }
    }
}

impl LearningRates {
    pub fn get(&self, group: ParamGroup) -> f64 {
        match group {
            ParamGroup::Center => self.center,
            ParamGroup::Rotation => self.rotation,
            ParamGroup::Scale => self.scale,
            ParamGroup::Opacity => self.opacity,
            ParamGroup::Sh => self.sh,
            ParamGroup::ColorTexture => self.color_texture,
            ParamGroup::AlphaTexture => self.alpha_texture,
        }
    }

    fn get_mut(&mut self, group: ParamGroup) -> &mut f64 {
        match group {
            ParamGroup::Center => &mut self.center,
            ParamGroup::Rotation => &mut self.rotation,
            ParamGroup::Scale => &mut self.scale,
            ParamGroup::Opacity => &mut self.opacity,
            ParamGroup::Sh => &mut self.sh,
            ParamGroup::ColorTexture => &mut self.color_texture,
            ParamGroup::AlphaTexture => &mut self.alpha_texture,
        }
    }

    fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        for g in ParamGroup::ALL {
            *out.get_mut(g) *= k;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub iterations: usize,
    pub loss: LossKind,
    pub lambda_dssim: f64,
    pub lr: LearningRates,
    /// Multiplies the center, rotation, scale and opacity rates. Defaults to
    /// 0.1 in the joint texture stage and 1.0 otherwise.
    pub geometry_lr_multiplier: Option<f64>,
    pub stage: Stage,
    /// Recorded with the report; full-batch fitting draws no random numbers.
    pub seed: u64,
    pub eval_every: usize,
    /// Texture size used when `texture_init` is `reset`.
    pub texture_size: usize,
    pub texture_sigma: f64,
    pub texture_init: TextureInit,
    /// All rates decay exponentially to this fraction by the last iteration.
    pub lr_final_ratio: f64,
    /// Center rate multiplier; defaults to the mean distance from the first
    /// camera to the primitives.
    pub center_lr_scale: Option<f64>,
    pub sh_degree: usize,
    pub background: [f64; 3],
    /// Writes an `LGSP` checkpoint at every evaluation when set.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            loss: LossKind::L1Dssim,
            lambda_dssim: 0.2,
            lr: LearningRates::default(),
            geometry_lr_multiplier: None,
            stage: Stage::JointTexture,
            seed: 0,
            eval_every: 100,
            texture_size: 16,
            texture_sigma: 1.0,
            texture_init: TextureInit::Reset,
            lr_final_ratio: 0.1,
            center_lr_scale: None,
            sh_degree: 1,
            background: [0.0; 3],
            checkpoint_dir: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda_dssim) {
            return Err(Error::invalid("lambda_dssim must lie in [0, 1]"));
        }
        for g in ParamGroup::ALL {
            let v = self.lr.get(g);
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("learning rate for {} must be finite and ≥ 0", g.name())));
            }
        }
        if !(self.geometry_multiplier() >= 0.0 && self.geometry_multiplier().is_finite()) {
            return Err(Error::invalid("geometry_lr_multiplier must be ≥ 0"));
        }
        if !(self.lr_final_ratio > 0.0 && self.lr_final_ratio <= 1.0) {
            return Err(Error::invalid("lr_final_ratio must lie in (0, 1]"));
        }
        if self.eval_every == 0 {
            return Err(Error::invalid("eval_every must be at least 1"));
        }
        if self.texture_size == 0 || !self.texture_size.is_power_of_two() {
            return Err(Error::invalid("texture_size must be a power of two"));
        }
        if !(self.texture_sigma > 0.0) {
            return Err(Error::invalid("texture_sigma must be positive"));
        }
        self.render_config().validate()
    }

    pub fn geometry_multiplier(&self) -> f64 {
        self.geometry_lr_multiplier.unwrap_or(match self.stage {
            Stage::GeometryPretrain => 1.0,
            Stage::JointTexture => 0.1,
        })
    }

    pub fn mode(&self) -> RenderMode {
        match self.stage {
            Stage::GeometryPretrain => RenderMode::Plain2dgs,
            Stage::JointTexture => RenderMode::Textured,
        }
    }

    pub fn render_config(&self) -> RenderConfig {
        RenderConfig { mode: self.mode(), sh_degree: self.sh_degree, background: self.background, ..RenderConfig::default() }
    }

    fn trained_groups(&self) -> Vec<ParamGroup> {
        let mut groups = vec![ParamGroup::Center, ParamGroup::Rotation, ParamGroup::Scale, ParamGroup::Opacity, ParamGroup::Sh];
        if self.stage == Stage::JointTexture {
            groups.extend([ParamGroup::ColorTexture, ParamGroup::AlphaTexture]);
        }
        groups
    }
}

/// Loss of `render` against `target` and its gradient with respect to the
/// rendered values.
pub fn loss_and_grad<F: Real>(render: &ImageBuffer<F>, target: &ImageBuffer<F>, cfg: &FitConfig) -> Result<(f64, ImageBuffer<F>)> {
    if !render.same_shape(target) {
        return Err(Error::invalid(format!(
            "render is {}×{}×{}, target is {}×{}×{}",
            render.width, render.height, render.channels, target.width, target.height, target.channels
        )));
    }
    let n = render.data.len() as f64;
    let mut grad = ImageBuffer::new(render.width, render.height, render.channels);
    match cfg.loss {
        LossKind::Mse => {
            let mut sum = 0.0;
            for ((g, &r), &t) in grad.data.iter_mut().zip(&render.data).zip(&target.data) {
                let d = r.as_f64() - t.as_f64();
                sum += d * d;
                *g = F::of(2.0 * d / n);
            }
            Ok((sum / n, grad))
        }
        LossKind::L1Dssim => {
            let lambda = cfg.lambda_dssim;
            let mut l1 = 0.0;
            for ((g, &r), &t) in grad.data.iter_mut().zip(&render.data).zip(&target.data) {
                let d = r.as_f64() - t.as_f64();
                l1 += d.abs();
                let sign = if d > 0.0 { 1.0 } else if d < 0.0 { -1.0 } else { 0.0 };
                *g = F::of((1.0 - lambda) * sign / n);
            }
            let mut loss = (1.0 - lambda) * l1 / n;
            if lambda > 0.0 {
                let (s, ds) = ssim_with_grad(render, target)?;
                loss += lambda * (1.0 - s) / 2.0;
                for (g, d) in grad.data.iter_mut().zip(&ds.data) {
                    *g -= F::of(lambda / 2.0) * *d;
                }
            }
            Ok((loss, grad))
        }
    }
}

/// Adam moments, shaped like the primitives.
#[derive(Clone, Debug)]
pub struct AdamState<F = f32> {
    pub m: GradientSet<F>,
    pub v: GradientSet<F>,
    /// Steps taken so far.
    pub step: usize,
}

impl<F: Real> AdamState<F> {
    pub fn new(prims: &[TexturedPrimitive<F>]) -> Self {
        Self { m: GradientSet::zeros_like(prims), v: GradientSet::zeros_like(prims), step: 0 }
    }
}

/// One Adam step on `groups`. Groups with a zero rate are skipped entirely,
/// leaving their parameters and moments untouched.
pub fn adam_step<F: Real>(
    prims: &mut [TexturedPrimitive<F>],
    grads: &GradientSet<F>,
    state: &mut AdamState<F>,
    lr: &LearningRates,
    groups: &[ParamGroup],
) {
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (F::of(ADAM_BETA1), F::of(ADAM_BETA2));
    let bc1 = F::of(1.0 - ADAM_BETA1.powi(t));
    let bc2 = F::of(1.0 - ADAM_BETA2.powi(t));
    let eps = F::of(ADAM_EPSILON);
    let one = F::one();
    for (i, p) in prims.iter_mut().enumerate() {
        let (g, m, v) = (&grads.prims[i], &mut state.m.prims[i], &mut state.v.prims[i]);
        for &group in groups {
            let rate = lr.get(group);
            if rate == 0.0 {
                continue;
            }
            let rate = F::of(rate);
            let mut changed = false;
            for k in 0..group.len(p) {
                let mut gk = g.get(group, k);
                let param = param_mut(p, group, k);
                if group == ParamGroup::Scale {
                    gk *= *param;
                }
                let mk = m.get_mut(group, k);
                *mk = b1 * *mk + (one - b1) * gk;
                let vk = v.get_mut(group, k);
                *vk = b2 * *vk + (one - b2) * gk * gk;
                let step = rate * (m.get(group, k) / bc1) / ((v.get(group, k) / bc2).sqrt() + eps);
                if step == F::zero() {
                    continue;
                }
                changed = true;
                match group {
                    ParamGroup::Scale => *param = (*param * (-step).exp()).max(F::of(MIN_SCALE)),
                    ParamGroup::Opacity | ParamGroup::AlphaTexture => *param = (*param - step).max(F::zero()).min(one),
                    _ => *param -= step,
                }
            }
            if group == ParamGroup::Rotation && changed {
                p.rotation = crate::geometry::normalize_quat(p.rotation);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub iteration: usize,
    pub loss: f64,
    pub psnr: f64,
    /// Absent for views smaller than the SSIM window.
    pub ssim: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub records: Vec<EvalRecord>,
    pub primitive_count: usize,
    pub param_count: usize,
    pub seed: u64,
}

impl FitReport {
    pub fn initial(&self) -> &EvalRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &EvalRecord {
        self.records.last().unwrap()
    }
}

/// PSNR and SSIM of a render clamped to `[0, 1]`.
pub fn evaluate<F: Real>(render: &ImageBuffer<F>, target: &ImageBuffer<F>) -> Result<(f64, Option<f64>)> {
    let r = render.clamped();
    let p = psnr(&r, target)?;
    let s = if r.width >= SSIM_WINDOW && r.height >= SSIM_WINDOW { Some(ssim(&r, target)?) } else { None };
    Ok((p, s))
}

fn first_nonfinite(prims: &[TexturedPrimitive<f32>]) -> Option<String> {
    let (i, p) = prims.iter().enumerate().find(|(_, p)| !p.is_finite())?;
    let mut q = p.clone();
    for group in ParamGroup::ALL {
        for k in 0..group.len(p) {
            if !param_mut(&mut q, group, k).is_finite() {
                return Some(format!("primitive {i} {}[{k}]", group.name()));
            }
        }
    }
    Some(format!("primitive {i}"))
}

fn first_nonfinite_grad(grads: &GradientSet<f32>, prims: &[TexturedPrimitive<f32>]) -> Option<String> {
    for (i, g) in grads.prims.iter().enumerate().filter(|(_, g)| !g.is_finite()) {
        for group in ParamGroup::ALL {
            for k in 0..group.len(&prims[i]) {
                if !g.get(group, k).is_finite() {
                    return Some(format!("gradient of primitive {i} {}[{k}]", group.name()));
                }
            }
        }
    }
    None
}

/// Mean distance from the first camera center to the primitive centers.
pub fn scene_extent(prims: &[TexturedPrimitive<f32>], cam: &Camera) -> f64 {
    if prims.is_empty() {
        return 1.0;
    }
    let c = cam.center::<f64>();
    prims.iter().map(|p| (p.center.cast::<f64>() - c).norm()).sum::<f64>() / prims.len() as f64
}

/// Fits `init` to the posed images with full-batch gradients over all views.
pub fn fit(
    views: &[(Camera, ImageBuffer<f32>)],
    init: Vec<TexturedPrimitive<f32>>,
    cfg: &FitConfig,
) -> Result<(Vec<TexturedPrimitive<f32>>, FitReport)> {
    cfg.validate()?;
    if views.is_empty() {
        return Err(Error::invalid("fitting needs at least one view"));
    }
    for (cam, img) in views {
        cam.validate()?;
        if img.width != cam.width as usize || img.height != cam.height as usize || img.channels != 3 {
            return Err(Error::invalid("view image does not match its camera"));
        }
    }
    let mut prims = init;
    for (i, p) in prims.iter_mut().enumerate() {
        p.validate().map_err(|e| Error::invalid(format!("initial primitive {i}: {e}")))?;
        p.set_sh_degree(p.sh_degree.max(cfg.sh_degree));
        if cfg.stage == Stage::JointTexture && cfg.texture_init == TextureInit::Reset {
            p.reset_textures(cfg.texture_size, cfg.texture_sigma as f32);
        }
    }
    if let Some(dir) = &cfg.checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let rcfg = cfg.render_config();
    let groups = cfg.trained_groups();
    let mut base_lr = cfg.lr.clone();
    base_lr.center *= cfg.center_lr_scale.unwrap_or_else(|| scene_extent(&prims, &views[0].0));
    for g in [ParamGroup::Center, ParamGroup::Rotation, ParamGroup::Scale, ParamGroup::Opacity] {
        *base_lr.get_mut(g) *= cfg.geometry_multiplier();
    }
    let mut state = AdamState::new(&prims);
    let mut records = Vec::new();
    let start = Instant::now();
    let inv_views = 1.0 / views.len() as f32;

    let eval_now = |prims: &[TexturedPrimitive<f32>], iteration: usize, loss: f64, renders: &[ImageBuffer<f32>]| -> Result<EvalRecord> {
        let (mut p_sum, mut s_sum, mut has_ssim) = (0.0, 0.0, true);
        for ((_, target), r) in views.iter().zip(renders) {
            let (p, s) = evaluate(r, target)?;
            p_sum += p;
            match s {
                Some(s) => s_sum += s,
                None => has_ssim = false,
            }
        }
        let n = views.len() as f64;
        if let Some(dir) = &cfg.checkpoint_dir {
            crate::io::write_primitives(dir.join(format!("checkpoint_{iteration:06}.lgsp")), prims)?;
        }
        Ok(EvalRecord {
            iteration,
            loss,
            psnr: p_sum / n,
            ssim: has_ssim.then_some(s_sum / n),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    };

    for it in 0..=cfg.iterations {
        let mut loss = 0.0;
        let mut renders = Vec::with_capacity(views.len());
        let mut total = GradientSet::zeros_like(&prims);
        for (cam, target) in views {
            let out = render(&prims, cam, &rcfg)?;
            if it < cfg.iterations {
                let (l, d) = loss_and_grad(&out.color, target, cfg)?;
                let g = render_backward(&prims, cam, &rcfg, &d)?;
                total.add_scaled(&g, inv_views);
                loss += l;
            } else {
                loss += loss_and_grad(&out.color, target, cfg)?.0;
            }
            renders.push(out.color);
        }
        loss /= views.len() as f64;
        if !loss.is_finite() {
            let detail = first_nonfinite(&prims).unwrap_or_else(|| "loss".into());
            return Err(Error::NonFinite { iteration: it, detail });
        }
        if it % cfg.eval_every == 0 || it == cfg.iterations {
            records.push(eval_now(&prims, it, loss, &renders)?);
        }
        if it == cfg.iterations {
            break;
        }
        if let Some(detail) = first_nonfinite_grad(&total, &prims) {
            return Err(Error::NonFinite { iteration: it, detail });
        }
        let progress = it as f64 / cfg.iterations.max(1) as f64;
        let lr = base_lr.scaled(cfg.lr_final_ratio.powf(progress));
        adam_step(&mut prims, &total, &mut state, &lr, &groups);
        if let Some(detail) = first_nonfinite(&prims) {
            return Err(Error::NonFinite { iteration: it + 1, detail });
        }
    }
    let report = FitReport {
        records,
        primitive_count: prims.len(),
        param_count: prims
            .iter()
            .map(|p| match cfg.stage {
                Stage::GeometryPretrain => crate::bench::param_count_plain(1, p.sh_degree),
                Stage::JointTexture => p.param_count(),
            })
            .sum(),
        seed: cfg.seed,
    };
    Ok((prims, report))
}

/// Layout of a projective initialization.
#[derive(Clone, Debug, PartialEq)]
pub struct InitConfig {
    pub grid: (usize, usize),
    pub depth_hint: f64,
    pub texture_size: usize,
    pub texture_sigma: f64,
    pub opacity: f64,
    pub sh_degree: usize,
    /// Camera whose frustum the grid tiles; the first view's camera if unset.
    pub layout: Option<Camera>,
    /// Fraction of the layout image extent covered by the grid, centered on
    /// the principal point. Values above 1 reach into neighboring views.
    pub coverage: f64,
}

impl InitConfig {
    pub fn new(grid: (usize, usize), depth_hint: f64, texture_size: usize) -> Self {
        Self { grid, depth_hint, texture_size, texture_sigma: 1.0, opacity: 0.8, sh_degree: 1, layout: None, coverage: 1.0 }
    }
}

/// Fronto-parallel grid tiling a camera's view at `depth_hint`.
/// Neighboring supports touch; the SH base is the mean projected color and
/// the color texture holds the projected prior minus that base.
pub fn init_from_projection(views: &[(Camera, ImageBuffer<f32>)], cfg: &InitConfig) -> Result<Vec<TexturedPrimitive<f32>>> {
    let (gw, gh) = cfg.grid;
    if views.is_empty() || gw == 0 || gh == 0 {
        return Err(Error::invalid("initialization needs at least one view and a non-empty grid"));
    }
    if !(cfg.depth_hint > 0.0) || !(cfg.texture_sigma > 0.0) || !(cfg.coverage > 0.0) {
        return Err(Error::invalid("depth_hint, texture_sigma and coverage must be positive"));
    }
    let cam = cfg.layout.as_ref().unwrap_or(&views[0].0);
    let (w, h) = (cam.width as f64, cam.height as f64);
    let d = cfg.depth_hint;
    let r = cam.rotation_matrix::<f64>();
    let rt = r.transpose();
    let t = cam.translation_vec::<f64>();
    let rotation = matrix_to_quat(&rt).map(|v| v as f32);
    let (cell_w, cell_h) = (w * cfg.coverage / gw as f64, h * cfg.coverage / gh as f64);
    let scale = [(cell_w * d / cam.fx / (2.0 * cfg.texture_sigma)) as f32, (cell_h * d / cam.fy / (2.0 * cfg.texture_sigma)) as f32];
    let mut prims = Vec::with_capacity(gw * gh);
    for j in 0..gh {
        for i in 0..gw {
            let px = cam.cx + (i as f64 + 0.5 - gw as f64 / 2.0) * cell_w;
            let py = cam.cy + (j as f64 + 0.5 - gh as f64 / 2.0) * cell_h;
            let p_cam = Vec3::new((px - cam.cx) / cam.fx * d, (py - cam.cy) / cam.fy * d, d);
            let world = rt * (p_cam - t);
            let mut p = TexturedPrimitive::plain(world.cast::<f32>().to_array(), rotation, scale, cfg.opacity as f32, [0.0; 3]);
            p.set_sh_degree(cfg.sh_degree);
            p.reset_textures(cfg.texture_size, cfg.texture_sigma as f32);
            prims.push(p);
        }
    }
    let priors = project_textures_multi(&prims, views, cfg.texture_size)?;
    apply_priors(&mut prims, &priors, true)?;
    Ok(prims)
}
