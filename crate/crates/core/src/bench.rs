//! Parameter accounting and quality/time sweeps over (grid, texture size)
//! configurations.

use std::io::Write;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::image::ImageBuffer;
use crate::metrics::{psnr, ssim};
use crate::optim::{fit, init_from_projection, FitConfig, InitConfig, Stage, TextureInit};
use crate::primitive::TexturedPrimitive;
use crate::raster::{render, RenderConfig};
use crate::sh::sh_coeff_count;

pub const SWEEP_HEADER: &str = "grid,T,params,psnr,ssim,fit_ms,render_ms";
pub const TIMING_WARMUPS: usize = 2;
pub const TIMING_RUNS: usize = 5;

/// Learnable scalars of `n` textured primitives: geometry, opacity, SH and
/// four channels per texel.
pub fn param_count(n: usize, sh_degree: usize, t: usize) -> usize {
    n * (3 + 4 + 2 + 1 + 3 * sh_coeff_count(sh_degree) + 4 * t * t)
}

/// Learnable scalars of `n` untextured primitives.
pub fn param_count_plain(n: usize, sh_degree: usize) -> usize {
    n * (3 + 4 + 2 + 1 + 3 * sh_coeff_count(sh_degree))
}

/// Largest square plain grid whose parameter count does not exceed `budget`.
pub fn plain_grid_for_budget(budget: usize, sh_degree: usize) -> usize {
    let per = param_count_plain(1, sh_degree);
    let mut side = ((budget / per) as f64).sqrt() as usize;
    while param_count_plain((side + 1) * (side + 1), sh_degree) <= budget {
        side += 1;
    }
    while side > 0 && param_count_plain(side * side, sh_degree) > budget {
        side -= 1;
    }
    side
}

/// Plain-to-compact parameter ratio for a render of `width`×`height`: one
/// plain primitive per pixel against a grid `downscale`× coarser carrying
/// `t`×`t` textures.
pub fn scaling_ratio(width: usize, height: usize, downscale: usize, t: usize, sh_degree: usize) -> f64 {
    let compact = param_count((width / downscale) * (height / downscale), sh_degree, t);
    param_count_plain(width * height, sh_degree) as f64 / compact as f64
}

/// Median wall time in milliseconds of `runs` calls after `warmups` calls.
pub fn median_time_ms<T>(warmups: usize, runs: usize, mut f: impl FnMut() -> T) -> f64 {
    for _ in 0..warmups {
        std::hint::black_box(f());
    }
    let mut times: Vec<f64> = (0..runs.max(1))
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(f());
            start.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    times.sort_by(f64::total_cmp);
    let n = times.len();
    if n % 2 == 1 { times[n / 2] } else { 0.5 * (times[n / 2 - 1] + times[n / 2]) }
}

pub fn render_time_ms(prims: &[TexturedPrimitive<f32>], cam: &Camera, cfg: &RenderConfig) -> Result<f64> {
    render(prims, cam, cfg)?;
    Ok(median_time_ms(TIMING_WARMUPS, TIMING_RUNS, || render(prims, cam, cfg)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub grid: (usize, usize),
    /// `1` selects a plain fit without textures.
    pub texture_size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub grid: (usize, usize),
    pub texture_size: usize,
    pub params: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub fit_ms: f64,
    pub render_ms: f64,
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{}x{},{},{},{:.6},{:.6},{:.3},{:.3}",
            self.grid.0, self.grid.1, self.texture_size, self.params, self.psnr, self.ssim, self.fit_ms, self.render_ms
        )
    }
}

/// Fits each configuration to the context views from a projective
/// initialization at `depth_hint` and scores the held-out view.
pub fn sweep(
    context: &[(Camera, ImageBuffer<f32>)],
    held_out: &(Camera, ImageBuffer<f32>),
    configs: &[SweepConfig],
    depth_hint: f64,
    fit_cfg: &FitConfig,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(configs.len());
    for c in configs {
        let (prims, cfg) = fit_setup(context, c, depth_hint, fit_cfg)?;
        let start = Instant::now();
        let (fitted, report) = fit(context, prims, &cfg)?;
        let fit_ms = start.elapsed().as_secs_f64() * 1e3;
        let rcfg = cfg.render_config();
        let (cam, target) = held_out;
        let out = render(&fitted, cam, &rcfg)?.color.clamped();
        rows.push(SweepRow {
            grid: c.grid,
            texture_size: c.texture_size,
            params: report.param_count,
            psnr: psnr(&out, target)?,
            ssim: ssim(&out, target)?,
            fit_ms,
            render_ms: render_time_ms(&fitted, cam, &rcfg)?,
        });
    }
    Ok(rows)
}

/// Initial primitives and fit configuration for one sweep entry.
pub fn fit_setup(
    context: &[(Camera, ImageBuffer<f32>)],
    c: &SweepConfig,
    depth_hint: f64,
    fit_cfg: &FitConfig,
) -> Result<(Vec<TexturedPrimitive<f32>>, FitConfig)> {
    if c.texture_size == 0 || !c.texture_size.is_power_of_two() {
        return Err(Error::invalid(format!("texture size {} is not a power of two", c.texture_size)));
    }
    let mut init = InitConfig::new(c.grid, depth_hint, c.texture_size);
    init.sh_degree = fit_cfg.sh_degree;
    let prims = init_from_projection(context, &init)?;
    let mut cfg = fit_cfg.clone();
    if c.texture_size == 1 {
        cfg.stage = Stage::GeometryPretrain;
    } else {
        cfg.stage = Stage::JointTexture;
        cfg.texture_init = TextureInit::Keep;
    }
    Ok((prims, cfg))
}

pub fn write_sweep_csv(mut w: impl Write, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}
