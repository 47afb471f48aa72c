//! Compares three ways of producing a high-resolution view from the
//! poster-wall scene: fitting at low resolution and rendering directly at the
//! target size, fitting at low resolution and upsampling the low-resolution
//! render, and fitting at the target resolution.
//!
//! Both the textured (8x8, T=16) and the budget-matched plain (55x55) family
//! are measured.
//!
//! cargo run --release --example resolution_modes -- [resolution] [factor] [iterations]

use texsplat::image::upsample_bilinear;
use texsplat::metrics::psnr;
use texsplat::optim::{fit, init_from_projection, FitConfig, InitConfig, Stage, TextureInit};
use texsplat::synth::{Preset, SynthScene};
use texsplat::{render, Camera, ImageBuffer, RenderConfig, Result, TexturedPrimitive};

fn fit_views(views: &[(Camera, ImageBuffer<f32>)], layout: &Camera, plain: bool, iterations: usize) -> Result<Vec<TexturedPrimitive>> {
    let context = vec![views[0].clone(), views[2].clone()];
    let (g, t) = if plain { (55, 1) } else { (8, 16) };
    let init_cfg = InitConfig { layout: Some(layout.clone()), coverage: 1.25, ..InitConfig::new((g, g), 3.0, t) };
    let init = init_from_projection(&context, &init_cfg)?;
    let cfg = FitConfig {
        iterations,
        texture_init: TextureInit::Keep,
        geometry_lr_multiplier: Some(if plain { 1.0 } else { 0.0 }),
        stage: if plain { Stage::GeometryPretrain } else { Stage::JointTexture },
        eval_every: iterations.max(1),
        ..FitConfig::default()
    };
    Ok(fit(&context, init, &cfg)?.0)
}

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let res: u32 = args.next().map(|s| s.parse().expect("resolution")).unwrap_or(256);
    let factor: usize = args.next().map(|s| s.parse().expect("factor")).unwrap_or(4);
    let iterations: usize = args.next().map(|s| s.parse().expect("iterations")).unwrap_or(200);

    let scene = SynthScene::generate(Preset::PosterWall, res, res, 3, 0)?;
    let high = scene.views();
    let low: Vec<_> = high.iter().map(|(c, img)| Ok((c.scaled(1.0 / factor as f64), img.downsample_box(factor)?))).collect::<Result<_>>()?;
    let (cam, target) = &high[1];

    println!("family,mode,psnr");
    for plain in [false, true] {
        let family = if plain { "plain" } else { "textured" };
        let cfg = if plain { RenderConfig::plain() } else { RenderConfig::default() };
        let low_fit = fit_views(&low, &low[1].0, plain, iterations)?;
        let direct = render(&low_fit, cam, &cfg)?.color.clamped();
        let small = render(&low_fit, &low[1].0, &cfg)?.color.clamped();
        let upsampled = upsample_bilinear(&small, factor)?;
        let native_fit = fit_views(&high, cam, plain, iterations)?;
        let native = render(&native_fit, cam, &cfg)?.color.clamped();
        println!("{family},direct,{:.4}", psnr(&direct, target)?);
        println!("{family},upsample,{:.4}", psnr(&upsampled, target)?);
        println!("{family},native,{:.4}", psnr(&native, target)?);
    }
    Ok(())
}
