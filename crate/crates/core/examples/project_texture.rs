//! Projects a synthetic view onto a grid of splats, then shows how much of
//! the image the textured render recovers compared with the flat colors.
//!
//! cargo run --release --example project_texture -- [texture_size]

use texsplat::metrics::psnr;
use texsplat::optim::{init_from_projection, InitConfig};
use texsplat::project::project_and_render_roundtrip;
use texsplat::synth::{Preset, SynthScene};
use texsplat::{render, RenderConfig, Result};

fn main() -> Result<()> {
    let t: usize = std::env::args().nth(1).map(|s| s.parse().expect("texture size")).unwrap_or(16);
    let scene = SynthScene::generate(Preset::PosterWall, 256, 256, 1, 0)?;
    let views = scene.views();
    let (cam, img) = &views[0];

    let prims = init_from_projection(&views, &InitConfig::new((8, 8), scene.depth(), t))?;
    let cfg = RenderConfig::default();
    let textured = render(&prims, cam, &cfg)?.color.clamped();
    let mut flat = prims.clone();
    flat.iter_mut().for_each(|p| p.color_texture.iter_mut().for_each(|c| *c = [0.0; 3]));
    let flat = render(&flat, cam, &cfg)?.color.clamped();
    println!("8x8 grid, T={t}: projected textures {:.2} dB, base colors only {:.2} dB", psnr(&textured, img)?, psnr(&flat, img)?);

    // The initial alpha textures are Gaussian bumps, so cell borders stay
    // half transparent. Opaque textures tile the view exactly.
    let mut opaque = prims.clone();
    opaque.iter_mut().for_each(|p| {
        p.opacity = 1.0;
        p.alpha_texture.iter_mut().for_each(|a| *a = 1.0);
    });
    let opaque = render(&opaque, cam, &cfg)?.color.clamped();
    println!("opaque alpha: {:.2} dB", psnr(&opaque, img)?);

    let one = &prims[27];
    println!("single splat round trip at T={t}: {:.2} dB", project_and_render_roundtrip(one, cam, img, t)?);
    Ok(())
}
