//! Fits the poster-wall scene twice at an equal parameter budget, once with a
//! coarse grid of textured splats and once with a dense grid of plain ones,
//! then scores both on the held-out middle view.
//!
//! cargo run --release --example fit_poster -- [resolution] [iterations]

use texsplat::bench::{param_count, plain_grid_for_budget};
use texsplat::metrics::{psnr, ssim};
use texsplat::optim::{fit, init_from_projection, FitConfig, InitConfig, Stage, TextureInit};
use texsplat::synth::{Preset, SynthScene};
use texsplat::{render, Result};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let res: u32 = args.next().map(|s| s.parse().expect("resolution")).unwrap_or(256);
    let iterations: usize = args.next().map(|s| s.parse().expect("iterations")).unwrap_or(300);

    let scene = SynthScene::generate(Preset::PosterWall, res, res, 3, 0)?;
    let views = scene.views();
    let context = vec![views[0].clone(), views[2].clone()];
    let (held_cam, held_img) = &views[1];

    let (grid, t, sh) = (8, 16, 1);
    let budget = param_count(grid * grid, sh, t);
    let plain_side = plain_grid_for_budget(budget, sh);
    println!("budget {budget} params: textured {grid}x{grid} T={t}, plain {plain_side}x{plain_side}");

    for (label, side, t, stage) in [("textured", grid, t, Stage::JointTexture), ("plain", plain_side, 1, Stage::GeometryPretrain)] {
        // Lay the grid out from the held-out pose so both context views are
        // covered; only its image stays unseen.
        let layout = InitConfig { layout: Some(held_cam.clone()), coverage: 1.25, ..InitConfig::new((side, side), scene.depth(), t) };
        let init = init_from_projection(&context, &layout)?;
        // Textured fits keep the projected geometry fixed: moving hard-edged
        // supports opens gaps that no gradient pulls closed.
        let geometry = if stage == Stage::JointTexture { 0.0 } else { 1.0 };
        let cfg = FitConfig {
            iterations,
            stage,
            texture_init: TextureInit::Keep,
            geometry_lr_multiplier: Some(geometry),
            eval_every: (iterations / 4).max(1),
            ..FitConfig::default()
        };
        let (prims, report) = fit(&context, init, &cfg)?;
        for r in &report.records {
            println!("{label:>8} it {:5} loss {:.5} psnr {:.2} ({:.0} ms)", r.iteration, r.loss, r.psnr, r.wall_ms);
        }
        let out = render(&prims, held_cam, &cfg.render_config())?.color.clamped();
        println!(
            "{label:>8} held-out psnr {:.3} ssim {:.4} params {}",
            psnr(&out, held_img)?,
            ssim(&out, held_img)?,
            report.param_count
        );
    }
    Ok(())
}
