//! Renders a random scene with the tiled rasterizer in both modes, checks it
//! against the brute-force reference and writes the images as PNG.
//!
//! cargo run --release --example render_scene -- [seed] [out_dir]

use texsplat::io::write_image;
use texsplat::synth::{mode_name, random_scene, RandomSceneSpec};
use texsplat::{render, render_reference, ColorSpace, RenderConfig, RenderMode, Result};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(7);
    let out_dir = std::path::PathBuf::from(args.next().unwrap_or_else(|| "target/render_scene".into()));
    std::fs::create_dir_all(&out_dir).map_err(|e| texsplat::Error::io(&out_dir, e))?;

    let spec = RandomSceneSpec { count: 48, width: 256, height: 192, ..RandomSceneSpec::default() };
    let (cam, prims) = random_scene(seed, &spec);
    for mode in [RenderMode::Plain2dgs, RenderMode::Textured] {
        let cfg = RenderConfig { mode, background: [0.05, 0.05, 0.08], ..RenderConfig::default() };
        let tiled = render(&prims, &cam, &cfg)?;
        let reference = render_reference(&prims, &cam, &cfg)?;
        let max_diff = tiled.color.data.iter().zip(&reference.color.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let path = out_dir.join(format!("{}.png", mode_name(mode)));
        write_image(&path, &tiled.color.cast::<f32>().clamped().with_color_space(ColorSpace::Linear))?;
        println!("{:>10}: {} primitives, max |tiled - reference| = {max_diff:.2e}, wrote {}", mode_name(mode), prims.len(), path.display());
    }
    Ok(())
}
