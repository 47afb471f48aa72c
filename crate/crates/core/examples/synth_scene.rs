//! Generates a procedural multi-view scene, saves it as PNG images plus a
//! JSON camera file and loads it back.
//!
//! cargo run --release --example synth_scene -- [preset] [out_dir]

use texsplat::io::{load_scene, save_scene};
use texsplat::metrics::psnr;
use texsplat::synth::{Preset, SynthScene};
use texsplat::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let preset: Preset = args.next().unwrap_or_else(|| "checker-room".into()).parse()?;
    let dir = std::path::PathBuf::from(args.next().unwrap_or_else(|| format!("target/{}", preset.name())));

    let scene = SynthScene::generate(preset, 160, 120, 4, 0)?;
    let views = scene.views();
    let path = save_scene(&dir, &views)?;
    let loaded = load_scene(&path)?;
    println!("wrote {} ({} views, surface depth {})", path.display(), views.len(), scene.depth());
    for (i, ((cam, img), (lcam, limg))) in views.iter().zip(&loaded).enumerate() {
        // PNG stores 8-bit sRGB, so the reload is close but not exact.
        println!("view {i}: eye {:?}, camera equal {}, reload psnr {:.1} dB", cam.center::<f64>().to_array(), cam == lcam, psnr(img, limg)?);
    }
    Ok(())
}
