//! Checks analytic gradients against central finite differences for every
//! parameter group on a small random scene.
//!
//! cargo run --release --example gradient_check -- [seed]

use texsplat::grad::{fd_check, FdOptions};
use texsplat::metrics::mse;
use texsplat::synth::{mode_name, random_scene, RandomSceneSpec};
use texsplat::{ImageBuffer, RenderConfig, RenderMode, Result};

fn main() -> Result<()> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse().expect("seed")).unwrap_or(3);
    let spec = RandomSceneSpec { count: 4, width: 32, height: 32, sh_degree: 2, ..RandomSceneSpec::default() };
    let (cam, prims) = random_scene(seed, &spec);
    let target = ImageBuffer::from_fn_rgb(32, 32, |x, y| [x as f64 / 31.0, y as f64 / 31.0, 0.5]);

    // Mean squared error against a gradient target image.
    let n = target.data.len() as f64;
    let loss = |img: &ImageBuffer<f64>| {
        let mut d = img.clone();
        d.data.iter_mut().zip(&target.data).for_each(|(a, b)| *a = 2.0 * (*a - b) / n);
        (mse(img, &target).unwrap(), d)
    };
    for mode in [RenderMode::Plain2dgs, RenderMode::Textured] {
        let cfg = RenderConfig { mode, sh_degree: 2, ..RenderConfig::default() };
        let rep = fd_check(&prims, &cam, &cfg, &loss, &FdOptions::default())?;
        println!("{}: {} checked, {} excluded, worst relative error {:.2e}", mode_name(mode), rep.checked(), rep.excluded(), rep.max_rel_err());
        for g in &rep.groups {
            println!("  {:<14} max rel err {:.2e}", g.group.name(), g.max_rel_err);
        }
        if !rep.passed() {
            println!("  flagged: {:?}", rep.flagged());
        }
    }
    Ok(())
}
