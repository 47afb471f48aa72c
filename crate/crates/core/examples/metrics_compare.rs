//! PSNR and SSIM between a reference image and progressively worse copies:
//! added noise, a box blur and a brightness shift.
//!
//! cargo run --release --example metrics_compare

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use texsplat::image::upsample_bilinear;
use texsplat::metrics::{psnr, ssim};
use texsplat::{ImageBuffer, Result};

fn main() -> Result<()> {
    let reference = ImageBuffer::from_fn_rgb(128, 128, |x, y| {
        let (u, v) = (x as f32 / 16.0, y as f32 / 16.0);
        [0.5 + 0.4 * u.sin() * v.cos(), 0.5 + 0.3 * (u + v).sin(), if (x / 16 + y / 16) % 2 == 0 { 0.8 } else { 0.2 }]
    });
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut noisy = reference.clone();
    noisy.data.iter_mut().for_each(|v| *v += rng.gen_range(-0.05..0.05));
    let blurred = upsample_bilinear(&reference.downsample_box(4)?, 4)?;
    let mut brighter = reference.clone();
    brighter.data.iter_mut().for_each(|v| *v += 0.05);

    println!("image,psnr,ssim");
    for (name, img) in [("identical", &reference), ("noise", &noisy), ("blur", &blurred), ("brighter", &brighter)] {
        let img = img.clamped();
        println!("{name},{:.3},{:.4}", psnr(&img, &reference)?, ssim(&img, &reference)?);
    }
    Ok(())
}
