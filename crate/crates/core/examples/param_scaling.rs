//! Parameter budgets: textured vs plain counts, the ratio between an
//! image-resolution texture and the splats needed to match it, and a small
//! grid/texture-size sweep written as CSV.
//!
//! cargo run --release --example param_scaling -- [iterations]

use texsplat::bench::{param_count, param_count_plain, plain_grid_for_budget, scaling_ratio, sweep, write_sweep_csv, SweepConfig};
use texsplat::optim::FitConfig;
use texsplat::synth::{Preset, SynthScene};
use texsplat::Result;

fn main() -> Result<()> {
    let iterations: usize = std::env::args().nth(1).map(|s| s.parse().expect("iterations")).unwrap_or(60);

    for (grid, t) in [(8, 16), (16, 8), (4, 32)] {
        let budget = param_count(grid * grid, 1, t);
        let side = plain_grid_for_budget(budget, 1);
        println!("{grid}x{grid} T={t}: {budget} params ~ plain {side}x{side} ({})", param_count_plain(side * side, 1));
    }
    for l in 0..=3 {
        println!("512x288 per-pixel plain vs 64x36 grid at T=8, SH degree {l}: ratio {:.3}", scaling_ratio(512, 288, 8, 8, l));
    }

    let scene = SynthScene::generate(Preset::PosterWall, 96, 96, 3, 0)?;
    let views = scene.views();
    let context = vec![views[0].clone(), views[2].clone()];
    let configs: Vec<SweepConfig> = [(4, 8), (4, 16), (8, 4), (8, 8), (16, 1)]
        .into_iter()
        .map(|(g, t)| SweepConfig { grid: (g, g), texture_size: t })
        .collect();
    let cfg = FitConfig { iterations, eval_every: iterations.max(1), ..FitConfig::default() };
    let rows = sweep(&context, &views[1], &configs, scene.depth(), &cfg)?;
    write_sweep_csv(std::io::stdout().lock(), &rows).map_err(|e| texsplat::Error::io("stdout", e))?;
    Ok(())
}
