use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use texsplat::image::upsample_bilinear;
use texsplat::io::{load_scene, read_image, read_primitives, save_scene, write_image, write_primitives};
use texsplat::metrics::{psnr, ssim};
use texsplat::optim::{fit, init_from_projection, FitConfig, InitConfig, LossKind, Stage, TextureInit};
use texsplat::project::{apply_priors, project_textures};
use texsplat::synth::{Preset, SynthScene};
use texsplat::{ColorSpace, Error, RenderConfig, RenderMode, Result};

#[derive(Parser)]
#[command(name = "texsplat", version, about = "Render, fit and evaluate textured 2D Gaussian splats")]
struct Cli {
    /// Worker threads for rendering and gradients.
    #[arg(long, global = true, env = "TEXSPLAT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Plain2dgs,
    Textured,
}

impl From<ModeArg> for RenderMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Plain2dgs => RenderMode::Plain2dgs,
            ModeArg::Textured => RenderMode::Textured,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    GeometryPretrain,
    JointTexture,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    L1Dssim,
    Mse,
}

#[derive(Subcommand)]
enum Command {
    /// Render one scene camera from a primitive file.
    Render {
        #[arg(long)]
        primitives: PathBuf,
        /// Scene file (`scene.json`) or the directory holding it.
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 0)]
        camera_index: usize,
        #[arg(long, value_enum, default_value = "textured")]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
        /// Render at 1/k resolution and upsample bilinearly by k.
        #[arg(long, default_value_t = 1)]
        upsample: usize,
        #[arg(long, default_value_t = 1)]
        sh_degree: usize,
    },
    /// Fit primitives to the scene images.
    Fit {
        #[arg(long)]
        scene: PathBuf,
        /// `grid:GWxGH` for a projective grid or `file:PATH` for a primitive file.
        #[arg(long)]
        init: String,
        /// Flat JSON fit configuration; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// CSV of evaluation records.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Comma separated view indices to fit; all views by default.
        #[arg(long, value_delimiter = ',')]
        views: Vec<usize>,
        /// Depth of the grid initialization in front of the first view.
        #[arg(long, default_value_t = 3.0)]
        depth: f64,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long, value_enum)]
        stage: Option<StageArg>,
        #[arg(long, value_enum)]
        loss: Option<LossArg>,
        #[arg(long)]
        texture_size: Option<usize>,
        #[arg(long)]
        geometry_lr_multiplier: Option<f64>,
        #[arg(long)]
        eval_every: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Paint a view's image onto the textures of a primitive file.
    Project {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 0)]
        view: usize,
        #[arg(long)]
        primitives: PathBuf,
        #[arg(long)]
        texture_size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print PSNR and SSIM between two images as CSV.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Write a procedural scene: images plus `scene.json`.
    Synth {
        #[arg(long)]
        preset: String,
        /// Resolution as `WxH`.
        #[arg(long, default_value = "256x256")]
        res: String,
        #[arg(long, default_value_t = 3)]
        views: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_pair(s: &str, what: &str) -> Result<(usize, usize)> {
    let bad = || Error::invalid(format!("{what} must look like WxH, got {s:?}"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn scene_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("scene.json")
    } else {
        p.to_path_buf()
    }
}

fn pick<T: Clone>(items: &[T], index: usize, what: &str) -> Result<T> {
    items.get(index).cloned().ok_or_else(|| Error::invalid(format!("{what} index {index} out of range (have {})", items.len())))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Render { primitives, scene, camera_index, mode, out, upsample, sh_degree } => {
            let prims = read_primitives(&primitives)?;
            let views = load_scene(scene_path(&scene))?;
            let (cam, _) = pick(&views, camera_index, "camera")?;
            if upsample == 0 || cam.width as usize % upsample != 0 || cam.height as usize % upsample != 0 {
                return Err(Error::invalid(format!("upsample factor {upsample} must divide {}×{}", cam.width, cam.height)));
            }
            let cfg = RenderConfig { mode: mode.into(), sh_degree, ..RenderConfig::default() };
            let start = Instant::now();
            let low = texsplat::render(&prims, &cam.scaled(1.0 / upsample as f64), &cfg)?;
            let skipped = low.skipped_nonfinite;
            let img = if upsample > 1 { upsample_bilinear(&low.color, upsample)? } else { low.color };
            let ms = start.elapsed().as_secs_f64() * 1e3;
            let (w, h) = (img.width, img.height);
            write_image(&out, &img.with_color_space(ColorSpace::Linear))?;
            println!("width,height,primitives,skipped,render_ms");
            println!("{w},{h},{},{skipped},{ms:.3}", prims.len());
        }
        Command::Fit {
            scene,
            init,
            config,
            out,
            report,
            views: indices,
            depth,
            iterations,
            stage,
            loss,
            texture_size,
            geometry_lr_multiplier,
            eval_every,
            seed,
        } => {
            let all = load_scene(scene_path(&scene))?;
            let views = if indices.is_empty() {
                all
            } else {
                indices.iter().map(|&i| pick(&all, i, "view")).collect::<Result<Vec<_>>>()?
            };
            let mut cfg: FitConfig = match &config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                    serde_json::from_str(&text)?
                }
                None => FitConfig::default(),
            };
            if let Some(v) = iterations {
                cfg.iterations = v;
            }
            if let Some(v) = stage {
                cfg.stage = match v {
                    StageArg::GeometryPretrain => Stage::GeometryPretrain,
                    StageArg::JointTexture => Stage::JointTexture,
                };
            }
            if let Some(v) = loss {
                cfg.loss = match v {
                    LossArg::L1Dssim => LossKind::L1Dssim,
                    LossArg::Mse => LossKind::Mse,
                };
            }
            if let Some(v) = texture_size {
                cfg.texture_size = v;
            }
            if geometry_lr_multiplier.is_some() {
                cfg.geometry_lr_multiplier = geometry_lr_multiplier;
            }
            if let Some(v) = eval_every {
                cfg.eval_every = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            let prims = if let Some(grid) = init.strip_prefix("grid:") {
                let t = if cfg.stage == Stage::JointTexture { cfg.texture_size } else { 1 };
                let mut ic = InitConfig::new(parse_pair(grid, "grid")?, depth, t);
                ic.sh_degree = cfg.sh_degree;
                cfg.texture_init = TextureInit::Keep;
                init_from_projection(&views, &ic)?
            } else if let Some(path) = init.strip_prefix("file:") {
                read_primitives(path)?
            } else {
                return Err(Error::invalid(format!("--init must be grid:GWxGH or file:PATH, got {init:?}")));
            };
            let (fitted, rep) = fit(&views, prims, &cfg)?;
            write_primitives(&out, &fitted)?;
            let mut csv = String::from("iteration,loss,psnr,ssim,wall_ms\n");
            for r in &rep.records {
                let s = r.ssim.map(|v| format!("{v:.6}")).unwrap_or_default();
                csv.push_str(&format!("{},{:.8},{:.6},{s},{:.3}\n", r.iteration, r.loss, r.psnr, r.wall_ms));
            }
            match &report {
                Some(path) => std::fs::write(path, &csv).map_err(|e| Error::io(path, e))?,
                None => print!("{csv}"),
            }
        }
        Command::Project { scene, view, primitives, texture_size, out } => {
            let views = load_scene(scene_path(&scene))?;
            let (cam, img) = pick(&views, view, "view")?;
            let mut prims = read_primitives(&primitives)?;
            let priors = project_textures(&prims, &cam, &img, texture_size)?;
            apply_priors(&mut prims, &priors, true)?;
            write_primitives(&out, &prims)?;
            println!("primitive,coverage");
            for (i, p) in priors.iter().enumerate() {
                println!("{i},{:.6}", p.coverage());
            }
        }
        Command::Compare { a, b } => {
            let a = read_image(&a, ColorSpace::Srgb)?;
            let b = read_image(&b, ColorSpace::Srgb)?;
            println!("psnr,ssim");
            println!("{:.6},{:.6}", psnr(&a, &b)?, ssim(&a, &b)?);
        }
        Command::Synth { preset, res, views, seed, out } => {
            let preset: Preset = preset.parse()?;
            let (w, h) = parse_pair(&res, "resolution")?;
            let scene = SynthScene::generate(preset, w as u32, h as u32, views, seed)?;
            let path = save_scene(&out, &scene.views())?;
            println!("scene,views,width,height,depth");
            println!("{},{views},{w},{h},{}", path.display(), scene.depth());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("texsplat: {e}");
            ExitCode::FAILURE
        }
    }
}
