//! Procedural scenes: analytic ground-truth images of textured planes seen
//! from a row of cameras, and randomized splat scenes for testing.
//!
//! Cameras are placed on the x axis, `baseline` apart and centered on the
//! origin, all looking at `(0, 0, depth)`. Ground-truth pixels average a 3×3
//! grid of ray samples over the pixel footprint.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{normalize_quat, Camera};
use crate::image::{ColorSpace, ImageBuffer};
use crate::linalg::Vec3;
use crate::primitive::TexturedPrimitive;
use crate::raster::RenderMode;
use crate::sh::SH_C0;

/// Distance between adjacent synthetic cameras, world units.
pub const DEFAULT_BASELINE: f64 = 0.2;
/// Focal length as a fraction of image width.
pub const FOCAL_PER_WIDTH: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    TexturedQuad,
    CheckerRoom,
    PosterWall,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "textured-quad" => Ok(Self::TexturedQuad),
            "checker-room" => Ok(Self::CheckerRoom),
            "poster-wall" => Ok(Self::PosterWall),
            other => Err(Error::invalid(format!(
                "unknown preset '{other}' (expected textured-quad, checker-room or poster-wall)"
            ))),
        }
    }
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Self::TexturedQuad => "textured-quad",
            Self::CheckerRoom => "checker-room",
            Self::PosterWall => "poster-wall",
        }
    }

    /// Depth of the dominant surface along the central viewing axis.
    pub fn depth(self) -> f64 {
        match self {
            Self::TexturedQuad => 3.0,
            Self::CheckerRoom => 4.0,
            Self::PosterWall => 3.0,
        }
    }
}

#[derive(Clone, Debug)]
enum Pattern {
    Checker { freq: f64, a: [f64; 3], b: [f64; 3] },
    Smooth { phases: [f64; 6], freqs: [f64; 6], checker: f64 },
    Poster { blobs: Vec<Blob>, stripes: Vec<Stripe>, base: [f64; 3] },
}

#[derive(Clone, Debug)]
struct Blob {
    center: (f64, f64),
    radius: f64,
    color: [f64; 3],
    square: bool,
}

#[derive(Clone, Debug)]
struct Stripe {
    bounds: (f64, f64, f64, f64),
    angle: f64,
    freq: f64,
    color: [f64; 3],
}

impl Pattern {
    /// Color at plane coordinates `(a, b)` in world units.
    fn eval(&self, a: f64, b: f64) -> [f64; 3] {
        match self {
            Pattern::Checker { freq, a: ca, b: cb } => {
                let k = ((a * freq).floor() + (b * freq).floor()) as i64;
                if k.rem_euclid(2) == 0 {
                    *ca
                } else {
                    *cb
                }
            }
            Pattern::Smooth { phases, freqs, checker } => {
                let r = (a * a + b * b).sqrt();
                let mut c = [0.0; 3];
                for ch in 0..3 {
                    let s1 = (a * freqs[ch] + phases[ch]).sin();
                    let s2 = (r * freqs[ch + 3] + phases[ch + 3]).cos();
                    c[ch] = 0.5 + 0.25 * s1 + 0.2 * s2;
                }
                let k = ((a * checker).floor() + (b * checker).floor()) as i64;
                if k.rem_euclid(2) == 0 {
                    c.iter_mut().for_each(|v| *v *= 0.85);
                }
                c
            }
            Pattern::Poster { blobs, stripes, base } => {
                let mut c = *base;
                for s in stripes {
                    let (x0, y0, x1, y1) = s.bounds;
                    if a >= x0 && a <= x1 && b >= y0 && b <= y1 {
                        let t = a * s.angle.cos() + b * s.angle.sin();
                        if (t * s.freq).fract().abs() < 0.5 {
                            c = s.color;
                        }
                    }
                }
                for blob in blobs {
                    let (dx, dy) = (a - blob.center.0, b - blob.center.1);
                    let inside = if blob.square {
                        dx.abs().max(dy.abs()) <= blob.radius
                    } else {
                        dx * dx + dy * dy <= blob.radius * blob.radius
                    };
                    if inside {
                        c = blob.color;
                    }
                }
                c
            }
        }
    }
}

/// Rectangle `origin + a·axis_u + b·axis_v`, `|a| ≤ half_u`, `|b| ≤ half_v`,
/// with unit axes.
#[derive(Clone, Debug)]
struct Quad {
    origin: Vec3<f64>,
    axis_u: Vec3<f64>,
    axis_v: Vec3<f64>,
    half_u: f64,
    half_v: f64,
    pattern: Pattern,
}

impl Quad {
    fn hit(&self, o: Vec3<f64>, d: Vec3<f64>) -> Option<(f64, [f64; 3])> {
        let n = self.axis_u.cross(self.axis_v);
        let denom = n.dot(d);
        if denom.abs() < 1e-12 {
            return None;
        }
        let t = n.dot(self.origin - o) / denom;
        if t <= 1e-9 {
            return None;
        }
        let p = o + d.scale(t) - self.origin;
        let (a, b) = (p.dot(self.axis_u), p.dot(self.axis_v));
        if a.abs() > self.half_u || b.abs() > self.half_v {
            return None;
        }
        Some((t, self.pattern.eval(a, b)))
    }
}

/// Analytic scene made of textured rectangles over a constant background.
#[derive(Clone, Debug)]
pub struct AnalyticScene {
    quads: Vec<Quad>,
    pub background: [f64; 3],
}

impl AnalyticScene {
    pub fn preset(preset: Preset, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Vec3::new(1.0, 0.0, 0.0);
        let y = Vec3::new(0.0, 1.0, 0.0);
        let z = Vec3::new(0.0, 0.0, 1.0);
        match preset {
            Preset::TexturedQuad => {
                let mut phases = [0.0; 6];
                let mut freqs = [0.0; 6];
                for i in 0..6 {
                    phases[i] = rng.gen_range(0.0..std::f64::consts::TAU);
                    freqs[i] = rng.gen_range(4.0..14.0);
                }
                Self {
                    quads: vec![Quad {
                        origin: Vec3::new(0.0, 0.0, preset.depth()),
                        axis_u: x,
                        axis_v: y,
                        half_u: 1.2,
                        half_v: 1.2,
                        pattern: Pattern::Smooth { phases, freqs, checker: rng.gen_range(3.0..6.0) },
                    }],
                    background: [0.1, 0.1, 0.15],
                }
            }
            Preset::PosterWall => {
                let color = |rng: &mut ChaCha8Rng| [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)];
                let mut stripes = Vec::new();
                for _ in 0..14 {
                    let (cx, cy) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                    let (hw, hh) = (rng.gen_range(0.2..0.7), rng.gen_range(0.2..0.7));
                    stripes.push(Stripe {
                        bounds: (cx - hw, cy - hh, cx + hw, cy + hh),
                        angle: rng.gen_range(0.0..std::f64::consts::PI),
                        freq: rng.gen_range(4.0..14.0),
                        color: color(&mut rng),
                    });
                }
                let mut blobs = Vec::new();
                for _ in 0..160 {
                    blobs.push(Blob {
                        center: (rng.gen_range(-2.2..2.2), rng.gen_range(-2.2..2.2)),
                        radius: rng.gen_range(0.02..0.15),
                        color: color(&mut rng),
                        square: rng.gen_bool(0.4),
                    });
                }
                Self {
                    quads: vec![Quad {
                        origin: Vec3::new(0.0, 0.0, preset.depth()),
                        axis_u: x,
                        axis_v: y,
                        half_u: 50.0,
                        half_v: 50.0,
                        pattern: Pattern::Poster { blobs, stripes, base: color(&mut rng) },
                    }],
                    background: [0.0; 3],
                }
            }
            Preset::CheckerRoom => {
                let d = preset.depth();
                let c = |rng: &mut ChaCha8Rng| [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)];
                let checker = |rng: &mut ChaCha8Rng| Pattern::Checker { freq: rng.gen_range(2.0..6.0), a: c(rng), b: c(rng) };
                let room = |origin, axis_u, axis_v, half_u, half_v, pattern| Quad { origin, axis_u, axis_v, half_u, half_v, pattern };
                Self {
                    quads: vec![
                        room(Vec3::new(0.0, 0.0, d), x, y, 2.0, 1.2, checker(&mut rng)),
                        room(Vec3::new(0.0, 1.2, d / 2.0), x, z, 2.0, d / 2.0 + 3.0, checker(&mut rng)),
                        room(Vec3::new(0.0, -1.2, d / 2.0), x, z, 2.0, d / 2.0 + 3.0, checker(&mut rng)),
                        room(Vec3::new(-2.0, 0.0, d / 2.0), z, y, d / 2.0 + 3.0, 1.2, checker(&mut rng)),
                        room(Vec3::new(2.0, 0.0, d / 2.0), z, y, d / 2.0 + 3.0, 1.2, checker(&mut rng)),
                    ],
                    background: [0.0; 3],
                }
            }
        }
    }

    fn trace(&self, o: Vec3<f64>, d: Vec3<f64>) -> [f64; 3] {
        let mut best: Option<(f64, [f64; 3])> = None;
        for q in &self.quads {
            if let Some((t, c)) = q.hit(o, d) {
                if best.map_or(true, |(bt, _)| t < bt) {
                    best = Some((t, c));
                }
            }
        }
        best.map_or(self.background, |(_, c)| c)
    }

    /// Color seen along the ray from `origin` through `target`.
    pub fn radiance(&self, origin: [f64; 3], target: [f64; 3]) -> [f64; 3] {
        let o = Vec3::from_array(origin);
        self.trace(o, (Vec3::from_array(target) - o).normalized())
    }

    /// Ground-truth image: 3×3 supersampled over each pixel footprint.
    pub fn render(&self, cam: &Camera) -> ImageBuffer<f32> {
        let r = cam.rotation_matrix::<f64>().transpose();
        let o = cam.center::<f64>();
        let offsets = [-1.0 / 3.0, 0.0, 1.0 / 3.0];
        ImageBuffer::from_fn_rgb(cam.width as usize, cam.height as usize, |x, y| {
            let mut acc = [0.0; 3];
            for dy in offsets {
                for dx in offsets {
                    let px = x as f64 + dx;
                    let py = y as f64 + dy;
                    let dir_cam = Vec3::new((px - cam.cx) / cam.fx, (py - cam.cy) / cam.fy, 1.0);
                    let d = (r * dir_cam).normalized();
                    let c = self.trace(o, d);
                    for ch in 0..3 {
                        acc[ch] += c[ch];
                    }
                }
            }
            acc.map(|v| (v / 9.0) as f32)
        })
        .with_color_space(ColorSpace::Linear)
    }
}

/// Cameras for `views` viewpoints at `width × height`.
pub fn preset_cameras(preset: Preset, width: u32, height: u32, views: usize, baseline: f64) -> Result<Vec<Camera>> {
    if views == 0 {
        return Err(Error::invalid("at least one view is required"));
    }
    let f = FOCAL_PER_WIDTH * width as f64;
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    (0..views)
        .map(|k| {
            let ex = baseline * (k as f64 - (views as f64 - 1.0) / 2.0);
            Camera::look_at([ex, 0.0, 0.0], [0.0, 0.0, preset.depth()], f, f, cx, cy, width, height)
        })
        .collect()
}

/// Cameras and ground-truth images for one preset.
#[derive(Clone, Debug)]
pub struct SynthScene {
    pub preset: Preset,
    pub cameras: Vec<Camera>,
    pub images: Vec<ImageBuffer<f32>>,
}

impl SynthScene {
    pub fn generate(preset: Preset, width: u32, height: u32, views: usize, seed: u64) -> Result<Self> {
        let scene = AnalyticScene::preset(preset, seed);
        let cameras = preset_cameras(preset, width, height, views, DEFAULT_BASELINE)?;
        let images = cameras.iter().map(|c| scene.render(c)).collect();
        Ok(Self { preset, cameras, images })
    }

    pub fn depth(&self) -> f64 {
        self.preset.depth()
    }

    pub fn views(&self) -> Vec<(Camera, ImageBuffer<f32>)> {
        self.cameras.iter().cloned().zip(self.images.iter().cloned()).collect()
    }
}

/// Parameters of a randomized splat scene.
#[derive(Clone, Debug)]
pub struct RandomSceneSpec {
    pub count: usize,
    pub width: u32,
    pub height: u32,
    pub texture_sizes: Vec<usize>,
    pub sh_degree: usize,
    /// Largest tilt of a splat normal away from the camera axis, radians.
    pub max_tilt: f64,
}

impl Default for RandomSceneSpec {
    fn default() -> Self {
        Self { count: 16, width: 128, height: 128, texture_sizes: vec![1, 2, 4, 8], sh_degree: 1, max_tilt: 1.0 }
    }
}

/// Random unit quaternion whose normal axis is tilted at most `max_tilt` from +z.
pub fn random_tilted_quat(rng: &mut impl Rng, max_tilt: f64) -> [f64; 4] {
    let spin = rng.gen_range(0.0..std::f64::consts::TAU);
    let tilt = rng.gen_range(0.0..max_tilt);
    let axis_angle = rng.gen_range(0.0..std::f64::consts::TAU);
    // q = q_tilt(about axis in xy-plane) · q_spin(about z)
    let (hs, hc) = ((spin / 2.0).sin(), (spin / 2.0).cos());
    let (ts, tc) = ((tilt / 2.0).sin(), (tilt / 2.0).cos());
    let (ax, ay) = (axis_angle.cos(), axis_angle.sin());
    let spin_q = [hc, 0.0, 0.0, hs];
    let tilt_q = [tc, ts * ax, ts * ay, 0.0];
    normalize_quat(quat_mul(tilt_q, spin_q))
}

fn quat_mul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

/// Random camera looking roughly down +z at the unit-depth-ish scene volume.
pub fn random_camera(rng: &mut impl Rng, width: u32, height: u32) -> Camera {
    let f = rng.gen_range(0.8..1.2) * width as f64;
    Camera::look_at(
        [rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.0)],
        [rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), 3.0],
        f,
        f * rng.gen_range(0.95..1.05),
        (width as f64 - 1.0) / 2.0 + rng.gen_range(-2.0..2.0),
        (height as f64 - 1.0) / 2.0 + rng.gen_range(-2.0..2.0),
        width,
        height,
    )
    .expect("random camera is valid")
}

/// Random primitives inside the view volume of a [`random_camera`]. Colors
/// stay within `[0, 1]`.
pub fn random_primitives(rng: &mut impl Rng, spec: &RandomSceneSpec) -> Vec<TexturedPrimitive<f64>> {
    (0..spec.count)
        .map(|_| {
            let z = rng.gen_range(2.0..4.5);
            let center = [rng.gen_range(-0.45..0.45) * z, rng.gen_range(-0.45..0.45) * z, z];
            let rotation = random_tilted_quat(rng, spec.max_tilt);
            let scale = [rng.gen_range(0.04..0.25), rng.gen_range(0.04..0.25)];
            let base = [rng.gen_range(0.15..0.75), rng.gen_range(0.15..0.75), rng.gen_range(0.15..0.75)];
            let mut p = TexturedPrimitive::plain(center, rotation, scale, rng.gen_range(0.1..0.95), base);
            p.set_sh_degree(spec.sh_degree);
            for k in 1..p.sh.len() {
                for ch in 0..3 {
                    p.sh[k][ch] = rng.gen_range(-0.05..0.05) / SH_C0;
                }
            }
            let t = spec.texture_sizes[rng.gen_range(0..spec.texture_sizes.len())];
            p.reset_textures(t, rng.gen_range(0.8..2.0));
            for c in p.color_texture.iter_mut() {
                *c = [rng.gen_range(-0.08..0.08), rng.gen_range(-0.08..0.08), rng.gen_range(-0.08..0.08)];
            }
            for a in p.alpha_texture.iter_mut() {
                *a = rng.gen_range(0.05..1.0);
            }
            p
        })
        .collect()
}

/// A random scene for oracle tests: camera plus primitives.
pub fn random_scene(seed: u64, spec: &RandomSceneSpec) -> (Camera, Vec<TexturedPrimitive<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cam = random_camera(&mut rng, spec.width, spec.height);
    let prims = random_primitives(&mut rng, spec);
    (cam, prims)
}

/// Mode label for test output.
pub fn mode_name(mode: RenderMode) -> &'static str {
    match mode {
        RenderMode::Plain2dgs => "plain2dgs",
        RenderMode::Textured => "textured",
    }
}
