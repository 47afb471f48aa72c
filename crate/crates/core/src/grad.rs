//! Reverse-mode gradients of an image loss with respect to every primitive
//! parameter, and a central finite-difference checker.
//!
//! The backward pass re-walks each pixel's contribution list. With `R` the
//! color composited behind contribution `i` (starting from the background),
//!
//! ```text
//! ∂C/∂cᵢ = aᵢ·Tᵢ      ∂C/∂aᵢ = Tᵢ·(cᵢ − R)      R ← aᵢ·cᵢ + (1 − aᵢ)·R
//! ```
//!
//! Local coordinates come from `h = M·(x, y, 1)`, `u = (h₀, h₁)/h₂`; their
//! gradients are accumulated into `∂L/∂M` per primitive and mapped to the
//! homography with `∂L/∂H = −Mᵀ·(∂L/∂M)·Mᵀ`. Support boundaries, the alpha
//! threshold and texture clamps are treated as constants.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{normalize_quat, quat_norm, quat_to_matrix, Camera};
use crate::image::ImageBuffer;
use crate::linalg::{Mat3, Vec3};
use crate::primitive::TexturedPrimitive;
use crate::raster::{render, sample_at, setup_view, Prepared, RenderConfig, RenderMode, Thresholds};
use crate::real::Real;
use crate::sampler::bilinear_sample_grad;
use crate::sh::{sh_basis, sh_basis_grad, sh_coeff_count};

/// Gradient of the loss with respect to one primitive; shapes mirror
/// [`TexturedPrimitive`].
#[derive(Clone, Debug, PartialEq)]
pub struct PrimitiveGrad<F = f32> {
    pub d_center: [F; 3],
    /// Ambient gradient with respect to the stored (possibly off-unit)
    /// quaternion.
    pub d_rotation: [F; 4],
    pub d_scale: [F; 2],
    pub d_opacity: F,
    pub d_sh: Vec<[F; 3]>,
    pub d_color_texture: Vec<[F; 3]>,
    pub d_alpha_texture: Vec<F>,
}

impl<F: Real> PrimitiveGrad<F> {
    pub fn zeros_like(p: &TexturedPrimitive<F>) -> Self {
        Self {
            d_center: [F::zero(); 3],
            d_rotation: [F::zero(); 4],
            d_scale: [F::zero(); 2],
            d_opacity: F::zero(),
            d_sh: vec![[F::zero(); 3]; p.sh.len()],
            d_color_texture: vec![[F::zero(); 3]; p.color_texture.len()],
            d_alpha_texture: vec![F::zero(); p.alpha_texture.len()],
        }
    }

    fn scalars(&self) -> impl Iterator<Item = F> + '_ {
        self.d_center
            .iter()
            .chain(&self.d_rotation)
            .chain(&self.d_scale)
            .chain(std::iter::once(&self.d_opacity))
            .chain(self.d_sh.iter().flatten())
            .chain(self.d_color_texture.iter().flatten())
            .chain(&self.d_alpha_texture)
            .copied()
    }

    fn scalars_mut(&mut self) -> impl Iterator<Item = &mut F> + '_ {
        self.d_center
            .iter_mut()
            .chain(self.d_rotation.iter_mut())
            .chain(self.d_scale.iter_mut())
            .chain(std::iter::once(&mut self.d_opacity))
            .chain(self.d_sh.iter_mut().flatten())
            .chain(self.d_color_texture.iter_mut().flatten())
            .chain(self.d_alpha_texture.iter_mut())
    }

    pub fn is_finite(&self) -> bool {
        self.scalars().all(|v| v.is_finite())
    }

    /// `self += k·other`; shapes must match.
    pub fn add_scaled(&mut self, other: &Self, k: F) {
        for (a, b) in self.scalars_mut().zip(other.scalars()) {
            *a += k * b;
        }
    }

    /// Value of one scalar of a parameter group.
    pub fn get(&self, group: ParamGroup, index: usize) -> F {
        match group {
            ParamGroup::Center => self.d_center[index],
            ParamGroup::Rotation => self.d_rotation[index],
            ParamGroup::Scale => self.d_scale[index],
            ParamGroup::Opacity => self.d_opacity,
            ParamGroup::Sh => self.d_sh[index / 3][index % 3],
            ParamGroup::ColorTexture => self.d_color_texture[index / 3][index % 3],
            ParamGroup::AlphaTexture => self.d_alpha_texture[index],
        }
    }

    pub fn get_mut(&mut self, group: ParamGroup, index: usize) -> &mut F {
        match group {
            ParamGroup::Center => &mut self.d_center[index],
            ParamGroup::Rotation => &mut self.d_rotation[index],
            ParamGroup::Scale => &mut self.d_scale[index],
            ParamGroup::Opacity => &mut self.d_opacity,
            ParamGroup::Sh => &mut self.d_sh[index / 3][index % 3],
            ParamGroup::ColorTexture => &mut self.d_color_texture[index / 3][index % 3],
            ParamGroup::AlphaTexture => &mut self.d_alpha_texture[index],
        }
    }
}

/// Gradients for a whole primitive list, index-aligned with it.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet<F = f32> {
    pub prims: Vec<PrimitiveGrad<F>>,
}

impl<F: Real> GradientSet<F> {
    pub fn zeros_like(prims: &[TexturedPrimitive<F>]) -> Self {
        Self { prims: prims.iter().map(PrimitiveGrad::zeros_like).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.prims.iter().all(PrimitiveGrad::is_finite)
    }

    pub fn add_scaled(&mut self, other: &Self, k: F) {
        for (a, b) in self.prims.iter_mut().zip(&other.prims) {
            a.add_scaled(b, k);
        }
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> F {
        self.prims.iter().flat_map(|g| g.scalars()).fold(F::zero(), |m, v| m.max(v.abs()))
    }
}

/// Learnable parameter groups of a primitive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamGroup {
    Center,
    Rotation,
    Scale,
    Opacity,
    Sh,
    ColorTexture,
    AlphaTexture,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 7] = [
        ParamGroup::Center,
        ParamGroup::Rotation,
        ParamGroup::Scale,
        ParamGroup::Opacity,
        ParamGroup::Sh,
        ParamGroup::ColorTexture,
        ParamGroup::AlphaTexture,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamGroup::Center => "center",
            ParamGroup::Rotation => "rotation",
            ParamGroup::Scale => "scale",
            ParamGroup::Opacity => "opacity",
            ParamGroup::Sh => "sh",
            ParamGroup::ColorTexture => "color_texture",
            ParamGroup::AlphaTexture => "alpha_texture",
        }
    }

    /// Number of scalars of this group in `p`.
    pub fn len<F: Real>(self, p: &TexturedPrimitive<F>) -> usize {
        match self {
            ParamGroup::Center => 3,
            ParamGroup::Rotation => 4,
            ParamGroup::Scale => 2,
            ParamGroup::Opacity => 1,
            ParamGroup::Sh => p.sh.len() * 3,
            ParamGroup::ColorTexture => p.color_texture.len() * 3,
            ParamGroup::AlphaTexture => p.alpha_texture.len(),
        }
    }
}

/// Mutable access to one scalar parameter of a primitive.
pub fn param_mut<F: Real>(p: &mut TexturedPrimitive<F>, group: ParamGroup, index: usize) -> &mut F {
    match group {
        ParamGroup::Center => &mut p.center[index],
        ParamGroup::Rotation => &mut p.rotation[index],
        ParamGroup::Scale => &mut p.scale[index],
        ParamGroup::Opacity => &mut p.opacity,
        ParamGroup::Sh => &mut p.sh[index / 3][index % 3],
        ParamGroup::ColorTexture => &mut p.color_texture[index / 3][index % 3],
        ParamGroup::AlphaTexture => &mut p.alpha_texture[index],
    }
}

/// Per-primitive accumulators for one band of pixel rows.
#[derive(Clone)]
struct Accum<F> {
    d_m: [[F; 3]; 3],
    d_base: [F; 3],
    d_opacity: F,
    d_color: Vec<[F; 3]>,
    d_alpha: Vec<F>,
}

impl<F: Real> Accum<F> {
    fn new(texels: usize) -> Self {
        Self {
            d_m: [[F::zero(); 3]; 3],
            d_base: [F::zero(); 3],
            d_opacity: F::zero(),
            d_color: vec![[F::zero(); 3]; texels],
            d_alpha: vec![F::zero(); texels],
        }
    }

    fn merge(&mut self, o: &Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.d_m[i][j] += o.d_m[i][j];
            }
            self.d_base[i] += o.d_base[i];
        }
        self.d_opacity += o.d_opacity;
        for (a, b) in self.d_color.iter_mut().zip(&o.d_color) {
            for ch in 0..3 {
                a[ch] += b[ch];
            }
        }
        for (a, b) in self.d_alpha.iter_mut().zip(&o.d_alpha) {
            *a += *b;
        }
    }
}

/// Sparse accumulator set: only primitives touched by the band are allocated.
struct BandAccum<F> {
    slots: Vec<Option<Box<Accum<F>>>>,
    touched: Vec<usize>,
}

impl<F: Real> BandAccum<F> {
    fn slot(&mut self, k: usize, texels: usize) -> &mut Accum<F> {
        if self.slots[k].is_none() {
            self.slots[k] = Some(Box::new(Accum::new(texels)));
            self.touched.push(k);
        }
        self.slots[k].as_mut().unwrap()
    }
}

fn check_loss_image<F: Real>(cam: &Camera, d_color: &ImageBuffer<F>) -> Result<()> {
    if d_color.width != cam.width as usize || d_color.height != cam.height as usize || d_color.channels != 3 {
        return Err(Error::invalid(format!(
            "loss gradient image is {}×{}×{}, render is {}×{}×3",
            d_color.width, d_color.height, d_color.channels, cam.width, cam.height
        )));
    }
    Ok(())
}

/// Gradients of a loss `L(C)` given `∂L/∂C` for the image rendered with the
/// same primitives, camera and config.
pub fn render_backward<F: Real>(
    prims: &[TexturedPrimitive<F>],
    cam: &Camera,
    cfg: &RenderConfig,
    d_color: &ImageBuffer<F>,
) -> Result<GradientSet<F>> {
    cfg.validate()?;
    cam.validate()?;
    check_loss_image(cam, d_color)?;
    let setup = setup_view(prims, cam, cfg);
    let th = Thresholds::<F>::new(cfg);
    let textured = cfg.mode == RenderMode::Textured;
    let (width, height) = (cam.width as usize, cam.height as usize);
    let ts = setup.tile_size;

    let bands: Vec<BandAccum<F>> = (0..setup.tiles_y)
        .into_par_iter()
        .map(|ty| {
            let mut acc = BandAccum { slots: vec![None; setup.prepared.len()], touched: Vec::new() };
            let mut contribs = Vec::new();
            for tx in 0..setup.tiles_x {
                let list = &setup.tiles[ty * setup.tiles_x + tx];
                if list.is_empty() {
                    continue;
                }
                let (x0, y0) = (tx * ts, ty * ts);
                for y in y0..(y0 + ts).min(height) {
                    for x in x0..(x0 + ts).min(width) {
                        let g = d_color.pixel(x, y);
                        let g = [g[0], g[1], g[2]];
                        if g.iter().all(|v| *v == F::zero()) {
                            continue;
                        }
                        let (xf, yf) = (F::of(x as f64), F::of(y as f64));
                        contribs.clear();
                        let mut trans = F::one();
                        for &k in list {
                            let prep = &setup.prepared[k as usize];
                            let Some(s) = sample_at(prep, &prims[prep.index], xf, yf, &th) else { continue };
                            contribs.push((k as usize, s, trans));
                            trans *= F::one() - s.alpha;
                            if trans < th.transmittance_min {
                                break;
                            }
                        }
                        let mut behind = th.background;
                        for &(k, s, t_i) in contribs.iter().rev() {
                            let prep = &setup.prepared[k];
                            let p = &prims[prep.index];
                            let w = s.alpha * t_i;
                            let gc = [g[0] * w, g[1] * w, g[2] * w];
                            let mut ga = F::zero();
                            for ch in 0..3 {
                                ga += g[ch] * (s.color[ch] - behind[ch]);
                                behind[ch] = s.alpha * s.color[ch] + (F::one() - s.alpha) * behind[ch];
                            }
                            ga *= t_i;
                            let a = acc.slot(k, if textured { p.texel_count() } else { 0 });
                            for ch in 0..3 {
                                a.d_base[ch] += gc[ch];
                            }
                            a.d_opacity += ga * s.falloff;
                            let d_falloff = ga * p.opacity;
                            let mut du = [F::zero(); 2];
                            if textured {
                                let t = p.texture_size;
                                let sa = bilinear_sample_grad(&p.alpha_texture, t, s.u, p.texture_sigma);
                                let sc = bilinear_sample_grad(&p.color_texture, t, s.u, p.texture_sigma);
                                for j in 0..4 {
                                    let (idx, wt) = (sa.taps.index[j], sa.taps.weight[j]);
                                    a.d_alpha[idx] += d_falloff * wt;
                                    for ch in 0..3 {
                                        a.d_color[idx][ch] += gc[ch] * wt;
                                    }
                                }
                                for ax in 0..2 {
                                    du[ax] = d_falloff * sa.d_u[ax];
                                    for ch in 0..3 {
                                        du[ax] += gc[ch] * sc.d_u[ax][ch];
                                    }
                                }
                            } else {
                                let k = -d_falloff * s.falloff;
                                du = [k * s.u.x, k * s.u.y];
                            }
                            // u = h₀/h₂, v = h₁/h₂ with 1/h₂ = depth.
                            let dh = [du[0] * s.depth, du[1] * s.depth, -(du[0] * s.u.x + du[1] * s.u.y) * s.depth];
                            let pix = [xf, yf, F::one()];
                            for i in 0..3 {
                                for j in 0..3 {
                                    a.d_m[i][j] += dh[i] * pix[j];
                                }
                            }
                        }
                    }
                }
            }
            acc
        })
        .collect();

    // Fixed reduction order: bands top to bottom, primitives in first-touch order.
    let mut total: Vec<Option<Box<Accum<F>>>> = vec![None; setup.prepared.len()];
    for band in bands {
        let BandAccum { mut slots, touched } = band;
        for k in touched {
            let a = slots[k].take().unwrap();
            match &mut total[k] {
                Some(t) => t.merge(&a),
                t @ None => *t = Some(a),
            }
        }
    }

    let mut out = GradientSet::zeros_like(prims);
    for (k, acc) in total.into_iter().enumerate() {
        if let Some(acc) = acc {
            let prep = &setup.prepared[k];
            out.prims[prep.index] = primitive_grad(&prims[prep.index], prep, &acc, cam, textured);
        }
    }
    Ok(out)
}

fn primitive_grad<F: Real>(
    p: &TexturedPrimitive<F>,
    prep: &Prepared<F>,
    acc: &Accum<F>,
    cam: &Camera,
    textured: bool,
) -> PrimitiveGrad<F> {
    let mut g = PrimitiveGrad::zeros_like(p);
    g.d_opacity = acc.d_opacity;
    if textured {
        g.d_color_texture.clone_from(&acc.d_color);
        g.d_alpha_texture.clone_from(&acc.d_alpha);
    }

    // Base color = Σₖ shₖ·Yₖ(d).
    let n = sh_coeff_count(prep.sh_degree);
    let mut basis = [F::zero(); 16];
    let mut basis_grad = [Vec3::zero(); 16];
    sh_basis(prep.dir, prep.sh_degree, &mut basis);
    sh_basis_grad(prep.dir, prep.sh_degree, &mut basis_grad);
    let mut d_dir = Vec3::zero();
    for k in 0..n {
        let mut w = F::zero();
        for ch in 0..3 {
            g.d_sh[k][ch] = acc.d_base[ch] * basis[k];
            w += acc.d_base[ch] * p.sh[k][ch];
        }
        d_dir += basis_grad[k].scale(w);
    }
    // d = v/‖v‖ ⇒ ∂d/∂v = (I − d·dᵀ)/‖v‖.
    let d = prep.dir;
    let d_center_view = (d_dir - d.scale(d.dot(d_dir))).scale(F::one() / prep.dist);

    let m = prep.proj.pixel_to_plane;
    let d_m = Mat3 { m: acc.d_m };
    let mt = m.transpose();
    let d_h = (mt * d_m * mt).scale(-F::one());
    let (g0, g1, g2) = (d_h.col(0), d_h.col(1), d_h.col(2));

    let a = cam.intrinsics::<F>() * cam.rotation_matrix::<F>();
    let at = a.transpose();
    let q = normalize_quat(p.rotation);
    let frame = quat_to_matrix(q);
    let (tu, tv) = (frame.col(0), frame.col(1));
    g.d_scale = [g0.dot(a * tu), g1.dot(a * tv)];
    let d_tu = (at * g0).scale(p.scale[0]);
    let d_tv = (at * g1).scale(p.scale[1]);
    let d_center = at * g2 + d_center_view;
    g.d_center = d_center.to_array();

    let dq = quat_grad_from_columns(q, d_tu, d_tv);
    // q̂ = q/‖q‖ ⇒ ∂L/∂q = (g − (g·q̂)·q̂)/‖q‖.
    let dot = dq[0] * q[0] + dq[1] * q[1] + dq[2] * q[2] + dq[3] * q[3];
    let inv = F::one() / quat_norm(p.rotation);
    g.d_rotation = [0, 1, 2, 3].map(|i| (dq[i] - dot * q[i]) * inv);
    g
}

/// `∂L/∂q` for a unit quaternion given gradients of the first two columns of
/// its rotation matrix.
fn quat_grad_from_columns<F: Real>(q: [F; 4], c0: Vec3<F>, c1: Vec3<F>) -> [F; 4] {
    let [w, x, y, z] = q;
    let two = F::two();
    // Column 0 = (1 − 2(y²+z²), 2(xy + wz), 2(xz − wy)).
    // Column 1 = (2(xy − wz), 1 − 2(x²+z²), 2(yz + wx)).
    let dw = two * (c0.y * z - c0.z * y - c1.x * z + c1.z * x);
    let dx = two * (c0.y * y + c0.z * z + c1.x * y - two * c1.y * x + c1.z * w);
    let dy = two * (-two * c0.x * y + c0.y * x - c0.z * w + c1.x * x + c1.z * z);
    let dz = two * (-two * c0.x * z + c0.y * w + c0.z * x - c1.x * w - two * c1.y * z + c1.z * y);
    [dw, dx, dy, dz]
}

/// Loss callback: value and `∂L/∂C` for a rendered image.
pub type LossFn<'a> = dyn Fn(&ImageBuffer<f64>) -> (f64, ImageBuffer<f64>) + Sync + 'a;

#[derive(Clone, Debug)]
pub struct FdOptions {
    /// Central-difference step, absolute.
    pub step: f64,
    /// Largest accepted relative error.
    pub tolerance: f64,
    /// Added to the relative-error denominator so that parameters with
    /// negligible influence do not divide by zero.
    pub abs_floor: f64,
    pub groups: Vec<ParamGroup>,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self { step: 1e-6, tolerance: 2e-3, abs_floor: 1e-6, groups: ParamGroup::ALL.to_vec() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamLocation {
    pub primitive: usize,
    pub group: ParamGroup,
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct GroupReport {
    pub group: ParamGroup,
    pub checked: usize,
    /// Parameters whose one-sided slopes disagree, i.e. a support, threshold
    /// or clamp boundary lies within one step.
    pub excluded: usize,
    pub max_rel_err: f64,
    pub mean_rel_err: f64,
    pub worst: Option<ParamLocation>,
}

#[derive(Clone, Debug)]
pub struct FdReport {
    pub groups: Vec<GroupReport>,
    pub tolerance: f64,
}

impl FdReport {
    pub fn max_rel_err(&self) -> f64 {
        self.groups.iter().map(|g| g.max_rel_err).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<ParamLocation> {
        self.groups.iter().max_by(|a, b| a.max_rel_err.total_cmp(&b.max_rel_err)).and_then(|g| g.worst)
    }

    /// Groups whose worst relative error exceeds the tolerance.
    pub fn flagged(&self) -> Vec<ParamGroup> {
        self.groups.iter().filter(|g| g.max_rel_err > self.tolerance).map(|g| g.group).collect()
    }

    pub fn passed(&self) -> bool {
        self.flagged().is_empty()
    }

    pub fn checked(&self) -> usize {
        self.groups.iter().map(|g| g.checked).sum()
    }

    pub fn excluded(&self) -> usize {
        self.groups.iter().map(|g| g.excluded).sum()
    }

    pub fn group(&self, group: ParamGroup) -> Option<&GroupReport> {
        self.groups.iter().find(|g| g.group == group)
    }
}

fn eval_loss(prims: &[TexturedPrimitive<f64>], cam: &Camera, cfg: &RenderConfig, loss: &LossFn) -> Result<f64> {
    Ok(loss(&render(prims, cam, cfg)?.color).0)
}

/// Analytic gradients from [`render_backward`] checked against central
/// differences of the tiled renderer.
pub fn fd_check(
    prims: &[TexturedPrimitive<f64>],
    cam: &Camera,
    cfg: &RenderConfig,
    loss: &LossFn,
    opts: &FdOptions,
) -> Result<FdReport> {
    let out = render(prims, cam, cfg)?;
    let (_, d_color) = loss(&out.color);
    let analytic = render_backward(prims, cam, cfg, &d_color)?;
    fd_check_against(prims, cam, cfg, loss, &analytic, opts)
}

/// Checks a supplied gradient set against central differences.
pub fn fd_check_against(
    prims: &[TexturedPrimitive<f64>],
    cam: &Camera,
    cfg: &RenderConfig,
    loss: &LossFn,
    analytic: &GradientSet<f64>,
    opts: &FdOptions,
) -> Result<FdReport> {
    if !(opts.step > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    if analytic.prims.len() != prims.len() {
        return Err(Error::invalid("gradient set does not match the primitive list"));
    }
    let base = eval_loss(prims, cam, cfg, loss)?;
    let mut locations = Vec::new();
    for group in &opts.groups {
        for (i, p) in prims.iter().enumerate() {
            for index in 0..group.len(p) {
                locations.push(ParamLocation { primitive: i, group: *group, index });
            }
        }
    }
    let h = opts.step;
    let probes: Vec<(ParamLocation, f64, f64)> = locations
        .par_iter()
        .map(|loc| {
            let mut probe = prims.to_vec();
            let orig = *param_mut(&mut probe[loc.primitive], loc.group, loc.index);
            *param_mut(&mut probe[loc.primitive], loc.group, loc.index) = orig + h;
            let plus = eval_loss(&probe, cam, cfg, loss)?;
            *param_mut(&mut probe[loc.primitive], loc.group, loc.index) = orig - h;
            let minus = eval_loss(&probe, cam, cfg, loss)?;
            Ok((*loc, plus, minus))
        })
        .collect::<Result<_>>()?;

    let mut groups: Vec<GroupReport> = opts
        .groups
        .iter()
        .map(|&group| GroupReport { group, checked: 0, excluded: 0, max_rel_err: 0.0, mean_rel_err: 0.0, worst: None })
        .collect();
    for (loc, plus, minus) in probes {
        let gr = groups.iter_mut().find(|g| g.group == loc.group).unwrap();
        let fwd = (plus - base) / h;
        let bwd = (base - minus) / h;
        if (fwd - bwd).abs() > opts.tolerance * (fwd.abs().max(bwd.abs()) + opts.abs_floor) {
            gr.excluded += 1;
            continue;
        }
        let fd = (plus - minus) / (2.0 * h);
        let a = analytic.prims[loc.primitive].get(loc.group, loc.index);
        let rel = (a - fd).abs() / (a.abs().max(fd.abs()) + opts.abs_floor);
        gr.checked += 1;
        gr.mean_rel_err += rel;
        if rel > gr.max_rel_err || gr.worst.is_none() {
            gr.max_rel_err = gr.max_rel_err.max(rel);
            gr.worst = Some(loc);
        }
    }
    for g in groups.iter_mut() {
        if g.checked > 0 {
            g.mean_rel_err /= g.checked as f64;
        }
    }
    Ok(FdReport { groups, tolerance: opts.tolerance })
}
