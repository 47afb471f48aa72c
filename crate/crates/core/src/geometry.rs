//! Splat geometry: tangent frames, pinhole cameras and the ray–splat homography.
//!
//! A splat with center `μ`, tangent axes `t_u, t_v` and scales `s_u, s_v`
//! parameterizes its plane as `P(u, v) = μ + s_u·u·t_u + s_v·v·t_v`. Projecting
//! through a camera with intrinsics `K` and extrinsics `(R, t)` gives
//!
//! ```text
//! H = [ s_u·K·R·t_u | s_v·K·R·t_v | K·(R·μ + t) ]
//! ```
//!
//! which maps homogeneous local coordinates `(u, v, 1)` to homogeneous pixel
//! coordinates. Its inverse `M = H⁻¹` maps a pixel back to the intersection of
//! the pixel's ray with the splat plane. The third component of `M·(x, y, 1)`
//! equals `1 / z`, where `z` is the view-space depth of the intersection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec2, Vec3};
use crate::primitive::TexturedPrimitive;
use crate::real::Real;

/// Default relative determinant threshold below which a homography is degenerate.
pub const DET_EPSILON: f64 = 1e-9;
/// Default minimum view-space depth of a splat center.
pub const NEAR_PLANE: f64 = 1e-3;
/// Homogeneous `w` at or below which an intersection counts as behind the camera.
pub const W_EPSILON: f64 = 1e-9;

const UNIT_TOLERANCE: f64 = 1e-6;

/// Rotation matrix of a quaternion `(w, x, y, z)` assumed to be of unit length.
pub fn quat_to_matrix<F: Real>(q: [F; 4]) -> Mat3<F> {
    let [w, x, y, z] = q;
    let one = F::one();
    let two = F::two();
    Mat3::from_rows([
        [one - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y)],
        [two * (x * y + w * z), one - two * (x * x + z * z), two * (y * z - w * x)],
        [two * (x * z - w * y), two * (y * z + w * x), one - two * (x * x + y * y)],
    ])
}

pub fn quat_norm<F: Real>(q: [F; 4]) -> F {
    (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt()
}

pub fn normalize_quat<F: Real>(q: [F; 4]) -> [F; 4] {
    let n = quat_norm(q);
    [q[0] / n, q[1] / n, q[2] / n, q[3] / n]
}

/// Quaternion `(w, x, y, z)` of a proper rotation matrix (Shepperd's method).
pub fn matrix_to_quat(r: &Mat3<f64>) -> [f64; 4] {
    let m = &r.m;
    let trace = m[0][0] + m[1][1] + m[2][2];
    let q = if trace > 0.0 {
        let s = (trace + 1.0).sqrt() * 2.0;
        [0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s]
    } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
        let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
        [(m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s]
    } else if m[1][1] > m[2][2] {
        let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
        [(m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s]
    } else {
        let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
        [(m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s]
    };
    normalize_quat(q)
}

/// Tangent frame `(t_u, t_v, normal)` of a unit quaternion: the columns of its
/// rotation matrix.
pub fn rotation_to_tangent_frame<F: Real>(q: [F; 4]) -> Result<(Vec3<F>, Vec3<F>, Vec3<F>)> {
    let n = quat_norm(q).as_f64();
    if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::invalid(format!("rotation quaternion has norm {n}, expected 1")));
    }
    let r = quat_to_matrix(q);
    Ok((r.col(0), r.col(1), r.col(2)))
}

/// Standard 2D Gaussian `exp(-½‖u‖²)`.
#[inline]
pub fn eval_gaussian<F: Real>(u: Vec2<F>) -> F {
    (-F::half() * u.norm_sq()).exp()
}

/// Pinhole camera. Pixel centers sit at integer coordinates; the camera looks
/// down `+z` with `x` to the right and `y` down.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// World-to-camera rotation, row-major.
    pub rotation: [[f64; 3]; 3],
    /// World-to-camera translation.
    pub translation: [f64; 3],
}

impl Camera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        rotation: [[f64; 3]; 3],
        translation: [f64; 3],
    ) -> Result<Self> {
        let cam = Self { fx, fy, cx, cy, width, height, rotation, translation };
        cam.validate()?;
        Ok(cam)
    }

    /// Camera at the origin looking down `+z`.
    pub fn identity_pose(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Self {
        Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        }
    }

    /// Camera at `eye` looking at `target`, with world `+y` mapping to image down.
    pub fn look_at(
        eye: [f64; 3],
        target: [f64; 3],
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let eye = Vec3::from_array(eye);
        let forward = (Vec3::from_array(target) - eye).normalized();
        let down = Vec3::new(0.0, 1.0, 0.0);
        let right = down.cross(forward);
        if right.norm() < 1e-9 {
            return Err(Error::invalid("look_at direction is parallel to the down axis"));
        }
        let right = right.normalized();
        let down = forward.cross(right);
        let rotation = [right.to_array(), down.to_array(), forward.to_array()];
        let r = Mat3::from_rows(rotation);
        let t = -(r * eye);
        Self::new(fx, fy, cx, cy, width, height, rotation, t.to_array())
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("camera width and height must be at least 1"));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(Error::invalid("camera focal lengths must be positive and finite"));
        }
        if !self.cx.is_finite() || !self.cy.is_finite() || self.translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("camera parameters must be finite"));
        }
        let r = self.rotation_matrix::<f64>();
        let rtr = r.transpose() * r;
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                if (rtr.m[i][j] - e).abs() > 1e-6 {
                    return Err(Error::invalid("camera rotation is not orthonormal"));
                }
            }
        }
        Ok(())
    }

    pub fn intrinsics<F: Real>(&self) -> Mat3<F> {
        Mat3::from_rows([
            [F::of(self.fx), F::zero(), F::of(self.cx)],
            [F::zero(), F::of(self.fy), F::of(self.cy)],
            [F::zero(), F::zero(), F::one()],
        ])
    }

    pub fn rotation_matrix<F: Real>(&self) -> Mat3<F> {
        Mat3::from_rows(self.rotation).cast()
    }

    pub fn translation_vec<F: Real>(&self) -> Vec3<F> {
        Vec3::from_array(self.translation).cast()
    }

    /// Camera center in world coordinates, `-Rᵀ·t`.
    pub fn center<F: Real>(&self) -> Vec3<F> {
        let r = self.rotation_matrix::<f64>();
        (-(r.transpose() * Vec3::from_array(self.translation))).cast()
    }

    pub fn world_to_camera<F: Real>(&self, p: Vec3<F>) -> Vec3<F> {
        self.rotation_matrix::<F>() * p + self.translation_vec()
    }

    /// Pixel coordinates of a camera-space point, `None` behind the camera.
    pub fn project_camera_point<F: Real>(&self, p: Vec3<F>) -> Option<Vec2<F>> {
        if p.z <= F::zero() {
            return None;
        }
        Some(Vec2::new(
            F::of(self.fx) * p.x / p.z + F::of(self.cx),
            F::of(self.fy) * p.y / p.z + F::of(self.cy),
        ))
    }

    /// Same pose and field of view at `factor`× the resolution, keeping
    /// half-pixel-center alignment with the original pixel grid.
    pub fn scaled(&self, factor: f64) -> Self {
        let width = ((self.width as f64) * factor).round().max(1.0) as u32;
        let height = ((self.height as f64) * factor).round().max(1.0) as u32;
        Self {
            fx: self.fx * factor,
            fy: self.fy * factor,
            cx: (self.cx + 0.5) * factor - 0.5,
            cy: (self.cy + 0.5) * factor - 0.5,
            width,
            height,
            rotation: self.rotation,
            translation: self.translation,
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Half-open integer pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelRect {
    pub fn is_empty(&self) -> bool {
        self.x0 >= self.x1 || self.y0 >= self.y1
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

/// Local support domain used to bound a splat on screen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportConfig {
    /// Half-width of the square `‖u‖_∞ ≤ half_extent` containing the support.
    pub half_extent: f64,
    pub det_epsilon: f64,
    pub near_plane: f64,
}

impl SupportConfig {
    pub fn new(half_extent: f64) -> Self {
        Self { half_extent, det_epsilon: DET_EPSILON, near_plane: NEAR_PLANE }
    }
}

/// Per-(primitive, view) projection data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplatProjection<F> {
    pub plane_to_pixel: Mat3<F>,
    pub pixel_to_plane: Mat3<F>,
    pub center_depth: F,
    pub screen_bbox: PixelRect,
    pub valid: bool,
}

impl<F: Real> SplatProjection<F> {
    fn invalid(plane_to_pixel: Mat3<F>, center_depth: F) -> Self {
        Self {
            plane_to_pixel,
            pixel_to_plane: Mat3::zero(),
            center_depth,
            screen_bbox: PixelRect::default(),
            valid: false,
        }
    }

    /// Pixel position of local coordinates `u`, `None` if behind the camera.
    pub fn local_to_pixel(&self, u: Vec2<F>) -> Option<Vec2<F>> {
        let h = self.plane_to_pixel * Vec3::new(u.x, u.y, F::one());
        if h.z <= F::of(W_EPSILON) {
            return None;
        }
        Some(Vec2::new(h.x / h.z, h.y / h.z))
    }
}

/// Columns `(s_u·R·t_u, s_v·R·t_v, R·μ + t)` of the camera-space splat frame.
pub(crate) fn camera_space_frame<F: Real>(p: &TexturedPrimitive<F>, cam: &Camera) -> (Mat3<F>, Vec3<F>) {
    let frame = quat_to_matrix(normalize_quat(p.rotation));
    let r = cam.rotation_matrix::<F>();
    let center_cam = r * p.center + cam.translation_vec();
    let cu = (r * frame.col(0)).scale(p.scale[0]);
    let cv = (r * frame.col(1)).scale(p.scale[1]);
    (Mat3::from_cols(cu, cv, center_cam), center_cam)
}

/// Builds the homography pair for one primitive seen from one camera.
/// The rotation is normalized before use so that off-unit quaternions (as
/// produced by finite-difference probes) stay well defined.
pub fn build_splat_projection<F: Real>(
    p: &TexturedPrimitive<F>,
    cam: &Camera,
    support: &SupportConfig,
) -> SplatProjection<F> {
    let (frame, center_cam) = camera_space_frame(p, cam);
    let h = cam.intrinsics::<F>() * frame;
    let depth = center_cam.z;
    if !h.is_finite() || depth.as_f64() < support.near_plane {
        return SplatProjection::invalid(h, depth);
    }
    let scale = h.norm_inf().as_f64();
    let det = h.determinant().as_f64();
    if det.abs() < support.det_epsilon * scale * scale * scale {
        return SplatProjection::invalid(h, depth);
    }
    let Some(m) = h.inverse() else {
        return SplatProjection::invalid(h, depth);
    };
    SplatProjection {
        plane_to_pixel: h,
        pixel_to_plane: m,
        center_depth: depth,
        screen_bbox: screen_bounds(&h, support.half_extent, cam.width, cam.height),
        valid: true,
    }
}

fn screen_bounds<F: Real>(h: &Mat3<F>, half_extent: f64, width: u32, height: u32) -> PixelRect {
    let full = PixelRect { x0: 0, y0: 0, x1: width, y1: height };
    let h = h.cast::<f64>();
    let e = half_extent;
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (cu, cv) in [(-e, -e), (e, -e), (-e, e), (e, e)] {
        let q = h * Vec3::new(cu, cv, 1.0);
        // A support corner at or behind the camera plane: the image of the
        // support is unbounded, fall back to the whole screen.
        if q.z <= W_EPSILON {
            return full;
        }
        let (x, y) = (q.x / q.z, q.y / q.z);
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    let clip = |v: f64, hi: u32| -> u32 { v.clamp(0.0, hi as f64) as u32 };
    PixelRect {
        x0: clip(min_x.floor() - 1.0, width),
        y0: clip(min_y.floor() - 1.0, height),
        x1: clip(max_x.ceil() + 2.0, width),
        y1: clip(max_y.ceil() + 2.0, height),
    }
}

/// Ray–splat intersection for the pixel at continuous coordinates `(x, y)`.
/// Returns local coordinates and the view-space depth of the intersection.
#[inline]
pub fn intersect<F: Real>(proj: &SplatProjection<F>, x: F, y: F) -> Option<(Vec2<F>, F)> {
    let m = &proj.pixel_to_plane.m;
    let w = m[2][0] * x + m[2][1] * y + m[2][2];
    if w <= F::of(W_EPSILON) {
        return None;
    }
    let inv_w = F::one() / w;
    let u = (m[0][0] * x + m[0][1] * y + m[0][2]) * inv_w;
    let v = (m[1][0] * x + m[1][1] * y + m[1][2]) * inv_w;
    Some((Vec2::new(u, v), inv_w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_splat(center: [f64; 3], rotation: [f64; 4]) -> TexturedPrimitive<f64> {
        TexturedPrimitive::plain(center, rotation, [1.0, 1.0], 1.0, [0.5, 0.5, 0.5])
    }

    fn cam100() -> Camera {
        Camera::identity_pose(100.0, 100.0, 50.0, 50.0, 101, 101)
    }

    fn random_unit_quat(rng: &mut impl Rng) -> [f64; 4] {
        normalize_quat([
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ])
    }

    #[test]
    fn identity_frame() {
        let (tu, tv, n) = rotation_to_tangent_frame([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(tu, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(tv, Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(n, Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn quarter_turn_about_z() {
        let h = 0.5f64.sqrt();
        let (tu, tv, n) = rotation_to_tangent_frame([h, 0.0, 0.0, h]).unwrap();
        let close = |a: Vec3<f64>, b: Vec3<f64>| (a - b).norm() < 1e-12;
        assert!(close(tu, Vec3::new(0.0, 1.0, 0.0)));
        assert!(close(tv, Vec3::new(-1.0, 0.0, 0.0)));
        assert!(close(n, Vec3::new(0.0, 0.0, 1.0)));
    }

    #[test]
    fn non_unit_quaternion_rejected() {
        assert!(rotation_to_tangent_frame([1.0, 0.1, 0.0, 0.0]).is_err());
    }

    /// Rotation matrix via Rodrigues' formula from axis-angle, independent of
    /// the quaternion product expansion.
    fn rodrigues(q: [f64; 4]) -> Mat3<f64> {
        let angle = 2.0 * q[0].clamp(-1.0, 1.0).acos();
        let s = (1.0 - q[0] * q[0]).sqrt();
        let axis = if s < 1e-12 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(q[1] / s, q[2] / s, q[3] / s) };
        let k = Mat3::from_rows([[0.0, -axis.z, axis.y], [axis.z, 0.0, -axis.x], [-axis.y, axis.x, 0.0]]);
        Mat3::identity() + k.scale(angle.sin()) + (k * k).scale(1.0 - angle.cos())
    }

    #[test]
    fn random_frames_match_rodrigues() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let q = random_unit_quat(&mut rng);
            let (tu, tv, n) = rotation_to_tangent_frame(q).unwrap();
            let r = rodrigues(q);
            assert!((tu - r.col(0)).norm() < 1e-9);
            assert!((tv - r.col(1)).norm() < 1e-9);
            assert!((n - r.col(2)).norm() < 1e-9);
            assert!((tu.dot(tv)).abs() < 1e-12);
            assert!((tu.cross(tv).dot(n) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_quat_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let q = random_unit_quat(&mut rng);
            let back = matrix_to_quat(&quat_to_matrix(q));
            let sign = if back[0] * q[0] + back[1] * q[1] + back[2] * q[2] + back[3] * q[3] < 0.0 { -1.0 } else { 1.0 };
            for i in 0..4 {
                assert!((back[i] * sign - q[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fronto_parallel_intersections() {
        let p = unit_splat([0.0, 0.0, 2.0], [1.0, 0.0, 0.0, 0.0]);
        let proj = build_splat_projection(&p, &cam100(), &SupportConfig::new(3.0));
        assert!(proj.valid);
        let (u, d) = intersect(&proj, 50.0, 50.0).unwrap();
        assert!(u.x.abs() < 1e-12 && u.y.abs() < 1e-12);
        assert!((d - 2.0).abs() < 1e-12);
        // x = fx·(s_u·u)/z + cx  →  u = (100 − 50)·2/100 = 1
        let (u, d) = intersect(&proj, 100.0, 50.0).unwrap();
        assert!((u.x - 1.0).abs() < 1e-12 && u.y.abs() < 1e-12);
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn plane_through_camera_center_is_invalid() {
        // Normal along x: the plane x = 0 contains the camera center.
        let h = 0.5f64.sqrt();
        let p = unit_splat([0.0, 0.0, 2.0], [h, 0.0, h, 0.0]);
        let proj = build_splat_projection(&p, &cam100(), &SupportConfig::new(3.0));
        assert!(!proj.valid);
    }

    #[test]
    fn edge_on_splat_is_invalid() {
        // Off-axis center, normal perpendicular to the viewing ray through it.
        let center = Vec3::new(0.5, -0.3, 2.0);
        let view = center.normalized();
        let tu = view;
        let tv = Vec3::new(0.0, 1.0, 0.0).cross(view).normalized();
        let n = tu.cross(tv);
        let q = matrix_to_quat(&Mat3::from_cols(tu, tv, n));
        let p = unit_splat(center.to_array(), q);
        let (frame, _) = camera_space_frame(&p, &cam100());
        let h = cam100().intrinsics::<f64>() * frame;
        assert!(h.determinant().abs() < 1e-9 * h.norm_inf().powi(3));
        assert!(!build_splat_projection(&p, &cam100(), &SupportConfig::new(3.0)).valid);
    }

    #[test]
    fn behind_camera_is_invalid() {
        let p = unit_splat([0.0, 0.0, -2.0], [1.0, 0.0, 0.0, 0.0]);
        assert!(!build_splat_projection(&p, &cam100(), &SupportConfig::new(3.0)).valid);
    }

    #[test]
    fn degenerate_w_has_no_intersection() {
        let mut proj = build_splat_projection(
            &unit_splat([0.0, 0.0, 2.0], [1.0, 0.0, 0.0, 0.0]),
            &cam100(),
            &SupportConfig::new(3.0),
        );
        proj.pixel_to_plane = Mat3::from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]);
        assert!(intersect(&proj, 10.0, 10.0).is_none());
    }

    #[test]
    fn gaussian_values() {
        assert_eq!(eval_gaussian(Vec2::new(0.0f64, 0.0)), 1.0);
        assert!((eval_gaussian(Vec2::new(1.0f64, 0.0)) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((eval_gaussian(Vec2::new(3.0f64, 4.0)) - (-12.5f64).exp()).abs() < 1e-18);
    }

    #[test]
    fn gaussian_is_rotationally_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let u = Vec2::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = Vec2::new(u.x * t.cos() - u.y * t.sin(), u.x * t.sin() + u.y * t.cos());
            assert!((eval_gaussian(u) - eval_gaussian(r)).abs() < 1e-14);
        }
    }

    fn random_scene(rng: &mut impl Rng) -> (TexturedPrimitive<f64>, Camera) {
        let cam = Camera::look_at(
            [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.0)],
            [0.0, 0.0, 3.0],
            rng.gen_range(80.0..200.0),
            rng.gen_range(80.0..200.0),
            64.0,
            48.0,
            128,
            96,
        )
        .unwrap();
        let mut p = unit_splat(
            [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(2.0..4.0)],
            random_unit_quat(rng),
        );
        p.scale = [rng.gen_range(0.05..0.5), rng.gen_range(0.05..0.5)];
        (p, cam)
    }

    #[test]
    fn homography_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 1000 {
            let (p, cam) = random_scene(&mut rng);
            let proj = build_splat_projection(&p, &cam, &SupportConfig::new(3.0));
            if !proj.valid || proj.screen_bbox.is_empty() {
                continue;
            }
            let b = proj.screen_bbox;
            let x = rng.gen_range(b.x0 as f64..b.x1 as f64);
            let y = rng.gen_range(b.y0 as f64..b.y1 as f64);
            let Some((u, _)) = intersect(&proj, x, y) else { continue };
            let back = proj.local_to_pixel(u).unwrap();
            let scale = x.abs().max(y.abs()).max(1.0);
            assert!((back.x - x).abs() / scale < 1e-4 && (back.y - y).abs() / scale < 1e-4);
            let prod = proj.plane_to_pixel * proj.pixel_to_plane;
            for i in 0..3 {
                for j in 0..3 {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((prod.m[i][j] - e).abs() < 1e-4);
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn intersection_depth_matches_world_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut checked = 0;
        while checked < 1000 {
            let (p, cam) = random_scene(&mut rng);
            let proj = build_splat_projection(&p, &cam, &SupportConfig::new(3.0));
            if !proj.valid {
                continue;
            }
            let x = rng.gen_range(0.0..cam.width as f64);
            let y = rng.gen_range(0.0..cam.height as f64);
            let Some((u, depth)) = intersect(&proj, x, y) else { continue };
            let (tu, tv, _) = rotation_to_tangent_frame(p.rotation).unwrap();
            let world = p.center + tu.scale(p.scale[0] * u.x) + tv.scale(p.scale[1] * u.y);
            let z = cam.world_to_camera(world).z;
            assert!((depth - z).abs() <= 1e-6 * z.abs());
            checked += 1;
        }
    }

    #[test]
    fn bbox_is_conservative() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let support = SupportConfig::new(3.0);
        for _ in 0..200 {
            let (p, cam) = random_scene(&mut rng);
            let proj = build_splat_projection(&p, &cam, &support);
            if !proj.valid {
                continue;
            }
            for y in 0..cam.height {
                for x in 0..cam.width {
                    if let Some((u, _)) = intersect(&proj, x as f64, y as f64) {
                        if u.norm_inf() <= support.half_extent {
                            assert!(proj.screen_bbox.contains(x, y), "pixel ({x},{y}) outside bbox");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn scaled_camera_keeps_pixel_alignment() {
        let cam = Camera::identity_pose(100.0, 100.0, 63.5, 63.5, 128, 128);
        let big = cam.scaled(2.0);
        assert_eq!((big.width, big.height), (256, 256));
        // Low-res pixel 0 spans [-0.5, 0.5]; in the 2× grid that is [-0.5, 1.5].
        let p = Vec3::new(0.1f64, -0.2, 2.0);
        let a = cam.project_camera_point(p).unwrap();
        let b = big.project_camera_point(p).unwrap();
        assert!(((a.x + 0.5) * 2.0 - 0.5 - b.x).abs() < 1e-12);
        assert!(((a.y + 0.5) * 2.0 - 0.5 - b.y).abs() < 1e-12);
    }

    #[test]
    fn look_at_points_forward() {
        let cam = Camera::look_at([0.3, -0.2, 0.0], [0.0, 0.0, 2.0], 100.0, 100.0, 50.0, 50.0, 100, 100).unwrap();
        let p = cam.world_to_camera(Vec3::new(0.0f64, 0.0, 2.0));
        assert!(p.x.abs() < 1e-12 && p.y.abs() < 1e-12 && p.z > 0.0);
        let c = cam.center::<f64>();
        assert!((c - Vec3::new(0.3, -0.2, 0.0)).norm() < 1e-12);
    }
}
