//! Small fixed-size vector and matrix types.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use crate::real::{cast, Real};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2<F> {
    pub x: F,
    pub y: F,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3<F> {
    pub x: F,
    pub y: F,
    pub z: F,
}

impl<F: Real> Vec2<F> {
    pub const fn new(x: F, y: F) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(F::zero(), F::zero())
    }

    pub fn dot(self, o: Self) -> F {
        self.x * o.x + self.y * o.y
    }

    pub fn norm_sq(self) -> F {
        self.dot(self)
    }

    pub fn norm_inf(self) -> F {
        self.x.abs().max(self.y.abs())
    }

    pub fn scale(self, s: F) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    pub fn cast<G: Real>(self) -> Vec2<G> {
        Vec2::new(cast(self.x), cast(self.y))
    }
}

impl<F: Real> Add for Vec2<F> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<F: Real> AddAssign for Vec2<F> {
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl<F: Real> Sub for Vec2<F> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<F: Real> Vec3<F> {
    pub const fn new(x: F, y: F, z: F) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(F::zero(), F::zero(), F::zero())
    }

    pub fn from_array(a: [F; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [F; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Self) -> F {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> F {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: F) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn normalized(self) -> Self {
        self.scale(F::one() / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn cast<G: Real>(self) -> Vec3<G> {
        Vec3::new(cast(self.x), cast(self.y), cast(self.z))
    }
}

impl<F: Real> Add for Vec3<F> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<F: Real> AddAssign for Vec3<F> {
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl<F: Real> Sub for Vec3<F> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<F: Real> Neg for Vec3<F> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<F: Real> Index<usize> for Vec3<F> {
    type Output = F;
    fn index(&self, i: usize) -> &F {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<F: Real> IndexMut<usize> for Vec3<F> {
    fn index_mut(&mut self, i: usize) -> &mut F {
        match i {
            0 => &mut self.x,
            1 => &mut self.y,
            2 => &mut self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat3<F> {
    pub m: [[F; 3]; 3],
}

impl<F: Real> Mat3<F> {
    pub const fn from_rows(m: [[F; 3]; 3]) -> Self {
        Self { m }
    }

    pub fn zero() -> Self {
        Self { m: [[F::zero(); 3]; 3] }
    }

    pub fn identity() -> Self {
        let mut out = Self::zero();
        for i in 0..3 {
            out.m[i][i] = F::one();
        }
        out
    }

    pub fn from_cols(c0: Vec3<F>, c1: Vec3<F>, c2: Vec3<F>) -> Self {
        Self::from_rows([[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]])
    }

    pub fn col(&self, j: usize) -> Vec3<F> {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn row(&self, i: usize) -> Vec3<F> {
        Vec3::from_array(self.m[i])
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[j][i];
            }
        }
        out
    }

    pub fn determinant(&self) -> F {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> F {
        self.m
            .iter()
            .map(|r| r[0].abs() + r[1].abs() + r[2].abs())
            .fold(F::zero(), F::max)
    }

    /// Inverse via the adjugate; `None` when the determinant is exactly zero.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.determinant();
        if det == F::zero() || !det.is_finite() {
            return None;
        }
        let m = &self.m;
        let inv_det = F::one() / det;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| {
            m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
        };
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = adj[i][j] * inv_det;
            }
        }
        Some(out)
    }

    pub fn mul_vec(&self, v: Vec3<F>) -> Vec3<F> {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    pub fn scale(&self, s: F) -> Self {
        let mut out = *self;
        for r in out.m.iter_mut() {
            for x in r.iter_mut() {
                *x *= s;
            }
        }
        out
    }

    pub fn outer(a: Vec3<F>, b: Vec3<F>) -> Self {
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = a[i] * b[j];
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|x| x.is_finite())
    }

    pub fn cast<G: Real>(&self) -> Mat3<G> {
        let mut out = Mat3::<G>::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = cast(self.m[i][j]);
            }
        }
        out
    }
}

impl<F: Real> Mul for Mat3<F> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j] + self.m[i][2] * o.m[2][j];
            }
        }
        out
    }
}

impl<F: Real> Add for Mat3<F> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] += o.m[i][j];
            }
        }
        out
    }
}

impl<F: Real> AddAssign for Mat3<F> {
    fn add_assign(&mut self, o: Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.m[i][j] += o.m[i][j];
            }
        }
    }
}

impl<F: Real> Mul<Vec3<F>> for Mat3<F> {
    type Output = Vec3<F>;
    fn mul(self, v: Vec3<F>) -> Vec3<F> {
        self.mul_vec(v)
    }
}
