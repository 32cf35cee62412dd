//! Small fixed-size geometry types.

use core::ops::{Add, AddAssign, Mul, Neg, Sub};

#[allow(unused_imports)] // redundant when num-traits is built with std
use num_traits::Float;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const E_X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const E_Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const E_Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    /// Unit vector along `self`, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self.scale(1.0 / n))
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Vec3 {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

/// Proper rotation taking local panel coordinates to global coordinates.
///
/// Stored by columns: the images of the local x, y and z axes.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RotationMatrix {
    cols: [Vec3; 3],
}

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix = RotationMatrix {
        cols: [Vec3::E_X, Vec3::E_Y, Vec3::E_Z],
    };

    /// Builds a rotation from the images of the local axes. The columns must
    /// be orthonormal and right-handed; use [`RotationMatrix::is_proper`] to
    /// check inputs of unknown provenance.
    pub fn from_columns(x: Vec3, y: Vec3, z: Vec3) -> Self {
        RotationMatrix { cols: [x, y, z] }
    }

    pub fn column(&self, i: usize) -> Vec3 {
        self.cols[i]
    }

    /// Entry at (row, col).
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cols[col].to_array()[row]
    }

    /// `R v`: local to global.
    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.cols[0] * v.x + self.cols[1] * v.y + self.cols[2] * v.z
    }

    /// `Rᵀ v`: global to local.
    pub fn apply_transpose(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.cols[0].dot(v), self.cols[1].dot(v), self.cols[2].dot(v))
    }

    pub fn determinant(&self) -> f64 {
        self.cols[0].dot(self.cols[1].cross(self.cols[2]))
    }

    /// Largest entry of `|RᵀR - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.cols[i].dot(self.cols[j]) - target).abs());
            }
        }
        worst
    }

    pub fn is_proper(&self, tol: f64) -> bool {
        self.orthogonality_error() <= tol && (self.determinant() - 1.0).abs() <= tol
    }
}

impl Default for RotationMatrix {
    fn default() -> Self {
        RotationMatrix::IDENTITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_is_right_handed() {
        assert_eq!(Vec3::E_X.cross(Vec3::E_Y), Vec3::E_Z);
        assert_eq!(Vec3::E_Y.cross(Vec3::E_Z), Vec3::E_X);
    }

    #[test]
    fn rotation_transpose_inverts() {
        let s = 0.5f64.sqrt();
        let r = RotationMatrix::from_columns(
            Vec3::new(s, s, 0.0),
            Vec3::new(-s, s, 0.0),
            Vec3::E_Z,
        );
        assert!(r.is_proper(1e-12));
        let v = Vec3::new(0.3, -1.2, 2.0);
        let back = r.apply_transpose(r.apply(v));
        assert!((back - v).norm() < 1e-14);
    }
}
