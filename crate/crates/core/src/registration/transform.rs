use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];

const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Which affine entries an optimizer may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AffineDof {
    /// Every linear entry plus translation (6 parameters in 2D, 12 in 3D).
    #[default]
    Full,
    /// Only the in-plane (x, y) block; the z row and column stay fixed.
    InPlane,
}

/// `x -> M (x - c) + c + t` in pixel (voxel) coordinates.
///
/// 2D transforms keep the z row and column of `M` at identity and z entries
/// of `t` and `c` at zero, so both dimensionalities share one representation.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineTransform {
    dim: usize,
    matrix: Mat3,
    translation: [f64; 3],
    center: [f64; 3],
}

impl AffineTransform {
    pub fn identity(dim: usize, center: [f64; 3]) -> Self {
        assert!(dim == 2 || dim == 3, "affine dimension must be 2 or 3");
        let mut center = center;
        if dim == 2 {
            center[2] = 0.0;
        }
        Self {
            dim,
            matrix: IDENTITY,
            translation: [0.0; 3],
            center,
        }
    }

    pub fn new(dim: usize, matrix: Mat3, translation: [f64; 3], center: [f64; 3]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidArgument(format!("affine dim {dim}")));
        }
        let mut t = Self::identity(dim, center);
        for r in 0..dim {
            for c in 0..dim {
                t.matrix[r][c] = matrix[r][c];
            }
            t.translation[r] = translation[r];
        }
        if t.determinant().abs() < 1e-9 {
            return Err(Error::InvalidArgument("singular affine matrix".into()));
        }
        Ok(t)
    }

    /// Translation-only transform.
    pub fn translation(dim: usize, shift: [f64; 3]) -> Self {
        let mut t = Self::identity(dim, [0.0; 3]);
        for (r, s) in shift.iter().enumerate().take(dim) {
            t.translation[r] = *s;
        }
        t
    }

    /// Rotation (degrees, in-plane), anisotropic in-plane scale and shift about `center`.
    pub fn similarity_2d(center: [f64; 3], angle_deg: f64, scale: [f64; 2], shift: [f64; 2]) -> Self {
        let (s, c) = angle_deg.to_radians().sin_cos();
        let mut t = Self::identity(2, center);
        t.matrix[0][0] = c * scale[0];
        t.matrix[0][1] = -s * scale[1];
        t.matrix[1][0] = s * scale[0];
        t.matrix[1][1] = c * scale[1];
        t.translation[0] = shift[0];
        t.translation[1] = shift[1];
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    pub fn translation_vector(&self) -> [f64; 3] {
        self.translation
    }

    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    pub fn determinant(&self) -> f64 {
        det3(&self.matrix)
    }

    /// `(M, b)` with `x -> M x + b`.
    pub fn linear_offset(&self) -> (Mat3, [f64; 3]) {
        let mc = mat_vec(&self.matrix, self.center);
        let b = [
            self.center[0] + self.translation[0] - mc[0],
            self.center[1] + self.translation[1] - mc[1],
            self.center[2] + self.translation[2] - mc[2],
        ];
        (self.matrix, b)
    }

    /// Rebuilds a transform with the given center from its `(M, b)` form.
    pub fn from_linear_offset(dim: usize, m: Mat3, b: [f64; 3], center: [f64; 3]) -> Self {
        let mut t = Self::identity(dim, center);
        let c = t.center;
        let mc = mat_vec(&m, c);
        for r in 0..dim {
            for k in 0..dim {
                t.matrix[r][k] = m[r][k];
            }
            t.translation[r] = b[r] - c[r] + mc[r];
        }
        t
    }

    #[inline]
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let d = [
            p[0] - self.center[0],
            p[1] - self.center[1],
            p[2] - self.center[2],
        ];
        let m = mat_vec(&self.matrix, d);
        [
            m[0] + self.center[0] + self.translation[0],
            m[1] + self.center[1] + self.translation[1],
            m[2] + self.center[2] + self.translation[2],
        ]
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = inv3(&self.matrix)
            .ok_or_else(|| Error::InvalidArgument("singular affine transform".into()))?;
        let ti = mat_vec(&inv, self.translation);
        Ok(Self {
            dim: self.dim,
            matrix: inv,
            translation: [-ti[0], -ti[1], -ti[2]],
            center: self.center,
        })
    }

    /// `self ∘ other`: apply `other` first. The result keeps `self`'s center.
    pub fn compose(&self, other: &AffineTransform) -> AffineTransform {
        let (ma, ba) = self.linear_offset();
        let (mb, bb) = other.linear_offset();
        let m = mat_mul(&ma, &mb);
        let mbb = mat_vec(&ma, bb);
        let b = [mbb[0] + ba[0], mbb[1] + ba[1], mbb[2] + ba[2]];
        Self::from_linear_offset(self.dim.max(other.dim), m, b, self.center)
    }

    /// The same spatial map expressed in coordinates `u = S (x - o)` with
    /// diagonal `S = scale`.
    pub fn in_scaled_coordinates(&self, scale: [f64; 3], origin: [f64; 3]) -> Self {
        let (m, b) = self.linear_offset();
        let mut ms = m;
        for r in 0..3 {
            for c in 0..3 {
                ms[r][c] = m[r][c] * scale[r] / scale[c];
            }
        }
        let mo = mat_vec(&m, origin);
        let bs = [
            scale[0] * (mo[0] + b[0] - origin[0]),
            scale[1] * (mo[1] + b[1] - origin[1]),
            scale[2] * (mo[2] + b[2] - origin[2]),
        ];
        let center = [
            scale[0] * (self.center[0] - origin[0]),
            scale[1] * (self.center[1] - origin[1]),
            scale[2] * (self.center[2] - origin[2]),
        ];
        Self::from_linear_offset(self.dim, ms, bs, center)
    }

    /// Number of free parameters under `dof`.
    pub fn param_count(&self, dof: AffineDof) -> usize {
        match (self.dim, dof) {
            (2, _) | (3, AffineDof::InPlane) => 6,
            _ => 12,
        }
    }

    fn free_block(&self, dof: AffineDof) -> usize {
        match dof {
            AffineDof::Full => self.dim,
            AffineDof::InPlane => 2,
        }
    }

    /// Parameters relative to identity: `M - I` row-major over the free
    /// block, then the free translation entries.
    pub fn params(&self, dof: AffineDof) -> Vec<f64> {
        let n = self.free_block(dof);
        let mut p = Vec::with_capacity(n * n + n);
        for r in 0..n {
            for c in 0..n {
                p.push(self.matrix[r][c] - IDENTITY[r][c]);
            }
        }
        p.extend_from_slice(&self.translation[..n]);
        p
    }

    /// `self` with `delta` added to its free parameters.
    pub fn perturbed(&self, delta: &[f64], dof: AffineDof) -> Self {
        let n = self.free_block(dof);
        debug_assert_eq!(delta.len(), n * n + n);
        let mut t = self.clone();
        for r in 0..n {
            for c in 0..n {
                t.matrix[r][c] += delta[r * n + c];
            }
            t.translation[r] += delta[n * n + r];
        }
        t
    }

    /// Promotes a 2D transform to 3D, leaving z untouched.
    pub fn as_3d(&self) -> Self {
        let mut t = self.clone();
        t.dim = 3;
        t
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.params(AffineDof::Full).iter().all(|p| p.abs() <= tol)
    }
}

#[derive(Serialize, Deserialize)]
struct TransformJson {
    dim: usize,
    matrix: Vec<f64>,
    translation: Vec<f64>,
    center: Vec<f64>,
}

impl Serialize for AffineTransform {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim;
        TransformJson {
            dim: d,
            matrix: (0..d)
                .flat_map(|r| (0..d).map(move |c| (r, c)))
                .map(|(r, c)| self.matrix[r][c])
                .collect(),
            translation: self.translation[..d].to_vec(),
            center: self.center[..d].to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AffineTransform {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = TransformJson::deserialize(d)?;
        let n = j.dim;
        if !(n == 2 || n == 3)
            || j.matrix.len() != n * n
            || j.translation.len() != n
            || j.center.len() != n
        {
            return Err(D::Error::custom("malformed affine transform"));
        }
        let mut m = IDENTITY;
        let mut t = [0.0; 3];
        let mut c = [0.0; 3];
        for r in 0..n {
            for k in 0..n {
                m[r][k] = j.matrix[r * n + k];
            }
            t[r] = j.translation[r];
            c[r] = j.center[r];
        }
        AffineTransform::new(n, m, t, c).map_err(D::Error::custom)
    }
}

#[inline]
fn mat_vec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            out[r][c] = (0..3).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn inv3(m: &Mat3) -> Option<Mat3> {
    let det = det3(m);
    if det.abs() < 1e-12 {
        return None;
    }
    let inv_det = 1.0 / det;
    let mut out = [[0.0; 3]; 3];
    out[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_det;
    out[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det;
    out[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det;
    out[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_det;
    out[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det;
    out[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det;
    out[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_det;
    out[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det;
    out[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det;
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn inverse_composes_to_identity() {
        let t = AffineTransform::new(
            3,
            [[1.1, 0.05, 0.0], [-0.03, 0.95, 0.02], [0.0, 0.01, 1.02]],
            [2.0, -1.5, 0.3],
            [10.0, 12.0, 4.0],
        )
        .unwrap();
        let id = t.compose(&t.inverse().unwrap());
        for r in 0..3 {
            for c in 0..3 {
                assert!((id.matrix()[r][c] - IDENTITY[r][c]).abs() < 1e-12);
            }
        }
        let p = [3.0, 4.0, 5.0];
        assert!(close(id.apply(p), p, 1e-9));
    }

    #[test]
    fn singular_is_rejected() {
        assert!(AffineTransform::new(2, [[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]], [0.0; 3], [0.0; 3]).is_err());
    }

    #[test]
    fn scaled_coordinates_commute_with_apply() {
        let t = AffineTransform::similarity_2d([20.0, 18.0, 0.0], 7.0, [1.05, 0.97], [1.5, -2.0]);
        let s = [0.5, 0.5, 1.0];
        let o = [0.5, 0.5, 0.0];
        let ts = t.in_scaled_coordinates(s, o);
        let to_u = |x: [f64; 3]| [s[0] * (x[0] - o[0]), s[1] * (x[1] - o[1]), s[2] * (x[2] - o[2])];
        let x = [7.0, 30.0, 0.0];
        assert!(close(ts.apply(to_u(x)), to_u(t.apply(x)), 1e-9));
        // And back.
        let back = ts.in_scaled_coordinates([2.0, 2.0, 1.0], [-0.25, -0.25, 0.0]);
        assert!(close(back.apply(x), t.apply(x), 1e-9));
    }

    #[test]
    fn params_roundtrip() {
        let base = AffineTransform::identity(2, [5.0, 5.0, 0.0]);
        let delta = [0.01, -0.02, 0.03, 0.04, 1.5, -0.5];
        let t = base.perturbed(&delta, AffineDof::Full);
        for (a, b) in t.params(AffineDof::Full).iter().zip(delta) {
            assert!((a - b).abs() < 1e-12);
        }
        let t3 = AffineTransform::identity(3, [0.0; 3]);
        assert_eq!(t3.param_count(AffineDof::Full), 12);
        assert_eq!(t3.param_count(AffineDof::InPlane), 6);
    }

    #[test]
    fn json_layout() {
        let t = AffineTransform::translation(2, [1.0, 2.0, 0.0]);
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["dim"], 2);
        assert_eq!(v["matrix"].as_array().unwrap().len(), 4);
        assert_eq!(v["translation"], serde_json::json!([1.0, 2.0]));
        let back: AffineTransform = serde_json::from_value(v).unwrap();
        assert_eq!(back, t);
    }
}
