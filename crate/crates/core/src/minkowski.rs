//! Minkowski 3-space with signature (−,+,+), the Lorentz group SO⁺(2,1),
//! the Poincaré group and the hyperboloid model of the hyperbolic plane.

use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global tolerance used by every "within ε" comparison unless overridden.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Number of compositions after which accumulated products are
/// re-orthonormalised with respect to η.
pub const REORTHO_INTERVAL: usize = 64;

const ETA: [f64; 3] = [-1.0, 1.0, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct MinkowskiVector(pub Vector3<f64>);

impl From<[f64; 3]> for MinkowskiVector {
    fn from(c: [f64; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }
}

impl From<MinkowskiVector> for [f64; 3] {
    fn from(v: MinkowskiVector) -> Self {
        v.to_array()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalCharacter {
    Timelike,
    Lightlike,
    Spacelike,
}

impl MinkowskiVector {
    pub const ZERO: Self = Self(Vector3::new(0.0, 0.0, 0.0));

    pub fn new(x0: f64, x1: f64, x2: f64) -> Self {
        Self(Vector3::new(x0, x1, x2))
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }

    /// η(x, y) = −x⁰y⁰ + x¹y¹ + x²y².
    pub fn dot(&self, other: &Self) -> f64 {
        minkowski_dot(self, other)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn wedge(&self, other: &Self) -> Self {
        wedge(self, other)
    }

    pub fn causal_character(&self, eps: f64) -> CausalCharacter {
        let q = self.norm_sq();
        if q < -eps {
            CausalCharacter::Timelike
        } else if q > eps {
            CausalCharacter::Spacelike
        } else {
            CausalCharacter::Lightlike
        }
    }

    pub fn is_future(&self) -> bool {
        self.0[0] > 0.0
    }

    /// Normalises a spacelike vector to η-length one.
    pub fn unit_spacelike(&self) -> Option<Self> {
        let q = self.norm_sq();
        (q > 0.0).then(|| *self * (1.0 / q.sqrt()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.0 - other.0).amax()
    }

    pub fn amax(&self) -> f64 {
        self.0.amax()
    }
}

impl Index<usize> for MinkowskiVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for MinkowskiVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl AddAssign for MinkowskiVector {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Sub for MinkowskiVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Neg for MinkowskiVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl Mul<f64> for MinkowskiVector {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self(self.0 * rhs)
    }
}

impl Mul<MinkowskiVector> for f64 {
    type Output = MinkowskiVector;
    fn mul(self, rhs: MinkowskiVector) -> MinkowskiVector {
        MinkowskiVector(rhs.0 * self)
    }
}

impl fmt::Display for MinkowskiVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

pub fn minkowski_dot(x: &MinkowskiVector, y: &MinkowskiVector) -> f64 {
    -x.0[0] * y.0[0] + x.0[1] * y.0[1] + x.0[2] * y.0[2]
}

/// (x∧y)^μ = η^{μν} ε_{ναβ} x^α y^β with ε₀₁₂ = +1.
///
/// The result is η-orthogonal to both arguments and satisfies
/// (x∧y)² = (x·y)² − x²y².
pub fn wedge(x: &MinkowskiVector, y: &MinkowskiVector) -> MinkowskiVector {
    let (x, y) = (&x.0, &y.0);
    MinkowskiVector::new(
        -(x[1] * y[2] - x[2] * y[1]),
        x[2] * y[0] - x[0] * y[2],
        x[0] * y[1] - x[1] * y[0],
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LorentzClass {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

/// Element of SO⁺(2,1) acting on column vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LorentzTransform(Matrix3<f64>);

impl Default for LorentzTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl LorentzTransform {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Wraps a matrix without checking the group invariants.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    /// Wraps a matrix after checking `MᵀηM = η`, `det M = 1` and `M₀₀ ≥ 1`
    /// within `eps`.
    pub fn from_matrix(m: Matrix3<f64>, eps: f64) -> Result<Self> {
        let t = Self(m);
        let defect = t.group_defect();
        if defect > eps {
            return Err(Error::NotLorentz(defect));
        }
        Ok(t)
    }

    pub fn from_rows(rows: [[f64; 3]; 3], eps: f64) -> Result<Self> {
        Self::from_matrix(Matrix3::from_fn(|i, j| rows[i][j]), eps)
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = &self.0;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Largest violation of the SO⁺(2,1) conditions.
    pub fn group_defect(&self) -> f64 {
        let eta = Matrix3::from_diagonal(&Vector3::from(ETA));
        let ortho = (self.0.transpose() * eta * self.0 - eta).amax();
        let det = (self.0.determinant() - 1.0).abs();
        let orth = (1.0 - self.0[(0, 0)]).max(0.0);
        ortho.max(det).max(orth)
    }

    /// Boost with rapidity `rapidity` along the spatial unit direction
    /// `axis`; maps (1,0,0) to (cosh ξ, sinh ξ·axis).
    pub fn boost(rapidity: f64, axis: [f64; 2]) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1]).sqrt();
        if (n - 1.0).abs() > DEFAULT_EPS {
            return Err(Error::NonUnitAxis(n));
        }
        let (c, s) = (rapidity.cosh(), rapidity.sinh());
        let [a, b] = axis;
        Ok(Self(Matrix3::new(
            c,
            s * a,
            s * b,
            s * a,
            1.0 + (c - 1.0) * a * a,
            (c - 1.0) * a * b,
            s * b,
            (c - 1.0) * a * b,
            1.0 + (c - 1.0) * b * b,
        )))
    }

    /// Boost along the x¹ axis.
    pub fn boost_x(rapidity: f64) -> Self {
        Self::boost(rapidity, [1.0, 0.0]).expect("unit axis")
    }

    /// Rotation by `theta` in the x¹x²-plane, fixing (1,0,0).
    pub fn rotation(theta: f64) -> Self {
        let (c, s) = (theta.cos(), theta.sin());
        Self(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    /// The pure boost mapping (1,0,0) to `x`.
    pub fn boost_to(x: &HyperbolicPoint) -> Self {
        let v = x.vector();
        let r = (v[1] * v[1] + v[2] * v[2]).sqrt();
        if r == 0.0 {
            return Self::identity();
        }
        let rapidity = v[0].acosh();
        Self::boost(rapidity, [v[1] / r, v[2] / r]).expect("unit axis")
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    /// v⁻¹ = η vᵀ η.
    pub fn inverse(&self) -> Self {
        let m = &self.0;
        Self(Matrix3::from_fn(|i, j| ETA[i] * m[(j, i)] * ETA[j]))
    }

    pub fn apply(&self, x: &MinkowskiVector) -> MinkowskiVector {
        MinkowskiVector(self.0 * x.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.0 - other.0).amax()
    }

    pub fn distance_to_identity(&self) -> f64 {
        (self.0 - Matrix3::identity()).amax()
    }

    pub fn classify(&self) -> LorentzClass {
        classify_lorentz(self, DEFAULT_EPS)
    }

    /// Gram–Schmidt with respect to η, timelike column first.
    pub fn reorthonormalized(&self) -> Self {
        let col = |j: usize| MinkowskiVector(self.0.column(j).into_owned());
        let mut c0 = col(0);
        c0 = c0 * (1.0 / (-c0.norm_sq()).sqrt());
        let mut c1 = col(1);
        c1 = c1 + c0 * c1.dot(&c0);
        c1 = c1 * (1.0 / c1.norm_sq().sqrt());
        let mut c2 = col(2);
        c2 = c2 + c0 * c2.dot(&c0) - c1 * c2.dot(&c1);
        c2 = c2 * (1.0 / c2.norm_sq().sqrt());
        Self(Matrix3::from_columns(&[c0.0, c1.0, c2.0]))
    }

    /// Ordered product of `factors`, re-orthonormalised every
    /// [`REORTHO_INTERVAL`] compositions.
    pub fn product<'a, I>(factors: I) -> Self
    where
        I: IntoIterator<Item = &'a LorentzTransform>,
    {
        let mut acc = Self::identity();
        for (k, f) in factors.into_iter().enumerate() {
            acc = acc.compose(f);
            if (k + 1) % REORTHO_INTERVAL == 0 {
                acc = acc.reorthonormalized();
            }
        }
        acc
    }
}

impl Mul for LorentzTransform {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.compose(&rhs)
    }
}

impl Mul<MinkowskiVector> for LorentzTransform {
    type Output = MinkowskiVector;
    fn mul(self, rhs: MinkowskiVector) -> MinkowskiVector {
        self.apply(&rhs)
    }
}

/// Identity if ‖v − 1‖ ≤ ε; otherwise by trace (1 + 2cosh ℓ, 3, 1 + 2cos θ).
pub fn classify_lorentz(v: &LorentzTransform, eps: f64) -> LorentzClass {
    if v.distance_to_identity() <= eps {
        return LorentzClass::Identity;
    }
    let tr = v.trace();
    if tr > 3.0 + eps {
        LorentzClass::Hyperbolic
    } else if tr < 3.0 - eps {
        LorentzClass::Elliptic
    } else {
        LorentzClass::Parabolic
    }
}

/// Element (v, a) of ISO⁺(2,1), acting as y ↦ v y + a.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct PoincareElement {
    pub lorentz: LorentzTransform,
    pub translation: MinkowskiVector,
}

impl PoincareElement {
    pub fn new(lorentz: LorentzTransform, translation: MinkowskiVector) -> Self {
        Self { lorentz, translation }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn pure_translation(a: MinkowskiVector) -> Self {
        Self::new(LorentzTransform::identity(), a)
    }

    pub fn pure_lorentz(v: LorentzTransform) -> Self {
        Self::new(v, MinkowskiVector::ZERO)
    }

    /// (v₁, a₁)·(v₂, a₂) = (v₁v₂, a₁ + v₁a₂).
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            lorentz: self.lorentz.compose(&other.lorentz),
            translation: self.translation + self.lorentz.apply(&other.translation),
        }
    }

    /// (v, a)⁻¹ = (v⁻¹, −v⁻¹a).
    pub fn inverse(&self) -> Self {
        let inv = self.lorentz.inverse();
        Self {
            lorentz: inv,
            translation: -inv.apply(&self.translation),
        }
    }

    pub fn apply(&self, y: &MinkowskiVector) -> MinkowskiVector {
        self.lorentz.apply(y) + self.translation
    }

    /// g·self·g⁻¹.
    pub fn conjugate_by(&self, g: &Self) -> Self {
        g.compose(self).compose(&g.inverse())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.lorentz
            .max_abs_diff(&other.lorentz)
            .max(self.translation.max_abs_diff(&other.translation))
    }

    pub fn distance_to_identity(&self) -> f64 {
        self.lorentz.distance_to_identity().max(self.translation.amax())
    }

    pub fn reorthonormalized(&self) -> Self {
        Self::new(self.lorentz.reorthonormalized(), self.translation)
    }
}

impl Mul for PoincareElement {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.compose(&rhs)
    }
}

/// Point of the upper sheet {x·x = −1, x⁰ > 0}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MinkowskiVector", into = "MinkowskiVector")]
pub struct HyperbolicPoint(MinkowskiVector);

impl TryFrom<MinkowskiVector> for HyperbolicPoint {
    type Error = Error;
    fn try_from(v: MinkowskiVector) -> Result<Self> {
        Self::new(v, DEFAULT_EPS)
    }
}

impl From<HyperbolicPoint> for MinkowskiVector {
    fn from(p: HyperbolicPoint) -> Self {
        p.0
    }
}

impl HyperbolicPoint {
    pub fn new(x: MinkowskiVector, eps: f64) -> Result<Self> {
        let q = x.norm_sq();
        if (q + 1.0).abs() > eps * (1.0 + x[0].abs()) || x[0] <= 0.0 {
            return Err(Error::NotOnHyperboloid {
                norm_sq: q,
                time: x[0],
            });
        }
        Ok(Self(x))
    }

    /// (1, 0, 0).
    pub fn origin() -> Self {
        Self(MinkowskiVector::new(1.0, 0.0, 0.0))
    }

    /// Scales a future timelike vector onto the hyperboloid.
    pub fn from_timelike(x: MinkowskiVector) -> Result<Self> {
        let q = x.norm_sq();
        if q >= 0.0 || x[0] <= 0.0 {
            return Err(Error::NotOnHyperboloid {
                norm_sq: q,
                time: x[0],
            });
        }
        Ok(Self(x * (1.0 / (-q).sqrt())))
    }

    /// Point at distance `r` from the origin in direction `theta`.
    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self(MinkowskiVector::new(
            r.cosh(),
            r.sinh() * theta.cos(),
            r.sinh() * theta.sin(),
        ))
    }

    pub fn vector(&self) -> MinkowskiVector {
        self.0
    }

    pub fn transform(&self, v: &LorentzTransform) -> Self {
        Self(v.apply(&self.0))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        hyperbolic_distance(self, other).expect("points on the hyperboloid")
    }

    /// Unit tangent vector at `self` pointing along the geodesic to `other`.
    pub fn tangent_towards(&self, other: &Self) -> Option<MinkowskiVector> {
        (other.0 + self.0 * self.0.dot(&other.0)).unit_spacelike()
    }
}

/// arccosh(−p·q).
pub fn hyperbolic_distance(p: &HyperbolicPoint, q: &HyperbolicPoint) -> Result<f64> {
    let c = -p.0.dot(&q.0);
    if c < 1.0 - DEFAULT_EPS * c.abs().max(1.0) {
        return Err(Error::InvalidPointPair(c));
    }
    Ok(c.max(1.0).acosh())
}

/// Complete geodesic {y ∈ H² : y·n = 0} for a unit spacelike normal n.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicPlane {
    normal: MinkowskiVector,
}

impl GeodesicPlane {
    pub fn new(normal: MinkowskiVector) -> Option<Self> {
        normal.unit_spacelike().map(|normal| Self { normal })
    }

    pub fn normal(&self) -> MinkowskiVector {
        self.normal
    }

    /// Signed sinh of the distance from `p` to the geodesic.
    pub fn side(&self, p: &HyperbolicPoint) -> f64 {
        p.vector().dot(&self.normal)
    }

    pub fn distance(&self, p: &HyperbolicPoint) -> f64 {
        self.side(p).abs().asinh()
    }

    pub fn transform(&self, v: &LorentzTransform) -> Self {
        Self {
            normal: v.apply(&self.normal),
        }
    }
}

/// Cosmological time √|(y−p)²| of a point in the future cone of the tip p.
pub fn cosmological_time_static(y: &MinkowskiVector, tip: &MinkowskiVector) -> Result<f64> {
    let d = *y - *tip;
    let q = d.norm_sq();
    if q >= 0.0 || d[0] <= 0.0 {
        return Err(Error::OutsideFutureCone(q));
    }
    Ok((-q).sqrt())
}
