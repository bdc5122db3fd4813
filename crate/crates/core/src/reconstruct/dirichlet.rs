//! Incremental half-plane intersection for Dirichlet polygons.
//!
//! Vertices are kept as rays with y⁰ = 1 (the projective chart in which
//! geodesics are straight), so clipping is linear; all sign tests use the
//! Minkowski product with the bisector normal q − x.

use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::GroupWord;
use crate::minkowski::{HyperbolicPoint, MinkowskiVector};

/// Region {y : y·n ≤ 0} bounded by the perpendicular bisector of [x, q].
#[derive(Clone, Debug, PartialEq)]
pub struct BisectorHalfPlane {
    pub word: GroupWord,
    pub image: HyperbolicPoint,
    pub normal: MinkowskiVector,
}

impl BisectorHalfPlane {
    pub fn new(x: &HyperbolicPoint, word: GroupWord, image: HyperbolicPoint) -> Self {
        Self {
            word,
            image,
            normal: image.vector() - x.vector(),
        }
    }

    pub fn rho(&self, x: &HyperbolicPoint) -> f64 {
        x.distance(&self.image)
    }
}

/// One side of the polygon, running from vertex `start` to vertex `start + 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DomainSide {
    pub word: GroupWord,
    pub start: usize,
    pub end: usize,
    pub length: f64,
    /// Index into the retained bisectors.
    #[serde(skip)]
    pub bisector: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirichletDomain {
    pub center: HyperbolicPoint,
    pub vertices: Vec<HyperbolicPoint>,
    pub sides: Vec<DomainSide>,
    pub circumradius: f64,
    /// Bisectors inserted, in insertion order.
    pub retained: Vec<BisectorHalfPlane>,
    /// True if insertion stopped because the next image was farther than
    /// twice the circumradius, false if the input ran out first.
    pub certified: bool,
}

impl DirichletDomain {
    pub fn side_count(&self) -> usize {
        self.sides.len()
    }

    pub fn side(&self, word: &GroupWord) -> Option<&DomainSide> {
        self.sides.iter().find(|s| &s.word == word)
    }

    /// Largest value of v·(q − x) over vertices and retained images.
    pub fn membership_defect(&self) -> f64 {
        self.vertices
            .iter()
            .flat_map(|v| self.retained.iter().map(move |b| v.vector().dot(&b.normal)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Hyperbolic distance from `p` to the closed polygon (0 inside).
    pub fn distance_to(&self, p: &HyperbolicPoint) -> f64 {
        let inside = self
            .sides
            .iter()
            .all(|s| p.vector().dot(&self.retained[s.bisector].normal) <= 0.0);
        if inside {
            return 0.0;
        }
        self.sides
            .iter()
            .map(|s| segment_distance(p, &self.vertices[s.start], &self.vertices[s.end]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Distance from `p` to the geodesic segment [a, b].
pub fn segment_distance(p: &HyperbolicPoint, a: &HyperbolicPoint, b: &HyperbolicPoint) -> f64 {
    let (pv, av, bv) = (p.vector(), a.vector(), b.vector());
    let endpoint = p.distance(a).min(p.distance(b));
    let Some(n) = av.wedge(&bv).unit_spacelike() else {
        return endpoint;
    };
    // foot of the perpendicular, accepted if it lies between a and b
    let foot = pv - n * pv.dot(&n);
    let Ok(foot) = HyperbolicPoint::from_timelike(foot) else {
        return endpoint;
    };
    let ab = a.distance(b);
    if (a.distance(&foot) + foot.distance(b) - ab).abs() < 1e-9 * (1.0 + ab) {
        pv.dot(&n).abs().asinh().min(endpoint)
    } else {
        endpoint
    }
}

/// Symmetric Hausdorff distance between two convex polygons.
pub fn hausdorff_distance(a: &DirichletDomain, b: &DirichletDomain) -> f64 {
    let ab = a.vertices.iter().map(|v| b.distance_to(v)).fold(0.0, f64::max);
    let ba = b.vertices.iter().map(|v| a.distance_to(v)).fold(0.0, f64::max);
    ab.max(ba)
}

#[derive(Clone, Copy, Debug)]
struct ChartVertex {
    ray: Vector3<f64>,
    /// Constraint of the edge leaving this vertex; `None` for the initial box.
    edge: Option<usize>,
}

fn chart(v: Vector3<f64>) -> Vector3<f64> {
    v / v[0]
}

fn mdot(a: &Vector3<f64>, n: &MinkowskiVector) -> f64 {
    MinkowskiVector(*a).dot(n)
}

/// Polygon under construction in the projective chart.
#[derive(Clone, Debug)]
struct ChartPolygon {
    verts: Vec<ChartVertex>,
}

impl ChartPolygon {
    fn initial() -> Self {
        let corners = [(2.0, 2.0), (-2.0, 2.0), (-2.0, -2.0), (2.0, -2.0)];
        Self {
            verts: corners
                .iter()
                .map(|&(a, b)| ChartVertex {
                    ray: Vector3::new(1.0, a, b),
                    edge: None,
                })
                .collect(),
        }
    }

    /// Returns false if every vertex already satisfies the constraint.
    fn clip(&mut self, id: usize, n: &MinkowskiVector, tol: f64) -> bool {
        let d: Vec<f64> = self.verts.iter().map(|v| mdot(&v.ray, n)).collect();
        if d.iter().all(|&di| di <= tol) {
            return false;
        }
        let k = self.verts.len();
        let mut out = Vec::with_capacity(k + 1);
        for i in 0..k {
            let j = (i + 1) % k;
            let (p, q) = (self.verts[i], self.verts[j]);
            let (in_p, in_q) = (d[i] <= tol, d[j] <= tol);
            let cross = || ChartVertex {
                ray: chart(p.ray + (q.ray - p.ray) * (d[i] / (d[i] - d[j]))),
                edge: None,
            };
            match (in_p, in_q) {
                (true, true) => out.push(p),
                (true, false) => {
                    out.push(p);
                    if d[i] < -tol {
                        out.push(ChartVertex {
                            edge: Some(id),
                            ..cross()
                        });
                    } else {
                        out.last_mut().unwrap().edge = Some(id);
                    }
                }
                (false, true) => {
                    if d[j] < -tol {
                        out.push(ChartVertex {
                            edge: p.edge,
                            ..cross()
                        });
                    }
                }
                (false, false) => {}
            }
        }
        self.verts = out;
        true
    }

    fn bounded(&self) -> bool {
        self.verts.iter().all(|v| v.edge.is_some())
            && self
                .verts
                .iter()
                .all(|v| v.ray[1] * v.ray[1] + v.ray[2] * v.ray[2] < 1.0)
    }
}

fn exact_vertices(
    poly: &ChartPolygon,
    bisectors: &[BisectorHalfPlane],
) -> Result<Vec<HyperbolicPoint>> {
    let k = poly.verts.len();
    (0..k)
        .map(|i| {
            let prev = poly.verts[(i + k - 1) % k].edge.expect("bounded polygon");
            let next = poly.verts[i].edge.expect("bounded polygon");
            let mut w = bisectors[prev].normal.wedge(&bisectors[next].normal);
            if w[0] < 0.0 {
                w = -w;
            }
            HyperbolicPoint::from_timelike(w).map_err(|_| {
                Error::Reconstruction(format!(
                    "bisectors of {} and {} do not meet in H²",
                    bisectors[prev].word, bisectors[next].word
                ))
            })
        })
        .collect()
}

/// Directions (angles in the observer frame) of the unbounded part.
fn uncovered_directions(poly: &ChartPolygon, x: &HyperbolicPoint) -> String {
    let gauge = crate::minkowski::LorentzTransform::boost_to(x).inverse();
    let angles: Vec<String> = poly
        .verts
        .iter()
        .filter(|v| v.edge.is_none() || v.ray[1] * v.ray[1] + v.ray[2] * v.ray[2] >= 1.0)
        .map(|v| {
            let g = gauge.apply(&MinkowskiVector(v.ray));
            format!("{:.3}", g[2].atan2(g[1]))
        })
        .collect();
    format!(
        "polygon is unbounded; no bisector closes the directions near angles [{}] rad",
        angles.join(", ")
    )
}

/// Intersects the half-planes of the images in order of increasing distance
/// from x, stopping once the next image is farther than twice the
/// circumradius. With `exhaust` set, every image is inserted.
pub fn dirichlet_domain_with(
    x: &HyperbolicPoint,
    images: &[(GroupWord, HyperbolicPoint)],
    tol: f64,
    exhaust: bool,
) -> Result<DirichletDomain> {
    let mut bisectors: Vec<BisectorHalfPlane> = images
        .iter()
        .map(|(w, q)| BisectorHalfPlane::new(x, w.clone(), *q))
        .collect();
    for b in &bisectors {
        if x.distance(&b.image) <= tol {
            return Err(Error::Reconstruction(format!(
                "image of {} coincides with the observer",
                b.word
            )));
        }
    }
    bisectors.sort_by(|a, b| a.rho(x).total_cmp(&b.rho(x)).then_with(|| a.word.cmp(&b.word)));

    // chart coordinates centred on x, so the initial box contains the disc
    let frame = crate::minkowski::LorentzTransform::boost_to(x);
    let to_local = frame.inverse();
    let local_normals: Vec<MinkowskiVector> =
        bisectors.iter().map(|b| to_local.apply(&b.normal)).collect();

    let mut poly = ChartPolygon::initial();
    let mut retained: Vec<BisectorHalfPlane> = Vec::new();
    let mut retained_local: Vec<MinkowskiVector> = Vec::new();
    let mut certified = false;
    let mut radius = f64::INFINITY;
    for (b, n) in bisectors.iter().zip(&local_normals) {
        if !exhaust && radius.is_finite() && b.rho(x) > 2.0 * radius {
            certified = true;
            break;
        }
        retained.push(b.clone());
        retained_local.push(*n);
        let id = retained.len() - 1;
        if poly.clip(id, n, tol) && poly.bounded() {
            radius = poly
                .verts
                .iter()
                .map(|v| {
                    let r = v.ray[1].hypot(v.ray[2]);
                    r.atanh()
                })
                .fold(0.0, f64::max);
        }
    }
    if !poly.bounded() {
        return Err(Error::InsufficientData(uncovered_directions(&poly, x)));
    }

    let local: Vec<BisectorHalfPlane> = retained
        .iter()
        .zip(&retained_local)
        .map(|(b, n)| BisectorHalfPlane {
            normal: *n,
            ..b.clone()
        })
        .collect();
    let vertices: Vec<HyperbolicPoint> = exact_vertices(&poly, &local)?
        .into_iter()
        .map(|v| v.transform(&frame))
        .collect();
    let k = vertices.len();
    let sides = (0..k)
        .map(|i| {
            let id = poly.verts[i].edge.expect("bounded polygon");
            DomainSide {
                word: retained[id].word.clone(),
                start: i,
                end: (i + 1) % k,
                length: vertices[i].distance(&vertices[(i + 1) % k]),
                bisector: id,
            }
        })
        .collect();
    let circumradius = vertices.iter().map(|v| x.distance(v)).fold(0.0, f64::max);
    Ok(DirichletDomain {
        center: *x,
        vertices,
        sides,
        circumradius,
        retained,
        certified,
    })
}

pub fn dirichlet_domain(
    x: &HyperbolicPoint,
    images: &[(GroupWord, HyperbolicPoint)],
    tol: f64,
) -> Result<DirichletDomain> {
    dirichlet_domain_with(x, images, tol, false)
}
