use nalgebra::Matrix3;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::GroupWord;
use crate::minkowski::{HyperbolicPoint, LorentzTransform};

use super::dirichlet::DirichletDomain;

/// Side with word λ identified with the side of λ⁻¹ by v_λ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SidePairing {
    pub side: GroupWord,
    pub partner: GroupWord,
    #[serde(serialize_with = "serialize_rows")]
    pub transform: LorentzTransform,
    /// |length(side) − length(partner)|.
    pub length_mismatch: f64,
    /// Max-norm mismatch of the mapped partner endpoints.
    pub endpoint_mismatch: f64,
}

fn serialize_rows<S: serde::Serializer>(v: &LorentzTransform, s: S) -> std::result::Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&v.rows(), s)
}

/// Orientation-preserving isometry with p₁ ↦ q₁ and p₂ ↦ q₂, for
/// d(p₁,p₂) = d(q₁,q₂) > 0.
pub fn isometry_from_point_pairs(
    p1: &HyperbolicPoint,
    p2: &HyperbolicPoint,
    q1: &HyperbolicPoint,
    q2: &HyperbolicPoint,
) -> Result<LorentzTransform> {
    let frame = |a: &HyperbolicPoint, b: &HyperbolicPoint| -> Result<Matrix3<f64>> {
        let t = a
            .tangent_towards(b)
            .ok_or_else(|| Error::Reconstruction("coincident points in isometry fit".into()))?;
        let av = a.vector();
        Ok(Matrix3::from_columns(&[av.0, t.0, av.wedge(&t).0]))
    };
    let e = frame(p1, p2)?;
    let f = frame(q1, q2)?;
    let e_inv = LorentzTransform::from_matrix_unchecked(e).inverse();
    Ok(LorentzTransform::from_matrix_unchecked(f * e_inv.matrix()).reorthonormalized())
}

/// Isometry mapping v_λ⁻¹x ↦ x and x ↦ v_λx.
pub fn pairing_transform(
    x: &HyperbolicPoint,
    image: &HyperbolicPoint,
    inverse_image: &HyperbolicPoint,
) -> Result<LorentzTransform> {
    isometry_from_point_pairs(inverse_image, x, x, image)
}

/// Pairs every side λ with the side λ⁻¹ and fits the pairing isometries.
///
/// A side whose inverse word does not label another side is matched by
/// length; more than one (or no) candidate is reported as ambiguous.
pub fn side_pairings_to_generators(domain: &DirichletDomain, tol: f64) -> Result<Vec<SidePairing>> {
    let x = domain.center;
    let image = |i: usize| domain.retained[domain.sides[i].bisector].image;
    let mut out = Vec::with_capacity(domain.sides.len());
    for (i, s) in domain.sides.iter().enumerate() {
        let inv = s.word.inverse();
        let j = match domain.sides.iter().position(|o| o.word == inv) {
            Some(j) => j,
            None => {
                let candidates: Vec<usize> = (0..domain.sides.len())
                    .filter(|&j| j != i && (domain.sides[j].length - s.length).abs() < tol)
                    .collect();
                if candidates.len() != 1 {
                    return Err(Error::AmbiguousPairing {
                        side: s.word.to_string(),
                        candidates: candidates
                            .iter()
                            .map(|&j| domain.sides[j].word.to_string())
                            .collect(),
                    });
                }
                candidates[0]
            }
        };
        if i == j {
            return Err(Error::Reconstruction(format!("side {} is paired with itself", s.word)));
        }
        let v = pairing_transform(&x, &image(i), &image(j))?;
        if v.distance_to_identity() < tol {
            return Err(Error::Reconstruction(format!("side {} pairs by the identity", s.word)));
        }
        // v maps the partner side onto this side with reversed orientation
        let partner = &domain.sides[j];
        let mapped_start = v.apply(&domain.vertices[partner.start].vector());
        let mapped_end = v.apply(&domain.vertices[partner.end].vector());
        let endpoint_mismatch = mapped_start
            .max_abs_diff(&domain.vertices[s.end].vector())
            .max(mapped_end.max_abs_diff(&domain.vertices[s.start].vector()));
        out.push(SidePairing {
            side: s.word.clone(),
            partner: partner.word.clone(),
            transform: v,
            length_mismatch: (s.length - partner.length).abs(),
            endpoint_mismatch,
        });
    }
    Ok(out)
}
