//! Holonomy maps π₁(M) → ISO⁺(2,1): static (cone) spacetimes, user-supplied
//! translational cocycles and single-curve grafting.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{enumerate_ball, GroupWord, Letter, SurfaceGroupPresentation};
use crate::minkowski::{
    HyperbolicPoint, LorentzClass, LorentzTransform, MinkowskiVector, PoincareElement,
};
use crate::Tolerances;

/// Word-ball radius used when classifying elements during validation.
pub const VALIDATION_BALL_RADIUS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct HolonomyMap {
    presentation: SurfaceGroupPresentation,
    generators: Vec<PoincareElement>,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub lorentz_residual: f64,
    pub poincare_residual: f64,
    pub elements_checked: usize,
    /// First non-identity element that is not hyperbolic, if any.
    pub offending: Option<(GroupWord, LorentzClass)>,
    pub tolerance: f64,
    /// Conditioning factor κ² ≥ 1 applied to the tolerance, where κ is the
    /// largest generator entry divided by the largest cosh of a translation
    /// length. κ = 1 when the generators are conjugated into a balanced frame.
    pub scale: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.offending.is_none()
            && self.lorentz_residual < self.threshold()
            && self.poincare_residual < self.threshold()
    }

    pub fn threshold(&self) -> f64 {
        self.tolerance * self.scale
    }

    fn failure_message(&self) -> String {
        if let Some((w, c)) = &self.offending {
            format!("element {w} is {c:?}, expected hyperbolic")
        } else if self.lorentz_residual >= self.threshold() {
            format!("Lorentz relator residual {:e}", self.lorentz_residual)
        } else {
            format!("Poincaré relator residual {:e}", self.poincare_residual)
        }
    }
}

impl HolonomyMap {
    pub fn new(
        presentation: SurfaceGroupPresentation,
        generators: Vec<PoincareElement>,
    ) -> Result<Self> {
        if generators.len() != presentation.generator_count() {
            return Err(Error::GeneratorCount {
                expected: presentation.generator_count(),
                got: generators.len(),
            });
        }
        Ok(Self {
            presentation,
            generators,
        })
    }

    /// Map with the given Lorentz parts and zero translations.
    pub fn from_lorentz(fuchsian: &[LorentzTransform]) -> Result<Self> {
        let presentation = SurfaceGroupPresentation::new(fuchsian.len() / 2)?;
        Self::new(
            presentation,
            fuchsian.iter().map(|v| PoincareElement::pure_lorentz(*v)).collect(),
        )
    }

    pub fn presentation(&self) -> &SurfaceGroupPresentation {
        &self.presentation
    }

    pub fn genus(&self) -> usize {
        self.presentation.genus()
    }

    pub fn generators(&self) -> &[PoincareElement] {
        &self.generators
    }

    pub fn lorentz_generators(&self) -> Vec<LorentzTransform> {
        self.generators.iter().map(|g| g.lorentz).collect()
    }

    pub fn translations(&self) -> Vec<MinkowskiVector> {
        self.generators.iter().map(|g| g.translation).collect()
    }

    /// Same Lorentz parts, generator translations replaced.
    pub fn with_translations(&self, translations: &[MinkowskiVector]) -> Result<Self> {
        if translations.len() != self.generators.len() {
            return Err(Error::GeneratorCount {
                expected: self.generators.len(),
                got: translations.len(),
            });
        }
        let gens = self
            .generators
            .iter()
            .zip(translations)
            .map(|(g, a)| PoincareElement::new(g.lorentz, *a))
            .collect();
        Self::new(self.presentation, gens)
    }

    /// Adds another cocycle over the same Fuchsian group (multicurves).
    pub fn add_cocycle(&self, other: &Self) -> Result<Self> {
        let sum: Vec<MinkowskiVector> = self
            .translations()
            .iter()
            .zip(other.translations())
            .map(|(a, b)| *a + b)
            .collect();
        self.with_translations(&sum)
    }

    fn letter_element(&self, l: &Letter) -> PoincareElement {
        let g = self.generators[l.generator];
        if l.inverse {
            g.inverse()
        } else {
            g
        }
    }

    /// Left-to-right product of the letters; the empty word is the identity.
    pub fn evaluate_word(&self, word: &GroupWord) -> Result<PoincareElement> {
        self.presentation.check_word(word)?;
        let mut acc = PoincareElement::identity();
        for (k, l) in word.letters().iter().enumerate() {
            acc = acc.compose(&self.letter_element(l));
            if (k + 1) % crate::minkowski::REORTHO_INTERVAL == 0 {
                acc = acc.reorthonormalized();
            }
        }
        Ok(acc)
    }

    /// g·h(λ)·g⁻¹ for every generator.
    pub fn conjugate_global(&self, g: &PoincareElement) -> Self {
        Self {
            presentation: self.presentation,
            generators: self.generators.iter().map(|h| h.conjugate_by(g)).collect(),
        }
    }

    fn conditioning(&self) -> f64 {
        let (mut entry, mut balanced) = (1.0f64, 1.0f64);
        for g in &self.generators {
            entry = entry.max(g.lorentz.matrix().amax());
            let half_trace = 0.5 * (g.lorentz.matrix().trace() - 1.0);
            balanced = balanced.max(half_trace.abs());
        }
        (entry / balanced).max(1.0)
    }

    pub fn report(&self, tol: &Tolerances) -> ValidationReport {
        let relator = self.presentation.relator();
        let full = self
            .evaluate_word(&relator)
            .expect("relator uses presentation generators");
        let lorentz_residual = full.lorentz.distance_to_identity();
        let poincare_residual = full.distance_to_identity();

        let ball = enumerate_ball(&self.lorentz_generators(), VALIDATION_BALL_RADIUS);
        let offending = ball.non_identity().find_map(|e| {
            let c = crate::minkowski::classify_lorentz(&e.matrix, tol.eps);
            (c != LorentzClass::Hyperbolic).then(|| (e.word.clone(), c))
        });
        ValidationReport {
            lorentz_residual,
            poincare_residual,
            elements_checked: ball.len(),
            offending,
            tolerance: tol.relator,
            scale: self.conditioning().powi(2),
        }
    }

    /// Relator residuals plus hyperbolicity of every non-identity element in
    /// the word ball of radius 4.
    pub fn validate(&self, tol: &Tolerances) -> Result<ValidationReport> {
        let r = self.report(tol);
        if r.passed() {
            Ok(r)
        } else {
            Err(Error::Validation(r.failure_message()))
        }
    }
}

/// h(λ) = (1,p)·(v_λ,0)·(1,−p) = (v_λ, p − v_λ p).
pub fn static_holonomy(fuchsian: &[LorentzTransform], tip: MinkowskiVector) -> Result<HolonomyMap> {
    let presentation = SurfaceGroupPresentation::new(fuchsian.len() / 2)?;
    let gens = fuchsian
        .iter()
        .map(|v| PoincareElement::new(*v, tip - v.apply(&tip)))
        .collect();
    HolonomyMap::new(presentation, gens)
}

/// Grafting along the closed geodesic of the primitive element `curve`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraftingDatum {
    pub curve: GroupWord,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct GraftingOptions {
    /// Initial word-ball radius for the lift search.
    pub search_radius: usize,
    /// Hard cap for the automatic increase of the search radius.
    pub max_radius: usize,
    /// Lifts are kept if they can cross the segment [x, v_λx] for some word
    /// λ of at most this length.
    pub reach_word_length: usize,
}

impl Default for GraftingOptions {
    fn default() -> Self {
        Self {
            search_radius: 6,
            max_radius: 10,
            reach_word_length: 2,
        }
    }
}

/// A lift of the grafting geodesic, normal oriented away from the basepoint.
#[derive(Clone, Copy, Debug)]
pub struct GeodesicLift {
    pub normal: MinkowskiVector,
}

#[derive(Clone, Debug)]
pub struct GraftedHolonomy {
    pub map: HolonomyMap,
    pub datum: GraftingDatum,
    pub base: HyperbolicPoint,
    /// Search radius at which the relator closed.
    pub radius: usize,
    /// Lifts of the grafting geodesic that can cross [x, v_λx] for words up to
    /// the configured reach length.
    pub lifts: Vec<GeodesicLift>,
}

impl GraftedHolonomy {
    /// Lifts separating the basepoint from its image under `v`.
    pub fn separating(&self, v: &LorentzTransform) -> Vec<GeodesicLift> {
        let y = v.apply(&self.base.vector());
        self.lifts
            .iter()
            .filter(|l| l.normal.dot(&y) > 0.0)
            .copied()
            .collect()
    }

    /// Number of lifts crossed by the segment from the basepoint to the image
    /// of the basepoint under generator `k`.
    pub fn generator_crossings(&self, k: usize) -> usize {
        self.separating(&self.map.generators()[k].lorentz).len()
    }
}

struct LiftSet {
    cell: f64,
    index: HashMap<[i64; 3], Vec<usize>>,
    lifts: Vec<GeodesicLift>,
}

impl LiftSet {
    fn new() -> Self {
        Self {
            cell: 1e-5,
            index: HashMap::new(),
            lifts: Vec::new(),
        }
    }

    fn key(&self, n: &MinkowskiVector) -> [i64; 3] {
        n.to_array().map(|c| (c / self.cell).round() as i64)
    }

    fn insert(&mut self, n: MinkowskiVector) {
        let k = self.key(&n);
        for i in -1..=1 {
            for j in -1..=1 {
                for l in -1..=1 {
                    if let Some(ids) = self.index.get(&[k[0] + i, k[1] + j, k[2] + l]) {
                        if ids.iter().any(|&id| self.lifts[id].normal.max_abs_diff(&n) < 1e-6) {
                            return;
                        }
                    }
                }
            }
        }
        self.index.entry(k).or_default().push(self.lifts.len());
        self.lifts.push(GeodesicLift { normal: n });
    }
}

/// Unit spacelike normal of the axis plane of a hyperbolic element: the
/// fixed vector of v, i.e. the eigenvector with eigenvalue 1.
pub fn axis_normal(v: &LorentzTransform) -> Result<MinkowskiVector> {
    let class = v.classify();
    if class != LorentzClass::Hyperbolic {
        return Err(Error::NotHyperbolic(class));
    }
    // rows of (v − 1) span the η-dual of the fixed line; take the best
    // conditioned cross product of two rows and raise the index.
    let m = v.matrix() - nalgebra::Matrix3::identity();
    let rows: Vec<nalgebra::Vector3<f64>> = (0..3).map(|i| m.row(i).transpose()).collect();
    let candidates = [
        rows[0].cross(&rows[1]),
        rows[0].cross(&rows[2]),
        rows[1].cross(&rows[2]),
    ];
    let best = candidates
        .iter()
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
        .unwrap();
    // the kernel of (v − 1) is the Euclidean orthogonal complement of its rows
    let n = MinkowskiVector(*best);
    n.unit_spacelike()
        .ok_or_else(|| Error::Internal("fixed vector of hyperbolic element is not spacelike".into()))
}

/// Translational cocycle of grafting along one simple closed geodesic.
///
/// Each lift μ·n of the grafting plane that separates the basepoint x from
/// v_λx contributes `weight · n_μ`, with n_μ oriented away from x.
pub fn grafting_cocycle_single_curve(
    fuchsian: &[LorentzTransform],
    datum: &GraftingDatum,
    base: &HyperbolicPoint,
    options: GraftingOptions,
    tol: &Tolerances,
) -> Result<GraftedHolonomy> {
    let presentation = SurfaceGroupPresentation::new(fuchsian.len() / 2)?;
    presentation.check_word(&datum.curve)?;
    if !(datum.weight > 0.0) {
        return Err(Error::Validation(format!(
            "grafting weight must be positive, got {}",
            datum.weight
        )));
    }
    let gamma = datum.curve.evaluate(fuchsian);
    let normal = axis_normal(&gamma)?;

    let x = base.vector();
    let images: Vec<MinkowskiVector> = fuchsian.iter().map(|v| v.apply(&x)).collect();
    // a lift can only separate x from v_λx if it passes within d(x, v_λx)
    let reach = enumerate_ball(fuchsian, options.reach_word_length.max(1))
        .elements
        .iter()
        .map(|e| (-x.dot(&e.matrix.apply(&x))).max(1.0).acosh())
        .fold(0.0, f64::max);
    let reach_sinh = reach.sinh() + 1.0;

    let static_map = HolonomyMap::from_lorentz(fuchsian)?;
    let mut radius = options.search_radius;
    loop {
        let lifts = collect_lifts(fuchsian, &normal, &x, radius, reach_sinh, tol.graft)?;
        let translations: Vec<MinkowskiVector> = images
            .iter()
            .map(|y| {
                lifts
                    .iter()
                    .filter(|l| l.normal.dot(y) > 0.0)
                    .fold(MinkowskiVector::ZERO, |acc, l| acc + l.normal * datum.weight)
            })
            .collect();
        let map = static_map.with_translations(&translations)?;
        let residual = map
            .evaluate_word(&presentation.relator())?
            .distance_to_identity();
        if residual < tol.relator {
            log::debug!("grafting lifts: {} within radius {radius}", lifts.len());
            return Ok(GraftedHolonomy {
                map,
                datum: datum.clone(),
                base: *base,
                radius,
                lifts,
            });
        }
        if radius >= options.max_radius {
            return Err(Error::GraftingRadiusTooSmall { radius, residual });
        }
        radius += 1;
    }
}

/// Distinct lifts μ·n, |μ| ≤ radius, passing within asinh(`reach_sinh`) of x.
fn collect_lifts(
    fuchsian: &[LorentzTransform],
    normal: &MinkowskiVector,
    x: &MinkowskiVector,
    radius: usize,
    reach_sinh: f64,
    graft_eps: f64,
) -> Result<Vec<GeodesicLift>> {
    let alphabet = Letter::alphabet(fuchsian.len());
    let letter_mats: Vec<LorentzTransform> = alphabet
        .iter()
        .map(|l| {
            let g = fuchsian[l.generator];
            if l.inverse {
                g.inverse()
            } else {
                g
            }
        })
        .collect();

    // depth-first over reduced words, one task per first letter
    let found: Vec<Vec<MinkowskiVector>> = (0..alphabet.len())
        .into_par_iter()
        .map(|first| {
            let mut out = Vec::new();
            if radius == 0 {
                return out;
            }
            let mut stack = vec![(first, letter_mats[first], 1usize)];
            while let Some((last, m, depth)) = stack.pop() {
                let n = m.apply(normal);
                if n.dot(x).abs() <= reach_sinh {
                    out.push(n);
                }
                if depth < radius {
                    for (i, lm) in letter_mats.iter().enumerate() {
                        if alphabet[i] != alphabet[last].inv() {
                            stack.push((i, m.compose(lm), depth + 1));
                        }
                    }
                }
            }
            out
        })
        .collect();

    let mut set = LiftSet::new();
    let mut add = |n: MinkowskiVector| -> Result<()> {
        let side = n.dot(x);
        if side.abs() < graft_eps {
            return Err(Error::DegenerateBasepoint {
                distance: side.abs().asinh(),
            });
        }
        set.insert(if side < 0.0 { n } else { -n });
        Ok(())
    };
    if normal.dot(x).abs() <= reach_sinh {
        add(*normal)?;
    }
    for n in found.into_iter().flatten() {
        add(n)?;
    }
    Ok(set.lifts)
}
