//! Recovery of the holonomy map from returning-lightray measurements alone.
//!
//! The observer's own frame is fixed as x = (1,0,0), x₀ = 0. Lorentz parts
//! come from the Dirichlet polygon of the image points and its side
//! pairings; translations from a linear least-squares problem in the 2g
//! generator translations, with two equations per measured word and
//! emission time.

pub mod dirichlet;
pub mod fit;
pub mod pairing;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupWord, SurfaceGroupPresentation};
use crate::holonomy::{HolonomyMap, ValidationReport};
use crate::lightpath::{relative_params, ObserverWorldline, RelativeParams, ReturnEvent};
use crate::minkowski::{HyperbolicPoint, LorentzTransform, MinkowskiVector};
use crate::Tolerances;

pub use dirichlet::{dirichlet_domain, hausdorff_distance, DirichletDomain};
pub use fit::{fit_evolving_params, MeasurementSeries, Sample, WordFit};
pub use pairing::{side_pairings_to_generators, SidePairing};

/// Everything the observer records for one returning lightray.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub word: GroupWord,
    pub t_e: f64,
    pub dt: f64,
    pub phi_e: f64,
    pub phi_r: f64,
    pub p_e: MinkowskiVector,
    pub p_r: MinkowskiVector,
    pub freq_ratio: f64,
}

impl From<&ReturnEvent> for Measurement {
    fn from(e: &ReturnEvent) -> Self {
        Self {
            word: e.word.clone(),
            t_e: e.t_e,
            dt: e.dt,
            phi_e: e.phi_e,
            phi_r: e.phi_r,
            p_e: e.p_e,
            p_r: e.p_r,
            freq_ratio: e.freq_ratio,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Static,
    Evolving,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(Mode::Static),
            "evolving" => Ok(Mode::Evolving),
            _ => Err(Error::Parse(format!("unknown mode `{s}`"))),
        }
    }
}

/// q = cosh ρ · x + sinh ρ · p̂.
pub fn locate_image(x: &HyperbolicPoint, rho: f64, p_hat: &MinkowskiVector) -> HyperbolicPoint {
    let q = x.vector() * rho.cosh() + *p_hat * rho.sinh();
    HyperbolicPoint::from_timelike(q).unwrap_or(*x)
}

/// The observer velocity: the unit future timelike vector orthogonal to
/// every recorded direction.
pub fn observer_velocity(measurements: &[Measurement]) -> Result<HyperbolicPoint> {
    let mut m = Matrix3::zeros();
    for p in measurements.iter().flat_map(|e| [e.p_e, e.p_r]) {
        let lowered = nalgebra::Vector3::new(-p[0], p[1], p[2]);
        m += lowered * lowered.transpose();
    }
    let eig = SymmetricEigen::new(m);
    let k = eig.eigenvalues.imin();
    let mut x = MinkowskiVector(eig.eigenvectors.column(k).into());
    if x[0] < 0.0 {
        x = -x;
    }
    HyperbolicPoint::from_timelike(x).map_err(|_| {
        Error::InsufficientData("recorded directions do not span a spacelike plane".into())
    })
}

/// Static direction û towards v_λx from the emission direction:
/// p̂ = cos φ û + sin φ x∧û inverted as û = cos φ p̂ − sin φ x∧p̂.
pub fn static_direction_from_emission(x: &MinkowskiVector, p_e: &MinkowskiVector, phi_e: f64) -> MinkowskiVector {
    *p_e * phi_e.cos() - x.wedge(p_e) * phi_e.sin()
}

/// ρ and the image v_λx from one measurement, using the recorded return
/// angle: the frequency fixes ρ given u = cos φ_r, and
/// tan φ_e = tan φ_r / (cosh ρ + sinh ρ / cos φ_r).
pub fn locate_from_measurement(x: &HyperbolicPoint, m: &Measurement) -> Result<(f64, HyperbolicPoint)> {
    let k = m.phi_r.tan();
    let u = 1.0 / k.hypot(1.0);
    let rho = fit::rho_from_frequency(m.freq_ratio, u)?;
    let phi_e = k.atan2(rho.cosh() + rho.sinh() * k.hypot(1.0));
    let u_hat = static_direction_from_emission(&x.vector(), &m.p_e, phi_e);
    Ok((rho, locate_image(x, rho, &u_hat)))
}

#[derive(Clone, Debug)]
pub struct RecoveredHolonomy {
    pub map: HolonomyMap,
    /// Observer in the reconstruction gauge (x = (1,0,0), x₀ = 0).
    pub observer: ObserverWorldline,
    pub generator_params: Vec<(GroupWord, RelativeParams)>,
    /// Max residual of the linear equations for the translations.
    pub translation_residual: f64,
    pub validation: ValidationReport,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub mode: Mode,
    /// Lorentz transformation taking recorded directions to the gauge frame.
    pub gauge: LorentzTransform,
    pub emission_times: Vec<f64>,
    pub domain: DirichletDomain,
    pub pairings: Vec<SidePairing>,
    pub fits: Vec<WordFit>,
    /// Max spread of image points computed from different emission times.
    pub image_spread: f64,
    pub holonomy: RecoveredHolonomy,
}

fn genus_of(measurements: &[Measurement]) -> Result<usize> {
    let max = measurements
        .iter()
        .filter_map(|m| m.word.max_generator())
        .max()
        .ok_or_else(|| Error::InsufficientData("no non-identity words in the data".into()))?;
    Ok((max + 2) / 2)
}

fn to_gauge(measurements: &[Measurement], g: &LorentzTransform) -> Vec<Measurement> {
    measurements
        .iter()
        .map(|m| Measurement {
            p_e: g.apply(&m.p_e),
            p_r: g.apply(&m.p_r),
            ..m.clone()
        })
        .collect()
}

/// Lorentz parts of the generators from side pairings, falling back to the
/// two-point fit on the images of a generator and its inverse.
fn generator_lorentz_parts(
    x: &HyperbolicPoint,
    presentation: &SurfaceGroupPresentation,
    pairings: &[SidePairing],
    images: &BTreeMap<GroupWord, HyperbolicPoint>,
) -> Result<Vec<LorentzTransform>> {
    (0..presentation.generator_count())
        .map(|k| {
            let g = GroupWord::generator(k);
            let gi = g.inverse();
            if let Some(p) = pairings.iter().find(|p| p.side == g) {
                return Ok(p.transform);
            }
            if let Some(p) = pairings.iter().find(|p| p.side == gi) {
                return Ok(p.transform.inverse());
            }
            match (images.get(&g), images.get(&gi)) {
                (Some(q), Some(qi)) => pairing::pairing_transform(x, q, qi),
                _ => Err(Error::InsufficientData(format!(
                    "generator {} is neither a side of the polygon nor measured with its inverse",
                    presentation.label(k)
                ))),
            }
        })
        .collect()
}

/// 3×3 blocks M_k with a_w = Σ_k M_k a_k for the translations a_k.
fn cocycle_blocks(word: &GroupWord, gens: &[LorentzTransform]) -> Vec<Matrix3<f64>> {
    let mut blocks = vec![Matrix3::zeros(); gens.len()];
    let mut prefix = LorentzTransform::identity();
    for l in word.letters() {
        let v = gens[l.generator];
        if l.inverse {
            let vi = v.inverse();
            blocks[l.generator] -= prefix.matrix() * vi.matrix();
            prefix = prefix * vi;
        } else {
            blocks[l.generator] += prefix.matrix();
            prefix = prefix * v;
        }
    }
    blocks
}

/// Generator translations in the gauge x = (1,0,0), x₀ = 0.
///
/// For each measurement, with σ, τ, ν the linear functionals of a_w dual to
/// the basis (vx − x, vx, x∧vx), T = tan φ_r and D = cosh ρ − 1 + sinh ρ √(1+T²):
///   ν − Tσ = T t,   Dσ − τ = Δt − D t.
pub fn recover_translations(
    gens: &[LorentzTransform],
    measurements: &[Measurement],
) -> Result<(Vec<MinkowskiVector>, f64)> {
    let x = HyperbolicPoint::origin().vector();
    let n = 3 * gens.len();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for m in measurements.iter().filter(|m| m.word.len() <= 2) {
        let v = m.word.evaluate(gens);
        let vx = v.apply(&x);
        let c = -x.dot(&vx);
        let sh = (c * c - 1.0).max(0.0).sqrt();
        let basis = Matrix3::from_columns(&[(vx - x).0, vx.0, x.wedge(&vx).0]);
        let dual = basis.try_inverse().ok_or_else(|| {
            Error::Reconstruction(format!("word {} fixes the observer velocity", m.word))
        })?;
        let (r_sigma, r_tau, r_nu) = (dual.row(0), dual.row(1), dual.row(2));
        let t = m.phi_r.tan();
        let d = c - 1.0 + sh * t.hypot(1.0);
        let blocks = cocycle_blocks(&m.word, gens);
        for (functional, rhs) in [
            (r_nu - r_sigma * t, t * m.t_e),
            (r_sigma * d - r_tau, m.dt - d * m.t_e),
        ] {
            let mut row = vec![0.0; n];
            for (k, b) in blocks.iter().enumerate() {
                let coeffs = functional * b;
                row[3 * k..3 * k + 3].copy_from_slice(coeffs.as_slice());
            }
            let scale = row.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
            if scale > 0.0 {
                rows.push((row.iter().map(|c| c / scale).collect(), rhs / scale));
            }
        }
    }
    if rows.len() < n {
        return Err(Error::InsufficientData(format!(
            "{} equations for {n} translation components",
            rows.len()
        )));
    }
    let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i].0[j]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::InsufficientData(format!(
            "translations are not determined by the measurements (condition {:e})",
            smin / smax
        )));
    }
    let sol = svd.solve(&b, 0.0).map_err(|e| Error::Internal(e.to_string()))?;
    let residual = (&a * &sol - &b).amax();
    let translations = (0..gens.len())
        .map(|k| MinkowskiVector::new(sol[3 * k], sol[3 * k + 1], sol[3 * k + 2]))
        .collect();
    Ok((translations, residual))
}

/// Assembles and validates the recovered map in the reconstruction gauge.
pub fn recover_holonomies(
    presentation: SurfaceGroupPresentation,
    gens: &[LorentzTransform],
    measurements: &[Measurement],
    tol: &Tolerances,
) -> Result<RecoveredHolonomy> {
    let (translations, translation_residual) = recover_translations(gens, measurements)?;
    let map = HolonomyMap::new(
        presentation,
        gens.iter()
            .zip(&translations)
            .map(|(v, a)| crate::minkowski::PoincareElement::new(*v, *a))
            .collect(),
    )?;
    let recovered_tol = Tolerances {
        relator: tol.relator.max(1e-6),
        ..*tol
    };
    let validation = map
        .validate(&recovered_tol)
        .map_err(|e| Error::Reconstruction(e.to_string()))?;
    let observer = ObserverWorldline::standard();
    let generator_params = (0..presentation.generator_count())
        .map(|k| {
            let w = GroupWord::generator(k);
            let p = relative_params(&observer, &map.evaluate_word(&w)?)?;
            Ok((w, p))
        })
        .collect::<Result<_>>()?;
    Ok(RecoveredHolonomy {
        map,
        observer,
        generator_params,
        translation_residual,
        validation,
    })
}

/// Max over `words` of the deviation between the (ρ, σ, τ, ν) computed for
/// (hA, obsA) and for (hB, obsB).
pub fn invariant_compare(
    ha: &HolonomyMap,
    obs_a: &ObserverWorldline,
    hb: &HolonomyMap,
    obs_b: &ObserverWorldline,
    words: &[GroupWord],
) -> Result<f64> {
    if ha.presentation() != hb.presentation() {
        return Err(Error::Validation("holonomy maps have different presentations".into()));
    }
    let mut dev: f64 = 0.0;
    for w in words.iter().filter(|w| !w.is_empty()) {
        let pa = relative_params(obs_a, &ha.evaluate_word(w)?)?;
        let pb = relative_params(obs_b, &hb.evaluate_word(w)?)?;
        dev = dev.max(pa.max_abs_diff(&pb));
    }
    Ok(dev)
}

fn group_by_word(measurements: &[Measurement]) -> BTreeMap<GroupWord, Vec<&Measurement>> {
    let mut by_word: BTreeMap<GroupWord, Vec<&Measurement>> = BTreeMap::new();
    for m in measurements {
        by_word.entry(m.word.clone()).or_default().push(m);
    }
    for v in by_word.values_mut() {
        v.sort_by(|a, b| a.t_e.total_cmp(&b.t_e));
    }
    by_word
}

fn emission_times(measurements: &[Measurement]) -> Vec<f64> {
    let mut times: Vec<f64> = measurements.iter().map(|m| m.t_e).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

/// Full pipeline: gauge fixing, image points, Dirichlet polygon, side
/// pairings, per-word fits (evolving mode) and the holonomy map.
///
/// Static mode uses only the earliest emission time; evolving mode needs at
/// least two emission times for every word.
pub fn reconstruct(measurements: &[Measurement], mode: Mode, tol: &Tolerances) -> Result<Reconstruction> {
    if measurements.is_empty() {
        return Err(Error::InsufficientData("no measurements".into()));
    }
    let x_data = observer_velocity(measurements)?;
    let gauge = LorentzTransform::boost_to(&x_data).inverse();
    let all = to_gauge(measurements, &gauge);
    let times = emission_times(&all);
    let used: Vec<Measurement> = match mode {
        Mode::Static => all.iter().filter(|m| m.t_e == times[0]).cloned().collect(),
        Mode::Evolving => all,
    };
    let genus = genus_of(&used)?;
    let presentation = SurfaceGroupPresentation::new(genus)?;
    let by_word = group_by_word(&used);

    let fits = match mode {
        Mode::Static => Vec::new(),
        Mode::Evolving => {
            if times.len() < 2 {
                return Err(Error::InsufficientData(
                    "evolving reconstruction needs at least two emission times".into(),
                ));
            }
            let series: Vec<MeasurementSeries> = by_word
                .iter()
                .map(|(w, ms)| {
                    MeasurementSeries::new(
                        w.clone(),
                        ms.iter()
                            .map(|m| Sample {
                                t_e: m.t_e,
                                dt: m.dt,
                                phi_r: m.phi_r,
                                freq_ratio: m.freq_ratio,
                            })
                            .collect(),
                    )
                })
                .collect::<Result<_>>()?;
            series
                .par_iter()
                .map(|s| fit_evolving_params(s, tol.eps, tol.fit))
                .collect::<Result<Vec<_>>>()?
        }
    };

    let x = HyperbolicPoint::origin();
    let mut images = BTreeMap::new();
    let mut image_spread: f64 = 0.0;
    for (w, ms) in &by_word {
        let located: Vec<HyperbolicPoint> = ms
            .iter()
            .map(|m| locate_from_measurement(&x, m).map(|(_, q)| q))
            .collect::<Result<_>>()?;
        for q in &located[1..] {
            image_spread = image_spread.max(q.vector().max_abs_diff(&located[0].vector()));
        }
        images.insert(w.clone(), located[0]);
    }
    let image_list: Vec<(GroupWord, HyperbolicPoint)> =
        images.iter().map(|(w, q)| (w.clone(), *q)).collect();
    let domain = dirichlet_domain(&x, &image_list, tol.eps)?;
    let pairings = side_pairings_to_generators(&domain, 1e-8)?;
    let gens = generator_lorentz_parts(&x, &presentation, &pairings, &images)?;
    let holonomy = recover_holonomies(presentation, &gens, &used, tol)?;
    Ok(Reconstruction {
        mode,
        gauge,
        emission_times: times,
        domain,
        pairings,
        fits,
        image_spread,
        holonomy,
    })
}

/// Polygon P̃(t) built as if the spacetime were static: images at the
/// modified distance ρ̃(t) = ln(1 + Δt/t) along the emission directions.
pub fn deformed_polygon(measurements: &[Measurement], t: f64, tol: f64) -> Result<DirichletDomain> {
    let x = HyperbolicPoint::origin();
    let images: Vec<(GroupWord, HyperbolicPoint)> = measurements
        .iter()
        .filter(|m| m.t_e == t)
        .map(|m| {
            let rho = crate::lightpath::modified_distance(m.t_e, m.dt);
            (m.word.clone(), locate_image(&x, rho, &m.p_e))
        })
        .collect();
    dirichlet_domain(&x, &images, tol)
}
