//! Returning lightrays seen by an inertial observer: closed-form measurements
//! in terms of (ρ, σ, τ, ν) and direct Minkowski-space oracles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{enumerate_ball, GroupWord};
use crate::holonomy::HolonomyMap;
use crate::minkowski::{HyperbolicPoint, LorentzTransform, MinkowskiVector, PoincareElement};

/// Geodesic t ↦ t·x + x₀ with unit future timelike velocity x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObserverWorldline {
    pub velocity: HyperbolicPoint,
    pub position: MinkowskiVector,
}

impl ObserverWorldline {
    pub fn new(velocity: HyperbolicPoint, position: MinkowskiVector) -> Self {
        Self { velocity, position }
    }

    /// Observer at rest at the origin, x = (1,0,0), x₀ = 0.
    pub fn standard() -> Self {
        Self::new(HyperbolicPoint::origin(), MinkowskiVector::ZERO)
    }

    pub fn x(&self) -> MinkowskiVector {
        self.velocity.vector()
    }

    pub fn at(&self, t: f64) -> MinkowskiVector {
        self.position + self.x() * t
    }

    /// Image of the worldline under a Poincaré element.
    pub fn transform(&self, g: &PoincareElement) -> Self {
        Self {
            velocity: self.velocity.transform(&g.lorentz),
            position: g.apply(&self.position),
        }
    }

    /// Reparametrisation t ↦ t − t₀, x₀ ↦ x₀ + t₀x.
    pub fn time_shift(&self, t0: f64) -> Self {
        Self {
            velocity: self.velocity,
            position: self.position + self.x() * t0,
        }
    }
}

/// Relative position of a worldline and its image under one holonomy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeParams {
    pub rho: f64,
    pub sigma: f64,
    pub tau: f64,
    pub nu: f64,
}

impl RelativeParams {
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.rho - other.rho,
            self.sigma - other.sigma,
            self.tau - other.tau,
            self.nu - other.nu,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }

    /// σ(vx − x) + τ vx + ν x∧vx.
    pub fn recompose(&self, x: &MinkowskiVector, vx: &MinkowskiVector) -> MinkowskiVector {
        (*vx - *x) * self.sigma + *vx * self.tau + x.wedge(vx) * self.nu
    }

    fn shifted_time(&self, t_e: f64) -> Result<f64> {
        let s = t_e + self.sigma;
        if s > 0.0 {
            Ok(s)
        } else {
            Err(Error::Geometry {
                word: String::new(),
                reason: format!("emission time {t_e} outside validity window (t + σ = {s} ≤ 0)"),
            })
        }
    }
}

/// One returning lightray.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnEvent {
    pub word: GroupWord,
    pub t_e: f64,
    pub dt: f64,
    pub phi_e: f64,
    pub phi_r: f64,
    pub p_e: MinkowskiVector,
    pub p_r: MinkowskiVector,
    pub freq_ratio: f64,
    pub params: RelativeParams,
}

/// Emission and return directions with their angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Directions {
    pub p_e: MinkowskiVector,
    pub p_r: MinkowskiVector,
    pub phi_e: f64,
    pub phi_r: f64,
}

/// ρ from cosh ρ = −x·v x and (σ, τ, ν) from
/// σ(vx − x) + τ vx + ν x∧vx = h g̃(0) − g̃(0).
///
/// The system is solved in the orthonormal frame (x, u, w) with
/// vx = cosh ρ x + sinh ρ u and x∧vx = sinh ρ w, which avoids the nearly
/// parallel columns vx − x and vx for large ρ.
pub fn relative_params(obs: &ObserverWorldline, h: &PoincareElement) -> Result<RelativeParams> {
    let x = obs.x();
    let vx = h.lorentz.apply(&x);
    let c = -x.dot(&vx);
    if !(c > 1.0) {
        return Err(Error::Internal(format!(
            "holonomy fixes the observer velocity (cosh ρ = {c})"
        )));
    }
    let (u, w) = in_plane_frame(&x, &vx);
    let sh = (c * c - 1.0).sqrt();
    let d = h.apply(&obs.position) - obs.position;
    let (alpha, beta, gamma) = (-d.dot(&x), d.dot(&u), d.dot(&w));
    let sigma = c * beta / sh - alpha;
    Ok(RelativeParams {
        rho: c.acosh(),
        sigma,
        tau: beta / sh - sigma,
        nu: gamma / sh,
    })
}

/// Δt = (t+σ)(cosh ρ − 1) − τ + sinh ρ √((t+σ)² + ν²).
pub fn return_time(t_e: f64, params: &RelativeParams) -> Result<f64> {
    let s = params.shifted_time(t_e)?;
    let (c, sh) = (params.rho.cosh(), params.rho.sinh());
    let dt = s * (c - 1.0) - params.tau + sh * s.hypot(params.nu);
    if dt > 0.0 {
        Ok(dt)
    } else {
        Err(Error::Geometry {
            word: String::new(),
            reason: format!("non-positive return time {dt}"),
        })
    }
}

/// Emitted and received lightlike displacement y = h g̃(t_e + Δt) − g̃(t_e).
fn lightray(t_e: f64, obs: &ObserverWorldline, h: &PoincareElement) -> Result<(f64, MinkowskiVector)> {
    let a = h.lorentz.apply(&obs.x());
    let b = h.apply(&obs.at(t_e)) - obs.at(t_e);
    let ab = a.dot(&b);
    let bb = b.norm_sq();
    let disc = ab * ab + bb;
    if disc < 0.0 || bb < 0.0 {
        return Err(Error::Geometry {
            word: String::new(),
            reason: format!("image worldline point is not spacelike separated (B² = {bb})"),
        });
    }
    let root = ab + disc.sqrt();
    let other = ab - disc.sqrt();
    if !(root > 0.0) || other > 0.0 {
        return Err(Error::Geometry {
            word: String::new(),
            reason: format!("no unique positive return time (roots {root}, {other})"),
        });
    }
    let y = b + a * root;
    if !(y[0] > 0.0) {
        return Err(Error::Geometry {
            word: String::new(),
            reason: "returning lightray is not future directed".into(),
        });
    }
    Ok((root, y))
}

/// Positive root of (h g̃(t_e + Δt) − g̃(t_e))² = 0.
pub fn return_time_oracle(t_e: f64, obs: &ObserverWorldline, h: &PoincareElement) -> Result<f64> {
    lightray(t_e, obs, h).map(|(dt, _)| dt)
}

fn in_plane_frame(x: &MinkowskiVector, vx: &MinkowskiVector) -> (MinkowskiVector, MinkowskiVector) {
    let c = -x.dot(vx);
    let sh = (c * c - 1.0).sqrt();
    ((*vx - *x * c) * (1.0 / sh), x.wedge(vx) * (1.0 / sh))
}

/// Closed-form emission and return directions.
///
/// Emission: tan φ_e = ν / (cosh ρ (t+σ) + sinh ρ √((t+σ)² + ν²)) along the
/// frame (vx + (x·vx)x, x∧vx). Return: tan φ_r = ν/(t+σ) along the frame
/// built from v⁻¹x.
pub fn emission_return_directions(
    t_e: f64,
    obs: &ObserverWorldline,
    h: &PoincareElement,
    params: &RelativeParams,
) -> Result<Directions> {
    let s = params.shifted_time(t_e)?;
    let x = obs.x();
    let (c, sh) = (params.rho.cosh(), params.rho.sinh());
    let phi_e = params.nu.atan2(c * s + sh * s.hypot(params.nu));
    let phi_r = params.nu.atan2(s);

    let (u, w) = in_plane_frame(&x, &h.lorentz.apply(&x));
    let (ur, wr) = in_plane_frame(&x, &h.lorentz.inverse().apply(&x));
    Ok(Directions {
        p_e: u * phi_e.cos() + w * phi_e.sin(),
        p_r: ur * phi_r.cos() + wr * phi_r.sin(),
        phi_e,
        phi_r,
    })
}

fn project_unit(y: &MinkowskiVector, onto_perp: &MinkowskiVector) -> Result<MinkowskiVector> {
    let p = *y + *onto_perp * onto_perp.dot(y);
    p.unit_spacelike()
        .ok_or_else(|| Error::Internal("lightray parallel to the worldline".into()))
}

/// Directions from the lightlike segment itself: the emission direction is
/// y projected to x^⊥; the return direction is the incoming direction −y
/// projected to (vx)^⊥ and carried back to the observer frame by v⁻¹.
///
/// v⁻¹ maps the segment to the one from h⁻¹g̃(t_e) to g̃(t_r), so
/// −v⁻¹y = h⁻¹g̃(t_e) − g̃(t_r) is formed directly.
pub fn directions_oracle(
    t_e: f64,
    obs: &ObserverWorldline,
    h: &PoincareElement,
) -> Result<(MinkowskiVector, MinkowskiVector)> {
    let (dt, y) = lightray(t_e, obs, h)?;
    let x = obs.x();
    let p_e = project_unit(&y, &x)?;
    let incoming = h.inverse().apply(&obs.at(t_e)) - obs.at(t_e + dt);
    let p_r = project_unit(&incoming, &x)?;
    Ok((p_e, p_r))
}

/// f_r/f_e = √((t+σ)² + ν²) / (cosh ρ √((t+σ)² + ν²) + sinh ρ (t+σ)).
pub fn frequency_shift(t_e: f64, params: &RelativeParams) -> Result<f64> {
    let s = params.shifted_time(t_e)?;
    let r = s.hypot(params.nu);
    Ok(r / (params.rho.cosh() * r + params.rho.sinh() * s))
}

/// Ratio of the frequencies measured by the observer at return (velocity vx)
/// and at emission (velocity x) for the photon momentum y.
pub fn frequency_shift_oracle(t_e: f64, obs: &ObserverWorldline, h: &PoincareElement) -> Result<f64> {
    let (_, y) = lightray(t_e, obs, h)?;
    let x = obs.x();
    Ok(h.lorentz.apply(&x).dot(&y) / x.dot(&y))
}

fn tag(word: &GroupWord, e: Error) -> Error {
    match e {
        Error::Geometry { reason, .. } => Error::Geometry {
            word: word.to_string(),
            reason,
        },
        other => other,
    }
}

/// All closed-form measurements for one word at one emission time.
pub fn simulate_event(
    obs: &ObserverWorldline,
    word: &GroupWord,
    h: &PoincareElement,
    t_e: f64,
) -> Result<ReturnEvent> {
    let go = || -> Result<ReturnEvent> {
        let params = relative_params(obs, h)?;
        let dt = return_time(t_e, &params)?;
        let d = emission_return_directions(t_e, obs, h, &params)?;
        let freq_ratio = frequency_shift(t_e, &params)?;
        Ok(ReturnEvent {
            word: word.clone(),
            t_e,
            dt,
            phi_e: d.phi_e,
            phi_r: d.phi_r,
            p_e: d.p_e,
            p_r: d.p_r,
            freq_ratio,
            params,
        })
    };
    go().map_err(|e| tag(word, e))
}

/// One event per non-identity element of the word ball of radius `radius`
/// and per emission time, sorted by (t_e, Δt).
pub fn simulate_scan(
    obs: &ObserverWorldline,
    h: &HolonomyMap,
    radius: usize,
    times: &[f64],
) -> Result<Vec<ReturnEvent>> {
    let ball = enumerate_ball(&h.lorentz_generators(), radius);
    let elements: Vec<(GroupWord, PoincareElement)> = ball
        .non_identity()
        .map(|e| Ok((e.word.clone(), h.evaluate_word(&e.word)?)))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, f64)> = times
        .iter()
        .flat_map(|&t| (0..elements.len()).map(move |i| (i, t)))
        .collect();
    let mut events: Vec<ReturnEvent> = jobs
        .par_iter()
        .map(|&(i, t)| simulate_event(obs, &elements[i].0, &elements[i].1, t))
        .collect::<Result<_>>()?;
    events.sort_by(|a, b| a.t_e.total_cmp(&b.t_e).then(a.dt.total_cmp(&b.dt)));
    Ok(events)
}

/// Modified distance ρ̃(t) defined by Δt = t(e^{ρ̃(t)} − 1).
pub fn modified_distance(t: f64, dt: f64) -> f64 {
    (dt / t).ln_1p()
}

/// Neville extrapolation to t → ∞ of samples f(t), treating f as a
/// polynomial in 1/t. Returns the limit and the difference between the two
/// highest-order estimates as an error indicator.
pub fn extrapolate_to_infinity(samples: &[(f64, f64)]) -> (f64, f64) {
    let h: Vec<f64> = samples.iter().map(|(t, _)| 1.0 / t).collect();
    let mut p: Vec<f64> = samples.iter().map(|(_, f)| *f).collect();
    let n = p.len();
    let mut prev = p[0];
    for k in 1..n {
        prev = p[0];
        for i in 0..n - k {
            p[i] = (h[i + k] * p[i] - h[i] * p[i + 1]) / (h[i + k] - h[i]);
        }
    }
    (p[0], (p[0] - prev).abs())
}

/// Convenience: the static frame (p̂ towards vx) used when ν = 0.
pub fn static_direction(x: &MinkowskiVector, v: &LorentzTransform) -> MinkowskiVector {
    in_plane_frame(x, &v.apply(x)).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::genus_g_surface_group;
    use crate::holonomy::{
        grafting_cocycle_single_curve, static_holonomy, GraftingDatum, GraftingOptions,
    };
    use crate::Tolerances;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn octagon_static(p: MinkowskiVector) -> HolonomyMap {
        static_holonomy(&genus_g_surface_group(2).unwrap(), p).unwrap()
    }

    fn grafted() -> HolonomyMap {
        let datum = GraftingDatum {
            curve: "a1".parse().unwrap(),
            weight: 0.5,
        };
        grafting_cocycle_single_curve(
            &genus_g_surface_group(2).unwrap(),
            &datum,
            &HyperbolicPoint::origin(),
            GraftingOptions::default(),
            &Tolerances::default(),
        )
        .unwrap()
        .map
    }

    fn random_poincare(rng: &mut ChaCha8Rng) -> PoincareElement {
        let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let v = LorentzTransform::boost(rng.random_range(0.0..1.0), [th.cos(), th.sin()]).unwrap()
            * LorentzTransform::rotation(rng.random_range(0.0..6.0));
        let a = MinkowskiVector::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        PoincareElement::new(v, a)
    }

    #[test]
    fn params_for_boost() {
        let h = PoincareElement::pure_lorentz(LorentzTransform::boost_x(0.7));
        let p = relative_params(&ObserverWorldline::standard(), &h).unwrap();
        assert!((p.rho - 0.7).abs() < 1e-12);
        assert!(p.sigma.abs() + p.tau.abs() + p.nu.abs() < 1e-14);
        assert!(relative_params(&ObserverWorldline::standard(), &PoincareElement::identity()).is_err());
    }

    #[test]
    fn recomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = grafted();
        for _ in 0..50 {
            let g = random_poincare(&mut rng);
            let obs = ObserverWorldline::standard().transform(&g);
            let hg = h.conjugate_global(&random_poincare(&mut rng));
            for w in ["a1", "b1", "a1b2", "B2A1"] {
                let e = hg.evaluate_word(&w.parse().unwrap()).unwrap();
                let p = relative_params(&obs, &e).unwrap();
                let x = obs.x();
                let lhs = p.recompose(&x, &e.lorentz.apply(&x));
                let rhs = e.apply(&obs.position) - obs.position;
                assert!(lhs.max_abs_diff(&rhs) < 1e-9 * (1.0 + rhs.amax()));
            }
        }
    }

    #[test]
    fn static_values() {
        let h = octagon_static(MinkowskiVector::ZERO);
        let events = simulate_scan(&ObserverWorldline::standard(), &h, 2, &[1.5]).unwrap();
        for e in &events {
            let p = e.params;
            assert!(p.sigma.abs() + p.tau.abs() + p.nu.abs() < 1e-12);
            let expect = 1.5 * p.rho.exp_m1();
            assert!((e.dt - expect).abs() < 1e-9 * expect);
            assert!((e.freq_ratio - (-p.rho).exp()).abs() < 1e-9 * e.freq_ratio);
            assert_eq!(e.phi_e, 0.0);
            assert_eq!(e.phi_r, 0.0);
        }
    }

    #[test]
    fn static_emission_points_at_image() {
        let h = octagon_static(MinkowskiVector::ZERO);
        let x = HyperbolicPoint::origin().vector();
        for e in simulate_scan(&ObserverWorldline::standard(), &h, 1, &[1.0]).unwrap() {
            let v = h.evaluate_word(&e.word).unwrap().lorentz;
            let q = x * e.params.rho.cosh() + e.p_e * e.params.rho.sinh();
            assert!(q.max_abs_diff(&v.apply(&x)) < 1e-9);
        }
    }

    #[test]
    fn closed_forms_match_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let base = grafted();
        for _ in 0..200 {
            let g = random_poincare(&mut rng);
            let h = base.conjugate_global(&g);
            let obs = ObserverWorldline::new(
                HyperbolicPoint::origin().transform(&g.lorentz),
                g.apply(&MinkowskiVector::new(0.2, rng.random_range(-0.3..0.3), 0.1)),
            );
            let w: GroupWord = ["a1", "b1", "A2", "b1a2", "B1B2"][rng.random_range(0..5)]
                .parse()
                .unwrap();
            let e = h.evaluate_word(&w).unwrap();
            let p = relative_params(&obs, &e).unwrap();
            let t = rng.random_range(0.5..20.0);
            if t + p.sigma <= 0.0 {
                continue;
            }
            let dt = return_time(t, &p).unwrap();
            let dto = return_time_oracle(t, &obs, &e).unwrap();
            assert!((dt - dto).abs() < 1e-9 * dto, "{dt} {dto}");
            let d = emission_return_directions(t, &obs, &e, &p).unwrap();
            let (pe, pr) = directions_oracle(t, &obs, &e).unwrap();
            assert!(d.p_e.max_abs_diff(&pe) < 1e-8, "{w}: {:?} {:?}", d.p_e, pe);
            assert!(d.p_r.max_abs_diff(&pr) < 1e-8, "{w}: {:?} {:?}", d.p_r, pr);
            let f = frequency_shift(t, &p).unwrap();
            let fo = frequency_shift_oracle(t, &obs, &e).unwrap();
            assert!((f - fo).abs() < 1e-9 * fo);
            assert!(f < 1.0);
        }
    }

    #[test]
    fn gauge_and_conjugation_invariance() {
        let h = grafted();
        let obs = ObserverWorldline::standard();
        let g = PoincareElement::new(
            LorentzTransform::boost(0.4, [0.6, -0.8]).unwrap(),
            MinkowskiVector::new(0.3, 0.2, -0.5),
        );
        let w: GroupWord = "b1a2".parse().unwrap();
        let e0 = simulate_event(&obs, &w, &h.evaluate_word(&w).unwrap(), 3.0).unwrap();

        let shifted = obs.time_shift(1.25);
        let e1 = simulate_event(&shifted, &w, &h.evaluate_word(&w).unwrap(), 3.0 - 1.25).unwrap();
        let hc = h.conjugate_global(&g);
        let e2 =
            simulate_event(&obs.transform(&g), &w, &hc.evaluate_word(&w).unwrap(), 3.0).unwrap();
        for e in [&e1, &e2] {
            assert!((e.dt - e0.dt).abs() < 1e-9);
            assert!((e.phi_e - e0.phi_e).abs() < 1e-9);
            assert!((e.phi_r - e0.phi_r).abs() < 1e-9);
            assert!((e.freq_ratio - e0.freq_ratio).abs() < 1e-9);
        }
        assert!(e2.params.max_abs_diff(&e0.params) < 1e-9);
        assert!(e2.p_e.max_abs_diff(&g.lorentz.apply(&e0.p_e)) < 1e-9);
    }

    #[test]
    fn scan_cardinality_and_pairs() {
        let h = octagon_static(MinkowskiVector::ZERO);
        let events = simulate_scan(&ObserverWorldline::standard(), &h, 1, &[2.0]).unwrap();
        assert_eq!(events.len(), 8);
        for pair in events.chunks(2) {
            assert!((pair[0].dt - pair[1].dt).abs() < 1e-9);
            assert_eq!(pair[0].word.inverse(), pair[1].word);
        }
        let two = simulate_scan(&ObserverWorldline::standard(), &h, 2, &[1.0, 2.0]).unwrap();
        let ball = enumerate_ball(&h.lorentz_generators(), 2);
        assert_eq!(two.len(), 2 * (ball.len() - 1));
        assert!(two.windows(2).all(|w| (w[0].t_e, w[0].dt) <= (w[1].t_e, w[1].dt)));
    }

    #[test]
    fn validity_window_is_enforced() {
        let h = octagon_static(MinkowskiVector::ZERO);
        let err = simulate_scan(&ObserverWorldline::standard(), &h, 1, &[-1.0]).unwrap_err();
        assert!(matches!(err, Error::Geometry { ref word, .. } if !word.is_empty()));
    }

    #[test]
    fn neville_recovers_polynomial_limit() {
        let samples: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&t: &f64| (t, 2.5 + 3.0 / t - 7.0 / (t * t)))
            .collect();
        let (lim, err) = extrapolate_to_infinity(&samples);
        assert!((lim - 2.5).abs() < 1e-12);
        assert!(err < 1e-10);
    }
}
