use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lightray_core::group::genus_g_surface_group;
use lightray_core::holonomy::{grafting_cocycle_single_curve, static_holonomy, GraftingDatum, GraftingOptions};
use lightray_core::io::{GraftingSpec, Scenario};
use lightray_core::lightpath::ObserverWorldline;
use lightray_core::minkowski::{HyperbolicPoint, LorentzTransform, MinkowskiVector, PoincareElement};
use lightray_core::{Result, Tolerances};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Kind {
    /// Genus-2 octagon group, tip p = 0, observer at rest at the origin, L = 1.
    Static,
    /// Static spacetime with tip p ≠ 0 measured by a moving observer, L = 3.
    Offset,
    /// Grafting along a1 with weight 0.5, moving observer, four emission times, L = 3.
    Grafted,
    /// Grafted spacetime in a seeded random frame with a seeded random observer.
    Random,
}

fn moving_observer() -> ObserverWorldline {
    ObserverWorldline::new(
        HyperbolicPoint::from_polar(0.2, 0.7),
        MinkowskiVector::new(0.5, 0.1, -0.2),
    )
}

pub fn build(kind: Kind, seed: u64) -> Result<Scenario> {
    let octagon = genus_g_surface_group(2)?;
    let tol = Tolerances::default();
    let graft = |weight: f64| {
        let datum = GraftingDatum {
            curve: "a1".parse()?,
            weight,
        };
        grafting_cocycle_single_curve(&octagon, &datum, &HyperbolicPoint::origin(), GraftingOptions::default(), &tol)
    };
    Ok(match kind {
        Kind::Static => {
            let h = static_holonomy(&octagon, MinkowskiVector::ZERO)?;
            Scenario::new(&h, &ObserverWorldline::standard(), 1, vec![1.0], tol, None)
        }
        Kind::Offset => {
            let h = static_holonomy(&octagon, MinkowskiVector::new(-0.3, 0.2, 0.1))?;
            Scenario::new(&h, &moving_observer(), 3, vec![2.0], tol, None)
        }
        Kind::Grafted => {
            let g = graft(0.5)?;
            let spec = GraftingSpec {
                gamma: g.datum.curve.to_string(),
                weight: g.datum.weight,
                search_radius: g.radius,
            };
            Scenario::new(&g.map, &moving_observer(), 3, vec![1.0, 2.0, 4.0, 8.0], tol, Some(spec))
        }
        Kind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = graft(rng.random_range(0.2..0.8))?.map;
            let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let frame = PoincareElement::new(
                LorentzTransform::boost(rng.random_range(0.0..0.5), [th.cos(), th.sin()])?
                    * LorentzTransform::rotation(rng.random_range(-3.2..3.2)),
                MinkowskiVector::new(
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                ),
            );
            let obs = ObserverWorldline::new(
                HyperbolicPoint::from_polar(rng.random_range(0.0..0.5), rng.random_range(0.0..std::f64::consts::TAU)),
                MinkowskiVector::new(rng.random_range(0.0..0.5), 0.0, 0.0),
            );
            Scenario::new(&h.conjugate_global(&frame), &obs.transform(&frame), 3, vec![2.0, 4.0, 8.0], tol, None)
        }
    })
}
