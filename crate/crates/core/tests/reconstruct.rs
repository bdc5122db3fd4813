use lightray_core::group::{enumerate_ball, genus_g_surface_group, GroupWord};
use lightray_core::holonomy::{
    grafting_cocycle_single_curve, static_holonomy, GraftingDatum, GraftingOptions, HolonomyMap,
};
use lightray_core::lightpath::{simulate_scan, ObserverWorldline};
use lightray_core::minkowski::{HyperbolicPoint, LorentzTransform, MinkowskiVector, PoincareElement};
use lightray_core::reconstruct::{
    dirichlet::dirichlet_domain_with, hausdorff_distance, invariant_compare, reconstruct,
    Measurement, Mode,
};
use lightray_core::{Error, Tolerances};

fn octagon() -> Vec<LorentzTransform> {
    genus_g_surface_group(2).unwrap()
}

fn grafted() -> HolonomyMap {
    let datum = GraftingDatum {
        curve: "a1".parse().unwrap(),
        weight: 0.5,
    };
    grafting_cocycle_single_curve(
        &octagon(),
        &datum,
        &HyperbolicPoint::origin(),
        GraftingOptions::default(),
        &Tolerances::default(),
    )
    .unwrap()
    .map
}

fn measure(h: &HolonomyMap, obs: &ObserverWorldline, radius: usize, times: &[f64]) -> Vec<Measurement> {
    simulate_scan(obs, h, radius, times)
        .unwrap()
        .iter()
        .map(Measurement::from)
        .collect()
}

fn short_words(h: &HolonomyMap) -> Vec<GroupWord> {
    enumerate_ball(&h.lorentz_generators(), 2)
        .elements
        .into_iter()
        .map(|e| e.word)
        .collect()
}

#[test]
fn static_octagon_round_trip() {
    let h = static_holonomy(&octagon(), MinkowskiVector::ZERO).unwrap();
    let obs = ObserverWorldline::standard();
    let data = measure(&h, &obs, 3, &[1.0]);
    let rec = reconstruct(&data, Mode::Static, &Tolerances::default()).unwrap();
    assert_eq!(rec.domain.side_count(), 8);
    assert_eq!(rec.pairings.len(), 8);
    for p in &rec.pairings {
        assert!(p.length_mismatch < 1e-8);
        assert!(p.endpoint_mismatch < 1e-8, "{}", p.endpoint_mismatch);
    }
    assert!(rec.domain.certified);
    assert!(rec.domain.membership_defect() <= 1e-9);
    let hr = &rec.holonomy;
    assert!(hr.validation.lorentz_residual < 1e-6);
    assert!(hr.map.translations().iter().all(|a| a.amax() < 1e-8));
    let dev = invariant_compare(&h, &obs, &hr.map, &hr.observer, &short_words(&h)).unwrap();
    assert!(dev < 1e-9, "{dev}");
}

#[test]
fn static_offset_tip_and_moving_observer() {
    let p = MinkowskiVector::new(-0.3, 0.2, 0.1);
    let h = static_holonomy(&octagon(), p).unwrap();
    let g = PoincareElement::new(
        LorentzTransform::boost(0.3, [0.6, 0.8]).unwrap() * LorentzTransform::rotation(0.4),
        MinkowskiVector::new(0.1, -0.2, 0.3),
    );
    let hc = h.conjugate_global(&g);
    let obs = ObserverWorldline::standard().transform(&g);
    let data = measure(&hc, &obs, 3, &[2.0]);
    let rec = reconstruct(&data, Mode::Static, &Tolerances::default()).unwrap();
    let hr = &rec.holonomy;
    let dev = invariant_compare(&hc, &obs, &hr.map, &hr.observer, &short_words(&h)).unwrap();
    assert!(dev < 1e-6, "{dev}");
}

#[test]
fn grafted_evolving_round_trip() {
    let h = grafted();
    let obs = ObserverWorldline::standard();
    let data = measure(&h, &obs, 3, &[1.0, 2.0, 4.0, 8.0]);
    let rec = reconstruct(&data, Mode::Evolving, &Tolerances::default()).unwrap();
    let hr = &rec.holonomy;
    let dev = invariant_compare(&h, &obs, &hr.map, &hr.observer, &short_words(&h)).unwrap();
    assert!(dev < 1e-5, "{dev}");
    for (w, p) in &hr.generator_params {
        let fwd = lightray_core::lightpath::relative_params(&obs, &h.evaluate_word(w).unwrap()).unwrap();
        assert!(fwd.max_abs_diff(p) < 1e-6, "{w}");
    }
    for f in &rec.fits {
        if f.sigma_identifiable {
            let fwd =
                lightray_core::lightpath::relative_params(&obs, &h.evaluate_word(&f.word).unwrap())
                    .unwrap();
            assert!(fwd.max_abs_diff(&f.params) < 1e-6, "{}", f.word);
        }
    }
}

#[test]
fn evolving_needs_two_times() {
    let h = grafted();
    let data = measure(&h, &ObserverWorldline::standard(), 2, &[3.0]);
    let err = reconstruct(&data, Mode::Evolving, &Tolerances::default()).unwrap_err();
    assert!(matches!(err, Error::InsufficientData(_)), "{err}");
}

#[test]
fn single_bisector_is_unbounded() {
    let x = HyperbolicPoint::origin();
    let q = HyperbolicPoint::from_polar(1.0, 0.3);
    let err = dirichlet_domain_with(&x, &[("a1".parse().unwrap(), q)], 1e-9, false).unwrap_err();
    assert!(matches!(err, Error::InsufficientData(_)), "{err}");
}

#[test]
fn far_images_leave_polygon_unchanged() {
    let x = HyperbolicPoint::origin();
    let ball = enumerate_ball(&octagon(), 4);
    let images: Vec<(GroupWord, HyperbolicPoint)> = ball
        .non_identity()
        .map(|e| (e.word.clone(), x.transform(&e.matrix)))
        .collect();
    let stopped = dirichlet_domain_with(&x, &images, 1e-9, false).unwrap();
    let all = dirichlet_domain_with(&x, &images, 1e-9, true).unwrap();
    assert!(stopped.certified);
    assert_eq!(stopped.vertices, all.vertices);
    assert_eq!(stopped.sides, all.sides);
}

#[test]
fn deformed_polygons_converge() {
    let h = grafted();
    let obs = ObserverWorldline::standard();
    let times = [10.0, 20.0, 40.0, 80.0, 160.0];
    let data = measure(&h, &obs, 3, &times);
    let rec = reconstruct(&data, Mode::Evolving, &Tolerances::default()).unwrap();
    let mut d = Vec::new();
    for &t in &times {
        let p = lightray_core::reconstruct::deformed_polygon(&data, t, 1e-9).unwrap();
        d.push(hausdorff_distance(&p, &rec.domain));
    }
    assert!(d.windows(2).all(|w| w[1] < w[0]));
}
