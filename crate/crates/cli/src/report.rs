use serde_json::{json, Value};

use lightray_core::group::GroupWord;
use lightray_core::lightpath::RelativeParams;
use lightray_core::minkowski::HyperbolicPoint;
use lightray_core::reconstruct::Reconstruction;
use lightray_core::Tolerances;

/// Tolerance on pairing mismatches and the translation least-squares
/// residual; the recovered relator is checked by the holonomy validation.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

pub struct ResidualCheck {
    pub pairing_mismatch: f64,
    pub translation_residual: f64,
    pub relator_residual: f64,
    pub relator_threshold: f64,
    pub certified: bool,
    pub passed: bool,
}

impl ResidualCheck {
    pub fn summary(&self) -> Value {
        json!({
            "pairing_mismatch": self.pairing_mismatch,
            "translation_residual": self.translation_residual,
            "relator_residual": self.relator_residual,
            "relator_threshold": self.relator_threshold,
            "tolerance": RESIDUAL_TOLERANCE,
            "polygon_certified": self.certified,
            "passed": self.passed,
        })
    }

    pub fn failure_message(&self) -> String {
        let mut parts = Vec::new();
        if !(self.pairing_mismatch < RESIDUAL_TOLERANCE) {
            parts.push(format!("side pairing mismatch {:e}", self.pairing_mismatch));
        }
        if !(self.translation_residual < RESIDUAL_TOLERANCE) {
            parts.push(format!("translation residual {:e}", self.translation_residual));
        }
        if !(self.relator_residual < self.relator_threshold) {
            parts.push(format!("relator residual {:e}", self.relator_residual));
        }
        let mut msg = format!("residuals exceed tolerance: {}", parts.join(", "));
        if !self.certified {
            msg += " (the polygon is not certified by the 2r criterion; measure a larger word ball)";
        }
        msg
    }
}

fn point(p: &HyperbolicPoint) -> [f64; 3] {
    p.vector().to_array()
}

fn params(p: &RelativeParams) -> Value {
    json!({"rho": p.rho, "sigma": p.sigma, "tau": p.tau, "nu": p.nu})
}

pub fn reconstruction(rec: &Reconstruction, events: usize, tol: &Tolerances) -> (Value, ResidualCheck) {
    let hr = &rec.holonomy;
    let presentation = hr.map.presentation();
    let d = &rec.domain;

    let pairing_mismatch = rec
        .pairings
        .iter()
        .map(|p| p.length_mismatch.max(p.endpoint_mismatch))
        .fold(0.0, f64::max);
    let relator_residual = hr.validation.lorentz_residual.max(hr.validation.poincare_residual);
    let check = ResidualCheck {
        pairing_mismatch,
        translation_residual: hr.translation_residual,
        relator_residual,
        relator_threshold: hr.validation.threshold(),
        certified: d.certified,
        passed: pairing_mismatch < RESIDUAL_TOLERANCE
            && hr.translation_residual < RESIDUAL_TOLERANCE
            && hr.validation.passed(),
    };

    let generator_pairings: Vec<Value> = (0..presentation.generator_count())
        .filter_map(|k| {
            let g = GroupWord::generator(k);
            let gi = g.inverse();
            let side = rec.pairings.iter().find(|p| p.side == g || p.side == gi)?;
            Some(json!({
                "generator": presentation.label(k),
                "sides": [side.side.to_string(), side.partner.to_string()],
            }))
        })
        .collect();

    let report = json!({
        "mode": rec.mode,
        "events": events,
        "emission_times": rec.emission_times,
        "tolerance": tol,
        "gauge": rec.gauge.rows(),
        "domain": {
            "center": point(&d.center),
            "circumradius": d.circumradius,
            "certified": d.certified,
            "bisectors": d.retained.len(),
            "vertices": d.vertices.iter().map(point).collect::<Vec<_>>(),
            "sides": d.sides.iter().map(|s| json!({
                "word": s.word.to_string(),
                "start": s.start,
                "end": s.end,
                "length": s.length,
            })).collect::<Vec<_>>(),
        },
        "pairings": rec.pairings.iter().map(|p| json!({
            "side": p.side.to_string(),
            "partner": p.partner.to_string(),
            "transform": p.transform.rows(),
            "length_mismatch": p.length_mismatch,
            "endpoint_mismatch": p.endpoint_mismatch,
        })).collect::<Vec<_>>(),
        "generator_pairings": generator_pairings,
        "fits": rec.fits.iter().map(|f| json!({
            "word": f.word.to_string(),
            "params": params(&f.params),
            "sigma_identifiable": f.sigma_identifiable,
            "offset": f.offset,
            "residual": f.residual,
        })).collect::<Vec<_>>(),
        "image_spread": rec.image_spread,
        "holonomy": {
            "genus": presentation.genus(),
            "generators": hr.map.generators().iter().enumerate().map(|(k, g)| json!({
                "label": presentation.label(k),
                "matrix": g.lorentz.rows(),
                "translation": g.translation.to_array(),
            })).collect::<Vec<_>>(),
            "generator_params": hr.generator_params.iter().map(|(w, p)| json!({
                "word": w.to_string(),
                "params": params(p),
            })).collect::<Vec<_>>(),
            "validation": {
                "lorentz_residual": hr.validation.lorentz_residual,
                "poincare_residual": hr.validation.poincare_residual,
                "threshold": hr.validation.threshold(),
                "elements_checked": hr.validation.elements_checked,
            },
        },
        "residuals": check.summary(),
    });
    (report, check)
}

pub fn to_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report serialises");
    s.push('\n');
    s.into_bytes()
}
