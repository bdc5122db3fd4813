//! Scenario files (TOML) and event tables (CSV).

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupWord, SurfaceGroupPresentation};
use crate::holonomy::{
    grafting_cocycle_single_curve, GraftingDatum, GraftingOptions, HolonomyMap,
};
use crate::lightpath::{ObserverWorldline, ReturnEvent};
use crate::minkowski::{HyperbolicPoint, LorentzTransform, MinkowskiVector, PoincareElement};
use crate::reconstruct::Measurement;
use crate::Tolerances;

pub const SCHEMA_VERSION: u32 = 1;

pub const EVENT_COLUMNS: [&str; 12] = [
    "word", "t_e", "dt", "phi_e", "phi_r", "pe0", "pe1", "pe2", "pr0", "pr1", "pr2", "freq_ratio",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSpec {
    pub velocity: [f64; 3],
    pub position: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub label: String,
    /// Row-major Lorentz matrix.
    pub matrix: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraftingSpec {
    pub gamma: String,
    pub weight: f64,
    pub search_radius: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub genus: usize,
    pub ball_radius: usize,
    pub emission_times: Vec<f64>,
    #[serde(default)]
    pub tolerance: Tolerances,
    pub observer: ObserverSpec,
    #[serde(rename = "generator")]
    pub generators: Vec<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grafting: Option<GraftingSpec>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn vec3(v: &[f64; 3]) -> String {
    format!("[{}, {}, {}]", num(v[0]), num(v[1]), num(v[2]))
}

impl Scenario {
    pub fn new(
        h: &HolonomyMap,
        observer: &ObserverWorldline,
        ball_radius: usize,
        emission_times: Vec<f64>,
        tolerance: Tolerances,
        grafting: Option<GraftingSpec>,
    ) -> Self {
        let p = h.presentation();
        Self {
            schema_version: SCHEMA_VERSION,
            genus: h.genus(),
            ball_radius,
            emission_times,
            tolerance,
            observer: ObserverSpec {
                velocity: observer.x().to_array(),
                position: observer.position.to_array(),
            },
            generators: h
                .generators()
                .iter()
                .enumerate()
                .map(|(k, g)| GeneratorSpec {
                    label: p.label(k),
                    matrix: g.lorentz.rows(),
                    translation: g.translation.to_array(),
                })
                .collect(),
            grafting,
        }
    }

    /// Parses without validating the holonomy.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if sc.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                sc.schema_version
            )));
        }
        Ok(sc)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_toml_str(&s).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Renders with every number at 17 significant digits.
    pub fn to_toml_string(&self) -> String {
        let mut s = String::new();
        let t = &self.tolerance;
        let times: Vec<String> = self.emission_times.iter().map(|&x| num(x)).collect();
        let _ = writeln!(s, "schema_version = {}", self.schema_version);
        let _ = writeln!(s, "genus = {}", self.genus);
        let _ = writeln!(s, "ball_radius = {}", self.ball_radius);
        let _ = writeln!(s, "emission_times = [{}]", times.join(", "));
        let _ = writeln!(s, "\n[tolerance]");
        let _ = writeln!(s, "eps = {}", num(t.eps));
        let _ = writeln!(s, "relator = {}", num(t.relator));
        let _ = writeln!(s, "dedup = {}", num(t.dedup));
        let _ = writeln!(s, "graft = {}", num(t.graft));
        let _ = writeln!(s, "fit = {}", num(t.fit));
        let _ = writeln!(s, "\n[observer]");
        let _ = writeln!(s, "velocity = {}", vec3(&self.observer.velocity));
        let _ = writeln!(s, "position = {}", vec3(&self.observer.position));
        if let Some(g) = &self.grafting {
            let _ = writeln!(s, "\n[grafting]");
            let _ = writeln!(s, "gamma = \"{}\"", g.gamma);
            let _ = writeln!(s, "weight = {}", num(g.weight));
            let _ = writeln!(s, "search_radius = {}", g.search_radius);
        }
        for g in &self.generators {
            let _ = writeln!(s, "\n[[generator]]");
            let _ = writeln!(s, "label = \"{}\"", g.label);
            let _ = writeln!(s, "matrix = [");
            for row in &g.matrix {
                let _ = writeln!(s, "    {},", vec3(row));
            }
            let _ = writeln!(s, "]");
            let _ = writeln!(s, "translation = {}", vec3(&g.translation));
        }
        s
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    pub fn observer(&self) -> Result<ObserverWorldline> {
        let x = HyperbolicPoint::new(MinkowskiVector::from(self.observer.velocity), self.tolerance.eps)?;
        Ok(ObserverWorldline::new(x, MinkowskiVector::from(self.observer.position)))
    }

    /// Builds the holonomy map and validates it. A grafting block must
    /// reproduce the listed translations.
    pub fn holonomy(&self) -> Result<HolonomyMap> {
        let presentation = SurfaceGroupPresentation::new(self.genus)?;
        if self.generators.len() != presentation.generator_count() {
            return Err(Error::GeneratorCount {
                expected: presentation.generator_count(),
                got: self.generators.len(),
            });
        }
        let mut gens = Vec::with_capacity(self.generators.len());
        for (k, g) in self.generators.iter().enumerate() {
            if g.label != presentation.label(k) {
                return Err(Error::Validation(format!(
                    "generator {} is labelled `{}`, expected `{}`",
                    k + 1,
                    g.label,
                    presentation.label(k)
                )));
            }
            let v = LorentzTransform::from_rows(g.matrix, self.tolerance.eps.max(1e-12))
                .map_err(|e| Error::Validation(format!("generator {}: {e}", g.label)))?;
            gens.push(PoincareElement::new(v, MinkowskiVector::from(g.translation)));
        }
        let h = HolonomyMap::new(presentation, gens)?;
        h.validate(&self.tolerance)?;
        if let Some(spec) = &self.grafting {
            let datum = GraftingDatum {
                curve: spec.gamma.parse()?,
                weight: spec.weight,
            };
            let options = GraftingOptions {
                search_radius: spec.search_radius,
                ..GraftingOptions::default()
            };
            let grafted = grafting_cocycle_single_curve(
                &h.lorentz_generators(),
                &datum,
                &HyperbolicPoint::origin(),
                options,
                &self.tolerance,
            )?;
            let mismatch = grafted
                .map
                .translations()
                .iter()
                .zip(h.translations())
                .map(|(a, b)| a.max_abs_diff(&b))
                .fold(0.0, f64::max);
            if mismatch > 1e-9 {
                return Err(Error::Validation(format!(
                    "translations differ from the grafting block by {mismatch:e}"
                )));
            }
        }
        Ok(h)
    }

    pub fn validate_times(&self) -> Result<()> {
        if self.emission_times.is_empty() {
            return Err(Error::Validation("no emission times".into()));
        }
        if self.emission_times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Validation("emission times must be finite".into()));
        }
        Ok(())
    }
}

/// Writes events with 17 significant digits in the fixed column order.
pub fn write_events<W: Write>(w: W, events: &[ReturnEvent]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wr.write_record(EVENT_COLUMNS).map_err(csv_err)?;
    for e in events {
        let mut rec = vec![e.word.to_string()];
        rec.extend(
            [
                e.t_e, e.dt, e.phi_e, e.phi_r, e.p_e[0], e.p_e[1], e.p_e[2], e.p_r[0], e.p_r[1],
                e.p_r[2], e.freq_ratio,
            ]
            .iter()
            .map(|&x| num(x)),
        );
        wr.write_record(&rec).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_events<R: Read>(r: R) -> Result<Vec<Measurement>> {
    let mut rd = csv::ReaderBuilder::new().flexible(true).from_reader(r);
    let headers = rd
        .headers()
        .map_err(|e| Error::Parse(format!("line 1: {e}")))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != EVENT_COLUMNS {
        return Err(Error::Parse(format!(
            "line 1: expected columns {}",
            EVENT_COLUMNS.join(",")
        )));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != EVENT_COLUMNS.len() {
            return Err(Error::Parse(format!(
                "line {line}: expected {} fields, found {}",
                EVENT_COLUMNS.len(),
                rec.len()
            )));
        }
        let word: GroupWord = rec[0]
            .parse()
            .map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        let mut v = [0.0; 11];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = rec[i + 1].trim().parse().map_err(|_| {
                Error::Parse(format!(
                    "line {line}: column {}: invalid number `{}`",
                    EVENT_COLUMNS[i + 1],
                    &rec[i + 1]
                ))
            })?;
        }
        out.push(Measurement {
            word,
            t_e: v[0],
            dt: v[1],
            phi_e: v[2],
            phi_r: v[3],
            p_e: MinkowskiVector::new(v[4], v[5], v[6]),
            p_r: MinkowskiVector::new(v[7], v[8], v[9]),
            freq_ratio: v[10],
        });
    }
    Ok(out)
}
