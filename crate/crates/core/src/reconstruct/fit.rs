//! Per-word recovery of (ρ, σ, τ, ν) from measurements at several emission times.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::GroupWord;
use crate::lightpath::RelativeParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t_e: f64,
    pub dt: f64,
    pub phi_r: f64,
    pub freq_ratio: f64,
}

/// Measurements of one word over increasing emission times.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSeries {
    pub word: GroupWord,
    pub samples: Vec<Sample>,
}

impl MeasurementSeries {
    pub fn new(word: GroupWord, mut samples: Vec<Sample>) -> Result<Self> {
        samples.sort_by(|a, b| a.t_e.total_cmp(&b.t_e));
        if samples.windows(2).any(|w| w[0].t_e == w[1].t_e) {
            return Err(Error::Validation(format!(
                "word {word}: repeated emission time"
            )));
        }
        if let Some(s) = samples.iter().find(|s| !(s.dt > 0.0)) {
            return Err(Error::Validation(format!(
                "word {word}: non-positive return time {} at t = {}",
                s.dt, s.t_e
            )));
        }
        Ok(Self { word, samples })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WordFit {
    pub word: GroupWord,
    pub params: RelativeParams,
    /// ν vanished: only σ(e^ρ − 1) − τ is determined; σ is reported as 0.
    pub sigma_identifiable: bool,
    /// σ(e^ρ − 1) − τ, the 1/t coefficient of e^{ρ̃(t)} = 1 + Δt/t.
    pub offset: f64,
    /// Largest relative deviation of the closed forms from the samples.
    pub residual: f64,
}

/// X = e^ρ > 1 from (1+u)X² − 2FX + (1−u) = 0 with F = f_e/f_r.
pub fn rho_from_frequency(freq_ratio: f64, u: f64) -> Result<f64> {
    let f = 1.0 / freq_ratio;
    let disc = f * f - (1.0 - u * u);
    if disc < 0.0 || !(freq_ratio < 1.0) {
        return Err(Error::Validation(format!(
            "frequency ratio {freq_ratio} is not a redshift"
        )));
    }
    let x = (f + disc.sqrt()) / (1.0 + u);
    Ok(x.ln())
}

/// Fits (ρ, σ, τ, ν) exactly (two times) or by least squares (more).
///
/// tan φ_r (t + σ) = ν is linear in (ν, σ); ρ follows from the frequency
/// ratio, τ from the return time. If φ_r vanishes at every time, ν = 0 and σ
/// cannot be separated from τ.
pub fn fit_evolving_params(series: &MeasurementSeries, eps: f64, fit_tol: f64) -> Result<WordFit> {
    let samples = &series.samples;
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "word {} has {} emission time(s); at least 2 are needed",
            series.word,
            samples.len()
        )));
    }
    let tans: Vec<f64> = samples.iter().map(|s| s.phi_r.tan()).collect();
    let (nu, sigma, sigma_identifiable) = if tans.iter().all(|t| t.abs() <= eps) {
        (0.0, 0.0, false)
    } else {
        let n = samples.len();
        let a = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { -tans[i] });
        let b = DVector::from_iterator(n, samples.iter().zip(&tans).map(|(s, t)| t * s.t_e));
        let sol = a
            .svd(true, true)
            .solve(&b, 1e-14)
            .map_err(|e| Error::Internal(e.to_string()))?;
        (sol[0], sol[1], true)
    };

    let first = samples[0];
    let s0 = first.t_e + sigma;
    if !(s0 > 0.0) {
        return Err(Error::FitFailure {
            word: series.word.to_string(),
            residual: s0,
        });
    }
    let r0 = s0.hypot(nu);
    let rho = rho_from_frequency(first.freq_ratio, s0 / r0)?;
    let (c, sh) = (rho.cosh(), rho.sinh());
    let tau = s0 * (c - 1.0) + sh * r0 - first.dt;
    let params = RelativeParams { rho, sigma, tau, nu };

    let mut residual: f64 = 0.0;
    for s in samples {
        let dt = crate::lightpath::return_time(s.t_e, &params);
        let f = crate::lightpath::frequency_shift(s.t_e, &params);
        let (Ok(dt), Ok(f)) = (dt, f) else {
            residual = f64::INFINITY;
            break;
        };
        let phi = nu.atan2(s.t_e + sigma);
        residual = residual
            .max((dt - s.dt).abs() / s.dt)
            .max((f - s.freq_ratio).abs() / s.freq_ratio)
            .max((phi - s.phi_r).abs());
    }
    if !(residual <= fit_tol) {
        return Err(Error::FitFailure {
            word: series.word.to_string(),
            residual,
        });
    }
    Ok(WordFit {
        word: series.word.clone(),
        params,
        sigma_identifiable,
        offset: sigma * rho.exp_m1() - tau,
        residual,
    })
}
