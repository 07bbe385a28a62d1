//! Accuracy runs of the histogram mechanism against a straight-line zero-noise
//! reference.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::{Hss, HssConfig, NoiseSource};
use crate::message::Message;
use crate::protocol::Mechanism;
use crate::rng::{stream_rng, PARTY_MECHANISM};

/// What the histogram mechanism outputs when every noise draw is 0: the query
/// on the true histogram as of the last flush, where a flush happens as soon
/// as the query exceeds the running threshold.
pub fn zero_noise_reference(cfg: &HssConfig, xs: &[Vec<i64>]) -> Result<Vec<i64>> {
    cfg.validate()?;
    let mut hist = vec![0i64; cfg.d];
    let mut out = cfg.query.eval(&hist);
    let mut j = 1u64;
    let mut thresh = cfg.gamma(1, 1);
    let mut outs = Vec::with_capacity(xs.len());
    for (i, x) in xs.iter().enumerate() {
        let t = i as u64 + 1;
        if t > cfg.horizon || x.len() != cfg.d || x.iter().any(|v| *v != 0 && *v != 1) {
            return Err(Error::InvalidParameter(format!("step {t}: input {x:?} rejected")));
        }
        for (h, v) in hist.iter_mut().zip(x) {
            *h += v;
        }
        let q = cfg.query.eval(&hist);
        if q as f64 > thresh {
            out = q;
            // The Laplace check sees q exactly, which already beats thresh − ξ.
            thresh += cfg.gamma(t, j);
            j += 1;
            thresh += cfg.gamma(t, j) - cfg.gamma(t, j - 1);
        }
        thresh += cfg.gamma(t + 1, j) - cfg.gamma(t, j);
        outs.push(out);
    }
    Ok(outs)
}

/// Runs the mechanism on `xs`, one RNG stream per step.
pub fn run_hss(cfg: &HssConfig, xs: &[Vec<i64>], noise: NoiseSource, seed: u64) -> Result<Vec<i64>> {
    let mut m = Hss::new(cfg.clone(), noise)?;
    xs.iter()
        .enumerate()
        .map(|(t, x)| match m.step(&Message::Vector(x.clone()), &mut stream_rng(seed, t as u64, PARTY_MECHANISM))? {
            Message::Int(v) => Ok(v),
            other => Err(Error::Protocol(format!("step {}: unexpected output {other}", t + 1))),
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct HistogramStep {
    pub t: usize,
    pub exact: i64,
    pub reference: i64,
    pub output: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HistogramReport {
    pub steps: Vec<HistogramStep>,
    pub max_error_vs_reference: i64,
    pub max_error_vs_exact: i64,
    pub monotone: bool,
}

pub fn histogram_report(cfg: &HssConfig, xs: &[Vec<i64>], noise: NoiseSource, seed: u64) -> Result<HistogramReport> {
    let reference = zero_noise_reference(cfg, xs)?;
    let outputs = run_hss(cfg, xs, noise, seed)?;
    let mut hist = vec![0i64; cfg.d];
    let mut steps = Vec::with_capacity(xs.len());
    for (i, x) in xs.iter().enumerate() {
        for (h, v) in hist.iter_mut().zip(x) {
            *h += v;
        }
        steps.push(HistogramStep { t: i + 1, exact: cfg.query.eval(&hist), reference: reference[i], output: outputs[i] });
    }
    Ok(HistogramReport {
        max_error_vs_reference: steps.iter().map(|s| (s.output - s.reference).abs()).max().unwrap_or(0),
        max_error_vs_exact: steps.iter().map(|s| (s.output - s.exact).abs()).max().unwrap_or(0),
        monotone: outputs.windows(2).all(|w| w[0] <= w[1]),
        steps,
    })
}
