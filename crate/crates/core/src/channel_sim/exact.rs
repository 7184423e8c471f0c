//! Exact outcome probabilities of the simulated channel under
//! [`Delivery::Pulse`](super::Delivery::Pulse).
//!
//! With w = η·P(pulse non-empty), q = 1 − w, per-detector dark probability
//! p_d = 1 − e^{−γτ}, s = e^{−γτ(D−1)} and c₂ = Σ p_j² over the
//! wrong-basis landing distribution:
//!
//! ```text
//! DBS   p_corr = w²s²/4      p_be = c₂·w²s²/4      p_ee = s²/2·(2wq·p_d + D·q²·p_d²)
//! IPBE  p_corr = w·s/2       p_be = 0              p_ee = q·D·p_d·s/2
//! ```
//!
//! These are the Monte Carlo ground truth; the closed forms in
//! [`analytics`](crate::analytics) agree with them for p_corr and differ in
//! the dark-count terms.

use super::{ChannelModel, Delocalization, PhotonSource};
use crate::analytics::ErrorBudget;
use crate::params::ChannelParams;

fn loaded_probability(params: &ChannelParams, model: &ChannelModel) -> f64 {
    match model.source {
        PhotonSource::Poisson => -(-params.mean_photon_number()).exp_m1(),
        PhotonSource::Fixed(0) => 0.0,
        PhotonSource::Fixed(_) => 1.0,
    }
}

/// Probability that two independent wrong-basis photons hit the same detector.
pub fn same_detector_probability(params: &ChannelParams, model: &ChannelModel) -> f64 {
    match &model.delocalization {
        Delocalization::Uniform => 1.0 / params.dimension() as f64,
        Delocalization::Distribution(p) => {
            let total: f64 = p.iter().sum();
            p.iter().map(|x| (x / total).powi(2)).sum()
        }
    }
}

struct Terms {
    w: f64,
    q: f64,
    p_d: f64,
    s: f64,
    d: f64,
}

fn terms(params: &ChannelParams, model: &ChannelModel) -> Terms {
    let w = params.efficiency() * loaded_probability(params, model);
    Terms {
        w,
        q: 1.0 - w,
        p_d: params.detector_dark_probability(),
        s: (-params.dark_exponent()).exp(),
        d: params.dimension() as f64,
    }
}

pub fn exact_dbs(params: &ChannelParams, model: &ChannelModel) -> ErrorBudget {
    let Terms { w, q, p_d, s, d } = terms(params, model);
    let s2 = s * s;
    let p_corr = w * w * s2 / 4.0;
    let p_be = same_detector_probability(params, model) * p_corr;
    let p_ee = s2 / 2.0 * (2.0 * w * q * p_d + d * q * q * p_d * p_d);
    ErrorBudget::new(p_corr, p_be, p_ee)
}

pub fn exact_ipbe(params: &ChannelParams, model: &ChannelModel) -> ErrorBudget {
    let Terms { w, q, p_d, s, d } = terms(params, model);
    ErrorBudget::new(w * s / 2.0, 0.0, q * d * p_d * s / 2.0)
}
