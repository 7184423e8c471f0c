//! Closed-form probabilities for DBS and IPBE.
//!
//! Every formula is evaluated exactly as published, including the places
//! where it is an approximation of the physical channel (see
//! [`crate::channel_sim::exact`] for the exact probabilities of the
//! simulated channel). Ratios with a vanishing denominator are reported as
//! `f64::INFINITY` by the `*_components` functions; the checked variants
//! return [`Error::DegenerateDenominator`] instead.

mod combinatorics;
mod crossover;

pub use combinatorics::{basis_guess_probability, pairing_combinations, Scientific};
pub use crossover::{
    calibrate_tau, find_crossover_dimension, find_crossover_loss, preference, CalibrationTarget,
    LossCrossover, LossWindow, Preference, DEFAULT_LOSS_WINDOW,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ChannelParams;

/// Which protocol a budget or simulation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Data basis shuffling: twins, pairing announced.
    Dbs,
    /// Individual-photon bit encoding: one photon per letter, bases announced.
    Ipbe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub p_corr: f64,
    pub p_be: f64,
    pub p_ee: f64,
    /// (p_be + p_ee) / p_corr.
    pub ratio: f64,
}

impl ErrorBudget {
    pub(crate) fn new(p_corr: f64, p_be: f64, p_ee: f64) -> Self {
        ErrorBudget {
            p_corr,
            p_be,
            p_ee,
            ratio: ratio_or_inf(p_be + p_ee, p_corr),
        }
    }

    fn checked(self) -> Result<Self> {
        if self.p_corr == 0.0 {
            Err(Error::DegenerateDenominator("p_corr"))
        } else {
            Ok(self)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EveBudget {
    pub p_b: f64,
    pub p_o: f64,
    /// p_b / p_o.
    pub ratio: f64,
    pub p_mult: f64,
    pub p_phot: f64,
}

pub(crate) fn ratio_or_inf(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

fn require_two_bases(params: &ChannelParams) -> Result<()> {
    match params.basis_count() {
        2 => Ok(()),
        b => Err(Error::UnsupportedBasisCount(b)),
    }
}

/// P_γ = 1 − e^{−γτ(D−1)}, the chance of a false click on any of the
/// D−1 detectors that should stay dark.
pub fn p_gamma(params: &ChannelParams) -> f64 {
    -(-params.dark_exponent()).exp_m1()
}

/// 1 − e^{−λ}: probability that a pulse is not empty.
fn loaded(params: &ChannelParams) -> f64 {
    -(-params.mean_photon_number()).exp_m1()
}

/// DBS budget; the ratio is `inf` when p_corr vanishes.
pub fn dbs_components(params: &ChannelParams) -> Result<ErrorBudget> {
    require_two_bases(params)?;
    let eta = params.efficiency();
    let d = params.dimension() as f64;
    let lam = params.mean_photon_number();
    let a2 = loaded(params).powi(2);
    let pg2 = p_gamma(params).powi(2);

    let p_corr = eta * eta / 4.0 * a2 * (-2.0 * params.dark_exponent()).exp();
    let p_be = eta * eta / (4.0 * d) * a2;
    let p_ee = (-2.0 * lam).exp() * pg2 / d + a2 * (1.0 - eta).powi(2) * pg2 / d;
    Ok(ErrorBudget::new(p_corr, p_be, p_ee))
}

/// DBS error budget: P_Corr, P_BE, P_EE and (P_BE + P_EE)/P_Corr.
pub fn dbs_budget(params: &ChannelParams) -> Result<ErrorBudget> {
    dbs_components(params)?.checked()
}

/// IPBE budget; the ratio is `inf` when p_corr vanishes.
pub fn ipbe_components(params: &ChannelParams) -> Result<ErrorBudget> {
    require_two_bases(params)?;
    let eta = params.efficiency();
    let lam = params.mean_photon_number();
    let a = loaded(params);
    let pg = p_gamma(params);

    let p_corr = eta * a * (1.0 - pg) / 2.0;
    // Wrong-basis measurements are always removed by the basis announcement.
    let p_be = 0.0;
    let p_ee = (-lam).exp() * pg + a * (1.0 - eta) * pg;
    Ok(ErrorBudget::new(p_corr, p_be, p_ee))
}

pub fn ipbe_budget(params: &ChannelParams) -> Result<ErrorBudget> {
    ipbe_components(params)?.checked()
}

/// The two published forms of the DBS P_Corr:
/// η²/4·(1−e^{−λ})²·e^{−2γτ(D−1)} and η²(1−e^{−λ})²(1−P_γ)²/4.
pub fn dbs_corr_equivalence(params: &ChannelParams) -> (f64, f64) {
    let eta = params.efficiency();
    let a2 = loaded(params).powi(2);
    let exponential = eta * eta / 4.0 * a2 * (-2.0 * params.dark_exponent()).exp();
    let via_p_gamma = eta * eta * a2 * (1.0 - p_gamma(params)).powi(2) / 4.0;
    (exponential, via_p_gamma)
}

/// Probability of two or more photons in a pulse, 1 − e^{−λ}(1+λ).
pub fn p_mult(mean_photon_number: f64) -> f64 {
    // e^{-λ}(e^λ − 1 − λ) with expm1 keeps precision at small λ.
    let lam = mean_photon_number;
    (-lam).exp() * (lam.exp_m1() - lam)
}

/// Probability of at least one photon in a pulse, 1 − e^{−λ}.
pub fn p_phot(mean_photon_number: f64) -> f64 {
    -(-mean_photon_number).exp_m1()
}

/// Bob-versus-PNS-eavesdropper budget.
///
/// DBS: P_B = (η/2·(1−P_γ))², P_O = ½(P_mult/P_phot)².
/// IPBE: P_B = η/2·(1−P_γ), P_O = P_mult/P_phot.
pub fn eve_budget(params: &ChannelParams, protocol: Protocol) -> Result<EveBudget> {
    require_two_bases(params)?;
    let lam = params.mean_photon_number();
    let p_mult = p_mult(lam);
    if p_mult == 0.0 {
        return Err(Error::DegenerateDenominator("p_mult"));
    }
    let p_phot = p_phot(lam);
    let multi_fraction = p_mult / p_phot;
    let bob_single = params.efficiency() / 2.0 * (-params.dark_exponent()).exp();
    let (p_b, p_o) = match protocol {
        Protocol::Dbs => (bob_single * bob_single, 0.5 * multi_fraction * multi_fraction),
        Protocol::Ipbe => (bob_single, multi_fraction),
    };
    Ok(EveBudget {
        p_b,
        p_o,
        ratio: ratio_or_inf(p_b, p_o),
        p_mult,
        p_phot,
    })
}
