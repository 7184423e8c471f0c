//! Channel parameters, measurement bases and qudit symbols.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gate time used when none is given: the 0.5 µs laser pulse length.
pub const DEFAULT_GATE_TIME: f64 = 5e-7;

/// Unvalidated parameter set, as read from flags or a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawChannelParams {
    pub dimension: usize,
    pub efficiency: f64,
    pub dark_rate: f64,
    pub gate_time: f64,
    pub mean_photon_number: f64,
    pub basis_count: u32,
}

impl RawChannelParams {
    /// Experimental conditions of the multimode-fiber demonstration:
    /// η = 0.52, γ = 300 counts/s, λ = 0.2.
    pub fn baseline(dimension: usize) -> Self {
        RawChannelParams {
            dimension,
            efficiency: 0.52,
            dark_rate: 300.0,
            gate_time: DEFAULT_GATE_TIME,
            mean_photon_number: 0.2,
            basis_count: 2,
        }
    }

    pub fn validate(self) -> Result<ChannelParams> {
        validate_params(self)
    }
}

/// Validated physical and protocol parameters.
///
/// Fields are private so that every instance has passed [`validate_params`];
/// the `with_*` methods re-validate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "RawChannelParams")]
pub struct ChannelParams {
    dimension: usize,
    efficiency: f64,
    dark_rate: f64,
    gate_time: f64,
    mean_photon_number: f64,
    basis_count: u32,
}

impl From<ChannelParams> for RawChannelParams {
    fn from(p: ChannelParams) -> Self {
        p.raw()
    }
}

impl<'de> Deserialize<'de> for ChannelParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawChannelParams::deserialize(d)?;
        raw.validate().map_err(serde::de::Error::custom)
    }
}

/// Checks every field bound; never clamps.
pub fn validate_params(raw: RawChannelParams) -> Result<ChannelParams> {
    if raw.dimension < 2 {
        return Err(Error::out_of_range(
            "dimension",
            format!("need at least 2 letters, got {}", raw.dimension),
        ));
    }
    if !(raw.efficiency.is_finite() && (0.0..=1.0).contains(&raw.efficiency)) {
        return Err(Error::out_of_range(
            "efficiency",
            format!("must lie in [0, 1], got {}", raw.efficiency),
        ));
    }
    if !(raw.dark_rate.is_finite() && raw.dark_rate >= 0.0) {
        return Err(Error::out_of_range(
            "dark_rate",
            format!("must be a finite non-negative rate, got {}", raw.dark_rate),
        ));
    }
    if !(raw.gate_time.is_finite() && raw.gate_time > 0.0) {
        return Err(Error::out_of_range(
            "gate_time",
            format!("must be positive, got {}", raw.gate_time),
        ));
    }
    if !(raw.mean_photon_number.is_finite() && raw.mean_photon_number >= 0.0) {
        return Err(Error::out_of_range(
            "mean_photon_number",
            format!("must be finite and non-negative, got {}", raw.mean_photon_number),
        ));
    }
    if raw.basis_count < 2 {
        return Err(Error::out_of_range(
            "basis_count",
            format!("need at least 2 bases, got {}", raw.basis_count),
        ));
    }
    // 1 - P_gamma = exp(-γτ(D-1)) must stay representable and non-zero.
    let exponent = raw.dark_rate * raw.gate_time * (raw.dimension - 1) as f64;
    if !exponent.is_finite() || (-exponent).exp() == 0.0 {
        return Err(Error::out_of_range(
            "dark_rate",
            format!("γτ(D−1) = {exponent} leaves no dark-free gate"),
        ));
    }
    Ok(ChannelParams {
        dimension: raw.dimension,
        efficiency: raw.efficiency,
        dark_rate: raw.dark_rate,
        gate_time: raw.gate_time,
        mean_photon_number: raw.mean_photon_number,
        basis_count: raw.basis_count,
    })
}

impl ChannelParams {
    pub fn baseline(dimension: usize) -> Result<Self> {
        RawChannelParams::baseline(dimension).validate()
    }

    pub fn raw(&self) -> RawChannelParams {
        RawChannelParams {
            dimension: self.dimension,
            efficiency: self.efficiency,
            dark_rate: self.dark_rate,
            gate_time: self.gate_time,
            mean_photon_number: self.mean_photon_number,
            basis_count: self.basis_count,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// Dark counts per second, per detector.
    pub fn dark_rate(&self) -> f64 {
        self.dark_rate
    }

    /// Gate duration in seconds.
    pub fn gate_time(&self) -> f64 {
        self.gate_time
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.mean_photon_number
    }

    pub fn basis_count(&self) -> u32 {
        self.basis_count
    }

    /// γτ(D−1): expected dark counts over the D−1 non-signal detectors.
    pub fn dark_exponent(&self) -> f64 {
        self.dark_rate * self.gate_time * (self.dimension - 1) as f64
    }

    /// Probability that one detector fires in one gate without a photon.
    pub fn detector_dark_probability(&self) -> f64 {
        -(-self.dark_rate * self.gate_time).exp_m1()
    }

    pub fn with_dimension(self, dimension: usize) -> Result<Self> {
        RawChannelParams {
            dimension,
            ..self.raw()
        }
        .validate()
    }

    pub fn with_efficiency(self, efficiency: f64) -> Result<Self> {
        RawChannelParams {
            efficiency,
            ..self.raw()
        }
        .validate()
    }

    pub fn with_dark_rate(self, dark_rate: f64) -> Result<Self> {
        RawChannelParams {
            dark_rate,
            ..self.raw()
        }
        .validate()
    }

    pub fn with_gate_time(self, gate_time: f64) -> Result<Self> {
        RawChannelParams {
            gate_time,
            ..self.raw()
        }
        .validate()
    }

    pub fn with_mean_photon_number(self, mean_photon_number: f64) -> Result<Self> {
        RawChannelParams {
            mean_photon_number,
            ..self.raw()
        }
        .validate()
    }
}

/// One of the two mutually unbiased bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Position-like basis {|0⟩, …, |D−1⟩}.
    Computational,
    /// Discrete Fourier basis |f_l⟩ = D^{-1/2} Σ_k e^{2πikl/D} |k⟩.
    Fourier,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Computational, Basis::Fourier];

    pub fn other(self) -> Basis {
        match self {
            Basis::Computational => Basis::Fourier,
            Basis::Fourier => Basis::Computational,
        }
    }

    pub fn code(self) -> char {
        match self {
            Basis::Computational => 'C',
            Basis::Fourier => 'F',
        }
    }

    pub fn from_code(c: char) -> Option<Basis> {
        match c {
            'C' => Some(Basis::Computational),
            'F' => Some(Basis::Fourier),
            _ => None,
        }
    }

    pub(crate) fn from_bit(bit: bool) -> Basis {
        if bit {
            Basis::Fourier
        } else {
            Basis::Computational
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Computational => f.write_str("computational"),
            Basis::Fourier => f.write_str("fourier"),
        }
    }
}

/// A letter of the D-ary alphabet prepared in one basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuditSymbol {
    letter: u32,
    basis: Basis,
}

impl QuditSymbol {
    pub fn new(letter: u32, basis: Basis, dimension: usize) -> Result<Self> {
        if letter as usize >= dimension {
            return Err(Error::LetterOutOfRange { letter, dimension });
        }
        Ok(QuditSymbol { letter, basis })
    }

    pub fn letter(&self) -> u32 {
        self.letter
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Amplitudes of this state on the computational basis of a
    /// `dimension`-level system.
    pub fn amplitudes(&self, dimension: usize) -> Vec<Complex64> {
        match self.basis {
            Basis::Computational => (0..dimension)
                .map(|k| {
                    if k == self.letter as usize {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect(),
            Basis::Fourier => {
                let norm = (dimension as f64).sqrt().recip();
                let l = self.letter as f64;
                (0..dimension)
                    .map(|k| Complex64::from_polar(norm, 2.0 * PI * k as f64 * l / dimension as f64))
                    .collect()
            }
        }
    }

    /// Born-rule outcome distribution when measured in `basis`.
    pub fn outcome_distribution(&self, basis: Basis, dimension: usize) -> Vec<f64> {
        let psi = self.amplitudes(dimension);
        (0..dimension)
            .map(|j| {
                let bra = QuditSymbol {
                    letter: j as u32,
                    basis,
                }
                .amplitudes(dimension);
                bra.iter()
                    .zip(&psi)
                    .map(|(b, p)| b.conj() * p)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .collect()
    }

    /// Ket label; the qubit Fourier states print as |+⟩ and |−⟩.
    pub fn ket(&self, dimension: usize) -> String {
        match (self.basis, dimension, self.letter) {
            (Basis::Computational, _, k) => format!("|{k}⟩"),
            (Basis::Fourier, 2, 0) => "|+⟩".to_string(),
            (Basis::Fourier, 2, _) => "|−⟩".to_string(),
            (Basis::Fourier, _, l) => format!("|f{l}⟩"),
        }
    }
}
