//! Monte Carlo physical layer: Poisson source, lossy channel, a gated
//! array of D detectors with dark counts, and Oscar's photon-number
//! splitting attack.
//!
//! Each detector index is read as the letter of the basis Bob measured in.
//! A gate is resolved only when exactly one detector fired; a dark count on
//! the detector the photon hit is indistinguishable from the photon and is
//! absorbed.

mod exact;

pub use exact::{exact_dbs, exact_ipbe, same_detector_probability};

use bitvec::prelude::*;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Poisson};
use serde::Serialize;

use crate::analytics::Protocol;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::params::{Basis, ChannelParams, QuditSymbol};
use crate::protocol::{adjudicate, encode_message, sift, DiscardReason, PairVerdict, SlotTruth};
use crate::rng::{RandomSource, SimRng};
use crate::stats::{Estimate, RatioEstimate};

/// Twins (or IPBE slots) simulated per random-stream block.
pub const BLOCK_SIZE: u64 = 4096;

/// What Bob's detector array recorded in one gate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DetectionEvent {
    basis_used: Basis,
    clicks: BitVec,
    resolved: Option<u32>,
}

impl DetectionEvent {
    pub fn new(basis_used: Basis, clicks: BitVec) -> Self {
        let resolved = match clicks.count_ones() {
            1 => clicks.first_one().map(|i| i as u32),
            _ => None,
        };
        DetectionEvent {
            basis_used,
            clicks,
            resolved,
        }
    }

    /// Event with the given detectors firing; indices outside the array are ignored.
    pub fn from_clicks(basis_used: Basis, dimension: usize, on: &[usize]) -> Self {
        let mut clicks = bitvec![0; dimension];
        for &i in on.iter().filter(|&&i| i < dimension) {
            clicks.set(i, true);
        }
        DetectionEvent::new(basis_used, clicks)
    }

    pub fn basis_used(&self) -> Basis {
        self.basis_used
    }

    pub fn clicks(&self) -> &BitSlice {
        &self.clicks
    }

    pub fn click_count(&self) -> usize {
        self.clicks.count_ones()
    }

    /// The single detector that fired, if exactly one did.
    pub fn resolved(&self) -> Option<u32> {
        self.resolved
    }
}

/// One transmitted slot: Bob's record plus the hidden signal path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transmission {
    pub event: DetectionEvent,
    pub signal_detector: Option<u32>,
    pub photons: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub enum PhotonSource {
    #[default]
    Poisson,
    /// Exactly this many photons in every pulse.
    Fixed(u32),
}

/// How loss acts on a pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Delivery {
    /// A non-empty pulse reaches a detector with probability η, all its
    /// photons together. This is the model behind the closed forms.
    #[default]
    Pulse,
    /// Every photon survives independently with probability η; in the wrong
    /// basis each survivor picks its own detector.
    PerPhoton,
}

/// Where a photon measured in the wrong basis lands.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub enum Delocalization {
    #[default]
    Uniform,
    /// Detector probabilities, e.g. a speckle intensity map of length D.
    Distribution(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ChannelModel {
    pub source: PhotonSource,
    pub delivery: Delivery,
    pub delocalization: Delocalization,
}

/// A configured channel with its sampling distributions built once.
#[derive(Debug, Clone)]
pub struct Channel {
    params: ChannelParams,
    model: ChannelModel,
    poisson: Option<Poisson<f64>>,
    darks: Option<Binomial>,
    spread: Option<WeightedIndex<f64>>,
}

impl Channel {
    pub fn new(params: ChannelParams, model: ChannelModel) -> Result<Self> {
        let d = params.dimension();
        let lambda = params.mean_photon_number();
        let poisson = match model.source {
            PhotonSource::Poisson if lambda > 0.0 => Some(
                Poisson::new(lambda).map_err(|e| Error::out_of_range("mean_photon_number", e.to_string()))?,
            ),
            _ => None,
        };
        let p_d = params.detector_dark_probability();
        let darks = if p_d > 0.0 {
            Some(Binomial::new(d as u64, p_d).map_err(|e| Error::out_of_range("dark_rate", e.to_string()))?)
        } else {
            None
        };
        let spread = match &model.delocalization {
            Delocalization::Uniform => None,
            Delocalization::Distribution(p) => {
                if p.len() != d {
                    return Err(Error::LengthMismatch {
                        expected: d,
                        found: p.len(),
                    });
                }
                Some(
                    WeightedIndex::new(p)
                        .map_err(|e| Error::out_of_range("delocalization", e.to_string()))?,
                )
            }
        };
        Ok(Channel {
            params,
            model,
            poisson,
            darks,
            spread,
        })
    }

    pub fn ideal_model(params: ChannelParams) -> Result<Self> {
        Channel::new(params, ChannelModel::default())
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn draw_photons<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match (self.model.source, &self.poisson) {
            (PhotonSource::Fixed(n), _) => n,
            (PhotonSource::Poisson, Some(p)) => p.sample(rng) as u32,
            (PhotonSource::Poisson, None) => 0,
        }
    }

    fn wrong_basis_detector<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match &self.spread {
            Some(w) => w.sample(rng) as u32,
            None => rng.random_range(0..self.params.dimension() as u32),
        }
    }

    /// Draws a photon number from the source and sends the pulse.
    pub fn transmit_pulse<R: Rng + ?Sized>(
        &self,
        symbol: QuditSymbol,
        bob_basis: Basis,
        rng: &mut R,
    ) -> Transmission {
        let photons = self.draw_photons(rng);
        self.detect(symbol, bob_basis, photons, rng)
    }

    /// Sends a pulse of exactly `photons` photons.
    pub fn detect<R: Rng + ?Sized>(
        &self,
        symbol: QuditSymbol,
        bob_basis: Basis,
        photons: u32,
        rng: &mut R,
    ) -> Transmission {
        let d = self.params.dimension();
        let eta = self.params.efficiency();
        let matched = bob_basis == symbol.basis();
        let mut clicks = bitvec![0; d];

        let signal_detector = match self.model.delivery {
            Delivery::Pulse => {
                if photons > 0 && rng.random_bool(eta) {
                    let det = if matched {
                        symbol.letter()
                    } else {
                        self.wrong_basis_detector(rng)
                    };
                    clicks.set(det as usize, true);
                    Some(det)
                } else {
                    None
                }
            }
            Delivery::PerPhoton => {
                let survivors = (0..photons).filter(|_| rng.random_bool(eta)).count();
                if survivors == 0 {
                    None
                } else if matched {
                    clicks.set(symbol.letter() as usize, true);
                    Some(symbol.letter())
                } else {
                    let first = self.wrong_basis_detector(rng);
                    clicks.set(first as usize, true);
                    for _ in 1..survivors {
                        let det = self.wrong_basis_detector(rng);
                        clicks.set(det as usize, true);
                    }
                    Some(first)
                }
            }
        };

        if let Some(b) = &self.darks {
            let k = b.sample(rng) as usize;
            if k > 0 {
                for i in index::sample(rng, d, k) {
                    clicks.set(i, true);
                }
            }
        }

        Transmission {
            event: DetectionEvent::new(bob_basis, clicks),
            signal_detector,
            photons,
        }
    }

    /// Transmits every slot of a stream, Bob choosing a basis per slot.
    /// The result depends on the slot contents only, never on the pairing.
    pub fn transmit_stream<R: Rng + ?Sized>(&self, slots: &[QuditSymbol], rng: &mut R) -> Vec<Transmission> {
        slots
            .iter()
            .map(|&s| {
                let bob = Basis::from_bit(rng.random());
                self.transmit_pulse(s, bob, rng)
            })
            .collect()
    }

    fn random_letters(&self, n: usize, rng: &mut SimRng) -> Vec<u32> {
        let d = self.params.dimension() as u32;
        (0..n).map(|_| rng.random_range(0..d)).collect()
    }

    fn dbs_block(&self, twins: usize, rng: &mut SimRng) -> Result<SessionTally> {
        let letters = self.random_letters(twins, rng);
        let message = encode_message(&letters, &self.params, rng)?;
        let sent = self.transmit_stream(message.slots(), rng);
        let truth: Vec<SlotTruth> = message
            .slots()
            .iter()
            .zip(&sent)
            .map(|(&s, t)| SlotTruth {
                sent: s,
                signal_detector: t.signal_detector,
            })
            .collect();
        let events: Vec<DetectionEvent> = sent.into_iter().map(|t| t.event).collect();
        let sifted = sift(&events, message.announcement())?;
        let verdicts = adjudicate(&sifted, message.announcement(), &events, &truth)?;
        let mut tally = SessionTally::default();
        for v in verdicts {
            tally.record(v);
        }
        Ok(tally)
    }

    /// Full DBS pipeline over `twins` random letters: encode, transmit,
    /// sift, score.
    pub fn run_dbs_session(&self, twins: u64, source: RandomSource, exec: Execution) -> Result<SessionTally> {
        self.run_blocks(twins, source, exec, |n, rng| self.dbs_block(n, rng))
    }

    fn ipbe_block(&self, letters: usize, rng: &mut SimRng) -> Result<SessionTally> {
        let d = self.params.dimension();
        let mut tally = SessionTally::default();
        for _ in 0..letters {
            let letter = rng.random_range(0..d as u32);
            let sent = QuditSymbol::new(letter, Basis::from_bit(rng.random()), d)?;
            let bob = Basis::from_bit(rng.random());
            let t = self.transmit_pulse(sent, bob, rng);
            let verdict = if bob != sent.basis() {
                // Removed when bases are compared publicly.
                PairVerdict::Discarded(DiscardReason::MixedBases)
            } else {
                match t.event.resolved() {
                    None => PairVerdict::Lost,
                    Some(r) if Some(r) == t.signal_detector => PairVerdict::Correct,
                    Some(_) => PairVerdict::EmptyError,
                }
            };
            tally.record(verdict);
        }
        Ok(tally)
    }

    /// Single-photon-per-letter reference protocol; tallies count slots.
    pub fn run_ipbe_session(
        &self,
        letters: u64,
        source: RandomSource,
        exec: Execution,
    ) -> Result<SessionTally> {
        self.run_blocks(letters, source, exec, |n, rng| self.ipbe_block(n, rng))
    }

    fn run_blocks<F>(
        &self,
        total: u64,
        source: RandomSource,
        exec: Execution,
        block: F,
    ) -> Result<SessionTally>
    where
        F: Fn(usize, &mut SimRng) -> Result<SessionTally> + Sync + Send,
    {
        let blocks = total.div_ceil(BLOCK_SIZE) as usize;
        exec.map_reduce(
            blocks,
            Ok(SessionTally::default()),
            |i| {
                let start = i as u64 * BLOCK_SIZE;
                let n = BLOCK_SIZE.min(total - start) as usize;
                block(n, &mut source.child(i as u64).rng())
            },
            |a, b| Ok(a?.merge(&b?)),
        )
    }

    fn oscar_block(&self, units: usize, protocol: Protocol, rng: &mut SimRng) -> OscarTally {
        // No dark count on any of the D−1 detectors the photon missed.
        let quiet = (-self.params.dark_exponent()).exp();
        let pulses = match protocol {
            Protocol::Dbs => 2,
            Protocol::Ipbe => 1,
        };
        let mut tally = OscarTally::default();
        for _ in 0..units {
            let mut counts = [0u32; 2];
            for c in counts.iter_mut().take(pulses) {
                *c = self.draw_photons(rng);
            }
            let counts = &counts[..pulses];
            if counts.contains(&0) {
                continue;
            }
            tally.loaded += 1;

            // Bob: right basis, delivered, no stray dark count, every pulse.
            let bob_ok = (0..pulses).all(|_| {
                let basis_ok = rng.random_bool(0.5);
                let delivered = rng.random_bool(self.params.efficiency());
                let quiet = rng.random_bool(quiet);
                basis_ok && delivered && quiet
            });
            tally.bob_successes += u64::from(bob_ok);

            if counts.iter().all(|&n| n >= 2) {
                tally.intercepted_multi += 1;
                // After the announcement only the basis is unknown under DBS;
                // IPBE reveals it.
                let guessed = match protocol {
                    Protocol::Dbs => rng.random_bool(0.5),
                    Protocol::Ipbe => true,
                };
                tally.extracted_pairs += u64::from(guessed);
            }
        }
        tally
    }

    /// Oscar splits every multi-photon pulse and keeps one photon in ideal
    /// storage. Units are twins under DBS and single pulses under IPBE;
    /// rates are normalised by loaded units.
    pub fn run_oscar_pns(
        &self,
        units: u64,
        protocol: Protocol,
        source: RandomSource,
        exec: Execution,
    ) -> OscarTally {
        let blocks = units.div_ceil(BLOCK_SIZE) as usize;
        exec.map_reduce(
            blocks,
            OscarTally::default(),
            |i| {
                let start = i as u64 * BLOCK_SIZE;
                let n = BLOCK_SIZE.min(units - start) as usize;
                self.oscar_block(n, protocol, &mut source.child(i as u64).rng())
            },
            |a, b| a.merge(&b),
        )
    }
}

/// Verdict counts for one session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SessionTally {
    pub correct: u64,
    pub basis_error: u64,
    pub discarded_mixed: u64,
    pub discarded_mismatch: u64,
    pub lost: u64,
    pub empty_error: u64,
}

impl SessionTally {
    pub fn record(&mut self, verdict: PairVerdict) {
        let slot = match verdict {
            PairVerdict::Correct => &mut self.correct,
            PairVerdict::BasisError => &mut self.basis_error,
            PairVerdict::Discarded(DiscardReason::MixedBases) => &mut self.discarded_mixed,
            PairVerdict::Discarded(DiscardReason::Mismatch) => &mut self.discarded_mismatch,
            PairVerdict::Lost => &mut self.lost,
            PairVerdict::EmptyError => &mut self.empty_error,
        };
        *slot += 1;
    }

    pub fn merge(&self, other: &SessionTally) -> SessionTally {
        SessionTally {
            correct: self.correct + other.correct,
            basis_error: self.basis_error + other.basis_error,
            discarded_mixed: self.discarded_mixed + other.discarded_mixed,
            discarded_mismatch: self.discarded_mismatch + other.discarded_mismatch,
            lost: self.lost + other.lost,
            empty_error: self.empty_error + other.empty_error,
        }
    }

    pub fn twin_count(&self) -> u64 {
        self.correct
            + self.basis_error
            + self.discarded_mixed
            + self.discarded_mismatch
            + self.lost
            + self.empty_error
    }

    pub fn p_corr(&self) -> Estimate {
        Estimate::new(self.correct, self.twin_count())
    }

    pub fn p_be(&self) -> Estimate {
        Estimate::new(self.basis_error, self.twin_count())
    }

    pub fn p_ee(&self) -> Estimate {
        Estimate::new(self.empty_error, self.twin_count())
    }

    /// (P_BE + P_EE) / P_Corr.
    pub fn ratio(&self) -> RatioEstimate {
        RatioEstimate::from_counts(
            self.basis_error + self.empty_error,
            self.correct,
            self.twin_count(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct OscarTally {
    /// Units whose pulses all carried at least one photon.
    pub loaded: u64,
    /// Loaded units whose pulses were all multi-photon.
    pub intercepted_multi: u64,
    /// Units whose letter Oscar recovered.
    pub extracted_pairs: u64,
    pub bob_successes: u64,
}

impl OscarTally {
    pub fn merge(&self, other: &OscarTally) -> OscarTally {
        OscarTally {
            loaded: self.loaded + other.loaded,
            intercepted_multi: self.intercepted_multi + other.intercepted_multi,
            extracted_pairs: self.extracted_pairs + other.extracted_pairs,
            bob_successes: self.bob_successes + other.bob_successes,
        }
    }

    pub fn p_b_hat(&self) -> Estimate {
        Estimate::new(self.bob_successes, self.loaded)
    }

    pub fn p_o_hat(&self) -> Estimate {
        Estimate::new(self.extracted_pairs, self.loaded)
    }
}

/// Flat CSV row: inputs, empirical estimates with errors, analytic values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TallyRecord {
    pub protocol: Protocol,
    pub dimension: usize,
    pub efficiency: f64,
    pub dark_rate: f64,
    pub gate_time: f64,
    pub mean_photon_number: f64,
    pub seed: u64,
    pub stream: u64,
    pub trials: u64,
    pub correct: u64,
    pub basis_error: u64,
    pub empty_error: u64,
    pub lost: u64,
    pub discarded: u64,
    pub p_corr: f64,
    pub p_corr_se: f64,
    pub p_be: f64,
    pub p_be_se: f64,
    pub p_ee: f64,
    pub p_ee_se: f64,
    pub ratio: f64,
    pub ratio_se: f64,
    pub analytic_p_corr: f64,
    pub analytic_p_be: f64,
    pub analytic_p_ee: f64,
    pub analytic_ratio: f64,
}

impl TallyRecord {
    pub fn new(
        protocol: Protocol,
        params: &ChannelParams,
        source: RandomSource,
        tally: &SessionTally,
    ) -> Self {
        let analytic = match protocol {
            Protocol::Dbs => crate::analytics::dbs_components(params),
            Protocol::Ipbe => crate::analytics::ipbe_components(params),
        };
        let (a_corr, a_be, a_ee, a_ratio) = analytic
            .map(|b| (b.p_corr, b.p_be, b.p_ee, b.ratio))
            .unwrap_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN));
        let ratio = tally.ratio();
        TallyRecord {
            protocol,
            dimension: params.dimension(),
            efficiency: params.efficiency(),
            dark_rate: params.dark_rate(),
            gate_time: params.gate_time(),
            mean_photon_number: params.mean_photon_number(),
            seed: source.seed,
            stream: source.stream_id,
            trials: tally.twin_count(),
            correct: tally.correct,
            basis_error: tally.basis_error,
            empty_error: tally.empty_error,
            lost: tally.lost,
            discarded: tally.discarded_mixed + tally.discarded_mismatch,
            p_corr: tally.p_corr().value(),
            p_corr_se: tally.p_corr().std_error(),
            p_be: tally.p_be().value(),
            p_be_se: tally.p_be().std_error(),
            p_ee: tally.p_ee().value(),
            p_ee_se: tally.p_ee().std_error(),
            ratio: ratio.value,
            ratio_se: ratio.std_error,
            analytic_p_corr: a_corr,
            analytic_p_be: a_be,
            analytic_p_ee: a_ee,
            analytic_ratio: a_ratio,
        }
    }
}
