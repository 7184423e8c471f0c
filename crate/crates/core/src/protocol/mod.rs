//! Twin encoding, the shuffle announcement and sifting.
//!
//! Two views are kept apart. [`sift`] is what Bob can do with their click
//! record and Alice's pairing announcement; it never sees what was sent.
//! [`adjudicate`] is the omniscient scorer that compares accepted twins
//! with the ground truth to tell correct letters from accepted errors.

mod transcript;

pub use transcript::{read_transcript, write_transcript, Transcript, TranscriptSlot};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::channel_sim::{DetectionEvent, SessionTally};
use crate::error::{Error, Result};
use crate::params::{Basis, ChannelParams, QuditSymbol};

/// One letter sent as two identical photons at two slots of the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwinRecord {
    pub symbol: QuditSymbol,
    pub first_slot: usize,
    pub second_slot: usize,
}

/// Alice's public pairing: a perfect matching of all stream slots, listed
/// in message order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShuffleAnnouncement {
    pairs: Vec<(usize, usize)>,
}

impl ShuffleAnnouncement {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let slots = 2 * pairs.len();
        let mut seen = vec![false; slots];
        for &(a, b) in &pairs {
            if a == b {
                return Err(Error::InvalidAnnouncement(format!("slot {a} paired with itself")));
            }
            for s in [a, b] {
                match seen.get_mut(s) {
                    None => {
                        return Err(Error::InvalidAnnouncement(format!(
                            "slot {s} outside a stream of {slots}"
                        )))
                    }
                    Some(true) => return Err(Error::InvalidAnnouncement(format!("slot {s} used twice"))),
                    Some(flag) => *flag = true,
                }
            }
        }
        Ok(ShuffleAnnouncement { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn slot_count(&self) -> usize {
        2 * self.pairs.len()
    }

    pub fn twin_count(&self) -> usize {
        self.pairs.len()
    }

    /// partner[s] is the slot paired with s.
    pub fn partners(&self) -> Vec<usize> {
        let mut partner = vec![0; self.slot_count()];
        for &(a, b) in &self.pairs {
            partner[a] = b;
            partner[b] = a;
        }
        partner
    }
}

/// Alice's side of a session: the symbol in every slot and the pairing they
/// will announce once Bob has measured.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedMessage {
    slots: Vec<QuditSymbol>,
    announcement: ShuffleAnnouncement,
}

impl EncodedMessage {
    pub fn slots(&self) -> &[QuditSymbol] {
        &self.slots
    }

    pub fn announcement(&self) -> &ShuffleAnnouncement {
        &self.announcement
    }

    pub fn twins(&self) -> Vec<TwinRecord> {
        self.announcement
            .pairs()
            .iter()
            .map(|&(first_slot, second_slot)| TwinRecord {
                symbol: self.slots[first_slot],
                first_slot,
                second_slot,
            })
            .collect()
    }
}

/// Encodes each letter as a twin in a uniformly random basis and scatters
/// the 2N photons over a uniformly random permutation of the slots.
pub fn encode_message<R: Rng + ?Sized>(
    letters: &[u32],
    params: &ChannelParams,
    rng: &mut R,
) -> Result<EncodedMessage> {
    let d = params.dimension();
    let symbols = letters
        .iter()
        .map(|&l| QuditSymbol::new(l, Basis::from_bit(rng.random()), d))
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<usize> = (0..2 * letters.len()).collect();
    order.shuffle(rng);

    let placeholder = QuditSymbol::new(0, Basis::Computational, d)?;
    let mut slots = vec![placeholder; order.len()];
    let pairs = symbols
        .iter()
        .zip(order.chunks_exact(2))
        .map(|(symbol, chunk)| {
            let (a, b) = (chunk[0].min(chunk[1]), chunk[0].max(chunk[1]));
            slots[a] = *symbol;
            slots[b] = *symbol;
            (a, b)
        })
        .collect();
    Ok(EncodedMessage {
        slots,
        announcement: ShuffleAnnouncement { pairs },
    })
}

/// Bob's decision for one announced pair, from their own records only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PairDecision {
    Accepted {
        letter: u32,
    },
    MixedBases,
    Mismatch,
    /// At least one slot had no click or more than one.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SiftedKey {
    pub letters: Vec<u32>,
    /// Announcement index of the twin each letter came from.
    pub source_twin: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sifted {
    pub key: SiftedKey,
    pub decisions: Vec<PairDecision>,
}

/// Cross-references the click record with the pairing announcement.
pub fn sift(events: &[DetectionEvent], announcement: &ShuffleAnnouncement) -> Result<Sifted> {
    if events.len() != announcement.slot_count() {
        return Err(Error::LengthMismatch {
            expected: announcement.slot_count(),
            found: events.len(),
        });
    }
    let mut key = SiftedKey::default();
    let decisions = announcement
        .pairs()
        .iter()
        .enumerate()
        .map(|(twin, &(a, b))| {
            let (ea, eb) = (&events[a], &events[b]);
            let decision = match (ea.resolved(), eb.resolved()) {
                (Some(la), Some(lb)) => {
                    if ea.basis_used() != eb.basis_used() {
                        PairDecision::MixedBases
                    } else if la != lb {
                        PairDecision::Mismatch
                    } else {
                        PairDecision::Accepted { letter: la }
                    }
                }
                _ => PairDecision::Unresolved,
            };
            if let PairDecision::Accepted { letter } = decision {
                key.letters.push(letter);
                key.source_twin.push(twin);
            }
            decision
        })
        .collect();
    Ok(Sifted { key, decisions })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DiscardReason {
    MixedBases,
    Mismatch,
}

/// Ground-truth classification of one twin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PairVerdict {
    /// Both photons detected in Alice's basis, no stray clicks.
    Correct,
    /// Both photons detected in the same wrong basis on the same detector:
    /// accepted, but the letter carries no information.
    BasisError,
    Discarded(DiscardReason),
    Lost,
    /// Accepted on the strength of one or two dark counts.
    EmptyError,
}

/// What the channel did to one slot, invisible to Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotTruth {
    pub sent: QuditSymbol,
    /// Detector that registered the signal photon(s), if any did.
    pub signal_detector: Option<u32>,
}

/// Scores Bob's decisions against what was actually sent and detected.
pub fn adjudicate(
    sifted: &Sifted,
    announcement: &ShuffleAnnouncement,
    events: &[DetectionEvent],
    truth: &[SlotTruth],
) -> Result<Vec<PairVerdict>> {
    for len in [events.len(), truth.len()] {
        if len != announcement.slot_count() {
            return Err(Error::LengthMismatch {
                expected: announcement.slot_count(),
                found: len,
            });
        }
    }
    if sifted.decisions.len() != announcement.twin_count() {
        return Err(Error::LengthMismatch {
            expected: announcement.twin_count(),
            found: sifted.decisions.len(),
        });
    }
    let photon_origin =
        |s: usize| events[s].resolved().is_some() && events[s].resolved() == truth[s].signal_detector;
    Ok(announcement
        .pairs()
        .iter()
        .zip(&sifted.decisions)
        .map(|(&(a, b), decision)| match decision {
            PairDecision::Unresolved => PairVerdict::Lost,
            PairDecision::MixedBases => PairVerdict::Discarded(DiscardReason::MixedBases),
            PairDecision::Mismatch => PairVerdict::Discarded(DiscardReason::Mismatch),
            PairDecision::Accepted { .. } => {
                if photon_origin(a) && photon_origin(b) {
                    if events[a].basis_used() == truth[a].sent.basis() {
                        PairVerdict::Correct
                    } else {
                        PairVerdict::BasisError
                    }
                } else {
                    PairVerdict::EmptyError
                }
            }
        })
        .collect())
}

/// [`sift`] followed by [`adjudicate`].
pub fn sift_and_score(
    events: &[DetectionEvent],
    announcement: &ShuffleAnnouncement,
    truth: &[SlotTruth],
) -> Result<(SiftedKey, Vec<PairVerdict>)> {
    let sifted = sift(events, announcement)?;
    let verdicts = adjudicate(&sifted, announcement, events, truth)?;
    Ok((sifted.key, verdicts))
}

pub fn score_session(verdicts: &[PairVerdict]) -> SessionTally {
    let mut tally = SessionTally::default();
    for v in verdicts {
        tally.record(*v);
    }
    tally
}
