//! Line-oriented session transcripts for replay and golden tests.
//!
//! ```text
//! # dbs-transcript v1
//! # dimension=4 slots=4
//! S <slot> <alice basis C|F> <alice letter> <bob basis C|F> <clicks 0/1 string> <signal detector|->
//! P <slot> <slot>
//! ```
//!
//! Slot lines come first, in slot order, then one `P` line per announced
//! pair in message order. The signal column is ground truth kept for
//! re-scoring; sifting ignores it.

use std::io::{BufRead, Write};

use super::{adjudicate, sift, EncodedMessage, PairVerdict, ShuffleAnnouncement, Sifted, SlotTruth};
use crate::channel_sim::{DetectionEvent, Transmission};
use crate::error::{Error, Result};
use crate::params::{Basis, QuditSymbol};

const MAGIC: &str = "# dbs-transcript v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptSlot {
    pub truth: SlotTruth,
    pub event: DetectionEvent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub dimension: usize,
    pub slots: Vec<TranscriptSlot>,
    pub announcement: ShuffleAnnouncement,
}

impl Transcript {
    /// Pairs Alice's message with what the channel delivered for each slot.
    pub fn from_session(dimension: usize, message: &EncodedMessage, sent: &[Transmission]) -> Result<Self> {
        if sent.len() != message.slots().len() {
            return Err(Error::LengthMismatch {
                expected: message.slots().len(),
                found: sent.len(),
            });
        }
        let slots = message
            .slots()
            .iter()
            .zip(sent)
            .map(|(&s, t)| TranscriptSlot {
                truth: SlotTruth {
                    sent: s,
                    signal_detector: t.signal_detector,
                },
                event: t.event.clone(),
            })
            .collect();
        Ok(Transcript {
            dimension,
            slots,
            announcement: message.announcement().clone(),
        })
    }

    pub fn events(&self) -> Vec<DetectionEvent> {
        self.slots.iter().map(|s| s.event.clone()).collect()
    }

    pub fn truth(&self) -> Vec<SlotTruth> {
        self.slots.iter().map(|s| s.truth).collect()
    }

    /// Re-runs sifting and scoring from the recorded clicks.
    pub fn replay(&self) -> Result<(Sifted, Vec<PairVerdict>)> {
        let events = self.events();
        let sifted = sift(&events, &self.announcement)?;
        let verdicts = adjudicate(&sifted, &self.announcement, &events, &self.truth())?;
        Ok((sifted, verdicts))
    }
}

pub fn write_transcript<W: Write>(mut out: W, transcript: &Transcript) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(
        out,
        "# dimension={} slots={}",
        transcript.dimension,
        transcript.slots.len()
    )?;
    for (i, slot) in transcript.slots.iter().enumerate() {
        let clicks: String = slot
            .event
            .clicks()
            .iter()
            .map(|b| if *b { '1' } else { '0' })
            .collect();
        let signal = slot
            .truth
            .signal_detector
            .map_or_else(|| "-".to_string(), |d| d.to_string());
        writeln!(
            out,
            "S {i} {} {} {} {clicks} {signal}",
            slot.truth.sent.basis().code(),
            slot.truth.sent.letter(),
            slot.event.basis_used().code(),
        )?;
    }
    for (a, b) in transcript.announcement.pairs() {
        writeln!(out, "P {a} {b}")?;
    }
    Ok(())
}

fn basis_field(field: Option<&str>, line: usize) -> Result<Basis> {
    let mut chars = field.ok_or_else(|| Error::parse(line, "missing basis"))?.chars();
    match (chars.next().and_then(Basis::from_code), chars.next()) {
        (Some(b), None) => Ok(b),
        _ => Err(Error::parse(line, "basis must be C or F")),
    }
}

fn number<T: std::str::FromStr>(field: Option<&str>, line: usize, what: &str) -> Result<T> {
    field
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| Error::parse(line, format!("bad {what}")))
}

pub fn read_transcript<R: BufRead>(input: R) -> Result<Transcript> {
    let mut lines = input.lines().enumerate();
    let io_err = |line: usize, e: std::io::Error| Error::parse(line, e.to_string());

    match lines.next() {
        Some((_, Ok(l))) if l.trim_end() == MAGIC => {}
        _ => return Err(Error::parse(1, "missing transcript header")),
    }
    let header = match lines.next() {
        Some((_, Ok(l))) => l,
        _ => return Err(Error::parse(2, "missing dimension line")),
    };
    let mut dimension = None;
    let mut declared_slots = None;
    for kv in header.trim_start_matches('#').split_whitespace() {
        match kv.split_once('=') {
            Some(("dimension", v)) => dimension = v.parse::<usize>().ok(),
            Some(("slots", v)) => declared_slots = v.parse::<usize>().ok(),
            _ => {}
        }
    }
    let dimension = dimension
        .filter(|&d| d >= 2)
        .ok_or_else(|| Error::parse(2, "bad dimension"))?;

    let mut slots = Vec::new();
    let mut pairs = Vec::new();
    for (idx, line) in lines {
        let n = idx + 1;
        let line = line.map_err(|e| io_err(n, e))?;
        let mut f = line.split_whitespace();
        match f.next() {
            None => continue,
            Some(t) if t.starts_with('#') => continue,
            Some("S") => {
                let slot: usize = number(f.next(), n, "slot index")?;
                if slot != slots.len() {
                    return Err(Error::parse(n, "slots out of order"));
                }
                if !pairs.is_empty() {
                    return Err(Error::parse(n, "slot after pair records"));
                }
                let alice_basis = basis_field(f.next(), n)?;
                let letter: u32 = number(f.next(), n, "letter")?;
                let bob_basis = basis_field(f.next(), n)?;
                let clicks = f.next().ok_or_else(|| Error::parse(n, "missing clicks"))?;
                if clicks.len() != dimension || !clicks.chars().all(|c| c == '0' || c == '1') {
                    return Err(Error::parse(n, "click vector must be D characters of 0/1"));
                }
                let on: Vec<usize> = clicks
                    .chars()
                    .enumerate()
                    .filter(|(_, c)| *c == '1')
                    .map(|(i, _)| i)
                    .collect();
                let signal_detector = match f.next() {
                    Some("-") => None,
                    other => Some(number::<u32>(other, n, "signal detector")?),
                };
                if signal_detector.is_some_and(|s| s as usize >= dimension) {
                    return Err(Error::parse(n, "signal detector outside array"));
                }
                let sent = QuditSymbol::new(letter, alice_basis, dimension)
                    .map_err(|e| Error::parse(n, e.to_string()))?;
                slots.push(TranscriptSlot {
                    truth: SlotTruth {
                        sent,
                        signal_detector,
                    },
                    event: DetectionEvent::from_clicks(bob_basis, dimension, &on),
                });
            }
            Some("P") => {
                let a: usize = number(f.next(), n, "pair slot")?;
                let b: usize = number(f.next(), n, "pair slot")?;
                pairs.push((a, b));
            }
            Some(other) => return Err(Error::parse(n, format!("unknown record `{other}`"))),
        }
    }
    if declared_slots.is_some_and(|s| s != slots.len()) {
        return Err(Error::parse(2, "slot count disagrees with header"));
    }
    let announcement = ShuffleAnnouncement::new(pairs).map_err(|e| Error::parse(0, e.to_string()))?;
    if announcement.slot_count() != slots.len() {
        return Err(Error::LengthMismatch {
            expected: slots.len(),
            found: announcement.slot_count(),
        });
    }
    Ok(Transcript {
        dimension,
        slots,
        announcement,
    })
}
