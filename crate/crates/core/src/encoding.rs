//! Scan-path strings and their run-length codes.
//!
//! A run-length unit renders as its code alone when the run is 1 and as
//! code followed by the decimal run length otherwise (`A3B2A`). Codes are
//! never digits, so the rendering parses back unambiguously.

use std::fmt;
use std::str::FromStr;

use crate::alphabet::BLANK;
use crate::error::{Error, Result};
use crate::gaze::ScanPath;
use crate::tree::AoiTree;

/// Default minimum dwell kept before mining, in samples (~100 ms at 60 Hz).
pub const DEFAULT_TAU: u32 = 6;

/// One code per gaze sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSequence {
    pub participant: String,
    pub chars: Vec<char>,
}

impl EncodedSequence {
    pub fn new(participant: impl Into<String>, chars: impl IntoIterator<Item = char>) -> Self {
        EncodedSequence {
            participant: participant.into(),
            chars: chars.into_iter().collect(),
        }
    }

    pub fn as_string(&self) -> String {
        self.chars.iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RleUnit {
    pub ch: char,
    pub run: u32,
}

impl fmt::Display for RleUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.run == 1 {
            write!(f, "{}", self.ch)
        } else {
            write!(f, "{}{}", self.ch, self.run)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RleSequence {
    pub participant: String,
    pub units: Vec<RleUnit>,
}

impl fmt::Display for RleSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.units.iter().try_for_each(|u| write!(f, "{u}"))
    }
}

impl FromStr for RleSequence {
    type Err = Error;

    /// Parses a rendered code; the participant is left empty.
    fn from_str(s: &str) -> Result<Self> {
        let mut units: Vec<RleUnit> = Vec::new();
        let mut chars = s.chars().peekable();
        while let Some(ch) = chars.next() {
            if ch.is_ascii_digit() {
                return Err(Error::RleFormat(format!("count without a code in {s:?}")));
            }
            let mut digits = String::new();
            while let Some(d) = chars.next_if(char::is_ascii_digit) {
                digits.push(d);
            }
            let run = if digits.is_empty() {
                1
            } else {
                digits
                    .parse::<u32>()
                    .map_err(|e| Error::RleFormat(format!("{digits}: {e}")))?
            };
            if run < 1 {
                return Err(Error::RleFormat(format!("run length {run} for {ch:?}")));
            }
            units.push(RleUnit { ch, run });
        }
        Ok(RleSequence {
            participant: String::new(),
            units,
        })
    }
}

/// Replaces each gaze sample by the code of the AOI containing it.
pub fn encode_path(path: &ScanPath, tree: &AoiTree) -> EncodedSequence {
    EncodedSequence {
        participant: path.participant.clone(),
        chars: path.points.iter().map(|p| tree.locate(p.x, p.y)).collect(),
    }
}

pub fn rle_encode(seq: &EncodedSequence) -> RleSequence {
    let mut units: Vec<RleUnit> = Vec::new();
    for &ch in &seq.chars {
        match units.last_mut() {
            Some(last) if last.ch == ch => last.run += 1,
            _ => units.push(RleUnit { ch, run: 1 }),
        }
    }
    RleSequence {
        participant: seq.participant.clone(),
        units,
    }
}

pub fn rle_expand(rle: &RleSequence) -> Result<EncodedSequence> {
    let mut chars = Vec::with_capacity(rle.units.iter().map(|u| u.run as usize).sum());
    for u in &rle.units {
        if u.run < 1 {
            return Err(Error::RleFormat(format!(
                "run length {} for {:?}",
                u.run, u.ch
            )));
        }
        chars.extend(std::iter::repeat_n(u.ch, u.run as usize));
    }
    Ok(EncodedSequence {
        participant: rle.participant.clone(),
        chars,
    })
}

/// Appends a unit, merging it into the previous one when the codes match.
fn push_merged(units: &mut Vec<RleUnit>, unit: RleUnit) {
    match units.last_mut() {
        Some(last) if last.ch == unit.ch => last.run += unit.run,
        _ => units.push(unit),
    }
}

/// Rewrites leaf codes to their level-`k` group codes and merges runs that
/// become adjacent. Blank and unknown codes pass through unchanged.
pub fn project_to_level(rle: &RleSequence, tree: &AoiTree, k: usize) -> Result<RleSequence> {
    let map = tree.level_char_map(k)?;
    let mut units = Vec::with_capacity(rle.units.len());
    for u in &rle.units {
        let ch = map.get(&u.ch).copied().unwrap_or(u.ch);
        push_merged(&mut units, RleUnit { ch, run: u.run });
    }
    Ok(RleSequence {
        participant: rle.participant.clone(),
        units,
    })
}

/// Drops blank units and units shorter than `tau`, merges the neighbours
/// this leaves adjacent, and emits one code per surviving run.
pub fn to_transition_string(rle: &RleSequence, tau: u32) -> Result<String> {
    if tau < 1 {
        return Err(Error::InvalidArgument("tau must be at least 1".into()));
    }
    let mut kept: Vec<RleUnit> = Vec::new();
    for u in rle.units.iter().filter(|u| u.ch != BLANK && u.run >= tau) {
        push_merged(&mut kept, *u);
    }
    Ok(kept.iter().map(|u| u.ch).collect())
}
