//! N-gram transition patterns and participant comparison.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A length-N window of a transition string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pattern(pub String);

impl Pattern {
    pub fn chars(&self) -> impl Iterator<Item = char> + '_ {
        self.0.chars()
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Pattern {
    fn from(s: &str) -> Self {
        Pattern(s.to_owned())
    }
}

/// Sliding-window N-gram counts of `s`.
pub fn extract_ngrams(s: &str, n: usize) -> Result<BTreeMap<Pattern, u64>> {
    if n < 1 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let chars: Vec<char> = s.chars().collect();
    let mut out = BTreeMap::new();
    for w in chars.windows(n) {
        *out.entry(Pattern(w.iter().collect())).or_insert(0) += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternTable {
    pub level: usize,
    pub n: usize,
    /// All participants, including those without any pattern.
    pub participants: Vec<String>,
    /// Per pattern, the nonzero count of each participant.
    pub counts: BTreeMap<Pattern, BTreeMap<String, u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    More,
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AoiRole {
    Starts,
    Passes,
    Arrives,
}

impl std::str::FromStr for AoiRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "starts" => Ok(AoiRole::Starts),
            "passes" => Ok(AoiRole::Passes),
            "arrives" => Ok(AoiRole::Arrives),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

impl PatternTable {
    /// Counts N-grams of each participant's transition string at level `k`.
    pub fn build(strings: &BTreeMap<String, String>, n: usize, level: usize) -> Result<Self> {
        let mut counts: BTreeMap<Pattern, BTreeMap<String, u64>> = BTreeMap::new();
        for (participant, s) in strings {
            for (pattern, c) in extract_ngrams(s, n)? {
                counts
                    .entry(pattern)
                    .or_default()
                    .insert(participant.clone(), c);
            }
        }
        Ok(PatternTable {
            level,
            n,
            participants: strings.keys().cloned().collect(),
            counts,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self, pattern: &Pattern) -> u64 {
        self.counts.get(pattern).map_or(0, |m| m.values().sum())
    }

    /// Number of participants showing the pattern at least once.
    pub fn support(&self, pattern: &Pattern) -> usize {
        self.counts
            .get(pattern)
            .map_or(0, |m| m.values().filter(|&&c| c > 0).count())
    }

    pub fn count(&self, pattern: &Pattern, participant: &str) -> u64 {
        self.counts
            .get(pattern)
            .and_then(|m| m.get(participant))
            .copied()
            .unwrap_or(0)
    }

    pub fn has_participant(&self, participant: &str) -> bool {
        self.participants.iter().any(|p| p == participant)
    }

    fn require(&self, participant: &str) -> Result<()> {
        if self.has_participant(participant) {
            Ok(())
        } else {
            Err(Error::UnknownParticipant(participant.to_owned()))
        }
    }

    /// Patterns by descending total; equal totals in lexicographic order.
    pub fn sorted(&self) -> Vec<Pattern> {
        let mut out: Vec<Pattern> = self.counts.keys().cloned().collect();
        out.sort_by(|a, b| self.total(b).cmp(&self.total(a)).then_with(|| a.cmp(b)));
        out
    }

    /// Patterns ordered by one participant's count, then by total.
    pub fn sorted_by_participant(&self, focus: &str) -> Result<Vec<Pattern>> {
        self.require(focus)?;
        let mut out = self.sorted();
        out.sort_by_key(|p| std::cmp::Reverse(self.count(p, focus)));
        Ok(out)
    }

    /// Keeps patterns whose total is strictly above (`More`) or below (`Less`) `threshold`.
    pub fn filter_by_threshold(&self, op: Comparison, threshold: u64) -> PatternTable {
        let keep = |total: u64| match op {
            Comparison::More => total > threshold,
            Comparison::Less => total < threshold,
        };
        PatternTable {
            counts: self
                .counts
                .iter()
                .filter(|(p, _)| keep(self.total(p)))
                .map(|(p, m)| (p.clone(), m.clone()))
                .collect(),
            participants: self.participants.clone(),
            ..*self
        }
    }

    pub fn diff(&self, p: &str, q: &str) -> Result<DiffReport> {
        self.require(p)?;
        self.require(q)?;
        if p == q {
            return Err(Error::SameParticipant);
        }
        let mut report = DiffReport {
            p: p.to_owned(),
            q: q.to_owned(),
            ..Default::default()
        };
        for pattern in self.counts.keys() {
            let (cp, cq) = (self.count(pattern, p), self.count(pattern, q));
            match (cp > 0, cq > 0) {
                (true, true) => report.common.push(CommonEntry {
                    pattern: pattern.clone(),
                    base: cp.min(cq),
                    surplus: cp.abs_diff(cq),
                    owner: match cp.cmp(&cq) {
                        Ordering::Greater => Some(p.to_owned()),
                        Ordering::Less => Some(q.to_owned()),
                        Ordering::Equal => None,
                    },
                }),
                (true, false) => report.unique_p.push(UniqueEntry {
                    pattern: pattern.clone(),
                    count: cp,
                }),
                (false, true) => report.unique_q.push(UniqueEntry {
                    pattern: pattern.clone(),
                    count: cq,
                }),
                (false, false) => {}
            }
        }
        report.common.sort_by(|a, b| {
            (b.base + b.surplus)
                .cmp(&(a.base + a.surplus))
                .then_with(|| a.pattern.cmp(&b.pattern))
        });
        for unique in [&mut report.unique_p, &mut report.unique_q] {
            unique.sort_by(|a, b| {
                b.count
                    .cmp(&a.count)
                    .then_with(|| a.pattern.cmp(&b.pattern))
            });
        }
        Ok(report)
    }

    /// Cosine of the two participants' pattern-count vectors; 0 if either is all zero.
    pub fn cosine(&self, p: &str, q: &str) -> Result<f64> {
        self.require(p)?;
        self.require(q)?;
        let (mut dot, mut np, mut nq) = (0.0, 0.0, 0.0);
        for pattern in self.counts.keys() {
            let (a, b) = (self.count(pattern, p) as f64, self.count(pattern, q) as f64);
            dot += a * b;
            np += a * a;
            nq += b * b;
        }
        if np == 0.0 || nq == 0.0 {
            return Ok(0.0);
        }
        Ok((dot / (np * nq).sqrt()).clamp(0.0, 1.0))
    }

    #[allow(clippy::needless_range_loop)]
    pub fn similarity_matrix(&self) -> Result<SimilarityMatrix> {
        let n = self.participants.len();
        if n < 2 {
            return Err(Error::TooFewParticipants(n));
        }
        let mut values = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = self.cosine(&self.participants[i], &self.participants[j])?;
                values[i][j] = v;
                values[j][i] = v;
            }
        }
        let mut min = (0, 1);
        let mut max = (0, 1);
        for i in 0..n {
            for j in i + 1..n {
                if values[i][j] < values[min.0][min.1] {
                    min = (i, j);
                }
                if values[i][j] > values[max.0][max.1] {
                    max = (i, j);
                }
            }
        }
        let pair =
            |(i, j): (usize, usize)| (self.participants[i].clone(), self.participants[j].clone());
        Ok(SimilarityMatrix {
            participants: self.participants.clone(),
            values,
            most_similar: pair(max),
            least_similar: pair(min),
        })
    }

    /// Patterns that start at, pass over (any position), or arrive at `aoi`,
    /// in [`PatternTable::sorted`] order.
    pub fn patterns_through_aoi(&self, aoi: char, role: AoiRole) -> Vec<Pattern> {
        self.sorted()
            .into_iter()
            .filter(|p| match role {
                AoiRole::Starts => p.chars().next() == Some(aoi),
                AoiRole::Arrives => p.chars().last() == Some(aoi),
                AoiRole::Passes => p.chars().any(|c| c == aoi),
            })
            .collect()
    }

    /// Every pattern that appears in the table, as a set.
    pub fn pattern_set(&self) -> BTreeSet<Pattern> {
        self.counts.keys().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommonEntry {
    pub pattern: Pattern,
    pub base: u64,
    pub surplus: u64,
    /// Participant with the larger count; `None` when equal.
    pub owner: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniqueEntry {
    pub pattern: Pattern,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiffReport {
    pub p: String,
    pub q: String,
    pub common: Vec<CommonEntry>,
    pub unique_p: Vec<UniqueEntry>,
    pub unique_q: Vec<UniqueEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimilarityMatrix {
    pub participants: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Off-diagonal argmax pair.
    pub most_similar: (String, String),
    /// Off-diagonal argmin pair.
    pub least_similar: (String, String),
}
