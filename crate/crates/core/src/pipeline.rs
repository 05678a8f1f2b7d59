//! End-to-end flows shared by the CLI and the HTTP service.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::color::assign_hues;
use crate::encoding::{
    encode_path, project_to_level, rle_encode, to_transition_string, DEFAULT_TAU,
};
use crate::error::{Error, Result};
use crate::gaze::ScanPath;
use crate::layout::{
    build_graph, layout_json, run_layout, LayoutParams, PatternSelection, TransitionGraph,
};
use crate::mining::{AoiRole, Pattern, PatternTable, SimilarityMatrix};
use crate::tree::AoiTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MiningParams {
    pub level: usize,
    pub n: usize,
    pub tau: u32,
}

impl MiningParams {
    /// Finest level, bigrams, default dwell threshold.
    pub fn defaults_for(tree: &AoiTree) -> Self {
        MiningParams {
            level: tree.depth(),
            n: 2,
            tau: DEFAULT_TAU,
        }
    }

    pub fn validate(&self, tree: &AoiTree) -> Result<()> {
        tree.check_level(self.level)?;
        if self.n < 1 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        if self.tau < 1 {
            return Err(Error::InvalidArgument("tau must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSummary {
    pub participant: String,
    /// Run-length code at the finest level.
    pub rle: String,
    /// Run-length code projected to the mining level.
    pub projected: String,
    pub transitions: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningResult {
    pub params: MiningParams,
    pub sequences: Vec<SequenceSummary>,
    pub table: PatternTable,
}

/// encode → run-length → project → filter → N-grams, for every participant.
pub fn mine(paths: &[ScanPath], tree: &AoiTree, params: MiningParams) -> Result<MiningResult> {
    params.validate(tree)?;
    let mut sequences = Vec::with_capacity(paths.len());
    let mut strings = BTreeMap::new();
    for path in paths {
        let rle = rle_encode(&encode_path(path, tree));
        let projected = project_to_level(&rle, tree, params.level)?;
        let transitions = to_transition_string(&projected, params.tau)?;
        strings.insert(path.participant.clone(), transitions.clone());
        sequences.push(SequenceSummary {
            participant: path.participant.clone(),
            rle: rle.to_string(),
            projected: projected.to_string(),
            transitions,
        });
    }
    let table = PatternTable::build(&strings, params.n, params.level)?;
    Ok(MiningResult {
        params,
        sequences,
        table,
    })
}

/// Pattern rows in the given order, in the export shape.
pub fn pattern_rows(table: &PatternTable, order: &[Pattern]) -> Vec<Value> {
    order
        .iter()
        .map(|p| {
            json!({
                "chars": p.as_str(),
                "total": table.total(p),
                "support": table.support(p),
                "perParticipant": table.counts.get(p).cloned().unwrap_or_default(),
            })
        })
        .collect()
}

pub fn similarity_json(m: &SimilarityMatrix) -> Value {
    json!({
        "participants": m.participants,
        "values": m.values,
        "mostSimilar": [m.most_similar.0, m.most_similar.1],
        "leastSimilar": [m.least_similar.0, m.least_similar.1],
    })
}

/// Full mining export: table rows sorted by total, similarity matrix,
/// per-participant codes and the code → AOI id alphabet.
pub fn mining_json(result: &MiningResult, tree: &AoiTree) -> Value {
    let table = &result.table;
    let similarity = table.similarity_matrix().ok();
    let alphabet: BTreeMap<String, u32> = tree
        .leaves()
        .iter()
        .map(|l| (l.ch.to_string(), l.id.0))
        .collect();
    json!({
        "level": result.params.level,
        "n": result.params.n,
        "tau": result.params.tau,
        "participants": table.participants,
        "patterns": pattern_rows(table, &table.sorted()),
        "similarity": similarity.as_ref().map_or(Value::Array(Vec::new()), |m| json!(m.values)),
        "mostSimilar": similarity.as_ref().map(|m| json!([m.most_similar.0, m.most_similar.1])),
        "leastSimilar": similarity.as_ref().map(|m| json!([m.least_similar.0, m.least_similar.1])),
        "sequences": result.sequences.iter().map(|s| json!({
            "participant": s.participant,
            "rle": s.rle,
            "projected": s.projected,
            "transitions": s.transitions,
        })).collect::<Vec<_>>(),
        "alphabet": alphabet,
    })
}

/// Rebuilds a table from a mining export.
pub fn table_from_json(value: &Value) -> Result<PatternTable> {
    #[derive(Deserialize)]
    #[serde(rename_all = "camelCase")]
    struct Row {
        chars: String,
        #[serde(default)]
        per_participant: BTreeMap<String, u64>,
    }
    #[derive(Deserialize)]
    struct Export {
        level: usize,
        n: usize,
        #[serde(default)]
        participants: Vec<String>,
        patterns: Vec<Row>,
    }
    let export: Export = serde_json::from_value(value.clone())?;
    let mut participants = export.participants;
    let mut counts = BTreeMap::new();
    for row in export.patterns {
        for p in row.per_participant.keys() {
            if !participants.contains(p) {
                participants.push(p.clone());
            }
        }
        counts.insert(Pattern(row.chars), row.per_participant);
    }
    Ok(PatternTable {
        level: export.level,
        n: export.n,
        participants,
        counts,
    })
}

/// Which patterns to draw: explicit bars, or every pattern touching an AOI.
#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    Patterns(Vec<String>),
    Aoi { ch: char, role: AoiRole },
}

/// Resolves a selection against a table; edge weights are pattern totals.
pub fn resolve_selection(
    table: &PatternTable,
    selection: &Selection,
) -> Result<Vec<PatternSelection>> {
    let patterns = match selection {
        Selection::Patterns(ids) => ids
            .iter()
            .map(|id| {
                let p = Pattern(id.clone());
                if table.counts.contains_key(&p) {
                    Ok(p)
                } else {
                    Err(Error::UnknownPattern(id.clone()))
                }
            })
            .collect::<Result<Vec<_>>>()?,
        Selection::Aoi { ch, role } => table.patterns_through_aoi(*ch, *role),
    };
    if patterns.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(patterns
        .into_iter()
        .map(|p| PatternSelection {
            weight: table.total(&p) as f64,
            pattern: p,
        })
        .collect())
}

/// Builds and runs the layout for a selection at the table's level.
pub fn compute_layout(
    tree: &AoiTree,
    table: &PatternTable,
    selection: &Selection,
    params: &LayoutParams,
) -> Result<TransitionGraph> {
    params.validate()?;
    let chosen = resolve_selection(table, selection)?;
    let cut = tree.cut_at_level(table.level)?;
    let mut graph = build_graph(&chosen, &cut, params.seed)?;
    run_layout(&mut graph, params);
    Ok(graph)
}

/// Layout JSON plus the visible AOIs with their display hues.
pub fn layout_response_json(
    tree: &AoiTree,
    level: usize,
    graph: &TransitionGraph,
) -> Result<Value> {
    let colors = assign_hues(tree);
    let aois: Vec<Value> = tree
        .cut_at_level(level)?
        .iter()
        .map(|e| {
            json!({
                "node": e.node,
                "label": e.label,
                "char": e.ch.to_string(),
                "rect": e.rect,
                "home": e.home,
                "hue": colors.hue(e.node).unwrap_or(0.0),
                "group": e.is_group,
            })
        })
        .collect();
    let mut out = layout_json(graph);
    out["aois"] = Value::Array(aois);
    out["level"] = json!(level);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::export::to_canonical_json;
    use crate::geometry::Rect;

    fn setup() -> (AoiTree, Vec<ScanPath>) {
        let tree = AoiTree::flat([
            ("a", Rect::new(0, 0, 10, 10)),
            ("b", Rect::new(20, 0, 10, 10)),
            ("c", Rect::new(40, 0, 10, 10)),
        ]);
        let xy = |s: &str| -> Vec<(f64, f64)> {
            s.chars()
                .map(|c| match c {
                    'A' => (5.0, 5.0),
                    'B' => (25.0, 5.0),
                    'C' => (45.0, 5.0),
                    _ => (100.0, 100.0),
                })
                .collect()
        };
        let paths = vec![
            ScanPath::from_xy("P1", &xy("AABB..CCAA")),
            ScanPath::from_xy("P2", &xy("AAB.BBCC")),
        ];
        (tree, paths)
    }

    #[test]
    fn mine_end_to_end() {
        let (tree, paths) = setup();
        let r = mine(
            &paths,
            &tree,
            MiningParams {
                level: 1,
                n: 2,
                tau: 2,
            },
        )
        .unwrap();
        assert_eq!(r.sequences[0].rle, "A2B2.2C2A2");
        assert_eq!(r.sequences[0].transitions, "ABCA");
        assert_eq!(r.sequences[1].transitions, "ABC");
        assert_eq!(r.table.total(&"AB".into()), 2);
        let v = mining_json(&r, &tree);
        assert_eq!(v["patterns"][0]["chars"], "AB");
        let back = table_from_json(&v).unwrap();
        assert_eq!(back, r.table);
    }

    #[test]
    fn invalid_params() {
        let (tree, paths) = setup();
        assert!(mine(
            &paths,
            &tree,
            MiningParams {
                level: 2,
                n: 2,
                tau: 1
            }
        )
        .is_err());
        assert!(mine(
            &paths,
            &tree,
            MiningParams {
                level: 1,
                n: 0,
                tau: 1
            }
        )
        .is_err());
    }

    #[test]
    fn selections() {
        let (tree, paths) = setup();
        let r = mine(
            &paths,
            &tree,
            MiningParams {
                level: 1,
                n: 2,
                tau: 1,
            },
        )
        .unwrap();
        assert_eq!(
            resolve_selection(&r.table, &Selection::Patterns(vec![])).unwrap_err(),
            Error::EmptySelection
        );
        assert!(matches!(
            resolve_selection(&r.table, &Selection::Patterns(vec!["ZZ".into()])),
            Err(Error::UnknownPattern(_))
        ));
        let starts = resolve_selection(
            &r.table,
            &Selection::Aoi {
                ch: 'A',
                role: AoiRole::Starts,
            },
        )
        .unwrap();
        assert!(starts.iter().all(|s| s.pattern.as_str().starts_with('A')));

        let params = LayoutParams {
            seed: 9,
            ..Default::default()
        };
        let sel = Selection::Patterns(vec!["AB".into()]);
        let g1 = compute_layout(&tree, &r.table, &sel, &params).unwrap();
        let g2 = compute_layout(&tree, &r.table, &sel, &params).unwrap();
        assert_eq!(g1.nodes.len(), 2);
        let j1 = to_canonical_json(&layout_response_json(&tree, 1, &g1).unwrap());
        let j2 = to_canonical_json(&layout_response_json(&tree, 1, &g2).unwrap());
        assert_eq!(j1, j2);
    }
}
