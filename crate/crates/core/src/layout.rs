//! Force-directed transition graph constrained to AOI rectangles.
//!
//! Every selected pattern becomes its own chain of nodes. Nodes live in the
//! rectangle of the largest leaf of their visible AOI and never leave it.
//! Forces: springs along edges, repulsion between nodes sharing a
//! rectangle, and a linear pull toward the rectangle center. After the
//! force phase, same-AOI node pairs are swapped whenever that strictly
//! lowers the number of edge crossings.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::mining::Pattern;
use crate::tree::{CutEntry, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Start,
    Intermediate,
    End,
}

impl NodeRole {
    pub fn color(self) -> &'static str {
        match self {
            NodeRole::Start => "#e02020",
            NodeRole::Intermediate => "#909090",
            NodeRole::End => "#2040e0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: usize,
    /// Effective AOI code at the displayed level.
    pub aoi: char,
    #[serde(rename = "aoiNode")]
    pub aoi_node: NodeId,
    pub role: NodeRole,
    pub x: f64,
    pub y: f64,
    pub home: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    pub cross_group: bool,
    pub pattern: Pattern,
    pub highlighted: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransitionGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

/// A pattern chosen for display and the weight carried by its edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSelection {
    pub pattern: Pattern,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LayoutParams {
    pub iterations: usize,
    pub spring: f64,
    pub repulsion: f64,
    pub center: f64,
    pub step: f64,
    pub seed: u64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            iterations: 300,
            spring: 0.05,
            repulsion: 2000.0,
            center: 1.0,
            step: 0.05,
            seed: 0,
        }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.spring, self.repulsion, self.center, self.step]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0);
        if !finite {
            return Err(Error::InvalidArgument(
                "layout constants must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Spring rest length as a fraction of the smaller rect side.
const REST_FRACTION: f64 = 0.4;
/// Per-step movement cap as a fraction of the smaller rect side.
const MAX_MOVE_FRACTION: f64 = 0.25;
const JITTER_FRACTION: f64 = 0.05;

fn min_side(r: &Rect) -> f64 {
    r.w.min(r.h) as f64
}

/// Clamps one coordinate strictly inside `[lo, lo+len)` with a 1 px margin.
fn clamp_axis(v: f64, lo: u32, len: u32) -> f64 {
    let lo = lo as f64;
    let len = len as f64;
    if len <= 2.0 {
        return lo + len / 2.0;
    }
    v.clamp(lo + 1.0, lo + len - 1.0)
}

fn clamp_into(node: &mut GraphNode) {
    node.x = clamp_axis(node.x, node.home.x, node.home.w);
    node.y = clamp_axis(node.y, node.home.y, node.home.h);
}

/// Builds one node chain per selected pattern over the visible AOIs of a level cut.
pub fn build_graph(
    selection: &[PatternSelection],
    cut: &[CutEntry],
    seed: u64,
) -> Result<TransitionGraph> {
    let by_char: HashMap<char, &CutEntry> = cut.iter().map(|e| (e.ch, e)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = TransitionGraph::default();
    for sel in selection {
        let chars: Vec<char> = sel.pattern.chars().collect();
        let first = graph.nodes.len();
        for (i, &ch) in chars.iter().enumerate() {
            let entry = by_char.get(&ch).ok_or(Error::Unresolvable(ch))?;
            let role = if i == 0 {
                NodeRole::Start
            } else if i + 1 == chars.len() {
                NodeRole::End
            } else {
                NodeRole::Intermediate
            };
            let (cx, cy) = entry.home.center();
            let jitter = JITTER_FRACTION * min_side(&entry.home);
            let mut node = GraphNode {
                id: graph.nodes.len(),
                aoi: ch,
                aoi_node: entry.node,
                role,
                x: cx + rng.random_range(-1.0..=1.0) * jitter,
                y: cy + rng.random_range(-1.0..=1.0) * jitter,
                home: entry.home,
            };
            clamp_into(&mut node);
            graph.nodes.push(node);
        }
        for i in 1..chars.len() {
            let (a, b) = (by_char[&chars[i - 1]], by_char[&chars[i]]);
            graph.edges.push(GraphEdge {
                from: first + i - 1,
                to: first + i,
                weight: sel.weight,
                cross_group: a.parent != b.parent,
                pattern: sel.pattern.clone(),
                highlighted: false,
            });
        }
    }
    Ok(graph)
}

/// One explicit integration step followed by clamping into home rects.
pub fn layout_step(graph: &mut TransitionGraph, params: &LayoutParams) {
    let n = graph.nodes.len();
    let mut force = vec![(0.0f64, 0.0f64); n];

    for e in &graph.edges {
        let (a, b) = (&graph.nodes[e.from], &graph.nodes[e.to]);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let dist = dx.hypot(dy);
        if dist < 1e-9 {
            continue;
        }
        let rest = REST_FRACTION * (min_side(&a.home) + min_side(&b.home)) / 2.0;
        let f = params.spring * (dist - rest);
        let (fx, fy) = (f * dx / dist, f * dy / dist);
        force[e.from].0 += fx;
        force[e.from].1 += fy;
        force[e.to].0 -= fx;
        force[e.to].1 -= fy;
    }

    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&graph.nodes[i], &graph.nodes[j]);
            if a.home != b.home {
                continue;
            }
            let (mut dx, mut dy) = (a.x - b.x, a.y - b.y);
            let mut dist = dx.hypot(dy);
            if dist < 1e-6 {
                // coincident nodes: separate along a fixed index-dependent direction
                let angle = (i * 7 + j * 13) as f64;
                (dx, dy) = (angle.cos(), angle.sin());
                dist = 1e-6;
            }
            let d = dist.max(0.5);
            let f = params.repulsion / (d * d);
            let len = dx.hypot(dy);
            let (fx, fy) = (f * dx / len, f * dy / len);
            force[i].0 += fx;
            force[i].1 += fy;
            force[j].0 -= fx;
            force[j].1 -= fy;
        }
    }

    for (node, f) in graph.nodes.iter_mut().zip(force) {
        let (cx, cy) = node.home.center();
        let fx = f.0 + params.center * (cx - node.x);
        let fy = f.1 + params.center * (cy - node.y);
        let (mut mx, mut my) = (params.step * fx, params.step * fy);
        let cap = MAX_MOVE_FRACTION * min_side(&node.home);
        let len = mx.hypot(my);
        if len > cap {
            mx *= cap / len;
            my *= cap / len;
        }
        node.x += mx;
        node.y += my;
        clamp_into(node);
    }
}

type Point = (f64, f64);

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Proper crossing of segments `p1p2` and `p3p4`.
pub fn segments_cross(p1: Point, p2: Point, p3: Point, p4: Point) -> bool {
    let d1 = orient(p1, p2, p3);
    let d2 = orient(p1, p2, p4);
    let d3 = orient(p3, p4, p1);
    let d4 = orient(p3, p4, p2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn edges_cross(graph: &TransitionGraph, a: &GraphEdge, b: &GraphEdge) -> bool {
    if a.from == b.from || a.from == b.to || a.to == b.from || a.to == b.to {
        return false;
    }
    let p = |i: usize| (graph.nodes[i].x, graph.nodes[i].y);
    segments_cross(p(a.from), p(a.to), p(b.from), p(b.to))
}

/// Edge pairs (by index) that cross; edges sharing a node never count.
pub fn crossing_pairs(graph: &TransitionGraph) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..graph.edges.len() {
        for j in i + 1..graph.edges.len() {
            if edges_cross(graph, &graph.edges[i], &graph.edges[j]) {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn count_crossings(graph: &TransitionGraph) -> usize {
    crossing_pairs(graph).len()
}

fn swap_positions(graph: &mut TransitionGraph, a: usize, b: usize) {
    let (ax, ay) = (graph.nodes[a].x, graph.nodes[a].y);
    graph.nodes[a].x = graph.nodes[b].x;
    graph.nodes[a].y = graph.nodes[b].y;
    graph.nodes[b].x = ax;
    graph.nodes[b].y = ay;
}

/// For each crossing pair, tries swapping an endpoint of one edge with a
/// same-AOI endpoint of the other; keeps a swap only if the total crossing
/// count drops. Sweeps until no swap is kept. Returns the number of swaps.
pub fn swap_pass(graph: &mut TransitionGraph) -> usize {
    let mut current = count_crossings(graph);
    let mut swaps = 0;
    'sweep: loop {
        for (i, j) in crossing_pairs(graph) {
            let (e1, e2) = (&graph.edges[i], &graph.edges[j]);
            let candidates: Vec<(usize, usize)> = [e1.from, e1.to]
                .into_iter()
                .flat_map(|a| [e2.from, e2.to].map(|b| (a, b)))
                .filter(|&(a, b)| a != b && graph.nodes[a].home == graph.nodes[b].home)
                .collect();
            for (a, b) in candidates {
                swap_positions(graph, a, b);
                let after = count_crossings(graph);
                if after < current {
                    current = after;
                    swaps += 1;
                    continue 'sweep;
                }
                swap_positions(graph, a, b);
            }
        }
        return swaps;
    }
}

/// Runs the force phase, then swaps to a fixpoint.
pub fn run_layout(graph: &mut TransitionGraph, params: &LayoutParams) {
    for _ in 0..params.iterations {
        layout_step(graph, params);
    }
    swap_pass(graph);
}

/// Marks the edges of one pattern as highlighted (hover on its bar).
pub fn highlight_pattern(graph: &mut TransitionGraph, pattern: &Pattern) {
    for e in &mut graph.edges {
        e.highlighted = &e.pattern == pattern;
    }
}

/// Layout as canonical JSON: nodes and edges.
pub fn layout_json(graph: &TransitionGraph) -> serde_json::Value {
    let nodes: Vec<_> = graph
        .nodes
        .iter()
        .map(|n| {
            serde_json::json!({
                "id": n.id, "aoi": n.aoi.to_string(), "aoiNode": n.aoi_node, "role": n.role,
                "x": n.x, "y": n.y, "color": n.role.color(),
            })
        })
        .collect();
    let edges: Vec<_> = graph
        .edges
        .iter()
        .map(|e| {
            serde_json::json!({
                "from": e.from, "to": e.to, "weight": e.weight, "crossGroup": e.cross_group,
                "pattern": e.pattern, "highlighted": e.highlighted,
            })
        })
        .collect();
    serde_json::json!({ "nodes": nodes, "edges": edges })
}
