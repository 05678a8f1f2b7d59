//! Hierarchy-aware hue assignment.
//!
//! Each node's color cost is its leaf count. The root holds one hue per
//! leaf, evenly spaced over [0, 300]; every node hands contiguous slices of
//! its list to its children, sized by their costs, so leaves in a common
//! group end up with neighboring hues.

use std::collections::HashMap;

use crate::tree::{AoiNode, AoiTree, NodeId};

pub const HUE_MIN: f64 = 0.0;
pub const HUE_MAX: f64 = 300.0;
/// HSL saturation and lightness shared by every AOI color.
pub const SATURATION: f64 = 0.70;
pub const LIGHTNESS: f64 = 0.50;
/// Opacity of AOI fills over the whitened stimulus.
pub const AOI_FILL_OPACITY: f64 = 0.35;

#[derive(Debug, Clone, PartialEq)]
pub struct NodeColor {
    pub cost: usize,
    /// Contiguous slice of the global hue list owned by this subtree.
    pub hues: Vec<f64>,
    pub display_hue: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ColorAssignment {
    pub nodes: HashMap<NodeId, NodeColor>,
}

impl ColorAssignment {
    pub fn hue(&self, id: NodeId) -> Option<f64> {
        self.nodes.get(&id).map(|c| c.display_hue)
    }
}

pub fn assign_costs(tree: &AoiTree) -> HashMap<NodeId, usize> {
    fn walk(node: &AoiNode, out: &mut HashMap<NodeId, usize>) -> usize {
        let cost = if node.is_leaf() {
            1
        } else {
            node.children().iter().map(|c| walk(c, out)).sum()
        };
        out.insert(node.id, cost);
        cost
    }
    let mut out = HashMap::new();
    walk(tree.root(), &mut out);
    out
}

/// `n` hues at regular intervals over [0, 300], endpoints included.
pub fn hue_list(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![HUE_MIN],
        _ => (0..n)
            .map(|i| HUE_MIN + (HUE_MAX - HUE_MIN) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn assign_hues(tree: &AoiTree) -> ColorAssignment {
    let costs = assign_costs(tree);
    let mut out = ColorAssignment::default();
    let hues = hue_list(costs[&tree.root().id]);
    distribute(tree.root(), &hues, &costs, &mut out);
    out
}

fn distribute(
    node: &AoiNode,
    hues: &[f64],
    costs: &HashMap<NodeId, usize>,
    out: &mut ColorAssignment,
) {
    let mut offset = 0;
    for child in node.children() {
        let cost = costs[&child.id];
        distribute(child, &hues[offset..offset + cost], costs, out);
        offset += cost;
    }
    let display_hue = if node.is_leaf() {
        hues[0]
    } else {
        node.largest_leaf()
            .and_then(|l| out.hue(l.id))
            .unwrap_or(HUE_MIN)
    };
    out.nodes.insert(
        node.id,
        NodeColor {
            cost: costs[&node.id],
            hues: hues.to_vec(),
            display_hue,
        },
    );
}

/// CSS color for a hue at the fixed saturation and lightness.
pub fn hsl_css(hue: f64) -> String {
    format!(
        "hsl({:.1},{:.0}%,{:.0}%)",
        hue,
        SATURATION * 100.0,
        LIGHTNESS * 100.0
    )
}
