//! Hierarchical AOI tree.
//!
//! Leaves are rectangular AOIs; groups are internal nodes created by the
//! user. An implicit root group (id 0) always exists, so level 1 is defined
//! even for a flat tree. Trees are values: every edit returns a new tree.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::alphabet::{self, BLANK};
use crate::error::{Error, Result};
use crate::geometry::Rect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub const ROOT_ID: NodeId = NodeId(0);

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Leaf { rect: Rect },
    Group { children: Vec<AoiNode> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NodeJson", into = "NodeJson")]
pub struct AoiNode {
    pub id: NodeId,
    pub label: String,
    pub ch: char,
    pub kind: NodeKind,
}

impl AoiNode {
    pub fn leaf(id: u32, label: impl Into<String>, ch: char, rect: Rect) -> Self {
        AoiNode {
            id: NodeId(id),
            label: label.into(),
            ch,
            kind: NodeKind::Leaf { rect },
        }
    }

    pub fn group(id: u32, label: impl Into<String>, children: Vec<AoiNode>) -> Self {
        let mut node = AoiNode {
            id: NodeId(id),
            label: label.into(),
            ch: BLANK,
            kind: NodeKind::Group { children },
        };
        node.refresh_chars();
        node
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    pub fn rect(&self) -> Option<Rect> {
        match self.kind {
            NodeKind::Leaf { rect } => Some(rect),
            NodeKind::Group { .. } => None,
        }
    }

    pub fn children(&self) -> &[AoiNode] {
        match &self.kind {
            NodeKind::Leaf { .. } => &[],
            NodeKind::Group { children } => children,
        }
    }

    /// Leaves below (or equal to) this node, depth-first in child order.
    pub fn leaves(&self) -> Vec<&AoiNode> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a AoiNode>) {
        match &self.kind {
            NodeKind::Leaf { .. } => out.push(self),
            NodeKind::Group { children } => children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    /// Largest-area descendant leaf; equal areas resolve to the lowest id.
    pub fn largest_leaf(&self) -> Option<&AoiNode> {
        self.leaves().into_iter().min_by(|a, b| {
            let (ra, rb) = (a.rect().unwrap(), b.rect().unwrap());
            rb.area().cmp(&ra.area()).then(a.id.cmp(&b.id))
        })
    }

    /// Bounding box of all descendant leaf rects.
    pub fn bounds(&self) -> Option<Rect> {
        self.leaves()
            .into_iter()
            .filter_map(|l| l.rect())
            .reduce(|a, b| a.union(&b))
    }

    fn height(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf { .. } => 0,
            NodeKind::Group { children } => {
                children.iter().map(|c| c.height() + 1).max().unwrap_or(0)
            }
        }
    }

    fn find(&self, id: NodeId) -> Option<&AoiNode> {
        if self.id == id {
            return Some(self);
        }
        self.children().iter().find_map(|c| c.find(id))
    }

    fn parent_of(&self, id: NodeId) -> Option<&AoiNode> {
        for c in self.children() {
            if c.id == id {
                return Some(self);
            }
            if let Some(p) = c.parent_of(id) {
                return Some(p);
            }
        }
        None
    }

    fn find_mut(&mut self, id: NodeId) -> Option<&mut AoiNode> {
        if self.id == id {
            return Some(self);
        }
        match &mut self.kind {
            NodeKind::Leaf { .. } => None,
            NodeKind::Group { children } => children.iter_mut().find_map(|c| c.find_mut(id)),
        }
    }

    fn max_id(&self) -> u32 {
        self.children()
            .iter()
            .map(|c| c.max_id())
            .fold(self.id.0, u32::max)
    }

    /// Recomputes group chars bottom-up from their largest leaves.
    fn refresh_chars(&mut self) {
        if let NodeKind::Group { children } = &mut self.kind {
            children.iter_mut().for_each(|c| c.refresh_chars());
        }
        if !self.is_leaf() {
            self.ch = self.largest_leaf().map_or(BLANK, |l| l.ch);
        }
    }

    fn for_each<'a>(
        &'a self,
        depth: usize,
        parent: Option<NodeId>,
        f: &mut impl FnMut(&'a AoiNode, usize, Option<NodeId>),
    ) {
        f(self, depth, parent);
        for c in self.children() {
            c.for_each(depth + 1, Some(self.id), f);
        }
    }
}

/// One visible node of a level cut.
#[derive(Debug, Clone, PartialEq)]
pub struct CutEntry {
    pub node: NodeId,
    pub label: String,
    /// Effective code: the char of the largest descendant leaf.
    pub ch: char,
    /// Bounding box of the descendant leaves.
    pub rect: Rect,
    /// Rect of the largest descendant leaf.
    pub home: Rect,
    pub parent: NodeId,
    pub is_group: bool,
    pub leaf_chars: Vec<char>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    RootNotGroup,
    DuplicateId(NodeId),
    EmptyGroup(NodeId),
    EmptyRect(NodeId),
    InvalidChar(NodeId, char),
    DuplicateChar(char),
    Overlap(char, char),
    GroupCharMismatch {
        node: NodeId,
        expected: char,
        found: char,
    },
    OutOfBounds(NodeId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RootNotGroup => write!(f, "root-not-group"),
            Violation::DuplicateId(id) => write!(f, "duplicate-id({id})"),
            Violation::EmptyGroup(id) => write!(f, "empty-group({id})"),
            Violation::EmptyRect(id) => write!(f, "empty-rect({id})"),
            Violation::InvalidChar(id, c) => write!(f, "invalid-char({id},{c})"),
            Violation::DuplicateChar(c) => write!(f, "duplicate-char({c})"),
            Violation::Overlap(a, b) => write!(f, "overlap({a},{b})"),
            Violation::GroupCharMismatch {
                node,
                expected,
                found,
            } => {
                write!(f, "group-char({node}: expected {expected}, found {found})")
            }
            Violation::OutOfBounds(id) => write!(f, "out-of-bounds({id})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AoiTree {
    root: AoiNode,
}

impl Default for AoiTree {
    fn default() -> Self {
        Self::new()
    }
}

impl AoiTree {
    /// Tree with an empty root group.
    pub fn new() -> Self {
        AoiTree {
            root: AoiNode::group(ROOT_ID.0, "root", Vec::new()),
        }
    }

    /// Flat tree; leaves get ids 1.. and codes from the alphabet in order.
    pub fn flat<I, S>(leaves: I) -> Self
    where
        I: IntoIterator<Item = (S, Rect)>,
        S: Into<String>,
    {
        let children = leaves
            .into_iter()
            .enumerate()
            .map(|(i, (label, rect))| {
                AoiNode::leaf(i as u32 + 1, label, alphabet::char_at(i + 1), rect)
            })
            .collect();
        AoiTree {
            root: AoiNode::group(ROOT_ID.0, "root", children),
        }
    }

    /// Wraps a root without checking invariants; see [`AoiTree::validate`].
    pub fn from_root(root: AoiNode) -> Self {
        AoiTree { root }
    }

    pub fn root(&self) -> &AoiNode {
        &self.root
    }

    /// Longest root-to-leaf edge count, at least 1.
    pub fn depth(&self) -> usize {
        self.root.height().max(1)
    }

    pub fn leaves(&self) -> Vec<&AoiNode> {
        self.root.leaves()
    }

    pub fn find(&self, id: NodeId) -> Option<&AoiNode> {
        self.root.find(id)
    }

    pub fn parent_of(&self, id: NodeId) -> Option<&AoiNode> {
        self.root.parent_of(id)
    }

    pub fn leaf_by_char(&self, ch: char) -> Option<&AoiNode> {
        self.leaves().into_iter().find(|l| l.ch == ch)
    }

    /// Code of the leaf containing the point, or [`BLANK`].
    pub fn locate(&self, x: f64, y: f64) -> char {
        self.leaves()
            .into_iter()
            .find(|l| l.rect().is_some_and(|r| r.contains(x, y)))
            .map_or(BLANK, |l| l.ch)
    }

    pub fn check_level(&self, k: usize) -> Result<()> {
        let depth = self.depth();
        if k == 0 || k > depth {
            return Err(Error::LevelOutOfRange { k, depth });
        }
        Ok(())
    }

    /// Visible nodes at level `k`: leaves shallower than `k` plus groups at depth `k`.
    pub fn cut_at_level(&self, k: usize) -> Result<Vec<CutEntry>> {
        self.check_level(k)?;
        let mut out = Vec::new();
        cut_rec(&self.root, 0, k, &mut out);
        Ok(out)
    }

    /// Maps every leaf code to its effective code at level `k`.
    pub fn level_char_map(&self, k: usize) -> Result<HashMap<char, char>> {
        let mut map = HashMap::new();
        for entry in self.cut_at_level(k)? {
            for &c in &entry.leaf_chars {
                map.insert(c, entry.ch);
            }
        }
        Ok(map)
    }

    /// Adds a leaf under the root with the next free id and code.
    pub fn add_leaf(&self, label: impl Into<String>, rect: Rect) -> (AoiTree, NodeId) {
        let mut root = self.root.clone();
        let id = NodeId(root.max_id() + 1);
        let ch = alphabet::first_free(self.leaves().iter().map(|l| l.ch));
        if let NodeKind::Group { children } = &mut root.kind {
            children.push(AoiNode::leaf(id.0, label, ch, rect));
        }
        root.refresh_chars();
        (AoiTree { root }, id)
    }

    /// Removes a node and its subtree. Groups left empty are removed too.
    pub fn remove(&self, id: NodeId) -> Result<AoiTree> {
        if id == ROOT_ID || self.find(id).is_none() {
            return Err(Error::UnknownNode(id.0));
        }
        let mut root = self.root.clone();
        remove_rec(&mut root, id);
        root.refresh_chars();
        Ok(AoiTree { root })
    }

    /// Expands clicked nodes to the outermost group containing each, the
    /// selection rule used when picking AOIs on the stimulus.
    pub fn expand_selection(&self, clicked: &[NodeId]) -> Vec<NodeId> {
        let mut out = Vec::new();
        for &id in clicked {
            let top = self
                .root
                .children()
                .iter()
                .find(|c| c.find(id).is_some())
                .map(|c| c.id);
            if let Some(top) = top {
                if !out.contains(&top) {
                    out.push(top);
                }
            }
        }
        out
    }

    /// Inserts a new group as the parent of `members`, which must share a parent.
    pub fn make_group(&self, members: &[NodeId], label: Option<&str>) -> Result<(AoiTree, NodeId)> {
        let mut wanted: Vec<NodeId> = Vec::new();
        for &m in members {
            if !wanted.contains(&m) {
                wanted.push(m);
            }
        }
        let first = *wanted.first().ok_or(Error::EmptySelection)?;
        for &m in &wanted {
            if m == ROOT_ID || self.find(m).is_none() {
                return Err(Error::UnknownNode(m.0));
            }
        }
        let parent_id = self
            .parent_of(first)
            .map(|p| p.id)
            .ok_or(Error::UnknownNode(first.0))?;
        if wanted
            .iter()
            .any(|&m| self.parent_of(m).map(|p| p.id) != Some(parent_id))
        {
            return Err(Error::NotSiblings);
        }

        let mut root = self.root.clone();
        let new_id = NodeId(root.max_id() + 1);
        let parent = root.find_mut(parent_id).expect("parent exists");
        let NodeKind::Group { children } = &mut parent.kind else {
            unreachable!("parents are groups")
        };
        let insert_at = children
            .iter()
            .position(|c| wanted.contains(&c.id))
            .expect("member present");
        let (picked, rest): (Vec<AoiNode>, Vec<AoiNode>) = std::mem::take(children)
            .into_iter()
            .partition(|c| wanted.contains(&c.id));
        let kept_before = rest.iter().take(insert_at).count();
        let mut rest = rest;
        let label = label.map_or_else(|| format!("G{}", new_id.0), str::to_owned);
        rest.insert(kept_before, AoiNode::group(new_id.0, label, picked));
        *children = rest;
        root.refresh_chars();
        Ok((AoiTree { root }, new_id))
    }

    /// Removes a group node, splicing its children into its parent.
    pub fn ungroup(&self, id: NodeId) -> Result<AoiTree> {
        let node = self.find(id).ok_or(Error::UnknownNode(id.0))?;
        if id == ROOT_ID || node.is_leaf() {
            return Err(Error::InvalidArgument(format!(
                "node {id} is not a removable group"
            )));
        }
        let parent_id = self.parent_of(id).expect("non-root node has parent").id;
        let mut root = self.root.clone();
        let parent = root.find_mut(parent_id).expect("parent exists");
        if let NodeKind::Group { children } = &mut parent.kind {
            let pos = children
                .iter()
                .position(|c| c.id == id)
                .expect("child present");
            let removed = children.remove(pos);
            if let NodeKind::Group { children: inner } = removed.kind {
                for (i, c) in inner.into_iter().enumerate() {
                    children.insert(pos + i, c);
                }
            }
        }
        root.refresh_chars();
        Ok(AoiTree { root })
    }

    /// Checks every structural invariant; an empty list means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.root.is_leaf() {
            out.push(Violation::RootNotGroup);
        }
        let mut ids = HashSet::new();
        self.root.for_each(0, None, &mut |node, _, _| {
            if !ids.insert(node.id) {
                out.push(Violation::DuplicateId(node.id));
            }
            match &node.kind {
                NodeKind::Leaf { rect } => {
                    if rect.is_empty() {
                        out.push(Violation::EmptyRect(node.id));
                    }
                    if !alphabet::is_code_char(node.ch) {
                        out.push(Violation::InvalidChar(node.id, node.ch));
                    }
                }
                NodeKind::Group { children } => {
                    if children.is_empty() && node.id != self.root.id {
                        out.push(Violation::EmptyGroup(node.id));
                    }
                    let expected = node.largest_leaf().map_or(BLANK, |l| l.ch);
                    if expected != node.ch {
                        out.push(Violation::GroupCharMismatch {
                            node: node.id,
                            expected,
                            found: node.ch,
                        });
                    }
                }
            }
        });
        let leaves = self.leaves();
        let mut seen = HashSet::new();
        for l in &leaves {
            if !seen.insert(l.ch) {
                out.push(Violation::DuplicateChar(l.ch));
            }
        }
        for (i, a) in leaves.iter().enumerate() {
            for b in &leaves[i + 1..] {
                if a.rect().unwrap().intersects(&b.rect().unwrap()) {
                    out.push(Violation::Overlap(a.ch, b.ch));
                }
            }
        }
        out
    }

    /// [`AoiTree::validate`] plus the stimulus-bounds check.
    pub fn validate_within(&self, width: u32, height: u32) -> Vec<Violation> {
        let mut out = self.validate();
        for l in self.leaves() {
            if !l.rect().unwrap().within(width, height) {
                out.push(Violation::OutOfBounds(l.id));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serializes")
    }

    /// Parses the canonical tree JSON. Invariants are not checked here.
    pub fn from_json(text: &str) -> Result<AoiTree> {
        Ok(serde_json::from_str(text)?)
    }
}

fn cut_rec(node: &AoiNode, depth: usize, k: usize, out: &mut Vec<CutEntry>) {
    for child in node.children() {
        let d = depth + 1;
        if child.is_leaf() || d == k {
            let Some(largest) = child.largest_leaf() else {
                continue;
            };
            out.push(CutEntry {
                node: child.id,
                label: child.label.clone(),
                ch: largest.ch,
                rect: child.bounds().expect("has leaves"),
                home: largest.rect().expect("leaf rect"),
                parent: node.id,
                is_group: !child.is_leaf(),
                leaf_chars: child.leaves().iter().map(|l| l.ch).collect(),
            });
        } else {
            cut_rec(child, d, k, out);
        }
    }
}

fn remove_rec(node: &mut AoiNode, id: NodeId) -> bool {
    let NodeKind::Group { children } = &mut node.kind else {
        return false;
    };
    if let Some(pos) = children.iter().position(|c| c.id == id) {
        children.remove(pos);
        return true;
    }
    let mut removed = false;
    for c in children.iter_mut() {
        if remove_rec(c, id) {
            removed = true;
            break;
        }
    }
    if removed {
        children.retain(|c| c.is_leaf() || !c.children().is_empty());
    }
    removed
}

#[derive(Serialize, Deserialize)]
struct NodeJson {
    id: u32,
    label: String,
    #[serde(rename = "char")]
    ch: String,
    rect: Option<Rect>,
    #[serde(default)]
    children: Vec<NodeJson>,
}

impl TryFrom<NodeJson> for AoiNode {
    type Error = String;

    fn try_from(n: NodeJson) -> std::result::Result<Self, String> {
        let mut chars = n.ch.chars();
        let ch = match (chars.next(), chars.next()) {
            (Some(c), None) => c,
            _ => {
                return Err(format!(
                    "node {}: char must be a single character, got {:?}",
                    n.id, n.ch
                ))
            }
        };
        let kind = match n.rect {
            Some(rect) if n.children.is_empty() => NodeKind::Leaf { rect },
            Some(_) => return Err(format!("node {}: a leaf cannot have children", n.id)),
            None => NodeKind::Group {
                children: n
                    .children
                    .into_iter()
                    .map(AoiNode::try_from)
                    .collect::<std::result::Result<_, _>>()?,
            },
        };
        Ok(AoiNode {
            id: NodeId(n.id),
            label: n.label,
            ch,
            kind,
        })
    }
}

impl From<AoiNode> for NodeJson {
    fn from(n: AoiNode) -> Self {
        let (rect, children) = match n.kind {
            NodeKind::Leaf { rect } => (Some(rect), Vec::new()),
            NodeKind::Group { children } => {
                (None, children.into_iter().map(NodeJson::from).collect())
            }
        };
        NodeJson {
            id: n.id.0,
            label: n.label,
            ch: n.ch.to_string(),
            rect,
            children,
        }
    }
}
