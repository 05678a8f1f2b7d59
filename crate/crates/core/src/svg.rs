//! SVG overlay: whitened stimulus, colored AOI rectangles, transition graph.

use std::fmt::Write;

use base64::Engine;

use crate::color::{assign_hues, hsl_css, AOI_FILL_OPACITY};
use crate::error::Result;
use crate::layout::TransitionGraph;
use crate::tree::AoiTree;

/// Opacity of the stimulus drawn over white.
pub const STIMULUS_OPACITY: f64 = 0.35;
pub const CROSS_GROUP_COLOR: &str = "#ffe600";
const NODE_RADIUS: f64 = 5.0;

pub struct SvgScene<'a> {
    pub width: u32,
    pub height: u32,
    /// Encoded PNG to embed under the overlay.
    pub image_png: Option<&'a [u8]>,
    pub tree: &'a AoiTree,
    pub level: usize,
    pub graph: Option<&'a TransitionGraph>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Gray level for an edge: heavier transitions are darker.
fn edge_gray(weight: f64, max_weight: f64) -> String {
    let ratio = if max_weight > 0.0 {
        (weight / max_weight).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let level = (200.0 - 170.0 * ratio).round() as u8;
    format!("#{level:02x}{level:02x}{level:02x}")
}

pub fn render_svg(scene: &SvgScene<'_>) -> Result<String> {
    let (w, h) = (scene.width, scene.height);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        s,
        r##"<defs><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" orient="auto-start-reverse"><polygon points="0,0 10,5 0,10" fill="#333333"/></marker></defs>"##
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
    );
    if let Some(png) = scene.image_png {
        let data = base64::engine::general_purpose::STANDARD.encode(png);
        let _ = writeln!(
            s,
            r#"<image x="0" y="0" width="{w}" height="{h}" opacity="{STIMULUS_OPACITY}" href="data:image/png;base64,{data}"/>"#
        );
    }

    let colors = assign_hues(scene.tree);
    let _ = writeln!(s, r#"<g class="aois">"#);
    for entry in scene.tree.cut_at_level(scene.level)? {
        let hue = colors.hue(entry.node).unwrap_or(0.0);
        let fill = hsl_css(hue);
        let node = scene.tree.find(entry.node).expect("cut node exists");
        for leaf in node.leaves() {
            let r = leaf.rect().expect("leaf rect");
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" fill-opacity="{AOI_FILL_OPACITY}" stroke="{fill}" stroke-width="1"/>"#,
                r.x, r.y, r.w, r.h
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="black">{}:{}</text>"#,
                r.x + 3,
                r.bottom().saturating_sub(4),
                leaf.id,
                escape(&entry.ch.to_string())
            );
        }
    }
    let _ = writeln!(s, "</g>");

    if let Some(graph) = scene.graph {
        let max_weight = graph.edges.iter().map(|e| e.weight).fold(0.0, f64::max);
        let _ = writeln!(s, r#"<g class="edges">"#);
        for e in &graph.edges {
            let (a, b) = (&graph.nodes[e.from], &graph.nodes[e.to]);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len = dx.hypot(dy);
            // stop at the target circle so the arrowhead stays visible
            let shrink = if len > 2.0 * NODE_RADIUS {
                NODE_RADIUS / len
            } else {
                0.0
            };
            let (ex, ey) = (b.x - dx * shrink, b.y - dy * shrink);
            let stroke = if e.cross_group {
                CROSS_GROUP_COLOR.to_string()
            } else {
                edge_gray(e.weight, max_weight)
            };
            let width = if e.highlighted { 5 } else { 2 };
            let _ = writeln!(
                s,
                r#"<path d="M {:.2} {:.2} L {:.2} {:.2}" stroke="{stroke}" stroke-width="{width}" fill="none" marker-end="url(#arrow)" data-pattern="{}"/>"#,
                a.x,
                a.y,
                ex,
                ey,
                escape(e.pattern.as_str())
            );
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<g class="nodes">"#);
        for n in &graph.nodes {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="{NODE_RADIUS}" fill="{}" stroke="white" stroke-width="1"/>"#,
                n.x,
                n.y,
                n.role.color()
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}
