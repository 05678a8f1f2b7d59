//! Automatic AOI definition from the stimulus colors.
//!
//! Pipeline: mosaic + median-cut color reduction, fill passes to a
//! fixpoint, corner-traced candidate rectangles, then merge/remove
//! arrangement. The result is a flat [`AoiTree`].

mod arrange;
mod fill;
mod fit;
mod quantize;

use image::{Rgb, RgbImage};

pub use arrange::{adjoins, arrange, arrange_cells, to_pixels};
pub use fill::{fill_decision, fill_pass, fill_to_fixpoint, NEIGHBORS};
pub use fit::{fit_rectangles, CandidateRect};
pub use quantize::{
    median_cut, mosaic_and_quantize, CellGrid, DetectionParams, Label, BLANK_LABEL,
};

use crate::error::Result;
use crate::gaze::Stimulus;
use crate::geometry::Rect;
use crate::tree::AoiTree;

/// Intermediate products of one detection run.
#[derive(Debug, Clone)]
pub struct DetectionTrace {
    pub params: DetectionParams,
    pub quantized: CellGrid,
    pub filled: CellGrid,
    pub candidates: Vec<CandidateRect>,
    /// Final AOIs in pixels, reading order.
    pub rects: Vec<Rect>,
}

pub fn detect_with_trace(stimulus: &Stimulus, params: DetectionParams) -> Result<DetectionTrace> {
    let quantized = mosaic_and_quantize(stimulus, params)?;
    let mut filled = quantized.clone();
    fill_to_fixpoint(&mut filled);
    let candidates = fit_rectangles(&filled);
    let mut rects = arrange(
        &candidates,
        params.cell_size,
        stimulus.width,
        stimulus.height,
    );
    rects.sort_by_key(|r| (r.y, r.x));
    Ok(DetectionTrace {
        params,
        quantized,
        filled,
        candidates,
        rects,
    })
}

/// Detects AOIs and returns them as a flat tree, codes assigned in
/// top-to-bottom, left-to-right order of the rectangles.
pub fn detect_aois(stimulus: &Stimulus, params: DetectionParams) -> Result<AoiTree> {
    let trace = detect_with_trace(stimulus, params)?;
    Ok(tree_from_rects(&trace.rects))
}

pub fn tree_from_rects(rects: &[Rect]) -> AoiTree {
    AoiTree::flat(
        rects
            .iter()
            .enumerate()
            .map(|(i, r)| (format!("AOI {}", i + 1), *r)),
    )
}

const CANDIDATE_COLOR: Rgb<u8> = Rgb([255, 0, 0]);
const FINAL_COLOR: Rgb<u8> = Rgb([0, 200, 0]);

/// Debug raster: the filled, quantized mosaic with candidates outlined in
/// red and final AOIs in green.
pub fn debug_image(trace: &DetectionTrace, width: u32, height: u32) -> RgbImage {
    let z = trace.params.cell_size;
    let grid = &trace.filled;
    let mut img = RgbImage::from_fn(width, height, |x, y| {
        let label = grid.get((x / z) as i64, (y / z) as i64);
        Rgb(grid
            .palette
            .get(label as usize)
            .copied()
            .unwrap_or([0, 0, 0]))
    });
    let cells: Vec<Rect> = trace.candidates.iter().map(|c| c.rect).collect();
    for r in to_pixels(&cells, z, width, height) {
        outline(&mut img, r, CANDIDATE_COLOR);
    }
    for r in &trace.rects {
        outline(&mut img, *r, FINAL_COLOR);
    }
    img
}

fn outline(img: &mut RgbImage, r: Rect, color: Rgb<u8>) {
    let (x1, y1) = (r.right() - 1, r.bottom() - 1);
    for x in r.x..=x1 {
        img.put_pixel(x, r.y, color);
        img.put_pixel(x, y1, color);
    }
    for y in r.y..=y1 {
        img.put_pixel(r.x, y, color);
        img.put_pixel(x1, y, color);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks(w: u32, h: u32, rects: &[(Rect, [u8; 3])]) -> Stimulus {
        let img = RgbImage::from_fn(w, h, |x, y| {
            rects
                .iter()
                .find(|(r, _)| r.contains(x as f64, y as f64))
                .map_or(Rgb([255, 255, 255]), |(_, c)| Rgb(*c))
        });
        Stimulus::from_image(img).unwrap()
    }

    #[test]
    fn blank_image_has_no_aois() {
        let s = blocks(64, 48, &[]);
        let t = detect_aois(&s, DetectionParams::new(8, 4).unwrap()).unwrap();
        assert!(t.leaves().is_empty());
    }

    #[test]
    fn single_centered_block() {
        let s = blocks(160, 120, &[(Rect::new(50, 40, 60, 40), [20, 20, 160])]);
        let t = detect_aois(&s, DetectionParams::new(8, 4).unwrap()).unwrap();
        let leaves = t.leaves();
        assert_eq!(leaves.len(), 1);
        let r = leaves[0].rect().unwrap();
        assert!(r.x.abs_diff(50) <= 8 && r.right().abs_diff(110) <= 8);
        assert!(r.y.abs_diff(40) <= 8 && r.bottom().abs_diff(80) <= 8);
    }

    #[test]
    fn three_blocks_in_reading_order() {
        let truth = [
            (Rect::new(20, 20, 80, 50), [200, 30, 30]),
            (Rect::new(150, 24, 60, 60), [30, 30, 200]),
            (Rect::new(40, 120, 150, 40), [30, 140, 30]),
        ];
        let s = blocks(240, 180, &truth);
        let trace = detect_with_trace(&s, DetectionParams::new(8, 4).unwrap()).unwrap();
        assert_eq!(trace.rects.len(), 3);
        for (found, (want, _)) in trace.rects.iter().zip(&truth) {
            assert!(found.x.abs_diff(want.x) <= 8, "{found:?} vs {want:?}");
            assert!(found.right().abs_diff(want.right()) <= 8);
            assert!(found.y.abs_diff(want.y) <= 8);
            assert!(found.bottom().abs_diff(want.bottom()) <= 8);
        }
        let t = tree_from_rects(&trace.rects);
        assert_eq!(t.leaves().iter().map(|l| l.ch).collect::<String>(), "ABC");
        let img = debug_image(&trace, s.width, s.height);
        assert_eq!(
            *img.get_pixel(trace.rects[0].x, trace.rects[0].y),
            FINAL_COLOR
        );
    }

    #[test]
    fn detection_is_deterministic() {
        let s = blocks(
            200,
            100,
            &[
                (Rect::new(10, 10, 50, 30), [0, 0, 0]),
                (Rect::new(120, 40, 30, 50), [90, 10, 10]),
            ],
        );
        let p = DetectionParams::new(4, 4).unwrap();
        assert_eq!(detect_aois(&s, p).unwrap(), detect_aois(&s, p).unwrap());
    }
}
