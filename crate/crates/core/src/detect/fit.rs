//! Temporary AOI borders traced from region corners.

use super::quantize::{CellGrid, Label, BLANK_LABEL};
use crate::geometry::Rect;

/// Rectangle in cell coordinates, traced from one corner cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateRect {
    pub rect: Rect,
    pub corner: (u32, u32),
    pub color: Label,
}

/// Traces a candidate from every convex corner of every item region.
///
/// A corner is an item cell whose neighbors on one vertical and one
/// horizontal side have a different color. From it, two border lines run
/// along the same-colored cells away from those sides; the rectangle they
/// span is the candidate. A cell that is a corner in several orientations
/// emits each distinct rectangle once.
pub fn fit_rectangles(grid: &CellGrid) -> Vec<CandidateRect> {
    let mut out = Vec::new();
    for y in 0..grid.rows {
        for x in 0..grid.cols {
            let c = grid.get(x as i64, y as i64);
            if c == BLANK_LABEL {
                continue;
            }
            let same = |dx: i64, dy: i64| grid.get(x as i64 + dx, y as i64 + dy) == c;
            let mut emitted: Vec<Rect> = Vec::new();
            // (vertical open side, horizontal open side): N/S as dy, W/E as dx
            for (vy, hx) in [(-1, -1), (-1, 1), (1, 1), (1, -1)] {
                if same(0, vy) || same(hx, 0) {
                    continue;
                }
                let run = |dx: i64, dy: i64| {
                    let mut steps = 0i64;
                    while grid.get(x as i64 + dx * (steps + 1), y as i64 + dy * (steps + 1)) == c {
                        steps += 1;
                    }
                    steps
                };
                let horizontal = run(-hx, 0);
                let vertical = run(0, -vy);
                let (x0, x1) = if hx < 0 {
                    (x as i64, x as i64 + horizontal)
                } else {
                    (x as i64 - horizontal, x as i64)
                };
                let (y0, y1) = if vy < 0 {
                    (y as i64, y as i64 + vertical)
                } else {
                    (y as i64 - vertical, y as i64)
                };
                let rect = Rect::new(
                    x0 as u32,
                    y0 as u32,
                    (x1 - x0 + 1) as u32,
                    (y1 - y0 + 1) as u32,
                );
                if !emitted.contains(&rect) {
                    emitted.push(rect);
                    out.push(CandidateRect {
                        rect,
                        corner: (x, y),
                        color: c,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solid_block_gives_four_equal_candidates() {
        let g = CellGrid::from_rows(&["......", ".111..", ".111..", ".111..", ".111..", "......"]);
        let c = fit_rectangles(&g);
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|c| c.rect == Rect::new(1, 1, 3, 4)));
    }

    #[test]
    fn single_cell() {
        let g = CellGrid::from_rows(&["...", ".1.", "..."]);
        let c = fit_rectangles(&g);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].rect, Rect::new(1, 1, 1, 1));
    }

    #[test]
    fn empty_grid() {
        assert!(fit_rectangles(&CellGrid::from_rows(&["...", "..."])).is_empty());
    }
}
