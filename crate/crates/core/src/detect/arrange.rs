//! Merging and pruning of temporary AOI borders.

use super::fit::CandidateRect;
use crate::geometry::Rect;

/// Whether `a` grown by one cell on every side meets `b`.
pub fn adjoins(a: &Rect, b: &Rect) -> bool {
    let grown = Rect::new(
        a.x.saturating_sub(1),
        a.y.saturating_sub(1),
        a.w + 1 + a.x.min(1),
        a.h + 1 + a.y.min(1),
    );
    grown.intersects(b)
}

/// Resolves adjoining or overlapping candidates in cell space.
///
/// Identical rects are deduplicated. Then, until no pair adjoins, the first
/// adjoining pair is merged into its bounding box when that box meets no
/// other rect; otherwise the smaller of the two is dropped (the later one
/// on equal area).
pub fn arrange_cells(candidates: &[CandidateRect]) -> Vec<Rect> {
    let mut rects: Vec<Rect> = Vec::new();
    for c in candidates {
        if !rects.contains(&c.rect) {
            rects.push(c.rect);
        }
    }
    while let Some((i, j)) = first_adjoining_pair(&rects) {
        let merged = rects[i].union(&rects[j]);
        let swallows_other = rects
            .iter()
            .enumerate()
            .any(|(k, r)| k != i && k != j && merged.intersects(r));
        if !swallows_other {
            rects[i] = merged;
            rects.remove(j);
        } else if rects[i].area() < rects[j].area() {
            rects.remove(i);
        } else {
            rects.remove(j);
        }
    }
    rects
}

fn first_adjoining_pair(rects: &[Rect]) -> Option<(usize, usize)> {
    (0..rects.len()).find_map(|i| {
        (i + 1..rects.len())
            .find(|&j| adjoins(&rects[i], &rects[j]))
            .map(|j| (i, j))
    })
}

/// Scales cell rects to pixels and clamps them to the stimulus.
pub fn to_pixels(cells: &[Rect], cell_size: u32, width: u32, height: u32) -> Vec<Rect> {
    cells
        .iter()
        .map(|r| {
            let x = (r.x * cell_size).min(width);
            let y = (r.y * cell_size).min(height);
            let right = (r.right() * cell_size).min(width);
            let bottom = (r.bottom() * cell_size).min(height);
            Rect::new(x, y, right - x, bottom - y)
        })
        .filter(|r| !r.is_empty())
        .collect()
}

/// [`arrange_cells`] followed by [`to_pixels`].
pub fn arrange(candidates: &[CandidateRect], cell_size: u32, width: u32, height: u32) -> Vec<Rect> {
    to_pixels(&arrange_cells(candidates), cell_size, width, height)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(x: u32, y: u32, w: u32, h: u32) -> CandidateRect {
        CandidateRect {
            rect: Rect::new(x, y, w, h),
            corner: (x, y),
            color: 1,
        }
    }

    #[test]
    fn adjacency_includes_touching_and_diagonal() {
        let a = Rect::new(2, 2, 2, 2);
        assert!(adjoins(&a, &Rect::new(4, 2, 1, 1)));
        assert!(adjoins(&a, &Rect::new(4, 4, 1, 1)));
        assert!(!adjoins(&a, &Rect::new(5, 2, 1, 1)));
        assert!(adjoins(&Rect::new(0, 0, 1, 1), &Rect::new(1, 0, 1, 1)));
    }

    #[test]
    fn disjoint_rects_unchanged() {
        let out = arrange_cells(&[cand(0, 0, 2, 2), cand(5, 5, 2, 2)]);
        assert_eq!(out, vec![Rect::new(0, 0, 2, 2), Rect::new(5, 5, 2, 2)]);
    }

    #[test]
    fn overlapping_pair_merges() {
        let out = arrange_cells(&[cand(0, 0, 3, 3), cand(2, 2, 3, 3)]);
        assert_eq!(out, vec![Rect::new(0, 0, 5, 5)]);
    }

    #[test]
    fn smaller_removed_when_merge_would_swallow_third() {
        // Bounding box of the first two is [0,0,10,10], which contains the third.
        let out = arrange_cells(&[cand(0, 0, 4, 4), cand(3, 3, 7, 7), cand(0, 8, 1, 1)]);
        assert_eq!(out, vec![Rect::new(3, 3, 7, 7), Rect::new(0, 8, 1, 1)]);
    }

    #[test]
    fn pixel_conversion_clamps() {
        let px = to_pixels(&[Rect::new(2, 0, 3, 1)], 10, 45, 100);
        assert_eq!(px, vec![Rect::new(20, 0, 25, 10)]);
    }
}
