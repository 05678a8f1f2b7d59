//! Repainting blank cells that close concavities or sharpen corners.

use super::quantize::{CellGrid, Label, BLANK_LABEL};

/// Neighbor offsets clockwise from north: N, NE, E, SE, S, SW, W, NW.
pub const NEIGHBORS: [(i64, i64); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

const DIAGONALS: [usize; 4] = [1, 3, 5, 7];

/// Decides the new color of a blank center cell from its eight neighbors
/// (ordered as [`NEIGHBORS`]).
///
/// - A: at least five neighbors share an item color, two or more of them diagonal.
/// - B: a diagonal neighbor and both orthogonal cells beside it share an item color.
///
/// A wins over B; among B arcs the first in NE, SE, SW, NW order wins.
pub fn fill_decision(n: [Label; 8]) -> Option<Label> {
    for &c in n.iter().filter(|&&c| c != BLANK_LABEL) {
        let total = n.iter().filter(|&&x| x == c).count();
        let diagonal = DIAGONALS.iter().filter(|&&i| n[i] == c).count();
        if total >= 5 && diagonal >= 2 {
            return Some(c);
        }
    }
    DIAGONALS.iter().find_map(|&d| {
        let c = n[d];
        (c != BLANK_LABEL && n[d - 1] == c && n[(d + 1) % 8] == c).then_some(c)
    })
}

fn neighbors(grid: &CellGrid, x: u32, y: u32) -> [Label; 8] {
    NEIGHBORS.map(|(dx, dy)| grid.get(x as i64 + dx, y as i64 + dy))
}

/// One in-place row-major pass. Returns the number of repainted cells.
pub fn fill_pass(grid: &mut CellGrid) -> usize {
    let mut changed = 0;
    for y in 0..grid.rows {
        for x in 0..grid.cols {
            if grid.get(x as i64, y as i64) != BLANK_LABEL {
                continue;
            }
            if let Some(c) = fill_decision(neighbors(grid, x, y)) {
                grid.set(x, y, c);
                changed += 1;
            }
        }
    }
    changed
}

/// Repeats [`fill_pass`] until nothing changes. Returns the pass count.
pub fn fill_to_fixpoint(grid: &mut CellGrid) -> usize {
    let bound = (grid.cols as usize * grid.rows as usize).max(1);
    for pass in 1..=bound {
        if fill_pass(grid) == 0 {
            return pass;
        }
    }
    bound
}
