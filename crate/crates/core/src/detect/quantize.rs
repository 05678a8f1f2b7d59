//! Mosaic and median-cut color reduction.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::gaze::Stimulus;

/// Cell color label; 0 is the blank (background) color.
pub type Label = u16;
pub const BLANK_LABEL: Label = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionParams {
    /// Mosaic cell size in pixels.
    pub cell_size: u32,
    /// Number of colors after reduction, blank included.
    pub colors: u32,
}

impl DetectionParams {
    pub fn new(cell_size: u32, colors: u32) -> Result<Self> {
        let p = DetectionParams { cell_size, colors };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell_size < 1 {
            return Err(Error::InvalidArgument(
                "cell size must be at least 1".into(),
            ));
        }
        if self.colors < 2 || self.colors > Label::MAX as u32 {
            return Err(Error::InvalidArgument("colors must be at least 2".into()));
        }
        Ok(())
    }
}

/// Mosaic of color labels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellGrid {
    pub cols: u32,
    pub rows: u32,
    pub cells: Vec<Label>,
    /// RGB per label; index 0 is the blank color.
    pub palette: Vec<[u8; 3]>,
}

impl CellGrid {
    pub fn new(cols: u32, rows: u32, cells: Vec<Label>) -> Self {
        assert_eq!(
            cells.len(),
            (cols * rows) as usize,
            "cell count must match grid size"
        );
        let max = cells.iter().copied().max().unwrap_or(0);
        let palette = (0..=max)
            .map(|l| if l == 0 { [255, 255, 255] } else { [0, 0, 0] })
            .collect();
        CellGrid {
            cols,
            rows,
            cells,
            palette,
        }
    }

    /// Parses rows of characters: `.` blank, `1`-`9` item labels.
    pub fn from_rows(rows: &[&str]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len()) as u32;
        let cells = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| c.to_digit(10).unwrap_or(0) as Label))
            .collect();
        CellGrid::new(cols, rows.len() as u32, cells)
    }

    pub fn get(&self, x: i64, y: i64) -> Label {
        if x < 0 || y < 0 || x >= self.cols as i64 || y >= self.rows as i64 {
            return BLANK_LABEL;
        }
        self.cells[(y as u32 * self.cols + x as u32) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, label: Label) {
        self.cells[(y * self.cols + x) as usize] = label;
    }

    pub fn blank_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == BLANK_LABEL).count()
    }
}

/// Averages `cell_size`² blocks, reduces them to at most `colors` palette
/// entries by median cut, and labels the palette entry covering the most
/// pixels as blank.
pub fn mosaic_and_quantize(stimulus: &Stimulus, params: DetectionParams) -> Result<CellGrid> {
    params.validate()?;
    let z = params.cell_size;
    let cols = stimulus.width.div_ceil(z);
    let rows = stimulus.height.div_ceil(z);
    let mut sums = vec![[0u64; 4]; (cols * rows) as usize];
    for (x, y, px) in stimulus.image.enumerate_pixels() {
        let s = &mut sums[((y / z) * cols + x / z) as usize];
        s[0] += px[0] as u64;
        s[1] += px[1] as u64;
        s[2] += px[2] as u64;
        s[3] += 1;
    }
    let mean: Vec<[u8; 3]> = sums
        .iter()
        .map(|s| {
            let avg = |v: u64| ((v as f64 / s[3] as f64).round()) as u8;
            [avg(s[0]), avg(s[1]), avg(s[2])]
        })
        .collect();

    let mut histogram: BTreeMap<[u8; 3], u64> = BTreeMap::new();
    for (color, s) in mean.iter().zip(&sums) {
        *histogram.entry(*color).or_insert(0) += s[3];
    }
    let palette = median_cut(&histogram, params.colors as usize);

    let mut nearest_cache: HashMap<[u8; 3], usize> = HashMap::new();
    let raw: Vec<usize> = mean
        .iter()
        .map(|c| {
            *nearest_cache
                .entry(*c)
                .or_insert_with(|| nearest(&palette, *c))
        })
        .collect();
    let mut coverage = vec![0u64; palette.len()];
    for (&p, s) in raw.iter().zip(&sums) {
        coverage[p] += s[3];
    }
    let blank = (0..palette.len())
        .max_by(|&a, &b| coverage[a].cmp(&coverage[b]).then(b.cmp(&a)))
        .expect("palette is non-empty");

    let mut relabel = vec![0 as Label; palette.len()];
    let mut ordered = vec![palette[blank]];
    for (i, color) in palette.iter().enumerate().filter(|&(i, _)| i != blank) {
        relabel[i] = ordered.len() as Label;
        ordered.push(*color);
    }
    Ok(CellGrid {
        cols,
        rows,
        cells: raw.iter().map(|&p| relabel[p]).collect(),
        palette: ordered,
    })
}

fn nearest(palette: &[[u8; 3]], c: [u8; 3]) -> usize {
    let dist = |p: &[u8; 3]| {
        (0..3)
            .map(|i| (p[i] as i32 - c[i] as i32).pow(2))
            .sum::<i32>()
    };
    (0..palette.len())
        .min_by_key(|&i| (dist(&palette[i]), i))
        .expect("non-empty palette")
}

type ColorBox = Vec<([u8; 3], u64)>;

fn channel_range(b: &ColorBox, ch: usize) -> u8 {
    let lo = b.iter().map(|(c, _)| c[ch]).min().unwrap_or(0);
    let hi = b.iter().map(|(c, _)| c[ch]).max().unwrap_or(0);
    hi - lo
}

/// Widest channel of a box; ties prefer R, then G, then B.
fn widest_channel(b: &ColorBox) -> (usize, u8) {
    (0..3)
        .map(|ch| (ch, channel_range(b, ch)))
        .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Weighted median cut. Repeatedly splits the box with the widest channel
/// range at the pixel-weighted median of that channel.
pub fn median_cut(histogram: &BTreeMap<[u8; 3], u64>, colors: usize) -> Vec<[u8; 3]> {
    let mut boxes: Vec<ColorBox> = vec![histogram.iter().map(|(c, w)| (*c, *w)).collect()];
    while boxes.len() < colors {
        let pick = boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| b.len() > 1)
            .map(|(i, b)| (i, widest_channel(b)))
            .fold(None::<(usize, (usize, u8))>, |best, cur| match best {
                Some(b) if b.1 .1 >= cur.1 .1 => Some(b),
                _ => Some(cur),
            });
        let Some((index, (channel, _))) = pick else {
            break;
        };
        let mut b = boxes.remove(index);
        b.sort_by_key(|(c, _)| (c[channel], *c));
        let total: u64 = b.iter().map(|(_, w)| w).sum();
        let mut acc = 0;
        let mut split = b.len() - 1;
        for (i, (_, w)) in b.iter().enumerate() {
            acc += w;
            if acc * 2 >= total {
                split = i + 1;
                break;
            }
        }
        let split = split.clamp(1, b.len() - 1);
        let upper = b.split_off(split);
        boxes.insert(index, upper);
        boxes.insert(index, b);
    }
    boxes
        .iter()
        .map(|b| {
            let total: u64 = b.iter().map(|(_, w)| w).sum::<u64>().max(1);
            let avg = |ch: usize| {
                (b.iter().map(|(c, w)| c[ch] as u64 * w).sum::<u64>() as f64 / total as f64).round()
                    as u8
            };
            [avg(0), avg(1), avg(2)]
        })
        .collect()
}
