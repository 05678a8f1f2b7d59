//! Fixture generators shared by the CLI tests and the acceptance suite.
#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Duration;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BIN: &str = env!("CARGO_BIN_EXE_aoigram");

pub fn aoigram(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("run aoigram")
}

pub const WHITE: [u8; 3] = [255, 255, 255];
/// Well separated item colors for detection fixtures.
pub const ITEM_COLORS: [[u8; 3]; 3] = [[210, 30, 30], [30, 40, 200], [20, 120, 30]];

/// `[x, y, w, h]` in pixels.
pub type Block = [u32; 4];

pub fn draw(width: u32, height: u32, blocks: &[(Block, [u8; 3])]) -> RgbImage {
    let mut img = RgbImage::from_pixel(width, height, Rgb(WHITE));
    for ([x, y, w, h], c) in blocks {
        for py in *y..y + h {
            for px in *x..x + w {
                img.put_pixel(px, py, Rgb(*c));
            }
        }
    }
    img
}

pub fn save_png(img: &RgbImage, path: &Path) {
    img.save_with_format(path, image::ImageFormat::Png)
        .expect("write png");
}

/// Random disjoint blocks whose gaps all exceed `gap` pixels.
pub fn random_blocks(
    rng: &mut ChaCha8Rng,
    width: u32,
    height: u32,
    count: usize,
    min_side: u32,
    gap: u32,
) -> Vec<Block> {
    let max_side = (width.min(height) / 3).max(min_side + 1);
    loop {
        let mut out: Vec<Block> = Vec::new();
        for _ in 0..2000 {
            if out.len() == count {
                break;
            }
            let w = rng.random_range(min_side..max_side);
            let h = rng.random_range(min_side..max_side);
            let x = rng.random_range(0..width - w);
            let y = rng.random_range(0..height - h);
            let far = out.iter().all(|&[ox, oy, ow, oh]| {
                x > ox + ow + gap || ox > x + w + gap || y > oy + oh + gap || oy > y + h + gap
            });
            if far {
                out.push([x, y, w, h]);
            }
        }
        if out.len() == count {
            return out;
        }
    }
}

/// Three side-by-side blocks on a 640×480 page; codes A, B, C left to right.
pub const PLANTED_BLOCKS: [Block; 3] = [
    [40, 140, 160, 200],
    [240, 140, 160, 200],
    [440, 140, 160, 200],
];

pub fn planted_image() -> RgbImage {
    let blocks: Vec<(Block, [u8; 3])> = PLANTED_BLOCKS
        .iter()
        .zip(ITEM_COLORS)
        .map(|(b, c)| (*b, c))
        .collect();
    draw(640, 480, &blocks)
}

fn point_in(rng: &mut ChaCha8Rng, b: Block) -> (f64, f64) {
    let [x, y, w, h] = b;
    (
        x as f64 + rng.random_range(4.0..w as f64 - 4.0),
        y as f64 + rng.random_range(4.0..h as f64 - 4.0),
    )
}

/// Planted A→B→C cycles with blank gaps, sub-threshold glances and rare
/// off-cycle detours. Each walk starts on A and ends on C.
fn planted_walk(rng: &mut ChaCha8Rng, cycles: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let dwell = |rng: &mut ChaCha8Rng, out: &mut Vec<(f64, f64)>, aoi: usize| {
        for _ in 0..rng.random_range(8..20) {
            out.push(point_in(rng, PLANTED_BLOCKS[aoi]));
        }
        if rng.random_bool(0.3) {
            // glance elsewhere for fewer samples than the dwell threshold
            let other = rng.random_range(0..3);
            for _ in 0..rng.random_range(1..4) {
                out.push(point_in(rng, PLANTED_BLOCKS[other]));
            }
        }
        if rng.random_bool(0.3) {
            for _ in 0..rng.random_range(1..10) {
                out.push((rng.random_range(0.0..640.0), rng.random_range(0.0..120.0)));
            }
        }
    };
    for c in 0..cycles {
        for aoi in 0..3 {
            dwell(rng, &mut out, aoi);
            let last = c + 1 == cycles && aoi == 2;
            if !last && rng.random_bool(0.04) {
                dwell(rng, &mut out, (aoi + 2) % 3);
            }
        }
    }
    out
}

/// Eight participants; P1 and P2 follow the same walk.
pub fn planted_gaze_csv(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared = planted_walk(&mut rng, 14);
    let mut out = String::from("participant,t,x,y\n");
    for p in 1..=8 {
        let walk = if p <= 2 {
            shared.clone()
        } else {
            let cycles = rng.random_range(10..18);
            planted_walk(&mut rng, cycles)
        };
        for (i, (x, y)) in walk.iter().enumerate() {
            out.push_str(&format!("P{p},{},{x:.2},{y:.2}\n", i * 16));
        }
    }
    out
}

/// Minimal HTTP/1.1 exchange; returns (status, body).
pub fn http(port: u16, method: &str, path: &str, body: Option<&str>) -> (u16, String) {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).expect("connect");
    stream
        .set_read_timeout(Some(Duration::from_secs(30)))
        .unwrap();
    let body = body.unwrap_or("");
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).unwrap();
    let text = String::from_utf8_lossy(&raw).into_owned();
    let (head, rest) = text.split_once("\r\n\r\n").expect("http head");
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    let chunked = head
        .to_ascii_lowercase()
        .contains("transfer-encoding: chunked");
    (
        status,
        if chunked {
            dechunk(rest)
        } else {
            rest.to_string()
        },
    )
}

fn dechunk(mut s: &str) -> String {
    let mut out = String::new();
    loop {
        let Some((size, rest)) = s.split_once("\r\n") else {
            return out;
        };
        let n = usize::from_str_radix(size.trim(), 16).unwrap_or(0);
        if n == 0 {
            return out;
        }
        out.push_str(&rest[..n]);
        s = &rest[n + 2..];
    }
}

pub fn free_port() -> u16 {
    std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port()
}

pub fn wait_for_port(port: u16) -> bool {
    for _ in 0..200 {
        if TcpStream::connect(("127.0.0.1", port)).is_ok() {
            return true;
        }
        std::thread::sleep(Duration::from_millis(25));
    }
    false
}
