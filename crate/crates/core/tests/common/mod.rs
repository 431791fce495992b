//! Shared helpers for the chamber fixture.

#![allow(dead_code)]

use std::path::PathBuf;

use fogsim::analysis::Rect;
use fogsim::scene::{parse_scene, Scene};

pub const PATCH_ROWS: usize = 4;
pub const PATCH_COLS: usize = 6;
pub const WHITE: usize = 18;
pub const NEUTRAL_8: usize = 19;
pub const NEUTRAL_3_5: usize = 22;
pub const BLACK: usize = 23;

const CAMERA_DISTANCE: f64 = 16.0;
const CAMERA_HEIGHT: f64 = 1.5;
const HALF_FOV_DEG: f64 = 7.0;

pub fn chamber_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/chamber.scene")
}

/// The chamber with a square `res x res` camera.
pub fn chamber(res: u32) -> Scene {
    let mut scene = parse_scene(&chamber_path()).expect("chamber fixture parses");
    scene.camera.as_mut().unwrap().resolution = (res, res);
    scene
}

/// Centre of checker patch `index` (row-major from the top-left) in metres.
pub fn patch_centre_m(index: usize) -> (f64, f64) {
    let (row, col) = (index / PATCH_COLS, index % PATCH_COLS);
    (-1.5 + 0.6 * col as f64, 2.4 - 0.6 * row as f64)
}

/// Pixel position of a point on the checker plane.
pub fn project(x: f64, y: f64, res: u32) -> (f64, f64) {
    let half = CAMERA_DISTANCE * HALF_FOV_DEG.to_radians().tan();
    let r = res as f64;
    ((x / half * 0.5 + 0.5) * r, (-(y - CAMERA_HEIGHT) / half * 0.5 + 0.5) * r)
}

/// Square regions inside each patch, `side_m` metres wide.
pub fn patch_rects(res: u32, side_m: f64) -> Vec<Rect> {
    let half = CAMERA_DISTANCE * HALF_FOV_DEG.to_radians().tan();
    let size = (side_m / (2.0 * half) * res as f64).floor() as usize;
    (0..PATCH_ROWS * PATCH_COLS)
        .map(|i| {
            let (x, y) = patch_centre_m(i);
            let (px, py) = project(x, y, res);
            Rect::centered(px.floor() as usize, py.floor() as usize, size)
        })
        .collect()
}
