//! Binary PPM rendering of a divergence matrix.

use toad::analysis::DivergenceMatrix;

const CELL: usize = 24;
const LOW: [f64; 3] = [255.0, 255.0, 255.0];
const HIGH: [f64; 3] = [8.0, 48.0, 107.0];

/// One `CELL`-pixel square per matrix entry, shaded from white at 0 to dark
/// blue at ln 2.
pub fn render(matrix: &DivergenceMatrix) -> Vec<u8> {
    let n = matrix.topics.len();
    let side = n * CELL;
    let mut out = format!("P6\n{side} {side}\n255\n").into_bytes();
    for y in 0..side {
        for x in 0..side {
            let v = matrix.get(y / CELL, x / CELL);
            let t = (v / std::f64::consts::LN_2).clamp(0.0, 1.0);
            for c in 0..3 {
                out.push((LOW[c] + t * (HIGH[c] - LOW[c])).round() as u8);
            }
        }
    }
    out
}
