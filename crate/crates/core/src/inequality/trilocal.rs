//! Quantifier-free form of the three-source chain inequality.
//!
//! With `I, J, K, L` the four quarter-normalized chain correlators, the
//! quantified constraint is cut out by a degree-9 polynomial `W = W1 + W2 g2`
//! written in the invariants
//!
//! ```text
//! f1 = I + J + K - L          f2 = J K - I L
//! f3 = I^2 + J^2 + K^2 + L^2  f4 = -I^2 J K + I J^2 L + I K^2 L - J K L^2
//! g2 = I^3 + J^3 + K^3 - L^3
//! ```
//!
//! Each table entry is `(coefficient, [e1, e2, e3, e4])` for the monomial
//! `f1^e1 f2^e2 f3^e3 f4^e4`.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrilocalInvariants {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub g2: f64,
}

pub fn trilocal_invariants(i: f64, j: f64, k: f64, l: f64) -> TrilocalInvariants {
    TrilocalInvariants {
        f1: i + j + k - l,
        f2: j * k - i * l,
        f3: i * i + j * j + k * k + l * l,
        f4: -i * i * j * k + i * j * j * l + i * k * k * l - j * k * l * l,
        g2: i.powi(3) + j.powi(3) + k.powi(3) - l.powi(3),
    }
}

fn eval_table(table: &[(i64, [u32; 4])], f: &TrilocalInvariants) -> f64 {
    let base = [f.f1, f.f2, f.f3, f.f4];
    table
        .iter()
        .map(|(c, e)| {
            *c as f64
                * base
                    .iter()
                    .zip(e)
                    .map(|(b, &p)| b.powi(p as i32))
                    .product::<f64>()
        })
        .sum()
}

/// `W(I, J, K, L)`; trilocal correlations in the orthant `I, J, K >= 0 >= L`
/// satisfy `W >= 0`.
pub fn trilocal_w(i: f64, j: f64, k: f64, l: f64) -> f64 {
    let f = trilocal_invariants(i, j, k, l);
    eval_table(&W1_TERMS, &f) + f.g2 * eval_table(&W2_TERMS, &f)
}

pub const W1_TERMS: [(i64, [u32; 4]); 73] = [
    (1, [8, 0, 0, 0]),
    (1, [7, 1, 0, 0]),
    (-18, [7, 0, 0, 0]),
    (-31, [6, 1, 0, 0]),
    (-6, [6, 0, 1, 0]),
    (20, [6, 0, 0, 0]),
    (-11, [5, 2, 0, 0]),
    (174, [5, 1, 0, 0]),
    (-6, [5, 1, 1, 0]),
    (74, [5, 0, 1, 0]),
    (2, [5, 0, 0, 1]),
    (-24, [5, 0, 0, 0]),
    (183, [4, 2, 0, 0]),
    (11, [4, 0, 2, 0]),
    (-148, [4, 1, 0, 0]),
    (130, [4, 1, 1, 0]),
    (-52, [4, 0, 1, 0]),
    (-30, [4, 0, 0, 1]),
    (8, [4, 0, 0, 0]),
    (40, [3, 3, 0, 0]),
    (-496, [3, 2, 0, 0]),
    (11, [3, 1, 2, 0]),
    (-60, [3, 0, 2, 0]),
    (88, [3, 1, 0, 0]),
    (45, [3, 2, 1, 0]),
    (-494, [3, 1, 1, 0]),
    (72, [3, 0, 1, 0]),
    (-14, [3, 1, 0, 1]),
    (-10, [3, 0, 1, 1]),
    (-180, [3, 0, 0, 1]),
    (-312, [2, 3, 0, 0]),
    (-6, [2, 0, 3, 0]),
    (288, [2, 2, 0, 0]),
    (-117, [2, 1, 2, 0]),
    (-24, [2, 0, 2, 0]),
    (-24, [2, 1, 0, 0]),
    (-510, [2, 2, 1, 0]),
    (300, [2, 1, 1, 0]),
    (-24, [2, 0, 1, 0]),
    (-108, [2, 1, 0, 1]),
    (90, [2, 0, 1, 1]),
    (120, [2, 0, 0, 1]),
    (-48, [1, 4, 0, 0]),
    (384, [1, 3, 0, 0]),
    (-6, [1, 1, 3, 0]),
    (-42, [1, 2, 2, 0]),
    (120, [1, 1, 2, 0]),
    (-84, [1, 3, 1, 0]),
    (-144, [1, 2, 0, 0]),
    (828, [1, 2, 1, 0]),
    (-120, [1, 1, 1, 0]),
    (24, [1, 2, 0, 1]),
    (12, [1, 0, 2, 1]),
    (888, [1, 1, 0, 1]),
    (36, [1, 1, 1, 1]),
    (336, [1, 0, 1, 1]),
    (-144, [1, 0, 0, 1]),
    (48, [0, 4, 0, 0]),
    (-288, [0, 3, 0, 0]),
    (6, [0, 1, 3, 0]),
    (48, [0, 2, 0, 0]),
    (135, [0, 2, 2, 0]),
    (24, [0, 1, 2, 0]),
    (-324, [0, 0, 0, 2]),
    (432, [0, 3, 1, 0]),
    (-120, [0, 2, 1, 0]),
    (24, [0, 1, 1, 0]),
    (768, [0, 2, 0, 1]),
    (12, [0, 0, 2, 1]),
    (-336, [0, 1, 0, 1]),
    (84, [0, 1, 1, 1]),
    (48, [0, 0, 1, 1]),
    (48, [0, 0, 0, 1]),
];

pub const W2_TERMS: [(i64, [u32; 4]); 28] = [
    (2, [5, 0, 0, 0]),
    (2, [4, 1, 0, 0]),
    (-36, [4, 0, 0, 0]),
    (-56, [3, 1, 0, 0]),
    (-6, [3, 0, 1, 0]),
    (40, [3, 0, 0, 0]),
    (-16, [2, 2, 0, 0]),
    (240, [2, 1, 0, 0]),
    (-6, [2, 1, 1, 0]),
    (40, [2, 0, 1, 0]),
    (4, [2, 0, 0, 1]),
    (-48, [2, 0, 0, 0]),
    (192, [1, 2, 0, 0]),
    (4, [1, 0, 2, 0]),
    (-176, [1, 1, 0, 0]),
    (68, [1, 1, 1, 0]),
    (16, [1, 0, 1, 0]),
    (-72, [1, 0, 0, 1]),
    (16, [1, 0, 0, 0]),
    (32, [0, 3, 0, 0]),
    (-320, [0, 2, 0, 0]),
    (4, [0, 1, 2, 0]),
    (32, [0, 1, 0, 0]),
    (24, [0, 2, 1, 0]),
    (-40, [0, 1, 1, 0]),
    (-16, [0, 1, 0, 1]),
    (-8, [0, 0, 1, 1]),
    (-144, [0, 0, 0, 1]),
];
