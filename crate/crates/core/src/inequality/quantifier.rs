//! Minimization of `F(q) = sum_g w_g(q) S_g + C` over the open box `(0,1)^k`.
//!
//! `F` is affine in each `1/q_j` and `1/(1-q_j)`, so along one coordinate it
//! has the shape `A/q + B/(1-q) + C`, whose minimizer is
//! `sqrt(A)/(sqrt(A)+sqrt(B))` when `A, B >= 0`. With every `S_g > 0` the
//! function is convex and cyclic exact coordinate minimization converges to
//! the global minimum. Otherwise we multistart, and a negative `A` or `B`
//! certifies that `F` is unbounded below.

use super::{Branch, QuantifierFactor};

/// Interior clamp for coordinates whose optimum would land on the boundary.
pub const BOUNDARY_EPS: f64 = 1e-12;

const MAX_SWEEPS: usize = 200_000;
const STEP_TOL: f64 = 1e-13;
const DECREASE_TOL: f64 = 1e-16;
const START_OFFSET: f64 = 1e-3;
const MAX_GRID_DIM: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub enum Descent {
    Converged {
        value: f64,
        q: Vec<f64>,
        /// objective at the start and after each sweep
        trace: Vec<f64>,
    },
    /// `F` decreases without bound along coordinate `j` starting from `q`.
    Unbounded { q: Vec<f64>, j: usize },
}

impl Descent {
    pub fn value(&self) -> f64 {
        match self {
            Descent::Converged { value, .. } => *value,
            Descent::Unbounded { .. } => f64::NEG_INFINITY,
        }
    }

    pub fn q(&self) -> &[f64] {
        match self {
            Descent::Converged { q, .. } | Descent::Unbounded { q, .. } => q,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantifierProblem {
    k: usize,
    groups: Vec<(Vec<QuantifierFactor>, f64)>,
    constant: f64,
}

impl QuantifierProblem {
    /// Groups with zero value are dropped, factorless groups fold into the
    /// constant.
    pub fn new(
        k: usize,
        groups: impl IntoIterator<Item = (Vec<QuantifierFactor>, f64)>,
        constant: f64,
    ) -> Self {
        let mut constant = constant;
        let mut kept = Vec::new();
        for (factors, value) in groups {
            if value == 0.0 {
                continue;
            }
            if factors.is_empty() {
                constant += value;
            } else {
                kept.push((factors, value));
            }
        }
        Self {
            k,
            groups: kept,
            constant,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn is_convex(&self) -> bool {
        self.groups.iter().all(|(_, v)| *v > 0.0)
    }

    pub fn objective(&self, q: &[f64]) -> f64 {
        self.constant
            + self
                .groups
                .iter()
                .map(|(f, v)| f.iter().map(|x| x.weight(q)).product::<f64>() * v)
                .sum::<f64>()
    }

    /// `(A, B, C, has_plus, has_minus)` for coordinate `j` at `q`.
    fn coordinate(&self, q: &[f64], j: usize) -> (f64, f64, f64, bool, bool) {
        let (mut a, mut b, mut c) = (0.0, 0.0, self.constant);
        let (mut has_plus, mut has_minus) = (false, false);
        for (factors, v) in &self.groups {
            let mut rest = *v;
            let mut side = None;
            for f in factors {
                if f.j == j {
                    side = Some(f.branch);
                } else {
                    rest *= f.weight(q);
                }
            }
            match side {
                Some(Branch::Plus) => {
                    a += rest;
                    has_plus = true;
                }
                Some(Branch::Minus) => {
                    b += rest;
                    has_minus = true;
                }
                None => c += rest,
            }
        }
        (a, b, c, has_plus, has_minus)
    }

    /// Cyclic exact coordinate minimization from `start`.
    pub fn descend(&self, start: Vec<f64>) -> Descent {
        let mut q = start;
        let mut f = self.objective(&q);
        let mut trace = vec![f];
        for _ in 0..MAX_SWEEPS {
            let mut step: f64 = 0.0;
            for j in 0..self.k {
                let (a, b, _, has_plus, has_minus) = self.coordinate(&q, j);
                if (has_plus && a < 0.0) || (has_minus && b < 0.0) {
                    return Descent::Unbounded { q, j };
                }
                let next = match (has_plus, has_minus) {
                    (false, false) => q[j],
                    (true, false) => 1.0,
                    (false, true) => 0.0,
                    (true, true) => {
                        let (ra, rb) = (a.sqrt(), b.sqrt());
                        if ra + rb == 0.0 {
                            q[j]
                        } else {
                            (ra / (ra + rb)).clamp(BOUNDARY_EPS, 1.0 - BOUNDARY_EPS)
                        }
                    }
                };
                step = step.max((next - q[j]).abs());
                q[j] = next;
            }
            let g = self.objective(&q);
            trace.push(g);
            let decrease = f - g;
            f = g;
            if step <= STEP_TOL || decrease <= DECREASE_TOL * f.abs().max(1.0) {
                break;
            }
        }
        Descent::Converged { value: f, q, trace }
    }

    fn starts(&self) -> Vec<Vec<f64>> {
        let mut starts = vec![vec![0.5; self.k]];
        if self.is_convex() || self.k == 0 {
            return starts;
        }
        let levels = [START_OFFSET, 0.5, 1.0 - START_OFFSET];
        if self.k <= MAX_GRID_DIM {
            let total = 3usize.pow(self.k as u32);
            for mut code in 1..total {
                let mut s = Vec::with_capacity(self.k);
                for _ in 0..self.k {
                    s.push(levels[code % 3]);
                    code /= 3;
                }
                starts.push(s);
            }
        } else {
            for j in 0..self.k {
                for level in [levels[0], levels[2]] {
                    let mut s = vec![0.5; self.k];
                    s[j] = level;
                    starts.push(s);
                }
            }
        }
        starts
    }

    /// Global minimum for convex instances; best of a multistart otherwise.
    pub fn minimize(&self) -> Descent {
        let mut best: Option<Descent> = None;
        for start in self.starts() {
            let d = self.descend(start);
            if matches!(d, Descent::Unbounded { .. }) {
                return d;
            }
            if best.as_ref().is_none_or(|b| d.value() < b.value()) {
                best = Some(d);
            }
        }
        best.expect("at least one start")
    }
}
