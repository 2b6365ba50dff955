use std::fmt;

use serde::Serialize;

use super::quantifier::{Descent, QuantifierProblem, BOUNDARY_EPS};
use super::{linear_value, Branch, QuantifiedBellExpression, QuantifierFactor};
use crate::correlations::{CorrelatorSource, CorrelatorTable};
use crate::error::{Error, Result};

/// Absolute slack on `min_lhs > bound` before a violation is reported.
pub const VIOLATION_TOL: f64 = 1e-9;

const GOLDEN_ITERATIONS: usize = 90;
const MAX_FAMILY_QUANTIFIERS: usize = 3;

/// Shapes whose minimum over `q` is known in closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedForm {
    Generic,
    /// `a/q + b/(1-q)`, minimum `(sqrt a + sqrt b)^2`
    BilocalSqrt,
    /// `a/prod q_j + b/prod (1-q_j)` with `n - 1` quantifiers, minimum
    /// `(a^(1/n) + b^(1/n))^n`
    StarRoot { n: usize },
}

impl ClosedForm {
    pub fn detect(expr: &QuantifiedBellExpression) -> Self {
        let k = expr.num_quantifiers();
        if k == 0 || expr.groups().len() != 2 {
            return ClosedForm::Generic;
        }
        let all = |branch: Branch| -> Vec<QuantifierFactor> {
            (0..k).map(|j| QuantifierFactor { j, branch }).collect()
        };
        let sorted = |f: &[QuantifierFactor]| {
            let mut f = f.to_vec();
            f.sort();
            f
        };
        let (g0, g1) = (&expr.groups()[0], &expr.groups()[1]);
        if sorted(&g0.factors) != all(Branch::Plus) || sorted(&g1.factors) != all(Branch::Minus) {
            return ClosedForm::Generic;
        }
        if k == 1 {
            ClosedForm::BilocalSqrt
        } else {
            ClosedForm::StarRoot { n: k + 1 }
        }
    }

    /// Minimum and minimizer for plus/minus group values `a`, `b`; `None`
    /// when the left-hand side is unbounded below.
    fn solve(self, k: usize, a: f64, b: f64) -> Option<(f64, Vec<f64>)> {
        let n = match self {
            ClosedForm::Generic => return None,
            ClosedForm::BilocalSqrt => 2,
            ClosedForm::StarRoot { n } => n,
        };
        if a < 0.0 || b < 0.0 {
            return None;
        }
        let inv = 1.0 / n as f64;
        let (ra, rb) = (a.powf(inv), b.powf(inv));
        let q = if ra + rb == 0.0 { 0.5 } else { ra / (ra + rb) };
        Some(((ra + rb).powi(n as i32), vec![q; k]))
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedForm::Generic => write!(f, "generic"),
            ClosedForm::BilocalSqrt => write!(f, "bilocal-sqrt"),
            ClosedForm::StarRoot { n } => write!(f, "star-root-{n}"),
        }
    }
}

impl Serialize for ClosedForm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Outcome of minimizing an expression's left-hand side over `q`.
///
/// `min_lhs` is `-inf` (serialized as `null`) when the left-hand side is
/// unbounded below; such an expression is never violated.
#[derive(Clone, Debug, Serialize)]
pub struct EvaluationResult {
    pub min_lhs: f64,
    pub unbounded_below: bool,
    pub bound: f64,
    pub margin: f64,
    pub violated: bool,
    pub tolerance: f64,
    pub argmin_q: Vec<f64>,
    pub closed_form: ClosedForm,
    pub numeric_min: f64,
    /// `|closed form - numeric|` when a closed form applies
    pub cross_check_gap: Option<f64>,
    pub group_values: Vec<f64>,
    pub unweighted_value: f64,
    /// objective at the start and after each coordinate sweep
    pub trace: Vec<f64>,
}

pub fn evaluate(expr: &QuantifiedBellExpression, table: &CorrelatorTable) -> Result<EvaluationResult> {
    evaluate_source(expr, table)
}

pub fn evaluate_source(
    expr: &QuantifiedBellExpression,
    src: &impl CorrelatorSource,
) -> Result<EvaluationResult> {
    evaluate_source_with_tol(expr, src, VIOLATION_TOL)
}

fn problem_of(
    expr: &QuantifiedBellExpression,
    src: &impl CorrelatorSource,
) -> Result<(QuantifierProblem, Vec<f64>, f64)> {
    if src.network() != &**expr.network() {
        return Err(Error::NetworkMismatch);
    }
    let values = expr
        .groups()
        .iter()
        .map(|g| g.value(src))
        .collect::<Result<Vec<_>>>()?;
    let unweighted = linear_value(expr.unweighted(), src)?;
    let problem = QuantifierProblem::new(
        expr.num_quantifiers(),
        expr.groups()
            .iter()
            .zip(&values)
            .map(|(g, v)| (g.factors.clone(), *v)),
        unweighted,
    );
    Ok((problem, values, unweighted))
}

pub fn evaluate_source_with_tol(
    expr: &QuantifiedBellExpression,
    src: &impl CorrelatorSource,
    tol: f64,
) -> Result<EvaluationResult> {
    let (problem, group_values, unweighted_value) = problem_of(expr, src)?;
    let descent = problem.minimize();
    let numeric_min = descent.value();
    let closed_form = ClosedForm::detect(expr);

    let (min_lhs, argmin_q, cross_check_gap) = match closed_form {
        ClosedForm::Generic => (numeric_min, descent.q().to_vec(), None),
        cf => match cf.solve(expr.num_quantifiers(), group_values[0], group_values[1]) {
            Some((v, q)) => {
                let v = v + unweighted_value;
                (v, q, Some((v - numeric_min).abs()))
            }
            None => (f64::NEG_INFINITY, descent.q().to_vec(), None),
        },
    };
    let trace = match descent {
        Descent::Converged { trace, .. } => trace,
        Descent::Unbounded { .. } => vec![],
    };
    let unbounded_below = min_lhs == f64::NEG_INFINITY;
    Ok(EvaluationResult {
        min_lhs,
        unbounded_below,
        bound: expr.bound(),
        margin: min_lhs - expr.bound(),
        violated: !unbounded_below && min_lhs > expr.bound() + tol,
        tolerance: tol,
        argmin_q,
        closed_form,
        numeric_min,
        cross_check_gap,
        group_values,
        unweighted_value,
        trace,
    })
}

/// Outcome of testing a family of inequalities that share their quantifiers.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyEvaluation {
    /// `min_q max_i (lhs_i(q) - L_i)`
    pub min_excess: f64,
    pub argmin_q: Vec<f64>,
    pub violated: bool,
    pub tolerance: f64,
    /// For families of single-factor groups on one quantifier:
    /// `max a_i/L_i + max b_i/L_i`, which is feasible iff at most 1.
    pub split_budget: Option<f64>,
}

/// Single-factor groups sharing one quantifier reduce to
/// `a/q <= 1` and `b/(1-q) <= 1`, solvable iff `a + b <= 1`.
fn split_budget(family: &[QuantifiedBellExpression], values: &[Vec<f64>]) -> Option<f64> {
    let (mut plus, mut minus) = (0.0f64, 0.0f64);
    for (e, v) in family.iter().zip(values) {
        let [g] = e.groups() else {
            return None;
        };
        if e.num_quantifiers() != 1
            || g.factors.len() != 1
            || !e.unweighted().is_empty()
            || e.bound() <= 0.0
            || v[0] < 0.0
        {
            return None;
        }
        let ratio = v[0] / e.bound();
        match g.factors[0].branch {
            Branch::Plus => plus = plus.max(ratio),
            Branch::Minus => minus = minus.max(ratio),
        }
    }
    Some(plus + minus)
}

fn golden_min(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERATIONS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Minimize over `q[depth..]` with `q[..depth]` held fixed.
fn nested_min(g: &dyn Fn(&[f64]) -> f64, q: &mut Vec<f64>, depth: usize) -> f64 {
    if depth == q.len() {
        return g(q);
    }
    let (lo, hi) = (BOUNDARY_EPS, 1.0 - BOUNDARY_EPS);
    let mut inner = |x: f64| {
        let mut local = q.clone();
        local[depth] = x;
        nested_min(g, &mut local, depth + 1)
    };
    let (x, _) = golden_min(&mut inner, lo, hi);
    q[depth] = x;
    nested_min(g, q, depth + 1)
}

/// Check whether some common `q` satisfies every member of the family.
pub fn evaluate_family(
    family: &[QuantifiedBellExpression],
    src: &impl CorrelatorSource,
    tol: f64,
) -> Result<FamilyEvaluation> {
    let Some(first) = family.first() else {
        return Err(Error::IncompatibleFamily("empty family".into()));
    };
    let k = first.num_quantifiers();
    if family.iter().any(|e| e.num_quantifiers() != k) {
        return Err(Error::IncompatibleFamily("quantifier counts differ".into()));
    }
    if k > MAX_FAMILY_QUANTIFIERS {
        return Err(Error::InvalidExpression(format!(
            "family search supports at most {MAX_FAMILY_QUANTIFIERS} quantifiers, got {k}"
        )));
    }
    let mut problems = Vec::with_capacity(family.len());
    let mut values = Vec::with_capacity(family.len());
    for e in family {
        let (p, v, _) = problem_of(e, src)?;
        problems.push((p, e.bound()));
        values.push(v);
    }
    let excess = |q: &[f64]| {
        problems
            .iter()
            .map(|(p, bound)| p.objective(q) - bound)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut q = vec![0.5; k];
    let min_excess = nested_min(&excess, &mut q, 0);
    let split = split_budget(family, &values);
    let violated = match split {
        Some(s) => s > 1.0 + tol,
        None => min_excess > tol,
    };
    Ok(FamilyEvaluation {
        min_excess,
        argmin_q: q,
        violated,
        tolerance: tol,
        split_budget: split,
    })
}
