//! Linear and quantified Bell expressions, and the leaf-extension operator
//! that turns an inequality for a network into one for the network with an
//! extra leaf.
//!
//! A quantified expression reads
//!
//! ```text
//! exists q in [0,1]^k :  sum_g w_g(q) * S_g  +  S_0  <=  L
//! ```
//!
//! where each group value `S_g` is a linear combination of correlators
//! (optionally taken in absolute value), `w_g` is a product of `1/q_j` and
//! `1/(1-q_j)` factors, and `S_0` is the unweighted block.

mod evaluate;
mod quantifier;
mod trilocal;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::correlations::{CorrelatorSource, InputTuple};
use crate::error::{Error, Result};
use crate::network::{Network, PartyId};

pub use evaluate::{
    evaluate, evaluate_family, evaluate_source, evaluate_source_with_tol, ClosedForm,
    EvaluationResult, FamilyEvaluation, VIOLATION_TOL,
};
pub use quantifier::{Descent, QuantifierProblem, BOUNDARY_EPS};
pub use trilocal::{trilocal_invariants, trilocal_w, TrilocalInvariants, W1_TERMS, W2_TERMS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub beta: f64,
    pub inputs: InputTuple,
}

impl Term {
    pub fn new(beta: f64, inputs: InputTuple) -> Self {
        Self { beta, inputs }
    }
}

/// Sum coefficients of repeated tuples, keeping first-occurrence order.
fn merge_terms(terms: Vec<Term>) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    for t in terms {
        match out.iter_mut().find(|o| o.inputs == t.inputs) {
            Some(o) => o.beta += t.beta,
            None => out.push(t),
        }
    }
    out
}

fn validate_terms(net: &Network, terms: &[Term]) -> Result<()> {
    for t in terms {
        t.inputs.validate(net)?;
        if !t.beta.is_finite() {
            return Err(Error::InvalidExpression(format!(
                "non-finite coefficient at {}",
                t.inputs
            )));
        }
    }
    Ok(())
}

pub(crate) fn linear_value(terms: &[Term], src: &impl CorrelatorSource) -> Result<f64> {
    terms
        .iter()
        .map(|t| Ok(t.beta * src.correlator(&t.inputs)?))
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearBellExpression {
    network: Arc<Network>,
    terms: Vec<Term>,
    bound: f64,
}

impl LinearBellExpression {
    pub fn new(network: Arc<Network>, terms: Vec<Term>, bound: f64) -> Result<Self> {
        validate_terms(&network, &terms)?;
        Ok(Self {
            network,
            terms: merge_terms(terms),
            bound,
        })
    }

    pub fn network(&self) -> &Arc<Network> {
        &self.network
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn value(&self, src: &impl CorrelatorSource) -> Result<f64> {
        if src.network() != &*self.network {
            return Err(Error::NetworkMismatch);
        }
        linear_value(&self.terms, src)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    /// weight `1/q_j`
    #[serde(rename = "+")]
    Plus,
    /// weight `1/(1-q_j)`
    #[serde(rename = "-")]
    Minus,
}

impl Branch {
    pub fn flipped(self) -> Self {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantifierFactor {
    pub j: usize,
    pub branch: Branch,
}

impl QuantifierFactor {
    pub fn plus(j: usize) -> Self {
        Self {
            j,
            branch: Branch::Plus,
        }
    }

    pub fn minus(j: usize) -> Self {
        Self {
            j,
            branch: Branch::Minus,
        }
    }

    pub fn weight(&self, q: &[f64]) -> f64 {
        match self.branch {
            Branch::Plus => 1.0 / q[self.j],
            Branch::Minus => 1.0 / (1.0 - q[self.j]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Group {
    pub factors: Vec<QuantifierFactor>,
    #[serde(rename = "abs")]
    pub abs: bool,
    pub terms: Vec<Term>,
}

impl Group {
    pub fn new(factors: Vec<QuantifierFactor>, terms: Vec<Term>) -> Self {
        Self {
            factors,
            abs: false,
            terms,
        }
    }

    pub fn value(&self, src: &impl CorrelatorSource) -> Result<f64> {
        let v = linear_value(&self.terms, src)?;
        Ok(if self.abs { v.abs() } else { v })
    }

    pub fn weight(&self, q: &[f64]) -> f64 {
        self.factors.iter().map(|f| f.weight(q)).product()
    }
}

/// Split of one party's nontrivial inputs into the `1/q` and `1/(1-q)` sides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    party: PartyId,
    plus: Vec<u32>,
    minus: Vec<u32>,
}

impl Partition {
    pub fn new(net: &Network, party: PartyId, plus: Vec<u32>, minus: Vec<u32>) -> Result<Self> {
        if party.index() >= net.num_parties() {
            return Err(Error::PartyNotFound(format!("#{}", party.index())));
        }
        let alphabet = net.alphabet(party);
        let mut all: Vec<u32> = plus.iter().chain(&minus).copied().collect();
        all.sort_unstable();
        let mut expected = alphabet.inputs().to_vec();
        expected.sort_unstable();
        if all != expected {
            return Err(Error::PartitionMismatch(format!(
                "{plus:?} / {minus:?} is not a disjoint cover of {:?} for party `{}`",
                alphabet.inputs(),
                net.party(party).label
            )));
        }
        Ok(Self { party, plus, minus })
    }

    pub fn party(&self) -> PartyId {
        self.party
    }

    pub fn plus(&self) -> &[u32] {
        &self.plus
    }

    pub fn minus(&self) -> &[u32] {
        &self.minus
    }

    fn side(&self, symbol: u32) -> Branch {
        if self.plus.contains(&symbol) {
            Branch::Plus
        } else {
            Branch::Minus
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantifiedBellExpression {
    network: Arc<Network>,
    k: usize,
    groups: Vec<Group>,
    bound: f64,
    unweighted: Vec<Term>,
}

impl QuantifiedBellExpression {
    pub fn new(
        network: Arc<Network>,
        k: usize,
        groups: Vec<Group>,
        unweighted: Vec<Term>,
        bound: f64,
    ) -> Result<Self> {
        if !bound.is_finite() {
            return Err(Error::InvalidExpression("bound must be finite".into()));
        }
        let mut merged = Vec::with_capacity(groups.len());
        for mut g in groups {
            validate_terms(&network, &g.terms)?;
            for (i, f) in g.factors.iter().enumerate() {
                if f.j >= k {
                    return Err(Error::InvalidExpression(format!(
                        "factor index {} out of range for k = {k}",
                        f.j
                    )));
                }
                if g.factors[..i].iter().any(|o| o.j == f.j) {
                    return Err(Error::InvalidExpression(format!(
                        "quantifier {} appears twice in one group",
                        f.j
                    )));
                }
            }
            g.terms = merge_terms(g.terms);
            merged.push(g);
        }
        validate_terms(&network, &unweighted)?;
        Ok(Self {
            network,
            k,
            groups: merged,
            bound,
            unweighted: merge_terms(unweighted),
        })
    }

    /// Embed a linear inequality with no quantifiers.
    pub fn lift(lin: &LinearBellExpression) -> Self {
        Self {
            network: lin.network.clone(),
            k: 0,
            groups: vec![Group::new(vec![], lin.terms.clone())],
            bound: lin.bound,
            unweighted: vec![],
        }
    }

    /// The linear expression behind a quantifier-free one; `None` if there
    /// are quantifiers or absolute-value groups.
    pub fn to_linear(&self) -> Option<LinearBellExpression> {
        if self.k != 0 || self.groups.iter().any(|g| g.abs) {
            return None;
        }
        let terms = self
            .groups
            .iter()
            .flat_map(|g| g.terms.iter().cloned())
            .chain(self.unweighted.iter().cloned())
            .collect();
        LinearBellExpression::new(self.network.clone(), terms, self.bound).ok()
    }

    pub fn network(&self) -> &Arc<Network> {
        &self.network
    }

    pub fn num_quantifiers(&self) -> usize {
        self.k
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn unweighted(&self) -> &[Term] {
        &self.unweighted
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn with_bound(&self, bound: f64) -> Self {
        Self {
            bound,
            ..self.clone()
        }
    }

    /// Left-hand side at a fixed `q`, without minimizing.
    pub fn lhs_at(&self, src: &impl CorrelatorSource, q: &[f64]) -> Result<f64> {
        if q.len() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "q has {} entries, expression has {} quantifiers",
                q.len(),
                self.k
            )));
        }
        let mut total = linear_value(&self.unweighted, src)?;
        for g in &self.groups {
            let v = g.value(src)?;
            if v != 0.0 {
                total += g.weight(q) * v;
            }
        }
        Ok(total)
    }

    /// Relabel `party`'s outputs for the given inputs (a ↦ −a). This maps a
    /// valid inequality to a valid one; it is how sign variants are produced.
    pub fn flip_outputs(&self, party: PartyId, inputs: &[u32]) -> Self {
        let flip = |terms: &[Term]| {
            terms
                .iter()
                .map(|t| match t.inputs.get(party) {
                    Some(x) if inputs.contains(&x) => Term::new(-t.beta, t.inputs.clone()),
                    _ => t.clone(),
                })
                .collect::<Vec<_>>()
        };
        Self {
            network: self.network.clone(),
            k: self.k,
            groups: self
                .groups
                .iter()
                .map(|g| Group {
                    factors: g.factors.clone(),
                    abs: g.abs,
                    terms: flip(&g.terms),
                })
                .collect(),
            bound: self.bound,
            unweighted: flip(&self.unweighted),
        }
    }

    /// Swap the plus and minus branches of quantifier `j` everywhere
    /// (equivalent to `q_j ↦ 1 − q_j`).
    pub fn swap_branches(&self, j: usize) -> Self {
        let mut next = self.clone();
        for g in &mut next.groups {
            for f in &mut g.factors {
                if f.j == j {
                    f.branch = f.branch.flipped();
                }
            }
        }
        next
    }

    /// Add a leaf: `net` must be this expression's network with one source
    /// attached to `anchor` and to `new_party`.
    ///
    /// Terms whose anchor input falls in the plus side gain the factor
    /// `1/q_new` and are multiplied by `(a_0 + a_1)/2` of the new party; minus
    /// side terms gain `1/(1 − q_new)` and `(a_0 − a_1)/2`. Terms with a
    /// trivial anchor input keep their weight and get a trivial slot.
    pub fn extend(
        &self,
        net: Arc<Network>,
        anchor: PartyId,
        part: &Partition,
        new_party: PartyId,
    ) -> Result<Self> {
        let found = net.leaf_over(&self.network, anchor)?;
        if found != new_party {
            return Err(Error::NotALeafExtension(format!(
                "new party is `{}`, not #{}",
                net.party(found).label,
                new_party.index()
            )));
        }
        if part.party != anchor {
            return Err(Error::PartitionMismatch(
                "partition is not over the anchor's inputs".into(),
            ));
        }
        // Re-validate against the anchor's alphabet in the new network.
        Partition::new(&net, anchor, part.plus.clone(), part.minus.clone())?;

        let new_j = self.k;
        let mut groups = Vec::new();
        let mut unweighted = Vec::new();
        let base = self
            .groups
            .iter()
            .map(|g| (g.factors.as_slice(), g.abs, g.terms.as_slice()))
            .chain(std::iter::once((&[][..], false, self.unweighted.as_slice())));
        for (factors, abs, terms) in base {
            if abs {
                return Err(Error::InvalidExpression(
                    "absolute-value groups cannot be extended; extend the sign variants and \
                     symmetrize afterwards"
                        .into(),
                ));
            }
            let mut plus = Vec::new();
            let mut minus = Vec::new();
            let mut trivial = Vec::new();
            for t in terms {
                let half = t.beta / 2.0;
                match t.inputs.get(anchor) {
                    None => trivial.push(Term::new(t.beta, t.inputs.extended(None))),
                    Some(x) => match part.side(x) {
                        Branch::Plus => {
                            plus.push(Term::new(half, t.inputs.extended(Some(0))));
                            plus.push(Term::new(half, t.inputs.extended(Some(1))));
                        }
                        Branch::Minus => {
                            minus.push(Term::new(half, t.inputs.extended(Some(0))));
                            minus.push(Term::new(-half, t.inputs.extended(Some(1))));
                        }
                    },
                }
            }
            for (side, side_terms) in [(Branch::Plus, plus), (Branch::Minus, minus)] {
                if side_terms.is_empty() {
                    continue;
                }
                let mut f = factors.to_vec();
                f.push(QuantifierFactor {
                    j: new_j,
                    branch: side,
                });
                groups.push(Group::new(f, side_terms));
            }
            if !trivial.is_empty() {
                if factors.is_empty() {
                    unweighted.extend(trivial);
                } else {
                    groups.push(Group::new(factors.to_vec(), trivial));
                }
            }
        }
        Self::new(net, new_j + 1, groups, unweighted, self.bound)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ExpressionJson::from(self)).expect("expression serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: ExpressionJson = serde_json::from_str(s)?;
        Self::try_from(raw)
    }
}

/// Extend several inequalities at once; they all share the new quantifier.
pub fn extend_family(
    exprs: &[QuantifiedBellExpression],
    net: Arc<Network>,
    anchor: PartyId,
    part: &Partition,
    new_party: PartyId,
) -> Result<Vec<QuantifiedBellExpression>> {
    let Some(first) = exprs.first() else {
        return Ok(vec![]);
    };
    for e in exprs {
        if e.network != first.network {
            return Err(Error::NetworkMismatch);
        }
        if e.k != first.k {
            return Err(Error::IncompatibleFamily(format!(
                "quantifier counts differ ({} vs {})",
                e.k, first.k
            )));
        }
    }
    exprs
        .iter()
        .map(|e| e.extend(net.clone(), anchor, part, new_party))
        .collect()
}

/// Collapse sign variants of one expression into a single expression whose
/// groups are taken in absolute value.
///
/// Every member must have the same network, bound, quantifier structure and
/// unweighted block, and each group's payload must agree with the first
/// member's up to an overall sign. Whether the variants are all valid
/// inequalities is the caller's responsibility.
pub fn symmetrize_abs(family: &[QuantifiedBellExpression]) -> Result<QuantifiedBellExpression> {
    let Some(reference) = family.first() else {
        return Err(Error::IncompatibleFamily("empty family".into()));
    };
    for (idx, e) in family.iter().enumerate().skip(1) {
        let mismatch = |why: &str| Error::IncompatibleFamily(format!("member {idx}: {why}"));
        if e.network != reference.network {
            return Err(Error::NetworkMismatch);
        }
        if e.k != reference.k || e.bound != reference.bound {
            return Err(mismatch("quantifier count or bound differs"));
        }
        if e.groups.len() != reference.groups.len() {
            return Err(mismatch("group count differs"));
        }
        if e.unweighted != reference.unweighted {
            return Err(mismatch("unweighted block differs"));
        }
        for (g, r) in e.groups.iter().zip(&reference.groups) {
            if g.factors != r.factors {
                return Err(mismatch("quantifier factors differ"));
            }
            if !same_up_to_sign(&g.terms, &r.terms) {
                return Err(mismatch("group payload is not a sign variant"));
            }
        }
    }
    let mut out = reference.clone();
    for g in &mut out.groups {
        g.abs = true;
    }
    Ok(out)
}

fn same_up_to_sign(a: &[Term], b: &[Term]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    [1.0, -1.0].iter().any(|s| {
        a.iter().all(|t| {
            b.iter()
                .any(|u| u.inputs == t.inputs && u.beta == s * t.beta)
        })
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpressionJson {
    network: Network,
    k: usize,
    bound: f64,
    groups: Vec<Group>,
    unweighted: Vec<Term>,
}

impl From<&QuantifiedBellExpression> for ExpressionJson {
    fn from(e: &QuantifiedBellExpression) -> Self {
        ExpressionJson {
            network: (*e.network).clone(),
            k: e.k,
            bound: e.bound,
            groups: e.groups.clone(),
            unweighted: e.unweighted.clone(),
        }
    }
}

impl TryFrom<ExpressionJson> for QuantifiedBellExpression {
    type Error = Error;

    fn try_from(raw: ExpressionJson) -> Result<Self> {
        QuantifiedBellExpression::new(
            Arc::new(raw.network),
            raw.k,
            raw.groups,
            raw.unweighted,
            raw.bound,
        )
    }
}

#[cfg(test)]
mod tests;
