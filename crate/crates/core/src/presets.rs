//! Ready-made inequalities.
//!
//! The three seed inequalities (CHSH, Mermin, I3322) ship as embedded JSON;
//! everything else is obtained from them by leaf extension at run time, so
//! the presets exercise the same code path as user input.

use std::sync::Arc;

use crate::correlations::CorrelatorSource;
use crate::error::{Error, Result};
use crate::inequality::{QuantifiedBellExpression, Partition};
use crate::network::{InputAlphabet, Network, PartyId};

const CHSH_JSON: &str = include_str!("../presets/chsh.json");
const MERMIN_JSON: &str = include_str!("../presets/mermin.json");
const I3322_JSON: &str = include_str!("../presets/i3322.json");

pub const MAX_CHAIN: usize = 6;
pub const MAX_STAR: usize = 4;

/// Names accepted by [`expression`].
pub fn names() -> Vec<String> {
    let mut names: Vec<String> = ["chsh", "mermin", "i3322", "bilocal", "trilocal", "mermin_net", "i3322_bilocal"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((1..=MAX_CHAIN).map(|n| format!("chain{n}")));
    names.extend((2..=MAX_STAR).map(|n| format!("star{n}")));
    names
}

pub fn chsh() -> QuantifiedBellExpression {
    QuantifiedBellExpression::from_json(CHSH_JSON).expect("embedded preset parses")
}

pub fn mermin() -> QuantifiedBellExpression {
    QuantifiedBellExpression::from_json(MERMIN_JSON).expect("embedded preset parses")
}

pub fn i3322() -> QuantifiedBellExpression {
    QuantifiedBellExpression::from_json(I3322_JSON).expect("embedded preset parses")
}

/// Add a binary leaf at `anchor`, splitting its inputs into `plus`/`minus`.
pub fn extend_at(
    expr: &QuantifiedBellExpression,
    anchor: PartyId,
    plus: Vec<u32>,
    minus: Vec<u32>,
) -> Result<QuantifiedBellExpression> {
    let net = Arc::new(expr.network().add_leaf(anchor, InputAlphabet::binary())?);
    let part = Partition::new(&net, anchor, plus, minus)?;
    let new_party = PartyId::new(net.num_parties() - 1);
    expr.extend(net, anchor, &part, new_party)
}

/// Chain of `n` sources and `n + 1` parties, source `S_i` shared by `A_i`
/// and `A_{i+1}`. `chain(1)` is CHSH.
pub fn chain(n: usize) -> Result<QuantifiedBellExpression> {
    if n == 0 || n > MAX_CHAIN {
        return Err(Error::UnknownPreset(format!("chain{n}")));
    }
    let mut e = chsh();
    for _ in 1..n {
        let last = PartyId::new(e.network().num_parties() - 1);
        e = extend_at(&e, last, vec![0], vec![1])?;
    }
    Ok(e)
}

pub fn bilocal() -> QuantifiedBellExpression {
    chain(2).expect("chain 2 is in range")
}

pub fn trilocal() -> QuantifiedBellExpression {
    chain(3).expect("chain 3 is in range")
}

/// Star with `n` sources around the central party `A2`.
pub fn star(n: usize) -> Result<QuantifiedBellExpression> {
    if !(2..=MAX_STAR).contains(&n) {
        return Err(Error::UnknownPreset(format!("star{n}")));
    }
    let mut e = chsh();
    for _ in 1..n {
        e = extend_at(&e, PartyId::new(1), vec![0], vec![1])?;
    }
    Ok(e)
}

/// Mermin's inequality with a leaf attached to `A3`.
pub fn mermin_net() -> QuantifiedBellExpression {
    extend_at(&mermin(), PartyId::new(2), vec![0], vec![1]).expect("preset extends")
}

/// I3322 with a leaf attached to `A2`, inputs split `{0}` / `{1, 2}`.
pub fn i3322_bilocal() -> QuantifiedBellExpression {
    extend_at(&i3322(), PartyId::new(1), vec![0], vec![1, 2]).expect("preset extends")
}

pub fn expression(name: &str) -> Result<QuantifiedBellExpression> {
    match name {
        "chsh" => Ok(chsh()),
        "mermin" => Ok(mermin()),
        "i3322" => Ok(i3322()),
        "bilocal" => Ok(bilocal()),
        "trilocal" => Ok(trilocal()),
        "mermin_net" => Ok(mermin_net()),
        "i3322_bilocal" => Ok(i3322_bilocal()),
        _ => {
            let parse = |prefix: &str| {
                name.strip_prefix(prefix)
                    .and_then(|n| n.parse::<usize>().ok())
            };
            if let Some(n) = parse("chain") {
                chain(n)
            } else if let Some(n) = parse("star") {
                star(n)
            } else {
                Err(Error::UnknownPreset(name.to_string()))
            }
        }
    }
}

/// `(I, J, K, L)` of a trilocal behavior, read off the group values of
/// [`trilocal`], which are `I/2, J/2, K/2, -L/2`.
pub fn trilocal_ijkl(src: &impl CorrelatorSource) -> Result<[f64; 4]> {
    let e = trilocal();
    if src.network() != &**e.network() {
        return Err(Error::NetworkMismatch);
    }
    let g = e
        .groups()
        .iter()
        .map(|g| g.value(src))
        .collect::<Result<Vec<f64>>>()?;
    Ok([2.0 * g[0], 2.0 * g[1], 2.0 * g[2], -2.0 * g[3]])
}

/// Network of [`chain`]`(n)`.
pub fn chain_network(n: usize) -> Result<Arc<Network>> {
    Ok(chain(n)?.network().clone())
}
