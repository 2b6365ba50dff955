//! Correlator tables over joint inputs, and behaviors they can be derived
//! from.
//!
//! Every table stores one value per input tuple, trivial inputs included, in
//! a dense mixed-radix layout: digit 0 of a party is the trivial input and
//! digit `i + 1` its `i`-th nontrivial symbol. Party 0 is the most significant
//! digit, so iteration order matches lexicographic order on tuples.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, PartyId};

/// Slack allowed above |1| for values produced by floating-point engines.
pub const RANGE_SLACK: f64 = 1e-9;
const TRIVIAL_TOL: f64 = 1e-12;
const NORMALIZATION_TOL: f64 = 1e-12;

/// One input per party; `None` is the trivial input.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InputTuple(Vec<Option<u32>>);

impl InputTuple {
    pub fn new(symbols: Vec<Option<u32>>) -> Self {
        Self(symbols)
    }

    pub fn trivial(num_parties: usize) -> Self {
        Self(vec![None; num_parties])
    }

    /// Shorthand for a tuple with every party given a nontrivial input.
    pub fn full(symbols: &[u32]) -> Self {
        Self(symbols.iter().map(|&s| Some(s)).collect())
    }

    pub fn symbols(&self) -> &[Option<u32>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, party: PartyId) -> Option<u32> {
        self.0[party.index()]
    }

    pub fn with(&self, party: PartyId, symbol: Option<u32>) -> Self {
        let mut next = self.clone();
        next.0[party.index()] = symbol;
        next
    }

    /// Append a slot for a newly added party.
    pub fn extended(&self, symbol: Option<u32>) -> Self {
        let mut next = self.clone();
        next.0.push(symbol);
        next
    }

    pub fn validate(&self, net: &Network) -> Result<()> {
        if self.0.len() != net.num_parties() {
            return Err(Error::InvalidTuple(format!(
                "{self} has {} slots, network has {} parties",
                self.0.len(),
                net.num_parties()
            )));
        }
        for (p, sym) in net.party_ids().zip(&self.0) {
            let alphabet = net.alphabet(p);
            match sym {
                None if !alphabet.includes_trivial() => {
                    return Err(Error::InvalidTuple(format!(
                        "{self}: party `{}` has no trivial input",
                        net.party(p).label
                    )))
                }
                Some(s) if alphabet.position(*s).is_none() => {
                    return Err(Error::InvalidTuple(format!(
                        "{self}: {s} is not an input of party `{}`",
                        net.party(p).label
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

impl fmt::Display for InputTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            match s {
                Some(s) => write!(f, "{s}")?,
                None => write!(f, "_")?,
            }
        }
        write!(f, ")")
    }
}

impl Serialize for InputTuple {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for InputTuple {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Vec::<Option<u32>>::deserialize(d).map(InputTuple)
    }
}

/// Mixed-radix indexing of all input tuples of a network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableLayout {
    alphabets: Vec<Vec<u32>>,
    strides: Vec<usize>,
    len: usize,
}

impl TableLayout {
    pub fn of(net: &Network) -> Self {
        let alphabets: Vec<Vec<u32>> = net
            .parties()
            .iter()
            .map(|p| p.alphabet.inputs().to_vec())
            .collect();
        let mut strides = vec![0; alphabets.len()];
        let mut len = 1usize;
        for (i, a) in alphabets.iter().enumerate().rev() {
            strides[i] = len;
            len *= a.len() + 1;
        }
        Self {
            alphabets,
            strides,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn index_of(&self, t: &InputTuple) -> Result<usize> {
        if t.len() != self.alphabets.len() {
            return Err(Error::InvalidTuple(format!(
                "{t} has {} slots, expected {}",
                t.len(),
                self.alphabets.len()
            )));
        }
        let mut idx = 0;
        for ((sym, alphabet), stride) in t.0.iter().zip(&self.alphabets).zip(&self.strides) {
            let digit = match sym {
                None => 0,
                Some(s) => {
                    alphabet.iter().position(|a| a == s).ok_or_else(|| {
                        Error::InvalidTuple(format!("{t}: unknown input {s}"))
                    })? + 1
                }
            };
            idx += digit * stride;
        }
        Ok(idx)
    }

    pub fn tuple_at(&self, mut idx: usize) -> InputTuple {
        let mut symbols = Vec::with_capacity(self.alphabets.len());
        for (alphabet, stride) in self.alphabets.iter().zip(&self.strides) {
            let digit = idx / stride;
            idx %= stride;
            symbols.push(if digit == 0 {
                None
            } else {
                Some(alphabet[digit - 1])
            });
        }
        InputTuple(symbols)
    }

    pub fn tuples(&self) -> impl Iterator<Item = InputTuple> + '_ {
        (0..self.len).map(|i| self.tuple_at(i))
    }
}

/// Anything that can report the correlator of an input tuple.
pub trait CorrelatorSource {
    fn network(&self) -> &Network;
    fn correlator(&self, tuple: &InputTuple) -> Result<f64>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorTable {
    network: Arc<Network>,
    layout: TableLayout,
    values: Vec<f64>,
}

impl CorrelatorTable {
    pub fn from_fn(
        network: Arc<Network>,
        mut f: impl FnMut(&InputTuple) -> Result<f64>,
    ) -> Result<Self> {
        let layout = TableLayout::of(&network);
        let values = layout
            .tuples()
            .map(|t| f(&t))
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(network, values)
    }

    pub fn from_values(network: Arc<Network>, values: Vec<f64>) -> Result<Self> {
        let layout = TableLayout::of(&network);
        if values.len() != layout.len() {
            return Err(Error::DimensionMismatch(format!(
                "table has {} values, layout needs {}",
                values.len(),
                layout.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || v.abs() > 1.0 + RANGE_SLACK {
                return Err(Error::ValueOutOfRange {
                    tuple: layout.tuple_at(i).to_string(),
                    value: *v,
                });
            }
        }
        if (values[0] - 1.0).abs() > TRIVIAL_TOL {
            return Err(Error::TrivialCorrelator(values[0]));
        }
        Ok(Self {
            network,
            layout,
            values,
        })
    }

    pub fn network_arc(&self) -> &Arc<Network> {
        &self.network
    }

    pub fn layout(&self) -> &TableLayout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, t: &InputTuple) -> Result<f64> {
        Ok(self.values[self.layout.index_of(t)?])
    }

    pub fn iter(&self) -> impl Iterator<Item = (InputTuple, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (self.layout.tuple_at(i), *v))
    }

    /// `(t[.., 0] ± t[.., 1]) / 2` at `party`, the other slots taken from
    /// `surrounding`.
    pub fn half_sum(&self, party: PartyId, sign: Sign, surrounding: &InputTuple) -> Result<f64> {
        if party.index() >= self.network.num_parties() {
            return Err(Error::PartyNotFound(format!("#{}", party.index())));
        }
        if !self.network.alphabet(party).is_binary() {
            return Err(Error::NotBinary(self.network.party(party).label.clone()));
        }
        let t0 = self.get(&surrounding.with(party, Some(0)))?;
        let t1 = self.get(&surrounding.with(party, Some(1)))?;
        Ok((t0 + sign.factor() * t1) / 2.0)
    }

    pub fn max_abs_diff(&self, other: &CorrelatorTable) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::NetworkMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// One row per tuple in canonical order, `_` for the trivial input, values
    /// to 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for p in self.network.parties() {
            out.push_str(&p.label);
            out.push(',');
        }
        out.push_str("value\n");
        for (t, v) in self.iter() {
            for s in t.symbols() {
                match s {
                    Some(s) => out.push_str(&s.to_string()),
                    None => out.push('_'),
                }
                out.push(',');
            }
            out.push_str(&format!("{v:.16e}\n"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TableJson::from(self)).expect("table serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: TableJson = serde_json::from_str(s)?;
        Self::try_from(raw)
    }
}

impl CorrelatorSource for CorrelatorTable {
    fn network(&self) -> &Network {
        &self.network
    }

    fn correlator(&self, tuple: &InputTuple) -> Result<f64> {
        self.get(tuple)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryJson {
    inputs: InputTuple,
    value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableJson {
    network: Network,
    entries: Vec<EntryJson>,
}

impl From<&CorrelatorTable> for TableJson {
    fn from(t: &CorrelatorTable) -> Self {
        TableJson {
            network: (*t.network).clone(),
            entries: t
                .iter()
                .map(|(inputs, value)| EntryJson { inputs, value })
                .collect(),
        }
    }
}

impl TryFrom<TableJson> for CorrelatorTable {
    type Error = Error;

    fn try_from(raw: TableJson) -> Result<Self> {
        let layout = TableLayout::of(&raw.network);
        let mut values = vec![f64::NAN; layout.len()];
        for e in &raw.entries {
            let idx = layout.index_of(&e.inputs)?;
            if !values[idx].is_nan() {
                return Err(Error::Schema(format!("duplicate entry {}", e.inputs)));
            }
            values[idx] = e.value;
        }
        if let Some(missing) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::Schema(format!(
                "missing entry {}",
                layout.tuple_at(missing)
            )));
        }
        CorrelatorTable::from_values(Arc::new(raw.network), values)
    }
}

/// Conditional output distribution `P(a | x)` over nontrivial input tuples.
/// Outputs are ±1; output tuples are indexed by a bitmask where bit `j` set
/// means party `j` answered −1.
#[derive(Clone, Debug, PartialEq)]
pub struct Behavior {
    network: Arc<Network>,
    input_strides: Vec<usize>,
    num_inputs: usize,
    probs: Vec<f64>,
}

impl Behavior {
    /// Build a behavior from `p(outputs, inputs)`. `outputs[j]` is ±1 and
    /// `inputs` has no trivial slots.
    pub fn from_fn(
        network: Arc<Network>,
        mut p: impl FnMut(&[i8], &InputTuple) -> f64,
    ) -> Result<Self> {
        let (input_strides, num_inputs) = input_strides(&network);
        let m = network.num_parties();
        let mut probs = Vec::with_capacity(num_inputs << m);
        let mut outputs = vec![1i8; m];
        for x in 0..num_inputs {
            let t = nontrivial_tuple(&network, &input_strides, x);
            for mask in 0..(1usize << m) {
                for (j, o) in outputs.iter_mut().enumerate() {
                    *o = if mask >> j & 1 == 1 { -1 } else { 1 };
                }
                probs.push(p(&outputs, &t));
            }
        }
        Self::from_raw(network, probs)
    }

    pub fn from_raw(network: Arc<Network>, probs: Vec<f64>) -> Result<Self> {
        let (input_strides, num_inputs) = input_strides(&network);
        let block = 1usize << network.num_parties();
        if probs.len() != num_inputs * block {
            return Err(Error::DimensionMismatch(format!(
                "behavior has {} entries, expected {}",
                probs.len(),
                num_inputs * block
            )));
        }
        for x in 0..num_inputs {
            let chunk = &probs[x * block..(x + 1) * block];
            if let Some(&neg) = chunk.iter().find(|&&v| v < -NORMALIZATION_TOL || !v.is_finite()) {
                return Err(Error::NegativeProbability(neg));
            }
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::NotNormalized {
                    tuple: nontrivial_tuple(&network, &input_strides, x).to_string(),
                    sum,
                });
            }
        }
        Ok(Self {
            network,
            input_strides,
            num_inputs,
            probs,
        })
    }

    pub fn network(&self) -> &Arc<Network> {
        &self.network
    }

    fn input_index(&self, t: &InputTuple) -> Result<usize> {
        t.validate(&self.network)?;
        let mut idx = 0;
        for (p, stride) in self.network.party_ids().zip(&self.input_strides) {
            let s = t.get(p).ok_or_else(|| {
                Error::InvalidTuple(format!("{t}: behaviors are defined on nontrivial inputs"))
            })?;
            idx += self.network.alphabet(p).position(s).expect("validated") * stride;
        }
        Ok(idx)
    }

    pub fn probability(&self, outputs: &[i8], inputs: &InputTuple) -> Result<f64> {
        if outputs.len() != self.network.num_parties() {
            return Err(Error::DimensionMismatch("output tuple length".into()));
        }
        let x = self.input_index(inputs)?;
        let mask = outputs
            .iter()
            .enumerate()
            .fold(0usize, |m, (j, &o)| if o < 0 { m | 1 << j } else { m });
        Ok(self.probs[(x << self.network.num_parties()) + mask])
    }
}

fn input_strides(net: &Network) -> (Vec<usize>, usize) {
    let mut strides = vec![0; net.num_parties()];
    let mut len = 1;
    for p in net.party_ids().rev() {
        strides[p.index()] = len;
        len *= net.alphabet(p).len();
    }
    (strides, len)
}

fn nontrivial_tuple(net: &Network, strides: &[usize], mut x: usize) -> InputTuple {
    let symbols = net
        .party_ids()
        .map(|p| {
            let digit = x / strides[p.index()];
            x %= strides[p.index()];
            Some(net.alphabet(p).inputs()[digit])
        })
        .collect();
    InputTuple::new(symbols)
}

/// Expectation of the product of ±1 outputs for every input tuple.
///
/// A trivial slot marginalizes its party out. Behaviors are assumed
/// no-signalling; the marginal is read at the party's first nontrivial input.
pub fn correlators_from_behavior(b: &Behavior) -> Result<CorrelatorTable> {
    let net = b.network.clone();
    let m = net.num_parties();
    let block = 1usize << m;
    CorrelatorTable::from_fn(net.clone(), |t| {
        let mut full = t.clone();
        let mut active = 0usize;
        for p in net.party_ids() {
            match t.get(p) {
                Some(_) => active |= 1 << p.index(),
                None => full = full.with(p, Some(net.alphabet(p).inputs()[0])),
            }
        }
        let x = b.input_index(&full)?;
        let chunk = &b.probs[x * block..(x + 1) * block];
        Ok(chunk
            .iter()
            .enumerate()
            .map(|(mask, p)| {
                if (mask & active).count_ones() % 2 == 1 {
                    -p
                } else {
                    *p
                }
            })
            .sum())
    })
}
