//! Network topology: parties, independent sources, and the incidence between
//! them.
//!
//! Networks are immutable values. The only way to grow one is
//! [`Network::add_leaf`], which attaches a fresh source to a single existing
//! party and to one new party. Starting from a single-source seed this can only
//! ever produce acyclic networks; [`Network::validate`] checks that property
//! for networks that arrive from elsewhere (JSON files, hand-built parts).
//!
//! Party and source order is insertion order. Correlator tables, expressions
//! and quantum models all index parties and tensor factors by this order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartyId(pub(crate) usize);

impl PartyId {
    /// Parties are numbered in the order they were added, from 0.
    pub const fn new(index: usize) -> Self {
        Self(index)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceId(pub(crate) usize);

impl SourceId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// The inputs a party may receive. Symbols are small integers; the trivial
/// input is never one of them and is represented by `None` in tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputAlphabet {
    nontrivial: Vec<u32>,
    includes_trivial: bool,
}

impl InputAlphabet {
    pub fn new(nontrivial: Vec<u32>, includes_trivial: bool) -> Self {
        Self {
            nontrivial,
            includes_trivial,
        }
    }

    /// `{0, 1}` plus the trivial input.
    pub fn binary() -> Self {
        Self::range(2)
    }

    /// `{0, ..., n-1}` plus the trivial input.
    pub fn range(n: u32) -> Self {
        Self::new((0..n).collect(), true)
    }

    pub fn inputs(&self) -> &[u32] {
        &self.nontrivial
    }

    pub fn len(&self) -> usize {
        self.nontrivial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nontrivial.is_empty()
    }

    pub fn includes_trivial(&self) -> bool {
        self.includes_trivial
    }

    pub fn position(&self, symbol: u32) -> Option<usize> {
        self.nontrivial.iter().position(|&s| s == symbol)
    }

    pub fn is_binary(&self) -> bool {
        self.nontrivial == [0, 1]
    }

    fn first_duplicate(&self) -> Option<u32> {
        let mut seen = self.nontrivial.clone();
        seen.sort_unstable();
        seen.windows(2).find(|w| w[0] == w[1]).map(|w| w[0])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Party {
    pub label: String,
    pub alphabet: InputAlphabet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Source {
    pub label: String,
    pub feeds: Vec<PartyId>,
}

/// A structural problem found by [`Network::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    EmptyAlphabet { party: String },
    DuplicateInput { party: String, symbol: u32 },
    DuplicatePartyId(String),
    DuplicateSourceId(String),
    EmptySource { source: String },
    UnderfedSource { source: String },
    RepeatedFeed { source: String, party: String },
    DisconnectedParty { party: String },
    Cyclic,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::EmptyAlphabet { party } => write!(f, "party `{party}` has no inputs"),
            Diagnostic::DuplicateInput { party, symbol } => {
                write!(f, "party `{party}` repeats input {symbol}")
            }
            Diagnostic::DuplicatePartyId(id) => write!(f, "duplicate party id `{id}`"),
            Diagnostic::DuplicateSourceId(id) => write!(f, "duplicate source id `{id}`"),
            Diagnostic::EmptySource { source } => write!(f, "source `{source}` feeds no party"),
            Diagnostic::UnderfedSource { source } => {
                write!(f, "source `{source}` feeds a single party but is not the seed source")
            }
            Diagnostic::RepeatedFeed { source, party } => {
                write!(f, "source `{source}` feeds party `{party}` twice")
            }
            Diagnostic::DisconnectedParty { party } => {
                write!(f, "disconnected party `{party}` receives no source")
            }
            Diagnostic::Cyclic => write!(f, "cyclic: party/source incidence graph is not a forest"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    parties: Vec<Party>,
    sources: Vec<Source>,
}

impl Network {
    /// A single source feeding every party: the standard Bell scenario.
    pub fn seed(num_parties: usize, alphabets: Vec<InputAlphabet>) -> Result<Self> {
        if num_parties == 0 {
            return Err(Error::NoParties);
        }
        if alphabets.len() != num_parties {
            return Err(Error::AlphabetCount {
                expected: num_parties,
                got: alphabets.len(),
            });
        }
        let parties = alphabets
            .into_iter()
            .enumerate()
            .map(|(i, alphabet)| Party {
                label: format!("A{}", i + 1),
                alphabet,
            })
            .collect::<Vec<_>>();
        for p in &parties {
            check_alphabet(p)?;
        }
        let sources = vec![Source {
            label: "S1".to_string(),
            feeds: (0..num_parties).map(PartyId).collect(),
        }];
        Ok(Self { parties, sources })
    }

    /// Attach a new source to `anchor` and a new binary-input party. The new
    /// party is labelled `A{M+1}` and the source `S{N+1}`.
    pub fn add_leaf(&self, anchor: PartyId, alphabet: InputAlphabet) -> Result<Self> {
        let label = format!("A{}", self.parties.len() + 1);
        self.add_leaf_named(anchor, &label, alphabet)
    }

    pub fn add_leaf_named(
        &self,
        anchor: PartyId,
        label: &str,
        alphabet: InputAlphabet,
    ) -> Result<Self> {
        if anchor.0 >= self.parties.len() {
            return Err(Error::PartyNotFound(format!("#{}", anchor.0)));
        }
        if !alphabet.is_binary() {
            return Err(Error::NotBinary(label.to_string()));
        }
        if self.party_by_label(label).is_some() {
            return Err(Error::DuplicateId(label.to_string()));
        }
        let mut source_label = format!("S{}", self.sources.len() + 1);
        while self.sources.iter().any(|s| s.label == source_label) {
            source_label.push('\'');
        }
        let mut next = self.clone();
        let new_party = PartyId(next.parties.len());
        next.parties.push(Party {
            label: label.to_string(),
            alphabet,
        });
        next.sources.push(Source {
            label: source_label,
            feeds: vec![anchor, new_party],
        });
        Ok(next)
    }

    /// Assemble a network from labelled parts without structural validation.
    /// Unknown party references are still an error since they cannot be
    /// represented.
    pub fn from_parts(
        parties: Vec<(String, InputAlphabet)>,
        sources: Vec<(String, Vec<String>)>,
    ) -> Result<Self> {
        let parties: Vec<Party> = parties
            .into_iter()
            .map(|(label, alphabet)| Party { label, alphabet })
            .collect();
        let lookup = |label: &str| {
            parties
                .iter()
                .position(|p| p.label == label)
                .map(PartyId)
                .ok_or_else(|| Error::PartyNotFound(label.to_string()))
        };
        let sources = sources
            .into_iter()
            .map(|(label, feeds)| {
                let feeds = feeds
                    .iter()
                    .map(|f| lookup(f))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Source { label, feeds })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { parties, sources })
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    pub fn sources(&self) -> &[Source] {
        &self.sources
    }

    pub fn num_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn party(&self, id: PartyId) -> &Party {
        &self.parties[id.0]
    }

    pub fn source(&self, id: SourceId) -> &Source {
        &self.sources[id.0]
    }

    pub fn alphabet(&self, id: PartyId) -> &InputAlphabet {
        &self.parties[id.0].alphabet
    }

    pub fn party_ids(&self) -> impl DoubleEndedIterator<Item = PartyId> + ExactSizeIterator {
        (0..self.parties.len()).map(PartyId)
    }

    pub fn source_ids(&self) -> impl DoubleEndedIterator<Item = SourceId> + ExactSizeIterator {
        (0..self.sources.len()).map(SourceId)
    }

    pub fn party_by_label(&self, label: &str) -> Option<PartyId> {
        self.parties.iter().position(|p| p.label == label).map(PartyId)
    }

    pub fn party_by_label_or_err(&self, label: &str) -> Result<PartyId> {
        self.party_by_label(label)
            .ok_or_else(|| Error::PartyNotFound(label.to_string()))
    }

    /// Sources feeding `party`, in source order.
    pub fn sources_of(&self, party: PartyId) -> Vec<SourceId> {
        self.source_ids()
            .filter(|s| self.sources[s.0].feeds.contains(&party))
            .collect()
    }

    /// List every violated structural invariant. Empty means valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        for (i, p) in self.parties.iter().enumerate() {
            if self.parties[..i].iter().any(|q| q.label == p.label) {
                diags.push(Diagnostic::DuplicatePartyId(p.label.clone()));
            }
            if p.alphabet.is_empty() {
                diags.push(Diagnostic::EmptyAlphabet {
                    party: p.label.clone(),
                });
            }
            if let Some(symbol) = p.alphabet.first_duplicate() {
                diags.push(Diagnostic::DuplicateInput {
                    party: p.label.clone(),
                    symbol,
                });
            }
        }
        for (i, s) in self.sources.iter().enumerate() {
            if self.sources[..i].iter().any(|t| t.label == s.label) {
                diags.push(Diagnostic::DuplicateSourceId(s.label.clone()));
            }
            if s.feeds.is_empty() {
                diags.push(Diagnostic::EmptySource {
                    source: s.label.clone(),
                });
            } else if s.feeds.len() == 1 && i > 0 {
                // only the seed source may serve a single party
                diags.push(Diagnostic::UnderfedSource {
                    source: s.label.clone(),
                });
            }
            for (k, f) in s.feeds.iter().enumerate() {
                if s.feeds[..k].contains(f) {
                    diags.push(Diagnostic::RepeatedFeed {
                        source: s.label.clone(),
                        party: self.parties[f.0].label.clone(),
                    });
                }
            }
        }
        for p in self.party_ids() {
            if !self.sources.iter().any(|s| s.feeds.contains(&p)) {
                diags.push(Diagnostic::DisconnectedParty {
                    party: self.parties[p.0].label.clone(),
                });
            }
        }
        if !self.incidence_is_forest() {
            diags.push(Diagnostic::Cyclic);
        }
        diags
    }

    // Bipartite graph on parties + sources; a forest has exactly
    // (vertices - components) edges, so any union of already-joined vertices
    // closes a cycle.
    fn incidence_is_forest(&self) -> bool {
        let m = self.parties.len();
        let mut parent: Vec<usize> = (0..m + self.sources.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (si, s) in self.sources.iter().enumerate() {
            let mut seen = Vec::new();
            for f in &s.feeds {
                if seen.contains(f) {
                    continue;
                }
                seen.push(*f);
                let a = find(&mut parent, m + si);
                let b = find(&mut parent, f.0);
                if a == b {
                    return false;
                }
                parent[a] = b;
            }
        }
        true
    }

    /// Check that `self` is `base` plus one leaf attached at `anchor`, and
    /// return the new party.
    pub fn leaf_over(&self, base: &Network, anchor: PartyId) -> Result<PartyId> {
        let m = base.parties.len();
        let n = base.sources.len();
        if self.parties.len() != m + 1 || self.sources.len() != n + 1 {
            return Err(Error::NotALeafExtension(format!(
                "expected {} parties and {} sources, found {} and {}",
                m + 1,
                n + 1,
                self.parties.len(),
                self.sources.len()
            )));
        }
        if self.parties[..m] != base.parties[..] || self.sources[..n] != base.sources[..] {
            return Err(Error::NotALeafExtension(
                "existing parties or sources differ".into(),
            ));
        }
        let new_party = PartyId(m);
        if self.sources[n].feeds != [anchor, new_party] {
            return Err(Error::NotALeafExtension(format!(
                "new source does not feed exactly {{{}, {}}}",
                base.parties
                    .get(anchor.0)
                    .map(|p| p.label.as_str())
                    .unwrap_or("?"),
                self.parties[m].label
            )));
        }
        if !self.parties[m].alphabet.is_binary() {
            return Err(Error::NotBinary(self.parties[m].label.clone()));
        }
        Ok(new_party)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&NetworkJson::from(self)).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: NetworkJson = serde_json::from_str(s)?;
        Self::try_from(raw)
    }
}

fn check_alphabet(p: &Party) -> Result<()> {
    if p.alphabet.is_empty() {
        return Err(Error::EmptyAlphabet(p.label.clone()));
    }
    if let Some(sym) = p.alphabet.first_duplicate() {
        return Err(Error::DuplicateInput(p.label.clone(), sym));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PartyJson {
    id: String,
    inputs: Vec<u32>,
    trivial: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct SourceJson {
    id: String,
    feeds: Vec<String>,
}

/// Wire form of a [`Network`].
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkJson {
    parties: Vec<PartyJson>,
    sources: Vec<SourceJson>,
}

impl From<&Network> for NetworkJson {
    fn from(net: &Network) -> Self {
        NetworkJson {
            parties: net
                .parties
                .iter()
                .map(|p| PartyJson {
                    id: p.label.clone(),
                    inputs: p.alphabet.nontrivial.clone(),
                    trivial: p.alphabet.includes_trivial,
                })
                .collect(),
            sources: net
                .sources
                .iter()
                .map(|s| SourceJson {
                    id: s.label.clone(),
                    feeds: s
                        .feeds
                        .iter()
                        .map(|f| net.parties[f.0].label.clone())
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<NetworkJson> for Network {
    type Error = Error;

    fn try_from(raw: NetworkJson) -> Result<Self> {
        let net = Network::from_parts(
            raw.parties
                .into_iter()
                .map(|p| (p.id, InputAlphabet::new(p.inputs, p.trivial)))
                .collect(),
            raw.sources.into_iter().map(|s| (s.id, s.feeds)).collect(),
        )?;
        if net.parties.is_empty() {
            return Err(Error::NoParties);
        }
        let diags = net.validate();
        if !diags.is_empty() {
            return Err(Error::InvalidNetwork(diags));
        }
        Ok(net)
    }
}

impl Serialize for Network {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NetworkJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Network {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = NetworkJson::deserialize(d)?;
        Network::try_from(raw).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(n: usize) -> Vec<InputAlphabet> {
        vec![InputAlphabet::binary(); n]
    }

    fn bilocal() -> Network {
        let chsh = Network::seed(2, binary(2)).unwrap();
        chsh.add_leaf(PartyId(1), InputAlphabet::binary()).unwrap()
    }

    #[test]
    fn seed_shapes() {
        let chsh = Network::seed(2, binary(2)).unwrap();
        assert_eq!(chsh.num_sources(), 1);
        assert_eq!(chsh.num_parties(), 2);
        assert!(chsh.validate().is_empty());

        let trivial = Network::seed(1, binary(1)).unwrap();
        assert_eq!(trivial.num_parties(), 1);
        assert!(trivial.validate().is_empty());

        let mermin = Network::seed(3, binary(3)).unwrap();
        assert_eq!(mermin.sources()[0].feeds.len(), 3);
    }

    #[test]
    fn seed_rejects_empty_alphabet() {
        let err = Network::seed(2, vec![InputAlphabet::binary(), InputAlphabet::new(vec![], true)]);
        assert!(matches!(err, Err(Error::EmptyAlphabet(p)) if p == "A2"));
        assert!(matches!(Network::seed(0, vec![]), Err(Error::NoParties)));
    }

    #[test]
    fn leaf_addition_builds_standard_topologies() {
        let biloc = bilocal();
        assert_eq!((biloc.num_sources(), biloc.num_parties()), (2, 3));
        assert_eq!(biloc.sources()[1].feeds, vec![PartyId(1), PartyId(2)]);

        let chain = biloc.add_leaf(PartyId(2), InputAlphabet::binary()).unwrap();
        assert_eq!((chain.num_sources(), chain.num_parties()), (3, 4));
        assert!(chain.validate().is_empty());

        let star = biloc.add_leaf(PartyId(1), InputAlphabet::binary()).unwrap();
        assert_eq!(star.sources_of(PartyId(1)).len(), 3);
        assert!(star.validate().is_empty());
    }

    #[test]
    fn leaf_errors() {
        let biloc = bilocal();
        assert!(matches!(
            biloc.add_leaf(PartyId(7), InputAlphabet::binary()),
            Err(Error::PartyNotFound(_))
        ));
        assert!(matches!(
            biloc.add_leaf(PartyId(0), InputAlphabet::range(3)),
            Err(Error::NotBinary(_))
        ));
    }

    #[test]
    fn triangle_is_cyclic() {
        let triangle = Network::from_parts(
            ["A", "B", "C"]
                .iter()
                .map(|l| (l.to_string(), InputAlphabet::binary()))
                .collect(),
            vec![
                ("S1".into(), vec!["A".into(), "B".into()]),
                ("S2".into(), vec!["B".into(), "C".into()]),
                ("S3".into(), vec!["C".into(), "A".into()]),
            ],
        )
        .unwrap();
        assert_eq!(triangle.validate(), vec![Diagnostic::Cyclic]);
    }

    #[test]
    fn disconnected_party_is_flagged() {
        let net = Network::from_parts(
            vec![
                ("A".into(), InputAlphabet::binary()),
                ("B".into(), InputAlphabet::binary()),
                ("C".into(), InputAlphabet::binary()),
            ],
            vec![("S1".into(), vec!["A".into(), "B".into()])],
        )
        .unwrap();
        assert_eq!(
            net.validate(),
            vec![Diagnostic::DisconnectedParty { party: "C".into() }]
        );
    }

    #[test]
    fn parallel_sources_close_a_cycle() {
        let net = Network::from_parts(
            vec![
                ("A".into(), InputAlphabet::binary()),
                ("B".into(), InputAlphabet::binary()),
            ],
            vec![
                ("S1".into(), vec!["A".into(), "B".into()]),
                ("S2".into(), vec!["A".into(), "B".into()]),
            ],
        )
        .unwrap();
        assert!(net.validate().contains(&Diagnostic::Cyclic));
    }

    #[test]
    fn json_round_trip_is_byte_stable() {
        let net = bilocal().add_leaf(PartyId(1), InputAlphabet::binary()).unwrap();
        let text = net.to_json();
        let back = Network::from_json(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn json_rejects_invalid_networks() {
        let cyclic = r#"{"parties":[{"id":"A","inputs":[0,1],"trivial":true},{"id":"B","inputs":[0,1],"trivial":true}],
            "sources":[{"id":"S1","feeds":["A","B"]},{"id":"S2","feeds":["B","A"]}]}"#;
        assert!(matches!(Network::from_json(cyclic), Err(Error::InvalidNetwork(_))));
        let dangling = r#"{"parties":[{"id":"A","inputs":[0,1],"trivial":true}],
            "sources":[{"id":"S1","feeds":["Z"]}]}"#;
        assert!(matches!(Network::from_json(dangling), Err(Error::PartyNotFound(_))));
    }

    #[test]
    fn leaf_over_detects_mismatch() {
        let chsh = Network::seed(2, binary(2)).unwrap();
        let biloc = bilocal();
        assert_eq!(biloc.leaf_over(&chsh, PartyId(1)).unwrap(), PartyId(2));
        assert!(biloc.leaf_over(&chsh, PartyId(0)).is_err());
        assert!(chsh.leaf_over(&chsh, PartyId(0)).is_err());
    }

    #[test]
    fn only_the_seed_source_may_be_single() {
        let trivial = Network::seed(1, vec![InputAlphabet::binary()]).unwrap();
        assert!(trivial.validate().is_empty());
        let grown = trivial.add_leaf(PartyId(0), InputAlphabet::binary()).unwrap();
        assert!(grown.validate().is_empty());

        let bin = InputAlphabet::binary();
        let net = Network::from_parts(
            vec![("A".into(), bin.clone()), ("B".into(), bin)],
            vec![
                ("S1".into(), vec!["A".into(), "B".into()]),
                ("S2".into(), vec!["B".into()]),
            ],
        )
        .unwrap();
        assert_eq!(
            net.validate(),
            vec![Diagnostic::UnderfedSource { source: "S2".into() }]
        );
    }
}
