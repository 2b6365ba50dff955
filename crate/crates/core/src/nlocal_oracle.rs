//! Classical network models with one independent hidden variable per source.
//!
//! A party's output is a deterministic ±1 function of its input and of the
//! hidden values it receives, so a model is a product distribution over
//! hidden values plus one response table per party. These serve as the
//! reference oracle for inequalities: exhaustive deterministic enumeration
//! for linear maxima, and seeded random mixtures as a property test for
//! quantified inequalities.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlations::{Behavior, CorrelatorSource, CorrelatorTable, InputTuple};
use crate::error::{Error, Result};
use crate::inequality::{
    evaluate_source_with_tol, EvaluationResult, LinearBellExpression, QuantifiedBellExpression,
};
use crate::network::{Network, PartyId};

pub const DEFAULT_ALPHABET: usize = 4;
pub const DEFAULT_BUDGET: u128 = 100_000_000;
const NORMALIZATION_TOL: f64 = 1e-12;

/// Cardinality of each source's hidden variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HiddenAlphabet(Vec<usize>);

impl HiddenAlphabet {
    pub fn new(net: &Network, sizes: Vec<usize>) -> Result<Self> {
        if sizes.len() != net.num_sources() {
            return Err(Error::DimensionMismatch(format!(
                "{} alphabet sizes for {} sources",
                sizes.len(),
                net.num_sources()
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::Schema("hidden alphabets need at least one value".into()));
        }
        Ok(Self(sizes))
    }

    pub fn uniform(net: &Network, size: usize) -> Result<Self> {
        Self::new(net, vec![size; net.num_sources()])
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }
}

/// Per-party bookkeeping: which sources it listens to and their sizes.
#[derive(Clone, Debug, PartialEq)]
struct PartyWiring {
    sources: Vec<usize>,
    /// number of joint received values
    width: usize,
}

fn wiring(net: &Network, alphabet: &HiddenAlphabet) -> Vec<PartyWiring> {
    net.party_ids()
        .map(|p| {
            let sources: Vec<usize> = net.sources_of(p).iter().map(|s| s.index()).collect();
            let width = sources.iter().map(|&s| alphabet.0[s]).product();
            PartyWiring { sources, width }
        })
        .collect()
}

/// Hidden-variable model: product distribution and response tables.
#[derive(Clone, Debug, PartialEq)]
pub struct NLocalModel {
    network: Arc<Network>,
    alphabet: HiddenAlphabet,
    distributions: Vec<Vec<f64>>,
    /// per party: `responses[p][input_pos * width + received]`
    responses: Vec<Vec<i8>>,
    wiring: Vec<PartyWiring>,
    /// `(weight, per-party received index)` over hidden values with nonzero
    /// probability
    support: Vec<(f64, Vec<usize>)>,
}

impl NLocalModel {
    pub fn new(
        network: Arc<Network>,
        alphabet: HiddenAlphabet,
        distributions: Vec<Vec<f64>>,
        responses: Vec<Vec<i8>>,
    ) -> Result<Self> {
        let sizes = alphabet.sizes();
        if sizes.len() != network.num_sources() || distributions.len() != sizes.len() {
            return Err(Error::DimensionMismatch(
                "one hidden alphabet and distribution per source".into(),
            ));
        }
        for (d, &n) in distributions.iter().zip(sizes) {
            if d.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "distribution has {} entries for an alphabet of {n}",
                    d.len()
                )));
            }
            if let Some(&bad) = d.iter().find(|&&x| x < 0.0 || !x.is_finite()) {
                return Err(Error::NegativeProbability(bad));
            }
            let sum: f64 = d.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::NotNormalized {
                    tuple: "hidden distribution".into(),
                    sum,
                });
            }
        }
        let wiring = wiring(&network, &alphabet);
        if responses.len() != network.num_parties() {
            return Err(Error::DimensionMismatch("one response table per party".into()));
        }
        for (p, (table, w)) in network.party_ids().zip(responses.iter().zip(&wiring)) {
            let expected = network.alphabet(p).len() * w.width;
            if table.len() != expected {
                return Err(Error::DimensionMismatch(format!(
                    "party `{}` has {} responses, expected {expected}",
                    network.party(p).label,
                    table.len()
                )));
            }
            if table.iter().any(|&r| r != 1 && r != -1) {
                return Err(Error::Schema(format!(
                    "party `{}` has a response other than ±1",
                    network.party(p).label
                )));
            }
        }
        let support = support(&network, sizes, &distributions, &wiring);
        Ok(Self {
            network,
            alphabet,
            distributions,
            responses,
            wiring,
            support,
        })
    }

    pub fn network(&self) -> &Arc<Network> {
        &self.network
    }

    pub fn alphabet(&self) -> &HiddenAlphabet {
        &self.alphabet
    }

    pub fn distributions(&self) -> &[Vec<f64>] {
        &self.distributions
    }

    /// Response of `party` to `input` given the joint index of its received
    /// hidden values; the trivial input answers +1.
    pub fn response(&self, party: PartyId, input: Option<u32>, received: usize) -> i8 {
        match input {
            None => 1,
            Some(x) => {
                let pos = self.network.alphabet(party).position(x).expect("valid input");
                self.responses[party.index()][pos * self.wiring[party.index()].width + received]
            }
        }
    }

    /// `⟨Π a⟩ = Σ_λ Π_i ρ_i(λ_i) Π_j a^j(x^j, λ_j)`
    pub fn correlator(&self, tuple: &InputTuple) -> Result<f64> {
        tuple.validate(&self.network)?;
        let active: Vec<(usize, usize)> = self
            .network
            .party_ids()
            .filter_map(|p| {
                tuple.get(p).map(|x| {
                    let pos = self.network.alphabet(p).position(x).expect("validated");
                    (p.index(), pos * self.wiring[p.index()].width)
                })
            })
            .collect();
        if active.is_empty() {
            return Ok(1.0);
        }
        Ok(self
            .support
            .iter()
            .map(|(w, recv)| {
                let sign: i8 = active
                    .iter()
                    .map(|&(p, base)| self.responses[p][base + recv[p]])
                    .product();
                w * sign as f64
            })
            .sum())
    }

    pub fn correlator_table(&self) -> Result<CorrelatorTable> {
        CorrelatorTable::from_fn(self.network.clone(), |t| self.correlator(t))
    }

    pub fn behavior(&self) -> Result<Behavior> {
        let m = self.network.num_parties();
        Behavior::from_fn(self.network.clone(), |outputs, inputs| {
            self.support
                .iter()
                .filter(|(_, recv)| {
                    (0..m).all(|p| {
                        let party = PartyId::new(p);
                        self.response(party, inputs.get(party), recv[p]) == outputs[p]
                    })
                })
                .map(|(w, _)| w)
                .sum()
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&NLocalModelJson::from(self)).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: NLocalModelJson = serde_json::from_str(s)?;
        Self::new(
            Arc::new(raw.network),
            raw.hidden_alphabet,
            raw.distributions,
            raw.responses,
        )
    }
}

fn support(
    net: &Network,
    sizes: &[usize],
    distributions: &[Vec<f64>],
    wiring: &[PartyWiring],
) -> Vec<(f64, Vec<usize>)> {
    let mut out = Vec::new();
    let mut lambda = vec![0usize; sizes.len()];
    loop {
        let w: f64 = lambda
            .iter()
            .zip(distributions)
            .map(|(&l, d)| d[l])
            .product();
        if w != 0.0 {
            let recv = net
                .party_ids()
                .map(|p| {
                    wiring[p.index()]
                        .sources
                        .iter()
                        .fold(0, |acc, &s| acc * sizes[s] + lambda[s])
                })
                .collect();
            out.push((w, recv));
        }
        // odometer, last source fastest
        let mut k = sizes.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            lambda[k] += 1;
            if lambda[k] < sizes[k] {
                break;
            }
            lambda[k] = 0;
        }
    }
}

impl CorrelatorSource for NLocalModel {
    fn network(&self) -> &Network {
        &self.network
    }

    fn correlator(&self, tuple: &InputTuple) -> Result<f64> {
        NLocalModel::correlator(self, tuple)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NLocalModelJson {
    network: Network,
    hidden_alphabet: HiddenAlphabet,
    distributions: Vec<Vec<f64>>,
    responses: Vec<Vec<i8>>,
}

impl From<&NLocalModel> for NLocalModelJson {
    fn from(m: &NLocalModel) -> Self {
        Self {
            network: (*m.network).clone(),
            hidden_alphabet: m.alphabet.clone(),
            distributions: m.distributions.clone(),
            responses: m.responses.clone(),
        }
    }
}

/// Indexed family of deterministic strategies.
///
/// With `dedup` every source sits at hidden value 0 and only the responses
/// to that value vary: any point-mass strategy is a relabeling of one of
/// these, so this covers all deterministic correlations with
/// `2^(total inputs)` members. Without it, every point mass and every full
/// response table is visited.
#[derive(Clone, Debug)]
pub struct Enumeration {
    network: Arc<Network>,
    alphabet: HiddenAlphabet,
    dedup: bool,
    wiring: Vec<PartyWiring>,
    points: u128,
    count: u128,
}

pub fn enumerate_deterministic(
    network: Arc<Network>,
    alphabet: HiddenAlphabet,
    dedup: bool,
    budget: u128,
) -> Result<Enumeration> {
    let wiring = wiring(&network, &alphabet);
    let bits: u32 = network
        .party_ids()
        .zip(&wiring)
        .map(|(p, w)| {
            let per_input = if dedup { 1 } else { w.width };
            (network.alphabet(p).len() * per_input) as u32
        })
        .sum();
    let points: u128 = if dedup {
        1
    } else {
        alphabet
            .sizes()
            .iter()
            .try_fold(1u128, |acc, &n| acc.checked_mul(n as u128))
            .unwrap_or(u128::MAX)
    };
    let count = 1u128
        .checked_shl(bits)
        .filter(|_| bits < 128)
        .and_then(|c| c.checked_mul(points))
        .unwrap_or(u128::MAX);
    if count > budget {
        return Err(Error::BudgetExceeded {
            required: count,
            budget,
        });
    }
    Ok(Enumeration {
        network,
        alphabet,
        dedup,
        wiring,
        points,
        count,
    })
}

impl Enumeration {
    pub fn count(&self) -> u128 {
        self.count
    }

    pub fn strategy(&self, index: u128) -> NLocalModel {
        assert!(index < self.count, "strategy index out of range");
        let sizes = self.alphabet.sizes();
        let mut point = index % self.points;
        let mut bits = index / self.points;
        let mut lambda = vec![0usize; sizes.len()];
        for k in (0..sizes.len()).rev() {
            lambda[k] = (point % sizes[k] as u128) as usize;
            point /= sizes[k] as u128;
        }
        let distributions = sizes
            .iter()
            .zip(&lambda)
            .map(|(&n, &l)| {
                let mut d = vec![0.0; n];
                d[l] = 1.0;
                d
            })
            .collect();
        let responses = self
            .network
            .party_ids()
            .zip(&self.wiring)
            .map(|(p, w)| {
                let n = self.network.alphabet(p).len();
                let mut table = vec![1i8; n * w.width];
                for x in 0..n {
                    let free = if self.dedup { 1 } else { w.width };
                    for r in 0..free {
                        if bits & 1 == 1 {
                            table[x * w.width + r] = -1;
                        }
                        bits >>= 1;
                    }
                }
                table
            })
            .collect();
        NLocalModel::new(
            self.network.clone(),
            self.alphabet.clone(),
            distributions,
            responses,
        )
        .expect("enumerated strategies are valid")
    }

    pub fn iter(&self) -> impl Iterator<Item = NLocalModel> + '_ {
        (0..self.count).map(|i| self.strategy(i))
    }
}

/// Maximum of a linear expression over classical models with the given
/// hidden alphabets. The value is multilinear in each source's
/// distribution, so deterministic strategies attain it.
pub fn max_linear(
    expr: &LinearBellExpression,
    alphabet: &HiddenAlphabet,
    budget: u128,
) -> Result<f64> {
    let e = enumerate_deterministic(expr.network().clone(), alphabet.clone(), true, budget)?;
    let count = u64::try_from(e.count()).expect("budgeted count fits");
    (0..count)
        .into_par_iter()
        .map(|i| expr.value(&e.strategy(i as u128)))
        .try_reduce(|| f64::NEG_INFINITY, |a, b| Ok(a.max(b)))
}

/// Counter-based stream: sample `index` under `seed` is independent of how
/// many samples are drawn or in what order.
fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn random_simplex(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let sum: f64 = e.iter().sum();
    let mut p: Vec<f64> = e.iter().map(|x| x / sum).collect();
    // fold rounding into the largest weight so the sum is 1 to the last bit
    let err = 1.0 - p.iter().sum::<f64>();
    let big = (0..n)
        .max_by(|&a, &b| p[a].total_cmp(&p[b]))
        .expect("nonempty alphabet");
    p[big] += err;
    p
}

fn random_responses(rng: &mut impl Rng, net: &Network, wiring: &[PartyWiring]) -> Vec<Vec<i8>> {
    net.party_ids()
        .zip(wiring)
        .map(|(p, w)| {
            (0..net.alphabet(p).len() * w.width)
                .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
                .collect()
        })
        .collect()
}

/// Random model: simplex-uniform distributions, uniform ±1 responses.
pub fn random_nlocal(
    network: Arc<Network>,
    alphabet: &HiddenAlphabet,
    seed: u64,
    index: u64,
) -> NLocalModel {
    let mut rng = sample_rng(seed, index);
    let distributions = alphabet
        .sizes()
        .iter()
        .map(|&n| random_simplex(&mut rng, n))
        .collect();
    let wiring = wiring(&network, alphabet);
    let responses = random_responses(&mut rng, &network, &wiring);
    NLocalModel::new(network, alphabet.clone(), distributions, responses)
        .expect("sampled models are valid")
}

/// Random point-mass model.
pub fn random_deterministic(
    network: Arc<Network>,
    alphabet: &HiddenAlphabet,
    seed: u64,
    index: u64,
) -> NLocalModel {
    let mut rng = sample_rng(seed, index);
    let distributions = alphabet
        .sizes()
        .iter()
        .map(|&n| {
            let mut d = vec![0.0; n];
            d[rng.random_range(0..n)] = 1.0;
            d
        })
        .collect();
    let wiring = wiring(&network, alphabet);
    let responses = random_responses(&mut rng, &network, &wiring);
    NLocalModel::new(network, alphabet.clone(), distributions, responses)
        .expect("sampled models are valid")
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    /// hidden alphabet size for exhaustive deterministic enumeration
    pub deterministic_alphabet: usize,
    /// hidden alphabet size for sampled mixtures
    pub sample_alphabet: usize,
    pub samples: u64,
    pub seed: u64,
    pub budget: u128,
    pub dedup: bool,
    pub tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            deterministic_alphabet: 2,
            sample_alphabet: DEFAULT_ALPHABET,
            samples: 100_000,
            seed: 0,
            budget: DEFAULT_BUDGET,
            dedup: true,
            tol: crate::inequality::VIOLATION_TOL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Deterministic,
    Sampled,
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub phase: Phase,
    pub index: u64,
    pub model: serde_json::Value,
    pub evaluation: EvaluationResult,
}

#[derive(Clone, Debug, Serialize)]
pub struct HiddenAlphabets {
    pub deterministic: Vec<usize>,
    pub sampled: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub verified: bool,
    pub strategy_count: u128,
    pub sample_count: u64,
    /// largest minimized left-hand side over all checked models (`null` if
    /// every one was unbounded below)
    pub max_lhs_seen: f64,
    pub bound: f64,
    pub hidden_alphabet: HiddenAlphabets,
    pub seed: u64,
    pub note: String,
    pub counterexample: Option<Counterexample>,
}

/// Best finite left-hand side and first violation, by index.
fn scan(
    count: u64,
    eval: impl Fn(u64) -> Result<EvaluationResult> + Sync,
) -> Result<(f64, Option<u64>)> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let r = eval(i)?;
            let lhs = if r.unbounded_below { f64::NEG_INFINITY } else { r.min_lhs };
            Ok((lhs, r.violated.then_some(i)))
        })
        .try_reduce(
            || (f64::NEG_INFINITY, None),
            |a, b| {
                let first = match (a.1, b.1) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (x, y) => x.or(y),
                };
                Ok((a.0.max(b.0), first))
            },
        )
}

/// Check `expr` on every deterministic strategy and on seeded random
/// mixtures. This is a property test: passing is evidence, not a proof.
pub fn verify_quantified(expr: &QuantifiedBellExpression, cfg: &VerifyConfig) -> Result<Verdict> {
    let net = expr.network().clone();
    let det_alphabet = HiddenAlphabet::uniform(&net, cfg.deterministic_alphabet)?;
    let sample_alphabet = HiddenAlphabet::uniform(&net, cfg.sample_alphabet)?;
    let enumeration = enumerate_deterministic(net.clone(), det_alphabet.clone(), cfg.dedup, cfg.budget)?;
    let strategy_count = enumeration.count();
    let det_count = u64::try_from(strategy_count).expect("budgeted count fits");

    let hidden_alphabet = HiddenAlphabets {
        deterministic: det_alphabet.sizes().to_vec(),
        sampled: sample_alphabet.sizes().to_vec(),
    };
    let counterexample = |phase, index, model: NLocalModel| -> Result<Counterexample> {
        let evaluation = evaluate_source_with_tol(expr, &model, cfg.tol)?;
        Ok(Counterexample {
            phase,
            index,
            model: serde_json::from_str(&model.to_json())?,
            evaluation,
        })
    };

    let (det_max, det_bad) = scan(det_count, |i| {
        evaluate_source_with_tol(expr, &enumeration.strategy(i as u128), cfg.tol)
    })?;
    let (max_lhs_seen, counterexample, sample_count) = if let Some(i) = det_bad {
        let ce = counterexample(Phase::Deterministic, i, enumeration.strategy(i as u128))?;
        (det_max, Some(ce), 0)
    } else {
        let sample = |i| random_nlocal(net.clone(), &sample_alphabet, cfg.seed, i);
        let (mix_max, mix_bad) = scan(cfg.samples, |i| {
            evaluate_source_with_tol(expr, &sample(i), cfg.tol)
        })?;
        let ce = mix_bad
            .map(|i| counterexample(Phase::Sampled, i, sample(i)))
            .transpose()?;
        (det_max.max(mix_max), ce, cfg.samples)
    };
    let verified = counterexample.is_none();
    let note = if verified {
        "property test: no violation among the enumerated and sampled models; \
         the classical network set is not convex, so this is evidence, not a proof"
    } else {
        "counterexample: a classical network model violates the inequality"
    };
    Ok(Verdict {
        verified,
        strategy_count,
        sample_count,
        max_lhs_seen,
        bound: expr.bound(),
        hidden_alphabet,
        seed: cfg.seed,
        note: note.to_string(),
        counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequality::{evaluate_source, Term};
    use crate::network::InputAlphabet;
    use crate::presets;

    fn chsh_linear() -> LinearBellExpression {
        let q = presets::chsh();
        LinearBellExpression::new(q.network().clone(), q.groups()[0].terms.clone(), 1.0).unwrap()
    }

    #[test]
    fn all_plus_gives_one_everywhere() {
        let net = presets::bilocal().network().clone();
        let alphabet = HiddenAlphabet::uniform(&net, 2).unwrap();
        let e = enumerate_deterministic(net, alphabet, true, 1000).unwrap();
        let table = e.strategy(0).correlator_table().unwrap();
        assert!(table.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn chsh_all_plus_is_one() {
        let lin = chsh_linear();
        let alphabet = HiddenAlphabet::uniform(lin.network(), 1).unwrap();
        let e = enumerate_deterministic(lin.network().clone(), alphabet, true, 100).unwrap();
        assert_eq!(lin.value(&e.strategy(0)).unwrap(), 1.0);
    }

    #[test]
    fn enumeration_counts() {
        let lin = chsh_linear();
        let one = HiddenAlphabet::uniform(lin.network(), 1).unwrap();
        let e = enumerate_deterministic(lin.network().clone(), one.clone(), false, 100).unwrap();
        assert_eq!(e.count(), 16);

        let single = Arc::new(Network::seed(1, vec![InputAlphabet::range(3)]).unwrap());
        let a = HiddenAlphabet::uniform(&single, 1).unwrap();
        assert_eq!(enumerate_deterministic(single, a, true, 100).unwrap().count(), 8);

        // bilocal, |Λ| = 2 without dedup: 4 points × 2^(2·2 + 2·4 + 2·2)
        let net = presets::bilocal().network().clone();
        let two = HiddenAlphabet::uniform(&net, 2).unwrap();
        let e = enumerate_deterministic(net.clone(), two.clone(), false, u128::MAX).unwrap();
        assert_eq!(e.count(), 4 << 16);
        assert!(matches!(
            enumerate_deterministic(net, two, false, 1000),
            Err(Error::BudgetExceeded { required: 262_144, budget: 1000 })
        ));
    }

    #[test]
    fn full_enumeration_visits_each_strategy_once() {
        let lin = chsh_linear();
        let alphabet = HiddenAlphabet::uniform(lin.network(), 2).unwrap();
        let e = enumerate_deterministic(lin.network().clone(), alphabet, false, 10_000).unwrap();
        let mut seen = std::collections::HashSet::new();
        for m in e.iter() {
            assert!(seen.insert(m.to_json()));
        }
        assert_eq!(seen.len() as u128, e.count());
    }

    #[test]
    fn dedup_and_full_enumeration_agree_on_max() {
        let lin = chsh_linear();
        let alphabet = HiddenAlphabet::uniform(lin.network(), 2).unwrap();
        let full = enumerate_deterministic(lin.network().clone(), alphabet.clone(), false, 10_000).unwrap();
        let best = full
            .iter()
            .map(|m| lin.value(&m).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, max_linear(&lin, &alphabet, 10_000).unwrap());
        assert_eq!(best, 1.0);
    }

    #[test]
    fn random_models_are_reproducible() {
        let net = presets::trilocal().network().clone();
        let a = HiddenAlphabet::uniform(&net, 4).unwrap();
        let m1 = random_nlocal(net.clone(), &a, 42, 7);
        let m2 = random_nlocal(net.clone(), &a, 42, 7);
        assert_eq!(m1, m2);
        assert_ne!(m1, random_nlocal(net.clone(), &a, 42, 8));
        assert_ne!(m1, random_nlocal(net, &a, 43, 7));
        for d in m1.distributions() {
            assert_eq!(d.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn sampled_correlators_form_valid_tables() {
        let net = presets::mermin_net().network().clone();
        let a = HiddenAlphabet::uniform(&net, 3).unwrap();
        for i in 0..20 {
            let m = random_nlocal(net.clone(), &a, 5, i);
            let table = m.correlator_table().unwrap();
            let back = crate::correlations::correlators_from_behavior(&m.behavior().unwrap()).unwrap();
            assert!(table.max_abs_diff(&back).unwrap() < 1e-12);
        }
    }

    #[test]
    fn model_validation() {
        let net = Arc::new(Network::seed(1, vec![InputAlphabet::binary()]).unwrap());
        let a = HiddenAlphabet::uniform(&net, 2).unwrap();
        let ok = |d: Vec<f64>, r: Vec<i8>| NLocalModel::new(net.clone(), a.clone(), vec![d], vec![r]);
        assert!(ok(vec![0.5, 0.5], vec![1, -1, 1, 1]).is_ok());
        assert!(ok(vec![0.6, 0.5], vec![1, -1, 1, 1]).is_err());
        assert!(ok(vec![1.5, -0.5], vec![1, -1, 1, 1]).is_err());
        assert!(ok(vec![0.5, 0.5], vec![1, 0, 1, 1]).is_err());
        assert!(ok(vec![0.5, 0.5], vec![1, 1]).is_err());
        assert!(HiddenAlphabet::uniform(&net, 0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let net = presets::bilocal().network().clone();
        let a = HiddenAlphabet::uniform(&net, 3).unwrap();
        let m = random_nlocal(net, &a, 1, 2);
        let back = NLocalModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn linear_maxima() {
        let lin = chsh_linear();
        let a = HiddenAlphabet::uniform(lin.network(), 1).unwrap();
        assert_eq!(max_linear(&lin, &a, 100).unwrap(), 1.0);
        let broken = LinearBellExpression::new(
            lin.network().clone(),
            vec![Term::new(1.0, InputTuple::full(&[0, 0]))],
            1.0,
        )
        .unwrap();
        assert_eq!(max_linear(&broken, &a, 100).unwrap(), 1.0);
    }

    #[test]
    fn corrupted_bound_is_caught() {
        let e = presets::chsh().with_bound(0.5);
        let cfg = VerifyConfig {
            samples: 10,
            ..VerifyConfig::default()
        };
        let v = verify_quantified(&e, &cfg).unwrap();
        assert!(!v.verified);
        let ce = v.counterexample.unwrap();
        assert_eq!(ce.phase, Phase::Deterministic);
        assert_eq!(ce.index, 0);
        assert!(ce.evaluation.violated);
        assert_eq!(v.sample_count, 0);
    }

    #[test]
    fn bilocal_small_verification() {
        let cfg = VerifyConfig {
            samples: 500,
            seed: 11,
            ..VerifyConfig::default()
        };
        let v = verify_quantified(&presets::bilocal(), &cfg).unwrap();
        assert!(v.verified, "{:?}", v.counterexample);
        assert_eq!(v.strategy_count, 64);
        assert!(v.max_lhs_seen <= 1.0 + 1e-9);
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["hidden_alphabet"]["sampled"], serde_json::json!([4, 4]));
        assert!(json["counterexample"].is_null());
    }

    #[test]
    fn deterministic_argmin_certifies() {
        let e = presets::bilocal();
        let net = e.network().clone();
        let alphabet = HiddenAlphabet::uniform(&net, 1).unwrap();
        let en = enumerate_deterministic(net, alphabet, true, 1000).unwrap();
        for m in en.iter() {
            let r = evaluate_source(&e, &m).unwrap();
            if r.unbounded_below {
                continue;
            }
            let lhs = e.lhs_at(&m, &r.argmin_q).unwrap();
            assert!(lhs <= 1.0 + 1e-9, "{lhs}");
        }
    }

    #[test]
    fn sampled_trilocal_models_in_orthant_satisfy_w() {
        let net = presets::trilocal().network().clone();
        let a = HiddenAlphabet::uniform(&net, 4).unwrap();
        let mut inside = 0;
        for i in 0..20_000 {
            let m = random_nlocal(net.clone(), &a, 3, i);
            let [ii, j, k, l] = presets::trilocal_ijkl(&m).unwrap();
            if ii >= 0.0 && j >= 0.0 && k >= 0.0 && l <= 0.0 {
                inside += 1;
                let w = crate::inequality::trilocal_w(ii, j, k, l);
                assert!(w >= -1e-9, "sample {i}: W = {w}");
            }
        }
        assert!(inside > 100, "{inside}");
    }
}
