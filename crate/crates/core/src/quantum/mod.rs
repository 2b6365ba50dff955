//! Correlators of quantum network models.
//!
//! Each source emits a density operator whose subsystems are routed to the
//! parties it feeds; each party measures a ±1-valued observable on the
//! subsystems it holds, ordered by source. The correlator of an input tuple
//! is `Tr[(ρ_1 ⊗ … ⊗ ρ_N) P (O_1 ⊗ … ⊗ O_M) P†]` with `P` reordering tensor
//! factors from source order to party order.
//!
//! The trace is contracted directly over the nonzero entries of the source
//! states: a depth-first walk picks one entry per source, routes its row and
//! column digits into per-party local indices and multiplies in each party's
//! observable entry as soon as all of its subsystems are placed. The
//! permutation `P` is never materialized.

mod scenarios;
mod threshold;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlations::{Behavior, CorrelatorSource, CorrelatorTable, InputTuple};
use crate::error::{Error, Result};
use crate::network::{Network, PartyId, SourceId};

pub use scenarios::{build_scenario_model, scenario_family, Scenario};
pub use threshold::{threshold_scan, ThresholdReport, THRESHOLD_PRECISION};

pub type CMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const INVOLUTION_TOL: f64 = 1e-10;
/// Largest imaginary part tolerated in a correlator.
pub const IMAGINARY_TOL: f64 = 1e-10;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

pub fn pauli_y() -> CMatrix {
    let i = Complex64::new(0.0, 1.0);
    CMatrix::from_row_slice(2, 2, &[c(0.0), -i, i, c(0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

pub fn kron(factors: &[CMatrix]) -> CMatrix {
    factors
        .iter()
        .fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Mixed state of one source, subsystems in the order of the source's feeds.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidState {
            source_id: String::new(),
            reason,
        };
        let d: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) {
            return Err(invalid(format!("bad subsystem dims {dims:?}")));
        }
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(invalid(format!(
                "matrix is {}x{}, dims {dims:?} need {d}x{d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let defect = hermitian_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(invalid(format!("not Hermitian (defect {defect:e})")));
        }
        let tr = matrix.trace();
        if (tr - c(1.0)).norm() > TRACE_TOL {
            return Err(invalid(format!("trace {tr} != 1")));
        }
        let herm = (&matrix + matrix.adjoint()) * c(0.5);
        let min_eig = herm
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(invalid(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { dims, matrix })
    }

    /// `v |ψ⟩⟨ψ| + (1 - v) 𝟙/d`
    pub fn noisy_pure(dims: Vec<usize>, psi: &[Complex64], v: f64) -> Result<Self> {
        let d: usize = dims.iter().product();
        if psi.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "state vector has {} entries, dims need {d}",
                psi.len()
            )));
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi = nalgebra::DVector::from_iterator(d, psi.iter().map(|z| z / norm));
        let pure = &psi * psi.adjoint();
        let m = pure * c(v) + identity(d) * c((1.0 - v) / d as f64);
        Self::new(dims, m)
    }

    /// Two-qubit Werner state `v |Φ+⟩⟨Φ+| + (1 - v) 𝟙/4`.
    pub fn werner(v: f64) -> Result<Self> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::noisy_pure(vec![2, 2], &[c(h), c(0.0), c(0.0), c(h)], v)
    }

    /// `v |GHZ_n⟩⟨GHZ_n| + (1 - v) 𝟙/2^n`.
    pub fn noisy_ghz(n: usize, v: f64) -> Result<Self> {
        let d = 1usize << n;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = vec![c(0.0); d];
        psi[0] = c(h);
        psi[d - 1] = c(h);
        Self::noisy_pure(vec![2; n], &psi, v)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// ±1-valued measurement of one party for one nontrivial input.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    party: PartyId,
    input: u32,
    matrix: CMatrix,
}

impl Observable {
    pub fn new(party: PartyId, input: u32, matrix: CMatrix) -> Self {
        Self {
            party,
            input,
            matrix,
        }
    }

    pub fn party(&self) -> PartyId {
        self.party
    }

    pub fn input(&self) -> u32 {
        self.input
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    fn check(&self, net: &Network, expected_dim: usize) -> Result<()> {
        let invalid = |reason: String| Error::InvalidObservable {
            party: net.party(self.party).label.clone(),
            input: self.input,
            reason,
        };
        let m = &self.matrix;
        if m.nrows() != expected_dim || m.ncols() != expected_dim {
            return Err(invalid(format!(
                "matrix is {}x{}, received subsystems have dimension {expected_dim}",
                m.nrows(),
                m.ncols()
            )));
        }
        let defect = hermitian_defect(m);
        if defect > HERMITIAN_TOL {
            return Err(invalid(format!("not Hermitian (defect {defect:e})")));
        }
        let sq = m * m - identity(expected_dim);
        let defect = sq.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > INVOLUTION_TOL {
            return Err(invalid(format!("square differs from identity by {defect:e}")));
        }
        Ok(())
    }
}

/// Reordering of tensor factors. `order[i]` is the source-order position of
/// the factor placed at position `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemPermutation {
    dims: Vec<usize>,
    order: Vec<usize>,
}

impl SubsystemPermutation {
    pub fn new(dims: Vec<usize>, order: Vec<usize>) -> Result<Self> {
        let mut seen = order.clone();
        seen.sort_unstable();
        if seen != (0..dims.len()).collect::<Vec<_>>() {
            return Err(Error::DimensionMismatch(format!(
                "{order:?} is not a permutation of {} factors",
                dims.len()
            )));
        }
        Ok(Self { dims, order })
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.order.len()];
        for (i, &o) in self.order.iter().enumerate() {
            inv[o] = i;
        }
        Self {
            dims: self.order.iter().map(|&o| self.dims[o]).collect(),
            order: inv,
        }
    }

    fn digits(dims: &[usize], mut idx: usize) -> Vec<usize> {
        let mut d = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            d[k] = idx % dims[k];
            idx /= dims[k];
        }
        d
    }

    /// Image of a basis index.
    pub fn map_index(&self, idx: usize) -> usize {
        let digits = Self::digits(&self.dims, idx);
        self.order
            .iter()
            .fold(0, |acc, &o| acc * self.dims[o] + digits[o])
    }

    /// `P M P†` for a matrix on the source-ordered space.
    pub fn apply(&self, m: &CMatrix) -> CMatrix {
        let d = m.nrows();
        let map: Vec<usize> = (0..d).map(|i| self.map_index(i)).collect();
        let mut out = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out[(map[i], map[j])] = m[(i, j)];
            }
        }
        out
    }
}

struct Entry {
    value: Complex64,
    row: Vec<usize>,
    col: Vec<usize>,
}

/// Precomputed routing of one source.
struct SourcePlan {
    entries: Vec<Entry>,
    /// `(party, dim)` per subsystem
    targets: Vec<(usize, usize)>,
    /// parties whose last subsystem arrives with this source
    completes: Vec<usize>,
}

/// States, observables and wiring for a whole network.
pub struct QuantumNetworkModel {
    network: Arc<Network>,
    states: Vec<DensityOperator>,
    /// per party, in alphabet order
    observables: Vec<Vec<CMatrix>>,
    visibilities: Vec<f64>,
    plan: Vec<SourcePlan>,
    party_dims: Vec<usize>,
}

impl std::fmt::Debug for QuantumNetworkModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuantumNetworkModel")
            .field("network", &self.network)
            .field("party_dims", &self.party_dims)
            .field("visibilities", &self.visibilities)
            .finish_non_exhaustive()
    }
}

impl QuantumNetworkModel {
    /// `states` are in source order; `observables` must cover every
    /// (party, nontrivial input) exactly once.
    pub fn new(
        network: Arc<Network>,
        states: Vec<DensityOperator>,
        observables: Vec<Observable>,
        visibilities: Vec<f64>,
    ) -> Result<Self> {
        let diags = network.validate();
        if !diags.is_empty() {
            return Err(Error::InvalidNetwork(diags));
        }
        if states.len() != network.num_sources() {
            return Err(Error::DimensionMismatch(format!(
                "{} states for {} sources",
                states.len(),
                network.num_sources()
            )));
        }
        let mut party_dims = vec![1usize; network.num_parties()];
        let mut last_source = vec![0usize; network.num_parties()];
        for (s, state) in network.source_ids().zip(&states) {
            let feeds = &network.source(s).feeds;
            if state.dims.len() != feeds.len() {
                return Err(Error::InvalidState {
                    source_id: network.source(s).label.clone(),
                    reason: format!(
                        "{} subsystems for {} parties",
                        state.dims.len(),
                        feeds.len()
                    ),
                });
            }
            for (p, d) in feeds.iter().zip(&state.dims) {
                party_dims[p.index()] *= d;
                last_source[p.index()] = s.index();
            }
        }

        let mut slots: Vec<Vec<Option<CMatrix>>> = network
            .parties()
            .iter()
            .map(|p| vec![None; p.alphabet.len()])
            .collect();
        for o in observables {
            let p = o.party;
            if p.index() >= network.num_parties() {
                return Err(Error::PartyNotFound(format!("#{}", p.index())));
            }
            let Some(pos) = network.alphabet(p).position(o.input) else {
                return Err(Error::InvalidObservable {
                    party: network.party(p).label.clone(),
                    input: o.input,
                    reason: "not an input of this party".into(),
                });
            };
            o.check(&network, party_dims[p.index()])?;
            if slots[p.index()][pos].is_some() {
                return Err(Error::InvalidObservable {
                    party: network.party(p).label.clone(),
                    input: o.input,
                    reason: "given twice".into(),
                });
            }
            slots[p.index()][pos] = Some(o.matrix);
        }
        let mut observables = Vec::with_capacity(slots.len());
        for (p, row) in network.party_ids().zip(slots) {
            let mut full = Vec::with_capacity(row.len());
            for (m, &x) in row.into_iter().zip(network.alphabet(p).inputs()) {
                full.push(m.ok_or_else(|| Error::InvalidObservable {
                    party: network.party(p).label.clone(),
                    input: x,
                    reason: "missing".into(),
                })?);
            }
            observables.push(full);
        }

        let plan = network
            .source_ids()
            .zip(&states)
            .map(|(s, state)| Self::plan_source(&network, s, state, &last_source))
            .collect();
        Ok(Self {
            network,
            states,
            observables,
            visibilities,
            plan,
            party_dims,
        })
    }

    fn plan_source(
        net: &Network,
        s: SourceId,
        state: &DensityOperator,
        last_source: &[usize],
    ) -> SourcePlan {
        let feeds = &net.source(s).feeds;
        let d = state.dim();
        let mut entries = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let value = state.matrix[(i, j)];
                if value != Complex64::new(0.0, 0.0) {
                    entries.push(Entry {
                        value,
                        row: SubsystemPermutation::digits(&state.dims, i),
                        col: SubsystemPermutation::digits(&state.dims, j),
                    });
                }
            }
        }
        let targets = feeds
            .iter()
            .zip(&state.dims)
            .map(|(p, &d)| (p.index(), d))
            .collect();
        let completes = feeds
            .iter()
            .map(|p| p.index())
            .filter(|&p| last_source[p] == s.index())
            .collect();
        SourcePlan {
            entries,
            targets,
            completes,
        }
    }

    pub fn network(&self) -> &Arc<Network> {
        &self.network
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn visibilities(&self) -> &[f64] {
        &self.visibilities
    }

    /// Dimension of the space each party measures on.
    pub fn party_dims(&self) -> &[usize] {
        &self.party_dims
    }

    pub fn observable(&self, party: PartyId, input: u32) -> Option<&CMatrix> {
        let pos = self.network.alphabet(party).position(input)?;
        Some(&self.observables[party.index()][pos])
    }

    /// `ρ_1 ⊗ … ⊗ ρ_N` in source order.
    pub fn global_state(&self) -> CMatrix {
        kron(&self.states.iter().map(|s| s.matrix.clone()).collect::<Vec<_>>())
    }

    /// Permutation taking source-ordered subsystems to party order.
    pub fn party_order(&self) -> SubsystemPermutation {
        let mut dims = Vec::new();
        let mut owner = Vec::new();
        for (s, state) in self.network.source_ids().zip(&self.states) {
            for (p, d) in self.network.source(s).feeds.iter().zip(&state.dims) {
                dims.push(*d);
                owner.push(p.index());
            }
        }
        let mut order: Vec<usize> = (0..dims.len()).collect();
        // stable: within a party, source order is kept
        order.sort_by_key(|&i| owner[i]);
        SubsystemPermutation::new(dims, order).expect("built from a valid wiring")
    }

    pub fn correlator(&self, tuple: &InputTuple) -> Result<f64> {
        tuple.validate(&self.network)?;
        if tuple.symbols().iter().all(Option::is_none) {
            // states are normalized to 1e-12; report the trace exactly
            return Ok(1.0);
        }
        let ops: Vec<Option<&CMatrix>> = self
            .network
            .party_ids()
            .map(|p| {
                tuple.get(p).map(|x| {
                    let pos = self.network.alphabet(p).position(x).expect("validated");
                    &self.observables[p.index()][pos]
                })
            })
            .collect();
        let m = self.network.num_parties();
        let mut rows = vec![0usize; m];
        let mut cols = vec![0usize; m];
        let z = self.contract(0, &ops, &mut rows, &mut cols);
        if z.im.abs() > IMAGINARY_TOL {
            return Err(Error::ImaginaryResidue(z.im));
        }
        Ok(z.re)
    }

    fn contract(
        &self,
        s: usize,
        ops: &[Option<&CMatrix>],
        rows: &mut [usize],
        cols: &mut [usize],
    ) -> Complex64 {
        let Some(plan) = self.plan.get(s) else {
            return Complex64::new(1.0, 0.0);
        };
        let mut total = Complex64::new(0.0, 0.0);
        let saved: Vec<(usize, usize)> = plan.targets.iter().map(|&(p, _)| (rows[p], cols[p])).collect();
        for e in &plan.entries {
            for (k, &(p, d)) in plan.targets.iter().enumerate() {
                rows[p] = rows[p] * d + e.row[k];
                cols[p] = cols[p] * d + e.col[k];
            }
            let mut factor = e.value;
            for &p in &plan.completes {
                // Tr(ρ O) = Σ ρ[i, j] O[j, i]
                factor *= match ops[p] {
                    None if rows[p] == cols[p] => Complex64::new(1.0, 0.0),
                    None => Complex64::new(0.0, 0.0),
                    Some(o) => o[(cols[p], rows[p])],
                };
                if factor == Complex64::new(0.0, 0.0) {
                    break;
                }
            }
            if factor != Complex64::new(0.0, 0.0) {
                total += factor * self.contract(s + 1, ops, rows, cols);
            }
            for (&(p, _), &(r, c)) in plan.targets.iter().zip(&saved) {
                rows[p] = r;
                cols[p] = c;
            }
        }
        total
    }

    pub fn correlator_table(&self) -> Result<CorrelatorTable> {
        CorrelatorTable::from_fn(self.network.clone(), |t| self.correlator(t))
    }

    /// Outcome probabilities, from the correlator expansion
    /// `P(a|x) = 2^-M Σ_S Π_{p∈S} a_p ⟨Π_{p∈S} A_p⟩`.
    pub fn behavior(&self) -> Result<Behavior> {
        let table = self.correlator_table()?;
        behavior_from_table(&table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelJson::from(self)).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: ModelJson = serde_json::from_str(s)?;
        Self::try_from(raw)
    }
}

impl CorrelatorSource for QuantumNetworkModel {
    fn network(&self) -> &Network {
        &self.network
    }

    fn correlator(&self, tuple: &InputTuple) -> Result<f64> {
        QuantumNetworkModel::correlator(self, tuple)
    }
}

/// Behavior whose full set of correlators is `table`.
pub fn behavior_from_table(table: &CorrelatorTable) -> Result<Behavior> {
    let net = table.network_arc().clone();
    let m = net.num_parties();
    let mut err = None;
    let b = Behavior::from_fn(net, |outputs, inputs| {
        let mut p = 0.0;
        for subset in 0u64..(1 << m) {
            let mut sign = 1.0;
            let t = InputTuple::new(
                (0..m)
                    .map(|k| {
                        if subset >> k & 1 == 1 {
                            sign *= outputs[k] as f64;
                            inputs.symbols()[k]
                        } else {
                            None
                        }
                    })
                    .collect(),
            );
            match table.get(&t) {
                Ok(v) => p += sign * v,
                Err(e) => {
                    err.get_or_insert(e);
                }
            }
        }
        (p / (1u64 << m) as f64).max(0.0)
    });
    if let Some(e) = err {
        return Err(e);
    }
    b
}

type ComplexJson = Vec<Vec<[f64; 2]>>;

fn matrix_to_json(m: &CMatrix) -> ComplexJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn matrix_from_json(rows: &ComplexJson) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Schema("matrix must be square and nonempty".into()));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Schema("matrix entries must be finite".into()));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceStateJson {
    source: String,
    dims: Vec<usize>,
    state: ComplexJson,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservableJson {
    party: String,
    input: u32,
    matrix: ComplexJson,
}

/// Wire form of a [`QuantumNetworkModel`].
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    network: Network,
    visibilities: Vec<f64>,
    sources: Vec<SourceStateJson>,
    observables: Vec<ObservableJson>,
}

impl From<&QuantumNetworkModel> for ModelJson {
    fn from(m: &QuantumNetworkModel) -> Self {
        let net = &m.network;
        ModelJson {
            network: (**net).clone(),
            visibilities: m.visibilities.clone(),
            sources: net
                .source_ids()
                .zip(&m.states)
                .map(|(s, st)| SourceStateJson {
                    source: net.source(s).label.clone(),
                    dims: st.dims.clone(),
                    state: matrix_to_json(&st.matrix),
                })
                .collect(),
            observables: net
                .party_ids()
                .flat_map(|p| {
                    net.alphabet(p)
                        .inputs()
                        .iter()
                        .zip(&m.observables[p.index()])
                        .map(move |(&x, o)| ObservableJson {
                            party: net.party(p).label.clone(),
                            input: x,
                            matrix: matrix_to_json(o),
                        })
                })
                .collect(),
        }
    }
}

impl TryFrom<ModelJson> for QuantumNetworkModel {
    type Error = Error;

    fn try_from(raw: ModelJson) -> Result<Self> {
        let net = raw.network;
        let diags = net.validate();
        if !diags.is_empty() {
            return Err(Error::InvalidNetwork(diags));
        }
        let mut states: Vec<Option<DensityOperator>> = vec![None; net.num_sources()];
        for s in raw.sources {
            let idx = net
                .source_ids()
                .find(|&id| net.source(id).label == s.source)
                .ok_or_else(|| Error::Schema(format!("unknown source `{}`", s.source)))?;
            if states[idx.index()].is_some() {
                return Err(Error::DuplicateId(s.source));
            }
            let m = matrix_from_json(&s.state)?;
            let st = DensityOperator::new(s.dims, m).map_err(|e| match e {
                Error::InvalidState { reason, .. } => Error::InvalidState {
                    source_id: s.source.clone(),
                    reason,
                },
                other => other,
            })?;
            states[idx.index()] = Some(st);
        }
        let states = states
            .into_iter()
            .zip(net.sources())
            .map(|(s, src)| {
                s.ok_or_else(|| Error::Schema(format!("no state for source `{}`", src.label)))
            })
            .collect::<Result<Vec<_>>>()?;
        let observables = raw
            .observables
            .into_iter()
            .map(|o| {
                let p = net.party_by_label_or_err(&o.party)?;
                Ok(Observable::new(p, o.input, matrix_from_json(&o.matrix)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(Arc::new(net), states, observables, raw.visibilities)
    }
}
