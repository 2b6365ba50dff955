//! The standard quantum strategies for chains and the Mermin network.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use super::{kron, pauli_x, pauli_y, pauli_z, CMatrix, DensityOperator, Observable, QuantumNetworkModel};
use crate::error::{Error, Result};
use crate::inequality::QuantifiedBellExpression;
use crate::network::PartyId;
use crate::presets;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// Two Werner sources in a line (entanglement swapping).
    Bilocal,
    /// `n` Werner sources in a line, `n + 1` parties.
    Chain(usize),
    /// Noisy GHZ shared by `A1, A2, A3` plus a Werner pair between `A3, A4`.
    MerminNet,
}

impl Scenario {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "bilocal" => Ok(Self::Bilocal),
            "trilocal" => Ok(Self::Chain(3)),
            "mermin_net" => Ok(Self::MerminNet),
            _ => name
                .strip_prefix("chain")
                .and_then(|n| n.parse().ok())
                .filter(|n| (1..=presets::MAX_CHAIN).contains(n))
                .map(Self::Chain)
                .ok_or_else(|| Error::UnknownPreset(name.to_string())),
        }
    }

    pub fn num_sources(self) -> usize {
        match self {
            Self::Bilocal => 2,
            Self::Chain(n) => n,
            Self::MerminNet => 2,
        }
    }

    /// The inequality this scenario is meant to violate.
    pub fn expression(self) -> Result<QuantifiedBellExpression> {
        match self {
            Self::Bilocal => Ok(presets::bilocal()),
            Self::Chain(n) => presets::chain(n),
            Self::MerminNet => Ok(presets::mermin_net()),
        }
    }
}

fn scaled(m: CMatrix, s: f64) -> CMatrix {
    m * Complex64::new(s, 0.0)
}

/// `(Z ± X)/√2`
fn zx(sign: f64) -> CMatrix {
    scaled(pauli_z() + scaled(pauli_x(), sign), FRAC_1_SQRT_2)
}

/// `(X ± Y)/√2`
fn xy(sign: f64) -> CMatrix {
    scaled(pauli_x() + scaled(pauli_y(), sign), FRAC_1_SQRT_2)
}

fn pair(party: usize, a0: CMatrix, a1: CMatrix) -> [Observable; 2] {
    [
        Observable::new(PartyId::new(party), 0, a0),
        Observable::new(PartyId::new(party), 1, a1),
    ]
}

fn chain_observables(n: usize) -> Vec<Observable> {
    let mut obs = Vec::new();
    obs.extend(pair(0, zx(1.0), zx(-1.0)));
    for j in 2..=n {
        let [a0, a1] = if j % 2 == 0 {
            [kron(&[pauli_z(), pauli_z()]), kron(&[pauli_x(), pauli_x()])]
        } else {
            [kron(&[zx(1.0), zx(1.0)]), kron(&[zx(-1.0), zx(-1.0)])]
        };
        obs.extend(pair(j - 1, a0, a1));
    }
    let [a0, a1] = if n.is_multiple_of(2) {
        [zx(1.0), zx(-1.0)]
    } else {
        [pauli_z(), pauli_x()]
    };
    obs.extend(pair(n, a0, a1));
    obs
}

fn label_state(s: Result<DensityOperator>, label: &str) -> Result<DensityOperator> {
    s.map_err(|e| match e {
        Error::InvalidState { reason, .. } => Error::InvalidState {
            source_id: label.to_string(),
            reason,
        },
        other => other,
    })
}

/// Build the model for `scenario` with per-source noise parameters `vis`.
pub fn build_scenario_model(scenario: Scenario, vis: &[f64]) -> Result<QuantumNetworkModel> {
    if vis.len() != scenario.num_sources() {
        return Err(Error::DimensionMismatch(format!(
            "{} visibilities for {} sources",
            vis.len(),
            scenario.num_sources()
        )));
    }
    let network = scenario.expression()?.network().clone();
    let label = |i: usize| network.sources()[i].label.clone();
    let (states, observables) = match scenario {
        Scenario::Bilocal | Scenario::Chain(_) => {
            let n = vis.len();
            let states = vis
                .iter()
                .enumerate()
                .map(|(i, &v)| label_state(DensityOperator::werner(v), &label(i)))
                .collect::<Result<Vec<_>>>()?;
            (states, chain_observables(n))
        }
        Scenario::MerminNet => {
            let states = vec![
                label_state(DensityOperator::noisy_ghz(3, vis[0]), &label(0))?,
                label_state(DensityOperator::werner(vis[1]), &label(1))?,
            ];
            let mut obs = Vec::new();
            for p in [0, 1, 3] {
                obs.extend(pair(p, xy(1.0), xy(-1.0)));
            }
            obs.extend(pair(
                2,
                kron(&[pauli_x(), pauli_x()]),
                kron(&[pauli_y(), pauli_y()]),
            ));
            (states, obs)
        }
    };
    QuantumNetworkModel::new(network, states, observables, vis.to_vec())
}

/// One-parameter family with the first source at visibility `V` and the
/// others noiseless, so that the product of visibilities is `V`.
pub fn scenario_family(scenario: Scenario) -> impl Fn(f64) -> Result<QuantumNetworkModel> + Sync {
    move |v| {
        let mut vis = vec![1.0; scenario.num_sources()];
        vis[0] = v;
        build_scenario_model(scenario, &vis)
    }
}
