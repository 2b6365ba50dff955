use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use netbell::correlations::CorrelatorTable;
use netbell::inequality::{evaluate_source_with_tol, trilocal_invariants, trilocal_w};
use netbell::inequality::{QuantifiedBellExpression, TrilocalInvariants};
use netbell::network::PartyId;
use netbell::nlocal_oracle::{verify_quantified, VerifyConfig};
use netbell::presets;
use netbell::quantum::{
    build_scenario_model, identity, scenario_family, threshold_scan, DensityOperator, Observable,
    Scenario, QuantumNetworkModel,
};

use crate::output::{emit, to_json};
use crate::{Command, ExprSource};

#[derive(Debug, Error)]
pub enum Failure {
    #[error(transparent)]
    Lib(#[from] netbell::Error),
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}")]
    Usage(String),
    #[error("counterexample found")]
    Counterexample,
}

type Result<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn write(path: Option<&Path>, contents: &str) -> Result<()> {
    emit(path, contents).map_err(|e| Failure::Io(path.unwrap_or(Path::new("-")).to_path_buf(), e))
}

fn load_expression(src: &ExprSource) -> Result<QuantifiedBellExpression> {
    match (&src.input, &src.preset) {
        (Some(path), None) => Ok(QuantifiedBellExpression::from_json(&read(path)?)?),
        (None, Some(name)) => Ok(presets::expression(name)?),
        _ => Err(Failure::Usage("give exactly one of --in or --preset".into())),
    }
}

fn load_model(path: &Path) -> Result<QuantumNetworkModel> {
    Ok(QuantumNetworkModel::from_json(&read(path)?)?)
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Extend {
            expr,
            anchor,
            plus,
            minus,
            out,
        } => {
            let e = load_expression(&expr)?;
            let anchor = e.network().party_by_label_or_err(&anchor)?;
            let ext = presets::extend_at(&e, anchor, plus, minus)?;
            let net = ext.network();
            let party = net.party(PartyId::new(net.num_parties() - 1));
            let source = net.sources().last().expect("extension adds a source");
            write(out.out.as_deref(), &(ext.to_json() + "\n"))?;
            eprintln!(
                "+ party {} (inputs {:?})\n+ source {} feeding {}, {}",
                party.label,
                party.alphabet.inputs(),
                source.label,
                net.party(anchor).label,
                party.label
            );
            Ok(())
        }
        Command::Evaluate {
            expr,
            table,
            tol,
            out,
        } => {
            let e = load_expression(&expr)?;
            let table = CorrelatorTable::from_json(&read(&table)?)?;
            let r = evaluate_source_with_tol(&e, &table, tol)?;
            write(out.out.as_deref(), &to_json(&r))
        }
        Command::Scan {
            preset,
            input,
            inequality,
            range,
            out,
        } => {
            let [lo, hi] = range[..] else {
                return Err(Failure::Usage("--range takes two values lo,hi".into()));
            };
            let range = (lo, hi);
            let report = match (preset, input, inequality) {
                (Some(name), None, None) => {
                    let scenario = Scenario::parse(&name)?;
                    threshold_scan(&scenario.expression()?, &scenario_family(scenario), range)?
                }
                (None, Some(model), Some(ineq)) => {
                    let model = load_model(&model)?;
                    let e = QuantifiedBellExpression::from_json(&read(&ineq)?)?;
                    threshold_scan(&e, &white_noise_family(model), range)?
                }
                _ => {
                    return Err(Failure::Usage(
                        "scan takes --preset, or --in with --inequality".into(),
                    ))
                }
            };
            write(out.out.as_deref(), &to_json(&report))
        }
        Command::Verify {
            expr,
            seed,
            samples,
            alphabet,
            det_alphabet,
            no_dedup,
            budget,
            tol,
            out,
        } => {
            let e = load_expression(&expr)?;
            let cfg = VerifyConfig {
                deterministic_alphabet: det_alphabet,
                sample_alphabet: alphabet,
                samples,
                seed,
                budget,
                dedup: !no_dedup,
                tol,
            };
            let verdict = verify_quantified(&e, &cfg)?;
            write(out.out.as_deref(), &to_json(&verdict))?;
            if verdict.verified {
                Ok(())
            } else {
                Err(Failure::Counterexample)
            }
        }
        Command::QuantumTable {
            preset,
            vis,
            input,
            csv,
            model_out,
            out,
        } => {
            let model = match (preset, input) {
                (Some(name), None) => {
                    let vis = vis.ok_or_else(|| Failure::Usage("--preset needs --vis".into()))?;
                    build_scenario_model(Scenario::parse(&name)?, &vis)?
                }
                (None, Some(path)) => load_model(&path)?,
                _ => return Err(Failure::Usage("give exactly one of --in or --preset".into())),
            };
            let table = model.correlator_table()?;
            let text = if csv { table.to_csv() } else { table.to_json() + "\n" };
            if let Some(path) = model_out {
                write(Some(&path), &(model.to_json() + "\n"))?;
            }
            write(out.out.as_deref(), &text)
        }
        Command::WEval { ijkl, table, out } => {
            let [i, j, k, l] = match (ijkl, table) {
                (Some(v), None) => v
                    .try_into()
                    .map_err(|_| Failure::Usage("--ijkl takes four values".into()))?,
                (None, Some(path)) => {
                    presets::trilocal_ijkl(&CorrelatorTable::from_json(&read(&path)?)?)?
                }
                _ => return Err(Failure::Usage("give exactly one of --ijkl or --table".into())),
            };
            let report = WReport {
                ijkl: [i, j, k, l],
                invariants: trilocal_invariants(i, j, k, l),
                w: trilocal_w(i, j, k, l),
            };
            write(out.out.as_deref(), &to_json(&report))
        }
    }
}

#[derive(Serialize)]
struct WReport {
    ijkl: [f64; 4],
    invariants: TrilocalInvariants,
    w: f64,
}

/// Family `V ↦` model with the first source replaced by
/// `V ρ + (1 - V) 𝟙/d`.
fn white_noise_family(
    model: QuantumNetworkModel,
) -> impl Fn(f64) -> netbell::Result<QuantumNetworkModel> + Sync {
    let net = model.network().clone();
    let observables: Vec<Observable> = net
        .party_ids()
        .flat_map(|p| {
            net.alphabet(p)
                .inputs()
                .iter()
                .map(|&x| Observable::new(p, x, model.observable(p, x).expect("validated").clone()))
                .collect::<Vec<_>>()
        })
        .collect();
    let states = model.states().to_vec();
    let visibilities = model.visibilities().to_vec();
    move |v| {
        let first = &states[0];
        let d = first.dim();
        let mixed = first.matrix().map(|z| z * v) + identity(d).map(|z| z * ((1.0 - v) / d as f64));
        let mut s = states.clone();
        s[0] = DensityOperator::new(first.dims().to_vec(), mixed)?;
        let mut vis = visibilities.clone();
        vis[0] = v;
        QuantumNetworkModel::new(net.clone(), s, observables.clone(), vis)
    }
}
