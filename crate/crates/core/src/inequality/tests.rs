use std::sync::Arc;

use super::*;
use crate::correlations::CorrelatorTable;
use crate::network::InputAlphabet;

fn chsh() -> LinearBellExpression {
    let net = Arc::new(Network::seed(2, vec![InputAlphabet::binary(); 2]).unwrap());
    let mut terms = Vec::new();
    for x1 in 0..2 {
        for x2 in 0..2 {
            let s = if x1 * x2 == 1 { -0.5 } else { 0.5 };
            terms.push(Term::new(s, InputTuple::full(&[x1, x2])));
        }
    }
    LinearBellExpression::new(net, terms, 1.0).unwrap()
}

fn bilocal() -> QuantifiedBellExpression {
    let lin = chsh();
    let a2 = PartyId::new(1);
    let net = Arc::new(lin.network().add_leaf(a2, InputAlphabet::binary()).unwrap());
    let part = Partition::new(&net, a2, vec![0], vec![1]).unwrap();
    QuantifiedBellExpression::lift(&lin)
        .extend(net, a2, &part, PartyId::new(2))
        .unwrap()
}

/// `<a1 a2 a3> = (-1)^(x1 x2 + x2 x3) v / 2`, all marginals zero.
fn swapping_table(net: &Arc<Network>, v: f64) -> CorrelatorTable {
    CorrelatorTable::from_fn(net.clone(), |t| {
        let s = t.symbols();
        Ok(match (s[0], s[1], s[2]) {
            (None, None, None) => 1.0,
            (Some(x1), Some(x2), Some(x3)) => {
                let sign = if (x1 * x2 + x2 * x3) % 2 == 1 { -1.0 } else { 1.0 };
                sign * v / 2.0
            }
            _ => 0.0,
        })
    })
    .unwrap()
}

#[test]
fn duplicate_terms_merge() {
    let net = Arc::new(Network::seed(1, vec![InputAlphabet::binary()]).unwrap());
    let t = InputTuple::full(&[0]);
    let lin = LinearBellExpression::new(
        net,
        vec![Term::new(0.25, t.clone()), Term::new(0.5, t.clone())],
        1.0,
    )
    .unwrap();
    assert_eq!(lin.terms(), &[Term::new(0.75, t)]);
}

#[test]
fn invalid_tuple_rejected() {
    let net = Arc::new(Network::seed(1, vec![InputAlphabet::binary()]).unwrap());
    let err = LinearBellExpression::new(net, vec![Term::new(1.0, InputTuple::full(&[3]))], 1.0);
    assert!(matches!(err, Err(Error::InvalidTuple(_))));
}

#[test]
fn extension_matches_hand_expansion() {
    let e = bilocal();
    assert_eq!(e.num_quantifiers(), 1);
    assert_eq!(e.network().num_parties(), 3);
    assert!(e.unweighted().is_empty());
    let [plus, minus] = e.groups() else {
        panic!("expected two groups");
    };
    assert_eq!(plus.factors, vec![QuantifierFactor::plus(0)]);
    assert_eq!(minus.factors, vec![QuantifierFactor::minus(0)]);
    for x1 in 0..2 {
        for x3 in 0..2 {
            let p = plus
                .terms
                .iter()
                .find(|t| t.inputs == InputTuple::full(&[x1, 0, x3]))
                .unwrap();
            assert_eq!(p.beta, 0.25);
            let m = minus
                .terms
                .iter()
                .find(|t| t.inputs == InputTuple::full(&[x1, 1, x3]))
                .unwrap();
            let sign = if (x1 + x3) % 2 == 1 { -1.0 } else { 1.0 };
            assert_eq!(m.beta, 0.25 * sign);
        }
    }
    assert_eq!(plus.terms.len(), 4);
    assert_eq!(minus.terms.len(), 4);
}

#[test]
fn trivial_anchor_terms_stay_unweighted() {
    let net = Arc::new(Network::seed(2, vec![InputAlphabet::binary(); 2]).unwrap());
    let lin = LinearBellExpression::new(
        net.clone(),
        vec![
            Term::new(1.0, InputTuple::new(vec![Some(0), None])),
            Term::new(0.5, InputTuple::full(&[0, 1])),
        ],
        2.0,
    )
    .unwrap();
    let a2 = PartyId::new(1);
    let big = Arc::new(net.add_leaf(a2, InputAlphabet::binary()).unwrap());
    let part = Partition::new(&big, a2, vec![0], vec![1]).unwrap();
    let e = QuantifiedBellExpression::lift(&lin)
        .extend(big, a2, &part, PartyId::new(2))
        .unwrap();
    assert_eq!(
        e.unweighted(),
        &[Term::new(1.0, InputTuple::new(vec![Some(0), None, None]))]
    );
    assert_eq!(e.groups().len(), 1);
    assert_eq!(e.groups()[0].factors, vec![QuantifierFactor::minus(0)]);
    assert_eq!(e.bound(), 2.0);
}

#[test]
fn trivial_anchor_terms_keep_their_weight() {
    let e = bilocal();
    // a second extension at A1 of a term whose A1 slot is trivial
    let net = e.network().clone();
    let extra = Group::new(
        vec![QuantifierFactor::plus(0)],
        vec![Term::new(0.1, InputTuple::new(vec![None, Some(0), Some(1)]))],
    );
    let mut groups = e.groups().to_vec();
    groups.push(extra);
    let e = QuantifiedBellExpression::new(net.clone(), 1, groups, vec![], 1.0).unwrap();
    let a1 = PartyId::new(0);
    let big = Arc::new(net.add_leaf(a1, InputAlphabet::binary()).unwrap());
    let part = Partition::new(&big, a1, vec![0], vec![1]).unwrap();
    let ext = e.extend(big, a1, &part, PartyId::new(3)).unwrap();
    let kept = ext
        .groups()
        .iter()
        .find(|g| g.factors == vec![QuantifierFactor::plus(0)])
        .unwrap();
    assert_eq!(
        kept.terms,
        vec![Term::new(0.1, InputTuple::new(vec![None, Some(0), Some(1), None]))]
    );
}

#[test]
fn extension_rejects_bad_inputs() {
    let lin = chsh();
    let a2 = PartyId::new(1);
    let q = QuantifiedBellExpression::lift(&lin);
    let net = Arc::new(lin.network().add_leaf(a2, InputAlphabet::binary()).unwrap());
    assert!(matches!(
        Partition::new(&net, a2, vec![0], vec![0]),
        Err(Error::PartitionMismatch(_))
    ));
    assert!(Partition::new(&net, a2, vec![0, 1], vec![]).is_ok());
    let part = Partition::new(&net, a2, vec![0], vec![1]).unwrap();
    // network is not a leaf over the anchor
    let other = Arc::new(
        lin.network()
            .add_leaf(PartyId::new(0), InputAlphabet::binary())
            .unwrap(),
    );
    assert!(matches!(
        q.extend(other, a2, &part, PartyId::new(2)),
        Err(Error::NotALeafExtension(_))
    ));
    // abs groups cannot be pushed through
    let abs = symmetrize_abs(std::slice::from_ref(&q)).unwrap();
    assert!(matches!(
        abs.extend(net, a2, &part, PartyId::new(2)),
        Err(Error::InvalidExpression(_))
    ));
}

#[test]
fn extension_of_bilocal_gives_chain_structure() {
    let e = bilocal();
    let a3 = PartyId::new(2);
    let net = Arc::new(e.network().add_leaf(a3, InputAlphabet::binary()).unwrap());
    let part = Partition::new(&net, a3, vec![0], vec![1]).unwrap();
    let t = e.extend(net, a3, &part, PartyId::new(3)).unwrap();
    assert_eq!(t.num_quantifiers(), 2);
    let factors: Vec<_> = t.groups().iter().map(|g| g.factors.clone()).collect();
    use QuantifierFactor as F;
    assert_eq!(
        factors,
        vec![
            vec![F::plus(0), F::plus(1)],
            vec![F::plus(0), F::minus(1)],
            vec![F::minus(0), F::plus(1)],
            vec![F::minus(0), F::minus(1)],
        ]
    );
    assert!(t.groups().iter().all(|g| g.terms.len() == 4));
    assert!(t
        .groups()
        .iter()
        .flat_map(|g| &g.terms)
        .all(|t| t.beta.abs() == 0.125));
}

#[test]
fn lift_evaluates_to_linear_value() {
    let lin = chsh();
    let net = lin.network().clone();
    let table = CorrelatorTable::from_fn(net, |t| {
        Ok(match t.symbols() {
            [None, None] => 1.0,
            [Some(x), Some(y)] => {
                if x * y == 1 {
                    -0.6
                } else {
                    0.6
                }
            }
            _ => 0.0,
        })
    })
    .unwrap();
    let r = evaluate(&QuantifiedBellExpression::lift(&lin), &table).unwrap();
    assert!((r.min_lhs - 1.2).abs() < 1e-15);
    assert!((lin.value(&table).unwrap() - 1.2).abs() < 1e-15);
    assert!(r.violated);
    assert!(r.argmin_q.is_empty());
}

#[test]
fn bilocal_swapping_value() {
    let e = bilocal();
    for v in [0.3, 0.5, 0.8, 1.0] {
        let table = swapping_table(e.network(), v);
        let r = evaluate(&e, &table).unwrap();
        assert_eq!(r.closed_form, ClosedForm::BilocalSqrt);
        assert!((r.min_lhs - 2.0 * v).abs() < 1e-12, "{v}: {}", r.min_lhs);
        assert!((r.argmin_q[0] - 0.5).abs() < 1e-12);
        assert!(r.cross_check_gap.unwrap() < 1e-10);
        assert_eq!(r.violated, 2.0 * v > 1.0 + 1e-9);
    }
}

#[test]
fn negative_group_is_unbounded_and_not_violated() {
    let e = bilocal();
    let table = swapping_table(e.network(), 1.0);
    let flipped = e.flip_outputs(PartyId::new(0), &[0, 1]);
    let r = evaluate(&flipped, &table).unwrap();
    assert!(r.unbounded_below);
    assert!(!r.violated);
    assert_eq!(r.min_lhs, f64::NEG_INFINITY);
    let json = serde_json::to_value(&r).unwrap();
    assert!(json["min_lhs"].is_null());
    assert_eq!(json["unbounded_below"], true);
}

#[test]
fn all_zero_correlators_report_half() {
    let e = bilocal();
    let table = swapping_table(e.network(), 0.0);
    let r = evaluate(&e, &table).unwrap();
    assert_eq!(r.min_lhs, 0.0);
    assert_eq!(r.argmin_q, vec![0.5]);
}

#[test]
fn network_mismatch_detected() {
    let e = bilocal();
    let lin = chsh();
    let table = CorrelatorTable::from_fn(lin.network().clone(), |t| {
        Ok(if t.symbols().iter().all(Option::is_none) { 1.0 } else { 0.0 })
    })
    .unwrap();
    assert!(matches!(evaluate(&e, &table), Err(Error::NetworkMismatch)));
}

#[test]
fn symmetrize_requires_sign_variants() {
    let e = bilocal();
    let a1 = PartyId::new(0);
    let variants = vec![
        e.clone(),
        e.flip_outputs(a1, &[0, 1]),
        e.flip_outputs(PartyId::new(1), &[1]),
    ];
    let s = symmetrize_abs(&variants).unwrap();
    assert!(s.groups().iter().all(|g| g.abs));
    assert_eq!(s.groups()[0].terms, e.groups()[0].terms);

    // flipping a single input of A1 mixes signs inside a group
    let bad = vec![e.clone(), e.flip_outputs(a1, &[0])];
    assert!(matches!(
        symmetrize_abs(&bad),
        Err(Error::IncompatibleFamily(_))
    ));
    let other_bound = vec![e.clone(), e.with_bound(2.0)];
    assert!(symmetrize_abs(&other_bound).is_err());
    assert!(symmetrize_abs(&[]).is_err());
}

#[test]
fn swap_branches_is_involution() {
    let e = bilocal();
    assert_eq!(e.swap_branches(0).swap_branches(0), e);
    assert_ne!(e.swap_branches(0), e);
}

#[test]
fn lhs_at_fixed_q() {
    let e = bilocal();
    let table = swapping_table(e.network(), 0.6);
    let v = e.lhs_at(&table, &[0.25]).unwrap();
    assert!((v - (0.3 / 0.25 + 0.3 / 0.75)).abs() < 1e-14);
    assert!(e.lhs_at(&table, &[0.1, 0.2]).is_err());
}

#[test]
fn json_round_trip() {
    let e = bilocal();
    let s = e.to_json();
    let back = QuantifiedBellExpression::from_json(&s).unwrap();
    assert_eq!(back, e);
    assert_eq!(back.to_json(), s);
    assert!(s.contains("\"branch\": \"+\""));
}

#[test]
fn json_rejections() {
    let e = bilocal();
    let mut v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
    v["k"] = 0.into();
    assert!(QuantifiedBellExpression::from_json(&v.to_string()).is_err());

    let mut v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
    v["groups"][0]["factors"][0]["branch"] = "*".into();
    assert!(QuantifiedBellExpression::from_json(&v.to_string()).is_err());

    let mut v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
    v["extra"] = 1.into();
    assert!(QuantifiedBellExpression::from_json(&v.to_string()).is_err());

    let mut v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
    v["groups"][0]["terms"][0]["inputs"] = serde_json::json!([0, 0]);
    assert!(QuantifiedBellExpression::from_json(&v.to_string()).is_err());

    let mut v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
    v["groups"][0]["factors"] = serde_json::json!([{"j": 0, "branch": "+"}, {"j": 0, "branch": "-"}]);
    assert!(QuantifiedBellExpression::from_json(&v.to_string()).is_err());
}

#[test]
fn chsh_recovered_from_trivial_network() {
    let net = Arc::new(Network::seed(1, vec![InputAlphabet::binary()]).unwrap());
    let a1 = PartyId::new(0);
    let marginal = |x: u32| {
        QuantifiedBellExpression::lift(
            &LinearBellExpression::new(
                net.clone(),
                vec![Term::new(1.0, InputTuple::full(&[x]))],
                1.0,
            )
            .unwrap(),
        )
    };
    let family = vec![
        marginal(0),
        marginal(0).flip_outputs(a1, &[0]),
        marginal(1),
        marginal(1).flip_outputs(a1, &[1]),
    ];
    let big = Arc::new(net.add_leaf(a1, InputAlphabet::binary()).unwrap());
    let part = Partition::new(&big, a1, vec![0], vec![1]).unwrap();
    let ext = extend_family(&family, big.clone(), a1, &part, PartyId::new(1)).unwrap();
    let plus = symmetrize_abs(&ext[0..2]).unwrap();
    let minus = symmetrize_abs(&ext[2..4]).unwrap();

    // every deterministic local strategy satisfies the pair
    let mut best: f64 = 0.0;
    for code in 0u32..16 {
        let out = |party: usize, x: u32| {
            if code >> (2 * party + x as usize) & 1 == 1 {
                -1.0
            } else {
                1.0
            }
        };
        let table = CorrelatorTable::from_fn(big.clone(), |t| {
            Ok(t.symbols()
                .iter()
                .enumerate()
                .map(|(p, s)| s.map_or(1.0, |x| out(p, x)))
                .product())
        })
        .unwrap();
        let fam = evaluate_family(&[plus.clone(), minus.clone()], &table, 1e-9).unwrap();
        let budget = fam.split_budget.unwrap();
        best = best.max(budget);
        assert!(!fam.violated);
        assert!(fam.min_excess <= 1e-9);
    }
    assert!((best - 1.0).abs() < 1e-15);

    // the PR box reaches 2
    let pr = CorrelatorTable::from_fn(big.clone(), |t| {
        Ok(match t.symbols() {
            [None, None] => 1.0,
            [Some(x), Some(y)] => {
                if x * y == 1 {
                    -1.0
                } else {
                    1.0
                }
            }
            _ => 0.0,
        })
    })
    .unwrap();
    let fam = evaluate_family(&[plus, minus], &pr, 1e-9).unwrap();
    assert!((fam.split_budget.unwrap() - 2.0).abs() < 1e-15);
    assert!(fam.violated);
    assert!(fam.min_excess > 0.1);
}

#[test]
fn family_requires_matching_quantifiers() {
    let e = bilocal();
    let lifted = QuantifiedBellExpression::lift(&chsh());
    let table = swapping_table(e.network(), 0.5);
    assert!(evaluate_family(&[e.clone(), lifted], &table, 1e-9).is_err());
    assert!(evaluate_family(&[], &table, 1e-9).is_err());
}
