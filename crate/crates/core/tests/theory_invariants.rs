use std::collections::BTreeSet;

use proptest::prelude::*;

use egs_core::fp::{self, FpVector, Prime};
use egs_core::model::{classify, conjugator_to_pp, gen_a, gen_directed, Family, GroupSpec};
use egs_core::quotient::{enumerate, EnumerationLimits};
use egs_core::theory::{self, VerificationReport, VerifyOptions};
use egs_core::tree::Shape;
use egs_core::word::{Generator, Word};

fn spec(text: &str) -> GroupSpec {
    GroupSpec::parse(text).unwrap()
}

#[test]
fn multi_egs_exponents_follow_periodic_branch() {
    let s = spec(r#"{"p":3,"spaces":[[[1,2]],[],[[1,2]]]}"#);
    assert_eq!(classify(&s).family, Family::MultiEgs);
    let report = theory::verify_main_theorem(&s, &VerifyOptions::new(3)).unwrap();
    assert!(report.passed(), "{report}");
    assert_eq!(report.exponents(), vec![(1, 3), (2, 3), (3, 9)]);
    assert!(theory::check_submultiplicativity(&report));
}

#[test]
fn periodic_ggs_exponent_grows_every_two_levels() {
    for text in [
        r#"{"p":3,"spaces":[[],[],[[1,2]]]}"#,
        r#"{"p":3,"spaces":[[],[],[[2,1]]]}"#,
    ] {
        let s = spec(text);
        let p = u64::from(s.p().get());
        let exps: Vec<u64> = (1..=3)
            .map(|n| enumerate(&s, n, &EnumerationLimits::default()).unwrap().exponent())
            .collect();
        for n in 0..1 {
            assert!(exps[n + 2] >= exps[n] * p, "{text}: {exps:?}");
        }
    }
}

/// Root labels of the first-level sections of each `c_i` give exactly the
/// vectors of the bar closure.
#[test]
fn bar_closure_is_image_of_conjugates() {
    for text in [
        r#"{"p":3,"spaces":[[],[],[[1,2]]]}"#,
        r#"{"p":3,"spaces":[[],[],[[1,1]]]}"#,
        r#"{"p":5,"spaces":[[],[],[],[],[[1,4,4,1]]]}"#,
        r#"{"p":5,"spaces":[[],[],[],[],[[0,2,0,3]]]}"#,
        r#"{"p":7,"spaces":[[],[],[],[],[],[],[[1,0,2,0,0,5]]]}"#,
    ] {
        let s = spec(text);
        let p = s.p();
        let image: BTreeSet<Vec<u8>> = (0..p.get() as usize)
            .map(|i| {
                let g = s.evaluate(&Word::single(Generator::C(i), 1), 2).unwrap();
                g.psi()
                    .unwrap()
                    .components()
                    .iter()
                    .map(|h| h.labels()[0])
                    .collect()
            })
            .collect();
        let closure: BTreeSet<Vec<u8>> = fp::bar_closure(s.space(p.get() as usize), p)
            .unwrap()
            .iter()
            .map(|v| v.entries().to_vec())
            .collect();
        assert_eq!(image, closure, "{text}");
    }
}

#[test]
fn report_json_is_stable() {
    let s = spec(r#"{"p":2,"spaces":[[],[[1]]]}"#);
    let mut opts = VerifyOptions::new(3);
    opts.witness_level = Some(5);
    let report = theory::verify_main_theorem(&s, &opts).unwrap();
    let json = report.to_json();
    let back = VerificationReport::from_json(&json).unwrap();
    assert_eq!(back.to_json(), json);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["family"], "GGS");
    assert_eq!(v["levels"][2]["brute_exponent"], 8);
    assert_eq!(v["witnesses"][0]["word"], "a c0");
    assert!(VerificationReport::from_json("{}").is_err());
}

fn prime() -> impl Strategy<Value = Prime> {
    prop::sample::select(vec![2u32, 3, 5, 7]).prop_map(|p| Prime::new(p).unwrap())
}

fn nonzero_vector(p: Prime) -> impl Strategy<Value = FpVector> {
    let len = p.get() as usize - 1;
    prop::collection::vec(0..i64::from(p.get()), len)
        .prop_filter("nonzero", |v| v.iter().any(|&x| x != 0))
        .prop_map(move |v| FpVector::from_ints(p, &v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Conjugating the directed generator along `P_j` and `a` by the
    /// constant-label conjugator lands on the `P_p` generator and fixes `a`.
    #[test]
    fn conjugation_reduces_to_last_direction(
        (p, e, j, depth) in prime().prop_flat_map(|p| {
            (Just(p), nonzero_vector(p), 1..=p.get() as usize, 1u32..=4)
        })
    ) {
        let shape = Shape::new(p, depth).unwrap();
        let f = conjugator_to_pp(shape, j).unwrap();
        let d = gen_directed(shape, j, &e).unwrap();
        let target = gen_directed(shape, p.get() as usize, &e).unwrap();
        prop_assert_eq!(d.conj(&f).unwrap(), target);
        let a = gen_a(shape);
        prop_assert_eq!(a.conj(&f).unwrap(), a);
    }

    #[test]
    fn non_periodic_witness_has_full_order(
        (p, e, j, depth) in prime().prop_flat_map(|p| {
            (Just(p), nonzero_vector(p), 0..p.get() as usize, 1u32..=4)
        })
    ) {
        let s = GroupSpec::new(p, {
            let mut spaces = vec![Vec::new(); p.get() as usize];
            spaces[p.get() as usize - 1] = vec![e.clone()];
            spaces
        }).unwrap();
        let word = theory::lemma_p_witness(&s, j);
        if fp::in_hyperplane_v(&e).unwrap() {
            prop_assert!(word.is_err());
        } else {
            let g = s.evaluate(&word.unwrap(), depth).unwrap();
            prop_assert_eq!(g.order(), u64::from(p.get()).pow(depth));
        }
    }

    #[test]
    fn predicted_k2_order_is_bounded(
        (p, e) in prime().prop_flat_map(|p| (Just(p), nonzero_vector(p)))
    ) {
        let mut spaces = vec![Vec::new(); p.get() as usize];
        spaces[0] = vec![e];
        let s = GroupSpec::new(p, spaces).unwrap();
        let order = theory::predicted_k2_order(&s);
        let periodic = classify(&s).periodic;
        let top = u64::from(p.get()).pow(p.get() + u32::from(!periodic));
        prop_assert_eq!(top % order, 0);
        if periodic {
            prop_assert!(theory::k2_rank(&s) < p.get() as usize);
        }
    }

    #[test]
    fn f1_sections_for_random_h(
        js in prop::collection::vec(0usize..3, 0..=4),
        n in 2u32..=4,
    ) {
        let gs = spec(r#"{"p":3,"spaces":[[],[],[[1,2]]]}"#);
        let mut h = Word::empty();
        for j in js {
            h.push(Generator::C(j), 1);
        }
        prop_assert!(theory::check_f1(&gs, &h, n).unwrap().holds());
    }
}
