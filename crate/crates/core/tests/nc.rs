mod common;

use std::collections::BTreeSet;

use hadamard_lab::nc::{
    catalan, enumerate_nc, enumerate_nc2, enumerate_nc2_within, is_noncrossing, kreweras, kreweras_complement,
    NonCrossingPartition, PairPartition,
};
use hadamard_lab::Error;
use proptest::prelude::*;

#[test]
fn catalan_table() {
    let want = [1u64, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796];
    for (n, w) in want.iter().enumerate() {
        assert_eq!(catalan(n).unwrap(), *w);
        assert_eq!(common::catalan(n as u64), *w);
    }
}

#[test]
fn pair_partitions_match_brute_force() {
    for m in 1..=6 {
        let brute: BTreeSet<Vec<(usize, usize)>> = common::matchings(m)
            .into_iter()
            .filter(|p| !common::matching_crosses(p))
            .map(|mut p| {
                p.sort_unstable();
                p
            })
            .collect();
        let got: BTreeSet<Vec<(usize, usize)>> = enumerate_nc2(m).unwrap().iter().map(|s| s.pairs().to_vec()).collect();
        assert_eq!(got, brute, "m = {m}");
        assert_eq!(enumerate_nc2(m).unwrap().len(), got.len(), "duplicates at m = {m}");
    }
}

#[test]
fn partitions_match_brute_force() {
    for n in 1..=8 {
        let brute: BTreeSet<Vec<Vec<usize>>> = common::set_partitions(n)
            .iter()
            .filter(|l| !common::crosses_by_definition(l))
            .map(|l| common::labels_to_blocks(l))
            .collect();
        let got: BTreeSet<Vec<Vec<usize>>> = enumerate_nc(n).unwrap().iter().map(|p| p.blocks().to_vec()).collect();
        assert_eq!(got, brute, "n = {n}");
    }
}

#[test]
fn crossing_test_agrees_with_definition() {
    for n in 1..=7 {
        for labels in common::set_partitions(n) {
            let blocks = common::labels_to_blocks(&labels);
            assert_eq!(
                is_noncrossing(&blocks, n).unwrap(),
                !common::crosses_by_definition(&labels),
                "{blocks:?}"
            );
            assert_eq!(common::crosses_by_arcs(&labels), common::crosses_by_definition(&labels));
        }
    }
}

#[test]
fn kreweras_is_the_maximal_completion() {
    for m in 1..=4 {
        for sigma in enumerate_nc2(m).unwrap() {
            let (mut want, greatest) = common::kreweras_by_search(sigma.pairs(), m);
            assert!(greatest, "no greatest completion for {sigma}");
            want.sort_by_key(|b| *b.last().unwrap());
            assert_eq!(kreweras(&sigma).blocks(), want.as_slice(), "{sigma}");
        }
    }
}

#[test]
fn kreweras_examples() {
    let s = PairPartition::new(vec![(1, 2), (3, 4)]).unwrap();
    let k = kreweras(&s);
    assert_eq!(k.blocks(), &[vec![1], vec![3], vec![2, 4]]);
    assert_eq!(k.tsigma(), &[1, 3, 2, 3]);
    let nested = PairPartition::new(vec![(1, 4), (2, 3)]).unwrap();
    assert_eq!(kreweras(&nested).blocks(), &[vec![2], vec![1, 3], vec![4]]);
}

#[test]
fn double_complement_is_a_rotation() {
    for n in 1..=8 {
        for pi in enumerate_nc(n).unwrap() {
            let twice = kreweras_complement(&kreweras_complement(&pi));
            assert_eq!(twice, pi.rotated(-1), "{pi}");
            let k = kreweras_complement(&pi);
            assert_eq!(pi.blocks().len() + k.blocks().len(), n + 1);
        }
    }
}

#[test]
fn invalid_inputs() {
    assert!(matches!(PairPartition::new(vec![(1, 3), (2, 4)]), Err(Error::Malformed(_))));
    assert!(matches!(PairPartition::new(vec![(1, 2), (2, 3)]), Err(Error::Malformed(_))));
    assert!(NonCrossingPartition::new(vec![vec![1, 3], vec![2, 4]], 4).is_err());
    assert!(matches!(enumerate_nc2_within(5, 4), Err(Error::SizeLimit { .. })));
}

fn sigma_strategy() -> impl Strategy<Value = PairPartition> {
    (1usize..=6).prop_flat_map(|m| {
        let all = enumerate_nc2(m).unwrap();
        (0..all.len()).prop_map(move |i| all[i].clone())
    })
}

proptest! {
    #[test]
    fn labeling_invariants(sigma in sigma_strategy()) {
        let m = sigma.m();
        let k = kreweras(&sigma);
        prop_assert_eq!(k.blocks().len(), m + 1);
        let maxima: Vec<usize> = k.blocks().iter().map(|b| *b.last().unwrap()).collect();
        prop_assert!(maxima.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(*maxima.last().unwrap(), 2 * m);
        for i in 1..=2 * m {
            prop_assert!(k.blocks()[k.tsigma()[i - 1] - 1].contains(&i));
        }
        // the pairs of σ join distinct blocks and form a spanning tree on m+1 vertices
        let mut parent: Vec<usize> = (0..=m).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for (a, b) in k.edges() {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            prop_assert_ne!(ra, rb);
            parent[ra] = rb;
        }
        let blocks: Vec<Vec<usize>> = k.blocks().to_vec();
        prop_assert!(is_noncrossing(&blocks, 2 * m).unwrap());
    }
}
