mod common;

use cone_minimax::allocator::{count_bound, counts, oracle_best_counts};
use cone_minimax::generators::{gen_conjbex, gen_random};
use cone_minimax::instance::{check_support_condition, SupportCheck};
use cone_minimax::partition::{ample_regroup, build_partition_with, oracle_partition, verify_partition, PartitionOptions};
use cone_minimax::rational::int;
use cone_minimax::{solve_minimax, Instance, SolveOptions};

use common::{corpus_instance, oracle_count_bound, oracle_counts, passes_support, proper_subset_counts};

#[test]
fn count_bound_matches_integer_formula() {
    for r in 1..=8 {
        for q in 0..=60 {
            assert_eq!(count_bound(q, r), oracle_count_bound(q, r), "q = {q}, r = {r}");
        }
    }
}

#[test]
fn support_check_matches_direct_scan() {
    for k in 0..200u64 {
        let r = 1 + (k as usize % 4);
        let inst = gen_random(1, r, r + (k as usize % 9), k, 3, 60);
        if let Ok(inst) = inst {
            assert!(passes_support(&inst));
            assert!(check_support_condition(&inst).unwrap().is_pass());
        }
    }
    let bad = Instance::from_integers(1, &[&[1, 0, 0], &[1, 0, 0], &[0, 1, 1], &[1, 1, 0]]).unwrap();
    assert!(!passes_support(&bad));
    match check_support_condition(&bad).unwrap() {
        SupportCheck::Fail(v) => {
            assert_eq!(v.subset, vec![1]);
            let (_, direct) = proper_subset_counts(&bad).into_iter().find(|&(t, _)| t == 1).unwrap();
            assert_eq!(v.count, direct);
        }
        SupportCheck::Pass => panic!("expected failure"),
    }
}

#[test]
fn allocator_against_grid_oracle() {
    for k in 0..40u64 {
        let inst = corpus_instance(300 + k, 3, 8, 1);
        let sol = solve_minimax(&inst, k, &SolveOptions::default()).unwrap();
        let m = sol.perturbation.perturbed();
        let (mine, ties) = oracle_counts(m, sol.weights.values());
        assert!(!ties);
        assert_eq!(counts(m, &sol.weights).counts, mine);

        let grid = oracle_best_counts(m, 6, 3).unwrap();
        let bound = oracle_count_bound(inst.q(), inst.r()) as usize;
        // the grid optimum meets the bound too, independently of the allocator
        assert!(*grid.best_sorted.last().unwrap() >= bound, "case {k}: grid {:?}", grid.best_sorted);
        let mut sorted = mine.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        assert!(*sorted.last().unwrap() >= bound);
    }
}

#[test]
fn reorder_flag_agrees_with_oracle() {
    let opts = PartitionOptions { reorder_coordinates: true, ..Default::default() };
    for k in 0..60u64 {
        let inst = corpus_instance(700 + k, 3, 12, 1);
        assert!(oracle_partition(&inst).unwrap().exists);
        let p = build_partition_with(&inst, &opts).unwrap();
        assert!(verify_partition(&inst, &p).is_pass());
    }
}

#[test]
fn conjbex_regroups_to_all_ones() {
    for n in 1..=3 {
        for s in 1..=3 {
            let inst = gen_conjbex(n, s).unwrap();
            let g = ample_regroup(&inst, false).unwrap();
            assert_eq!(g.rows.len(), 2 * n);
            assert!(g.rows.iter().all(|row| row.iter().all(|v| *v == int(1))));
        }
    }
}
