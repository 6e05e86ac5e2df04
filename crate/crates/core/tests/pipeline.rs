use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use forcelab_core::etr::{cumulative_instance, etr_solve, verify_solution, PARAM_CLASS};
use forcelab_core::forcing::{audit, truth_lemma_check, ForcingRelation, RegularOpenAlgebra};
use forcelab_core::games::{check_labels, random_tree, strategy, verify_strategy, zermelo, zermelo_direct, Player};
use forcelab_core::hfset::v_stage;
use forcelab_core::names::{cond_check, eval_name, name_universe, CheckNames, UniverseMode, DEFAULT_NAME_BUDGET};
use forcelab_core::poset::{build_collapse, CollapseOptions};
use forcelab_core::truth::{forcing_truth, tarski_truth, HfModel};
use forcelab_core::{Formula, ForcingNotion, HFSet, Term, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn v(s: &str) -> Var {
    Var::from(s)
}

fn sentences() -> Vec<Formula> {
    let x = Term::var("x");
    let y = Term::var("y");
    vec![
        Formula::exists(vec![v("x")], Formula::in_g(x.clone())),
        Formula::forall(vec![v("x")], Formula::not(Formula::mem(x.clone(), x.clone()))),
        Formula::forall(
            vec![v("x")],
            Formula::exists(vec![v("y")], Formula::or(vec![Formula::mem(x.clone(), y.clone()), Formula::eq(x.clone(), y.clone())])),
        ),
        Formula::exists(vec![v("x")], Formula::and(vec![Formula::in_g(x.clone()), Formula::not(Formula::eq(x, Term::Name(cond_check(0))))])),
    ]
}

#[test]
fn truth_lemma_on_small_notions() {
    for p in [ForcingNotion::fork(), ForcingNotion::chain(1), ForcingNotion::antichain(3)] {
        let u = name_universe(&p, UniverseMode::Exhaustive(1), DEFAULT_NAME_BUDGET).unwrap();
        let mut rel = ForcingRelation::with_universe(&p, u).unwrap();
        let filters = p.generic_filters();
        assert!(!filters.is_empty());
        assert_eq!(truth_lemma_check(&mut rel, &filters, &sentences()).unwrap(), None);
        assert!(audit(&mut rel, &sentences()).unwrap().iter().all(|r| r.passed()));
    }
}

#[test]
fn check_names_evaluate_to_their_sets() {
    let p = ForcingNotion::fork();
    let mut checks = CheckNames::default();
    for g in p.generic_filters() {
        for x in v_stage(3).unwrap() {
            assert_eq!(eval_name(&checks.get(&x), &g), x);
        }
    }
}

#[test]
fn completion_of_the_fork() {
    let p = ForcingNotion::fork();
    let alg = RegularOpenAlgebra::new(&p).unwrap();
    // two incompatible atoms below the top: the four-element algebra
    assert_eq!(alg.len(), 4);
    alg.check_boolean().unwrap();
    alg.check_dense_embedding().unwrap();
}

#[test]
fn collapse_truth_agrees_with_tarski() {
    let x = Term::var("x");
    let y = Term::var("y");
    let atoms = vec![
        Formula::mem(x.clone(), y.clone()),
        Formula::eq(x.clone(), y.clone()),
        Formula::in_class(x.clone(), PARAM_CLASS),
    ];
    let mut pool = atoms.clone();
    pool.extend(atoms.iter().cloned().map(Formula::not));
    pool.push(Formula::exists(vec![v("y")], Formula::mem(y, x.clone())));
    pool.push(Formula::forall(vec![v("x")], Formula::in_class(x, PARAM_CLASS)));
    let pool = forcelab_core::formula::subformula_closure(&pool);
    for a in v_stage(3).unwrap().into_iter().filter(|a| a.rank() <= 2) {
        let ft = forcing_truth(2, &a, &pool, &CollapseOptions::default()).unwrap();
        let model = HfModel::new(v_stage(2).unwrap()).with_class(PARAM_CLASS, a.children().iter().cloned());
        let tarski = tarski_truth(&model, &pool).unwrap();
        assert!(ft.table.differences(&tarski).is_empty(), "A = {a:?}");
        assert_eq!(ft.invariance_failure, None);
    }
}

#[test]
fn cumulative_hierarchy_by_recursion() {
    let domain = v_stage(4).unwrap();
    let inst = cumulative_instance(domain.clone(), 4);
    let sol = etr_solve(&inst).unwrap();
    assert_eq!(verify_solution(&inst, &sol).unwrap(), None);
    for alpha in 0..4 {
        let got: BTreeSet<_> = sol.slice(alpha, &domain).into_iter().cloned().collect();
        let want: BTreeSet<_> = domain.iter().filter(|x| x.rank() <= alpha).cloned().collect();
        assert_eq!(got, want, "stage {alpha}");
    }
}

#[test]
fn winners_follow_their_strategies() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let tree = random_tree(&mut rng, 60);
        let labels = zermelo(&tree).unwrap();
        assert_eq!(labels, zermelo_direct(&tree));
        assert_eq!(check_labels(&tree, &labels), None);
        let w = labels[tree.root];
        verify_strategy(&tree, w, &strategy(&tree, &labels, w)).unwrap();
        let loser = if w == Player::I { Player::II } else { Player::I };
        assert!(verify_strategy(&tree, loser, &strategy(&tree, &labels, loser)).is_err());
    }
}

#[test]
fn separately_built_deep_objects_compare_quickly() {
    let start = Instant::now();
    assert_eq!(HFSet::nat(400), HFSet::nat(400));
    assert!(HFSet::nat(399) < HFSet::nat(400));
    assert_eq!(cond_check(300), cond_check(300));
    assert_eq!(cond_check(300).cmp(&cond_check(300)), std::cmp::Ordering::Equal);
    assert_ne!(cond_check(300), cond_check(299));
    assert!(start.elapsed() < Duration::from_secs(5));
}

#[test]
fn collapse_at_three_builds_its_relation() {
    let p = build_collapse(3, &HFSet::empty(), &CollapseOptions::default()).unwrap();
    let start = Instant::now();
    let mut rel = ForcingRelation::new(&p);
    let c = cond_check(3);
    assert_eq!(rel.atomic(forcelab_core::forcing::Atomic::Eq, &c, &c), p.full_set());
    assert!(start.elapsed() < Duration::from_secs(30));
}
