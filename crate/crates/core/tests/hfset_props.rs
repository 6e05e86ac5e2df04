use std::cmp::Ordering;
use std::collections::HashMap;

use forcelab_core::HFSet;
use proptest::prelude::*;

/// A copy sharing no nodes with the original (but sharing within itself).
fn rebuild(x: &HFSet) -> HFSet {
    fn go(x: &HFSet, memo: &mut HashMap<HFSet, HFSet>) -> HFSet {
        if let Some(y) = memo.get(x) {
            return y.clone();
        }
        let y = HFSet::make(x.children().iter().map(|c| go(c, memo)).collect::<Vec<_>>());
        memo.insert(x.clone(), y.clone());
        y
    }
    go(x, &mut HashMap::new())
}

fn sets() -> impl Strategy<Value = HFSet> {
    (0u64..1 << 16).prop_map(HFSet::ack)
}

proptest! {
    #[test]
    fn ackermann_round_trip(n in 0u64..1 << 16) {
        prop_assert_eq!(HFSet::ack(n).as_ack(), Some(n));
    }

    #[test]
    fn copies_are_equal(x in sets()) {
        let y = rebuild(&x);
        prop_assert!(!x.ptr_eq(&y) || x.is_empty());
        prop_assert_eq!(&x, &y);
        prop_assert_eq!(x.cmp(&y), Ordering::Equal);
        prop_assert_eq!(x.stable_hash(), y.stable_hash());
    }

    #[test]
    fn order_matches_equality(x in sets(), y in sets()) {
        let (cx, cy) = (rebuild(&x), rebuild(&y));
        prop_assert_eq!(x == y, cx == cy);
        prop_assert_eq!(x.cmp(&y), cx.cmp(&cy));
        prop_assert_eq!(x.cmp(&y), y.cmp(&x).reverse());
        prop_assert_eq!(x.cmp(&y) == Ordering::Equal, x == y);
    }

    #[test]
    fn union_and_subset(x in sets(), y in sets()) {
        let u = x.union(&y);
        prop_assert!(x.is_subset(&u) && y.is_subset(&u));
        prop_assert!(u.children().iter().all(|z| x.contains(z) || y.contains(z)));
    }
}

#[test]
fn deep_naturals_rebuilt() {
    let n = HFSet::nat(300);
    let m = rebuild(&HFSet::nat(300));
    assert_eq!(n, m);
    assert_eq!(n.as_nat(), Some(300));
    assert!(HFSet::nat(299) < m);
}
