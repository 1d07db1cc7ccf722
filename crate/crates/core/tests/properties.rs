mod common;

use std::collections::BTreeSet;

use abm::{ContinuousSpace, DiscreteSpace, GridSpace, Model, Rng, Scheduler, Space, Value};
use common::Walker;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn next_below_in_range(seed: u64, n in 1u64..u64::MAX) {
        let mut rng = Rng::seed_from_u64(seed);
        for _ in 0..20 {
            prop_assert!(rng.next_below(n) < n);
        }
    }

    #[test]
    fn floats_in_unit_interval(seed: u64) {
        let mut rng = Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let x = rng.next_float();
            prop_assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn shuffle_is_permutation(seed: u64, len in 0usize..60) {
        let mut v: Vec<usize> = (0..len).collect();
        Rng::seed_from_u64(seed).shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort();
        prop_assert_eq!(sorted, (0..len).collect::<Vec<_>>());
    }

    #[test]
    fn random_schedule_is_permutation(seed: u64, n in 0usize..40) {
        let mut m: Model<Walker, GridSpace<2>> = Model::new(GridSpace::new([10, 10], false), ()).with_seed(seed);
        for _ in 0..n {
            m.add_agent_random(Walker::new(0.0, 0));
        }
        let order = Scheduler::Random.order(&mut m);
        prop_assert_eq!(order.iter().copied().collect::<BTreeSet<_>>(), m.ids().collect::<BTreeSet<_>>());
        prop_assert_eq!(order.len(), n);
    }

    #[test]
    fn grid_neighbors_symmetric(
        w in 1usize..9, h in 1usize..9, periodic: bool, r in 0.0f64..4.0,
        a in (0usize..9, 0usize..9), b in (0usize..9, 0usize..9),
    ) {
        let g = GridSpace::new([w, h], periodic);
        let (a, b) = ([a.0 % w, a.1 % h], [b.0 % w, b.1 % h]);
        let ab = g.neighbor_positions(&a, r).contains(&b);
        let ba = g.neighbor_positions(&b, r).contains(&a);
        prop_assert_eq!(ab, ba);
        prop_assert!(!g.neighbor_positions(&a, r).contains(&a));
    }

    #[test]
    fn continuous_positions_stay_in_extent(
        seed: u64, moves in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..40),
    ) {
        let mut m: Model<Walker, ContinuousSpace<2>> =
            Model::new(ContinuousSpace::new([7.0, 3.0], true), ()).with_seed(seed);
        let id = m.add_agent_random(Walker::new(0.0, 0));
        for (dx, dy) in moves {
            let p = *m[id].pos();
            m.move_agent(id, [p[0] + dx, p[1] + dy]);
            let q = *m[id].pos();
            prop_assert!((0.0..7.0).contains(&q[0]) && (0.0..3.0).contains(&q[1]), "{:?}", q);
            prop_assert_eq!(m.nearby_ids(&q, 0.0), vec![id]);
        }
    }

    #[test]
    fn value_literals_round_trip(i: i64, x in prop::num::f64::NORMAL | prop::num::f64::ZERO, b: bool, s in "[a-z_]{1,8}") {
        for v in [Value::Int(i), Value::Real(x), Value::Bool(b)] {
            prop_assert_eq!(Value::parse_literal(&v.to_string()), v);
        }
        if s != "true" && s != "false" {
            prop_assert_eq!(Value::parse_literal(&s), Value::Str(s.clone()));
        }
    }

    #[test]
    fn space_serde_round_trip(w in 1usize..20, h in 1usize..20, periodic: bool) {
        let g = GridSpace::new([w, h], periodic);
        let back: GridSpace<2> = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        prop_assert_eq!(back.describe(), g.describe());
        prop_assert_eq!(back.positions().len(), w * h);
    }
}
