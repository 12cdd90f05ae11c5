use proptest::prelude::*;
use textquest::kg::{im_reward, GlobalEdgeSet, KnowledgeGraph, Relation, Triple};

fn triple() -> impl Strategy<Value = Triple> {
    let name = prop::sample::select(vec!["you", "lamp", "kitchen", "egg", "brass key", "attic"]);
    let rel = prop::sample::select(vec![Relation::Has, Relation::Is, Relation::Have, Relation::In, Relation::Visited]);
    (name.clone(), rel, name).prop_map(|(s, r, o)| Triple::new(s, r, o).unwrap())
}

fn graph(ts: &[Triple]) -> KnowledgeGraph {
    let mut kg = KnowledgeGraph::new();
    for t in ts {
        kg.insert(t.clone());
    }
    kg
}

proptest! {
    #[test]
    fn the_hash_ignores_insertion_order(mut ts in prop::collection::vec(triple(), 0..20)) {
        let a = graph(&ts);
        ts.reverse();
        let b = graph(&ts);
        prop_assert_eq!(a.kg_hash(), b.kg_hash());
        prop_assert_eq!(KnowledgeGraph::from_tsv(&a.to_tsv()).unwrap().kg_hash(), a.kg_hash());
    }

    #[test]
    fn inserting_twice_changes_nothing(ts in prop::collection::vec(triple(), 0..20)) {
        let mut kg = graph(&ts);
        let before = (kg.len(), kg.kg_hash());
        for t in &ts {
            prop_assert!(!kg.insert(t.clone()));
        }
        prop_assert_eq!((kg.len(), kg.kg_hash()), before);
    }

    #[test]
    fn intrinsic_reward_counts_each_triple_once(graphs in prop::collection::vec(prop::collection::vec(triple(), 0..8), 1..10)) {
        let mut global = GlobalEdgeSet::new();
        let mut total = 0;
        for ts in &graphs {
            let kg = graph(ts);
            let expected = global.novelty(&kg);
            let (r, next) = im_reward(&kg, &global);
            prop_assert_eq!(r, expected);
            prop_assert_eq!(global.im_reward(&kg), r);
            prop_assert_eq!(next.len(), global.len());
            prop_assert_eq!(global.im_reward(&kg), 0);
            total += r;
        }
        prop_assert_eq!(total, global.len());
    }
}
