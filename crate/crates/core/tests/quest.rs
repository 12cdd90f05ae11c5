use proptest::prelude::*;
use textquest::games;
use textquest::quest::{DependencyGraph, QuestReport};
use textquest::QuestError;

/// Sources reach some rewarded vertex above `cut` without passing `cut`.
fn bypasses(dag: &DependencyGraph, cut: usize, level: &[usize]) -> bool {
    let n = dag.len();
    let mut indeg = vec![0; n];
    for &(_, b) in &dag.edges {
        indeg[b] += 1;
    }
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0 && v != cut).collect();
    while let Some(v) = stack.pop() {
        if std::mem::replace(&mut seen[v], true) {
            continue;
        }
        for &(a, b) in &dag.edges {
            if a == v && b != cut {
                stack.push(b);
            }
        }
    }
    (0..n).any(|v| seen[v] && level[v] > level[cut] && dag.vertices[v].reward != 0)
}

/// Layered DAG: every vertex in layer k > 0 has a predecessor in layer k - 1,
/// so levels coincide with layers.
fn layered() -> impl Strategy<Value = DependencyGraph> {
    prop::collection::vec(1usize..=3, 1..=6).prop_flat_map(|widths| {
        let n: usize = widths.iter().sum();
        (Just(widths), prop::collection::vec(any::<u64>(), n), prop::collection::vec(0i32..3, n)).prop_map(
            |(widths, picks, rewards)| {
                let mut start = vec![0];
                for w in &widths {
                    start.push(start.last().unwrap() + w);
                }
                let mut edges = Vec::new();
                for k in 1..widths.len() {
                    let prev = start[k - 1]..start[k];
                    for v in start[k]..start[k + 1] {
                        let bits = picks[v];
                        edges.push((prev.start + bits as usize % prev.len(), v));
                        for (i, u) in prev.clone().enumerate() {
                            if bits >> (8 + i) & 1 == 1 {
                                edges.push((u, v));
                            }
                        }
                    }
                }
                edges.sort_unstable();
                edges.dedup();
                DependencyGraph::from_rewards(&rewards, &edges).unwrap()
            },
        )
    })
}

proptest! {
    #[test]
    fn removing_a_bottleneck_disconnects_rewards_above(dag in layered()) {
        let level = dag.level_of().unwrap();
        for b in dag.bottlenecks().unwrap() {
            prop_assert!(!bypasses(&dag, b, &level), "bottleneck {} can be bypassed", b);
        }
    }

    #[test]
    fn levels_respect_edges(dag in layered()) {
        let level = dag.level_of().unwrap();
        for &(a, b) in &dag.edges {
            prop_assert!(level[a] < level[b]);
        }
    }
}

#[test]
fn miniz_bottlenecks() {
    let report = QuestReport::build(&games::miniz()).unwrap();
    for b in ["behind-house", "cellar"] {
        assert!(report.bottlenecks.iter().any(|x| x == b), "{b} missing from {:?}", report.bottlenecks);
    }
    assert_eq!(report.max_score, 50);
    assert!(report.validation.is_none());
}

#[test]
fn chain_game_bottlenecks_are_all_but_the_last() {
    let game = games::bundled("chainworld").unwrap().unwrap();
    let dag = game.quest.as_ref().unwrap();
    let levels = dag.topological_levels().unwrap();
    assert!(levels.iter().all(|l| l.len() == 1));
    let all_but_last: Vec<usize> = levels[..levels.len() - 1].iter().map(|l| l[0]).collect();
    assert_eq!(dag.bottlenecks().unwrap(), all_but_last);
}

#[test]
fn cycles_surface_as_errors() {
    let dag = DependencyGraph::from_rewards(&[0, 1, 1], &[(0, 1), (1, 2), (2, 1)]).unwrap();
    assert!(matches!(dag.bottlenecks(), Err(QuestError::Cycle(_))));
}
