use criterion::{black_box, criterion_group, criterion_main, Criterion};
use textquest::game::{SearchOracle, Snapshot};
use textquest::games;
use textquest::quest::QuestReport;
use textquest_bench::walkthrough;

fn engine(c: &mut Criterion) {
    let game = games::miniz();
    let actions = walkthrough(&game);

    c.bench_function("walkthrough", |b| {
        b.iter(|| {
            let (mut state, _, _) = game.reset();
            for a in &actions {
                state = game.step(&state, a).unwrap().state;
            }
            black_box(state.score)
        })
    });

    let (start, _, _) = game.reset();
    c.bench_function("admissible_actions", |b| b.iter(|| black_box(game.admissible_actions(&start).len())));

    let snap = Snapshot::take(&game, &start);
    let text = snap.to_text(&game);
    c.bench_function("snapshot_round_trip", |b| {
        b.iter(|| black_box(Snapshot::from_text(&text, &game).unwrap().restore(&game).unwrap()))
    });

    c.bench_function("search_oracle", |b| {
        b.iter(|| black_box(SearchOracle::explore(&game, SearchOracle::DEFAULT_STATE_LIMIT).unwrap().len()))
    });

    let dag = game.quest.clone().expect("miniz has a quest graph");
    c.bench_function("bottlenecks", |b| b.iter(|| black_box(dag.bottlenecks().unwrap())));
    c.bench_function("quest_report", |b| b.iter(|| black_box(QuestReport::build(&game).unwrap().max_score)));
}

criterion_group!(benches, engine);
criterion_main!(benches);
