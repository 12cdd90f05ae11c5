use textquest::games;
use textquest::quest::QuestReport;

#[test]
fn bundled_games_load() {
    for (name, _) in games::BUNDLED {
        let game = games::bundled(name).unwrap().unwrap_or_else(|e| panic!("{name}: {e}"));
        let report = QuestReport::build(&game).unwrap_or_else(|e| panic!("{name}: {e}"));
        println!("{}", report.render());
    }
}
