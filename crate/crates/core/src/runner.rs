//! Experiment runs driven by a TOML config, plus the quest report and QA
//! dataset tools.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, RunError};
use crate::explore::{execute_chain, go_train, mc_train, vanilla_train, Env, ExploreConfig, PolicyChain, RunOutcome};
use crate::extract::{write_dataset, AnswerBackend, NoisyBackend, OracleBackend, QARecord, RuleBackend};
use crate::game::{load_game, GameDef, SearchOracle};
use crate::games;
use crate::quest::QuestReport;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "TEXTQUEST_OUT";
pub const DEFAULT_OUT: &str = "runs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    Vanilla,
    Mc,
    McIm,
    Go,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Vanilla => "vanilla",
            Strategy::Mc => "mc",
            Strategy::McIm => "mc+im",
            Strategy::Go => "go",
        }
    }

    fn default_alpha(self) -> f64 {
        match self {
            Strategy::Vanilla | Strategy::Mc => 0.0,
            Strategy::McIm | Strategy::Go => 1.0,
        }
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "vanilla" => Ok(Self::Vanilla),
            "mc" => Ok(Self::Mc),
            "mc+im" => Ok(Self::McIm),
            "go" => Ok(Self::Go),
            other => Err(format!("unknown strategy `{other}` (expected vanilla, mc, mc+im or go)")),
        }
    }
}

impl TryFrom<String> for Strategy {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.as_str().to_owned()
    }
}

/// How observations become answers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BackendKind {
    Oracle,
    Rule,
    /// Oracle answers with each item dropped, or else swapped, with this probability.
    Noisy(f64),
}

impl BackendKind {
    pub fn build(self, game: &GameDef, seed: u64) -> Box<dyn AnswerBackend> {
        match self {
            BackendKind::Oracle => Box::new(OracleBackend),
            BackendKind::Rule => Box::new(RuleBackend::new(game)),
            BackendKind::Noisy(p) => Box::new(NoisyBackend::new(OracleBackend, p, p, seed)),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendKind::Oracle => f.write_str("oracle"),
            BackendKind::Rule => f.write_str("rule"),
            BackendKind::Noisy(p) => write!(f, "noisy({p})"),
        }
    }
}

impl FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "rule" => Ok(Self::Rule),
            _ => {
                let p = s
                    .strip_prefix("noisy(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| format!("unknown backend `{s}` (expected oracle, rule or noisy(p))"))?;
                let p: f64 = p.parse().map_err(|_| format!("bad noise probability in `{s}`"))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("noise probability {p} outside [0, 1]"));
                }
                Ok(Self::Noisy(p))
            }
        }
    }
}

impl TryFrom<String> for BackendKind {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<BackendKind> for String {
    fn from(b: BackendKind) -> String {
        b.to_string()
    }
}

/// Steps without progress before an instance counts as stuck, or `never`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PatienceRepr", into = "PatienceRepr")]
pub struct Patience(pub Option<u64>);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PatienceRepr {
    Steps(u64),
    Word(String),
}

impl TryFrom<PatienceRepr> for Patience {
    type Error = String;
    fn try_from(r: PatienceRepr) -> Result<Self, String> {
        match r {
            PatienceRepr::Steps(n) => Ok(Patience(Some(n))),
            PatienceRepr::Word(w) if w == "never" => Ok(Patience(None)),
            PatienceRepr::Word(w) => Err(format!("patience must be a step count or \"never\", got `{w}`")),
        }
    }
}

impl From<Patience> for PatienceRepr {
    fn from(p: Patience) -> Self {
        match p.0 {
            Some(n) => PatienceRepr::Steps(n),
            None => PatienceRepr::Word("never".into()),
        }
    }
}

impl FromStr for Patience {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "never" {
            return Ok(Patience(None));
        }
        s.parse().map(|n| Patience(Some(n))).map_err(|_| format!("patience must be a step count or `never`, got `{s}`"))
    }
}

/// One experiment: a game, a strategy, a backend and a list of seeds.
/// Every field may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Bundled game name or path to a game file.
    pub game: String,
    pub strategy: Strategy,
    pub backend: BackendKind,
    pub seeds: Vec<u64>,
    pub budget: u64,
    pub batch: usize,
    pub patience: Patience,
    pub buffer_size: usize,
    /// Intrinsic weight; omitted means 1 for mc+im and go, 0 otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub epsilon: f64,
    pub gamma: f64,
    pub cell_step: u32,
    pub horizon: u32,
    /// Output root; omitted means `$TEXTQUEST_OUT`, else `runs`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub record_steps: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let base = ExploreConfig::default();
        Self {
            game: "miniz".into(),
            strategy: Strategy::McIm,
            backend: BackendKind::Oracle,
            seeds: vec![0, 1, 2, 3, 4],
            budget: base.budget,
            batch: base.batch,
            patience: Patience(base.patience),
            buffer_size: base.buffer_size,
            alpha: None,
            epsilon: base.epsilon,
            gamma: base.policy.gamma,
            cell_step: base.cell_step,
            horizon: base.horizon,
            output: None,
            record_steps: true,
        }
    }
}

fn bad(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, reason: reason.into() }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(self.strategy.default_alpha())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let alpha = self.alpha();
        match self.strategy {
            Strategy::Vanilla | Strategy::Mc if alpha > 0.0 => {
                return Err(bad("alpha", format!("{} has no intrinsic reward; use mc+im or go for alpha > 0", self.strategy.as_str())));
            }
            Strategy::McIm if alpha <= 0.0 => return Err(bad("alpha", "mc+im needs alpha > 0")),
            _ => {}
        }
        if self.seeds.is_empty() {
            return Err(bad("seeds", "must list at least one seed"));
        }
        self.explore(self.seeds[0]).validate()
    }

    /// Training settings for one seed.
    pub fn explore(&self, seed: u64) -> ExploreConfig {
        let mut c = ExploreConfig {
            budget: self.budget,
            batch: self.batch,
            patience: self.patience.0,
            buffer_size: self.buffer_size,
            alpha: self.alpha(),
            epsilon: self.epsilon,
            cell_step: self.cell_step,
            horizon: self.horizon,
            seed,
            record_steps: self.record_steps,
            ..ExploreConfig::default()
        };
        c.policy.gamma = self.gamma;
        c
    }

    pub fn load_game(&self) -> Result<GameDef, RunError> {
        resolve_game(&self.game)
    }

    /// `output`, else `$TEXTQUEST_OUT`, else `runs`.
    pub fn output_root(&self) -> PathBuf {
        match &self.output {
            Some(o) => PathBuf::from(o),
            None => std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from),
        }
    }
}

/// A bundled game by name, otherwise a game file by path.
pub fn resolve_game(name_or_path: &str) -> Result<GameDef, RunError> {
    if let Some(g) = games::bundled(name_or_path) {
        return Ok(g?);
    }
    let path = Path::new(name_or_path);
    let text = fs::read_to_string(path)
        .map_err(|e| bad("game", format!("`{name_or_path}` is neither a bundled game nor a readable file: {e}")))?;
    Ok(load_game(&text)?)
}

pub fn train(game: &GameDef, cfg: &RunConfig, seed: u64) -> Result<RunOutcome, RunError> {
    let backend = cfg.backend.build(game, seed);
    let explore = cfg.explore(seed);
    let env = Env::new(game, backend.as_ref(), explore.features);
    match cfg.strategy {
        Strategy::Vanilla => vanilla_train(&env, &explore),
        Strategy::Mc | Strategy::McIm => mc_train(&env, &explore),
        Strategy::Go => go_train(&env, &explore),
    }
}

/// Median of a nonempty list; the mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Per-seed results of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    /// Last `max_score` in the episode log.
    pub episode_max: i32,
    pub best: i32,
    pub final_score: i32,
    pub env_steps: u64,
    pub backtracks: u32,
}

impl SeedSummary {
    pub fn of(o: &RunOutcome) -> Self {
        Self {
            seed: o.seed,
            episode_max: o.episodes.last().map_or(0, |e| e.max_score),
            best: o.best_score,
            final_score: o.final_score,
            env_steps: o.env_steps,
            backtracks: o.backtracks,
        }
    }
}

/// Summary file text: a row per seed, then median and max of each score.
pub fn render_summary(game: &str, strategy: Strategy, rows: &[SeedSummary]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "game\t{game}");
    let _ = writeln!(out, "strategy\t{}", strategy.as_str());
    for r in rows {
        let _ = writeln!(
            out,
            "seed\t{}\tepisode_max\t{}\tbest\t{}\tfinal\t{}\tenv_steps\t{}\tbacktracks\t{}",
            r.seed, r.episode_max, r.best, r.final_score, r.env_steps, r.backtracks
        );
    }
    let stats = |name: &str, get: fn(&SeedSummary) -> i32, out: &mut String| {
        let v: Vec<f64> = rows.iter().map(|r| f64::from(get(r))).collect();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(out, "{name}\tmedian\t{}\tmax\t{}", median(&v), max);
    };
    if !rows.is_empty() {
        stats("episode_max", |r| r.episode_max, &mut out);
        stats("best", |r| r.best, &mut out);
        stats("final", |r| r.final_score, &mut out);
    }
    out
}

/// Directory a config's artifacts go to.
pub fn run_dir(cfg: &RunConfig, game: &GameDef) -> PathBuf {
    cfg.output_root().join(format!("{}-{}", game.name, cfg.strategy.as_str()))
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| RunError::Io { path: parent.display().to_string(), source })?;
    }
    fs::write(path, text).map_err(|source| RunError::Io { path: path.display().to_string(), source })
}

fn archive_text(game: &GameDef, o: &RunOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "cells\t{}", o.archive_cells);
    let _ = writeln!(out, "best\t{}", o.best_score);
    for a in &o.best_actions {
        let _ = writeln!(out, "{}", a.text(game));
    }
    out
}

/// Trains every seed and writes, under the run directory, the resolved
/// config, `summary.tsv`, and per seed `episodes.csv`, `evals.csv`,
/// `notes.txt`, `steps.tsv` (when recorded) and a `chain/` directory or
/// `archive.txt`.
pub fn run(cfg: &RunConfig) -> Result<(PathBuf, Vec<SeedSummary>), RunError> {
    cfg.validate()?;
    let game = cfg.load_game()?;
    let dir = run_dir(cfg, &game);
    write(&dir.join("config.toml"), &cfg.to_toml())?;
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let o = train(&game, cfg, seed)?;
        let sd = dir.join(format!("seed-{seed}"));
        write(&sd.join("episodes.csv"), &o.episodes_csv())?;
        write(&sd.join("evals.csv"), &o.evals_csv())?;
        write(&sd.join("notes.txt"), &o.notes.iter().map(|n| format!("{n}\n")).collect::<String>())?;
        if cfg.record_steps {
            write(&sd.join("steps.tsv"), &o.steps_tsv())?;
        }
        match &o.chain {
            Some(chain) => chain.write_dir(&sd.join("chain"), &game)?,
            None => write(&sd.join("archive.txt"), &archive_text(&game, &o))?,
        }
        rows.push(SeedSummary::of(&o));
    }
    write(&dir.join("summary.tsv"), &render_summary(&game.name, cfg.strategy, &rows))?;
    Ok((dir, rows))
}

/// Quest report of a game.
pub fn analyze(game: &GameDef) -> Result<String, RunError> {
    Ok(QuestReport::build(game)?.render())
}

/// Replays a chain directory, twice, and reports the score, the shaped
/// return and the trajectory digest.
pub fn replay_chain(game: &GameDef, dir: &Path, backend: BackendKind, seed: u64) -> Result<String, RunError> {
    let chain = PolicyChain::read_dir(dir, game)?;
    let backend = backend.build(game, seed);
    let env = Env::new(game, backend.as_ref(), chain.features);
    let first = execute_chain(&chain, &env)?;
    let second = execute_chain(&chain, &env)?;
    if first != second {
        return Err(RunError::ChainDivergence("two replays differ".into()));
    }
    let mut out = chain.manifest();
    let _ = writeln!(out, "replay\tscore\t{}\tj\t{}\thash\t{:016x}\tsteps\t{}", first.score, first.j, first.hash, first.actions.len());
    for a in &first.actions {
        let _ = writeln!(out, "{}", a.text(game));
    }
    Ok(out)
}

/// QA records for `budget` states: the oracle walkthrough's states first,
/// then uniformly random admissible actions from the reset state,
/// restarting on game over.
pub fn emit_dataset(game: &GameDef, budget: usize, seed: u64) -> Result<String, RunError> {
    let mut records = Vec::new();
    if budget == 0 {
        return Ok(String::new());
    }
    let (start, obs0, _) = game.reset();
    records.push(QARecord::from_state(game, &start, &obs0));
    let walkthrough = SearchOracle::explore(game, SearchOracle::DEFAULT_STATE_LIMIT)?.walkthrough();
    let mut state = start.clone();
    for a in &walkthrough {
        if records.len() >= budget {
            break;
        }
        let out = game.step(&state, a)?;
        records.push(QARecord::from_state(game, &out.state, &out.observation));
        state = out.state;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = start;
    while records.len() < budget {
        let actions = game.admissible_actions(&state);
        if actions.is_empty() || state.done() {
            let (s, obs, _) = game.reset();
            records.push(QARecord::from_state(game, &s, &obs));
            state = s;
            continue;
        }
        let a = actions[rng.gen_range(0..actions.len())];
        let out = game.step(&state, &a)?;
        records.push(QARecord::from_state(game, &out.state, &out.observation));
        state = if out.done { game.reset().0 } else { out.state };
    }
    Ok(write_dataset(&records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips() {
        let mut c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        c.backend = BackendKind::Noisy(0.25);
        c.patience = Patience(None);
        c.alpha = Some(0.5);
        c.output = Some("out".into());
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn vanilla_with_intrinsic_reward_is_rejected() {
        let c = RunConfig { strategy: Strategy::Vanilla, alpha: Some(0.5), ..RunConfig::default() };
        let err = c.validate().unwrap_err();
        assert!(matches!(err, ConfigError::Field { field: "alpha", .. }), "{err}");
        let c = RunConfig { strategy: Strategy::Vanilla, ..RunConfig::default() };
        assert!(c.validate().is_ok());
        assert_eq!(c.alpha(), 0.0);
    }

    #[test]
    fn unknown_fields_and_values_are_parse_errors() {
        assert!(RunConfig::from_toml("bogus = 1").is_err());
        assert!(RunConfig::from_toml("strategy = \"greedy\"").is_err());
        assert!(RunConfig::from_toml("backend = \"noisy(2)\"").is_err());
        assert!(RunConfig::from_toml("patience = \"soon\"").is_err());
    }

    #[test]
    fn backend_names() {
        for b in [BackendKind::Oracle, BackendKind::Rule, BackendKind::Noisy(0.1)] {
            assert_eq!(b.to_string().parse::<BackendKind>().unwrap(), b);
        }
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn empty_dataset_for_zero_budget() {
        assert_eq!(emit_dataset(&games::miniz(), 0, 1).unwrap(), "");
    }
}
