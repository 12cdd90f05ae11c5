//! Frozen policy modules and their deterministic replay.
//!
//! A chain directory holds `manifest.tsv` plus, for each module `i`,
//! `module-i.json` (policy checkpoint), `launch-i.snapshot` (engine state),
//! `launch-i.kg.tsv` (graph) and `launch-i.obs.json` (last observation).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::env::{rollout, trajectory_step, Env, Frame};
use super::trail::Trail;
use crate::error::{RunError, SnapshotError};
use crate::game::{GameDef, GroundedAction, Observation, Snapshot};
use crate::hash::StableHasher;
use crate::kg::{KnowledgeGraph, ScoreTerm, Shaping};
use crate::policy::{Checkpoint, FeatureConfig, PolicyConfig, PolicyParams};

pub const CHAIN_VERSION: &str = "textquest-chain/2";

#[derive(Debug, Clone, PartialEq)]
pub struct ChainModule {
    pub params: PolicyParams,
    pub launch: Frame,
    /// Sampling seed, or `None` for greedy decoding.
    pub seed: Option<u64>,
    /// Steps this module runs before handing off.
    pub steps: usize,
    /// Score when it hands off.
    pub score: i32,
    /// Reward events fired while it runs, in order.
    pub events: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyChain {
    pub game: String,
    pub fingerprint: u64,
    pub features: FeatureConfig,
    pub policy: PolicyConfig,
    pub shaping: Shaping,
    pub modules: Vec<ChainModule>,
    /// Score at the end of the last module.
    pub score: i32,
    /// Shaped return of the whole chained trajectory.
    pub j_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReplay {
    pub score: i32,
    pub j: f64,
    pub hash: u64,
    pub actions: Vec<GroundedAction>,
    pub events: Vec<String>,
}

fn diverged(msg: String) -> RunError {
    RunError::ChainDivergence(msg)
}

/// Runs each module from its launch for its recorded number of
/// steps. Any mismatch with the recorded handoffs is an error.
pub fn execute_chain(chain: &PolicyChain, env: &Env) -> Result<ChainReplay, RunError> {
    if chain.fingerprint != env.game.fingerprint {
        return Err(SnapshotError::GameMismatch.into());
    }
    let mut frame = env.initial();
    let mut trail = Trail::start(&frame);
    let mut h = StableHasher::new();
    let mut actions = Vec::new();
    let mut events = Vec::new();
    for (i, module) in chain.modules.iter().enumerate() {
        if !frame.same_context(&module.launch) {
            return Err(diverged(format!("module {i} does not start where module {} ended", i.saturating_sub(1))));
        }
        let r = rollout(env, &module.params, &module.launch, module.steps, module.seed)?;
        if r.actions.len() != module.steps {
            return Err(diverged(format!("module {i} ended after {} of {} steps", r.actions.len(), module.steps)));
        }
        if r.score != module.score {
            return Err(diverged(format!("module {i} reached {} instead of {}", r.score, module.score)));
        }
        for (a, f) in r.actions.iter().zip(&r.frames[1..]) {
            trajectory_step(&mut h, a, &f.state);
        }
        trail = trail.extend(&chain.shaping, &r);
        actions.extend_from_slice(&r.actions);
        events.extend(r.events.iter().map(|&(_, e)| env.game.events[e].key.clone()));
        frame = r.frames.last().expect("launch present").clone();
    }
    if frame.score() != chain.score {
        return Err(diverged(format!("chain reached {} instead of {}", frame.score(), chain.score)));
    }
    if trail.j.to_bits() != chain.j_max.to_bits() {
        return Err(diverged(format!("chain return {} instead of {}", trail.j, chain.j_max)));
    }
    Ok(ChainReplay { score: frame.score(), j: trail.j, hash: h.finish(), actions, events })
}

#[derive(Serialize, Deserialize)]
struct LaunchContext {
    obs: Observation,
    location: Option<String>,
}

fn io(path: &Path, source: std::io::Error) -> RunError {
    RunError::Io { path: path.display().to_string(), source }
}

fn malformed(msg: impl Into<String>) -> RunError {
    SnapshotError::Malformed(msg.into()).into()
}

impl PolicyChain {
    /// Reward events in the order the chain fires them.
    pub fn events(&self) -> Vec<&str> {
        self.modules.iter().flat_map(|m| m.events.iter().map(String::as_str)).collect()
    }

    pub fn manifest(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CHAIN_VERSION}");
        let _ = writeln!(out, "game\t{}\t{:016x}", self.game, self.fingerprint);
        let sh = &self.shaping;
        let _ = writeln!(out, "shaping\t{}\t{}\t{}\t{}", sh.alpha, sh.epsilon, sh.r_max, sh.score_term.as_str());
        let _ = writeln!(out, "score\t{}", self.score);
        let _ = writeln!(out, "j_max\t{}", self.j_max);
        for (i, m) in self.modules.iter().enumerate() {
            let events = if m.events.is_empty() { "-".to_owned() } else { m.events.join(",") };
            let seed = m.seed.map_or("greedy".to_owned(), |s| s.to_string());
            let _ = writeln!(
                out,
                "module\t{i}\tlaunch_score\t{}\tsteps\t{}\tscore\t{}\tdecode\t{seed}\tevents\t{events}",
                m.launch.score(),
                m.steps,
                m.score
            );
        }
        out
    }

    pub fn write_dir(&self, dir: &Path, game: &GameDef) -> Result<(), RunError> {
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let write = |name: String, text: String| {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| io(&path, e))
        };
        write("manifest.tsv".into(), self.manifest())?;
        for (i, m) in self.modules.iter().enumerate() {
            let cp = Checkpoint::new(self.features, self.policy, m.params.clone());
            write(format!("module-{i}.json"), cp.to_json())?;
            write(format!("launch-{i}.snapshot"), Snapshot::take(game, &m.launch.state).to_text(game))?;
            write(format!("launch-{i}.kg.tsv"), m.launch.kg.to_tsv())?;
            let ctx = LaunchContext { obs: m.launch.obs.clone(), location: m.launch.location.clone() };
            write(format!("launch-{i}.obs.json"), serde_json::to_string_pretty(&ctx).expect("serializable"))?;
        }
        Ok(())
    }

    pub fn read_dir(dir: &Path, game: &GameDef) -> Result<Self, RunError> {
        let read = |name: String| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|e| io(&path, e))
        };
        let manifest = read("manifest.tsv".into())?;
        let mut lines = manifest.lines();
        if lines.next() != Some(CHAIN_VERSION) {
            return Err(SnapshotError::Version { found: manifest.lines().next().unwrap_or("").into() }.into());
        }
        let mut fingerprint = None;
        let mut name = String::new();
        let mut j_max = None;
        let mut score = None;
        let mut shaping = None;
        let mut rows = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split('\t').collect();
            match f.as_slice() {
                ["game", n, fp] => {
                    name = (*n).to_owned();
                    fingerprint = Some(u64::from_str_radix(fp, 16).map_err(|_| malformed(line))?);
                }
                ["j_max", v] => j_max = Some(v.parse::<f64>().map_err(|_| malformed(line))?),
                ["score", v] => score = Some(v.parse::<i32>().map_err(|_| malformed(line))?),
                ["shaping", a, e, r, t] => {
                    let num = |s: &str| s.parse::<f64>().map_err(|_| malformed(line));
                    let term: ScoreTerm = t.parse().map_err(malformed)?;
                    shaping = Some(Shaping::new(num(a)?, num(e)?, num(r)?, term).map_err(|e| malformed(e.to_string()))?);
                }
                ["module", i, "launch_score", _, "steps", steps, "score", score, "decode", decode, "events", events] => {
                    let parse = |s: &str| s.parse::<i64>().map_err(|_| malformed(line));
                    let seed = match *decode {
                        "greedy" => None,
                        s => Some(s.parse::<u64>().map_err(|_| malformed(line))?),
                    };
                    let events = if *events == "-" { Vec::new() } else { events.split(',').map(str::to_owned).collect() };
                    rows.push((parse(i)? as usize, parse(steps)? as usize, parse(score)? as i32, seed, events));
                }
                [""] => {}
                _ => return Err(malformed(line)),
            }
        }
        let fingerprint = fingerprint.ok_or_else(|| malformed("missing game line"))?;
        if fingerprint != game.fingerprint {
            return Err(SnapshotError::GameMismatch.into());
        }
        let j_max = j_max.ok_or_else(|| malformed("missing j_max line"))?;
        let score = score.ok_or_else(|| malformed("missing score line"))?;
        let shaping = shaping.ok_or_else(|| malformed("missing shaping line"))?;

        let mut modules = Vec::new();
        let mut settings = None;
        for (n, (i, steps, reached, seed, events)) in rows.into_iter().enumerate() {
            if i != n {
                return Err(malformed(format!("module {i} out of order")));
            }
            let cp = Checkpoint::from_json(&read(format!("module-{i}.json"))?)?;
            settings = Some((cp.features, cp.config));
            let state = Snapshot::from_text(&read(format!("launch-{i}.snapshot"))?, game)?.restore(game)?;
            let kg = KnowledgeGraph::from_tsv(&read(format!("launch-{i}.kg.tsv"))?).map_err(malformed)?;
            let ctx: LaunchContext =
                serde_json::from_str(&read(format!("launch-{i}.obs.json"))?).map_err(|e| malformed(e.to_string()))?;
            let launch = Frame { state, obs: ctx.obs, kg, location: ctx.location };
            modules.push(ChainModule { params: cp.params, launch, seed, steps, score: reached, events });
        }
        let (features, policy) = settings.unwrap_or_default();
        Ok(Self { game: name, fingerprint, features, policy, shaping, modules, score, j_max })
    }
}
