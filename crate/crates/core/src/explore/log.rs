use std::fmt::Write as _;

use super::chain::PolicyChain;
use crate::game::GroundedAction;
use crate::kg::KnowledgeGraph;
use crate::policy::PolicyParams;

/// One environment step of training.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub instance: usize,
    pub score: i32,
    /// Game reward of the step.
    pub r_g: i32,
    pub r_im: usize,
    /// Shaped reward.
    pub reward: f64,
    pub kg_global: usize,
    /// Comma-separated event keys and markers (`death`, `fallback`), or `-`.
    pub flags: String,
}

impl StepRecord {
    pub const HEADER: &'static str = "step\tinstance\tscore\tr_g\tr_im\tr_t\tkg_global\tevents";

    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.step, self.instance, self.score, self.r_g, self.r_im, self.reward, self.kg_global, self.flags
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub score: i32,
    pub max_score: i32,
}

/// An evaluation of the current policy: its score, its trajectory's shaped
/// return and the best return so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRecord {
    pub step: u64,
    pub score: i32,
    pub j: f64,
    pub best: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub strategy: String,
    pub seed: u64,
    /// Score of the best evaluated trajectory, or best archived score.
    pub best_score: i32,
    /// Score of the policy the run hands back, evaluated from the reset
    /// frame: the chain for the structured loops, the last trained policy
    /// for archive exploration.
    pub final_score: i32,
    pub env_steps: u64,
    /// Sum of all intrinsic rewards handed out.
    pub im_total: u64,
    pub kg_global: usize,
    /// Digest over every training step's action and resulting state.
    pub trajectory_hash: u64,
    pub chain: Option<PolicyChain>,
    /// Parameters of the policy still training when the run ended.
    pub final_params: PolicyParams,
    /// Actions reaching the best archived cell.
    pub best_actions: Vec<GroundedAction>,
    pub archive_cells: usize,
    pub backtracks: u32,
    pub gave_up: bool,
    pub notes: Vec<String>,
    pub episodes: Vec<EpisodeRecord>,
    pub evals: Vec<EvalRecord>,
    pub steps: Vec<StepRecord>,
    /// Graphs in the order they were scored for novelty, when recorded.
    pub graphs: Vec<KnowledgeGraph>,
}

impl RunOutcome {
    pub fn episodes_csv(&self) -> String {
        let mut out = String::from("episode,score,max_score\n");
        for e in &self.episodes {
            let _ = writeln!(out, "{},{},{}", e.episode, e.score, e.max_score);
        }
        out
    }

    pub fn evals_csv(&self) -> String {
        let mut out = String::from("step,score,j,best\n");
        for e in &self.evals {
            let _ = writeln!(out, "{},{},{},{}", e.step, e.score, e.j, e.best);
        }
        out
    }

    pub fn steps_tsv(&self) -> String {
        let mut out = String::from(StepRecord::HEADER);
        out.push('\n');
        for s in &self.steps {
            out.push_str(&s.to_tsv());
            out.push('\n');
        }
        out
    }
}
