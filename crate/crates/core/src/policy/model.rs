use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureConfig;
use crate::error::PolicyError;
use crate::game::{EntityId, GameDef, GroundedAction};

pub const CHECKPOINT_VERSION: &str = "textquest-policy/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub entropy_coef: f64,
    pub critic_coef: f64,
    /// Rescale the update when its global L2 norm exceeds this.
    pub clip_norm: Option<f64>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self { gamma: 0.9, learning_rate: 1.0, entropy_coef: 0.01, critic_coef: 0.5, clip_norm: Some(5.0) }
    }
}

/// Linear heads. The template head maps features to template logits; the
/// entity head maps `features ⊕ one-hot(template) ⊕ one-hot(previous entity)
/// ⊕ one-hot(blank position)` to entity logits and is shared by both blanks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub templates: usize,
    pub entities: usize,
    pub dim: usize,
    pub template_w: Vec<f64>,
    pub object_w: Vec<f64>,
    pub critic_w: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(templates: usize, entities: usize, dim: usize) -> Self {
        let width = dim + templates + entities + 2;
        Self {
            templates,
            entities,
            dim,
            template_w: vec![0.0; templates * dim],
            object_w: vec![0.0; entities * width],
            critic_w: vec![0.0; dim],
        }
    }

    pub fn for_game(game: &GameDef, dim: usize) -> Self {
        Self::zeros(game.templates.len(), game.entities.len(), dim)
    }

    pub fn object_width(&self) -> usize {
        self.dim + self.templates + self.entities + 2
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        (self.templates, self.entities, self.dim) == (other.templates, other.entities, other.dim)
    }

    fn slices(&self) -> [&[f64]; 3] {
        [&self.template_w, &self.object_w, &self.critic_w]
    }

    fn slices_mut(&mut self) -> [&mut Vec<f64>; 3] {
        [&mut self.template_w, &mut self.object_w, &mut self.critic_w]
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat view for tests and finite differences.
    pub fn get(&self, mut i: usize) -> f64 {
        for s in self.slices() {
            if i < s.len() {
                return s[i];
            }
            i -= s.len();
        }
        panic!("parameter index out of range")
    }

    pub fn set(&mut self, mut i: usize, v: f64) {
        for s in self.slices_mut() {
            if i < s.len() {
                s[i] = v;
                return;
            }
            i -= s.len();
        }
        panic!("parameter index out of range")
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += alpha * s;
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.slices().iter().flat_map(|s| s.iter()).map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().flat_map(|s| s.iter()).all(|v| v.is_finite())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        dot(&self.critic_w, x)
    }

    pub fn template_probs(&self, x: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = (0..self.templates).map(|t| dot(&self.template_w[t * self.dim..(t + 1) * self.dim], x)).collect();
        softmax(&logits)
    }

    fn entity_logit(&self, e: EntityId, x: &[f64], head: &Head) -> f64 {
        let w = &self.object_w[e * self.object_width()..(e + 1) * self.object_width()];
        let mut z = dot(&w[..self.dim], x) + w[self.dim + head.template] + w[self.dim + self.templates + self.entities + head.position];
        if let Some(p) = head.prev {
            z += w[self.dim + self.templates + p];
        }
        z
    }

    /// Distribution over `choices`, aligned with it.
    fn entity_probs(&self, x: &[f64], head: &Head, choices: &[EntityId]) -> Vec<f64> {
        let logits: Vec<f64> = choices.iter().map(|&e| self.entity_logit(e, x, head)).collect();
        softmax(&logits)
    }

    /// Adds `coef * input(head)` to entity row `e`.
    fn add_entity_row(&mut self, e: EntityId, coef: f64, x: &[f64], head: &Head) {
        let (dim, t, n) = (self.dim, self.templates, self.entities);
        let width = self.object_width();
        let w = &mut self.object_w[e * width..(e + 1) * width];
        for (wi, xi) in w[..dim].iter_mut().zip(x) {
            *wi += coef * xi;
        }
        w[dim + head.template] += coef;
        w[dim + t + n + head.position] += coef;
        if let Some(p) = head.prev {
            w[dim + t + p] += coef;
        }
    }

    fn add_template_row(&mut self, t: usize, coef: f64, x: &[f64]) {
        let d = self.dim;
        for (wi, xi) in self.template_w[t * d..(t + 1) * d].iter_mut().zip(x) {
            *wi += coef * xi;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `Σ p log p` with `0 log 0 = 0`.
fn neg_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum()
}

/// Conditioning of one entity-head decode step.
struct Head {
    template: usize,
    prev: Option<EntityId>,
    position: usize,
}

fn heads(action: &GroundedAction, blanks: usize) -> impl Iterator<Item = Head> + '_ {
    (0..blanks).map(move |j| Head { template: action.template, prev: (j > 0).then(|| action.fillers[j - 1]), position: j })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sample,
    Greedy,
}

#[derive(Debug, Clone)]
pub struct Decision {
    pub action: GroundedAction,
    pub log_prob: f64,
    pub value: f64,
    /// Entities the blanks were drawn from.
    pub choices: Arc<[EntityId]>,
    /// The mask was empty and a blank fell back to the full entity set.
    pub fallback: bool,
}

fn pick(probs: &[f64], mode: Mode, rng: &mut impl Rng) -> usize {
    match mode {
        Mode::Greedy => {
            let mut best = 0;
            for (i, &p) in probs.iter().enumerate() {
                if p > probs[best] {
                    best = i;
                }
            }
            best
        }
        Mode::Sample => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (i, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return i;
                }
            }
            probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
        }
    }
}

/// Decodes a template, then each blank from the entity head restricted to
/// `mask`. Entities outside the mask get probability exactly zero.
pub fn act(params: &PolicyParams, game: &GameDef, x: &[f64], mask: &Arc<[EntityId]>, mode: Mode, rng: &mut impl Rng) -> Decision {
    let tp = params.template_probs(x);
    let t = pick(&tp, mode, rng);
    let blanks = game.templates[t].blanks;
    let mut log_prob = tp[t].ln();
    let (choices, fallback) = if mask.is_empty() && blanks > 0 {
        ((0..params.entities).collect::<Arc<[EntityId]>>(), true)
    } else {
        (mask.clone(), false)
    };
    let mut action = GroundedAction { template: t, fillers: [0; 2] };
    for j in 0..blanks {
        let head = Head { template: t, prev: (j > 0).then(|| action.fillers[j - 1]), position: j };
        let probs = params.entity_probs(x, &head, &choices);
        let c = pick(&probs, mode, rng);
        action.fillers[j] = choices[c];
        log_prob += probs[c].ln();
    }
    Decision { action, log_prob, value: params.value(x), choices, fallback }
}

/// Probability of each entity filling blank `position` of `template` after
/// `prev`, indexed by entity id; entities outside `choices` get zero.
pub fn filler_distribution(
    params: &PolicyParams,
    x: &[f64],
    template: usize,
    prev: Option<EntityId>,
    position: usize,
    choices: &[EntityId],
) -> Vec<f64> {
    let probs = params.entity_probs(x, &Head { template, prev, position }, choices);
    let mut out = vec![0.0; params.entities];
    for (&e, p) in choices.iter().zip(probs) {
        out[e] = p;
    }
    out
}

/// Log-probability of `action` under the policy with the given entity choices.
pub fn log_prob(params: &PolicyParams, game: &GameDef, x: &[f64], action: &GroundedAction, choices: &[EntityId]) -> f64 {
    let mut lp = params.template_probs(x)[action.template].ln();
    for head in heads(action, game.templates[action.template].blanks) {
        let probs = params.entity_probs(x, &head, choices);
        let c = choices.iter().position(|&e| e == action.fillers[head.position]).expect("filler among choices");
        lp += probs[c].ln();
    }
    lp
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub features: Arc<[f64]>,
    pub action: GroundedAction,
    pub choices: Arc<[EntityId]>,
    /// Discounted reward summed over `span` steps.
    pub reward: f64,
    pub span: u32,
    /// State `span` steps later; `None` when the episode ended by death.
    pub next_features: Option<Arc<[f64]>>,
}

/// Bootstrapped targets, held fixed while differentiating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Targets {
    pub q: f64,
    pub advantage: f64,
}

impl Targets {
    /// `Q = r + γ^span V(s')` with `V(terminal) = 0`, `A = Q - V(s)`.
    pub fn compute(params: &PolicyParams, gamma: f64, tr: &Transition) -> Self {
        let next = tr.next_features.as_ref().map_or(0.0, |f| params.value(f));
        let q = tr.reward + gamma.powi(tr.span as i32) * next;
        Self { q, advantage: q - params.value(&tr.features) }
    }
}

/// Batch means of the three loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossTerms {
    /// `-A log π(a|s)`.
    pub actor: f64,
    /// `½ (Q - V(s))²`.
    pub critic: f64,
    /// `Σ p log p` summed over every decode step.
    pub entropy: f64,
}

impl LossTerms {
    pub fn total(&self, config: &PolicyConfig) -> f64 {
        self.actor + config.critic_coef * self.critic + config.entropy_coef * self.entropy
    }
}

pub fn loss_terms(params: &PolicyParams, game: &GameDef, batch: &[Transition], targets: &[Targets]) -> LossTerms {
    let n = batch.len() as f64;
    let mut out = LossTerms::default();
    for (tr, tg) in batch.iter().zip(targets) {
        let x = &tr.features;
        let tp = params.template_probs(x);
        let mut lp = tp[tr.action.template].ln();
        let mut ent = neg_entropy(&tp);
        for head in heads(&tr.action, game.templates[tr.action.template].blanks) {
            let probs = params.entity_probs(x, &head, &tr.choices);
            let c = tr.choices.iter().position(|&e| e == tr.action.fillers[head.position]).expect("filler among choices");
            lp += probs[c].ln();
            ent += neg_entropy(&probs);
        }
        let v = params.value(x);
        out.actor -= tg.advantage * lp / n;
        out.critic += 0.5 * (tg.q - v).powi(2) / n;
        out.entropy += ent / n;
    }
    out
}

/// Analytic gradients of each loss term, same shape as the parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub actor: PolicyParams,
    pub critic: PolicyParams,
    pub entropy: PolicyParams,
}

impl Gradients {
    pub fn total(&self, config: &PolicyConfig) -> PolicyParams {
        let mut g = self.actor.clone();
        g.axpy(config.critic_coef, &self.critic);
        g.axpy(config.entropy_coef, &self.entropy);
        g
    }
}

pub fn gradients(params: &PolicyParams, game: &GameDef, batch: &[Transition], targets: &[Targets]) -> Gradients {
    let zero = || PolicyParams::zeros(params.templates, params.entities, params.dim);
    let mut g = Gradients { actor: zero(), critic: zero(), entropy: zero() };
    let n = batch.len() as f64;
    for (tr, tg) in batch.iter().zip(targets) {
        let x = &tr.features;
        let a = tg.advantage;

        // d(Σ p log p)/dz_k = p_k (log p_k - Σ p log p); d(-A log p_t)/dz_k = -A (δ_kt - p_k).
        let tp = params.template_probs(x);
        let s = neg_entropy(&tp);
        for (k, &p) in tp.iter().enumerate() {
            let onehot = if k == tr.action.template { 1.0 } else { 0.0 };
            g.actor.add_template_row(k, -a * (onehot - p) / n, x);
            if p > 0.0 {
                g.entropy.add_template_row(k, p * (p.ln() - s) / n, x);
            }
        }
        for head in heads(&tr.action, game.templates[tr.action.template].blanks) {
            let probs = params.entity_probs(x, &head, &tr.choices);
            let s = neg_entropy(&probs);
            let chosen = tr.action.fillers[head.position];
            for (&e, &p) in tr.choices.iter().zip(&probs) {
                let onehot = if e == chosen { 1.0 } else { 0.0 };
                g.actor.add_entity_row(e, -a * (onehot - p) / n, x, &head);
                if p > 0.0 {
                    g.entropy.add_entity_row(e, p * (p.ln() - s) / n, x, &head);
                }
            }
        }
        let v = params.value(x);
        for (w, xi) in g.critic.critic_w.iter_mut().zip(x.iter()) {
            *w -= (tg.q - v) * xi / n;
        }
    }
    g
}

/// One gradient step on a batch. Leaves `params` untouched and reports the
/// update counter if anything non-finite shows up.
pub fn a2c_update(
    params: &mut PolicyParams,
    game: &GameDef,
    config: &PolicyConfig,
    batch: &[Transition],
    step: u64,
) -> Result<LossTerms, PolicyError> {
    if batch.is_empty() {
        return Err(PolicyError::EmptyTrajectory);
    }
    let targets: Vec<Targets> = batch.iter().map(|tr| Targets::compute(params, config.gamma, tr)).collect();
    let grads = gradients(params, game, batch, &targets);
    let total = grads.total(config);
    if !total.is_finite() {
        return Err(PolicyError::NonFiniteGradient { step });
    }
    let mut scale = config.learning_rate;
    if let Some(max) = config.clip_norm {
        let norm = total.norm();
        if norm > max {
            scale *= max / norm;
        }
    }
    let before = loss_terms(params, game, batch, &targets);
    params.axpy(-scale, &total);
    if !params.is_finite() {
        params.axpy(scale, &total);
        return Err(PolicyError::NonFiniteGradient { step });
    }
    Ok(before)
}

/// Serialized policy: parameters plus everything needed to rebuild features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub features: FeatureConfig,
    pub config: PolicyConfig,
    pub params: PolicyParams,
}

impl Checkpoint {
    pub fn new(features: FeatureConfig, config: PolicyConfig, params: PolicyParams) -> Self {
        Self { format: CHECKPOINT_VERSION.into(), features, config, params }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        let cp: Checkpoint = serde_json::from_str(text).map_err(|e| PolicyError::Checkpoint(e.to_string()))?;
        if cp.format != CHECKPOINT_VERSION {
            return Err(PolicyError::Checkpoint(format!("unsupported format `{}`", cp.format)));
        }
        let p = &cp.params;
        let expected = PolicyParams::zeros(p.templates, p.entities, p.dim);
        if p.dim != cp.features.dim() || p.len() != expected.len() || p.critic_w.len() != p.dim || p.template_w.len() != expected.template_w.len() {
            return Err(PolicyError::Checkpoint("parameter shapes are inconsistent".into()));
        }
        Ok(cp)
    }
}
