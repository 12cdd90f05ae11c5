use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::game::{Direction, Observation};
use crate::hash::{hash_str, SplitMix};
use crate::kg::{KnowledgeGraph, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub desc_buckets: usize,
    pub feedback_buckets: usize,
    pub inv_buckets: usize,
    pub action_buckets: usize,
    pub graph_dim: usize,
    pub seed: u64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { desc_buckets: 128, feedback_buckets: 64, inv_buckets: 64, action_buckets: 64, graph_dim: 32, seed: 0 }
    }
}

impl FeatureConfig {
    /// Length of the encoded vector, including the trailing bias entry.
    pub fn dim(&self) -> usize {
        self.desc_buckets + self.feedback_buckets + self.inv_buckets + self.action_buckets + self.graph_dim + 1
    }
}

const RELATIONS: usize = 11;

fn relation_index(r: Relation) -> usize {
    match r {
        Relation::Has => 0,
        Relation::Is => 1,
        Relation::Have => 2,
        Relation::In => 3,
        Relation::Visited => 4,
        Relation::Of(d) => 5 + Direction::ALL.iter().position(|x| *x == d).expect("direction listed"),
    }
}

/// Fixed random projection of the graph plus token hashing of the text.
///
/// The graph half is one round of relational message passing: every node
/// starts from a seeded embedding, receives the per-relation mean of its
/// neighbours' embeddings through a per-relation matrix (forward and inverse
/// directions kept apart), adds a self term, goes through `tanh`, and the
/// result is mean-pooled over nodes. The learned output projection lives in
/// the policy heads, which are linear in this vector.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub config: FeatureConfig,
    /// `2 * RELATIONS` matrices, forward then inverse, each `graph_dim²`.
    relation_weights: Vec<Vec<f64>>,
    self_weight: Vec<f64>,
}

impl Encoder {
    pub fn new(config: FeatureConfig) -> Self {
        let d = config.graph_dim;
        let scale = 1.0 / (d.max(1) as f64).sqrt();
        let matrix = |salt: u64| {
            let mut rng = SplitMix::new(hash_str(config.seed, "relation") ^ salt.wrapping_mul(0x2545_f491_4f6c_dd1d));
            (0..d * d).map(|_| rng.next_signed_unit() * scale).collect::<Vec<_>>()
        };
        let relation_weights = (0..2 * RELATIONS as u64).map(|r| matrix(r + 1)).collect();
        let self_weight = matrix(0);
        Self { config, relation_weights, self_weight }
    }

    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    pub fn encode(&self, obs: &Observation, kg: &KnowledgeGraph) -> Vec<f64> {
        let mut out = self.encode_text(obs);
        let g = self.graph_features(kg);
        let at = out.len() - 1 - self.config.graph_dim;
        out[at..at + g.len()].copy_from_slice(&g);
        out
    }

    /// Like `encode`, reusing graph features already computed for this KG.
    pub fn encode_cached(&self, obs: &Observation, kg: &KnowledgeGraph, cache: &mut GraphCache) -> Vec<f64> {
        let mut out = self.encode_text(obs);
        let g = cache.get_or_insert(kg.kg_hash(), || self.graph_features(kg));
        let at = out.len() - 1 - self.config.graph_dim;
        out[at..at + g.len()].copy_from_slice(&g);
        out
    }

    fn encode_text(&self, obs: &Observation) -> Vec<f64> {
        let c = &self.config;
        let mut out = vec![0.0; c.dim()];
        let mut offset = 0;
        for (salt, text, n) in [
            ("desc", &obs.desc, c.desc_buckets),
            ("feedback", &obs.feedback, c.feedback_buckets),
            ("inv", &obs.inv, c.inv_buckets),
            ("action", &obs.prev_action, c.action_buckets),
        ] {
            hash_tokens(&mut out[offset..offset + n], text, hash_str(c.seed, salt));
            offset += n;
        }
        *out.last_mut().expect("dim is positive") = 1.0;
        out
    }

    fn embedding(&self, name: &str) -> Vec<f64> {
        let d = self.config.graph_dim;
        let scale = 1.0 / (d.max(1) as f64).sqrt();
        let mut rng = SplitMix::new(hash_str(self.config.seed ^ 0x6e6f_6465, name));
        (0..d).map(|_| rng.next_signed_unit() * scale).collect()
    }

    /// Pooled node states after one aggregation round; zeros for an empty graph.
    pub fn graph_features(&self, kg: &KnowledgeGraph) -> Vec<f64> {
        let d = self.config.graph_dim;
        if kg.is_empty() || d == 0 {
            return vec![0.0; d];
        }
        let nodes: Vec<Arc<str>> = kg.entities().into_iter().collect();
        let index: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (&**n, i)).collect();
        let emb: Vec<Vec<f64>> = nodes.iter().map(|n| self.embedding(n)).collect();

        // (node, relation slot) -> (sum of neighbour embeddings, count)
        let mut incoming: BTreeMap<(usize, usize), (Vec<f64>, usize)> = BTreeMap::new();
        for t in kg.triples() {
            let s = index[&*t.subject];
            let o = index[&*t.object];
            let r = relation_index(t.relation);
            for (target, source, slot) in [(o, s, r), (s, o, r + RELATIONS)] {
                let entry = incoming.entry((target, slot)).or_insert_with(|| (vec![0.0; d], 0));
                for (acc, x) in entry.0.iter_mut().zip(&emb[source]) {
                    *acc += x;
                }
                entry.1 += 1;
            }
        }

        let mut pre: Vec<Vec<f64>> = emb.iter().map(|h| mat_vec(&self.self_weight, h, d)).collect();
        for ((target, slot), (sum, count)) in &incoming {
            let msg = mat_vec(&self.relation_weights[*slot], sum, d);
            let norm = 1.0 / *count as f64;
            for (p, m) in pre[*target].iter_mut().zip(&msg) {
                *p += m * norm;
            }
        }
        let mut pooled = vec![0.0; d];
        for row in &pre {
            for (acc, v) in pooled.iter_mut().zip(row) {
                *acc += v.tanh();
            }
        }
        let n = nodes.len() as f64;
        pooled.iter_mut().for_each(|v| *v /= n);
        pooled
    }
}

fn mat_vec(m: &[f64], v: &[f64], d: usize) -> Vec<f64> {
    (0..d).map(|i| m[i * d..(i + 1) * d].iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Marks one bucket per distinct lowercase word, scaled so that the segment
/// has unit norm when no buckets collide.
fn hash_tokens(out: &mut [f64], text: &str, seed: u64) {
    if out.is_empty() {
        return;
    }
    let lower = text.to_lowercase();
    let mut buckets: Vec<usize> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| (hash_str(seed, w) % out.len() as u64) as usize)
        .collect();
    if buckets.is_empty() {
        return;
    }
    buckets.sort_unstable();
    buckets.dedup();
    let value = 1.0 / (buckets.len() as f64).sqrt();
    for b in buckets {
        out[b] = value;
    }
}

/// Graph features keyed by KG digest. Bounded; cleared wholesale when full.
#[derive(Debug, Default)]
pub struct GraphCache {
    map: HashMap<u64, Arc<[f64]>>,
}

impl GraphCache {
    const CAPACITY: usize = 1 << 14;

    pub fn new() -> Self {
        Self::default()
    }

    fn get_or_insert(&mut self, key: u64, make: impl FnOnce() -> Vec<f64>) -> Arc<[f64]> {
        if let Some(v) = self.map.get(&key) {
            return v.clone();
        }
        if self.map.len() >= Self::CAPACITY {
            self.map.clear();
        }
        let v: Arc<[f64]> = make().into();
        self.map.insert(key, v.clone());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Triple;

    fn obs(desc: &str) -> Observation {
        Observation { desc: desc.into(), feedback: "Taken.".into(), inv: "You are empty handed.".into(), prev_action: "take egg".into() }
    }

    #[test]
    fn empty_inputs_give_bias_only() {
        let enc = Encoder::new(FeatureConfig::default());
        let v = enc.encode(&Observation::default(), &KnowledgeGraph::new());
        assert_eq!(v.len(), enc.dim());
        assert_eq!(v.iter().filter(|x| **x != 0.0).count(), 1);
        assert_eq!(v[v.len() - 1], 1.0);
    }

    #[test]
    fn deterministic_and_cache_agrees() {
        let enc = Encoder::new(FeatureConfig::default());
        let mut kg = KnowledgeGraph::new();
        kg.insert(Triple::new("kitchen", Relation::Has, "lamp").unwrap());
        let o = obs("Kitchen A room.");
        let a = enc.encode(&o, &kg);
        assert_eq!(a, enc.encode(&o, &kg));
        let mut cache = GraphCache::new();
        assert_eq!(a, enc.encode_cached(&o, &kg, &mut cache));
        assert_eq!(a, enc.encode_cached(&o, &kg, &mut cache));
    }

    #[test]
    fn text_segment_has_unit_norm() {
        let enc = Encoder::new(FeatureConfig::default());
        let v = enc.encode(&obs("west of house"), &KnowledgeGraph::new());
        let n: f64 = v[..128].iter().map(|x| x * x).sum();
        assert!(n > 0.3 && n <= 1.0 + 1e-12);
    }

    #[test]
    fn different_seeds_differ() {
        let mut kg = KnowledgeGraph::new();
        kg.insert(Triple::new("you", Relation::In, "kitchen").unwrap());
        let a = Encoder::new(FeatureConfig::default()).graph_features(&kg);
        let b = Encoder::new(FeatureConfig { seed: 9, ..FeatureConfig::default() }).graph_features(&kg);
        assert_ne!(a, b);
    }
}
