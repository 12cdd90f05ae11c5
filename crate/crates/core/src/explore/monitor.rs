/// Stagnation bookkeeping for a batch of instances.
#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckMonitor {
    pub j_max: f64,
    /// Steps since each instance last made progress.
    pub counters: Vec<u64>,
    pub patience: Option<u64>,
    pub batch_factor: f64,
}

impl BottleneckMonitor {
    pub fn new(batch: usize, patience: Option<u64>, batch_factor: f64, j_max: f64) -> Self {
        Self { j_max, counters: vec![0; batch], patience, batch_factor }
    }

    /// Counts one step for instance `i`; `progressed` resets its counter.
    pub fn tick(&mut self, i: usize, progressed: bool) {
        if progressed {
            self.counters[i] = 0;
        } else {
            self.counters[i] += 1;
        }
    }

    /// Records an evaluation. A new best resets every counter.
    pub fn observe(&mut self, j: f64) -> bool {
        if j > self.j_max {
            self.j_max = j;
            self.counters.iter_mut().for_each(|p| *p = 0);
            true
        } else {
            false
        }
    }

    pub fn reset(&mut self, j_max: f64) {
        self.j_max = j_max;
        self.counters.iter_mut().for_each(|p| *p = 0);
    }

    /// True when at least `batch_factor` of the instances have waited
    /// `patience` steps.
    pub fn stagnant(&self) -> bool {
        let Some(patience) = self.patience else { return false };
        let stuck = self.counters.iter().filter(|&&p| p >= patience).count();
        !self.counters.is_empty() && stuck as f64 >= self.batch_factor * self.counters.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stuck(n: usize) -> BottleneckMonitor {
        let mut m = BottleneckMonitor::new(16, Some(3000), 0.75, 0.0);
        for i in 0..n {
            m.counters[i] = 3000;
        }
        m
    }

    #[test]
    fn thirteen_of_sixteen_is_stagnant() {
        assert!(stuck(13).stagnant());
        assert!(stuck(12).stagnant());
        assert!(!stuck(11).stagnant());
    }

    #[test]
    fn improvement_resets() {
        let mut m = stuck(16);
        assert!(m.observe(5.0));
        assert!(!m.stagnant());
        assert!(m.counters.iter().all(|&p| p == 0));
        assert!(!m.observe(5.0));
    }

    #[test]
    fn infinite_patience_never_fires() {
        let mut m = BottleneckMonitor::new(4, None, 0.75, 0.0);
        m.counters = vec![u64::MAX; 4];
        assert!(!m.stagnant());
    }
}
