//! Deterministic input builders shared by the benchmark targets.

use segstruct_core::{LabelMap, LogitMap, Tensor};

pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.state
    }

    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

pub fn random_tensor(h: usize, w: usize, c: usize, lo: f64, hi: f64, seed: u64) -> Tensor {
    let mut rng = Lcg::new(seed);
    let data = (0..h * w * c).map(|_| lo + (hi - lo) * rng.next_unit()).collect();
    Tensor::from_vec(h, w, c, data).expect("consistent dims")
}

pub fn random_logits(h: usize, w: usize, c: usize, seed: u64) -> LogitMap {
    LogitMap::new(random_tensor(h, w, c, -4.0, 4.0, seed)).expect("finite")
}

pub fn random_labels(h: usize, w: usize, c: usize, seed: u64) -> LabelMap {
    let mut rng = Lcg::new(seed);
    let ids = (0..h * w).map(|_| (rng.next_u64() % c as u64) as u8).collect();
    LabelMap::new(h, w, c, ids).expect("ids in range")
}
