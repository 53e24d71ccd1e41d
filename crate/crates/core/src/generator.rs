//! Seeded random elections for property tests, fuzzing and demo corpora.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::election::{Election, ElectionBuilder};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UtilityDist {
    /// Each voter approves each candidate with probability `p` (utility 1).
    Approval { p: f64 },
    /// With probability `p` a voter gives a uniform integer utility in `1..=max`.
    UniformInt { p: f64, max: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostDist {
    Unit,
    UniformInt { min: u64, max: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub voters: usize,
    pub candidates: usize,
    pub utilities: UtilityDist,
    pub costs: CostDist,
    pub seed: u64,
}

/// Draws an election; every candidate is guaranteed at least one supporter.
pub fn generate(config: &GeneratorConfig) -> Election {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    generate_with(&mut rng, config)
}

pub fn generate_with(rng: &mut impl Rng, config: &GeneratorConfig) -> Election {
    let n = config.voters.max(1);
    let m = config.candidates;
    let mut b = ElectionBuilder::new();
    for i in 1..=n {
        b.voter(format!("v{i}"));
    }
    for c in 1..=m {
        let cost = match config.costs {
            CostDist::Unit => 1,
            CostDist::UniformInt { min, max } => rng.gen_range(min.max(1)..=max.max(min.max(1))),
        };
        b.candidate(format!("c{c}"), cost);
    }
    let draw = |rng: &mut dyn rand::RngCore| -> f64 {
        match config.utilities {
            UtilityDist::Approval { .. } => 1.0,
            UtilityDist::UniformInt { max, .. } => rng.gen_range(1..=max.max(1)) as f64,
        }
    };
    let p = match config.utilities {
        UtilityDist::Approval { p } | UtilityDist::UniformInt { p, .. } => p.clamp(0.0, 1.0),
    };
    for c in 1..=m {
        let mut supported = false;
        for i in 1..=n {
            if rng.gen_bool(p) {
                let u = draw(rng);
                b.utility(format!("v{i}"), format!("c{c}"), u);
                supported = true;
            }
        }
        if !supported {
            let i = rng.gen_range(1..=n);
            let u = draw(rng);
            b.utility(format!("v{i}"), format!("c{c}"), u);
        }
    }
    b.build().expect("generated ids are unique and costs positive")
}
