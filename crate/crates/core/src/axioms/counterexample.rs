use crate::constraint::{Constraint, ConstraintSpec, PartitionGroup};
use crate::election::{Election, ElectionBuilder};
use crate::error::{Error, Result};

/// Instance where an EJR outcome has a low average satisfaction relative to α.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub election: Election,
    pub spec: ConstraintSpec,
    pub constraint: Constraint,
    /// Selected candidates: the `b` side of the first `z` pairs, the `a` side of the rest.
    pub outcome: Vec<usize>,
    /// `(mean extra weight + z²) / α_S` with `α_S = Σ_{i<z} (z − i)²`.
    pub avg_ratio: f64,
}

/// Extra utility `w_s` a voter at position `s` puts on its private candidate:
/// the best value a group of size `s` can secure against an adversary of size
/// `⌊β(n − s)/s⌋` over `β ≤ z`.
pub fn counterexample_weights(z: usize) -> Vec<f64> {
    let n = z;
    let sq = |j: usize| ((z - j) * (z - j)) as f64;
    (1..=z)
        .map(|s| {
            (1..=z)
                .map(|beta| {
                    let t = beta * (n - s) / s;
                    let top = z.min(beta + t);
                    if t > top {
                        0.0
                    } else {
                        (t..=top).map(sq).sum::<f64>()
                    }
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Builds the pair-exclusion instance of size `z`.
pub fn build_counterexample(z: usize) -> Result<Counterexample> {
    if z < 2 {
        return Err(Error::input("counterexample needs z >= 2"));
    }
    let weights = counterexample_weights(z);
    let mut b = ElectionBuilder::new();
    for v in 1..=z {
        b.voter(format!("v{v}"));
    }
    for i in 1..=2 * z {
        b.candidate(format!("a{i}"), 1).candidate(format!("b{i}"), 1);
    }
    for v in 1..=z {
        for i in 1..z {
            b.utility(format!("v{v}"), format!("a{i}"), ((z - i) * (z - i)) as f64);
        }
        b.utility(format!("v{v}"), format!("a{}", z + v), weights[v - 1]);
    }
    let election = b.build()?;
    let spec = ConstraintSpec::PartitionMatroid {
        groups: (1..=2 * z)
            .map(|i| PartitionGroup {
                members: vec![format!("a{i}"), format!("b{i}")],
                cap: 1,
            })
            .collect(),
    };
    let constraint = spec.compile(&election)?;
    let mut outcome = Vec::with_capacity(2 * z);
    for i in 1..=2 * z {
        let id = if i <= z { format!("b{i}") } else { format!("a{i}") };
        outcome.push(election.candidate_index(&id).expect("built above"));
    }
    let alpha_s: f64 = (1..=z).map(|i| ((z - i) * (z - i)) as f64).sum();
    let mean_w = weights.iter().sum::<f64>() / z as f64;
    let avg_ratio = (mean_w + (z * z) as f64) / alpha_s;
    Ok(Counterexample {
        election,
        spec,
        constraint,
        outcome,
        avg_ratio,
    })
}
