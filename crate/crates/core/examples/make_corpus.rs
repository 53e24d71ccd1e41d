//! Writes the bundled synthetic PabuLib corpus into `data/`.
//!
//! Each instance mimics a district-level participatory budget: projects have
//! costs in the thousands, voters belong to neighbourhoods with their own
//! favourite projects, and approval sets are short.
//!
//! Usage: `cargo run --example make_corpus [-- OUT_DIR]`

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Shape {
    name: &'static str,
    projects: usize,
    voters: usize,
    neighbourhoods: usize,
}

const SHAPES: &[Shape] = &[
    Shape { name: "synthetic_01_small", projects: 6, voters: 60, neighbourhoods: 2 },
    Shape { name: "synthetic_02_small", projects: 8, voters: 90, neighbourhoods: 3 },
    Shape { name: "synthetic_03_small", projects: 9, voters: 120, neighbourhoods: 2 },
    Shape { name: "synthetic_04_small", projects: 10, voters: 75, neighbourhoods: 4 },
    Shape { name: "synthetic_05_medium", projects: 14, voters: 150, neighbourhoods: 3 },
    Shape { name: "synthetic_06_medium", projects: 18, voters: 200, neighbourhoods: 4 },
    Shape { name: "synthetic_07_medium", projects: 24, voters: 180, neighbourhoods: 5 },
    Shape { name: "synthetic_08_medium", projects: 30, voters: 250, neighbourhoods: 3 },
    Shape { name: "synthetic_09_large", projects: 33, voters: 220, neighbourhoods: 4 },
    Shape { name: "synthetic_10_large", projects: 38, voters: 300, neighbourhoods: 6 },
    Shape { name: "synthetic_11_large", projects: 42, voters: 260, neighbourhoods: 5 },
    Shape { name: "synthetic_12_large", projects: 48, voters: 320, neighbourhoods: 4 },
];

fn render(shape: &Shape, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let costs: Vec<u64> = (0..shape.projects)
        .map(|_| rng.gen_range(5..=120u64) * 1000)
        .collect();
    let home: Vec<usize> = (0..shape.projects)
        .map(|_| rng.gen_range(0..shape.neighbourhoods))
        .collect();
    let appeal: Vec<f64> = (0..shape.projects).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: u64 = costs.iter().sum();
    let budget = (total as f64 * rng.gen_range(0.25..0.45)).round() as u64;

    // Neighbourhood sizes are skewed so that minorities exist.
    let weights: Vec<f64> = (0..shape.neighbourhoods)
        .map(|k| 1.0 / (k as f64 + 1.0))
        .collect();
    let weight_sum: f64 = weights.iter().sum();

    let mut votes = Vec::new();
    for v in 0..shape.voters {
        let mut pick = rng.gen_range(0.0..weight_sum);
        let mut hood = 0;
        while pick > weights[hood] && hood + 1 < shape.neighbourhoods {
            pick -= weights[hood];
            hood += 1;
        }
        let mut approved: Vec<usize> = (0..shape.projects)
            .filter(|&p| {
                let local = if home[p] == hood { 0.55 } else { 0.06 };
                rng.gen_bool((local * appeal[p]).min(1.0))
            })
            .collect();
        if approved.is_empty() {
            let local: Vec<usize> = (0..shape.projects).filter(|&p| home[p] == hood).collect();
            let pool = if local.is_empty() { (0..shape.projects).collect() } else { local };
            approved.push(*pool.choose(&mut rng).expect("non-empty pool"));
        }
        approved.truncate(6);
        votes.push((v + 1, approved));
    }

    let mut out = String::new();
    let _ = writeln!(out, "META");
    let _ = writeln!(out, "key;value");
    let _ = writeln!(out, "description;Synthetic district budget generated by make_corpus (seed {seed})");
    let _ = writeln!(out, "country;Synthetic");
    let _ = writeln!(out, "unit;{}", shape.name);
    let _ = writeln!(out, "num_projects;{}", shape.projects);
    let _ = writeln!(out, "num_votes;{}", shape.voters);
    let _ = writeln!(out, "budget;{budget}");
    let _ = writeln!(out, "vote_type;approval");
    let _ = writeln!(out, "rule;greedy");
    let _ = writeln!(out, "currency;PLN");
    let _ = writeln!(out, "PROJECTS");
    let _ = writeln!(out, "project_id;cost;name");
    for (p, cost) in costs.iter().enumerate() {
        let _ = writeln!(out, "{};{};Project {} (area {})", p + 1, cost, p + 1, home[p] + 1);
    }
    let _ = writeln!(out, "VOTES");
    let _ = writeln!(out, "voter_id;vote");
    for (v, approved) in votes {
        let ids: Vec<String> = approved.iter().map(|p| (p + 1).to_string()).collect();
        let _ = writeln!(out, "{v};{}", ids.join(","));
    }
    out
}

fn main() -> std::io::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    fs::create_dir_all(&dir)?;
    for (k, shape) in SHAPES.iter().enumerate() {
        let path = dir.join(format!("{}.pb", shape.name));
        fs::write(&path, render(shape, 1000 + k as u64))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
