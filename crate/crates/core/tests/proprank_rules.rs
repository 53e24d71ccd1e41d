mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use propselect::constraint::{Constraint, ConstraintSpec};
use propselect::outcome::audit;
use propselect::proprank::{
    compute_local_scalings, minimal_rho, run_proprank, run_proprank_ranking, spending_cap,
    ProprankConfig,
};
use propselect::{Election, ElectionBuilder, Error};

fn config(kappa: f64) -> ProprankConfig {
    ProprankConfig {
        kappa,
        ..ProprankConfig::default()
    }
}

fn unconstrained(e: &Election) -> Constraint {
    ConstraintSpec::Unconstrained.compile(e).unwrap()
}

fn budget(e: &Election, b: u64) -> Constraint {
    ConstraintSpec::Budget { budget: b }.compile(e).unwrap()
}

#[test]
fn cap_formula_examples() {
    for kappa in [0.0, 0.4, 1.0] {
        assert_eq!(spending_cap(4.0, 2.0, 1.0, kappa).unwrap(), 4.0);
    }
    assert_abs_diff_eq!(spending_cap(4.0, 2.0, 4.0, 0.0).unwrap(), 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(spending_cap(4.0, 2.0, 4.0, 1.0).unwrap(), 16.0 / 6.0, epsilon = 1e-12);
    assert!(matches!(spending_cap(1.0, 0.0, 1.0, 1.0), Err(Error::Contract(_))));
    assert!(matches!(spending_cap(1.0, 1.0, 1.0, 1.5), Err(Error::Input(_))));
}

#[test]
fn minimal_rho_examples() {
    let rho = minimal_rho(&[(1.0, 1.0), (2.0, 2.0), (5.0, 1.0)], 3.0).unwrap().unwrap();
    assert_abs_diff_eq!(rho, 0.75, epsilon = 1e-12);
    assert_abs_diff_eq!(minimal_rho(&[(2.0, 4.0)], 2.0).unwrap().unwrap(), 0.5, epsilon = 1e-12);
    assert_eq!(minimal_rho(&[(1.0, 1.0), (3.0, 1.0)], 5.0).unwrap(), None);
    assert!(matches!(minimal_rho(&[(1.0, 1.0)], 0.0), Err(Error::Contract(_))));
}

#[test]
fn local_scaling_examples() {
    // v1 has utility 3, v2 utility 1; supporters are visited v2 first.
    let e = common::from_matrix(&[2], &[vec![3], vec![1]]);
    let lambda = compute_local_scalings(&e, &[1.0, 1.0], &[0.0, 0.0], &[0]).unwrap();
    assert_abs_diff_eq!(lambda[1], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(lambda[0], 1.5, epsilon = 1e-12);

    let zero = compute_local_scalings(&e, &[0.0, 0.0], &[0.7, 0.2], &[0]).unwrap();
    assert_eq!(zero, vec![0.7, 0.2]);

    let single = common::from_matrix(&[3], &[vec![4]]);
    let lambda = compute_local_scalings(&single, &[3.0], &[1.0], &[0]).unwrap();
    assert_abs_diff_eq!(lambda[0], 4.0, epsilon = 1e-12);
}

#[test]
fn local_scalings_reject_unsupported_pool() {
    let mut b = ElectionBuilder::new();
    b.voter("v").candidate("a", 1).candidate("b", 1).utility("v", "a", 1.0);
    let e = b.build().unwrap();
    assert!(matches!(
        compute_local_scalings(&e, &[1.0], &[0.0], &[0, 1]),
        Err(Error::Contract(_))
    ));
}

#[test]
fn single_voter_buys_at_cost() {
    let e = common::from_matrix(&[2], &[vec![5]]);
    let out = run_proprank(&e, &unconstrained(&e), &config(1.0)).unwrap();
    let p = &out.purchases[0];
    assert_abs_diff_eq!(p.time.unwrap(), 2.0, epsilon = 1e-9);
    assert_abs_diff_eq!(p.payments[0].1, 2.0, epsilon = 1e-9);
}

#[test]
fn two_approvers_split_unit_cost() {
    let e = common::from_matrix(&[1], &[vec![1], vec![1]]);
    let out = run_proprank(&e, &unconstrained(&e), &config(1.0)).unwrap();
    let p = &out.purchases[0];
    assert_abs_diff_eq!(p.time.unwrap(), 0.5, epsilon = 1e-9);
    for &(_, pay) in &p.payments {
        assert_abs_diff_eq!(pay, 0.5, epsilon = 1e-9);
    }
}

#[test]
fn identical_candidates_break_ties_by_id() {
    let e = common::from_matrix(&[1, 1], &[vec![1, 1]]);
    let out = run_proprank(&e, &budget(&e, 1), &config(1.0)).unwrap();
    assert_eq!(out.selected(), vec![0]);
    assert_eq!(out.removed.len(), 1);
    assert_eq!(out.removed[0].candidate, 1);
}

#[test]
fn symmetric_voters_pay_for_their_own_candidate() {
    let e = common::from_matrix(&[1, 1], &[vec![2, 0], vec![0, 2]]);
    let out = run_proprank(&e, &budget(&e, 2), &config(1.0)).unwrap();
    let mut sel = out.selected();
    sel.sort();
    assert_eq!(sel, vec![0, 1]);
    for p in &out.purchases {
        assert_eq!(p.payments.len(), 1);
        assert_eq!(p.payments[0].0, p.candidate);
        assert_abs_diff_eq!(p.payments[0].1, 1.0, epsilon = 1e-9);
    }
}

#[test]
fn zero_budget_removes_everything_at_start() {
    let e = common::from_matrix(&[1, 2], &[vec![1, 1]]);
    let out = run_proprank(&e, &budget(&e, 0), &config(1.0)).unwrap();
    assert!(out.purchases.is_empty());
    assert_eq!(out.removed.len(), 2);
    assert!(out.removed.iter().all(|r| r.time == 0.0));
}

#[test]
fn rejects_bad_kappa_and_unsupported_candidates() {
    let e = common::from_matrix(&[1], &[vec![1]]);
    assert!(matches!(
        run_proprank(&e, &unconstrained(&e), &config(-0.1)),
        Err(Error::Input(_))
    ));
    let mut b = ElectionBuilder::new();
    b.voter("v").candidate("a", 1).candidate("b", 1).utility("v", "a", 1.0);
    let e = b.build().unwrap();
    assert!(matches!(
        run_proprank(&e, &unconstrained(&e), &config(1.0)),
        Err(Error::Contract(_))
    ));
}

#[test]
fn ranking_examples() {
    let e = common::from_matrix(&[4], &[vec![1]]);
    assert_eq!(run_proprank_ranking(&e, &config(1.0)).unwrap().order, vec![0]);

    // Bloc of one voter supports c1, bloc of two supports c2.
    let e = common::from_matrix(&[1, 1], &[vec![1, 0], vec![0, 1], vec![0, 1]]);
    let r = run_proprank_ranking(&e, &config(1.0)).unwrap();
    assert_eq!(r.order, vec![1, 0]);
    assert_abs_diff_eq!(r.timestamps[0], 0.5, epsilon = 1e-9);
    assert_abs_diff_eq!(r.timestamps[1], 1.0, epsilon = 1e-9);
}

/// Bisection on the monotone map ρ ↦ Σ min(x, uρ).
fn rho_by_bisection(caps: &[(f64, f64)], cost: f64) -> Option<f64> {
    let total: f64 = caps.iter().map(|c| c.0).sum();
    if total < cost {
        return None;
    }
    let paid = |rho: f64| caps.iter().map(|&(x, u)| x.min(u * rho)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, caps.iter().map(|&(x, u)| x / u).fold(0.0, f64::max));
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if paid(mid) >= cost {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Slow PropRank that advances the clock in fixed steps, then bisects within
/// the step where a purchase first becomes possible.
struct SteppingReference<'a> {
    e: &'a Election,
    kappa: f64,
    dt: f64,
}

/// Market state between purchases.
struct State {
    spent: Vec<f64>,
    global: Vec<f64>,
    remaining: Vec<usize>,
}

/// What the market looks like at one instant.
struct Snapshot {
    best: Option<(f64, usize)>,
    affordable: usize,
    balance: Vec<f64>,
    lambda: Vec<f64>,
}

impl SteppingReference<'_> {
    fn cap(&self, p: f64, u: f64, lambda: f64) -> f64 {
        let d = if lambda > u { lambda } else { u };
        let combined = self.kappa * 2.0 * p * u / (u + d) + (1.0 - self.kappa) * p * u / d;
        combined.min(p)
    }

    fn supporters(&self, c: usize) -> Vec<(usize, f64)> {
        (0..self.e.num_voters())
            .filter(|&i| self.e.utility(i, c) > 0.0)
            .map(|i| (i, self.e.utility(i, c)))
            .collect()
    }

    fn snapshot(&self, state: &State, t: f64) -> Snapshot {
        let balance: Vec<f64> = state.spent.iter().map(|s| (t - s).max(0.0)).collect();
        let mut lambda = state.global.clone();
        for &c in &state.remaining {
            let mut sup = self.supporters(c);
            sup.sort_by(|a, b| a.1.total_cmp(&b.1));
            let mut money: f64 = sup.iter().map(|&(i, _)| balance[i]).sum();
            let mut running = 0.0f64;
            for (i, u) in sup {
                running = running.max(money / self.e.cost(c) as f64 * u);
                lambda[i] = lambda[i].max(running);
                money -= balance[i];
            }
        }
        let mut best: Option<(f64, usize)> = None;
        let mut affordable = 0;
        for &c in &state.remaining {
            let caps: Vec<(f64, f64)> = self
                .supporters(c)
                .into_iter()
                .map(|(i, u)| (self.cap(balance[i], u, lambda[i]), u))
                .collect();
            if let Some(rho) = rho_by_bisection(&caps, self.e.cost(c) as f64) {
                affordable += 1;
                if best.map_or(true, |(r, _)| rho < r) {
                    best = Some((rho, c));
                }
            }
        }
        Snapshot {
            best,
            affordable,
            balance,
            lambda,
        }
    }

    /// Relative excess of `c`'s capped money over its cost at time `t`.
    fn margin(&self, state: &State, t: f64, c: usize) -> f64 {
        let snap = self.snapshot(state, t);
        let total: f64 = self
            .supporters(c)
            .into_iter()
            .map(|(i, u)| self.cap(snap.balance[i], u, snap.lambda[i]))
            .sum();
        total / self.e.cost(c) as f64 - 1.0
    }

    /// Purchases as `(candidate, time)`, plus whether the run was ambiguous:
    /// some purchase step had more than one affordable candidate, or a
    /// purchase only touched affordability instead of crossing into it.
    fn run(&self, budget: Option<u64>) -> (Vec<(usize, f64)>, bool) {
        let (n, m) = (self.e.num_voters(), self.e.num_candidates());
        let mut state = State {
            spent: vec![0.0; n],
            global: vec![0.0; n],
            remaining: (0..m)
                .filter(|&c| budget.map_or(true, |b| self.e.cost(c) <= b))
                .collect(),
        };
        let mut used = 0u64;
        let mut trace = Vec::new();
        let mut step = 0u64;
        let mut ambiguous = false;
        while !state.remaining.is_empty() {
            let t = step as f64 * self.dt;
            let coarse = self.snapshot(&state, t);
            if coarse.best.is_none() {
                step += 1;
                continue;
            }
            ambiguous |= coarse.affordable > 1;
            // the previous step had nothing affordable
            let (mut lo, mut hi) = ((t - self.dt).max(0.0), t);
            if step > 0 {
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.snapshot(&state, mid).best.is_some() {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
            }
            let at = self.snapshot(&state, hi);
            ambiguous |= at.affordable > 1;
            let (rho, c) = at.best.expect("affordable at the bracket top");
            ambiguous |= self.margin(&state, hi + self.dt, c) < 1e-9;
            // another candidate reaching its cost at the same instant
            ambiguous |= state
                .remaining
                .iter()
                .any(|&x| x != c && self.margin(&state, hi, x) > -1e-6);
            for (i, u) in self.supporters(c) {
                state.spent[i] += self.cap(at.balance[i], u, at.lambda[i]).min(u * rho);
            }
            for i in 0..n {
                state.global[i] = state.global[i].max(at.lambda[i]);
            }
            used += self.e.cost(c);
            trace.push((c, hi));
            state.remaining.retain(|&x| x != c);
            if let Some(b) = budget {
                state.remaining.retain(|&x| used + self.e.cost(x) <= b);
            }
        }
        (trace, ambiguous)
    }
}

fn cost_scaled(e: &Election, factor: u64) -> Election {
    let mut raw = e.to_raw();
    for c in &mut raw.candidates {
        c.cost *= factor as i64;
    }
    Election::from_raw(&raw).unwrap()
}

fn is_well_separated(times: &[f64], gap: f64) -> bool {
    times.windows(2).all(|w| w[1] - w[0] > gap) && times.first().map_or(true, |&t| t > gap)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, max_global_rejects: 4096, ..ProptestConfig::default() })]

    #[test]
    fn minimal_rho_matches_bisection(
        caps in prop::collection::vec((0.0f64..5.0, 0.1f64..4.0), 1..6),
        cost in 0.1f64..10.0,
    ) {
        let fast = minimal_rho(&caps, cost).unwrap();
        let slow = rho_by_bisection(&caps, cost);
        match (fast, slow) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9 * b.max(1.0)),
            (None, None) => {}
            (a, b) => {
                let total: f64 = caps.iter().map(|c| c.0).sum();
                // only a rounding-level shortfall may disagree
                prop_assert!((total - cost).abs() <= 1e-9 * cost, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn matches_fixed_step_reference(
        e in common::arb_election(3, 3, 3, 3),
        kappa in prop::sample::select(vec![0.0, 0.5, 1.0]),
        b in 1u64..6,
    ) {
        let dt = 1e-4;
        let exact = run_proprank(&e, &budget(&e, b), &config(kappa)).unwrap();
        let times: Vec<f64> = exact.purchases.iter().map(|p| p.time.unwrap()).collect();
        prop_assume!(is_well_separated(&times, 0.05));
        let (slow, ambiguous) = SteppingReference { e: &e, kappa, dt }.run(Some(b));
        prop_assume!(!ambiguous);
        let candidates: Vec<usize> = slow.iter().map(|&(c, _)| c).collect();
        prop_assert_eq!(&candidates, &exact.selected());
        for (k, (&(_, t_ref), &t)) in slow.iter().zip(&times).enumerate() {
            prop_assert!((t_ref - t).abs() <= 1e-6 * t.max(1.0), "event {k}: {t_ref} vs {t}");
        }
    }

    #[test]
    fn scaling_stays_below_max_utility(
        e in common::arb_election(5, 5, 4, 4),
        kappa in 0.0f64..=1.0,
    ) {
        let out = run_proprank(&e, &unconstrained(&e), &config(kappa)).unwrap();
        prop_assert!(out.stats.max_scaling <= e.u_max() + 1e-9);
    }

    #[test]
    fn payments_respect_caps_and_budgets(
        e in common::arb_election(5, 5, 4, 4),
        kappa in 0.0f64..=1.0,
        b in 0u64..12,
    ) {
        let con = budget(&e, b);
        let out = run_proprank(&e, &con, &config(kappa)).unwrap();
        prop_assert!(audit(&e, &con, &out).is_empty());
        let mut spent = vec![0.0; e.num_voters()];
        let mut last = 0.0;
        for p in &out.purchases {
            let t = p.time.unwrap();
            prop_assert!(t + 1e-12 >= last);
            last = t;
            let rho = p.rho.unwrap();
            prop_assert!((p.total_paid() - e.cost(p.candidate) as f64).abs() <= 1e-9 * e.cost(p.candidate) as f64);
            for &(i, pay) in &p.payments {
                prop_assert!(pay <= e.utility(i, p.candidate) * rho * (1.0 + 1e-9) + 1e-12);
                spent[i] += pay;
                prop_assert!(spent[i] <= t * (1.0 + 1e-9) + 1e-12);
            }
        }
        // exhaustive: nothing left that still fits
        let used = out.total_cost(&e);
        let chosen = out.selected();
        for c in (0..e.num_candidates()).filter(|c| !chosen.contains(c)) {
            prop_assert!(used + e.cost(c) > b);
        }
    }

    #[test]
    fn invariant_under_cost_scaling(
        e in common::arb_election(4, 4, 3, 3),
        factor in 2u64..5,
        b in 1u64..8,
    ) {
        let base = run_proprank(&e, &budget(&e, b), &config(1.0)).unwrap();
        let big = cost_scaled(&e, factor);
        let scaled = run_proprank(&big, &budget(&big, b * factor), &config(1.0)).unwrap();
        prop_assert_eq!(base.selected(), scaled.selected());
        for (p, q) in base.purchases.iter().zip(&scaled.purchases) {
            let (t, s) = (p.time.unwrap(), q.time.unwrap());
            prop_assert!((t * factor as f64 - s).abs() <= 1e-7 * s.max(1.0));
        }
    }

    #[test]
    fn invariant_under_utility_scaling(
        e in common::arb_election(4, 4, 3, 3),
        factor in prop::sample::select(vec![0.5, 2.0, 10.0]),
        kappa in 0.0f64..=1.0,
    ) {
        let base = run_proprank(&e, &unconstrained(&e), &config(kappa)).unwrap();
        let scaled_e = e.scaled(factor).unwrap();
        let scaled = run_proprank(&scaled_e, &unconstrained(&scaled_e), &config(kappa)).unwrap();
        prop_assert_eq!(base.selected(), scaled.selected());
        for (p, q) in base.purchases.iter().zip(&scaled.purchases) {
            prop_assert!((p.time.unwrap() - q.time.unwrap()).abs() <= 1e-7 * p.time.unwrap().max(1.0));
            prop_assert!((p.rho.unwrap() / factor - q.rho.unwrap()).abs() <= 1e-7 * p.rho.unwrap());
        }
    }

    #[test]
    fn ranking_prefixes_match_cardinality_runs(
        e in common::arb_unit_election(5, 5, 3),
        kappa in prop::sample::select(vec![0.0, 1.0]),
    ) {
        let ranking = run_proprank_ranking(&e, &config(kappa)).unwrap();
        prop_assert_eq!(ranking.order.len(), e.num_candidates());
        prop_assert!(ranking.timestamps.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..=e.num_candidates() {
            let out = run_proprank(&e, &budget(&e, k as u64), &config(kappa)).unwrap();
            prop_assert_eq!(ranking.prefix(k), &out.selected()[..]);
        }
    }

    #[test]
    fn deterministic(e in common::arb_election(4, 4, 3, 3), b in 0u64..8) {
        let con = budget(&e, b);
        let a = run_proprank(&e, &con, &config(1.0)).unwrap();
        let c = run_proprank(&e, &con, &config(1.0)).unwrap();
        prop_assert_eq!(a, c);
    }
}


