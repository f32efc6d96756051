//! Integral optimum: every item goes wholly to one buyer or to nobody, and
//! budgets are hard. Best-first branch-and-bound over items in decreasing
//! top-bid order, bounded by the fractional optimum of the remaining items
//! restricted to buyers that can still afford them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::{fractional_opt, solve_dense, FlowNetwork, LpProblem, DENSE_LIMIT};
use crate::error::Result;
use crate::market::{BuyerId, Instance, Prediction, FICTITIOUS};
use crate::rng::SplitMix64;

const MAX_NEIGHBOURHOOD: usize = 28;
const SUBPROBLEM_NODES: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralOptions {
    pub time_budget: Duration,
    /// Instances with more items only get the rounding heuristics.
    pub max_branch_items: usize,
    /// Search stops once the incumbent is within this relative distance of the bound.
    pub gap_tolerance: f64,
    /// Deterministic cap on expanded search nodes.
    pub node_limit: Option<usize>,
    /// Neighbourhoods tried by the local search that polishes the incumbent
    /// (0 disables it).
    pub improve_rounds: usize,
}

impl Default for IntegralOptions {
    fn default() -> Self {
        Self {
            time_budget: Duration::from_secs(10),
            max_branch_items: 400,
            gap_tolerance: 1e-9,
            node_limit: None,
            improve_rounds: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralOptimum {
    pub value: f64,
    /// Buyer per item, `0` for unsold items.
    pub assignment: Prediction,
    /// The search closed: `value` is optimal up to `gap_tolerance`.
    pub proven: bool,
    /// Best known upper bound on the integral optimum.
    pub upper_bound: f64,
    pub fractional_value: f64,
    /// `fractional / integral - 1`.
    pub integrality_gap: f64,
    pub nodes: usize,
}

struct Problem {
    budgets: Vec<f64>,
    bids: Vec<Vec<(BuyerId, f64)>>,
    uniform: bool,
}

impl Problem {
    fn from_instance(instance: &Instance) -> Self {
        let market = instance.as_market();
        let bids = (0..market.num_items()).map(|j| market.bids(j).collect()).collect();
        Self {
            budgets: market.budgets().to_vec(),
            bids,
            uniform: matches!(instance, Instance::Bounded(_)),
        }
    }

    fn top_bid(&self, j: usize) -> f64 {
        self.bids[j].iter().fold(0.0, |a, e| a.max(e.1))
    }

    /// Upper bound on what `items` can still earn with budgets `rem`.
    fn bound(&self, items: &[usize], rem: &[f64]) -> f64 {
        if self.uniform {
            self.flow_bound(items, rem)
        } else {
            self.lp_bound(items, rem)
        }
    }

    fn flow_bound(&self, items: &[usize], rem: &[f64]) -> f64 {
        let n = rem.len();
        let m = items.len();
        let (s, t) = (0, n + m + 1);
        let mut g = FlowNetwork::new(n + m + 2);
        let mut used = vec![false; n];
        for (k, &j) in items.iter().enumerate() {
            let mut any = false;
            for &(i, p) in &self.bids[j] {
                if p <= rem[i - 1] {
                    g.add_edge(1 + k, m + i, f64::INFINITY);
                    used[i - 1] = true;
                    any = true;
                }
            }
            if any {
                g.add_edge(s, 1 + k, self.top_bid(j));
            }
        }
        for (k, &r) in rem.iter().enumerate() {
            if used[k] {
                g.add_edge(m + 1 + k, t, r);
            }
        }
        g.max_flow(s, t)
    }

    fn lp_bound(&self, items: &[usize], rem: &[f64]) -> f64 {
        // cheap bound: every item at its best affordable bid, capped by budgets
        let mut per_item = 0.0;
        let mut touched = vec![false; rem.len()];
        let mut vars = 0;
        for &j in items {
            let mut best: f64 = 0.0;
            for &(i, b) in &self.bids[j] {
                if b <= rem[i - 1] {
                    best = best.max(b);
                    touched[i - 1] = true;
                    vars += 1;
                }
            }
            per_item += best;
        }
        let budget_cap: f64 = rem.iter().zip(&touched).filter(|(_, &t)| t).map(|(r, _)| *r).sum();
        let cheap = per_item.min(budget_cap);
        let rows = rem.len() + items.len();
        if (rows + 1) * (vars + rows + 1) > DENSE_LIMIT / 4 {
            return cheap;
        }
        let mut lp = LpProblem {
            num_vars: 0,
            objective: Vec::new(),
            rows: Vec::with_capacity(rows),
        };
        let mut buyer_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rem.len()];
        for &j in items {
            let mut row = Vec::new();
            for &(i, b) in &self.bids[j] {
                if b <= rem[i - 1] {
                    let k = lp.num_vars;
                    lp.num_vars += 1;
                    lp.objective.push(b);
                    buyer_rows[i - 1].push((k, b));
                    row.push((k, 1.0));
                }
            }
            lp.rows.push((row, 1.0));
        }
        for (k, r) in buyer_rows.into_iter().enumerate() {
            if !r.is_empty() {
                lp.rows.push((r, rem[k].max(0.0)));
            }
        }
        match solve_dense(&lp) {
            Ok(s) => s.objective.min(cheap),
            Err(_) => cheap,
        }
    }

    /// Assigns every unassigned item of `order` (in that order) to the
    /// affordable bidder with the highest bid, ties to the tightest fit.
    fn greedy_fill(&self, order: &[usize], assign: &mut [BuyerId], rem: &mut [f64]) -> f64 {
        let mut gained = 0.0;
        for &j in order {
            if assign[j] != FICTITIOUS {
                continue;
            }
            let mut pick: Option<(BuyerId, f64)> = None;
            for &(i, b) in &self.bids[j] {
                if b > rem[i - 1] {
                    continue;
                }
                pick = match pick {
                    None => Some((i, b)),
                    Some((pi, pb)) => {
                        let better = b > pb
                            || (b == pb && rem[i - 1] < rem[pi - 1])
                            || (b == pb && rem[i - 1] == rem[pi - 1] && i < pi);
                        Some(if better { (i, b) } else { (pi, pb) })
                    }
                };
            }
            if let Some((i, b)) = pick {
                assign[j] = i;
                rem[i - 1] -= b;
                gained += b;
            }
        }
        gained
    }

    /// Large-neighbourhood search: free every item held by a few buyers and
    /// reassign those items, plus the unsold ones they bid on, optimally
    /// among the same buyers. Keeps strict improvements only.
    fn improve(&self, assign: &mut [BuyerId], rounds: usize) -> f64 {
        let n = self.budgets.len();
        if n == 0 || rounds == 0 {
            return self.value_of(assign);
        }
        let mut eligible: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (j, bids) in self.bids.iter().enumerate() {
            for &(i, _) in bids {
                eligible[i - 1].push(j);
            }
        }
        let mut rng = SplitMix64::new(0x1A2B_3C4D);
        let mut value = self.value_of(assign);
        let mut stale = 0;
        let mut round = 0;
        while round < rounds && stale < n * n {
            round += 1;
            let k = if n >= 3 && round % 3 == 0 { 3 } else { 2.min(n) };
            let group: Vec<BuyerId> = rng.sample_distinct(n, k).into_iter().map(|i| i + 1).collect();
            let mut items: Vec<usize> = Vec::new();
            for &g in &group {
                for &j in &eligible[g - 1] {
                    let a = assign[j];
                    if (a == FICTITIOUS || group.contains(&a)) && !items.contains(&j) {
                        items.push(j);
                    }
                }
            }
            let current: f64 = items
                .iter()
                .filter(|&&j| assign[j] != FICTITIOUS)
                .map(|&j| self.price(j, assign[j]))
                .sum();
            // keep the held items and the most valuable unsold ones
            items.sort_by(|&a, &b| {
                let ha = assign[a] != FICTITIOUS;
                let hb = assign[b] != FICTITIOUS;
                hb.cmp(&ha)
                    .then(self.best_in(b, &group).total_cmp(&self.best_in(a, &group)))
                    .then(a.cmp(&b))
            });
            items.truncate(MAX_NEIGHBOURHOOD);
            items.sort_by(|&a, &b| {
                self.best_in(b, &group)
                    .total_cmp(&self.best_in(a, &group))
                    .then(a.cmp(&b))
            });
            let rem: Vec<f64> = group.iter().map(|&g| self.budgets[g - 1]).collect();
            let mut best = (current, None);
            let mut choice = vec![FICTITIOUS; items.len()];
            let mut budget = SUBPROBLEM_NODES;
            self.sub_dfs(
                &items,
                &group,
                0,
                0.0,
                &mut rem.clone(),
                &mut choice,
                &mut best,
                &mut budget,
            );
            match best {
                (v, Some(sol)) if v > current + 1e-9 => {
                    for (&j, &i) in items.iter().zip(&sol) {
                        assign[j] = i;
                    }
                    value += v - current;
                    stale = 0;
                }
                _ => stale += 1,
            }
        }
        // rounding drift
        let exact = self.value_of(assign);
        debug_assert!((exact - value).abs() < 1e-6 * exact.max(1.0));
        exact
    }

    fn best_in(&self, j: usize, group: &[BuyerId]) -> f64 {
        self.bids[j]
            .iter()
            .filter(|e| group.contains(&e.0))
            .fold(0.0, |a, e| a.max(e.1))
    }

    #[allow(clippy::too_many_arguments)]
    fn sub_dfs(
        &self,
        items: &[usize],
        group: &[BuyerId],
        k: usize,
        value: f64,
        rem: &mut [f64],
        choice: &mut [BuyerId],
        best: &mut (f64, Option<Vec<BuyerId>>),
        budget: &mut usize,
    ) {
        if *budget == 0 {
            return;
        }
        *budget -= 1;
        if value > best.0 + 1e-9 {
            *best = (value, Some(choice.to_vec()));
        }
        if k == items.len() {
            return;
        }
        let rest: f64 = items[k..].iter().map(|&j| self.best_in(j, group)).sum();
        let cap: f64 = rem.iter().sum();
        if value + rest.min(cap) <= best.0 + 1e-9 {
            return;
        }
        let j = items[k];
        for (g, &i) in group.iter().enumerate() {
            let b = self.price(j, i);
            if b > 0.0 && b <= rem[g] {
                rem[g] -= b;
                choice[k] = i;
                self.sub_dfs(items, group, k + 1, value + b, rem, choice, best, budget);
                choice[k] = FICTITIOUS;
                rem[g] += b;
            }
        }
        self.sub_dfs(items, group, k + 1, value, rem, choice, best, budget);
    }

    fn price(&self, j: usize, i: BuyerId) -> f64 {
        self.bids[j].iter().find(|e| e.0 == i).map_or(0.0, |e| e.1)
    }

    fn value_of(&self, assign: &[BuyerId]) -> f64 {
        assign
            .iter()
            .enumerate()
            .filter(|(_, &i)| i != FICTITIOUS)
            .map(|(j, &i)| self.price(j, i))
            .sum()
    }
}

struct Node {
    bound: f64,
    value: f64,
    /// Buyer per position of the branching order, for the first `depth` positions.
    fixed: Vec<BuyerId>,
    seq: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.fixed.len().cmp(&other.fixed.len()))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Best integral assignment found within the time budget and node limit.
pub fn integral_opt(instance: &Instance, options: &IntegralOptions) -> Result<IntegralOptimum> {
    let start = Instant::now();
    let problem = Problem::from_instance(instance);
    let m = problem.bids.len();
    let frac = fractional_opt(instance)?;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| problem.top_bid(b).total_cmp(&problem.top_bid(a)).then(a.cmp(&b)));

    // incumbent 1: keep whole items of the fractional optimum, then fill greedily
    let mut assign = vec![FICTITIOUS; m];
    let mut rem = problem.budgets.clone();
    for j in 0..m {
        if let Some(&(i, _)) = frac.allocation.entries(j).iter().find(|e| e.1 >= 1.0 - 1e-9) {
            let p = problem.price(j, i);
            if p <= rem[i - 1] {
                assign[j] = i;
                rem[i - 1] -= p;
            }
        }
    }
    problem.greedy_fill(&order, &mut assign, &mut rem);
    let mut best = assign;

    // incumbent 2: plain greedy
    let mut assign = vec![FICTITIOUS; m];
    let mut rem = problem.budgets.clone();
    problem.greedy_fill(&order, &mut assign, &mut rem);
    if problem.value_of(&assign) > problem.value_of(&best) {
        best = assign;
    }

    let mut best_value = problem.improve(&mut best, options.improve_rounds / 2);

    let root_bound = problem.bound(&order, &problem.budgets).min(frac.value);
    let tol = |b: f64| options.gap_tolerance * b.max(1.0);
    let mut upper = root_bound.max(best_value);
    let mut proven = best_value >= root_bound - tol(root_bound);
    let mut nodes = 0;

    if !proven && m <= options.max_branch_items {
        let mut heap = BinaryHeap::new();
        let mut seq = 0;
        heap.push(Node {
            bound: root_bound,
            value: 0.0,
            fixed: Vec::new(),
            seq,
        });
        let mut timed_out = false;
        while let Some(node) = heap.pop() {
            if node.bound <= best_value + tol(node.bound) {
                heap.clear();
                break;
            }
            if start.elapsed() >= options.time_budget || options.node_limit.is_some_and(|l| nodes >= l) {
                upper = node.bound.max(best_value);
                timed_out = true;
                break;
            }
            nodes += 1;
            let depth = node.fixed.len();
            let mut rem = problem.budgets.clone();
            let mut assign = vec![FICTITIOUS; m];
            for (k, &i) in node.fixed.iter().enumerate() {
                if i != FICTITIOUS {
                    let j = order[k];
                    assign[j] = i;
                    rem[i - 1] -= problem.price(j, i);
                }
            }
            // greedy completion as an incumbent
            {
                let mut a = assign.clone();
                let mut r = rem.clone();
                let v = node.value + problem.greedy_fill(&order[depth..], &mut a, &mut r);
                if v > best_value {
                    best_value = v;
                    best = a;
                }
            }
            if depth == m {
                continue;
            }
            let j = order[depth];
            let rest = &order[depth + 1..];
            let mut children: Vec<BuyerId> = problem.bids[j]
                .iter()
                .filter(|&&(i, b)| b <= rem[i - 1])
                .map(|e| e.0)
                .collect();
            children.push(FICTITIOUS);
            for i in children {
                let gain = if i == FICTITIOUS { 0.0 } else { problem.price(j, i) };
                if i != FICTITIOUS {
                    rem[i - 1] -= gain;
                }
                let bound = node.value + gain + problem.bound(rest, &rem);
                if i != FICTITIOUS {
                    rem[i - 1] += gain;
                }
                if bound > best_value + tol(bound) {
                    let mut fixed = node.fixed.clone();
                    fixed.push(i);
                    seq += 1;
                    heap.push(Node {
                        bound: bound.min(node.bound),
                        value: node.value + gain,
                        fixed,
                        seq,
                    });
                }
            }
        }
        if !timed_out {
            proven = true;
            upper = best_value;
        }
    }
    if !proven {
        best_value = problem.improve(&mut best, options.improve_rounds - options.improve_rounds / 2);
        proven = best_value >= upper - tol(upper);
    }
    if proven {
        upper = upper.max(best_value);
    }

    let gap = if best_value > 0.0 {
        (frac.value / best_value - 1.0).max(0.0)
    } else if frac.value > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(IntegralOptimum {
        value: best_value,
        assignment: Prediction(best),
        proven,
        upper_bound: upper,
        fractional_value: frac.value,
        integrality_gap: gap,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{AuctionInstance, BoundedInstance, BoundedItem};

    fn bounded(budgets: Vec<f64>, items: &[(f64, &[usize])]) -> Instance {
        Instance::Bounded(
            BoundedInstance::new(
                budgets,
                items
                    .iter()
                    .map(|(p, s)| BoundedItem {
                        price: *p,
                        interested: s.to_vec(),
                    })
                    .collect(),
            )
            .unwrap(),
        )
    }

    /// Exhaustive search over all assignments.
    fn brute_force(problem: &Problem) -> f64 {
        fn go(p: &Problem, j: usize, rem: &mut Vec<f64>) -> f64 {
            if j == p.bids.len() {
                return 0.0;
            }
            let mut best = go(p, j + 1, rem);
            for &(i, b) in &p.bids[j] {
                if b <= rem[i - 1] {
                    rem[i - 1] -= b;
                    best = best.max(b + go(p, j + 1, rem));
                    rem[i - 1] += b;
                }
            }
            best
        }
        go(problem, 0, &mut problem.budgets.clone())
    }

    #[test]
    fn instance1_has_no_gap() {
        let items: Vec<(f64, Vec<usize>)> = (1..=5).map(|j| (100.0, (j..=5).collect())).collect();
        let refs: Vec<(f64, &[usize])> = items.iter().map(|(p, s)| (*p, &s[..])).collect();
        let inst = bounded(vec![100.0; 5], &refs);
        let opt = integral_opt(&inst, &IntegralOptions::default()).unwrap();
        assert!((opt.value - 500.0).abs() < 1e-9);
        assert!(opt.proven);
        assert_eq!(opt.integrality_gap, 0.0);
        assert_eq!(opt.assignment, Prediction(vec![1, 2, 3, 4, 5]));
    }

    #[test]
    fn knapsack_gap() {
        // one buyer with budget 10 and items 6, 6, 5: no two items fit together
        let inst = bounded(vec![10.0], &[(6.0, &[1]), (6.0, &[1]), (5.0, &[1])]);
        let opt = integral_opt(&inst, &IntegralOptions::default()).unwrap();
        assert!((opt.value - 6.0).abs() < 1e-12);
        assert!(opt.proven);
        assert!((opt.fractional_value - 10.0).abs() < 1e-12);
        assert!((opt.integrality_gap - 10.0 / 6.0 + 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_on_small_instances() {
        let mut rng = crate::rng::SplitMix64::new(5);
        for _ in 0..30 {
            let n = 1 + rng.index(3);
            let m = 1 + rng.index(7);
            let budgets: Vec<f64> = (0..n).map(|_| rng.uniform(5.0, 20.0)).collect();
            let items: Vec<Vec<(usize, f64)>> = (0..m)
                .map(|_| {
                    let k = 1 + rng.index(n);
                    rng.sample_distinct(n, k)
                        .into_iter()
                        .map(|i| (i + 1, rng.uniform(1.0, 12.0)))
                        .collect()
                })
                .collect();
            let inst = Instance::Auction(AuctionInstance::new(budgets, items).unwrap());
            let opt = integral_opt(&inst, &IntegralOptions::default()).unwrap();
            let exact = brute_force(&Problem::from_instance(&inst));
            assert!(opt.proven);
            assert!((opt.value - exact).abs() < 1e-9, "{} vs {exact}", opt.value);
            assert!(opt.value <= opt.fractional_value + 1e-9);
        }
    }

    #[test]
    fn timeout_reports_unproven() {
        let mut rng = crate::rng::SplitMix64::new(9);
        let n = 8;
        let budgets: Vec<f64> = (0..n).map(|_| rng.uniform(10.0, 100.0)).collect();
        let items: Vec<BoundedItem> = (0..60)
            .map(|_| BoundedItem {
                price: rng.uniform(10.0, 100.0),
                interested: rng.sample_distinct(n, 4).into_iter().map(|i| i + 1).collect(),
            })
            .collect();
        let inst = Instance::Bounded(BoundedInstance::new(budgets, items).unwrap());
        let opts = IntegralOptions {
            time_budget: Duration::ZERO,
            ..Default::default()
        };
        let opt = integral_opt(&inst, &opts).unwrap();
        assert!(opt.value <= opt.upper_bound + 1e-9);
        if !opt.proven {
            assert!(opt.upper_bound > opt.value);
        }
    }
}
