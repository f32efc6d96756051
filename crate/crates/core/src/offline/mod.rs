//! Offline optima: the fractional optimum that competitive ratios divide by,
//! and a branch-and-bound integral optimum used as the base of predictions.

mod integral;
mod maxflow;
mod simplex;

pub use integral::{integral_opt, IntegralOptimum, IntegralOptions};
pub use maxflow::FlowNetwork;
pub use simplex::{solve_dense, LpProblem, LpSolution};

use crate::error::{Error, Result};
use crate::market::{AuctionInstance, BoundedInstance, BuyerId, DualSolution, FractionalAllocation, Instance, Market};

/// Above this many tableau entries the dense simplex is not attempted.
pub const DENSE_LIMIT: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    MaxFlow,
    /// Greedy primal matched by a simple dual certificate.
    Greedy,
    DenseSimplex,
    /// The `minilp` sparse solver; no dual certificate is produced.
    SparseSimplex,
}

impl SolveMethod {
    pub fn name(self) -> &'static str {
        match self {
            SolveMethod::MaxFlow => "max-flow",
            SolveMethod::Greedy => "greedy-certified",
            SolveMethod::DenseSimplex => "dense-simplex",
            SolveMethod::SparseSimplex => "sparse-simplex",
        }
    }
}

/// Optimal fractional solution of the offline LP.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalOptimum {
    pub value: f64,
    pub allocation: FractionalAllocation,
    /// Dual solution whose objective equals `value`, when the method yields one.
    pub certificate: Option<DualSolution>,
    pub method: SolveMethod,
}

/// Fractional optimum of either instance kind.
pub fn fractional_opt(instance: &Instance) -> Result<FractionalOptimum> {
    match instance {
        Instance::Bounded(b) => fractional_opt_bounded(b),
        Instance::Auction(a) => fractional_opt_auction(a),
    }
}

/// Exact optimum by max-flow: source to item `j` (capacity `b_j`), item to each
/// interested buyer (unbounded), buyer `i` to sink (capacity `B_i`). The minimum
/// cut yields a 0/1 dual certificate.
pub fn fractional_opt_bounded(instance: &BoundedInstance) -> Result<FractionalOptimum> {
    let n = instance.num_buyers();
    let m = instance.num_items();
    let (s, t) = (0, n + m + 1);
    let mut g = FlowNetwork::new(n + m + 2);
    let mut edges = Vec::new();
    for (j, item) in instance.items().iter().enumerate() {
        g.add_edge(s, 1 + j, item.price);
        for &i in &item.interested {
            edges.push((j, i, g.add_edge(1 + j, m + i, f64::INFINITY)));
        }
    }
    for (k, &b) in instance.budgets().iter().enumerate() {
        g.add_edge(m + 1 + k, t, b);
    }
    let value = g.max_flow(s, t);

    let mut allocation = FractionalAllocation::for_market(instance);
    for &(j, i, e) in &edges {
        let f = g.flow(e);
        if f > 0.0 {
            allocation.add(j, i, (f / instance.item(j).price).min(1.0));
        }
    }
    let side = g.source_side(s);
    let mut dual = DualSolution::zeros(n, m);
    for i in 1..=n {
        if side[m + i] {
            dual.y[i - 1] = 1.0;
        }
    }
    for j in 0..m {
        if !side[1 + j] {
            dual.z[j] = instance.item(j).price;
        }
    }
    Ok(FractionalOptimum {
        value,
        allocation,
        certificate: Some(dual),
        method: SolveMethod::MaxFlow,
    })
}

/// The offline LP of any market in inequality form; variable `k` is the pair
/// returned at position `k` of the second component.
pub fn lp_relaxation(market: &(impl Market + ?Sized)) -> (LpProblem, Vec<(usize, BuyerId)>) {
    let n = market.num_buyers();
    let m = market.num_items();
    let mut vars = Vec::new();
    let mut objective = Vec::new();
    let mut buyer_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut item_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for j in 0..m {
        for (i, p) in market.bids(j) {
            let k = vars.len();
            vars.push((j, i));
            objective.push(p);
            buyer_rows[i - 1].push((k, p));
            item_rows[j].push((k, 1.0));
        }
    }
    let mut rows = Vec::with_capacity(n + m);
    for (k, r) in buyer_rows.into_iter().enumerate() {
        rows.push((r, market.budgets()[k]));
    }
    for r in item_rows {
        rows.push((r, 1.0));
    }
    (
        LpProblem {
            num_vars: vars.len(),
            objective,
            rows,
        },
        vars,
    )
}

/// Solves the LP of `market` with the dense simplex and returns its duals
/// (buyer rows give `y`, item rows give `z`).
pub fn solve_lp_dense(market: &(impl Market + ?Sized)) -> Result<FractionalOptimum> {
    let (lp, vars) = lp_relaxation(market);
    if lp.dense_size() > DENSE_LIMIT {
        return Err(Error::invalid(format!(
            "LP with {} variables and {} rows is too large for the dense solver",
            lp.num_vars,
            lp.rows.len()
        )));
    }
    let sol = solve_dense(&lp)?;
    let n = market.num_buyers();
    let mut allocation = FractionalAllocation::for_market(market);
    for (k, &(j, i)) in vars.iter().enumerate() {
        if sol.x[k] > 0.0 {
            allocation.add(j, i, sol.x[k]);
        }
    }
    let dual = DualSolution {
        y: sol.duals[..n].to_vec(),
        z: sol.duals[n..].to_vec(),
    };
    Ok(FractionalOptimum {
        value: sol.objective,
        allocation,
        certificate: Some(dual),
        method: SolveMethod::DenseSimplex,
    })
}

/// Greedy fractional primal: each item goes to its bidders in decreasing bid
/// order, each taking as much as its remaining budget allows.
fn greedy_fractional(instance: &AuctionInstance) -> (FractionalAllocation, f64, Vec<f64>) {
    let mut rem = instance.budgets().to_vec();
    let mut alloc = FractionalAllocation::for_market(instance);
    let mut value = 0.0;
    let mut order: Vec<(BuyerId, f64)> = Vec::new();
    for j in 0..instance.num_items() {
        order.clear();
        order.extend_from_slice(instance.item_bids(j));
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut left = 1.0f64;
        for &(i, b) in &order {
            if left <= 0.0 {
                break;
            }
            let x = left.min(rem[i - 1] / b);
            if x > 0.0 {
                alloc.add(j, i, x);
                rem[i - 1] -= x * b;
                if rem[i - 1] < 1e-12 * instance.budget(i) {
                    rem[i - 1] = 0.0;
                }
                left -= x;
                value += x * b;
            }
        }
    }
    (alloc, value, rem)
}

/// Cheapest of three easy dual solutions: `y = 1`; `y = 0, z_j = max bid`;
/// and `y_i = 1` exactly for buyers saturated by the greedy primal.
fn cheap_dual(instance: &AuctionInstance, rem: &[f64]) -> (f64, DualSolution) {
    let n = instance.num_buyers();
    let m = instance.num_items();
    let all_y = DualSolution {
        y: vec![1.0; n],
        z: vec![0.0; m],
    };
    let mut max_z = DualSolution::zeros(n, m);
    let mut mixed = DualSolution::zeros(n, m);
    for (k, &r) in rem.iter().enumerate() {
        if r <= 1e-9 * instance.budgets()[k] {
            mixed.y[k] = 1.0;
        }
    }
    for j in 0..m {
        for &(i, b) in instance.item_bids(j) {
            max_z.z[j] = max_z.z[j].max(b);
            if mixed.y[i - 1] == 0.0 {
                mixed.z[j] = mixed.z[j].max(b);
            }
        }
    }
    [all_y, max_z, mixed]
        .into_iter()
        .map(|d| (d.objective(instance), d))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("three candidates")
}

/// Exact fractional optimum of an ad-auction instance.
///
/// A greedy primal is tried first and accepted when a simple dual matches it;
/// otherwise the dense simplex solves small LPs and `minilp` large ones.
pub fn fractional_opt_auction(instance: &AuctionInstance) -> Result<FractionalOptimum> {
    let (alloc, value, rem) = greedy_fractional(instance);
    let (bound, dual) = cheap_dual(instance, &rem);
    if value >= bound - 1e-9 * bound.max(1.0) {
        return Ok(FractionalOptimum {
            value,
            allocation: alloc,
            certificate: Some(dual),
            method: SolveMethod::Greedy,
        });
    }
    let (lp, vars) = lp_relaxation(instance);
    if lp.dense_size() <= DENSE_LIMIT {
        return solve_lp_dense(instance);
    }
    log::debug!("solving {}-variable auction LP with the sparse solver", lp.num_vars);
    solve_lp_sparse(instance, &lp, &vars)
}

fn solve_lp_sparse(instance: &AuctionInstance, lp: &LpProblem, vars: &[(usize, BuyerId)]) -> Result<FractionalOptimum> {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let xs: Vec<_> = lp.objective.iter().map(|&c| p.add_var(c, (0.0, 1.0))).collect();
    for (coeffs, rhs) in &lp.rows {
        let row: Vec<_> = coeffs.iter().map(|&(k, a)| (xs[k], a)).collect();
        p.add_constraint(&row[..], ComparisonOp::Le, *rhs);
    }
    let sol = p.solve().map_err(|e| Error::Solver(format!("sparse LP solver: {e}")))?;
    let mut allocation = FractionalAllocation::for_market(instance);
    for (k, &(j, i)) in vars.iter().enumerate() {
        let x = sol[xs[k]];
        if x > 1e-12 {
            allocation.add(j, i, x);
        }
    }
    Ok(FractionalOptimum {
        value: sol.objective(),
        allocation,
        certificate: None,
        method: SolveMethod::SparseSimplex,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{check_dual_feasibility, check_primal_feasibility, BoundedItem};

    fn instance1() -> BoundedInstance {
        let items = (1..=5)
            .map(|j| BoundedItem {
                price: 100.0,
                interested: (j..=5).collect(),
            })
            .collect();
        BoundedInstance::new(vec![100.0; 5], items).unwrap()
    }

    #[test]
    fn instance1_optimum() {
        let inst = instance1();
        let opt = fractional_opt_bounded(&inst).unwrap();
        assert!((opt.value - 500.0).abs() < 1e-9);
        let cert = opt.certificate.unwrap();
        assert!(check_dual_feasibility(&inst, &cert).unwrap().passed());
        assert!((cert.objective(&inst) - 500.0).abs() < 1e-9);
        assert!(check_primal_feasibility(&inst, &opt.allocation, 1.0).unwrap().passed());
        let lp = solve_lp_dense(&inst).unwrap();
        assert!((lp.value - 500.0).abs() < 1e-9);
    }

    #[test]
    fn budget_capped_single_buyer() {
        let inst = BoundedInstance::new(
            vec![50.0],
            vec![
                BoundedItem {
                    price: 40.0,
                    interested: vec![1],
                },
                BoundedItem {
                    price: 40.0,
                    interested: vec![1],
                },
            ],
        )
        .unwrap();
        assert!((fractional_opt_bounded(&inst).unwrap().value - 50.0).abs() < 1e-12);
    }

    #[test]
    fn auction_examples() {
        let one = AuctionInstance::new(vec![100.0], vec![vec![(1, 100.0)]]).unwrap();
        assert!((fractional_opt_auction(&one).unwrap().value - 100.0).abs() < 1e-12);
        let two = AuctionInstance::new(vec![10.0, 10.0], vec![vec![(1, 10.0)], vec![(1, 10.0), (2, 6.0)]]).unwrap();
        let opt = fractional_opt_auction(&two).unwrap();
        assert!((opt.value - 16.0).abs() < 1e-9, "{}", opt.value);
        let cert = opt.certificate.unwrap();
        assert!(check_dual_feasibility(&two, &cert).unwrap().passed());
        assert!((cert.objective(&two) - 16.0).abs() < 1e-9);
    }

    #[test]
    fn sparse_and_dense_agree() {
        let inst = AuctionInstance::new(
            vec![10.0, 7.0, 12.0],
            vec![
                vec![(1, 6.0), (2, 5.0)],
                vec![(1, 4.0), (3, 9.0)],
                vec![(2, 3.0), (3, 8.0)],
                vec![(1, 7.0), (2, 6.5), (3, 2.0)],
            ],
        )
        .unwrap();
        let dense = solve_lp_dense(&inst).unwrap();
        let (lp, vars) = lp_relaxation(&inst);
        let sparse = solve_lp_sparse(&inst, &lp, &vars).unwrap();
        assert!((dense.value - sparse.value).abs() < 1e-7);
        let cert = dense.certificate.unwrap();
        assert!((cert.objective(&inst) - dense.value).abs() < 1e-7);
    }
}
