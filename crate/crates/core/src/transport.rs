//! Exact p-Wasserstein distances for small empirical distributions.
//!
//! Three independent routes to the same quantity:
//!   * `wasserstein_exact` — the general solver: a transportation linear
//!     program on the cost matrix c_ij = ||x_i - y_j||^p, solved by successive
//!     shortest augmenting paths with Johnson potentials on the dense
//!     bipartite graph. Exact up to floating-point roundoff; guarded to
//!     N*M <= 10_000 so it is never silently approximate.
//!   * `wasserstein_1d` — the closed-form quantile coupling for m = 1.
//!   * `wasserstein_bruteforce` — permutation enumeration for uniform
//!     equal-size inputs, N <= 8.
//!
//! The solver works on real capacities directly; saturation tests use a
//! 1e-12 epsilon and the Dijkstra relaxation uses a 1e-12 reduced-cost
//! tolerance instead of scaling weights to integers.

use crate::error::{Error, Result};
use crate::linalg::{euclidean, Matrix};
use crate::measures::{check_order, EmpiricalDistribution};

/// Guard for the exact solver: refuse instances with N*M above this.
pub const EXACT_GUARD: usize = 10_000;

/// Brute force is limited to N = M <= this.
pub const BRUTE_FORCE_MAX: usize = 8;

const FLOW_EPS: f64 = 1e-12;

/// An optimal coupling: `mass[i][j]` is the mass moved from source point i to
/// target point j, `cost` is the realized W_p value (p-th root already taken).
#[derive(Clone, Debug)]
pub struct TransportPlan {
    pub mass: Matrix,
    pub cost: f64,
    pub p: f64,
}

impl TransportPlan {
    /// Check the plan invariants against its marginals: row sums equal source
    /// weights and column sums equal target weights within `tol`, and the
    /// stored cost equals the recomputed transport cost within `tol`.
    pub fn validate(
        &self,
        source: &EmpiricalDistribution,
        target: &EmpiricalDistribution,
        tol: f64,
    ) -> Result<()> {
        let (n, m) = (source.len(), target.len());
        if self.mass.rows != n || self.mass.cols != m {
            return Err(Error::Shape(format!(
                "plan is {}x{}, marginals are {}x{}",
                self.mass.rows, self.mass.cols, n, m
            )));
        }
        for i in 0..n {
            let row_sum: f64 = self.mass.row(i).iter().sum();
            if (row_sum - source.weights()[i]).abs() > tol {
                return Err(Error::Shape(format!(
                    "row {} sums to {}, expected {}",
                    i,
                    row_sum,
                    source.weights()[i]
                )));
            }
        }
        for j in 0..m {
            let mut col_sum = 0.0;
            for i in 0..n {
                col_sum += self.mass.get(i, j);
            }
            if (col_sum - target.weights()[j]).abs() > tol {
                return Err(Error::Shape(format!(
                    "column {} sums to {}, expected {}",
                    j,
                    col_sum,
                    target.weights()[j]
                )));
            }
        }
        let mut objective = 0.0;
        for i in 0..n {
            for j in 0..m {
                objective +=
                    self.mass.get(i, j) * euclidean(source.point(i), target.point(j)).powf(self.p);
            }
        }
        let recomputed = objective.powf(1.0 / self.p);
        if (recomputed - self.cost).abs() > tol {
            return Err(Error::Shape(format!(
                "plan cost {} disagrees with recomputed {}",
                self.cost, recomputed
            )));
        }
        Ok(())
    }
}

/// Exact W_p between two empirical distributions of equal ambient dimension,
/// together with an optimal plan. Errors if N*M exceeds the exactness guard.
pub fn wasserstein_exact(
    source: &EmpiricalDistribution,
    target: &EmpiricalDistribution,
    p: f64,
) -> Result<(f64, TransportPlan)> {
    check_order(p)?;
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            got: target.dim(),
        });
    }
    let (n, m) = (source.len(), target.len());
    if n * m > EXACT_GUARD {
        return Err(Error::TransportGuard {
            n,
            m,
            guard: EXACT_GUARD,
        });
    }

    let mut cost = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            cost[i * m + j] = euclidean(source.point(i), target.point(j)).powf(p);
        }
    }

    let flow = solve_transportation(source.weights(), target.weights(), &cost);

    let mut objective = 0.0;
    for idx in 0..n * m {
        objective += flow[idx] * cost[idx];
    }
    let value = objective.max(0.0).powf(1.0 / p);
    let plan = TransportPlan {
        mass: Matrix {
            rows: n,
            cols: m,
            data: flow,
        },
        cost: value,
        p,
    };
    Ok((value, plan))
}

/// Min-cost flow on the dense bipartite transportation graph by successive
/// shortest paths. Node potentials keep all residual reduced costs
/// nonnegative so plain Dijkstra applies at every augmentation.
fn solve_transportation(supply: &[f64], demand: &[f64], cost: &[f64]) -> Vec<f64> {
    let n = supply.len();
    let m = demand.len();
    let mut flow = vec![0.0; n * m];
    let mut remaining_supply = supply.to_vec();
    let mut remaining_demand = demand.to_vec();
    // Potentials: pi[0..n] for sources, pi[n..n+m] for sinks.
    let mut pi = vec![0.0; n + m];

    let mut dist = vec![0.0f64; n + m];
    let mut visited = vec![false; n + m];
    // Predecessor of a sink is the source feeding it on the shortest path;
    // predecessor of a source is the sink whose flow is rerouted through it.
    let mut prev = vec![usize::MAX; n + m];

    // Each augmentation exhausts a supply, a demand, or a positive-flow
    // residual edge; the cap is a defensive bound that a correct run never
    // reaches.
    let max_augmentations = 64 * (n + m) + 256;
    for _aug in 0..max_augmentations {
        let active_supply = remaining_supply.iter().any(|&s| s > FLOW_EPS);
        if !active_supply {
            return flow;
        }

        // Multi-source Dijkstra over the residual graph with reduced costs.
        for v in 0..n + m {
            dist[v] = f64::INFINITY;
            visited[v] = false;
            prev[v] = usize::MAX;
        }
        for i in 0..n {
            if remaining_supply[i] > FLOW_EPS {
                dist[i] = 0.0;
            }
        }
        let mut target_sink = usize::MAX;
        loop {
            // Extract the unvisited node with the smallest tentative distance.
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..n + m {
                if !visited[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            visited[u] = true;
            if u >= n && remaining_demand[u - n] > FLOW_EPS {
                target_sink = u;
                break;
            }
            if u < n {
                // Forward edges i -> j, unlimited capacity.
                let i = u;
                for j in 0..m {
                    let v = n + j;
                    if visited[v] {
                        continue;
                    }
                    // Roundoff can push a reduced cost a few ulps below zero;
                    // clamp so Dijkstra's invariant survives.
                    let rc = (cost[i * m + j] + pi[i] - pi[v]).max(0.0);
                    let cand = dist[u] + rc;
                    if cand < dist[v] {
                        dist[v] = cand;
                        prev[v] = u;
                    }
                }
            } else {
                // Backward edges j -> i, capacity = current flow on (i, j).
                let j = u - n;
                for i in 0..n {
                    if visited[i] || flow[i * m + j] <= FLOW_EPS {
                        continue;
                    }
                    let rc = (-cost[i * m + j] + pi[u] - pi[i]).max(0.0);
                    let cand = dist[u] + rc;
                    if cand < dist[i] {
                        dist[i] = cand;
                        prev[i] = u;
                    }
                }
            }
        }
        assert!(
            target_sink != usize::MAX,
            "transportation solver: no augmenting path while supply remains"
        );

        // Johnson potential update; unreached nodes are capped at the target
        // distance so their reduced costs stay nonnegative.
        let d_target = dist[target_sink];
        for v in 0..n + m {
            pi[v] += dist[v].min(d_target);
        }

        // Bottleneck along the path.
        let mut amount = f64::INFINITY;
        let mut v = target_sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u < n && v >= n {
                // forward edge: only supply/demand limits
            } else {
                // backward edge v(sink) <- ... u is sink, v is source
                debug_assert!(u >= n && v < n);
                amount = amount.min(flow[v * m + (u - n)]);
            }
            v = u;
        }
        let path_start = v;
        debug_assert!(path_start < n);
        amount = amount
            .min(remaining_supply[path_start])
            .min(remaining_demand[target_sink - n]);
        debug_assert!(amount > 0.0);

        // Apply the augmentation.
        let mut v = target_sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u < n && v >= n {
                flow[u * m + (v - n)] += amount;
            } else {
                let idx = v * m + (u - n);
                flow[idx] -= amount;
                if flow[idx] < FLOW_EPS {
                    flow[idx] = 0.0;
                }
            }
            v = u;
        }
        remaining_supply[path_start] -= amount;
        remaining_demand[target_sink - n] -= amount;
        if remaining_supply[path_start] < FLOW_EPS {
            remaining_supply[path_start] = 0.0;
        }
        if remaining_demand[target_sink - n] < FLOW_EPS {
            remaining_demand[target_sink - n] = 0.0;
        }
    }
    panic!("transportation solver failed to terminate within the augmentation cap");
}

/// Closed-form W_p in one dimension via the quantile coupling: sort both
/// supports, match cumulative-weight intervals, integrate |F_P^-1 - F_Q^-1|^p.
pub fn wasserstein_1d(
    source: &EmpiricalDistribution,
    target: &EmpiricalDistribution,
    p: f64,
) -> Result<f64> {
    check_order(p)?;
    if source.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: source.dim(),
        });
    }
    if target.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: target.dim(),
        });
    }
    let sorted = |d: &EmpiricalDistribution| -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = d
            .iter_points()
            .zip(d.weights())
            .map(|(x, &w)| (x[0], w))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let a = sorted(source);
    let b = sorted(target);

    let mut objective = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    let mut rem_a = a[0].1;
    let mut rem_b = b[0].1;
    loop {
        let step = rem_a.min(rem_b);
        if step > 0.0 {
            objective += step * (a[i].0 - b[j].0).abs().powf(p);
        }
        rem_a -= step;
        rem_b -= step;
        if rem_a <= FLOW_EPS {
            i += 1;
            if i == a.len() {
                break;
            }
            rem_a = a[i].1;
        }
        if rem_b <= FLOW_EPS {
            j += 1;
            if j == b.len() {
                break;
            }
            rem_b = b[j].1;
        }
    }
    Ok(objective.max(0.0).powf(1.0 / p))
}

/// Independent oracle: minimize the matching cost over all N! permutations.
/// Requires uniform weights and N = M <= 8.
pub fn wasserstein_bruteforce(
    source: &EmpiricalDistribution,
    target: &EmpiricalDistribution,
    p: f64,
) -> Result<f64> {
    check_order(p)?;
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            got: target.dim(),
        });
    }
    let n = source.len();
    if target.len() != n || n > BRUTE_FORCE_MAX {
        return Err(Error::BruteForceSize {
            n,
            m: target.len(),
            max: BRUTE_FORCE_MAX,
        });
    }
    let uniform = 1.0 / n as f64;
    let is_uniform = |d: &EmpiricalDistribution| {
        d.weights().iter().all(|&w| (w - uniform).abs() <= 1e-12)
    };
    if !is_uniform(source) || !is_uniform(target) {
        return Err(Error::NonUniformWeights);
    }

    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = euclidean(source.point(i), target.point(j)).powf(p);
        }
    }

    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |perm| {
        let mut total = 0.0;
        for (i, &j) in perm.iter().enumerate() {
            total += cost[i * n + j];
        }
        if total < best {
            best = total;
        }
    });
    Ok((best / n as f64).max(0.0).powf(1.0 / p))
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream;
    use rand::Rng;

    fn uniform_1d(xs: &[f64]) -> EmpiricalDistribution {
        EmpiricalDistribution::uniform(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn dirac_translation() {
        let p = EmpiricalDistribution::dirac(&[0.0]).unwrap();
        let q = EmpiricalDistribution::dirac(&[1.0]).unwrap();
        assert!((wasserstein_1d(&p, &q, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let (w, plan) = wasserstein_exact(&p, &q, 1.0).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
        plan.validate(&p, &q, 1e-12).unwrap();
    }

    #[test]
    fn sorted_matching() {
        let p = uniform_1d(&[0.0, 2.0]);
        let q = uniform_1d(&[1.0, 3.0]);
        assert!((wasserstein_1d(&p, &q, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((wasserstein_bruteforce(&p, &q, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let (w, _) = wasserstein_exact(&p, &q, 1.0).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_inputs_are_zero() {
        let p = uniform_1d(&[0.0, 1.0]);
        assert_eq!(wasserstein_1d(&p, &p, 2.0).unwrap(), 0.0);
        let (w, plan) = wasserstein_exact(&p, &p, 2.0).unwrap();
        assert!(w <= 1e-12);
        plan.validate(&p, &p, 1e-9).unwrap();
        assert_eq!(wasserstein_bruteforce(&p, &p, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn guard_is_enforced() {
        let big: Vec<Vec<f64>> = (0..101).map(|i| vec![i as f64]).collect();
        let p = EmpiricalDistribution::uniform(big.clone()).unwrap();
        let q = EmpiricalDistribution::uniform(big).unwrap();
        assert!(matches!(
            wasserstein_exact(&p, &q, 1.0),
            Err(Error::TransportGuard { .. })
        ));
    }

    #[test]
    fn bruteforce_preconditions() {
        let p = uniform_1d(&[0.0, 1.0]);
        let q = uniform_1d(&[0.0, 1.0, 2.0]);
        assert!(matches!(
            wasserstein_bruteforce(&p, &q, 1.0),
            Err(Error::BruteForceSize { .. })
        ));
        let w = EmpiricalDistribution::new(
            vec![vec![0.0], vec![1.0]],
            Some(vec![0.25, 0.75]),
        )
        .unwrap();
        assert!(matches!(
            wasserstein_bruteforce(&w, &w, 1.0),
            Err(Error::NonUniformWeights)
        ));
    }

    #[test]
    fn exact_matches_bruteforce_on_random_instances() {
        let mut rng = stream(11, 900);
        for trial in 0..50 {
            let n = 2 + (trial % 6);
            let gen = |rng: &mut rand_chacha::ChaCha8Rng| {
                let pts: Vec<Vec<f64>> = (0..n)
                    .map(|_| vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)])
                    .collect();
                EmpiricalDistribution::uniform(pts).unwrap()
            };
            let p = gen(&mut rng);
            let q = gen(&mut rng);
            for order in [1.0, 2.0] {
                let (w, plan) = wasserstein_exact(&p, &q, order).unwrap();
                let bf = wasserstein_bruteforce(&p, &q, order).unwrap();
                assert!(
                    (w - bf).abs() <= 1e-9,
                    "trial {trial} order {order}: exact {w} vs brute {bf}"
                );
                plan.validate(&p, &q, 1e-9).unwrap();
            }
        }
    }

    #[test]
    fn exact_matches_quantile_formula_with_weights() {
        let mut rng = stream(12, 901);
        for trial in 0..50 {
            let n = 2 + (trial % 5);
            let m = 2 + (trial % 7);
            let gen = |rng: &mut rand_chacha::ChaCha8Rng, k: usize| {
                let pts: Vec<Vec<f64>> = (0..k).map(|_| vec![rng.gen_range(-5.0..5.0)]).collect();
                let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
                EmpiricalDistribution::new(pts, Some(w)).unwrap()
            };
            let p = gen(&mut rng, n);
            let q = gen(&mut rng, m);
            for order in [1.0, 1.5, 2.0, 3.0] {
                let (w, _) = wasserstein_exact(&p, &q, order).unwrap();
                let qf = wasserstein_1d(&p, &q, order).unwrap();
                assert!(
                    (w - qf).abs() <= 1e-9,
                    "trial {trial} order {order}: exact {w} vs quantile {qf}"
                );
            }
        }
    }

    #[test]
    fn metric_symmetry_and_triangle() {
        let mut rng = stream(13, 902);
        for _ in 0..20 {
            let gen = |rng: &mut rand_chacha::ChaCha8Rng| {
                let k = rng.gen_range(2..6);
                let pts: Vec<Vec<f64>> = (0..k)
                    .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
                    .collect();
                EmpiricalDistribution::uniform(pts).unwrap()
            };
            let (p, q, r) = (gen(&mut rng), gen(&mut rng), gen(&mut rng));
            for order in [1.0, 2.0] {
                let wpq = wasserstein_exact(&p, &q, order).unwrap().0;
                let wqp = wasserstein_exact(&q, &p, order).unwrap().0;
                let wpr = wasserstein_exact(&p, &r, order).unwrap().0;
                let wrq = wasserstein_exact(&r, &q, order).unwrap().0;
                assert!((wpq - wqp).abs() <= 1e-9);
                assert!(wpq <= wpr + wrq + 1e-9);
            }
        }
    }
}
