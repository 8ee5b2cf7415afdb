//! The square-root velocity transform block.
//!
//! The discretized transform maps positions to signed square roots of
//! successive increments (with x_0 = 0 fixed by convention):
//!
//!   S(x)_i = sgn(x_i - x_{i-1}) * sqrt(|x_i - x_{i-1}|)
//!
//! Its inverse accumulates y_j * |y_j|, and the pullback of the L2 norm
//! through S is sqrt(sum |x_i - x_{i-1}|). The transform's wiring is
//! deliberately asymmetric across coordinates: each input feeds exactly two
//! adjacent outputs, which makes every output neuron structurally
//! distinguishable (see `graph_signature`).
//!
//! The derivative of sgn(d)*sqrt(|d|) blows up at d = 0, so gradient flow
//! uses the smoothed surrogate sgn(d) * (sqrt(|d| + eps) - sqrt(eps)) in the
//! backward pass only; forward values are always exact.

/// Default smoothing constant for the backward pass.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// sgn(x) * sqrt(|x|). Exactly zero at zero.
#[inline]
pub fn signed_sqrt(x: f64) -> f64 {
    if x >= 0.0 {
        x.sqrt()
    } else {
        -((-x).sqrt())
    }
}

/// Discretized forward transform with the x_0 = 0 convention.
pub fn srvt_forward(x: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    x.iter()
        .map(|&xi| {
            let d = xi - prev;
            prev = xi;
            signed_sqrt(d)
        })
        .collect()
}

/// Inverse transform: x_i = sum_{j <= i} y_j * |y_j|.
pub fn srvt_inverse(y: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    y.iter()
        .map(|&yj| {
            acc += yj * yj.abs();
            acc
        })
        .collect()
}

/// sqrt(sum_i |x_i - x_{i-1}|) with x_0 = 0; the L2 norm pulled back through
/// the transform, computed without passing through the forward map.
pub fn pullback_norm(x: &[f64]) -> f64 {
    let mut prev = 0.0;
    let mut total = 0.0;
    for &xi in x {
        total += (xi - prev).abs();
        prev = xi;
    }
    total.sqrt()
}

/// Derivative of the smoothed surrogate sgn(d)*(sqrt(|d|+eps) - sqrt(eps))
/// with respect to d. Positive, bounded by 1/(2*sqrt(eps)), and continuous
/// through d = 0.
#[inline]
pub fn smoothed_slope(d: f64, eps: f64) -> f64 {
    0.5 / (d.abs() + eps).sqrt()
}

/// The smoothed surrogate itself; used only when a differentiable stand-in
/// for the forward map is required (e.g. finite-difference gradient checks).
#[inline]
pub fn smoothed_signed_sqrt(d: f64, eps: f64) -> f64 {
    let s = (d.abs() + eps).sqrt() - eps.sqrt();
    if d >= 0.0 {
        s
    } else {
        -s
    }
}

/// Structural signature of each output neuron of the transform viewed as a
/// directed graph: input i feeds outputs i and i+1 (input 0 is the constant
/// x_0 = 0 and is not a neuron). The signature is (in-degree, graph distance
/// to the unique in-degree-1 output v0), where two outputs are adjacent when
/// they share an input. All n signatures are pairwise distinct, which is what
/// pins every output neuron under graph automorphisms.
pub fn graph_signature(n: usize) -> Vec<(usize, usize)> {
    assert!(n >= 1, "signature needs at least one output neuron");
    // In-degrees: output 0 reads only input 1; output i>0 reads inputs i, i+1.
    let in_degree: Vec<usize> = (0..n).map(|i| if i == 0 { 1 } else { 2 }).collect();

    // Adjacency between outputs sharing an input: i ~ i+1 (they share input i+1).
    // BFS from the unique in-degree-1 neuron.
    let v0 = in_degree
        .iter()
        .position(|&d| d == 1)
        .expect("construction yields exactly one in-degree-1 output");
    let mut dist = vec![usize::MAX; n];
    dist[v0] = 0;
    let mut queue = std::collections::VecDeque::from([v0]);
    while let Some(u) = queue.pop_front() {
        let neighbors = [u.checked_sub(1), if u + 1 < n { Some(u + 1) } else { None }];
        for v in neighbors.into_iter().flatten() {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    in_degree.into_iter().zip(dist).collect()
}
