//! Small numerical kernels shared across the crate: finite-difference
//! weights on arbitrary nodes (Fornberg's recurrence), a natural cubic
//! spline, a tridiagonal solver, and convergence-order estimation.
//!
//! All routines are pure and deterministic; no global state.

/// Finite-difference weights for derivatives 0..=m at `x0` on nodes `xs`.
///
/// Returns `w` with `w[k][j]` the weight of `f(xs[j])` in the k-th
/// derivative approximation. Nodes need not be uniform or sorted, but must
/// be pairwise distinct. Classic Fornberg recurrence.
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let nn = xs.len();
    assert!(nn > m, "need at least m+1 nodes for the m-th derivative");
    let mut w = vec![vec![0.0; nn]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    w[0][0] = 1.0;
    for i in 1..nn {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[k][i] = c1 * (k as f64 * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                w[k][j] = (c4 * w[k][j] - k as f64 * w[k - 1][j]) / c3;
            }
            w[0][j] = c4 * w[0][j] / c3;
        }
        c1 = c2;
    }
    w
}

/// First and second derivative of `f` at interior node `i` of a strictly
/// monotone grid `x`, 3-point stencil. Second order for f', first-to-second
/// order for f'' depending on grid smoothness.
pub fn deriv12_at(x: &[f64], f: &[f64], i: usize) -> (f64, f64) {
    debug_assert!(i >= 1 && i + 1 < x.len());
    let nodes = [x[i - 1], x[i], x[i + 1]];
    let w = fd_weights(x[i], &nodes, 2);
    let vals = [f[i - 1], f[i], f[i + 1]];
    let d1 = w[1][0] * vals[0] + w[1][1] * vals[1] + w[1][2] * vals[2];
    let d2 = w[2][0] * vals[0] + w[2][1] * vals[1] + w[2][2] * vals[2];
    (d1, d2)
}

/// First and second derivatives at node `i` from the centered 5-node
/// window i−2..=i+2: fourth-order accurate on uniform grids (the odd
/// truncation terms cancel by symmetry), third-order otherwise.
pub fn deriv12_5pt(x: &[f64], f: &[f64], i: usize) -> (f64, f64) {
    debug_assert!(i >= 2 && i + 2 < x.len());
    let nodes = [x[i - 2], x[i - 1], x[i], x[i + 1], x[i + 2]];
    let w = fd_weights(x[i], &nodes, 2);
    let vals = [f[i - 2], f[i - 1], f[i], f[i + 1], f[i + 2]];
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for k in 0..5 {
        d1 += w[1][k] * vals[k];
        d2 += w[2][k] * vals[k];
    }
    (d1, d2)
}

/// One-sided first/second derivatives at node `i` using the 4 nearest nodes
/// toward the interior (second-order accurate for both). `left` chooses the
/// boundary side: true uses nodes i..i+3, false uses i-3..=i.
pub fn deriv12_one_sided(x: &[f64], f: &[f64], i: usize, left: bool) -> (f64, f64) {
    let idx: [usize; 4] = if left {
        [i, i + 1, i + 2, i + 3]
    } else {
        [i - 3, i - 2, i - 1, i]
    };
    let nodes = [x[idx[0]], x[idx[1]], x[idx[2]], x[idx[3]]];
    let w = fd_weights(x[i], &nodes, 2);
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for (j, &k) in idx.iter().enumerate() {
        d1 += w[1][j] * f[k];
        d2 += w[2][j] * f[k];
    }
    (d1, d2)
}

/// Solves a tridiagonal system in place (Thomas algorithm).
/// `lower[i]` multiplies x[i-1] in row i; `upper[i]` multiplies x[i+1].
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    x
}

/// Natural cubic spline through (x_i, y_i), x strictly increasing.
/// End conditions S'' = 0; interior accuracy O(h^4), O(h^2) within two
/// intervals of each end (callers quarantine ends).
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>, // second derivatives at nodes
}

impl CubicSpline {
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        assert!(n >= 3 && y.len() == n);
        let mut lower = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            lower[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            upper[i] = h1 / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        let m = solve_tridiagonal(&lower, &diag, &upper, &rhs);
        CubicSpline { x: x.to_vec(), y: y.to_vec(), m }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Mean observed convergence order from a sequence of error norms at
/// successively halved resolution: order_k = log2(e_k / e_{k+1}).
pub fn order_estimate(errors: &[f64]) -> f64 {
    assert!(errors.len() >= 2);
    let mut acc = 0.0;
    let mut cnt = 0;
    for w in errors.windows(2) {
        acc += (w[0] / w[1]).log2();
        cnt += 1;
    }
    acc / cnt as f64
}

/// Median of a slice (robust location estimate). Not meaningful for empty
/// input; panics in that case.
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty());
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Uniform grid of m points covering [a, b] inclusive.
pub fn linspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    assert!(m >= 2);
    let step = (b - a) / (m - 1) as f64;
    (0..m).map(|i| if i == m - 1 { b } else { a + i as f64 * step }).collect()
}
