//! Quadrature helpers: Gauss-Legendre rules and adaptive refinement on boxes.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule over a box: `panels` panels per axis with
/// `order` nodes each.
pub fn gauss_box<F>(f: F, lo: &[f64], hi: &[f64], panels: usize, order: usize) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let d = lo.len();
    if d == 0 {
        return f(&[]);
    }
    let (gx, gw) = gauss_legendre(order);
    // per-axis composite nodes and weights
    let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..d)
        .map(|k| {
            let h = (hi[k] - lo[k]) / panels as f64;
            let mut xs = Vec::with_capacity(panels * order);
            let mut ws = Vec::with_capacity(panels * order);
            for p in 0..panels {
                let mid = lo[k] + (p as f64 + 0.5) * h;
                for (x, w) in gx.iter().zip(&gw) {
                    xs.push(mid + 0.5 * h * x);
                    ws.push(0.5 * h * w);
                }
            }
            (xs, ws)
        })
        .collect();
    let m = panels * order;
    let mut idx = vec![0usize; d];
    let mut point = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..d {
            point[k] = axes[k].0[idx[k]];
            w *= axes[k].1[idx[k]];
        }
        total += w * f(&point);
        let mut k = d;
        loop {
            if k == 0 {
                return total;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Adaptive 1-D quadrature. Intervals are halved wherever the trapezoid
/// sums on 1, 2 and 4 panels disagree beyond the local tolerance; accepted
/// intervals use the 4-panel sum with one Richardson step. Returns
/// `(value, error estimate)`.
pub fn adaptive_1d<F>(f: &F, a: f64, b: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    if b <= a {
        return (0.0, 0.0);
    }
    // uniform seed split
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    let xs: Vec<f64> = (0..=pieces).map(|i| if i == pieces { b } else { a + i as f64 * h }).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut value = 0.0;
    let mut err = 0.0;
    for i in 0..pieces {
        let m = 0.5 * (xs[i] + xs[i + 1]);
        let (v, e) = refine(f, xs[i], xs[i + 1], fs[i], f(m), fs[i + 1], tol / pieces as f64, 0);
        value += v;
        err += e;
    }
    (value, err)
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, tol: f64, depth: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let fl = f(0.5 * (a + m));
    let fr = f(0.5 * (m + b));
    let h = b - a;
    let t1 = 0.5 * h * (fa + fb);
    let t2 = 0.5 * (t1 + h * fm);
    let t4 = 0.5 * (t2 + 0.5 * h * (fl + fr));
    let d2 = (t2 - t1).abs();
    let d4 = (t4 - t2).abs();
    if (d4 <= 3.0 * tol && d2 <= 12.0 * tol) || depth >= 48 {
        return (t4 + (t4 - t2) / 3.0, d4 / 3.0);
    }
    let (l, el) = refine(f, a, m, fa, fl, fm, 0.5 * tol, depth + 1);
    let (r, er) = refine(f, m, b, fm, fr, fb, 0.5 * tol, depth + 1);
    (l + r, el + er)
}

/// Iterated adaptive quadrature over a box.
pub fn adaptive_box<F>(f: &F, lo: &[f64], hi: &[f64], tol: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    nested(f, lo, hi, tol, &[])
}

fn nested<F>(f: &F, lo: &[f64], hi: &[f64], tol: f64, prefix: &[f64]) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let axis = prefix.len();
    let last = axis + 1 == lo.len();
    let inner_width: f64 = (axis + 1..lo.len()).map(|k| hi[k] - lo[k]).product();
    let inner_tol = tol / (hi[axis] - lo[axis]).max(1.0);
    let g = |x: f64| {
        let mut p = prefix.to_vec();
        p.push(x);
        if last {
            f(&p)
        } else {
            nested(f, lo, hi, inner_tol / inner_width.max(1.0), &p)
        }
    };
    adaptive_1d(&g, lo[axis], hi[axis], tol).0
}

/// Pairwise (tree) summation with a fixed reduction order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}
