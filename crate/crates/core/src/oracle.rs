//! Capacity of a finite set of leaves by convex optimization.
//!
//! This module deliberately does not use the tent recursion. It works with
//! leaf weights `w` on the probability simplex and the convex function
//!
//! ```text
//! F(w) = Σ_α M_w(α)^{p'},   M_w(α) = Σ_{ζ ∈ E, α ∈ P(ζ)} w(ζ)
//! ```
//!
//! whose minimum is `cap(E)^{1/(1-p)}`. Every iterate certifies a bracket:
//! `F(w)^{1-p}` is a lower bound, and `f = M_w^{p'-1} / m` with
//! `m = min_{ζ ∈ E} Σ_{P(ζ)} M_w^{p'-1}` is admissible with energy `F(w) / m^p`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{abs_pow, PExponent};
use crate::tree::{BoundarySet, EdgeFunction, EdgeId, Tree};

#[derive(Copy, Clone, Debug)]
pub struct OracleOptions {
    /// Target relative width `(upper - lower) / upper`.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            tol: 1e-8,
            max_iterations: 200_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    /// Energy of the admissible function `f`; an upper bound on the capacity.
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    /// Admissible function attaining `upper`.
    #[serde(skip)]
    pub admissible: EdgeFunction,
    /// Leaf weights of the final dual iterate.
    #[serde(skip)]
    pub leaf_weights: Vec<(EdgeId, f64)>,
}

/// Paths of the leaves of `E` in local edge indices.
struct Problem {
    edges: Vec<EdgeId>,
    paths: Vec<Vec<usize>>,
    p: PExponent,
}

impl Problem {
    fn new(tree: &Tree, set: &BoundarySet, p: PExponent) -> Result<Self> {
        let mut local = vec![usize::MAX; tree.len()];
        let mut edges = Vec::new();
        let mut paths = Vec::with_capacity(set.len());
        for leaf in set.iter() {
            let mut path = Vec::new();
            for e in tree.predecessor_path(leaf)? {
                if local[e.0] == usize::MAX {
                    local[e.0] = edges.len();
                    edges.push(e);
                }
                path.push(local[e.0]);
            }
            paths.push(path);
        }
        Ok(Problem { edges, paths, p })
    }

    fn co_potential(&self, w: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.edges.len()];
        for (path, &wz) in self.paths.iter().zip(w) {
            for &a in path {
                m[a] += wz;
            }
        }
        m
    }

    fn objective(&self, m: &[f64]) -> f64 {
        let q = self.p.conj();
        m.iter().map(|&x| abs_pow(x, q)).sum()
    }

    /// `Σ_{P(ζ)} M^{p'-1}` for every leaf of `E`.
    fn path_sums(&self, m: &[f64]) -> Vec<f64> {
        let q = self.p.conj() - 1.0;
        let g: Vec<f64> = m.iter().map(|&x| abs_pow(x, q)).collect();
        self.paths.iter().map(|path| path.iter().map(|&a| g[a]).sum()).collect()
    }

    fn bracket(&self, w: &[f64]) -> (f64, f64, f64, Vec<f64>) {
        let m = self.co_potential(w);
        let f = self.objective(&m);
        let sums = self.path_sums(&m);
        let min = sums.iter().copied().fold(f64::INFINITY, f64::min);
        let lower = abs_pow(f, 1.0 - self.p.p());
        let upper = if min > 0.0 { f / abs_pow(min, self.p.p()) } else { f64::INFINITY };
        // both bounds are exact up to rounding; never report them crossed
        (lower.min(upper), upper, min, m)
    }

    fn admissible(&self, tree: &Tree, m: &[f64], min: f64) -> EdgeFunction {
        let q = self.p.conj() - 1.0;
        let mut f = EdgeFunction::zeros(tree);
        for (a, &e) in self.edges.iter().enumerate() {
            f.set(e, abs_pow(m[a], q) / min);
        }
        f
    }
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, &x) in u.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

fn finish(
    tree: &Tree,
    set: &BoundarySet,
    problem: &Problem,
    w: &[f64],
    iterations: usize,
    tol: f64,
) -> Option<OracleResult> {
    let (lower, upper, min, m) = problem.bracket(w);
    if !(upper.is_finite() && upper - lower <= tol * upper) {
        return None;
    }
    Some(OracleResult {
        value: upper,
        lower,
        upper,
        iterations,
        admissible: problem.admissible(tree, &m, min),
        leaf_weights: set.iter().zip(w.iter().copied()).collect(),
    })
}

/// Quadratic case: minimize `wᵀ A w` on the simplex with
/// `A_{ζη} = |P(ζ) ∩ P(η)|` by an active-set solve of the KKT system.
fn quadratic_weights(problem: &Problem) -> Option<Vec<f64>> {
    let n = problem.paths.len();
    let mut marks: Vec<Vec<bool>> = Vec::with_capacity(n);
    for path in &problem.paths {
        let mut row = vec![false; problem.edges.len()];
        for &a in path {
            row[a] = true;
        }
        marks.push(row);
    }
    let shared = |i: usize, j: usize| problem.paths[j].iter().filter(|&&a| marks[i][a]).count() as f64;
    let mut active: Vec<usize> = (0..n).collect();
    for _ in 0..n {
        let k = active.len();
        let a = DMatrix::from_fn(k, k, |r, c| shared(active[r], active[c]));
        let x = a.cholesky()?.solve(&DVector::from_element(k, 1.0));
        if x.iter().all(|&v| v > 0.0) {
            let total: f64 = x.iter().sum();
            let mut w = vec![0.0; n];
            for (r, &i) in active.iter().enumerate() {
                w[i] = x[r] / total;
            }
            return Some(w);
        }
        active = active.iter().zip(x.iter()).filter(|(_, &v)| v > 0.0).map(|(&i, _)| i).collect();
        if active.is_empty() {
            return None;
        }
    }
    None
}

/// Damped Newton on the relative interior of the simplex. The minimizer
/// charges every leaf, so the iterates stay positive and converge
/// quadratically once close. Returns the number of steps taken.
fn newton(problem: &Problem, w: &mut [f64], tol: f64) -> usize {
    let n = w.len();
    let q = problem.p.conj();
    let mut below: Vec<Vec<usize>> = vec![Vec::new(); problem.edges.len()];
    for (i, path) in problem.paths.iter().enumerate() {
        for &a in path {
            below[a].push(i);
        }
    }
    for it in 0..200 {
        let (lower, upper, _, m) = problem.bracket(w);
        if upper.is_finite() && upper - lower <= tol * upper {
            return it;
        }
        let f = problem.objective(&m);
        let g = DVector::from_iterator(n, problem.path_sums(&m).into_iter().map(|s| q * s));
        let mut h = DMatrix::<f64>::zeros(n, n);
        for (a, leaves) in below.iter().enumerate() {
            let weight = q * (q - 1.0) * abs_pow(m[a], q - 2.0);
            for &i in leaves {
                for &j in leaves {
                    h[(i, j)] += weight;
                }
            }
        }
        let Some(chol) = h.cholesky() else { eprintln!("chol fail"); return it };
        let u = chol.solve(&g);
        let v = chol.solve(&DVector::from_element(n, 1.0));
        let lambda = u.sum() / v.sum();
        let d = -(u - v * lambda);
        let slope = g.dot(&d);
        let mut step: f64 = 1.0;
        for i in 0..n {
            if d[i] < 0.0 {
                step = step.min(0.95 * w[i] / -d[i]);
            }
        }
        let trial = |step: f64| -> Vec<f64> { (0..n).map(|i| w[i] + step * d[i]).collect() };
        // Near the optimum F stops resolving progress in double precision
        // (the slope may even round to the wrong sign), while the bracket
        // gap, being first order, still does.
        let full = trial(step);
        let (lo, hi, _, _) = problem.bracket(&full);
        if hi.is_finite() && hi - lo < 0.5 * (upper - lower) {
            w.copy_from_slice(&full);
            continue;
        }
        if !(slope < 0.0) {
            return it;
        }
        loop {
            let next = trial(step);
            if problem.objective(&problem.co_potential(&next)) <= f + 1e-4 * step * slope {
                w.copy_from_slice(&next);
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return it;
            }
        }
    }
    200
}

/// Accelerated projected gradient with backtracking and adaptive restart.
fn descend(problem: &Problem, opts: &OracleOptions, w: &mut Vec<f64>) -> Result<usize> {
    let n = w.len();
    let q = problem.p.conj();
    let gradient = |x: &[f64]| -> (f64, Vec<f64>) {
        let m = problem.co_potential(x);
        let f = problem.objective(&m);
        let sums = problem.path_sums(&m);
        (f, sums.into_iter().map(|s| q * s).collect())
    };
    let mut prev = w.clone();
    let mut t: f64 = 1.0;
    let mut lipschitz = 1.0;
    let (mut f_w, _) = gradient(w);
    for it in 1..=opts.max_iterations {
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        let y: Vec<f64> = (0..n).map(|i| w[i] + beta * (w[i] - prev[i])).collect();
        let (f_y, g_y) = gradient(&y);
        let next = loop {
            let mut z: Vec<f64> = (0..n).map(|i| y[i] - g_y[i] / lipschitz).collect();
            project_simplex(&mut z);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for i in 0..n {
                let d = z[i] - y[i];
                lin += g_y[i] * d;
                sq += d * d;
            }
            let f_z = gradient(&z).0;
            if f_z <= f_y + lin + 0.5 * lipschitz * sq + 1e-15 * f_y.abs() || lipschitz > 1e300 {
                break (z, f_z);
            }
            lipschitz *= 2.0;
        };
        let (z, f_z) = next;
        if f_z > f_w {
            // restart the momentum
            t = 1.0;
            prev = w.clone();
            continue;
        }
        prev = std::mem::replace(w, z);
        f_w = f_z;
        t = t_next;
        lipschitz *= 0.9;
        if it % 10 == 0 {
            let (lower, upper, _, _) = problem.bracket(w);
            if upper.is_finite() && upper - lower <= opts.tol * upper {
                return Ok(it);
            }
        }
    }
    let (lower, upper, _, _) = problem.bracket(w);
    Err(Error::NotConverged {
        iterations: opts.max_iterations,
        lower,
        upper,
    })
}

/// Capacity of `E` with a certified bracket of relative width at most
/// `opts.tol`.
pub fn capacity_oracle(tree: &Tree, set: &BoundarySet, p: PExponent, opts: &OracleOptions) -> Result<OracleResult> {
    set.validate(tree)?;
    if set.is_empty() {
        return Ok(OracleResult {
            value: 0.0,
            lower: 0.0,
            upper: 0.0,
            iterations: 0,
            admissible: EdgeFunction::zeros(tree),
            leaf_weights: Vec::new(),
        });
    }
    let problem = Problem::new(tree, set, p)?;
    let n = problem.paths.len();
    if p.is_quadratic() {
        if let Some(w) = quadratic_weights(&problem) {
            if let Some(r) = finish(tree, set, &problem, &w, 0, opts.tol) {
                return Ok(r);
            }
        }
    }
    let mut w = vec![1.0 / n as f64; n];
    let mut iterations = newton(&problem, &mut w, opts.tol);
    if let Some(r) = finish(tree, set, &problem, &w, iterations, opts.tol) {
        return Ok(r);
    }
    iterations += descend(&problem, opts, &mut w)?;
    finish(tree, set, &problem, &w, iterations, opts.tol).ok_or_else(|| {
        let (lower, upper, _, _) = problem.bracket(&w);
        Error::NotConverged { iterations, lower, upper }
    })
}
