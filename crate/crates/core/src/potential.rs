//! Potentials, energies and the discrete p-Laplacian.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{BoundaryMeasure, EdgeFunction, EdgeId, Tree, Vertex};

/// An exponent `1 < p < ∞` together with its conjugate `p' = p / (p - 1)`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PExponent {
    p: f64,
    conj: f64,
}

impl PExponent {
    pub const TWO: PExponent = PExponent { p: 2.0, conj: 2.0 };

    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidExponent(p));
        }
        Ok(PExponent {
            p,
            conj: p / (p - 1.0),
        })
    }

    #[inline]
    pub fn p(self) -> f64 {
        self.p
    }

    /// `p'`.
    #[inline]
    pub fn conj(self) -> f64 {
        self.conj
    }

    /// The exponent `p'` viewed as a primary exponent.
    pub fn conjugate(self) -> PExponent {
        PExponent {
            p: self.conj,
            conj: self.p,
        }
    }

    pub fn is_quadratic(self) -> bool {
        self.p == 2.0
    }
}

impl TryFrom<f64> for PExponent {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        PExponent::new(p)
    }
}

impl From<PExponent> for f64 {
    fn from(p: PExponent) -> f64 {
        p.p
    }
}

impl fmt::Display for PExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.p)
    }
}

/// `|x|^q`, with `0^q = 0`.
#[inline]
pub fn abs_pow(x: f64, q: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (q * x.abs().ln()).exp()
    }
}

/// `sgn(x) |x|^q`.
#[inline]
pub fn signed_pow(x: f64, q: f64) -> f64 {
    abs_pow(x, q).copysign(x)
}

/// `f_p(α) = sgn f(α) |f(α)|^{p'-1}`.
pub fn signed_power(f: &EdgeFunction, p: PExponent) -> EdgeFunction {
    if p.is_quadratic() {
        return f.clone();
    }
    let q = p.conj() - 1.0;
    f.map(|x| signed_pow(x, q))
}

/// A real function on the realized vertices: `o` and every `e(α)`.
///
/// Potentials keep a compensation term next to each value, so differences
/// across an edge recover the edge increment to nearly full precision even
/// when it is tiny next to the accumulated potential.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexFunction {
    values: Vec<f64>,
    low: Vec<f64>,
}

/// `a + b = s + err` exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl VertexFunction {
    pub fn zeros(tree: &Tree) -> Self {
        VertexFunction::from_vec(vec![0.0; tree.num_vertices()])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        let low = vec![0.0; values.len()];
        VertexFunction { values, low }
    }

    /// `If` at every vertex, with `If(o) = 0`.
    pub fn potential_of(tree: &Tree, f: &EdgeFunction) -> Self {
        let mut values = vec![0.0; tree.num_vertices()];
        let mut low = vec![0.0; tree.num_vertices()];
        for &e in tree.top_down() {
            let b = tree.begin(e).index();
            let (s, err) = two_sum(values[b], f.get(e));
            values[Vertex::End(e).index()] = s;
            low[Vertex::End(e).index()] = low[b] + err;
        }
        VertexFunction { values, low }
    }

    /// `g(y) - g(x)` using the compensation terms.
    #[inline]
    pub fn difference(&self, y: Vertex, x: Vertex) -> f64 {
        let (hi, err) = two_sum(self.get_high(y), -self.get_high(x));
        hi + (err + (self.get_low(y) - self.get_low(x)))
    }

    /// `target - g(v)` using the compensation term.
    #[inline]
    pub fn deficit(&self, target: f64, v: Vertex) -> f64 {
        let (hi, err) = two_sum(target, -self.get_high(v));
        hi + (err - self.get_low(v))
    }

    #[inline]
    fn get_high(&self, v: Vertex) -> f64 {
        self.values.get(v.index()).copied().unwrap_or(0.0)
    }

    #[inline]
    fn get_low(&self, v: Vertex) -> f64 {
        self.low.get(v.index()).copied().unwrap_or(0.0)
    }

    #[inline]
    pub fn get(&self, v: Vertex) -> f64 {
        self.get_high(v) + self.get_low(v)
    }

    pub fn set(&mut self, v: Vertex, value: f64) {
        self.values[v.index()] = value;
        self.low[v.index()] = 0.0;
    }

    /// Values indexed by [`Vertex::index`].
    pub fn to_vec(&self) -> Vec<f64> {
        self.values.iter().zip(&self.low).map(|(h, l)| h + l).collect()
    }

    /// Edge differences `g(e(α)) - g(b(α))`.
    pub fn gradient(&self, tree: &Tree) -> EdgeFunction {
        EdgeFunction::from_fn(tree, |e| self.difference(Vertex::End(e), tree.begin(e)))
    }
}

/// `If(x) = Σ_{α ∈ P(x)} f(α)`.
pub fn potential(tree: &Tree, f: &EdgeFunction, x: Vertex) -> Result<f64> {
    Ok(tree.vertex_path(x)?.into_iter().map(|e| f.get(e)).sum())
}

/// `Σ_{β ≥ α} |M(β)|^{p'}` for every `α`, in one bottom-up pass.
pub fn local_energies(tree: &Tree, m: &EdgeFunction, p: PExponent) -> EdgeFunction {
    let mut acc = EdgeFunction::zeros(tree);
    for e in tree.bottom_up() {
        let below: f64 = tree.children(e).iter().map(|&c| acc.get(c)).sum();
        acc.set(e, abs_pow(m.get(e), p.conj()) + below);
    }
    acc
}

/// Local p-energy `E_{p,α}(μ) = Σ_{β ≥ α} M(β)^{p'}`; global energy when
/// `alpha` is `None`.
pub fn energy(tree: &Tree, mu: &BoundaryMeasure, p: PExponent, alpha: Option<EdgeId>) -> Result<f64> {
    let alpha = alpha.unwrap_or(tree.root());
    tree.check(alpha)?;
    let mut total = 0.0;
    let mut stack = vec![alpha];
    while let Some(e) = stack.pop() {
        total += abs_pow(mu.get(e), p.conj());
        stack.extend_from_slice(tree.children(e));
    }
    Ok(total)
}

/// Vertices where the p-Laplacian is defined: end vertices of edges that have
/// children.
pub fn interior_vertices(tree: &Tree) -> impl Iterator<Item = Vertex> + '_ {
    tree.top_down()
        .iter()
        .copied()
        .filter(|&e| !tree.is_leaf(e))
        .map(Vertex::End)
}

/// `Δ_p g(x) = Σ_{y ~ x} sgn(g(y) - g(x)) |g(y) - g(x)|^{p-1}`.
pub fn p_laplacian(tree: &Tree, g: &VertexFunction, x: Vertex, p: PExponent) -> Result<f64> {
    tree.check_vertex(x)?;
    let e = match x {
        Vertex::Root => {
            return Err(Error::UndefinedLaplacian {
                vertex: x,
                reason: "the root vertex is excluded",
            })
        }
        Vertex::End(e) => e,
    };
    if tree.is_tail(e) {
        return Err(Error::UndefinedLaplacian {
            vertex: x,
            reason: "neighbourhood lies beyond the truncation",
        });
    }
    if tree.is_leaf(e) {
        return Err(Error::UndefinedLaplacian {
            vertex: x,
            reason: "boundary vertex of a finite tree",
        });
    }
    Ok(laplacian_at(tree, g, e, p))
}

fn laplacian_at(tree: &Tree, g: &VertexFunction, e: EdgeId, p: PExponent) -> f64 {
    let q = p.p() - 1.0;
    let x = Vertex::End(e);
    let up = signed_pow(g.difference(tree.begin(e), x), q);
    let down: f64 = tree
        .children(e)
        .iter()
        .map(|&c| signed_pow(g.difference(Vertex::End(c), x), q))
        .sum();
    up + down
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarmonicReport {
    pub harmonic: bool,
    pub worst_vertex: Option<Vertex>,
    pub worst_value: f64,
    /// Interior vertices with `|Δ_p g| > tol`, in breadth-first order.
    pub violations: Vec<Vertex>,
}

/// Checks `Δ_p g = 0` at every interior vertex.
pub fn is_p_harmonic(tree: &Tree, g: &VertexFunction, p: PExponent, tol: f64) -> HarmonicReport {
    let inner: Vec<EdgeId> = tree
        .top_down()
        .iter()
        .copied()
        .filter(|&e| !tree.is_leaf(e))
        .collect();
    let values: Vec<f64> = inner
        .par_iter()
        .map(|&e| laplacian_at(tree, g, e, p).abs())
        .collect();
    let mut report = HarmonicReport {
        harmonic: true,
        worst_vertex: None,
        worst_value: 0.0,
        violations: Vec::new(),
    };
    for (&e, &v) in inner.iter().zip(&values) {
        if v > report.worst_value || (v.is_nan() && report.worst_vertex.is_none()) {
            report.worst_value = v;
            report.worst_vertex = Some(Vertex::End(e));
        }
        if !(v <= tol) {
            report.harmonic = false;
            report.violations.push(Vertex::End(e));
        }
    }
    report
}
