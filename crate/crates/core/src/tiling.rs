//! Square tilings of `[0, c₂(E)] × [0, 1]` by equilibrium measures (`p = 2`).
//!
//! Edge `α` becomes a square of side `M(α)` whose top sits at depth
//! `I M(b(α))` below the top of the rectangle. Children are packed left to
//! right under their parent in stored child order.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::capacity::EquilibriumResult;
use crate::characterization::{verify_equilibrium, CharacterizationReport};
use crate::error::{Error, Result};
use crate::potential::PExponent;
use crate::tree::{BoundaryMeasure, EdgeFunction, EdgeId, Tree};

/// Residual tolerance a measure must meet before it is tiled.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub edge: EdgeId,
    pub x: f64,
    /// Distance from the top of the rectangle to the top of the square.
    pub y: f64,
    pub side: f64,
}

impl Square {
    fn right(&self) -> f64 {
        self.x + self.side
    }

    fn bottom(&self) -> f64 {
        self.y + self.side
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tiling {
    pub width: f64,
    pub height: f64,
    pub squares: Vec<Square>,
}

impl Tiling {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Total width covered by squares whose interior meets the horizontal
    /// line at depth `y`.
    pub fn covered_width_at(&self, y: f64) -> f64 {
        self.squares
            .iter()
            .filter(|s| s.y < y && y < s.bottom())
            .map(|s| s.side)
            .sum()
    }

    /// JSON with every coordinate printed to 17 significant digits, so the
    /// file reads back bit for bit.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{{\"width\":{},\"height\":{},\"squares\":[", g17(self.width), g17(self.height));
        for (i, s) in self.squares.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(
                out,
                "{{\"edge\":{},\"x\":{},\"y\":{},\"side\":{}}}",
                s.edge.0,
                g17(s.x),
                g17(s.y),
                g17(s.side)
            );
        }
        out.push_str("]}");
        out
    }

    pub fn from_json(text: &str) -> Result<Tiling> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `%.17g`-style formatting that stays valid JSON.
fn g17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{x:.16e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
    if exp == "0" {
        mantissa.to_string()
    } else {
        format!("{mantissa}e{exp}")
    }
}

/// Lays out the squares of an equilibrium measure for `p = 2`.
pub fn build_tiling(tree: &Tree, result: &EquilibriumResult) -> Result<Tiling> {
    if !result.p.is_quadratic() {
        return Err(Error::RequiresQuadratic(result.p.p()));
    }
    let mu = &result.measure;
    if let Some(tail) = mu.support_leaves(tree).find(|&e| tree.is_tail(e)) {
        return Err(Error::TilingMismatch(format!(
            "tail {tail} carries mass; tile a finite tree"
        )));
    }
    let report = verify_equilibrium(tree, mu, PExponent::TWO, EQUILIBRIUM_TOL)?;
    if !report.is_equilibrium {
        return Err(Error::NotEquilibrium {
            max_residual: report.max_residual,
        });
    }
    let mut x = vec![0.0; tree.len()];
    let mut y = vec![0.0; tree.len()];
    let mut squares = Vec::new();
    for &e in tree.top_down() {
        let side = mu.get(e);
        if side <= 0.0 {
            continue;
        }
        squares.push(Square {
            edge: e,
            x: x[e.0],
            y: y[e.0],
            side,
        });
        let mut cursor = x[e.0];
        for &c in tree.children(e) {
            x[c.0] = cursor;
            y[c.0] = y[e.0] + side;
            cursor += mu.get(c);
        }
    }
    Ok(Tiling {
        width: mu.mass(tree),
        height: 1.0,
        squares,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TilingReport {
    /// Largest distance by which a square leaves the rectangle.
    pub containment: f64,
    /// Largest overlap depth of two square interiors.
    pub overlap: f64,
    /// `|Σ side² - width · height|`.
    pub area_deficit: f64,
    /// Largest misplacement of a child's top segment relative to its
    /// parent's bottom segment.
    pub combinatorics: f64,
    pub valid: bool,
}

/// Checks containment, disjointness, full cover and tree combinatorics. The
/// verdict does not depend on the order of the squares.
pub fn validate_tiling(tiling: &Tiling, tree: &Tree, tol: f64) -> TilingReport {
    let mut containment = 0.0f64;
    for s in &tiling.squares {
        containment = containment
            .max(-s.x)
            .max(-s.y)
            .max(s.right() - tiling.width)
            .max(s.bottom() - tiling.height)
            .max(-s.side);
    }

    let mut order: Vec<&Square> = tiling.squares.iter().collect();
    order.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.edge.cmp(&b.edge)));
    let mut overlap = 0.0f64;
    let mut active: Vec<&Square> = Vec::new();
    for &s in &order {
        active.retain(|a| a.right() > s.x);
        for a in &active {
            let dx = a.right().min(s.right()) - s.x.max(a.x);
            let dy = a.bottom().min(s.bottom()) - s.y.max(a.y);
            if dx > 0.0 && dy > 0.0 {
                overlap = overlap.max(dx.min(dy));
            }
        }
        active.push(s);
    }

    // summed in sweep order so the verdict is independent of storage order
    let covered: f64 = order.iter().map(|s| s.side * s.side).sum();
    let area_deficit = (covered - tiling.area()).abs();

    let mut by_edge: Vec<Option<&Square>> = vec![None; tree.len()];
    let mut combinatorics = 0.0f64;
    for s in &tiling.squares {
        match by_edge.get_mut(s.edge.0) {
            Some(slot @ None) => *slot = Some(s),
            _ => combinatorics = f64::INFINITY,
        }
    }
    for s in &tiling.squares {
        if !tree.contains(s.edge) {
            continue;
        }
        let miss = match tree.parent(s.edge) {
            None => s.y.abs(),
            Some(parent) => match by_edge[parent.0] {
                None => f64::INFINITY,
                Some(q) => (s.y - q.bottom())
                    .abs()
                    .max(q.x - s.x)
                    .max(s.right() - q.right())
                    .max(0.0),
            },
        };
        combinatorics = combinatorics.max(miss);
    }

    TilingReport {
        containment,
        overlap,
        area_deficit,
        combinatorics,
        valid: containment <= tol && overlap <= tol && area_deficit <= tol && combinatorics <= tol,
    }
}

/// Reads the measure `M(α) = side(α) / height` off a tiling and tests it.
pub fn measure_from_tiling(tiling: &Tiling, tree: &Tree, tol: f64) -> Result<(BoundaryMeasure, CharacterizationReport)> {
    if !(tiling.height > 0.0) {
        return Err(Error::TilingMismatch("rectangle height must be positive".into()));
    }
    let mut m = EdgeFunction::zeros(tree);
    let mut seen = vec![false; tree.len()];
    for s in &tiling.squares {
        tree.check(s.edge)?;
        if std::mem::replace(&mut seen[s.edge.0], true) {
            return Err(Error::TilingMismatch(format!("edge {} has two squares", s.edge)));
        }
        m.set(s.edge, s.side / tiling.height);
    }
    let geometry = validate_tiling(tiling, tree, tol);
    if geometry.combinatorics > tol {
        return Err(Error::TilingMismatch(format!(
            "child squares are not stacked on their parents (off by {:e})",
            geometry.combinatorics
        )));
    }
    for e in tree.edges() {
        let kids = tree.children(e);
        if kids.is_empty() || m.get(e) == 0.0 {
            continue;
        }
        let below: f64 = kids.iter().map(|&c| m.get(c)).sum();
        if (below - m.get(e)).abs() > tol {
            return Err(Error::TilingMismatch(format!(
                "bottom of square {e} is not covered by its children"
            )));
        }
    }
    let mu = BoundaryMeasure::from_co_potential(tree, m, tol.max(BoundaryMeasure::ADDITIVITY_TOL))?;
    let report = verify_equilibrium(tree, &mu, PExponent::TWO, tol)?;
    Ok((mu, report))
}

#[derive(Clone, Debug)]
pub struct SvgOptions {
    /// Pixels per unit length.
    pub scale: f64,
    pub stroke: String,
    pub labels: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            scale: 300.0,
            stroke: "#222".into(),
            labels: false,
        }
    }
}

fn px(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Deterministic SVG 1.1 rendering; squares are emitted in `(y, x, edge)`
/// order.
pub fn render_svg(tiling: &Tiling, opts: &SvgOptions) -> String {
    let k = opts.scale;
    let (w, h) = (tiling.width * k, tiling.height * k);
    let mut squares: Vec<&Square> = tiling.squares.iter().collect();
    squares.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)).then(a.edge.cmp(&b.edge)));
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        px(w),
        px(h),
        px(w),
        px(h)
    );
    for s in &squares {
        let hue = 210.0 - 170.0 * (s.y / tiling.height).clamp(0.0, 1.0);
        let _ = writeln!(
            out,
            r#"<rect class="square" x="{}" y="{}" width="{}" height="{}" fill="hsl({:.0},70%,75%)" stroke="{}" stroke-width="0.5"/>"#,
            px(s.x * k),
            px(s.y * k),
            px(s.side * k),
            px(s.side * k),
            hue,
            opts.stroke
        );
    }
    if opts.labels {
        for s in &squares {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" font-size="{}" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
                px((s.x + 0.5 * s.side) * k),
                px((s.y + 0.5 * s.side) * k),
                px((0.4 * s.side * k).min(14.0)),
                s.edge.0
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<rect class="frame" x="0" y="0" width="{}" height="{}" fill="none" stroke="{}" stroke-width="1"/>"#,
        px(w),
        px(h),
        opts.stroke
    );
    out.push_str("</svg>\n");
    out
}

pub fn emit_svg(tiling: &Tiling, path: &Path, opts: &SvgOptions) -> Result<()> {
    std::fs::write(path, render_svg(tiling, opts))?;
    Ok(())
}
