//! Browser bindings for the static demo in `www/`.
//!
//! Every entry point takes plain numbers and strings and returns a JSON
//! string, so the page needs no glue beyond `JSON.parse`.

use serde_json::json;
use treecap::constructions::capacity_curve;
use treecap::{
    build_tiling, capacity_recursive, homogeneous_capacity, render_svg, subdyadic_tree_of_capacity, PExponent,
    SvgOptions, TailPolicy, Tree, TreeSpec,
};
use wasm_bindgen::prelude::*;

/// Largest tree the page will tile; past this the squares are sub-pixel.
const MAX_TILED_EDGES: usize = 20_000;

fn exponent(p: f64) -> Result<PExponent, String> {
    PExponent::new(p).map_err(|e| e.to_string())
}

/// Tiles the finite tree `spec` cut at `depth` and returns
/// `{"svg", "width", "squares"}`.
#[wasm_bindgen]
pub fn tiling_svg(spec: &str, depth: usize, labels: bool) -> Result<String, String> {
    let spec: TreeSpec = spec.parse().map_err(|e: treecap::Error| e.to_string())?;
    let tree = Tree::build(&spec, Some(depth)).map_err(|e| e.to_string())?.without_tails();
    if tree.len() > MAX_TILED_EDGES {
        return Err(format!("{} edges is too many to draw; lower the depth", tree.len()));
    }
    let r = capacity_recursive(&tree, PExponent::TWO, &TailPolicy::Pessimistic).map_err(|e| e.to_string())?;
    let tiling = build_tiling(&tree, &r).map_err(|e| e.to_string())?;
    let opts = SvgOptions { scale: 480.0, labels, ..SvgOptions::default() };
    Ok(json!({
        "svg": render_svg(&tiling, &opts),
        "width": tiling.width,
        "squares": tiling.squares.len(),
    })
    .to_string())
}

/// Capacity of the leftmost `x` fraction of the `n`-ary boundary, sampled
/// at `samples + 1` points; returns `{"points": [[x, lower, upper], …], "full"}`.
#[wasm_bindgen]
pub fn capacity_profile(n: u32, p: f64, depth: usize, samples: usize) -> Result<String, String> {
    let p = exponent(p)?;
    if depth > 16 {
        return Err("depth is capped at 16 in the browser".into());
    }
    let curve = capacity_curve(n, p, depth, samples).map_err(|e| e.to_string())?;
    let points: Vec<[f64; 3]> = curve.iter().map(|(x, c)| [*x, c.lower, c.upper]).collect();
    Ok(json!({ "points": points, "full": homogeneous_capacity(n, p) }).to_string())
}

/// Builds a subtree of the binary tree whose capacity is `c`.
#[wasm_bindgen]
pub fn subdyadic_tree(c: f64, p: f64, digits: usize) -> Result<String, String> {
    let r = subdyadic_tree_of_capacity(c, exponent(p)?, digits.min(60)).map_err(|e| e.to_string())?;
    serde_json::to_string(&r).map_err(|e| e.to_string())
}
