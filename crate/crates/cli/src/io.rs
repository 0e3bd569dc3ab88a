//! Text formats: `pl:` literals for piecewise-linear functions, `grid:@`
//! CSV weights, and report serialization helpers.

use std::fmt::Write as _;
use std::path::Path;

use rearrange_core::pl::PiecewiseLinear;
use rearrange_core::weight::Weight;

/// Parses `pl:x0:y0,x1:y1,...` with strictly increasing x, x0 = -1,
/// x_last = 1.
pub fn parse_pl(text: &str) -> Result<PiecewiseLinear, String> {
    let body = text
        .strip_prefix("pl:")
        .ok_or_else(|| "expected a `pl:x0:y0,x1:y1,...` literal".to_string())?;
    let mut points = Vec::new();
    for (i, pair) in body.split(',').enumerate() {
        let (x, y) = pair
            .split_once(':')
            .ok_or_else(|| format!("point {i}: expected `x:y`, got `{pair}`"))?;
        let x: f64 = x.trim().parse().map_err(|e| format!("point {i}: bad x: {e}"))?;
        let y: f64 = y.trim().parse().map_err(|e| format!("point {i}: bad y: {e}"))?;
        points.push((x, y));
    }
    if points.len() < 2 {
        return Err("need at least two points".into());
    }
    if points[0].0 != -1.0 || points.last().unwrap().0 != 1.0 {
        return Err("pl literals must span exactly [-1, 1]".into());
    }
    PiecewiseLinear::from_points(&points).map_err(|e| e.to_string())
}

/// The inverse of [`parse_pl`]; `parse_pl(format_pl(u))` reproduces `u`
/// exactly (shortest round-trip float formatting).
pub fn format_pl(u: &PiecewiseLinear) -> String {
    let mut out = String::from("pl:");
    for (i, (&x, &y)) in u.xs().iter().zip(u.ys()).enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{x}:{y}");
    }
    out
}

/// Parses a weight: either an expression in `x` and `v`, or `grid:@file.csv`
/// (header row = x-nodes on the uniform grid, first column = v-samples,
/// bilinear cells).
pub fn parse_weight(text: &str, v_range: (f64, f64)) -> Result<Weight, String> {
    if let Some(path) = text.strip_prefix("grid:@") {
        return load_grid_weight(Path::new(path));
    }
    Weight::parse(text, v_range).map_err(|e| e.to_string())
}

fn load_grid_weight(path: &Path) -> Result<Weight, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty grid file")?;
    let nodes: Vec<f64> = header
        .split(',')
        .skip(1)
        .map(|c| c.trim().parse().map_err(|e| format!("bad x-node `{c}`: {e}")))
        .collect::<Result<_, _>>()?;
    if nodes.len() < 3 {
        return Err("grid needs at least 3 x-nodes".into());
    }
    let k = nodes.len() - 1;
    for (i, &x) in nodes.iter().enumerate() {
        let expect = -1.0 + 2.0 * (i as f64) / (k as f64);
        if (x - expect).abs() > 1e-9 {
            return Err(format!("x-nodes must be uniform on [-1, 1]; node {i} is {x}, expected {expect}"));
        }
    }
    let mut v_samples = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        let mut cells = line.split(',');
        let v: f64 = cells
            .next()
            .unwrap()
            .trim()
            .parse()
            .map_err(|e| format!("bad v-sample: {e}"))?;
        let row: Vec<f64> = cells
            .map(|c| c.trim().parse().map_err(|e| format!("bad cell `{c}`: {e}")))
            .collect::<Result<_, _>>()?;
        if row.len() != k + 1 {
            return Err(format!("row for v = {v} has {} cells, expected {}", row.len(), k + 1));
        }
        v_samples.push(v);
        values.push(row);
    }
    Weight::from_grid(k, v_samples, values).map_err(|e| e.to_string())
}

/// Writes `(x, u, rearranged)` sample columns for external plotting.
pub fn plot_csv(u: &PiecewiseLinear, rearranged: &PiecewiseLinear, label: &str) -> String {
    let mut out = format!("x,u,{label}\n");
    // sample at both functions' breakpoints for exact polylines
    let mut xs: Vec<f64> = u.xs().iter().chain(rearranged.xs()).copied().collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    for x in xs {
        let _ = writeln!(out, "{x},{},{}", u.eval(x), rearranged.eval(x));
    }
    out
}

/// Flattens a JSON report into `key,value` CSV rows (same payload, stable
/// order), nesting with dots.
pub fn json_to_csv(value: &serde_json::Value) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in json_to_pairs(value) {
        let v = if v.contains(',') || v.contains('"') {
            format!("\"{}\"", v.replace('"', "\"\""))
        } else {
            v
        };
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

/// Flattened `key -> scalar` view of a report, dotted paths for nesting.
pub fn json_to_pairs(value: &serde_json::Value) -> Vec<(String, String)> {
    let mut rows = Vec::new();
    flatten("", value, &mut rows);
    rows
}

fn flatten(prefix: &str, value: &serde_json::Value, rows: &mut Vec<(String, String)>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, rows);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), v, rows);
            }
        }
        other => rows.push((prefix.to_string(), scalar_string(other))),
    }
}

fn scalar_string(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
