//! Structural checks of input files, reported with JSON-pointer paths.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use uot_core::manifold::{Grid, Space};

use crate::report::parse_num;

/// Tolerance for points lying on their manifold.
pub const POINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub pointer: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Measure,
    Density,
    Map,
    Potential,
}

#[derive(Default)]
struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn fail(&mut self, pointer: impl Into<String>, message: impl Into<String>) {
        self.out.push(Violation { pointer: pointer.into(), message: message.into() });
    }

    fn array<'v>(&mut self, root: &'v Value, key: &str) -> Option<&'v Vec<Value>> {
        match root.get(key) {
            Some(Value::Array(a)) => Some(a),
            Some(_) => {
                self.fail(format!("/{key}"), "expected an array");
                None
            }
            None => {
                self.fail(format!("/{key}"), "missing");
                None
            }
        }
    }

    /// Numbers at `pointer/k`; `accept` returns an error message for bad values.
    fn numbers(&mut self, pointer: &str, items: &[Value], accept: impl Fn(f64) -> Option<&'static str>) -> Vec<f64> {
        let mut out = Vec::with_capacity(items.len());
        for (k, item) in items.iter().enumerate() {
            match parse_num(item) {
                Some(x) => {
                    if let Some(msg) = accept(x) {
                        self.fail(format!("{pointer}/{k}"), msg);
                    }
                    out.push(x);
                }
                None => {
                    self.fail(format!("{pointer}/{k}"), "expected a number");
                    out.push(f64::NAN);
                }
            }
        }
        out
    }

    fn space(&mut self, root: &Value) -> Option<Space> {
        let Some(v) = root.get("space") else {
            self.fail("/space", "missing");
            return None;
        };
        match serde_json::from_value::<Space>(v.clone()) {
            Ok(s) => match s.validate() {
                Ok(()) => Some(s),
                Err(e) => {
                    self.fail("/space", e.to_string());
                    None
                }
            },
            Err(e) => {
                self.fail("/space", format!("not a space: {e}"));
                None
            }
        }
    }

    fn grid(&mut self, root: &Value, n: usize) -> Option<Grid> {
        match root.get("grid") {
            None => Some(Grid::circle(n)),
            Some(v) => match serde_json::from_value::<Grid>(v.clone()) {
                Ok(g) => {
                    if let Err(e) = g.validate() {
                        self.fail("/grid", e.to_string());
                        return None;
                    }
                    if g.n != n {
                        self.fail("/grid/n", format!("grid has {} nodes but {n} values are given", g.n));
                    }
                    Some(g)
                }
                Err(e) => {
                    self.fail("/grid", format!("not a grid: {e}"));
                    None
                }
            },
        }
    }
}

fn finite(x: f64) -> Option<&'static str> {
    (!x.is_finite()).then_some("must be finite")
}

fn nonnegative(x: f64) -> Option<&'static str> {
    finite(x).or((x < 0.0).then_some("must be nonnegative"))
}

fn positive(x: f64) -> Option<&'static str> {
    finite(x).or((x <= 0.0).then_some("must be positive"))
}

fn root_object(c: &mut Checker, root: &Value) -> bool {
    if !root.is_object() {
        c.fail("", "expected a JSON object");
        return false;
    }
    true
}

/// `{"space": ..., "points": [[...], ...], "masses": [...]}`.
pub fn check_measure(root: &Value) -> Vec<Violation> {
    let mut c = Checker::default();
    if !root_object(&mut c, root) {
        return c.out;
    }
    let space = c.space(root);
    let points = c.array(root, "points");
    let masses = c.array(root, "masses");
    if let Some(masses) = masses {
        c.numbers("/masses", masses, nonnegative);
    }
    if let Some(points) = points {
        for (k, p) in points.iter().enumerate() {
            let ptr = format!("/points/{k}");
            let Value::Array(items) = p else {
                c.fail(ptr, "expected a coordinate array");
                continue;
            };
            let coords = c.numbers(&ptr, items, finite);
            if let Some(space) = space {
                if coords.len() != space.coord_len() {
                    c.fail(ptr, format!("expected {} coordinates, got {}", space.coord_len(), coords.len()));
                } else if coords.iter().all(|x| x.is_finite()) {
                    if let Err(e) = space.check_point_with(&coords, POINT_TOL) {
                        c.fail(ptr, e.to_string());
                    }
                }
            }
        }
        if let Some(masses) = masses {
            if masses.len() != points.len() {
                c.fail("/masses", format!("{} masses for {} points", masses.len(), points.len()));
            }
        }
    }
    c.out
}

/// `{"values": [...]}` on the uniform circle grid, or with an explicit `"grid"`.
pub fn check_density(root: &Value) -> Vec<Violation> {
    let mut c = Checker::default();
    if !root_object(&mut c, root) {
        return c.out;
    }
    if let Some(values) = c.array(root, "values") {
        c.numbers("/values", values, nonnegative);
        if values.is_empty() {
            c.fail("/values", "must not be empty");
        } else {
            c.grid(root, values.len());
        }
    }
    c.out
}

/// `{"phi": [...], "lam": [...]}` over a uniform circle grid.
pub fn check_map(root: &Value) -> Vec<Violation> {
    let mut c = Checker::default();
    if !root_object(&mut c, root) {
        return c.out;
    }
    let phi = c.array(root, "phi");
    let lam = c.array(root, "lam");
    if let Some(phi) = phi {
        c.numbers("/phi", phi, finite);
    }
    if let Some(lam) = lam {
        c.numbers("/lam", lam, positive);
    }
    if let (Some(phi), Some(lam)) = (phi, lam) {
        if phi.len() != lam.len() {
            c.fail("/lam", format!("{} values of lam for {} values of phi", lam.len(), phi.len()));
        } else if phi.is_empty() {
            c.fail("/phi", "must not be empty");
        } else {
            c.grid(root, phi.len());
        }
    }
    c.out
}

/// A bare array of nodal values, `{"z": [...]}`, or `{"points": [...], "z": [...]}`
/// with circle angles.
pub fn check_potential(root: &Value) -> Vec<Violation> {
    let mut c = Checker::default();
    match root {
        Value::Array(items) => {
            c.numbers("", items, finite);
        }
        Value::Object(_) => {
            let z = c.array(root, "z");
            if let Some(z) = z {
                c.numbers("/z", z, finite);
            }
            if let Some(Value::Array(points)) = root.get("points") {
                for (k, p) in points.iter().enumerate() {
                    let angle = match p {
                        Value::Array(a) if a.len() == 1 => parse_num(&a[0]),
                        other => parse_num(other),
                    };
                    if !angle.is_some_and(f64::is_finite) {
                        c.fail(format!("/points/{k}"), "expected a finite angle");
                    }
                }
                if z.is_some_and(|z| z.len() != points.len()) {
                    c.fail("/z", "length differs from /points");
                }
            } else if root.get("points").is_some() {
                c.fail("/points", "expected an array");
            }
        }
        _ => c.fail("", "expected an array or an object"),
    }
    c.out
}

pub fn check(kind: InputKind, root: &Value) -> Vec<Violation> {
    match kind {
        InputKind::Measure => check_measure(root),
        InputKind::Density => check_density(root),
        InputKind::Map => check_map(root),
        InputKind::Potential => check_potential(root),
    }
}

/// Guess the kind of an input file from its keys.
pub fn detect(root: &Value) -> Option<InputKind> {
    if root.is_array() {
        return Some(InputKind::Potential);
    }
    let has = |k: &str| root.get(k).is_some();
    if has("masses") {
        Some(InputKind::Measure)
    } else if has("phi") {
        Some(InputKind::Map)
    } else if has("values") {
        Some(InputKind::Density)
    } else if has("z") {
        Some(InputKind::Potential)
    } else {
        None
    }
}
