//! Loading of validated input files.

use std::path::Path;

use serde_json::Value;
use uot_core::entropy::DiscreteMeasure;
use uot_core::manifold::{wrap_angle, wrap_signed, Grid, GridDensity};
use uot_core::polar::GeneralizedAutomorphism;

use crate::error::CliError;
use crate::report::parse_num;
use crate::schema::{self, InputKind};

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema {
        path: path.display().to_string(),
        violations: vec![schema::Violation { pointer: String::new(), message: format!("invalid JSON: {e}") }],
    })
}

fn validated(path: &Path, kind: InputKind) -> Result<Value, CliError> {
    let root = read_json(path)?;
    let violations = schema::check(kind, &root);
    if violations.is_empty() {
        Ok(root)
    } else {
        Err(CliError::Schema { path: path.display().to_string(), violations })
    }
}

fn numbers(v: &Value) -> Vec<f64> {
    v.as_array().map(|a| a.iter().filter_map(parse_num).collect()).unwrap_or_default()
}

fn grid_of(root: &Value, n: usize) -> Result<Grid, CliError> {
    match root.get("grid") {
        None => Ok(Grid::circle(n)),
        Some(g) => serde_json::from_value(g.clone()).map_err(|e| CliError::Io(e.to_string())),
    }
}

pub fn load_measure(path: &Path) -> Result<DiscreteMeasure, CliError> {
    let root = validated(path, InputKind::Measure)?;
    serde_json::from_value(root).map_err(|e| CliError::Schema {
        path: path.display().to_string(),
        violations: vec![schema::Violation { pointer: String::new(), message: e.to_string() }],
    })
}

pub fn load_density(path: &Path) -> Result<GridDensity, CliError> {
    let root = validated(path, InputKind::Density)?;
    let values = numbers(&root["values"]);
    let grid = grid_of(&root, values.len())?;
    Ok(GridDensity::new(grid, values)?)
}

pub fn load_map(path: &Path) -> Result<GeneralizedAutomorphism, CliError> {
    let root = validated(path, InputKind::Map)?;
    let phi = numbers(&root["phi"]);
    let lam = numbers(&root["lam"]);
    let grid = grid_of(&root, phi.len())?;
    Ok(GeneralizedAutomorphism::new(grid, phi, lam)?)
}

/// Nodal values of a potential on `grid`.
///
/// Potentials given on scattered circle points (for instance a solver's
/// support) are resampled by nearest-node injection: every grid node takes
/// the value of the closest point.
pub fn load_potential(path: &Path, grid: &Grid) -> Result<Vec<f64>, CliError> {
    let root = validated(path, InputKind::Potential)?;
    let (z, points) = match &root {
        Value::Array(_) => (numbers(&root), None),
        _ => (numbers(&root["z"]), root.get("points")),
    };
    let Some(Value::Array(points)) = points else {
        if z.len() != grid.n {
            return Err(CliError::Io(format!("potential has {} values but the grid has {} nodes", z.len(), grid.n)));
        }
        return Ok(z);
    };
    if !grid.is_periodic() {
        return Err(CliError::Io("scattered potentials are only resampled on the circle".into()));
    }
    let angles: Vec<f64> = points
        .iter()
        .map(|p| match p {
            Value::Array(a) => parse_num(&a[0]).unwrap_or(f64::NAN),
            other => parse_num(other).unwrap_or(f64::NAN),
        })
        .map(wrap_angle)
        .collect();
    if angles.is_empty() {
        return Err(CliError::Io("potential has no points".into()));
    }
    Ok((0..grid.n)
        .map(|i| {
            let x = grid.node(i);
            let nearest = (0..angles.len())
                .min_by(|&a, &b| wrap_signed(angles[a] - x).abs().total_cmp(&wrap_signed(angles[b] - x).abs()))
                .unwrap_or(0);
            z[nearest]
        })
        .collect())
}
