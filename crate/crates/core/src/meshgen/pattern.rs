use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{param_err, Result};

use super::domain::Point;

/// A reference quadrilateral in the unit square, corners counterclockwise.
pub type RefQuad = [Point; 4];

/// Refinement patterns of a macro patch, in reference coordinates where the
/// singular corner is the origin and the boundary edge is `ŷ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pattern {
    /// Not refined.
    Trivial,
    /// `layers` anisotropic layers towards `ŷ = 0`.
    BoundaryLayer { layers: usize },
    /// `levels` isotropic rings towards the origin.
    Corner { levels: usize },
    /// `layers` tensor layers towards both `x̂ = 0` and `ŷ = 0`, and corner
    /// rings inside `(0, σ^layers)²` down to `σ^levels`.
    Tensor { layers: usize, levels: usize },
    /// Boundary layer along `ŷ = 0` ending at a vertex in the origin;
    /// realised by the tensor pattern.
    Mixed { layers: usize, levels: usize },
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Trivial => write!(f, "trivial"),
            Pattern::BoundaryLayer { layers } => write!(f, "bl({layers})"),
            Pattern::Corner { levels } => write!(f, "corner({levels})"),
            Pattern::Tensor { layers, levels } => write!(f, "tensor({layers},{levels})"),
            Pattern::Mixed { layers, levels } => write!(f, "mixed({layers},{levels})"),
        }
    }
}

impl Pattern {
    /// Element count of the unclosed pattern.
    pub fn element_count(&self) -> usize {
        match *self {
            Pattern::Trivial => 1,
            Pattern::BoundaryLayer { layers } => layers + 1,
            Pattern::Corner { levels } => 2 * levels + 1,
            Pattern::Tensor { layers, levels } | Pattern::Mixed { layers, levels } => {
                (layers + 1) * (layers + 1) - 1 + 2 * (levels - layers) + 1
            }
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            Pattern::Tensor { layers, levels } | Pattern::Mixed { layers, levels } if levels < layers => {
                param_err(format!("pattern {self}: corner levels must be >= layers"))
            }
            _ => Ok(()),
        }
    }
}

/// Geometric breakpoints `0, σ^m, …, σ, 1`.
pub(crate) fn geometric_breaks(m: usize, sigma: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    b.extend((0..=m).rev().map(|i| sigma.powi(i as i32)));
    b
}

pub(crate) fn grid_quads(xs: &[f64], ys: &[f64]) -> Vec<RefQuad> {
    let mut out = Vec::with_capacity((xs.len() - 1) * (ys.len() - 1));
    for j in 0..ys.len() - 1 {
        for i in 0..xs.len() - 1 {
            out.push([[xs[i], ys[j]], [xs[i + 1], ys[j]], [xs[i + 1], ys[j + 1]], [xs[i], ys[j + 1]]]);
        }
    }
    out
}

/// Rings between the squares `(0, h σ^i)²` and `(0, h σ^(i-1))²`, each cut
/// along the diagonal into two trapezoids, plus the innermost square.
fn corner_quads(levels: usize, sigma: f64, h: f64) -> Vec<RefQuad> {
    let mut out = Vec::with_capacity(2 * levels + 1);
    for i in 1..=levels {
        let a = h * sigma.powi(i as i32);
        let b = h * sigma.powi(i as i32 - 1);
        out.push([[a, 0.0], [b, 0.0], [b, b], [a, a]]);
        out.push([[a, a], [b, b], [0.0, b], [0.0, a]]);
    }
    let c = h * sigma.powi(levels as i32);
    out.push([[0.0, 0.0], [c, 0.0], [c, c], [0.0, c]]);
    out
}

/// Reference mesh of the unit square for `pattern`.
///
/// The corner pattern uses trapezoidal rings instead of the triangles of
/// the classical construction; splitting each ring into rectangles would
/// leave a hanging node on every inner ring boundary.
pub fn refine_pattern(pattern: Pattern, sigma: f64) -> Result<Vec<RefQuad>> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return param_err(format!("grading factor {sigma} must lie in (0, 1)"));
    }
    pattern.validate()?;
    Ok(match pattern {
        Pattern::Trivial => grid_quads(&[0.0, 1.0], &[0.0, 1.0]),
        Pattern::BoundaryLayer { layers } => grid_quads(&[0.0, 1.0], &geometric_breaks(layers, sigma)),
        Pattern::Corner { levels } => corner_quads(levels, sigma, 1.0),
        Pattern::Tensor { layers, levels } | Pattern::Mixed { layers, levels } => {
            let b = geometric_breaks(layers, sigma);
            let mut out = Vec::new();
            for q in grid_quads(&b, &b) {
                // the cell at the origin is replaced by the corner rings
                if q[0] != [0.0, 0.0] {
                    out.push(q);
                }
            }
            out.extend(corner_quads(levels - layers, sigma, sigma.powi(layers as i32)));
            out
        }
    })
}

#[cfg(test)]
pub(crate) fn ref_area(q: &RefQuad) -> f64 {
    let mut a = 0.0;
    for k in 0..4 {
        let p = q[k];
        let r = q[(k + 1) % 4];
        a += p[0] * r[1] - p[1] * r[0];
    }
    0.5 * a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total_area(q: &[RefQuad]) -> f64 {
        q.iter().map(ref_area).sum()
    }

    #[test]
    fn small_patterns() {
        let bl = refine_pattern(Pattern::BoundaryLayer { layers: 1 }, 0.5).unwrap();
        assert_eq!(bl.len(), 2);
        assert_eq!(bl[0][2][1], 0.5);
        let c = refine_pattern(Pattern::Corner { levels: 1 }, 0.5).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c[2], [[0.0, 0.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]);
        let t = refine_pattern(Pattern::Trivial, 0.5).unwrap();
        assert_eq!(t, vec![[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]]);
    }

    #[test]
    fn counts_match_formula_and_tile_the_square() {
        for sigma in [0.25, 0.5] {
            for l in 0..=6 {
                for n in l..=6 {
                    for p in [
                        Pattern::BoundaryLayer { layers: l },
                        Pattern::Corner { levels: n },
                        Pattern::Tensor { layers: l, levels: n },
                    ] {
                        let q = refine_pattern(p, sigma).unwrap();
                        assert_eq!(q.len(), p.element_count(), "{p}");
                        assert!((total_area(&q) - 1.0).abs() < 1e-14, "{p}");
                        assert!(q.iter().all(|e| ref_area(e) > 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_needs_levels_at_least_layers() {
        assert!(refine_pattern(Pattern::Tensor { layers: 3, levels: 2 }, 0.5).is_err());
    }
}
