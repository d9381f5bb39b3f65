use crate::error::{param_err, Result};

/// Breakpoints `0 = y_0 < y_1 < … < y_M = Y` of a mesh of `(0, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    breakpoints: Vec<f64>,
}

impl Mesh1D {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return param_err("a 1D mesh needs at least two breakpoints");
        }
        if breakpoints[0] != 0.0 {
            return param_err("1D meshes start at 0");
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return param_err("breakpoints must be strictly increasing");
        }
        Ok(Self { breakpoints })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn num_elements(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn length(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Endpoints of element `i` (0-based).
    pub fn element(&self, i: usize) -> (f64, f64) {
        (self.breakpoints[i], self.breakpoints[i + 1])
    }
}

/// Geometric mesh of `(0, Y)` with `M` elements refined towards `y = 0`:
/// breakpoints `0` and `Y σ^(M-i)`, `i = 1..M`.
pub fn build_1d_geo_mesh(y_max: f64, m: usize, sigma: f64) -> Result<Mesh1D> {
    if !(y_max > 0.0) || !y_max.is_finite() {
        return param_err(format!("truncation length {y_max} must be positive"));
    }
    if m == 0 {
        return param_err("geometric mesh needs at least one element");
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return param_err(format!("grading factor {sigma} must lie in (0, 1)"));
    }
    let mut b = Vec::with_capacity(m + 1);
    b.push(0.0);
    for i in 1..=m {
        b.push(y_max * sigma.powi((m - i) as i32));
    }
    Mesh1D::new(b)
}

/// Polynomial degree per element of a 1D mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeVector(pub Vec<usize>);

impl DegreeVector {
    pub fn uniform(m: usize, r: usize) -> Result<Self> {
        if m == 0 || r == 0 {
            return param_err("degree vector needs M >= 1 and r >= 1");
        }
        Ok(Self(vec![r; m]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

/// `r_i = 1 + ceil(slope (i - 1))`, `i = 1..M`.
pub fn linear_degree_vector(m: usize, slope: f64) -> Result<DegreeVector> {
    if m == 0 {
        return param_err("degree vector needs M >= 1");
    }
    if !(slope > 0.0) || !slope.is_finite() {
        return param_err(format!("slope {slope} must be positive"));
    }
    // the tiny shift keeps e.g. 0.1 * 10 from rounding up to 2
    Ok(DegreeVector((0..m).map(|i| 1 + (slope * i as f64 - 1e-12).ceil().max(0.0) as usize).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geo_mesh_examples() {
        let m = build_1d_geo_mesh(1.0, 3, 0.25).unwrap();
        assert_eq!(m.breakpoints(), &[0.0, 1.0 / 16.0, 0.25, 1.0]);
        let m = build_1d_geo_mesh(1.0, 1, 0.5).unwrap();
        assert_eq!(m.breakpoints(), &[0.0, 1.0]);
        let m = build_1d_geo_mesh(2.0, 2, 0.25).unwrap();
        assert_eq!(m.breakpoints(), &[0.0, 0.5, 2.0]);
    }

    #[test]
    fn geo_mesh_rejects_bad_input() {
        assert!(build_1d_geo_mesh(1.0, 0, 0.5).is_err());
        assert!(build_1d_geo_mesh(1.0, 2, 1.0).is_err());
        assert!(build_1d_geo_mesh(1.0, 2, 0.0).is_err());
        assert!(build_1d_geo_mesh(-1.0, 2, 0.5).is_err());
    }

    #[test]
    fn degree_vectors() {
        assert_eq!(linear_degree_vector(4, 1.0).unwrap().0, vec![1, 2, 3, 4]);
        assert_eq!(linear_degree_vector(3, 0.5).unwrap().0, vec![1, 2, 2]);
        assert_eq!(linear_degree_vector(1, 7.3).unwrap().0, vec![1]);
        assert_eq!(linear_degree_vector(11, 0.1).unwrap().0[10], 2);
    }
}
