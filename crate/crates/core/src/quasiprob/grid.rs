use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridQuantity {
    P,
    Q,
    W,
    #[serde(rename = "chi-re")]
    ChiRe,
    #[serde(rename = "chi-im")]
    ChiIm,
}

impl GridQuantity {
    pub fn label(self) -> &'static str {
        match self {
            GridQuantity::P => "P",
            GridQuantity::Q => "Q",
            GridQuantity::W => "W",
            GridQuantity::ChiRe => "chi-re",
            GridQuantity::ChiIm => "chi-im",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub quantity: GridQuantity,
    /// Family or other provenance of the values.
    pub state: String,
    pub time: f64,
}

impl Default for GridMeta {
    fn default() -> Self {
        Self { quantity: GridQuantity::P, state: String::new(), time: 0.0 }
    }
}

/// Axis ranges and resolution of a rectangular grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::square(6.0, 61)
    }
}

impl GridSpec {
    /// [−half, half]² with `n` points per axis.
    pub fn square(half: f64, n: usize) -> Self {
        Self { x_min: -half, x_max: half, y_min: -half, y_max: half, nx: n, ny: n }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(invalid("grid", "needs at least 2 points per axis"));
        }
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(invalid("grid", "axis ranges must be finite with min < max"));
        }
        Ok(())
    }

    /// Zero-valued grid with these axes.
    pub fn build(&self, meta: GridMeta) -> Result<PhaseSpaceGrid> {
        self.validate()?;
        let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            let h = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| if i + 1 == n { hi } else { lo + h * i as f64 }).collect()
        };
        PhaseSpaceGrid::new(
            axis(self.x_min, self.x_max, self.nx),
            axis(self.y_min, self.y_max, self.ny),
            vec![0.0; self.nx * self.ny],
            meta,
        )
    }
}

/// Real field sampled on a uniform rectangular grid of α = x + iy.
///
/// `values[ix * ny + iy]` holds the sample at (x_axis[ix], y_axis[iy]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct PhaseSpaceGrid {
    pub x_axis: Vec<f64>,
    pub y_axis: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: GridMeta,
}

/// Serialized layout: one inner array per x value.
#[derive(Serialize, Deserialize)]
struct GridRepr {
    x_axis: Vec<f64>,
    y_axis: Vec<f64>,
    values: Vec<Vec<f64>>,
    meta: GridMeta,
}

impl From<PhaseSpaceGrid> for GridRepr {
    fn from(g: PhaseSpaceGrid) -> Self {
        let ny = g.y_axis.len().max(1);
        GridRepr {
            values: g.values.chunks(ny).map(|c| c.to_vec()).collect(),
            x_axis: g.x_axis,
            y_axis: g.y_axis,
            meta: g.meta,
        }
    }
}

impl TryFrom<GridRepr> for PhaseSpaceGrid {
    type Error = crate::error::Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        if r.values.len() != r.x_axis.len() || r.values.iter().any(|row| row.len() != r.y_axis.len()) {
            return Err(invalid("values", "shape does not match the axes"));
        }
        PhaseSpaceGrid::new(r.x_axis, r.y_axis, r.values.concat(), r.meta)
    }
}

fn check_axis(name: &'static str, axis: &[f64]) -> Result<()> {
    if axis.len() < 2 {
        return Err(invalid(name, "needs at least 2 points"));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(invalid(name, "non-finite coordinate"));
    }
    let h = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(invalid(name, "must be strictly increasing"));
    }
    for w in axis.windows(2) {
        let step = w[1] - w[0];
        if !(step > 0.0) {
            return Err(invalid(name, "must be strictly increasing"));
        }
        if (step - h).abs() > 1e-9 * h.max(1.0) {
            return Err(invalid(name, "spacing is not uniform"));
        }
    }
    Ok(())
}

/// Trapezoid weights of a uniform axis.
fn trapezoid(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    let h = (axis[n - 1] - axis[0]) / (n - 1) as f64;
    (0..n).map(|i| if i == 0 || i + 1 == n { 0.5 * h } else { h }).collect()
}

impl PhaseSpaceGrid {
    pub fn new(x_axis: Vec<f64>, y_axis: Vec<f64>, values: Vec<f64>, meta: GridMeta) -> Result<Self> {
        let g = Self { x_axis, y_axis, values, meta };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        check_axis("x_axis", &self.x_axis)?;
        check_axis("y_axis", &self.y_axis)?;
        if self.values.len() != self.x_axis.len() * self.y_axis.len() {
            return Err(invalid(
                "values",
                format!("expected {} samples, got {}", self.x_axis.len() * self.y_axis.len(), self.values.len()),
            ));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "non-finite sample"));
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        self.x_axis.len()
    }

    pub fn ny(&self) -> usize {
        self.y_axis.len()
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.ny() + iy]
    }

    /// Grid points in storage order.
    pub fn points(&self) -> Vec<Complex64> {
        self.x_axis
            .iter()
            .flat_map(|&x| self.y_axis.iter().map(move |&y| Complex64::new(x, y)))
            .collect()
    }

    /// Same axes and metadata, new samples.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        PhaseSpaceGrid::new(self.x_axis.clone(), self.y_axis.clone(), values, self.meta.clone())
    }

    /// Trapezoid rule for ∫ f(x, y)·value d²α.
    pub fn integrate_fn<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let wx = trapezoid(&self.x_axis);
        let wy = trapezoid(&self.y_axis);
        let ny = self.ny();
        let mut total = 0.0;
        for (ix, (&x, &ax)) in self.x_axis.iter().zip(&wx).enumerate() {
            let mut row = 0.0;
            for (iy, (&y, &ay)) in self.y_axis.iter().zip(&wy).enumerate() {
                row += ay * f(x, y) * self.values[ix * ny + iy];
            }
            total += ax * row;
        }
        total
    }

    pub fn integrate(&self) -> f64 {
        self.integrate_fn(|_, _| 1.0)
    }

    pub fn integrate_complex<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Complex64 {
        let wx = trapezoid(&self.x_axis);
        let wy = trapezoid(&self.y_axis);
        let ny = self.ny();
        let mut total = Complex64::new(0.0, 0.0);
        for (ix, (&x, &ax)) in self.x_axis.iter().zip(&wx).enumerate() {
            for (iy, (&y, &ay)) in self.y_axis.iter().zip(&wy).enumerate() {
                total += f(Complex64::new(x, y)) * (ax * ay * self.values[ix * ny + iy]);
            }
        }
        total
    }

    /// Bilinear interpolation; zero outside the grid.
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        let locate = |axis: &[f64], v: f64| -> Option<(usize, f64)> {
            let n = axis.len();
            if v < axis[0] || v > axis[n - 1] {
                return None;
            }
            let h = (axis[n - 1] - axis[0]) / (n - 1) as f64;
            let i = (((v - axis[0]) / h) as usize).min(n - 2);
            Some((i, ((v - axis[i]) / h).clamp(0.0, 1.0)))
        };
        let (Some((i, fx)), Some((j, fy))) = (locate(&self.x_axis, x), locate(&self.y_axis, y)) else {
            return 0.0;
        };
        let v = |a: usize, b: usize| self.value(a, b);
        (1.0 - fx) * ((1.0 - fy) * v(i, j) + fy * v(i, j + 1)) + fx * ((1.0 - fy) * v(i + 1, j) + fy * v(i + 1, j + 1))
    }

    pub fn max_abs_diff(&self, other: &PhaseSpaceGrid) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(crate::error::Error::DimensionMismatch {
                expected: self.values.len(),
                found: other.values.len(),
            });
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// CSV with header `re_alpha,im_alpha,value`, x index outer.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 48);
        s.push_str("re_alpha,im_alpha,value\n");
        for (ix, x) in self.x_axis.iter().enumerate() {
            for (iy, y) in self.y_axis.iter().enumerate() {
                s.push_str(&format!("{x},{y},{}\n", self.value(ix, iy)));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian_grid() -> PhaseSpaceGrid {
        let g = GridSpec::default().build(GridMeta::default()).unwrap();
        let v = g.points().iter().map(|a| (-a.norm_sqr()).exp() / PI).collect();
        g.with_values(v).unwrap()
    }

    #[test]
    fn default_axes() {
        let g = GridSpec::default().build(GridMeta::default()).unwrap();
        assert_eq!(g.nx(), 61);
        assert_eq!(g.x_axis[0], -6.0);
        assert_eq!(g.x_axis[60], 6.0);
        assert!((g.x_axis[30]).abs() < 1e-15);
    }

    #[test]
    fn trapezoid_gaussian_moments() {
        let g = gaussian_grid();
        assert!((g.integrate() - 1.0).abs() < 1e-12);
        let m = g.integrate_complex(|a| a.norm_sqr().into());
        assert!((m.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_is_exact_for_bilinear() {
        let g = GridSpec::square(1.0, 5).build(GridMeta::default()).unwrap();
        let v = g.points().iter().map(|a| 2.0 * a.re - a.im + 3.0 * a.re * a.im).collect();
        let g = g.with_values(v).unwrap();
        let (x, y) = (0.3, -0.7);
        assert!((g.interpolate(x, y) - (2.0 * x - y + 3.0 * x * y)).abs() < 1e-14);
        assert_eq!(g.interpolate(1.5, 0.0), 0.0);
    }

    #[test]
    fn rejects_bad_axes() {
        let meta = GridMeta::default();
        assert!(PhaseSpaceGrid::new(vec![0.0, 1.0, 3.0], vec![0.0, 1.0], vec![0.0; 6], meta.clone()).is_err());
        assert!(PhaseSpaceGrid::new(vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0; 4], meta.clone()).is_err());
        assert!(PhaseSpaceGrid::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0; 3], meta.clone()).is_err());
        assert!(PhaseSpaceGrid::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![f64::NAN; 4], meta).is_err());
    }

    #[test]
    fn json_round_trip_nests_rows() {
        let g = GridSpec::square(1.0, 3).build(GridMeta { quantity: GridQuantity::Q, ..Default::default() }).unwrap();
        let g = g.with_values((0..9).map(|i| i as f64).collect()).unwrap();
        let json = serde_json::to_value(&g).unwrap();
        assert_eq!(json["values"][1], serde_json::json!([3.0, 4.0, 5.0]));
        assert_eq!(json["meta"]["quantity"], "Q");
        let back: PhaseSpaceGrid = serde_json::from_value(json).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn csv_layout() {
        let g = GridSpec::square(1.0, 2).build(GridMeta::default()).unwrap();
        let g = g.with_values(vec![0.0, 1.0, 2.0, 3.5]).unwrap();
        assert_eq!(g.to_csv(), "re_alpha,im_alpha,value\n-1,-1,0\n-1,1,1\n1,-1,2\n1,1,3.5\n");
    }
}
