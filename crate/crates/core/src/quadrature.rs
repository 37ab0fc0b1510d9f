//! Adaptive tensor-product Gauss-Legendre cubature on rectangles.

use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

const RULE_POINTS: usize = 12;
const MAX_RECTANGLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Absolute tolerance on the integral.
    pub tolerance: f64,
    pub max_depth: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_depth: 12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    fn split(&self) -> [Rect; 4] {
        let xm = 0.5 * (self.x0 + self.x1);
        let ym = 0.5 * (self.y0 + self.y1);
        [
            Rect { x0: self.x0, x1: xm, y0: self.y0, y1: ym },
            Rect { x0: xm, x1: self.x1, y0: self.y0, y1: ym },
            Rect { x0: self.x0, x1: xm, y0: ym, y1: self.y1 },
            Rect { x0: xm, x1: self.x1, y0: ym, y1: self.y1 },
        ]
    }

    /// Intersection, or `None` when empty.
    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let r = Rect {
            x0: self.x0.max(other.x0),
            x1: self.x1.min(other.x1),
            y0: self.y0.max(other.y0),
            y1: self.y1.min(other.y1),
        };
        (r.x0 < r.x1 && r.y0 < r.y1).then_some(r)
    }
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let gl = GaussLegendre::new(NonZeroUsize::new(RULE_POINTS).unwrap());
        (gl.nodes().copied().collect(), gl.weights().copied().collect())
    })
}

fn tensor_rule<F: Fn(f64, f64) -> f64>(f: &F, r: &Rect) -> f64 {
    let (nodes, weights) = rule();
    let hx = 0.5 * (r.x1 - r.x0);
    let hy = 0.5 * (r.y1 - r.y0);
    let cx = 0.5 * (r.x0 + r.x1);
    let cy = 0.5 * (r.y0 + r.y1);
    let mut sum = 0.0;
    for (xi, wx) in nodes.iter().zip(weights) {
        let x = cx + hx * xi;
        let mut row = 0.0;
        for (yi, wy) in nodes.iter().zip(weights) {
            row += wy * f(x, cy + hy * yi);
        }
        sum += wx * row;
    }
    sum * hx * hy
}

/// Integrates `f` over `domain`, bisecting rectangles whose one-level
/// refinement changes the estimate by more than their share of the tolerance.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(f: F, domain: Rect, opts: &QuadratureOptions) -> Integral {
    let total_area = domain.area();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut stack = vec![(domain, tensor_rule(&f, &domain), 0u32)];
    let mut processed = 0usize;
    while let Some((rect, coarse, depth)) = stack.pop() {
        processed += 1;
        let children = rect.split();
        let estimates = children.map(|c| tensor_rule(&f, &c));
        let fine: f64 = estimates.iter().sum();
        let err = (fine - coarse).abs();
        let share = opts.tolerance * rect.area() / total_area;
        if err <= share || depth >= opts.max_depth || processed + stack.len() >= MAX_RECTANGLES {
            value += fine;
            error += err;
        } else {
            for (c, e) in children.into_iter().zip(estimates) {
                stack.push((c, e, depth + 1));
            }
        }
    }
    Integral { value, error_estimate: error }
}
