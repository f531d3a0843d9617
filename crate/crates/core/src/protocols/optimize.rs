//! Grids, bracketing searches and golden-section refinement.

use rayon::prelude::*;

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// `points` values from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub scale: Scale,
}

impl Grid {
    pub fn linear(min: f64, max: f64, points: usize) -> Result<Self> {
        Grid { min, max, points, scale: Scale::Linear }.validated()
    }

    pub fn log(min: f64, max: f64, points: usize) -> Result<Self> {
        Grid { min, max, points, scale: Scale::Log }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !self.min.is_finite() || !self.max.is_finite() || self.max < self.min {
            return Err(Error::invalid("grid", format!("needs finite min ≤ max (got {}, {})", self.min, self.max)));
        }
        if self.points == 0 || (self.points == 1 && self.min != self.max) {
            return Err(Error::invalid("grid", "needs at least two points for a non-degenerate range"));
        }
        if self.scale == Scale::Log && !(self.min > 0.0) {
            return Err(Error::invalid("grid", "log scale needs a positive minimum"));
        }
        Ok(self)
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / n;
                let v = match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * t,
                    Scale::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * t).exp(),
                };
                if i + 1 == self.points {
                    self.max
                } else {
                    v
                }
            })
            .collect()
    }

    /// Cell bracketing grid index `i`, in grid coordinates.
    pub fn bracket(&self, i: usize) -> (f64, f64) {
        let v = self.values();
        let lo = v[i.saturating_sub(1)];
        let hi = v[(i + 1).min(v.len() - 1)];
        (lo, hi)
    }
}

/// Settings shared by the grid optimizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub points: usize,
    /// Relative bracket width at which golden-section refinement stops.
    pub rel_tol: f64,
    /// Coordinate-descent sweeps after the grid search.
    pub rounds: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions { points: 201, rel_tol: 1e-6, rounds: 4 }
    }
}

/// Evaluates `f` over `xs` on the rayon pool, results in input order.
pub fn par_map<T, U, F>(xs: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    xs.par_iter().map(f).collect()
}

/// Minimizes `f` on `[lo, hi]`; stops when the bracket is narrower than
/// `rel_tol·max(|x|, hi − lo)` or after 200 iterations.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= rel_tol * mid.abs().max(hi - lo) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let (fa, fb) = (f(lo), f(hi));
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for cand in [(lo, fa), (hi, fb)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    best
}

/// Locates the switch of a predicate that is `true` at `lo` and `false` at
/// `hi`, to absolute width `tol`. Returns the final `(lo, hi)` bracket.
pub fn bisect_boundary<F: FnMut(f64) -> bool>(mut pred: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)> {
    let (mut a, mut b) = (lo, hi);
    if !pred(a) || pred(b) {
        return Err(Error::Numerical(format!("no switch of the predicate inside [{lo}, {hi}]")));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if pred(m) {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((a, b))
}

/// Grid argmin (ignoring non-finite values) of a 2-D table laid out row-major
/// over `n_x × n_y`.
pub fn argmin2(values: &[f64], n_y: usize) -> Option<(usize, usize, f64)> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, &v)| (k / n_y, k % n_y, v))
}

/// Grid search over `xs × ys` followed by alternating golden-section sweeps
/// inside the neighbouring cells. `f` returns `+∞` for infeasible points.
pub fn minimize2<F>(f: F, xs: &[f64], ys: &[f64], opts: &OptimizeOptions) -> Result<Optimum2>
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    let pts: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let vals = par_map(&pts, |&(x, y)| f(x, y));
    let (i, j, v) = argmin2(&vals, ys.len()).ok_or_else(|| Error::Numerical("no feasible grid point".into()))?;
    let grid_best = (xs[i], ys[j], v);
    let (xlo, xhi) = (xs[i.saturating_sub(1)], xs[(i + 1).min(xs.len() - 1)]);
    let (ylo, yhi) = (ys[j.saturating_sub(1)], ys[(j + 1).min(ys.len() - 1)]);
    let (mut x, mut y, mut best) = grid_best;
    for _ in 0..opts.rounds {
        if xhi > xlo {
            let (nx, fx) = golden_section(|t| f(t, y), xlo, xhi, opts.rel_tol);
            if fx <= best {
                x = nx;
                best = fx;
            }
        }
        if yhi > ylo {
            let (ny, fy) = golden_section(|t| f(x, t), ylo, yhi, opts.rel_tol);
            if fy <= best {
                y = ny;
                best = fy;
            }
        }
    }
    Ok(Optimum2 { x, y, value: best, grid_best, grid_index: (i, j) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum2 {
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub grid_best: (f64, f64, f64),
    pub grid_index: (usize, usize),
}
