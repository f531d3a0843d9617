//! Adaptive Gauss–Kronrod (10/21-point) integration of vector-valued
//! integrands on a list of panels.

use rayon::prelude::*;

use crate::error::{Error, Result};

// Kronrod abscissae; odd entries are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208665780640,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Accepted `|K21 − G10|` (max over components) per panel.
    pub abs_tol: f64,
    pub max_depth: u32,
    /// Evaluate top-level panels on the rayon pool.
    pub parallel: bool,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-10, max_depth: 50, parallel: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<const N: usize> {
    pub value: [f64; N],
    /// Sum of accepted panel error estimates.
    pub error: f64,
    pub evaluations: usize,
    pub panels: usize,
}

/// One 21-point Kronrod sum on `[a, b]` and the embedded Gauss estimate.
pub fn gk21<const N: usize, F>(f: &F, a: f64, b: f64) -> ([f64; N], f64)
where
    F: Fn(f64) -> [f64; N],
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    let fc = f(c);
    for i in 0..N {
        k[i] = WGK[10] * fc[i];
    }
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for i in 0..N {
            let s = f1[i] + f2[i];
            k[i] += WGK[j] * s;
            if j % 2 == 1 {
                g[i] += WG[j / 2] * s;
            }
        }
    }
    let mut err = 0.0f64;
    for i in 0..N {
        k[i] *= h;
        err = err.max((k[i] - g[i] * h).abs());
    }
    (k, err)
}

struct Panel<const N: usize> {
    value: [f64; N],
    error: f64,
    evals: usize,
    panels: usize,
    failed: Option<(f64, f64, f64)>,
}

fn adapt<const N: usize, F>(f: &F, a: f64, b: f64, opts: &QuadOptions, depth: u32) -> Panel<N>
where
    F: Fn(f64) -> [f64; N],
{
    let (value, error) = gk21(f, a, b);
    let mid = 0.5 * (a + b);
    let splittable = mid > a && mid < b;
    if error <= opts.abs_tol || depth >= opts.max_depth || !splittable {
        let failed = (error > opts.abs_tol).then_some((a, b, error));
        return Panel { value, error, evals: 21, panels: 1, failed };
    }
    let l = adapt(f, a, mid, opts, depth + 1);
    let r = adapt(f, mid, b, opts, depth + 1);
    let mut v = l.value;
    for i in 0..N {
        v[i] += r.value[i];
    }
    Panel {
        value: v,
        error: l.error + r.error,
        evals: 21 + l.evals + r.evals,
        panels: l.panels + r.panels,
        failed: l.failed.or(r.failed),
    }
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, refining each interval
/// between consecutive break points independently. Results are summed in
/// break-point order, so the output does not depend on scheduling.
pub fn integrate_panels<const N: usize, F>(f: &F, breaks: &[f64], opts: &QuadOptions) -> Result<QuadResult<N>>
where
    F: Fn(f64) -> [f64; N] + Sync,
{
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("breakpoints", "must be strictly increasing with at least two entries"));
    }
    let run = |w: &[f64]| adapt(f, w[0], w[1], opts, 0);
    let parts: Vec<Panel<N>> = if opts.parallel {
        breaks.par_windows(2).map(run).collect()
    } else {
        breaks.windows(2).map(run).collect()
    };
    let mut out = QuadResult { value: [0.0; N], error: 0.0, evaluations: 0, panels: 0 };
    for p in &parts {
        if let Some((a, b, e)) = p.failed {
            return Err(Error::QuadratureNotConverged {
                detail: format!("panel [{a:e}, {b:e}] stalled at error {e:e} (tolerance {:e})", opts.abs_tol),
            });
        }
        for i in 0..N {
            out.value[i] += p.value[i];
        }
        out.error += p.error;
        out.evaluations += p.evals;
        out.panels += p.panels;
    }
    Ok(out)
}
