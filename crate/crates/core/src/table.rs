//! Row-per-grid-point result tables and their CSV form.

use std::fmt::Write as _;

use crate::feedback::LoopKind;
use crate::model::{NoiseEnvironment, SystemParams};

/// Metric columns, in output order.
pub const METRIC_COLUMNS: [&str; 6] = ["occupancy", "log_neg", "min_opt_eig", "min_mech_eig", "v_min", "abscissa"];

const PARAM_COLUMNS: [&str; 14] =
    ["regime", "omega_m", "delta", "G", "kappa", "Gamma_m", "N_l", "N_m", "loop", "a", "b", "eta", "z", "r"];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Cell {
    Value(f64),
    /// The point has no steady state.
    Unstable,
    /// Not produced by this sweep.
    #[default]
    Absent,
}

impl Cell {
    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            _ => None,
        }
    }

    fn render(self, out: &mut String) {
        match self {
            Cell::Value(v) => out.push_str(&format_float(v)),
            Cell::Unstable => out.push_str("unstable"),
            Cell::Absent => {}
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Absent, Cell::Value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub occupancy: Cell,
    pub log_neg: Cell,
    pub min_opt_eig: Cell,
    pub min_mech_eig: Cell,
    pub v_min: Cell,
    pub abscissa: Cell,
}

impl Metrics {
    fn cells(&self) -> [Cell; 6] {
        [self.occupancy, self.log_neg, self.min_opt_eig, self.min_mech_eig, self.v_min, self.abscissa]
    }

    /// Replaces every produced metric by the unstable sentinel, except the
    /// abscissa, which stays informative, and the log-negativity, which is
    /// recorded as zero.
    pub fn mark_unstable(&mut self) {
        for c in [&mut self.occupancy, &mut self.min_opt_eig, &mut self.min_mech_eig, &mut self.v_min] {
            if *c != Cell::Absent {
                *c = Cell::Unstable;
            }
        }
        if self.log_neg != Cell::Absent {
            self.log_neg = Cell::Value(0.0);
        }
    }
}

/// Inputs that produced a row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub params: SystemParams,
    pub env: NoiseEnvironment,
    pub feedback: Option<LoopKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub axes: Vec<f64>,
    pub stable: bool,
    pub metrics: Metrics,
    pub extras: Vec<Cell>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub axes: Vec<String>,
    /// Per-row columns beyond the standard metrics.
    pub extra_columns: Vec<String>,
    /// Run-wide settings appended to every row.
    pub constants: Vec<(String, f64)>,
    pub rows: Vec<Row>,
}

impl SweepTable {
    pub fn new(axes: &[&str]) -> Self {
        SweepTable { axes: axes.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    pub fn with_extras(mut self, extras: &[&str]) -> Self {
        self.extra_columns = extras.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn with_constant(mut self, name: &str, value: f64) -> Self {
        self.constants.push((name.to_string(), value));
        self
    }

    pub fn push(&mut self, row: Row) {
        debug_assert_eq!(row.axes.len(), self.axes.len());
        debug_assert_eq!(row.extras.len(), self.extra_columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = self.axes.clone();
        h.push("stable".into());
        h.extend(METRIC_COLUMNS.iter().map(|s| s.to_string()));
        h.extend(self.extra_columns.iter().cloned());
        h.extend(PARAM_COLUMNS.iter().map(|s| s.to_string()));
        h.extend(self.constants.iter().map(|(k, _)| k.clone()));
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for row in &self.rows {
            let mut fields: Vec<String> = row.axes.iter().map(|&v| format_float(v)).collect();
            fields.push(if row.stable { "1" } else { "0" }.into());
            for c in row.metrics.cells().into_iter().chain(row.extras.iter().copied()) {
                let mut s = String::new();
                c.render(&mut s);
                fields.push(s);
            }
            push_provenance(&mut fields, &row.provenance);
            fields.extend(self.constants.iter().map(|&(_, v)| format_float(v)));
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

fn push_provenance(fields: &mut Vec<String>, p: &Provenance) {
    let sp = &p.params;
    fields.push(sp.regime.name().into());
    for v in [sp.omega_m, sp.delta, sp.g_lin, sp.kappa, sp.gamma_m, p.env.n_l, p.env.n_m] {
        fields.push(format_float(v));
    }
    let (name, a, b, eta, z, r) = match p.feedback {
        None => ("none", None, None, None, None, None),
        Some(k) => match k {
            LoopKind::Passive { a, b, .. } => (k.name(), Some(a), Some(b), None, None, None),
            LoopKind::SqueezeLoss { eta, z } => (k.name(), None, None, Some(eta), Some(z), None),
            LoopKind::TwoModeSqueeze { r } | LoopKind::TwoModeSqueezeFlipped { r } => {
                (k.name(), None, None, None, None, Some(r))
            }
            LoopKind::Custom => (k.name(), None, None, None, None, None),
        },
    };
    fields.push(name.into());
    for v in [a, b, eta, z, r] {
        fields.push(v.map(format_float).unwrap_or_default());
    }
}

/// C `%.12e`: twelve fractional digits, signed exponent of at least two digits.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.12e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    let mut out = String::with_capacity(mant.len() + 5);
    out.push_str(mant);
    let _ = write!(out, "e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs());
    out
}
