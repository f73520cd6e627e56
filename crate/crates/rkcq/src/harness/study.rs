//! Convergence studies: halve the step (and optionally the mesh) per level
//! and fit observed orders from successive error ratios.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::{run, MeshConfig, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMode {
    /// Halve k only; the mesh stays fixed (temporal order).
    TimeOnly,
    /// Halve k and h together (full order, k ~ h).
    Simultaneous,
}

impl StudyMode {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "time" | "time-only" | "time_only" => Ok(Self::TimeOnly),
            "simultaneous" => Ok(Self::Simultaneous),
            other => Err(Error::Config(format!(
                "unknown study mode '{other}' (expected time|simultaneous)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub level: usize,
    pub h: f64,
    pub k: f64,
    pub max_l2_error: f64,
    pub max_h1_error: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<StudyRow>,
    /// log2 of successive max-L2 error ratios (empty below 3 rows).
    pub l2_orders: Vec<f64>,
    pub h1_orders: Vec<f64>,
}

impl ConvergenceReport {
    pub fn mean_l2_order(&self) -> Option<f64> {
        if self.l2_orders.is_empty() {
            None
        } else {
            Some(self.l2_orders.iter().sum::<f64>() / self.l2_orders.len() as f64)
        }
    }

    pub fn table(&self) -> String {
        let mut out = String::from("level,h,k,max_l2_error,max_h1_error,seconds\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.3}\n",
                r.level, r.h, r.k, r.max_l2_error, r.max_h1_error, r.seconds
            ));
        }
        if !self.l2_orders.is_empty() {
            out.push_str(&format!(
                "l2_orders,{}\n",
                self.l2_orders
                    .iter()
                    .map(|o| format!("{o:.3}"))
                    .collect::<Vec<_>>()
                    .join(",")
            ));
            out.push_str(&format!(
                "h1_orders,{}\n",
                self.h1_orders
                    .iter()
                    .map(|o| format!("{o:.3}"))
                    .collect::<Vec<_>>()
                    .join(",")
            ));
        }
        out
    }
}

/// Observed orders via successive-ratio log2.
pub fn fit_orders(errors: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .collect()
}

/// Run `levels` refinements of the base configuration. The base config must
/// monitor errors (free equation), otherwise the report is empty.
pub fn convergence_study(
    base: &RunConfig,
    levels: usize,
    mode: StudyMode,
) -> Result<ConvergenceReport> {
    if levels < 3 {
        return Err(Error::Config(
            "a convergence study needs at least 3 levels for order fitting".into(),
        ));
    }
    let k0 = base.step_size()?;
    let t_final = k0 * base.n_steps as f64;
    let mut rows = Vec::with_capacity(levels);
    for level in 0..levels {
        let factor = 1usize << level;
        let mut cfg = base.clone();
        cfg.n_steps = base.n_steps * factor;
        cfg.k = Some(k0 / factor as f64);
        cfg.t_final = None;
        cfg.q_override = base.q_override.map(|q| q * factor);
        cfg.output = None;
        let h = match (&base.mesh, mode) {
            (MeshConfig::Interval { a, b, n }, StudyMode::TimeOnly) => {
                (b - a) / *n as f64
            }
            (MeshConfig::Interval { a, b, n }, StudyMode::Simultaneous) => {
                let n_ref = n * factor;
                cfg.mesh = MeshConfig::Interval { a: *a, b: *b, n: n_ref };
                (b - a) / n_ref as f64
            }
            (MeshConfig::Cube { side, subdivisions, .. }, StudyMode::TimeOnly) => {
                side / *subdivisions as f64
            }
            (
                MeshConfig::Cube {
                    center,
                    side,
                    subdivisions,
                },
                StudyMode::Simultaneous,
            ) => {
                let n_ref = subdivisions * factor;
                cfg.mesh = MeshConfig::Cube {
                    center: *center,
                    side: *side,
                    subdivisions: n_ref,
                };
                side / n_ref as f64
            }
        };
        let start = std::time::Instant::now();
        let out = run(&cfg).map_err(|e| {
            Error::Config(format!("study level {level} failed: {e}"))
        })?;
        let seconds = start.elapsed().as_secs_f64();
        let max_l2 = out.monitors.max_l2_error().unwrap_or(f64::NAN);
        let max_h1 = out.monitors.max_h1_error().unwrap_or(f64::NAN);
        rows.push(StudyRow {
            level,
            h,
            k: k0 / factor as f64,
            max_l2_error: max_l2,
            max_h1_error: max_h1,
            seconds,
        });
        let _ = t_final;
    }
    let l2_errors: Vec<f64> = rows.iter().map(|r| r.max_l2_error).collect();
    let h1_errors: Vec<f64> = rows.iter().map(|r| r.max_h1_error).collect();
    let (l2_orders, h1_orders) = if rows.len() >= 3 {
        (fit_orders(&l2_errors), fit_orders(&h1_errors))
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(ConvergenceReport {
        rows,
        l2_orders,
        h1_orders,
    })
}
