//! JSON run configuration and the single-run driver.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cq::CqContext;
use crate::error::{Error, Result};
use crate::exact::{BeamSum, GaussianBeam};
use crate::fem;
use crate::solver::{self, BoundaryClosure, Monitors};
use crate::tableau::builtin_tableau_by_name;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    #[serde(rename = "1d")]
    OneD,
    #[serde(rename = "3d")]
    ThreeD,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshConfig {
    Interval { a: f64, b: f64, n: usize },
    Cube {
        center: [f64; 3],
        side: f64,
        subdivisions: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub center: Vec<f64>,
    pub wave_vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub backend: Backend,
    pub tableau: String,
    pub n_steps: usize,
    /// Step size; alternatively give t_final with k = t_final / n_steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    pub mesh: MeshConfig,
    /// Contour node count override (default Q = N).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_override: Option<usize>,
    /// Constant exterior (and interior) potential level.
    #[serde(default)]
    pub v0: f64,
    pub beams: Vec<BeamConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Points for exterior-field recovery (3D backend).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub monitor_points: Vec<Vec<f64>>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn dim(&self) -> usize {
        match self.backend {
            Backend::OneD => 1,
            Backend::ThreeD => 3,
        }
    }

    pub fn step_size(&self) -> Result<f64> {
        match (self.k, self.t_final) {
            (Some(k), None) => Ok(k),
            (None, Some(t)) => Ok(t / self.n_steps as f64),
            (Some(k), Some(t)) => {
                if (self.n_steps as f64 * k - t).abs() > 1e-12 * t.abs().max(1.0) {
                    Err(Error::Config(format!(
                        "inconsistent time data: n_steps * k = {} but t_final = {t}",
                        self.n_steps as f64 * k
                    )))
                } else {
                    Ok(k)
                }
            }
            (None, None) => Err(Error::Config("either k or t_final is required".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        builtin_tableau_by_name(&self.tableau)?;
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be positive".into()));
        }
        let k = self.step_size()?;
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Config(format!("invalid step size k = {k}")));
        }
        let dim = self.dim();
        match (&self.mesh, self.backend) {
            (MeshConfig::Interval { a, b, n }, Backend::OneD) => {
                if !(b > a) || *n == 0 {
                    return Err(Error::Config(format!("invalid interval mesh ({a},{b}) n={n}")));
                }
            }
            (MeshConfig::Cube { side, subdivisions, .. }, Backend::ThreeD) => {
                if *side <= 0.0 || *subdivisions == 0 {
                    return Err(Error::Config(format!(
                        "invalid cube mesh side={side} subdivisions={subdivisions}"
                    )));
                }
            }
            _ => {
                return Err(Error::Config(
                    "mesh kind does not match backend (interval <-> 1d, cube <-> 3d)".into(),
                ))
            }
        }
        for (i, beam) in self.beams.iter().enumerate() {
            if beam.center.len() != dim || beam.wave_vector.len() != dim {
                return Err(Error::Config(format!(
                    "beam {i}: center/wave_vector must have {dim} components"
                )));
            }
        }
        for (i, p) in self.monitor_points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Config(format!(
                    "monitor point {i} must have {dim} components"
                )));
            }
        }
        Ok(())
    }

    pub fn beam_sum(&self) -> BeamSum {
        BeamSum {
            beams: self
                .beams
                .iter()
                .map(|b| GaussianBeam {
                    center: b.center.clone(),
                    wave_vector: b.wave_vector.clone(),
                })
                .collect(),
        }
    }
}

/// Result of a single run.
pub struct RunOutput {
    pub monitors: Monitors,
    /// Max |u0| sampled on the boundary (initial-condition truncation level).
    pub boundary_tail: f64,
    /// Exterior recovery values per monitor point and step (3D only).
    pub exterior: Option<solver::ExteriorRecovery>,
    pub csv: String,
    pub summary: String,
}

/// Execute a run and (optionally) write the per-step CSV.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let t = builtin_tableau_by_name(&cfg.tableau)?;
    let k = cfg.step_size()?;
    let ctx = CqContext::new(t, k, cfg.n_steps, cfg.q_override, cfg.v0)?;
    let beams = cfg.beam_sum();
    // Errors are monitored against the closed-form beams only for the free
    // equation.
    let have_exact = cfg.v0 == 0.0;

    let (monitors, boundary_tail, exterior) = match cfg.backend {
        Backend::OneD => {
            let MeshConfig::Interval { a, b, n } = cfg.mesh else {
                unreachable!()
            };
            let mesh = fem::build_interval_mesh(a, b, n)?;
            let v0 = cfg.v0;
            let forms = fem::assemble_interval(&mesh, &|_| v0)?;
            let u0: Vec<Complex64> = mesh.vertices.iter().map(|&x| beams.value(&[x], 0.0)).collect();
            let tail = beams.boundary_tail(&[vec![a], vec![b]]);
            let value = |x: f64, tt: f64| beams.value(&[x], tt);
            let dx = |x: f64, tt: f64| beams.gradient(&[x], tt)[0];
            let exact = solver::ExactRef1d {
                value: &value,
                dx: &dx,
            };
            let run = solver::solve_1d(
                &mesh,
                &forms,
                &ctx,
                &u0,
                BoundaryClosure::Transparent,
                have_exact.then_some(&exact),
            )?;
            (run.monitors, tail, None)
        }
        Backend::ThreeD => {
            let MeshConfig::Cube {
                center,
                side,
                subdivisions,
            } = cfg.mesh
            else {
                unreachable!()
            };
            let mesh = fem::build_box_mesh(center, side, subdivisions)?;
            let v0 = cfg.v0;
            let forms = fem::assemble_tet(&mesh, &|_| v0)?;
            let spaces = crate::bem::TraceSpaces::new(&mesh.surface);
            let weights = solver::precompute_operator_weights(&ctx, &mesh.surface, &spaces)?;
            let u0: Vec<Complex64> = mesh
                .vertices
                .iter()
                .map(|x| beams.value(x, 0.0))
                .collect();
            let tail = beams.boundary_tail(
                &mesh
                    .surface
                    .vertices
                    .iter()
                    .map(|v| v.to_vec())
                    .collect::<Vec<_>>(),
            );
            let value = |x: [f64; 3], tt: f64| beams.value(&x, tt);
            let grad = |x: [f64; 3], tt: f64| {
                let g = beams.gradient(&x, tt);
                [g[0], g[1], g[2]]
            };
            let exact = solver::ExactRef3d {
                value: &value,
                grad: &grad,
            };
            let run = solver::coupled3d::run_coupled(
                &mesh,
                &forms,
                &spaces,
                &ctx,
                &weights,
                &u0,
                have_exact.then_some(&exact),
            )?;
            let exterior = if cfg.monitor_points.is_empty() {
                None
            } else {
                let pts: Vec<[f64; 3]> = cfg
                    .monitor_points
                    .iter()
                    .map(|p| [p[0], p[1], p[2]])
                    .collect();
                Some(solver::recover_exterior(
                    &ctx,
                    &mesh.surface,
                    &spaces,
                    &pts,
                    &run.history,
                )?)
            };
            (run.monitors, tail, exterior)
        }
    };

    let csv = monitors_csv(&monitors, k);
    if let Some(path) = &cfg.output {
        let mut f = std::fs::File::create(path)?;
        f.write_all(csv.as_bytes())?;
    }
    let summary = format!(
        "backend={} tableau={} n_steps={} k={:.6e} boundary_tail={:.3e} non_expansive={} max_l2_err={} max_h1_err={}",
        match cfg.backend {
            Backend::OneD => "1d",
            Backend::ThreeD => "3d",
        },
        cfg.tableau,
        cfg.n_steps,
        k,
        boundary_tail,
        monitors.is_non_expansive(1e-10),
        monitors
            .max_l2_error()
            .map_or("n/a".into(), |v| format!("{v:.6e}")),
        monitors
            .max_h1_error()
            .map_or("n/a".into(), |v| format!("{v:.6e}")),
    );
    Ok(RunOutput {
        monitors,
        boundary_tail,
        exterior,
        csv,
        summary,
    })
}

/// Fixed column order, 17 significant digits: bit-exact regression diffs.
pub fn monitors_csv(m: &Monitors, k: f64) -> String {
    let mut out = String::from("n,t,l2_norm,h1_norm,energy,l2_error,h1_error\n");
    for n in 0..m.l2.len() {
        let l2e = m.l2_error.get(n).copied().unwrap_or(0.0);
        let h1e = m.h1_error.get(n).copied().unwrap_or(0.0);
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            n,
            n as f64 * k,
            m.l2[n],
            m.h1[n],
            m.energy[n],
            l2e,
            h1e
        ));
    }
    out
}
