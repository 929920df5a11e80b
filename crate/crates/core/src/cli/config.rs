//! Run configuration: TOML with `[section]` headers, command-line overrides
//! and unknown-key detection.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Disk, FourierCurve, OmegaSpec, ProblemConfig, SBVParams};
use crate::phase_field::{PFParams, WeightForm};
use crate::robin::StateOptions;
use crate::shape_opt::{GradientSource, OptOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProblemSection {
    pub dim: usize,
    pub robin_h: f64,
    pub volume_cost: f64,
    pub allow_degenerate: bool,
    /// Extra Robin coefficients tabulated by `radial`.
    pub sweep_h: Vec<f64>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection {
            dim: 2,
            robin_h: 3.0,
            volume_cost: 1.0,
            allow_degenerate: false,
            sweep_h: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaKind {
    Disk,
    Star,
    DiskUnion,
    Mask,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OmegaSection {
    pub kind: OmegaKind,
    pub center: [f64; 2],
    /// Disk radius, or the mean radius of a star domain.
    pub radius: f64,
    /// Star domain: `cos[k-1]`, `sin[k-1]` multiply `cos kθ`, `sin kθ`.
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    /// Disk union: `[x, y, r]` per disk.
    pub disks: Vec<[f64; 3]>,
    /// Mask: path of a grid file, cells above 0.5 belong to Ω.
    pub mask: String,
}

impl Default for OmegaSection {
    fn default() -> Self {
        OmegaSection {
            kind: OmegaKind::Disk,
            center: [0.0, 0.0],
            radius: 1.0,
            cos: Vec::new(),
            sin: Vec::new(),
            disks: Vec::new(),
            mask: String::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSection {
    pub n_s: usize,
    pub n_theta: usize,
    pub tol: f64,
    /// Minimum distance between `∂A` and `Ω`; 0 selects `0.02ρ₀`.
    pub gap_min: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            n_s: 64,
            n_theta: 128,
            tol: 1e-10,
            gap_min: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapeSection {
    pub modes: usize,
    /// Initial mean radius as a multiple of the radius of Ω.
    pub init_scale: f64,
    /// Initial cosine perturbation `[mode, amplitude]`; mode 0 disables it.
    pub init_perturbation: [f64; 2],
    pub n_s: usize,
    pub n_theta: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
    pub gradient: GradientSource,
    /// Angular samples written to `boundary.csv`.
    pub boundary_samples: usize,
}

impl Default for ShapeSection {
    fn default() -> Self {
        let o = OptOptions::default();
        ShapeSection {
            modes: 8,
            init_scale: 1.3,
            init_perturbation: [0.0, 0.0],
            n_s: o.n_s,
            n_theta: o.n_theta,
            max_iter: o.max_iter,
            tol: o.tol,
            armijo: o.armijo,
            max_backtracks: o.max_backtracks,
            gradient: o.gradient,
            boundary_samples: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseFieldSection {
    /// Cells per side of the square grid.
    pub n: usize,
    /// Half-width of the grid; 0 selects `max(1.25 R*, Ω + margin)`.
    pub half_width: f64,
    pub center: [f64; 2],
    /// Explicit ε values; empty selects the default schedule for the grid.
    pub epsilon_schedule: Vec<f64>,
    pub k_eps: f64,
    pub weight_form: WeightForm,
    pub delta_cut: f64,
    pub z_cut: f64,
    pub surface_floor: f64,
    pub max_alternations: usize,
    pub tol: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub noise: f64,
}

impl Default for PhaseFieldSection {
    fn default() -> Self {
        let p = PFParams::for_spacing(1.0);
        PhaseFieldSection {
            n: 256,
            half_width: 0.0,
            center: [0.0, 0.0],
            epsilon_schedule: Vec::new(),
            k_eps: p.k_eps,
            weight_form: p.weight_form,
            delta_cut: p.delta_cut,
            z_cut: p.z_cut,
            surface_floor: p.surface_floor,
            max_alternations: p.max_alternations,
            tol: p.tol,
            cg_tol: p.cg_tol,
            cg_max_iter: p.cg_max_iter,
            noise: p.noise,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisSection {
    pub jump_threshold: f64,
    pub positivity_cut: f64,
    pub flat_tol: f64,
    pub directions: usize,
    /// Sample points on `K` for density profiles.
    pub density_points: usize,
    /// Radii in grid cells; empty selects 8, 12, 16, 24, 32.
    pub radii_cells: Vec<f64>,
    /// Centre of blow-up balls; empty selects the first jump face.
    pub point: Vec<f64>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let s = SBVParams::default();
        AnalysisSection {
            jump_threshold: s.jump_threshold,
            positivity_cut: s.positivity_cut,
            flat_tol: 0.1,
            directions: 8,
            density_points: 16,
            radii_cells: Vec::new(),
            point: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSection {
    pub dir: String,
    /// Write `u`, `z` and mask grids for phase-field runs.
    pub write_fields: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "out".into(),
            write_fields: true,
        }
    }
}

/// Complete configuration of one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub omega: OmegaSection,
    pub solver: SolverSection,
    pub shape: ShapeSection,
    pub phase_field: PhaseFieldSection,
    pub analysis: AnalysisSection,
    pub output: OutputSection,
}

/// Key paths present in `actual` but absent from `known`.
fn unknown_keys(known: &toml::Table, actual: &toml::Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in actual {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match known.get(k) {
            None => out.push(path),
            Some(toml::Value::Table(kt)) => {
                if let toml::Value::Table(at) = v {
                    unknown_keys(kt, at, &path, out);
                }
            }
            Some(_) => {}
        }
    }
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a plain string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies one `section.key=value` override.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not of the form section.key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.len() < 2 || keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("override key `{path}` must be section.key")));
    }
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(Error::Config(format!("`{k}` in `{path}` is not a section"))),
        };
    }
    cur.insert(keys[keys.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    /// Builds a configuration from TOML text and overrides. Unknown keys are
    /// an error in strict mode and a warning otherwise.
    pub fn from_toml_str(text: &str, overrides: &[String], strict: bool) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let at = e
                .span()
                .map(|s| {
                    let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
                    format!(" (line {line})")
                })
                .unwrap_or_default();
            Error::Config(format!("{}{at}", e.message()))
        })?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let known = toml::Table::try_from(RunConfig::default())
            .map_err(|e| Error::Config(format!("cannot serialize defaults: {e}")))?;
        let mut unknown = Vec::new();
        unknown_keys(&known, &table, "", &mut unknown);
        if !unknown.is_empty() {
            if strict {
                return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
            }
            for k in &unknown {
                log::warn!("ignoring unknown configuration key `{k}`");
            }
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path, overrides: &[String], strict: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, overrides, strict).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Canonical TOML text of the full configuration.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize configuration: {e}")))
    }

    pub fn omega_spec(&self) -> Result<OmegaSpec> {
        let o = &self.omega;
        let spec = match o.kind {
            OmegaKind::Disk => OmegaSpec::disk(o.center, o.radius),
            OmegaKind::Star => {
                if o.cos.len() != o.sin.len() {
                    return Err(Error::Config("omega.cos and omega.sin must have equal length".into()));
                }
                let mut coeffs = vec![o.radius];
                for (c, s) in o.cos.iter().zip(&o.sin) {
                    coeffs.push(*c);
                    coeffs.push(*s);
                }
                OmegaSpec::StarDomain {
                    center: o.center,
                    radius: FourierCurve::from_slice(&coeffs),
                }
            }
            OmegaKind::DiskUnion => OmegaSpec::DiskUnion(
                o.disks
                    .iter()
                    .map(|d| Disk {
                        center: [d[0], d[1]],
                        radius: d[2],
                    })
                    .collect(),
            ),
            OmegaKind::Mask => {
                if o.mask.is_empty() {
                    return Err(Error::Config("omega.kind = \"mask\" needs omega.mask".into()));
                }
                OmegaSpec::GridMask(super::io::read_grid(Path::new(&o.mask))?)
            }
        };
        Ok(spec)
    }

    pub fn problem(&self) -> Result<ProblemConfig> {
        let p = &self.problem;
        let cfg = ProblemConfig {
            dim: p.dim,
            robin_h: p.robin_h,
            volume_cost: p.volume_cost,
            omega: self.omega_spec()?,
            allow_degenerate: p.allow_degenerate,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn state_options(&self) -> StateOptions {
        let s = &self.solver;
        let mut o = StateOptions::new(s.n_s, s.n_theta);
        o.tol = s.tol;
        o.gap_min = (s.gap_min > 0.0).then_some(s.gap_min);
        o
    }

    pub fn opt_options(&self) -> OptOptions {
        let s = &self.shape;
        OptOptions {
            n_s: s.n_s,
            n_theta: s.n_theta,
            max_iter: s.max_iter,
            tol: s.tol,
            armijo: s.armijo,
            max_backtracks: s.max_backtracks,
            gap_min: (self.solver.gap_min > 0.0).then_some(self.solver.gap_min),
            gradient: s.gradient,
        }
    }

    pub fn pf_params(&self, dx: f64) -> PFParams {
        let s = &self.phase_field;
        let mut p = PFParams::for_spacing(dx);
        if !s.epsilon_schedule.is_empty() {
            p.epsilon_schedule = s.epsilon_schedule.clone();
        }
        p.k_eps = s.k_eps;
        p.weight_form = s.weight_form;
        p.delta_cut = s.delta_cut;
        p.z_cut = s.z_cut;
        p.surface_floor = s.surface_floor;
        p.max_alternations = s.max_alternations;
        p.tol = s.tol;
        p.cg_tol = s.cg_tol;
        p.cg_max_iter = s.cg_max_iter;
        p.noise = s.noise;
        p
    }

    pub fn sbv_params(&self) -> SBVParams {
        SBVParams {
            jump_threshold: self.analysis.jump_threshold,
            positivity_cut: self.analysis.positivity_cut,
        }
    }
}
