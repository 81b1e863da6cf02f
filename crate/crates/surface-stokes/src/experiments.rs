//! Error measurement, convergence and eigenvalue studies, and the file
//! outputs of the command-line harness (CSV tables, JSON-lines filter
//! reports, self-contained SVG log-log plots).

use crate::assembly::{assemble, AssemblyOptions, FeSystem};
use crate::error::{Error, Result};
use crate::fem::{DofMap, FaceElement, FeFunction, ReferenceBdm1};
use crate::geometry::{pullback_exact_velocity_jet, SurfaceGeometry};
use crate::killing::{
    filter_velocity, forcing_filter_pipeline, FilterPolicy, FilterReport,
};
use crate::linalg::{self, Mat3, Vec3};
use crate::mesh::TriSurfaceMesh;
use crate::quadrature;
use crate::solver::{self, EigenSet, EpsilonPolicy, StokesSolution};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ForcingMode {
    Clean,
    /// Add kappa * k1 to the forcing.
    AddKilling(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RunFilter {
    Policy(FilterPolicy),
    /// The full pipeline for forcing terms with Killing components.
    Forcing,
}

impl RunFilter {
    pub fn label(&self) -> String {
        match self {
            RunFilter::Policy(p) => p.label(),
            RunFilter::Forcing => "forcing".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub c: f64,
    pub level_min: u32,
    pub level_max: u32,
    pub epsilon_policy: EpsilonPolicy,
    pub rho: f64,
    pub filter: RunFilter,
    pub forcing_mode: ForcingMode,
    pub eigen_count: usize,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub dump_mesh: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            c: 1.0,
            level_min: 2,
            level_max: 4,
            epsilon_policy: EpsilonPolicy::HPower(2.0),
            rho: crate::assembly::DEFAULT_RHO,
            filter: RunFilter::Policy(FilterPolicy::None),
            forcing_mode: ForcingMode::Clean,
            eigen_count: 3,
            seed: 0x5eed_cafe,
            out_dir: None,
            dump_mesh: false,
        }
    }
}

impl RunConfig {
    fn kappa(&self) -> f64 {
        match self.forcing_mode {
            ForcingMode::Clean => 0.0,
            ForcingMode::AddKilling(k) => k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.level_min > self.level_max || self.level_max > 8 {
            return Err(Error::InvalidConfig(format!(
                "bad level range {}..{}",
                self.level_min, self.level_max
            )));
        }
        if !(self.rho > 0.0) {
            return Err(Error::InvalidConfig(format!("rho = {} must be positive", self.rho)));
        }
        if let RunFilter::Policy(FilterPolicy::Threshold(a)) = self.filter {
            if !(1.0..2.0).contains(&a) {
                return Err(Error::InvalidConfig(format!(
                    "threshold exponent alpha = {a} outside [1, 2)"
                )));
            }
        }
        Ok(())
    }
}

/// One line of a convergence table.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LevelRow {
    pub level: u32,
    pub h: f64,
    pub energy: f64,
    pub l2: f64,
    pub h1: f64,
    pub pk_norm: f64,
    pub lam: [f64; 3],
    /// Selected Killing mode indices, 1-based.
    pub selected: Vec<usize>,
    pub eoc_energy: Option<f64>,
    pub eoc_l2: Option<f64>,
}

/// Per-level diagnostics that go to report.json alongside the filter report.
#[derive(Clone, Debug, Serialize)]
pub struct LevelDiagnostics {
    pub level: u32,
    pub epsilon: f64,
    pub solver_residual: f64,
    pub eigen_residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unfiltered_l2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pk_f_error: Option<f64>,
    pub filter: FilterReport,
}

#[derive(Clone, Debug)]
pub struct StudyResult {
    pub label: String,
    pub rows: Vec<LevelRow>,
    pub diagnostics: Vec<LevelDiagnostics>,
}

/// Everything computed once per (surface, level, rho, forcing) tuple;
/// studies at different epsilon or filter reuse it.
pub struct LevelContext {
    pub level: u32,
    pub geom: SurfaceGeometry,
    pub mesh: TriSurfaceMesh,
    pub system: FeSystem,
    pub eigs: EigenSet,
}

pub fn prepare_level(config: &RunConfig, level: u32) -> Result<LevelContext> {
    let geom = SurfaceGeometry::new(config.c)?;
    let mesh = TriSurfaceMesh::icosphere(&geom, level)?;
    let system = assemble(
        &mesh,
        &geom,
        &AssemblyOptions { rho: config.rho, killing_forcing: config.kappa() },
    )?;
    let eigs = solver::solve_eigen(&system, config.eigen_count.clamp(3, 10), config.seed)?;
    Ok(LevelContext { level, geom, mesh, system, eigs })
}

/// Errors of a finite element velocity against the pullback of the exact
/// solution, measured on the discrete surface.
pub struct ErrorMeasures {
    pub energy: f64,
    pub l2: f64,
    pub h1: f64,
}

pub fn measure_errors(
    mesh: &TriSurfaceMesh,
    geom: &SurfaceGeometry,
    dofmap: &DofMap,
    u: &FeFunction,
) -> Result<ErrorMeasures> {
    let ref_el = ReferenceBdm1::new();
    let exact = geom.exact_fields();
    let (pts, wts) = quadrature::face_rule();
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    let mut energy = 0.0;
    for f in 0..mesh.faces.len() {
        let el = FaceElement::new(mesh, &ref_el, f);
        let area = mesh.face_areas[f];
        let nu = mesh.face_normals[f];
        // in-plane orthonormal frame for assembling the exact gradient
        let [p0, p1, _] = mesh.face_points(f);
        let t1 = linalg::normalize(linalg::sub(p1, p0));
        let t2 = linalg::cross(nu, t1);
        for (bary, w) in pts.iter().zip(&wts) {
            let x = crate::fem::barycentric_to_world(mesh, f, *bary);
            let (uh, guh, _div) = crate::fem::eval_velocity(&el, &ref_el, dofmap, &u.coeffs, *bary);
            let (ub, d1) = pullback_exact_velocity_jet(geom, &exact, x, t1, nu)?;
            let (_, d2) = pullback_exact_velocity_jet(geom, &exact, x, t2, nu)?;
            // grad_Gamma ubar = Pi_Gamma (d1 t1^T + d2 t2^T); the FE gradient
            // is already tangential on both sides
            let mut gub: Mat3 = [[0.0; 3]; 3];
            for r in 0..3 {
                for c in 0..3 {
                    gub[r][c] = d1[r] * t1[c] + d2[r] * t2[c];
                }
            }
            // left-project: remove the nu_Gamma component of each column
            let mut gub_t: Mat3 = [[0.0; 3]; 3];
            for r in 0..3 {
                for c in 0..3 {
                    gub_t[r][c] = gub[r][c] - nu[r] * (nu[0] * gub[0][c] + nu[1] * gub[1][c] + nu[2] * gub[2][c]);
                }
            }
            let dv = linalg::sub(uh, ub);
            let mut dg: Mat3 = [[0.0; 3]; 3];
            for r in 0..3 {
                for c in 0..3 {
                    dg[r][c] = guh[r][c] - gub_t[r][c];
                }
            }
            let ddef = linalg::sym_part(&dg);
            let wa = w * area;
            l2 += wa * linalg::dot(dv, dv);
            h1 += wa * linalg::frob_dot(&dg, &dg);
            energy += wa * linalg::frob_dot(&ddef, &ddef);
        }
    }
    Ok(ErrorMeasures { energy: energy.sqrt(), l2: l2.sqrt(), h1: h1.sqrt() })
}

/// L2(Gamma) norm of (eps U_f - P_K f_total), the pipeline's estimate of the
/// Killing part of the forcing against the quadrature projection of the
/// actual forcing.
fn pk_f_estimate_error(
    ctx: &LevelContext,
    kappa: f64,
    pk_estimate: &FeFunction,
) -> Result<f64> {
    let geom = &ctx.geom;
    let mesh = &ctx.mesh;
    let exact = geom.exact_fields();
    let killing = geom.killing_basis();
    let dim = killing.dim();
    let ref_el = ReferenceBdm1::new();
    let (pts, wts) = quadrature::face_rule();
    // Killing moments of the total forcing
    let mut moments = vec![0.0; dim];
    for f in 0..mesh.faces.len() {
        let area = mesh.face_areas[f];
        for (bary, w) in pts.iter().zip(&wts) {
            let x = crate::fem::barycentric_to_world(mesh, f, *bary);
            let p = geom.closest_point(x)?.point_on_gamma;
            let mut fv = exact.forcing(p);
            if kappa != 0.0 {
                fv = linalg::add(fv, linalg::scale(kappa, killing.eval(0, p)));
            }
            for (k, m) in moments.iter_mut().enumerate() {
                *m += w * area * linalg::dot(fv, killing.eval(k, p));
            }
        }
    }
    let coeff = crate::dense::solve(&ctx.system.k_gram_analytic, &moments)?;
    // quadrature of |eps u_f(x) - P_K f(x)|^2
    let dofmap = &ctx.system.dofmap;
    let mut err2 = 0.0;
    for f in 0..mesh.faces.len() {
        let el = FaceElement::new(mesh, &ref_el, f);
        let area = mesh.face_areas[f];
        for (bary, w) in pts.iter().zip(&wts) {
            let x = crate::fem::barycentric_to_world(mesh, f, *bary);
            let p = geom.closest_point(x)?.point_on_gamma;
            let (est, _, _) = crate::fem::eval_velocity(&el, &ref_el, dofmap, &pk_estimate.coeffs, *bary);
            let mut pkf: Vec3 = [0.0; 3];
            for (k, c) in coeff.iter().enumerate() {
                pkf = linalg::add(pkf, linalg::scale(*c, killing.eval(k, p)));
            }
            let d = linalg::sub(est, pkf);
            err2 += w * area * linalg::dot(d, d);
        }
    }
    Ok(err2.sqrt())
}

/// Run one level of a study on a prepared context.
pub fn study_level(
    config: &RunConfig,
    ctx: &LevelContext,
) -> Result<(LevelRow, LevelDiagnostics)> {
    let h = ctx.system.h();
    let (filtered, report, solution, extra_unfiltered_l2, pk_f_err, epsilon): (
        FeFunction,
        FilterReport,
        StokesSolution,
        Option<f64>,
        Option<f64>,
        f64,
    ) = match config.filter {
        RunFilter::Policy(policy) => {
            let epsilon = config.epsilon_policy.epsilon(h);
            let sol = solver::solve_stokes(&ctx.system, epsilon)?;
            let out = filter_velocity(&ctx.system, Some(&ctx.eigs), &sol, policy)?;
            (out.filtered, out.report, sol, None, None, epsilon)
        }
        RunFilter::Forcing => {
            let res = forcing_filter_pipeline(&ctx.system, &ctx.eigs)?;
            let unfiltered = measure_errors(&ctx.mesh, &ctx.geom, &ctx.system.dofmap, &res.u_h2.velocity)?;
            let pk_err = pk_f_estimate_error(ctx, config.kappa(), &res.pk_f_estimate)?;
            let eps = res.u_h2.epsilon;
            (
                res.filtered,
                res.report,
                res.u_h2,
                Some(unfiltered.l2),
                Some(pk_err),
                eps,
            )
        }
    };
    let errs = measure_errors(&ctx.mesh, &ctx.geom, &ctx.system.dofmap, &filtered)?;
    let pk_norm = solver::analytic_killing_norm(&ctx.system, &solution.velocity);
    let mut lam = [f64::NAN; 3];
    for (slot, v) in lam.iter_mut().zip(&ctx.eigs.eigenvalues) {
        *slot = *v;
    }
    let row = LevelRow {
        level: ctx.level,
        h,
        energy: errs.energy,
        l2: errs.l2,
        h1: errs.h1,
        pk_norm,
        lam,
        selected: report.selected_modes.clone(),
        eoc_energy: None,
        eoc_l2: None,
    };
    let diag = LevelDiagnostics {
        level: ctx.level,
        epsilon,
        solver_residual: solution.residual_norm,
        eigen_residuals: ctx.eigs.residuals.clone(),
        unfiltered_l2: extra_unfiltered_l2,
        pk_f_error: pk_f_err,
        filter: report,
    };
    Ok((row, diag))
}

pub fn fill_eoc(rows: &mut [LevelRow]) {
    for i in 1..rows.len() {
        let (prev, cur) = (rows[i - 1].clone(), &mut rows[i]);
        let dh = (prev.h / cur.h).ln();
        if dh > 0.0 {
            if prev.energy > 0.0 && cur.energy > 0.0 {
                cur.eoc_energy = Some((prev.energy / cur.energy).ln() / dh);
            }
            if prev.l2 > 0.0 && cur.l2 > 0.0 {
                cur.eoc_l2 = Some((prev.l2 / cur.l2).ln() / dh);
            }
        }
    }
}

/// Full convergence study: one filter policy across the level range.
pub fn convergence_study(config: &RunConfig) -> Result<StudyResult> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    for level in config.level_min..=config.level_max {
        let ctx = prepare_level(config, level)?;
        let (row, diag) = study_level(config, &ctx)?;
        rows.push(row);
        diagnostics.push(diag);
        if config.dump_mesh {
            if let Some(dir) = &config.out_dir {
                std::fs::create_dir_all(dir)?;
                ctx.mesh.write_off(&dir.join(format!("mesh_L{level}.off")))?;
            }
        }
    }
    fill_eoc(&mut rows);
    let result = StudyResult { label: config.filter.label(), rows, diagnostics };
    if let Some(dir) = &config.out_dir {
        write_outputs(dir, std::slice::from_ref(&result))?;
    }
    Ok(result)
}

/// Eigenvalue table with Richardson extrapolation from the two finest levels
/// under the h^2 rate.
#[derive(Clone, Debug, Serialize)]
pub struct EigenStudy {
    pub levels: Vec<u32>,
    pub h: Vec<f64>,
    /// eigenvalues[i][k] = Lambda_k at level i
    pub eigenvalues: Vec<Vec<f64>>,
    pub extrapolated: Vec<f64>,
}

pub fn eigen_study(config: &RunConfig) -> Result<EigenStudy> {
    config.validate()?;
    if config.level_max == config.level_min {
        return Err(Error::InvalidConfig("eigen study needs at least two levels".into()));
    }
    let mut study = EigenStudy {
        levels: Vec::new(),
        h: Vec::new(),
        eigenvalues: Vec::new(),
        extrapolated: Vec::new(),
    };
    for level in config.level_min..=config.level_max {
        let ctx = prepare_level(config, level)?;
        study.levels.push(level);
        study.h.push(ctx.system.h());
        study.eigenvalues.push(ctx.eigs.eigenvalues.clone());
    }
    let n = study.eigenvalues.len();
    let k = study.eigenvalues[n - 1].len();
    for i in 0..k {
        let coarse = study.eigenvalues[n - 2][i];
        let fine = study.eigenvalues[n - 1][i];
        study.extrapolated.push((4.0 * fine - coarse) / 3.0);
    }
    Ok(study)
}

/// Compare filter policies level by level on shared systems: manual vs
/// threshold(alpha) vs none, plus the forcing pipeline when the forcing has
/// a Killing component.
pub fn killing_filter_study(config: &RunConfig, alpha: f64) -> Result<Vec<StudyResult>> {
    config.validate()?;
    let mut policies: Vec<RunFilter> = vec![
        RunFilter::Policy(FilterPolicy::ManualAnalytic),
        RunFilter::Policy(FilterPolicy::Threshold(alpha)),
        RunFilter::Policy(FilterPolicy::None),
    ];
    if config.kappa() != 0.0 {
        policies.push(RunFilter::Forcing);
    }
    let mut results: Vec<StudyResult> = policies
        .iter()
        .map(|p| StudyResult { label: p.label(), rows: Vec::new(), diagnostics: Vec::new() })
        .collect();
    for level in config.level_min..=config.level_max {
        let ctx = prepare_level(config, level)?;
        for (policy, result) in policies.iter().zip(&mut results) {
            let sub = RunConfig { filter: *policy, ..config.clone() };
            let (row, diag) = study_level(&sub, &ctx)?;
            result.rows.push(row);
            result.diagnostics.push(diag);
        }
    }
    for r in &mut results {
        fill_eoc(&mut r.rows);
    }
    if let Some(dir) = &config.out_dir {
        write_outputs(dir, &results)?;
    }
    Ok(results)
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

pub const CSV_HEADER: &str = "level,h,energy,l2,h1,pk_norm,lam1,lam2,lam3,Jh,eoc_energy,eoc_l2";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Selected modes as `{1;2;3}` (CSV-safe).
fn fmt_selected(sel: &[usize]) -> String {
    let inner: Vec<String> = sel.iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", inner.join(";"))
}

pub fn rows_to_csv(rows: &[LevelRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.level,
            fmt_f64(r.h),
            fmt_f64(r.energy),
            fmt_f64(r.l2),
            fmt_f64(r.h1),
            fmt_f64(r.pk_norm),
            fmt_f64(r.lam[0]),
            fmt_f64(r.lam[1]),
            fmt_f64(r.lam[2]),
            fmt_selected(&r.selected),
            fmt_opt(r.eoc_energy),
            fmt_opt(r.eoc_l2),
        );
    }
    s
}

pub fn rows_from_csv(text: &str) -> Result<Vec<LevelRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::InvalidConfig("empty CSV".into()))?;
    if header != CSV_HEADER {
        return Err(Error::InvalidConfig(format!("unexpected CSV header {header}")));
    }
    let parse_opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse::<f64>()
                .map(Some)
                .map_err(|e| Error::InvalidConfig(format!("bad float {s}: {e}")))
        }
    };
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 12 {
            return Err(Error::InvalidConfig(format!("bad CSV row: {line}")));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::InvalidConfig(format!("bad float {s}: {e}")))
        };
        let selected: Vec<usize> = parts[9]
            .trim_matches(|c| c == '{' || c == '}')
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<usize>().map_err(|e| Error::InvalidConfig(e.to_string())))
            .collect::<Result<_>>()?;
        rows.push(LevelRow {
            level: parts[0]
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("bad level: {e}")))?,
            h: num(parts[1])?,
            energy: num(parts[2])?,
            l2: num(parts[3])?,
            h1: num(parts[4])?,
            pk_norm: num(parts[5])?,
            lam: [num(parts[6])?, num(parts[7])?, num(parts[8])?],
            selected,
            eoc_energy: parse_opt(parts[10])?,
            eoc_l2: parse_opt(parts[11])?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Outputs
// ---------------------------------------------------------------------------

pub fn write_outputs(dir: &Path, results: &[StudyResult]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    // one CSV per policy when comparing, a flat report.csv for a single study
    if results.len() == 1 {
        std::fs::write(dir.join("report.csv"), rows_to_csv(&results[0].rows))?;
    } else {
        for r in results {
            let name = format!("report_{}.csv", sanitize(&r.label));
            std::fs::write(dir.join(name), rows_to_csv(&r.rows))?;
        }
    }
    let mut json = String::new();
    for r in results {
        for d in &r.diagnostics {
            let mut value = serde_json::to_value(d).expect("diagnostics serialize");
            if let serde_json::Value::Object(map) = &mut value {
                map.insert("study".into(), serde_json::Value::String(r.label.clone()));
            }
            let _ = writeln!(json, "{value}");
        }
    }
    std::fs::write(dir.join("report.json"), json)?;
    for (metric, extract) in [
        ("l2", (|r: &LevelRow| r.l2) as fn(&LevelRow) -> f64),
        ("energy", |r: &LevelRow| r.energy),
        ("pk_norm", |r: &LevelRow| r.pk_norm),
    ] {
        let series: Vec<(String, Vec<(f64, f64)>)> = results
            .iter()
            .map(|r| {
                (
                    r.label.clone(),
                    r.rows.iter().map(|row| (row.h, extract(row))).collect(),
                )
            })
            .collect();
        let svg = log_log_svg(&format!("{metric} vs h"), &series);
        std::fs::write(dir.join(format!("plot_{metric}.svg")), svg)?;
    }
    Ok(())
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}

/// Self-contained log-log SVG plot with slope-1 and slope-2 reference lines.
pub fn log_log_svg(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const ML: f64 = 70.0;
    const MR: f64 = 160.0;
    const MT: f64 = 40.0;
    const MB: f64 = 50.0;
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let finite: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().copied())
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"16\" text-anchor=\"middle\">{title}</text>",
        W / 2.0
    );
    if finite.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &finite {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    let pad = 0.25;
    x0 -= pad;
    x1 += pad;
    y0 -= pad;
    y1 += pad;
    let px = |x: f64| ML + (x.log10() - x0) / (x1 - x0) * (W - ML - MR);
    let py = |y: f64| H - MB - (y.log10() - y0) / (y1 - y0) * (H - MT - MB);
    // axes box and decade ticks
    let _ = writeln!(
        svg,
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - ML - MR,
        H - MT - MB
    );
    for d in (x0.ceil() as i64)..=(x1.floor() as i64) {
        let x = px(10f64.powi(d as i32));
        let _ = writeln!(
            svg,
            "<line x1=\"{x}\" y1=\"{MT}\" x2=\"{x}\" y2=\"{}\" stroke=\"#dddddd\"/><text x=\"{x}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">1e{d}</text>",
            H - MB,
            H - MB + 18.0
        );
    }
    for d in (y0.ceil() as i64)..=(y1.floor() as i64) {
        let y = py(10f64.powi(d as i32));
        let _ = writeln!(
            svg,
            "<line x1=\"{ML}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#dddddd\"/><text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">1e{d}</text>",
            W - MR,
            ML - 6.0,
            y + 4.0
        );
    }
    // slope reference guides anchored at the first finite point
    let (hx, hy) = finite[0];
    for (slope, dash) in [(1.0, "4 3"), (2.0, "1 3")] {
        let pts: Vec<String> = [(x0 + pad, 0.0), (x1 - pad, 0.0)]
            .iter()
            .map(|(lx, _)| {
                let x = 10f64.powf(*lx);
                let y = hy * (x / hx).powf(slope);
                format!("{:.2},{:.2}", px(x), py(y))
            })
            .collect();
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#999999\" stroke-dasharray=\"{dash}\"/>",
            pts.join(" ")
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" fill=\"#666666\">dashed: slope 1, dotted: slope 2</text>",
        ML + 4.0,
        H - MB - 6.0
    );
    for (si, (label, pts)) in series.iter().enumerate() {
        let color = palette[si % palette.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0)
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            path.join(" ")
        );
        for (x, y) in pts.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0) {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                px(*x),
                py(*y)
            );
        }
        let ly = MT + 16.0 + 18.0 * si as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"1.5\"/><text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">{label}</text>",
            W - MR + 10.0,
            W - MR + 34.0,
            W - MR + 40.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}
