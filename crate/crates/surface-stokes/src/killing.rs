//! Killing-field detection and filtering policies.
//!
//! Three routes to the filtered velocity U - P_K U: the analytic projection
//! when the Killing basis is known in closed form, removal of the first
//! dim(K) discrete eigenfunctions when only the dimension is known, and the
//! eigenvalue threshold Lambda_i <= h^alpha - 2 h^2 when nothing is known.
//! A separate pipeline handles forcing terms that contain Killing components
//! themselves.

use crate::assembly::FeSystem;
use crate::error::{Error, Result};
use crate::fem::FeFunction;
use crate::solver::{
    self, project_analytic_killing, project_discrete_killing, EigenSet, SaddleSolver,
    StokesSolution,
};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FilterPolicy {
    /// No filtering at all.
    None,
    /// Subtract the analytic Killing projection.
    ManualAnalytic,
    /// Remove the span of the first d discrete eigenfunctions.
    KnownDim(usize),
    /// Threshold criterion with exponent alpha in [1, 2).
    Threshold(f64),
}

impl FilterPolicy {
    pub fn label(&self) -> String {
        match self {
            FilterPolicy::None => "none".into(),
            FilterPolicy::ManualAnalytic => "manual".into(),
            FilterPolicy::KnownDim(d) => format!("known:{d}"),
            FilterPolicy::Threshold(a) => format!("auto:{a}"),
        }
    }
}

/// Audit record of one filtering decision; `selected_modes` is 1-based.
#[derive(Clone, Debug, Serialize)]
pub struct FilterReport {
    pub policy: String,
    pub h: f64,
    pub eigenvalues: Vec<f64>,
    pub threshold: Option<f64>,
    pub selected_modes: Vec<usize>,
    /// Lambda_i minus the threshold (threshold mode) or the two-sided
    /// comparison margin (forcing mode); negative means selected.
    pub margins: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forcing_diagnostics: Option<ForcingDiagnostics>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ForcingDiagnostics {
    /// Per mode: Lambda_i / (Lambda_i + h^(2/3))^2.
    pub left: Vec<f64>,
    /// Per mode: 1 / (Lambda_i + h^2) - left.
    pub right: Vec<f64>,
    /// The printed rearrangement Lambda + 2 Lambda (h^2 - h^(2/3)) <= h^(4/3),
    /// logged for comparison; the selection itself uses left <= right.
    pub rearranged_form: Vec<bool>,
}

pub struct FilterOutcome {
    pub filtered: FeFunction,
    pub report: FilterReport,
}

/// The threshold criterion: indices i (0-based, among the first three) with
/// Lambda_i <= h^alpha - 2 h^2. Negative eigenvalues always qualify.
pub fn threshold_select(eigs: &EigenSet, h: f64, alpha: f64) -> Vec<usize> {
    let t = threshold_value(h, alpha);
    eigs.eigenvalues
        .iter()
        .take(3)
        .enumerate()
        .filter(|(_, &lam)| lam <= t)
        .map(|(i, _)| i)
        .collect()
}

pub fn threshold_value(h: f64, alpha: f64) -> f64 {
    h.powf(alpha) - 2.0 * h * h
}

/// Apply a filtering policy to a solved velocity. The eigenpairs are only
/// consulted by the policies that need them.
pub fn filter_velocity(
    system: &FeSystem,
    eigs: Option<&EigenSet>,
    solution: &StokesSolution,
    policy: FilterPolicy,
) -> Result<FilterOutcome> {
    let h = system.h();
    let eigenvalues = eigs.map(|e| e.eigenvalues.clone()).unwrap_or_default();
    let need_eigs = || {
        eigs.ok_or_else(|| {
            Error::InvalidConfig(format!(
                "policy {} requires eigenpairs",
                policy.label()
            ))
        })
    };
    let (filtered, selected, threshold): (FeFunction, Vec<usize>, Option<f64>) = match policy {
        FilterPolicy::None => (solution.velocity.clone(), vec![], None),
        FilterPolicy::ManualAnalytic => {
            let p = project_analytic_killing(system, &solution.velocity)?;
            (p.filtered, vec![], None)
        }
        FilterPolicy::KnownDim(0) => (solution.velocity.clone(), vec![], None),
        FilterPolicy::KnownDim(d) => {
            let eigs = need_eigs()?;
            if d > eigs.eigenvalues.len() {
                return Err(Error::KnownDimTooLarge(d, eigs.eigenvalues.len()));
            }
            let sel: Vec<usize> = (0..d).collect();
            let f = project_discrete_killing(system, eigs, &sel, &solution.velocity);
            (f, sel, None)
        }
        FilterPolicy::Threshold(alpha) => {
            let eigs = need_eigs()?;
            let sel = threshold_select(eigs, h, alpha);
            let f = project_discrete_killing(system, eigs, &sel, &solution.velocity);
            (f, sel, Some(threshold_value(h, alpha)))
        }
    };
    let margins = match threshold {
        Some(t) => eigenvalues.iter().take(3).map(|l| l - t).collect(),
        None => vec![],
    };
    Ok(FilterOutcome {
        filtered,
        report: FilterReport {
            policy: policy.label(),
            h,
            eigenvalues,
            threshold,
            selected_modes: selected.iter().map(|i| i + 1).collect(),
            margins,
            forcing_diagnostics: None,
        },
    })
}

pub struct ForcingPipelineResult {
    /// Solution of the epsilon = h^(2/3) problem with the raw forcing.
    pub u_f: FeFunction,
    /// epsilon * U_f, the computable estimate of P_K f.
    pub pk_f_estimate: FeFunction,
    /// Solution with the corrected load f - eps U_f at the same epsilon.
    pub w: FeFunction,
    /// The epsilon = h^2 solution whose Killing part gets removed.
    pub u_h2: StokesSolution,
    pub filtered: FeFunction,
    pub report: FilterReport,
    pub epsilon_f: f64,
}

/// Filtering pipeline for forcing terms with Killing components:
/// estimate P_K f from the strongly perturbed solve, compare mode weights of
/// the corrected solve against the weakly perturbed one, and remove the
/// modes that the comparison classifies as discrete Killing fields.
pub fn forcing_filter_pipeline(
    system: &FeSystem,
    eigs: &EigenSet,
) -> Result<ForcingPipelineResult> {
    let h = system.h();
    let eps_f = h.powf(2.0 / 3.0);
    let solver_f = SaddleSolver::new(system, eps_f)?;
    let g0 = vec![0.0; system.n_pressure()];

    // The Killing-estimation solves live in the divergence-free subspace
    // (zero data); only the solution being filtered carries the physical
    // divergence data. Mixing g into U_f would couple the pressure
    // multipliers of the eigenpairs into the mode arithmetic.
    let u_f = solver::solve_stokes_with(&solver_f, &system.f_vec, &g0)?;
    let pk_f_estimate = FeFunction {
        coeffs: u_f.velocity.coeffs.iter().map(|c| eps_f * c).collect(),
    };
    // corrected load f - eps U_f; W solves the same-epsilon problem with the
    // Killing part of the forcing (approximately) removed
    let mut f_corr = system.f_vec.clone();
    let mut mv_uf = vec![0.0; system.n_velocity()];
    system.mv.matvec_add(eps_f, &u_f.velocity.coeffs, &mut mv_uf);
    for (fc, m) in f_corr.iter_mut().zip(&mv_uf) {
        *fc -= m;
    }
    let w = solver::solve_stokes_with(&solver_f, &f_corr, &g0)?;

    let u_h2 = solver::solve_stokes(system, h * h)?;

    // two-sided comparison per candidate mode
    let m = eigs.eigenvalues.len().min(3);
    let mut left = Vec::with_capacity(m);
    let mut right = Vec::with_capacity(m);
    let mut rearranged = Vec::with_capacity(m);
    let mut selected = Vec::new();
    for i in 0..m {
        let lam = eigs.eigenvalues[i];
        let l = lam / (lam + eps_f).powi(2);
        let r = 1.0 / (lam + h * h) - l;
        left.push(l);
        right.push(r);
        rearranged.push(lam + 2.0 * lam * (h * h - eps_f) <= h.powf(4.0 / 3.0));
        if l <= r {
            selected.push(i);
        }
    }
    let filtered = project_discrete_killing(system, eigs, &selected, &u_h2.velocity);
    let margins: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l - r).collect();
    let report = FilterReport {
        policy: "forcing".into(),
        h,
        eigenvalues: eigs.eigenvalues.clone(),
        threshold: None,
        selected_modes: selected.iter().map(|i| i + 1).collect(),
        margins,
        forcing_diagnostics: Some(ForcingDiagnostics { left, right, rearranged_form: rearranged }),
    };
    Ok(ForcingPipelineResult {
        u_f: u_f.velocity,
        pk_f_estimate,
        w: w.velocity,
        u_h2,
        filtered,
        report,
    epsilon_f: eps_f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, AssemblyOptions};
    use crate::geometry::SurfaceGeometry;
    use crate::mesh::TriSurfaceMesh;

    fn fake_eigs(vals: &[f64]) -> EigenSet {
        EigenSet {
            eigenvalues: vals.to_vec(),
            eigenvectors: vals.iter().map(|_| FeFunction::zeros(1)).collect(),
            residuals: vec![0.0; vals.len()],
        }
    }

    #[test]
    fn threshold_plugin_arithmetic() {
        // eigenvalues from the c = 1.1 ellipsoid
        let eigs = fake_eigs(&[1e-6, 0.0096, 0.0096]);
        // h = 0.1, alpha = 1: threshold 0.08 -> all three selected
        assert_eq!(threshold_select(&eigs, 0.1, 1.0), vec![0, 1, 2]);
        // h = 0.02: threshold 0.0192 -> still all three
        assert_eq!(threshold_select(&eigs, 0.02, 1.0), vec![0, 1, 2]);
        // h = 0.005: threshold 0.00495 -> only the true Killing mode
        assert_eq!(threshold_select(&eigs, 0.005, 1.0), vec![0]);
        // h = 0.05, alpha = 3/2: threshold ~ 0.00618 -> only mode 1
        let t = threshold_value(0.05, 1.5);
        assert!((t - (0.05f64.powf(1.5) - 2.0 * 0.0025)).abs() < 1e-15);
        assert_eq!(threshold_select(&eigs, 0.05, 1.5), vec![0]);
        // negative eigenvalues always pass
        let eigs = fake_eigs(&[-1e-3, 0.5, 0.6]);
        assert_eq!(threshold_select(&eigs, 0.01, 1.5), vec![0]);
    }

    #[test]
    fn threshold_monotone_in_threshold() {
        let eigs = fake_eigs(&[1e-8, 0.004, 0.021]);
        let mut prev: Option<Vec<usize>> = None;
        // growing h grows h^alpha - 2h^2 in this range
        for h in [0.001, 0.004, 0.02, 0.08, 0.2] {
            let sel = threshold_select(&eigs, h, 1.0);
            if let Some(p) = prev {
                assert!(p.iter().all(|i| sel.contains(i)), "lost indices when enlarging");
            }
            prev = Some(sel);
        }
    }

    #[test]
    fn eq111_comparison_at_reference_values() {
        // Lambda = 0 -> left 0 <= right 1/h^2: always selected
        let h: f64 = 0.1;
        let eps_f = h.powf(2.0 / 3.0);
        let lam = 0.0f64;
        let left = lam / (lam + eps_f).powi(2);
        let right = 1.0 / (lam + h * h) - left;
        assert!(left <= right);
        // Lambda = 0.40 (c = 2): selected at h = 0.1, excluded at h = 0.02
        let lam = 0.40f64;
        for (h, expect_selected) in [(0.1f64, true), (0.02, false)] {
            let eps_f = h.powf(2.0 / 3.0);
            let left = lam / (lam + eps_f).powi(2);
            let right = 1.0 / (lam + h * h) - left;
            assert_eq!(left <= right, expect_selected, "h = {h}");
        }
    }

    #[test]
    fn known_dim_zero_and_none_leave_solution_unchanged() {
        let geom = SurfaceGeometry::new(1.2).unwrap();
        let mesh = TriSurfaceMesh::icosphere(&geom, 1).unwrap();
        let sys = assemble(&mesh, &geom, &AssemblyOptions::default()).unwrap();
        let sol = solver::solve_stokes(&sys, sys.h()).unwrap();
        for policy in [FilterPolicy::None, FilterPolicy::KnownDim(0)] {
            let out = filter_velocity(&sys, None, &sol, policy).unwrap();
            assert_eq!(out.filtered.coeffs, sol.velocity.coeffs);
            assert!(out.report.selected_modes.is_empty());
        }
        // known_dim beyond available pairs errors
        let eigs = solver::solve_eigen(&sys, 2, 3).unwrap();
        assert!(matches!(
            filter_velocity(&sys, Some(&eigs), &sol, FilterPolicy::KnownDim(3)),
            Err(Error::KnownDimTooLarge(3, 2))
        ));
    }

    #[test]
    fn filter_report_serializes_to_json() {
        let report = FilterReport {
            policy: "auto:1.5".into(),
            h: 0.1,
            eigenvalues: vec![1e-6, 0.0096, 0.0096],
            threshold: Some(0.01),
            selected_modes: vec![1],
            margins: vec![-0.01, -0.0004, -0.0004],
            forcing_diagnostics: None,
        };
        let line = serde_json::to_string(&report).unwrap();
        assert!(line.contains("\"policy\":\"auto:1.5\""));
        assert!(!line.contains("forcing_diagnostics"));
    }

    #[test]
    fn pipeline_w_matches_eigenexpansion() {
        // W = sum Lambda_i/(Lambda_i+eps)^2 (f,U_i) U_i mode by mode
        let geom = SurfaceGeometry::unit_sphere();
        let mesh = TriSurfaceMesh::icosphere(&geom, 2).unwrap();
        let sys = assemble(
            &mesh,
            &geom,
            &AssemblyOptions { killing_forcing: 1.0, ..Default::default() },
        )
        .unwrap();
        let eigs = solver::solve_eigen(&sys, 3, 17).unwrap();
        let res = forcing_filter_pipeline(&sys, &eigs).unwrap();
        let eps = res.epsilon_f;
        for i in 0..3 {
            let u_i = &eigs.eigenvectors[i].coeffs;
            let f_i: f64 = sys.f_vec.iter().zip(u_i).map(|(a, b)| a * b).sum();
            let lam = eigs.eigenvalues[i];
            let expect = lam / (lam + eps).powi(2) * f_i;
            let got = sys.mv_inner(&res.w.coeffs, u_i);
            assert!(
                (got - expect).abs() <= 1e-6 * expect.abs().max(1.0),
                "mode {i}: {got} vs {expect}"
            );
        }
        // the true Killing mode is always selected
        assert!(res.report.selected_modes.contains(&1));
    }
}
