//! Convergence studies on uniformly refined criss-cross meshes.

use crate::error::{Error, Result};
use crate::estimator::{estimate, EstimatorOptions, IndicatorField};
use crate::fespace::{h1_semi_error, l2_error};
use crate::mesh::{build_initial_mesh, Triangulation};
use crate::problems::problem;
use crate::quadrature::QuadratureRule;
use crate::solver::{fixed_point_solve, SolveReport, SolverConfig};

/// Subdivisions per side of the coarsest mesh in a study.
pub const BASE_SUBDIVISIONS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct EocRow {
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub l2_error: f64,
    pub l2_eoc: Option<f64>,
    pub h1_error: f64,
    pub h1_eoc: Option<f64>,
    /// `sqrt(Σ_K eta_K²)`.
    pub estimator: f64,
    pub estimator_eoc: Option<f64>,
    pub iterations: usize,
    /// The edge/element sum form of the estimate.
    pub estimator_l1: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EocTable {
    pub rows: Vec<EocRow>,
}

impl EocTable {
    pub fn last(&self) -> Option<&EocRow> {
        self.rows.last()
    }

    /// Appends a row, filling in its rates against the previous one.
    pub fn push(&mut self, mut row: EocRow) {
        if let Some(prev) = self.rows.last() {
            row.l2_eoc = Some(eoc(prev.l2_error, row.l2_error, prev.h, row.h));
            row.h1_eoc = Some(eoc(prev.h1_error, row.h1_error, prev.h, row.h));
            row.estimator_eoc = Some(eoc(prev.estimator, row.estimator, prev.h, row.h));
        } else {
            row.l2_eoc = None;
            row.h1_eoc = None;
            row.estimator_eoc = None;
        }
        self.rows.push(row);
    }
}

/// `log(e0/e1) / log(h0/h1)`.
pub fn eoc(e0: f64, e1: f64, h0: f64, h1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

/// A study that stopped early, with the rows completed before the failure.
#[derive(Debug, thiserror::Error)]
#[error("convergence study failed after {} completed level(s): {source}", .table.rows.len())]
pub struct StudyFailure {
    pub table: EocTable,
    #[source]
    pub source: Error,
}

impl StudyFailure {
    pub fn is_solver_failure(&self) -> bool {
        self.source.is_solver_failure()
    }
}

/// Everything computed on one level, handed to the per-level callback.
pub struct LevelResult<'a> {
    pub level: usize,
    pub mesh: &'a Triangulation,
    pub report: &'a SolveReport,
    pub indicators: &'a IndicatorField,
    pub row: &'a EocRow,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudyConfig {
    pub solver: SolverConfig,
    pub estimator: EstimatorOptions,
}

pub fn convergence_study(
    problem_name: &str,
    levels: usize,
    tau: f64,
    config: &StudyConfig,
) -> std::result::Result<EocTable, StudyFailure> {
    convergence_study_with(problem_name, levels, tau, config, |_| Ok(()))
}

/// Solves on `levels` successive uniform refinements of the base mesh and
/// records errors, estimates and rates. `on_level` runs after each level.
pub fn convergence_study_with(
    problem_name: &str,
    levels: usize,
    tau: f64,
    config: &StudyConfig,
    mut on_level: impl FnMut(&LevelResult<'_>) -> Result<()>,
) -> std::result::Result<EocTable, StudyFailure> {
    let mut table = EocTable::default();
    let fail = |table: &EocTable, source: Error| StudyFailure {
        table: table.clone(),
        source,
    };
    if levels < 2 {
        return Err(fail(&table, Error::invalid(format!("a study needs at least 2 levels, got {levels}"))));
    }
    let bench = problem(problem_name).map_err(|e| fail(&table, e))?;
    let data = bench.data.with_tau(tau).map_err(|e| fail(&table, e))?;
    let (exact, exact_grad) = match (&data.exact_solution, &data.exact_gradient) {
        (Some(u), Some(g)) => (u.clone(), g.clone()),
        _ => return Err(fail(&table, Error::invalid("problem has no exact solution"))),
    };
    let quad = QuadratureRule::order6();
    let mut mesh = build_initial_mesh(BASE_SUBDIVISIONS).map_err(|e| fail(&table, e))?;
    for level in 0..levels {
        if level > 0 {
            mesh = mesh.uniform_refine();
        }
        let report = fixed_point_solve(&mesh, &data, &config.solver, None)
            .map_err(|e| fail(&table, e))?;
        let indicators = estimate(
            &mesh,
            &report.previous,
            &report.solution,
            &*data.f,
            data.tau,
            &config.estimator,
        )
        .map_err(|e| fail(&table, e))?;
        table.push(EocRow {
            level,
            h: mesh.max_h(),
            dofs: mesh.n_vertices(),
            l2_error: l2_error(&mesh, &report.solution, |x| exact(x), &quad),
            l2_eoc: None,
            h1_error: h1_semi_error(&mesh, &report.solution, |x| exact_grad(x), &quad),
            h1_eoc: None,
            estimator: indicators.global_estimate_l2,
            estimator_eoc: None,
            iterations: report.iterations,
            estimator_l1: indicators.global_estimate,
        });
        let result = LevelResult {
            level,
            mesh: &mesh,
            report: &report,
            indicators: &indicators,
            row: table.last().expect("row just pushed"),
        };
        on_level(&result).map_err(|e| fail(&table, e))?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoc_arithmetic() {
        assert!((eoc(4.0, 1.0, 1.0, 0.5) - 2.0).abs() < 1e-15);
        assert!((eoc(1.0, 0.5, 0.2, 0.1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn table_rates() {
        let mut t = EocTable::default();
        let row = |h: f64| EocRow {
            level: 0,
            h,
            dofs: 0,
            l2_error: h * h,
            l2_eoc: Some(9.0),
            h1_error: h,
            h1_eoc: None,
            estimator: h,
            estimator_eoc: None,
            iterations: 1,
            estimator_l1: 1.0,
        };
        t.push(row(1.0));
        t.push(row(0.5));
        assert_eq!(t.rows[0].l2_eoc, None);
        assert!((t.rows[1].l2_eoc.unwrap() - 2.0).abs() < 1e-14);
        assert!((t.rows[1].h1_eoc.unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn short_study_shape() {
        let t = convergence_study("classical", 2, 1000.0, &StudyConfig::default()).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].dofs, 41);
        assert_eq!(t.rows[1].dofs, 145);
        assert_eq!(t.rows[1].h, 0.5 * t.rows[0].h);
    }

    #[test]
    fn bad_requests() {
        let c = StudyConfig::default();
        let e = convergence_study("classical", 1, 1.0, &c).unwrap_err();
        assert!(matches!(e.source, Error::InvalidArgument(_)));
        let e = convergence_study("nonexistent", 3, 1.0, &c).unwrap_err();
        assert!(e.table.rows.is_empty() && !e.is_solver_failure());
    }
}
