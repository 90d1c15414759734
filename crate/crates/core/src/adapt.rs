//! Bulk marking and the adaptive solve / estimate / mark / refine loop.

use crate::error::{Error, Result};
use crate::estimator::{estimate, EstimatorOptions, IndicatorField};
use crate::fespace::{h1_semi_error, l2_error, P1Function};
use crate::mesh::Triangulation;
use crate::quadrature::QuadratureRule;
use crate::solver::{fixed_point_solve, ProblemData, SolveReport, SolverConfig};

/// Relative slack on the bulk criterion so that exact ties in floating
/// point still terminate the greedy selection.
const MARKING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    /// Bulk fraction in `(0, 1]`.
    pub theta: f64,
    /// The loop stops once the estimate reaches this value.
    pub estimator_tol: f64,
    pub max_cycles: usize,
    pub solver: SolverConfig,
    pub tau: f64,
    /// The loop also stops once the vertex count reaches this value.
    pub dof_budget: usize,
    pub estimator: EstimatorOptions,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            estimator_tol: 0.1,
            max_cycles: 30,
            solver: SolverConfig::default(),
            tau: 0.1,
            dof_budget: 200_000,
            estimator: EstimatorOptions::default(),
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::invalid(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if !(self.estimator_tol > 0.0) {
            return Err(Error::invalid(format!(
                "estimator tolerance must be positive, got {}",
                self.estimator_tol
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if self.max_cycles == 0 || self.dof_budget == 0 {
            return Err(Error::invalid("max_cycles and dof_budget must be positive"));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub cycle: usize,
    pub dofs: usize,
    pub triangles: usize,
    /// `sqrt(Σ_K eta_K²)`.
    pub estimator: f64,
    /// The edge/element sum form.
    pub estimator_l1: f64,
    pub iterations: usize,
    pub l2_error: Option<f64>,
    pub h1_error: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdaptiveHistory {
    pub cycles: Vec<CycleRecord>,
}

impl AdaptiveHistory {
    pub fn last(&self) -> Option<&CycleRecord> {
        self.cycles.last()
    }
}

#[derive(Debug, Clone)]
pub struct AdaptiveOutcome {
    pub report: SolveReport,
    pub mesh: Triangulation,
    pub indicators: IndicatorField,
    pub history: AdaptiveHistory,
}

/// Smallest greedy set with `Σ_M eta² >= θ² Σ eta²`, taking larger
/// indicators first and breaking ties by triangle id. Returned sorted.
pub fn mark(indicators: &IndicatorField, theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::invalid(format!("theta must lie in (0, 1], got {theta}")));
    }
    if theta >= 1.0 {
        return Ok((0..indicators.len()).filter(|&k| indicators.eta[k] > 0.0).collect());
    }
    let sq: Vec<f64> = indicators.eta.iter().map(|e| e * e).collect();
    let total: f64 = sq.iter().sum();
    if total <= 0.0 {
        return Ok(Vec::new());
    }
    let target = theta * theta * total * (1.0 - MARKING_SLACK);
    let mut order: Vec<usize> = (0..sq.len()).collect();
    order.sort_by(|&a, &b| sq[b].total_cmp(&sq[a]).then(a.cmp(&b)));
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for k in order {
        if acc >= target {
            break;
        }
        acc += sq[k];
        marked.push(k);
    }
    marked.sort_unstable();
    Ok(marked)
}

/// Transfers `u` to a refinement of its mesh. Old vertices keep their
/// values and each new vertex takes the mean of the endpoints it bisected.
pub fn prolongate(new_mesh: &Triangulation, u: &P1Function) -> Result<P1Function> {
    if u.len() > new_mesh.n_vertices() {
        return Err(Error::invalid("target mesh is coarser than the function's mesh"));
    }
    let mut values = u.coefficients().to_vec();
    values.reserve(new_mesh.n_vertices() - u.len());
    for v in &new_mesh.vertices()[u.len()..] {
        match v.parents {
            Some([a, b]) if a < v.id && b < v.id => values.push(0.5 * (values[a] + values[b])),
            _ => {
                return Err(Error::invalid(format!(
                    "vertex {} has no earlier parents; not a refinement",
                    v.id
                )))
            }
        }
    }
    P1Function::new(values)
}

/// Runs the adaptive loop from `initial_mesh`. Each solve after the first
/// is warm-started from the prolongated previous solution.
pub fn adaptive_solve(
    problem: &ProblemData,
    initial_mesh: &Triangulation,
    config: &AdaptiveConfig,
) -> Result<AdaptiveOutcome> {
    config.validate()?;
    let problem = problem.clone().with_tau(config.tau)?;
    let quad = QuadratureRule::order6();
    let mut mesh = initial_mesh.clone();
    let mut u0: Option<P1Function> = None;
    let mut history = AdaptiveHistory::default();
    let mut cycle = 0;
    loop {
        let report = fixed_point_solve(&mesh, &problem, &config.solver, u0.take())
            .map_err(|e| e.at_cycle(cycle))?;
        let indicators = estimate(
            &mesh,
            &report.previous,
            &report.solution,
            &*problem.f,
            problem.tau,
            &config.estimator,
        )
        .map_err(|e| e.at_cycle(cycle))?;
        history.cycles.push(CycleRecord {
            cycle,
            dofs: mesh.n_vertices(),
            triangles: mesh.n_triangles(),
            estimator: indicators.global_estimate_l2,
            estimator_l1: indicators.global_estimate,
            iterations: report.iterations,
            l2_error: problem
                .exact_solution
                .as_ref()
                .map(|u| l2_error(&mesh, &report.solution, |x| u(x), &quad)),
            h1_error: problem
                .exact_gradient
                .as_ref()
                .map(|g| h1_semi_error(&mesh, &report.solution, |x| g(x), &quad)),
        });

        let done = indicators.global_estimate_l2 <= config.estimator_tol
            || cycle + 1 >= config.max_cycles
            || mesh.n_vertices() >= config.dof_budget;
        let marked = if done { Vec::new() } else { mark(&indicators, config.theta)? };
        if marked.is_empty() {
            return Ok(AdaptiveOutcome {
                report,
                mesh,
                indicators,
                history,
            });
        }
        let refined = mesh.refine(&marked).map_err(|e| e.at_cycle(cycle))?;
        u0 = Some(prolongate(&refined, &report.solution)?);
        mesh = refined;
        cycle += 1;
    }
}
