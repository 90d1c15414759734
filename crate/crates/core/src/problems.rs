//! Benchmark problems with known solutions on `(-1, 1)²`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::solver::ProblemData;

#[derive(Debug, Clone)]
pub struct BenchmarkProblem {
    pub name: &'static str,
    pub description: &'static str,
    pub data: ProblemData,
    /// Relaxation used for uniform studies when none is given.
    pub default_tau: f64,
    /// Relaxation used for adaptive runs when none is given.
    pub default_adaptive_tau: f64,
}

fn classical() -> BenchmarkProblem {
    let u = |[x, y]: [f64; 2]| x * x + y * y;
    let data = ProblemData::new(|_| 2.0, u, 1000.0)
        .expect("positive tau")
        .with_exact(u, |[x, y]| [2.0 * x, 2.0 * y]);
    BenchmarkProblem {
        name: "classical",
        description: "f = 2, u = |x|^2 (smooth solution)",
        data,
        default_tau: 1000.0,
        default_adaptive_tau: 1000.0,
    }
}

fn aronsson_u([x, y]: [f64; 2]) -> f64 {
    x.abs().powf(4.0 / 3.0) - y.abs().powf(4.0 / 3.0)
}

fn aronsson_grad([x, y]: [f64; 2]) -> [f64; 2] {
    let d = |t: f64| {
        if t == 0.0 {
            0.0
        } else {
            4.0 / 3.0 * t.signum() * t.abs().cbrt()
        }
    };
    [d(x), -d(y)]
}

fn aronsson() -> BenchmarkProblem {
    let data = ProblemData::new(|_| 0.0, aronsson_u, 1.0)
        .expect("positive tau")
        .with_exact(aronsson_u, aronsson_grad);
    BenchmarkProblem {
        name: "aronsson",
        description: "f = 0, u = |x|^(4/3) - |y|^(4/3) (viscosity solution, C^{1,1/3})",
        data,
        default_tau: 1.0,
        default_adaptive_tau: 0.1,
    }
}

/// All built-in problems by name.
pub fn registry() -> BTreeMap<&'static str, BenchmarkProblem> {
    [classical(), aronsson()].into_iter().map(|p| (p.name, p)).collect()
}

pub fn problem(name: &str) -> Result<BenchmarkProblem> {
    registry().remove(name).ok_or_else(|| {
        let known: Vec<_> = registry().keys().copied().collect();
        Error::invalid(format!("unknown problem '{name}' (known: {})", known.join(", ")))
    })
}
