//! Benchmark problems on [0,1]^d, including synthetic fronts with known
//! geometry used to validate center estimation.

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::sync::Arc;

use crate::error::{CehiError, Result};

type EvalFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type FrontFn = Arc<dyn Fn(usize) -> Vec<Vec<f64>> + Send + Sync>;

/// A multi-objective minimization problem on the unit cube.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub dim: usize,
    pub n_obj: usize,
    eval: EvalFn,
    /// Center of the true Pareto front, when known analytically.
    pub true_center: Option<Vec<f64>>,
    front_fn: Option<FrontFn>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("n_obj", &self.n_obj)
            .finish()
    }
}

impl Problem {
    pub fn new<F>(name: &str, dim: usize, n_obj: usize, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Problem {
            name: name.to_string(),
            dim,
            n_obj,
            eval: Arc::new(eval),
            true_center: None,
            front_fn: None,
        }
    }

    /// Evaluate the objectives, rejecting out-of-cube inputs and non-finite
    /// outputs.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(CehiError::InvalidInput(format!(
                "expected {} coordinates, got {}",
                self.dim,
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite() || *v < -1e-9 || *v > 1.0 + 1e-9) {
            return Err(CehiError::InvalidInput(format!(
                "input outside [0,1]^d: {x:?}"
            )));
        }
        let y = (self.eval)(x);
        if y.len() != self.n_obj || y.iter().any(|v| !v.is_finite()) {
            return Err(CehiError::NonFiniteObjective(y));
        }
        Ok(y)
    }

    /// Discretization of the true Pareto front, when known.
    pub fn reference_front(&self, n: usize) -> Option<Vec<Vec<f64>>> {
        self.front_fn.as_ref().map(|f| f(n))
    }
}

/// ZDT1 with `d` variables: convex front f2 = 1 - sqrt(f1) when the trailing
/// coordinates are zero.
pub fn zdt1(d: usize) -> Problem {
    assert!(d >= 2);
    let mut p = Problem::new("zdt1", d, 2, move |x: &[f64]| {
        let f1 = x[0];
        let g = 1.0 + 9.0 * x[1..].iter().sum::<f64>() / (d as f64 - 1.0);
        let f2 = g * (1.0 - (f1 / g).sqrt());
        vec![f1, f2]
    });
    // The Ideal-Nadir diagonal f2 = f1 meets the front where f = (3-sqrt 5)/2.
    let c = (3.0 - 5f64.sqrt()) / 2.0;
    p.true_center = Some(vec![c, c]);
    p.front_fn = Some(Arc::new(|n: usize| {
        (0..n)
            .map(|i| {
                let f1 = i as f64 / (n - 1) as f64;
                vec![f1, 1.0 - f1.sqrt()]
            })
            .collect()
    }));
    p
}

/// 2D problem whose front is the segment f1 + f2 = 1.
pub fn linear_front() -> Problem {
    let mut p = Problem::new("linear", 2, 2, |x: &[f64]| {
        vec![x[0], 1.0 - x[0] + x[1]]
    });
    p.true_center = Some(vec![0.5, 0.5]);
    p.front_fn = Some(Arc::new(|n: usize| {
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                vec![t, 1.0 - t]
            })
            .collect()
    }));
    p
}

/// 2D problem whose front is the concave unit-circle arc.
pub fn concave_arc_front() -> Problem {
    let mut p = Problem::new("concave_arc", 2, 2, |x: &[f64]| {
        let a = FRAC_PI_2 * x[0];
        vec![a.cos(), a.sin() + x[1]]
    });
    p.true_center = Some(vec![SQRT_2 / 2.0, SQRT_2 / 2.0]);
    p.front_fn = Some(Arc::new(|n: usize| {
        (0..n)
            .map(|i| {
                let a = FRAC_PI_2 * i as f64 / (n - 1) as f64;
                vec![a.cos(), a.sin()]
            })
            .collect()
    }));
    p
}

/// 2D problem with a front split in two branches; the Ideal-Nadir line
/// passes through the gap, so the center is the projection of a branch
/// endpoint.
pub fn discontinuous_front() -> Problem {
    let eval = |x: &[f64]| {
        let (f1, base) = if x[0] < 0.5 {
            let f1 = 0.8 * x[0];
            (f1, 1.0 - f1)
        } else {
            let f1 = 0.6 + 0.8 * (x[0] - 0.5);
            (f1, 0.45 - 0.625 * (f1 - 0.6))
        };
        vec![f1, base + x[1]]
    };
    let mut p = Problem::new("discontinuous", 2, 2, eval);
    // Ideal (0, 0.2), Nadir (1, 1); the closest front point to the diagonal
    // is the branch endpoint (0.4, 0.6), whose projection parameter is
    // t = 0.72 / 1.64.
    let t = 0.72 / 1.64;
    p.true_center = Some(vec![t, 0.2 + 0.8 * t]);
    p.front_fn = Some(Arc::new(|n: usize| {
        let half = n / 2;
        let mut pts = Vec::with_capacity(n);
        for i in 0..half {
            let f1 = 0.4 * i as f64 / (half - 1) as f64;
            pts.push(vec![f1, 1.0 - f1]);
        }
        for i in 0..(n - half) {
            let f1 = 0.6 + 0.4 * i as f64 / (n - half - 1) as f64;
            pts.push(vec![f1, 0.45 - 0.625 * (f1 - 0.6)]);
        }
        pts
    }));
    p
}

/// 2D problem with a wiggly attainment surface; the front has no closed
/// form, so no analytic center is attached.
pub fn convoluted_front() -> Problem {
    Problem::new("convoluted", 2, 2, |x: &[f64]| {
        let f1 = x[0];
        let f2 = 1.0 - f1 + 0.15 * (3.0 * std::f64::consts::PI * f1).sin() + x[1];
        vec![f1, f2]
    })
}

/// Look up a built-in problem. `dim` applies to problems with a free input
/// dimension (ZDT1); the synthetic-front problems are fixed at two inputs.
pub fn by_name(name: &str, dim: usize) -> Result<Problem> {
    match name {
        "zdt1" => {
            if dim < 2 {
                return Err(CehiError::Config("zdt1 needs dim >= 2".into()));
            }
            Ok(zdt1(dim))
        }
        "linear" => Ok(linear_front()),
        "concave_arc" => Ok(concave_arc_front()),
        "discontinuous" => Ok(discontinuous_front()),
        "convoluted" => Ok(convoluted_front()),
        other => Err(CehiError::Config(format!("unknown problem '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::{non_dominated_set, summarize};
    use approx::assert_relative_eq;

    #[test]
    fn zdt1_front_values() {
        let p = zdt1(4);
        // On the front (trailing zeros): f2 = 1 - sqrt(f1).
        let y = p.eval(&[0.25, 0.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(y[0], 0.25);
        assert_relative_eq!(y[1], 0.5);
        // Off-front: g > 1 pushes f2 up.
        let y2 = p.eval(&[0.25, 0.5, 0.5, 0.5]).unwrap();
        assert!(y2[1] > y[1]);
    }

    #[test]
    fn zdt1_center_on_diagonal() {
        let p = zdt1(4);
        let c = p.true_center.clone().unwrap();
        assert_relative_eq!(c[0], 0.381_966_011_250_105, epsilon = 1e-12);
        // The center lies on the front: f2 = 1 - sqrt(f1).
        assert_relative_eq!(c[1], 1.0 - c[0].sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = zdt1(3);
        assert!(p.eval(&[0.5, 0.5]).is_err());
        assert!(p.eval(&[1.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn synthetic_centers_match_front_geometry() {
        for prob in [linear_front(), concave_arc_front(), discontinuous_front()] {
            let front = prob.reference_front(2001).unwrap();
            let s = summarize(&front);
            let c = prob.true_center.clone().unwrap();
            for j in 0..2 {
                assert_relative_eq!(s.center[j], c[j], epsilon = 2e-3);
            }
        }
    }

    #[test]
    fn discontinuous_front_is_nondominated() {
        let front = discontinuous_front().reference_front(400).unwrap();
        assert_eq!(non_dominated_set(&front).len(), front.len());
    }

    #[test]
    fn discontinuous_geometry() {
        let front = discontinuous_front().reference_front(2000).unwrap();
        let s = summarize(&front);
        assert_relative_eq!(s.ideal[0], 0.0, epsilon = 1e-9);
        assert_relative_eq!(s.ideal[1], 0.2, epsilon = 1e-9);
        assert_relative_eq!(s.nadir[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(s.nadir[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn by_name_round_trip() {
        for name in ["zdt1", "linear", "concave_arc", "discontinuous", "convoluted"] {
            let p = by_name(name, 4).unwrap();
            assert_eq!(p.name, name);
        }
        assert!(by_name("nope", 2).is_err());
    }
}
