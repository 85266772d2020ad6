use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

/// One executed check. Passes when `residual <= tolerance`; a NaN residual fails.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: String,
    pub n: usize,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    pub fn new(suite: &str, n: usize, seed: u64, samples: usize) -> Self {
        Report {
            suite: suite.into(),
            n,
            seed,
            samples,
            checks: Vec::new(),
            pass: true,
        }
    }

    pub fn push(&mut self, c: Check) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    /// Largest value of `f` over `items`, computed in parallel. A failing item
    /// makes the residual infinite and keeps the first error message.
    pub fn max_over<T: Sync>(
        &mut self,
        name: &str,
        tolerance: f64,
        items: &[T],
        f: impl Fn(&T) -> gtstokes::Result<f64> + Sync,
    ) -> f64 {
        let t = Instant::now();
        let results: Vec<_> = items.par_iter().map(&f).collect();
        let mut residual: f64 = 0.0;
        let mut error = None;
        for r in results {
            match r {
                Ok(x) if x.is_nan() => residual = f64::NAN,
                Ok(x) => residual = residual.max(x),
                Err(e) => {
                    residual = f64::INFINITY;
                    error.get_or_insert_with(|| e.to_string());
                }
            }
        }
        self.record(name, residual, tolerance, t, error);
        residual
    }

    pub fn record(&mut self, name: &str, residual: f64, tolerance: f64, started: Instant, error: Option<String>) {
        self.push(Check {
            name: name.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
            wall_time_s: started.elapsed().as_secs_f64(),
            error,
        });
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "[{}] {}: {:.3e} (tol {:.1e})\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance
            ));
            if let Some(e) = &c.error {
                s.push_str(&format!("       {e}\n"));
            }
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        s.push_str(&format!(
            "{}: {} checks, {failed} failed\n",
            self.suite,
            self.checks.len()
        ));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_and_errors_fail() {
        let mut r = Report::new("t", 2, 0, 3);
        r.max_over("ok", 1.0, &[0.5, 0.25], |x| Ok(*x));
        assert!(r.pass);
        r.max_over("nan", 1.0, &[0.5, f64::NAN], |x| Ok(*x));
        assert!(!r.checks[1].pass);
        let mut r = Report::new("t", 2, 0, 3);
        r.max_over("err", 1.0, &[1.0], |_| Err(gtstokes::Error::Singular));
        assert!(!r.pass);
        assert_eq!(r.checks[0].residual, f64::INFINITY);
        assert!(r.checks[0].error.as_deref().unwrap().contains("singular"));
    }
}
