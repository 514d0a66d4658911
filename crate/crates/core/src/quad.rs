//! Adaptive quadrature on bounded intervals.
//!
//! Integrands with endpoint singularities are handled upstream by a change of
//! variables (see [`crate::stability`]); here the integrand is assumed finite
//! on the closed interval. Known interior kinks can be passed as breakpoints
//! so the subdivision never straddles them.

use crate::error::{Error, Result};

/// Hard cap on function evaluations per call.
const MAX_EVALS: usize = 1 << 24;

/// Maximum bisection depth of one panel.
const MAX_DEPTH: u32 = 60;

struct Worker<'a, F: FnMut(f64) -> f64> {
    f: &'a mut F,
    evals: usize,
}

impl<F: FnMut(f64) -> f64> Worker<'_, F> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.evals += 1;
        if self.evals > MAX_EVALS {
            return Err(Error::Quadrature(format!(
                "evaluation budget {MAX_EVALS} exhausted"
            )));
        }
        let v = (self.f)(x);
        if !v.is_finite() {
            return Err(Error::Quadrature(format!(
                "integrand not finite at x = {x}"
            )));
        }
        Ok(v)
    }

    /// Recursive adaptive Simpson on [a, b] with whole-panel estimate `s`.
    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        s: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let h = b - a;
        let left = h / 12.0 * (fa + 4.0 * flm + fm);
        let right = h / 12.0 * (fm + 4.0 * frm + fb);
        let s2 = left + right;
        let err = s2 - s;
        if err.abs() <= 15.0 * tol || h.abs() <= f64::EPSILON * (a.abs() + b.abs()) {
            return Ok(s2 + err / 15.0);
        }
        if depth >= MAX_DEPTH {
            return Err(Error::Quadrature(format!(
                "max depth {MAX_DEPTH} reached on [{a}, {b}], residual {err:e}"
            )));
        }
        let l = self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
        let r = self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
        Ok(l + r)
    }

    fn panel(&mut self, a: f64, b: f64, tol: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let fa = self.eval(a)?;
        let fb = self.eval(b)?;
        let m = 0.5 * (a + b);
        let fm = self.eval(m)?;
        let s = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        self.refine(a, b, fa, fm, fb, s, tol, 0)
    }
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// `a > b` yields the signed integral.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_with_breakpoints(f, a, b, &[], tol)
}

/// Integrate with known interior kinks: the interval is split at every
/// breakpoint strictly inside `(a, b)` so each panel sees a smooth integrand.
pub fn integrate_with_breakpoints<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!(
            "integration limits must be finite, got [{a}, {b}]"
        )));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "tolerance must be > 0, got {tol}"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > lo && x < hi)
        .collect();
    cuts.sort_by(|p, q| p.total_cmp(q));
    cuts.dedup();
    cuts.insert(0, lo);
    cuts.push(hi);

    let mut worker = Worker {
        f: &mut f,
        evals: 0,
    };
    let per_panel = tol / cuts.len().saturating_sub(1).max(1) as f64;
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        total += worker.panel(pair[0], pair[1], per_panel)?;
    }
    Ok(sign * total)
}
