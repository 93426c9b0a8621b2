//! Primal-dual interior point method for
//!
//! ```text
//! min  sum_k phi_k(x_k)   s.t.  A x <= b,  lo <= x <= hi
//! ```
//!
//! with separable convex `phi_k` and `hi` possibly infinite. Each iteration
//! solves the reduced system `(A D^-1 A' + S/Lambda) dl = ...` with a dense
//! Cholesky factorization and applies Mehrotra's predictor-corrector.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Converged,
    IterationLimit,
    Stalled,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmOptions {
    pub max_iter: usize,
    /// Scaled primal residual target.
    pub primal_tol: f64,
    /// Scaled stationarity target.
    pub dual_tol: f64,
    /// Average complementarity target.
    pub mu_tol: f64,
}

impl Default for IpmOptions {
    fn default() -> Self {
        IpmOptions {
            max_iter: 300,
            primal_tol: 1e-10,
            dual_tol: 1e-10,
            mu_tol: 1e-13,
        }
    }
}

/// Sparse constraint matrix stored by column.
pub(crate) struct Problem {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// `cols[k]` lists `(row, coefficient)` of variable `k`.
    pub cols: Vec<Vec<(usize, f64)>>,
    pub b: Vec<f64>,
}

impl Problem {
    pub fn n(&self) -> usize {
        self.lo.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    fn ax(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        for (k, col) in self.cols.iter().enumerate() {
            for &(i, a) in col {
                out[i] += a * x[k];
            }
        }
        out
    }

    fn atl(&self, l: &[f64]) -> Vec<f64> {
        self.cols
            .iter()
            .map(|col| col.iter().map(|&(i, a)| a * l[i]).sum())
            .collect()
    }
}

pub(crate) struct IpmResult {
    pub x: Vec<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub lambda: Vec<f64>,
    pub status: IpmStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `(iteration, objective, max scaled residual)` per iteration.
    pub trace: Vec<(usize, f64, f64)>,
}

struct State {
    x: Vec<f64>,
    s: Vec<f64>,
    l: Vec<f64>,
    nl: Vec<f64>,
    nu: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Largest step in `(0, 1]` keeping `v + a dv >= 0` after damping.
fn max_step(v: &[f64], dv: &[f64], mask: impl Fn(usize) -> bool) -> f64 {
    let mut a: f64 = 1.0;
    for k in 0..v.len() {
        if mask(k) && dv[k] < 0.0 {
            a = a.min(-v[k] / dv[k]);
        }
    }
    a
}

pub(crate) fn solve<F>(p: &Problem, phi: F, opts: &IpmOptions) -> IpmResult
where
    F: Fn(usize, f64) -> (f64, f64, f64),
{
    let n = p.n();
    let m = p.m();
    let has_lo: Vec<bool> = p.lo.iter().map(|v| v.is_finite()).collect();
    let has_hi: Vec<bool> = p.hi.iter().map(|v| v.is_finite()).collect();

    let x0: Vec<f64> = (0..n)
        .map(|k| match (has_lo[k], has_hi[k]) {
            (true, true) => p.lo[k] + 0.5 * (p.hi[k] - p.lo[k]),
            (true, false) => p.lo[k] + 1.0,
            (false, true) => p.hi[k] - 1.0,
            (false, false) => 0.0,
        })
        .collect();
    let ax0 = p.ax(&x0);
    let s0: Vec<f64> = (0..m).map(|i| (p.b[i] - ax0[i]).max(1.0)).collect();
    // Bound duals chosen so the first iterate is stationary where possible.
    let l0 = vec![1.0; m];
    let atl0 = p.atl(&l0);
    let mut nl0 = vec![0.0; n];
    let mut nu0 = vec![0.0; n];
    for k in 0..n {
        let r = phi(k, x0[k]).1 + atl0[k];
        if has_lo[k] {
            nl0[k] = 1.0 + if has_hi[k] { r.max(0.0) } else { r.abs() };
        }
        if has_hi[k] {
            nu0[k] = 1.0 + if has_lo[k] { (-r).max(0.0) } else { r.abs() };
        }
    }
    let mut st = State {
        x: x0,
        s: s0,
        l: l0,
        nl: nl0,
        nu: nu0,
    };

    let b_scale = 1.0 + inf_norm(&p.b);
    let pairs = (m + has_lo.iter().filter(|v| **v).count() + has_hi.iter().filter(|v| **v).count()).max(1);
    let mut trace = Vec::new();
    let mut status = IpmStatus::IterationLimit;
    let mut iterations = 0;
    let mut last = (f64::INFINITY, f64::INFINITY);

    let mut kmat = DMatrix::<f64>::zeros(m, m);
    for iter in 0..=opts.max_iter {
        iterations = iter;
        let evals: Vec<(f64, f64, f64)> = (0..n).map(|k| phi(k, st.x[k])).collect();
        let objective: f64 = evals.iter().map(|e| e.0).sum();
        let grad_scale = 1.0 + evals.iter().fold(0.0f64, |a, e| a.max(e.1.abs()));

        let ax = p.ax(&st.x);
        let atl = p.atl(&st.l);
        let rp: Vec<f64> = (0..m).map(|i| ax[i] + st.s[i] - p.b[i]).collect();
        let rd: Vec<f64> = (0..n).map(|k| evals[k].1 + atl[k] - st.nl[k] + st.nu[k]).collect();
        let wl: Vec<f64> = (0..n).map(|k| if has_lo[k] { st.x[k] - p.lo[k] } else { 1.0 }).collect();
        let wu: Vec<f64> = (0..n).map(|k| if has_hi[k] { p.hi[k] - st.x[k] } else { 1.0 }).collect();
        let comp: f64 = (0..m).map(|i| st.s[i] * st.l[i]).sum::<f64>()
            + (0..n).filter(|&k| has_lo[k]).map(|k| wl[k] * st.nl[k]).sum::<f64>()
            + (0..n).filter(|&k| has_hi[k]).map(|k| wu[k] * st.nu[k]).sum::<f64>();
        let mu = comp / pairs as f64;

        let pres = inf_norm(&rp) / b_scale;
        let dres = inf_norm(&rd) / grad_scale;
        trace.push((iter, objective, pres.max(dres)));
        last = (pres, dres);
        if pres <= opts.primal_tol && dres <= opts.dual_tol && mu <= opts.mu_tol {
            status = IpmStatus::Converged;
            break;
        }
        if iter == opts.max_iter {
            break;
        }

        // Diagonal of the reduced Hessian.
        let d: Vec<f64> = (0..n)
            .map(|k| {
                let mut v = evals[k].2.max(0.0);
                if has_lo[k] {
                    v += st.nl[k] / wl[k];
                }
                if has_hi[k] {
                    v += st.nu[k] / wu[k];
                }
                v.max(1e-300)
            })
            .collect();

        kmat.fill(0.0);
        for (k, col) in p.cols.iter().enumerate() {
            let inv = 1.0 / d[k];
            for (ai, &(i, a)) in col.iter().enumerate() {
                let w = a * inv;
                for &(j, c) in &col[..=ai] {
                    let (r, q) = if i >= j { (i, j) } else { (j, i) };
                    kmat[(r, q)] += w * c;
                }
            }
        }
        for i in 0..m {
            kmat[(i, i)] += st.s[i] / st.l[i];
        }
        let chol = match factor(&kmat) {
            Some(c) => c,
            None => {
                status = IpmStatus::Stalled;
                break;
            }
        };

        // Newton direction for complementarity right-hand sides.
        let direction = |rc_s: &[f64], rc_l: &[f64], rc_u: &[f64]| {
            let r1: Vec<f64> = (0..n)
                .map(|k| {
                    let mut v = -rd[k];
                    if has_lo[k] {
                        v += rc_l[k] / wl[k];
                    }
                    if has_hi[k] {
                        v -= rc_u[k] / wu[k];
                    }
                    v
                })
                .collect();
            let r1d: Vec<f64> = (0..n).map(|k| r1[k] / d[k]).collect();
            let mut rhs = DVector::from_vec(p.ax(&r1d));
            for i in 0..m {
                rhs[i] += rp[i] + rc_s[i] / st.l[i];
            }
            let dl = chol.solve(&rhs);
            let dl: Vec<f64> = dl.iter().copied().collect();
            let atdl = p.atl(&dl);
            let dx: Vec<f64> = (0..n).map(|k| (r1[k] - atdl[k]) / d[k]).collect();
            let adx = p.ax(&dx);
            let ds: Vec<f64> = (0..m).map(|i| -rp[i] - adx[i]).collect();
            let dnl: Vec<f64> = (0..n)
                .map(|k| if has_lo[k] { (rc_l[k] - st.nl[k] * dx[k]) / wl[k] } else { 0.0 })
                .collect();
            let dnu: Vec<f64> = (0..n)
                .map(|k| if has_hi[k] { (rc_u[k] + st.nu[k] * dx[k]) / wu[k] } else { 0.0 })
                .collect();
            (dx, ds, dl, dnl, dnu)
        };

        let step_len = |dx: &[f64], ds: &[f64], dl: &[f64], dnl: &[f64], dnu: &[f64]| {
            let neg_dx: Vec<f64> = dx.iter().map(|v| -v).collect();
            max_step(&st.s, ds, |_| true)
                .min(max_step(&st.l, dl, |_| true))
                .min(max_step(&wl, dx, |k| has_lo[k]))
                .min(max_step(&wu, &neg_dx, |k| has_hi[k]))
                .min(max_step(&st.nl, dnl, |k| has_lo[k]))
                .min(max_step(&st.nu, dnu, |k| has_hi[k]))
        };

        // Predictor.
        let rc_s: Vec<f64> = (0..m).map(|i| -st.s[i] * st.l[i]).collect();
        let rc_l: Vec<f64> = (0..n).map(|k| if has_lo[k] { -wl[k] * st.nl[k] } else { 0.0 }).collect();
        let rc_u: Vec<f64> = (0..n).map(|k| if has_hi[k] { -wu[k] * st.nu[k] } else { 0.0 }).collect();
        let (dx_a, ds_a, dl_a, dnl_a, dnu_a) = direction(&rc_s, &rc_l, &rc_u);
        let a_aff = step_len(&dx_a, &ds_a, &dl_a, &dnl_a, &dnu_a);
        let comp_aff: f64 = (0..m)
            .map(|i| (st.s[i] + a_aff * ds_a[i]) * (st.l[i] + a_aff * dl_a[i]))
            .sum::<f64>()
            + (0..n)
                .filter(|&k| has_lo[k])
                .map(|k| (wl[k] + a_aff * dx_a[k]) * (st.nl[k] + a_aff * dnl_a[k]))
                .sum::<f64>()
            + (0..n)
                .filter(|&k| has_hi[k])
                .map(|k| (wu[k] - a_aff * dx_a[k]) * (st.nu[k] + a_aff * dnu_a[k]))
                .sum::<f64>();
        let mu_aff = comp_aff / pairs as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let target = sigma * mu;

        // Corrector. The second-order term is scaled by the affine step: when
        // the affine direction is mostly blocked its product term is
        // meaningless and, with a curved objective, can throw the iterate
        // across the box.
        let w2 = a_aff * a_aff;
        let rc_s: Vec<f64> = (0..m)
            .map(|i| target - st.s[i] * st.l[i] - w2 * ds_a[i] * dl_a[i])
            .collect();
        let rc_l: Vec<f64> = (0..n)
            .map(|k| if has_lo[k] { target - wl[k] * st.nl[k] - w2 * dx_a[k] * dnl_a[k] } else { 0.0 })
            .collect();
        let rc_u: Vec<f64> = (0..n)
            .map(|k| if has_hi[k] { target - wu[k] * st.nu[k] + w2 * dx_a[k] * dnu_a[k] } else { 0.0 })
            .collect();
        let (dx, ds, dl, dnl, dnu) = direction(&rc_s, &rc_l, &rc_u);
        let alpha = (0.995 * step_len(&dx, &ds, &dl, &dnl, &dnu)).min(1.0);

        for k in 0..n {
            st.x[k] += alpha * dx[k];
            st.nl[k] += alpha * dnl[k];
            st.nu[k] += alpha * dnu[k];
        }
        for i in 0..m {
            st.s[i] += alpha * ds[i];
            st.l[i] += alpha * dl[i];
        }
        // Keep bounded variables strictly inside their box despite rounding.
        for k in 0..n {
            if has_lo[k] && st.x[k] <= p.lo[k] {
                st.x[k] = p.lo[k] + f64::MIN_POSITIVE;
            }
            if has_hi[k] && st.x[k] >= p.hi[k] {
                st.x[k] = p.hi[k] - (p.hi[k] - p.lo[k]).abs() * f64::EPSILON;
            }
        }
    }

    IpmResult {
        x: st.x,
        lambda: st.l,
        status,
        iterations,
        primal_residual: last.0,
        dual_residual: last.1,
        trace,
    }
}

/// Cholesky factorization with escalating diagonal regularization.
fn factor(k: &DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let m = k.nrows();
    let mut full = k.clone();
    // Only the lower triangle was assembled.
    for j in 0..m {
        for i in 0..j {
            full[(i, j)] = full[(j, i)];
        }
    }
    if let Some(c) = full.clone().cholesky() {
        return Some(c);
    }
    let diag_max = (0..m).fold(0.0f64, |a, i| a.max(full[(i, i)].abs())).max(1e-300);
    let mut delta = 1e-14 * diag_max;
    for _ in 0..12 {
        let mut reg = full.clone();
        for i in 0..m {
            reg[(i, i)] += delta;
        }
        if let Some(c) = reg.cholesky() {
            return Some(c);
        }
        delta *= 100.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_with_one_row() {
        // min (x0 - 2)^2 + (x1 - 2)^2  s.t. x0 + x1 <= 2, 0 <= x <= 5  ->  x = (1, 1)
        let p = Problem {
            lo: vec![0.0, 0.0],
            hi: vec![5.0, 5.0],
            cols: vec![vec![(0, 1.0)], vec![(0, 1.0)]],
            b: vec![2.0],
        };
        let r = solve(&p, |_, x| ((x - 2.0).powi(2), 2.0 * (x - 2.0), 2.0), &IpmOptions::default());
        assert_eq!(r.status, IpmStatus::Converged);
        assert!((r.x[0] - 1.0).abs() < 1e-9 && (r.x[1] - 1.0).abs() < 1e-9);
        assert!((r.lambda[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn linear_program_hits_vertex() {
        // min -x0 - 2 x1  s.t. x0 + x1 <= 1, x in [0, 1]^2  ->  (0, 1)
        let p = Problem {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
            cols: vec![vec![(0, 1.0)], vec![(0, 1.0)]],
            b: vec![1.0],
        };
        let c = [-1.0, -2.0];
        let r = solve(&p, |k, x| (c[k] * x, c[k], 0.0), &IpmOptions::default());
        assert_eq!(r.status, IpmStatus::Converged);
        assert!(r.x[0] < 1e-10 && (r.x[1] - 1.0).abs() < 1e-10, "{:?}", r.x);
    }

    #[test]
    fn unbounded_above_variable() {
        // min e^x - 3x with x >= 0 and no upper bound -> x = ln 3; row x <= 10 inactive
        let p = Problem {
            lo: vec![0.0],
            hi: vec![f64::INFINITY],
            cols: vec![vec![(0, 1.0)]],
            b: vec![10.0],
        };
        let r = solve(&p, |_, x| (x.exp() - 3.0 * x, x.exp() - 3.0, x.exp()), &IpmOptions::default());
        assert_eq!(r.status, IpmStatus::Converged);
        assert!((r.x[0] - 3f64.ln()).abs() < 1e-9);
    }
}
