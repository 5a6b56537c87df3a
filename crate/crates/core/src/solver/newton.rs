use super::discrete::{Discretization, Evaluation};
use super::{DirichletProblem, SolveOptions, SolveReport, SolverError};
use crate::geometry::GridFunction;

const LAPLACE: [f64; 9] = [-4.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];

/// Solve the 5-point Poisson problem `Δu = rhs` on the unknowns with the
/// fixed nodes of `u` as boundary data; writes into `u`.
fn poisson(d: &Discretization, u: &mut [f64], rhs: &[f64]) -> Result<(), SolverError> {
    let h2 = d.spec.spacing * d.spec.spacing;
    let entries: Vec<[f64; 9]> = vec![LAPLACE.map(|w| w / h2); d.len()];
    let b: Vec<f64> = (0..d.len()).map(|r| rhs[r] - d.fixed_part(r, &entries[r], u)).collect();
    let sol = d.solve_linear(&entries, &b)?;
    for (r, &k) in d.nodes.iter().enumerate() {
        u[k] = sol[r];
    }
    Ok(())
}

/// Initial guess: harmonic extension of the boundary data, then
/// `Δu = tr A + 2√B` with the coefficients frozen at that extension (exact
/// when `D²u − A` is a multiple of the identity).
pub fn poisson_guess(p: &DirichletProblem) -> Result<Vec<f64>, SolverError> {
    let d = Discretization::new(p)?;
    poisson_guess_with(&d, p)
}

fn densities(d: &Discretization, p: &DirichletProblem) -> Result<Vec<f64>, SolverError> {
    let f: Vec<f64> = d.nodes.iter().map(|&k| p.rhs.at(k)).collect();
    for (r, &v) in f.iter().enumerate() {
        if !(v > 0.0) {
            return Err(SolverError::NonpositiveRhs { value: v, at: d.spec.point_k(d.nodes[r]) });
        }
    }
    Ok(f)
}

fn poisson_guess_with(d: &Discretization, p: &DirichletProblem) -> Result<Vec<f64>, SolverError> {
    let f = densities(d, p)?;
    guess_for(d, p, &f)
}

fn guess_for(d: &Discretization, p: &DirichletProblem, f: &[f64]) -> Result<Vec<f64>, SolverError> {
    let mut u = p.boundary.clone();
    poisson(d, &mut u, &vec![0.0; d.len()])?;
    let ev = d.evaluate(&u, f, &vec![None; d.len()])?;
    let rhs: Vec<f64> = (0..d.len()).map(|r| ev.tr_a[r] + 2.0 * (ev.bfac[r] * f[r]).sqrt()).collect();
    let mut guess = p.boundary.clone();
    poisson(d, &mut guess, &rhs)?;
    Ok(guess)
}

/// `max |det⁺(D²u − A) − B|` of a full-grid state against the problem.
pub fn residual(p: &DirichletProblem, u: &[f64]) -> Result<f64, SolverError> {
    let d = Discretization::new(p)?;
    let f = densities(&d, p)?;
    Ok(d.evaluate(u, &f, &vec![None; d.len()])?.res_inf())
}

struct NewtonOutcome {
    u: Vec<f64>,
    ev: Evaluation,
    iters: usize,
    converged: bool,
}

fn newton(d: &Discretization, mut u: Vec<f64>, f: &[f64], tol: f64, max_iter: usize) -> Result<NewtonOutcome, SolverError> {
    let mut ev = d.evaluate(&u, f, &vec![None; d.len()])?;
    for it in 0..=max_iter {
        if ev.res_inf() <= tol {
            return Ok(NewtonOutcome { u, ev, iters: it, converged: true });
        }
        if it == max_iter {
            break;
        }
        let rhs: Vec<f64> = ev.res.iter().map(|v| -v).collect();
        let step = match d.solve_linear(&ev.entries, &rhs) {
            Ok(s) => s,
            // A singular Jacobian ends this Newton run; continuation may recover.
            Err(SolverError::Linear(_)) => return Ok(NewtonOutcome { u, ev, iters: it + 1, converged: false }),
            Err(e) => return Err(e),
        };
        let merit = ev.res_l2();
        let mut t = 1.0;
        let mut accepted = None;
        while t >= 1.0 / 1024.0 {
            let mut trial = u.clone();
            for (r, &k) in d.nodes.iter().enumerate() {
                trial[k] += t * step[r];
            }
            if let Ok(tev) = d.evaluate(&trial, f, &ev.seeds) {
                if tev.res_l2() <= (1.0 - 1e-4 * t) * merit || tev.res_inf() <= tol {
                    accepted = Some((trial, tev));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((nu, nev)) => {
                u = nu;
                ev = nev;
            }
            None => return Ok(NewtonOutcome { u, ev, iters: it + 1, converged: false }),
        }
    }
    Ok(NewtonOutcome { u, ev, iters: max_iter, converged: false })
}

/// Damped Newton on the clamped-determinant scheme, falling back to
/// continuation in `f` from a scaled-up density.
pub fn solve(p: &DirichletProblem, opts: &SolveOptions) -> Result<SolveReport, SolverError> {
    let d = Discretization::new(p)?;
    let f = densities(&d, p)?;
    let u0 = match &p.initial {
        Some(u) if u.len() == p.spec.len() => {
            let mut v = p.boundary.clone();
            for &k in &d.nodes {
                v[k] = u[k];
            }
            v
        }
        Some(_) => return Err(SolverError::InvalidProblem("initial guess has the wrong length".into())),
        None => poisson_guess_with(&d, p)?,
    };
    let bmax = {
        let ev0 = d.evaluate(&u0, &f, &vec![None; d.len()])?;
        (0..d.len()).map(|r| f[r] * ev0.bfac[r]).fold(1.0f64, f64::max)
    };
    let tol = opts.tol * bmax;
    let first = newton(&d, u0.clone(), &f, tol, opts.max_newton)?;
    let mut total = first.iters;
    let mut steps = 0;
    let outcome = if first.converged || !opts.continuation {
        first
    } else {
        match continuation(&d, p, &f, tol, opts, &mut total, &mut steps)? {
            Some(out) => out,
            None => return Err(SolverError::NewtonDiverged { iterations: total, residual: first.ev.res_inf() }),
        }
    };
    if !outcome.converged {
        return Err(SolverError::NewtonDiverged { iterations: total, residual: outcome.ev.res_inf() });
    }
    let min_eigen = outcome.ev.min_eig;
    if min_eigen < -10.0 * p.spec.spacing {
        return Err(SolverError::EllipticityLost { min_eigen, at: p.spec.point_k(d.nodes[outcome.ev.min_eig_at]) });
    }
    let u = GridFunction::new(p.spec, outcome.u)?;
    Ok(SolveReport {
        u,
        residual_inf: outcome.ev.res_inf(),
        newton_iters: total,
        min_eigen,
        converged: true,
        continuation_steps: steps,
    })
}

/// Continuation in the density: `f_t = Λ^{1−t} f`. A large scale `Λ` makes
/// the Poisson guess convex up to the boundary, so Newton converges there;
/// `t` then walks to 1 with adaptive steps.
fn continuation(
    d: &Discretization,
    p: &DirichletProblem,
    f: &[f64],
    tol: f64,
    opts: &SolveOptions,
    total: &mut usize,
    steps: &mut usize,
) -> Result<Option<NewtonOutcome>, SolverError> {
    let scaled = |lam: f64| -> Vec<f64> { f.iter().map(|v| v * lam).collect() };
    let mut start = None;
    let mut lam = 4.0f64;
    while lam <= 4f64.powi(10) && *steps < opts.max_continuation_steps {
        let fl = scaled(lam);
        let out = newton(d, guess_for(d, p, &fl)?, &fl, tol * lam, opts.max_newton)?;
        *total += out.iters;
        *steps += 1;
        if out.converged {
            start = Some(out);
            break;
        }
        lam *= 4.0;
    }
    let Some(mut last) = start else { return Ok(None) };
    let (mut t, mut dt) = (0.0f64, 0.25f64);
    while t < 1.0 && *steps < opts.max_continuation_steps {
        let t_next = (t + dt).min(1.0);
        let s = lam.powf(1.0 - t_next);
        let out = newton(d, last.u.clone(), &scaled(s), tol * s.max(1.0), opts.max_newton)?;
        *total += out.iters;
        *steps += 1;
        if out.converged {
            t = t_next;
            dt = (dt * 1.5).min(0.5);
            last = out;
        } else {
            dt *= 0.5;
            if dt < 1.0 / 1024.0 {
                return Ok(None);
            }
        }
    }
    if t < 1.0 {
        return Ok(None);
    }
    // The last step is at t = 1 with the caller's tolerance.
    Ok(Some(last))
}
