//! Derivative-free minimization: Nelder-Mead with restarts, plus a
//! finite-difference Newton polish for the last digits.

/// Objective values that are NaN or infinite are replaced by this.
const WALL: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Simplex diameter (max-norm distance to the best vertex) to stop at.
    pub tol_x: f64,
    /// Spread of objective values across the simplex to stop at.
    pub tol_f: f64,
    pub max_evals: usize,
    /// Fresh simplices built around the best point after convergence.
    pub restarts: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            initial_step: 0.5,
            tol_x: 1e-8,
            tol_f: 1e-9,
            max_evals: 20_000,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub n_evals: usize,
    pub converged: bool,
}

fn guard(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        WALL
    }
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64]) -> Minimum {
        let mut evals = 0;
        let mut best = x0.to_vec();
        let mut best_f = guard(f(x0));
        evals += 1;
        let mut converged = false;
        for round in 0..=self.restarts {
            let step = self.initial_step * 0.1f64.powi(round.min(3) as i32);
            let budget = self.max_evals.saturating_sub(evals);
            if budget == 0 {
                break;
            }
            let (x, fx, n, ok) = self.run(&mut f, &best, best_f, step, budget);
            evals += n;
            let improvement = best_f - fx;
            if fx <= best_f {
                best = x;
                best_f = fx;
            }
            converged = ok;
            if ok && round > 0 && !(improvement > self.tol_f) {
                break;
            }
        }
        Minimum {
            x: best,
            value: best_f,
            n_evals: evals,
            converged,
        }
    }

    fn run<F: FnMut(&[f64]) -> f64>(
        &self,
        f: &mut F,
        x0: &[f64],
        f0: f64,
        step: f64,
        budget: usize,
    ) -> (Vec<f64>, f64, usize, bool) {
        let n = x0.len();
        let mut evals = 0;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            guard(f(x))
        };
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
        for i in 0..n {
            let mut v = x0.to_vec();
            v[i] += step;
            let fv = eval(&v, &mut evals);
            simplex.push((v, fv));
        }
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (lo, hi) = (simplex[0].1, simplex[n].1);
            let diameter = simplex[1..]
                .iter()
                .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if diameter < self.tol_x && hi - lo < self.tol_f {
                return (simplex[0].0.clone(), lo, evals, true);
            }
            if evals >= budget {
                return (simplex[0].0.clone(), lo, evals, false);
            }
            let centroid: Vec<f64> = (0..n)
                .map(|k| simplex[..n].iter().map(|(v, _)| v[k]).sum::<f64>() / n as f64)
                .collect();
            let toward = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (w - c))
                    .collect()
            };
            let xr = toward(-1.0);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = toward(-2.0);
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = toward(-0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = toward(0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < fr.min(simplex[n].1) {
                simplex[n] = (xc, fc);
                continue;
            }
            let best = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let v: Vec<f64> = best
                    .iter()
                    .zip(&vertex.0)
                    .map(|(b, w)| b + 0.5 * (w - b))
                    .collect();
                let fv = eval(&v, &mut evals);
                *vertex = (v, fv);
            }
        }
    }
}

/// Central-difference gradient with step `h`.
pub fn fd_gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Hessian with step `h`.
pub fn fd_hessian<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let f0 = f(x);
    let mut hess = vec![vec![0.0; n]; n];
    let mut probe = x.to_vec();
    for i in 0..n {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        hess[i][i] = (up - 2.0 * f0 + down) / (h * h);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                probe[i] = x[i] + si * h;
                probe[j] = x[j] + sj * h;
                let v = f(&probe);
                probe[i] = x[i];
                probe[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    hess
}

/// Solves `a x = b` for symmetric positive definite `a`; `None` otherwise.
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    Some(x)
}

/// Newton steps on finite-difference derivatives, each accepted only if it
/// lowers `f` (with step halving). Returns the point, its value and the
/// number of evaluations.
pub fn newton_polish<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    f0: f64,
    iterations: usize,
) -> (Vec<f64>, f64, usize) {
    const H: f64 = 1e-4;
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f0;
    let mut evals = 0;
    for _ in 0..iterations {
        let g = fd_gradient(f, &x, H);
        let hess = fd_hessian(f, &x, H);
        evals += 2 * n + 1 + 2 * n * n;
        let Some(step) = cholesky_solve(&hess, &g) else {
            break;
        };
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..8 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            let ft = guard(f(&trial));
            evals += 1;
            if ft < fx {
                x = trial;
                fx = ft;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, fx, evals)
}
