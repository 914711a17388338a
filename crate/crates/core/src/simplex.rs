//! Nelder-Mead downhill simplex minimization.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Stop once `f_worst − f_best ≤ relative_tolerance · |f_best| + absolute_tolerance`.
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    /// Offset applied to each coordinate to build the initial simplex.
    pub initial_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` from `x0`. After the first convergence the simplex is
/// rebuilt around the best vertex and the search resumed once, which
/// guards against premature collapse.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult {
    let first = run(f, x0, opts, opts.max_iterations);
    if !first.converged {
        return first;
    }
    let remaining = opts.max_iterations.saturating_sub(first.iterations);
    let second = run(f, &first.point, opts, remaining);
    let iterations = first.iterations + second.iterations;
    if second.value <= first.value {
        SimplexResult {
            iterations,
            converged: second.converged,
            ..second
        }
    } else {
        SimplexResult { iterations, ..first }
    }
}

fn run<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &SimplexOptions, max_iter: usize) -> SimplexResult {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // Stable ordering keeps runs reproducible when values tie.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[n];
        if worst.is_finite() && worst - best <= opts.relative_tolerance * best.abs() + opts.absolute_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = along(REFLECT);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(EXPAND);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let p = along(CONTRACT * REFLECT);
            let v = f(&p);
            (p, v)
        } else {
            let p = along(-CONTRACT);
            let v = f(&p);
            (p, v)
        };
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        let anchor = simplex[0].clone();
        for i in 1..=n {
            for (x, a) in simplex[i].iter_mut().zip(&anchor) {
                *x = a + SHRINK * (*x - a);
            }
            values[i] = f(&simplex[i]);
        }
    }

    let (idx, value) = values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("simplex is nonempty");
    SimplexResult {
        point: simplex[idx].clone(),
        value,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SimplexOptions {
        SimplexOptions {
            max_iterations: 10_000,
            relative_tolerance: 1e-12,
            absolute_tolerance: 1e-20,
            initial_step: 0.5,
        }
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(&f, &[-1.2, 1.0], &opts());
        assert!(r.converged);
        assert!((r.point[0] - 1.0).abs() < 1e-5 && (r.point[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn quadratic_bowl_3d() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 0.5 * (x[2] - 0.25).powi(2);
        let r = minimize(&f, &[0.0, 0.0, 0.0], &opts());
        for (got, want) in r.point.iter().zip([3.0, -1.0, 0.25]) {
            assert!((got - want).abs() < 1e-6);
        }
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(&f, &[-1.2, 1.0], &SimplexOptions { max_iterations: 5, ..opts() });
        assert!(!r.converged);
        assert!(r.iterations <= 5);
    }
}
