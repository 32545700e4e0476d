//! Derivative-free Nelder-Mead minimizer.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Coefficients {
    /// The textbook (1, 2, 1/2, 1/2) choice.
    pub const STANDARD: Coefficients = Coefficients {
        reflection: 1.0,
        expansion: 2.0,
        contraction: 0.5,
        shrink: 0.5,
    };

    /// Dimension-dependent coefficients of Gao and Han, which keep the
    /// expansion and contraction steps from degenerating in high dimension.
    pub fn adaptive(dim: usize) -> Coefficients {
        let n = dim.max(2) as f64;
        Coefficients {
            reflection: 1.0,
            expansion: 1.0 + 2.0 / n,
            contraction: 0.75 - 1.0 / (2.0 * n),
            shrink: 1.0 - 1.0 / n,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Options {
    pub coefficients: Coefficients,
    pub max_iterations: usize,
    /// Stop once `max f - min f` over the simplex falls below this.
    pub f_tolerance: f64,
    /// Offset of each extra vertex from the start point along its axis.
    pub initial_step: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            coefficients: Coefficients::STANDARD,
            max_iterations: 20_000,
            f_tolerance: 1e-7,
            initial_step: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective value after each iteration.
    pub best_history: Vec<f64>,
}

/// Minimize `f` starting from the axis-aligned simplex around `x0`.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &Options) -> Outcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    if n == 0 {
        let v = eval(x0, &mut evaluations);
        return Outcome {
            x: Vec::new(),
            f: v,
            iterations: 0,
            evaluations,
            converged: true,
            best_history: vec![v],
        };
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opts.initial_step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evaluations)).collect();

    let Coefficients {
        reflection,
        expansion,
        contraction,
        shrink,
    } = opts.coefficients;

    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];
    let mut best_history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    let sort = |order: &mut Vec<usize>, values: &[f64]| {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    };
    sort(&mut order, &values);

    // running sum of all vertices, maintained incrementally
    let mut sum = vec![0.0; n];
    for p in &simplex {
        for (s, x) in sum.iter_mut().zip(p) {
            *s += x;
        }
    }

    while iterations < opts.max_iterations {
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];
        if values[worst] - values[best] <= opts.f_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        for j in 0..n {
            centroid[j] = (sum[j] - simplex[worst][j]) / n as f64;
        }
        for j in 0..n {
            trial[j] = centroid[j] + reflection * (centroid[j] - simplex[worst][j]);
        }
        let fr = eval(&trial, &mut evaluations);

        let mut replace: Option<(bool, f64)> = None; // (use trial2?, value)
        if fr < values[best] {
            for j in 0..n {
                trial2[j] = centroid[j] + expansion * (trial[j] - centroid[j]);
            }
            let fe = eval(&trial2, &mut evaluations);
            replace = Some(if fe < fr { (true, fe) } else { (false, fr) });
        } else if fr < values[second_worst] {
            replace = Some((false, fr));
        } else {
            let outside = fr < values[worst];
            for j in 0..n {
                trial2[j] = if outside {
                    centroid[j] + contraction * (trial[j] - centroid[j])
                } else {
                    centroid[j] + contraction * (simplex[worst][j] - centroid[j])
                };
            }
            let fc = eval(&trial2, &mut evaluations);
            let threshold = if outside { fr } else { values[worst] };
            if fc < threshold {
                replace = Some((true, fc));
            }
        }

        match replace {
            Some((use_second, value)) => {
                let src = if use_second { &trial2 } else { &trial };
                for j in 0..n {
                    sum[j] += src[j] - simplex[worst][j];
                }
                simplex[worst].copy_from_slice(src);
                values[worst] = value;
            }
            None => {
                let anchor = simplex[best].clone();
                for (k, p) in simplex.iter_mut().enumerate() {
                    if k == best {
                        continue;
                    }
                    for j in 0..n {
                        p[j] = anchor[j] + shrink * (p[j] - anchor[j]);
                    }
                    values[k] = eval(p, &mut evaluations);
                }
                sum.iter_mut().for_each(|s| *s = 0.0);
                for p in &simplex {
                    for (s, x) in sum.iter_mut().zip(p) {
                        *s += x;
                    }
                }
            }
        }
        sort(&mut order, &values);
        best_history.push(values[order[0]]);
    }

    let best = order[0];
    Outcome {
        x: simplex[best].clone(),
        f: values[best],
        iterations,
        evaluations,
        converged,
        best_history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    #[test]
    fn quadratic_bowl() {
        let out = minimize(
            |x| x.iter().enumerate().map(|(i, v)| (v - i as f64).powi(2)).sum(),
            &[5.0, -3.0, 2.0],
            &Options {
                f_tolerance: 1e-14,
                ..Options::default()
            },
        );
        assert!(out.converged);
        for (i, v) in out.x.iter().enumerate() {
            assert!((v - i as f64).abs() < 1e-5);
        }
    }

    #[test]
    fn rosenbrock_2d() {
        let out = minimize(
            rosenbrock,
            &[-1.2, 1.0],
            &Options {
                f_tolerance: 1e-16,
                initial_step: 0.1,
                ..Options::default()
            },
        );
        assert!(out.f < 1e-8, "{}", out.f);
        assert!((out.x[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn adaptive_handles_more_dimensions() {
        let dim = 12;
        let opts = Options {
            coefficients: Coefficients::adaptive(dim),
            f_tolerance: 1e-14,
            max_iterations: 50_000,
            ..Options::default()
        };
        let out = minimize(|x| x.iter().map(|v| v * v).sum(), &vec![1.0; dim], &opts);
        assert!(out.f < 1e-8);
    }

    #[test]
    fn history_is_monotone() {
        let out = minimize(rosenbrock, &[0.0, 0.0, 0.0, 0.0], &Options::default());
        assert!(out.best_history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(out.best_history.len(), out.iterations);
    }

    #[test]
    fn zero_dimensional() {
        let out = minimize(|_| 3.0, &[], &Options::default());
        assert_eq!(out.f, 3.0);
        assert!(out.converged);
    }

    #[test]
    fn iteration_cap() {
        let out = minimize(
            rosenbrock,
            &[-1.2, 1.0],
            &Options {
                max_iterations: 5,
                f_tolerance: 0.0,
                ..Options::default()
            },
        );
        assert_eq!(out.iterations, 5);
        assert!(!out.converged);
    }
}
