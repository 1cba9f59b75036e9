//! Derivative-free minimization for the likelihood surface.
//!
//! A standard Nelder-Mead simplex with adaptive restart support. The
//! likelihood here is smooth but its curvature varies by orders of magnitude
//! between the exponent and coefficient directions, which simplex search
//! handles without scaling tricks; callers work in log-transformed
//! coordinates so every direction is unconstrained.

/// Outcome of one simplex run.
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    /// True when the simplex collapsed below the tolerances before the
    /// iteration cap.
    pub converged: bool,
}

pub struct Options {
    pub max_iterations: usize,
    /// Termination threshold on the function-value spread across the simplex.
    pub f_tol: f64,
    /// Termination threshold on the vertex spread (max-norm).
    pub x_tol: f64,
    /// Initial simplex edge length per coordinate.
    pub step: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_iterations: 4000,
            f_tol: 1e-9,
            x_tol: 1e-9,
            step: 0.1,
        }
    }
}

/// Minimizes `f` starting from `x0`. Non-finite function values are treated
/// as worse than any finite vertex, so the simplex walks out of forbidden
/// regions instead of aborting.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &Options) -> MinimizeResult {
    let n = x0.len();
    assert!(n >= 1, "need at least one coordinate");
    let clean = |v: f64| if v.is_finite() { v } else { f64::INFINITY };

    // initial simplex: x0 plus one step along each axis
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| clean(f(v))).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        // order vertices best..worst
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let f_spread = values[worst] - values[best];
        let x_spread = (0..n)
            .map(|i| {
                simplex
                    .iter()
                    .map(|v| (v[i] - simplex[best][i]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if f_spread.abs() < opts.f_tol && x_spread < opts.x_tol {
            converged = true;
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; n];
        for (idx, v) in simplex.iter().enumerate() {
            if idx == worst {
                continue;
            }
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }

        let lerp = |from: &[f64], coeff: f64| -> Vec<f64> {
            (0..n)
                .map(|i| centroid[i] + coeff * (centroid[i] - from[i]))
                .collect()
        };

        let reflected = lerp(&simplex[worst], alpha);
        let f_reflected = clean(f(&reflected));

        if f_reflected < values[best] {
            let expanded = lerp(&simplex[worst], gamma);
            let f_expanded = clean(f(&expanded));
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            let contracted = if f_reflected < values[worst] {
                lerp(&simplex[worst], rho) // outside
            } else {
                lerp(&simplex[worst], -rho) // inside
            };
            let f_contracted = clean(f(&contracted));
            if f_contracted < values[worst].min(f_reflected) {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                // shrink toward the best vertex
                let anchor = simplex[best].clone();
                for (idx, v) in simplex.iter_mut().enumerate() {
                    if idx == best {
                        continue;
                    }
                    for i in 0..n {
                        v[i] = anchor[i] + sigma * (v[i] - anchor[i]);
                    }
                    values[idx] = clean(f(v));
                }
            }
        }
        iterations += 1;
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap())
        .unwrap();
    MinimizeResult {
        x: simplex[best].clone(),
        fx: values[best],
        iterations,
        converged,
    }
}
