//! Derivative-free simplex minimizer for the small (5 to 15 dimensional)
//! coefficient estimation problems of this crate.
//!
//! Standard Nelder-Mead moves (reflection, expansion, contraction, shrink)
//! plus coordinate restarts: after the inner search converges or stalls, a
//! fresh axis-aligned simplex is rebuilt around the incumbent and the search
//! reruns. Restarting breaks the degenerate, needle-shaped simplices the
//! plain method is prone to in ravines.

/// Stopping and restart configuration.
#[derive(Debug, Clone)]
pub struct NelderMead {
    /// Converged when the objective spread over the simplex is below
    /// `ftol * (1 + |f_best|)` together with the parameter criterion.
    pub ftol: f64,
    /// Converged when every coordinate spread is below
    /// `xtol * (1 + |x_best|)` together with the objective criterion.
    pub xtol: f64,
    /// Inner iteration cap per restart, multiplied by the dimension.
    pub max_iter_per_dim: usize,
    /// Number of coordinate restarts after the first search.
    pub restarts: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            ftol: 1e-8,
            xtol: 1e-8,
            max_iter_per_dim: 500,
            restarts: 3,
        }
    }
}

/// Search outcome. `converged` reports the tolerance test of the last
/// restart; the returned point is the best ever evaluated either way.
#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NelderMead {
    /// Minimizes `f` from `x0`. `step` sets the initial simplex edge per
    /// coordinate and must be positive. Non-finite objective values are
    /// treated as infinitely bad, so `f` may signal invalid regions with
    /// NaN. The result never exceeds `f(x0)`.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(
        &self,
        mut f: F,
        x0: &[f64],
        step: &[f64],
    ) -> OptimResult {
        assert_eq!(x0.len(), step.len(), "step length must match dimension");
        assert!(!x0.is_empty(), "dimension must be at least 1");
        assert!(step.iter().all(|&s| s > 0.0), "steps must be positive");

        let sanitize = |v: f64| if v.is_finite() { v } else { f64::INFINITY };
        let mut eval = move |x: &[f64]| sanitize(f(x));

        let mut best_x = x0.to_vec();
        let mut best_f = eval(&best_x);
        let mut iterations = 1;
        let mut converged = false;

        for restart in 0..=self.restarts {
            let scale = 1.0 / (1 << restart) as f64;
            let before = best_f;
            let (x, fx, it, conv) = self.search(&mut eval, &best_x, step, scale);
            iterations += it;
            if fx < best_f {
                best_f = fx;
                best_x = x;
            }
            converged = conv;
            // restarting is pointless once it stops buying improvement
            if conv && before - best_f <= self.ftol * (1.0 + best_f.abs()) {
                break;
            }
        }

        OptimResult {
            x: best_x,
            fx: best_f,
            iterations,
            converged,
        }
    }

    /// One Nelder-Mead run from an axis-aligned simplex around `center`.
    fn search<F: FnMut(&[f64]) -> f64>(
        &self,
        eval: &mut F,
        center: &[f64],
        step: &[f64],
        scale: f64,
    ) -> (Vec<f64>, f64, usize, bool) {
        let dim = center.len();
        let max_iter = self.max_iter_per_dim * dim;

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
        simplex.push(center.to_vec());
        for j in 0..dim {
            let mut v = center.to_vec();
            v[j] += step[j] * scale;
            simplex.push(v);
        }
        let mut fvals: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();
        let mut iterations = dim + 1;

        loop {
            // order ascending by objective
            let mut order: Vec<usize> = (0..=dim).collect();
            order.sort_by(|&a, &b| fvals[a].total_cmp(&fvals[b]));
            let best = order[0];
            let worst = order[dim];
            let second_worst = order[dim - 1];

            let f_best = fvals[best];
            let f_worst = fvals[worst];

            let f_spread = f_worst - f_best;
            let x_spread = (0..dim)
                .map(|j| {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for v in &simplex {
                        lo = lo.min(v[j]);
                        hi = hi.max(v[j]);
                    }
                    (hi - lo) / (1.0 + simplex[best][j].abs())
                })
                .fold(0.0f64, f64::max);
            if f_spread <= self.ftol * (1.0 + f_best.abs()) && x_spread <= self.xtol {
                return (simplex[best].clone(), f_best, iterations, true);
            }
            if iterations >= max_iter {
                return (simplex[best].clone(), f_best, iterations, false);
            }

            // centroid of all but the worst vertex
            let mut centroid = vec![0.0; dim];
            for (i, v) in simplex.iter().enumerate() {
                if i != worst {
                    for j in 0..dim {
                        centroid[j] += v[j];
                    }
                }
            }
            for c in centroid.iter_mut() {
                *c /= dim as f64;
            }

            let blend = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
                a.iter().zip(b).map(|(&p, &q)| p + t * (p - q)).collect()
            };

            let reflected = blend(&centroid, &simplex[worst], 1.0);
            let f_reflected = eval(&reflected);
            iterations += 1;

            if f_reflected < f_best {
                let expanded = blend(&centroid, &simplex[worst], 2.0);
                let f_expanded = eval(&expanded);
                iterations += 1;
                if f_expanded < f_reflected {
                    simplex[worst] = expanded;
                    fvals[worst] = f_expanded;
                } else {
                    simplex[worst] = reflected;
                    fvals[worst] = f_reflected;
                }
            } else if f_reflected < fvals[second_worst] {
                simplex[worst] = reflected;
                fvals[worst] = f_reflected;
            } else {
                let contracted = if f_reflected < f_worst {
                    blend(&centroid, &simplex[worst], 0.5) // outside
                } else {
                    blend(&centroid, &simplex[worst], -0.5) // inside
                };
                let f_contracted = eval(&contracted);
                iterations += 1;
                if f_contracted < f_worst.min(f_reflected) {
                    simplex[worst] = contracted;
                    fvals[worst] = f_contracted;
                } else {
                    // shrink toward the best vertex
                    let anchor = simplex[best].clone();
                    for (i, v) in simplex.iter_mut().enumerate() {
                        if i != best {
                            for j in 0..dim {
                                v[j] = anchor[j] + 0.5 * (v[j] - anchor[j]);
                            }
                            fvals[i] = eval(v);
                            iterations += 1;
                        }
                    }
                }
            }
        }
    }
}
