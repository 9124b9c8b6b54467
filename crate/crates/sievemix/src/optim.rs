//! Nelder-Mead simplex maximization for the generic (non-EM) fitting path.
//!
//! The objective may return `-inf` for infeasible points (for example a data
//! point outside every uniform support); ordering and centroid computations
//! still behave.

pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Maximize `f` starting from `x0`, with initial per-coordinate simplex
/// steps. Stops when the simplex value spread falls below `tol` relative to
/// the best value, or after `max_iter` iterations.
pub fn maximize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    max_iter: usize,
    tol: f64,
) -> NelderMeadResult {
    let dim = x0.len();
    assert_eq!(steps.len(), dim);
    let eval = |x: &[f64], f: &mut F| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = eval(x0, &mut f);
    simplex.push((x0.to_vec(), v0));
    for i in 0..dim {
        let mut p = x0.to_vec();
        p[i] += steps[i];
        let v = eval(&p, &mut f);
        simplex.push((p, v));
    }

    let mut best = simplex[0].clone();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        // Descending by value: index 0 best, last worst.
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        if simplex[0].1 > best.1 {
            best = simplex[0].clone();
        }
        let spread = simplex[0].1 - simplex[dim].1;
        if spread.is_finite() && spread <= tol * (1.0 + simplex[0].1.abs()) {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; dim];
        for (p, _) in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let point_at = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = point_at(REFLECT);
        let fr = eval(&reflected, &mut f);
        if fr > simplex[0].1 {
            let expanded = point_at(EXPAND);
            let fe = eval(&expanded, &mut f);
            simplex[dim] = if fe > fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr > simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
            continue;
        }
        let contracted = point_at(-CONTRACT);
        let fc = eval(&contracted, &mut f);
        if fc > worst.1 {
            simplex[dim] = (contracted, fc);
            continue;
        }
        // Shrink toward the best vertex.
        let best_point = simplex[0].0.clone();
        for entry in simplex.iter_mut().skip(1) {
            for (x, b) in entry.0.iter_mut().zip(&best_point) {
                *x = b + SHRINK * (*x - b);
            }
            let p = entry.0.clone();
            entry.1 = eval(&p, &mut f);
        }
    }

    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    if simplex[0].1 > best.1 {
        best = simplex[0].clone();
    }
    NelderMeadResult {
        x: best.0,
        value: best.1,
        iterations,
        converged,
    }
}
