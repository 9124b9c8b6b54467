//! Deterministic low-discrepancy point clouds used for sampled suprema over
//! parameter balls.

use statrs::distribution::{ContinuousCDF, Normal};

const PRIMES: [u64; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// Radical-inverse (van der Corput) value of `index` in the given base.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut fraction = 1.0 / base as f64;
    while index > 0 {
        result += (index % base) as f64 * fraction;
        index /= base;
        fraction /= base as f64;
    }
    result
}

/// `dim`-dimensional Halton point with index `index` (1-based to avoid the
/// all-zeros point).
pub fn halton_point(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "halton dimension too large");
    (0..dim)
        .map(|k| radical_inverse(index, PRIMES[k]))
        .collect()
}

/// Deterministic cloud of `count` points covering the Euclidean ball of
/// radius `rho` around `center`.
///
/// The cloud always contains the center and the 2d axis extremes
/// `center ± rho·e_i`, so a sampled supremum dominates the value at the
/// center and sees the full radius along every coordinate. The remaining
/// points fill the ball via a Halton sequence mapped through the usual
/// radius/direction construction.
pub fn ball_points(center: &[f64], rho: f64, count: usize) -> Vec<Vec<f64>> {
    let dim = center.len();
    let mut points = Vec::with_capacity(count);
    points.push(center.to_vec());
    for i in 0..dim {
        for sign in [-1.0, 1.0] {
            if points.len() >= count {
                return points;
            }
            let mut p = center.to_vec();
            p[i] += sign * rho;
            points.push(p);
        }
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut index = 1u64;
    while points.len() < count {
        let u = halton_point(index, dim + 1);
        index += 1;
        // Direction from inverse-CDF-transformed coordinates, radius with the
        // r^d volume correction.
        let mut dir: Vec<f64> = u[1..]
            .iter()
            .map(|&ui| normal.inverse_cdf(ui.clamp(1e-12, 1.0 - 1e-12)))
            .collect();
        let norm = dir.iter().map(|z| z * z).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        for z in &mut dir {
            *z /= norm;
        }
        let r = rho * u[0].powf(1.0 / dim as f64);
        let p: Vec<f64> = center.iter().zip(&dir).map(|(c, d)| c + r * d).collect();
        points.push(p);
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(4, 2), 0.125);
    }

    #[test]
    fn ball_points_contains_center_and_axis_extremes() {
        let center = [1.0, -2.0, 0.5];
        let pts = ball_points(&center, 0.25, 32);
        assert_eq!(pts.len(), 32);
        assert_eq!(pts[0], center.to_vec());
        assert_eq!(pts[1], vec![0.75, -2.0, 0.5]);
        assert_eq!(pts[2], vec![1.25, -2.0, 0.5]);
        for p in &pts {
            let d2: f64 = p.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!(d2.sqrt() <= 0.25 + 1e-12);
        }
    }

    #[test]
    fn ball_points_deterministic() {
        let center = [0.0; 4];
        let a = ball_points(&center, 1.0, 64);
        let b = ball_points(&center, 1.0, 64);
        assert_eq!(a, b);
    }
}
