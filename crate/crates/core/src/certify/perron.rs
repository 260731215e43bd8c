use crate::model::SquareMatrix;

/// Result of power iteration on a nonnegative matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronEstimate {
    /// Collatz-Wielandt upper bound `max_i (B v)_i / v_i` on the spectral radius.
    pub rho_upper: f64,
    /// Strictly positive approximate Perron vector, normalized to `min = 1`.
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Power iteration on `B + I` (same Perron vector as `B`, but aperiodic),
/// with a tiny positive perturbation so reducible matrices still yield a
/// strictly positive vector.
pub fn perron_vector(b: &SquareMatrix<f64>, max_iters: usize, tol: f64) -> PerronEstimate {
    let n = b.dim();
    let scale = b.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max).max(1.0);
    let eps = 1e-9 * scale;
    let apply = |v: &[f64]| -> Vec<f64> {
        let total: f64 = v.iter().sum();
        (0..n)
            .map(|i| {
                let row: f64 = b.row(i).iter().zip(v).map(|(a, x)| a * x).sum();
                row + v[i] + eps * total
            })
            .collect()
    };
    let mut v = vec![1.0; n];
    let mut iterations = 0;
    for it in 0..max_iters {
        iterations = it + 1;
        let w = apply(&v);
        let norm = w.iter().cloned().fold(0.0, f64::max);
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let change = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if change < tol {
            break;
        }
    }
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let vector: Vec<f64> = v.iter().map(|x| x / min).collect();
    let rho_upper = (0..n)
        .map(|i| {
            let row: f64 = b.row(i).iter().zip(&vector).map(|(a, x)| a * x).sum();
            row / vector[i]
        })
        .fold(0.0, f64::max);
    PerronEstimate {
        rho_upper,
        vector,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_known_spectrum() {
        // eigenvalues of [[0.2, 0.3], [0.4, 0.1]] are 0.5 and -0.2
        let b = SquareMatrix::from_fn(2, |i, j| [[0.2, 0.3], [0.4, 0.1]][i][j]);
        let est = perron_vector(&b, 500, 1e-14);
        assert!((est.rho_upper - 0.5).abs() < 1e-7, "{}", est.rho_upper);
        // eigenvector (1, 1) after min normalization
        assert!((est.vector[0] - 1.0).abs() < 1e-6 && (est.vector[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn periodic_permutation_converges() {
        let b = SquareMatrix::from_fn(2, |i, j| if i != j { 0.5 } else { 0.0 });
        let est = perron_vector(&b, 500, 1e-14);
        assert!((est.rho_upper - 0.5).abs() < 1e-7);
    }

    #[test]
    fn reducible_matrix_gives_positive_vector() {
        let b = SquareMatrix::from_fn(2, |i, j| [[0.5, 0.0], [0.0, 0.0]][i][j]);
        let est = perron_vector(&b, 500, 1e-14);
        assert!(est.vector.iter().all(|&x| x >= 1.0));
        assert!(est.rho_upper < 0.5 + 1e-6);
    }
}
