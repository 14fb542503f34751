//! Classical multidimensional scaling over a distance matrix.
//!
//! Squared distances are double-centered into a Gram matrix whose leading
//! eigenpairs give the embedding. Eigenpairs come from power iteration with
//! deflation; the matrix is shifted by its Gershgorin radius first so the
//! iteration runs on a positive semi-definite operator and cannot oscillate
//! between eigenvalue signs. Negative eigenvalues (non-Euclidean inputs)
//! clamp to zero. Start vectors come from a fixed hash stream, so the
//! projection is a pure function of its inputs.

const EIG_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 100_000;

/// Project an `n x n` distance matrix (flat, row-major) into `dim`
/// coordinates per point (flat, row-major `n x dim`).
///
/// Requires a symmetric matrix with zero diagonal. When `n < dim` the
/// missing coordinates are zero-padded.
pub fn mds_project(distances: &[f64], n: usize, dim: usize) -> Vec<f64> {
    assert_eq!(distances.len(), n * n, "distance matrix must be n x n");
    for i in 0..n {
        assert!(
            distances[i * n + i].abs() <= 1e-9,
            "distance matrix diagonal must be zero"
        );
        for j in 0..n {
            assert!(
                (distances[i * n + j] - distances[j * n + i]).abs() <= 1e-9,
                "distance matrix must be symmetric"
            );
        }
    }
    let mut coords = vec![0.0; n * dim];
    if n == 0 || dim == 0 {
        return coords;
    }

    // B = -1/2 * J * D^2 * J with J the centering matrix.
    let mut b = vec![0.0; n * n];
    let mut row_mean = vec![0.0; n];
    let mut grand = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d2 = distances[i * n + j] * distances[i * n + j];
            b[i * n + j] = d2;
            row_mean[i] += d2;
            grand += d2;
        }
        row_mean[i] /= n as f64;
    }
    grand /= (n * n) as f64;
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = -0.5 * (b[i * n + j] - row_mean[i] - row_mean[j] + grand);
        }
    }

    // Shift by a spectral radius bound so all eigenvalues are non-negative.
    let mut radius: f64 = 0.0;
    for i in 0..n {
        let row_sum: f64 = (0..n).map(|j| b[i * n + j].abs()).sum();
        radius = radius.max(row_sum);
    }
    if radius == 0.0 {
        return coords;
    }
    let mut shifted = b;
    for i in 0..n {
        shifted[i * n + i] += radius;
    }

    let n_eig = dim.min(n);
    for e in 0..n_eig {
        let (shifted_eigval, vector) = match power_iterate(&shifted, n, e) {
            Some(pair) => pair,
            None => break,
        };
        let eigval = (shifted_eigval - radius).max(0.0);
        let scale = eigval.sqrt();
        for i in 0..n {
            coords[i * dim + e] = vector[i] * scale;
        }
        // Deflate the captured direction.
        for i in 0..n {
            for j in 0..n {
                shifted[i * n + j] -= shifted_eigval * vector[i] * vector[j];
            }
        }
    }
    coords
}

/// Largest eigenpair of a symmetric PSD matrix by power iteration.
/// Returns None when the matrix annihilates the start vector entirely.
fn power_iterate(m: &[f64], n: usize, stream: usize) -> Option<(f64, Vec<f64>)> {
    let mut v = start_vector(n, stream);
    let mut eigval = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += m[i * n + j] * v[j];
            }
            w[i] = acc;
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        for x in &mut w {
            *x /= norm;
        }
        let new_eigval: f64 = {
            // Rayleigh quotient of the normalized iterate.
            let mut mv = 0.0;
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += m[i * n + j] * w[j];
                }
                mv += w[i] * acc;
            }
            mv
        };
        let delta = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let val_delta = (new_eigval - eigval).abs();
        v = w;
        eigval = new_eigval;
        if delta < EIG_TOL && val_delta < EIG_TOL * eigval.abs().max(1.0) {
            break;
        }
    }
    Some((eigval, v))
}

/// Deterministic pseudo-random unit start vector for one extraction stream.
/// Drawn from a seeded stream cipher: entries must carry independent noise
/// in every direction, or eigenvectors orthogonal to the start are never
/// found (a raw hash-of-index sequence is far too regular for this).
fn start_vector(n: usize, stream: usize) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let label = format!("mds-start:{stream}");
    let mut rng =
        rand_chacha::ChaCha8Rng::seed_from_u64(crate::seed::derive_seed(0, &label));
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.1).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    v
}
