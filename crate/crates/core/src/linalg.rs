//! Dense numeric helpers: compensated column means and minimum-norm least
//! squares.

use faer::Mat;
use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Column means of `rows` using Neumaier-compensated summation, so the
/// result is insensitive to row order up to the final rounding.
pub fn column_mean(rows: ArrayView2<'_, f64>) -> Array1<f64> {
    let (n, d) = rows.dim();
    let mut sum = vec![0.0f64; d];
    let mut comp = vec![0.0f64; d];
    for row in rows.rows() {
        for (j, &v) in row.iter().enumerate() {
            let t = sum[j] + v;
            if sum[j].abs() >= v.abs() {
                comp[j] += (sum[j] - t) + v;
            } else {
                comp[j] += (v - t) + sum[j];
            }
            sum[j] = t;
        }
    }
    Array1::from_iter(sum.iter().zip(&comp).map(|(s, c)| (s + c) / n as f64))
}

/// Minimum-norm solution `X` of `a * X ~= b` in the least-squares sense.
///
/// `a` is `m x p`, `b` is `m x q`, the result is `p x q`. Singular values
/// below `max(m, p) * eps * sigma_max` are treated as zero.
pub fn lstsq_min_norm(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (m, p) = a.dim();
    if b.nrows() != m {
        return Err(Error::ShapeMismatch(a.dim(), b.dim()));
    }
    let q = b.ncols();
    if m == 0 || p == 0 {
        return Ok(Array2::zeros((p, q)));
    }
    let am = Mat::from_fn(m, p, |i, j| a[[i, j]]);
    let svd = am
        .thin_svd()
        .map_err(|e| Error::NumericalFailure(format!("SVD did not converge: {e:?}")))?;
    let (u, v) = (svd.U(), svd.V());
    let s = svd.S().column_vector();
    let r = s.nrows();
    let sigma_max = (0..r).map(|i| s[i]).fold(0.0, f64::max);
    let tol = m.max(p) as f64 * f64::EPSILON * sigma_max;
    // x = V * diag(1/s) * U^T * b over the retained singular values.
    let mut x = Array2::<f64>::zeros((p, q));
    for t in 0..r {
        if !(s[t] > tol && s[t] > 0.0) {
            continue;
        }
        let coef: Array1<f64> = (0..q).map(|c| (0..m).map(|i| u[(i, t)] * b[[i, c]]).sum::<f64>() / s[t]).collect();
        for i in 0..p {
            let vi = v[(i, t)];
            x.row_mut(i).scaled_add(vi, &coef);
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite least-squares solution".into()));
    }
    Ok(x)
}

/// Fits `target ~= weight * input + bias` by ordinary least squares with
/// an unpenalized intercept: inputs and targets are centered, the
/// minimum-norm `weight` is solved on the centered data, and the bias
/// restores the means. Returns `(weight, bias)` with `weight` of shape
/// `(target_dim, input_dim)`.
pub fn fit_affine(
    inputs: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
) -> Result<(Array2<f64>, Array1<f64>)> {
    if inputs.nrows() != targets.nrows() || inputs.nrows() == 0 {
        return Err(Error::ShapeMismatch(inputs.dim(), targets.dim()));
    }
    let x_mean = column_mean(inputs);
    let y_mean = column_mean(targets);
    let xc = &inputs - &x_mean.view().insert_axis(Axis(0));
    let yc = &targets - &y_mean.view().insert_axis(Axis(0));
    let weight = lstsq_min_norm(xc.view(), yc.view())?.reversed_axes();
    let bias = &y_mean - &weight.dot(&x_mean);
    Ok((weight, bias))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn mean_is_order_insensitive_with_cancellation() {
        let a = array![[1e16], [1.0], [-1e16], [1.0]];
        let b = array![[1.0], [1.0], [1e16], [-1e16]];
        assert_eq!(column_mean(a.view())[0], 0.5);
        assert_eq!(column_mean(b.view())[0], 0.5);
    }

    #[test]
    fn square_full_rank_solve() {
        let a = array![[2.0, 0.0], [0.0, 4.0]];
        let b = array![[2.0], [8.0]];
        let x = lstsq_min_norm(a.view(), b.view()).unwrap();
        assert!((x[[0, 0]] - 1.0).abs() < 1e-14);
        assert!((x[[1, 0]] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn underdetermined_gives_minimum_norm() {
        // x0 + x1 = 2 has minimum-norm solution (1, 1).
        let a = array![[1.0, 1.0]];
        let b = array![[2.0]];
        let x = lstsq_min_norm(a.view(), b.view()).unwrap();
        assert!((x[[0, 0]] - 1.0).abs() < 1e-14);
        assert!((x[[1, 0]] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix_gives_zero_solution() {
        let a = Array2::<f64>::zeros((3, 4));
        let b = Array2::<f64>::ones((3, 2));
        let x = lstsq_min_norm(a.view(), b.view()).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_sample_affine_fit_interpolates() {
        let x = array![[1.0, 2.0, 3.0]];
        let y = array![[-1.0, 0.5, 4.0]];
        let (w, b) = fit_affine(x.view(), y.view()).unwrap();
        assert!(w.iter().all(|&v| v == 0.0));
        assert_eq!(b, array![-1.0, 0.5, 4.0]);
    }

    #[test]
    fn rank_deficient_wide_fits_interpolate() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        // Centering 8 rows in 64 dims drops the rank to 7.
        for seed in 0..30 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut draw = |n, d| Array2::from_shape_fn((n, d), |_| StandardNormal.sample(&mut rng));
            let (x, y) = (draw(8, 64), draw(8, 5));
            let (w, b) = fit_affine(x.view(), y.view()).unwrap();
            let fitted = x.dot(&w.t()) + &b;
            let err = (&fitted - &y).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err < 1e-10, "seed {seed}: {err:e}");
        }
    }
}
