//! Small dense complex linear-algebra kernels shared by the solvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const LN2: f64 = std::f64::consts::LN_2;

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// `h h^H`.
pub fn outer(h: &CVec) -> CMat {
    h * h.adjoint()
}

/// `Re(h^H A h)`; exact for Hermitian `A` up to round-off.
pub fn quad_form(h: &CVec, a: &CMat) -> f64 {
    h.dotc(&(a * h)).re
}

/// Real Frobenius inner product `Re Tr(A^H B)`.
pub fn real_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn real_trace(a: &CMat) -> f64 {
    a.trace().re
}

pub fn max_hermitian_asymmetry(a: &CMat) -> f64 {
    (a - a.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted in
/// descending order with eigenvectors as the matching columns.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    eigh(a).0.last().copied().unwrap_or(0.0)
}

/// `V diag(values) V^H`, symmetrized.
pub fn reconstruct(values: &[f64], vectors: &CMat) -> CMat {
    let n = vectors.nrows();
    let mut out = CMat::zeros(n, n);
    for (c, &lambda) in values.iter().enumerate() {
        if lambda == 0.0 {
            continue;
        }
        let v = vectors.column(c);
        out += (v * v.adjoint()).scale(lambda);
    }
    hermitian_part(&out)
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped).
pub fn psd_clip(a: &CMat) -> CMat {
    let (mut values, vectors) = eigh(a);
    for v in values.iter_mut() {
        *v = v.max(0.0);
    }
    reconstruct(&values, &vectors)
}

/// Euclidean projection of `values` onto `{x >= 0, sum(x) <= budget}`.
pub fn project_capped_simplex(values: &mut [f64], budget: f64) {
    let clipped: f64 = values.iter().map(|v| v.max(0.0)).sum();
    if clipped <= budget {
        for v in values.iter_mut() {
            *v = v.max(0.0);
        }
        return;
    }
    // Water level tau > 0 with sum(max(v - tau, 0)) = budget.
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - budget) / (i + 1) as f64;
        let next = sorted.get(i + 1).copied().unwrap_or(f64::NEG_INFINITY);
        if candidate >= next {
            tau = candidate;
            break;
        }
    }
    for v in values.iter_mut() {
        *v = (*v - tau).max(0.0);
    }
}

/// Euclidean projection of a list of Hermitian blocks onto
/// `{X_i PSD, sum_i Tr(X_i) <= budget}`. Blocks with `frozen[i]` are pinned
/// to zero.
pub fn project_psd_budget(blocks: &[CMat], frozen: &[bool], budget: f64) -> Vec<CMat> {
    let decomps: Vec<Option<(Vec<f64>, CMat)>> = blocks
        .iter()
        .zip(frozen)
        .map(|(b, &f)| if f { None } else { Some(eigh(b)) })
        .collect();
    let mut all: Vec<f64> = decomps
        .iter()
        .flatten()
        .flat_map(|(v, _)| v.iter().copied())
        .collect();
    project_capped_simplex(&mut all, budget.max(0.0));
    let mut offset = 0;
    decomps
        .into_iter()
        .zip(blocks)
        .map(|(d, b)| match d {
            None => CMat::zeros(b.nrows(), b.ncols()),
            Some((values, vectors)) => {
                let n = values.len();
                let out = reconstruct(&all[offset..offset + n], &vectors);
                offset += n;
                out
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMat {
        let a = CMat::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        hermitian_part(&a)
    }

    #[test]
    fn eigh_reconstructs_and_sorts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..7 {
            let a = random_hermitian(&mut rng, n);
            let (values, vectors) = eigh(&a);
            assert!(values.windows(2).all(|w| w[0] >= w[1]));
            let back = reconstruct(&values, &vectors);
            assert!((back - &a).norm() < 1e-12);
        }
    }

    #[test]
    fn capped_simplex_cases() {
        let mut v = vec![2.0, -1.0];
        project_capped_simplex(&mut v, 10.0);
        assert_eq!(v, vec![2.0, 0.0]);

        let mut v = vec![3.0, 1.0, -2.0];
        project_capped_simplex(&mut v, 2.0);
        assert!((v[0] - 2.0).abs() < 1e-15 && v[1] == 0.0 && v[2] == 0.0);

        let mut v = vec![1.0, 1.0, 1.0];
        project_capped_simplex(&mut v, 1.5);
        assert!(v.iter().all(|x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn capped_simplex_is_nearest_point() {
        // Compare with a brute-force search over a fine grid in 2-D.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let p = [rng.random::<f64>() * 4.0 - 1.0, rng.random::<f64>() * 4.0 - 1.0];
            let budget = rng.random::<f64>() * 2.0;
            let mut x = p.to_vec();
            project_capped_simplex(&mut x, budget);
            let d_proj = (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2);
            let steps = 400;
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let a = budget * i as f64 / steps as f64;
                    let b = budget * j as f64 / steps as f64;
                    let d = (a - p[0]).powi(2) + (b - p[1]).powi(2);
                    assert!(d_proj <= d + 1e-12);
                }
            }
        }
    }

    #[test]
    fn psd_budget_projection_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let blocks: Vec<CMat> = (0..3).map(|_| random_hermitian(&mut rng, 4).scale(5.0)).collect();
            let out = project_psd_budget(&blocks, &[false, false, true], 1.0);
            let power: f64 = out.iter().map(real_trace).sum();
            assert!(power <= 1.0 + 1e-12);
            for b in &out {
                assert!(min_eigenvalue(b) >= -1e-12);
            }
            assert_eq!(out[2].norm(), 0.0);
        }
    }
}
