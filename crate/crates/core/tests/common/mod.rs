#![allow(dead_code)]

use mgnss::fctn::FctnFactorSet;
use mgnss::{DenseTensor, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(dims: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
    DenseTensor::from_fn(dims, |_| rng.random_range(-1.0..1.0))
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Mode-0-fastest linear offset.
pub fn linear_offset(idx: &[usize], dims: &[usize]) -> usize {
    let mut offset = 0;
    let mut stride = 1;
    for (&i, &d) in idx.iter().zip(dims) {
        offset += i * stride;
        stride *= d;
    }
    offset
}

/// Advances a multi-index odometer-style; returns false after the last index.
pub fn next_index(idx: &mut [usize], dims: &[usize]) -> bool {
    for (i, &d) in idx.iter_mut().zip(dims) {
        *i += 1;
        if *i < d {
            return true;
        }
        *i = 0;
    }
    false
}

/// Every multi-index of `dims` in mode-0-fastest order.
pub fn all_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    if dims.contains(&0) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx = vec![0; dims.len()];
    loop {
        out.push(idx.clone());
        if !next_index(&mut idx, dims) {
            return out;
        }
    }
}

/// Mode-k unfolding entry by entry: column `Σ_{m≠k} i_m ∏_{l<m, l≠k} I_l`.
pub fn unfold_by_definition(t: &DenseTensor, k: usize) -> Matrix {
    let dims = t.dims();
    let cols: usize = dims.iter().enumerate().filter(|&(m, _)| m != k).map(|(_, &d)| d).product();
    let mut out = Matrix::zeros(dims[k], cols);
    for idx in all_indices(dims) {
        let mut col = 0;
        let mut stride = 1;
        for m in 0..dims.len() {
            if m != k {
                col += idx[m] * stride;
                stride *= dims[m];
            }
        }
        out[(idx[k], col)] = t.as_slice()[linear_offset(&idx, dims)];
    }
    out
}

/// The FCTN defining sum evaluated directly over every rank index combination.
pub fn fctn_by_definition(set: &FctnFactorSet) -> DenseTensor {
    let n = set.dims.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect();
    let rank_dims: Vec<usize> = pairs.iter().map(|&(a, b)| set.ranks.get(a, b)).collect();
    let rank_combos = all_indices(&rank_dims);
    DenseTensor::from_fn(&set.dims, |phys| {
        let mut total = 0.0;
        for r in &rank_combos {
            let mut product = 1.0;
            for k in 0..n {
                let idx: Vec<usize> = (0..n)
                    .map(|j| {
                        if j == k {
                            phys[k]
                        } else {
                            let pair = (j.min(k), j.max(k));
                            r[pairs.iter().position(|&p| p == pair).unwrap()]
                        }
                    })
                    .collect();
                product *= set.factors[k].get(&idx);
            }
            total += product;
        }
        total
    })
}

/// Minimizer of `τ‖Z‖_* + ½‖Z − M‖²` through the factored form
/// `min_{A,B} ½‖ABᵀ − M‖² + τ/2 (‖A‖² + ‖B‖²)`, solved by alternating ridge regressions.
pub fn nuclear_prox_by_factorization(m: &Matrix, tau: f64, seed: u64) -> Matrix {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    let mut r = rng(seed);
    let mut a = random_matrix(rows, k, &mut r);
    let mut b = random_matrix(cols, k, &mut r);
    let ridge = |x: &Matrix| {
        let mut g = x.transpose() * x;
        for d in 0..k {
            g[(d, d)] += tau;
        }
        g.try_inverse().expect("ridge system is positive definite")
    };
    let mut prev = &a * b.transpose();
    for _ in 0..200_000 {
        a = m * &b * ridge(&b);
        b = m.transpose() * &a * ridge(&a);
        let z = &a * b.transpose();
        if (&z - &prev).norm() < 1e-15 {
            return z;
        }
        prev = z;
    }
    prev
}

/// Symmetric 2×2 eigendecomposition in closed form: eigenvalues descending, unit vectors.
pub fn eig_sym_2x2(g: &Matrix) -> ([f64; 2], [[f64; 2]; 2]) {
    let (a, b, d) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let l1 = mean + radius;
    let l2 = mean - radius;
    let v1 = if b.abs() > 1e-300 {
        let v = [l1 - d, b];
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        [v[0] / n, v[1] / n]
    } else if a >= d {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let v2 = [-v1[1], v1[0]];
    ([l1, l2], [v1, v2])
}

/// SVT of a 2×n matrix through the eigenvectors of its Gram matrix.
pub fn svt_2xn(m: &Matrix, thresholds: [f64; 2]) -> Matrix {
    assert_eq!(m.nrows(), 2);
    let gram = m * m.transpose();
    let (eig, vecs) = eig_sym_2x2(&gram);
    let mut out = Matrix::zeros(2, m.ncols());
    for q in 0..2 {
        let sigma = eig[q].max(0.0).sqrt();
        if sigma <= 0.0 {
            continue;
        }
        let shrink = (sigma - thresholds[q]).max(0.0) / sigma;
        let u = Matrix::from_column_slice(2, 1, &vecs[q]);
        out += &u * (u.transpose() * m) * shrink;
    }
    out
}
