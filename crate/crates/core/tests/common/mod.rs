//! Oracles written independently of the library.
#![allow(dead_code)]

/// Largest singular value of a row-major `rows × cols` matrix by repeated
/// squaring of the Gram matrix `AᵀA`.
pub fn gram_spectral_norm(a: &[f64], rows: usize, cols: usize) -> f64 {
    assert_eq!(a.len(), rows * cols);
    let mut g = vec![0.0; cols * cols];
    for i in 0..cols {
        for j in 0..cols {
            g[i * cols + j] = (0..rows).map(|r| a[r * cols + i] * a[r * cols + j]).sum();
        }
    }
    // G^(2^k), rescaled each round, collapses onto the top eigenspace.
    let mut pow = g.clone();
    for _ in 0..60 {
        let mut next = vec![0.0; cols * cols];
        for i in 0..cols {
            for j in 0..cols {
                next[i * cols + j] = (0..cols)
                    .map(|k| pow[i * cols + k] * pow[k * cols + j])
                    .sum();
            }
        }
        let scale = next.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        pow = next.into_iter().map(|x| x / scale).collect();
    }
    let col = (0..cols)
        .max_by(|&x, &y| {
            let nx: f64 = (0..cols).map(|i| pow[i * cols + x].powi(2)).sum();
            let ny: f64 = (0..cols).map(|i| pow[i * cols + y].powi(2)).sum();
            nx.total_cmp(&ny)
        })
        .unwrap();
    let v: Vec<f64> = (0..cols).map(|i| pow[i * cols + col]).collect();
    let gv: Vec<f64> = (0..cols)
        .map(|i| (0..cols).map(|j| g[i * cols + j] * v[j]).sum())
        .collect();
    let num: f64 = v.iter().zip(&gv).map(|(x, y)| x * y).sum();
    let den: f64 = v.iter().map(|x| x * x).sum();
    (num / den).sqrt()
}

/// `max |T(x_1, ..., x_m)|` over sign vectors, by brute force.
pub fn brute_force_sign_norm(dims: &[usize], coeffs: &[f64]) -> f64 {
    let total: usize = dims.iter().sum();
    assert!(total <= 20);
    let mut best = 0.0f64;
    for mask in 0u64..(1u64 << total) {
        let mut signs = Vec::with_capacity(total);
        for b in 0..total {
            signs.push(if mask >> b & 1 == 1 { -1.0 } else { 1.0 });
        }
        let mut acc = 0.0;
        for (flat, &c) in coeffs.iter().enumerate() {
            let mut rem = flat;
            let mut prod = c;
            let mut offset = total;
            for &d in dims.iter().rev() {
                offset -= d;
                prod *= signs[offset + rem % d];
                rem /= d;
            }
            acc += prod;
        }
        best = best.max(acc.abs());
    }
    best
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
