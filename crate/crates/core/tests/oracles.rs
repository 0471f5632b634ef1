mod common;

use common::{brute_force_sign_norm, gram_spectral_norm, rel_err};
use hllab::exponents::Exponent;
use hllab::norms::{
    sup_norm, sup_norm_alternating, sup_norm_rank_one, sup_norm_vertex_exact, NormConfig,
};
use hllab::search::{grad_lhs, grad_norm_witness};
use hllab::tensor::{random_tensor, CoeffTensor, Distribution};
use num_complex::Complex64;

fn e(p: f64) -> Exponent {
    Exponent::new(p).unwrap()
}

#[test]
fn vertex_matches_brute_force() {
    for (i, dims) in [
        vec![2, 2],
        vec![3, 4],
        vec![2, 3, 2],
        vec![2, 2, 2, 2],
        vec![5, 1, 3],
    ]
    .iter()
    .enumerate()
    {
        for dist in [Distribution::Signs, Distribution::Gaussian] {
            let t: CoeffTensor<f64> = random_tensor(dims, dist, 31 + i as u64).unwrap();
            let want = brute_force_sign_norm(dims, t.coeffs());
            let got = sup_norm_vertex_exact(&t, 24).unwrap().value;
            assert!(rel_err(got, want) < 1e-12, "{dims:?}: {got} vs {want}");
        }
    }
}

#[test]
fn spectral_norm_matches_gram_oracle() {
    for (i, (r, c)) in [(1, 5), (5, 1), (3, 3), (4, 7), (8, 8)]
        .into_iter()
        .enumerate()
    {
        let t: CoeffTensor<f64> = random_tensor(&[r, c], Distribution::Gaussian, i as u64).unwrap();
        let got = sup_norm(&t, &[e(2.0), e(2.0)], &NormConfig::default())
            .unwrap()
            .value;
        let want = gram_spectral_norm(t.coeffs(), r, c);
        assert!(rel_err(got, want) < 1e-8, "{r}x{c}: {got} vs {want}");
    }
}

#[test]
fn complex_spectral_norm_of_hermitian_pair() {
    // [[a, b], [conj b, d]] with real a, d has eigenvalues (a+d)/2 ± sqrt(((a-d)/2)^2 + |b|^2).
    let (a, b, d) = (1.5, Complex64::new(0.3, -0.8), -0.4);
    let t = CoeffTensor::new(
        vec![2, 2],
        vec![Complex64::new(a, 0.0), b, b.conj(), Complex64::new(d, 0.0)],
    )
    .unwrap();
    let r = ((a - d) / 2.0f64).hypot(b.norm());
    let want = ((a + d) / 2.0).abs() + r;
    let got = sup_norm(&t, &[e(2.0), e(2.0)], &NormConfig::default())
        .unwrap()
        .value;
    assert!(rel_err(got, want) < 1e-10, "{got} vs {want}");
}

#[test]
fn rank_one_closed_form_matches_ascent() {
    let factors = vec![
        vec![1.0, -2.0, 0.5],
        vec![0.3, 0.4],
        vec![2.0, 1.0, -1.0, 0.25],
    ];
    let t = CoeffTensor::outer(&factors).unwrap();
    for p in [
        [e(2.0), e(3.0), Exponent::Infinity],
        [e(1.5), e(8.0), e(4.0)],
    ] {
        let closed = sup_norm_rank_one(&factors, &p).unwrap();
        let alt = sup_norm_alternating(&t, &p, &NormConfig::default()).unwrap();
        assert!(closed.certified_exact);
        assert!(
            rel_err(alt.value, closed.value) < 1e-10,
            "{} vs {}",
            alt.value,
            closed.value
        );
    }
}

#[test]
fn identity_norms() {
    let cfg = NormConfig::default();
    for n in 1..=6usize {
        let t = CoeffTensor::<f64>::identity(n).unwrap();
        let nf = n as f64;
        let cases = [
            ([e(2.0), e(2.0)], 1.0),
            ([Exponent::Infinity, Exponent::Infinity], nf),
            ([e(2.0), Exponent::Infinity], nf.sqrt()),
            ([e(4.0), e(4.0)], nf.powf(0.5)),
        ];
        for (p, want) in cases {
            let got = sup_norm(&t, &p, &cfg).unwrap().value;
            assert!(rel_err(got, want) < 1e-9, "n={n} p={p:?}: {got} vs {want}");
        }
    }
}

#[test]
fn lhs_gradient_complex_finite_differences() {
    let t: CoeffTensor<Complex64> = random_tensor(&[2, 3], Distribution::Gaussian, 5).unwrap();
    for rho in [4.0 / 3.0, 2.0, 3.5] {
        let g = grad_lhs(&t, rho).unwrap();
        let h = 1e-6;
        for k in 0..t.len() {
            let f = |delta: Complex64| {
                let mut c = t.coeffs().to_vec();
                c[k] += delta;
                CoeffTensor::new(t.dims().to_vec(), c)
                    .unwrap()
                    .lp_coeff_norm(rho)
                    .unwrap()
            };
            let d_re = (f(Complex64::new(h, 0.0)) - f(Complex64::new(-h, 0.0))) / (2.0 * h);
            let d_im = (f(Complex64::new(0.0, h)) - f(Complex64::new(0.0, -h))) / (2.0 * h);
            let gk = g.coeffs()[k];
            assert!(
                (gk.re - d_re).abs() < 1e-7 && (gk.im - d_im).abs() < 1e-7,
                "{gk} vs {d_re}+{d_im}i"
            );
        }
    }
}

#[test]
fn norm_gradient_matches_finite_differences() {
    // The spectral norm is smooth where the top singular value is simple.
    let t: CoeffTensor<f64> = random_tensor(&[3, 3], Distribution::Gaussian, 12).unwrap();
    let p = [e(2.0), e(2.0)];
    let cfg = NormConfig::default();
    let norm = sup_norm(&t, &p, &cfg).unwrap();
    let g = grad_norm_witness(&t, &norm).unwrap();
    let h = 1e-6;
    for k in 0..t.len() {
        let f = |d: f64| {
            let mut c = t.coeffs().to_vec();
            c[k] += d;
            sup_norm(&CoeffTensor::new(vec![3, 3], c).unwrap(), &p, &cfg)
                .unwrap()
                .value
        };
        let fd = (f(h) - f(-h)) / (2.0 * h);
        assert!(
            (g.coeffs()[k] - fd).abs() < 1e-6,
            "entry {k}: {} vs {fd}",
            g.coeffs()[k]
        );
    }
}
