//! The sup norm `‖T‖ = sup |T(x_1, ..., x_m)|` over `‖x_k‖_{p_k} <= 1`.
//!
//! [`sup_norm_alternating`] is a multistart block-coordinate ascent: with all
//! slots but one fixed, the form is a linear functional `<c, x>`, maximized in
//! closed form by [`linear_step_maximizer`]. Its values are lower bounds.
//! [`sup_norm_vertex_exact`] (real field, all `p = inf`) and
//! [`sup_norm_rank_one`] are exact and set `certified_exact`.

use serde::{Deserialize, Serialize};

use crate::error::{HlError, Result};
use crate::exponents::Exponent;
use crate::par;
use crate::scalar::Scalar;
use crate::seed::{derive_seed, rng_from_seed, HlRng};
use crate::tensor::{lp_norm, lp_norm_ext, CoeffTensor};

pub const DEFAULT_STARTS: usize = 16;
pub const DEFAULT_MAX_ITERS: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-12;
/// Vertex enumeration runs when `sum n_k <= DEFAULT_VERTEX_BUDGET_LOG2`.
pub const DEFAULT_VERTEX_BUDGET_LOG2: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormConfig {
    /// Total starts; start 0 is the deterministic largest-coefficient start.
    pub starts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub vertex_budget_log2: u32,
    /// Let [`sup_norm`] use the exact oracles when they apply.
    pub use_oracles: bool,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig {
            starts: DEFAULT_STARTS,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            seed: 0,
            vertex_budget_log2: DEFAULT_VERTEX_BUDGET_LOG2,
            use_oracles: true,
        }
    }
}

impl NormConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        NormConfig { seed, ..self }
    }

    pub fn with_starts(self, starts: usize) -> Self {
        NormConfig { starts, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NormMethod {
    Alternating,
    VertexExact,
    RankOneExact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormResult<S> {
    pub value: f64,
    pub witness: Vec<Vec<S>>,
    pub method: NormMethod,
    pub starts_used: usize,
    pub iterations: usize,
    pub converged: bool,
    pub certified_exact: bool,
    /// Slots re-randomized after a zero contraction.
    pub reseeds: usize,
    /// False if any start saw its objective decrease beyond rounding.
    pub monotone: bool,
}

/// Serializable summary of a [`NormResult`] without the witness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormInfo {
    pub value: f64,
    pub method: NormMethod,
    pub certified: bool,
    pub starts_used: usize,
    pub iterations: usize,
    pub converged: bool,
    pub reseeds: usize,
}

impl<S> NormResult<S> {
    pub fn info(&self) -> NormInfo {
        NormInfo {
            value: self.value,
            method: self.method,
            certified: self.certified_exact,
            starts_used: self.starts_used,
            iterations: self.iterations,
            converged: self.converged,
            reseeds: self.reseeds,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearStep<S> {
    pub x: Vec<S>,
    pub value: f64,
    pub degenerate: bool,
}

/// Unit vector `x` in ℓ_p maximizing `|sum_j c_j x_j|`; the maximum is
/// `‖c‖_{p*}`.
///
/// For finite `p`, `x_j = conj(phase(c_j)) |c_j|^{p*-1} / ‖c‖_{p*}^{p*-1}`.
/// For `p = inf`, `x_j = conj(phase(c_j))`, with `x_j = 1` where `c_j = 0`.
/// A zero `c` yields `(e_1, 0)` flagged degenerate.
pub fn linear_step_maximizer<S: Scalar>(c: &[S], p: Exponent) -> LinearStep<S> {
    let max = c.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if max == 0.0 {
        let mut x = vec![S::zero(); c.len()];
        if let Some(first) = x.first_mut() {
            *first = S::one();
        }
        return LinearStep {
            x,
            value: 0.0,
            degenerate: true,
        };
    }
    match p {
        Exponent::Infinity => {
            let x = c
                .iter()
                .map(|&v| {
                    if v.abs() == 0.0 {
                        S::one()
                    } else {
                        v.phase().conj()
                    }
                })
                .collect();
            LinearStep {
                x,
                value: c.iter().map(|v| v.abs()).sum(),
                degenerate: false,
            }
        }
        Exponent::Finite(pf) => {
            let q = p.dual();
            let u: Vec<f64> = c.iter().map(|v| v.abs() / max).collect();
            let uq = lp_norm(&u, q);
            let denom = uq.powf(q - 1.0);
            let mut x: Vec<S> = c
                .iter()
                .zip(&u)
                .map(|(&v, &a)| {
                    if a == 0.0 {
                        S::zero()
                    } else {
                        v.phase().conj().scale(a.powf(q - 1.0) / denom)
                    }
                })
                .collect();
            let xn = lp_norm(&x, pf);
            if xn > 0.0 && xn != 1.0 {
                for xi in &mut x {
                    *xi = xi.scale(1.0 / xn);
                }
            }
            LinearStep {
                x,
                value: max * uq,
                degenerate: false,
            }
        }
    }
}

fn check_slots<S: Scalar>(t: &CoeffTensor<S>, p: &[Exponent]) -> Result<()> {
    if p.len() != t.order() {
        return Err(HlError::DimensionMismatch {
            expected: t.order(),
            found: p.len(),
        });
    }
    if t.order() == 0 {
        return Err(HlError::invalid("sup norm needs a tensor of order >= 1"));
    }
    Ok(())
}

fn random_unit<S: Scalar>(n: usize, p: Exponent, rng: &mut HlRng) -> Vec<S> {
    loop {
        let v: Vec<S> = (0..n).map(|_| S::sample_gaussian(rng)).collect();
        let norm = lp_norm_ext(&v, p);
        if norm > 0.0 {
            return v.into_iter().map(|x| x.scale(1.0 / norm)).collect();
        }
    }
}

fn unit_normalize<S: Scalar>(v: &[S], p: Exponent) -> Option<Vec<S>> {
    let norm = lp_norm_ext(v, p);
    (norm > 0.0 && norm.is_finite()).then(|| v.iter().map(|&x| x.scale(1.0 / norm)).collect())
}

fn canonical_start<S: Scalar>(t: &CoeffTensor<S>) -> Vec<Vec<S>> {
    let idx = t.multi_index(t.argmax_abs());
    idx.iter()
        .zip(t.dims())
        .map(|(&j, &n)| {
            let mut e = vec![S::zero(); n];
            e[j] = S::one();
            e
        })
        .collect()
}

fn abs_value<S: Scalar>(t: &CoeffTensor<S>, xs: &[Vec<S>]) -> f64 {
    let refs: Vec<&[S]> = xs.iter().map(Vec::as_slice).collect();
    t.evaluate(&refs).map(|v| v.abs()).unwrap_or(0.0)
}

/// Result of one ascent run.
#[derive(Debug, Clone)]
pub(crate) struct StartOutcome<S> {
    pub value: f64,
    pub witness: Vec<Vec<S>>,
    pub iterations: usize,
    pub converged: bool,
    pub reseeds: usize,
    pub monotone: bool,
    /// Objective after each full sweep, starting with the initial value.
    #[cfg_attr(not(test), allow(dead_code))]
    pub trace: Vec<f64>,
}

const MONOTONE_RTOL: f64 = 1e-12;

pub(crate) fn ascend<S: Scalar>(
    t: &CoeffTensor<S>,
    p: &[Exponent],
    mut xs: Vec<Vec<S>>,
    max_iters: usize,
    tol: f64,
    rng: &mut HlRng,
) -> StartOutcome<S> {
    let m = t.order();
    let reseed_limit = 64 * m;
    let mut value = abs_value(t, &xs);
    let mut trace = vec![value];
    let mut iterations = 0;
    let mut converged = false;
    let mut reseeds = 0;
    let mut monotone = true;

    while iterations < max_iters {
        iterations += 1;
        let prev = value;
        for k in 0..m {
            let c = match t.contract_all_but(k, &xs) {
                Ok(c) => c,
                Err(_) => unreachable!("shapes checked by caller"),
            };
            let step = linear_step_maximizer(&c, p[k]);
            if step.degenerate {
                if reseeds < reseed_limit {
                    xs[k] = random_unit(t.dims()[k], p[k], rng);
                    reseeds += 1;
                }
                value = abs_value(t, &xs);
                continue;
            }
            if step.value < value * (1.0 - MONOTONE_RTOL) {
                monotone = false;
            }
            xs[k] = step.x;
            value = step.value;
        }
        trace.push(value);
        if value > 0.0 && (value - prev).abs() <= tol * value {
            converged = true;
            break;
        }
        if value == 0.0 && reseeds >= reseed_limit {
            break;
        }
    }

    StartOutcome {
        value: abs_value(t, &xs),
        witness: xs,
        iterations,
        converged,
        reseeds,
        monotone,
        trace,
    }
}

fn zero_result<S: Scalar>(
    t: &CoeffTensor<S>,
    method: NormMethod,
    certified: bool,
) -> NormResult<S> {
    NormResult {
        value: 0.0,
        witness: t
            .dims()
            .iter()
            .map(|&n| {
                let mut e = vec![S::zero(); n];
                e[0] = S::one();
                e
            })
            .collect(),
        method,
        starts_used: 0,
        iterations: 0,
        converged: true,
        certified_exact: certified,
        reseeds: 0,
        monotone: true,
    }
}

/// Multistart alternating maximization. See the module docs.
pub fn sup_norm_alternating<S: Scalar>(
    t: &CoeffTensor<S>,
    p: &[Exponent],
    cfg: &NormConfig,
) -> Result<NormResult<S>> {
    sup_norm_alternating_hinted(t, p, cfg, &[])
}

/// As [`sup_norm_alternating`], with extra starting points appended after
/// the configured starts.
pub fn sup_norm_alternating_hinted<S: Scalar>(
    t: &CoeffTensor<S>,
    p: &[Exponent],
    cfg: &NormConfig,
    hints: &[Vec<Vec<S>>],
) -> Result<NormResult<S>> {
    check_slots(t, p)?;
    if cfg.starts < 1 {
        return Err(HlError::invalid("norm configuration needs starts >= 1"));
    }
    for h in hints {
        if h.len() != t.order() || h.iter().zip(t.dims()).any(|(x, &n)| x.len() != n) {
            return Err(HlError::invalid(
                "warm-start hint does not match the tensor shape",
            ));
        }
    }
    if t.is_zero() {
        return Ok(zero_result(t, NormMethod::Alternating, false));
    }

    let total = cfg.starts + hints.len();
    let outcomes = par::map_indexed(total, |i| {
        let mut rng = rng_from_seed(derive_seed(cfg.seed, &[i as u64]));
        let init = if i == 0 {
            canonical_start(t)
        } else if i < cfg.starts {
            t.dims()
                .iter()
                .zip(p)
                .map(|(&n, &pk)| random_unit(n, pk, &mut rng))
                .collect()
        } else {
            let hint = &hints[i - cfg.starts];
            hint.iter()
                .zip(p)
                .zip(t.dims())
                .map(|((x, &pk), &n)| {
                    unit_normalize(x, pk).unwrap_or_else(|| random_unit(n, pk, &mut rng))
                })
                .collect()
        };
        ascend(t, p, init, cfg.max_iters, cfg.tol, &mut rng)
    });

    let monotone = outcomes.iter().all(|o| o.monotone);
    let reseeds = outcomes.iter().map(|o| o.reseeds).sum();
    // max value, first start on ties
    let best = outcomes
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one start");

    Ok(NormResult {
        value: best.value,
        witness: best.witness,
        method: NormMethod::Alternating,
        starts_used: total,
        iterations: best.iterations,
        converged: best.converged,
        certified_exact: false,
        reseeds,
        monotone,
    })
}

/// Exact norm of a real form with every `p_k = inf`, by enumerating sign
/// vectors on all slots but the last; the last slot is closed form (`ℓ_1`
/// norm of the contraction). Requires `sum n_k <= budget_log2`.
pub fn sup_norm_vertex_exact<S: Scalar>(
    t: &CoeffTensor<S>,
    budget_log2: u32,
) -> Result<NormResult<S>> {
    if S::as_real_slice(t.coeffs()).is_none() {
        return Err(HlError::Unsupported(
            "vertex enumeration needs the real field".into(),
        ));
    }
    if t.order() == 0 {
        return Err(HlError::invalid("sup norm needs a tensor of order >= 1"));
    }
    let needed: usize = t.dims().iter().sum();
    if needed > budget_log2 as usize {
        return Err(HlError::BudgetExceeded {
            needed_log2: needed.min(u32::MAX as usize) as u32,
            budget_log2,
        });
    }
    if t.is_zero() {
        return Ok(zero_result(t, NormMethod::VertexExact, true));
    }

    let m = t.order();
    let head: Vec<usize> = t.dims()[..m - 1].to_vec();
    let bits: usize = head.iter().sum();
    // x_1[0] = +1 w.l.o.g. since |T| is invariant under x_1 -> -x_1
    let free = bits.saturating_sub(1);
    let patterns: u64 = 1 << free;

    let signs_for = |pattern: u64| -> Vec<Vec<S>> {
        let full = if bits == 0 { 0 } else { pattern << 1 };
        let mut bit = 0;
        head.iter()
            .map(|&n| {
                (0..n)
                    .map(|_| {
                        let s = if full >> bit & 1 == 1 {
                            -S::one()
                        } else {
                            S::one()
                        };
                        bit += 1;
                        s
                    })
                    .collect()
            })
            .collect()
    };
    let value_of = |pattern: u64| -> (f64, Vec<S>) {
        let xs = signs_for(pattern);
        let mut c = t.clone();
        for x in &xs {
            c = c.contract_first(x).expect("shape");
        }
        let step = linear_step_maximizer(c.coeffs(), Exponent::Infinity);
        (step.value, step.x)
    };

    let chunks = patterns.clamp(1, 256) as usize;
    let per = patterns.div_ceil(chunks as u64);
    let partial = par::map_indexed(chunks, |ci| {
        let lo = ci as u64 * per;
        let hi = (lo + per).min(patterns);
        let mut best = (f64::NEG_INFINITY, 0u64);
        for pat in lo..hi {
            let (v, _) = value_of(pat);
            if v > best.0 {
                best = (v, pat);
            }
        }
        best
    });
    let (_, best_pat) = partial
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one chunk");

    let mut witness = signs_for(best_pat);
    let (value, last) = value_of(best_pat);
    witness.push(last);
    Ok(NormResult {
        value,
        witness,
        method: NormMethod::VertexExact,
        starts_used: 1,
        iterations: patterns as usize,
        converged: true,
        certified_exact: true,
        reseeds: 0,
        monotone: true,
    })
}

/// Exact norm of `a_1 ⊗ ⋯ ⊗ a_m`: `prod_k ‖a_k‖_{p_k*}`.
pub fn sup_norm_rank_one<S: Scalar>(factors: &[Vec<S>], p: &[Exponent]) -> Result<NormResult<S>> {
    if factors.len() != p.len() {
        return Err(HlError::DimensionMismatch {
            expected: p.len(),
            found: factors.len(),
        });
    }
    if factors.is_empty() || factors.iter().any(Vec::is_empty) {
        return Err(HlError::invalid("rank-one factors must be non-empty"));
    }
    let steps: Vec<LinearStep<S>> = factors
        .iter()
        .zip(p)
        .map(|(a, &pk)| linear_step_maximizer(a, pk))
        .collect();
    let value = if steps.iter().any(|s| s.degenerate) {
        0.0
    } else {
        steps.iter().map(|s| s.value).product()
    };
    Ok(NormResult {
        value,
        witness: steps.into_iter().map(|s| s.x).collect(),
        method: NormMethod::RankOneExact,
        starts_used: 1,
        iterations: 0,
        converged: true,
        certified_exact: true,
        reseeds: 0,
        monotone: true,
    })
}

/// Whether [`sup_norm`] would certify this input with the vertex oracle.
pub fn vertex_oracle_applies<S: Scalar>(
    t: &CoeffTensor<S>,
    p: &[Exponent],
    cfg: &NormConfig,
) -> bool {
    cfg.use_oracles
        && S::as_real_slice(t.coeffs()).is_some()
        && t.order() >= 1
        && p.iter().all(|e| e.is_infinite())
        && t.dims().iter().sum::<usize>() <= cfg.vertex_budget_log2 as usize
}

/// Best available norm: the vertex oracle when it applies, alternating
/// maximization otherwise.
pub fn sup_norm<S: Scalar>(
    t: &CoeffTensor<S>,
    p: &[Exponent],
    cfg: &NormConfig,
) -> Result<NormResult<S>> {
    sup_norm_hinted(t, p, cfg, &[])
}

pub fn sup_norm_hinted<S: Scalar>(
    t: &CoeffTensor<S>,
    p: &[Exponent],
    cfg: &NormConfig,
    hints: &[Vec<Vec<S>>],
) -> Result<NormResult<S>> {
    check_slots(t, p)?;
    if vertex_oracle_applies(t, p, cfg) {
        sup_norm_vertex_exact(t, cfg.vertex_budget_log2)
    } else {
        sup_norm_alternating_hinted(t, p, cfg, hints)
    }
}
