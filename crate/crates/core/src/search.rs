//! Empirical lower bounds on the optimal constants.
//!
//! Maximizes `ratio(T) = lhs(T) / ‖T‖` over coefficient tensors by ascent on
//! `log ratio`: `T <- normalize(T + eta (grad lhs / lhs - grad ‖T‖ / ‖T‖))`.
//! A step is kept only if the recomputed ratio improves; otherwise `eta`
//! halves. Every start is finally re-scored with a stronger norm run.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HlError, Result};
use crate::exponents::{critical_exponent, BoundSource, PVector, SubsetMode};
use crate::norms::{sup_norm, sup_norm_hinted, NormConfig, NormResult};
use crate::par;
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use crate::tensor::{random_tensor, CoeffTensor, Distribution};
use crate::verify::{hl_lhs, resolve_constant, BoundChoice, Verdict};

pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_STEPS: usize = 500;
pub const DEFAULT_STEP_SIZE: f64 = 0.1;
/// Sign-random tensors added to the seed library.
pub const DEFAULT_RANDOM_SEED_FORMS: usize = 2;
pub const DEFAULT_FINAL_STARTS: usize = 128;
const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SeedLabel {
    Littlewood,
    RankOne,
    File,
    Random,
}

impl FromStr for SeedLabel {
    type Err = HlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LITTLEWOOD" => Ok(SeedLabel::Littlewood),
            "RANK_ONE" => Ok(SeedLabel::RankOne),
            "FILE" => Ok(SeedLabel::File),
            "RANDOM" => Ok(SeedLabel::Random),
            other => Err(HlError::invalid(format!("unknown seed label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    pub steps: usize,
    pub step_size: f64,
    pub seed: u64,
    pub norm_cfg: NormConfig,
    pub random_seed_forms: usize,
    /// Random starts of the norm run that re-scores each final tensor.
    pub final_starts: usize,
    pub mode: SubsetMode,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: DEFAULT_RESTARTS,
            steps: DEFAULT_STEPS,
            step_size: DEFAULT_STEP_SIZE,
            seed: 0,
            norm_cfg: NormConfig::default(),
            random_seed_forms: DEFAULT_RANDOM_SEED_FORMS,
            final_starts: DEFAULT_FINAL_STARTS,
            mode: SubsetMode::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioRecord<S> {
    pub ratio: f64,
    pub lhs: f64,
    /// Unit ℓ₂ coefficient norm.
    pub tensor: CoeffTensor<S>,
    pub p: PVector,
    pub iterations: usize,
    pub accepted_steps: usize,
    pub seed_label: SeedLabel,
    /// Position in the start list (seed library, then file seeds, then restarts).
    pub start_index: usize,
    pub norm: NormResult<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome<S> {
    pub best: RatioRecord<S>,
    /// Per-start results after re-scoring, in start order.
    pub all: Vec<RatioRecord<S>>,
    pub bound: f64,
    pub bound_source: BoundSource,
    /// `CertifiedViolation` when a certified ratio exceeds `bound + 1e-6`.
    pub verdict: Verdict,
}

/// Tolerance above a certified theorem bound that fails a search.
pub const SEARCH_BOUND_TOL: f64 = 1e-6;

/// `hl_lhs(T) / ‖T‖` with the best available norm.
pub fn ratio<S: Scalar>(t: &CoeffTensor<S>, p: &PVector, norm_cfg: &NormConfig) -> Result<f64> {
    if t.is_zero() {
        return Err(HlError::domain("ratio of the zero form is undefined"));
    }
    let (lhs, _) = hl_lhs(t, p)?;
    let norm = sup_norm(t, p.entries(), norm_cfg)?;
    Ok(lhs / norm.value)
}

/// Gradient of `(sum |a_J|^rho)^{1/rho}`:
/// `S^{1/rho - 1} |a_J|^{rho-1} phase(a_J)` with `S = sum |a|^rho`.
///
/// Complex coefficients carry `d/d Re + i d/d Im` in one scalar.
pub fn grad_lhs<S: Scalar>(t: &CoeffTensor<S>, rho: f64) -> Result<CoeffTensor<S>> {
    if rho.is_nan() || rho <= 1.0 {
        return Err(HlError::Unsupported(format!(
            "lhs gradient needs rho > 1, got {rho}"
        )));
    }
    let max = t.coeffs().iter().map(|c| c.abs()).fold(0.0, f64::max);
    if max == 0.0 {
        return Err(HlError::domain("lhs gradient at the zero form"));
    }
    let sum: f64 = t.coeffs().iter().map(|c| (c.abs() / max).powf(rho)).sum();
    let factor = sum.powf(1.0 / rho - 1.0);
    Ok(t.map(|c| {
        let u = c.abs() / max;
        if u == 0.0 {
            S::zero()
        } else {
            c.phase().scale(factor * u.powf(rho - 1.0))
        }
    }))
}

/// Supergradient of `‖T‖` at the witness: `phase(z) conj(x_1[j_1] ⋯ x_m[j_m])`
/// with `z = T(witness)`.
pub fn grad_norm_witness<S: Scalar>(
    t: &CoeffTensor<S>,
    norm: &NormResult<S>,
) -> Result<CoeffTensor<S>> {
    if norm.witness.len() != t.order() {
        return Err(HlError::DimensionMismatch {
            expected: t.order(),
            found: norm.witness.len(),
        });
    }
    let refs: Vec<&[S]> = norm.witness.iter().map(Vec::as_slice).collect();
    let z = t.evaluate(&refs)?;
    if z.abs() == 0.0 {
        return Err(HlError::domain(
            "degenerate witness: the form vanishes there",
        ));
    }
    let ph = z.phase();
    Ok(CoeffTensor::outer(&norm.witness)?.map(|w| ph * w.conj()))
}

/// Extremal library for `m`-linear forms on `n`-dimensional slots: the
/// canonical rank-one form, the Littlewood tensor power (times the all-ones
/// vector for odd `m`) zero-padded to `n`, and `random_count` sign tensors.
pub fn seed_forms<S: Scalar>(
    m: usize,
    n: usize,
    random_count: usize,
    seed: u64,
) -> Result<Vec<(SeedLabel, CoeffTensor<S>)>> {
    if m < 2 || n < 2 {
        return Err(HlError::invalid(format!(
            "seed library needs m >= 2 and n >= 2, got m = {m}, n = {n}"
        )));
    }
    let dims = vec![n; m];
    let mut out = Vec::new();

    let mut e1 = vec![S::zero(); n];
    e1[0] = S::one();
    out.push((SeedLabel::RankOne, CoeffTensor::outer(&vec![e1; m])?));

    let l = CoeffTensor::<S>::littlewood();
    let mut power = l.clone();
    for _ in 1..m / 2 {
        power = power.tensor_product(&l)?;
    }
    let mut lw = power.zero_padded(&vec![n; 2 * (m / 2)])?;
    if m % 2 == 1 {
        lw = lw.tensor_product(&CoeffTensor::new(vec![n], vec![S::one(); n])?)?;
    }
    out.push((SeedLabel::Littlewood, lw));

    for i in 0..random_count {
        let t = random_tensor(
            &dims,
            Distribution::Signs,
            derive_seed(seed, &[1, i as u64]),
        )?;
        out.push((SeedLabel::Random, t));
    }
    Ok(out)
}

struct Scored<S> {
    ratio: f64,
    lhs: f64,
    norm: NormResult<S>,
}

fn score<S: Scalar>(
    t: &CoeffTensor<S>,
    p: &PVector,
    rho: f64,
    cfg: &NormConfig,
    hints: &[Vec<Vec<S>>],
) -> Result<Scored<S>> {
    let lhs = t.lp_coeff_norm(rho)?;
    let norm = sup_norm_hinted(t, p.entries(), cfg, hints)?;
    Ok(Scored {
        ratio: if norm.value > 0.0 {
            lhs / norm.value
        } else {
            0.0
        },
        lhs,
        norm,
    })
}

fn ascend_ratio<S: Scalar>(
    start: CoeffTensor<S>,
    label: SeedLabel,
    start_index: usize,
    p: &PVector,
    rho: f64,
    cfg: &SearchConfig,
) -> Result<RatioRecord<S>> {
    let step_cfg = |step: usize| {
        cfg.norm_cfg
            .with_seed(derive_seed(cfg.seed, &[2, start_index as u64, step as u64]))
    };
    let mut t = start.l2_normalized();
    let mut cur = score(&t, p, rho, &step_cfg(0), &[])?;
    // grad_lhs needs rho > 1, which holds for every valid p
    let can_step = rho > 1.0;
    let mut eta = cfg.step_size;
    let mut iterations = 0;
    let mut accepted = 0;

    while can_step && iterations < cfg.steps && eta >= MIN_STEP && cur.norm.value > 0.0 {
        iterations += 1;
        let g_lhs = grad_lhs(&t, rho)?;
        let g_norm = match grad_norm_witness(&t, &cur.norm) {
            Ok(g) => g,
            Err(_) => break,
        };
        let dir = g_lhs
            .scaled(S::from_real(1.0 / cur.lhs))
            .axpy(-1.0 / cur.norm.value, &g_norm)?;
        let cand = t.axpy(eta, &dir)?.l2_normalized();
        if cand.is_zero() {
            eta *= 0.5;
            continue;
        }
        let next = score(
            &cand,
            p,
            rho,
            &step_cfg(iterations),
            &[cur.norm.witness.clone()],
        )?;
        if next.ratio > cur.ratio {
            t = cand;
            cur = next;
            accepted += 1;
        } else {
            eta *= 0.5;
        }
    }

    Ok(RatioRecord {
        ratio: cur.ratio,
        lhs: cur.lhs,
        tensor: t,
        p: p.clone(),
        iterations,
        accepted_steps: accepted,
        seed_label: label,
        start_index,
        norm: cur.norm,
    })
}

/// Ratio ascent from the seed library, the caller's `extra` seeds and
/// `cfg.restarts` Gaussian tensors, all of shape `n^m`. Deterministic in
/// `cfg.seed`. The best record maximizes `(ratio, -label, -start)`.
pub fn lower_bound_search<S: Scalar>(
    p: &PVector,
    n: usize,
    cfg: &SearchConfig,
    extra: &[CoeffTensor<S>],
) -> Result<SearchOutcome<S>> {
    if cfg.restarts < 1 {
        return Err(HlError::invalid("search needs restarts >= 1"));
    }
    let rho = critical_exponent(p)?;
    let (bound, bound_source) = resolve_constant(p, BoundChoice::Best, cfg.mode)?;
    let m = p.m();
    let dims = vec![n; m];

    let mut starts = seed_forms::<S>(m, n, cfg.random_seed_forms, cfg.seed)?;
    for t in extra {
        if t.dims() != dims.as_slice() {
            return Err(HlError::invalid(format!(
                "seed tensor has dims {:?}, search expects {dims:?}",
                t.dims()
            )));
        }
        if !t.is_zero() {
            starts.push((SeedLabel::File, t.clone()));
        }
    }
    for r in 0..cfg.restarts {
        let t = random_tensor(
            &dims,
            Distribution::Gaussian,
            derive_seed(cfg.seed, &[0, r as u64]),
        )?;
        starts.push((SeedLabel::Random, t));
    }

    let final_cfg = cfg
        .norm_cfg
        .with_starts(cfg.final_starts.max(cfg.norm_cfg.starts));
    let all = par::map_indexed(starts.len(), |i| -> Result<RatioRecord<S>> {
        let (label, t) = &starts[i];
        let mut rec = ascend_ratio(t.clone(), *label, i, p, rho, cfg)?;
        let fcfg = final_cfg.with_seed(derive_seed(cfg.seed, &[3, i as u64]));
        let rescored = score(&rec.tensor, p, rho, &fcfg, &[rec.norm.witness.clone()])?;
        if rescored.norm.value >= rec.norm.value {
            rec.ratio = rescored.ratio;
            rec.lhs = rescored.lhs;
            rec.norm = rescored.norm;
        }
        Ok(rec)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let best = all
        .iter()
        .reduce(|a, b| {
            let key = |r: &RatioRecord<S>| {
                (
                    std::cmp::Reverse(r.seed_label),
                    std::cmp::Reverse(r.start_index),
                )
            };
            match b
                .ratio
                .total_cmp(&a.ratio)
                .then_with(|| key(b).cmp(&key(a)))
            {
                std::cmp::Ordering::Greater => b,
                _ => a,
            }
        })
        .expect("seed library is never empty")
        .clone();

    let verdict = if best.ratio <= bound + SEARCH_BOUND_TOL {
        Verdict::Holds
    } else if best.norm.certified_exact {
        Verdict::CertifiedViolation
    } else {
        Verdict::Inconclusive
    };

    Ok(SearchOutcome {
        best,
        all,
        bound,
        bound_source,
        verdict,
    })
}
