//! Checks of the Hardy–Littlewood inequalities on concrete forms.
//!
//! A check compares `lhs = (sum |a_J|^rho)^{1/rho}` with `C ‖T‖`. Because
//! alternating norms are lower bounds on `‖T‖`, a failed comparison is a
//! violation only when the norm is certified; otherwise it is inconclusive.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HlError, Result};
use crate::exponents::{
    bound_best, bound_classical, bound_main, bound_universal, critical_exponent,
    khinchine_constant, recip_sum_of, BoundSource, Exponent, PVector, SubsetMode,
};
use crate::norms::{sup_norm, NormConfig, NormInfo, NormMethod};
use crate::par;
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use crate::tensor::{random_tensor, CoeffTensor, Distribution, MixedExponents};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundChoice {
    Classical,
    Universal,
    Main,
    Best,
}

impl FromStr for BoundChoice {
    type Err = HlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classical" => Ok(BoundChoice::Classical),
            "universal" => Ok(BoundChoice::Universal),
            "main" => Ok(BoundChoice::Main),
            "best" => Ok(BoundChoice::Best),
            other => Err(HlError::invalid(format!(
                "unknown bound rule {other:?}, expected classical, universal, main or best"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Holds,
    Inconclusive,
    CertifiedViolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub lhs: f64,
    pub rho: f64,
    pub norm: NormInfo,
    pub bound_source: BoundSource,
    pub constant: f64,
    /// `lhs / ‖T‖`, absent for a zero norm.
    pub ratio: Option<f64>,
    pub holds: bool,
    pub verdict: Verdict,
    /// `constant * ‖T‖ - lhs`.
    pub slack: f64,
    pub norm_certified: bool,
    pub seed: Option<u64>,
    pub tensor_id: Option<usize>,
}

/// One JSON line per record, with stable field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordLine {
    pub lhs: f64,
    pub rho: f64,
    pub norm: f64,
    pub norm_method: NormMethod,
    pub certified: bool,
    pub constant: f64,
    pub bound_source: BoundSource,
    pub ratio: Option<f64>,
    pub verdict: Verdict,
    pub slack: f64,
    pub seed: Option<u64>,
    pub tensor_id: Option<usize>,
}

impl VerificationRecord {
    pub fn line(&self) -> RecordLine {
        RecordLine {
            lhs: self.lhs,
            rho: self.rho,
            norm: self.norm.value,
            norm_method: self.norm.method,
            certified: self.norm_certified,
            constant: self.constant,
            bound_source: self.bound_source,
            ratio: self.ratio,
            verdict: self.verdict,
            slack: self.slack,
            seed: self.seed,
            tensor_id: self.tensor_id,
        }
    }
}

/// Absolute-plus-relative tolerance used by every comparison.
pub fn comparison_tol(lhs: f64) -> f64 {
    1e-9 * lhs.max(1.0)
}

pub(crate) fn make_record(
    lhs: f64,
    rho: f64,
    norm: NormInfo,
    constant: f64,
    bound_source: BoundSource,
) -> VerificationRecord {
    let rhs = constant * norm.value;
    let holds = lhs <= rhs + comparison_tol(lhs);
    let verdict = match (holds, norm.certified) {
        (true, _) => Verdict::Holds,
        (false, true) => Verdict::CertifiedViolation,
        (false, false) => Verdict::Inconclusive,
    };
    VerificationRecord {
        lhs,
        rho,
        norm,
        bound_source,
        constant,
        ratio: (norm.value > 0.0).then(|| lhs / norm.value),
        holds,
        verdict,
        slack: rhs - lhs,
        norm_certified: norm.certified,
        seed: None,
        tensor_id: None,
    }
}

/// Left-hand side at the critical exponent: `(lp_coeff_norm(T, rho), rho)`.
pub fn hl_lhs<S: Scalar>(t: &CoeffTensor<S>, p: &PVector) -> Result<(f64, f64)> {
    if t.order() != p.m() {
        return Err(HlError::DimensionMismatch {
            expected: p.m(),
            found: t.order(),
        });
    }
    let rho = critical_exponent(p)?;
    Ok((t.lp_coeff_norm(rho)?, rho))
}

/// Constant and label for a bound rule. `Main` without a qualifying subset
/// is an error; callers wanting a fallback use `Best`.
pub fn resolve_constant(
    p: &PVector,
    choice: BoundChoice,
    mode: SubsetMode,
) -> Result<(f64, BoundSource)> {
    match choice {
        BoundChoice::Classical => {
            critical_exponent(p)?;
            Ok((bound_classical(p.m())?, BoundSource::Classical))
        }
        BoundChoice::Universal => Ok((bound_universal(p)?, BoundSource::Universal)),
        BoundChoice::Main => match bound_main(p, mode)? {
            Some(c) => Ok((c, BoundSource::MainTheorem)),
            None => Err(HlError::domain(format!(
                "no sub-tuple of ({p}) qualifies in {mode:?} mode; the subset bound is inapplicable"
            ))),
        },
        BoundChoice::Best => {
            let b = bound_best(p, mode, false)?;
            Ok((b.value, b.source))
        }
    }
}

pub fn verify_inequality<S: Scalar>(
    t: &CoeffTensor<S>,
    p: &PVector,
    choice: BoundChoice,
    mode: SubsetMode,
    norm_cfg: &NormConfig,
) -> Result<VerificationRecord> {
    let (constant, source) = resolve_constant(p, choice, mode)?;
    let (lhs, rho) = hl_lhs(t, p)?;
    let norm = sup_norm(t, p.entries(), norm_cfg)?;
    Ok(make_record(lhs, rho, norm.info(), constant, source))
}

/// The Khinchine step for an (s+1)-linear form on
/// ℓ_{p_1} × ⋯ × ℓ_{p_s} × ℓ_∞:
/// `(sum_{j_1..j_s} (sum_{j_{s+1}} |a|^2)^{rho/2})^{1/rho} <= 2^{(s-1)(1-sigma)} ‖T‖`
/// with `sigma = |1/p|_{<=s}` in `[1/2, 1)` and `rho = 1/(1-sigma)`.
pub fn verify_khinchine_step<S: Scalar>(
    t: &CoeffTensor<S>,
    p_first_s: &[Exponent],
    norm_cfg: &NormConfig,
) -> Result<VerificationRecord> {
    let s = p_first_s.len();
    if s == 0 || t.order() != s + 1 {
        return Err(HlError::DimensionMismatch {
            expected: s + 1,
            found: t.order(),
        });
    }
    let sigma = recip_sum_of(p_first_s);
    if !(0.5..1.0).contains(&sigma) {
        return Err(HlError::domain(format!(
            "|1/p|_(<=s) = {sigma}; the Khinchine step needs 1/2 <= |1/p|_(<=s) < 1"
        )));
    }
    let rho = 1.0 / (1.0 - sigma);
    let a = khinchine_constant(rho, S::FIELD)?;
    let constant = (((s - 1) as f64) * (1.0 - sigma)).exp2() / a;

    let mut exps = vec![rho; s];
    exps.push(2.0);
    let lhs = t.mixed_norm(&MixedExponents::new(exps)?)?;

    let mut slots = p_first_s.to_vec();
    slots.push(Exponent::Infinity);
    let norm = sup_norm(t, &slots, norm_cfg)?;
    Ok(make_record(
        lhs,
        rho,
        norm.info(),
        constant,
        BoundSource::KhinchineStep,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub dist: Distribution,
    pub dims: Vec<usize>,
    pub count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub count: usize,
    pub holds: usize,
    pub inconclusive: usize,
    pub violations: usize,
    pub certified: usize,
    pub min_slack: f64,
    pub max_ratio: f64,
    pub argmax_tensor_id: usize,
    pub constant: f64,
    pub bound_source: BoundSource,
    #[serde(skip)]
    pub records: Vec<VerificationRecord>,
}

/// Seed of tensor `i` in an ensemble.
pub fn ensemble_tensor_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, &[i as u64, 0])
}

fn ensemble_norm_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, &[i as u64, 1])
}

/// Verifies `count` seeded random forms. Item `i` draws its tensor from
/// stream `(seed, i, 0)` and its norm starts from stream `(seed, i, 1)`.
pub fn batch_verify<S: Scalar>(
    ensemble: &Ensemble,
    p: &PVector,
    choice: BoundChoice,
    mode: SubsetMode,
    norm_cfg: &NormConfig,
) -> Result<BatchSummary> {
    if ensemble.count < 1 {
        return Err(HlError::invalid("batch needs count >= 1"));
    }
    if ensemble.dims.len() != p.m() {
        return Err(HlError::DimensionMismatch {
            expected: p.m(),
            found: ensemble.dims.len(),
        });
    }
    let (constant, source) = resolve_constant(p, choice, mode)?;
    let rho = critical_exponent(p)?;

    let records = par::map_indexed(ensemble.count, |i| -> Result<VerificationRecord> {
        let tseed = ensemble_tensor_seed(ensemble.seed, i);
        let t: CoeffTensor<S> = random_tensor(&ensemble.dims, ensemble.dist, tseed)?;
        let lhs = t.lp_coeff_norm(rho)?;
        let cfg = norm_cfg.with_seed(ensemble_norm_seed(ensemble.seed, i));
        let norm = sup_norm(&t, p.entries(), &cfg)?;
        let mut rec = make_record(lhs, rho, norm.info(), constant, source);
        rec.seed = Some(tseed);
        rec.tensor_id = Some(i);
        Ok(rec)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    Ok(summarize(records, constant, source))
}

pub(crate) fn summarize(
    records: Vec<VerificationRecord>,
    constant: f64,
    source: BoundSource,
) -> BatchSummary {
    let mut max_ratio = f64::NEG_INFINITY;
    let mut argmax = 0;
    for (i, r) in records.iter().enumerate() {
        if let Some(q) = r.ratio {
            if q > max_ratio {
                max_ratio = q;
                argmax = r.tensor_id.unwrap_or(i);
            }
        }
    }
    BatchSummary {
        count: records.len(),
        holds: records
            .iter()
            .filter(|r| r.verdict == Verdict::Holds)
            .count(),
        inconclusive: records
            .iter()
            .filter(|r| r.verdict == Verdict::Inconclusive)
            .count(),
        violations: records
            .iter()
            .filter(|r| r.verdict == Verdict::CertifiedViolation)
            .count(),
        certified: records.iter().filter(|r| r.norm_certified).count(),
        min_slack: records
            .iter()
            .map(|r| r.slack)
            .fold(f64::INFINITY, f64::min),
        max_ratio: if max_ratio.is_finite() {
            max_ratio
        } else {
            0.0
        },
        argmax_tensor_id: argmax,
        constant,
        bound_source: source,
        records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn pv(s: &str) -> PVector {
        s.parse().unwrap()
    }

    fn e1_cubed() -> CoeffTensor<f64> {
        let e1 = vec![1.0, 0.0, 0.0, 0.0];
        CoeffTensor::outer(&[e1.clone(), e1.clone(), e1]).unwrap()
    }

    #[test]
    fn lhs_examples() {
        let (lhs, rho) = hl_lhs(&CoeffTensor::<f64>::littlewood(), &pv("inf,inf")).unwrap();
        assert!((lhs - 4f64.powf(0.75)).abs() < 1e-12);
        assert!((rho - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(hl_lhs(&e1_cubed(), &pv("8,8,2")).unwrap(), (1.0, 4.0));
        let z = CoeffTensor::<f64>::zeros(vec![2, 2]).unwrap();
        assert_eq!(hl_lhs(&z, &pv("inf,inf")).unwrap().0, 0.0);
        assert!(hl_lhs(&z, &pv("2,2")).is_err());
        assert!(hl_lhs(&z, &pv("inf,inf,inf")).is_err());
    }

    #[test]
    fn littlewood_equality_case() {
        let r = verify_inequality(
            &CoeffTensor::<f64>::littlewood(),
            &pv("inf,inf"),
            BoundChoice::Classical,
            SubsetMode::DistinctIndices,
            &NormConfig::default(),
        )
        .unwrap();
        assert!(r.holds);
        assert!(r.norm_certified);
        assert!(r.slack.abs() < 1e-9);
        assert!((r.lhs - 2.828427).abs() < 1e-6);
        assert!((r.ratio.unwrap() - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn constant_one_is_attained() {
        let r = verify_inequality(
            &e1_cubed(),
            &pv("8,8,2"),
            BoundChoice::Main,
            SubsetMode::DistinctIndices,
            &NormConfig::default(),
        )
        .unwrap();
        assert_eq!(r.constant, 1.0);
        assert_eq!(r.bound_source, BoundSource::MainTheorem);
        assert!(r.holds);
        assert!((r.lhs - r.norm.value).abs() < 1e-12);
    }

    #[test]
    fn inapplicable_bounds() {
        let l = CoeffTensor::<f64>::littlewood();
        let cfg = NormConfig::default();
        for choice in [BoundChoice::Universal, BoundChoice::Main] {
            assert!(matches!(
                verify_inequality(
                    &l,
                    &pv("inf,inf"),
                    choice,
                    SubsetMode::DistinctIndices,
                    &cfg
                ),
                Err(HlError::Domain(_))
            ));
        }
        let t = random_tensor::<f64>(&[2, 2, 2], Distribution::Gaussian, 0).unwrap();
        assert!(verify_inequality(
            &t,
            &pv("4,4,4"),
            BoundChoice::Main,
            SubsetMode::DistinctValues,
            &cfg
        )
        .is_err());
        let r = verify_inequality(
            &t,
            &pv("4,4,4"),
            BoundChoice::Best,
            SubsetMode::DistinctValues,
            &cfg,
        )
        .unwrap();
        assert_eq!(r.bound_source, BoundSource::Universal);
    }

    #[test]
    fn verdicts() {
        let info = |certified| NormInfo {
            value: 1.0,
            method: NormMethod::Alternating,
            certified,
            starts_used: 1,
            iterations: 1,
            converged: true,
            reseeds: 0,
        };
        assert_eq!(
            make_record(2.0, 2.0, info(false), 1.0, BoundSource::Universal).verdict,
            Verdict::Inconclusive
        );
        assert_eq!(
            make_record(2.0, 2.0, info(true), 1.0, BoundSource::Universal).verdict,
            Verdict::CertifiedViolation
        );
        let r = make_record(1.0 + 5e-10, 2.0, info(true), 1.0, BoundSource::Universal);
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn khinchine_identity_equality() {
        for n in 2..=5 {
            let t = CoeffTensor::<f64>::identity(n).unwrap();
            let r =
                verify_khinchine_step(&t, &[Exponent::new(2.0).unwrap()], &NormConfig::default())
                    .unwrap();
            let sq = (n as f64).sqrt();
            assert!((r.lhs - sq).abs() < 1e-12);
            assert!((r.norm.value - sq).abs() < 1e-9);
            assert!(r.holds);
        }
        let z = CoeffTensor::<f64>::zeros(vec![3, 3]).unwrap();
        let r = verify_khinchine_step(&z, &[Exponent::new(2.0).unwrap()], &NormConfig::default())
            .unwrap();
        assert!(r.holds && r.lhs == 0.0);
        assert!(
            verify_khinchine_step(&z, &[Exponent::new(3.0).unwrap()], &NormConfig::default())
                .is_err()
        );
        assert!(verify_khinchine_step(
            &z,
            &[Exponent::Infinity, Exponent::Infinity],
            &NormConfig::default()
        )
        .is_err());
    }

    #[test]
    fn batch_count_zero_is_error() {
        let e = Ensemble {
            dist: Distribution::Signs,
            dims: vec![2, 2],
            count: 0,
            seed: 1,
        };
        assert!(batch_verify::<f64>(
            &e,
            &pv("inf,inf"),
            BoundChoice::Classical,
            SubsetMode::DistinctIndices,
            &NormConfig::default()
        )
        .is_err());
    }

    #[test]
    fn batch_signs_littlewood_bound() {
        let e = Ensemble {
            dist: Distribution::Signs,
            dims: vec![2, 2],
            count: 256,
            seed: 42,
        };
        let s = batch_verify::<f64>(
            &e,
            &pv("inf,inf"),
            BoundChoice::Classical,
            SubsetMode::DistinctIndices,
            &NormConfig::default(),
        )
        .unwrap();
        assert_eq!(s.holds, 256);
        assert_eq!(s.certified, 256);
        assert!(s.max_ratio <= SQRT_2 + 1e-9);
        assert!(s.max_ratio >= SQRT_2 - 1e-12);
    }
}
