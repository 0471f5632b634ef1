//! Reciprocal-sum calculus for exponent tuples `p = (p_1, ..., p_m)`.
//!
//! Regime classification, critical summing exponents, the subset parameter
//! `s`, the Khinchine constant for `q >= 2` and the closed-form constant
//! bounds (classical, universal, subset-based).
//!
//! All comparisons against the regime thresholds `1/2` and `1` are exact on
//! the computed `f64` reciprocal sum; no epsilon is applied. Reciprocals of
//! small integers and powers of two are exact, so the usual inputs land on
//! the thresholds exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{HlError, Result};
use crate::scalar::Field;

/// Largest `m` for which subsets are enumerated exhaustively.
pub const MAX_SUBSET_ORDER: usize = 20;

/// One entry `p_k` of an exponent tuple, an extended real in `(1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() {
            return Err(HlError::domain("exponent is NaN"));
        }
        if p == f64::INFINITY {
            return Ok(Exponent::Infinity);
        }
        if p <= 1.0 {
            return Err(HlError::domain(format!("exponent {p} is not in (1, inf]")));
        }
        Ok(Exponent::Finite(p))
    }

    /// `1/p`, exactly zero at infinity.
    pub fn recip(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }

    /// Hölder conjugate `p* = p/(p-1)`; `inf* = 1`.
    pub fn dual(self) -> f64 {
        match self {
            Exponent::Finite(p) => p / (p - 1.0),
            Exponent::Infinity => 1.0,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = HlError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" | "∞" => Ok(Exponent::Infinity),
            _ => {
                let v: f64 = t
                    .parse()
                    .map_err(|_| HlError::invalid(format!("cannot parse exponent {t:?}")))?;
                if v.is_infinite() && v > 0.0 {
                    return Ok(Exponent::Infinity);
                }
                Exponent::new(v)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => serializer.serialize_f64(*p),
            Exponent::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Num(v) => Exponent::new(v),
            Raw::Str(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Sum of reciprocals, `1/inf = 0`.
pub fn recip_sum_of(ps: &[Exponent]) -> f64 {
    ps.iter().map(|p| p.recip()).sum()
}

/// An exponent tuple with `m >= 2` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Exponent>", into = "Vec<Exponent>")]
pub struct PVector {
    entries: Vec<Exponent>,
}

impl TryFrom<Vec<Exponent>> for PVector {
    type Error = HlError;

    fn try_from(entries: Vec<Exponent>) -> Result<Self> {
        PVector::new(entries)
    }
}

impl From<PVector> for Vec<Exponent> {
    fn from(p: PVector) -> Self {
        p.entries
    }
}

impl PVector {
    pub fn new(entries: Vec<Exponent>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(HlError::domain(format!(
                "an exponent tuple needs m >= 2 entries, got {}",
                entries.len()
            )));
        }
        Ok(PVector { entries })
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        values
            .iter()
            .map(|&v| Exponent::new(v))
            .collect::<Result<Vec<_>>>()
            .and_then(PVector::new)
    }

    /// Isotropic tuple `(p, ..., p)` of length `m`.
    pub fn isotropic(p: Exponent, m: usize) -> Result<Self> {
        PVector::new(vec![p; m])
    }

    pub fn m(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Exponent] {
        &self.entries
    }

    /// `|1/p|`.
    pub fn recip_sum(&self) -> f64 {
        recip_sum_of(&self.entries)
    }

    /// `sum_{k in lo..hi} 1/p_k`, zero-based half-open.
    pub fn recip_sum_range(&self, lo: usize, hi: usize) -> Result<f64> {
        if lo >= hi || hi > self.m() {
            return Err(HlError::Range {
                lo,
                hi,
                m: self.m(),
            });
        }
        Ok(recip_sum_of(&self.entries[lo..hi]))
    }

    /// `|1/p|_{<=k} = 1/p_1 + ... + 1/p_k`.
    pub fn recip_sum_leading(&self, k: usize) -> Result<f64> {
        self.recip_sum_range(0, k)
    }

    /// `|1/p|_{>=k} = 1/p_k + ... + 1/p_m`, with `k` one-based.
    pub fn recip_sum_trailing(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(HlError::Range {
                lo: 0,
                hi: self.m(),
                m: self.m(),
            });
        }
        self.recip_sum_range(k - 1, self.m())
    }

    /// Reorders entries so that entry `i` of the result is `self[perm[i]]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.m() {
            return Err(HlError::DimensionMismatch {
                expected: self.m(),
                found: perm.len(),
            });
        }
        let mut seen = vec![false; self.m()];
        for &i in perm {
            if i >= self.m() || seen[i] {
                return Err(HlError::invalid("not a permutation"));
            }
            seen[i] = true;
        }
        PVector::new(perm.iter().map(|&i| self.entries[i]).collect())
    }
}

impl FromStr for PVector {
    type Err = HlError;

    fn from_str(s: &str) -> Result<Self> {
        s.split(',')
            .map(str::parse)
            .collect::<Result<Vec<Exponent>>>()
            .and_then(PVector::new)
    }
}

impl fmt::Display for PVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RegimeTag {
    /// `0 <= |1/p| <= 1/2` (strictly below 1/2; the boundary is `DsRange`).
    BhRange,
    /// `1/2 <= |1/p| < 1`.
    DsRange,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub recip_sum: f64,
    /// Set when `|1/p| == 1/2` exactly: the tuple is admissible for both
    /// exponent formulas.
    pub bh_admissible: bool,
}

impl Regime {
    pub fn is_valid(&self) -> bool {
        self.tag != RegimeTag::Invalid
    }
}

pub fn classify_sum(sigma: f64) -> Regime {
    let tag = if sigma < 0.5 {
        RegimeTag::BhRange
    } else if sigma < 1.0 {
        RegimeTag::DsRange
    } else {
        RegimeTag::Invalid
    };
    Regime {
        tag,
        recip_sum: sigma,
        bh_admissible: sigma <= 0.5,
    }
}

pub fn classify_regime(p: &PVector) -> Regime {
    classify_sum(p.recip_sum())
}

fn require_valid(p: &PVector) -> Result<Regime> {
    let r = classify_regime(p);
    if !r.is_valid() {
        return Err(HlError::domain(format!(
            "|1/p| = {} for p = ({p}); the inequalities need 0 <= |1/p| < 1",
            r.recip_sum
        )));
    }
    Ok(r)
}

fn require_ds(p: &PVector) -> Result<Regime> {
    let r = require_valid(p)?;
    if r.tag != RegimeTag::DsRange {
        return Err(HlError::domain(format!(
            "|1/p| = {} for p = ({p}); this bound needs 1/2 <= |1/p| < 1",
            r.recip_sum
        )));
    }
    Ok(r)
}

/// Critical exponent for `m` slots and reciprocal sum `sigma`.
pub fn critical_exponent_for(m: usize, sigma: f64) -> Result<f64> {
    let r = classify_sum(sigma);
    match r.tag {
        RegimeTag::BhRange => {
            let m = m as f64;
            Ok(2.0 * m / (m + 1.0 - 2.0 * sigma))
        }
        RegimeTag::DsRange => Ok(1.0 / (1.0 - sigma)),
        RegimeTag::Invalid => Err(HlError::domain(format!(
            "|1/p| = {sigma}; the inequalities need 0 <= |1/p| < 1"
        ))),
    }
}

/// `rho = 2m/(m+1-2|1/p|)` below one half, `rho = 1/(1-|1/p|)` from one half on.
pub fn critical_exponent(p: &PVector) -> Result<f64> {
    let r = require_valid(p)?;
    critical_exponent_for(p.m(), r.recip_sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SubsetMode {
    /// Sub-tuples of distinct positions; repeated values allowed.
    #[default]
    DistinctIndices,
    /// Sub-tuples whose exponent values are pairwise different.
    DistinctValues,
}

impl FromStr for SubsetMode {
    type Err = HlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "distinct_indices" | "indices" => Ok(SubsetMode::DistinctIndices),
            "distinct_values" | "values" => Ok(SubsetMode::DistinctValues),
            other => Err(HlError::invalid(format!(
                "unknown subset mode {other:?}, expected indices or values"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualifyingSubset {
    /// Zero-based positions, ascending.
    pub indices: Vec<usize>,
    pub partial_sum: f64,
    /// `2^{(|S|-1)(1-sigma_S)}`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub s: Option<usize>,
    /// Zero-based positions of the selected minimal subset.
    pub indices: Vec<usize>,
    pub partial_sum: Option<f64>,
    pub mode: SubsetMode,
    /// Every qualifying subset, ordered by size and then lexicographically.
    pub all_qualifying: Vec<QualifyingSubset>,
}

fn subset_bound(size: usize, sigma: f64) -> f64 {
    (((size - 1) as f64) * (1.0 - sigma)).exp2()
}

fn values_distinct(ps: &[Exponent], idx: &[usize]) -> bool {
    idx.iter()
        .enumerate()
        .all(|(a, &i)| idx[..a].iter().all(|&j| ps[i] != ps[j]))
}

/// Exhaustive search for the minimal qualifying sub-tuple.
///
/// A subset qualifies when its reciprocal sum lies in `[1/2, 1)` (and, in
/// `DistinctValues` mode, its exponent values differ pairwise). Among
/// minimal-size subsets the largest partial sum wins, then the
/// lexicographically smallest index list.
pub fn subset_parameter_s(p: &PVector, mode: SubsetMode) -> Result<SubsetReport> {
    require_ds(p)?;
    let m = p.m();
    if m > MAX_SUBSET_ORDER {
        return Err(HlError::Unsupported(format!(
            "exhaustive subset enumeration limited to m <= {MAX_SUBSET_ORDER}, got {m}"
        )));
    }
    let ps = p.entries();
    let mut all = Vec::new();
    for mask in 1u32..(1u32 << m) {
        let indices: Vec<usize> = (0..m).filter(|&k| mask & (1 << k) != 0).collect();
        if mode == SubsetMode::DistinctValues && !values_distinct(ps, &indices) {
            continue;
        }
        let sigma: f64 = indices.iter().map(|&k| ps[k].recip()).sum();
        if (0.5..1.0).contains(&sigma) {
            all.push(QualifyingSubset {
                bound: subset_bound(indices.len(), sigma),
                indices,
                partial_sum: sigma,
            });
        }
    }
    all.sort_by(|a, b| {
        a.indices
            .len()
            .cmp(&b.indices.len())
            .then_with(|| a.indices.cmp(&b.indices))
    });

    let best = all.iter().min_by(|a, b| {
        a.indices
            .len()
            .cmp(&b.indices.len())
            .then_with(|| b.partial_sum.total_cmp(&a.partial_sum))
            .then_with(|| a.indices.cmp(&b.indices))
    });

    Ok(match best {
        Some(b) => SubsetReport {
            s: Some(b.indices.len()),
            indices: b.indices.clone(),
            partial_sum: Some(b.partial_sum),
            mode,
            all_qualifying: all.clone(),
        },
        None => SubsetReport {
            s: None,
            indices: Vec::new(),
            partial_sum: None,
            mode,
            all_qualifying: all,
        },
    })
}

/// `(sqrt 2)^{m-1}`.
pub fn bound_classical(m: usize) -> Result<f64> {
    if m < 2 {
        return Err(HlError::domain(format!("m = {m}; need m >= 2")));
    }
    Ok(((m - 1) as f64 / 2.0).exp2())
}

/// `2^{(m-1)(1-|1/p|)}`, valid for `1/2 <= |1/p| < 1`.
pub fn bound_universal(p: &PVector) -> Result<f64> {
    let r = require_ds(p)?;
    Ok((((p.m() - 1) as f64) * (1.0 - r.recip_sum)).exp2())
}

/// `2^{(s-1)(1-sigma_s)}` from the minimal subset. `Ok(None)` when no
/// subset qualifies in the requested mode; callers fall back to
/// [`bound_universal`].
pub fn bound_main(p: &PVector, mode: SubsetMode) -> Result<Option<f64>> {
    let report = subset_parameter_s(p, mode)?;
    Ok(match (report.s, report.partial_sum) {
        (Some(s), Some(sigma)) => Some(subset_bound(s, sigma)),
        _ => None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundSource {
    Classical,
    Universal,
    MainTheorem,
    /// Subset bound for a qualifying subset that is not the minimal one.
    Extrapolated,
    /// Constant of the Khinchine-step inequality for an (s+1)-linear form.
    KhinchineStep,
}

impl BoundSource {
    fn priority(self) -> u8 {
        match self {
            BoundSource::MainTheorem => 0,
            BoundSource::Universal => 1,
            BoundSource::Classical => 2,
            BoundSource::Extrapolated => 3,
            BoundSource::KhinchineStep => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BoundSource::Classical => "CLASSICAL",
            BoundSource::Universal => "UNIVERSAL",
            BoundSource::MainTheorem => "MAIN_THEOREM",
            BoundSource::Extrapolated => "EXTRAPOLATED",
            BoundSource::KhinchineStep => "KHINCHINE_STEP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestBound {
    pub value: f64,
    pub source: BoundSource,
    /// Other sources within `1e-12` relative of `value`.
    pub ties: Vec<BoundSource>,
    pub candidates: Vec<(BoundSource, f64)>,
}

const TIE_RTOL: f64 = 1e-12;

/// Smallest available constant with the label of the result that gives it.
///
/// Below `|1/p| = 1/2` only the classical bound applies. Extrapolated
/// subset bounds enter only when `allow_extrapolated` is set.
pub fn bound_best(p: &PVector, mode: SubsetMode, allow_extrapolated: bool) -> Result<BestBound> {
    let r = require_valid(p)?;
    let mut candidates = vec![(BoundSource::Classical, bound_classical(p.m())?)];
    if r.tag == RegimeTag::DsRange {
        candidates.push((BoundSource::Universal, bound_universal(p)?));
        if p.m() <= MAX_SUBSET_ORDER {
            let report = subset_parameter_s(p, mode)?;
            if let (Some(s), Some(sigma)) = (report.s, report.partial_sum) {
                candidates.push((BoundSource::MainTheorem, subset_bound(s, sigma)));
            }
            if allow_extrapolated {
                for q in report
                    .all_qualifying
                    .iter()
                    .filter(|q| q.indices != report.indices)
                {
                    candidates.push((BoundSource::Extrapolated, q.bound));
                }
            }
        }
    }

    let value = candidates
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::INFINITY, f64::min);
    let mut tied: Vec<BoundSource> = candidates
        .iter()
        .filter(|&&(_, v)| (v - value).abs() <= TIE_RTOL * value)
        .map(|&(s, _)| s)
        .collect();
    tied.sort_by_key(|s| s.priority());
    tied.dedup();
    let source = tied[0];
    Ok(BestBound {
        value,
        source,
        ties: tied[1..].to_vec(),
        candidates,
    })
}

/// Khinchine constant `A_q` for Rademacher averages; exactly 1 for `q >= 2`.
pub fn khinchine_constant(q: f64, _field: Field) -> Result<f64> {
    if q.is_nan() || q < 2.0 {
        return Err(HlError::Unsupported(format!(
            "Khinchine constant only available for q >= 2, got {q}"
        )));
    }
    Ok(1.0)
}
