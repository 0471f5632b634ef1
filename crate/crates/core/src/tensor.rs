//! Dense coefficient tensors of m-linear forms.
//!
//! The coefficient at multi-index `(j_1, ..., j_m)` is `T(e_{j_1}, ..., e_{j_m})`,
//! stored in row-major order (last index fastest). Order-0 tensors hold a
//! single scalar and act as the unit of [`CoeffTensor::tensor_product`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HlError, Result};
use crate::exponents::Exponent;
use crate::scalar::{Field, Scalar};
use crate::seed::rng_from_seed;

#[derive(Clone, PartialEq)]
pub struct CoeffTensor<S> {
    dims: Vec<usize>,
    coeffs: Vec<S>,
}

impl<S: fmt::Debug> fmt::Debug for CoeffTensor<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoeffTensor")
            .field("dims", &self.dims)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

fn checked_len(dims: &[usize]) -> Result<usize> {
    if let Some(k) = dims.iter().position(|&n| n == 0) {
        return Err(HlError::invalid(format!("mode {k} has dimension 0")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| HlError::invalid("tensor size overflows usize"))
}

/// `(sum |x_j|^p)^{1/p}`, computed on `x / max|x|` to avoid overflow.
pub fn lp_norm<S: Scalar>(xs: &[S], p: f64) -> f64 {
    let max = xs.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return max;
    }
    if p == 1.0 {
        return xs.iter().map(|x| x.abs()).sum();
    }
    let sum: f64 = xs.iter().map(|x| (x.abs() / max).powf(p)).sum();
    max * sum.powf(1.0 / p)
}

pub fn lp_norm_ext<S: Scalar>(xs: &[S], p: Exponent) -> f64 {
    lp_norm(xs, p.value())
}

/// Exponents `(s_1, ..., s_m)` of a nested sum, outermost first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedExponents(Vec<f64>);

impl MixedExponents {
    pub fn new(exps: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = exps.iter().find(|&&s| s.is_nan() || s < 1.0) {
            return Err(HlError::domain(format!(
                "mixed-norm exponent {bad} is below 1"
            )));
        }
        Ok(MixedExponents(exps))
    }

    pub fn isotropic(s: f64, m: usize) -> Result<Self> {
        MixedExponents::new(vec![s; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    /// Uniform ±1 (real) or uniform fourth roots of unity (complex).
    Signs,
    Gaussian,
}

impl FromStr for Distribution {
    type Err = HlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "signs" | "sign" => Ok(Distribution::Signs),
            "gaussian" | "normal" => Ok(Distribution::Gaussian),
            other => Err(HlError::invalid(format!(
                "unknown distribution {other:?}, expected signs or gaussian"
            ))),
        }
    }
}

impl<S: Scalar> CoeffTensor<S> {
    pub fn new(dims: Vec<usize>, coeffs: Vec<S>) -> Result<Self> {
        let len = checked_len(&dims)?;
        if coeffs.len() != len {
            return Err(HlError::DimensionMismatch {
                expected: len,
                found: coeffs.len(),
            });
        }
        Ok(CoeffTensor { dims, coeffs })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = checked_len(&dims)?;
        Ok(CoeffTensor {
            dims,
            coeffs: vec![S::zero(); len],
        })
    }

    pub fn scalar(value: S) -> Self {
        CoeffTensor {
            dims: Vec::new(),
            coeffs: vec![value],
        }
    }

    /// Rank-one tensor `a_1 ⊗ ... ⊗ a_m`.
    pub fn outer(factors: &[Vec<S>]) -> Result<Self> {
        factors
            .iter()
            .try_fold(CoeffTensor::scalar(S::one()), |acc, f| {
                let v = CoeffTensor::new(vec![f.len()], f.clone())?;
                acc.tensor_product(&v)
            })
    }

    /// The n×n identity matrix viewed as a bilinear form.
    pub fn identity(n: usize) -> Result<Self> {
        let mut t = CoeffTensor::zeros(vec![n, n])?;
        for j in 0..n {
            t.coeffs[j * n + j] = S::one();
        }
        Ok(t)
    }

    /// The 2×2 matrix `[[1, 1], [1, -1]]`.
    pub fn littlewood() -> Self {
        CoeffTensor {
            dims: vec![2, 2],
            coeffs: vec![S::one(), S::one(), S::one(), -S::one()],
        }
    }

    pub fn field(&self) -> Field {
        S::FIELD
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<S> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.abs() == 0.0)
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    pub fn flat_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.order() {
            return Err(HlError::DimensionMismatch {
                expected: self.order(),
                found: idx.len(),
            });
        }
        let mut flat = 0;
        for (k, (&j, &n)) in idx.iter().zip(&self.dims).enumerate() {
            if j >= n {
                return Err(HlError::invalid(format!(
                    "index {j} out of bounds for mode {k} of size {n}"
                )));
            }
            flat = flat * n + j;
        }
        Ok(flat)
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.order()];
        for k in (0..self.order()).rev() {
            idx[k] = flat % self.dims[k];
            flat /= self.dims[k];
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> Result<S> {
        Ok(self.coeffs[self.flat_index(idx)?])
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        CoeffTensor {
            dims: self.dims.clone(),
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    pub fn scaled(&self, alpha: S) -> Self {
        self.map(|c| c * alpha)
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return Err(HlError::invalid("axpy on tensors of different shapes"));
        }
        Ok(CoeffTensor {
            dims: self.dims.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| a + b.scale(alpha))
                .collect(),
        })
    }

    /// Scaled to unit ℓ₂ coefficient norm; the zero tensor is returned as is.
    pub fn l2_normalized(&self) -> Self {
        let n = lp_norm(&self.coeffs, 2.0);
        if n == 0.0 {
            return self.clone();
        }
        self.map(|c| c.scale(1.0 / n))
    }

    fn check_vector(&self, mode: usize, x: &[S]) -> Result<()> {
        if x.len() != self.dims[mode] {
            return Err(HlError::DimensionMismatch {
                expected: self.dims[mode],
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `b_{j_1..j_{m-1}} = sum_{j_m} a_{j_1..j_m} x[j_m]`.
    pub fn contract_last(&self, x: &[S]) -> Result<Self> {
        if self.order() == 0 {
            return Err(HlError::invalid("cannot contract an order-0 tensor"));
        }
        let last = self.order() - 1;
        self.check_vector(last, x)?;
        let n = x.len();
        let coeffs = self
            .coeffs
            .chunks_exact(n)
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(S::zero(), |acc, (&a, &xi)| acc + a * xi)
            })
            .collect();
        Ok(CoeffTensor {
            dims: self.dims[..last].to_vec(),
            coeffs,
        })
    }

    /// `b_{j_2..j_m} = sum_{j_1} x[j_1] a_{j_1..j_m}`.
    pub fn contract_first(&self, x: &[S]) -> Result<Self> {
        if self.order() == 0 {
            return Err(HlError::invalid("cannot contract an order-0 tensor"));
        }
        self.check_vector(0, x)?;
        let block = self.coeffs.len() / x.len();
        let mut coeffs = vec![S::zero(); block];
        for (slab, &xi) in self.coeffs.chunks_exact(block).zip(x) {
            for (b, &a) in coeffs.iter_mut().zip(slab) {
                *b += a * xi;
            }
        }
        Ok(CoeffTensor {
            dims: self.dims[1..].to_vec(),
            coeffs,
        })
    }

    /// `T(x_1, ..., x_m)`.
    pub fn evaluate(&self, xs: &[&[S]]) -> Result<S> {
        if xs.len() != self.order() {
            return Err(HlError::DimensionMismatch {
                expected: self.order(),
                found: xs.len(),
            });
        }
        for (k, x) in xs.iter().enumerate() {
            self.check_vector(k, x)?;
        }
        let mut t = self.clone();
        for x in xs.iter().rev() {
            t = t.contract_last(x)?;
        }
        Ok(t.coeffs[0])
    }

    /// Linear functional `T(x_1, ..., x_{k-1}, ·, x_{k+1}, ..., x_m)` as a
    /// coefficient vector. `xs[k]` is ignored.
    pub fn contract_all_but(&self, k: usize, xs: &[Vec<S>]) -> Result<Vec<S>> {
        if xs.len() != self.order() || k >= self.order() {
            return Err(HlError::DimensionMismatch {
                expected: self.order(),
                found: xs.len(),
            });
        }
        let mut t: std::borrow::Cow<'_, Self> = std::borrow::Cow::Borrowed(self);
        for l in (k + 1..self.order()).rev() {
            t = std::borrow::Cow::Owned(t.contract_last(&xs[l])?);
        }
        for x in xs.iter().take(k) {
            t = std::borrow::Cow::Owned(t.contract_first(x)?);
        }
        Ok(t.into_owned().coeffs)
    }

    /// `(sum_J |a_J|^rho)^{1/rho}`.
    pub fn lp_coeff_norm(&self, rho: f64) -> Result<f64> {
        if rho.is_nan() || rho < 1.0 {
            return Err(HlError::domain(format!("coefficient exponent {rho} < 1")));
        }
        Ok(lp_norm(&self.coeffs, rho))
    }

    /// Nested norm: ℓ_{s_m} over `j_m` innermost, then ℓ_{s_{m-1}} over
    /// `j_{m-1}`, and so on outward.
    pub fn mixed_norm(&self, exps: &MixedExponents) -> Result<f64> {
        let e = exps.as_slice();
        if e.len() != self.order() {
            return Err(HlError::DimensionMismatch {
                expected: self.order(),
                found: e.len(),
            });
        }
        if self.order() == 0 {
            return Ok(self.coeffs[0].abs());
        }
        let mut level: Vec<f64> = self.coeffs.iter().map(|c| c.abs()).collect();
        for k in (0..self.order()).rev() {
            level = level
                .chunks_exact(self.dims[k])
                .map(|chunk| lp_norm(chunk, e[k]))
                .collect();
        }
        Ok(level[0])
    }

    /// `c_{J,K} = a_J b_K`.
    pub fn tensor_product(&self, other: &Self) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        checked_len(&dims)?;
        let mut coeffs = Vec::with_capacity(self.len() * other.len());
        for &a in &self.coeffs {
            coeffs.extend(other.coeffs.iter().map(|&b| a * b));
        }
        Ok(CoeffTensor { dims, coeffs })
    }

    /// Embeds `self` into a larger shape with zero padding.
    pub fn zero_padded(&self, dims: &[usize]) -> Result<Self> {
        if dims.len() != self.order() {
            return Err(HlError::DimensionMismatch {
                expected: self.order(),
                found: dims.len(),
            });
        }
        if dims
            .iter()
            .zip(&self.dims)
            .any(|(&big, &small)| big < small)
        {
            return Err(HlError::invalid(
                "padding target is smaller than the tensor",
            ));
        }
        let mut out = CoeffTensor::zeros(dims.to_vec())?;
        for (flat, &c) in self.coeffs.iter().enumerate() {
            let idx = self.multi_index(flat);
            let target = out.flat_index(&idx)?;
            out.coeffs[target] = c;
        }
        Ok(out)
    }

    /// Mode `i` of the result is mode `perm[i]` of `self`.
    pub fn permute_modes(&self, perm: &[usize]) -> Result<Self> {
        let m = self.order();
        let mut seen = vec![false; m];
        if perm.len() != m
            || perm
                .iter()
                .any(|&i| i >= m || std::mem::replace(&mut seen[i], true))
        {
            return Err(HlError::invalid("not a permutation of the modes"));
        }
        let dims: Vec<usize> = perm.iter().map(|&i| self.dims[i]).collect();
        let mut out = CoeffTensor::zeros(dims)?;
        for (flat, &c) in self.coeffs.iter().enumerate() {
            let idx = self.multi_index(flat);
            let new_idx: Vec<usize> = perm.iter().map(|&i| idx[i]).collect();
            let target = out.flat_index(&new_idx)?;
            out.coeffs[target] = c;
        }
        Ok(out)
    }

    /// Index of the first coefficient of largest modulus in row-major order.
    pub fn argmax_abs(&self) -> usize {
        let mut best = 0;
        let mut best_abs = -1.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let a = c.abs();
            if a > best_abs {
                best = i;
                best_abs = a;
            }
        }
        best
    }
}

/// Deterministic random tensor: coefficients drawn in row-major order from a
/// ChaCha8 stream keyed by `seed`.
pub fn random_tensor<S: Scalar>(
    dims: &[usize],
    dist: Distribution,
    seed: u64,
) -> Result<CoeffTensor<S>> {
    if dims.is_empty() {
        return Err(HlError::invalid("random_tensor needs at least one mode"));
    }
    let len = checked_len(dims)?;
    let mut rng = rng_from_seed(seed);
    let coeffs = (0..len)
        .map(|_| match dist {
            Distribution::Signs => S::sample_sign(&mut rng),
            Distribution::Gaussian => S::sample_gaussian(&mut rng),
        })
        .collect();
    CoeffTensor::new(dims.to_vec(), coeffs)
}

/// A tensor of either field, as read from or written to a file.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyTensor {
    Real(CoeffTensor<f64>),
    Complex(CoeffTensor<Complex64>),
}

impl From<CoeffTensor<f64>> for AnyTensor {
    fn from(t: CoeffTensor<f64>) -> Self {
        AnyTensor::Real(t)
    }
}

impl From<CoeffTensor<Complex64>> for AnyTensor {
    fn from(t: CoeffTensor<Complex64>) -> Self {
        AnyTensor::Complex(t)
    }
}

#[derive(Serialize)]
struct TensorFileOut<'a> {
    m: usize,
    dims: &'a [usize],
    field: Field,
    coeffs: Value,
}

fn finite_number(x: f64) -> Result<Value> {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .ok_or_else(|| HlError::schema("coeffs", format!("non-finite coefficient {x}")))
}

impl AnyTensor {
    pub fn field(&self) -> Field {
        match self {
            AnyTensor::Real(_) => Field::Real,
            AnyTensor::Complex(_) => Field::Complex,
        }
    }

    pub fn dims(&self) -> &[usize] {
        match self {
            AnyTensor::Real(t) => t.dims(),
            AnyTensor::Complex(t) => t.dims(),
        }
    }

    fn file_out(&self) -> Result<TensorFileOut<'_>> {
        let (dims, coeffs) = match self {
            AnyTensor::Real(t) => (
                t.dims(),
                Value::Array(
                    t.coeffs()
                        .iter()
                        .map(|&c| finite_number(c))
                        .collect::<Result<_>>()?,
                ),
            ),
            AnyTensor::Complex(t) => (
                t.dims(),
                Value::Array(
                    t.coeffs()
                        .iter()
                        .map(|c| {
                            Ok(Value::Array(vec![
                                finite_number(c.re)?,
                                finite_number(c.im)?,
                            ]))
                        })
                        .collect::<Result<_>>()?,
                ),
            ),
        };
        Ok(TensorFileOut {
            m: dims.len(),
            dims,
            field: self.field(),
            coeffs,
        })
    }

    pub fn to_json_value(&self) -> Result<Value> {
        Ok(serde_json::to_value(self.file_out()?)?)
    }

    /// Compact JSON with keys `m, dims, field, coeffs`; numbers are written
    /// with enough digits to round-trip.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.file_out()?)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        Self::from_json_value(&v)
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| HlError::schema("<root>", "expected a JSON object"))?;
        let get = |k: &str| obj.get(k).ok_or_else(|| HlError::schema(k, "missing"));

        let m = get("m")?
            .as_u64()
            .ok_or_else(|| HlError::schema("m", "expected a non-negative integer"))?
            as usize;
        let dims: Vec<usize> = get("dims")?
            .as_array()
            .ok_or_else(|| HlError::schema("dims", "expected an array"))?
            .iter()
            .map(|d| {
                d.as_u64()
                    .filter(|&n| n >= 1)
                    .map(|n| n as usize)
                    .ok_or_else(|| HlError::schema("dims", "entries must be positive integers"))
            })
            .collect::<Result<_>>()?;
        if dims.len() != m {
            return Err(HlError::schema(
                "dims",
                format!("has {} entries but m = {m}", dims.len()),
            ));
        }
        let field: Field = get("field")?
            .as_str()
            .ok_or_else(|| HlError::schema("field", "expected a string"))?
            .parse()
            .map_err(|e: String| HlError::schema("field", e))?;
        let raw = get("coeffs")?
            .as_array()
            .ok_or_else(|| HlError::schema("coeffs", "expected an array"))?;
        let len = checked_len(&dims).map_err(|e| HlError::schema("dims", e.to_string()))?;
        if raw.len() != len {
            return Err(HlError::schema(
                "coeffs",
                format!(
                    "expected {len} entries for dims {dims:?}, found {}",
                    raw.len()
                ),
            ));
        }
        let num = |x: &Value, i: usize| {
            x.as_f64()
                .ok_or_else(|| HlError::schema("coeffs", format!("entry {i} is not a number")))
        };
        Ok(match field {
            Field::Real => {
                let coeffs = raw
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        if x.is_array() {
                            Err(HlError::schema(
                                "coeffs",
                                format!("entry {i} is a complex pair but field is \"real\""),
                            ))
                        } else {
                            num(x, i)
                        }
                    })
                    .collect::<Result<Vec<f64>>>()?;
                AnyTensor::Real(CoeffTensor::new(dims, coeffs)?)
            }
            Field::Complex => {
                let coeffs = raw
                    .iter()
                    .enumerate()
                    .map(|(i, x)| match x.as_array().map(Vec::as_slice) {
                        Some([re, im]) => Ok(Complex64::new(num(re, i)?, num(im, i)?)),
                        _ => Err(HlError::schema(
                            "coeffs",
                            format!("entry {i} must be a [re, im] pair"),
                        )),
                    })
                    .collect::<Result<Vec<Complex64>>>()?;
                AnyTensor::Complex(CoeffTensor::new(dims, coeffs)?)
            }
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}
