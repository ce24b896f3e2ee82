//! JSON tensor files.
//!
//! ```text
//! {"mode":"rational"|"float","d":int,"D":int,"matrices":[[[entry]]]}
//! ```
//!
//! Rational entries are `{"re":[num,den],"im":[num,den]}`; numerators and
//! denominators beyond the `i64` range are written as decimal strings. Float
//! entries are `{"re":x,"im":y}`. Purification files add `"d_env"` and list
//! `B_{i,e}` at position `i * d_env + e`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{Exact, Scalar, ScalarMode, C64};
use crate::tensor::{MpsTensor, PurificationTensor};

/// A tensor in whichever scalar mode the file declared.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyTensor {
    Exact(MpsTensor<Exact>),
    Float(MpsTensor<C64>),
}

impl AnyTensor {
    pub fn mode(&self) -> ScalarMode {
        match self {
            AnyTensor::Exact(_) => ScalarMode::Exact,
            AnyTensor::Float(_) => ScalarMode::Float,
        }
    }

    pub fn d(&self) -> usize {
        match self {
            AnyTensor::Exact(t) => t.d(),
            AnyTensor::Float(t) => t.d(),
        }
    }

    pub fn bond(&self) -> usize {
        match self {
            AnyTensor::Exact(t) => t.bond(),
            AnyTensor::Float(t) => t.bond(),
        }
    }

    pub fn to_float(&self) -> MpsTensor<C64> {
        match self {
            AnyTensor::Exact(t) => t.to_float(),
            AnyTensor::Float(t) => t.clone(),
        }
    }

    /// Exact copy; float entries convert without rounding.
    pub fn to_exact(&self) -> MpsTensor<Exact> {
        match self {
            AnyTensor::Exact(t) => t.clone(),
            AnyTensor::Float(t) => t.to_exact(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyPurification {
    Exact(PurificationTensor<Exact>),
    Float(PurificationTensor<C64>),
}

impl AnyPurification {
    pub fn to_float(&self) -> PurificationTensor<C64> {
        match self {
            AnyPurification::Exact(p) => p.to_float(),
            AnyPurification::Float(p) => p.clone(),
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawTensorFile {
    mode: ScalarMode,
    d: usize,
    #[serde(rename = "D")]
    bond: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d_env: Option<usize>,
    matrices: Vec<Vec<Vec<Value>>>,
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn parse_raw(text: &str) -> Result<RawTensorFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        schema(format!(
            "line {} column {} (field `{}`): {}",
            inner.line(),
            inner.column(),
            path,
            inner
        ))
    })
}

fn parse_int(v: &Value, path: &str) -> Result<BigInt> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .or_else(|| n.as_u64().map(BigInt::from))
            .ok_or_else(|| schema(format!("{path}: expected an integer, found {n}"))),
        Value::String(s) => s
            .trim()
            .parse::<BigInt>()
            .map_err(|_| schema(format!("{path}: `{s}` is not an integer"))),
        other => Err(schema(format!("{path}: expected an integer, found {other}"))),
    }
}

fn parse_ratio(v: &Value, path: &str) -> Result<BigRational> {
    match v {
        Value::Array(pair) if pair.len() == 2 => {
            let num = parse_int(&pair[0], &format!("{path}[0]"))?;
            let den = parse_int(&pair[1], &format!("{path}[1]"))?;
            if den.is_zero() {
                return Err(schema(format!("{path}: zero denominator")));
            }
            Ok(BigRational::new(num, den))
        }
        Value::Number(_) | Value::String(_) => Ok(BigRational::from_integer(parse_int(v, path)?)),
        other => Err(schema(format!("{path}: expected [num, den], found {other}"))),
    }
}

fn entry_parts<'a>(v: &'a Value, path: &str) -> Result<(&'a Value, Option<&'a Value>)> {
    let obj = v
        .as_object()
        .ok_or_else(|| schema(format!("{path}: expected an object with `re` and `im`")))?;
    if let Some(key) = obj.keys().find(|k| *k != "re" && *k != "im") {
        return Err(schema(format!("{path}: unknown field `{key}`")));
    }
    let re = obj
        .get("re")
        .ok_or_else(|| schema(format!("{path}: missing field `re`")))?;
    Ok((re, obj.get("im")))
}

fn parse_exact_entry(v: &Value, path: &str) -> Result<Exact> {
    let (re, im) = entry_parts(v, path)?;
    let re = parse_ratio(re, &format!("{path}.re"))?;
    let im = match im {
        Some(im) => parse_ratio(im, &format!("{path}.im"))?,
        None => BigRational::zero(),
    };
    Ok(Exact::new(re, im))
}

fn parse_float(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| schema(format!("{path}: expected a finite number, found {v}")))
}

fn parse_float_entry(v: &Value, path: &str) -> Result<C64> {
    let (re, im) = entry_parts(v, path)?;
    let re = parse_float(re, &format!("{path}.re"))?;
    let im = match im {
        Some(im) => parse_float(im, &format!("{path}.im"))?,
        None => 0.0,
    };
    Ok(C64::new(re, im))
}

fn build_matrices<T: Scalar>(
    raw: &RawTensorFile,
    expected: usize,
    parse: impl Fn(&Value, &str) -> Result<T>,
) -> Result<Vec<Matrix<T>>> {
    if raw.matrices.len() != expected {
        return Err(schema(format!(
            "matrices: expected {expected} matrices from the declared dimensions, found {}",
            raw.matrices.len()
        )));
    }
    if raw.bond == 0 {
        return Err(schema("D: bond dimension must be at least 1"));
    }
    raw.matrices
        .iter()
        .enumerate()
        .map(|(k, rows)| {
            if rows.len() != raw.bond {
                return Err(schema(format!(
                    "matrices[{k}]: expected {} rows (D), found {}",
                    raw.bond,
                    rows.len()
                )));
            }
            let mut data = Vec::with_capacity(raw.bond * raw.bond);
            for (r, row) in rows.iter().enumerate() {
                if row.len() != raw.bond {
                    return Err(schema(format!(
                        "matrices[{k}][{r}]: expected {} entries (D), found {}",
                        raw.bond,
                        row.len()
                    )));
                }
                for (c, v) in row.iter().enumerate() {
                    data.push(parse(v, &format!("matrices[{k}][{r}][{c}]"))?);
                }
            }
            Ok(Matrix::from_vec(raw.bond, raw.bond, data))
        })
        .collect()
}

pub fn parse_tensor(text: &str) -> Result<AnyTensor> {
    let raw = parse_raw(text)?;
    if raw.d_env.is_some() {
        return Err(schema("d_env: present, this is a purification file"));
    }
    if raw.d == 0 {
        return Err(schema("d: physical dimension must be at least 1"));
    }
    Ok(match raw.mode {
        ScalarMode::Exact => AnyTensor::Exact(MpsTensor::new(build_matrices(&raw, raw.d, parse_exact_entry)?)?),
        ScalarMode::Float => AnyTensor::Float(MpsTensor::new(build_matrices(&raw, raw.d, parse_float_entry)?)?),
    })
}

pub fn parse_purification(text: &str) -> Result<AnyPurification> {
    let raw = parse_raw(text)?;
    let d_env = raw.d_env.ok_or_else(|| schema("d_env: missing field `d_env`"))?;
    if raw.d == 0 || d_env == 0 {
        return Err(schema("d and d_env must be at least 1"));
    }
    let n = raw.d * d_env;
    Ok(match raw.mode {
        ScalarMode::Exact => AnyPurification::Exact(PurificationTensor::new(
            raw.d,
            d_env,
            build_matrices(&raw, n, parse_exact_entry)?,
        )?),
        ScalarMode::Float => AnyPurification::Float(PurificationTensor::new(
            raw.d,
            d_env,
            build_matrices(&raw, n, parse_float_entry)?,
        )?),
    })
}

fn int_value(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(v) => json!(v),
        None => json!(n.to_string()),
    }
}

fn ratio_value(q: &BigRational) -> Value {
    json!([int_value(q.numer()), int_value(q.denom())])
}

/// JSON value of a single scalar in file-entry form.
pub fn entry_value<T: Scalar + 'static>(x: &T) -> Value {
    if let Some(e) = (x as &dyn std::any::Any).downcast_ref::<Exact>() {
        json!({"re": ratio_value(&e.re), "im": ratio_value(&e.im)})
    } else {
        let z = x.to_c64();
        json!({"re": z.re, "im": z.im})
    }
}

fn matrices_value<T: Scalar>(ms: &[Matrix<T>]) -> Value {
    Value::Array(
        ms.iter()
            .map(|m| {
                Value::Array(
                    (0..m.rows())
                        .map(|r| Value::Array(m.row(r).iter().map(entry_value).collect()))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn tensor_value<T: Scalar>(t: &MpsTensor<T>) -> Value {
    json!({
        "mode": T::MODE,
        "d": t.d(),
        "D": t.bond(),
        "matrices": matrices_value(t.matrices()),
    })
}

pub fn any_tensor_value(t: &AnyTensor) -> Value {
    match t {
        AnyTensor::Exact(t) => tensor_value(t),
        AnyTensor::Float(t) => tensor_value(t),
    }
}

pub fn purification_value<T: Scalar>(p: &PurificationTensor<T>) -> Value {
    json!({
        "mode": T::MODE,
        "d": p.d(),
        "D": p.bond(),
        "d_env": p.d_env(),
        "matrices": matrices_value(p.matrices()),
    })
}

pub fn write_tensor<T: Scalar>(t: &MpsTensor<T>) -> String {
    serde_json::to_string_pretty(&tensor_value(t)).expect("tensor JSON")
}

pub fn write_purification<T: Scalar>(p: &PurificationTensor<T>) -> String {
    serde_json::to_string_pretty(&purification_value(p)).expect("purification JSON")
}

/// Exact rational as the `{"num":..,"den":..}` certificate object.
pub fn rational_certificate(q: &BigRational) -> Value {
    json!({"num": int_value(q.numer()), "den": int_value(q.denom())})
}
