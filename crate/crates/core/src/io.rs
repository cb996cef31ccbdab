//! JSON encodings for pencils, matrices, vectors and module inputs.
//!
//! Matrices are row-major arrays of `[re, im]` entries (a bare number is read as a real entry).
//! Non-finite values are rejected with the path of the offending field.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{validation, Result};
use crate::grating::Profile;
use crate::linalg::{c, CMat, CVec};
use crate::pencil::MatrixPolynomial;
use crate::top::{FluidSurrogate, TopConfig};

/// Coupling scale used for `"synthetic:<m>"` fluid blocks without an explicit scale.
pub const DEFAULT_COUPLING: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilJson {
    pub size: usize,
    pub degree: usize,
    pub coeffs: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

pub fn encode_complex(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn encode_entries(a: &CMat) -> Vec<[f64; 2]> {
    (0..a.nrows()).flat_map(|i| (0..a.ncols()).map(move |j| encode_complex(a[(i, j)]))).collect()
}

pub fn encode_vector(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|&z| encode_complex(z)).collect()
}

impl From<&MatrixPolynomial> for PencilJson {
    fn from(p: &MatrixPolynomial) -> Self {
        PencilJson { size: p.size(), degree: p.degree(), coeffs: p.coeffs().iter().map(encode_entries).collect() }
    }
}

impl From<&CMat> for MatrixJson {
    fn from(a: &CMat) -> Self {
        MatrixJson { rows: a.nrows(), cols: a.ncols(), data: encode_entries(a) }
    }
}

pub fn pencil_to_json(p: &MatrixPolynomial) -> String {
    serde_json::to_string_pretty(&PencilJson::from(p)).expect("finite pencil serializes")
}

pub fn matrix_to_json(a: &CMat) -> String {
    serde_json::to_string_pretty(&MatrixJson::from(a)).expect("finite matrix serializes")
}

/// Rewrites bare `NaN`, `Infinity`, `-Infinity` and `inf` tokens outside strings as strings,
/// so the typed walk can reject them with a field path instead of a syntax position.
fn quote_nonfinite(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.char_indices().peekable();
    let mut in_string = false;
    let mut escaped = false;
    while let Some((i, ch)) = chars.next() {
        if in_string {
            out.push(ch);
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_string = false;
            }
            continue;
        }
        if ch == '"' {
            in_string = true;
            out.push(ch);
            continue;
        }
        let rest = &text[i..];
        let token = ["-Infinity", "Infinity", "NaN", "-inf", "inf"].into_iter().find(|t| rest.starts_with(t));
        if let Some(t) = token {
            out.push('"');
            out.push_str(t);
            out.push('"');
            for _ in 1..t.chars().count() {
                chars.next();
            }
        } else {
            out.push(ch);
        }
    }
    out
}

pub fn parse_value(text: &str) -> Result<Value> {
    serde_json::from_str(&quote_nonfinite(text)).or_else(|e| validation(format!("malformed JSON: {e}")))
}

fn field<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    match v.get(key) {
        Some(x) => Ok(x),
        None => validation(format!("{path}: missing field \"{key}\"")),
    }
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    match v.as_array() {
        Some(a) => Ok(a),
        None => validation(format!("{path}: expected an array")),
    }
}

pub fn number(v: &Value, path: &str) -> Result<f64> {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if x.is_finite() => Ok(x),
            _ => validation(format!("{path}: non-finite value")),
        },
        Value::String(s) if ["NaN", "Infinity", "-Infinity", "inf", "-inf"].contains(&s.as_str()) => {
            validation(format!("{path}: non-finite value {s}"))
        }
        _ => validation(format!("{path}: expected a number")),
    }
}

fn count(v: &Value, path: &str) -> Result<usize> {
    match v.as_u64() {
        Some(n) => Ok(n as usize),
        None => validation(format!("{path}: expected a non-negative integer")),
    }
}

pub fn complex(v: &Value, path: &str) -> Result<Complex64> {
    match v {
        Value::Array(a) if a.len() == 2 => Ok(c(number(&a[0], &format!("{path}[0]"))?, number(&a[1], &format!("{path}[1]"))?)),
        Value::Array(_) => validation(format!("{path}: complex entry must be [re, im]")),
        _ => Ok(c(number(v, path)?, 0.0)),
    }
}

fn complex_list(v: &Value, path: &str) -> Result<Vec<Complex64>> {
    array(v, path)?.iter().enumerate().map(|(i, x)| complex(x, &format!("{path}[{i}]"))).collect()
}

fn flat_matrix(v: &Value, path: &str, rows: usize, cols: usize) -> Result<CMat> {
    let entries = complex_list(v, path)?;
    if entries.len() != rows * cols {
        return validation(format!("{path}: expected {} entries for {rows}×{cols}, found {}", rows * cols, entries.len()));
    }
    Ok(CMat::from_row_slice(rows, cols, &entries))
}

pub fn pencil_from_value(v: &Value) -> Result<MatrixPolynomial> {
    let m = count(field(v, "size", "$")?, "$.size")?;
    let n = count(field(v, "degree", "$")?, "$.degree")?;
    let coeffs = array(field(v, "coeffs", "$")?, "$.coeffs")?;
    if m == 0 {
        return validation("$.size: must be positive");
    }
    if coeffs.len() != n + 1 {
        return validation(format!("$.coeffs: degree {n} needs {} coefficients, found {}", n + 1, coeffs.len()));
    }
    let mats = coeffs
        .iter()
        .enumerate()
        .map(|(j, x)| flat_matrix(x, &format!("$.coeffs[{j}]"), m, m))
        .collect::<Result<Vec<_>>>()?;
    MatrixPolynomial::new(mats)
}

pub fn parse_pencil(text: &str) -> Result<MatrixPolynomial> {
    pencil_from_value(&parse_value(text)?)
}

/// `{"rows", "cols", "data"}`, or a bare row-major array of a square matrix.
pub fn matrix_from_value(v: &Value, path: &str) -> Result<CMat> {
    if v.is_array() {
        let len = array(v, path)?.len();
        let m = (len as f64).sqrt().round() as usize;
        if m * m != len || m == 0 {
            return validation(format!("{path}: {len} entries do not form a square matrix"));
        }
        return flat_matrix(v, path, m, m);
    }
    let rows = count(field(v, "rows", path)?, &format!("{path}.rows"))?;
    let cols = count(field(v, "cols", path)?, &format!("{path}.cols"))?;
    flat_matrix(field(v, "data", path)?, &format!("{path}.data"), rows, cols)
}

pub fn parse_matrix(text: &str) -> Result<CMat> {
    matrix_from_value(&parse_value(text)?, "$")
}

/// A list of complex vectors of equal length.
pub fn parse_vectors(text: &str) -> Result<Vec<CVec>> {
    let v = parse_value(text)?;
    let rows = array(&v, "$")?;
    let out = rows
        .iter()
        .enumerate()
        .map(|(i, x)| complex_list(x, &format!("$[{i}]")).map(CVec::from_vec))
        .collect::<Result<Vec<_>>>()?;
    if let Some(first) = out.first() {
        if let Some(i) = out.iter().position(|x| x.len() != first.len()) {
            return validation(format!("$[{i}]: length {} differs from {}", out[i].len(), first.len()));
        }
    }
    Ok(out)
}

/// Fourier coefficients â₋ⱼ…âⱼ as complex entries.
pub fn parse_profile_fourier(text: &str) -> Result<Profile> {
    Profile::from_fourier(complex_list(&parse_value(text)?, "$")?)
}

/// Equispaced real samples of one period.
pub fn parse_profile_samples(text: &str) -> Result<Profile> {
    let v = parse_value(text)?;
    let s = array(&v, "$")?
        .iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("$[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    Profile::from_samples(&s)
}

/// `{a: [a0, a1, a2], kg, omega, nu, fluid: {m, R, B, G} | "synthetic:<m>[:<coupling>]"}`.
/// R and G are m×m, B is m×3; the seed only enters synthetic fluid blocks.
pub fn parse_top_config(text: &str, seed: u64) -> Result<TopConfig> {
    let v = parse_value(text)?;
    let a_list = array(field(&v, "a", "$")?, "$.a")?;
    if a_list.len() != 3 {
        return validation("$.a: expected three principal moments");
    }
    let mut a = [0.0; 3];
    for (i, x) in a_list.iter().enumerate() {
        a[i] = number(x, &format!("$.a[{i}]"))?;
    }
    let kg = number(field(&v, "kg", "$")?, "$.kg")?;
    let omega = number(field(&v, "omega", "$")?, "$.omega")?;
    let nu = number(field(&v, "nu", "$")?, "$.nu")?;
    let fluid = match field(&v, "fluid", "$")? {
        Value::String(s) => synthetic_fluid(s, seed)?,
        f => {
            let m = count(field(f, "m", "$.fluid")?, "$.fluid.m")?;
            let r = flat_matrix(field(f, "R", "$.fluid")?, "$.fluid.R", m, m)?;
            let b = flat_matrix(field(f, "B", "$.fluid")?, "$.fluid.B", m, 3)?;
            let g = flat_matrix(field(f, "G", "$.fluid")?, "$.fluid.G", m, m)?;
            FluidSurrogate { r, g, b }
        }
    };
    TopConfig::new(a, kg, omega, nu, fluid)
}

fn synthetic_fluid(s: &str, seed: u64) -> Result<FluidSurrogate> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || validation(format!("$.fluid: expected \"synthetic:<m>[:<coupling>]\", found \"{s}\""));
    if parts.len() < 2 || parts.len() > 3 || parts[0] != "synthetic" {
        return bad();
    }
    let Ok(m) = parts[1].parse::<usize>() else { return bad() };
    let coupling = match parts.get(2) {
        Some(x) => match x.parse::<f64>() {
            Ok(c) if c.is_finite() => c,
            _ => return bad(),
        },
        None => DEFAULT_COUPLING,
    };
    if m == 0 {
        return bad();
    }
    Ok(FluidSurrogate::synthetic(m, coupling, seed))
}
