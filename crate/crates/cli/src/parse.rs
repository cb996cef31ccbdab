//! Small argument grammars: complex numbers, sweep ranges, grid sizes.

use num_complex::Complex64;
use polypencil::halfrange::HalfKind;

/// `2`, `-1.5e-3`, `3i`, `-i`, `1+2i`, `0.5-1e-2i`.
pub fn complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot read \"{s}\" as a complex number");
    if t.is_empty() {
        return Err(bad());
    }
    let finite = |x: f64| if x.is_finite() { Ok(x) } else { Err(bad()) };
    let Some(body) = t.strip_suffix('i') else {
        return finite(t.parse::<f64>().map_err(|_| bad())?).map(|x| Complex64::new(x, 0.0));
    };
    // split at the last sign that is not an exponent sign or the leading sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    Ok(Complex64::new(finite(re)?, finite(im)?))
}

pub fn complex_list(s: &str) -> Result<Vec<Complex64>, String> {
    s.split(',').map(complex).collect()
}

pub fn half_kind(s: &str) -> Result<HalfKind, String> {
    match s {
        "E+" => Ok(HalfKind::Eplus),
        "E-" => Ok(HalfKind::Eminus),
        "Y+" => Ok(HalfKind::Yplus),
        "Y-" => Ok(HalfKind::Yminus),
        _ => Err(format!("unknown half \"{s}\"; expected E+, E-, Y+ or Y-")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep(pub Vec<f64>);

/// `nu:<lo>..<hi>:log|lin:<count>`.
pub fn sweep(s: &str) -> Result<Sweep, String> {
    let bad = || format!("cannot read sweep \"{s}\"; expected nu:<lo>..<hi>:log|lin:<count>");
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 || parts[0] != "nu" {
        return Err(bad());
    }
    let (lo, hi) = parts[1].split_once("..").ok_or_else(bad)?;
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let count: usize = parts[3].parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo && count >= 2) {
        return Err(bad());
    }
    match parts[2] {
        "log" => Ok(Sweep(polypencil::top::log_grid(lo, hi, count))),
        "lin" => Ok(Sweep((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect())),
        _ => Err(bad()),
    }
}

/// `nx,ny`.
pub fn grid(s: &str) -> Result<(usize, usize), String> {
    let bad = || format!("cannot read grid \"{s}\"; expected nx,ny");
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let nx: usize = a.trim().parse().map_err(|_| bad())?;
    let ny: usize = b.trim().parse().map_err(|_| bad())?;
    if nx < 2 || ny < 2 {
        return Err(bad());
    }
    Ok((nx, ny))
}
