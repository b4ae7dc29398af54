//! Flag parsing helpers and the run record embedded in every summary.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use chebfit::active::FunctionOracle;
use chebfit::{BasisKind, PolyCoeffs};
use serde::{Deserialize, Serialize};

/// Seed used when neither `--seed` nor `CHEBFIT_SEED` is given.
pub const DEFAULT_SEED: u64 = 42;

/// The command and its effective parameters, as written to output JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub format_version: u32,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            params: BTreeMap::new(),
            format_version: crate::io::FORMAT_VERSION,
        }
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }
}

/// `p` from a decimal, a ratio such as `2/3`, or `inf`.
pub fn parse_p(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        _ => match s.split_once('/') {
            Some((a, b)) => {
                let a: f64 = a.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
                let b: f64 = b.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
                if b == 0.0 {
                    return Err(format!("zero denominator in {s:?}"));
                }
                a / b
            }
            None => s.parse().map_err(|_| format!("cannot read {s:?} as p"))?,
        },
    };
    if v.is_nan() || v <= 0.0 {
        return Err(format!("p must be positive, got {s:?}"));
    }
    Ok(v)
}

/// Comma-separated list of `p` values.
pub fn parse_p_list(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_p).collect()
}

/// `p` as written back out: `inf`, `2/3`, or the shortest decimal.
pub fn show_p(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else if (p - 2.0 / 3.0).abs() < 1e-15 {
        "2/3".into()
    } else {
        format!("{p}")
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PolyFile {
    Monomial(Vec<f64>),
    Full(PolyCoeffs<f64>),
}

/// Builds an oracle from its spec:
///
/// * `abs`, `runge`, `exp`, `step`;
/// * `spike:CENTER,WIDTH,HEIGHT`;
/// * `poly:FILE.json`, a JSON array of monomial coefficients or an object
///   `{"basis": {"kind": ...}, "coeffs": [...]}`;
/// * any other value is a CSV file of `t,value` rows (an optional header is
///   skipped), interpolated piecewise-linearly.
pub fn parse_oracle(spec: &str) -> Result<FunctionOracle<f64>> {
    match spec {
        "abs" => return Ok(FunctionOracle::abs()),
        "runge" => return Ok(FunctionOracle::runge()),
        "exp" => return Ok(FunctionOracle::exp()),
        "step" => return Ok(FunctionOracle::step()),
        _ => {}
    }
    if let Some(args) = spec.strip_prefix("spike:") {
        let v: Vec<f64> = args
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("reading spike parameters {args:?}"))?;
        if v.len() != 3 {
            bail!("spike needs CENTER,WIDTH,HEIGHT");
        }
        return Ok(FunctionOracle::spike(v[0], v[1], v[2])?);
    }
    if let Some(path) = spec.strip_prefix("poly:") {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        let poly = match serde_json::from_str::<PolyFile>(&text).with_context(|| format!("parsing {path}"))? {
            PolyFile::Monomial(c) => PolyCoeffs::new(BasisKind::Monomial, c)?,
            PolyFile::Full(p) => PolyCoeffs::new(p.basis, p.coeffs)?,
        };
        return Ok(FunctionOracle::poly(poly));
    }
    read_table(Path::new(spec))
}

fn read_table(path: &Path) -> Result<FunctionOracle<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let (mut ts, mut vs) = (Vec::new(), Vec::new());
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("reading {}", path.display()))?;
        if rec.len() != 2 {
            bail!("{}:{}: expected two columns t,value", path.display(), line + 1);
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(t), Ok(v)) => {
                ts.push(t);
                vs.push(v);
            }
            _ if line == 0 => {}
            _ => bail!("{}:{}: cannot read {:?}", path.display(), line + 1, rec.as_slice()),
        }
    }
    FunctionOracle::tabulated(ts, vs).map_err(|e| anyhow!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chebfit::active::Oracle;

    #[test]
    fn p_forms() {
        assert_eq!(parse_p("2/3").unwrap(), 2.0 / 3.0);
        assert_eq!(parse_p("inf").unwrap(), f64::INFINITY);
        assert_eq!(parse_p("1.5").unwrap(), 1.5);
        assert!(parse_p("0").is_err());
        assert!(parse_p("1/0").is_err());
        assert!(parse_p("x").is_err());
        assert_eq!(show_p(2.0 / 3.0), "2/3");
        assert_eq!(show_p(1.5), "1.5");
    }

    #[test]
    fn table_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "t,value\n-1,0\n1,2\n").unwrap();
        let f = parse_oracle(path.to_str().unwrap()).unwrap();
        assert_eq!(f.eval(0.0), 1.0);
        std::fs::write(&path, "t,value\n-1,0\nx,2\n").unwrap();
        assert!(parse_oracle(path.to_str().unwrap()).is_err());
    }

    #[test]
    fn poly_file_forms() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, "[1, 0, 2]").unwrap();
        let f = parse_oracle(&format!("poly:{}", path.display())).unwrap();
        assert_eq!(f.eval(0.5), 1.5);
        std::fs::write(&path, r#"{"basis": {"kind": "chebyshev_t"}, "coeffs": [0, 0, 1]}"#).unwrap();
        let f = parse_oracle(&format!("poly:{}", path.display())).unwrap();
        assert!((f.eval(0.5) + 0.5).abs() < 1e-15);
    }
}
