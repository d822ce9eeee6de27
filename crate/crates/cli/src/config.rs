//! TOML scenario configs. Matrices are multi-line strings with one row per line.
//!
//! ```toml
//! scenario = "mapping-torus"
//! seed = 7
//! eps_grid = "dyadic:1:10"
//!
//! [params]
//! B = """
//! 0 1
//! 0 0
//! """
//!
//! [tolerances]
//! drift = 0.05
//! ```

use std::path::PathBuf;

use collapse_spectra::intlat::IntegerMatrix;
use nalgebra::DMatrix;
use num_rational::Ratio;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

const TOP_LEVEL_KEYS: [&str; 6] = ["scenario", "seed", "eps_grid", "output_dir", "params", "tolerances"];

/// Numerical tolerances shared by scenarios and acceptance criteria. Every
/// value must lie in `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative error of closed-form eigenvalues.
    pub rel_error: f64,
    /// Engine Laplacian against `diag(C·Cᵀ, 0)`.
    pub closed_form: f64,
    /// Entries of `d∘d` and asymmetry of `Δ`.
    pub d_squared: f64,
    /// `spectrum(p)` against `spectrum(n − p)`.
    pub duality: f64,
    /// Entrywise match of an explicit exterior-derivative matrix.
    pub pattern: f64,
    /// Relative drift of `λ_small/ε²` between grid points.
    pub drift: f64,
    /// Euler chain margin and determinant factorization, relative.
    pub chain: f64,
    /// Flat spectra at `t` and `t + 1`, relative.
    pub periodicity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_error: 1e-10,
            closed_form: 1e-12,
            d_squared: 1e-12,
            duality: 1e-9,
            pattern: 1e-12,
            drift: 0.05,
            chain: 1e-10,
            periodicity: 1e-12,
        }
    }
}

impl Tolerances {
    fn fields(&mut self) -> [(&'static str, &mut f64); 8] {
        [
            ("rel_error", &mut self.rel_error),
            ("closed_form", &mut self.closed_form),
            ("d_squared", &mut self.d_squared),
            ("duality", &mut self.duality),
            ("pattern", &mut self.pattern),
            ("drift", &mut self.drift),
            ("chain", &mut self.chain),
            ("periodicity", &mut self.periodicity),
        ]
    }

    pub fn from_table(table: &Table) -> CliResult<Self> {
        let mut tol = Self::default();
        let mut fields = tol.fields();
        for (key, value) in table {
            let path = format!("tolerances.{key}");
            let slot = fields
                .iter_mut()
                .find(|(name, _)| name == key)
                .ok_or_else(|| CliError::config(&path, "unknown tolerance"))?;
            let v = number(value).ok_or_else(|| CliError::config(&path, "expected a number"))?;
            if !(v > 0.0 && v < 1.0) {
                return Err(CliError::config(&path, format!("{v:?} is outside (0, 1)")));
            }
            *slot.1 = v;
        }
        Ok(tol)
    }

    fn to_table(mut self) -> Table {
        self.fields()
            .into_iter()
            .map(|(k, v)| (k.to_string(), Value::Float(*v)))
            .collect()
    }
}

/// Scenario-specific parameters; keys are reported as `params.<key>`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params {
    table: Table,
}

impl Params {
    pub fn new(table: Table) -> Self {
        Self { table }
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Keys of `other` replace those of `self`.
    pub fn merge(&mut self, other: Params) {
        self.table.extend(other.table);
    }

    pub fn contains(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    pub fn remove(&mut self, key: &str) {
        self.table.remove(key);
    }

    pub fn check_keys(&self, allowed: &[&str]) -> CliResult<()> {
        match self.table.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(CliError::config(format!("params.{k}"), "unknown parameter")),
            None => Ok(()),
        }
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.table.get(key)
    }

    fn bad(key: &str, msg: impl Into<String>) -> CliError {
        CliError::config(format!("params.{key}"), msg)
    }

    pub fn f64(&self, key: &str, default: f64) -> CliResult<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => number(v)
                .filter(|x| x.is_finite())
                .ok_or_else(|| Self::bad(key, "expected a finite number")),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> CliResult<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(_) => Err(Self::bad(key, "expected a nonnegative integer")),
        }
    }

    pub fn opt_usize(&self, key: &str) -> CliResult<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(_) => self.usize(key, 0).map(Some),
        }
    }

    pub fn f64_list(&self, key: &str, default: &[f64]) -> CliResult<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| number(v).filter(|x| x.is_finite()))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Self::bad(key, "expected an array of finite numbers")),
            Some(_) => Err(Self::bad(key, "expected an array")),
        }
    }

    pub fn i64_list(&self, key: &str, default: &[i64]) -> CliResult<Vec<i64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| v.as_integer())
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Self::bad(key, "expected an array of integers")),
            Some(_) => Err(Self::bad(key, "expected an array")),
        }
    }

    pub fn f64_rows(&self, key: &str, width: usize, default: &[&[f64]]) -> CliResult<Vec<Vec<f64>>> {
        let rows: Vec<Vec<f64>> = match self.get(key) {
            None => default.iter().map(|r| r.to_vec()).collect(),
            Some(Value::Array(a)) => a
                .iter()
                .map(|row| {
                    row.as_array()?
                        .iter()
                        .map(|v| number(v).filter(|x| x.is_finite()))
                        .collect::<Option<Vec<_>>>()
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Self::bad(key, "expected an array of number arrays"))?,
            Some(_) => return Err(Self::bad(key, "expected an array of arrays")),
        };
        if rows.iter().any(|r| r.len() != width) {
            return Err(Self::bad(key, format!("every row needs {width} entries")));
        }
        Ok(rows)
    }

    /// Integers or `"p/q"` strings.
    pub fn ratio_list(&self, key: &str, default: &[i64]) -> CliResult<Vec<Ratio<i64>>> {
        let Some(v) = self.get(key) else {
            return Ok(default.iter().map(|&x| Ratio::from_integer(x)).collect());
        };
        let arr = v.as_array().ok_or_else(|| Self::bad(key, "expected an array"))?;
        arr.iter()
            .map(|v| match v {
                Value::Integer(i) => Ok(Ratio::from_integer(*i)),
                Value::String(s) => parse_ratio(s).ok_or_else(|| Self::bad(key, format!("bad rational `{s}`"))),
                _ => Err(Self::bad(key, "entries must be integers or \"p/q\" strings")),
            })
            .collect()
    }

    pub fn opt_matrix(&self, key: &str) -> CliResult<Option<DMatrix<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => parse_matrix(s).map(Some).map_err(|m| Self::bad(key, m)),
            Some(_) => Err(Self::bad(key, "expected a matrix text block")),
        }
    }

    pub fn square_matrix(&self, key: &str, default: &str) -> CliResult<DMatrix<f64>> {
        let m = match self.opt_matrix(key)? {
            Some(m) => m,
            None => parse_matrix(default).map_err(|m| Self::bad(key, m))?,
        };
        if !m.is_square() {
            return Err(Self::bad(key, format!("matrix is {}×{}, expected square", m.nrows(), m.ncols())));
        }
        Ok(m)
    }

    pub fn opt_integer_matrix(&self, key: &str) -> CliResult<Option<IntegerMatrix>> {
        let Some(m) = self.opt_matrix(key)? else {
            return Ok(None);
        };
        IntegerMatrix::from_real(&m)
            .map(Some)
            .ok_or_else(|| Self::bad(key, "entries must be integers"))
    }
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn parse_ratio(s: &str) -> Option<Ratio<i64>> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().ok()?;
            let q: i64 = q.trim().parse().ok()?;
            (q != 0).then(|| Ratio::new(p, q))
        }
        None => s.parse().ok().map(Ratio::from_integer),
    }
}

/// Rows on separate lines, entries separated by whitespace or commas; blank
/// lines and `#` comments are skipped.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| format!("line {}: entries must be finite numbers", i + 1))?;
        rows.push(row);
    }
    let width = rows.first().map(Vec::len).ok_or("empty matrix")?;
    if rows.iter().any(|r| r.len() != width) {
        return Err("rows have different lengths".into());
    }
    Ok(DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}

/// `2^{-a}, …, 2^{-b}`.
pub fn dyadic_grid(a: i32, b: i32) -> Vec<f64> {
    (a..=b).map(|j| 0.5f64.powi(j)).collect()
}

fn parse_grid(v: &Value) -> CliResult<Vec<f64>> {
    let bad = |msg: &str| CliError::config("eps_grid", msg);
    let grid = match v {
        Value::Array(a) => a
            .iter()
            .map(number)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| bad("expected numbers"))?,
        Value::String(s) => parse_grid_text(s).map_err(|m| bad(&m))?,
        _ => return Err(bad("expected an array or \"dyadic:a:b\"")),
    };
    validate_grid(grid)
}

/// `a,b,c` or `dyadic:a:b`.
pub fn parse_grid_text(s: &str) -> Result<Vec<f64>, String> {
    if let Some(rest) = s.trim().strip_prefix("dyadic:") {
        let (a, b) = rest.split_once(':').ok_or("expected dyadic:a:b")?;
        let a: i32 = a.trim().parse().map_err(|_| "bad dyadic start")?;
        let b: i32 = b.trim().parse().map_err(|_| "bad dyadic end")?;
        if a < 0 || b < a || b > 60 {
            return Err("dyadic range must satisfy 0 ≤ a ≤ b ≤ 60".into());
        }
        return Ok(dyadic_grid(a, b));
    }
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad grid point `{}`", t.trim())))
        .collect()
}

pub fn validate_grid(grid: Vec<f64>) -> CliResult<Vec<f64>> {
    if grid.is_empty() {
        return Err(CliError::config("eps_grid", "grid is empty"));
    }
    if let Some(bad) = grid.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
        return Err(CliError::config("eps_grid", format!("{bad:?} is outside (0, 1]")));
    }
    Ok(grid)
}

/// Effective configuration of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub seed: Option<u64>,
    pub eps_grid: Option<Vec<f64>>,
    pub params: Params,
    pub tolerances: Tolerances,
    pub output_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn empty(scenario: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            seed: None,
            eps_grid: None,
            params: Params::default(),
            tolerances: Tolerances::default(),
            output_dir: None,
        }
    }

    /// Parses TOML. A `scenario` key, when present, must name `expected`.
    pub fn parse(text: &str, expected: &str) -> CliResult<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| {
            let msg = e.message().to_string();
            CliError::config("<file>", msg)
        })?;
        if let Some(key) = table.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
            return Err(CliError::config(key, "unknown key"));
        }
        let mut cfg = Self::empty(expected);
        if let Some(v) = table.get("scenario") {
            let name = v.as_str().ok_or_else(|| CliError::config("scenario", "expected a string"))?;
            if name != expected {
                return Err(CliError::config("scenario", format!("config is for `{name}`, not `{expected}`")));
            }
        }
        if let Some(v) = table.get("seed") {
            let s = v
                .as_integer()
                .filter(|&s| s >= 0)
                .ok_or_else(|| CliError::config("seed", "expected a nonnegative integer"))?;
            cfg.seed = Some(s as u64);
        }
        if let Some(v) = table.get("eps_grid") {
            cfg.eps_grid = Some(parse_grid(v)?);
        }
        if let Some(v) = table.get("output_dir") {
            let s = v.as_str().ok_or_else(|| CliError::config("output_dir", "expected a string"))?;
            cfg.output_dir = Some(PathBuf::from(s));
        }
        if let Some(v) = table.get("params") {
            let t = v.as_table().ok_or_else(|| CliError::config("params", "expected a table"))?;
            cfg.params = Params::new(t.clone());
        }
        if let Some(v) = table.get("tolerances") {
            let t = v.as_table().ok_or_else(|| CliError::config("tolerances", "expected a table"))?;
            cfg.tolerances = Tolerances::from_table(t)?;
        }
        Ok(cfg)
    }

    pub fn seed_or(&self, default: u64) -> u64 {
        self.seed.unwrap_or(default)
    }

    pub fn grid_or(&self, default: &[f64]) -> Vec<f64> {
        self.eps_grid.clone().unwrap_or_else(|| default.to_vec())
    }

    /// Canonical TOML of everything that influences the outputs; the output
    /// directory is excluded.
    pub fn canonical(&self) -> String {
        let mut t = Table::new();
        t.insert("scenario".into(), Value::String(self.scenario.clone()));
        if let Some(s) = self.seed {
            t.insert("seed".into(), Value::Integer(s as i64));
        }
        if let Some(g) = &self.eps_grid {
            t.insert("eps_grid".into(), Value::Array(g.iter().map(|&e| Value::Float(e)).collect()));
        }
        t.insert("params".into(), Value::Table(self.params.table.clone()));
        t.insert("tolerances".into(), Value::Table(self.tolerances.to_table()));
        toml::to_string(&t).expect("config tables serialize")
    }

    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_blocks() {
        let m = parse_matrix("1 2\n# note\n3, 4\n\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert!(parse_matrix("1 2\n3").is_err());
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("1 x").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid_text("dyadic:1:3").unwrap(), vec![0.5, 0.25, 0.125]);
        assert_eq!(parse_grid_text("0.5, 0.1").unwrap(), vec![0.5, 0.1]);
        assert!(validate_grid(vec![0.5, 1.5]).is_err());
        assert!(validate_grid(vec![]).is_err());
    }

    #[test]
    fn offending_keys_are_named() {
        let key = |text: &str| match ScenarioConfig::parse(text, "heisenberg") {
            Err(CliError::ConfigInvalid { key, .. }) => key,
            other => panic!("{other:?}"),
        };
        assert_eq!(key("colour = 1"), "colour");
        assert_eq!(key("scenario = \"gt-family\""), "scenario");
        assert_eq!(key("eps_grid = [0.5, 2.0]"), "eps_grid");
        assert_eq!(key("seed = -1"), "seed");
        assert_eq!(key("[tolerances]\ndrift = -0.1"), "tolerances.drift");
        assert_eq!(key("[tolerances]\nnope = 0.1"), "tolerances.nope");
        assert_eq!(key("[tolerances]\nchain = \"x\""), "tolerances.chain");
    }

    #[test]
    fn params_accessors() {
        let cfg = ScenarioConfig::parse(
            "[params]\nB = \"0 1\\n0 0\"\nalpha = [1, \"1/2\"]\nk = 1\nrows = [[1, 2], [3, 4.5]]",
            "x",
        )
        .unwrap();
        let p = &cfg.params;
        assert_eq!(p.square_matrix("B", "1").unwrap()[(0, 1)], 1.0);
        assert_eq!(p.ratio_list("alpha", &[]).unwrap(), vec![Ratio::from_integer(1), Ratio::new(1, 2)]);
        assert_eq!(p.usize("k", 0).unwrap(), 1);
        assert_eq!(p.f64_rows("rows", 2, &[]).unwrap()[1], vec![3.0, 4.5]);
        assert!(p.f64_rows("rows", 3, &[]).is_err());
        assert!(p.check_keys(&["B", "alpha", "k"]).is_err());
        assert!(p.opt_integer_matrix("B").unwrap().is_some());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ScenarioConfig::parse("seed = 1", "x").unwrap();
        let b = ScenarioConfig::parse("seed = 1\noutput_dir = \"elsewhere\"", "x").unwrap();
        let c = ScenarioConfig::parse("seed = 2", "x").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
