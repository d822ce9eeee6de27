//! Tables, artifacts and checks produced by a run.

use sha2::{Digest, Sha256};

/// One CSV cell. Floats use Rust's shortest round-trip formatting, which is
/// locale independent and never exceeds 17 significant digits.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    U(usize),
    S(String),
    B(bool),
    Empty,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::F(x) => format!("{x:?}"),
            Cell::I(x) => x.to_string(),
            Cell::U(x) => x.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::I(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::F)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(headers: &[S]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.headers.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
    }
}

/// A file written into the run directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub file: String,
    pub body: String,
}

impl Artifact {
    pub fn table(file: &str, table: &Table) -> Self {
        Self::raw(file, table.to_csv())
    }

    pub fn raw(file: &str, body: String) -> Self {
        Self {
            file: file.to_string(),
            body,
        }
    }

    /// Data rows, not counting the header.
    pub fn rows(&self) -> usize {
        self.body.lines().count().saturating_sub(1)
    }

    pub fn sha256(&self) -> String {
        format!("{:x}", Sha256::digest(self.body.as_bytes()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Distance to the failure boundary; negative when the check fails.
    pub margin: Option<f64>,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            margin: None,
            detail: detail.into(),
        }
    }

    /// Passes iff `value ≤ limit`; NaN fails.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= limit,
            margin: Some(limit - value),
            detail: format!("{value:?} <= {limit:?}"),
        }
    }

    /// Passes iff `value ≥ limit`; NaN fails.
    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= limit,
            margin: Some(value - limit),
            detail: format!("{value:?} >= {limit:?}"),
        }
    }

    pub fn equal<V: PartialEq + std::fmt::Debug>(name: impl Into<String>, got: V, want: V) -> Self {
        let passed = got == want;
        Self::new(name, passed, format!("got {got:?}, expected {want:?}"))
    }
}

/// Artifacts and checks of one scenario run or acceptance criterion.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn table(&mut self, file: &str, t: &Table) {
        self.artifacts.push(Artifact::table(file, t));
    }

    pub fn raw(&mut self, file: &str, body: String) {
        self.artifacts.push(Artifact::raw(file, body));
    }

    /// Smallest margin over checks that report one.
    pub fn worst_margin(&self) -> Option<f64> {
        self.checks.iter().filter_map(|c| c.margin).reduce(f64::min)
    }

    /// Appends `other`, prefixing its file and check names.
    pub fn absorb(&mut self, prefix: &str, other: RunOutput) {
        for a in other.artifacts {
            self.artifacts.push(Artifact::raw(&format!("{prefix}_{}", a.file), a.body));
        }
        for mut c in other.checks {
            c.name = format!("{prefix}: {}", c.name);
            self.checks.push(c);
        }
    }
}
