//! CSV and JSON emission.
//!
//! Each CSV starts with `#` comment lines (command, configuration, seed,
//! timestamp) followed by a fixed header row and the body. Bodies depend only
//! on the configuration, so reruns are byte-identical below the comments.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::construction::StageGeometry;
use crate::enclosure::Enclosure;
use crate::error::Result;
use crate::numeric::rational_string;

/// Significant digits of decimal enclosure endpoints.
pub const DECIMAL_DIGITS: usize = 17;

/// `(file stem, columns, description)` for every CSV the CLI writes.
pub const SCHEMAS: &[(&str, &[&str], &str)] = &[
    (
        "geometry",
        &["stage", "rank", "height", "width", "rank_product", "tower_measure"],
        "tower geometry per stage; width and tower_measure as exact p/q",
    ),
    (
        "census",
        &["r", "plateau_start", "j_r", "size", "reference", "members"],
        "plateau r_j = r+1; members of J_r separated by ';'; reference = r^((1-d)/d)",
    ),
    (
        "corr",
        &["n", "stage", "lo", "hi", "width", "converged"],
        "enclosure of c(n) read at the given stage, divided by mu(X) when normalize = true; lo rounded down, hi rounded up",
    ),
    (
        "lemma",
        &[
            "r", "j", "log10_h", "on_plateau", "gap_lo", "gap_hi", "bound", "verdict",
            "aligned_gap_lo", "aligned_gap_hi", "aligned_verdict",
        ],
        "gap |(T^h_j f, Q_r f) - (Q_r f, Q_r f)| against 2r/h_j + 2r^-r; aligned uses T^(h_j+1)",
    ),
    (
        "lemma_slopes",
        &["r", "size", "slope", "aligned_slope", "indeterminate_fraction"],
        "log-log slope of the gap midpoint against h_j over each census",
    ),
    (
        "ineq2",
        &[
            "r", "size", "qq_lo", "qq_hi", "qp_lo", "qp_hi", "pp_lo", "pp_hi", "lhs_lo", "lhs_hi",
            "rhs", "verdict", "lhs_aligned_lo", "lhs_aligned_hi", "verdict_aligned",
        ],
        "expansion <Q,Q> - 2<Q,P> + <P,P> compared strictly against 2/|J_r|",
    ),
    (
        "cross",
        &["r", "j", "p", "deviation_lo", "deviation_hi", "height_ratio", "reference", "c_estimate"],
        "|c(h_(j+p) - h_j)^2 - <Q,Q>| with h_j/h_(j+p), r^-p and deviation_hi * r^p",
    ),
    (
        "distance",
        &[
            "r", "N", "rho_sq", "relative", "rho_sq_exact", "gram_condition", "solver_residual",
            "precision_bits", "effective_rank", "stage",
        ],
        "squared distance from T^r f(x)f + f(x)T^r f to span{(TxT)^k f(x)f : |k| <= N}",
    ),
    (
        "identity",
        &["r", "mode", "terms", "l1_norm"],
        "residual of the Cesaro identity; corrected mode must be empty",
    ),
    (
        "identity_support",
        &["r", "a", "b", "coefficient"],
        "support of the printed-identity residual",
    ),
    (
        "spectrum",
        &["k", "theta", "sigma", "sigma_sq"],
        "Fejer density estimates on theta_k = 2 pi k / grid; sigma_sq uses moments c(n)^2",
    ),
    (
        "mix",
        &["n", "corr_lo", "corr_hi", "target_lo", "target_hi", "converged"],
        "c(n) against the mixing limit mu(A)^2/mu(X)",
    ),
    (
        "oracle",
        &["law", "stage", "shift", "engine", "brute", "simulated", "lower", "match"],
        "engine pair counts against brute-force counts and the interval model",
    ),
];

pub fn schema(name: &str) -> Option<&'static [&'static str]> {
    SCHEMAS.iter().find(|(n, _, _)| *n == name).map(|(_, c, _)| *c)
}

/// Writes the `FORMATS` file describing every schema.
pub fn write_formats(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut s = String::from(
        "CSV files begin with '#' comment lines (command, config, seed, timestamp).\n\
         The first non-comment line is the header; bodies are deterministic.\n\
         Decimal enclosure endpoints are rounded outward to 17 significant digits.\n\n",
    );
    for (name, cols, what) in SCHEMAS {
        s.push_str(&format!("{name}.csv\n  {what}\n  columns: {}\n\n", cols.join(",")));
    }
    let path = dir.join("FORMATS");
    fs::write(&path, s)?;
    Ok(path)
}

/// A CSV table with a fixed schema.
#[derive(Clone, Debug)]
pub struct CsvReport {
    name: String,
    columns: Vec<String>,
    comments: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvReport {
    /// Panics on a name missing from [`SCHEMAS`].
    pub fn new(name: &str) -> Self {
        let cols = schema(name).unwrap_or_else(|| panic!("unknown report {name}"));
        Self {
            name: name.to_string(),
            columns: cols.iter().map(|c| c.to_string()).collect(),
            comments: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) -> &mut Self {
        self.comments.push(line.into());
        self
    }

    /// Panics if the row length differs from the schema.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// Header row and body, without comments.
    pub fn body(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| csv_err(e.into_error()))?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    pub fn render(&self) -> Result<String> {
        let mut s = String::new();
        for c in &self.comments {
            for line in c.lines() {
                s.push_str("# ");
                s.push_str(line);
                s.push('\n');
            }
        }
        s.push_str(&self.body()?);
        Ok(s)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.name));
        fs::write(&path, self.render()?)?;
        Ok(path)
    }
}

fn csv_err(e: impl std::fmt::Display) -> crate::error::Error {
    crate::error::Error::Io(std::io::Error::other(e.to_string()))
}

/// Strips `#` comment lines, leaving header and body.
pub fn strip_comments(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

pub fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix {secs}")
}

/// Outward-rounded decimal endpoints.
pub fn decimals(e: &Enclosure) -> (String, String) {
    e.to_decimal(DECIMAL_DIGITS)
}

pub fn enclosure_json(e: &Enclosure) -> Value {
    let (lo, hi) = decimals(e);
    json!({
        "lo": rational_string(e.lo()),
        "hi": rational_string(e.hi()),
        "lo_decimal": lo,
        "hi_decimal": hi,
    })
}

pub fn geometry_json(stages: &[StageGeometry]) -> Value {
    Value::Array(
        stages
            .iter()
            .map(|g| {
                json!({
                    "stage": g.stage,
                    "rank": g.rank,
                    "height": g.height.to_string(),
                    "width": rational_string(&g.width),
                    "rank_product": g.rank_product.to_string(),
                    "spacers": g.spacers,
                    "offsets": g.offsets.iter().map(|o| o.to_string()).collect::<Vec<_>>(),
                    "tower_measure": rational_string(&g.tower_measure),
                })
            })
            .collect(),
    )
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(value).map_err(csv_err)?;
    fs::write(&path, text + "\n")?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn render_and_strip() {
        let mut r = CsvReport::new("identity");
        r.comment("seed 1").comment(timestamp());
        r.push(vec!["2".into(), "printed".into(), "6".into(), "6".into()]);
        let text = r.render().unwrap();
        assert!(text.starts_with("# seed 1\n"));
        assert_eq!(strip_comments(&text), "r,mode,terms,l1_norm\n2,printed,6,6\n");
        assert_eq!(strip_comments(&text), r.body().unwrap());
    }

    #[test]
    #[should_panic]
    fn row_width_checked() {
        CsvReport::new("identity").push(vec!["1".into()]);
    }

    #[test]
    fn formats_lists_every_schema() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_formats(dir.path()).unwrap();
        let text = fs::read_to_string(p).unwrap();
        for (name, _, _) in SCHEMAS {
            assert!(text.contains(&format!("{name}.csv")));
        }
    }

    #[test]
    fn enclosure_json_is_exact() {
        let e = Enclosure::new(BigRational::new(1.into(), 3.into()), BigRational::new(1.into(), 2.into()));
        let v = enclosure_json(&e);
        assert_eq!(v["lo"], "1/3");
        assert_eq!(v["hi_decimal"], "5e-1");
    }
}
