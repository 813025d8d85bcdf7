//! CSV tables: ball lists, experiment rows, Weyl tables and good sets.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use pmax_core::divset::{DivergenceSet, PrimeGroup};
use pmax_core::experiment::RowOutcome;
use pmax_core::grid::flat_index;
use pmax_core::poly::IntPolynomial;
use pmax_core::weyl::GoodSet;
use serde_json::{json, Value};

use crate::numfmt::{fmt_f64, num};
use crate::polyjson::polynomial_value;
use crate::{CliError, Header};

/// Columns of `rows.csv`, in order.
pub const ROW_COLUMNS: [&str; 9] = [
    "N", "Q", "J", "measure", "measure_err", "sup_lb", "hs_norm", "ratio", "wall_ms",
];

/// A file, or stdout when no path is given.
pub struct Output {
    path: PathBuf,
    inner: Box<dyn Write>,
}

impl Output {
    pub fn open(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let file = fs::File::create(p).map_err(|e| CliError::io(p, e))?;
                Ok(Output {
                    path: p.to_path_buf(),
                    inner: Box::new(io::BufWriter::new(file)),
                })
            }
            None => Ok(Output {
                path: PathBuf::from("<stdout>"),
                inner: Box::new(io::stdout().lock()),
            }),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Writes the header line, the column names and the records.
pub fn write_table<I>(out: Output, header: &Header, columns: &[String], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let Output { path, mut inner } = out;
    inner
        .write_all(header.line().as_bytes())
        .map_err(|e| CliError::io(&path, e))?;
    let mut w = csv::Writer::from_writer(inner);
    let csv_err = |source| CliError::Csv {
        path: path.clone(),
        source,
    };
    w.write_record(columns).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))
}

/// A parsed table: header, column names and string records.
#[derive(Debug)]
pub struct Table {
    pub header: Header,
    pub columns: Vec<String>,
    pub records: Vec<Vec<String>>,
}

pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let header = Header::parse_line(first.trim_end())
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(rest.as_bytes());
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let columns = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let records = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()
        .map_err(csv_err)?;
    Ok(Table {
        header,
        columns,
        records,
    })
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, col: &str, s: &str) -> Result<T, CliError> {
    s.trim().parse().map_err(|_| {
        CliError::Parse(format!(
            "{}: record {line}, column {col}: cannot parse {s:?}",
            path.display()
        ))
    })
}

/// `b1, ..., bd`.
pub fn coordinate_columns(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("b{i}")).collect()
}

/// Header metadata describing a divergence set well enough to rebuild it
/// from its ball list.
pub fn balls_meta(set: &DivergenceSet, poly: &IntPolynomial, c: f64) -> Value {
    json!({
        "poly": polynomial_value(poly),
        "N": set.n_scale(),
        "d": set.dim(),
        "k": poly.degree(),
        "c": num(c),
        "rho": num(set.rho()),
        "Q": set.q_param(),
        "J": set.ball_count(),
        "primes": set.groups().iter().map(PrimeGroup::q).collect::<Vec<_>>(),
        "dropped": set.dropped_primes(),
    })
}

pub fn write_balls(out: Output, header: &Header, set: &DivergenceSet) -> Result<(), CliError> {
    let mut columns = vec!["q".to_string()];
    columns.extend(coordinate_columns(set.dim()));
    let rows = set.balls().map(|(q, b)| {
        let mut row = vec![q.to_string()];
        row.extend(b.iter().map(u64::to_string));
        row
    });
    write_table(out, header, &columns, rows)
}

/// Rebuilds a divergence set from a ball list written by [`write_balls`].
pub fn read_balls(path: &Path) -> Result<(Header, DivergenceSet), CliError> {
    let t = read_table(path)?;
    let h = &t.header;
    let n = h.meta_u64("N")?;
    let d = h.meta_u64("d")? as usize;
    let k = h.meta_u64("k")? as u32;
    let c = h.meta_f64("c")?;
    let rho = h.meta_f64("rho")?;
    let primes = h.meta_u64_list("primes")?;
    let dropped = h.meta_u64_list("dropped")?;
    let mut expected = vec!["q".to_string()];
    expected.extend(coordinate_columns(d));
    if t.columns != expected {
        return Err(CliError::Parse(format!(
            "{}: columns {:?}, expected {:?}",
            path.display(),
            t.columns,
            expected
        )));
    }
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); primes.len()];
    let mut b = vec![0i64; d];
    for (line, rec) in t.records.iter().enumerate() {
        let q: u64 = field(path, line + 1, "q", &rec[0])?;
        let slot = primes.iter().position(|&p| p == q).ok_or_else(|| {
            CliError::Parse(format!(
                "{}: record {}: q = {q} is not among the header primes",
                path.display(),
                line + 1
            ))
        })?;
        for (i, bi) in b.iter_mut().enumerate() {
            let col = format!("b{}", i + 1);
            let v: u64 = field(path, line + 1, &col, &rec[i + 1])?;
            if v >= q {
                return Err(CliError::Parse(format!(
                    "{}: record {}: {col} = {v} is not a residue mod {q}",
                    path.display(),
                    line + 1
                )));
            }
            *bi = v as i64;
        }
        members[slot].push(flat_index(q, &b) as u32);
    }
    let groups = primes
        .iter()
        .zip(members)
        .map(|(&q, m)| {
            Ok(PrimeGroup {
                good: GoodSet::from_members(q, d, c, k, m)?,
                deligne: None,
                parseval_defect: None,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let set = DivergenceSet::from_groups(n, d, rho, groups, dropped)?;
    Ok((t.header, set))
}

/// One `rows.csv` record. Failed rows keep `N` and `Q` and carry `NaN`
/// elsewhere.
pub fn row_record(row: &RowOutcome) -> Vec<String> {
    match row {
        Ok(r) => vec![
            r.n_scale.to_string(),
            r.q_param.to_string(),
            r.ball_count.to_string(),
            fmt_f64(r.measure.estimate),
            fmt_f64(r.measure.error),
            fmt_f64(r.sup_lb),
            fmt_f64(r.hs_norm),
            fmt_f64(r.ratio),
            fmt_f64(r.wall_ms),
        ],
        Err(f) => {
            let mut v = vec![f.n_scale.to_string(), f.q_param.to_string()];
            v.resize(ROW_COLUMNS.len(), "NaN".to_string());
            v
        }
    }
}

pub fn write_rows(out: Output, header: &Header, rows: &[RowOutcome]) -> Result<(), CliError> {
    let columns: Vec<String> = ROW_COLUMNS.iter().map(|s| s.to_string()).collect();
    write_table(out, header, &columns, rows.iter().map(row_record))
}

/// A `rows.csv` record read back.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowPoint {
    pub n_scale: u64,
    pub q_param: u64,
    pub ratio: f64,
}

impl RowPoint {
    pub fn succeeded(&self) -> bool {
        self.ratio.is_finite() && self.ratio > 0.0
    }
}

pub fn read_rows(path: &Path) -> Result<(Header, Vec<RowPoint>), CliError> {
    let t = read_table(path)?;
    if t.columns != ROW_COLUMNS {
        return Err(CliError::Parse(format!(
            "{}: columns {:?}, expected {:?}",
            path.display(),
            t.columns,
            ROW_COLUMNS
        )));
    }
    let points = t
        .records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            Ok(RowPoint {
                n_scale: field(path, i + 1, "N", &rec[0])?,
                q_param: field(path, i + 1, "Q", &rec[1])?,
                ratio: field(path, i + 1, "ratio", &rec[7])?,
            })
        })
        .collect::<Result<_, CliError>>()?;
    Ok((t.header, points))
}
