//! Delimited-text readers and writers for node, link and label tables.
//! Empty fields are missing values; lines starting with `#` are comments.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{HidamError, Result};
use crate::graph::{LinkRow, LinkTable, NodeRow, NodeTable};
use crate::train::{LabeledCompany, LabeledSet};

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| HidamError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_err(path: &Path, line: u64, reason: impl Into<String>) -> HidamError {
    HidamError::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        reason: reason.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> HidamError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    parse_err(path, line, e.to_string())
}

fn value(path: &Path, line: u64, field: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|_| parse_err(path, line, format!("`{field}` is not a number")))
}

/// Header fields and `(line, record)` pairs.
type Records = (Vec<String>, Vec<(u64, csv::StringRecord)>);

fn records(path: &Path, min_cols: usize, lead: &[&str]) -> Result<Records> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.len() < min_cols || lead.iter().zip(header.iter()).any(|(a, b)| *a != b) {
        return Err(parse_err(
            path,
            1,
            format!("header must start with {}", lead.join(",")),
        ));
    }
    let columns = header.iter().skip(lead.len()).map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, rec));
    }
    Ok((columns, rows))
}

/// Reads `id,<attr…>` rows.
pub fn read_node_table(path: &Path, type_name: &str) -> Result<NodeTable> {
    let (columns, recs) = records(path, 1, &["id"])?;
    let rows = recs
        .into_iter()
        .map(|(line, rec)| {
            let values = rec
                .iter()
                .skip(1)
                .map(|f| value(path, line, f))
                .collect::<Result<_>>()?;
            Ok(NodeRow {
                id: rec[0].to_string(),
                values,
            })
        })
        .collect::<Result<_>>()?;
    Ok(NodeTable {
        type_name: type_name.into(),
        columns,
        rows,
    })
}

/// Reads `src,dst,<attr…>` rows.
pub fn read_link_table(path: &Path, type_name: &str) -> Result<LinkTable> {
    let (columns, recs) = records(path, 2, &["src", "dst"])?;
    let rows = recs
        .into_iter()
        .map(|(line, rec)| {
            let values = rec
                .iter()
                .skip(2)
                .map(|f| value(path, line, f))
                .collect::<Result<_>>()?;
            Ok(LinkRow {
                src: rec[0].to_string(),
                dst: rec[1].to_string(),
                values,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LinkTable {
        type_name: type_name.into(),
        columns,
        rows,
    })
}

/// Reads `id,label[,timestamp]` rows.
pub fn read_labels(path: &Path) -> Result<LabeledSet> {
    let (_, recs) = records(path, 2, &["id", "label"])?;
    let mut entries = Vec::with_capacity(recs.len());
    for (line, rec) in recs {
        let label = match &rec[1] {
            "0" => 0,
            "1" => 1,
            other => return Err(parse_err(path, line, format!("label `{other}` is not 0 or 1"))),
        };
        let timestamp = match rec.get(2) {
            None | Some("") => None,
            Some(t) => Some(
                t.parse::<i64>()
                    .map_err(|_| parse_err(path, line, format!("timestamp `{t}` is not an integer")))?,
            ),
        };
        entries.push(LabeledCompany {
            id: rec[0].to_string(),
            label,
            timestamp,
        });
    }
    LabeledSet::new(entries).map_err(|e| parse_err(path, 0, e.to_string()))
}

pub(crate) fn create(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| HidamError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub(crate) fn finish(path: &Path, w: csv::Writer<File>) -> Result<()> {
    let mut f = w
        .into_inner()
        .map_err(|e| HidamError::io(path, e.into_error()))?;
    f.flush().map_err(|e| HidamError::io(path, e))
}

pub(crate) fn write_err(path: &Path) -> impl Fn(csv::Error) -> HidamError + '_ {
    move |e| HidamError::io(path, std::io::Error::other(e.to_string()))
}

fn fmt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_node_table(path: &Path, t: &NodeTable) -> Result<()> {
    let mut w = create(path)?;
    let e = write_err(path);
    w.write_record(std::iter::once("id").chain(t.columns.iter().map(String::as_str)))
        .map_err(&e)?;
    for r in &t.rows {
        w.write_record(std::iter::once(r.id.clone()).chain(r.values.iter().map(|v| fmt(*v))))
            .map_err(&e)?;
    }
    finish(path, w)
}

pub fn write_link_table(path: &Path, t: &LinkTable) -> Result<()> {
    let mut w = create(path)?;
    let e = write_err(path);
    w.write_record(["src", "dst"].into_iter().chain(t.columns.iter().map(String::as_str)))
        .map_err(&e)?;
    for r in &t.rows {
        w.write_record(
            [r.src.clone(), r.dst.clone()]
                .into_iter()
                .chain(r.values.iter().map(|v| fmt(*v))),
        )
        .map_err(&e)?;
    }
    finish(path, w)
}

pub fn write_labels(path: &Path, set: &LabeledSet) -> Result<()> {
    let mut w = create(path)?;
    let e = write_err(path);
    w.write_record(["id", "label", "timestamp"]).map_err(&e)?;
    for l in &set.entries {
        w.write_record([
            l.id.clone(),
            l.label.to_string(),
            l.timestamp.map(|t| t.to_string()).unwrap_or_default(),
        ])
        .map_err(&e)?;
    }
    finish(path, w)
}
