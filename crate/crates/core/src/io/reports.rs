//! Delimited-text reports. Every file opens with a `# seed=N` line and each
//! writer has a matching reader.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{HidamError, Result};
use crate::graph::MissingRateTable;
use crate::model::Explanation;
use crate::synth::{TruthRow, ViewLift};
use crate::train::EpochRecord;

use super::tables::{finish, write_err};

/// Rows of a report together with the seed echoed in its header.
#[derive(Debug, Clone, PartialEq)]
pub struct Report<T> {
    pub seed: u64,
    pub rows: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaRow {
    pub node_id: String,
    pub metapath: String,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaRow {
    pub node_id: String,
    pub metapath: String,
    pub neighbor_id: String,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: String,
    pub value: usize,
    pub auc: Option<f64>,
    pub ks: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub link_type: String,
    pub coverage: f64,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_rows(path: &Path, seed: u64, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut file = File::create(path).map_err(|e| HidamError::io(path, e))?;
    writeln!(file, "# seed={seed}").map_err(|e| HidamError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let e = write_err(path);
    w.write_record(header).map_err(&e)?;
    for r in rows {
        w.write_record(r).map_err(&e)?;
    }
    finish(path, w)
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> HidamError {
    HidamError::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

struct Rows<'a> {
    path: &'a Path,
    seed: u64,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl Rows<'_> {
    fn num(&self, line: usize, field: &str) -> Result<f64> {
        field
            .parse()
            .map_err(|_| parse_err(self.path, line, format!("`{field}` is not a number")))
    }

    fn opt(&self, line: usize, field: &str) -> Result<Option<f64>> {
        if field.is_empty() {
            Ok(None)
        } else {
            self.num(line, field).map(Some)
        }
    }

    fn int<T: std::str::FromStr>(&self, line: usize, field: &str) -> Result<T> {
        field
            .parse()
            .map_err(|_| parse_err(self.path, line, format!("`{field}` is not an integer")))
    }

    fn map<T>(&self, f: impl Fn(usize, &csv::StringRecord) -> Result<T>) -> Result<Report<T>> {
        let rows = self.rows.iter().map(|(l, r)| f(*l, r)).collect::<Result<_>>()?;
        Ok(Report { seed: self.seed, rows })
    }
}

fn read_rows<'a>(path: &'a Path, header: &[&str]) -> Result<Rows<'a>> {
    let file = File::open(path).map_err(|e| HidamError::io(path, e))?;
    let mut first = String::new();
    BufReader::new(&file)
        .read_line(&mut first)
        .map_err(|e| HidamError::io(path, e))?;
    let seed = first
        .trim()
        .strip_prefix("# seed=")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(path, 1, "expected `# seed=N` header line"))?;
    let file = File::open(path).map_err(|e| HidamError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let got = rdr
        .headers()
        .map_err(|e| parse_err(path, 2, e.to_string()))?
        .clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(parse_err(path, 2, format!("header must be {}", header.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        rows.push((line, rec));
    }
    Ok(Rows { path, seed, rows })
}

const PREDICTION_HEADER: [&str; 2] = ["id", "score"];

pub fn write_predictions(path: &Path, seed: u64, rows: &[Prediction]) -> Result<()> {
    write_rows(
        path,
        seed,
        &PREDICTION_HEADER,
        rows.iter().map(|p| vec![p.id.clone(), p.score.to_string()]),
    )
}

pub fn read_predictions(path: &Path) -> Result<Report<Prediction>> {
    let r = read_rows(path, &PREDICTION_HEADER)?;
    r.map(|l, rec| {
        Ok(Prediction {
            id: rec[0].to_string(),
            score: r.num(l, &rec[1])?,
        })
    })
}

const HISTORY_HEADER: [&str; 4] = ["epoch", "loss", "val_auc", "val_ks"];

/// Per-epoch metrics. Wall time is not written so that files stay
/// reproducible.
pub fn write_history(path: &Path, seed: u64, rows: &[EpochRecord]) -> Result<()> {
    write_rows(
        path,
        seed,
        &HISTORY_HEADER,
        rows.iter().map(|h| {
            vec![
                h.epoch.to_string(),
                h.loss.to_string(),
                opt(h.val_auc),
                opt(h.val_ks),
            ]
        }),
    )
}

pub fn read_history(path: &Path) -> Result<Report<EpochRecord>> {
    let r = read_rows(path, &HISTORY_HEADER)?;
    r.map(|l, rec| {
        Ok(EpochRecord {
            epoch: r.int(l, &rec[0])?,
            loss: r.num(l, &rec[1])?,
            val_auc: r.opt(l, &rec[2])?,
            val_ks: r.opt(l, &rec[3])?,
            seconds: 0.0,
        })
    })
}

const BETA_HEADER: [&str; 3] = ["node_id", "metapath", "beta"];
const ALPHA_HEADER: [&str; 4] = ["node_id", "metapath", "neighbor_id", "alpha"];

/// Writes `beta.csv` and `alpha.csv` into `dir`.
pub fn write_explanations(dir: &Path, seed: u64, items: &[Explanation]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HidamError::io(dir, e))?;
    write_rows(
        &dir.join("beta.csv"),
        seed,
        &BETA_HEADER,
        items.iter().flat_map(|x| {
            x.beta
                .iter()
                .map(|(p, b)| vec![x.node_id.clone(), p.clone(), b.to_string()])
        }),
    )?;
    write_rows(
        &dir.join("alpha.csv"),
        seed,
        &ALPHA_HEADER,
        items.iter().flat_map(|x| {
            x.alpha.iter().flat_map(move |(p, top)| {
                top.iter()
                    .map(move |(n, a)| vec![x.node_id.clone(), p.clone(), n.clone(), a.to_string()])
            })
        }),
    )
}

pub fn read_beta(path: &Path) -> Result<Report<BetaRow>> {
    let r = read_rows(path, &BETA_HEADER)?;
    r.map(|l, rec| {
        Ok(BetaRow {
            node_id: rec[0].to_string(),
            metapath: rec[1].to_string(),
            beta: r.num(l, &rec[2])?,
        })
    })
}

pub fn read_alpha(path: &Path) -> Result<Report<AlphaRow>> {
    let r = read_rows(path, &ALPHA_HEADER)?;
    r.map(|l, rec| {
        Ok(AlphaRow {
            node_id: rec[0].to_string(),
            metapath: rec[1].to_string(),
            neighbor_id: rec[2].to_string(),
            alpha: r.num(l, &rec[3])?,
        })
    })
}

const SWEEP_HEADER: [&str; 4] = ["param", "value", "auc", "ks"];

pub fn write_sweep(path: &Path, seed: u64, rows: &[SweepRow]) -> Result<()> {
    write_rows(
        path,
        seed,
        &SWEEP_HEADER,
        rows.iter()
            .map(|s| vec![s.param.clone(), s.value.to_string(), opt(s.auc), opt(s.ks)]),
    )
}

pub fn read_sweep(path: &Path) -> Result<Report<SweepRow>> {
    let r = read_rows(path, &SWEEP_HEADER)?;
    r.map(|l, rec| {
        Ok(SweepRow {
            param: rec[0].to_string(),
            value: r.int(l, &rec[1])?,
            auc: r.opt(l, &rec[2])?,
            ks: r.opt(l, &rec[3])?,
        })
    })
}

const COVERAGE_HEADER: [&str; 2] = ["link_type", "coverage"];

pub fn write_coverage(path: &Path, seed: u64, rows: &[CoverageRow]) -> Result<()> {
    write_rows(
        path,
        seed,
        &COVERAGE_HEADER,
        rows.iter()
            .map(|c| vec![c.link_type.clone(), c.coverage.to_string()]),
    )
}

pub fn read_coverage(path: &Path) -> Result<Report<CoverageRow>> {
    let r = read_rows(path, &COVERAGE_HEADER)?;
    r.map(|l, rec| {
        Ok(CoverageRow {
            link_type: rec[0].to_string(),
            coverage: r.num(l, &rec[1])?,
        })
    })
}

/// Columns: `feature_set,own` followed by one `with_<group>` column per
/// neighbor group.
pub fn write_missing_rates(path: &Path, seed: u64, t: &MissingRateTable) -> Result<()> {
    let mut header = vec!["feature_set".to_string(), "own".to_string()];
    header.extend(t.groups.iter().map(|g| format!("with_{g}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(
        path,
        seed,
        &header,
        t.rows.iter().map(|r| {
            let mut v = vec![r.feature_set.clone(), r.own.to_string()];
            v.extend(r.filled.iter().map(f64::to_string));
            v
        }),
    )
}

pub fn read_missing_rates(path: &Path) -> Result<Report<MissingRateTable>> {
    let file = File::open(path).map_err(|e| HidamError::io(path, e))?;
    let header = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file)
        .headers()
        .map_err(|e| parse_err(path, 2, e.to_string()))?
        .clone();
    let header: Vec<&str> = header.iter().collect();
    let groups = header
        .iter()
        .skip(2)
        .map(|h| {
            h.strip_prefix("with_")
                .map(str::to_string)
                .ok_or_else(|| parse_err(path, 2, format!("unexpected column `{h}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if header.len() < 2 || header[..2] != ["feature_set", "own"] {
        return Err(parse_err(path, 2, "header must start with feature_set,own"));
    }
    let r = read_rows(path, &header)?;
    let rows = r.map(|l, rec| {
        Ok(crate::graph::MissingRateRow {
            feature_set: rec[0].to_string(),
            own: r.num(l, &rec[1])?,
            filled: rec.iter().skip(2).map(|f| r.num(l, f)).collect::<Result<_>>()?,
        })
    })?;
    Ok(Report {
        seed: rows.seed,
        rows: vec![MissingRateTable { groups, rows: rows.rows }],
    })
}

const LIFT_HEADER: [&str; 7] = [
    "view",
    "with_default_neighbor",
    "defaults_with",
    "without_default_neighbor",
    "defaults_without",
    "lift_percent",
    "default_share",
];

pub fn write_lift(path: &Path, seed: u64, rows: &[ViewLift]) -> Result<()> {
    write_rows(
        path,
        seed,
        &LIFT_HEADER,
        rows.iter().map(|v| {
            vec![
                v.view.clone(),
                v.with_default_neighbor.to_string(),
                v.defaults_with.to_string(),
                v.without_default_neighbor.to_string(),
                v.defaults_without.to_string(),
                opt(v.lift_percent),
                opt(v.default_share),
            ]
        }),
    )
}

/// Reads a lift report. The `undefined` reason is not stored; a missing
/// lift or share comes back as `None`.
pub fn read_lift(path: &Path) -> Result<Report<ViewLift>> {
    let r = read_rows(path, &LIFT_HEADER)?;
    r.map(|l, rec| {
        let lift_percent = r.opt(l, &rec[5])?;
        let default_share = r.opt(l, &rec[6])?;
        Ok(ViewLift {
            view: rec[0].to_string(),
            with_default_neighbor: r.int(l, &rec[1])?,
            defaults_with: r.int(l, &rec[2])?,
            without_default_neighbor: r.int(l, &rec[3])?,
            defaults_without: r.int(l, &rec[4])?,
            undefined: (lift_percent.is_none() || default_share.is_none()).then(|| "undefined".to_string()),
            lift_percent,
            default_share,
        })
    })
}

const TRUTH_HEADER: [&str; 4] = ["id", "base_risk", "risk", "label"];

/// Ground-truth sidecar of a synthetic dataset. Not part of any manifest.
pub fn write_truth(path: &Path, seed: u64, rows: &[TruthRow]) -> Result<()> {
    write_rows(
        path,
        seed,
        &TRUTH_HEADER,
        rows.iter().map(|t| {
            vec![
                t.id.clone(),
                t.base_risk.to_string(),
                t.risk.to_string(),
                t.label.to_string(),
            ]
        }),
    )
}

pub fn read_truth(path: &Path) -> Result<Report<TruthRow>> {
    let r = read_rows(path, &TRUTH_HEADER)?;
    r.map(|l, rec| {
        Ok(TruthRow {
            id: rec[0].to_string(),
            base_risk: r.num(l, &rec[1])?,
            risk: r.num(l, &rec[2])?,
            label: r.int(l, &rec[3])?,
        })
    })
}
