use rand::distr::weighted::WeightedIndex;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Pareto, Poisson, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use super::config::SynthConfig;
use super::lift::view_neighbors;
use crate::error::{HidamError, Result};
use crate::graph::{
    build_graph, resolve_all, view_groups, BankingWidths, Bcn, FeatureSet, LinkRow, LinkTable,
    MetaPathSpec, NodeRow, NodeTable, Schema,
};
use crate::numerics::{mix, rng_from};
use crate::train::{LabeledCompany, LabeledSet};

/// Per-company quantities behind the labels. Analysis only.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRow {
    pub id: String,
    /// Standardised risk from the company's own (unmasked) attributes.
    pub base_risk: f64,
    /// Risk after contagion.
    pub risk: f64,
    pub label: u8,
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub graph: Bcn,
    pub labels: LabeledSet,
    pub truth: Vec<TruthRow>,
    /// Company column groups, in column order.
    pub feature_sets: Vec<FeatureSet>,
    pub config: SynthConfig,
}

pub fn synth_schema(cfg: &SynthConfig) -> Schema {
    Schema::banking(BankingWidths {
        company: cfg.company_attributes(),
        person: cfg.person_attributes,
        industry: cfg.industry_attributes,
        transfer: cfg.transfer_attributes,
        belong: cfg.belong_attributes,
        updownstream: cfg.updownstream_attributes,
        control: cfg.control_attributes,
        invest: cfg.invest_attributes,
    })
}

pub fn company_id(i: usize) -> String {
    format!("C{i:06}")
}

fn person_id(i: usize) -> String {
    format!("P{i:06}")
}

fn industry_id(i: usize) -> String {
    format!("I{i:04}")
}

// Independent random streams per generation stage.
const STRUCTURE: u64 = 1;
const ATTRIBUTES: u64 = 2;
const RISK: u64 = 3;
const MASK: u64 = 4;
const TIME: u64 = 5;

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<Option<f64>> {
    (0..n).map(|_| Some(rng.sample(StandardNormal))).collect()
}

fn pareto_weights(rng: &mut ChaCha8Rng, n: usize, shape: f64) -> Vec<f64> {
    let p = Pareto::new(1.0, shape).expect("shape validated");
    (0..n).map(|_| p.sample(rng)).collect()
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive rate").sample(rng) as usize
}

struct Edges {
    rows: Vec<(String, String)>,
}

impl Edges {
    fn new() -> Self {
        Edges { rows: Vec::new() }
    }

    fn push(&mut self, a: String, b: String) {
        self.rows.push((a, b));
    }

    fn table(self, name: &str, width: usize, rng: &mut ChaCha8Rng) -> LinkTable {
        LinkTable {
            type_name: name.into(),
            columns: (0..width).map(|c| format!("{name}_{c}")).collect(),
            rows: self
                .rows
                .into_iter()
                .map(|(src, dst)| LinkRow {
                    src,
                    dst,
                    values: normals(rng, width),
                })
                .collect(),
        }
    }
}

/// Draws a target different from `avoid` (when possible) from `pick`.
fn other(rng: &mut ChaCha8Rng, avoid: usize, n: usize, mut pick: impl FnMut(&mut ChaCha8Rng) -> usize) -> Option<usize> {
    if n < 2 {
        return None;
    }
    for _ in 0..32 {
        let v = pick(rng);
        if v != avoid {
            return Some(v);
        }
    }
    None
}

fn structure(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> [Edges; 5] {
    let (nc, np, ni) = (cfg.companies, cfg.persons, cfg.industries);
    let mut transfer = Edges::new();
    let mut belong = Edges::new();
    let mut updown = Edges::new();
    let mut control = Edges::new();
    let mut invest = Edges::new();

    let k = cfg.updownstream_degree.min(ni.saturating_sub(1));
    for i in 0..ni {
        let mut picks: Vec<usize> = sample(rng, ni - 1, k).into_vec();
        picks.sort_unstable();
        for j in picks {
            let j = if j >= i { j + 1 } else { j };
            updown.push(industry_id(i), industry_id(j));
        }
    }

    for c in 0..nc {
        if rng.random::<f64>() < cfg.belong_coverage {
            let i = rng.random_range(0..ni);
            belong.push(company_id(c), industry_id(i));
        }
    }

    let controllers = WeightedIndex::new(pareto_weights(rng, np, cfg.control_tail)).expect("positive weights");
    for c in 0..nc {
        if rng.random::<f64>() < cfg.control_coverage {
            control.push(person_id(controllers.sample(rng)), company_id(c));
        }
    }

    let activity = pareto_weights(rng, nc, cfg.transfer_tail);
    let mean_activity = activity.iter().sum::<f64>() / nc as f64;
    let popularity = WeightedIndex::new(pareto_weights(rng, nc, cfg.transfer_tail)).expect("positive weights");
    for (c, a) in activity.iter().enumerate() {
        let degree = poisson(rng, cfg.transfer_degree * a / mean_activity);
        for _ in 0..degree {
            if let Some(v) = other(rng, c, nc, |r| popularity.sample(r)) {
                transfer.push(company_id(c), company_id(v));
            }
        }
    }

    for c in 0..nc {
        for _ in 0..poisson(rng, cfg.invest_degree) {
            if let Some(v) = other(rng, c, nc, |r| r.random_range(0..nc)) {
                invest.push(company_id(c), company_id(v));
            }
        }
    }
    [transfer, belong, updown, control, invest]
}

/// Builds a synthetic banking network whose default labels depend on the
/// companies' own attributes and, through contagion, on their neighbors.
pub fn generate(cfg: &SynthConfig) -> Result<SynthDataset> {
    cfg.validate()?;
    let schema = synth_schema(cfg);
    let nc = cfg.companies;
    let width = cfg.company_attributes();

    let mut rng = rng_from(mix(cfg.seed, STRUCTURE));
    let [transfer, belong, updown, control, invest] = structure(cfg, &mut rng);

    let mut rng = rng_from(mix(cfg.seed, ATTRIBUTES));
    let company_x: Vec<Vec<f64>> = (0..nc)
        .map(|_| (0..width).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let node_table = |name: &str, prefix: fn(usize) -> String, n: usize, w: usize, rng: &mut ChaCha8Rng| NodeTable {
        type_name: name.into(),
        columns: (0..w).map(|c| format!("{}_{c}", name.to_lowercase())).collect(),
        rows: (0..n)
            .map(|i| NodeRow {
                id: prefix(i),
                values: normals(rng, w),
            })
            .collect(),
    };
    let persons = node_table("Person", person_id, cfg.persons, cfg.person_attributes, &mut rng);
    let industries = node_table("Industry", industry_id, cfg.industries, cfg.industry_attributes, &mut rng);
    let links = vec![
        transfer.table("transfer", cfg.transfer_attributes, &mut rng),
        belong.table("belong", cfg.belong_attributes, &mut rng),
        updown.table("updownstream", cfg.updownstream_attributes, &mut rng),
        control.table("control", cfg.control_attributes, &mut rng),
        invest.table("invest", cfg.invest_attributes, &mut rng),
    ];

    let (masks, feature_sets) = masks(cfg, nc)?;
    let mut columns = Vec::with_capacity(width);
    for f in &cfg.feature_sets {
        columns.extend((0..f.columns).map(|c| format!("{}_{c}", f.name)));
    }
    let companies = NodeTable {
        type_name: "Company".into(),
        columns,
        rows: (0..nc)
            .map(|i| NodeRow {
                id: company_id(i),
                values: company_x[i]
                    .iter()
                    .zip(&masks[i])
                    .map(|(&v, &m)| (!m).then_some(v))
                    .collect(),
            })
            .collect(),
    };
    let graph = build_graph(schema, &[companies, persons, industries], &links)?;

    let base = base_risk(cfg, &company_x);
    let paths = resolve_all(&MetaPathSpec::catalog(), graph.schema())?;
    let mut risk = base.clone();
    for grp in view_groups(&paths) {
        let gamma = cfg.contagion.get(&grp.name);
        if gamma == 0.0 || grp.name == "all" {
            continue;
        }
        for (u, r) in risk.iter_mut().enumerate() {
            let nb = view_neighbors(&graph, &grp.paths, u as u32)?;
            if !nb.is_empty() {
                *r += gamma * nb.iter().map(|&v| base[v as usize]).sum::<f64>() / nb.len() as f64;
            }
        }
    }

    let positives = (cfg.base_rate * nc as f64).round() as usize;
    let mut order: Vec<usize> = (0..nc).collect();
    order.sort_by(|&a, &b| risk[b].total_cmp(&risk[a]).then(a.cmp(&b)));
    let mut label = vec![0u8; nc];
    for &i in &order[..positives] {
        label[i] = 1;
    }

    let mut rng = rng_from(mix(cfg.seed, TIME));
    let labels = LabeledSet::new(
        (0..nc)
            .map(|i| LabeledCompany {
                id: company_id(i),
                label: label[i],
                timestamp: Some(rng.random_range(0..cfg.horizon_days)),
            })
            .collect(),
    )?;
    let truth = (0..nc)
        .map(|i| TruthRow {
            id: company_id(i),
            base_risk: base[i],
            risk: risk[i],
            label: label[i],
        })
        .collect();
    Ok(SynthDataset {
        graph,
        labels,
        truth,
        feature_sets,
        config: cfg.clone(),
    })
}

/// Hidden linear score over a random subset of columns plus noise,
/// standardised to zero mean and unit variance.
fn base_risk(cfg: &SynthConfig, x: &[Vec<f64>]) -> Vec<f64> {
    let width = cfg.company_attributes();
    let mut rng = rng_from(mix(cfg.seed, RISK));
    let k = ((cfg.risk_column_fraction * width as f64).round() as usize).clamp(1, width);
    let cols = sample(&mut rng, width, k).into_vec();
    let mut w: Vec<f64> = cols.iter().map(|_| rng.sample(StandardNormal)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    w.iter_mut().for_each(|v| *v /= norm);
    let noise = Normal::new(0.0, cfg.risk_noise).expect("validated noise");
    let mut r: Vec<f64> = x
        .iter()
        .map(|row| cols.iter().zip(&w).map(|(&c, &wc)| wc * row[c]).sum::<f64>() + noise.sample(&mut rng))
        .collect();
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    let sd = (r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt().max(1e-12);
    r.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    r
}

/// Gaussian-copula masks: a per-company factor shared by all columns plus
/// per-column noise, thresholded at each feature set's target quantile.
fn masks(cfg: &SynthConfig, nc: usize) -> Result<(Vec<Vec<bool>>, Vec<FeatureSet>)> {
    let std = StatNormal::new(0.0, 1.0).map_err(|e| HidamError::InvalidArgument(e.to_string()))?;
    let rho = cfg.missing_correlation;
    let mut rng = rng_from(mix(cfg.seed, MASK));
    let mut sets = Vec::new();
    let mut start = 0;
    let mut thresholds = Vec::new();
    for f in &cfg.feature_sets {
        sets.push(FeatureSet {
            name: f.name.clone(),
            columns: (start..start + f.columns).collect(),
        });
        let t = match f.missing_rate {
            r if r <= 0.0 => f64::NEG_INFINITY,
            r if r >= 1.0 => f64::INFINITY,
            r => std.inverse_cdf(r),
        };
        thresholds.extend(std::iter::repeat_n(t, f.columns));
        start += f.columns;
    }
    let out = (0..nc)
        .map(|_| {
            let shared: f64 = rng.sample(StandardNormal);
            thresholds
                .iter()
                .map(|&t| {
                    let own: f64 = rng.sample(StandardNormal);
                    rho.sqrt() * shared + (1.0 - rho).sqrt() * own < t
                })
                .collect()
        })
        .collect();
    Ok((out, sets))
}
