#![allow(dead_code, clippy::single_range_in_vec_init)]

use hidam::graph::{build_graph, BankingWidths, Bcn, LinkRow, LinkTable, MetaPath, NodeRow, NodeTable, Schema};
use hidam::numerics::rng_from;
use rand::Rng;

/// Random banking graph with at most `max_nodes` nodes in total. Duplicate
/// links and self-loops are allowed.
pub fn random_bcn(seed: u64, max_nodes: usize) -> Bcn {
    let mut rng = rng_from(seed);
    let companies = rng.random_range(2..=max_nodes / 2);
    let persons = rng.random_range(1..=(max_nodes - companies) / 2);
    let industries = rng.random_range(1..=(max_nodes - companies - persons).max(1));
    let schema = Schema::banking(BankingWidths {
        company: 2,
        person: 1,
        industry: 0,
        transfer: 1,
        belong: 0,
        updownstream: 0,
        control: 0,
        invest: 1,
    });
    let nodes = |name: &str, prefix: &str, n: usize, width: usize, rng: &mut rand_chacha::ChaCha8Rng| NodeTable {
        type_name: name.into(),
        columns: (0..width).map(|c| format!("x{c}")).collect(),
        rows: (0..n)
            .map(|i| NodeRow {
                id: format!("{prefix}{i}"),
                values: (0..width)
                    .map(|_| (rng.random::<f64>() > 0.3).then(|| rng.random_range(-1.0..1.0)))
                    .collect(),
            })
            .collect(),
    };
    let nt = vec![
        nodes("Company", "c", companies, 2, &mut rng),
        nodes("Person", "p", persons, 1, &mut rng),
        nodes("Industry", "i", industries, 0, &mut rng),
    ];
    let mut links = |name: &str, sp: &str, sn: usize, tp: &str, tn: usize, width: usize| {
        let count = rng.random_range(0..=2 * sn.max(tn));
        LinkTable {
            type_name: name.into(),
            columns: (0..width).map(|c| format!("w{c}")).collect(),
            rows: (0..count)
                .map(|_| LinkRow {
                    src: format!("{sp}{}", rng.random_range(0..sn)),
                    dst: format!("{tp}{}", rng.random_range(0..tn)),
                    values: (0..width).map(|_| Some(rng.random_range(-1.0..1.0))).collect(),
                })
                .collect(),
        }
    };
    let c = companies;
    let lt = vec![
        links("transfer", "c", c, "c", c, 1),
        links("belong", "c", c, "i", industries, 0),
        links("updownstream", "i", industries, "i", industries, 0),
        links("control", "p", persons, "c", c, 0),
        links("invest", "c", c, "c", c, 1),
    ];
    build_graph(schema, &nt, &lt).expect("random graph is valid")
}

/// Every instance of `mp` rooted at `root` as `(links, interior nodes,
/// terminal)`, found by scanning the full link list at each step.
pub fn dfs_instances(g: &Bcn, mp: &MetaPath, root: u32) -> Vec<(Vec<u32>, Vec<u32>, u32)> {
    use hidam::graph::Direction;
    fn go(
        g: &Bcn,
        mp: &MetaPath,
        root: u32,
        at: u32,
        links: &mut Vec<u32>,
        nodes: &mut Vec<u32>,
        out: &mut Vec<(Vec<u32>, Vec<u32>, u32)>,
    ) {
        let k = links.len();
        if k == mp.steps.len() {
            if at != root {
                let mut interior = nodes.clone();
                interior.pop();
                out.push((links.clone(), interior, at));
            }
            return;
        }
        let step = mp.steps[k];
        let store = g.link_store(step.link_type);
        for l in 0..store.len() as u32 {
            let (s, t) = (store.source(l), store.target(l));
            let mut nexts = Vec::new();
            if matches!(step.dir, Direction::Fwd | Direction::Both) && s == at {
                nexts.push(t);
            }
            if matches!(step.dir, Direction::Rev | Direction::Both) && t == at && !(step.dir == Direction::Both && s == t) {
                nexts.push(s);
            }
            for next in nexts {
                links.push(l);
                nodes.push(next);
                go(g, mp, root, next, links, nodes, out);
                links.pop();
                nodes.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(g, mp, root, root, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

/// Fraction of (positive, negative) pairs ranked correctly, ties count half.
pub fn brute_auc(scores: &[f64], labels: &[f64]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] == 1.0 && labels[j] == 0.0 {
                den += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Largest |TPR − FPR| over thresholds "score ≥ t" at every distinct score.
pub fn brute_ks(scores: &[f64], labels: &[f64]) -> Option<f64> {
    let pos = labels.iter().filter(|&&l| l == 1.0).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return None;
    }
    let mut best: f64 = 0.0;
    for &t in scores {
        let tp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && **l == 1.0).count() as f64;
        let fp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && **l == 0.0).count() as f64;
        best = best.max((tp / pos - fp / neg).abs());
    }
    Some(best)
}

/// Largest deviations from the attention invariants seen on one random
/// (graph, config, seed) triple.
#[derive(Debug, Clone, Copy, Default)]
pub struct AttentionCheck {
    pub alpha_sum: f64,
    pub beta_sum: f64,
    pub z_norm: f64,
    pub shift: f64,
    pub permutation: f64,
    /// (node, path) pairs whose fused vector is exactly zero and so has no
    /// unit norm.
    pub zero_vectors: usize,
    pub instances: usize,
}

impl AttentionCheck {
    pub fn merge(self, o: AttentionCheck) -> AttentionCheck {
        AttentionCheck {
            alpha_sum: self.alpha_sum.max(o.alpha_sum),
            beta_sum: self.beta_sum.max(o.beta_sum),
            z_norm: self.z_norm.max(o.z_norm),
            shift: self.shift.max(o.shift),
            permutation: self.permutation.max(o.permutation),
            zero_vectors: self.zero_vectors + o.zero_vectors,
            instances: self.instances + o.instances,
        }
    }

    pub fn worst(&self) -> f64 {
        [self.alpha_sum, self.beta_sum, self.z_norm, self.shift, self.permutation]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn check_attention(seed: u64) -> AttentionCheck {
    use hidam::model::{instance_fusion, Hidam, ModelConfig, Scorer};
    use hidam::numerics::{norm2, softmax_over_group};
    use rand::seq::SliceRandom;

    let g = random_bcn(seed, 50);
    let mut rng = rng_from(seed ^ 0xA77E);
    let config = ModelConfig {
        dim: [2, 4, 8][rng.random_range(0..3)],
        hidden_dim: 4,
        neighbor_cap: [1, 3, 10][rng.random_range(0..3)],
        semantic_dim: rng.random_bool(0.5).then_some(3),
        ..Default::default()
    };
    let mut m = Hidam::new(g.schema(), config, &hidam::graph::MetaPathSpec::catalog(), seed).unwrap();
    let all: Vec<u32> = (0..g.company_count() as u32).collect();
    m.fit_scalers(&g, &all).unwrap();
    let inputs = m.encode_inputs(&g).unwrap();
    let trace = m.forward_batch(&g, &inputs, &all, rng.random()).unwrap();

    let mut c = AttentionCheck::default();
    for n in &trace.nodes {
        c.beta_sum = c.beta_sum.max((n.semantic.beta.iter().sum::<f64>() - 1.0).abs());
        for (p, pt) in n.paths.iter().enumerate() {
            let rec = &pt.record;
            let k = rec.alpha.len();
            c.instances += k;
            if norm2(&rec.z) == 0.0 {
                c.zero_vectors += 1;
            } else {
                c.z_norm = c.z_norm.max((norm2(&rec.z) - 1.0).abs());
            }
            if k == 0 {
                continue;
            }
            c.alpha_sum = c.alpha_sum.max((rec.alpha.iter().sum::<f64>() - 1.0).abs());
            let shift = rng.random_range(-50.0..50.0);
            let shifted: Vec<f64> = rec.scores.iter().map(|s| s + shift).collect();
            let a = softmax_over_group(&shifted, &[0..k]).unwrap();
            for (x, y) in a.iter().zip(&rec.alpha) {
                c.shift = c.shift.max((x - y).abs());
            }
            let segs = trace.segments(pt);
            let per = segs.len() / k;
            let mut order: Vec<usize> = (0..k).collect();
            order.shuffle(&mut rng);
            let permuted: Vec<&[f64]> = order.iter().flat_map(|&i| segs[i * per..(i + 1) * per].iter().copied()).collect();
            let again = instance_fusion(trace.h_u(n), &permuted, per, m.instance_weights(p)).unwrap();
            for (x, y) in again.z.iter().zip(&rec.z) {
                c.permutation = c.permutation.max((x - y).abs());
            }
            for (j, &i) in order.iter().enumerate() {
                c.permutation = c.permutation.max((again.alpha[j] - rec.alpha[i]).abs());
            }
        }
    }
    c
}
