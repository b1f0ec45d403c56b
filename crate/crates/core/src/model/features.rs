use super::config::Imputation;
use crate::graph::{AttrMatrix, Bcn};
use crate::numerics::Matrix;

/// Per-column affine standardisation fitted on observed values.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    pub fn identity(cols: usize) -> Self {
        Scaler {
            mean: vec![0.0; cols],
            scale: vec![1.0; cols],
        }
    }

    /// Fits on the given rows (all rows when `rows` is `None`), ignoring
    /// masked entries. Constant or unobserved columns get unit scale.
    pub fn fit(attrs: &AttrMatrix, rows: Option<&[u32]>, policy: Imputation) -> Self {
        let cols = attrs.cols();
        if policy == Imputation::Zero {
            return Scaler::identity(cols);
        }
        let mut sum = vec![0.0; cols];
        let mut sq = vec![0.0; cols];
        let mut count = vec![0usize; cols];
        let mut visit = |r: usize| {
            let (vals, miss) = (attrs.row(r), attrs.missing_row(r));
            for c in 0..cols {
                if !miss[c] {
                    sum[c] += vals[c];
                    sq[c] += vals[c] * vals[c];
                    count[c] += 1;
                }
            }
        };
        match rows {
            Some(rows) => rows.iter().for_each(|&r| visit(r as usize)),
            None => (0..attrs.rows()).for_each(&mut visit),
        }
        let mut s = Scaler::identity(cols);
        for c in 0..cols {
            if count[c] == 0 {
                continue;
            }
            let n = count[c] as f64;
            let mean = sum[c] / n;
            let var = (sq[c] / n - mean * mean).max(0.0);
            s.mean[c] = mean;
            s.scale[c] = if var > 1e-24 { var.sqrt() } else { 1.0 };
        }
        s
    }

    /// Standardised row with masked entries at zero.
    pub fn transform(&self, attrs: &AttrMatrix) -> Matrix {
        let cols = attrs.cols();
        let mut out = Matrix::zeros(attrs.rows(), cols);
        for r in 0..attrs.rows() {
            let (vals, miss) = (attrs.row(r), attrs.missing_row(r));
            let row = out.row_mut(r);
            for c in 0..cols {
                if !miss[c] {
                    row[c] = (vals[c] - self.mean[c]) / self.scale[c];
                }
            }
        }
        out
    }
}

/// Model-ready attribute matrices for every node and link type of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInputs {
    pub node_x: Vec<Matrix>,
    pub link_x: Vec<Matrix>,
}

impl GraphInputs {
    pub fn encode(g: &Bcn, node_scalers: &[Scaler], link_scalers: &[Scaler]) -> Self {
        GraphInputs {
            node_x: g
                .node_stores()
                .iter()
                .zip(node_scalers)
                .map(|(n, s)| s.transform(n.attrs()))
                .collect(),
            link_x: g
                .link_stores()
                .iter()
                .zip(link_scalers)
                .map(|(l, s)| s.transform(l.attrs()))
                .collect(),
        }
    }
}

/// Fits one scaler per node type and link type. The target type is fitted
/// on `train_targets` only.
pub fn fit_scalers(
    g: &Bcn,
    target_type: usize,
    train_targets: &[u32],
    policy: Imputation,
) -> (Vec<Scaler>, Vec<Scaler>) {
    let nodes = g
        .node_stores()
        .iter()
        .enumerate()
        .map(|(ty, n)| {
            let rows = (ty == target_type).then_some(train_targets);
            Scaler::fit(n.attrs(), rows, policy)
        })
        .collect();
    let links = g
        .link_stores()
        .iter()
        .map(|l| Scaler::fit(l.attrs(), None, policy))
        .collect();
    (nodes, links)
}
