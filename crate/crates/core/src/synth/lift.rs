use std::collections::BTreeSet;

use crate::error::Result;
use crate::graph::{metapath_neighbors, Bcn, MetaPath, NeighborGroup, NodeRef};
use crate::train::LabeledSet;

/// Distinct neighbors of company `u` over several meta-paths, uncapped.
pub fn view_neighbors(g: &Bcn, paths: &[MetaPath], u: u32) -> Result<BTreeSet<u32>> {
    let ty = g.target_type()?;
    let mut out = BTreeSet::new();
    for mp in paths {
        out.extend(metapath_neighbors(g, NodeRef { ty, idx: u }, mp)?);
    }
    Ok(out)
}

/// Default contagion statistics for one group of meta-paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewLift {
    pub view: String,
    /// Labeled companies with at least one defaulted neighbor.
    pub with_default_neighbor: usize,
    pub defaults_with: usize,
    pub without_default_neighbor: usize,
    pub defaults_without: usize,
    /// `(p_with / p_without − 1) · 100`.
    pub lift_percent: Option<f64>,
    /// Share of defaulted companies that have a defaulted neighbor.
    pub default_share: Option<f64>,
    /// Why a statistic is missing, if one is.
    pub undefined: Option<String>,
}

/// Default-rate lift of companies with defaulted meta-path neighbors over
/// those without, per neighbor group. Unlabeled neighbors count as
/// non-defaulted; unlabeled companies are not counted.
pub fn measure_lift(g: &Bcn, labels: &LabeledSet, groups: &[NeighborGroup]) -> Result<Vec<ViewLift>> {
    let resolved = labels.resolve(g)?;
    let mut defaulted = vec![false; g.company_count()];
    for (&t, &y) in resolved.targets.iter().zip(&resolved.labels) {
        defaulted[t as usize] = y == 1.0;
    }
    groups
        .iter()
        .map(|grp| {
            let (mut nw, mut dw, mut nn, mut dn) = (0, 0, 0, 0);
            for (&u, &y) in resolved.targets.iter().zip(&resolved.labels) {
                let hit = view_neighbors(g, &grp.paths, u)?
                    .iter()
                    .any(|&v| defaulted[v as usize]);
                let d = (y == 1.0) as usize;
                if hit {
                    nw += 1;
                    dw += d;
                } else {
                    nn += 1;
                    dn += d;
                }
            }
            let mut undefined = Vec::new();
            let lift_percent = if dw + dn == 0 {
                undefined.push("no defaults");
                None
            } else if nw == 0 || nn == 0 {
                undefined.push("one neighbor group is empty");
                None
            } else if dn == 0 {
                undefined.push("no defaults without defaulted neighbors");
                None
            } else {
                let pw = dw as f64 / nw as f64;
                let pn = dn as f64 / nn as f64;
                Some((pw / pn - 1.0) * 100.0)
            };
            let default_share = (dw + dn > 0).then(|| dw as f64 / (dw + dn) as f64);
            Ok(ViewLift {
                view: grp.name.clone(),
                with_default_neighbor: nw,
                defaults_with: dw,
                without_default_neighbor: nn,
                defaults_without: dn,
                lift_percent,
                default_share,
                undefined: (!undefined.is_empty()).then(|| undefined.join("; ")),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, BankingWidths, LinkRow, LinkTable, MetaPathSpec, NodeRow, NodeTable, Schema};
    use crate::train::LabeledCompany;

    /// c0–c1, c2–c3, c4–c5 transfer pairs; c6, c7 isolated.
    fn eight() -> Bcn {
        let schema = Schema::banking(BankingWidths {
            company: 0,
            person: 0,
            industry: 0,
            transfer: 0,
            belong: 0,
            updownstream: 0,
            control: 0,
            invest: 0,
        });
        let nodes = NodeTable {
            type_name: "Company".into(),
            columns: vec![],
            rows: (0..8)
                .map(|i| NodeRow {
                    id: format!("c{i}"),
                    values: vec![],
                })
                .collect(),
        };
        let pair = |a: usize, b: usize| LinkRow {
            src: format!("c{a}"),
            dst: format!("c{b}"),
            values: vec![],
        };
        let links = LinkTable {
            type_name: "transfer".into(),
            columns: vec![],
            rows: vec![pair(0, 1), pair(1, 0), pair(2, 3), pair(3, 2), pair(4, 5), pair(5, 4)],
        };
        build_graph(schema, &[nodes], &[links]).unwrap()
    }

    fn labels(defaults: &[usize]) -> LabeledSet {
        LabeledSet::new(
            (0..8)
                .map(|i| LabeledCompany {
                    id: format!("c{i}"),
                    label: defaults.contains(&i) as u8,
                    timestamp: None,
                })
                .collect(),
        )
        .unwrap()
    }

    fn fund(g: &Bcn) -> Vec<NeighborGroup> {
        let ctc = MetaPathSpec::catalog()[0].resolve(g.schema()).unwrap();
        vec![NeighborGroup {
            name: "fund".into(),
            paths: vec![ctc],
        }]
    }

    #[test]
    fn hand_counted_lift() {
        let g = eight();
        // Defaults: c0, c1, c2, c6. With defaulted neighbor: c0, c1, c3.
        let l = measure_lift(&g, &labels(&[0, 1, 2, 6]), &fund(&g)).unwrap();
        let v = &l[0];
        assert_eq!((v.with_default_neighbor, v.defaults_with), (3, 2));
        assert_eq!((v.without_default_neighbor, v.defaults_without), (5, 2));
        let expect = ((2.0 / 3.0) / (2.0 / 5.0) - 1.0) * 100.0;
        assert!((v.lift_percent.unwrap() - expect).abs() < 1e-12);
        assert_eq!(v.default_share, Some(0.5));
    }

    #[test]
    fn no_defaults_is_flagged() {
        let g = eight();
        let l = measure_lift(&g, &labels(&[]), &fund(&g)).unwrap();
        assert!(l[0].lift_percent.is_none());
        assert!(l[0].default_share.is_none());
        assert!(l[0].undefined.is_some());
    }
}
