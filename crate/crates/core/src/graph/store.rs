use std::collections::HashMap;

use super::schema::Schema;
use crate::error::{HidamError, Result};

/// Attribute values with an explicit missing mask. Missing slots hold 0.0.
#[derive(Debug, Clone, PartialEq)]
pub struct AttrMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    missing: Vec<bool>,
}

impl AttrMatrix {
    pub fn empty(cols: usize) -> Self {
        AttrMatrix {
            rows: 0,
            cols,
            values: Vec::new(),
            missing: Vec::new(),
        }
    }

    fn push_row(&mut self, row: &[Option<f64>]) {
        debug_assert_eq!(row.len(), self.cols);
        for v in row {
            self.values.push(v.unwrap_or(0.0));
            self.missing.push(v.is_none());
        }
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn missing_row(&self, r: usize) -> &[bool] {
        &self.missing[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let i = r * self.cols + c;
        (!self.missing[i]).then(|| self.values[i])
    }

    pub fn row_options(&self, r: usize) -> Vec<Option<f64>> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }
}

/// Compressed adjacency: `items[offsets[v]..offsets[v + 1]]` are link indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl Csr {
    fn build(n: usize, keys: &[u32]) -> Self {
        let mut offsets = vec![0u32; n + 1];
        for &k in keys {
            offsets[k as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut items = vec![0u32; keys.len()];
        for (link, &k) in keys.iter().enumerate() {
            items[cursor[k as usize] as usize] = link as u32;
            cursor[k as usize] += 1;
        }
        Csr { offsets, items }
    }

    #[inline]
    pub fn get(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.items[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeStore {
    pub name: String,
    pub columns: Vec<String>,
    ids: Vec<String>,
    index: HashMap<String, u32>,
    attrs: AttrMatrix,
}

impl NodeStore {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn attrs(&self) -> &AttrMatrix {
        &self.attrs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkStore {
    pub name: String,
    pub columns: Vec<String>,
    pub source_type: usize,
    pub target_type: usize,
    src: Vec<u32>,
    dst: Vec<u32>,
    attrs: AttrMatrix,
    outgoing: Csr,
    incoming: Csr,
}

impl LinkStore {
    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    #[inline]
    pub fn source(&self, link: u32) -> u32 {
        self.src[link as usize]
    }

    #[inline]
    pub fn target(&self, link: u32) -> u32 {
        self.dst[link as usize]
    }

    pub fn sources(&self) -> &[u32] {
        &self.src
    }

    pub fn targets(&self) -> &[u32] {
        &self.dst
    }

    /// Links whose source is `node`.
    #[inline]
    pub fn outgoing(&self, node: u32) -> &[u32] {
        self.outgoing.get(node)
    }

    /// Links whose target is `node`.
    #[inline]
    pub fn incoming(&self, node: u32) -> &[u32] {
        self.incoming.get(node)
    }

    pub fn attrs(&self) -> &AttrMatrix {
        &self.attrs
    }
}

/// A typed node handle: node-type index plus row within that type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef {
    pub ty: usize,
    pub idx: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeRow {
    pub id: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeTable {
    pub type_name: String,
    /// Attribute column names; may be empty, in which case names are generated.
    pub columns: Vec<String>,
    pub rows: Vec<NodeRow>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkRow {
    pub src: String,
    pub dst: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkTable {
    pub type_name: String,
    pub columns: Vec<String>,
    pub rows: Vec<LinkRow>,
}

/// Immutable attributed heterogeneous graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Bcn {
    schema: Schema,
    nodes: Vec<NodeStore>,
    links: Vec<LinkStore>,
}

fn column_names(given: &[String], width: usize, prefix: &str) -> Vec<String> {
    if given.len() == width {
        given.to_vec()
    } else {
        (0..width).map(|i| format!("{prefix}{i}")).collect()
    }
}

/// Sources, targets, attributes and column names of one link type.
type StagedLinks = (Vec<u32>, Vec<u32>, AttrMatrix, Vec<String>);

/// Validates the tables against the schema and builds both adjacency
/// directions for every link type. Types without a table are empty.
pub fn build_graph(schema: Schema, node_tables: &[NodeTable], link_tables: &[LinkTable]) -> Result<Bcn> {
    schema.validate()?;

    let mut nodes: Vec<NodeStore> = schema
        .node_types
        .iter()
        .map(|t| NodeStore {
            name: t.name.clone(),
            columns: column_names(&[], t.attributes, "a"),
            ids: Vec::new(),
            index: HashMap::new(),
            attrs: AttrMatrix::empty(t.attributes),
        })
        .collect();

    for table in node_tables {
        let ty = schema.node_type_index(&table.type_name)?;
        let width = schema.node_types[ty].attributes;
        if !table.columns.is_empty() && table.columns.len() != width {
            return Err(HidamError::ArityMismatch {
                kind: "node table",
                type_name: table.type_name.clone(),
                row: 0,
                expected: width,
                found: table.columns.len(),
            });
        }
        let store = &mut nodes[ty];
        store.columns = column_names(&table.columns, width, "a");
        for (row, r) in table.rows.iter().enumerate() {
            if r.values.len() != width {
                return Err(HidamError::ArityMismatch {
                    kind: "node",
                    type_name: table.type_name.clone(),
                    row,
                    expected: width,
                    found: r.values.len(),
                });
            }
            if store.index.contains_key(&r.id) {
                return Err(HidamError::DuplicateId {
                    kind: "node",
                    type_name: table.type_name.clone(),
                    row,
                    id: r.id.clone(),
                });
            }
            store.index.insert(r.id.clone(), store.ids.len() as u32);
            store.ids.push(r.id.clone());
            store.attrs.push_row(&r.values);
        }
    }

    let mut staged: Vec<StagedLinks> = schema
        .link_types
        .iter()
        .map(|t| {
            (
                Vec::new(),
                Vec::new(),
                AttrMatrix::empty(t.attributes),
                column_names(&[], t.attributes, "e"),
            )
        })
        .collect();

    for table in link_tables {
        let lt = schema.link_type_index(&table.type_name)?;
        let def = &schema.link_types[lt];
        let (s_ty, t_ty) = (
            schema.node_type_index(&def.source)?,
            schema.node_type_index(&def.target)?,
        );
        if !table.columns.is_empty() && table.columns.len() != def.attributes {
            return Err(HidamError::ArityMismatch {
                kind: "link table",
                type_name: table.type_name.clone(),
                row: 0,
                expected: def.attributes,
                found: table.columns.len(),
            });
        }
        let entry = &mut staged[lt];
        entry.3 = column_names(&table.columns, def.attributes, "e");
        for (row, r) in table.rows.iter().enumerate() {
            if r.values.len() != def.attributes {
                return Err(HidamError::ArityMismatch {
                    kind: "link",
                    type_name: table.type_name.clone(),
                    row,
                    expected: def.attributes,
                    found: r.values.len(),
                });
            }
            let resolve = |id: &str, ty: usize| {
                nodes[ty]
                    .index_of(id)
                    .ok_or_else(|| HidamError::DanglingEndpoint {
                        link_type: table.type_name.clone(),
                        row,
                        id: id.into(),
                        node_type: nodes[ty].name.clone(),
                    })
            };
            let s = resolve(&r.src, s_ty)?;
            let t = resolve(&r.dst, t_ty)?;
            entry.0.push(s);
            entry.1.push(t);
            entry.2.push_row(&r.values);
        }
    }

    let links = schema
        .link_types
        .iter()
        .zip(staged)
        .map(|(def, (src, dst, attrs, columns))| {
            let source_type = schema.node_type_index(&def.source).expect("validated");
            let target_type = schema.node_type_index(&def.target).expect("validated");
            let outgoing = Csr::build(nodes[source_type].len(), &src);
            let incoming = Csr::build(nodes[target_type].len(), &dst);
            LinkStore {
                name: def.name.clone(),
                columns,
                source_type,
                target_type,
                src,
                dst,
                attrs,
                outgoing,
                incoming,
            }
        })
        .collect();

    Ok(Bcn {
        schema,
        nodes,
        links,
    })
}

impl Bcn {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn node_store(&self, ty: usize) -> &NodeStore {
        &self.nodes[ty]
    }

    pub fn link_store(&self, lt: usize) -> &LinkStore {
        &self.links[lt]
    }

    pub fn node_stores(&self) -> &[NodeStore] {
        &self.nodes
    }

    pub fn link_stores(&self) -> &[LinkStore] {
        &self.links
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().map(|n| n.len()).sum()
    }

    pub fn link_count(&self) -> usize {
        self.links.iter().map(|l| l.len()).sum()
    }

    pub fn target_type(&self) -> Result<usize> {
        self.schema.target_type()
    }

    pub fn company_count(&self) -> usize {
        self.target_type().map(|t| self.nodes[t].len()).unwrap_or(0)
    }

    /// Resolves an external company id to its typed handle.
    pub fn company(&self, id: &str) -> Option<NodeRef> {
        let ty = self.target_type().ok()?;
        self.nodes[ty].index_of(id).map(|idx| NodeRef { ty, idx })
    }

    pub fn node_id(&self, node: NodeRef) -> &str {
        &self.nodes[node.ty].ids[node.idx as usize]
    }

    /// Exports the graph back to tables, in storage order.
    pub fn to_tables(&self) -> (Vec<NodeTable>, Vec<LinkTable>) {
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeTable {
                type_name: n.name.clone(),
                columns: n.columns.clone(),
                rows: n
                    .ids
                    .iter()
                    .enumerate()
                    .map(|(i, id)| NodeRow {
                        id: id.clone(),
                        values: n.attrs.row_options(i),
                    })
                    .collect(),
            })
            .collect();
        let links = self
            .links
            .iter()
            .map(|l| {
                let s = &self.nodes[l.source_type];
                let t = &self.nodes[l.target_type];
                LinkTable {
                    type_name: l.name.clone(),
                    columns: l.columns.clone(),
                    rows: (0..l.len())
                        .map(|i| LinkRow {
                            src: s.ids[l.src[i] as usize].clone(),
                            dst: t.ids[l.dst[i] as usize].clone(),
                            values: l.attrs.row_options(i),
                        })
                        .collect(),
                }
            })
            .collect();
        (nodes, links)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::schema::BankingWidths;

    pub(crate) fn tiny_schema() -> Schema {
        Schema::banking(BankingWidths {
            company: 2,
            person: 1,
            industry: 1,
            transfer: 1,
            belong: 0,
            updownstream: 1,
            control: 1,
            invest: 1,
        })
    }

    fn company(id: &str) -> NodeRow {
        NodeRow {
            id: id.into(),
            values: vec![Some(1.0), None],
        }
    }

    #[test]
    fn empty_tables_give_empty_graph() {
        let g = build_graph(tiny_schema(), &[], &[]).unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.link_count(), 0);
    }

    #[test]
    fn minimal_transfer_resolves_both_directions() {
        let nodes = vec![NodeTable {
            type_name: "Company".into(),
            columns: vec![],
            rows: vec![company("a"), company("b")],
        }];
        let links = vec![LinkTable {
            type_name: "transfer".into(),
            columns: vec![],
            rows: vec![LinkRow {
                src: "a".into(),
                dst: "b".into(),
                values: vec![Some(5.0)],
            }],
        }];
        let g = build_graph(tiny_schema(), &nodes, &links).unwrap();
        let t = g.link_store(0);
        let a = g.company("a").unwrap().idx;
        let b = g.company("b").unwrap().idx;
        assert_eq!(t.outgoing(a), &[0]);
        assert_eq!(t.incoming(b), &[0]);
        assert!(t.outgoing(b).is_empty());
        assert_eq!(g.node_store(0).attrs().get(0, 1), None);
        assert_eq!(g.node_store(0).attrs().get(0, 0), Some(1.0));
    }

    #[test]
    fn dangling_endpoint_names_the_id() {
        let nodes = vec![NodeTable {
            type_name: "Company".into(),
            columns: vec![],
            rows: vec![company("a")],
        }];
        let links = vec![LinkTable {
            type_name: "transfer".into(),
            columns: vec![],
            rows: vec![LinkRow {
                src: "a".into(),
                dst: "ghost".into(),
                values: vec![None],
            }],
        }];
        let err = build_graph(tiny_schema(), &nodes, &links).unwrap_err();
        assert!(matches!(err, HidamError::DanglingEndpoint { ref id, .. } if id == "ghost"));
        assert!(err.to_string().contains("ghost"));
    }

    #[test]
    fn unknown_type_and_arity_errors() {
        let bad_type = vec![NodeTable {
            type_name: "Bank".into(),
            ..Default::default()
        }];
        assert!(matches!(
            build_graph(tiny_schema(), &bad_type, &[]),
            Err(HidamError::UnknownType { .. })
        ));
        let bad_arity = vec![NodeTable {
            type_name: "Company".into(),
            columns: vec![],
            rows: vec![NodeRow {
                id: "x".into(),
                values: vec![Some(1.0)],
            }],
        }];
        assert!(matches!(
            build_graph(tiny_schema(), &bad_arity, &[]),
            Err(HidamError::ArityMismatch { row: 0, .. })
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let nodes = vec![NodeTable {
            type_name: "Company".into(),
            columns: vec![],
            rows: vec![company("a"), company("a")],
        }];
        assert!(matches!(
            build_graph(tiny_schema(), &nodes, &[]),
            Err(HidamError::DuplicateId { row: 1, .. })
        ));
    }

    #[test]
    fn tables_roundtrip() {
        let nodes = vec![NodeTable {
            type_name: "Company".into(),
            columns: vec!["x".into(), "y".into()],
            rows: vec![company("a"), company("b")],
        }];
        let links = vec![LinkTable {
            type_name: "invest".into(),
            columns: vec!["pct".into()],
            rows: vec![LinkRow {
                src: "b".into(),
                dst: "a".into(),
                values: vec![Some(0.3)],
            }],
        }];
        let g = build_graph(tiny_schema(), &nodes, &links).unwrap();
        let (n, l) = g.to_tables();
        let g2 = build_graph(tiny_schema(), &n, &l).unwrap();
        assert_eq!(g, g2);
    }
}
