use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::schema::Schema;
use super::store::{Bcn, NodeRef};
use crate::error::{HidamError, Result};
use crate::numerics::rng_from;

/// Traversal direction of one meta-path step relative to the stored link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Fwd,
    Rev,
    /// Either direction; only valid on links between nodes of one type.
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct StepSpec {
    pub link: String,
    pub dir: Direction,
}

impl fmt::Display for StepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.dir {
            Direction::Fwd => "fwd",
            Direction::Rev => "rev",
            Direction::Both => "both",
        };
        write!(f, "{}:{}", self.link, d)
    }
}

impl FromStr for StepSpec {
    type Err = HidamError;

    fn from_str(s: &str) -> Result<Self> {
        let (link, dir) = s.split_once(':').ok_or_else(|| {
            HidamError::InvalidArgument(format!("step `{s}` is not `<link_type>:<fwd|rev|both>`"))
        })?;
        let dir = match dir.trim() {
            "fwd" => Direction::Fwd,
            "rev" => Direction::Rev,
            "both" => Direction::Both,
            other => {
                return Err(HidamError::InvalidArgument(format!(
                    "step `{s}`: unknown direction `{other}`"
                )))
            }
        };
        Ok(StepSpec {
            link: link.trim().to_string(),
            dir,
        })
    }
}

impl TryFrom<String> for StepSpec {
    type Error = HidamError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StepSpec> for String {
    fn from(s: StepSpec) -> String {
        s.to_string()
    }
}

/// A named meta-path template over link types, tagged with its view.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetaPathSpec {
    pub name: String,
    pub view: String,
    pub steps: Vec<StepSpec>,
}

impl MetaPathSpec {
    pub fn new(name: &str, view: &str, steps: &[&str]) -> Result<Self> {
        Ok(MetaPathSpec {
            name: name.into(),
            view: view.into(),
            steps: steps.iter().map(|s| s.parse()).collect::<Result<_>>()?,
        })
    }

    /// Number of intermediate nodes and links between the two end nodes.
    pub fn intermediate_len(&self) -> usize {
        2 * self.steps.len() - 1
    }

    /// The six fund / equity / industry meta-paths of the banking schema.
    pub fn catalog() -> Vec<MetaPathSpec> {
        let mk = |n: &str, v: &str, s: &[&str]| MetaPathSpec::new(n, v, s).expect("static catalog");
        vec![
            mk("CtC", "fund", &["transfer:fwd"]),
            mk("CtCtC", "fund", &["transfer:fwd", "transfer:fwd"]),
            mk("CcPcC", "equity", &["control:rev", "control:fwd"]),
            mk("CiC", "equity", &["invest:fwd"]),
            mk("CbIbC", "industry", &["belong:fwd", "belong:rev"]),
            mk("CbIuIbC", "industry", &["belong:fwd", "updownstream:fwd", "belong:rev"]),
        ]
    }

    /// Type-checks the steps against `schema` and resolves type indices.
    pub fn resolve(&self, schema: &Schema) -> Result<MetaPath> {
        let err = |reason: String| HidamError::MetaPath {
            name: self.name.clone(),
            reason,
        };
        if self.steps.is_empty() {
            return Err(err("no steps".into()));
        }
        let target = schema.target_type()?;
        let mut steps = Vec::with_capacity(self.steps.len());
        let mut node_types = vec![target];
        for (k, step) in self.steps.iter().enumerate() {
            let lt = schema
                .link_type_index(&step.link)
                .map_err(|_| err(format!("step {k}: unknown link type `{}`", step.link)))?;
            let def = &schema.link_types[lt];
            let s = schema.node_type_index(&def.source)?;
            let t = schema.node_type_index(&def.target)?;
            let at = *node_types.last().expect("nonempty");
            let symmetric = s == t && (step.dir == Direction::Both || !def.directed);
            let (from, to, dir) = if symmetric {
                (s, t, Direction::Both)
            } else {
                match step.dir {
                    Direction::Fwd => (s, t, Direction::Fwd),
                    Direction::Rev => (t, s, Direction::Rev),
                    Direction::Both => {
                        return Err(err(format!(
                            "step {k}: `both` requires a link between nodes of one type, `{}` joins {} and {}",
                            def.name, def.source, def.target
                        )))
                    }
                }
            };
            if from != at {
                return Err(err(format!(
                    "step {k} ({step}) starts at {} but the path is at {}",
                    schema.node_types[from].name, schema.node_types[at].name
                )));
            }
            steps.push(ResolvedStep { link_type: lt, dir });
            node_types.push(to);
        }
        if *node_types.last().expect("nonempty") != target {
            return Err(err(format!(
                "path must end at {}",
                schema.node_types[target].name
            )));
        }
        Ok(MetaPath {
            spec: self.clone(),
            steps,
            node_types,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedStep {
    pub link_type: usize,
    pub dir: Direction,
}

/// A meta-path resolved against a schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaPath {
    pub spec: MetaPathSpec,
    pub steps: Vec<ResolvedStep>,
    /// Node type at each position, `steps.len() + 1` entries.
    pub node_types: Vec<usize>,
}

impl MetaPath {
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn view(&self) -> &str {
        &self.spec.view
    }

    pub fn intermediate_len(&self) -> usize {
        2 * self.steps.len() - 1
    }

    /// Element kinds between the two end nodes, in path order.
    pub fn intermediate_kinds(&self) -> Vec<ElementKind> {
        let mut out = Vec::with_capacity(self.intermediate_len());
        for (k, s) in self.steps.iter().enumerate() {
            if k > 0 {
                out.push(ElementKind::Node(self.node_types[k]));
            }
            out.push(ElementKind::Link(s.link_type));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    Node(usize),
    Link(usize),
}

/// An element of a concrete path: a typed node or a typed link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Node { ty: usize, idx: u32 },
    Link { ty: usize, idx: u32 },
}

/// One realisation of a meta-path rooted at `root`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathInstance {
    pub root: u32,
    pub terminal: u32,
    /// Link index per step.
    pub links: Vec<u32>,
    /// Intermediate node per interior position (`links.len() - 1` entries).
    pub nodes: Vec<u32>,
}

impl PathInstance {
    /// Intermediate elements `link, node, link, …, link` in path order.
    pub fn elements(&self, mp: &MetaPath) -> Vec<Element> {
        let mut out = Vec::with_capacity(2 * self.links.len() - 1);
        for (k, (&l, s)) in self.links.iter().zip(&mp.steps).enumerate() {
            if k > 0 {
                out.push(Element::Node {
                    ty: mp.node_types[k],
                    idx: self.nodes[k - 1],
                });
            }
            out.push(Element::Link {
                ty: s.link_type,
                idx: l,
            });
        }
        out
    }
}

fn check_root(mp: &MetaPath, u: NodeRef) -> Result<()> {
    if u.ty != mp.node_types[0] {
        return Err(HidamError::MetaPath {
            name: mp.spec.name.clone(),
            reason: format!("root has node type {} but the path starts at {}", u.ty, mp.node_types[0]),
        });
    }
    Ok(())
}

/// Depth-first walk over every instance rooted at `root`, skipping
/// instances that return to the root. The callback receives the links,
/// the interior nodes and the terminal node.
pub fn walk_instances<F>(g: &Bcn, mp: &MetaPath, root: u32, mut f: F)
where
    F: FnMut(&[u32], &[u32], u32),
{
    let mut links = Vec::with_capacity(mp.steps.len());
    let mut nodes = Vec::with_capacity(mp.steps.len());
    walk_from(g, mp, 0, root, root, &mut links, &mut nodes, &mut f);
}

#[allow(clippy::too_many_arguments)]
fn walk_from<F>(
    g: &Bcn,
    mp: &MetaPath,
    step: usize,
    at: u32,
    root: u32,
    links: &mut Vec<u32>,
    nodes: &mut Vec<u32>,
    f: &mut F,
) where
    F: FnMut(&[u32], &[u32], u32),
{
    if step == mp.steps.len() {
        if at != root {
            f(links, nodes, at);
        }
        return;
    }
    let s = mp.steps[step];
    let store = g.link_store(s.link_type);
    let last = step + 1 == mp.steps.len();
    let mut go = |l: u32, next: u32, links: &mut Vec<u32>, nodes: &mut Vec<u32>| {
        links.push(l);
        if !last {
            nodes.push(next);
        }
        walk_from(g, mp, step + 1, next, root, links, nodes, f);
        links.pop();
        if !last {
            nodes.pop();
        }
    };
    if matches!(s.dir, Direction::Fwd | Direction::Both) {
        for &l in store.outgoing(at) {
            go(l, store.target(l), links, nodes);
        }
    }
    if matches!(s.dir, Direction::Rev | Direction::Both) {
        for &l in store.incoming(at) {
            let src = store.source(l);
            if s.dir == Direction::Both && src == at && store.target(l) == at {
                continue;
            }
            go(l, src, links, nodes);
        }
    }
}

/// All instances of `mp` rooted at `u`, or a seeded uniform sample of
/// `cap` of them (reservoir sampling, returned in walk order).
/// `cap = None` means unbounded.
pub fn enumerate_path_instances(
    g: &Bcn,
    u: NodeRef,
    mp: &MetaPath,
    cap: Option<usize>,
    seed: u64,
) -> Result<Vec<PathInstance>> {
    check_root(mp, u)?;
    if cap == Some(0) {
        return Err(HidamError::InvalidArgument("instance cap must be at least 1".into()));
    }
    let Some(cap) = cap else {
        let mut out = Vec::new();
        walk_instances(g, mp, u.idx, |links, nodes, v| {
            out.push(PathInstance {
                root: u.idx,
                terminal: v,
                links: links.to_vec(),
                nodes: nodes.to_vec(),
            })
        });
        return Ok(out);
    };

    let mut rng = rng_from(seed);
    let mut reservoir: Vec<(usize, PathInstance)> = Vec::with_capacity(cap);
    let mut seen = 0usize;
    walk_instances(g, mp, u.idx, |links, nodes, v| {
        let make = || PathInstance {
            root: u.idx,
            terminal: v,
            links: links.to_vec(),
            nodes: nodes.to_vec(),
        };
        if seen < cap {
            reservoir.push((seen, make()));
        } else {
            let j = rng.random_range(0..=seen);
            if j < cap {
                reservoir[j] = (seen, make());
            }
        }
        seen += 1;
    });
    reservoir.sort_unstable_by_key(|(order, _)| *order);
    Ok(reservoir.into_iter().map(|(_, p)| p).collect())
}

/// Distinct terminal nodes over all (uncapped) instances rooted at `u`.
pub fn metapath_neighbors(g: &Bcn, u: NodeRef, mp: &MetaPath) -> Result<BTreeSet<u32>> {
    check_root(mp, u)?;
    let mut out = BTreeSet::new();
    walk_instances(g, mp, u.idx, |_, _, v| {
        out.insert(v);
    });
    Ok(out)
}

/// Number of instances rooted at `u` without materialising them.
pub fn count_instances(g: &Bcn, u: NodeRef, mp: &MetaPath) -> Result<usize> {
    check_root(mp, u)?;
    let mut n = 0;
    walk_instances(g, mp, u.idx, |_, _, _| n += 1);
    Ok(n)
}

/// Resolves every spec against the schema.
pub fn resolve_all(specs: &[MetaPathSpec], schema: &Schema) -> Result<Vec<MetaPath>> {
    specs.iter().map(|s| s.resolve(schema)).collect()
}
