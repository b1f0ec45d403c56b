use std::collections::HashMap;

use super::config::ModelConfig;
use super::features::{fit_scalers, GraphInputs, Scaler};
use super::layers::{
    head_backward, head_forward, instance_fusion, instance_fusion_backward, semantic_fusion,
    semantic_fusion_backward, HeadRecord, HeadWeights, InstanceRecord, InstanceWeights,
    SemanticRecord, SemanticWeights,
};
use super::loss::{bce_logit_grad, bce_loss};
use super::Scorer;
use crate::error::{HidamError, Result};
use crate::graph::{
    enumerate_path_instances, resolve_all, Bcn, Element, ElementKind, MetaPath, MetaPathSpec,
    NodeRef, Schema,
};
use crate::numerics::{axpy, mix, mix3, xavier_init, Matrix, ParamStore, Parameter};

/// How an entity type is mapped into the shared embedding space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoder {
    /// `h = W x` with parameter index.
    Linear(usize),
    /// A single learned vector for every entity of the type.
    Embedding(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PathParams {
    attn: Option<usize>,
    mix: usize,
}

/// The heterogeneous default-prediction model: per-type encoders,
/// instance-level attention per meta-path, semantic attention across
/// meta-paths and an MLP head.
#[derive(Debug, Clone)]
pub struct Hidam {
    config: ModelConfig,
    schema: Schema,
    paths: Vec<MetaPath>,
    seed: u64,
    params: Vec<Parameter>,
    node_enc: Vec<Option<Encoder>>,
    link_enc: Vec<Option<Encoder>>,
    path_params: Vec<PathParams>,
    sem_proj: Option<(usize, usize)>,
    sem_attn: Option<usize>,
    head: [usize; 4],
    node_scalers: Vec<Scaler>,
    link_scalers: Vec<Scaler>,
    target_type: usize,
}

/// Attention read-out for one target node.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub node_id: String,
    pub score: f64,
    /// `(meta-path, β)` in configured order.
    pub beta: Vec<(String, f64)>,
    /// Per meta-path, `(neighbor id, α)` sorted by descending α.
    pub alpha: Vec<(String, Vec<(String, f64)>)>,
}

/// Per-batch cache of projected entities. Every distinct entity gets one
/// slot; all entities of an embedding-encoded type share a slot.
#[derive(Debug, Clone, Default)]
struct EntityCache {
    keys: HashMap<u64, u32>,
    entities: Vec<(Element, Encoder)>,
    h: Vec<f64>,
}

impl EntityCache {
    fn key(e: Element, enc: Encoder) -> u64 {
        let (kind, ty, idx) = match e {
            Element::Node { ty, idx } => (0u64, ty as u64, idx),
            Element::Link { ty, idx } => (1u64, ty as u64, idx),
        };
        let idx = match enc {
            Encoder::Embedding(_) => u32::MAX,
            Encoder::Linear(_) => idx,
        };
        (kind << 63) | (ty << 32) | idx as u64
    }
}

/// One (node, meta-path) stage of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTrace {
    pub terminals: Vec<u32>,
    /// Cache slots of `[v, p1, …, pL]` per instance.
    slots: Vec<u32>,
    pub record: InstanceRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTrace {
    pub node: u32,
    u_slot: u32,
    pub paths: Vec<PathTrace>,
    pub semantic: SemanticRecord,
    pub head: HeadRecord,
}

/// Everything a backward pass needs, plus the attention weights.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub nodes: Vec<NodeTrace>,
    cache: EntityCache,
    dim: usize,
}

impl ForwardTrace {
    pub fn scores(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.head.prob).collect()
    }

    /// Projected feature vector of a target node.
    pub fn h_u(&self, n: &NodeTrace) -> &[f64] {
        self.slot(n.u_slot)
    }

    /// Projected `[h_v, h_p1, …, h_pL]` of every instance in `p`, back to back.
    pub fn segments(&self, p: &PathTrace) -> Vec<&[f64]> {
        p.slots.iter().map(|&s| self.slot(s)).collect()
    }

    fn slot(&self, s: u32) -> &[f64] {
        let s = s as usize;
        &self.cache.h[s * self.dim..(s + 1) * self.dim]
    }

    pub fn entity_count(&self) -> usize {
        self.cache.entities.len()
    }
}

impl Hidam {
    /// Builds a freshly initialised model. Meta-path names in `config` are
    /// looked up in `catalog` and resolved against `schema`.
    pub fn new(schema: &Schema, config: ModelConfig, catalog: &[MetaPathSpec], seed: u64) -> Result<Self> {
        config.validate()?;
        schema.validate()?;
        let specs = config.select_paths(catalog)?;
        let paths = resolve_all(&specs, schema)?;
        let target_type = schema.target_type()?;
        let d = config.dim;

        let mut node_used = vec![false; schema.node_types.len()];
        let mut link_used = vec![false; schema.link_types.len()];
        node_used[target_type] = true;
        for mp in &paths {
            for k in mp.intermediate_kinds() {
                match k {
                    ElementKind::Node(t) => node_used[t] = true,
                    ElementKind::Link(t) => link_used[t] = true,
                }
            }
        }

        let mut params = Vec::new();
        let mut add = |name: String, rows: usize, cols: usize, init: bool| {
            let idx = params.len();
            let value = if init {
                xavier_init(rows, cols, mix(seed, idx as u64))
            } else {
                Matrix::zeros(rows, cols)
            };
            params.push(Parameter::new(name, value));
            idx
        };

        let mut node_enc = vec![None; node_used.len()];
        for (t, def) in schema.node_types.iter().enumerate() {
            if !node_used[t] {
                continue;
            }
            node_enc[t] = Some(if def.attributes == 0 {
                Encoder::Embedding(add(format!("node_emb.{}", def.name), d, 1, true))
            } else {
                Encoder::Linear(add(format!("node_proj.{}", def.name), d, def.attributes, true))
            });
        }
        let mut link_enc = vec![None; link_used.len()];
        for (t, def) in schema.link_types.iter().enumerate() {
            if !link_used[t] {
                continue;
            }
            link_enc[t] = Some(if def.attributes == 0 || !config.link_attributes {
                Encoder::Embedding(add(format!("link_emb.{}", def.name), d, 1, true))
            } else {
                Encoder::Linear(add(format!("link_proj.{}", def.name), d, def.attributes, true))
            });
        }
        let path_params = paths
            .iter()
            .map(|mp| {
                let l = mp.intermediate_len();
                let attn = config
                    .instance_attention
                    .then(|| add(format!("inst_attn.{}", mp.name()), 1, (l + 2) * d, true));
                let mixp = add(format!("inst_mix.{}", mp.name()), d, (l + 1) * d, true);
                PathParams { attn, mix: mixp }
            })
            .collect();
        let (sem_proj, sem_attn) = if config.semantic_attention {
            let proj = config.semantic_dim.map(|ds| {
                (
                    add("sem_proj".into(), ds, d, true),
                    add("sem_proj_bias".into(), ds, 1, false),
                )
            });
            let width = config.semantic_dim.unwrap_or(d);
            (proj, Some(add("sem_attn".into(), 1, width, true)))
        } else {
            (None, None)
        };
        let h = config.hidden_dim;
        let head = [
            add("mlp.w1".into(), h, d, true),
            add("mlp.b1".into(), h, 1, false),
            add("mlp.w2".into(), 1, h, true),
            add("mlp.b2".into(), 1, 1, false),
        ];

        Ok(Hidam {
            node_scalers: schema.node_types.iter().map(|n| Scaler::identity(n.attributes)).collect(),
            link_scalers: schema.link_types.iter().map(|l| Scaler::identity(l.attributes)).collect(),
            config,
            schema: schema.clone(),
            paths,
            seed,
            params,
            node_enc,
            link_enc,
            path_params,
            sem_proj,
            sem_attn,
            head,
            target_type,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn paths(&self) -> &[MetaPath] {
        &self.paths
    }

    pub fn specs(&self) -> Vec<MetaPathSpec> {
        self.paths.iter().map(|p| p.spec.clone()).collect()
    }

    /// Seed the parameters were initialised from.
    pub fn init_seed(&self) -> u64 {
        self.seed
    }

    pub fn param(&self, name: &str) -> Option<&Parameter> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Parameter> {
        self.params.iter_mut().find(|p| p.name == name)
    }

    pub fn scalers(&self) -> (&[Scaler], &[Scaler]) {
        (&self.node_scalers, &self.link_scalers)
    }

    pub fn set_scalers(&mut self, nodes: Vec<Scaler>, links: Vec<Scaler>) -> Result<()> {
        let fits = |sc: &[Scaler], widths: Vec<usize>| {
            sc.len() == widths.len()
                && sc
                    .iter()
                    .zip(&widths)
                    .all(|(s, &w)| s.mean.len() == w && s.scale.len() == w)
        };
        let nw = self.schema.node_types.iter().map(|n| n.attributes).collect();
        let lw = self.schema.link_types.iter().map(|l| l.attributes).collect();
        if !fits(&nodes, nw) || !fits(&links, lw) {
            return Err(HidamError::shape("set_scalers", "scalers do not match the schema"));
        }
        self.node_scalers = nodes;
        self.link_scalers = links;
        Ok(())
    }

    fn check_graph(&self, g: &Bcn) -> Result<()> {
        if g.schema() != &self.schema {
            return Err(HidamError::Schema(
                "graph schema differs from the schema the model was built for".into(),
            ));
        }
        Ok(())
    }

    fn encoder(&self, e: Element) -> Result<Encoder> {
        let (enc, kind, ty) = match e {
            Element::Node { ty, .. } => (self.node_enc.get(ty).copied().flatten(), "node", ty),
            Element::Link { ty, .. } => (self.link_enc.get(ty).copied().flatten(), "link", ty),
        };
        enc.ok_or_else(|| HidamError::UnknownType {
            kind,
            name: format!("#{ty} (no encoder in this model)"),
        })
    }

    /// Projects one entity into the embedding space.
    pub fn transform_features(&self, inputs: &GraphInputs, e: Element) -> Result<Vec<f64>> {
        let d = self.config.dim;
        let mut out = vec![0.0; d];
        self.project(inputs, e, self.encoder(e)?, &mut out);
        Ok(out)
    }

    fn project(&self, inputs: &GraphInputs, e: Element, enc: Encoder, out: &mut [f64]) {
        match enc {
            Encoder::Embedding(p) => out.copy_from_slice(self.params[p].value.data()),
            Encoder::Linear(p) => {
                let x = match e {
                    Element::Node { ty, idx } => inputs.node_x[ty].row(idx as usize),
                    Element::Link { ty, idx } => inputs.link_x[ty].row(idx as usize),
                };
                self.params[p].value.matvec_into(x, out);
            }
        }
    }

    fn slot(&self, cache: &mut EntityCache, inputs: &GraphInputs, e: Element) -> Result<u32> {
        let enc = self.encoder(e)?;
        let key = EntityCache::key(e, enc);
        if let Some(&s) = cache.keys.get(&key) {
            return Ok(s);
        }
        let d = self.config.dim;
        let s = cache.entities.len() as u32;
        cache.h.resize(cache.h.len() + d, 0.0);
        let start = s as usize * d;
        let mut buf = vec![0.0; d];
        self.project(inputs, e, enc, &mut buf);
        cache.h[start..start + d].copy_from_slice(&buf);
        cache.entities.push((e, enc));
        cache.keys.insert(key, s);
        Ok(s)
    }

    /// Instance-stage weights of the `p`-th configured meta-path.
    pub fn instance_weights(&self, p: usize) -> InstanceWeights<'_> {
        let pp = self.path_params[p];
        InstanceWeights {
            attn: pp.attn.map(|i| &self.params[i].value),
            mix: &self.params[pp.mix].value,
            slope: self.config.attention_slope,
            activation: self.config.residual_activation,
        }
    }

    pub fn semantic_weights(&self) -> SemanticWeights<'_> {
        SemanticWeights {
            attn: self.sem_attn.map(|i| &self.params[i].value),
            proj: self
                .sem_proj
                .map(|(w, b)| (&self.params[w].value, &self.params[b].value)),
            activation: self.config.semantic_activation,
        }
    }

    fn head_weights(&self) -> HeadWeights<'_> {
        let [w1, b1, w2, b2] = self.head;
        HeadWeights {
            w1: &self.params[w1].value,
            b1: &self.params[b1].value,
            w2: &self.params[w2].value,
            b2: &self.params[b2].value,
        }
    }

    /// Seed used to sample the instances of `node` under meta-path `path`.
    /// Depends only on the node, so scores do not depend on batch layout.
    pub fn sampling_seed(seed: u64, node: u32, path: usize) -> u64 {
        mix3(seed, node as u64, path as u64)
    }

    /// Runs the full model on a batch of target companies.
    pub fn forward_batch(
        &self,
        g: &Bcn,
        inputs: &GraphInputs,
        targets: &[u32],
        seed: u64,
    ) -> Result<ForwardTrace> {
        self.check_graph(g)?;
        let d = self.config.dim;
        let n_companies = g.node_store(self.target_type).len();
        let mut cache = EntityCache::default();
        let mut nodes = Vec::with_capacity(targets.len());
        for &u in targets {
            if u as usize >= n_companies {
                return Err(HidamError::InvalidArgument(format!(
                    "target index {u} out of range for {n_companies} companies"
                )));
            }
            let root = NodeRef {
                ty: self.target_type,
                idx: u,
            };
            let u_slot = self.slot(&mut cache, inputs, Element::Node { ty: root.ty, idx: u })?;
            let mut paths = Vec::with_capacity(self.paths.len());
            for (p, mp) in self.paths.iter().enumerate() {
                let insts = enumerate_path_instances(
                    g,
                    root,
                    mp,
                    Some(self.config.neighbor_cap),
                    Self::sampling_seed(seed, u, p),
                )?;
                let mut slots = Vec::with_capacity(insts.len() * (mp.intermediate_len() + 1));
                let mut terminals = Vec::with_capacity(insts.len());
                for inst in &insts {
                    terminals.push(inst.terminal);
                    slots.push(self.slot(
                        &mut cache,
                        inputs,
                        Element::Node {
                            ty: self.target_type,
                            idx: inst.terminal,
                        },
                    )?);
                    for e in inst.elements(mp) {
                        slots.push(self.slot(&mut cache, inputs, e)?);
                    }
                }
                let segs = gather(&cache.h, &slots, d);
                let h_u = &cache.h[u_slot as usize * d..(u_slot as usize + 1) * d];
                let record =
                    instance_fusion(h_u, &segs, mp.intermediate_len() + 1, self.instance_weights(p))?;
                paths.push(PathTrace {
                    terminals,
                    slots,
                    record,
                });
            }
            let zs: Vec<&[f64]> = paths.iter().map(|p| p.record.z.as_slice()).collect();
            let semantic = semantic_fusion(&zs, self.semantic_weights())?;
            let head = head_forward(&semantic.q, self.head_weights())?;
            if !head.prob.is_finite() {
                return Err(HidamError::NonFinite(format!(
                    "prediction for company `{}`",
                    g.node_id(root)
                )));
            }
            nodes.push(NodeTrace {
                node: u,
                u_slot,
                paths,
                semantic,
                head,
            });
        }
        Ok(ForwardTrace { nodes, cache, dim: d })
    }

    /// Summed cross-entropy of a traced batch; accumulates gradients into
    /// every parameter the batch touched.
    pub fn backward_batch(
        &mut self,
        inputs: &GraphInputs,
        trace: &ForwardTrace,
        labels: &[f64],
        pos_weight: f64,
    ) -> Result<f64> {
        if labels.len() != trace.nodes.len() {
            return Err(HidamError::shape(
                "backward_batch",
                format!("{} labels for {} targets", labels.len(), trace.nodes.len()),
            ));
        }
        let probs = trace.scores();
        let loss = bce_loss(&probs, labels, pos_weight)?;
        let d = self.config.dim;
        let mut grads: Vec<Matrix> = self
            .params
            .iter_mut()
            .map(|p| std::mem::replace(&mut p.grad, Matrix::zeros(0, 0)))
            .collect();
        let mut dh = vec![0.0; trace.cache.h.len()];

        for (n, &y) in trace.nodes.iter().zip(labels) {
            let dlogit = bce_logit_grad(n.head.prob, y, pos_weight);
            if dlogit == 0.0 {
                continue;
            }
            let head_grads = grads
                .get_disjoint_mut(self.head)
                .map_err(|_| HidamError::shape("backward_batch", "head parameters alias"))?;
            let dq = head_backward(&n.head, &n.semantic.q, self.head_weights(), dlogit, head_grads);

            let zs: Vec<&[f64]> = n.paths.iter().map(|p| p.record.z.as_slice()).collect();
            let dzs = {
                let (d_attn, d_proj) = sem_grads(&mut grads, self.sem_attn, self.sem_proj)?;
                semantic_fusion_backward(&n.semantic, &zs, self.semantic_weights(), &dq, d_attn, d_proj)
            };

            for (p, (pt, dz)) in n.paths.iter().zip(&dzs).enumerate() {
                let seg = self.paths[p].intermediate_len() + 1;
                let segs = gather(&trace.cache.h, &pt.slots, d);
                let pp = self.path_params[p];
                let ig = match pp.attn {
                    Some(a) => {
                        let [da, dm] = grads
                            .get_disjoint_mut([a, pp.mix])
                            .map_err(|_| HidamError::shape("backward_batch", "path parameters alias"))?;
                        instance_fusion_backward(&pt.record, &segs, seg, self.instance_weights(p), dz, Some(da), dm)
                    }
                    None => instance_fusion_backward(
                        &pt.record,
                        &segs,
                        seg,
                        self.instance_weights(p),
                        dz,
                        None,
                        &mut grads[pp.mix],
                    ),
                };
                axpy(1.0, &ig.h_u, &mut dh[n.u_slot as usize * d..(n.u_slot as usize + 1) * d]);
                for (k, &s) in pt.slots.iter().enumerate() {
                    axpy(1.0, &ig.segments[k * d..(k + 1) * d], &mut dh[s as usize * d..(s as usize + 1) * d]);
                }
            }
        }

        for (s, &(e, enc)) in trace.cache.entities.iter().enumerate() {
            let g = &dh[s * d..(s + 1) * d];
            match enc {
                Encoder::Embedding(p) => axpy(1.0, g, grads[p].data_mut()),
                Encoder::Linear(p) => {
                    let x = match e {
                        Element::Node { ty, idx } => inputs.node_x[ty].row(idx as usize),
                        Element::Link { ty, idx } => inputs.link_x[ty].row(idx as usize),
                    };
                    grads[p].add_outer(1.0, g, x);
                }
            }
        }

        for (p, g) in self.params.iter_mut().zip(grads) {
            p.grad = g;
        }
        Ok(loss)
    }

    /// Default probabilities for a batch of target companies.
    pub fn predict_batch(&self, g: &Bcn, inputs: &GraphInputs, targets: &[u32], seed: u64) -> Result<Vec<f64>> {
        Ok(self.forward_batch(g, inputs, targets, seed)?.scores())
    }

    /// β per meta-path and the `k` highest-α instances per meta-path.
    pub fn explain(&self, g: &Bcn, inputs: &GraphInputs, u: u32, k: usize, seed: u64) -> Result<Explanation> {
        let trace = self.forward_batch(g, inputs, &[u], seed)?;
        let n = &trace.nodes[0];
        let ids = g.node_store(self.target_type).ids();
        let beta = self
            .paths
            .iter()
            .zip(&n.semantic.beta)
            .map(|(mp, &b)| (mp.name().to_string(), b))
            .collect();
        let alpha = self
            .paths
            .iter()
            .zip(&n.paths)
            .map(|(mp, pt)| {
                let mut list: Vec<(String, f64)> = pt
                    .terminals
                    .iter()
                    .zip(&pt.record.alpha)
                    .map(|(&v, &a)| (ids[v as usize].clone(), a))
                    .collect();
                list.sort_by(|a, b| b.1.total_cmp(&a.1));
                list.truncate(k);
                (mp.name().to_string(), list)
            })
            .collect();
        Ok(Explanation {
            node_id: ids[u as usize].clone(),
            score: n.head.prob,
            beta,
            alpha,
        })
    }
}

fn gather<'a>(h: &'a [f64], slots: &[u32], d: usize) -> Vec<&'a [f64]> {
    slots
        .iter()
        .map(|&s| &h[s as usize * d..(s as usize + 1) * d])
        .collect()
}

type SemGrads<'a> = (Option<&'a mut Matrix>, Option<(&'a mut Matrix, &'a mut Matrix)>);

fn sem_grads(grads: &mut [Matrix], attn: Option<usize>, proj: Option<(usize, usize)>) -> Result<SemGrads<'_>> {
    let alias = |_| HidamError::shape("backward_batch", "semantic parameters alias");
    Ok(match (attn, proj) {
        (Some(a), Some((w, b))) => {
            let [da, dw, db] = grads.get_disjoint_mut([a, w, b]).map_err(alias)?;
            (Some(da), Some((dw, db)))
        }
        (Some(a), None) => (Some(&mut grads[a]), None),
        _ => (None, None),
    })
}

impl ParamStore for Hidam {
    fn params(&self) -> Vec<&Parameter> {
        self.params.iter().collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.params.iter_mut().collect()
    }
}

impl Scorer for Hidam {
    fn fit_scalers(&mut self, g: &Bcn, train_targets: &[u32]) -> Result<()> {
        self.check_graph(g)?;
        let (n, l) = fit_scalers(g, self.target_type, train_targets, self.config.imputation);
        self.node_scalers = n;
        self.link_scalers = l;
        Ok(())
    }

    fn encode_inputs(&self, g: &Bcn) -> Result<GraphInputs> {
        self.check_graph(g)?;
        Ok(GraphInputs::encode(g, &self.node_scalers, &self.link_scalers))
    }

    fn loss_and_grad(
        &mut self,
        g: &Bcn,
        inputs: &GraphInputs,
        targets: &[u32],
        labels: &[f64],
        seed: u64,
        pos_weight: f64,
    ) -> Result<f64> {
        let trace = self.forward_batch(g, inputs, targets, seed)?;
        self.backward_batch(inputs, &trace, labels, pos_weight)
    }

    fn predict(&self, g: &Bcn, inputs: &GraphInputs, targets: &[u32], seed: u64) -> Result<Vec<f64>> {
        self.predict_batch(g, inputs, targets, seed)
    }
}
