//! Forward and backward rules for the three HIDAM stages on plain slices.
//! The orchestrating model gathers entity vectors, calls these, and scatters
//! the returned input gradients back to its entity cache.

use crate::error::{HidamError, Result};
use crate::numerics::{
    axpy, dot, l2_normalize, l2_normalize_backward, sigmoid, Activation, Matrix,
};

/// Saved state of one (node, meta-path) instance fusion.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub scores: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `Σ α_i [h_v ‖ h_p]_i`, length `(L+1)·d`.
    pub agg: Vec<f64>,
    /// `h_u + W_φ · agg`.
    pub pre: Vec<f64>,
    pub norm: f64,
    pub z: Vec<f64>,
}

/// Weights shared by all instances of one meta-path.
#[derive(Debug, Clone, Copy)]
pub struct InstanceWeights<'a> {
    /// `1 × (L+2)d` scoring vector; `None` gives uniform weights.
    pub attn: Option<&'a Matrix>,
    /// `d × (L+1)d` residual map.
    pub mix: &'a Matrix,
    pub slope: f64,
    pub activation: Activation,
}

fn check_segments(segments: &[&[f64]], seg_per_inst: usize, d: usize) -> Result<usize> {
    if seg_per_inst == 0 || !segments.len().is_multiple_of(seg_per_inst) {
        return Err(HidamError::shape(
            "instance_fusion",
            format!(
                "{} segments do not split into instances of {seg_per_inst}",
                segments.len()
            ),
        ));
    }
    if let Some(s) = segments.iter().find(|s| s.len() != d) {
        return Err(HidamError::shape(
            "instance_fusion",
            format!("segment of length {} where {d} expected", s.len()),
        ));
    }
    Ok(segments.len() / seg_per_inst)
}

/// Attention-weighted fusion of a node's instances under one meta-path.
/// `segments` holds, per instance, `[h_v, h_p1, …, h_pL]` back to back.
/// The root segment of the scoring vector multiplies `h_u`, which is the
/// same for every instance, so it cancels in the softmax and is skipped.
pub fn instance_fusion(
    h_u: &[f64],
    segments: &[&[f64]],
    seg_per_inst: usize,
    w: InstanceWeights<'_>,
) -> Result<InstanceRecord> {
    let d = h_u.len();
    let n = check_segments(segments, seg_per_inst, d)?;
    let width = seg_per_inst * d;
    if w.mix.shape() != (d, width) {
        return Err(HidamError::shape(
            "instance_fusion",
            format!("mix is {:?}, expected {d}x{width}", w.mix.shape()),
        ));
    }
    if let Some(a) = w.attn {
        if a.len() != width + d {
            return Err(HidamError::shape(
                "instance_fusion",
                format!("attention vector of length {}, expected {}", a.len(), width + d),
            ));
        }
    }

    let mut scores = vec![0.0; n];
    let mut alpha = vec![0.0; n];
    if n > 0 {
        match w.attn {
            Some(a) => {
                let a = &a.data()[d..];
                for (i, s) in scores.iter_mut().enumerate() {
                    let inst = &segments[i * seg_per_inst..(i + 1) * seg_per_inst];
                    *s = inst
                        .iter()
                        .enumerate()
                        .map(|(k, h)| {
                            let ak = &a[k * d..(k + 1) * d];
                            h.iter()
                                .zip(ak)
                                .map(|(&x, &c)| c * Activation::LeakyRelu(w.slope).apply(x))
                                .sum::<f64>()
                        })
                        .sum();
                }
                crate::numerics::ops::softmax_into(&scores, &mut alpha);
            }
            None => alpha.fill(1.0 / n as f64),
        }
    }

    let mut agg = vec![0.0; width];
    for (i, &ai) in alpha.iter().enumerate() {
        for k in 0..seg_per_inst {
            axpy(ai, segments[i * seg_per_inst + k], &mut agg[k * d..(k + 1) * d]);
        }
    }
    let mut pre = h_u.to_vec();
    if n > 0 {
        let mut m = vec![0.0; d];
        w.mix.matvec_into(&agg, &mut m);
        axpy(1.0, &m, &mut pre);
    }
    let phi = w.activation.forward(&pre);
    let (z, norm) = l2_normalize(&phi);
    Ok(InstanceRecord {
        scores,
        alpha,
        agg,
        pre,
        norm,
        z,
    })
}

/// Gradients flowing out of [`instance_fusion_backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceGrads {
    pub h_u: Vec<f64>,
    /// Same layout as the forward `segments`, flattened.
    pub segments: Vec<f64>,
}

/// Backward of [`instance_fusion`]. Accumulates into `d_attn` and `d_mix`.
pub fn instance_fusion_backward(
    rec: &InstanceRecord,
    segments: &[&[f64]],
    seg_per_inst: usize,
    w: InstanceWeights<'_>,
    dz: &[f64],
    d_attn: Option<&mut Matrix>,
    d_mix: &mut Matrix,
) -> InstanceGrads {
    let d = dz.len();
    let n = rec.alpha.len();
    let width = seg_per_inst * d;
    let phi = w.activation.forward(&rec.pre);
    let (y, _) = l2_normalize(&phi);
    let dphi = l2_normalize_backward(&y, rec.norm, dz);
    let dpre = w.activation.backward(&rec.pre, &dphi);
    let mut out = InstanceGrads {
        h_u: dpre.clone(),
        segments: vec![0.0; n * width],
    };
    if n == 0 {
        return out;
    }
    d_mix.add_outer(1.0, &dpre, &rec.agg);
    let mut dagg = vec![0.0; width];
    w.mix.matvec_t_acc(&dpre, &mut dagg);

    let mut dalpha = vec![0.0; n];
    for i in 0..n {
        let base = i * width;
        let mut g = 0.0;
        for k in 0..seg_per_inst {
            let seg = segments[i * seg_per_inst + k];
            let dk = &dagg[k * d..(k + 1) * d];
            g += dot(seg, dk);
            axpy(rec.alpha[i], dk, &mut out.segments[base + k * d..base + (k + 1) * d]);
        }
        dalpha[i] = g;
    }

    if let (Some(a), Some(d_attn)) = (w.attn, d_attn) {
        let mut ds = vec![0.0; n];
        crate::numerics::ops::softmax_backward_into(&rec.alpha, &dalpha, &mut ds);
        let a = &a.data()[d..];
        let da = &mut d_attn.data_mut()[d..];
        let act = Activation::LeakyRelu(w.slope);
        for i in 0..n {
            if ds[i] == 0.0 {
                continue;
            }
            let base = i * width;
            for k in 0..seg_per_inst {
                let seg = segments[i * seg_per_inst + k];
                for j in 0..d {
                    let x = seg[j];
                    da[k * d + j] += ds[i] * act.apply(x);
                    out.segments[base + k * d + j] += ds[i] * a[k * d + j] * act.derivative(x);
                }
            }
        }
    }
    out
}

/// Saved state of semantic-level fusion for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticRecord {
    /// Per meta-path input to the activation (projected when enabled).
    pub pre: Vec<Vec<f64>>,
    pub scores: Vec<f64>,
    pub beta: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SemanticWeights<'a> {
    /// Scoring vector `a_A`; `None` gives uniform weights.
    pub attn: Option<&'a Matrix>,
    /// Optional `(W_s, b_s)` projection applied before the activation.
    pub proj: Option<(&'a Matrix, &'a Matrix)>,
    pub activation: Activation,
}

pub fn semantic_fusion(zs: &[&[f64]], w: SemanticWeights<'_>) -> Result<SemanticRecord> {
    let Some(d) = zs.first().map(|z| z.len()) else {
        return Err(HidamError::InvalidArgument(
            "semantic fusion needs at least one meta-path".into(),
        ));
    };
    let p = zs.len();
    let mut pre = Vec::new();
    let mut scores = vec![0.0; p];
    let mut beta = vec![1.0 / p as f64; p];
    if let Some(a) = w.attn {
        for (z, s) in zs.iter().zip(scores.iter_mut()) {
            let t = match w.proj {
                Some((ws, bs)) => {
                    let mut t = ws.matvec(z)?;
                    axpy(1.0, bs.data(), &mut t);
                    t
                }
                None => z.to_vec(),
            };
            if t.len() != a.len() {
                return Err(HidamError::shape(
                    "semantic_fusion",
                    format!("attention vector {} vs input {}", a.len(), t.len()),
                ));
            }
            *s = t
                .iter()
                .zip(a.data())
                .map(|(&x, &c)| c * w.activation.apply(x))
                .sum();
            pre.push(t);
        }
        crate::numerics::ops::softmax_into(&scores, &mut beta);
    }
    let mut q = vec![0.0; d];
    for (z, &b) in zs.iter().zip(&beta) {
        axpy(b, z, &mut q);
    }
    Ok(SemanticRecord {
        pre,
        scores,
        beta,
        q,
    })
}

/// Backward of [`semantic_fusion`]; returns `∂L/∂z` per meta-path.
pub fn semantic_fusion_backward(
    rec: &SemanticRecord,
    zs: &[&[f64]],
    w: SemanticWeights<'_>,
    dq: &[f64],
    d_attn: Option<&mut Matrix>,
    d_proj: Option<(&mut Matrix, &mut Matrix)>,
) -> Vec<Vec<f64>> {
    let mut dz: Vec<Vec<f64>> = rec
        .beta
        .iter()
        .map(|&b| dq.iter().map(|g| b * g).collect())
        .collect();
    let (Some(a), Some(d_attn)) = (w.attn, d_attn) else {
        return dz;
    };
    let dbeta: Vec<f64> = zs.iter().map(|z| dot(z, dq)).collect();
    let mut ds = vec![0.0; dbeta.len()];
    crate::numerics::ops::softmax_backward_into(&rec.beta, &dbeta, &mut ds);
    let mut d_proj = d_proj;
    for (p, t) in rec.pre.iter().enumerate() {
        let act = w.activation;
        let mut dt = vec![0.0; t.len()];
        for (j, &x) in t.iter().enumerate() {
            d_attn.data_mut()[j] += ds[p] * act.apply(x);
            dt[j] = ds[p] * a.data()[j] * act.derivative(x);
        }
        match (w.proj, d_proj.as_mut()) {
            (Some((ws, _)), Some((dws, dbs))) => {
                dws.add_outer(1.0, &dt, zs[p]);
                axpy(1.0, &dt, dbs.data_mut());
                ws.matvec_t_acc(&dt, &mut dz[p]);
            }
            _ => axpy(1.0, &dt, &mut dz[p]),
        }
    }
    dz
}

/// Saved state of the prediction head.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadRecord {
    pub hidden_pre: Vec<f64>,
    pub logit: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct HeadWeights<'a> {
    pub w1: &'a Matrix,
    pub b1: &'a Matrix,
    pub w2: &'a Matrix,
    pub b2: &'a Matrix,
}

/// `sigmoid(w2 · ReLU(W1 q + b1) + b2)`.
pub fn head_forward(q: &[f64], w: HeadWeights<'_>) -> Result<HeadRecord> {
    let mut hidden_pre = w.w1.matvec(q)?;
    axpy(1.0, w.b1.data(), &mut hidden_pre);
    let logit = hidden_pre
        .iter()
        .zip(w.w2.data())
        .map(|(&h, &c)| c * h.max(0.0))
        .sum::<f64>()
        + w.b2.data()[0];
    Ok(HeadRecord {
        hidden_pre,
        logit,
        prob: sigmoid(logit),
    })
}

/// Backward of [`head_forward`] from `∂L/∂logit`; returns `∂L/∂q`.
/// Gradient slots are `[w1, b1, w2, b2]`.
pub fn head_backward(
    rec: &HeadRecord,
    q: &[f64],
    w: HeadWeights<'_>,
    dlogit: f64,
    grads: [&mut Matrix; 4],
) -> Vec<f64> {
    let [dw1, db1, dw2, db2] = grads;
    db2.data_mut()[0] += dlogit;
    let mut dh = vec![0.0; rec.hidden_pre.len()];
    for (j, &h) in rec.hidden_pre.iter().enumerate() {
        dw2.data_mut()[j] += dlogit * h.max(0.0);
        if h > 0.0 {
            dh[j] = dlogit * w.w2.data()[j];
        }
    }
    axpy(1.0, &dh, db1.data_mut());
    dw1.add_outer(1.0, &dh, q);
    let mut dq = vec![0.0; q.len()];
    w.w1.matvec_t_acc(&dh, &mut dq);
    dq
}
