use super::config::Imputation;
use super::features::{fit_scalers, GraphInputs, Scaler};
use super::layers::{head_backward, head_forward, HeadWeights};
use super::loss::{bce_logit_grad, bce_loss};
use super::Scorer;
use crate::error::{HidamError, Result};
use crate::graph::{Bcn, Schema};
use crate::numerics::{mix, xavier_init, Matrix, ParamStore, Parameter};

/// Two-layer perceptron on a company's own attributes, ignoring the graph.
#[derive(Debug, Clone)]
pub struct AttributeMlp {
    schema: Schema,
    target_type: usize,
    imputation: Imputation,
    params: Vec<Parameter>,
    node_scalers: Vec<Scaler>,
    link_scalers: Vec<Scaler>,
}

impl AttributeMlp {
    pub fn new(schema: &Schema, hidden: usize, imputation: Imputation, seed: u64) -> Result<Self> {
        let target_type = schema.target_type()?;
        let inputs = schema.node_types[target_type].attributes;
        if inputs == 0 || hidden == 0 {
            return Err(HidamError::InvalidArgument(
                "attribute MLP needs company attributes and a hidden layer".into(),
            ));
        }
        let shapes = [
            ("mlp.w1", hidden, inputs, true),
            ("mlp.b1", hidden, 1, false),
            ("mlp.w2", 1, hidden, true),
            ("mlp.b2", 1, 1, false),
        ];
        let params = shapes
            .iter()
            .enumerate()
            .map(|(i, &(name, r, c, init))| {
                let v = if init {
                    xavier_init(r, c, mix(seed, i as u64))
                } else {
                    Matrix::zeros(r, c)
                };
                Parameter::new(name, v)
            })
            .collect();
        Ok(AttributeMlp {
            schema: schema.clone(),
            target_type,
            imputation,
            params,
            node_scalers: schema.node_types.iter().map(|n| Scaler::identity(n.attributes)).collect(),
            link_scalers: schema.link_types.iter().map(|l| Scaler::identity(l.attributes)).collect(),
        })
    }

    fn weights(&self) -> HeadWeights<'_> {
        HeadWeights {
            w1: &self.params[0].value,
            b1: &self.params[1].value,
            w2: &self.params[2].value,
            b2: &self.params[3].value,
        }
    }

    fn check(&self, g: &Bcn, inputs: &GraphInputs, targets: &[u32]) -> Result<()> {
        if g.schema() != &self.schema {
            return Err(HidamError::Schema("graph schema differs from the model's".into()));
        }
        let n = inputs.node_x[self.target_type].rows();
        match targets.iter().find(|&&t| t as usize >= n) {
            Some(t) => Err(HidamError::InvalidArgument(format!("target index {t} out of range"))),
            None => Ok(()),
        }
    }
}

impl ParamStore for AttributeMlp {
    fn params(&self) -> Vec<&Parameter> {
        self.params.iter().collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.params.iter_mut().collect()
    }
}

impl Scorer for AttributeMlp {
    fn fit_scalers(&mut self, g: &Bcn, train_targets: &[u32]) -> Result<()> {
        let (n, l) = fit_scalers(g, self.target_type, train_targets, self.imputation);
        self.node_scalers = n;
        self.link_scalers = l;
        Ok(())
    }

    fn encode_inputs(&self, g: &Bcn) -> Result<GraphInputs> {
        Ok(GraphInputs::encode(g, &self.node_scalers, &self.link_scalers))
    }

    fn loss_and_grad(
        &mut self,
        g: &Bcn,
        inputs: &GraphInputs,
        targets: &[u32],
        labels: &[f64],
        _seed: u64,
        pos_weight: f64,
    ) -> Result<f64> {
        self.check(g, inputs, targets)?;
        let x = &inputs.node_x[self.target_type];
        let records = targets
            .iter()
            .map(|&t| head_forward(x.row(t as usize), self.weights()))
            .collect::<Result<Vec<_>>>()?;
        let probs: Vec<f64> = records.iter().map(|r| r.prob).collect();
        let loss = bce_loss(&probs, labels, pos_weight)?;
        let mut grads: Vec<Matrix> = self
            .params
            .iter_mut()
            .map(|p| std::mem::replace(&mut p.grad, Matrix::zeros(0, 0)))
            .collect();
        for ((rec, &t), &y) in records.iter().zip(targets).zip(labels) {
            let dlogit = bce_logit_grad(rec.prob, y, pos_weight);
            let [a, b, c, d] = &mut grads[..] else {
                unreachable!("four head tensors")
            };
            head_backward(rec, x.row(t as usize), self.weights(), dlogit, [a, b, c, d]);
        }
        for (p, g) in self.params.iter_mut().zip(grads) {
            p.grad = g;
        }
        Ok(loss)
    }

    fn predict(&self, g: &Bcn, inputs: &GraphInputs, targets: &[u32], _seed: u64) -> Result<Vec<f64>> {
        self.check(g, inputs, targets)?;
        let x = &inputs.node_x[self.target_type];
        targets
            .iter()
            .map(|&t| head_forward(x.row(t as usize), self.weights()).map(|r| r.prob))
            .collect()
    }
}
