//! Computation graph: a topologically ordered list of layers with explicit
//! input references, cached activations, and exact reverse-mode gradients.

use super::layers::Layer;
use super::tensor::{Real, Tensor};
use crate::error::{Result, RfError};

#[derive(Debug, Clone)]
pub struct Node<T: Real> {
    pub layer: Layer<T>,
    /// Value index this node consumes: 0 is the graph input, i >= 1 is the
    /// output of node i-1.
    pub input: usize,
}

#[derive(Debug, Clone)]
pub struct Graph<T: Real> {
    input_shape: Vec<usize>,
    nodes: Vec<Node<T>>,
}

/// Forward-pass cache. Owns every intermediate activation so the backward
/// pass can revisit them; value 0 is the input, value i+1 the output of node i.
pub struct Activations<T: Real> {
    values: Vec<Tensor<T>>,
}

impl<T: Real> Activations<T> {
    pub fn output(&self) -> &Tensor<T> {
        self.values.last().expect("forward produced no values")
    }

    pub fn value(&self, idx: usize) -> &Tensor<T> {
        &self.values[idx]
    }
}

impl<T: Real> Graph<T> {
    /// `input_shape` is per-sample (no batch dimension).
    pub fn new(input_shape: &[usize]) -> Self {
        Graph {
            input_shape: input_shape.to_vec(),
            nodes: Vec::new(),
        }
    }

    /// Append a layer consuming the previous node's output.
    pub fn push(&mut self, layer: Layer<T>) -> &mut Self {
        let input = self.nodes.len();
        self.nodes.push(Node { layer, input });
        self
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    /// Per-sample shape of every value slot; validates layer chaining.
    pub fn value_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let mut shapes = vec![self.input_shape.clone()];
        for node in &self.nodes {
            let out = node.layer.out_shape(&shapes[node.input])?;
            shapes.push(out);
        }
        Ok(shapes)
    }

    pub fn output_shape(&self) -> Result<Vec<usize>> {
        Ok(self.value_shapes()?.pop().unwrap())
    }

    /// Runs the graph on a batched input `(B, input_shape...)`, caching every
    /// activation. Parameters are not touched.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Activations<T>> {
        if x.shape().len() != self.input_shape.len() + 1 || x.shape()[1..] != self.input_shape[..] {
            return Err(RfError::Shape(format!(
                "graph expects (B, {:?}), got {:?}",
                self.input_shape,
                x.shape()
            )));
        }
        let mut values = Vec::with_capacity(self.nodes.len() + 1);
        values.push(x.clone());
        for node in &self.nodes {
            let y = node.layer.forward(&values[node.input])?;
            values.push(y);
        }
        Ok(Activations { values })
    }

    /// Exact reverse-mode gradients of a scalar loss whose gradient w.r.t.
    /// the graph output is `dout`. Returns parameter gradients in `params()`
    /// order and the gradient w.r.t. the graph input.
    pub fn backward(
        &self,
        acts: &Activations<T>,
        dout: Tensor<T>,
    ) -> Result<(Vec<Tensor<T>>, Tensor<T>)> {
        if acts.values.len() != self.nodes.len() + 1 {
            return Err(RfError::Shape(
                "activation cache does not match this graph (backward before forward?)".into(),
            ));
        }
        let mut slots: Vec<Option<Tensor<T>>> = vec![None; self.nodes.len() + 1];
        slots[self.nodes.len()] = Some(dout);
        let mut param_grads_rev: Vec<Vec<Tensor<T>>> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate().rev() {
            let dy = slots[i + 1]
                .take()
                .unwrap_or_else(|| Tensor::zeros(acts.values[i + 1].shape()));
            let (pg, dx) = node.layer.backward(&acts.values[node.input], &dy);
            match &mut slots[node.input] {
                Some(acc) => {
                    for (a, g) in acc.data_mut().iter_mut().zip(dx.data()) {
                        *a += *g;
                    }
                }
                slot @ None => *slot = Some(dx),
            }
            param_grads_rev.push(pg);
        }
        let mut param_grads = Vec::new();
        for pg in param_grads_rev.into_iter().rev() {
            param_grads.extend(pg);
        }
        let dinput = slots[0]
            .take()
            .unwrap_or_else(|| Tensor::zeros(acts.values[0].shape()));
        Ok((param_grads, dinput))
    }

    /// Flattened parameter tensors, layer order.
    pub fn params(&self) -> Vec<&Tensor<T>> {
        self.nodes.iter().flat_map(|n| n.layer.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.nodes
            .iter_mut()
            .flat_map(|n| n.layer.params_mut())
            .collect()
    }

    pub fn num_param_scalars(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Parameter block labels for gradient-check reports.
    pub fn param_block_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            for (j, _) in node.layer.params().iter().enumerate() {
                names.push(format!("node{}:{}[{}]", i, node.layer.name(), j));
            }
        }
        names
    }

    pub fn cast<U: Real>(&self) -> Graph<U> {
        Graph {
            input_shape: self.input_shape.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| Node {
                    layer: n.layer.cast(),
                    input: n.input,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_is_identity() {
        let g = Graph::<f32>::new(&[3]);
        let x = Tensor::from_vec(&[2, 3], vec![1.0, -2.0, 3.0, 0.5, 0.0, -0.5]).unwrap();
        let acts = g.forward(&x).unwrap();
        assert_eq!(acts.output().data(), x.data());
    }

    #[test]
    fn forward_rejects_wrong_input_shape() {
        let g = Graph::<f32>::new(&[2, 8]);
        let x = Tensor::zeros(&[1, 3, 8]);
        assert!(g.forward(&x).is_err());
    }

    #[test]
    fn sum_loss_backward_gives_ones() {
        let mut g = Graph::<f64>::new(&[4]);
        g.push(Layer::Relu);
        let x = Tensor::from_vec(&[1, 4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let acts = g.forward(&x).unwrap();
        let dout = Tensor::from_vec(&[1, 4], vec![1.0; 4]).unwrap();
        let (pg, dx) = g.backward(&acts, dout).unwrap();
        assert!(pg.is_empty());
        assert_eq!(dx.data(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn half_squared_norm_backward_returns_input() {
        // loss = 0.5 * ||x||^2 on an identity graph -> dL/dx = x
        let g = Graph::<f64>::new(&[3]);
        let x = Tensor::from_vec(&[1, 3], vec![0.5, -1.5, 2.0]).unwrap();
        let acts = g.forward(&x).unwrap();
        let dout = x.clone();
        let (_, dx) = g.backward(&acts, dout).unwrap();
        assert_eq!(dx.data(), x.data());
    }
}
