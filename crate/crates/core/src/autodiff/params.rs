use super::tape::{Gradients, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Index of a parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

/// Named trainable tensors in registration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Parameter>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.params.iter().any(|p| p.name == name) {
            return Err(Error::config(name, "parameter registered twice"));
        }
        let grad = Tensor::zeros(value.raw_dim());
        self.params.push(Parameter { name, value, grad });
        Ok(ParamId(self.params.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Places every parameter on the tape as a leaf; the returned handles are
    /// indexed by [`ParamId::index`].
    pub fn bind(&self, tape: &mut Tape) -> Vec<Var> {
        self.params.iter().map(|p| tape.leaf(p.value.clone())).collect()
    }

    /// Gradients for every parameter, zero where a parameter was unused.
    pub fn collect_grads(&self, grads: &Gradients, bound: &[Var]) -> Vec<Tensor> {
        self.params
            .iter()
            .zip(bound)
            .map(|(p, &v)| grads.get_or_zeros(v, &p.value))
            .collect()
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// Adds `grads` (one tensor per parameter, in order) into the stored gradients.
    pub fn accumulate(&mut self, grads: &[Tensor]) -> Result<()> {
        if grads.len() != self.params.len() {
            return Err(Error::shape("accumulate", self.params.len(), grads.len()));
        }
        for (p, g) in self.params.iter_mut().zip(grads) {
            if p.grad.dim() != g.dim() {
                return Err(Error::shape("accumulate", format!("{:?}", p.grad.shape()), format!("{:?}", g.shape())));
            }
            p.grad += g;
        }
        Ok(())
    }

    pub fn grads(&self) -> Vec<Tensor> {
        self.params.iter().map(|p| p.grad.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn duplicate_names_are_rejected() {
        let mut store = ParamStore::new();
        store.add("w", Tensor::zeros((1, 1))).unwrap();
        assert!(store.add("w", Tensor::zeros((2, 1))).is_err());
    }

    #[test]
    fn unused_parameters_get_zero_gradients() {
        let mut store = ParamStore::new();
        let a = store.add("a", array![[2.0]]).unwrap();
        store.add("b", array![[1.0, 1.0]]).unwrap();
        let mut tape = Tape::new();
        let bound = store.bind(&mut tape);
        let y = tape.square(bound[a.index()]);
        let grads = store.collect_grads(&tape.backward(y), &bound);
        assert_eq!(grads[0], array![[4.0]]);
        assert_eq!(grads[1], array![[0.0, 0.0]]);
        store.accumulate(&grads).unwrap();
        store.accumulate(&grads).unwrap();
        assert_eq!(store.get(a).grad, array![[8.0]]);
    }
}
