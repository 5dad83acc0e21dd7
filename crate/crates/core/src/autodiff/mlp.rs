use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Softsign,
    Silu,
    Sin,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, x: Var) -> Var {
        match self {
            Activation::Tanh => tape.tanh(x),
            Activation::Softsign => tape.softsign(x),
            Activation::Silu => tape.silu(x),
            Activation::Sin => tape.sin(x),
        }
    }
}

/// Shape of a fully connected network.
///
/// `layer_count` counts affine layers, so a count of one is a single linear
/// map from input to output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_dim: usize,
    pub layer_count: usize,
    pub activation: Activation,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("input_dim", self.input_dim),
            ("output_dim", self.output_dim),
            ("hidden_dim", self.hidden_dim),
            ("layer_count", self.layer_count),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of each affine layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        (0..self.layer_count)
            .map(|i| {
                let fan_in = if i == 0 { self.input_dim } else { self.hidden_dim };
                let fan_out = if i + 1 == self.layer_count {
                    self.output_dim
                } else {
                    self.hidden_dim
                };
                (fan_in, fan_out)
            })
            .collect()
    }
}

/// How freshly registered weights are filled.
pub enum Init<'a, R: Rng> {
    /// Uniform on `±sqrt(1/fan_in)` for weights and biases.
    Uniform(&'a mut R),
    Zeros,
}

/// A multilayer perceptron whose weights live in a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    layers: Vec<(ParamId, ParamId)>,
}

impl Mlp {
    /// Registers weights `{prefix}.{i}.w` (`[fan_in, fan_out]`) and biases
    /// `{prefix}.{i}.b` (`[1, fan_out]`).
    pub fn register<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        spec: MlpSpec,
        init: Init<'_, R>,
    ) -> Result<Mlp> {
        spec.validate()?;
        let mut init = init;
        let mut layers = Vec::with_capacity(spec.layer_count);
        for (i, (fan_in, fan_out)) in spec.layer_dims().into_iter().enumerate() {
            let bound = (1.0 / fan_in as f64).sqrt();
            let mut fill = |shape: (usize, usize)| match &mut init {
                Init::Uniform(rng) => {
                    Tensor::from_shape_fn(shape, |_| rng.random_range(-bound..=bound))
                }
                Init::Zeros => Tensor::zeros(shape),
            };
            let w = fill((fan_in, fan_out));
            let b = fill((1, fan_out));
            let w = store.add(format!("{prefix}.{i}.w"), w)?;
            let b = store.add(format!("{prefix}.{i}.b"), b)?;
            layers.push((w, b));
        }
        Ok(Mlp { spec, layers })
    }

    pub fn layers(&self) -> &[(ParamId, ParamId)] {
        &self.layers
    }

    /// Applies the network to a `[batch, input_dim]` node.
    pub fn forward(&self, tape: &mut Tape, bound: &[Var], x: Var) -> Result<Var> {
        let (_, cols) = tape.shape(x);
        if cols != self.spec.input_dim {
            return Err(Error::shape("mlp input", self.spec.input_dim, cols));
        }
        let (w, b) = self.layers[0];
        let h = tape.affine(x, bound[w.index()], bound[b.index()])?;
        self.finish(tape, bound, h)
    }

    /// Applies the network to rows `[x, cond]`, where `cond` is a single row
    /// shared by the whole batch. The shared part enters the first layer as a
    /// bias, so it is never broadcast to the batch size.
    pub fn forward_conditioned(&self, tape: &mut Tape, bound: &[Var], x: Var, cond: Var) -> Result<Var> {
        let (_, x_cols) = tape.shape(x);
        let (cond_rows, cond_cols) = tape.shape(cond);
        if cond_rows != 1 || x_cols + cond_cols != self.spec.input_dim {
            return Err(Error::shape(
                "mlp conditioned input",
                self.spec.input_dim,
                format!("{x_cols} + {cond_cols} (cond rows {cond_rows})"),
            ));
        }
        let (w, b) = self.layers[0];
        let w = bound[w.index()];
        let w_x = tape.slice_rows(w, 0, x_cols)?;
        let w_c = tape.slice_rows(w, x_cols, self.spec.input_dim)?;
        let shift = tape.matmul(cond, w_c)?;
        let bias = tape.add(shift, bound[b.index()])?;
        let h = tape.affine(x, w_x, bias)?;
        self.finish(tape, bound, h)
    }

    fn finish(&self, tape: &mut Tape, bound: &[Var], first: Var) -> Result<Var> {
        let mut h = first;
        for &(w, b) in &self.layers[1..] {
            let a = self.spec.activation.apply(tape, h);
            h = tape.affine(a, bound[w.index()], bound[b.index()])?;
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(layers: usize) -> MlpSpec {
        MlpSpec {
            input_dim: 3,
            output_dim: 2,
            hidden_dim: 5,
            layer_count: layers,
            activation: Activation::Tanh,
        }
    }

    #[test]
    fn zero_network_gives_zero_output() {
        let mut store = ParamStore::new();
        let mlp = Mlp::register::<ChaCha8Rng>(&mut store, "f", spec(3), Init::Zeros).unwrap();
        let mut tape = Tape::new();
        let bound = store.bind(&mut tape);
        let x = tape.leaf(Tensor::from_elem((4, 3), 0.7));
        let y = mlp.forward(&mut tape, &bound, x).unwrap();
        assert!(tape.value(y).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_identity_layer_is_identity() {
        let mut store = ParamStore::new();
        let s = MlpSpec { output_dim: 3, ..spec(1) };
        let mlp = Mlp::register::<ChaCha8Rng>(&mut store, "f", s, Init::Zeros).unwrap();
        *store.value_mut(mlp.layers()[0].0) = Tensor::eye(3);
        let mut tape = Tape::new();
        let bound = store.bind(&mut tape);
        let input = Tensor::from_shape_fn((2, 3), |(i, j)| (i * 3 + j) as f64 - 2.5);
        let x = tape.leaf(input.clone());
        let y = mlp.forward(&mut tape, &bound, x).unwrap();
        assert_eq!(tape.value(y), &input);
    }

    #[test]
    fn output_shape_and_init_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let mlp = Mlp::register(&mut store, "f", spec(3), Init::Uniform(&mut rng)).unwrap();
        assert_eq!(store.len(), 6);
        let w0 = store.value(mlp.layers()[0].0);
        assert!(w0.iter().all(|v| v.abs() <= (1.0f64 / 3.0).sqrt()));
        let mut tape = Tape::new();
        let bound = store.bind(&mut tape);
        let x = tape.leaf(Tensor::ones((7, 3)));
        let y = mlp.forward(&mut tape, &bound, x).unwrap();
        assert_eq!(tape.shape(y), (7, 2));
        let bad = tape.leaf(Tensor::ones((7, 4)));
        assert!(mlp.forward(&mut tape, &bound, bad).is_err());
    }

    #[test]
    fn conditioned_forward_equals_concatenated_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut store = ParamStore::new();
        let mlp = Mlp::register(&mut store, "f", spec(2), Init::Uniform(&mut rng)).unwrap();
        let mut tape = Tape::new();
        let bound = store.bind(&mut tape);
        let x = tape.leaf(Tensor::from_shape_fn((4, 1), |(i, _)| i as f64 * 0.3));
        let cond = tape.leaf(ndarray::array![[0.5, -1.0]]);
        let a = mlp.forward_conditioned(&mut tape, &bound, x, cond).unwrap();
        let wide = tape.broadcast(cond, (4, 2)).unwrap();
        let full = tape.concat_cols(&[x, wide]).unwrap();
        let b = mlp.forward(&mut tape, &bound, full).unwrap();
        let diff = (tape.value(a) - tape.value(b)).mapv(f64::abs).sum();
        assert!(diff < 1e-14);
    }

    #[test]
    fn zero_dimensions_are_rejected() {
        let mut store = ParamStore::new();
        let s = MlpSpec { hidden_dim: 0, ..spec(2) };
        assert!(Mlp::register::<ChaCha8Rng>(&mut store, "f", s, Init::Zeros).is_err());
    }
}
