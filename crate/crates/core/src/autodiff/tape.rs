use ndarray::{concatenate, s, Array2, Axis, Zip};

use crate::error::{Error, Result};

/// Dense row-major matrix; every tape value is two-dimensional.
pub type Tensor = Array2<f64>;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Neg(Var),
    Scale(Var, f64),
    MulConst(Var, Tensor),
    Exp(Var),
    Log(Var),
    Sin(Var),
    Cos(Var),
    Tanh(Var),
    Softsign(Var),
    Silu(Var),
    Square(Var),
    MatMul(Var, Var),
    Affine(Var, Var, Var),
    Sum(Var),
    Mean(Var),
    SumRows(Var),
    SumCols(Var),
    Reshape(Var),
    Transpose(Var),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    Broadcast(Var),
    Select(Array2<bool>, Var, Var),
    ColumnMap(Var, Tensor),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Append-only record of primitive operations for reverse-mode differentiation.
///
/// Nodes are stored in creation order, which is a topological order; the
/// backward pass walks them in reverse.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of one scalar output with respect to every node that reaches it.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient of `v`, or zeros shaped like `like` when `v` does not reach the output.
    pub fn get_or_zeros(&self, v: Var, like: &Tensor) -> Tensor {
        self.get(v).cloned().unwrap_or_else(|| Tensor::zeros(like.raw_dim()))
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn broadcast_shape(op: &'static str, a: &[usize], b: &[usize]) -> Result<(usize, usize)> {
    let dim = |x: usize, y: usize| -> Option<usize> {
        if x == y || y == 1 {
            Some(x)
        } else if x == 1 {
            Some(y)
        } else {
            None
        }
    };
    match (dim(a[0], b[0]), dim(a[1], b[1])) {
        (Some(r), Some(c)) => Ok((r, c)),
        _ => Err(Error::shape(op, format!("{a:?}"), format!("{b:?}"))),
    }
}

/// Sums a broadcast gradient back down to `shape`.
fn unbroadcast(g: Tensor, shape: &[usize]) -> Tensor {
    let mut g = g;
    for axis in 0..2 {
        if shape[axis] == 1 && g.shape()[axis] != 1 {
            g = g.sum_axis(Axis(axis)).insert_axis(Axis(axis));
        }
    }
    g
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Records an input. Constants and parameters are both leaves.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.leaf(Tensor::from_elem((1, 1), value))
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.dim()
    }

    fn binary(
        &mut self,
        op_name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let shape = broadcast_shape(op_name, av.shape(), bv.shape())?;
        let ab = av.broadcast(shape).expect("checked broadcast");
        let bb = bv.broadcast(shape).expect("checked broadcast");
        let value = Zip::from(&ab).and(&bb).map_collect(|&x, &y| f(x, y));
        Ok(self.push(value, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("div", a, b, |x, y| x / y, Op::Div(a, b))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let value = self.nodes[a.0].value.mapv(f);
        self.push(value, op)
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.unary(a, |x| -x, Op::Neg(a))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        self.unary(a, |x| k * x, Op::Scale(a, k))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, f64::exp, Op::Exp(a))
    }

    pub fn log(&mut self, a: Var) -> Var {
        self.unary(a, f64::ln, Op::Log(a))
    }

    pub fn sin(&mut self, a: Var) -> Var {
        self.unary(a, f64::sin, Op::Sin(a))
    }

    pub fn cos(&mut self, a: Var) -> Var {
        self.unary(a, f64::cos, Op::Cos(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn softsign(&mut self, a: Var) -> Var {
        self.unary(a, |x| x / (1.0 + x.abs()), Op::Softsign(a))
    }

    pub fn silu(&mut self, a: Var) -> Var {
        self.unary(a, |x| x * sigmoid(x), Op::Silu(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, |x| x * x, Op::Square(a))
    }

    /// Elementwise product with a constant that broadcasts against `a`.
    pub fn mul_const(&mut self, a: Var, c: &Tensor) -> Result<Var> {
        let av = &self.nodes[a.0].value;
        let shape = broadcast_shape("mul_const", av.shape(), c.shape())?;
        if shape != av.dim() {
            return Err(Error::shape("mul_const", format!("{:?}", av.shape()), format!("{shape:?}")));
        }
        let cb = c.broadcast(shape).expect("checked broadcast");
        let value = av * &cb;
        Ok(self.push(value, Op::MulConst(a, cb.to_owned())))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if av.ncols() != bv.nrows() {
            return Err(Error::shape(
                "matmul",
                format!("{} rows on the right", av.ncols()),
                format!("{:?}", bv.shape()),
            ));
        }
        let value = av.dot(bv);
        Ok(self.push(value, Op::MatMul(a, b)))
    }

    /// `x · w + b` with `b` a single row broadcast over the batch.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (
            &self.nodes[x.0].value,
            &self.nodes[w.0].value,
            &self.nodes[b.0].value,
        );
        if xv.ncols() != wv.nrows() || bv.dim() != (1, wv.ncols()) {
            return Err(Error::shape(
                "affine",
                format!("x [n, {}], b [1, {}]", wv.nrows(), wv.ncols()),
                format!("x {:?}, b {:?}", xv.shape(), bv.shape()),
            ));
        }
        let mut value = xv.dot(wv);
        value += bv;
        Ok(self.push(value, Op::Affine(x, w, b)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = self.nodes[a.0].value.sum();
        self.push(Tensor::from_elem((1, 1), v), Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let av = &self.nodes[a.0].value;
        let v = av.sum() / av.len() as f64;
        self.push(Tensor::from_elem((1, 1), v), Op::Mean(a))
    }

    /// Sums over rows, producing `[1, cols]`.
    pub fn sum_rows(&mut self, a: Var) -> Var {
        let v = self.nodes[a.0].value.sum_axis(Axis(0)).insert_axis(Axis(0));
        self.push(v, Op::SumRows(a))
    }

    /// Sums over columns, producing `[rows, 1]`.
    pub fn sum_cols(&mut self, a: Var) -> Var {
        let v = self.nodes[a.0].value.sum_axis(Axis(1)).insert_axis(Axis(1));
        self.push(v, Op::SumCols(a))
    }

    /// Row-major reshape.
    pub fn reshape(&mut self, a: Var, shape: (usize, usize)) -> Result<Var> {
        let av = &self.nodes[a.0].value;
        if av.len() != shape.0 * shape.1 {
            return Err(Error::shape("reshape", av.len(), shape.0 * shape.1));
        }
        let v = Tensor::from_shape_vec(shape, av.iter().copied().collect())
            .expect("length checked");
        Ok(self.push(v, Op::Reshape(a)))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.nodes[a.0].value.t().as_standard_layout().to_owned();
        self.push(v, Op::Transpose(a))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let av = &self.nodes[a.0].value;
        if start >= end || end > av.nrows() {
            return Err(Error::shape("slice_rows", format!("range within {} rows", av.nrows()), format!("{start}..{end}")));
        }
        let v = av.slice(s![start..end, ..]).to_owned();
        Ok(self.push(v, Op::SliceRows(a, start)))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let av = &self.nodes[a.0].value;
        if start >= end || end > av.ncols() {
            return Err(Error::shape("slice_cols", format!("range within {} cols", av.ncols()), format!("{start}..{end}")));
        }
        let v = av.slice(s![.., start..end]).to_owned();
        Ok(self.push(v, Op::SliceCols(a, start)))
    }

    fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::shape("concat", "at least one part", 0));
        }
        let views: Vec<_> = parts.iter().map(|p| self.nodes[p.0].value.view()).collect();
        let v = concatenate(Axis(axis), &views).map_err(|e| {
            Error::shape("concat", "matching off-axis dimension", e.to_string())
        })?;
        let op = if axis == 0 {
            Op::ConcatRows(parts.to_vec())
        } else {
            Op::ConcatCols(parts.to_vec())
        };
        Ok(self.push(v, op))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        self.concat(parts, 0)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        self.concat(parts, 1)
    }

    pub fn broadcast(&mut self, a: Var, shape: (usize, usize)) -> Result<Var> {
        let av = &self.nodes[a.0].value;
        let v = av
            .broadcast(shape)
            .ok_or_else(|| Error::shape("broadcast", format!("{shape:?}"), format!("{:?}", av.shape())))?
            .to_owned();
        Ok(self.push(v, Op::Broadcast(a)))
    }

    /// Elementwise `mask ? a : b`; operands must share the mask's shape.
    pub fn select(&mut self, mask: Array2<bool>, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if av.dim() != mask.dim() || bv.dim() != mask.dim() {
            return Err(Error::shape("select", format!("{:?}", mask.shape()), format!("{:?} / {:?}", av.shape(), bv.shape())));
        }
        let v = Zip::from(&mask)
            .and(av)
            .and(bv)
            .map_collect(|&m, &x, &y| if m { x } else { y });
        Ok(self.push(v, Op::Select(mask, a, b)))
    }

    /// Reduces each column of `a` with an externally evaluated function.
    ///
    /// `values` is `[1, cols]`; `jacobian` has the shape of `a` and holds the
    /// derivative of each column's value with respect to that column.
    pub fn column_map(&mut self, a: Var, values: Tensor, jacobian: Tensor) -> Result<Var> {
        let shape = self.nodes[a.0].value.dim();
        if jacobian.dim() != shape || values.dim() != (1, shape.1) {
            return Err(Error::shape(
                "column_map",
                format!("{shape:?}"),
                format!("values {:?}, jacobian {:?}", values.shape(), jacobian.shape()),
            ));
        }
        Ok(self.push(values, Op::ColumnMap(a, jacobian)))
    }

    /// Reverse pass from a scalar output, seeded with 1.
    pub fn backward(&self, output: Var) -> Gradients {
        self.backward_seeded(output, Tensor::ones(self.nodes[output.0].value.raw_dim()))
    }

    /// Reverse pass with an explicit output cotangent.
    pub fn backward_seeded(&self, output: Var, seed: Tensor) -> Gradients {
        assert_eq!(seed.dim(), self.nodes[output.0].value.dim(), "seed shape");
        let mut grads: Vec<Option<Tensor>> = vec![None; output.0 + 1];
        grads[output.0] = Some(seed);
        for i in (0..=output.0).rev() {
            let node = &self.nodes[i];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
        }
        Gradients { grads }
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        let mut acc = |v: Var, contrib: Tensor| match &mut grads[v.0] {
            Some(existing) => *existing += &contrib,
            slot @ None => *slot = Some(contrib),
        };
        let out = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                acc(*a, unbroadcast(g.clone(), val(*a).shape()));
                acc(*b, unbroadcast(g.clone(), val(*b).shape()));
            }
            Op::Sub(a, b) => {
                acc(*a, unbroadcast(g.clone(), val(*a).shape()));
                acc(*b, unbroadcast(-g, val(*b).shape()));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                acc(*a, unbroadcast(g * bv, av.shape()));
                acc(*b, unbroadcast(g * av, bv.shape()));
            }
            Op::Div(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                let ga = g / bv;
                let gb = -(&ga * out);
                acc(*a, unbroadcast(ga, av.shape()));
                acc(*b, unbroadcast(gb, bv.shape()));
            }
            Op::Neg(a) => acc(*a, -g),
            Op::Scale(a, k) => acc(*a, g * *k),
            Op::MulConst(a, c) => acc(*a, g * c),
            Op::Exp(a) => acc(*a, g * out),
            Op::Log(a) => acc(*a, g / val(*a)),
            Op::Sin(a) => acc(*a, Zip::from(g).and(val(*a)).map_collect(|&g, &x| g * x.cos())),
            Op::Cos(a) => acc(*a, Zip::from(g).and(val(*a)).map_collect(|&g, &x| -g * x.sin())),
            Op::Tanh(a) => acc(*a, Zip::from(g).and(out).map_collect(|&g, &y| g * (1.0 - y * y))),
            Op::Softsign(a) => acc(
                *a,
                Zip::from(g).and(val(*a)).map_collect(|&g, &x| {
                    let d = 1.0 + x.abs();
                    g / (d * d)
                }),
            ),
            Op::Silu(a) => acc(
                *a,
                Zip::from(g).and(val(*a)).map_collect(|&g, &x| {
                    let s = sigmoid(x);
                    g * s * (1.0 + x * (1.0 - s))
                }),
            ),
            Op::Square(a) => acc(*a, Zip::from(g).and(val(*a)).map_collect(|&g, &x| 2.0 * g * x)),
            Op::MatMul(a, b) => {
                acc(*a, g.dot(&val(*b).t()));
                acc(*b, val(*a).t().dot(g));
            }
            Op::Affine(x, w, b) => {
                acc(*x, g.dot(&val(*w).t()));
                acc(*w, val(*x).t().dot(g));
                acc(*b, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
            }
            Op::Sum(a) => acc(*a, Tensor::from_elem(val(*a).raw_dim(), g[[0, 0]])),
            Op::Mean(a) => {
                let av = val(*a);
                acc(*a, Tensor::from_elem(av.raw_dim(), g[[0, 0]] / av.len() as f64))
            }
            Op::SumRows(a) => {
                let shape = val(*a).dim();
                acc(*a, g.broadcast(shape).expect("row gradient").to_owned())
            }
            Op::SumCols(a) => {
                let shape = val(*a).dim();
                acc(*a, g.broadcast(shape).expect("column gradient").to_owned())
            }
            Op::Reshape(a) => {
                let shape = val(*a).dim();
                acc(
                    *a,
                    Tensor::from_shape_vec(shape, g.iter().copied().collect()).expect("reshape back"),
                )
            }
            Op::Transpose(a) => acc(*a, g.t().as_standard_layout().to_owned()),
            Op::SliceRows(a, start) => {
                let mut full = Tensor::zeros(val(*a).raw_dim());
                full.slice_mut(s![*start..*start + g.nrows(), ..]).assign(g);
                acc(*a, full)
            }
            Op::SliceCols(a, start) => {
                let mut full = Tensor::zeros(val(*a).raw_dim());
                full.slice_mut(s![.., *start..*start + g.ncols()]).assign(g);
                acc(*a, full)
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for p in parts {
                    let rows = val(*p).nrows();
                    acc(*p, g.slice(s![offset..offset + rows, ..]).to_owned());
                    offset += rows;
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for p in parts {
                    let cols = val(*p).ncols();
                    acc(*p, g.slice(s![.., offset..offset + cols]).to_owned());
                    offset += cols;
                }
            }
            Op::Broadcast(a) => acc(*a, unbroadcast(g.clone(), val(*a).shape())),
            Op::Select(mask, a, b) => {
                acc(*a, Zip::from(mask).and(g).map_collect(|&m, &g| if m { g } else { 0.0 }));
                acc(*b, Zip::from(mask).and(g).map_collect(|&m, &g| if m { 0.0 } else { g }));
            }
            Op::ColumnMap(a, jac) => acc(*a, jac * g),
        }
    }
}
