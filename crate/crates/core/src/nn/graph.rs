//! Tape of tensor operations recorded during the forward pass.
//!
//! Every op appends a node holding its output value; `backward` walks the
//! tape in reverse and accumulates gradients into nodes that require them.

use crate::error::{Error, Result};
use crate::nn::{gemm_acc, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Op<T> {
    Input,
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Tanh(Var),
    Sigmoid(Var),
    Concat(Var, Var),
    SliceCols { x: Var, start: usize },
    TimeStep { x: Var, t: usize },
    Stack(Vec<Var>),
    Reshape(Var),
    MaskMul { x: Var, mask: Vec<T> },
    CausalConv { x: Var, kernel: Var, dilation: usize },
    Mse { pred: Var, target: Vec<T> },
}

struct Node<T> {
    shape: Vec<usize>,
    value: Vec<T>,
    grad: Option<Vec<T>>,
    requires_grad: bool,
    op: Op<T>,
}

pub struct Graph<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn last_dim(shape: &[usize]) -> usize {
    *shape.last().expect("non-scalar shape")
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<T>, op: Op<T>, requires_grad: bool) -> Var {
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        self.nodes.push(Node {
            shape,
            value,
            grad: None,
            requires_grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> &Node<T> {
        &self.nodes[v.0]
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Constant input (no gradient).
    pub fn input(&mut self, shape: Vec<usize>, value: Vec<T>) -> Result<Var> {
        check_len(&shape, value.len())?;
        Ok(self.push(shape, value, Op::Input, false))
    }

    /// Differentiable leaf, typically a parameter.
    pub fn leaf(&mut self, shape: Vec<usize>, value: Vec<T>) -> Result<Var> {
        check_len(&shape, value.len())?;
        Ok(self.push(shape, value, Op::Leaf, true))
    }

    pub fn value(&self, v: Var) -> &[T] {
        &self.node(v).value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.node(v).shape
    }

    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.node(v).grad.as_deref()
    }

    /// Scalar value of a one-element node.
    pub fn scalar(&self, v: Var) -> T {
        self.node(v).value[0]
    }

    /// `[.., k] · [k, n]`; all leading dimensions of `a` are treated as rows.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sb.len() != 2 || last_dim(&sa) != sb[0] {
            return Err(Error::Shape(format!("matmul {sa:?} x {sb:?}")));
        }
        let (k, n) = (sb[0], sb[1]);
        let m = self.value(a).len() / k;
        let mut out = vec![T::zero(); m * n];
        gemm_acc(m, k, n, self.value(a), false, self.value(b), false, &mut out);
        let mut shape = sa;
        *shape.last_mut().unwrap() = n;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(shape, out, Op::MatMul(a, b), rg))
    }

    /// Adds a `[n]` bias to every row of a `[.., n]` tensor.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let n = last_dim(self.shape(x));
        if self.shape(b) != [n] {
            return Err(Error::Shape(format!(
                "bias {:?} for rows of width {n}",
                self.shape(b)
            )));
        }
        let bias = self.value(b);
        let out: Vec<T> = self
            .value(x)
            .chunks_exact(n)
            .flat_map(|row| row.iter().zip(bias).map(|(v, c)| *v + *c))
            .collect();
        let shape = self.shape(x).to_vec();
        let rg = self.rg(x) || self.rg(b);
        Ok(self.push(shape, out, Op::AddBias(x, b), rg))
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::Shape(format!(
                "{what} {:?} vs {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x + y);
        let shape = self.shape(a).to_vec();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(shape, out, Op::Add(a, b), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x * y);
        let shape = self.shape(a).to_vec();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(shape, out, Op::Mul(a, b), rg))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let out = self.value(x).iter().map(|v| v.tanh()).collect();
        let shape = self.shape(x).to_vec();
        let rg = self.rg(x);
        self.push(shape, out, Op::Tanh(x), rg)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let out = self.value(x).iter().map(|&v| sigmoid(v)).collect();
        let shape = self.shape(x).to_vec();
        let rg = self.rg(x);
        self.push(shape, out, Op::Sigmoid(x), rg)
    }

    /// Concatenates two `[rows, _]` tensors along the last axis.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[0] != sb[0] {
            return Err(Error::Shape(format!("concat {sa:?} with {sb:?}")));
        }
        let (rows, na, nb) = (sa[0], sa[1], sb[1]);
        let mut out = Vec::with_capacity(rows * (na + nb));
        for r in 0..rows {
            out.extend_from_slice(&self.value(a)[r * na..(r + 1) * na]);
            out.extend_from_slice(&self.value(b)[r * nb..(r + 1) * nb]);
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(vec![rows, na + nb], out, Op::Concat(a, b), rg))
    }

    /// Columns `start..start+len` of a `[rows, n]` tensor.
    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let s = self.shape(x);
        if s.len() != 2 || start + len > s[1] || len == 0 {
            return Err(Error::Shape(format!("slice {start}..{} of {s:?}", start + len)));
        }
        let n = s[1];
        let rows = s[0];
        let out: Vec<T> = self
            .value(x)
            .chunks_exact(n)
            .flat_map(|row| row[start..start + len].iter().copied())
            .collect();
        let rg = self.rg(x);
        Ok(self.push(vec![rows, len], out, Op::SliceCols { x, start }, rg))
    }

    /// Step `t` of a `[batch, time, n]` tensor, as `[batch, n]`.
    pub fn time_step(&mut self, x: Var, t: usize) -> Result<Var> {
        let s = self.shape(x);
        if s.len() != 3 || t >= s[1] {
            return Err(Error::Shape(format!("time step {t} of {s:?}")));
        }
        let (b, steps, n) = (s[0], s[1], s[2]);
        let v = self.value(x);
        let mut out = Vec::with_capacity(b * n);
        for i in 0..b {
            let off = (i * steps + t) * n;
            out.extend_from_slice(&v[off..off + n]);
        }
        let rg = self.rg(x);
        Ok(self.push(vec![b, n], out, Op::TimeStep { x, t }, rg))
    }

    /// Stacks `[batch, n]` tensors into `[batch, len, n]`.
    pub fn stack(&mut self, xs: &[Var]) -> Result<Var> {
        let first = *xs
            .first()
            .ok_or_else(|| Error::Shape("stack of nothing".into()))?;
        let s = self.shape(first).to_vec();
        if s.len() != 2 || xs.iter().any(|&x| self.shape(x) != s.as_slice()) {
            return Err(Error::Shape("stack needs equal [batch, n] shapes".into()));
        }
        let (b, n, steps) = (s[0], s[1], xs.len());
        let mut out = vec![T::zero(); b * steps * n];
        for (t, &x) in xs.iter().enumerate() {
            let v = self.value(x);
            for i in 0..b {
                let dst = (i * steps + t) * n;
                out[dst..dst + n].copy_from_slice(&v[i * n..(i + 1) * n]);
            }
        }
        let rg = xs.iter().any(|&x| self.rg(x));
        Ok(self.push(vec![b, steps, n], out, Op::Stack(xs.to_vec()), rg))
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        check_len(&shape, self.value(x).len())?;
        let value = self.value(x).to_vec();
        let rg = self.rg(x);
        Ok(self.push(shape, value, Op::Reshape(x), rg))
    }

    /// Elementwise product with a constant mask (used by dropout).
    pub fn mask_mul(&mut self, x: Var, mask: Vec<T>) -> Result<Var> {
        if mask.len() != self.value(x).len() {
            return Err(Error::Shape(format!(
                "mask of {} for {} values",
                mask.len(),
                self.value(x).len()
            )));
        }
        let out = zip_map(self.value(x), &mask, |a, m| a * m);
        let shape = self.shape(x).to_vec();
        let rg = self.rg(x);
        Ok(self.push(shape, out, Op::MaskMul { x, mask }, rg))
    }

    /// Dilated causal convolution of `[batch, time, c_in]` with a
    /// `[k, c_in, c_out]` kernel, zero-padded on the left so the output keeps
    /// the input length: `out[t] = sum_j kernel[j] · in[t - (k-1-j)·d]`.
    pub fn causal_conv(&mut self, x: Var, kernel: Var, dilation: usize) -> Result<Var> {
        let (sx, sk) = (self.shape(x).to_vec(), self.shape(kernel).to_vec());
        if sx.len() != 3 || sk.len() != 3 || sx[2] != sk[1] || dilation == 0 {
            return Err(Error::Shape(format!(
                "causal conv of {sx:?} with kernel {sk:?}, dilation {dilation}"
            )));
        }
        let (b, steps, cin) = (sx[0], sx[1], sx[2]);
        let (k, cout) = (sk[0], sk[2]);
        let xv = self.value(x);
        let kv = self.value(kernel);
        let mut out = vec![T::zero(); b * steps * cout];
        for j in 0..k {
            let shift = (k - 1 - j) * dilation;
            if shift >= steps {
                continue;
            }
            let tap = &kv[j * cin * cout..(j + 1) * cin * cout];
            let rows = steps - shift;
            if shift == 0 {
                gemm_acc(b * steps, cin, cout, xv, false, tap, false, &mut out);
                continue;
            }
            for i in 0..b {
                let src = &xv[i * steps * cin..(i * steps + rows) * cin];
                let dst = &mut out[(i * steps + shift) * cout..(i + 1) * steps * cout];
                gemm_acc(rows, cin, cout, src, false, tap, false, dst);
            }
        }
        let rg = self.rg(x) || self.rg(kernel);
        Ok(self.push(
            vec![b, steps, cout],
            out,
            Op::CausalConv {
                x,
                kernel,
                dilation,
            },
            rg,
        ))
    }

    /// Mean squared error against a constant target; returns a `[1]` node.
    pub fn mse(&mut self, pred: Var, target: Vec<T>) -> Result<Var> {
        let p = self.value(pred);
        if p.len() != target.len() || p.is_empty() {
            return Err(Error::Shape(format!(
                "mse of {} predictions against {} targets",
                p.len(),
                target.len()
            )));
        }
        let n = T::from_usize(p.len()).unwrap();
        let sum = p
            .iter()
            .zip(&target)
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .fold(T::zero(), |acc, v| acc + v);
        let rg = self.rg(pred);
        Ok(self.push(vec![1], vec![sum / n], Op::Mse { pred, target }, rg))
    }

    fn grad_buf(&mut self, v: Var) -> Vec<T> {
        let node = &mut self.nodes[v.0];
        node.grad
            .take()
            .unwrap_or_else(|| vec![T::zero(); node.value.len()])
    }

    fn put_grad(&mut self, v: Var, g: Vec<T>) {
        self.nodes[v.0].grad = Some(g);
    }

    /// Applies `f(grad_of_v, graph)` to the gradient buffer of `v` if it needs one.
    fn accumulate(&mut self, v: Var, f: impl FnOnce(&mut [T], &Self)) {
        if !self.rg(v) {
            return;
        }
        let mut g = self.grad_buf(v);
        f(&mut g, self);
        self.put_grad(v, g);
    }

    /// Reverse pass from a one-element node. Leaf gradients are kept;
    /// intermediate gradients are released as soon as they are consumed.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::Shape(format!(
                "backward from non-scalar {:?}",
                self.shape(loss)
            )));
        }
        for node in &mut self.nodes {
            if !matches!(node.op, Op::Leaf) {
                node.grad = None;
            }
        }
        self.nodes[loss.0].grad = Some(vec![T::one()]);

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad || matches!(self.nodes[i].op, Op::Leaf | Op::Input) {
                continue;
            }
            let Some(g) = self.nodes[i].grad.take() else {
                continue;
            };
            let op = std::mem::replace(&mut self.nodes[i].op, Op::Input);
            self.backward_op(i, &op, &g);
            self.nodes[i].op = op;
        }
        Ok(())
    }

    fn backward_op(&mut self, i: usize, op: &Op<T>, g: &[T]) {
        match op {
            Op::Input | Op::Leaf => {}
            Op::MatMul(a, b) => {
                let k = self.shape(*b)[0];
                let n = self.shape(*b)[1];
                let m = self.value(*a).len() / k;
                self.accumulate(*a, |ga, gr| {
                    gemm_acc(m, n, k, g, false, gr.value(*b), true, ga);
                });
                self.accumulate(*b, |gb, gr| {
                    gemm_acc(k, m, n, gr.value(*a), true, g, false, gb);
                });
            }
            Op::AddBias(x, b) => {
                self.accumulate(*x, |gx, _| add_into(gx, g));
                let n = self.shape(*b)[0];
                self.accumulate(*b, |gb, _| {
                    for row in g.chunks_exact(n) {
                        add_into(gb, row);
                    }
                });
            }
            Op::Add(a, b) => {
                self.accumulate(*a, |ga, _| add_into(ga, g));
                self.accumulate(*b, |gb, _| add_into(gb, g));
            }
            Op::Mul(a, b) => {
                self.accumulate(*a, |ga, gr| {
                    for ((d, gi), bv) in ga.iter_mut().zip(g).zip(gr.value(*b)) {
                        *d = *d + *gi * *bv;
                    }
                });
                self.accumulate(*b, |gb, gr| {
                    for ((d, gi), av) in gb.iter_mut().zip(g).zip(gr.value(*a)) {
                        *d = *d + *gi * *av;
                    }
                });
            }
            Op::Tanh(x) => {
                self.accumulate(*x, |gx, gr| {
                    let y = &gr.nodes[i].value;
                    for ((d, gi), yv) in gx.iter_mut().zip(g).zip(y) {
                        *d = *d + *gi * (T::one() - *yv * *yv);
                    }
                });
            }
            Op::Sigmoid(x) => {
                self.accumulate(*x, |gx, gr| {
                    let y = &gr.nodes[i].value;
                    for ((d, gi), yv) in gx.iter_mut().zip(g).zip(y) {
                        *d = *d + *gi * *yv * (T::one() - *yv);
                    }
                });
            }
            Op::Concat(a, b) => {
                let na = self.shape(*a)[1];
                let nb = self.shape(*b)[1];
                self.accumulate(*a, |ga, _| {
                    for (dst, row) in ga.chunks_exact_mut(na).zip(g.chunks_exact(na + nb)) {
                        add_into(dst, &row[..na]);
                    }
                });
                self.accumulate(*b, |gb, _| {
                    for (dst, row) in gb.chunks_exact_mut(nb).zip(g.chunks_exact(na + nb)) {
                        add_into(dst, &row[na..]);
                    }
                });
            }
            Op::SliceCols { x, start } => {
                let n = self.shape(*x)[1];
                let len = self.nodes[i].shape[1];
                let start = *start;
                self.accumulate(*x, |gx, _| {
                    for (dst, row) in gx.chunks_exact_mut(n).zip(g.chunks_exact(len)) {
                        add_into(&mut dst[start..start + len], row);
                    }
                });
            }
            Op::TimeStep { x, t } => {
                let s = self.shape(*x).to_vec();
                let (steps, n) = (s[1], s[2]);
                let t = *t;
                self.accumulate(*x, |gx, _| {
                    for (b, row) in g.chunks_exact(n).enumerate() {
                        let off = (b * steps + t) * n;
                        add_into(&mut gx[off..off + n], row);
                    }
                });
            }
            Op::Stack(xs) => {
                let s = self.nodes[i].shape.clone();
                let (batch, steps, n) = (s[0], s[1], s[2]);
                for (t, x) in xs.iter().enumerate() {
                    self.accumulate(*x, |gx, _| {
                        for b in 0..batch {
                            let off = (b * steps + t) * n;
                            add_into(&mut gx[b * n..(b + 1) * n], &g[off..off + n]);
                        }
                    });
                }
            }
            Op::Reshape(x) => self.accumulate(*x, |gx, _| add_into(gx, g)),
            Op::MaskMul { x, mask } => {
                self.accumulate(*x, |gx, _| {
                    for ((d, gi), m) in gx.iter_mut().zip(g).zip(mask) {
                        *d = *d + *gi * *m;
                    }
                });
            }
            Op::CausalConv {
                x,
                kernel,
                dilation,
            } => {
                let sx = self.shape(*x).to_vec();
                let sk = self.shape(*kernel).to_vec();
                let (b, steps, cin) = (sx[0], sx[1], sx[2]);
                let (k, cout) = (sk[0], sk[2]);
                let d = *dilation;
                self.accumulate(*x, |gx, gr| {
                    let kv = gr.value(*kernel);
                    for j in 0..k {
                        let shift = (k - 1 - j) * d;
                        if shift >= steps {
                            continue;
                        }
                        let tap = &kv[j * cin * cout..(j + 1) * cin * cout];
                        let rows = steps - shift;
                        if shift == 0 {
                            gemm_acc(b * steps, cout, cin, g, false, tap, true, gx);
                            continue;
                        }
                        for bi in 0..b {
                            let src = &g[(bi * steps + shift) * cout..(bi + 1) * steps * cout];
                            let dst = &mut gx[bi * steps * cin..(bi * steps + rows) * cin];
                            gemm_acc(rows, cout, cin, src, false, tap, true, dst);
                        }
                    }
                });
                self.accumulate(*kernel, |gk, gr| {
                    let xv = gr.value(*x);
                    for j in 0..k {
                        let shift = (k - 1 - j) * d;
                        if shift >= steps {
                            continue;
                        }
                        let tap = &mut gk[j * cin * cout..(j + 1) * cin * cout];
                        let rows = steps - shift;
                        if shift == 0 {
                            gemm_acc(cin, b * steps, cout, xv, true, g, false, tap);
                            continue;
                        }
                        for bi in 0..b {
                            let src = &xv[bi * steps * cin..(bi * steps + rows) * cin];
                            let gy = &g[(bi * steps + shift) * cout..(bi + 1) * steps * cout];
                            gemm_acc(cin, rows, cout, src, true, gy, false, tap);
                        }
                    }
                });
            }
            Op::Mse { pred, target } => {
                let n = T::from_usize(target.len()).unwrap();
                let scale = g[0] * (T::one() + T::one()) / n;
                self.accumulate(*pred, |gp, gr| {
                    for ((d, p), t) in gp.iter_mut().zip(gr.value(*pred)).zip(target) {
                        *d = *d + scale * (*p - *t);
                    }
                });
            }
        }
    }
}

#[inline]
pub(crate) fn sigmoid<T: Real>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

fn check_len(shape: &[usize], len: usize) -> Result<()> {
    if shape.is_empty() || shape.contains(&0) || shape.iter().product::<usize>() != len {
        return Err(Error::Shape(format!("shape {shape:?} for {len} values")));
    }
    Ok(())
}

fn zip_map<T: Real>(a: &[T], b: &[T], f: impl Fn(T, T) -> T) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

#[inline]
fn add_into<T: Real>(dst: &mut [T], src: &[T]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d = *d + *s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        let mut g = Graph::<f64>::new();
        let p = g.leaf(vec![2], vec![0.0, 0.0]).unwrap();
        let l = g.mse(p, vec![1.0, 3.0]).unwrap();
        assert_eq!(g.scalar(l), 5.0);
        g.backward(l).unwrap();
        // 2 (pred - target) / n
        assert_eq!(g.grad(p).unwrap(), &[-1.0, -3.0]);

        let mut g = Graph::<f64>::new();
        let p = g.leaf(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        let l = g.mse(p, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.scalar(l), 0.0);
        assert!(g.mse(p, vec![1.0]).is_err());
    }

    #[test]
    fn shared_input_accumulates() {
        // y = sum((x*x)) through mse against zero: d/dx of mean(x^4)
        let mut g = Graph::<f64>::new();
        let x = g.leaf(vec![2], vec![1.0, 2.0]).unwrap();
        let sq = g.mul(x, x).unwrap();
        let l = g.mse(sq, vec![0.0, 0.0]).unwrap();
        g.backward(l).unwrap();
        // d/dx (x^4 / 2) = 2 x^3
        assert_eq!(g.grad(x).unwrap(), &[2.0, 16.0]);
    }

    #[test]
    fn slicing_and_stacking() {
        let mut g = Graph::<f64>::new();
        let x = g
            .leaf(vec![2, 3, 2], (0..12).map(f64::from).collect())
            .unwrap();
        let t1 = g.time_step(x, 1).unwrap();
        assert_eq!(g.value(t1), &[2.0, 3.0, 8.0, 9.0]);
        let s = g.stack(&[t1, t1]).unwrap();
        assert_eq!(g.shape(s), &[2, 2, 2]);
        let c = g.slice_cols(t1, 1, 1).unwrap();
        assert_eq!(g.value(c), &[3.0, 9.0]);
        let cat = g.concat(t1, c).unwrap();
        assert_eq!(g.value(cat), &[2.0, 3.0, 3.0, 8.0, 9.0, 9.0]);
        let flat = g.reshape(cat, vec![6]).unwrap();
        let l = g.mse(flat, vec![0.0; 6]).unwrap();
        g.backward(l).unwrap();
        let gx = g.grad(x).unwrap();
        // only step 1 receives gradient; column 1 is used twice
        assert_eq!(gx[0], 0.0);
        assert!((gx[2] - 2.0 * 2.0 / 6.0).abs() < 1e-15);
        assert!((gx[3] - 2.0 * 2.0 * 3.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn errors_on_bad_shapes() {
        let mut g = Graph::<f64>::new();
        let a = g.input(vec![2, 3], vec![0.0; 6]).unwrap();
        let b = g.input(vec![2, 3], vec![0.0; 6]).unwrap();
        assert!(g.matmul(a, b).is_err());
        let c = g.input(vec![3], vec![0.0; 3]).unwrap();
        assert!(g.add(a, c).is_err());
        assert!(g.backward(a).is_err());
        assert!(g.input(vec![2, 2], vec![0.0; 3]).is_err());
    }
}
