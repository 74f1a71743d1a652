use crate::error::{Error, Result};

/// Lower clamp applied to the argument of `arcosh` before differentiating.
pub const ARCOSH_CLAMP: f64 = 1.0 + 1e-12;

/// Handle to a node on a [`Tape`]. Only meaningful for the tape that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Const,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Neg(Var),
    /// vector × scalar node
    Scale(Var, Var),
    MulConst(Var, f64),
    AddConst(Var),
    Dot(Var, Var),
    Sum(Var),
    Sqrt(Var),
    Tanh(Var),
    Artanh(Var),
    Arcosh(Var),
    Arcosh1p(Var),
    Exp(Var),
    Recip(Var),
    LeakyRelu(Var, f64),
    MatVec { m: Var, rows: usize, cols: usize, x: Var },
    Stack(Vec<Var>),
    Index(Var, usize),
}

#[derive(Debug, Clone)]
struct Node {
    value: Vec<f64>,
    op: Op,
    tracked: bool,
}

/// Records vector-valued operations for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order and [`Tape::backward`] is a single reverse sweep.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Adjoints produced by [`Tape::backward`].
#[derive(Debug, Clone)]
pub struct Adjoints {
    grads: Vec<Vec<f64>>,
}

impl Adjoints {
    /// `∂root/∂var`, zero when `var` is not on any path to the root.
    pub fn wrt(&self, var: Var) -> &[f64] {
        &self.grads[var.0]
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        let tracked = match &op {
            Op::Leaf => true,
            Op::Const => false,
            Op::Stack(parents) => parents.iter().any(|p| self.nodes[p.0].tracked),
            op => op_parents(op).iter().any(|p| self.nodes[p.0].tracked),
        };
        self.nodes.push(Node { value, op, tracked });
        Var(self.nodes.len() - 1)
    }

    /// A differentiable input.
    pub fn leaf(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    /// A constant; receives no adjoint.
    pub fn constant(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Const)
    }

    pub fn scalar_const(&mut self, value: f64) -> Var {
        self.constant(vec![value])
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    /// Value of a scalar node.
    pub fn scalar(&self, v: Var) -> f64 {
        let val = self.value(v);
        debug_assert_eq!(val.len(), 1, "scalar() on a vector node");
        val[0]
    }

    pub fn dim(&self, v: Var) -> usize {
        self.nodes[v.0].value.len()
    }

    fn zip(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.len(), vb.len(), "elementwise op on mismatched lengths");
        let value = va.iter().zip(vb).map(|(x, y)| f(*x, *y)).collect();
        self.push(value, op)
    }

    fn map(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let value = self.value(a).iter().map(|x| f(*x)).collect();
        self.push(value, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.zip(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.zip(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.zip(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.map(a, |x| -x, Op::Neg(a))
    }

    /// Vector `v` times scalar node `s`.
    pub fn scale(&mut self, v: Var, s: Var) -> Var {
        let k = self.scalar(s);
        self.map(v, |x| x * k, Op::Scale(v, s))
    }

    pub fn mul_const(&mut self, a: Var, c: f64) -> Var {
        self.map(a, |x| x * c, Op::MulConst(a, c))
    }

    pub fn add_const(&mut self, a: Var, c: f64) -> Var {
        self.map(a, |x| x + c, Op::AddConst(a))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.len(), vb.len(), "dot on mismatched lengths");
        let value = va.iter().zip(vb).map(|(x, y)| x * y).sum();
        self.push(vec![value], Op::Dot(a, b))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = self.value(a).iter().sum();
        self.push(vec![value], Op::Sum(a))
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        self.map(a, f64::sqrt, Op::Sqrt(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, f64::tanh, Op::Tanh(a))
    }

    pub fn artanh(&mut self, a: Var) -> Var {
        self.map(a, f64::atanh, Op::Artanh(a))
    }

    /// `arcosh`, evaluated at `max(z, 1)`.
    pub fn arcosh(&mut self, a: Var) -> Var {
        self.map(a, |z| z.max(1.0).acosh(), Op::Arcosh(a))
    }

    /// `arcosh(1 + u)` for `u ≥ 0`, without rounding `1 + u` first. The
    /// derivative clamp matches [`Tape::arcosh`].
    pub fn arcosh1p(&mut self, a: Var) -> Var {
        self.map(a, |u| crate::manifold::arcosh1p(u), Op::Arcosh1p(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.map(a, f64::exp, Op::Exp(a))
    }

    pub fn recip(&mut self, a: Var) -> Var {
        self.map(a, f64::recip, Op::Recip(a))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        self.map(
            a,
            |x| if x > 0.0 { x } else { slope * x },
            Op::LeakyRelu(a, slope),
        )
    }

    /// Dense product of the row-major `rows × cols` matrix held in `m` with `x`.
    pub fn matvec(&mut self, m: Var, rows: usize, cols: usize, x: Var) -> Var {
        let (vm, vx) = (self.value(m), self.value(x));
        assert_eq!(vm.len(), rows * cols, "matvec matrix shape");
        assert_eq!(vx.len(), cols, "matvec vector length");
        let value = vm
            .chunks_exact(cols)
            .map(|row| row.iter().zip(vx).map(|(a, b)| a * b).sum())
            .collect();
        self.push(value, Op::MatVec { m, rows, cols, x })
    }

    /// Stacks scalar nodes into one vector.
    pub fn stack(&mut self, parts: &[Var]) -> Var {
        let value = parts.iter().map(|p| self.scalar(*p)).collect();
        self.push(value, Op::Stack(parts.to_vec()))
    }

    /// Extracts one coordinate as a scalar node.
    pub fn index(&mut self, a: Var, i: usize) -> Var {
        let value = self.value(a)[i];
        self.push(vec![value], Op::Index(a, i))
    }

    /// Reverse sweep from a scalar root.
    pub fn backward(&self, root: Var) -> Result<Adjoints> {
        let root_val = self.value(root);
        if root_val.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "backward needs a scalar root, got length {}",
                root_val.len()
            )));
        }
        if !root_val[0].is_finite() {
            return Err(Error::NonFinite("backward root"));
        }
        let mut grads: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.value.len()])
            .collect();
        grads[root.0][0] = 1.0;

        for idx in (0..=root.0).rev() {
            let node = &self.nodes[idx];
            if !node.tracked || grads[idx].iter().all(|g| *g == 0.0) {
                continue;
            }
            let g = std::mem::take(&mut grads[idx]);
            self.propagate(node, &g, &mut grads);
            grads[idx] = g;
        }
        Ok(Adjoints { grads })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Vec<f64>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        let tracked = |v: Var| self.nodes[v.0].tracked;
        let mut acc = |v: Var, f: &dyn Fn(usize) -> f64| {
            if tracked(v) {
                for (i, slot) in grads[v.0].iter_mut().enumerate() {
                    *slot += f(i);
                }
            }
        };
        match &node.op {
            Op::Leaf | Op::Const => {}
            Op::Add(a, b) => {
                acc(*a, &|i| g[i]);
                acc(*b, &|i| g[i]);
            }
            Op::Sub(a, b) => {
                acc(*a, &|i| g[i]);
                acc(*b, &|i| -g[i]);
            }
            Op::Mul(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                acc(*a, &|i| g[i] * vb[i]);
                acc(*b, &|i| g[i] * va[i]);
            }
            Op::Neg(a) => acc(*a, &|i| -g[i]),
            Op::Scale(v, s) => {
                let (vv, k) = (val(*v), val(*s)[0]);
                acc(*v, &|i| g[i] * k);
                let gs: f64 = g.iter().zip(vv).map(|(x, y)| x * y).sum();
                acc(*s, &|_| gs);
            }
            Op::MulConst(a, c) => acc(*a, &|i| g[i] * c),
            Op::AddConst(a) => acc(*a, &|i| g[i]),
            Op::Dot(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                acc(*a, &|i| g[0] * vb[i]);
                acc(*b, &|i| g[0] * va[i]);
            }
            Op::Sum(a) => acc(*a, &|_| g[0]),
            Op::Sqrt(a) => {
                let out = &node.value;
                acc(*a, &|i| g[i] * 0.5 / out[i]);
            }
            Op::Tanh(a) => {
                let out = &node.value;
                acc(*a, &|i| g[i] * (1.0 - out[i] * out[i]));
            }
            Op::Artanh(a) => {
                let x = val(*a);
                acc(*a, &|i| g[i] / (1.0 - x[i] * x[i]));
            }
            Op::Arcosh(a) => {
                let z = val(*a);
                acc(*a, &|i| {
                    let zc = z[i].max(ARCOSH_CLAMP);
                    g[i] / (zc * zc - 1.0).sqrt()
                });
            }
            Op::Arcosh1p(a) => {
                let u = val(*a);
                acc(*a, &|i| {
                    let uc = u[i].max(ARCOSH_CLAMP - 1.0);
                    g[i] / (uc * (uc + 2.0)).sqrt()
                });
            }
            Op::Exp(a) => {
                let out = &node.value;
                acc(*a, &|i| g[i] * out[i]);
            }
            Op::Recip(a) => {
                let out = &node.value;
                acc(*a, &|i| -g[i] * out[i] * out[i]);
            }
            Op::LeakyRelu(a, slope) => {
                let x = val(*a);
                acc(*a, &|i| if x[i] > 0.0 { g[i] } else { g[i] * slope });
            }
            Op::MatVec { m, rows, cols, x } => {
                let (vm, vx) = (val(*m), val(*x));
                let cols = *cols;
                acc(*m, &|k| g[k / cols] * vx[k % cols]);
                acc(*x, &|j| (0..*rows).map(|i| vm[i * cols + j] * g[i]).sum());
            }
            Op::Stack(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    acc(*p, &|_| g[i]);
                }
            }
            Op::Index(a, j) => {
                let j = *j;
                acc(*a, &|i| if i == j { g[0] } else { 0.0 });
            }
        }
    }
}

fn op_parents(op: &Op) -> Vec<Var> {
    match op {
        Op::Leaf | Op::Const => vec![],
        Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Dot(a, b) | Op::Scale(a, b) => {
            vec![*a, *b]
        }
        Op::Neg(a)
        | Op::MulConst(a, _)
        | Op::AddConst(a)
        | Op::Sum(a)
        | Op::Sqrt(a)
        | Op::Tanh(a)
        | Op::Artanh(a)
        | Op::Arcosh(a)
        | Op::Arcosh1p(a)
        | Op::Exp(a)
        | Op::Recip(a)
        | Op::LeakyRelu(a, _)
        | Op::Index(a, _) => vec![*a],
        Op::MatVec { m, x, .. } => vec![*m, *x],
        Op::Stack(parts) => parts.clone(),
    }
}
