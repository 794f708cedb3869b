//! The computation tape: forward operators and the reverse pass.

use super::{Array, Scalar, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

enum Op<S> {
    Leaf,
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, S),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Conv2d {
        x: Var,
        w: Var,
        b: Option<Var>,
        stride: usize,
        pad: usize,
    },
    MaxPool2 {
        x: Var,
        argmax: Vec<usize>,
    },
    BilinearUp2(Var),
    ConcatChannels(Var, Var),
    MseLoss {
        pred: Var,
        gt: Var,
    },
    SafetyLoss {
        pred: Var,
        mask: Var,
    },
}

struct Node<S> {
    value: Array<S>,
    grad: Option<Vec<S>>,
    op: Op<S>,
}

/// Records a single forward computation. Every operator appends one node;
/// arguments always precede results, so node order is a topological order of
/// the graph and [`Tape::backward`] can walk it once in reverse.
pub struct Tape<S: Scalar> {
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Array<S>, op: Op<S>) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records an input with no history.
    pub fn leaf(&mut self, value: Array<S>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Array<S> {
        &self.nodes[v.0].value
    }

    /// Gradient accumulated for `v` by the latest [`Tape::backward`] call.
    pub fn grad(&self, v: Var) -> Option<&[S]> {
        self.nodes[v.0].grad.as_deref()
    }

    /// Clones the value out of the tape, detaching it from the history.
    pub fn detach(&self, v: Var) -> Array<S> {
        self.nodes[v.0].value.clone()
    }

    // ---- elementwise -----------------------------------------------------

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.check_same_shape("add", a, b)?;
        let data = self.nodes[a.0]
            .value
            .data()
            .iter()
            .zip(self.nodes[b.0].value.data())
            .map(|(&x, &y)| x + y)
            .collect();
        let shape = self.nodes[a.0].value.shape().to_vec();
        Ok(self.push(Array::from_vec(&shape, data).unwrap(), Op::Add(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.check_same_shape("mul", a, b)?;
        let data = self.nodes[a.0]
            .value
            .data()
            .iter()
            .zip(self.nodes[b.0].value.data())
            .map(|(&x, &y)| x * y)
            .collect();
        let shape = self.nodes[a.0].value.shape().to_vec();
        Ok(self.push(Array::from_vec(&shape, data).unwrap(), Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Var, factor: S) -> Var {
        let value = Array {
            shape: self.nodes[a.0].value.shape().to_vec(),
            data: self.nodes[a.0]
                .value
                .data()
                .iter()
                .map(|&x| x * factor)
                .collect(),
        };
        self.push(value, Op::Scale(a, factor))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.map_unary(a, sigmoid_scalar);
        self.push(value, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.map_unary(a, |x| x.tanh());
        self.push(value, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.map_unary(a, |x| if x > S::zero() { x } else { S::zero() });
        self.push(value, Op::Relu(a))
    }

    fn map_unary(&self, a: Var, f: impl Fn(S) -> S) -> Array<S> {
        Array {
            shape: self.nodes[a.0].value.shape().to_vec(),
            data: self.nodes[a.0].value.data().iter().map(|&x| f(x)).collect(),
        }
    }

    // ---- structured ops --------------------------------------------------

    /// 2D cross-correlation over NCHW input with an OIHW kernel and optional
    /// per-output-channel bias. `pad` is symmetric zero padding.
    pub fn conv2d(
        &mut self,
        x: Var,
        w: Var,
        b: Option<Var>,
        stride: usize,
        pad: usize,
    ) -> Result<Var, TensorError> {
        let (xs, ws) = (
            self.nodes[x.0].value.shape().to_vec(),
            self.nodes[w.0].value.shape().to_vec(),
        );
        if xs.len() != 4 || ws.len() != 4 {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                detail: format!("expected 4-d input and kernel, got {xs:?} and {ws:?}"),
            });
        }
        if xs[1] != ws[1] {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                detail: format!(
                    "input has {} channels but kernel expects {} (input {xs:?}, kernel {ws:?})",
                    xs[1], ws[1]
                ),
            });
        }
        if stride == 0 {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                detail: "stride must be at least 1".into(),
            });
        }
        if xs[2] + 2 * pad < ws[2] || xs[3] + 2 * pad < ws[3] {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                detail: format!(
                    "kernel {}x{} larger than padded input {}x{}",
                    ws[2],
                    ws[3],
                    xs[2] + 2 * pad,
                    xs[3] + 2 * pad
                ),
            });
        }
        if let Some(b) = b {
            let bs = self.nodes[b.0].value.shape();
            if bs != [ws[0]] {
                return Err(TensorError::ShapeMismatch {
                    op: "conv2d",
                    detail: format!("bias shape {bs:?} does not match {} filters", ws[0]),
                });
            }
        }
        let value = conv2d_forward(
            &self.nodes[x.0].value,
            &self.nodes[w.0].value,
            b.map(|b| &self.nodes[b.0].value),
            stride,
            pad,
        );
        Ok(self.push(value, Op::Conv2d { x, w, b, stride, pad }))
    }

    /// 2x2 max-pooling with stride 2. Spatial dims must be even; gradients
    /// route to the first maximal element of each window.
    pub fn maxpool2(&mut self, x: Var) -> Result<Var, TensorError> {
        let xs = self.nodes[x.0].value.shape().to_vec();
        if xs.len() != 4 {
            return Err(TensorError::ShapeMismatch {
                op: "maxpool2",
                detail: format!("expected 4-d input, got {xs:?}"),
            });
        }
        if xs[2] % 2 != 0 || xs[3] % 2 != 0 {
            return Err(TensorError::ShapeMismatch {
                op: "maxpool2",
                detail: format!("spatial dims must be even, got {}x{}", xs[2], xs[3]),
            });
        }
        let (value, argmax) = maxpool2_forward(&self.nodes[x.0].value);
        Ok(self.push(value, Op::MaxPool2 { x, argmax }))
    }

    /// Doubles the spatial dims with aligned-corner bilinear interpolation.
    pub fn bilinear_up2(&mut self, x: Var) -> Result<Var, TensorError> {
        let xs = self.nodes[x.0].value.shape();
        if xs.len() != 4 {
            return Err(TensorError::ShapeMismatch {
                op: "bilinear_up2",
                detail: format!("expected 4-d input, got {xs:?}"),
            });
        }
        let value = bilinear_up2_forward(&self.nodes[x.0].value);
        Ok(self.push(value, Op::BilinearUp2(x)))
    }

    /// Concatenates two NCHW tensors along the channel axis.
    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (sa, sb) = (
            self.nodes[a.0].value.shape().to_vec(),
            self.nodes[b.0].value.shape().to_vec(),
        );
        if sa.len() != 4
            || sb.len() != 4
            || sa[0] != sb[0]
            || sa[2] != sb[2]
            || sa[3] != sb[3]
        {
            return Err(TensorError::ShapeMismatch {
                op: "concat_channels",
                detail: format!("incompatible shapes {sa:?} and {sb:?}"),
            });
        }
        let (n, ca, cb, h, w) = (sa[0], sa[1], sb[1], sa[2], sa[3]);
        let plane = h * w;
        let mut data = Vec::with_capacity(n * (ca + cb) * plane);
        let da = self.nodes[a.0].value.data();
        let db = self.nodes[b.0].value.data();
        for i in 0..n {
            data.extend_from_slice(&da[i * ca * plane..(i + 1) * ca * plane]);
            data.extend_from_slice(&db[i * cb * plane..(i + 1) * cb * plane]);
        }
        let value = Array::from_vec(&[n, ca + cb, h, w], data).unwrap();
        Ok(self.push(value, Op::ConcatChannels(a, b)))
    }

    /// Mean squared error: sum of squared differences divided by the element
    /// count.
    pub fn mse_loss(&mut self, pred: Var, gt: Var) -> Result<Var, TensorError> {
        self.check_same_shape("mse_loss", pred, gt)?;
        let p = self.nodes[pred.0].value.data();
        let g = self.nodes[gt.0].value.data();
        let n = S::from_real(p.len() as f64);
        let mut acc = S::zero();
        for (&a, &b) in p.iter().zip(g) {
            let d = a - b;
            acc = acc + d * d;
        }
        let value = Array::scalar(acc / n);
        Ok(self.push(value, Op::MseLoss { pred, gt }))
    }

    /// L2 norm of the elementwise product of `pred` and a fixed obstacle
    /// mask. Gradient flows only through `pred`.
    pub fn safety_loss(&mut self, pred: Var, mask: Var) -> Result<Var, TensorError> {
        self.check_same_shape("safety_loss", pred, mask)?;
        let p = self.nodes[pred.0].value.data();
        let m = self.nodes[mask.0].value.data();
        let mut acc = S::zero();
        for (&a, &b) in p.iter().zip(m) {
            let prod = a * b;
            acc = acc + prod * prod;
        }
        let value = Array::scalar(acc.sqrt());
        Ok(self.push(value, Op::SafetyLoss { pred, mask }))
    }

    fn check_same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), TensorError> {
        let (sa, sb) = (self.nodes[a.0].value.shape(), self.nodes[b.0].value.shape());
        if sa != sb {
            return Err(TensorError::ShapeMismatch {
                op,
                detail: format!("{sa:?} vs {sb:?}"),
            });
        }
        Ok(())
    }

    // ---- reverse pass ----------------------------------------------------

    /// Seeds `root` (a scalar) with gradient 1 and accumulates gradients into
    /// every node it depends on. Visits each node exactly once, in reverse
    /// topological (creation) order.
    pub fn backward(&mut self, root: Var) -> Result<(), TensorError> {
        if !self.nodes[root.0].value.is_scalar() {
            return Err(TensorError::NotScalar {
                op: "backward",
                shape: self.nodes[root.0].value.shape().to_vec(),
            });
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[root.0].grad = Some(vec![S::one()]);

        for id in (0..=root.0).rev() {
            let (head, tail) = self.nodes.split_at_mut(id);
            let node = &tail[0];
            let Some(grad) = node.grad.as_ref() else {
                continue;
            };
            match &node.op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    accum(head, a.0, grad.iter().copied());
                    accum(head, b.0, grad.iter().copied());
                }
                Op::Mul(a, b) => {
                    let da: Vec<S> = grad
                        .iter()
                        .zip(head[b.0].value.data())
                        .map(|(&g, &bv)| g * bv)
                        .collect();
                    let db: Vec<S> = grad
                        .iter()
                        .zip(head[a.0].value.data())
                        .map(|(&g, &av)| g * av)
                        .collect();
                    accum(head, a.0, da.into_iter());
                    accum(head, b.0, db.into_iter());
                }
                Op::Scale(a, factor) => {
                    let f = *factor;
                    accum(head, a.0, grad.iter().map(move |&g| g * f));
                }
                Op::Sigmoid(a) => {
                    let da: Vec<S> = grad
                        .iter()
                        .zip(node.value.data())
                        .map(|(&g, &y)| g * y * (S::one() - y))
                        .collect();
                    accum(head, a.0, da.into_iter());
                }
                Op::Tanh(a) => {
                    let da: Vec<S> = grad
                        .iter()
                        .zip(node.value.data())
                        .map(|(&g, &y)| g * (S::one() - y * y))
                        .collect();
                    accum(head, a.0, da.into_iter());
                }
                Op::Relu(a) => {
                    let da: Vec<S> = grad
                        .iter()
                        .zip(head[a.0].value.data())
                        .map(|(&g, &x)| if x > S::zero() { g } else { S::zero() })
                        .collect();
                    accum(head, a.0, da.into_iter());
                }
                Op::Conv2d {
                    x,
                    w,
                    b,
                    stride,
                    pad,
                } => {
                    let (dx, dw, db) = conv2d_backward(
                        grad,
                        node.value.shape(),
                        &head[x.0].value,
                        &head[w.0].value,
                        *stride,
                        *pad,
                    );
                    let (x, w, b) = (*x, *w, *b);
                    accum(head, x.0, dx.into_iter());
                    accum(head, w.0, dw.into_iter());
                    if let Some(b) = b {
                        accum(head, b.0, db.into_iter());
                    }
                }
                Op::MaxPool2 { x, argmax } => {
                    let n = head[x.0].value.numel();
                    let mut dx = vec![S::zero(); n];
                    for (&g, &idx) in grad.iter().zip(argmax) {
                        dx[idx] = dx[idx] + g;
                    }
                    accum(head, x.0, dx.into_iter());
                }
                Op::BilinearUp2(x) => {
                    let dx = bilinear_up2_backward(grad, head[x.0].value.shape());
                    accum(head, x.0, dx.into_iter());
                }
                Op::ConcatChannels(a, b) => {
                    let sa = head[a.0].value.shape().to_vec();
                    let sb = head[b.0].value.shape().to_vec();
                    let (n, ca, cb, plane) = (sa[0], sa[1], sb[1], sa[2] * sa[3]);
                    let mut da = vec![S::zero(); n * ca * plane];
                    let mut db = vec![S::zero(); n * cb * plane];
                    for i in 0..n {
                        let base = i * (ca + cb) * plane;
                        da[i * ca * plane..(i + 1) * ca * plane]
                            .copy_from_slice(&grad[base..base + ca * plane]);
                        db[i * cb * plane..(i + 1) * cb * plane]
                            .copy_from_slice(&grad[base + ca * plane..base + (ca + cb) * plane]);
                    }
                    accum(head, a.0, da.into_iter());
                    accum(head, b.0, db.into_iter());
                }
                Op::MseLoss { pred, gt } => {
                    let g = grad[0];
                    let p = head[pred.0].value.data();
                    let t = head[gt.0].value.data();
                    let scale = S::from_real(2.0 / p.len() as f64) * g;
                    let dp: Vec<S> = p
                        .iter()
                        .zip(t)
                        .map(|(&a, &b)| scale * (a - b))
                        .collect();
                    let dt: Vec<S> = dp.iter().map(|&v| -v).collect();
                    accum(head, pred.0, dp.into_iter());
                    accum(head, gt.0, dt.into_iter());
                }
                Op::SafetyLoss { pred, mask } => {
                    let g = grad[0];
                    let norm = node.value.data()[0];
                    if norm > S::zero() {
                        let p = head[pred.0].value.data();
                        let m = head[mask.0].value.data();
                        let dp: Vec<S> = p
                            .iter()
                            .zip(m)
                            .map(|(&a, &b)| g * b * b * a / norm)
                            .collect();
                        accum(head, pred.0, dp.into_iter());
                    }
                    // At zero overlap the subgradient is zero: nothing to add.
                }
            }
        }
        Ok(())
    }
}

fn accum<S: Scalar>(nodes: &mut [Node<S>], id: usize, delta: impl Iterator<Item = S>) {
    let numel = nodes[id].value.numel();
    let grad = nodes[id]
        .grad
        .get_or_insert_with(|| vec![S::zero(); numel]);
    for (g, d) in grad.iter_mut().zip(delta) {
        *g = *g + d;
    }
}

fn sigmoid_scalar<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

fn conv_out_side(input: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    (input + 2 * pad - kernel) / stride + 1
}

fn conv2d_forward<S: Scalar>(
    x: &Array<S>,
    w: &Array<S>,
    b: Option<&Array<S>>,
    stride: usize,
    pad: usize,
) -> Array<S> {
    let (n, ci, h, wd) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
    let (co, _, kh, kw) = (w.shape[0], w.shape[1], w.shape[2], w.shape[3]);
    let oh = conv_out_side(h, kh, stride, pad);
    let ow = conv_out_side(wd, kw, stride, pad);
    let mut out = vec![S::zero(); n * co * oh * ow];
    let xd = x.data();
    let wdat = w.data();

    for ni in 0..n {
        for coi in 0..co {
            let out_base = (ni * co + coi) * oh * ow;
            if let Some(b) = b {
                let bias = b.data()[coi];
                for v in &mut out[out_base..out_base + oh * ow] {
                    *v = bias;
                }
            }
            for cii in 0..ci {
                let x_base = (ni * ci + cii) * h * wd;
                let w_base = (coi * ci + cii) * kh * kw;
                for kr in 0..kh {
                    for kc in 0..kw {
                        let wv = wdat[w_base + kr * kw + kc];
                        if wv == S::zero() {
                            continue;
                        }
                        if stride == 1 {
                            // Row-sliced inner loop: out[or][oc] += wv * x[or+kr-pad][oc+kc-pad]
                            for or in 0..oh {
                                let ir = or + kr;
                                if ir < pad || ir - pad >= h {
                                    continue;
                                }
                                let ir = ir - pad;
                                let oc_lo = pad.saturating_sub(kc);
                                let oc_hi = (wd + pad - kc).min(ow);
                                if oc_lo >= oc_hi {
                                    continue;
                                }
                                let orow = &mut out
                                    [out_base + or * ow + oc_lo..out_base + or * ow + oc_hi];
                                let xrow = &xd[x_base + ir * wd + (oc_lo + kc - pad)
                                    ..x_base + ir * wd + (oc_hi - 1 + kc - pad) + 1];
                                for (o, &xv) in orow.iter_mut().zip(xrow) {
                                    *o = *o + wv * xv;
                                }
                            }
                        } else {
                            for or in 0..oh {
                                let ir = or * stride + kr;
                                if ir < pad || ir - pad >= h {
                                    continue;
                                }
                                let ir = ir - pad;
                                for oc in 0..ow {
                                    let icol = oc * stride + kc;
                                    if icol < pad || icol - pad >= wd {
                                        continue;
                                    }
                                    let icol = icol - pad;
                                    out[out_base + or * ow + oc] = out[out_base + or * ow + oc]
                                        + wv * xd[x_base + ir * wd + icol];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Array::from_vec(&[n, co, oh, ow], out).unwrap()
}

#[allow(clippy::type_complexity)]
fn conv2d_backward<S: Scalar>(
    grad: &[S],
    out_shape: &[usize],
    x: &Array<S>,
    w: &Array<S>,
    stride: usize,
    pad: usize,
) -> (Vec<S>, Vec<S>, Vec<S>) {
    let (n, ci, h, wd) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
    let (co, _, kh, kw) = (w.shape[0], w.shape[1], w.shape[2], w.shape[3]);
    let (oh, ow) = (out_shape[2], out_shape[3]);
    let xd = x.data();
    let wdat = w.data();
    let mut dx = vec![S::zero(); xd.len()];
    let mut dw = vec![S::zero(); wdat.len()];
    let mut db = vec![S::zero(); co];

    for ni in 0..n {
        for coi in 0..co {
            let out_base = (ni * co + coi) * oh * ow;
            let gplane = &grad[out_base..out_base + oh * ow];
            let mut bias_acc = S::zero();
            for &g in gplane {
                bias_acc = bias_acc + g;
            }
            db[coi] = db[coi] + bias_acc;

            for cii in 0..ci {
                let x_base = (ni * ci + cii) * h * wd;
                let w_base = (coi * ci + cii) * kh * kw;
                for kr in 0..kh {
                    for kc in 0..kw {
                        let wv = wdat[w_base + kr * kw + kc];
                        let mut wacc = S::zero();
                        if stride == 1 {
                            for or in 0..oh {
                                let ir = or + kr;
                                if ir < pad || ir - pad >= h {
                                    continue;
                                }
                                let ir = ir - pad;
                                let oc_lo = pad.saturating_sub(kc);
                                let oc_hi = (wd + pad - kc).min(ow);
                                if oc_lo >= oc_hi {
                                    continue;
                                }
                                let grow = &gplane[or * ow + oc_lo..or * ow + oc_hi];
                                let x_off = x_base + ir * wd + (oc_lo + kc - pad);
                                let xrow = &xd[x_off..x_off + (oc_hi - oc_lo)];
                                for (&g, &xv) in grow.iter().zip(xrow) {
                                    wacc = wacc + g * xv;
                                }
                                if wv != S::zero() {
                                    let dxrow = &mut dx[x_off..x_off + (oc_hi - oc_lo)];
                                    for (d, &g) in dxrow.iter_mut().zip(grow) {
                                        *d = *d + wv * g;
                                    }
                                }
                            }
                        } else {
                            for or in 0..oh {
                                let ir = or * stride + kr;
                                if ir < pad || ir - pad >= h {
                                    continue;
                                }
                                let ir = ir - pad;
                                for oc in 0..ow {
                                    let icol = oc * stride + kc;
                                    if icol < pad || icol - pad >= wd {
                                        continue;
                                    }
                                    let icol = icol - pad;
                                    let g = gplane[or * ow + oc];
                                    wacc = wacc + g * xd[x_base + ir * wd + icol];
                                    dx[x_base + ir * wd + icol] =
                                        dx[x_base + ir * wd + icol] + wv * g;
                                }
                            }
                        }
                        dw[w_base + kr * kw + kc] = dw[w_base + kr * kw + kc] + wacc;
                    }
                }
            }
        }
    }
    (dx, dw, db)
}

fn maxpool2_forward<S: Scalar>(x: &Array<S>) -> (Array<S>, Vec<usize>) {
    let (n, c, h, w) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
    let (oh, ow) = (h / 2, w / 2);
    let xd = x.data();
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let mut argmax = Vec::with_capacity(n * c * oh * ow);
    for plane in 0..n * c {
        let base = plane * h * w;
        for or in 0..oh {
            for oc in 0..ow {
                let mut best_idx = base + (2 * or) * w + 2 * oc;
                let mut best = xd[best_idx];
                // Window scan order fixes the first-index tie-break.
                for (dr, dc) in [(0usize, 1usize), (1, 0), (1, 1)] {
                    let idx = base + (2 * or + dr) * w + 2 * oc + dc;
                    if xd[idx] > best {
                        best = xd[idx];
                        best_idx = idx;
                    }
                }
                out.push(best);
                argmax.push(best_idx);
            }
        }
    }
    (Array::from_vec(&[n, c, oh, ow], out).unwrap(), argmax)
}

/// Aligned-corner source coordinates for doubling a side of length `n`.
fn up2_coords(n: usize) -> Vec<(usize, usize, f64)> {
    let m = 2 * n;
    let scale = if m > 1 { (n as f64 - 1.0) / (m as f64 - 1.0) } else { 0.0 };
    (0..m)
        .map(|i| {
            let pos = i as f64 * scale;
            let i0 = pos.floor() as usize;
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, pos - i0 as f64)
        })
        .collect()
}

fn bilinear_up2_forward<S: Scalar>(x: &Array<S>) -> Array<S> {
    let (n, c, h, w) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
    let (oh, ow) = (2 * h, 2 * w);
    let rows = up2_coords(h);
    let cols = up2_coords(w);
    let xd = x.data();
    let mut out = Vec::with_capacity(n * c * oh * ow);
    for plane in 0..n * c {
        let base = plane * h * w;
        for &(r0, r1, fr) in &rows {
            let fr = S::from_real(fr);
            for &(c0, c1, fc) in &cols {
                let fc = S::from_real(fc);
                let top = xd[base + r0 * w + c0] * (S::one() - fc) + xd[base + r0 * w + c1] * fc;
                let bot = xd[base + r1 * w + c0] * (S::one() - fc) + xd[base + r1 * w + c1] * fc;
                out.push(top * (S::one() - fr) + bot * fr);
            }
        }
    }
    Array::from_vec(&[n, c, oh, ow], out).unwrap()
}

fn bilinear_up2_backward<S: Scalar>(grad: &[S], in_shape: &[usize]) -> Vec<S> {
    let (n, c, h, w) = (in_shape[0], in_shape[1], in_shape[2], in_shape[3]);
    let (oh, ow) = (2 * h, 2 * w);
    let rows = up2_coords(h);
    let cols = up2_coords(w);
    let mut dx = vec![S::zero(); n * c * h * w];
    for plane in 0..n * c {
        let in_base = plane * h * w;
        let out_base = plane * oh * ow;
        for (oi, &(r0, r1, fr)) in rows.iter().enumerate() {
            let fr = S::from_real(fr);
            for (oj, &(c0, c1, fc)) in cols.iter().enumerate() {
                let fc = S::from_real(fc);
                let g = grad[out_base + oi * ow + oj];
                dx[in_base + r0 * w + c0] =
                    dx[in_base + r0 * w + c0] + g * (S::one() - fr) * (S::one() - fc);
                dx[in_base + r0 * w + c1] = dx[in_base + r0 * w + c1] + g * (S::one() - fr) * fc;
                dx[in_base + r1 * w + c0] = dx[in_base + r1 * w + c0] + g * fr * (S::one() - fc);
                dx[in_base + r1 * w + c1] = dx[in_base + r1 * w + c1] + g * fr * fc;
            }
        }
    }
    dx
}
