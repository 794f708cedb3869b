//! Convolutional LSTM cell.
//!
//! Gate transformations are convolutions with same padding:
//! i = sigmoid(Wxi*x + Whi*h + bi), f = sigmoid(Wxf*x + Whf*h + bf),
//! o = sigmoid(Wxo*x + Who*h + bo), g = tanh(Wxg*x + Whg*h + bg),
//! c' = f.c + i.g, h' = o.tanh(c').
//!
//! The step is assembled from tape primitives, so chaining steps on one tape
//! lets gradients flow through time for free.

use super::{Array, Scalar, Tape, TensorError, Var};

/// Tape handles for one cell's weights. `wx*` convolve the input, `wh*` the
/// hidden state; kernels are square with odd side (3x3 by default).
#[derive(Debug, Clone, Copy)]
pub struct ConvLstmWeights {
    pub wxi: Var,
    pub whi: Var,
    pub bi: Var,
    pub wxf: Var,
    pub whf: Var,
    pub bf: Var,
    pub wxo: Var,
    pub who: Var,
    pub bo: Var,
    pub wxg: Var,
    pub whg: Var,
    pub bg: Var,
}

impl ConvLstmWeights {
    /// Weight names in a fixed order, used for parameter registration.
    pub const NAMES: [&'static str; 12] = [
        "wxi", "whi", "bi", "wxf", "whf", "bf", "wxo", "who", "bo", "wxg", "whg", "bg",
    ];
}

/// Detached hidden and cell state, carried across tapes between truncation
/// windows. Shape is `[1, filters, height, width]`.
#[derive(Debug, Clone)]
pub struct ConvLstmStateData<S> {
    pub h: Array<S>,
    pub c: Array<S>,
}

impl<S: Scalar> ConvLstmStateData<S> {
    pub fn zeros(filters: usize, height: usize, width: usize) -> Self {
        Self {
            h: Array::zeros(&[1, filters, height, width]),
            c: Array::zeros(&[1, filters, height, width]),
        }
    }
}

/// Advances one ConvLSTM step, returning the new hidden and cell state
/// handles. Spatial mismatch between `x` and the state surfaces as a conv
/// shape error.
pub fn conv_lstm_step<S: Scalar>(
    tape: &mut Tape<S>,
    x: Var,
    h: Var,
    c: Var,
    w: &ConvLstmWeights,
) -> Result<(Var, Var), TensorError> {
    let k = tape.value(w.wxi).shape()[2];
    let pad = k / 2;
    let mut gate = |tape: &mut Tape<S>, wx: Var, wh: Var, b: Var| -> Result<Var, TensorError> {
        let from_x = tape.conv2d(x, wx, Some(b), 1, pad)?;
        let from_h = tape.conv2d(h, wh, None, 1, pad)?;
        tape.add(from_x, from_h)
    };
    let i_pre = gate(tape, w.wxi, w.whi, w.bi)?;
    let f_pre = gate(tape, w.wxf, w.whf, w.bf)?;
    let o_pre = gate(tape, w.wxo, w.who, w.bo)?;
    let g_pre = gate(tape, w.wxg, w.whg, w.bg)?;
    let i = tape.sigmoid(i_pre);
    let f = tape.sigmoid(f_pre);
    let o = tape.sigmoid(o_pre);
    let g = tape.tanh(g_pre);
    let fc = tape.mul(f, c)?;
    let ig = tape.mul(i, g)?;
    let c_next = tape.add(fc, ig)?;
    let c_act = tape.tanh(c_next);
    let h_next = tape.mul(o, c_act)?;
    Ok((h_next, c_next))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(tape: &mut Tape<f64>, filters: usize, in_ch: usize, k: usize) -> ConvLstmWeights {
        let mut conv = |ci: usize| tape.leaf(Array::<f64>::zeros(&[filters, ci, k, k]));
        let wxi = conv(in_ch);
        let whi = conv(filters);
        let wxf = conv(in_ch);
        let whf = conv(filters);
        let wxo = conv(in_ch);
        let who = conv(filters);
        let wxg = conv(in_ch);
        let whg = conv(filters);
        let bias = |tape: &mut Tape<f64>, v: f64| {
            tape.leaf(Array::from_vec(&[filters], vec![v; filters]).unwrap())
        };
        let bi = bias(tape, 0.0);
        let bf = bias(tape, 0.0);
        let bo = bias(tape, 0.0);
        let bg = bias(tape, 0.0);
        ConvLstmWeights {
            wxi,
            whi,
            bi,
            wxf,
            whf,
            bf,
            wxo,
            who,
            bo,
            wxg,
            whg,
            bg,
        }
    }

    #[test]
    fn zero_weights_give_zero_state() {
        let mut t = Tape::<f64>::new();
        let w = weights(&mut t, 2, 3, 3);
        let x = t.leaf(Array::from_vec(&[1, 3, 4, 4], vec![0.5; 48]).unwrap());
        let h = t.leaf(Array::from_vec(&[1, 2, 4, 4], vec![0.3; 32]).unwrap());
        let c = t.leaf(Array::from_vec(&[1, 2, 4, 4], vec![0.7; 32]).unwrap());
        let (h2, c2) = conv_lstm_step(&mut t, x, h, c, &w).unwrap();
        // f = sigma(0) = 0.5, so c' = c/2; g = tanh(0) = 0.
        assert!(t
            .value(c2)
            .data()
            .iter()
            .all(|&v| (v - 0.35).abs() < 1e-12));
        // h' = sigma(0) * tanh(c') which is nonzero here; with zero c it is 0.
        let c0 = t.leaf(Array::zeros(&[1, 2, 4, 4]));
        let h0 = t.leaf(Array::zeros(&[1, 2, 4, 4]));
        let (h3, c3) = conv_lstm_step(&mut t, x, h0, c0, &w).unwrap();
        assert!(t.value(h3).data().iter().all(|&v| v == 0.0));
        assert!(t.value(c3).data().iter().all(|&v| v == 0.0));
        let _ = h2;
    }

    #[test]
    fn saturated_forget_gate_preserves_cell_state() {
        let mut t = Tape::<f64>::new();
        let mut w = weights(&mut t, 2, 3, 3);
        // bf = +20 saturates the forget gate at 1.
        w.bf = t.leaf(Array::from_vec(&[2], vec![20.0, 20.0]).unwrap());
        let x = t.leaf(Array::from_vec(&[1, 3, 4, 4], vec![0.2; 48]).unwrap());
        let h = t.leaf(Array::zeros(&[1, 2, 4, 4]));
        let c_vals: Vec<f64> = (0..32).map(|i| (i as f64 - 16.0) / 40.0).collect();
        let c = t.leaf(Array::from_vec(&[1, 2, 4, 4], c_vals.clone()).unwrap());
        let (_h2, c2) = conv_lstm_step(&mut t, x, h, c, &w).unwrap();
        for (&got, &want) in t.value(c2).data().iter().zip(&c_vals) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn spatial_mismatch_is_rejected() {
        let mut t = Tape::<f64>::new();
        let w = weights(&mut t, 2, 3, 3);
        let x = t.leaf(Array::zeros(&[1, 3, 4, 4]));
        let h = t.leaf(Array::zeros(&[1, 2, 6, 6]));
        let c = t.leaf(Array::zeros(&[1, 2, 6, 6]));
        assert!(conv_lstm_step(&mut t, x, h, c, &w).is_err());
    }
}
