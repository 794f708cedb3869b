//! Central finite-difference checks for every differentiable operator.
//!
//! The harness rebuilds the forward pass from scratch for each perturbed
//! input, so it stays independent of the tape's reverse pass. The acceptance
//! suite runs the same checks over more seeds; these cover development.

use bevcast::tensor::{conv_lstm_step, Array, ConvLstmWeights, Tape, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const EPS: f64 = 1e-4;
const TOL: f64 = 1e-4;

fn rand_array(rng: &mut ChaCha20Rng, shape: &[usize]) -> Array<f64> {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Array::from_vec(shape, data).unwrap()
}

/// Builds the loss from leaves bound in input order and returns the max
/// relative error between analytic and central-difference gradients over the
/// checked inputs.
fn check_gradients(
    inputs: &[Array<f64>],
    checked: &[usize],
    build: impl Fn(&mut Tape<f64>, &[Var]) -> Var,
) -> f64 {
    let eval = |arrays: &[Array<f64>]| -> f64 {
        let mut tape = Tape::<f64>::new();
        let vars: Vec<Var> = arrays.iter().map(|a| tape.leaf(a.clone())).collect();
        let loss = build(&mut tape, &vars);
        tape.value(loss).data()[0]
    };

    let mut tape = Tape::<f64>::new();
    let vars: Vec<Var> = inputs.iter().map(|a| tape.leaf(a.clone())).collect();
    let loss = build(&mut tape, &vars);
    tape.backward(loss).unwrap();

    let mut max_rel = 0.0f64;
    for &input_idx in checked {
        let analytic: Vec<f64> = tape
            .grad(vars[input_idx])
            .map(|g| g.to_vec())
            .unwrap_or_else(|| vec![0.0; inputs[input_idx].numel()]);
        for elem in 0..inputs[input_idx].numel() {
            let mut plus = inputs.to_vec();
            plus[input_idx].data_mut()[elem] += EPS;
            let mut minus = inputs.to_vec();
            minus[input_idx].data_mut()[elem] -= EPS;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * EPS);
            let a = analytic[elem];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            max_rel = max_rel.max(rel);
        }
    }
    max_rel
}

fn mse_to_target(tape: &mut Tape<f64>, y: Var, target: &Array<f64>) -> Var {
    let t = tape.leaf(target.clone());
    tape.mse_loss(y, t).unwrap()
}

#[test]
fn conv2d_matches_finite_differences() {
    for seed in 0..5u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let x = rand_array(&mut rng, &[2, 3, 5, 5]);
        let w = rand_array(&mut rng, &[4, 3, 3, 3]);
        let b = rand_array(&mut rng, &[4]);
        let target = rand_array(&mut rng, &[2, 4, 5, 5]);
        let rel = check_gradients(&[x, w, b], &[0, 1, 2], |tape, vars| {
            let y = tape.conv2d(vars[0], vars[1], Some(vars[2]), 1, 1).unwrap();
            mse_to_target(tape, y, &target)
        });
        assert!(rel < TOL, "seed {seed}: rel err {rel}");
    }
}

#[test]
fn strided_conv2d_matches_finite_differences() {
    for seed in 0..3u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(100 + seed);
        let x = rand_array(&mut rng, &[1, 2, 6, 6]);
        let w = rand_array(&mut rng, &[3, 2, 3, 3]);
        let target = rand_array(&mut rng, &[1, 3, 3, 3]);
        let rel = check_gradients(&[x, w], &[0, 1], |tape, vars| {
            let y = tape.conv2d(vars[0], vars[1], None, 2, 1).unwrap();
            mse_to_target(tape, y, &target)
        });
        assert!(rel < TOL, "seed {seed}: rel err {rel}");
    }
}

#[test]
fn maxpool2_matches_finite_differences() {
    for seed in 0..5u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(200 + seed);
        let x = rand_array(&mut rng, &[1, 4, 8, 8]);
        let target = rand_array(&mut rng, &[1, 4, 4, 4]);
        let rel = check_gradients(&[x], &[0], |tape, vars| {
            let y = tape.maxpool2(vars[0]).unwrap();
            mse_to_target(tape, y, &target)
        });
        assert!(rel < TOL, "seed {seed}: rel err {rel}");
    }
}

#[test]
fn bilinear_up2_matches_finite_differences() {
    for seed in 0..5u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(300 + seed);
        let x = rand_array(&mut rng, &[1, 2, 4, 4]);
        let target = rand_array(&mut rng, &[1, 2, 8, 8]);
        let rel = check_gradients(&[x], &[0], |tape, vars| {
            let y = tape.bilinear_up2(vars[0]).unwrap();
            mse_to_target(tape, y, &target)
        });
        assert!(rel < TOL, "seed {seed}: rel err {rel}");
    }
}

#[test]
fn mse_loss_matches_finite_differences() {
    for seed in 0..5u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(400 + seed);
        let pred = rand_array(&mut rng, &[1, 1, 4, 4]);
        let gt = rand_array(&mut rng, &[1, 1, 4, 4]);
        let rel = check_gradients(&[pred, gt], &[0, 1], |tape, vars| {
            tape.mse_loss(vars[0], vars[1]).unwrap()
        });
        assert!(rel < TOL, "seed {seed}: rel err {rel}");
    }
}

#[test]
fn safety_loss_matches_finite_differences() {
    for seed in 0..5u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(500 + seed);
        // Keep the product norm clearly positive so the loss stays smooth.
        let mut pred = rand_array(&mut rng, &[1, 1, 4, 4]);
        for v in pred.data_mut() {
            *v = v.abs() + 0.1;
        }
        let mut mask = rand_array(&mut rng, &[1, 1, 4, 4]);
        for v in mask.data_mut() {
            *v = v.abs();
        }
        let rel = check_gradients(&[pred, mask], &[0], |tape, vars| {
            tape.safety_loss(vars[0], vars[1]).unwrap()
        });
        assert!(rel < TOL, "seed {seed}: rel err {rel}");
    }
}

fn lstm_weight_shapes(filters: usize, in_ch: usize, k: usize) -> Vec<Vec<usize>> {
    let mut shapes = Vec::new();
    for _ in 0..4 {
        shapes.push(vec![filters, in_ch, k, k]);
        shapes.push(vec![filters, filters, k, k]);
        shapes.push(vec![filters]);
    }
    shapes
}

fn bind_lstm_weights(vars: &[Var]) -> ConvLstmWeights {
    ConvLstmWeights {
        wxi: vars[0],
        whi: vars[1],
        bi: vars[2],
        wxf: vars[3],
        whf: vars[4],
        bf: vars[5],
        wxo: vars[6],
        who: vars[7],
        bo: vars[8],
        wxg: vars[9],
        whg: vars[10],
        bg: vars[11],
    }
}

#[test]
fn conv_lstm_three_step_chain_matches_finite_differences() {
    let filters = 4;
    let in_ch = 3;
    let side = 6;
    for seed in 0..2u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(600 + seed);
        let mut inputs: Vec<Array<f64>> = lstm_weight_shapes(filters, in_ch, 3)
            .iter()
            .map(|s| {
                let mut a = rand_array(&mut rng, s);
                // Small weights keep the gates away from saturation.
                for v in a.data_mut() {
                    *v *= 0.3;
                }
                a
            })
            .collect();
        for _ in 0..3 {
            inputs.push(rand_array(&mut rng, &[1, in_ch, side, side]));
        }
        inputs.push(rand_array(&mut rng, &[1, filters, side, side])); // h0
        inputs.push(rand_array(&mut rng, &[1, filters, side, side])); // c0
        let target = rand_array(&mut rng, &[1, filters, side, side]);

        let checked: Vec<usize> = (0..inputs.len()).collect();
        let rel = check_gradients(&inputs, &checked, |tape, vars| {
            let w = bind_lstm_weights(&vars[..12]);
            let mut h = vars[15];
            let mut c = vars[16];
            for step in 0..3 {
                let (h2, c2) = conv_lstm_step(tape, vars[12 + step], h, c, &w).unwrap();
                h = h2;
                c = c2;
            }
            mse_to_target(tape, h, &target)
        });
        assert!(rel < TOL, "seed {seed}: rel err {rel}");
    }
}
