//! Tape and tensor properties on random small inputs.

mod common;

use casgcn_core::autodiff::{grad_check, Tape, Var};
use casgcn_core::{ParamSet, Tensor, TensorError};
use common::rng;
use proptest::prelude::*;
use rand::Rng;

fn random_tensor(r: &mut impl Rng, rows: usize, cols: usize, bound: f64) -> Tensor {
    Tensor::new(rows, cols, (0..rows * cols).map(|_| r.random_range(-bound..bound)).collect()).unwrap()
}

/// Reduces any tensor to a scalar with fixed random weights so every
/// entry's gradient is exercised.
fn weighted_total(tape: &mut Tape, x: Var, seed: u64) -> Result<Var, TensorError> {
    let (rows, cols) = tape.shape(x);
    let mut r = rng(seed);
    let w = tape.constant(random_tensor(&mut r, rows, cols, 1.0));
    let p = tape.mul(x, w)?;
    let s = tape.row_sum(p);
    let ones = tape.constant(Tensor::filled(cols, 1, 1.0));
    tape.matmul(s, ones)
}

fn two_params(seed: u64, shape_a: (usize, usize), shape_b: (usize, usize)) -> ParamSet {
    let mut r = rng(seed);
    let mut p = ParamSet::new();
    p.push("a", random_tensor(&mut r, shape_a.0, shape_a.1, 1.5));
    p.push("b", random_tensor(&mut r, shape_b.0, shape_b.1, 1.5));
    p
}

type Op = fn(&mut Tape, Var, Var) -> Result<Var, TensorError>;

fn ops() -> Vec<(&'static str, Op, bool)> {
    // (name, op, operands share a shape)
    vec![
        ("add", |t, a, b| t.add(a, b), true),
        ("sub", |t, a, b| t.sub(a, b), true),
        ("mul", |t, a, b| t.mul(a, b), true),
        ("sigmoid", |t, a, _| Ok(t.sigmoid(a)), true),
        ("tanh", |t, a, _| Ok(t.tanh(a)), true),
        ("scale", |t, a, _| Ok(t.scale(a, -2.5)), true),
        ("concat", |t, a, b| t.concat_cols(a, b), true),
        ("row_sum", |t, a, _| Ok(t.row_sum(a)), true),
        ("matmul_t", |t, a, b| t.matmul_t(a, b), true),
        ("matmul", |t, a, b| t.matmul(a, b), false),
        ("gather", |t, a, _| t.gather_rows(a, &[2, 0, 2, 1]), true),
        ("neighbor_sum", |t, a, _| t.neighbor_sum(a, &[vec![(1, 0.5), (2, 1.0)], vec![], vec![(0, 2.0)]]), true),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn every_op_passes_grad_check(seed in any::<u64>()) {
        for (name, op, same_shape) in ops() {
            let shape_b = if same_shape { (3, 2) } else { (2, 4) };
            let params = two_params(seed, (3, 2), shape_b);
            let report = grad_check(
                |tape| {
                    let a = tape.param(0);
                    let b = tape.param(1);
                    let y = op(tape, a, b)?;
                    weighted_total(tape, y, seed ^ 1)
                },
                &params,
                1e-5,
            )
            .unwrap();
            prop_assert!(report.max_rel_error < 1e-6, "{name}: {report:?}");
        }
    }

    #[test]
    fn log1p_and_relu_pass_grad_check_away_from_kinks(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut params = ParamSet::new();
        // Entries in [0.1, 2] keep relu off its kink and log1p in domain.
        let data = (0..6).map(|_| r.random_range(0.1..2.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        params.push("a", Tensor::new(3, 2, data).unwrap());
        params.push("b", Tensor::new(3, 2, (0..6).map(|_| r.random_range(0.1..2.0)).collect()).unwrap());
        let report = grad_check(
            |tape| {
                let a = tape.param(0);
                let b = tape.param(1);
                let x = tape.relu(a);
                let y = tape.log1p(b);
                let z = tape.add(x, y)?;
                weighted_total(tape, z, seed)
            },
            &params,
            1e-5,
        )
        .unwrap();
        prop_assert!(report.max_rel_error < 1e-6, "{report:?}");
    }

    #[test]
    fn matmul_is_associative(seed in any::<u64>(), n in 1usize..6, m in 1usize..6, k in 1usize..6, l in 1usize..6) {
        let mut r = rng(seed);
        let a = random_tensor(&mut r, n, m, 1.0);
        let b = random_tensor(&mut r, m, k, 1.0);
        let c = random_tensor(&mut r, k, l, 1.0);
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-9);
    }

    #[test]
    fn backward_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let params = two_params(seed, (3, 2), (3, 2));
        let l1 = |tape: &mut Tape| -> Result<Var, TensorError> {
            let a = tape.param(0);
            let b = tape.param(1);
            let y = tape.mul(a, b)?;
            let y = tape.tanh(y);
            weighted_total(tape, y, 7)
        };
        let l2 = |tape: &mut Tape| -> Result<Var, TensorError> {
            let a = tape.param(0);
            let s = tape.sigmoid(a);
            let b = tape.param(1);
            let y = tape.matmul_t(s, b)?;
            weighted_total(tape, y, 8)
        };
        let grad = |f: &dyn Fn(&mut Tape) -> Result<Var, TensorError>| {
            let mut tape = Tape::with_params(&params);
            let loss = f(&mut tape).unwrap();
            tape.backward(loss).unwrap()
        };
        let g1 = grad(&l1);
        let g2 = grad(&l2);
        let combined = grad(&|tape: &mut Tape| {
            let x = l1(tape)?;
            let y = l2(tape)?;
            let x = tape.scale(x, alpha);
            let y = tape.scale(y, beta);
            tape.add(x, y)
        });
        for p in 0..params.len() {
            for k in 0..params.get(p).len() {
                let want = alpha * g1.get(p).data()[k] + beta * g2.get(p).data()[k];
                prop_assert!((combined.get(p).data()[k] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn operations_leave_operands_untouched(seed in any::<u64>()) {
        let params = two_params(seed, (3, 2), (3, 2));
        let mut tape = Tape::with_params(&params);
        let a = tape.param(0);
        let b = tape.param(1);
        let before_a = tape.value(a).clone();
        let before_b = tape.value(b).clone();
        let mut outputs = Vec::new();
        for (_, op, same_shape) in ops() {
            if same_shape {
                outputs.push(op(&mut tape, a, b).unwrap());
            }
        }
        let loss = weighted_total(&mut tape, outputs[0], 3).unwrap();
        tape.backward(loss).unwrap();
        prop_assert_eq!(tape.value(a), &before_a);
        prop_assert_eq!(tape.value(b), &before_b);
        prop_assert_eq!(params.get(0), &before_a);
    }
}
