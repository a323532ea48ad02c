use compol_tensor::{Tape, Tensor, TensorError};

fn t(shape: &[usize], data: &[f64]) -> Tensor<f64> {
    Tensor::new(shape, data.to_vec()).unwrap()
}

#[test]
fn add_zeros_is_identity() {
    let tape = Tape::new();
    let x = tape.var(t(&[2, 3], &[1.0, -2.0, 3.0, 0.5, 0.0, 9.0]));
    let z = tape.constant(x.value().zeros_like());
    assert_eq!(x.add(&z).unwrap().value(), x.value());
}

#[test]
fn sigmoid_of_zero_is_half() {
    let tape = Tape::<f32>::new();
    let x = tape.constant(Tensor::zeros(&[3, 4]));
    let y = x.sigmoid().unwrap().value();
    assert!(y.data().iter().all(|&v| v == 0.5));
}

#[test]
fn gelu_and_tanh_vanish_at_zero() {
    let tape = Tape::<f64>::new();
    let x = tape.constant(Tensor::zeros(&[5]));
    assert!(x.gelu().unwrap().value().data().iter().all(|&v| v == 0.0));
    assert!(x.tanh().unwrap().value().data().iter().all(|&v| v == 0.0));
}

#[test]
fn broadcast_mismatch_is_reported() {
    let tape = Tape::<f64>::new();
    let a = tape.constant(Tensor::zeros(&[2, 3]));
    let b = tape.constant(Tensor::zeros(&[2]));
    assert!(matches!(a.add(&b), Err(TensorError::Broadcast { .. })));
}

#[test]
fn real_complex_mix_is_a_dtype_error() {
    let tape = Tape::<f64>::new();
    let a = tape.constant(Tensor::zeros(&[2]));
    let b = tape.constant(Tensor::zeros_complex(&[2]));
    assert!(matches!(a.mul(&b), Err(TensorError::DType(_))));
}

#[test]
fn matmul_hand_example() {
    let tape = Tape::new();
    let a = tape.constant(t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]));
    let b = tape.constant(t(&[2, 2], &[5.0, 6.0, 7.0, 8.0]));
    assert_eq!(
        a.matmul(&b).unwrap().value().data(),
        &[19.0, 22.0, 43.0, 50.0]
    );
}

#[test]
fn matmul_identity_and_zero() {
    let tape = Tape::new();
    let a = tape.constant(Tensor::from_fn(&[3, 3], |i| i as f64 * 0.7 - 2.0));
    let eye = tape.constant(Tensor::from_fn(
        &[3, 3],
        |i| if i % 4 == 0 { 1.0 } else { 0.0 },
    ));
    let zero = tape.constant(Tensor::zeros(&[3, 2]));
    assert_eq!(a.matmul(&eye).unwrap().value(), a.value());
    assert!(a
        .matmul(&zero)
        .unwrap()
        .value()
        .data()
        .iter()
        .all(|&v| v == 0.0));
}

#[test]
fn matmul_broadcasts_batch_axes() {
    let tape = Tape::new();
    let w = tape.constant(t(&[2, 3], &[1.0, 0.0, 2.0, 0.0, 1.0, -1.0]));
    let v = tape.constant(Tensor::from_fn(&[4, 3, 5], |i| i as f64));
    let out = w.matmul(&v).unwrap().value();
    assert_eq!(out.shape(), &[4, 2, 5]);
    let vd = v.value();
    for b in 0..4 {
        for n in 0..5 {
            let at = |c: usize| vd.data()[(b * 3 + c) * 5 + n];
            assert_eq!(out.data()[(b * 2) * 5 + n], at(0) + 2.0 * at(2));
            assert_eq!(out.data()[(b * 2 + 1) * 5 + n], at(1) - at(2));
        }
    }
}

#[test]
fn matmul_inner_mismatch() {
    let tape = Tape::<f64>::new();
    let a = tape.constant(Tensor::zeros(&[2, 3]));
    let b = tape.constant(Tensor::zeros(&[2, 3]));
    assert!(matches!(a.matmul(&b), Err(TensorError::InnerDim { .. })));
}

#[test]
fn reductions() {
    let tape = Tape::<f64>::new();
    let ones = tape.constant(Tensor::ones(&[4, 4]));
    assert_eq!(ones.sum_all().unwrap().value().item().unwrap(), 16.0);
    let c = tape.constant(Tensor::full(&[3, 5], 2.5));
    assert_eq!(c.mean(&[0, 1]).unwrap().value().item().unwrap(), 2.5);
    assert_eq!(c.sum(&[]).unwrap().value(), c.value());
    assert!(matches!(
        c.sum(&[2]),
        Err(TensorError::Axis { axis: 2, rank: 2 })
    ));
}

#[test]
fn backward_of_sum_and_square() {
    let tape = Tape::new();
    let x = tape.var(t(&[3], &[1.0, -2.0, 0.5]));
    let loss = x.sum_all().unwrap();
    assert_eq!(
        tape.backward(&loss).unwrap().get(&x).unwrap().data(),
        &[1.0; 3]
    );

    let tape = Tape::new();
    let x = tape.var(t(&[3], &[1.0, -2.0, 0.5]));
    let loss = x.mul(&x).unwrap().sum_all().unwrap();
    let g = tape.backward(&loss).unwrap().get(&x).unwrap();
    assert_eq!(g.data(), &[2.0, -4.0, 1.0]);
}

#[test]
fn mean_gradient_is_reciprocal_count() {
    let tape = Tape::new();
    let x = tape.var(Tensor::from_fn(&[2, 5], |i| i as f64));
    let loss = x.mean_all().unwrap();
    let g = tape.backward(&loss).unwrap().get(&x).unwrap();
    assert!(g.data().iter().all(|&v| (v - 0.1).abs() < 1e-15));
}

#[test]
fn fan_out_accumulates() {
    let tape = Tape::new();
    let x = tape.var(t(&[2], &[0.3, -1.2]));
    let a = x.tanh().unwrap();
    let b = x.scale(3.0);
    let loss = a.add(&b).unwrap().sum_all().unwrap();
    let g = tape.backward(&loss).unwrap().get(&x).unwrap();
    for (gi, xi) in g.data().iter().zip(x.value().data()) {
        let expected = 1.0 - xi.tanh().powi(2) + 3.0;
        assert!((gi - expected).abs() < 1e-14);
    }
}

#[test]
fn unreached_and_foreign_nodes() {
    let tape = Tape::new();
    let x = tape.var(t(&[2], &[1.0, 2.0]));
    let unused = tape.var(t(&[3], &[1.0, 2.0, 3.0]));
    let loss = x.sum_all().unwrap();
    let grads = tape.backward(&loss).unwrap();
    assert_eq!(grads.get(&unused).unwrap().data(), &[0.0; 3]);

    let other = Tape::new();
    let y = other.var(t(&[2], &[1.0, 2.0]));
    assert!(matches!(grads.get(&y), Err(TensorError::NotOnTape(_))));
    assert!(matches!(tape.backward(&y), Err(TensorError::NotOnTape(_))));
    assert!(matches!(x.add(&y), Err(TensorError::NotOnTape(_))));
}

#[test]
fn non_scalar_loss_is_rejected() {
    let tape = Tape::new();
    let x = tape.var(t(&[2], &[1.0, 2.0]));
    assert!(matches!(tape.backward(&x), Err(TensorError::NotScalar(_))));
}

#[test]
fn constants_receive_no_gradient_flow() {
    let tape = Tape::new();
    let c = tape.constant(t(&[2], &[1.0, 2.0]));
    let y = c.tanh().unwrap();
    assert!(!y.requires_grad());
}

#[test]
fn concat_gather_scatter_shapes() {
    let tape = Tape::new();
    let a = tape.constant(Tensor::from_fn(&[2, 1, 3], |i| i as f64));
    let b = tape.constant(Tensor::from_fn(&[2, 2, 3], |i| 10.0 + i as f64));
    let c = tape.concat(&[a, b], 1).unwrap().value();
    assert_eq!(c.shape(), &[2, 3, 3]);
    assert_eq!(
        &c.data()[..9],
        &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0]
    );

    let g = tape.constant(c.clone()).gather(2, &[2, 0]).unwrap();
    assert_eq!(g.shape(), vec![2, 3, 2]);
    assert_eq!(&g.value().data()[..2], &[2.0, 0.0]);
    let s = g.scatter(2, &[2, 0], 4).unwrap().value();
    assert_eq!(&s.data()[..4], &[0.0, 0.0, 2.0, 0.0]);
}

#[test]
fn softmax_rows_sum_to_one() {
    let tape = Tape::new();
    let x = tape.constant(Tensor::from_fn(&[3, 4, 2], |i| {
        (i as f64 * 1.3).sin() * 5.0
    }));
    let y = x.softmax(1).unwrap().value();
    for o in 0..3 {
        for i in 0..2 {
            let total: f64 = (0..4).map(|j| y.data()[(o * 4 + j) * 2 + i]).sum();
            assert!((total - 1.0).abs() < 1e-15);
        }
    }
}

#[test]
fn replay_is_bit_identical() {
    let run = || {
        let tape = Tape::new();
        let w = tape.var(Tensor::from_fn(&[4, 4], |i| (i as f64).cos()));
        let x = tape.constant(Tensor::from_fn(&[2, 4, 8], |i| (i as f64 * 0.37).sin()));
        let y = w.matmul(&x).unwrap().gelu().unwrap();
        let f = y
            .to_complex()
            .unwrap()
            .fft(2)
            .unwrap()
            .ifft(2)
            .unwrap()
            .real_part()
            .unwrap();
        let loss = f.mul(&f).unwrap().mean_all().unwrap();
        let g = tape.backward(&loss).unwrap().get(&w).unwrap();
        (loss.value(), g)
    };
    let (l1, g1) = run();
    let (l2, g2) = run();
    assert!(l1.bit_eq(&l2));
    assert!(g1.bit_eq(&g2));
}
