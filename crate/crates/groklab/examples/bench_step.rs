//! Rough throughput probe for one training step on the two workhorse shapes.

use groklab::nn::{init_params, loss_grad, Activation, Batch, LossKind, MlpSpec};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn bench(name: &str, widths: Vec<usize>, n: usize, steps: usize) {
    let spec = MlpSpec::new(widths, Activation::Relu, LossKind::Mse).unwrap();
    let p = init_params(&spec, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = Array2::from_shape_fn((n, spec.input_dim()), |_| rng.random_range(-1.0..1.0));
    let t = Array2::from_shape_fn((n, spec.output_dim()), |_| rng.random_range(-1.0..1.0));
    let batch = Batch::new(x, t, None).unwrap();

    let start = Instant::now();
    let mut acc = 0.0;
    for _ in 0..steps {
        let (l, _g) = loss_grad(&spec, &p, &batch, LossKind::Mse).unwrap();
        acc += l;
    }
    let dt = start.elapsed().as_secs_f64();
    let macs_fwd: usize = spec.layer_shapes().map(|(i, o)| i * o).sum::<usize>() * n;
    let flops = (3 * macs_fwd * 2) as f64 * steps as f64;
    println!(
        "{name}: {steps} steps in {dt:.2}s -> {:.1} us/step, ~{:.1} GFLOP/s (sum {acc:.3})",
        dt / steps as f64 * 1e6,
        flops / dt / 1e9
    );
}

fn main() {
    bench("teacher-student [5,100,100,5] N=100", vec![5, 100, 100, 5], 100, 2000);
    bench("addition decoder [1,200,200,30] N=45", vec![1, 200, 200, 30], 45, 2000);
    bench("mnist [784,200,200,10] N=200", vec![784, 200, 200, 10], 200, 200);
}
