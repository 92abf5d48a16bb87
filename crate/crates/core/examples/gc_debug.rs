// temp diagnostic
use ppnet_core::nn::*;

fn batch(seed: u64, dims: &[usize]) -> Tensor<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = dims.iter().product();
    Tensor::from_vec(dims, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn main() {
    let specs = vec![
        LayerSpec::conv_same(3, false),
        LayerSpec::BatchNorm { epsilon: 1e-3, momentum: 0.99 },
        LayerSpec::Relu,
        LayerSpec::Dropout { rate: 0.0 },
        LayerSpec::conv_same(4, true),
        LayerSpec::MaxPool,
        LayerSpec::Flatten,
        LayerSpec::Dense { units: 10 },
        LayerSpec::Dense { units: 5 },
        LayerSpec::SoftmaxCrossEntropy,
    ];
    for seed in [13u64, 14, 15] {
        let mut net = Network::<f64>::from_specs(&specs, &[6, 8, 2], seed).unwrap();
        let x = batch(seed + 100, &[3, 6, 8, 2]);
        let report = gradient_check_detailed(&mut net, &x, &[0, 2, 4], 1e-5, 24, 1).unwrap();
        println!("seed {seed}:");
        for (name, err) in report {
            println!("  {name:28} {err:.3e}");
        }
    }
}
