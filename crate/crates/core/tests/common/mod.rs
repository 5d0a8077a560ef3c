#![allow(dead_code)]

use demcl::features::GaitFeatures;
use demcl::mcl::{MclConfig, MclModel, MclSample, Origin};
use demcl::nn::{Gradients, Network, Tensor, TrainConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gradient entries below this magnitude are compared absolutely.
pub const GRAD_SCALE_FLOOR: f64 = 1e-3;
pub const FD_STEP: f64 = 1e-6;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_SCALE_FLOOR)
}

pub fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Scalar objective `sum_i r_i y_i` or, when `target` is given, the
/// cross-entropy `-sum_i t_i ln y_i`.
pub struct Objective {
    pub weights: Vec<f64>,
    pub target: Option<Vec<f64>>,
}

impl Objective {
    pub fn value(&self, y: &[f64]) -> f64 {
        match &self.target {
            Some(t) => -t.iter().zip(y).map(|(t, p)| t * p.ln()).sum::<f64>(),
            None => self.weights.iter().zip(y).map(|(r, v)| r * v).sum(),
        }
    }

    pub fn grad(&self, y: &[f64]) -> Vec<f64> {
        match &self.target {
            Some(t) => t.iter().zip(y).map(|(t, p)| -t / p).collect(),
            None => self.weights.clone(),
        }
    }
}

#[derive(Debug, Default)]
pub struct GradReport {
    pub checked: usize,
    pub worst: f64,
    pub worst_at: String,
}

impl GradReport {
    fn record(&mut self, err: f64, at: impl FnOnce() -> String) {
        self.checked += 1;
        if err > self.worst || self.checked == 1 {
            self.worst = err;
            self.worst_at = at();
        }
    }
}

fn loss_of(net: &Network, x: &Tensor, obj: &Objective) -> f64 {
    obj.value(net.predict(x).unwrap().data())
}

/// Central differences against backprop for every parameter scalar (up to
/// `max_per_param` sampled entries each) and every input entry.
pub fn check_network(net: &Network, x: &Tensor, obj: &Objective, max_per_param: usize, rng: &mut ChaCha8Rng) -> GradReport {
    let acts = net.forward(x).unwrap();
    let y = acts.output().clone();
    let gy = Tensor::new(y.shape().to_vec(), obj.grad(y.data())).unwrap();
    let mut grads = net.zero_gradients();
    let gx = net.backward(&acts, &gy, &mut grads).unwrap();
    let mut report = GradReport::default();

    let names = net.param_names();
    let mut probe = net.clone();
    for (p, name) in names.iter().enumerate() {
        let len = grads.values[p].len();
        let picks: Vec<usize> = if len <= max_per_param {
            (0..len).collect()
        } else {
            (0..max_per_param).map(|_| rng.random_range(0..len)).collect()
        };
        for i in picks {
            let orig = probe.params()[p].value[i];
            probe.params_mut()[p].value[i] = orig + FD_STEP;
            let up = loss_of(&probe, x, obj);
            probe.params_mut()[p].value[i] = orig - FD_STEP;
            let down = loss_of(&probe, x, obj);
            probe.params_mut()[p].value[i] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            report.record(rel_err(grads.values[p][i], numeric), || format!("{name}[{i}]"));
        }
    }
    let mut xp = x.clone();
    for i in 0..x.len() {
        let orig = xp.data()[i];
        xp.data_mut()[i] = orig + FD_STEP;
        let up = loss_of(net, &xp, obj);
        xp.data_mut()[i] = orig - FD_STEP;
        let down = loss_of(net, &xp, obj);
        xp.data_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        report.record(rel_err(gx.data()[i], numeric), || format!("input[{i}]"));
    }
    report
}

pub fn tiny_mcl_config() -> MclConfig {
    MclConfig {
        classes: 3,
        tds_width: 8,
        doppler_bins: 8,
        fn1_branch_channels: 2,
        fn1_kernels: vec![3, 4, 5],
        fn1_conv_channels: vec![3],
        fn1_final_channels: 2,
        fn1_dense_hidden: 5,
        fn2_hidden: 4,
        cn_hidden: vec![6],
        train: TrainConfig {
            learning_rate: 0.05,
            epochs: 1,
            batch_size: 4,
            rng_seed: 7,
        },
    }
}

pub fn random_samples(cfg: &MclConfig, n: usize, rng: &mut ChaCha8Rng) -> Vec<MclSample> {
    (0..n)
        .map(|i| MclSample {
            tds_window: (0..cfg.tds_width * cfg.doppler_bins)
                .map(|_| rng.random_range(-40.0..0.0))
                .collect(),
            features: GaitFeatures::from_array([
                rng.random_range(0.0..8.0),
                rng.random_range(2.0..6.0),
                rng.random_range(0.0..2.0),
                rng.random_range(0.7..1.3),
            ]),
            label: i % cfg.classes,
            origin: Origin::Real,
        })
        .collect()
}

fn mcl_params_mut(model: &mut MclModel, part: usize) -> &mut Network {
    match part {
        0 => &mut model.fn1,
        1 => &mut model.fn2,
        _ => &mut model.cn,
    }
}

/// Finite differences of the fused-output cross-entropy against the
/// gradients routed back through the fusion into all three branches.
pub fn check_mcl_end_to_end(seed: u64, max_per_param: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = tiny_mcl_config();
    let samples = random_samples(&cfg, 9, &mut rng);
    let model = MclModel::new(&cfg, &samples).unwrap();
    let s = &samples[4];
    let mut grads = model.zero_gradients();
    model.accumulate_gradients(s, 1.0, &mut grads).unwrap();
    let mut report = GradReport::default();
    let mut probe = model.clone();
    for part in 0..3 {
        let g: &Gradients = match part {
            0 => &grads.fn1,
            1 => &grads.fn2,
            _ => &grads.cn,
        };
        let names = mcl_params_mut(&mut probe, part).param_names();
        for (p, name) in names.iter().enumerate() {
            let len = g.values[p].len();
            let picks: Vec<usize> = if len <= max_per_param {
                (0..len).collect()
            } else {
                (0..max_per_param).map(|_| rng.random_range(0..len)).collect()
            };
            for i in picks {
                let orig = mcl_params_mut(&mut probe, part).params()[p].value[i];
                mcl_params_mut(&mut probe, part).params_mut()[p].value[i] = orig + FD_STEP;
                let up = probe.sample_loss(s).unwrap();
                mcl_params_mut(&mut probe, part).params_mut()[p].value[i] = orig - FD_STEP;
                let down = probe.sample_loss(s).unwrap();
                mcl_params_mut(&mut probe, part).params_mut()[p].value[i] = orig;
                let numeric = (up - down) / (2.0 * FD_STEP);
                report.record(rel_err(g.values[p][i], numeric), || format!("{}/{name}[{i}]", ["fn1", "fn2", "cn"][part]));
            }
        }
    }
    report
}

/// Direct double sum, the independent route for the 2-D transform.
pub fn brute_dft2(grid: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
    for u in 0..rows {
        for v in 0..cols {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..rows {
                for l in 0..cols {
                    let phase = -2.0 * std::f64::consts::PI * ((u * k) as f64 / rows as f64 + (v * l) as f64 / cols as f64);
                    acc += grid[k * cols + l] * Complex64::from_polar(1.0, phase);
                }
            }
            out[u * cols + v] = acc;
        }
    }
    out
}

/// Largest `max |fft - dft| / max |dft|` over `grids` random grids up to 8 x 8.
pub fn dft_oracle_error(grids: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..grids {
        let rows = rng.random_range(1..=8);
        let cols = rng.random_range(1..=8);
        let grid: Vec<Complex64> = (0..rows * cols)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let fast = demcl::radarproc::fft2d_grid(&grid, rows, cols).unwrap();
        let slow = brute_dft2(&grid, rows, cols);
        let scale = slow.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst = worst.max(err / scale);
    }
    worst
}

pub struct GradCase {
    pub name: &'static str,
    pub net: Network,
    pub input: Vec<usize>,
    /// Class index for a softmax + cross-entropy objective.
    pub ce_target: Option<usize>,
}

/// One tiny network per layer kind.
pub fn gradient_cases() -> Vec<GradCase> {
    use demcl::nn::{Conv2d, Dense, Layer, MultiScaleConv, Rbf};
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let case = |name, input: Vec<usize>, layers, ce_target| GradCase {
        name,
        net: Network::new(name, input.clone(), layers).unwrap(),
        input,
        ce_target,
    };
    let centers: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    vec![
        case(
            "conv2d",
            vec![2, 5, 6],
            vec![Layer::Conv2d(Conv2d::with_geometry(2, 3, (3, 2), 2, (1, 0, 2, 1), &mut rng))],
            None,
        ),
        case("dense", vec![7], vec![Layer::Dense(Dense::new(7, 4, &mut rng))], None),
        case(
            "multiscale",
            vec![1, 6, 5],
            vec![Layer::MultiScale(MultiScaleConv::new(1, 2, &[3, 4, 5], &mut rng))],
            None,
        ),
        case(
            "rbf",
            vec![4],
            vec![Layer::Rbf(Rbf::new(centers, vec![0.8, 1.1, 1.5], 2, &mut rng).unwrap())],
            None,
        ),
        case(
            "maxpool",
            vec![1, 5, 7],
            vec![Layer::Conv2d(Conv2d::same(1, 2, 3, &mut rng)), Layer::MaxPool(2)],
            None,
        ),
        case("relu", vec![6], vec![Layer::Dense(Dense::new(6, 6, &mut rng)), Layer::Relu], None),
        case(
            "leaky_relu",
            vec![6],
            vec![Layer::Dense(Dense::new(6, 6, &mut rng)), Layer::LeakyRelu(0.2)],
            None,
        ),
        case("sigmoid", vec![6], vec![Layer::Dense(Dense::new(6, 6, &mut rng)), Layer::Sigmoid], None),
        case(
            "softmax+ce",
            vec![5],
            vec![Layer::Dense(Dense::new(5, 4, &mut rng)), Layer::Softmax],
            Some(2),
        ),
        case(
            "flatten",
            vec![2, 4, 4],
            vec![
                Layer::Conv2d(Conv2d::valid(2, 2, 3, &mut rng)),
                Layer::Flatten,
                Layer::Dense(Dense::new(8, 3, &mut rng)),
            ],
            None,
        ),
    ]
}

pub fn run_gradient_case(case: &GradCase, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_tensor(&case.input, &mut rng);
    let out: usize = case.net.output_shape().unwrap().iter().product();
    let obj = match case.ce_target {
        Some(c) => Objective {
            weights: Vec::new(),
            target: Some(demcl::nn::one_hot(c, out)),
        },
        None => Objective {
            weights: (0..out).map(|_| rng.random_range(-1.0..1.0)).collect(),
            target: None,
        },
    };
    check_network(&case.net, &x, &obj, 40, &mut rng)
}
