//! Central finite-difference verification of reverse-mode gradients.
//! Runs in f64 only; training code casts its graph down/up as needed.

use super::graph::Graph;
use super::tensor::Tensor;
use crate::error::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;

/// Outcome for one parameter block (or the input block).
#[derive(Debug, Clone)]
pub struct BlockCheck {
    pub name: String,
    pub checked: usize,
    pub max_rel_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockCheck>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn pass(&self) -> bool {
        self.blocks.iter().all(|b| b.pass)
    }
}

/// Relative disagreement with a floor so near-zero gradients compare on an
/// absolute scale.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(1e-4);
    (analytic - numeric).abs() / scale
}

/// Loss head for checks: maps the graph output to (loss, dLoss/dOutput).
pub type LossFn<'a> = dyn Fn(&Tensor<f64>) -> Result<(f64, Tensor<f64>)> + 'a;

fn eval_loss(graph: &Graph<f64>, loss: &LossFn, input: &Tensor<f64>) -> Result<f64> {
    let acts = graph.forward(input)?;
    Ok(loss(acts.output())?.0)
}

/// Computes analytic gradients then compares them against central differences
/// on a random subsample of each parameter block and the input.
pub fn grad_check(
    graph: &Graph<f64>,
    loss: &LossFn,
    input: &Tensor<f64>,
    tolerance: f64,
    samples_per_block: usize,
    rng: &mut ChaCha8Rng,
) -> Result<GradCheckReport> {
    let acts = graph.forward(input)?;
    let (_, dout) = loss(acts.output())?;
    let (param_grads, input_grad) = graph.backward(&acts, dout)?;
    compare_with_fd(
        graph,
        loss,
        input,
        &param_grads,
        &input_grad,
        tolerance,
        samples_per_block,
        rng,
    )
}

/// Compares supplied analytic gradients against finite differences. Exposed
/// separately so tests can feed in corrupted gradients as a negative control.
#[allow(clippy::too_many_arguments)]
pub fn compare_with_fd(
    graph: &Graph<f64>,
    loss: &LossFn,
    input: &Tensor<f64>,
    param_grads: &[Tensor<f64>],
    input_grad: &Tensor<f64>,
    tolerance: f64,
    samples_per_block: usize,
    rng: &mut ChaCha8Rng,
) -> Result<GradCheckReport> {
    let mut blocks = Vec::new();
    let names = graph.param_block_names();
    let mut work = graph.clone();
    for (bi, grad) in param_grads.iter().enumerate() {
        let mut max_rel = 0.0f64;
        let n = grad.len();
        let picks = sample_indices(n, samples_per_block, rng);
        for &idx in &picks {
            let numeric = {
                let mut eval_at = |delta: f64| -> Result<f64> {
                    let orig = work.params()[bi].data()[idx];
                    work.params_mut()[bi].data_mut()[idx] = orig + delta;
                    let j = eval_loss(&work, loss, input);
                    work.params_mut()[bi].data_mut()[idx] = orig;
                    j
                };
                (eval_at(FD_STEP)? - eval_at(-FD_STEP)?) / (2.0 * FD_STEP)
            };
            max_rel = max_rel.max(relative_error(grad.data()[idx], numeric));
        }
        blocks.push(BlockCheck {
            name: names[bi].clone(),
            checked: picks.len(),
            max_rel_err: max_rel,
            pass: max_rel <= tolerance,
        });
    }
    // input block
    let mut x = input.clone();
    let mut max_rel = 0.0f64;
    let picks = sample_indices(input.len(), samples_per_block, rng);
    for &idx in &picks {
        let orig = x.data()[idx];
        x.data_mut()[idx] = orig + FD_STEP;
        let jp = eval_loss(graph, loss, &x)?;
        x.data_mut()[idx] = orig - FD_STEP;
        let jm = eval_loss(graph, loss, &x)?;
        x.data_mut()[idx] = orig;
        let numeric = (jp - jm) / (2.0 * FD_STEP);
        max_rel = max_rel.max(relative_error(input_grad.data()[idx], numeric));
    }
    blocks.push(BlockCheck {
        name: "input".into(),
        checked: picks.len(),
        max_rel_err: max_rel,
        pass: max_rel <= tolerance,
    });
    Ok(GradCheckReport { blocks, tolerance })
}

fn sample_indices(n: usize, want: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if n == 0 {
        return vec![];
    }
    if n <= want {
        return (0..n).collect();
    }
    (0..want).map(|_| rng.random_range(0..n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralcore::layers::Layer;
    use crate::neuralcore::loss::softmax_xent;
    use crate::seeding::rng_from;

    fn xent_loss(labels: Vec<usize>) -> impl Fn(&Tensor<f64>) -> Result<(f64, Tensor<f64>)> {
        move |out: &Tensor<f64>| {
            let (losses, grad) = softmax_xent(out, &labels)?;
            let j: f64 = losses.iter().sum::<f64>() / losses.len() as f64;
            let scale = 1.0 / losses.len() as f64;
            let mut g = grad;
            for v in g.data_mut() {
                *v *= scale;
            }
            Ok((j, g))
        }
    }

    fn random_input(shape: &[usize], seed: u64) -> Tensor<f64> {
        let mut rng = rng_from(seed);
        let n: usize = shape.iter().product();
        Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn dense_only_net_passes() {
        let mut rng = rng_from(11);
        let mut g = Graph::<f64>::new(&[6]);
        g.push(Layer::dense(6, 8, &mut rng));
        g.push(Layer::Relu);
        g.push(Layer::dense(8, 4, &mut rng));
        let x = random_input(&[3, 6], 12);
        let report = grad_check(&g, &xent_loss(vec![0, 2, 3]), &x, 1e-4, 16, &mut rng).unwrap();
        assert!(report.pass(), "{:?}", report.blocks);
    }

    #[test]
    fn conv_pool_net_passes() {
        let mut rng = rng_from(21);
        let mut g = Graph::<f64>::new(&[2, 32]);
        g.push(Layer::conv1d(2, 4, 5, 2, 2, &mut rng));
        g.push(Layer::Relu);
        g.push(Layer::channel_norm(4));
        g.push(Layer::conv_t1d(4, 3, 4, 2, 1, &mut rng));
        g.push(Layer::Relu);
        g.push(Layer::GlobalAvgPool);
        g.push(Layer::dense(3, 3, &mut rng));
        let x = random_input(&[2, 2, 32], 22);
        let report = grad_check(&g, &xent_loss(vec![1, 2]), &x, 1e-4, 24, &mut rng).unwrap();
        assert!(report.pass(), "{:?}", report.blocks);
    }

    #[test]
    fn corrupted_gradient_fails() {
        let mut rng = rng_from(31);
        let mut g = Graph::<f64>::new(&[5]);
        g.push(Layer::dense(5, 3, &mut rng));
        let x = random_input(&[2, 5], 32);
        let loss = xent_loss(vec![0, 1]);
        let acts = g.forward(&x).unwrap();
        let (_, dout) = loss(acts.output()).unwrap();
        let (mut pgrads, dinput) = g.backward(&acts, dout).unwrap();
        for v in pgrads[0].data_mut() {
            *v += 0.5;
        }
        let report =
            compare_with_fd(&g, &loss, &x, &pgrads, &dinput, 1e-4, 16, &mut rng).unwrap();
        assert!(!report.pass());
    }
}
