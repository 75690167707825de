//! Dataset and task constructors: teacher-student regression, toy addition
//! with interpolated representations, and MNIST ingestion.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::nn::{forward, init_params, Activation, Batch, LossKind, MlpSpec, ParamVector};
use crate::derive_seed;

pub mod mnist;
pub use mnist::{load_mnist, mnist_interpolated, subset, IdxPaths, MnistTask};

/// Seed salt constants; each sub-stream of a task gets its own.
const TEACHER_SALT: u64 = 0x7465_6163_6865_7221; // teacher draw
const DATA_SALT: u64 = 1;
const REPR_SALT: u64 = 2;
const TARGETS_SALT: u64 = 3;
const SPLIT_SALT: u64 = 4;

/// Regression task whose targets come from a fixed randomly initialized
/// network with the same architecture as the trained one.
#[derive(Debug, Clone)]
pub struct TeacherStudentTask {
    pub spec: MlpSpec,
    pub teacher_params: ParamVector,
    pub train: Batch,
    pub test: Batch,
    /// Per-sample error threshold for the pseudo-classification accuracy.
    pub theta: f64,
}

/// Architecture shared by teacher and student.
pub fn teacher_student_spec() -> MlpSpec {
    MlpSpec::new(vec![5, 100, 100, 5], Activation::Tanh, LossKind::Mse).unwrap()
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

/// Build a teacher-student task with standard-normal inputs and targets
/// produced exactly by the teacher network (drawn at scale alpha = 1).
pub fn gen_teacher_student(seed: u64, n_train: usize, n_test: usize) -> Result<TeacherStudentTask> {
    if n_train == 0 || n_test == 0 {
        return Err(Error::domain("teacher-student task needs at least one train and test sample"));
    }
    let spec = teacher_student_spec();
    let teacher_params = init_params(&spec, seed ^ TEACHER_SALT);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, DATA_SALT));
    let d = spec.input_dim();
    let train_x = gaussian_matrix(&mut rng, n_train, d);
    let test_x = gaussian_matrix(&mut rng, n_test, d);
    let train_y = forward(&spec, &teacher_params, train_x.view())?;
    let test_y = forward(&spec, &teacher_params, test_x.view())?;
    Ok(TeacherStudentTask {
        spec,
        teacher_params,
        train: Batch::new(train_x, train_y, None)?,
        test: Batch::new(test_x, test_y, None)?,
        theta: 0.01,
    })
}

/// Scalar representation `E_0..E_{p-1}` interpolating between the linear
/// embedding `E_k = k` (m = 0) and a fixed Gaussian draw (m = 1).
pub fn make_representation(p: usize, m: f64, seed: u64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::domain(format!("messiness must lie in [0, 1], got {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, REPR_SALT));
    Ok((0..p)
        .map(|k| {
            let g: f64 = rng.sample(StandardNormal);
            m * g + (1.0 - m) * k as f64
        })
        .collect())
}

/// Toy addition task: unordered digit pairs `(i, j)` with `i <= j`, decoder
/// input `E_i + E_j`, and a fixed random 30-dimensional target vector per
/// output label `k = i + j`.
#[derive(Debug, Clone)]
pub struct AdditionTask {
    pub base: usize,
    pub messiness: f64,
    pub representation: Vec<f64>,
    /// `(2p - 1) x 30` fixed random output targets, row `k` for label `k`.
    pub output_targets: Array2<f64>,
    /// All unordered pairs in lexicographic order.
    pub pairs: Vec<(usize, usize)>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    seed: u64,
}

/// Output embedding dimension of the addition decoder.
pub const ADDITION_TARGET_DIM: usize = 30;

/// Decoder architecture for the addition task.
pub fn addition_decoder_spec() -> MlpSpec {
    MlpSpec::new(
        vec![1, 200, 200, ADDITION_TARGET_DIM],
        Activation::Relu,
        LossKind::Mse,
    )
    .unwrap()
}

/// Enumerate pairs, split them with a seed-determined permutation, and draw
/// the representation and output targets.
pub fn gen_addition_task(p: usize, m: f64, train_size: usize, seed: u64) -> Result<AdditionTask> {
    if p == 0 {
        return Err(Error::domain("addition base must be positive"));
    }
    let n_pairs = p * (p + 1) / 2;
    if train_size == 0 || train_size > n_pairs {
        return Err(Error::domain(format!(
            "train size must lie in 1..={n_pairs} for base {p}, got {train_size}"
        )));
    }
    let representation = make_representation(p, m, seed)?;

    let mut targets_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, TARGETS_SALT));
    let output_targets = gaussian_matrix(&mut targets_rng, 2 * p - 1, ADDITION_TARGET_DIM);

    let mut pairs = Vec::with_capacity(n_pairs);
    for i in 0..p {
        for j in i..p {
            pairs.push((i, j));
        }
    }

    let mut order: Vec<usize> = (0..n_pairs).collect();
    let mut split_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, SPLIT_SALT));
    order.shuffle(&mut split_rng);
    let mut train_indices: Vec<usize> = order[..train_size].to_vec();
    let mut test_indices: Vec<usize> = order[train_size..].to_vec();
    train_indices.sort_unstable();
    test_indices.sort_unstable();

    Ok(AdditionTask {
        base: p,
        messiness: m,
        representation,
        output_targets,
        pairs,
        train_indices,
        test_indices,
        seed,
    })
}

impl AdditionTask {
    /// Output label of a pair.
    pub fn label(&self, pair: (usize, usize)) -> usize {
        pair.0 + pair.1
    }

    /// The same task (split, targets, Gaussian draw) at a different
    /// messiness value.
    pub fn at_messiness(&self, m: f64) -> Result<AdditionTask> {
        let mut out = self.clone();
        out.representation = make_representation(self.base, m, self.seed)?;
        out.messiness = m;
        Ok(out)
    }

    /// Decoder batch for the given pair indices using a caller-supplied
    /// representation (the trainable-representation runs pass their current
    /// one).
    pub fn batch_with_representation(&self, indices: &[usize], representation: &[f64]) -> Result<Batch> {
        let n = indices.len();
        let mut inputs = Array2::zeros((n, 1));
        let mut targets = Array2::zeros((n, ADDITION_TARGET_DIM));
        let mut labels = Vec::with_capacity(n);
        for (row, &idx) in indices.iter().enumerate() {
            let (i, j) = self.pairs[idx];
            inputs[[row, 0]] = representation[i] + representation[j];
            let k = i + j;
            targets.row_mut(row).assign(&self.output_targets.row(k));
            labels.push(k);
        }
        Batch::new(inputs, targets, Some(labels))
    }

    pub fn batch(&self, indices: &[usize]) -> Result<Batch> {
        self.batch_with_representation(indices, &self.representation)
    }

    pub fn train_batch(&self) -> Result<Batch> {
        self.batch(&self.train_indices)
    }

    pub fn test_batch(&self) -> Result<Batch> {
        self.batch(&self.test_indices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn teacher_student_targets_are_exact_teacher_outputs() {
        let task = gen_teacher_student(0, 10, 7).unwrap();
        let y = forward(&task.spec, &task.teacher_params, task.train.inputs.view()).unwrap();
        assert_eq!(y, task.train.targets);
        assert_eq!(task.train.len(), 10);
        assert_eq!(task.test.len(), 7);
    }

    #[test]
    fn different_seeds_give_different_teachers() {
        let a = gen_teacher_student(1, 5, 5).unwrap();
        let b = gen_teacher_student(2, 5, 5).unwrap();
        assert_ne!(a.teacher_params, b.teacher_params);
    }

    #[test]
    fn representation_endpoints() {
        let p = 10;
        let r0 = make_representation(p, 0.0, 3).unwrap();
        for (k, e) in r0.iter().enumerate() {
            assert_eq!(*e, k as f64);
        }
        let r1a = make_representation(p, 1.0, 3).unwrap();
        let r1b = make_representation(p, 1.0, 3).unwrap();
        assert_eq!(r1a, r1b);
        // pure Gaussian: should not be the identity embedding
        assert!(r1a.iter().enumerate().any(|(k, e)| (*e - k as f64).abs() > 1e-6));
        assert!(make_representation(p, -0.1, 3).is_err());
        assert!(make_representation(p, 1.1, 3).is_err());
    }

    #[test]
    fn representation_is_linear_in_m() {
        let p = 12;
        let seed = 9;
        let r0 = make_representation(p, 0.0, seed).unwrap();
        let r1 = make_representation(p, 1.0, seed).unwrap();
        for &m in &[0.25, 0.5, 0.9] {
            let rm = make_representation(p, m, seed).unwrap();
            for k in 0..p {
                let expect = m * r1[k] + (1.0 - m) * r0[k];
                assert!((rm[k] - expect).abs() <= 1e-15 * expect.abs().max(1.0));
            }
        }
    }

    #[test]
    fn addition_pair_enumeration_and_labels() {
        let task = gen_addition_task(10, 0.5, 45, 11).unwrap();
        assert_eq!(task.pairs.len(), 55);
        // exhaustive label check for small bases
        for p in 1..=12usize {
            let t = gen_addition_task(p, 0.0, 1, 0).unwrap();
            assert_eq!(t.pairs.len(), p * (p + 1) / 2);
            for &pair in &t.pairs {
                assert_eq!(t.label(pair), pair.0 + pair.1);
                assert!(pair.0 <= pair.1);
            }
        }
        // decoder input of pair (3,4) is E_3 + E_4 and its label is 7
        let idx = task.pairs.iter().position(|&p| p == (3, 4)).unwrap();
        let b = task.batch(&[idx]).unwrap();
        assert_eq!(b.inputs[[0, 0]], task.representation[3] + task.representation[4]);
        assert_eq!(b.labels.as_ref().unwrap()[0], 7);
    }

    #[test]
    fn addition_split_is_disjoint_and_covering() {
        let task = gen_addition_task(10, 1.0, 45, 5).unwrap();
        assert_eq!(task.train_indices.len(), 45);
        assert_eq!(task.test_indices.len(), 10);
        let mut all: Vec<usize> = task
            .train_indices
            .iter()
            .chain(task.test_indices.iter())
            .copied()
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 55);
        assert!(gen_addition_task(10, 1.0, 56, 5).is_err());
        assert!(gen_addition_task(10, 1.0, 0, 5).is_err());
    }

    #[test]
    fn at_messiness_keeps_split_and_targets() {
        let a = gen_addition_task(10, 1.0, 45, 21).unwrap();
        let b = a.at_messiness(0.0).unwrap();
        assert_eq!(a.train_indices, b.train_indices);
        assert_eq!(a.output_targets, b.output_targets);
        for (k, e) in b.representation.iter().enumerate() {
            assert_eq!(*e, k as f64);
        }
        // same seed, same messiness -> identical representation
        let c = b.at_messiness(1.0).unwrap();
        assert_eq!(c.representation, a.representation);
    }
}
