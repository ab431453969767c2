use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Training hyperparameters. Distances are measured after per-channel standardization,
/// so `tau` is in units of the mean squared pairwise distance.
///
/// Ranges exercised by the gradient tests: `tau ∈ [1.5, 4]`, `rho ∈ [1, 8]`,
/// `beta ∈ [0, 1]`, `lambda ∈ [0, 0.1]`, `epsilon ∈ [1e-4, 1e-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub tau: f64,
    pub rho: f64,
    pub beta: f64,
    /// One weight per channel, or a single weight broadcast to every channel.
    pub lambda: Vec<f64>,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub max_halvings: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            tau: 2.0,
            rho: 4.0,
            beta: 0.1,
            lambda: vec![0.01],
            epsilon: 1e-3,
            learning_rate: 1e-2,
            max_iters: 300,
            tol: 1e-6,
            max_halvings: 20,
        }
    }
}

impl Hyperparams {
    /// `beta` and `lambda` may be zero; everything else must be strictly positive.
    pub fn validate(&self, channels: usize) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("hyperparameter {what}")));
        let finite = [self.tau, self.rho, self.beta, self.epsilon, self.learning_rate, self.tol]
            .iter()
            .chain(&self.lambda)
            .all(|x| x.is_finite());
        if !finite {
            return bad("values must be finite");
        }
        if self.tau <= 1.0 {
            return bad("tau must exceed 1");
        }
        if self.rho <= 0.0 || self.epsilon <= 0.0 || self.learning_rate <= 0.0 {
            return bad("rho, epsilon and learning_rate must be positive");
        }
        if self.beta < 0.0 || self.tol < 0.0 || self.lambda.iter().any(|l| *l < 0.0) {
            return bad("beta, tol and lambda must be nonnegative");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if self.lambda.len() != 1 && self.lambda.len() != channels {
            return bad(&format!(
                "lambda has {} entries for {channels} channels",
                self.lambda.len()
            ));
        }
        Ok(())
    }

    pub fn lambda_for(&self, channel: usize) -> f64 {
        if self.lambda.len() == 1 {
            self.lambda[0]
        } else {
            self.lambda[channel]
        }
    }
}

/// `εI + (1/m) Σ_v L_vᵀL_v`, symmetrized.
pub fn consensus_of(projections: &[DMatrix<f64>], epsilon: f64) -> DMatrix<f64> {
    let d = projections[0].ncols();
    let mut sum = DMatrix::zeros(d, d);
    for l in projections {
        sum += l.tr_mul(l);
    }
    sum /= projections.len() as f64;
    let sym = (&sum + sum.transpose()) * 0.5;
    sym + DMatrix::identity(d, d) * epsilon
}

/// Learned per-channel projections and their consensus metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelFile", try_from = "ModelFile")]
pub struct MetricModel {
    pub channel_names: Vec<String>,
    /// Multiplier applied to raw channel features before any distance is taken.
    pub channel_scales: Vec<f64>,
    pub projections: Vec<DMatrix<f64>>,
    pub consensus: DMatrix<f64>,
    /// Objective before training followed by one value per sweep over the channels.
    pub trace: Vec<f64>,
    pub hyper: Hyperparams,
    pub converged: bool,
    pub iterations: usize,
}

impl MetricModel {
    /// Identity projections for `channels` channels of dimension `dim`.
    pub fn identity(channels: usize, dim: usize, hyper: Hyperparams) -> MetricModel {
        let projections = vec![DMatrix::identity(dim, dim); channels];
        let consensus = consensus_of(&projections, hyper.epsilon);
        MetricModel {
            channel_names: (0..channels).map(|v| format!("channel{v}")).collect(),
            channel_scales: vec![1.0; channels],
            projections,
            consensus,
            trace: Vec::new(),
            hyper,
            converged: false,
            iterations: 0,
        }
    }

    pub fn num_channels(&self) -> usize {
        self.projections.len()
    }

    pub fn dim(&self) -> usize {
        self.consensus.nrows()
    }

    pub fn update_consensus(&mut self) {
        self.consensus = consensus_of(&self.projections, self.hyper.epsilon);
    }

    /// Combined consensus distance between two shapes given their raw per-channel features.
    pub fn distance(&self, a: &[&[f64]], b: &[&[f64]]) -> Result<f64> {
        if a.len() != self.num_channels() || b.len() != self.num_channels() {
            return Err(Error::DimensionMismatch {
                expected: self.num_channels(),
                found: a.len().min(b.len()),
            });
        }
        let scaled = |x: &[&[f64]]| -> Vec<Vec<f64>> {
            x.iter()
                .zip(&self.channel_scales)
                .map(|(row, s)| row.iter().map(|v| v * s).collect())
                .collect()
        };
        let (sa, sb) = (scaled(a), scaled(b));
        let ra: Vec<&[f64]> = sa.iter().map(|r| r.as_slice()).collect();
        let rb: Vec<&[f64]> = sb.iter().map(|r| r.as_slice()).collect();
        crate::eval::combined_distance(&ra, &rb, &self.consensus)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<MetricModel> {
        Ok(serde_json::from_str(text)?)
    }

    /// `iteration,objective` rows.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,objective\n");
        for (i, j) in self.trace.iter().enumerate() {
            out.push_str(&format!("{i},{j:?}\n"));
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    rows: usize,
    cols: usize,
    /// Row-major.
    data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixFile {
    fn from(m: &DMatrix<f64>) -> Self {
        MatrixFile {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }
}

impl TryFrom<MatrixFile> for DMatrix<f64> {
    type Error = String;

    fn try_from(f: MatrixFile) -> std::result::Result<Self, String> {
        if f.data.len() != f.rows * f.cols {
            return Err(format!("matrix {}x{} has {} entries", f.rows, f.cols, f.data.len()));
        }
        Ok(DMatrix::from_row_slice(f.rows, f.cols, &f.data))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ModelFile {
    channel_names: Vec<String>,
    channel_scales: Vec<f64>,
    projections: Vec<MatrixFile>,
    consensus: MatrixFile,
    training_trace: Vec<f64>,
    hyper: Hyperparams,
    converged: bool,
    iterations: usize,
}

impl From<MetricModel> for ModelFile {
    fn from(m: MetricModel) -> Self {
        ModelFile {
            projections: m.projections.iter().map(MatrixFile::from).collect(),
            consensus: MatrixFile::from(&m.consensus),
            channel_names: m.channel_names,
            channel_scales: m.channel_scales,
            training_trace: m.trace,
            hyper: m.hyper,
            converged: m.converged,
            iterations: m.iterations,
        }
    }
}

impl TryFrom<ModelFile> for MetricModel {
    type Error = String;

    fn try_from(f: ModelFile) -> std::result::Result<Self, String> {
        let projections = f
            .projections
            .into_iter()
            .map(DMatrix::try_from)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let consensus = DMatrix::try_from(f.consensus)?;
        let m = projections.len();
        if m == 0 || f.channel_names.len() != m || f.channel_scales.len() != m {
            return Err("channel names, scales and projections disagree".into());
        }
        let d = consensus.nrows();
        if !consensus.is_square() || projections.iter().any(|l| l.shape() != (d, d)) {
            return Err("projections and consensus must be square of equal size".into());
        }
        Ok(MetricModel {
            channel_names: f.channel_names,
            channel_scales: f.channel_scales,
            projections,
            consensus,
            trace: f.training_trace,
            hyper: f.hyper,
            converged: f.converged,
            iterations: f.iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn consensus_of_identities() {
        for m in 1..5 {
            let model = MetricModel::identity(m, 30, Hyperparams::default());
            let expect = DMatrix::<f64>::identity(30, 30) * (1.0 + 1e-3);
            assert!((model.consensus - expect).amax() < 1e-15);
        }
    }

    #[test]
    fn consensus_of_complementary_diagonals() {
        let mut l1 = DMatrix::zeros(30, 30);
        let mut l2 = DMatrix::zeros(30, 30);
        l1[(0, 0)] = 1.0;
        l2[(1, 1)] = 1.0;
        let eps = 1e-3;
        let a = consensus_of(&[l1, l2], eps);
        let mut expect = DMatrix::identity(30, 30) * eps;
        expect[(0, 0)] += 0.5;
        expect[(1, 1)] += 0.5;
        assert!((a - expect).amax() < 1e-15);
    }

    #[test]
    fn consensus_minimum_eigenvalue_respects_ridge() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let ls: Vec<DMatrix<f64>> = (0..3)
                .map(|_| DMatrix::from_fn(30, 30, |_, _| rng.random_range(-1.0..1.0)))
                .collect();
            let a = consensus_of(&ls, 1e-3);
            assert_eq!(a, a.transpose());
            let min = SymmetricEigen::new(a).eigenvalues.min();
            assert!(min >= 1e-3 - 1e-9);
        }
    }

    #[test]
    fn json_round_trip_is_row_major_and_exact() {
        let mut model = MetricModel::identity(2, 3, Hyperparams::default());
        model.projections[0] = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 0.1]);
        model.update_consensus();
        model.trace = vec![3.5, 2.25];
        let text = model.to_json().unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["projections"][0]["data"][1], 2.0);
        assert_eq!(value["projections"][0]["rows"], 3);
        assert_eq!(MetricModel::from_json(&text).unwrap(), model);
    }

    #[test]
    fn hyperparam_validation() {
        assert!(Hyperparams::default().validate(3).is_ok());
        let h = Hyperparams { tau: 1.0, ..Default::default() };
        assert!(h.validate(1).is_err());
        let h = Hyperparams { lambda: vec![0.1, 0.2], ..Default::default() };
        assert!(h.validate(3).is_err());
        assert!(h.validate(2).is_ok());
        assert_eq!(h.lambda_for(1), 0.2);
    }
}
