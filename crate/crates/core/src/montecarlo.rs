//! Monte Carlo estimation of nonlocal volumes.
//!
//! Every sample owns its random stream: sample `i` of a run with master seed
//! `s` draws its angles from ChaCha8 seeded with `s`, on stream `i`. Samples
//! are evaluated in parallel chunks and reduced strictly in index order, so
//! results are bit-identical for any number of worker threads.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::polytope::{
    enumerate_strategies, trace_distance_to_local, BellFunctional, LocalPolytope, PolytopeError,
    Scenario,
};
use crate::quantum::{behavior_from, PureState, QuantumError, SettingAngles, SettingKind};

/// Default threshold separating local from nonlocal trace distances.
pub const DEFAULT_TOL: f64 = 1e-8;

const CHUNK: usize = 2048;

#[derive(Debug, Error)]
pub enum MonteCarloError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error("sample {index} failed: {source}")]
    Sample {
        index: u64,
        #[source]
        source: Box<MonteCarloError>,
    },
    #[error("record sink failed: {0}")]
    Sink(#[from] std::io::Error),
}

/// Measurement family and number of measurements per party.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SamplerSpec {
    pub kind: SettingKind,
    pub measurements_per_party: usize,
}

impl SamplerSpec {
    pub fn new(kind: SettingKind, measurements_per_party: usize) -> Result<Self, MonteCarloError> {
        if measurements_per_party == 0 {
            return Err(MonteCarloError::Config("need at least one measurement per party".into()));
        }
        Ok(Self {
            kind,
            measurements_per_party,
        })
    }

    pub fn qubit(n: usize) -> Result<Self, MonteCarloError> {
        Self::new(SettingKind::QubitBloch, n)
    }

    pub fn qutrit(n: usize) -> Result<Self, MonteCarloError> {
        Self::new(SettingKind::QutritReck, n)
    }

    pub fn angles_per_party(&self) -> usize {
        self.kind.angles_per_measurement() * self.measurements_per_party
    }

    pub fn scenario(&self) -> Scenario {
        let d = self.kind.local_dim();
        Scenario::new(self.measurements_per_party, self.measurements_per_party, d, d)
            .expect("counts validated on construction")
    }
}

/// Random stream for sample `index` of a run seeded with `master_seed`.
pub fn derive_sample_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// SplitMix64-style mixing of a master seed with an index, used to give each
/// point of a parameter scan its own master seed.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws Alice's angles, then Bob's. Qubit measurements take `theta = pi u`,
/// `phi = 2 pi u'`; qutrit measurements take six angles `pi (2u - 1)`, with
/// `u` uniform in `[0, 1)`.
pub fn sample_settings<R: Rng + ?Sized>(spec: &SamplerSpec, rng: &mut R) -> SettingAngles {
    let party = |rng: &mut R| -> Vec<f64> {
        let mut out = Vec::with_capacity(spec.angles_per_party());
        for _ in 0..spec.measurements_per_party {
            match spec.kind {
                SettingKind::QubitBloch => {
                    out.push(PI * rng.random::<f64>());
                    out.push(2.0 * PI * rng.random::<f64>());
                }
                SettingKind::QutritReck => {
                    for _ in 0..6 {
                        out.push(PI * (2.0 * rng.random::<f64>() - 1.0));
                    }
                }
            }
        }
        out
    };
    let party_a = party(rng);
    let party_b = party(rng);
    SettingAngles {
        kind: spec.kind,
        party_a,
        party_b,
    }
}

/// Outcome of one sampled setting.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub index: u64,
    pub angles: SettingAngles,
    /// Trace distance when it exceeds the tolerance, zero otherwise.
    pub nl: f64,
    /// One value per functional, in the order they were supplied.
    pub bell_values: Vec<f64>,
    pub is_nonlocal: bool,
}

impl SampleRecord {
    /// `index angles_a angles_b nl bell_values nonlocal`, space separated;
    /// lists are comma separated (`-` when empty), reals in round-trip precision.
    pub fn to_line(&self) -> String {
        fn list(v: &[f64]) -> String {
            if v.is_empty() {
                "-".to_string()
            } else {
                v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
            }
        }
        format!(
            "{} {} {} {:?} {} {}",
            self.index,
            list(&self.angles.party_a),
            list(&self.angles.party_b),
            self.nl,
            list(&self.bell_values),
            u8::from(self.is_nonlocal)
        )
    }
}

/// Monte Carlo estimates for one state.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeEstimate {
    pub n_samples: u64,
    pub n_nonlocal: u64,
    /// Per functional: samples exceeding the local bound by more than the tolerance.
    pub n_violating: Vec<u64>,
    /// Nonlocal volume.
    pub v_hat: f64,
    /// Trace-weighted nonlocal volume.
    pub vq_hat: f64,
    /// Per functional volume of violation.
    pub vi_hat: Vec<f64>,
    /// `sqrt(v (1 - v) / N)`.
    pub std_err_v: f64,
    /// Sample standard deviation of the weights over `sqrt(N)`.
    pub std_err_vq: f64,
    pub std_err_vi: Vec<f64>,
    /// Largest value observed per functional.
    pub max_bell_values: Vec<f64>,
    pub seed: u64,
}

fn binomial_se(k: u64, n: u64) -> f64 {
    let p = k as f64 / n as f64;
    (p * (1.0 - p) / n as f64).sqrt()
}

/// In-order accumulator; the same sequence of records always gives the same bits.
struct Accumulator {
    n: u64,
    nonlocal: u64,
    violating: Vec<u64>,
    sum_nl: f64,
    mean: f64,
    m2: f64,
    max_bell: Vec<f64>,
}

impl Accumulator {
    fn new(functionals: usize) -> Self {
        Self {
            n: 0,
            nonlocal: 0,
            violating: vec![0; functionals],
            sum_nl: 0.0,
            mean: 0.0,
            m2: 0.0,
            max_bell: vec![f64::NEG_INFINITY; functionals],
        }
    }

    fn push(&mut self, r: &SampleRecord, functionals: &[BellFunctional], tol: f64) {
        self.n += 1;
        self.nonlocal += u64::from(r.is_nonlocal);
        self.sum_nl += r.nl;
        let delta = r.nl - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (r.nl - self.mean);
        for (k, (f, &v)) in functionals.iter().zip(&r.bell_values).enumerate() {
            if v > f.local_bound() + tol {
                self.violating[k] += 1;
            }
            self.max_bell[k] = self.max_bell[k].max(v);
        }
    }

    fn finish(self, seed: u64) -> VolumeEstimate {
        let n = self.n;
        let nf = n as f64;
        let var = if n > 1 { (self.m2 / (nf - 1.0)).max(0.0) } else { 0.0 };
        VolumeEstimate {
            n_samples: n,
            n_nonlocal: self.nonlocal,
            v_hat: self.nonlocal as f64 / nf,
            vq_hat: self.sum_nl / nf,
            vi_hat: self.violating.iter().map(|&k| k as f64 / nf).collect(),
            std_err_v: binomial_se(self.nonlocal, n),
            std_err_vq: (var / nf).sqrt(),
            std_err_vi: self.violating.iter().map(|&k| binomial_se(k, n)).collect(),
            n_violating: self.violating,
            max_bell_values: self.max_bell,
            seed,
        }
    }
}

/// A state, a sampler and the functionals to track, with the local polytope
/// of the sampler's scenario built once.
#[derive(Clone, Debug)]
pub struct VolumeEstimator {
    state: PureState,
    spec: SamplerSpec,
    functionals: Vec<BellFunctional>,
    polytope: LocalPolytope,
    tol: f64,
}

impl VolumeEstimator {
    pub fn new(
        state: PureState,
        spec: SamplerSpec,
        functionals: Vec<BellFunctional>,
        tol: f64,
    ) -> Result<Self, MonteCarloError> {
        let d = spec.kind.local_dim();
        if state.dim_a() != d || state.dim_b() != d {
            return Err(MonteCarloError::Config(format!(
                "{}x{} state does not match {:?} measurements",
                state.dim_a(),
                state.dim_b(),
                spec.kind
            )));
        }
        if !tol.is_finite() || tol < 0.0 {
            return Err(MonteCarloError::Config(format!("tolerance {tol} must be >= 0")));
        }
        let scenario = spec.scenario();
        if let Some(f) = functionals.iter().find(|f| f.scenario() != scenario) {
            return Err(MonteCarloError::Config(format!(
                "functional '{}' is defined on {}, sampler produces {}",
                f.name(),
                f.scenario(),
                scenario
            )));
        }
        let polytope = enumerate_strategies(scenario)?;
        Ok(Self {
            state,
            spec,
            functionals,
            polytope,
            tol,
        })
    }

    pub fn functionals(&self) -> &[BellFunctional] {
        &self.functionals
    }

    pub fn spec(&self) -> SamplerSpec {
        self.spec
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Evaluates a given setting.
    pub fn evaluate(&self, index: u64, angles: SettingAngles) -> Result<SampleRecord, MonteCarloError> {
        let (ma, mb) = angles.measurements()?;
        let behavior = behavior_from(&self.state, &ma, &mb)?;
        let distance = trace_distance_to_local(&behavior, &self.polytope)?.distance;
        let is_nonlocal = distance > self.tol;
        let bell_values = self
            .functionals
            .iter()
            .map(|f| f.evaluate_raw(behavior.probs()))
            .collect();
        Ok(SampleRecord {
            index,
            angles,
            nl: if is_nonlocal { distance } else { 0.0 },
            bell_values,
            is_nonlocal,
        })
    }

    /// Draws and evaluates sample `index` of the run seeded with `seed`.
    pub fn sample(&self, seed: u64, index: u64) -> Result<SampleRecord, MonteCarloError> {
        let mut rng = derive_sample_rng(seed, index);
        let angles = sample_settings(&self.spec, &mut rng);
        self.evaluate(index, angles).map_err(|e| MonteCarloError::Sample {
            index,
            source: Box::new(e),
        })
    }

    /// Runs `n` samples; `sink` sees every record in index order.
    pub fn estimate_with<F>(&self, n: u64, seed: u64, mut sink: F) -> Result<VolumeEstimate, MonteCarloError>
    where
        F: FnMut(&SampleRecord) -> std::io::Result<()>,
    {
        if n == 0 {
            return Err(MonteCarloError::Config("need at least one sample".into()));
        }
        let mut acc = Accumulator::new(self.functionals.len());
        let mut start = 0u64;
        while start < n {
            let end = (start + CHUNK as u64).min(n);
            let chunk: Vec<Result<SampleRecord, MonteCarloError>> =
                (start..end).into_par_iter().map(|i| self.sample(seed, i)).collect();
            for r in chunk {
                let r = r?;
                acc.push(&r, &self.functionals, self.tol);
                sink(&r)?;
            }
            start = end;
        }
        Ok(acc.finish(seed))
    }

    pub fn estimate(&self, n: u64, seed: u64) -> Result<VolumeEstimate, MonteCarloError> {
        self.estimate_with(n, seed, |_| Ok(()))
    }

    /// Lazily evaluates samples `0..n` one at a time.
    pub fn records(&self, n: u64, seed: u64) -> impl Iterator<Item = Result<SampleRecord, MonteCarloError>> + '_ {
        (0..n).map(move |i| self.sample(seed, i))
    }
}

/// One-shot estimate of the nonlocal, trace-weighted and violation volumes.
pub fn estimate_volumes(
    state: &PureState,
    spec: SamplerSpec,
    functionals: &[BellFunctional],
    n: u64,
    master_seed: u64,
    tol: f64,
) -> Result<VolumeEstimate, MonteCarloError> {
    VolumeEstimator::new(state.clone(), spec, functionals.to_vec(), tol)?.estimate(n, master_seed)
}

/// Owning iterator over per-sample records.
pub struct RecordStream {
    estimator: VolumeEstimator,
    seed: u64,
    next: u64,
    end: u64,
}

impl Iterator for RecordStream {
    type Item = Result<SampleRecord, MonteCarloError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let i = self.next;
        self.next += 1;
        Some(self.estimator.sample(self.seed, i))
    }
}

/// Per-sample records with the same sampling contract as [`estimate_volumes`].
pub fn stream_records(
    state: &PureState,
    spec: SamplerSpec,
    functionals: &[BellFunctional],
    n: u64,
    master_seed: u64,
    tol: f64,
) -> Result<RecordStream, MonteCarloError> {
    Ok(RecordStream {
        estimator: VolumeEstimator::new(state.clone(), spec, functionals.to_vec(), tol)?,
        seed: master_seed,
        next: 0,
        end: n,
    })
}
