//! Scalar GAN for ray angle offsets, plus Gaussian and Laplacian baselines
//! and Kolmogorov-Smirnov statistics for comparing them.
//!
//! The generator works in standardized units; the model stores the location
//! and scale of its training data and maps samples back on output.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::io;
use crate::nn::{Activation, Adam, MlpModel};
use crate::synth::laplace_cdf;

/// Probability clamp applied before every logarithm.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    StandardNormal,
    /// Uniform on [-1, 1].
    Uniform,
}

impl NoiseKind {
    pub fn tag(self) -> &'static str {
        match self {
            NoiseKind::StandardNormal => "normal",
            NoiseKind::Uniform => "uniform",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "normal" => Ok(NoiseKind::StandardNormal),
            "uniform" => Ok(NoiseKind::Uniform),
            _ => Err(Error::Parse(format!("unknown noise distribution `{tag}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub dim: usize,
}

impl NoiseSpec {
    /// `n` noise vectors, row-major.
    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n * self.dim)
            .map(|_| match self.kind {
                NoiseKind::StandardNormal => StandardNormal.sample(rng),
                NoiseKind::Uniform => rng.random_range(-1.0..=1.0),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorObjective {
    /// Minimize `-log d(g(z))`.
    NonSaturating,
    /// Minimize `log(1 - d(g(z)))`, the literal minimax form.
    Minimax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GanModel {
    pub generator: MlpModel,
    pub discriminator: MlpModel,
    pub noise: NoiseSpec,
    /// Data location and scale used for standardization.
    pub location: f64,
    pub scale: f64,
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

impl GanModel {
    pub fn validate(&self) -> Result<()> {
        if self.generator.input_dim() != self.noise.dim || self.generator.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "generator must map {} noise inputs to 1 output, has {:?}",
                self.noise.dim,
                self.generator.layer_dims()
            )));
        }
        if self.discriminator.input_dim() != 1 || self.discriminator.output_dim() != 1 {
            return Err(Error::Shape("discriminator must map 1 input to 1 output".into()));
        }
        let last = self.discriminator.layers().last().expect("non-empty network");
        if last.activation != Activation::Sigmoid {
            return Err(Error::Shape("discriminator output must be a sigmoid".into()));
        }
        if !(self.scale > 0.0 && self.scale.is_finite() && self.location.is_finite()) {
            return Err(Error::Shape("normalization scale must be positive".into()));
        }
        Ok(())
    }

    /// Random networks for the given config and data normalization.
    pub fn random(cfg: &GanConfig, location: f64, scale: f64, rng: &mut ChaCha8Rng) -> Result<Self> {
        let hidden = Activation::LeakyRelu(cfg.leaky_slope);
        let mut gdims = vec![cfg.noise_dim];
        let mut ddims = vec![1];
        gdims.extend(std::iter::repeat_n(cfg.hidden, cfg.hidden_layers));
        ddims.extend(std::iter::repeat_n(cfg.hidden, cfg.hidden_layers));
        gdims.push(1);
        ddims.push(1);
        let mut gacts = vec![hidden; cfg.hidden_layers];
        let mut dacts = gacts.clone();
        gacts.push(Activation::Linear);
        dacts.push(Activation::Sigmoid);
        let model = Self {
            generator: MlpModel::random(&gdims, &gacts, rng)?,
            discriminator: MlpModel::random(&ddims, &dacts, rng)?,
            noise: NoiseSpec {
                kind: cfg.noise_kind,
                dim: cfg.noise_dim,
            },
            location,
            scale,
        };
        model.validate()?;
        Ok(model)
    }

    /// Generator outputs in standardized units.
    pub fn generate_standardized(&self, noise: &[f64]) -> Result<Vec<f64>> {
        Ok(self.generator.forward_batch(noise)?.output().to_vec())
    }

    /// Generator outputs in data units.
    pub fn generate(&self, noise: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .generate_standardized(noise)?
            .into_iter()
            .map(|x| self.location + self.scale * x)
            .collect())
    }

    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| (v - self.location) / self.scale).collect()
    }

    /// Discriminator probabilities for data-unit inputs.
    pub fn discriminate(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .discriminator
            .forward_batch(&self.standardize(x))?
            .output()
            .to_vec())
    }

    /// `E[log d(x)] + E[log(1 - d(g(z)))]` with `real` in data units.
    pub fn bce(&self, real: &[f64], noise: &[f64]) -> Result<f64> {
        if real.is_empty() || noise.is_empty() {
            return Err(Error::invalid("bce needs non-empty real and noise batches"));
        }
        let fake = self.generate_standardized(noise)?;
        Ok(self.value_standardized(&self.standardize(real), &fake)?)
    }

    fn value_standardized(&self, real: &[f64], fake: &[f64]) -> Result<f64> {
        let dr = self.discriminator.forward_batch(real)?;
        let df = self.discriminator.forward_batch(fake)?;
        let a = dr.output().iter().map(|&p| clamp_prob(p).ln()).sum::<f64>() / real.len() as f64;
        let b = df.output().iter().map(|&p| (1.0 - clamp_prob(p)).ln()).sum::<f64>() / fake.len() as f64;
        Ok(a + b)
    }

    /// Discriminator loss (negated value) and its gradient for standardized
    /// real and fake batches.
    pub fn discriminator_loss_grad(&self, real: &[f64], fake: &[f64]) -> Result<(f64, Vec<f64>)> {
        if real.is_empty() || fake.is_empty() {
            return Err(Error::invalid("discriminator step needs non-empty batches"));
        }
        let d = &self.discriminator;
        let mut grads = vec![0.0; d.param_count()];
        let tr = d.forward_batch(real)?;
        let nr = real.len() as f64;
        let go: Vec<f64> = tr.output().iter().map(|&p| -1.0 / (nr * clamp_prob(p))).collect();
        d.backward(&tr, &go, &mut grads);
        let tf = d.forward_batch(fake)?;
        let nf = fake.len() as f64;
        let go: Vec<f64> = tf.output().iter().map(|&p| 1.0 / (nf * (1.0 - clamp_prob(p)))).collect();
        d.backward(&tf, &go, &mut grads);
        let loss = -(tr.output().iter().map(|&p| clamp_prob(p).ln()).sum::<f64>() / nr
            + tf.output().iter().map(|&p| (1.0 - clamp_prob(p)).ln()).sum::<f64>() / nf);
        Ok((loss, grads))
    }

    pub fn generator_loss(&self, noise: &[f64], objective: GeneratorObjective) -> Result<f64> {
        let fake = self.generate_standardized(noise)?;
        let p = self.discriminator.forward_batch(&fake)?;
        let n = fake.len() as f64;
        Ok(p.output()
            .iter()
            .map(|&p| match objective {
                GeneratorObjective::NonSaturating => -clamp_prob(p).ln(),
                GeneratorObjective::Minimax => (1.0 - clamp_prob(p)).ln(),
            })
            .sum::<f64>()
            / n)
    }

    /// Generator loss and its gradient with respect to generator parameters.
    pub fn generator_loss_grad(&self, noise: &[f64], objective: GeneratorObjective) -> Result<(f64, Vec<f64>)> {
        let tg = self.generator.forward_batch(noise)?;
        if tg.batch() == 0 {
            return Err(Error::invalid("generator step needs a non-empty noise batch"));
        }
        let td = self.discriminator.forward_batch(tg.output())?;
        let n = tg.batch() as f64;
        let (loss, go): (f64, Vec<f64>) = match objective {
            GeneratorObjective::NonSaturating => (
                -td.output().iter().map(|&p| clamp_prob(p).ln()).sum::<f64>() / n,
                td.output().iter().map(|&p| -1.0 / (n * clamp_prob(p))).collect(),
            ),
            GeneratorObjective::Minimax => (
                td.output().iter().map(|&p| (1.0 - clamp_prob(p)).ln()).sum::<f64>() / n,
                td.output().iter().map(|&p| -1.0 / (n * (1.0 - clamp_prob(p)))).collect(),
            ),
        };
        let mut scratch = vec![0.0; self.discriminator.param_count()];
        let dx = self.discriminator.backward(&td, &go, &mut scratch);
        let mut grads = vec![0.0; self.generator.param_count()];
        self.generator.backward(&tg, &dx, &mut grads);
        Ok((loss, grads))
    }

    /// Fraction of correct calls (threshold 0.5) on real samples and on
    /// generated samples from `noise`.
    pub fn discriminator_accuracy(&self, real: &[f64], noise: &[f64]) -> Result<f64> {
        let pr = self.discriminate(real)?;
        let pf = self.discriminator.forward_batch(&self.generate_standardized(noise)?)?;
        let correct = pr.iter().filter(|&&p| p > 0.5).count() + pf.output().iter().filter(|&&p| p <= 0.5).count();
        Ok(correct as f64 / (pr.len() + pf.output().len()) as f64)
    }

    pub fn to_document(&self) -> String {
        let mut out = String::new();
        io::write_header(&mut out, "gan");
        let _ = writeln!(out, "\n[noise]");
        let _ = writeln!(out, "distribution = \"{}\"", self.noise.kind.tag());
        let _ = writeln!(out, "dim = {}", self.noise.dim);
        let _ = writeln!(out, "\n[normalization]");
        let _ = writeln!(out, "location = {}", io::fmt_f64(self.location));
        let _ = writeln!(out, "scale = {}", io::fmt_f64(self.scale));
        io::write_mlp(&mut out, "generator", &self.generator);
        io::write_mlp(&mut out, "discriminator", &self.discriminator);
        out
    }

    pub fn from_document(text: &str) -> Result<Self> {
        let doc = io::parse_document(text, "gan")?;
        let noise = io::get_table(&doc, "noise")?;
        let dim = noise
            .get("dim")
            .and_then(toml::Value::as_integer)
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::Parse("`noise.dim` must be a positive integer".into()))?;
        let norm = io::get_table(&doc, "normalization")?;
        let model = Self {
            generator: io::read_mlp(io::get_table(&doc, "generator")?)?,
            discriminator: io::read_mlp(io::get_table(&doc, "discriminator")?)?,
            noise: NoiseSpec {
                kind: NoiseKind::from_tag(io::get_str(noise, "distribution")?)?,
                dim: dim as usize,
            },
            location: io::get_f64(norm, "location")?,
            scale: io::get_f64(norm, "scale")?,
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GanConfig {
    pub noise_dim: usize,
    pub noise_kind: NoiseKind,
    pub hidden: usize,
    pub hidden_layers: usize,
    pub leaky_slope: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub batch: usize,
    /// Discriminator steps per generator step.
    pub d_steps: usize,
    pub steps: usize,
    pub seed: u64,
    pub objective: GeneratorObjective,
    /// Decay of the generator weight average returned by training.
    pub ema_decay: Option<f64>,
    /// Learning rate at the last step as a fraction of `lr`; the rate is
    /// annealed linearly in between.
    pub final_lr_fraction: f64,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            noise_dim: 8,
            noise_kind: NoiseKind::StandardNormal,
            hidden: 32,
            hidden_layers: 2,
            leaky_slope: 0.2,
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            batch: 256,
            d_steps: 1,
            steps: 20_000,
            seed: 0,
            objective: GeneratorObjective::NonSaturating,
            ema_decay: Some(0.999),
            final_lr_fraction: 0.05,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.noise_dim == 0 || self.hidden == 0 || self.batch == 0 || self.d_steps == 0 {
            return Err(Error::config("gan", "noise_dim, hidden, batch and d_steps must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("lr", "must be positive"));
        }
        if !(self.final_lr_fraction > 0.0 && self.final_lr_fraction <= 1.0) {
            return Err(Error::config("final_lr_fraction", "must lie in (0, 1]"));
        }
        if self.ema_decay.is_some_and(|d| !(0.0..1.0).contains(&d)) {
            return Err(Error::config("ema_decay", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.leaky_slope) {
            return Err(Error::config("leaky_slope", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GanHistory {
    pub d_loss: Vec<f64>,
    pub g_loss: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GanOutcome {
    pub model: GanModel,
    pub history: GanHistory,
}

pub const MIN_TRAINING_OFFSETS: usize = 100;

/// Steppable alternating ADAM training: each step runs `d_steps`
/// discriminator updates, then one generator update.
pub struct GanTrainer {
    cfg: GanConfig,
    model: GanModel,
    /// Exponential moving average of generator parameters, when enabled.
    ema: Option<Vec<f64>>,
    data: Vec<f64>,
    opt_d: Adam,
    opt_g: Adam,
    rng: ChaCha8Rng,
    history: GanHistory,
}

impl GanTrainer {
    pub fn new(offsets: &[f64], cfg: &GanConfig) -> Result<Self> {
        cfg.validate()?;
        if offsets.len() < MIN_TRAINING_OFFSETS {
            return Err(Error::invalid(format!(
                "GAN training needs at least {MIN_TRAINING_OFFSETS} offsets, got {}",
                offsets.len()
            )));
        }
        if offsets.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("offsets must be finite"));
        }
        let n = offsets.len() as f64;
        let location = offsets.iter().sum::<f64>() / n;
        let scale = (offsets.iter().map(|x| (x - location).powi(2)).sum::<f64>() / n).sqrt();
        if scale <= 0.0 {
            return Err(Error::invalid("offsets have zero spread"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let model = GanModel::random(cfg, location, scale, &mut rng)?;
        Ok(Self {
            data: model.standardize(offsets),
            opt_d: Adam::with_betas(model.discriminator.param_count(), cfg.lr, cfg.beta1, cfg.beta2, 1e-8),
            opt_g: Adam::with_betas(model.generator.param_count(), cfg.lr, cfg.beta1, cfg.beta2, 1e-8),
            ema: cfg.ema_decay.map(|_| model.generator.params()),
            model,
            rng,
            history: GanHistory {
                d_loss: Vec::with_capacity(cfg.steps),
                g_loss: Vec::with_capacity(cfg.steps),
            },
            cfg: cfg.clone(),
        })
    }

    pub fn steps_done(&self) -> usize {
        self.history.g_loss.len()
    }

    pub fn step(&mut self) -> Result<()> {
        let index = self.steps_done();
        let batch = self.cfg.batch;
        let progress = index as f64 / self.cfg.steps.max(1) as f64;
        let lr = self.cfg.lr * (1.0 - (1.0 - self.cfg.final_lr_fraction) * progress.min(1.0));
        self.opt_d.lr = lr;
        self.opt_g.lr = lr;
        let mut real = vec![0.0; batch];
        let mut d_loss = 0.0;
        for _ in 0..self.cfg.d_steps {
            for r in real.iter_mut() {
                *r = self.data[self.rng.random_range(0..self.data.len())];
            }
            let noise = self.model.noise.draw(batch, &mut self.rng);
            let fake = self.model.generate_standardized(&noise)?;
            let (loss, grads) = self.model.discriminator_loss_grad(&real, &fake)?;
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { stage: "step", index });
            }
            self.opt_d.step(&mut self.model.discriminator, &grads);
            d_loss = loss;
        }
        let noise = self.model.noise.draw(batch, &mut self.rng);
        let (g_loss, grads) = self.model.generator_loss_grad(&noise, self.cfg.objective)?;
        if !g_loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { stage: "step", index });
        }
        self.opt_g.step(&mut self.model.generator, &grads);
        if let (Some(ema), Some(decay)) = (self.ema.as_mut(), self.cfg.ema_decay) {
            for (e, p) in ema.iter_mut().zip(self.model.generator.params()) {
                *e = decay * *e + (1.0 - decay) * p;
            }
        }
        self.history.d_loss.push(d_loss);
        self.history.g_loss.push(g_loss);
        Ok(())
    }

    /// The model as it would be returned now (EMA generator when enabled).
    pub fn snapshot(&self) -> GanModel {
        let mut m = self.model.clone();
        if let Some(ema) = &self.ema {
            m.generator.set_params(ema).expect("EMA mirrors generator shape");
        }
        m
    }

    pub fn finish(self) -> GanOutcome {
        GanOutcome {
            model: self.snapshot(),
            history: self.history,
        }
    }
}

/// Runs [`GanTrainer`] for `cfg.steps` steps.
pub fn train_gan(offsets: &[f64], cfg: &GanConfig) -> Result<GanOutcome> {
    let mut t = GanTrainer::new(offsets, cfg)?;
    for _ in 0..cfg.steps {
        t.step()?;
    }
    Ok(t.finish())
}

/// `n` offsets in data units from seeded noise.
pub fn sample_offsets(model: &GanModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    model.generate(&model.noise.draw(n, &mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineFamily {
    Gaussian,
    Laplacian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBaseline {
    pub family: BaselineFamily,
    pub location: f64,
    pub scale: f64,
}

impl FitBaseline {
    pub fn cdf(&self, x: f64) -> f64 {
        match self.family {
            BaselineFamily::Gaussian => {
                0.5 * (1.0 + libm::erf((x - self.location) / (self.scale * std::f64::consts::SQRT_2)))
            }
            BaselineFamily::Laplacian => laplace_cdf(x, self.location, self.scale),
        }
    }
}

/// Maximum-likelihood fit: mean and population std for the Gaussian, median
/// and mean absolute deviation about the median for the Laplacian.
pub fn fit_baseline(samples: &[f64], family: BaselineFamily) -> Result<FitBaseline> {
    if samples.len() < 2 {
        return Err(Error::invalid("baseline fit needs at least 2 samples"));
    }
    let n = samples.len() as f64;
    let (location, scale) = match family {
        BaselineFamily::Gaussian => {
            let m = samples.iter().sum::<f64>() / n;
            (m, (samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
        }
        BaselineFamily::Laplacian => {
            let mut s = samples.to_vec();
            s.sort_by(f64::total_cmp);
            let k = s.len();
            let med = if k % 2 == 1 {
                s[k / 2]
            } else {
                0.5 * (s[k / 2 - 1] + s[k / 2])
            };
            (med, s.iter().map(|x| (x - med).abs()).sum::<f64>() / n)
        }
    };
    if !(scale > 0.0) {
        return Err(Error::invalid("baseline fit has zero scale"));
    }
    Ok(FitBaseline {
        family,
        location,
        scale,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    if samples.is_empty() {
        return 1.0;
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}
