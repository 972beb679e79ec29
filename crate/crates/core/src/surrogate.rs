//! Neural cost surrogates: a padded fixed-width FNN and a masked Set
//! Transformer, both predicting standardized cost and differentiable with
//! respect to element coordinates.

use std::fs;
use std::path::{Path, PathBuf};

use arrayopt_autodiff::nn::{dense, mse, uniform_fan_in};
use arrayopt_autodiff::{weights, AdamConfig, AdamState, Graph, ParamStore, Tensor, Var};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{canonical_permutation, pad_elements, Element, PaddedInput, MAX_ELEMENTS};

const FNN_ID: u32 = 1;
const SET_TRANSFORMER_ID: u32 = 2;
const FNN_HIDDEN: [usize; 2] = [20, 12];
const LN_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Fnn,
    SetTransformer,
}

impl Arch {
    fn id(self) -> u32 {
        match self {
            Arch::Fnn => FNN_ID,
            Arch::SetTransformer => SET_TRANSFORMER_ID,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetTransformerConfig {
    pub dim: usize,
    pub heads: usize,
    pub layer_norm: bool,
}

impl Default for SetTransformerConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            heads: 2,
            layer_norm: false,
        }
    }
}

/// Standardization of cost targets, `(y - mu) / sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for TargetScaler {
    fn default() -> Self {
        Self { mu: 0.0, sigma: 1.0 }
    }
}

impl TargetScaler {
    /// Population mean and standard deviation of `costs`.
    pub fn fit(costs: &[f64]) -> Result<Self> {
        if costs.len() < 2 {
            return Err(Error::InvalidConfig("scaling needs at least two targets".into()));
        }
        let n = costs.len() as f64;
        let mu = costs.iter().sum::<f64>() / n;
        let var = costs.iter().map(|c| (c - mu) * (c - mu)).sum::<f64>() / n;
        let sigma = var.sqrt();
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig("targets have zero variance".into()));
        }
        Ok(Self { mu, sigma })
    }

    pub fn scale(&self, y: f64) -> f64 {
        (y - self.mu) / self.sigma
    }

    pub fn unscale(&self, s: f64) -> f64 {
        s * self.sigma + self.mu
    }
}

pub fn scale_targets(costs: &[f64]) -> Result<(Vec<f64>, TargetScaler)> {
    let scaler = TargetScaler::fit(costs)?;
    Ok((costs.iter().map(|&c| scaler.scale(c)).collect(), scaler))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn for_arch(arch: Arch) -> Self {
        match arch {
            Arch::Fnn => Self {
                epochs: 1000,
                lr: 1e-5,
                batch_size: 128,
                seed: 0,
            },
            Arch::SetTransformer => Self {
                epochs: 1000,
                lr: 1e-3,
                batch_size: 64,
                seed: 0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epochs, learning rate and batch size must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// One training example: an element set and its exact cost.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub elements: Vec<Element>,
    pub cost: f64,
}

pub fn examples_from(ds: &Dataset) -> Vec<Example> {
    ds.configs
        .iter()
        .map(|c| Example {
            elements: c.elements.iter().map(|&[y, z]| Element::new(y, z)).collect(),
            cost: c.true_cost,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationMetrics {
    /// On scaled targets.
    pub mse: f64,
    /// `None` when either side has zero variance.
    pub pearson_r: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean scaled-target MSE over each epoch's batches.
    pub loss_history: Vec<f64>,
    pub validation: Option<ValidationMetrics>,
}

pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    let r = sab / (saa * sbb).sqrt();
    r.is_finite().then_some(r)
}

/// A surrogate network with its target scaler.
#[derive(Clone, Debug, PartialEq)]
pub struct Surrogate {
    arch: Arch,
    st: SetTransformerConfig,
    params: ParamStore,
    scaler: TargetScaler,
    train_config: TrainConfig,
}

enum Init {
    /// Uniform fan-in with the given gain.
    FanIn(f64),
    Zeros,
    Ones,
}

/// Bound `1 / sqrt(fan_in)`. The FNN sees raw coordinates of several
/// wavelengths on 2048 inputs; He-scaled weights saturate the first layer and
/// generalize markedly worse at the small default learning rate.
const FNN_GAIN: f64 = 1.0 / 3.0;

fn fnn_shapes() -> Vec<(String, Vec<usize>, Init)> {
    let dims = [2 * MAX_ELEMENTS, FNN_HIDDEN[0], FNN_HIDDEN[1], 1];
    let mut out = Vec::new();
    for l in 0..3 {
        out.push((format!("dense{l}.w"), vec![dims[l], dims[l + 1]], Init::FanIn(FNN_GAIN)));
        out.push((format!("dense{l}.b"), vec![dims[l + 1]], Init::Zeros));
    }
    out
}

fn mab_shapes(prefix: &str, dq: usize, dk: usize, cfg: &SetTransformerConfig) -> Vec<(String, Vec<usize>, Init)> {
    let d = cfg.dim;
    let mut out = vec![
        (format!("{prefix}.q.w"), vec![dq, d], Init::FanIn(1.0)),
        (format!("{prefix}.q.b"), vec![d], Init::Zeros),
        (format!("{prefix}.k.w"), vec![dk, d], Init::FanIn(1.0)),
        (format!("{prefix}.k.b"), vec![d], Init::Zeros),
        (format!("{prefix}.v.w"), vec![dk, d], Init::FanIn(1.0)),
        (format!("{prefix}.v.b"), vec![d], Init::Zeros),
        (format!("{prefix}.o.w"), vec![d, d], Init::FanIn(2.0)),
        (format!("{prefix}.o.b"), vec![d], Init::Zeros),
    ];
    if cfg.layer_norm {
        for ln in ["ln0", "ln1"] {
            out.push((format!("{prefix}.{ln}.gamma"), vec![d], Init::Ones));
            out.push((format!("{prefix}.{ln}.beta"), vec![d], Init::Zeros));
        }
    }
    out
}

fn set_transformer_shapes(cfg: &SetTransformerConfig) -> Vec<(String, Vec<usize>, Init)> {
    let d = cfg.dim;
    let mut out = mab_shapes("enc0", 2, 2, cfg);
    out.extend(mab_shapes("enc1", d, d, cfg));
    out.push(("pool.seed".into(), vec![1, d], Init::FanIn(1.0)));
    out.extend(mab_shapes("pool", d, d, cfg));
    out.extend(mab_shapes("dec0", d, d, cfg));
    out.extend(mab_shapes("dec1", d, d, cfg));
    out.push(("out.w".into(), vec![d, 1], Init::FanIn(1.0)));
    out.push(("out.b".into(), vec![1], Init::Zeros));
    out
}

/// Parameter handles consumed in declaration order.
struct Cursor<'a> {
    vars: &'a [Var],
    pos: usize,
}

impl Cursor<'_> {
    fn next(&mut self) -> Var {
        let v = self.vars[self.pos];
        self.pos += 1;
        v
    }
}

impl Surrogate {
    /// Freshly initialized model (seeded uniform fan-in weights, zero biases).
    pub fn new(arch: Arch, st: SetTransformerConfig, seed: u64) -> Result<Self> {
        if st.dim == 0 || st.heads == 0 || st.dim % st.heads != 0 {
            return Err(Error::InvalidConfig(format!(
                "width {} is not divisible into {} heads",
                st.dim, st.heads
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shapes = match arch {
            Arch::Fnn => fnn_shapes(),
            Arch::SetTransformer => set_transformer_shapes(&st),
        };
        let mut params = ParamStore::new();
        for (name, shape, init) in shapes {
            let value = match init {
                Init::FanIn(gain) => {
                    let n = shape.iter().product::<usize>();
                    let fan_in = if shape.len() == 2 && shape[0] > 1 { shape[0] } else { shape[shape.len() - 1] };
                    let t = uniform_fan_in(&mut rng, fan_in, n / fan_in, gain);
                    Tensor::new(shape, t.into_data())?
                }
                Init::Zeros => Tensor::zeros(&shape),
                Init::Ones => Tensor::full(&shape, 1.0),
            };
            params.push(name, value);
        }
        Ok(Self {
            arch,
            st,
            params,
            scaler: TargetScaler::default(),
            train_config: TrainConfig::for_arch(arch),
        })
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn set_transformer_config(&self) -> SetTransformerConfig {
        self.st
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn scaler(&self) -> TargetScaler {
        self.scaler
    }

    pub fn set_scaler(&mut self, scaler: TargetScaler) {
        self.scaler = scaler;
    }

    pub fn train_config(&self) -> TrainConfig {
        self.train_config
    }

    fn fnn_forward(&self, g: &mut Graph, p: &[Var], x: Var) -> Result<Var> {
        let mut c = Cursor { vars: p, pos: 0 };
        let mut h = x;
        for l in 0..3 {
            let (w, b) = (c.next(), c.next());
            h = dense(g, h, w, b)?;
            if l < 2 {
                h = g.relu(h);
            }
        }
        Ok(h)
    }

    /// `O = Q' + softmax(Q' K'ᵀ / sqrt(dim)) V'` per head, then
    /// `O + relu(O W_o + b_o)`, with optional layer norms after each step.
    fn mab(&self, g: &mut Graph, c: &mut Cursor, q_in: Var, k_in: Var, key_mask: Option<&[bool]>) -> Result<Var> {
        let (wq, bq, wk, bk, wv, bv, wo, bo) = (
            c.next(),
            c.next(),
            c.next(),
            c.next(),
            c.next(),
            c.next(),
            c.next(),
            c.next(),
        );
        let ln = if self.st.layer_norm {
            Some([c.next(), c.next(), c.next(), c.next()])
        } else {
            None
        };
        let q = dense(g, q_in, wq, bq)?;
        let k = dense(g, k_in, wk, bk)?;
        let v = dense(g, k_in, wv, bv)?;
        let qs = g.split_heads(q, self.st.heads)?;
        let ks = g.split_heads(k, self.st.heads)?;
        let vs = g.split_heads(v, self.st.heads)?;
        let inv = 1.0 / (self.st.dim as f64).sqrt();
        let mut heads = Vec::with_capacity(self.st.heads);
        for h in 0..self.st.heads {
            let kt = g.transpose(ks[h])?;
            let scores = g.matmul(qs[h], kt)?;
            let scores = g.scale(scores, inv);
            let attn = g.softmax(scores, key_mask)?;
            let mixed = g.matmul(attn, vs[h])?;
            heads.push(g.add(qs[h], mixed)?);
        }
        let mut o = g.concat_heads(&heads)?;
        if let Some([g0, b0, ..]) = ln {
            o = g.layer_norm(o, g0, b0, LN_EPS)?;
        }
        let ff = dense(g, o, wo, bo)?;
        let ff = g.relu(ff);
        o = g.add(o, ff)?;
        if let Some([_, _, g1, b1]) = ln {
            o = g.layer_norm(o, g1, b1, LN_EPS)?;
        }
        Ok(o)
    }

    fn set_transformer_forward(&self, g: &mut Graph, p: &[Var], x: Var, mask: Option<&[bool]>) -> Result<Var> {
        let mut c = Cursor { vars: p, pos: 0 };
        let x = match mask {
            Some(m) => g.row_mask(x, m)?,
            None => x,
        };
        let h = self.mab(g, &mut c, x, x, mask)?;
        let h = self.mab(g, &mut c, h, h, mask)?;
        let seed = c.next();
        let pooled = self.mab(g, &mut c, seed, h, mask)?;
        let d = self.mab(g, &mut c, pooled, pooled, None)?;
        let d = self.mab(g, &mut c, d, d, None)?;
        let (w, b) = (c.next(), c.next());
        Ok(dense(g, d, w, b)?)
    }

    fn check_count(n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::EmptyLayout);
        }
        if n > MAX_ELEMENTS {
            return Err(Error::TooManyElements {
                count: n,
                max: MAX_ELEMENTS,
            });
        }
        Ok(())
    }

    /// Scaled-space forward pass on `elements` taken in the given slot order
    /// (no re-sorting), optionally with the input coordinates tracked.
    fn forward_ordered(&self, g: &mut Graph, elements: &[Element], track_input: bool) -> Result<(Var, Var)> {
        Self::check_count(elements.len())?;
        let p = self.params.bind_frozen(g);
        match self.arch {
            Arch::Fnn => {
                let mut coords = vec![0.0; 2 * MAX_ELEMENTS];
                for (i, e) in elements.iter().enumerate() {
                    coords[2 * i] = e.y;
                    coords[2 * i + 1] = e.z;
                }
                let t = Tensor::matrix(1, 2 * MAX_ELEMENTS, coords);
                let x = if track_input { g.param(t) } else { g.constant(t) };
                Ok((x, self.fnn_forward(g, &p, x)?))
            }
            Arch::SetTransformer => {
                let coords = elements.iter().flat_map(|e| [e.y, e.z]).collect();
                let t = Tensor::matrix(elements.len(), 2, coords);
                let x = if track_input { g.param(t) } else { g.constant(t) };
                Ok((x, self.set_transformer_forward(g, &p, x, None)?))
            }
        }
    }

    /// Predicted cost in original units for elements in the given slot order.
    /// The FNN is order-sensitive; callers that want the canonical input use
    /// [`Surrogate::predict`].
    pub fn predict_ordered(&self, elements: &[Element]) -> Result<f64> {
        let mut g = Graph::new();
        let (_, out) = self.forward_ordered(&mut g, elements, false)?;
        Ok(self.scaler.unscale(g.value(out).item()))
    }

    /// Prediction and its gradient with respect to each `(y, z)` in slot order.
    pub fn value_and_grad_ordered(&self, elements: &[Element]) -> Result<(f64, Vec<[f64; 2]>)> {
        let mut g = Graph::new();
        let (x, out) = self.forward_ordered(&mut g, elements, true)?;
        let value = self.scaler.unscale(g.value(out).item());
        g.backward(out)?;
        let sigma = self.scaler.sigma;
        let grad = match g.grad(x) {
            Some(t) => t.data()[..2 * elements.len()]
                .chunks_exact(2)
                .map(|c| [c[0] * sigma, c[1] * sigma])
                .collect(),
            None => vec![[0.0; 2]; elements.len()],
        };
        Ok((value, grad))
    }

    /// Predicted cost of the element set, in canonical order.
    pub fn predict(&self, elements: &[Element]) -> Result<f64> {
        Self::check_count(elements.len())?;
        let perm = canonical_permutation(elements);
        let sorted: Vec<Element> = perm.iter().map(|&i| elements[i]).collect();
        self.predict_ordered(&sorted)
    }

    /// Gradient of [`Surrogate::predict`] for each element, returned in the
    /// caller's element order.
    pub fn input_grad(&self, elements: &[Element]) -> Result<Vec<[f64; 2]>> {
        Self::check_count(elements.len())?;
        let perm = canonical_permutation(elements);
        let sorted: Vec<Element> = perm.iter().map(|&i| elements[i]).collect();
        let (_, g_sorted) = self.value_and_grad_ordered(&sorted)?;
        let mut grad = vec![[0.0; 2]; elements.len()];
        for (slot, &i) in perm.iter().enumerate() {
            grad[i] = g_sorted[slot];
        }
        Ok(grad)
    }

    /// Prediction from a padded input. The FNN consumes the full vector as
    /// is, so padded values matter and must be zero; the Set Transformer
    /// honours the mask and ignores padded slots entirely.
    pub fn predict_padded(&self, input: &PaddedInput) -> Result<f64> {
        if input.coords.len() != 2 * input.mask.len() {
            return Err(Error::InvalidConfig("padded coords and mask disagree in length".into()));
        }
        let mut g = Graph::new();
        let p = self.params.bind_frozen(&mut g);
        let out = match self.arch {
            Arch::Fnn => {
                if input.mask.len() != MAX_ELEMENTS {
                    return Err(Error::InvalidConfig(format!("FNN input must be padded to {MAX_ELEMENTS}")));
                }
                let x = g.constant(Tensor::matrix(1, 2 * MAX_ELEMENTS, input.coords.clone()));
                self.fnn_forward(&mut g, &p, x)?
            }
            Arch::SetTransformer => {
                if !input.mask.iter().any(|&m| m) {
                    return Err(Error::EmptyLayout);
                }
                let x = g.constant(Tensor::matrix(input.mask.len(), 2, input.coords.clone()));
                self.set_transformer_forward(&mut g, &p, x, Some(&input.mask))?
            }
        };
        Ok(self.scaler.unscale(g.value(out).item()))
    }

    /// Fits the scaler on `train`, then runs Adam on scaled-target MSE.
    /// Validation metrics are computed on `val` when it is non-empty.
    pub fn train(&mut self, train: &[Example], val: &[Example], cfg: &TrainConfig) -> Result<TrainReport> {
        cfg.validate()?;
        let targets: Vec<f64> = train.iter().map(|e| e.cost).collect();
        let (scaled, scaler) = scale_targets(&targets)?;
        self.scaler = scaler;
        self.train_config = *cfg;
        let inputs: Vec<Vec<Element>> = train
            .iter()
            .map(|e| {
                Self::check_count(e.elements.len())?;
                let perm = canonical_permutation(&e.elements);
                Ok(perm.iter().map(|&i| e.elements[i]).collect())
            })
            .collect::<Result<_>>()?;
        let padded: Vec<PaddedInput> = match self.arch {
            Arch::Fnn => inputs
                .iter()
                .map(|els| pad_elements(els, MAX_ELEMENTS))
                .collect::<Result<_>>()?,
            Arch::SetTransformer => Vec::new(),
        };

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut adam = AdamState::for_store(AdamConfig::with_lr(cfg.lr), &self.params)?;
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut history = Vec::with_capacity(cfg.epochs);
        for epoch in 0..cfg.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for batch in order.chunks(cfg.batch_size) {
                let mut g = Graph::new();
                let p = self.params.bind(&mut g);
                let target = g.constant(Tensor::matrix(batch.len(), 1, batch.iter().map(|&i| scaled[i]).collect()));
                let pred = match self.arch {
                    Arch::Fnn => {
                        let mut data = Vec::with_capacity(batch.len() * 2 * MAX_ELEMENTS);
                        for &i in batch {
                            data.extend_from_slice(&padded[i].coords);
                        }
                        let x = g.constant(Tensor::matrix(batch.len(), 2 * MAX_ELEMENTS, data));
                        self.fnn_forward(&mut g, &p, x)?
                    }
                    Arch::SetTransformer => {
                        let outs = batch
                            .iter()
                            .map(|&i| {
                                let els = &inputs[i];
                                let coords = els.iter().flat_map(|e| [e.y, e.z]).collect();
                                let x = g.constant(Tensor::matrix(els.len(), 2, coords));
                                self.set_transformer_forward(&mut g, &p, x, None)
                            })
                            .collect::<Result<Vec<_>>>()?;
                        g.concat_rows(&outs)?
                    }
                };
                let loss = mse(&mut g, pred, target)?;
                let l = g.value(loss).item();
                if !l.is_finite() {
                    return Err(Error::Diverged { epoch });
                }
                total += l * batch.len() as f64;
                g.backward(loss)?;
                let grads = self.params.collect_grads(&g, &p);
                adam.step(&mut self.params, &grads).map_err(|_| Error::Diverged { epoch })?;
            }
            history.push(total / train.len() as f64);
        }

        let validation = if val.is_empty() {
            None
        } else {
            let mut preds = Vec::with_capacity(val.len());
            let mut truth = Vec::with_capacity(val.len());
            for e in val {
                preds.push(self.scaler.scale(self.predict(&e.elements)?));
                truth.push(self.scaler.scale(e.cost));
            }
            let mse = preds.iter().zip(&truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / val.len() as f64;
            Some(ValidationMetrics {
                mse,
                pearson_r: pearson(&preds, &truth),
            })
        };
        Ok(TrainReport {
            loss_history: history,
            validation,
        })
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            arch: self.arch,
            scaler: self.scaler,
            train_config: self.train_config,
            set_transformer: (self.arch == Arch::SetTransformer).then_some(self.st),
        }
    }

    pub fn encode_weights(&self) -> Vec<u8> {
        weights::encode(self.arch.id(), &self.params)
    }

    /// Rebuilds a model from its weight container and sidecar, checking that
    /// both describe the same architecture and parameter layout.
    pub fn from_parts(weight_bytes: &[u8], sidecar: &Sidecar) -> Result<Self> {
        let (arch_id, params) = weights::decode(weight_bytes)?;
        if arch_id != sidecar.arch.id() {
            return Err(Error::Format(format!(
                "weights are for architecture {arch_id}, sidecar says {:?}",
                sidecar.arch
            )));
        }
        let st = sidecar.set_transformer.unwrap_or_default();
        let mut model = Self::new(sidecar.arch, st, 0)?;
        model.params.check_layout(&params)?;
        if !(sidecar.scaler.sigma > 0.0 && sidecar.scaler.sigma.is_finite() && sidecar.scaler.mu.is_finite()) {
            return Err(Error::Format("sidecar scaler must have finite mu and positive sigma".into()));
        }
        if params.iter().any(|p| !p.value.all_finite()) {
            return Err(Error::Format("weights contain non-finite values".into()));
        }
        model.params = params;
        model.scaler = sidecar.scaler;
        model.train_config = sidecar.train_config;
        Ok(model)
    }

    /// Writes `path` (weights) and `path.json` (sidecar).
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode_weights())?;
        let mut text = serde_json::to_string_pretty(&self.sidecar())?;
        text.push('\n');
        fs::write(sidecar_path(path), text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        let sidecar = parse_sidecar(&fs::read_to_string(sidecar_path(path))?)?;
        Self::from_parts(&bytes, &sidecar)
    }
}

/// JSON metadata stored next to the weight container.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub arch: Arch,
    pub scaler: TargetScaler,
    pub train_config: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set_transformer: Option<SetTransformerConfig>,
}

pub fn parse_sidecar(text: &str) -> Result<Sidecar> {
    Ok(serde_json::from_str(text)?)
}

pub fn sidecar_path(weights: &Path) -> PathBuf {
    let mut s = weights.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}
