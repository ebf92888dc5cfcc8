use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cond::ConditionEmbedding;
use super::TokenProbs;
use crate::error::{Error, Result};

pub const DEFAULT_PROB_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    /// Attention band: each position sees itself and the `context - 1` before it.
    pub context: usize,
    pub layers: usize,
    pub cond_dim: usize,
}

impl ModelConfig {
    pub fn new(vocab_size: usize) -> Self {
        ModelConfig {
            vocab_size,
            embed_dim: 16,
            context: 64,
            layers: 1,
            cond_dim: 32,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.vocab_size < 2 {
            return Err(Error::Domain(format!("vocab_size {} < 2", self.vocab_size)));
        }
        for (name, v) in [
            ("embed_dim", self.embed_dim),
            ("context", self.context),
            ("layers", self.layers),
            ("cond_dim", self.cond_dim),
        ] {
            if v == 0 {
                return Err(Error::Domain(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        let (v, d, c, k) = (self.vocab_size, self.embed_dim, self.context, self.cond_dim);
        v * d + d + k * d + self.layers * (4 * d * d + c) + d * v + v
    }

    /// Named parameter blocks in storage order.
    pub fn segments(&self) -> Vec<Segment> {
        let (v, d, c, k) = (self.vocab_size, self.embed_dim, self.context, self.cond_dim);
        let mut out = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, shape: Vec<usize>| {
            let len: usize = shape.iter().product();
            out.push(Segment { name, offset, shape });
            offset += len;
        };
        push("token_embed".into(), vec![v, d]);
        push("bos".into(), vec![d]);
        push("cond_proj".into(), vec![k, d]);
        for l in 0..self.layers {
            for w in ["wq", "wk", "wv", "wo"] {
                push(format!("layer{l}.{w}"), vec![d, d]);
            }
            push(format!("layer{l}.rel_bias"), vec![c]);
        }
        push("out_w".into(), vec![d, v]);
        push("out_b".into(), vec![v]);
        out
    }

    fn layout(&self) -> Layout {
        let seg = self.segments();
        let at = |name: &str| seg.iter().find(|s| s.name == name).expect("segment").offset;
        Layout {
            embed: at("token_embed"),
            bos: at("bos"),
            cond: at("cond_proj"),
            layers: (0..self.layers)
                .map(|l| LayerLayout {
                    wq: at(&format!("layer{l}.wq")),
                    wk: at(&format!("layer{l}.wk")),
                    wv: at(&format!("layer{l}.wv")),
                    wo: at(&format!("layer{l}.wo")),
                    rel: at(&format!("layer{l}.rel_bias")),
                })
                .collect(),
            out_w: at("out_w"),
            out_b: at("out_b"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

struct LayerLayout {
    wq: usize,
    wk: usize,
    wv: usize,
    wo: usize,
    rel: usize,
}

struct Layout {
    embed: usize,
    bos: usize,
    cond: usize,
    layers: Vec<LayerLayout>,
    out_w: usize,
    out_b: usize,
}

/// Model input at one position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Input {
    Bos,
    Token(usize),
}

struct LayerCache {
    h_in: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Attention weights, row `i` holding offsets `0..min(context, i + 1)`.
    attn: Vec<Vec<f64>>,
    z: Array2<f64>,
}

pub(crate) struct Cache {
    inputs: Vec<Input>,
    cond: Vec<f64>,
    layers: Vec<LayerCache>,
    h_out: Array2<f64>,
    /// Row-stochastic next-token distributions.
    pub(crate) probs: Array2<f64>,
}

/// Small causal-attention next-token scorer.
///
/// Positions carry no absolute embedding; order enters only through a learned
/// bias per relative offset inside the attention band, so a sliding context
/// window sees exactly what training saw.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyARModel {
    pub config: ModelConfig,
    pub params: Vec<f64>,
}

impl ToyARModel {
    /// All-zero parameters: every distribution is uniform.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.check()?;
        Ok(ToyARModel {
            config,
            params: vec![0.0; config.param_count()],
        })
    }

    /// Parameters drawn uniformly from `[-scale, scale]`.
    pub fn random(config: ModelConfig, seed: u64, scale: f64) -> Result<Self> {
        config.check()?;
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::Domain(format!("init scale {scale}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..config.param_count())
            .map(|_| if scale == 0.0 { 0.0 } else { rng.gen_range(-scale..=scale) })
            .collect();
        Ok(ToyARModel { config, params })
    }

    pub fn from_params(config: ModelConfig, params: Vec<f64>) -> Result<Self> {
        config.check()?;
        if params.len() != config.param_count() {
            return Err(Error::Consistency(format!(
                "{} parameters given, architecture needs {}",
                params.len(),
                config.param_count()
            )));
        }
        let model = ToyARModel { config, params };
        model.check_finite()?;
        Ok(model)
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn segment(&self, name: &str) -> Option<&[f64]> {
        self.config
            .segments()
            .into_iter()
            .find(|s| s.name == name)
            .map(|s| &self.params[s.range()])
    }

    pub fn check_finite(&self) -> Result<()> {
        check_segments(&self.config, &self.params)
    }

    fn mat(&self, offset: usize, rows: usize, cols: usize) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((rows, cols), &self.params[offset..offset + rows * cols]).expect("segment shape")
    }

    fn vec(&self, offset: usize, len: usize) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.params[offset..offset + len])
    }

    fn check_tokens(&self, tokens: &[u32]) -> Result<()> {
        if let Some(&t) = tokens.iter().find(|&&t| t as usize >= self.config.vocab_size) {
            return Err(Error::Domain(format!(
                "token {t} outside vocabulary of {}",
                self.config.vocab_size
            )));
        }
        Ok(())
    }

    fn check_cond(&self, cond: &ConditionEmbedding) -> Result<()> {
        if cond.len() != self.config.cond_dim {
            return Err(Error::Consistency(format!(
                "condition has {} values, model expects {}",
                cond.len(),
                self.config.cond_dim
            )));
        }
        Ok(())
    }

    /// Teacher-forced inputs: BOS then every token but the last.
    pub(crate) fn shifted(&self, tokens: &[u32]) -> Result<Vec<Input>> {
        if tokens.is_empty() {
            return Err(Error::Precondition("empty token sequence".into()));
        }
        self.check_tokens(tokens)?;
        Ok(std::iter::once(Input::Bos)
            .chain(tokens[..tokens.len() - 1].iter().map(|&t| Input::Token(t as usize)))
            .collect())
    }

    pub(crate) fn run(&self, inputs: &[Input], cond: &ConditionEmbedding) -> Result<Cache> {
        self.check_cond(cond)?;
        let cfg = &self.config;
        let lay = cfg.layout();
        let (n, d) = (inputs.len(), cfg.embed_dim);
        let wc = self.mat(lay.cond, cfg.cond_dim, d);
        let cproj = ArrayView1::from(&cond.values).dot(&wc);
        let embed = self.mat(lay.embed, cfg.vocab_size, d);
        let bos = self.vec(lay.bos, d);
        let mut h = Array2::<f64>::zeros((n, d));
        for (i, inp) in inputs.iter().enumerate() {
            let row = match *inp {
                Input::Bos => bos,
                Input::Token(t) => embed.row(t),
            };
            h.row_mut(i).assign(&(&row + &cproj));
        }
        finite_or(&h, "token_embed")?;

        let scale = 1.0 / (d as f64).sqrt();
        let mut layers = Vec::with_capacity(cfg.layers);
        for (l, ll) in lay.layers.iter().enumerate() {
            let q = h.dot(&self.mat(ll.wq, d, d));
            let k = h.dot(&self.mat(ll.wk, d, d));
            let v = h.dot(&self.mat(ll.wv, d, d));
            let rel = self.vec(ll.rel, cfg.context);
            let mut attn = Vec::with_capacity(n);
            let mut z = Array2::<f64>::zeros((n, d));
            for i in 0..n {
                let band = cfg.context.min(i + 1);
                let mut s: Vec<f64> = (0..band)
                    .map(|r| q.row(i).dot(&k.row(i - r)) * scale + rel[r])
                    .collect();
                softmax_in_place(&mut s);
                let mut zi = z.row_mut(i);
                for (r, &a) in s.iter().enumerate() {
                    zi.scaled_add(a, &v.row(i - r));
                }
                attn.push(s);
            }
            let h_next = &h + &z.dot(&self.mat(ll.wo, d, d));
            finite_or(&h_next, &format!("layer{l}"))?;
            layers.push(LayerCache {
                h_in: std::mem::replace(&mut h, h_next),
                q,
                k,
                v,
                attn,
                z,
            });
        }

        let mut logits = h.dot(&self.mat(lay.out_w, d, cfg.vocab_size));
        logits += &self.vec(lay.out_b, cfg.vocab_size);
        finite_or(&logits, "out_w")?;
        for mut row in logits.rows_mut() {
            softmax_in_place(row.as_slice_mut().expect("standard layout"));
        }
        Ok(Cache {
            inputs: inputs.to_vec(),
            cond: cond.values.clone(),
            layers,
            h_out: h,
            probs: logits,
        })
    }

    /// Full next-token distributions, one row per position.
    pub fn distributions(&self, tokens: &[u32], cond: &ConditionEmbedding) -> Result<Array2<f64>> {
        Ok(self.run(&self.shifted(tokens)?, cond)?.probs)
    }

    /// Probabilities of the realized tokens, floored at `floor`.
    pub fn token_probs(&self, tokens: &[u32], cond: &ConditionEmbedding, floor: f64) -> Result<TokenProbs> {
        let cache = self.run(&self.shifted(tokens)?, cond)?;
        Ok(realized(&cache, tokens, floor))
    }

    /// Reverse pass: gradient of a loss given `dloss/dlog p̃_i` for every
    /// realized token; positions clipped by the floor contribute nothing.
    pub(crate) fn backward(&self, cache: &Cache, tokens: &[u32], upstream: &[f64], floor: f64) -> Result<Vec<f64>> {
        let cfg = &self.config;
        let lay = cfg.layout();
        let (n, d, nv) = (cache.inputs.len(), cfg.embed_dim, cfg.vocab_size);
        let mut grad = vec![0.0; self.params.len()];

        let mut g = Array2::<f64>::zeros((n, nv));
        for i in 0..n {
            let t = tokens[i] as usize;
            let p = cache.probs.row(i);
            if p[t] < floor || upstream[i] == 0.0 {
                continue;
            }
            let mut gi = g.row_mut(i);
            gi.scaled_add(-upstream[i], &p);
            gi[t] += upstream[i];
        }
        add_mat(&mut grad, lay.out_w, &cache.h_out.t().dot(&g));
        add_vec(&mut grad, lay.out_b, g.sum_axis(Axis(0)).view());
        let mut dh = g.dot(&self.mat(lay.out_w, d, nv).t());

        let scale = 1.0 / (d as f64).sqrt();
        for (ll, lc) in lay.layers.iter().zip(&cache.layers).rev() {
            let wo = self.mat(ll.wo, d, d);
            add_mat(&mut grad, ll.wo, &lc.z.t().dot(&dh));
            let dz = dh.dot(&wo.t());
            let mut dq = Array2::<f64>::zeros((n, d));
            let mut dk = Array2::<f64>::zeros((n, d));
            let mut dv = Array2::<f64>::zeros((n, d));
            let mut drel = Array1::<f64>::zeros(cfg.context);
            for i in 0..n {
                let a = &lc.attn[i];
                let da: Vec<f64> = (0..a.len()).map(|r| dz.row(i).dot(&lc.v.row(i - r))).collect();
                let mean: f64 = a.iter().zip(&da).map(|(x, y)| x * y).sum();
                for r in 0..a.len() {
                    let j = i - r;
                    dv.row_mut(j).scaled_add(a[r], &dz.row(i));
                    let ds = a[r] * (da[r] - mean);
                    drel[r] += ds;
                    dq.row_mut(i).scaled_add(ds * scale, &lc.k.row(j));
                    dk.row_mut(j).scaled_add(ds * scale, &lc.q.row(i));
                }
            }
            add_vec(&mut grad, ll.rel, drel.view());
            add_mat(&mut grad, ll.wq, &lc.h_in.t().dot(&dq));
            add_mat(&mut grad, ll.wk, &lc.h_in.t().dot(&dk));
            add_mat(&mut grad, ll.wv, &lc.h_in.t().dot(&dv));
            dh = dh
                + dq.dot(&self.mat(ll.wq, d, d).t())
                + dk.dot(&self.mat(ll.wk, d, d).t())
                + dv.dot(&self.mat(ll.wv, d, d).t());
        }

        for (i, inp) in cache.inputs.iter().enumerate() {
            let off = match *inp {
                Input::Bos => lay.bos,
                Input::Token(t) => lay.embed + t * d,
            };
            add_vec(&mut grad, off, dh.row(i));
        }
        let total = dh.sum_axis(Axis(0));
        for (kk, &c) in cache.cond.iter().enumerate() {
            if c != 0.0 {
                for (x, &t) in grad[lay.cond + kk * d..lay.cond + (kk + 1) * d].iter_mut().zip(&total) {
                    *x += c * t;
                }
            }
        }
        check_segments(cfg, &grad)?;
        Ok(grad)
    }
}

pub(crate) fn realized(cache: &Cache, tokens: &[u32], floor: f64) -> TokenProbs {
    TokenProbs {
        probs: tokens
            .iter()
            .enumerate()
            .map(|(i, &t)| cache.probs[[i, t as usize]].max(floor))
            .collect(),
    }
}

fn softmax_in_place(xs: &mut [f64]) {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - m).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

fn finite_or(a: &Array2<f64>, segment: &str) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericOverflow {
            segment: segment.to_string(),
        })
    }
}

fn check_segments(cfg: &ModelConfig, values: &[f64]) -> Result<()> {
    for s in cfg.segments() {
        if values[s.range()].iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericOverflow { segment: s.name });
        }
    }
    Ok(())
}

fn add_mat(grad: &mut [f64], offset: usize, m: &Array2<f64>) {
    for (g, x) in grad[offset..offset + m.len()].iter_mut().zip(m.iter()) {
        *g += x;
    }
}

fn add_vec(grad: &mut [f64], offset: usize, v: ArrayView1<f64>) {
    for (g, x) in grad[offset..offset + v.len()].iter_mut().zip(v.iter()) {
        *g += x;
    }
}
