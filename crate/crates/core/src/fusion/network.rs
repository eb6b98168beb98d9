use serde::{Deserialize, Serialize};

use super::config::{Architecture, FusionConfig, ModalityInput, NUM_CLASSES};
use crate::nn::{relu, relu_backward, softmax, softmax_xent, Dense, LayerNorm, LayerNormCache, Parameters};
use crate::{Error, Result, Rng};

const MODALITIES: [&str; 3] = ["audio", "text", "acoustic"];

/// Logits, penultimate activations and modality weights of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub logits: [f64; NUM_CLASSES],
    pub prelogit: Vec<f64>,
    /// Weights over (audio, text, acoustic); absent for early concatenation.
    pub attention: Option<[f64; 3]>,
}

/// Concatenate audio and text, one ReLU hidden layer, linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyConcat {
    pub hidden: Dense,
    pub out: Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuseMode {
    /// `concat(α₁h₁, α₂h₂, α₃h₃)`
    Concat,
    /// `Σ αₘhₘ`
    Sum,
}

/// Per-modality `LayerNorm(ReLU(dense(x)))` projections scored by a shared
/// additive attention `s = v·tanh(U·h + b)`; the softmax of the scores weights
/// the projections before the classifier head.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionFusion {
    pub mode: FuseMode,
    pub proj: [Dense; 3],
    pub norm: [LayerNorm; 3],
    pub score: Dense,
    pub score_v: Vec<f64>,
    pub hidden: Dense,
    pub out: Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    EarlyConcat(EarlyConcat),
    Attention(AttentionFusion),
}

struct ConcatCache {
    z: Vec<f64>,
    pre: Vec<f64>,
    prelogit: Vec<f64>,
}

struct AttentionCache {
    pre: [Vec<f64>; 3],
    ln: [LayerNormCache; 3],
    h: [Vec<f64>; 3],
    t: [Vec<f64>; 3],
    alpha: [f64; 3],
    fused: Vec<f64>,
    hidden_pre: Vec<f64>,
    prelogit: Vec<f64>,
}

enum Cache {
    Concat(ConcatCache),
    Attention(AttentionCache),
}

fn three<T>(v: Vec<T>) -> [T; 3] {
    v.try_into().ok().expect("three modalities")
}

fn logits_pair(v: Vec<f64>) -> [f64; NUM_CLASSES] {
    [v[0], v[1]]
}

impl EarlyConcat {
    fn forward_cached(&self, input: &ModalityInput) -> (ForwardTrace, ConcatCache) {
        let mut z = Vec::with_capacity(input.audio.len() + input.text.len());
        z.extend_from_slice(&input.audio);
        z.extend_from_slice(&input.text);
        let mut pre = vec![0.0; self.hidden.out_dim];
        self.hidden.apply(&z, &mut pre);
        let mut prelogit = pre.clone();
        relu(&mut prelogit);
        let mut logits = vec![0.0; NUM_CLASSES];
        self.out.apply(&prelogit, &mut logits);
        let trace = ForwardTrace {
            logits: logits_pair(logits),
            prelogit: prelogit.clone(),
            attention: None,
        };
        (trace, ConcatCache { z, pre, prelogit })
    }

    fn backward(&self, c: &ConcatCache, grad_logits: &[f64], g: &mut EarlyConcat) {
        let mut g_r = vec![0.0; self.hidden.out_dim];
        self.out.accumulate(&c.prelogit, grad_logits, &mut g.out, Some(&mut g_r));
        relu_backward(&c.pre, &mut g_r);
        self.hidden.accumulate(&c.z, &g_r, &mut g.hidden, None);
    }
}

impl AttentionFusion {
    fn inputs<'a>(input: &'a ModalityInput) -> [&'a [f64]; 3] {
        [
            &input.audio,
            &input.text,
            input.acoustic.as_deref().expect("acoustic presence checked by caller"),
        ]
    }

    /// Projected, normalised modality vectors `h` with their caches.
    fn project(&self, xs: [&[f64]; 3]) -> ([Vec<f64>; 3], [Vec<f64>; 3], [LayerNormCache; 3]) {
        let mut pres = Vec::with_capacity(3);
        let mut hs = Vec::with_capacity(3);
        let mut lns = Vec::with_capacity(3);
        for m in 0..3 {
            let mut pre = vec![0.0; self.proj[m].out_dim];
            self.proj[m].apply(xs[m], &mut pre);
            let mut act = pre.clone();
            relu(&mut act);
            let (h, cache) = self.norm[m].forward(&act).expect("projection width matches norm");
            pres.push(pre);
            hs.push(h);
            lns.push(cache);
        }
        (three(pres), three(hs), three(lns))
    }

    fn scores(&self, h: &[Vec<f64>; 3]) -> ([f64; 3], [Vec<f64>; 3]) {
        let mut s = [0.0; 3];
        let mut ts: [Vec<f64>; 3] = Default::default();
        for m in 0..3 {
            let mut u = vec![0.0; self.score.out_dim];
            self.score.apply(&h[m], &mut u);
            u.iter_mut().for_each(|v| *v = v.tanh());
            s[m] = u.iter().zip(&self.score_v).map(|(a, b)| a * b).sum();
            ts[m] = u;
        }
        (s, ts)
    }

    fn fuse(&self, h: &[Vec<f64>; 3], alpha: [f64; 3]) -> Vec<f64> {
        match self.mode {
            FuseMode::Concat => h
                .iter()
                .zip(alpha)
                .flat_map(|(hm, a)| hm.iter().map(move |v| a * v))
                .collect(),
            FuseMode::Sum => {
                let mut f = vec![0.0; h[0].len()];
                for (hm, a) in h.iter().zip(alpha) {
                    for (o, v) in f.iter_mut().zip(hm) {
                        *o += a * v;
                    }
                }
                f
            }
        }
    }

    fn forward_cached(&self, input: &ModalityInput, forced: Option<[f64; 3]>) -> (ForwardTrace, AttentionCache) {
        let (pre, h, ln) = self.project(Self::inputs(input));
        let (s, t) = self.scores(&h);
        let alpha = forced.unwrap_or_else(|| {
            let a = softmax(&s);
            [a[0], a[1], a[2]]
        });
        let fused = self.fuse(&h, alpha);
        let mut hidden_pre = vec![0.0; self.hidden.out_dim];
        self.hidden.apply(&fused, &mut hidden_pre);
        let mut prelogit = hidden_pre.clone();
        relu(&mut prelogit);
        let mut logits = vec![0.0; NUM_CLASSES];
        self.out.apply(&prelogit, &mut logits);
        let trace = ForwardTrace {
            logits: logits_pair(logits),
            prelogit: prelogit.clone(),
            attention: Some(alpha),
        };
        let cache = AttentionCache {
            pre,
            ln,
            h,
            t,
            alpha,
            fused,
            hidden_pre,
            prelogit,
        };
        (trace, cache)
    }

    fn backward(&self, input: &ModalityInput, c: &AttentionCache, grad_logits: &[f64], g: &mut AttentionFusion) {
        let xs = Self::inputs(input);
        let mut g_r = vec![0.0; self.hidden.out_dim];
        self.out.accumulate(&c.prelogit, grad_logits, &mut g.out, Some(&mut g_r));
        relu_backward(&c.hidden_pre, &mut g_r);
        let mut g_fused = vec![0.0; c.fused.len()];
        self.hidden.accumulate(&c.fused, &g_r, &mut g.hidden, Some(&mut g_fused));

        let p = c.h[0].len();
        let mut g_h: [Vec<f64>; 3] = Default::default();
        let mut g_alpha = [0.0; 3];
        for m in 0..3 {
            let gf = match self.mode {
                FuseMode::Concat => &g_fused[m * p..(m + 1) * p],
                FuseMode::Sum => &g_fused[..],
            };
            g_h[m] = gf.iter().map(|v| c.alpha[m] * v).collect();
            g_alpha[m] = gf.iter().zip(&c.h[m]).map(|(a, b)| a * b).sum();
        }

        // softmax Jacobian
        let dot: f64 = (0..3).map(|m| c.alpha[m] * g_alpha[m]).sum();
        let mut g_hu = vec![0.0; p];
        for m in 0..3 {
            let g_s = c.alpha[m] * (g_alpha[m] - dot);
            let g_u: Vec<f64> = c.t[m]
                .iter()
                .zip(&self.score_v)
                .zip(g.score_v.iter_mut())
                .map(|((t, v), gv)| {
                    *gv += g_s * t;
                    g_s * v * (1.0 - t * t)
                })
                .collect();
            self.score.accumulate(&c.h[m], &g_u, &mut g.score, Some(&mut g_hu));
            for (a, b) in g_h[m].iter_mut().zip(&g_hu) {
                *a += b;
            }

            let mut g_act = self.norm[m].backward(&c.ln[m], &g_h[m], &mut g.norm[m]);
            relu_backward(&c.pre[m], &mut g_act);
            self.proj[m].accumulate(xs[m], &g_act, &mut g.proj[m], None);
        }
    }
}

impl Network {
    pub fn build(cfg: &FusionConfig, rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        let (p, h) = (cfg.proj_dim, cfg.hidden_dim);
        Ok(match cfg.architecture {
            Architecture::EarlyConcatV1 => Network::EarlyConcat(EarlyConcat {
                hidden: Dense::xavier(cfg.audio_dim + cfg.text_dim, h, rng),
                out: Dense::xavier(h, NUM_CLASSES, rng),
            }),
            arch => {
                let c = cfg.acoustic_dim.expect("validated");
                let proj = [
                    Dense::xavier(cfg.audio_dim, p, rng),
                    Dense::xavier(cfg.text_dim, p, rng),
                    Dense::xavier(c, p, rng),
                ];
                let score = Dense::xavier(p, h, rng);
                let bound = (6.0 / (h + 1) as f64).sqrt();
                let score_v = (0..h).map(|_| rng.uniform_range(-bound, bound)).collect();
                let (mode, fused) = if arch == Architecture::ModalityAttentionV2 {
                    (FuseMode::Concat, 3 * p)
                } else {
                    (FuseMode::Sum, p)
                };
                Network::Attention(AttentionFusion {
                    mode,
                    proj,
                    norm: [LayerNorm::new(p), LayerNorm::new(p), LayerNorm::new(p)],
                    score,
                    score_v,
                    hidden: Dense::xavier(fused, h, rng),
                    out: Dense::xavier(h, NUM_CLASSES, rng),
                })
            }
        })
    }

    fn check(&self, input: &ModalityInput) -> Result<()> {
        let (a, t) = match self {
            Network::EarlyConcat(n) => {
                if input.audio.len() + input.text.len() != n.hidden.in_dim {
                    return Err(Error::Input(format!(
                        "audio+text width {} does not match {}",
                        input.audio.len() + input.text.len(),
                        n.hidden.in_dim
                    )));
                }
                return Ok(());
            }
            Network::Attention(n) => (n, input),
        };
        let Some(ac) = &t.acoustic else {
            return Err(Error::Input("attention fusion needs acoustic features".into()));
        };
        for (m, x) in [&t.audio, &t.text, ac].into_iter().enumerate() {
            if x.len() != a.proj[m].in_dim {
                return Err(Error::Input(format!(
                    "{} width {} does not match {}",
                    MODALITIES[m],
                    x.len(),
                    a.proj[m].in_dim
                )));
            }
        }
        Ok(())
    }

    pub fn hidden_dim(&self) -> usize {
        match self {
            Network::EarlyConcat(n) => n.hidden.out_dim,
            Network::Attention(n) => n.hidden.out_dim,
        }
    }

    pub fn forward(&self, input: &ModalityInput) -> Result<ForwardTrace> {
        self.check(input)?;
        Ok(self.forward_cached(input, None).0)
    }

    /// Runs an attention model with externally supplied modality weights.
    pub fn forward_with_attention(&self, input: &ModalityInput, alpha: [f64; 3]) -> Result<ForwardTrace> {
        self.check(input)?;
        match self {
            Network::Attention(_) => Ok(self.forward_cached(input, Some(alpha)).0),
            Network::EarlyConcat(_) => Err(Error::Config("early concatenation has no attention".into())),
        }
    }

    /// Fused representation before the hidden layer (attention models only).
    pub fn fused(&self, input: &ModalityInput) -> Result<Vec<f64>> {
        self.check(input)?;
        match self {
            Network::Attention(n) => Ok(n.forward_cached(input, None).1.fused),
            Network::EarlyConcat(_) => Err(Error::Config("early concatenation has no fusion stage".into())),
        }
    }

    /// Projected modality vectors `[h_audio, h_text, h_acoustic]`.
    pub fn projections(&self, input: &ModalityInput) -> Result<[Vec<f64>; 3]> {
        self.check(input)?;
        match self {
            Network::Attention(n) => Ok(n.project(AttentionFusion::inputs(input)).1),
            Network::EarlyConcat(_) => Err(Error::Config("early concatenation has no projections".into())),
        }
    }

    fn forward_cached(&self, input: &ModalityInput, forced: Option<[f64; 3]>) -> (ForwardTrace, Cache) {
        match self {
            Network::EarlyConcat(n) => {
                let (t, c) = n.forward_cached(input);
                (t, Cache::Concat(c))
            }
            Network::Attention(n) => {
                let (t, c) = n.forward_cached(input, forced);
                (t, Cache::Attention(c))
            }
        }
    }

    fn backward(&self, input: &ModalityInput, cache: &Cache, grad_logits: &[f64], grads: &mut Network) {
        match (self, cache, grads) {
            (Network::EarlyConcat(n), Cache::Concat(c), Network::EarlyConcat(g)) => n.backward(c, grad_logits, g),
            (Network::Attention(n), Cache::Attention(c), Network::Attention(g)) => {
                n.backward(input, c, grad_logits, g)
            }
            _ => unreachable!("gradient structure mirrors the network"),
        }
    }

    /// Mean cross-entropy over the batch and its gradient.
    pub fn loss_and_grad(&self, inputs: &[ModalityInput], targets: &[[f64; NUM_CLASSES]]) -> Result<(f64, Network)> {
        if inputs.len() != targets.len() || inputs.is_empty() {
            return Err(Error::Shape(format!(
                "{} inputs vs {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let mut grads = self.zeros_like();
        let mut total = 0.0;
        for (x, y) in inputs.iter().zip(targets) {
            self.check(x)?;
            let (trace, cache) = self.forward_cached(x, None);
            let (loss, g) = softmax_xent(&trace.logits, y)?;
            total += loss;
            self.backward(x, &cache, &g, &mut grads);
        }
        let n = inputs.len() as f64;
        grads.scale(1.0 / n);
        Ok((total / n, grads))
    }

    /// Mean cross-entropy without gradients.
    pub fn loss(&self, inputs: &[ModalityInput], targets: &[[f64; NUM_CLASSES]]) -> Result<f64> {
        let mut total = 0.0;
        for (x, y) in inputs.iter().zip(targets) {
            let trace = self.forward(x)?;
            total += softmax_xent(&trace.logits, y)?.0;
        }
        Ok(total / inputs.len().max(1) as f64)
    }
}

impl Parameters for Network {
    fn blocks(&self) -> Vec<(String, &[f64])> {
        fn push<'a>(out: &mut Vec<(String, &'a [f64])>, prefix: &str, p: Vec<(String, &'a [f64])>) {
            for (name, b) in p {
                out.push((format!("{prefix}.{name}"), b));
            }
        }
        let mut out: Vec<(String, &[f64])> = Vec::new();
        match self {
            Network::EarlyConcat(n) => {
                push(&mut out, "hidden", n.hidden.blocks());
                push(&mut out, "out", n.out.blocks());
            }
            Network::Attention(n) => {
                for m in 0..3 {
                    push(&mut out, &format!("proj.{}", MODALITIES[m]), n.proj[m].blocks());
                    push(&mut out, &format!("norm.{}", MODALITIES[m]), n.norm[m].blocks());
                }
                push(&mut out, "score", n.score.blocks());
                push(&mut out, "score", vec![("v".to_string(), &n.score_v[..])]);
                push(&mut out, "hidden", n.hidden.blocks());
                push(&mut out, "out", n.out.blocks());
            }
        }
        out
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        match self {
            Network::EarlyConcat(n) => {
                out.extend(n.hidden.blocks_mut());
                out.extend(n.out.blocks_mut());
            }
            Network::Attention(n) => {
                for (p, l) in n.proj.iter_mut().zip(n.norm.iter_mut()) {
                    out.extend(p.blocks_mut());
                    out.extend(l.blocks_mut());
                }
                out.extend(n.score.blocks_mut());
                out.push(&mut n.score_v);
                out.extend(n.hidden.blocks_mut());
                out.extend(n.out.blocks_mut());
            }
        }
        out
    }

    fn zeros_like(&self) -> Self {
        match self {
            Network::EarlyConcat(n) => Network::EarlyConcat(EarlyConcat {
                hidden: n.hidden.zeros_like(),
                out: n.out.zeros_like(),
            }),
            Network::Attention(n) => Network::Attention(AttentionFusion {
                mode: n.mode,
                proj: [n.proj[0].zeros_like(), n.proj[1].zeros_like(), n.proj[2].zeros_like()],
                norm: [n.norm[0].zeros_like(), n.norm[1].zeros_like(), n.norm[2].zeros_like()],
                score: n.score.zeros_like(),
                score_v: vec![0.0; n.score_v.len()],
                hidden: n.hidden.zeros_like(),
                out: n.out.zeros_like(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check_strata, Parameters};

    fn random_input(rng: &mut Rng, a: usize, t: usize, c: Option<usize>) -> ModalityInput {
        let mut v = |n: usize| (0..n).map(|_| rng.normal()).collect::<Vec<_>>();
        ModalityInput::new(v(a), v(t), c.map(v))
    }

    fn cfg(arch: Architecture) -> FusionConfig {
        let acoustic = arch.uses_acoustic().then_some(6);
        FusionConfig {
            proj_dim: 8,
            hidden_dim: 5,
            ..FusionConfig::new(arch, 7, 9, acoustic)
        }
    }

    const ALL: [Architecture; 3] = [
        Architecture::EarlyConcatV1,
        Architecture::ModalityAttentionV2,
        Architecture::WeightedAttentionV3,
    ];

    #[test]
    fn same_seed_same_parameters() {
        for arch in ALL {
            let a = Network::build(&cfg(arch), &mut Rng::new(5)).unwrap();
            let b = Network::build(&cfg(arch), &mut Rng::new(5)).unwrap();
            let bits = |n: &Network| n.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a), bits(&b));
        }
    }

    #[test]
    fn layer_shapes() {
        let n = Network::build(&FusionConfig::new(Architecture::EarlyConcatV1, 768, 768, None), &mut Rng::new(0)).unwrap();
        let Network::EarlyConcat(n) = n else { panic!() };
        assert_eq!(n.hidden.in_dim, 1536);

        let n = Network::build(&FusionConfig::new(Architecture::WeightedAttentionV3, 768, 768, Some(50)), &mut Rng::new(0)).unwrap();
        let Network::Attention(n) = n else { panic!() };
        assert!(n.proj.iter().all(|p| p.out_dim == 128));
        assert_eq!(n.hidden.in_dim, 128);

        let n = Network::build(&FusionConfig::new(Architecture::ModalityAttentionV2, 768, 768, Some(50)), &mut Rng::new(0)).unwrap();
        let Network::Attention(n) = n else { panic!() };
        assert_eq!(n.hidden.in_dim, 384);
    }

    #[test]
    fn zero_input_zero_head_gives_even_odds() {
        let mut net = Network::build(&cfg(Architecture::EarlyConcatV1), &mut Rng::new(1)).unwrap();
        let Network::EarlyConcat(n) = &mut net else { panic!() };
        n.out = n.out.zeros_like();
        let t = net.forward(&ModalityInput::new(vec![0.0; 7], vec![0.0; 9], None)).unwrap();
        assert_eq!(t.logits, [0.0, 0.0]);
        assert_eq!(softmax(&t.logits), vec![0.5, 0.5]);
        assert!(t.attention.is_none());
    }

    #[test]
    fn relu_stack_is_positively_homogeneous() {
        // biases start at zero
        let net = Network::build(&cfg(Architecture::EarlyConcatV1), &mut Rng::new(2)).unwrap();
        let mut rng = Rng::new(3);
        let x = random_input(&mut rng, 7, 9, None);
        let c = 2.5;
        let scaled = ModalityInput::new(
            x.audio.iter().map(|v| v * c).collect(),
            x.text.iter().map(|v| v * c).collect(),
            None,
        );
        let a = net.forward(&x).unwrap();
        let b = net.forward(&scaled).unwrap();
        for (p, q) in a.prelogit.iter().zip(&b.prelogit) {
            assert!((p * c - q).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_acoustic_is_an_input_error() {
        for arch in [Architecture::ModalityAttentionV2, Architecture::WeightedAttentionV3] {
            let net = Network::build(&cfg(arch), &mut Rng::new(1)).unwrap();
            let x = ModalityInput::new(vec![0.0; 7], vec![0.0; 9], None);
            assert!(matches!(net.forward(&x), Err(Error::Input(_))));
        }
    }

    #[test]
    fn attention_is_on_the_simplex() {
        let mut rng = Rng::new(4);
        for arch in [Architecture::ModalityAttentionV2, Architecture::WeightedAttentionV3] {
            let net = Network::build(&cfg(arch), &mut rng).unwrap();
            for _ in 0..1000 {
                let x = random_input(&mut rng, 7, 9, Some(6));
                let t = net.forward(&x).unwrap();
                let a = t.attention.unwrap();
                assert!(a.iter().all(|v| *v >= 0.0));
                assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                assert_eq!(t.prelogit.len(), 5);
                assert!(t.logits.iter().chain(&t.prelogit).all(|v| v.is_finite()));
            }
        }
    }

    fn equal_dim_attention(arch: Architecture, seed: u64) -> AttentionFusion {
        let c = FusionConfig {
            proj_dim: 6,
            hidden_dim: 4,
            ..FusionConfig::new(arch, 5, 5, Some(5))
        };
        match Network::build(&c, &mut Rng::new(seed)).unwrap() {
            Network::Attention(n) => n,
            _ => unreachable!(),
        }
    }

    #[test]
    fn identical_projections_get_uniform_weights() {
        for arch in [Architecture::ModalityAttentionV2, Architecture::WeightedAttentionV3] {
            let mut n = equal_dim_attention(arch, 7);
            n.proj[1] = n.proj[0].clone();
            n.proj[2] = n.proj[0].clone();
            let x = vec![0.3, -1.0, 2.0, 0.5, 0.1];
            let input = ModalityInput::new(x.clone(), x.clone(), Some(x));
            let net = Network::Attention(n);
            let a = net.forward(&input).unwrap().attention.unwrap();
            for v in a {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
            if arch == Architecture::WeightedAttentionV3 {
                let h = net.projections(&input).unwrap();
                let fused = net.fused(&input).unwrap();
                for (f, v) in fused.iter().zip(&h[0]) {
                    assert!((f - v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn forced_one_hot_attention_selects_audio() {
        let net = Network::Attention(equal_dim_attention(Architecture::WeightedAttentionV3, 8));
        let mut rng = Rng::new(9);
        let input = random_input(&mut rng, 5, 5, Some(5));
        let Network::Attention(n) = &net else { unreachable!() };
        let h = net.projections(&input).unwrap();
        let fused = n.fuse(&h, [1.0, 0.0, 0.0]);
        assert_eq!(fused, h[0]);
        // same fusion through the full forward path
        let t = net.forward_with_attention(&input, [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(t.attention, Some([1.0, 0.0, 0.0]));
    }

    #[test]
    fn attention_is_permutation_equivariant() {
        let mut rng = Rng::new(10);
        for arch in [Architecture::ModalityAttentionV2, Architecture::WeightedAttentionV3] {
            let n = equal_dim_attention(arch, 11);
            let input = random_input(&mut rng, 5, 5, Some(5));
            let xs = [input.audio.clone(), input.text.clone(), input.acoustic.clone().unwrap()];
            let perm = [2, 0, 1];
            let mut p = n.clone();
            for (slot, &src) in perm.iter().enumerate() {
                p.proj[slot] = n.proj[src].clone();
                p.norm[slot] = n.norm[src].clone();
            }
            let permuted = ModalityInput::new(xs[perm[0]].clone(), xs[perm[1]].clone(), Some(xs[perm[2]].clone()));
            let a = Network::Attention(n).forward(&input).unwrap().attention.unwrap();
            let b = Network::Attention(p).forward(&permuted).unwrap().attention.unwrap();
            for (slot, &src) in perm.iter().enumerate() {
                assert!((b[slot] - a[src]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn weighted_sum_lies_in_the_convex_hull() {
        let mut rng = Rng::new(12);
        let net = Network::build(&cfg(Architecture::WeightedAttentionV3), &mut Rng::new(13)).unwrap();
        for _ in 0..200 {
            let x = random_input(&mut rng, 7, 9, Some(6));
            let h = net.projections(&x).unwrap();
            let f = net.fused(&x).unwrap();
            // Least squares for w1, w2 with w3 = 1 − w1 − w2.
            let d1: Vec<f64> = h[0].iter().zip(&h[2]).map(|(a, c)| a - c).collect();
            let d2: Vec<f64> = h[1].iter().zip(&h[2]).map(|(b, c)| b - c).collect();
            let r: Vec<f64> = f.iter().zip(&h[2]).map(|(a, c)| a - c).collect();
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            let (a11, a12, a22) = (dot(&d1, &d1), dot(&d1, &d2), dot(&d2, &d2));
            let (b1, b2) = (dot(&d1, &r), dot(&d2, &r));
            let det = a11 * a22 - a12 * a12;
            let w1 = (b1 * a22 - b2 * a12) / det;
            let w2 = (a11 * b2 - a12 * b1) / det;
            let w3 = 1.0 - w1 - w2;
            assert!(w1 >= -1e-9 && w2 >= -1e-9 && w3 >= -1e-9, "{w1} {w2} {w3}");
            let resid: f64 = (0..f.len())
                .map(|i| (w1 * h[0][i] + w2 * h[1][i] + w3 * h[2][i] - f[i]).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(resid <= 1e-9, "{resid}");
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut rng = Rng::new(14);
        for arch in ALL {
            let net = Network::build(&cfg(arch), &mut rng).unwrap();
            let c = arch.uses_acoustic().then_some(6);
            let xs: Vec<ModalityInput> = (0..4).map(|_| random_input(&mut rng, 7, 9, c)).collect();
            let ys = [[1.0, 0.0], [0.0, 1.0], [0.3, 0.7], [0.8, 0.2]];
            let (_, grads) = net.loss_and_grad(&xs, &ys).unwrap();
            let strata: Vec<_> = net.block_ranges().into_iter().map(|(_, r)| r).collect();
            let mut probe = net.clone();
            let report = grad_check_strata(
                |p| {
                    probe.load_flat(p).unwrap();
                    probe.loss(&xs, &ys).unwrap()
                },
                &net.flatten(),
                &grads.flatten(),
                1e-5,
                &strata,
                200,
                &mut rng,
            );
            assert!(report.max_rel_error <= 1e-4, "{arch}: {report:?}");
        }
    }
}
