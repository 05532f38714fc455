use std::f64::consts::TAU;
use std::path::Path;

use gradnet::{Graph, NodeId, ParamSet, Tensor};
use physim::Observation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arch::{ArchConfig, DECODER_KERNEL, VELOCITY_DIM};
use crate::error::ReplearnError;
use crate::sample::Sample;

/// One tensor of the parameter inventory: weights carry the fan-in their
/// initialization scales by, biases draw small noise instead.
struct Entry {
    name: String,
    shape: Vec<usize>,
    fan_in: Option<usize>,
}

/// Biases start as small noise rather than zeros: an at-rest observation has
/// an all-zero wrench window and velocity, and with zero biases the dynamic
/// branch would deliver the exact zero vector to the unit normalization.
const BIAS_STD: f64 = 0.05;

fn entry(name: String, shape: &[usize], fan_in: Option<usize>) -> Entry {
    Entry { name, shape: shape.to_vec(), fan_in }
}

/// Full parameter inventory in insertion order. Construction, checkpoint
/// validation and id resolution all derive from this single listing so they
/// cannot drift apart.
fn inventory(cfg: &ArchConfig) -> Result<Vec<Entry>, ReplearnError> {
    cfg.validate()?;
    let k = cfg.conv_kernel;
    let mut out = Vec::new();
    for branch in ["es.int", "es.dep"] {
        let mut ci = 1;
        for (l, &co) in cfg.conv_channels.iter().enumerate() {
            out.push(entry(format!("{branch}.conv{l}.k"), &[co, ci, k, k], Some(ci * k * k)));
            out.push(entry(format!("{branch}.conv{l}.b"), &[co], None));
            ci = co;
        }
        let flat = cfg.flat_dim()?;
        out.push(entry(format!("{branch}.out.w"), &[flat, cfg.branch_out], Some(flat)));
        out.push(entry(format!("{branch}.out.b"), &[cfg.branch_out], None));
    }
    let cat = 2 * cfg.branch_out;
    out.push(entry("es.fuse.0.w".into(), &[cat, cfg.fusion_hidden], Some(cat)));
    out.push(entry("es.fuse.0.b".into(), &[cfg.fusion_hidden], None));
    out.push(entry("es.fuse.1.w".into(), &[cfg.fusion_hidden, cfg.embed], Some(cfg.fusion_hidden)));
    out.push(entry("es.fuse.1.b".into(), &[cfg.embed], None));

    let kw = cfg.causal_kernel;
    let mut ci = cfg.wrench_channels;
    for (l, &co) in cfg.causal_channels.iter().enumerate() {
        out.push(entry(format!("ed.conv{l}.k"), &[co, ci, kw], Some(ci * kw)));
        out.push(entry(format!("ed.conv{l}.b"), &[co], None));
        ci = co;
    }
    let fused = ci + VELOCITY_DIM;
    out.push(entry("ed.out.w".into(), &[fused, cfg.embed], Some(fused)));
    out.push(entry("ed.out.b".into(), &[cfg.embed], None));

    let seed_feats = cfg.decoder_base * 4;
    out.push(entry("ds.in.w".into(), &[cfg.embed, seed_feats], Some(cfg.embed)));
    out.push(entry("ds.in.b".into(), &[seed_feats], None));
    let dk = DECODER_KERNEL;
    let mut ci = cfg.decoder_base;
    for (l, &co) in cfg.decoder_channels().iter().enumerate() {
        out.push(entry(format!("ds.convt{l}.k"), &[ci, co, dk, dk], Some(ci * dk * dk)));
        out.push(entry(format!("ds.convt{l}.b"), &[co], None));
        ci = co;
    }
    Ok(out)
}

/// Parameter ids grouped by the layer that consumes them.
#[derive(Debug, Clone)]
struct BranchIds {
    convs: Vec<(usize, usize)>,
    out: (usize, usize),
}

#[derive(Debug, Clone)]
struct Ids {
    intensity: BranchIds,
    depth: BranchIds,
    fusion: [(usize, usize); 2],
    causal: Vec<(usize, usize)>,
    dyn_out: (usize, usize),
    dec_in: (usize, usize),
    dec_convt: Vec<(usize, usize)>,
}

fn resolve_branch(params: &ParamSet, prefix: &str, layers: usize) -> Result<BranchIds, ReplearnError> {
    let mut convs = Vec::with_capacity(layers);
    for l in 0..layers {
        convs.push((
            params.id_of(&format!("{prefix}.conv{l}.k"))?,
            params.id_of(&format!("{prefix}.conv{l}.b"))?,
        ));
    }
    Ok(BranchIds {
        convs,
        out: (params.id_of(&format!("{prefix}.out.w"))?, params.id_of(&format!("{prefix}.out.b"))?),
    })
}

fn resolve_ids(cfg: &ArchConfig, params: &ParamSet) -> Result<Ids, ReplearnError> {
    let causal = (0..cfg.causal_channels.len())
        .map(|l| {
            Ok((
                params.id_of(&format!("ed.conv{l}.k"))?,
                params.id_of(&format!("ed.conv{l}.b"))?,
            ))
        })
        .collect::<Result<Vec<_>, ReplearnError>>()?;
    let dec_convt = (0..cfg.decoder_layers())
        .map(|l| {
            Ok((
                params.id_of(&format!("ds.convt{l}.k"))?,
                params.id_of(&format!("ds.convt{l}.b"))?,
            ))
        })
        .collect::<Result<Vec<_>, ReplearnError>>()?;
    Ok(Ids {
        intensity: resolve_branch(params, "es.int", cfg.conv_channels.len())?,
        depth: resolve_branch(params, "es.dep", cfg.conv_channels.len())?,
        fusion: [
            (params.id_of("es.fuse.0.w")?, params.id_of("es.fuse.0.b")?),
            (params.id_of("es.fuse.1.w")?, params.id_of("es.fuse.1.b")?),
        ],
        causal,
        dyn_out: (params.id_of("ed.out.w")?, params.id_of("ed.out.b")?),
        dec_in: (params.id_of("ds.in.w")?, params.id_of("ds.in.b")?),
        dec_convt,
    })
}

/// Marsaglia-free Box-Muller draw; `u1` is shifted into (0,1] so the log
/// never sees zero.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

/// Memoizing parameter binder: each graph references a given parameter tensor
/// through exactly one leaf node no matter how many layers or batch samples
/// consume it.
pub(crate) struct Bind {
    nodes: Vec<Option<NodeId>>,
}

impl Bind {
    pub(crate) fn new(params: &ParamSet) -> Bind {
        Bind { nodes: vec![None; params.len()] }
    }

    fn node(&mut self, g: &mut Graph, params: &ParamSet, id: usize) -> NodeId {
        *self.nodes[id].get_or_insert_with(|| g.param(id, params.by_id(id)))
    }
}

/// The two encoders and the decoder over one shared parameter set.
pub struct ReprModel {
    cfg: ArchConfig,
    params: ParamSet,
    ids: Ids,
}

impl ReprModel {
    /// Fresh model: He-initialized weights (normal, std sqrt(2/fan_in)) and
    /// zero biases, reproducible from the seed.
    pub fn new(cfg: ArchConfig, seed: u64) -> Result<ReprModel, ReplearnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        for e in inventory(&cfg)? {
            let len: usize = e.shape.iter().product();
            let std = match e.fan_in {
                Some(fan) => (2.0 / fan as f64).sqrt(),
                None => BIAS_STD,
            };
            let data = (0..len).map(|_| std * standard_normal(&mut rng)).collect();
            params.insert(&e.name, Tensor::from_vec(&e.shape, data)?)?;
        }
        let ids = resolve_ids(&cfg, &params)?;
        Ok(ReprModel { cfg, params, ids })
    }

    /// Rebuild a model around an existing parameter set, validating that it
    /// carries exactly the tensors the architecture expects.
    pub fn from_params(cfg: ArchConfig, params: ParamSet) -> Result<ReprModel, ReplearnError> {
        let expected = inventory(&cfg)?;
        if params.len() != expected.len() {
            return Err(ReplearnError::CheckpointMismatch(format!(
                "{} tensors in checkpoint, architecture has {}",
                params.len(),
                expected.len()
            )));
        }
        for e in &expected {
            let t = params
                .get(&e.name)
                .map_err(|_| ReplearnError::CheckpointMismatch(format!("missing tensor {}", e.name)))?;
            if t.shape() != e.shape.as_slice() {
                return Err(ReplearnError::CheckpointMismatch(format!(
                    "{} is {:?}, architecture wants {:?}",
                    e.name,
                    t.shape(),
                    e.shape
                )));
            }
        }
        let ids = resolve_ids(&cfg, &params)?;
        Ok(ReprModel { cfg, params, ids })
    }

    pub fn config(&self) -> &ArchConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Replace one named tensor, keeping its shape. The escape hatch for
    /// ablations (zeroing a layer) without exposing raw mutation.
    pub fn set_param(&mut self, name: &str, t: Tensor) -> Result<(), ReplearnError> {
        let id = self.params.id_of(name)?;
        if self.params.by_id(id).shape() != t.shape() {
            return Err(ReplearnError::CheckpointMismatch(format!(
                "{} is {:?}, replacement is {:?}",
                name,
                self.params.by_id(id).shape(),
                t.shape()
            )));
        }
        *self.params.by_id_mut(id) = t;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.params.to_bytes()
    }

    pub fn from_bytes(cfg: ArchConfig, bytes: &[u8]) -> Result<ReprModel, ReplearnError> {
        ReprModel::from_params(cfg, ParamSet::from_bytes(bytes)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ReplearnError> {
        Ok(self.params.save(path)?)
    }

    pub fn load(cfg: ArchConfig, path: &Path) -> Result<ReprModel, ReplearnError> {
        ReprModel::from_params(cfg, ParamSet::load(path)?)
    }

    fn conv_branch(
        &self,
        g: &mut Graph,
        bind: &mut Bind,
        ids: &BranchIds,
        input: NodeId,
    ) -> Result<NodeId, ReplearnError> {
        let mut x = input;
        for &(k, b) in &ids.convs {
            let kn = bind.node(g, &self.params, k);
            let bn = bind.node(g, &self.params, b);
            x = g.conv2d(x, kn, self.cfg.conv_stride)?;
            x = g.bias_ch(x, bn)?;
            x = g.relu(x)?;
        }
        x = g.reshape(x, &[self.cfg.flat_dim()?])?;
        let w = bind.node(g, &self.params, ids.out.0);
        let b = bind.node(g, &self.params, ids.out.1);
        x = g.dense(x, w, b)?;
        Ok(g.relu(x)?)
    }

    /// E^s as graph nodes: both grid branches, concatenation, fusion network.
    pub(crate) fn static_embed(
        &self,
        g: &mut Graph,
        bind: &mut Bind,
        intensity: NodeId,
        depth: NodeId,
    ) -> Result<NodeId, ReplearnError> {
        let fi = self.conv_branch(g, bind, &self.ids.intensity, intensity)?;
        let fd = self.conv_branch(g, bind, &self.ids.depth, depth)?;
        let mut x = g.concat(fi, fd)?;
        let (w0, b0) = self.ids.fusion[0];
        let w0 = bind.node(g, &self.params, w0);
        let b0 = bind.node(g, &self.params, b0);
        x = g.dense(x, w0, b0)?;
        x = g.relu(x)?;
        let (w1, b1) = self.ids.fusion[1];
        let w1 = bind.node(g, &self.params, w1);
        let b1 = bind.node(g, &self.params, b1);
        Ok(g.dense(x, w1, b1)?)
    }

    /// Normalized E^d as graph nodes: causal stack over the window, last
    /// timestep fused with velocity, unit-normalized.
    pub(crate) fn dynamic_embed(
        &self,
        g: &mut Graph,
        bind: &mut Bind,
        window: NodeId,
        velocity: NodeId,
    ) -> Result<NodeId, ReplearnError> {
        let mut x = window;
        for (l, &(k, b)) in self.ids.causal.iter().enumerate() {
            let kn = bind.node(g, &self.params, k);
            let bn = bind.node(g, &self.params, b);
            x = g.causal_conv1d(x, kn, self.cfg.causal_dilations[l])?;
            x = g.bias_ch(x, bn)?;
            x = g.relu(x)?;
        }
        let last = g.last_col(x)?;
        let cat = g.concat(last, velocity)?;
        let w = bind.node(g, &self.params, self.ids.dyn_out.0);
        let b = bind.node(g, &self.params, self.ids.dyn_out.1);
        let raw = g.dense(cat, w, b)?;
        Ok(g.l2_normalize(raw)?)
    }

    /// D^s as graph nodes: seed dense layer, 2x2 feature map, doubling
    /// transposed convolutions, sigmoid into `[2,g,g]`.
    pub(crate) fn decode(
        &self,
        g: &mut Graph,
        bind: &mut Bind,
        h: NodeId,
    ) -> Result<NodeId, ReplearnError> {
        let (w, b) = self.ids.dec_in;
        let w = bind.node(g, &self.params, w);
        let b = bind.node(g, &self.params, b);
        let mut x = g.dense(h, w, b)?;
        x = g.relu(x)?;
        x = g.reshape(x, &[self.cfg.decoder_base, 2, 2])?;
        let last = self.ids.dec_convt.len() - 1;
        for (l, &(k, b)) in self.ids.dec_convt.iter().enumerate() {
            let kn = bind.node(g, &self.params, k);
            let bn = bind.node(g, &self.params, b);
            x = g.conv_transpose2d(x, kn, DECODER_KERNEL)?;
            x = g.bias_ch(x, bn)?;
            x = if l == last { g.sigmoid(x)? } else { g.relu(x)? };
        }
        Ok(x)
    }

    /// Static embedding h of one simulator observation.
    pub fn encode_static(&self, obs: &Observation) -> Result<Vec<f64>, ReplearnError> {
        self.encode_static_sample(&Sample::from_obs(&self.cfg, obs)?)
    }

    pub fn encode_static_sample(&self, s: &Sample) -> Result<Vec<f64>, ReplearnError> {
        let mut g = Graph::new();
        let mut bind = Bind::new(&self.params);
        let i = g.input(s.intensity.clone());
        let d = g.input(s.depth.clone());
        let h = self.static_embed(&mut g, &mut bind, i, d)?;
        Ok(g.value(h).data().to_vec())
    }

    /// Unit latent displacement of one simulator observation.
    pub fn encode_dynamic(&self, obs: &Observation) -> Result<Vec<f64>, ReplearnError> {
        self.encode_dynamic_sample(&Sample::from_obs(&self.cfg, obs)?)
    }

    pub fn encode_dynamic_sample(&self, s: &Sample) -> Result<Vec<f64>, ReplearnError> {
        let mut g = Graph::new();
        let mut bind = Bind::new(&self.params);
        let w = g.input(s.window.clone());
        let v = g.input(s.velocity.clone());
        let dh = self.dynamic_embed(&mut g, &mut bind, w, v)?;
        Ok(g.value(dh).data().to_vec())
    }

    /// Reconstruct (intensity, depth) grids from an embedding; both come back
    /// row-major `g*g` with values in (0,1).
    pub fn decode_static(&self, h: &[f64]) -> Result<(Vec<f64>, Vec<f64>), ReplearnError> {
        if h.len() != self.cfg.embed {
            return Err(ReplearnError::LengthMismatch { expected: self.cfg.embed, got: h.len() });
        }
        let mut g = Graph::new();
        let mut bind = Bind::new(&self.params);
        let hn = g.input(Tensor::from_vec(&[self.cfg.embed], h.to_vec())?);
        let out = self.decode(&mut g, &mut bind, hn)?;
        let cells = self.cfg.grid * self.cfg.grid;
        let data = g.value(out).data();
        Ok((data[..cells].to_vec(), data[cells..].to_vec()))
    }
}

/// Predicted next static embedding: the current one advanced by the unit
/// latent displacement.
pub fn predict_next(h: &[f64], dh: &[f64]) -> Result<Vec<f64>, ReplearnError> {
    if h.len() != dh.len() {
        return Err(ReplearnError::LengthMismatch { expected: h.len(), got: dh.len() });
    }
    Ok(h.iter().zip(dh).map(|(a, b)| a + b).collect())
}
