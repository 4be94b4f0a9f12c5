use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::nn::{Adam, AdamParams, Mlp};
use super::policy::{DesignerPolicy, GaussianPolicy};
use super::reward::{Normalizers, RewardConfig, RunningNormalizer};
use super::DesignerError;

const MAGIC: &[u8; 4] = b"EDPC";
const VERSION: u32 = 1;

/// A designer policy with everything needed to resume or reuse it:
/// networks, optimizer moments, reward normalizer buffers and the seed.
///
/// Layout (little-endian): magic, version, reward label, seed, steps taken,
/// then the actor network with its log stds, the critic network, both Adam
/// states, and the two normalizer buffers. Network parameters are stored
/// per layer as a row-major `out x in` weight block followed by the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCheckpoint {
    pub policy: DesignerPolicy,
    pub normalizers: Normalizers,
    pub seed: u64,
    pub steps: u64,
}

impl PolicyCheckpoint {
    pub fn save(&self, path: &Path) -> Result<(), DesignerError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DesignerError> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory");
        out
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), DesignerError> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        let label = self.policy.reward.label();
        w.write_u8(label.len() as u8)?;
        w.write_all(label.as_bytes())?;
        w.write_u32::<LittleEndian>(self.policy.reward.normalizer_window as u32)?;
        w.write_u64::<LittleEndian>(self.seed)?;
        w.write_u64::<LittleEndian>(self.steps)?;
        write_mlp(w, &self.policy.actor.mean)?;
        write_f64s(w, &self.policy.actor.log_std)?;
        write_mlp(w, &self.policy.critic)?;
        write_adam(w, &self.policy.actor_opt)?;
        write_adam(w, &self.policy.critic_opt)?;
        for n in [&self.normalizers.fun, &self.normalizers.deviation] {
            w.write_u32::<LittleEndian>(n.window() as u32)?;
            w.write_u32::<LittleEndian>(n.len() as u32)?;
            write_f64s(w, &n.values().collect::<Vec<_>>())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, DesignerError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(DesignerError::Format("not a policy checkpoint".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(DesignerError::Format(format!("unsupported version {version}")));
        }
        let mut label = vec![0u8; r.read_u8()? as usize];
        r.read_exact(&mut label)?;
        let label = String::from_utf8(label).map_err(|_| DesignerError::Format("reward label".into()))?;
        let mut reward = RewardConfig::parse(&label)?;
        reward.normalizer_window = r.read_u32::<LittleEndian>()? as usize;
        let seed = r.read_u64::<LittleEndian>()?;
        let steps = r.read_u64::<LittleEndian>()?;
        let mean = read_mlp(r)?;
        let log_std = read_f64s(r, mean.output_size())?;
        let critic = read_mlp(r)?;
        let actor = GaussianPolicy { mean, log_std };
        let actor_opt = read_adam(r, actor.param_count())?;
        let critic_opt = read_adam(r, critic.params().len())?;
        let mut buffers = Vec::with_capacity(2);
        for _ in 0..2 {
            let window = r.read_u32::<LittleEndian>()? as usize;
            let len = r.read_u32::<LittleEndian>()? as usize;
            if len > window {
                return Err(DesignerError::Format("normalizer buffer exceeds its window".into()));
            }
            buffers.push(RunningNormalizer::restore(window, read_f64s(r, len)?));
        }
        let deviation = buffers.pop().expect("two buffers");
        let fun = buffers.pop().expect("two buffers");
        Ok(Self {
            policy: DesignerPolicy { actor, critic, actor_opt, critic_opt, reward },
            normalizers: Normalizers { fun, deviation },
            seed,
            steps,
        })
    }
}

fn write_f64s<W: Write>(w: &mut W, values: &[f64]) -> std::io::Result<()> {
    values.iter().try_for_each(|&v| w.write_f64::<LittleEndian>(v))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> std::io::Result<Vec<f64>> {
    (0..n).map(|_| r.read_f64::<LittleEndian>()).collect()
}

fn write_mlp<W: Write>(w: &mut W, net: &Mlp) -> std::io::Result<()> {
    w.write_u8(net.tanh_output() as u8)?;
    w.write_u32::<LittleEndian>(net.sizes().len() as u32)?;
    for &s in net.sizes() {
        w.write_u32::<LittleEndian>(s as u32)?;
    }
    write_f64s(w, net.params())
}

fn read_mlp<R: Read>(r: &mut R) -> Result<Mlp, DesignerError> {
    let tanh_output = r.read_u8()? != 0;
    let layers = r.read_u32::<LittleEndian>()? as usize;
    if !(2..=16).contains(&layers) {
        return Err(DesignerError::Format(format!("{layers} layer sizes")));
    }
    let sizes = (0..layers)
        .map(|_| r.read_u32::<LittleEndian>().map(|s| s as usize))
        .collect::<Result<Vec<_>, _>>()?;
    if sizes.iter().any(|&s| s == 0 || s > 4096) {
        return Err(DesignerError::Format(format!("bad layer sizes {sizes:?}")));
    }
    let count = sizes.windows(2).map(|p| p[0] * p[1] + p[1]).sum();
    let params = read_f64s(r, count)?;
    Mlp::from_params(&sizes, params, tanh_output).ok_or_else(|| DesignerError::Format("network shape".into()))
}

fn write_adam<W: Write>(w: &mut W, opt: &Adam) -> std::io::Result<()> {
    let p = opt.params;
    write_f64s(w, &[p.learning_rate, p.beta1, p.beta2, p.epsilon])?;
    w.write_u64::<LittleEndian>(opt.t)?;
    write_f64s(w, &opt.m)?;
    write_f64s(w, &opt.v)
}

fn read_adam<R: Read>(r: &mut R, n: usize) -> Result<Adam, DesignerError> {
    let h = read_f64s(r, 4)?;
    let params = AdamParams { learning_rate: h[0], beta1: h[1], beta2: h[2], epsilon: h[3] };
    let t = r.read_u64::<LittleEndian>()?;
    let m = read_f64s(r, n)?;
    let v = read_f64s(r, n)?;
    Ok(Adam { params, m, v, t })
}
