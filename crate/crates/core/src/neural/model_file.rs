//! `DVM1` binary network file, little-endian throughout.
//!
//! ```text
//! magic        4 bytes  "DVM1"
//! version      u32      1
//! role         u8       see ModelRole
//! latent_dim   u32      0 for networks without a latent space
//! net_count    u32
//! per network:
//!   layer_count u32
//!   per layer:  inputs u32, outputs u32, activation u8
//! then per network, per layer:
//!   weights    inputs*outputs f32, row-major (row = input)
//!   bias       outputs f32
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::dense::{Activation, DenseNet, LayerSpec};
use super::vae::Dvae;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"DVM1";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelRole {
    /// Encoder then decoder.
    Dvae = 0,
    /// Q-network.
    Dqn = 1,
    /// Policy network then value network.
    Ppo = 2,
}

impl ModelRole {
    fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(ModelRole::Dvae),
            1 => Some(ModelRole::Dqn),
            2 => Some(ModelRole::Ppo),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub role: ModelRole,
    pub latent_dim: u32,
    pub nets: Vec<DenseNet<f32>>,
}

impl ModelFile {
    pub fn from_dvae(model: &Dvae<f32>) -> Self {
        ModelFile {
            role: ModelRole::Dvae,
            latent_dim: model.latent_dim() as u32,
            nets: vec![model.encoder.clone(), model.decoder.clone()],
        }
    }

    pub fn into_dvae(self) -> Result<Dvae<f32>> {
        if self.role != ModelRole::Dvae || self.nets.len() != 2 {
            return Err(Error::format("DVM1", "not a DVAE model"));
        }
        let mut nets = self.nets.into_iter();
        let model = Dvae::from_parts(nets.next().unwrap(), nets.next().unwrap())?;
        if model.latent_dim() as u32 != self.latent_dim {
            return Err(Error::format("DVM1", "latent_dim disagrees with decoder input"));
        }
        Ok(model)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[self.role as u8])?;
        w.write_all(&self.latent_dim.to_le_bytes())?;
        w.write_all(&(self.nets.len() as u32).to_le_bytes())?;
        for net in &self.nets {
            w.write_all(&(net.specs().len() as u32).to_le_bytes())?;
            for s in net.specs() {
                w.write_all(&(s.inputs as u32).to_le_bytes())?;
                w.write_all(&(s.outputs as u32).to_le_bytes())?;
                w.write_all(&[s.activation as u8])?;
            }
        }
        for net in &self.nets {
            let mut buf = Vec::with_capacity(net.param_count() * 4);
            for p in net.params() {
                buf.extend_from_slice(&p.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let bad = |m: &str| Error::format("DVM1", m);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        if read_u32(&mut r)? != VERSION {
            return Err(bad("unsupported version"));
        }
        let role = ModelRole::from_u8(read_u8(&mut r)?).ok_or_else(|| bad("unknown role"))?;
        let latent_dim = read_u32(&mut r)?;
        let net_count = read_u32(&mut r)? as usize;
        if net_count == 0 || net_count > 64 {
            return Err(bad("implausible network count"));
        }
        let mut all_specs = Vec::with_capacity(net_count);
        for _ in 0..net_count {
            let layers = read_u32(&mut r)? as usize;
            if layers == 0 || layers > 1024 {
                return Err(bad("implausible layer count"));
            }
            let mut specs = Vec::with_capacity(layers);
            for _ in 0..layers {
                let inputs = read_u32(&mut r)? as usize;
                let outputs = read_u32(&mut r)? as usize;
                let activation = Activation::from_u8(read_u8(&mut r)?).ok_or_else(|| bad("unknown activation"))?;
                specs.push(LayerSpec {
                    inputs,
                    outputs,
                    activation,
                });
            }
            all_specs.push(specs);
        }
        let mut nets = Vec::with_capacity(net_count);
        for specs in all_specs {
            let count: usize = specs.iter().map(|s| s.param_count()).sum();
            let mut bytes = vec![0u8; count * 4];
            r.read_exact(&mut bytes)?;
            let params = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            nets.push(DenseNet::from_params(specs, params)?);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes"));
        }
        Ok(ModelFile { role, latent_dim, nets })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }
}

pub(crate) fn read_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
