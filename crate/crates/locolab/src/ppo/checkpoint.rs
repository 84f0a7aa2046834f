//! Binary checkpoints: magic, format version, layout variant id, layer
//! dimension tables, then little-endian f64 weight/bias arrays in row-major
//! order and the log_std vector. Round-trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Layer, Mlp, Policy, Value};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"LLAB";
const VERSION: u32 = 1;

/// A trained policy/value pair plus the observation-layout tag it was
/// trained for.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub layout_id: u32,
    pub policy: Policy,
    pub value: Value,
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    write_u32(&mut w, VERSION)?;
    write_u32(&mut w, ckpt.layout_id)?;

    write_dims(&mut w, &ckpt.policy.actor)?;
    write_dims(&mut w, &ckpt.value.critic)?;
    write_net(&mut w, &ckpt.policy.actor)?;
    write_net(&mut w, &ckpt.value.critic)?;
    for &v in ckpt.policy.log_std.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad checkpoint magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let layout_id = read_u32(&mut r)?;

    let actor_dims = read_dims(&mut r)?;
    let critic_dims = read_dims(&mut r)?;
    let actor = read_net(&mut r, &actor_dims)?;
    let critic = read_net(&mut r, &critic_dims)?;
    let act_dim = actor.output_dim();
    let mut log_std = Array1::zeros(act_dim);
    for v in log_std.iter_mut() {
        *v = read_f64(&mut r)?;
    }
    // Anything left over means the file does not match its header.
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::Format("trailing bytes after checkpoint payload".into()));
    }
    Ok(Checkpoint { layout_id, policy: Policy { actor, log_std }, value: Value { critic } })
}

fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_dims<W: Write>(w: &mut W, net: &Mlp) -> Result<()> {
    write_u32(w, net.layers.len() as u32)?;
    for layer in &net.layers {
        write_u32(w, layer.w.ncols() as u32)?;
        write_u32(w, layer.w.nrows() as u32)?;
    }
    Ok(())
}

fn write_net<W: Write>(w: &mut W, net: &Mlp) -> Result<()> {
    for layer in &net.layers {
        for &v in layer.w.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        for &v in layer.b.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("truncated checkpoint".into())
        } else {
            Error::Io(e)
        }
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    read_exact(r, &mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_dims<R: Read>(r: &mut R) -> Result<Vec<(usize, usize)>> {
    let count = read_u32(r)? as usize;
    if count == 0 || count > 64 {
        return Err(Error::Format(format!("implausible layer count {count}")));
    }
    let mut dims = Vec::with_capacity(count);
    for _ in 0..count {
        let in_dim = read_u32(r)? as usize;
        let out_dim = read_u32(r)? as usize;
        if in_dim == 0 || out_dim == 0 || in_dim > 1 << 20 || out_dim > 1 << 20 {
            return Err(Error::Format(format!("implausible layer shape {in_dim}x{out_dim}")));
        }
        dims.push((in_dim, out_dim));
    }
    Ok(dims)
}

fn read_net<R: Read>(r: &mut R, dims: &[(usize, usize)]) -> Result<Mlp> {
    let mut layers = Vec::with_capacity(dims.len());
    for &(in_dim, out_dim) in dims {
        let mut w = Array2::zeros((out_dim, in_dim));
        for v in w.iter_mut() {
            *v = read_f64(r)?;
        }
        let mut b = Array1::zeros(out_dim);
        for v in b.iter_mut() {
            *v = read_f64(r)?;
        }
        layers.push(Layer { w, b });
    }
    Ok(Mlp { layers })
}
