//! Versioned binary weight files.
//!
//! Layout (all integers and scalars little-endian):
//!
//! ```text
//! magic   b"PRNW"
//! u32     format version (currently 1)
//! u8      scalar width in bytes (4 = f32, 8 = f64)
//! u32     layer count
//! per layer: u8 kind, u8 activation, u32 input_size, u32 output_size
//! then the flat parameter stream in params_to_vec order
//! ```
//!
//! Round trips are bit-exact: scalars are written as raw IEEE-754 bits.

use std::io::{Read, Write};

use super::{Activation, LayerKind, LayerSpec, RecurrentNet};
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAGIC: &[u8; 4] = b"PRNW";
const VERSION: u32 = 1;

fn kind_code(kind: LayerKind) -> u8 {
    match kind {
        LayerKind::Dense => 0,
        LayerKind::Rnn => 1,
        LayerKind::Lstm => 2,
        LayerKind::Gru => 3,
    }
}

fn kind_from_code(code: u8) -> Result<LayerKind> {
    Ok(match code {
        0 => LayerKind::Dense,
        1 => LayerKind::Rnn,
        2 => LayerKind::Lstm,
        3 => LayerKind::Gru,
        other => return Err(Error::invalid_argument(format!("unknown layer kind code {other}"))),
    })
}

fn activation_code(act: Activation) -> u8 {
    match act {
        Activation::Tanh => 0,
        Activation::Sigmoid => 1,
        Activation::Identity => 2,
    }
}

fn activation_from_code(code: u8) -> Result<Activation> {
    Ok(match code {
        0 => Activation::Tanh,
        1 => Activation::Sigmoid,
        2 => Activation::Identity,
        other => return Err(Error::invalid_argument(format!("unknown activation code {other}"))),
    })
}

pub fn save<F: Real, W: Write>(net: &RecurrentNet<F>, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&[std::mem::size_of::<F>() as u8])?;
    let specs = net.specs();
    out.write_all(&(specs.len() as u32).to_le_bytes())?;
    for spec in &specs {
        out.write_all(&[kind_code(spec.kind), activation_code(spec.activation)])?;
        out.write_all(&(spec.input_size as u32).to_le_bytes())?;
        out.write_all(&(spec.output_size as u32).to_le_bytes())?;
    }
    for value in net.params_to_vec() {
        let v = value.to_f64_lossy();
        if std::mem::size_of::<F>() == 4 {
            out.write_all(&(v as f32).to_le_bytes())?;
        } else {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load<F: Real, R: Read>(mut input: R) -> Result<RecurrentNet<F>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::invalid_argument("not a recurrent-net weight file"));
    }
    let mut u32_buf = [0u8; 4];
    input.read_exact(&mut u32_buf)?;
    let version = u32::from_le_bytes(u32_buf);
    if version != VERSION {
        return Err(Error::invalid_argument(format!(
            "unsupported weight file version {version} (expected {VERSION})"
        )));
    }
    let mut byte = [0u8; 1];
    input.read_exact(&mut byte)?;
    if byte[0] as usize != std::mem::size_of::<F>() {
        return Err(Error::invalid_argument(format!(
            "scalar width mismatch: file stores {}-byte floats, caller expects {}-byte",
            byte[0],
            std::mem::size_of::<F>()
        )));
    }
    input.read_exact(&mut u32_buf)?;
    let layer_count = u32::from_le_bytes(u32_buf) as usize;
    let mut specs = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let mut head = [0u8; 2];
        input.read_exact(&mut head)?;
        input.read_exact(&mut u32_buf)?;
        let input_size = u32::from_le_bytes(u32_buf) as usize;
        input.read_exact(&mut u32_buf)?;
        let output_size = u32::from_le_bytes(u32_buf) as usize;
        specs.push(LayerSpec {
            kind: kind_from_code(head[0])?,
            activation: activation_from_code(head[1])?,
            input_size,
            output_size,
        });
    }
    let mut net = RecurrentNet::<F>::new(&specs, 0)?;
    let count = net.param_count();
    let mut params = Vec::with_capacity(count);
    if std::mem::size_of::<F>() == 4 {
        let mut buf = [0u8; 4];
        for _ in 0..count {
            input.read_exact(&mut buf)?;
            params.push(F::from_f64_lossy(f32::from_le_bytes(buf) as f64));
        }
    } else {
        let mut buf = [0u8; 8];
        for _ in 0..count {
            input.read_exact(&mut buf)?;
            params.push(F::from_f64_lossy(f64::from_le_bytes(buf)));
        }
    }
    net.set_params_from_vec(&params)?;
    Ok(net)
}
