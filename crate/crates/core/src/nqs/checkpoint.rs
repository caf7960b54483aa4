//! Binary checkpoints: a short text header followed by named f64 tensors.
//!
//! ```text
//! DEPTHCERT-CKPT v1
//! kind=separable
//! n=6
//! partition=3|3
//! rank=1
//! hidden_amp=64
//! hidden_phase=64
//! seed=7
//! blocks=64:64,64:64
//!
//! <tensor>*   name_len u32 | name | ndim u32 | dims u64* | values f64*  (little endian)
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{EnsembleModel, NqsModel, PureNqs, RbmHalf, SnqsModel};
use crate::partitions::parse_label;
use crate::{Error, Result};

/// First line of every checkpoint file.
pub const CHECKPOINT_MAGIC: &str = "DEPTHCERT-CKPT v1";

/// Metadata stored alongside the parameters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub seed: u64,
}

fn ckpt_err(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn components(model: &NqsModel) -> Vec<&SnqsModel> {
    match model {
        NqsModel::Pure(_) => Vec::new(),
        NqsModel::Separable(m) => vec![m],
        NqsModel::Ensemble(e) => e.components.iter().collect(),
    }
}

fn pure_blocks(model: &NqsModel) -> Vec<(String, &PureNqs)> {
    match model {
        NqsModel::Pure(m) => vec![("psi".to_string(), m)],
        _ => components(model)
            .iter()
            .enumerate()
            .flat_map(|(c, comp)| {
                comp.blocks
                    .iter()
                    .enumerate()
                    .map(move |(b, m)| (format!("c{c}.b{b}"), m))
            })
            .collect(),
    }
}

fn write_tensor(w: &mut impl Write, name: &str, dims: &[usize], values: &[f64]) -> Result<()> {
    w.write_all(&(name.len() as u32).to_le_bytes())?;
    w.write_all(name.as_bytes())?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for d in dims {
        w.write_all(&(*d as u64).to_le_bytes())?;
    }
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn write_half(w: &mut impl Write, prefix: &str, half: &RbmHalf) -> Result<()> {
    write_tensor(
        w,
        &format!("{prefix}.visible"),
        &[half.n_visible],
        &half.visible_bias,
    )?;
    write_tensor(
        w,
        &format!("{prefix}.hidden"),
        &[half.n_hidden],
        &half.hidden_bias,
    )?;
    write_tensor(
        w,
        &format!("{prefix}.weights"),
        &[half.n_visible, half.n_hidden],
        &half.weights,
    )
}

/// Serialize a model to any writer.
pub fn write_checkpoint(w: &mut impl Write, model: &NqsModel, meta: &CheckpointMeta) -> Result<()> {
    let blocks = pure_blocks(model);
    let rank = match model {
        NqsModel::Ensemble(e) => e.rank(),
        _ => 1,
    };
    let sizes: Vec<String> = blocks
        .iter()
        .map(|(_, m)| format!("{}:{}", m.amplitude.n_hidden, m.phase.n_hidden))
        .collect();
    let (ha, hp) = blocks
        .iter()
        .map(|(_, m)| (m.amplitude.n_hidden, m.phase.n_hidden))
        .max()
        .unwrap_or((0, 0));
    writeln!(w, "{CHECKPOINT_MAGIC}")?;
    writeln!(w, "kind={}", model.kind())?;
    writeln!(w, "n={}", model.n_qubits())?;
    writeln!(w, "partition={}", model.partition().label())?;
    writeln!(w, "rank={rank}")?;
    writeln!(w, "hidden_amp={ha}")?;
    writeln!(w, "hidden_phase={hp}")?;
    writeln!(w, "seed={}", meta.seed)?;
    writeln!(w, "blocks={}", sizes.join(","))?;
    writeln!(w)?;
    for (name, m) in &blocks {
        write_half(w, &format!("{name}.amp"), &m.amplitude)?;
        write_half(w, &format!("{name}.phase"), &m.phase)?;
    }
    if let NqsModel::Ensemble(e) = model {
        write_tensor(w, "logits", &[e.rank()], &e.logits)?;
    }
    Ok(())
}

/// Write a checkpoint file.
pub fn save_checkpoint(path: &Path, model: &NqsModel, meta: &CheckpointMeta) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, model, meta)?;
    w.flush()?;
    Ok(())
}

struct Tensor {
    name: String,
    dims: Vec<usize>,
    values: Vec<f64>,
}

fn read_u32(r: &mut impl Read) -> Result<Option<u32>> {
    let mut buf = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        let k = r.read(&mut buf[got..])?;
        if k == 0 {
            return if got == 0 {
                Ok(None)
            } else {
                Err(ckpt_err("truncated tensor header"))
            };
        }
        got += k;
    }
    Ok(Some(u32::from_le_bytes(buf)))
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| ckpt_err(format!("truncated {what}")))
}

fn read_tensor(r: &mut impl Read) -> Result<Option<Tensor>> {
    let Some(len) = read_u32(r)? else {
        return Ok(None);
    };
    if len > 4096 {
        return Err(ckpt_err("tensor name too long"));
    }
    let mut name = vec![0u8; len as usize];
    read_exact(r, &mut name, "tensor name")?;
    let name = String::from_utf8(name).map_err(|_| ckpt_err("tensor name is not UTF-8"))?;
    let ndim = read_u32(r)?.ok_or_else(|| ckpt_err("truncated tensor rank"))?;
    if ndim > 8 {
        return Err(ckpt_err(format!("tensor {name} has rank {ndim}")));
    }
    let mut dims = Vec::with_capacity(ndim as usize);
    for _ in 0..ndim {
        let mut b = [0u8; 8];
        read_exact(r, &mut b, "tensor dims")?;
        dims.push(u64::from_le_bytes(b) as usize);
    }
    let count = dims
        .iter()
        .try_fold(1usize, |a, d| a.checked_mul(*d))
        .filter(|c| *c <= 1 << 28)
        .ok_or_else(|| ckpt_err(format!("tensor {name} is too large")))?;
    let mut values = Vec::with_capacity(count);
    let mut b = [0u8; 8];
    for _ in 0..count {
        read_exact(r, &mut b, "tensor payload")?;
        values.push(f64::from_le_bytes(b));
    }
    Ok(Some(Tensor { name, dims, values }))
}

fn take_half(tensors: &mut std::vec::IntoIter<Tensor>, prefix: &str, m: usize) -> Result<RbmHalf> {
    let mut next = |suffix: &str| -> Result<Tensor> {
        let want = format!("{prefix}.{suffix}");
        let t = tensors
            .next()
            .ok_or_else(|| ckpt_err(format!("missing tensor {want}")))?;
        if t.name != want {
            return Err(ckpt_err(format!(
                "expected tensor {want}, found {}",
                t.name
            )));
        }
        Ok(t)
    };
    let visible = next("visible")?;
    let hidden = next("hidden")?;
    let weights = next("weights")?;
    let h = hidden.values.len();
    if visible.dims != [m] || hidden.dims.len() != 1 || weights.dims != [m, h] {
        return Err(ckpt_err(format!(
            "tensor shapes under {prefix} do not match the header"
        )));
    }
    Ok(RbmHalf {
        n_visible: m,
        n_hidden: h,
        visible_bias: visible.values,
        hidden_bias: hidden.values,
        weights: weights.values,
    })
}

/// Parse a checkpoint from any reader.
pub fn read_checkpoint(r: &mut impl BufRead) -> Result<(NqsModel, CheckpointMeta)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != CHECKPOINT_MAGIC {
        return Err(ckpt_err("not a checkpoint (bad magic line)"));
    }
    let mut fields = std::collections::BTreeMap::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(ckpt_err("header not terminated"));
        }
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| ckpt_err(format!("malformed header line {l:?}")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    let field = |k: &str| {
        fields
            .get(k)
            .ok_or_else(|| ckpt_err(format!("header lacks {k}")))
    };
    let num = |k: &str| -> Result<u64> {
        field(k)?
            .parse()
            .map_err(|_| ckpt_err(format!("header field {k} is not an integer")))
    };
    let kind = field("kind")?.clone();
    let n = num("n")? as usize;
    let rank = num("rank")? as usize;
    let meta = CheckpointMeta { seed: num("seed")? };
    let partition = parse_label(field("partition")?, n)?;

    let mut tensors = Vec::new();
    while let Some(t) = read_tensor(r)? {
        tensors.push(t);
    }
    let mut it = tensors.into_iter();
    let mut take_pure = |name: &str, m: usize| -> Result<PureNqs> {
        Ok(PureNqs {
            n_qubits: m,
            amplitude: take_half(&mut it, &format!("{name}.amp"), m)?,
            phase: take_half(&mut it, &format!("{name}.phase"), m)?,
        })
    };
    let mut take_component = |c: usize| -> Result<SnqsModel> {
        let blocks = partition
            .blocks()
            .iter()
            .enumerate()
            .map(|(b, blk)| take_pure(&format!("c{c}.b{b}"), blk.len()))
            .collect::<Result<Vec<_>>>()?;
        SnqsModel::new(partition.clone(), blocks)
    };
    let model = match kind.as_str() {
        "pure" => NqsModel::Pure(take_pure("psi", n)?),
        "separable" => NqsModel::Separable(take_component(0)?),
        "ensemble" => {
            let comps = (0..rank)
                .map(&mut take_component)
                .collect::<Result<Vec<_>>>()?;
            let logits = it
                .next()
                .filter(|t| t.name == "logits" && t.dims == [rank])
                .ok_or_else(|| ckpt_err("missing or malformed logits tensor"))?;
            NqsModel::Ensemble(EnsembleModel::new(comps, logits.values)?)
        }
        other => return Err(ckpt_err(format!("unknown model kind {other:?}"))),
    };
    if let Some(extra) = it.next() {
        return Err(ckpt_err(format!(
            "unexpected trailing tensor {}",
            extra.name
        )));
    }
    Ok((model, meta))
}

/// Read a checkpoint file.
pub fn load_checkpoint(path: &Path) -> Result<(NqsModel, CheckpointMeta)> {
    read_checkpoint(&mut BufReader::new(File::open(path)?))
}
