//! Checkpoint container: a one-line JSON header describing the networks,
//! a newline, then every parameter as little-endian float64 in the canonical
//! flat order (per net, per layer: weight row-major, then bias).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::net::{Activation, DenseLayer, DenseNet};

pub const FORMAT_TAG: &str = "pcd-checkpoint-v1";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayerMeta {
    pub k_in: usize,
    pub k_out: usize,
    pub activation: String,
    /// Persistent power-iteration state.
    pub u: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetMeta {
    pub name: String,
    pub layers: Vec<LayerMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_lip: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub srvt: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub srvt_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pad_to: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_offset: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format: String,
    pub step: u64,
    pub param_count: usize,
    pub nets: Vec<NetMeta>,
}

pub fn net_meta(name: &str, net: &DenseNet) -> NetMeta {
    NetMeta {
        name: name.to_string(),
        layers: net
            .layers
            .iter()
            .map(|l| LayerMeta {
                k_in: l.k_in(),
                k_out: l.k_out(),
                activation: l.activation.tag(),
                u: l.u.clone(),
            })
            .collect(),
        k_lip: None,
        srvt: None,
        srvt_eps: None,
        pad_to: None,
        output_offset: None,
    }
}

/// Rebuild a network from its meta plus a slice of the flat parameter
/// vector; returns the net and the number of values consumed.
pub fn net_from_meta(meta: &NetMeta, params: &[f64]) -> Result<(DenseNet, usize)> {
    let mut layers = Vec::with_capacity(meta.layers.len());
    let mut off = 0;
    for lm in &meta.layers {
        let activation = Activation::from_tag(&lm.activation).ok_or_else(|| {
            Error::Checkpoint(format!("unknown activation tag {:?}", lm.activation))
        })?;
        if lm.u.len() != lm.k_out {
            return Err(Error::Checkpoint(format!(
                "sn state has length {}, expected {}",
                lm.u.len(),
                lm.k_out
            )));
        }
        let wlen = lm.k_in * lm.k_out;
        if off + wlen + lm.k_out > params.len() {
            return Err(Error::Checkpoint(
                "parameter payload shorter than header claims".into(),
            ));
        }
        let weight = Matrix {
            rows: lm.k_out,
            cols: lm.k_in,
            data: params[off..off + wlen].to_vec(),
        };
        off += wlen;
        let bias = params[off..off + lm.k_out].to_vec();
        off += lm.k_out;
        layers.push(DenseLayer {
            weight,
            bias,
            activation,
            u: lm.u.clone(),
        });
    }
    Ok((DenseNet { layers }, off))
}

pub fn write_checkpoint(path: &Path, meta: &CheckpointMeta, params: &[f64]) -> Result<()> {
    if meta.param_count != params.len() {
        return Err(Error::Checkpoint(format!(
            "header claims {} parameters, got {}",
            meta.param_count,
            params.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    let header = serde_json::to_string(meta)?;
    debug_assert!(!header.contains('\n'));
    w.write_all(header.as_bytes())?;
    w.write_all(b"\n")?;
    for x in params {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<(CheckpointMeta, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Checkpoint("missing header line".into()))?;
    let meta: CheckpointMeta = serde_json::from_slice(&bytes[..newline])?;
    if meta.format != FORMAT_TAG {
        return Err(Error::Checkpoint(format!(
            "unknown format tag {:?}",
            meta.format
        )));
    }
    let payload = &bytes[newline + 1..];
    if payload.len() != meta.param_count * 8 {
        return Err(Error::Checkpoint(format!(
            "payload is {} bytes, expected {}",
            payload.len(),
            meta.param_count * 8
        )));
    }
    let params: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((meta, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_bits() {
        let net = DenseNet::init(&[2, 5, 3], 77, 1);
        let meta = CheckpointMeta {
            format: FORMAT_TAG.to_string(),
            step: 123,
            param_count: net.param_count(),
            nets: vec![net_meta("critic", &net)],
        };
        let params = net.flatten_params();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.bin");
        write_checkpoint(&path, &meta, &params).unwrap();
        let (meta2, params2) = read_checkpoint(&path).unwrap();
        assert_eq!(meta2.step, 123);
        assert_eq!(params2.len(), params.len());
        for (a, b) in params.iter().zip(&params2) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let (net2, used) = net_from_meta(&meta2.nets[0], &params2).unwrap();
        assert_eq!(used, params.len());
        assert_eq!(net2.layers.len(), net.layers.len());
        for (a, b) in net.layers.iter().zip(&net2.layers) {
            assert_eq!(a.weight, b.weight);
            assert_eq!(a.bias, b.bias);
            assert_eq!(a.u, b.u);
            assert_eq!(a.activation, b.activation);
        }
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let net = DenseNet::init(&[2, 3], 7, 1);
        let meta = CheckpointMeta {
            format: FORMAT_TAG.to_string(),
            step: 0,
            param_count: net.param_count(),
            nets: vec![net_meta("g", &net)],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.bin");
        write_checkpoint(&path, &meta, &net.flatten_params()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(
            read_checkpoint(&path),
            Err(Error::Checkpoint(_))
        ));
    }
}
