//! Model checkpoint serialization: little-endian `RFNN` container with a
//! layer descriptor table followed by float32 parameter blobs.

use super::graph::Graph;
use super::layers::Layer;
use super::tensor::Tensor;
use crate::error::{Result, RfError};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::io::{Read, Write};

pub const GRAPH_MAGIC: &[u8; 4] = b"RFNN";
pub const GRAPH_VERSION: u32 = 1;

const KIND_CONV: u8 = 1;
const KIND_CONVT: u8 = 2;
const KIND_DENSE: u8 = 3;
const KIND_RELU: u8 = 4;
const KIND_CNORM: u8 = 5;
const KIND_GAP: u8 = 6;

fn layer_descriptor(layer: &Layer<f32>) -> (u8, [u32; 5]) {
    match layer {
        Layer::Conv1d {
            in_ch,
            out_ch,
            kernel,
            stride,
            pad,
            ..
        } => (
            KIND_CONV,
            [*in_ch as u32, *out_ch as u32, *kernel as u32, *stride as u32, *pad as u32],
        ),
        Layer::ConvT1d {
            in_ch,
            out_ch,
            kernel,
            stride,
            pad,
            ..
        } => (
            KIND_CONVT,
            [*in_ch as u32, *out_ch as u32, *kernel as u32, *stride as u32, *pad as u32],
        ),
        Layer::Dense { in_f, out_f, .. } => (KIND_DENSE, [*in_f as u32, *out_f as u32, 0, 0, 0]),
        Layer::Relu => (KIND_RELU, [0; 5]),
        Layer::ChannelNorm { ch, .. } => (KIND_CNORM, [*ch as u32, 0, 0, 0, 0]),
        Layer::GlobalAvgPool => (KIND_GAP, [0; 5]),
    }
}

fn write_tensor<W: Write>(w: &mut W, t: &Tensor<f32>) -> Result<()> {
    w.write_u32::<LittleEndian>(t.shape().len() as u32)?;
    for &d in t.shape() {
        w.write_u32::<LittleEndian>(d as u32)?;
    }
    for &v in t.data() {
        w.write_f32::<LittleEndian>(v)?;
    }
    Ok(())
}

fn read_tensor<R: Read>(r: &mut R) -> Result<Tensor<f32>> {
    let ndims = r.read_u32::<LittleEndian>()? as usize;
    if ndims > 8 {
        return Err(RfError::Format(format!("implausible tensor rank {ndims}")));
    }
    let mut shape = Vec::with_capacity(ndims);
    for _ in 0..ndims {
        shape.push(r.read_u32::<LittleEndian>()? as usize);
    }
    let n: usize = shape.iter().product();
    let mut data = vec![0f32; n];
    r.read_f32_into::<LittleEndian>(&mut data)?;
    Tensor::from_vec(&shape, data)
}

/// Serializes a graph (descriptor table, then parameter blobs).
pub fn write_graph<W: Write>(w: &mut W, graph: &Graph<f32>) -> Result<()> {
    w.write_all(GRAPH_MAGIC)?;
    w.write_u32::<LittleEndian>(GRAPH_VERSION)?;
    w.write_u32::<LittleEndian>(graph.input_shape().len() as u32)?;
    for &d in graph.input_shape() {
        w.write_u32::<LittleEndian>(d as u32)?;
    }
    w.write_u32::<LittleEndian>(graph.nodes().len() as u32)?;
    for node in graph.nodes() {
        let (kind, fields) = layer_descriptor(&node.layer);
        w.write_u32::<LittleEndian>(node.input as u32)?;
        w.write_u8(kind)?;
        for f in fields {
            w.write_u32::<LittleEndian>(f)?;
        }
    }
    for node in graph.nodes() {
        for p in node.layer.params() {
            write_tensor(w, p)?;
        }
    }
    Ok(())
}

/// Reads a graph previously written by [`write_graph`].
pub fn read_graph<R: Read>(r: &mut R) -> Result<Graph<f32>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != GRAPH_MAGIC {
        return Err(RfError::Format(format!(
            "bad graph magic {:?}, expected {:?}",
            magic, GRAPH_MAGIC
        )));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != GRAPH_VERSION {
        return Err(RfError::Format(format!(
            "unsupported graph version {version} (supported: {GRAPH_VERSION})"
        )));
    }
    let ndims = r.read_u32::<LittleEndian>()? as usize;
    let mut input_shape = Vec::with_capacity(ndims);
    for _ in 0..ndims {
        input_shape.push(r.read_u32::<LittleEndian>()? as usize);
    }
    let node_count = r.read_u32::<LittleEndian>()? as usize;
    let mut descriptors = Vec::with_capacity(node_count);
    for _ in 0..node_count {
        let input = r.read_u32::<LittleEndian>()? as usize;
        let kind = r.read_u8()?;
        let mut fields = [0u32; 5];
        for f in &mut fields {
            *f = r.read_u32::<LittleEndian>()?;
        }
        descriptors.push((input, kind, fields));
    }
    let mut graph = Graph::new(&input_shape);
    let mut pending: Vec<(usize, Layer<f32>)> = Vec::with_capacity(node_count);
    for (input, kind, f) in &descriptors {
        let layer = match *kind {
            KIND_CONV => Layer::Conv1d {
                in_ch: f[0] as usize,
                out_ch: f[1] as usize,
                kernel: f[2] as usize,
                stride: f[3] as usize,
                pad: f[4] as usize,
                w: Tensor::zeros(&[f[1] as usize, (f[0] * f[2]) as usize]),
                b: Tensor::zeros(&[f[1] as usize]),
            },
            KIND_CONVT => Layer::ConvT1d {
                in_ch: f[0] as usize,
                out_ch: f[1] as usize,
                kernel: f[2] as usize,
                stride: f[3] as usize,
                pad: f[4] as usize,
                w: Tensor::zeros(&[f[0] as usize, (f[1] * f[2]) as usize]),
                b: Tensor::zeros(&[f[1] as usize]),
            },
            KIND_DENSE => Layer::Dense {
                in_f: f[0] as usize,
                out_f: f[1] as usize,
                w: Tensor::zeros(&[f[1] as usize, f[0] as usize]),
                b: Tensor::zeros(&[f[1] as usize]),
            },
            KIND_RELU => Layer::Relu,
            KIND_CNORM => Layer::channel_norm(f[0] as usize),
            KIND_GAP => Layer::GlobalAvgPool,
            other => return Err(RfError::Format(format!("unknown layer kind {other}"))),
        };
        pending.push((*input, layer));
    }
    for (input, mut layer) in pending {
        for p in layer.params_mut() {
            let loaded = read_tensor(r)?;
            if loaded.shape() != p.shape() {
                return Err(RfError::Format(format!(
                    "parameter blob shape {:?} does not match descriptor {:?}",
                    loaded.shape(),
                    p.shape()
                )));
            }
            *p = loaded;
        }
        let at = graph.nodes().len();
        graph.push(layer);
        if graph.nodes()[at].input != input {
            return Err(RfError::Format(
                "non-sequential graphs are not supported by this checkpoint version".into(),
            ));
        }
    }
    graph.value_shapes()?;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from;

    fn sample_graph() -> Graph<f32> {
        let mut rng = rng_from(5);
        let mut g = Graph::new(&[2, 16]);
        g.push(Layer::conv1d(2, 4, 3, 1, 1, &mut rng));
        g.push(Layer::Relu);
        g.push(Layer::channel_norm(4));
        g.push(Layer::GlobalAvgPool);
        g.push(Layer::dense(4, 3, &mut rng));
        g
    }

    #[test]
    fn graph_roundtrip_is_bit_exact() {
        let g = sample_graph();
        let mut buf = Vec::new();
        write_graph(&mut buf, &g).unwrap();
        let g2 = read_graph(&mut buf.as_slice()).unwrap();
        let mut buf2 = Vec::new();
        write_graph(&mut buf2, &g2).unwrap();
        assert_eq!(buf, buf2);
        for (a, b) in g.params().iter().zip(g2.params()) {
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn bad_magic_is_a_format_error() {
        let g = sample_graph();
        let mut buf = Vec::new();
        write_graph(&mut buf, &g).unwrap();
        buf[0] = b'X';
        match read_graph(&mut buf.as_slice()) {
            Err(RfError::Format(_)) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn future_version_is_rejected() {
        let g = sample_graph();
        let mut buf = Vec::new();
        write_graph(&mut buf, &g).unwrap();
        buf[4..8].copy_from_slice(&9u32.to_le_bytes());
        match read_graph(&mut buf.as_slice()) {
            Err(RfError::Format(msg)) => assert!(msg.contains("version")),
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_errors() {
        let g = sample_graph();
        let mut buf = Vec::new();
        write_graph(&mut buf, &g).unwrap();
        buf.truncate(buf.len() - 7);
        assert!(read_graph(&mut buf.as_slice()).is_err());
    }
}
