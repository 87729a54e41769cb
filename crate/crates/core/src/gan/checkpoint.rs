//! `GANCKPT1` checkpoints.
//!
//! A text header followed by one `f32raw` block per tensor:
//!
//! ```text
//! GANCKPT1
//! latent_dim 200
//! sample_shape 2 1
//! generator 2
//! dense 32 200 relu
//! dense 2 32 tanh_unit
//! discriminator 2
//! dense 32 2 relu
//! dense 1 32 sigmoid
//! end
//! ```
//!
//! `dense <out> <in> <activation>` describes each layer; after `end\n` come,
//! generator first, every layer's weight matrix (`in` wide, `out` high) and
//! bias (`out` wide, 1 high). Parameters are stored as `f32`.

use std::fmt::Write as _;

use ndarray::{Array1, Array2};

use super::{Activation, Dense, GanError, MlpParams, Result};
use crate::patchio::{read_f32raw_prefix, write_f32raw, F32Raw};

pub const CHECKPOINT_MAGIC: &str = "GANCKPT1";
const MAX_LAYERS: usize = 64;
const MAX_HEADER_LINES: usize = 2 * MAX_LAYERS + 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GanCheckpoint {
    /// Width and height generated samples are reshaped to.
    pub sample_shape: (usize, usize),
    pub generator: MlpParams,
    pub discriminator: MlpParams,
}

fn ckpt_err(msg: impl Into<String>) -> GanError {
    GanError::Checkpoint(msg.into())
}

pub fn save_checkpoint(ckpt: &GanCheckpoint) -> Vec<u8> {
    let mut header = String::new();
    let mut line = |s: String| {
        header.push_str(&s);
        header.push('\n');
    };
    line(CHECKPOINT_MAGIC.to_string());
    line(format!("latent_dim {}", ckpt.generator.input_dim()));
    line(format!("sample_shape {} {}", ckpt.sample_shape.0, ckpt.sample_shape.1));
    for (name, net) in [("generator", &ckpt.generator), ("discriminator", &ckpt.discriminator)] {
        line(format!("{name} {}", net.layers().len()));
        for l in net.layers() {
            let mut s = String::new();
            write!(s, "dense {} {} {}", l.outputs(), l.inputs(), l.activation.tag()).expect("string");
            line(s);
        }
    }
    line("end".to_string());
    let mut out = header.into_bytes();
    for net in [&ckpt.generator, &ckpt.discriminator] {
        for l in net.layers() {
            out.extend(write_f32raw(&F32Raw {
                width: l.inputs(),
                height: l.outputs(),
                data: l.weights.iter().map(|&v| v as f32).collect(),
            }));
            out.extend(write_f32raw(&F32Raw {
                width: l.outputs(),
                height: 1,
                data: l.bias.iter().map(|&v| v as f32).collect(),
            }));
        }
    }
    out
}

struct LayerSpec {
    outputs: usize,
    inputs: usize,
    activation: Activation,
}

struct Header<'a> {
    lines: std::str::Split<'a, char>,
    line_no: usize,
}

impl<'a> Header<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        self.line_no += 1;
        if self.line_no > MAX_HEADER_LINES {
            return Err(ckpt_err("header too long"));
        }
        self.lines.next().ok_or_else(|| ckpt_err(format!("header ends at line {}", self.line_no)))
    }

    fn keyed(&mut self, key: &str, count: usize) -> Result<Vec<usize>> {
        let line = self.next_line()?;
        let mut parts = line.split(' ');
        if parts.next() != Some(key) {
            return Err(ckpt_err(format!("line {}: expected `{key}`", self.line_no)));
        }
        let values = parts
            .map(|p| p.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| ckpt_err(format!("line {}: bad number in `{line}`", self.line_no)))?;
        if values.len() != count {
            return Err(ckpt_err(format!("line {}: `{key}` takes {count} values", self.line_no)));
        }
        Ok(values)
    }

    fn network(&mut self, name: &str) -> Result<Vec<LayerSpec>> {
        let count = self.keyed(name, 1)?[0];
        if count == 0 || count > MAX_LAYERS {
            return Err(ckpt_err(format!("{name} layer count {count} out of range")));
        }
        (0..count)
            .map(|_| {
                let line = self.next_line()?;
                let parts: Vec<&str> = line.split(' ').collect();
                match parts.as_slice() {
                    ["dense", out, inp, act] => {
                        let dims = (out.parse::<usize>(), inp.parse::<usize>());
                        let activation = Activation::from_tag(act);
                        match (dims, activation) {
                            ((Ok(outputs), Ok(inputs)), Some(activation)) => {
                                Ok(LayerSpec { outputs, inputs, activation })
                            }
                            _ => Err(ckpt_err(format!("line {}: bad layer `{line}`", self.line_no))),
                        }
                    }
                    _ => Err(ckpt_err(format!("line {}: expected `dense <out> <in> <act>`", self.line_no))),
                }
            })
            .collect()
    }
}

fn read_tensor(bytes: &[u8], pos: &mut usize, width: usize, height: usize) -> Result<Vec<f64>> {
    let (m, used) =
        read_f32raw_prefix(&bytes[*pos..]).map_err(|e| ckpt_err(format!("tensor at byte {}: {e}", *pos)))?;
    if (m.width, m.height) != (width, height) {
        return Err(ckpt_err(format!(
            "tensor at byte {} is {}x{}, header says {width}x{height}",
            *pos, m.width, m.height
        )));
    }
    *pos += used;
    Ok(m.data.into_iter().map(f64::from).collect())
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<GanCheckpoint> {
    let magic_line = format!("{CHECKPOINT_MAGIC}\n");
    if !bytes.starts_with(magic_line.as_bytes()) {
        return Err(ckpt_err(format!("missing {CHECKPOINT_MAGIC} magic line")));
    }
    let end_marker = b"\nend\n";
    let header_end = bytes
        .windows(end_marker.len())
        .position(|w| w == end_marker)
        .ok_or_else(|| ckpt_err("header has no `end` line"))?
        + end_marker.len();
    let text = std::str::from_utf8(&bytes[..header_end]).map_err(|_| ckpt_err("header is not UTF-8"))?;
    let mut header = Header { lines: text.split('\n'), line_no: 0 };
    header.next_line()?;
    let latent_dim = header.keyed("latent_dim", 1)?[0];
    let shape = header.keyed("sample_shape", 2)?;
    let g_spec = header.network("generator")?;
    let d_spec = header.network("discriminator")?;
    if header.next_line()? != "end" {
        return Err(ckpt_err(format!("line {}: expected `end`", header.line_no)));
    }

    let mut pos = header_end;
    let mut build = |specs: &[LayerSpec]| -> Result<MlpParams> {
        let mut layers = Vec::with_capacity(specs.len());
        for s in specs {
            let w = read_tensor(bytes, &mut pos, s.inputs, s.outputs)?;
            let b = read_tensor(bytes, &mut pos, s.outputs, 1)?;
            layers.push(Dense {
                weights: Array2::from_shape_vec((s.outputs, s.inputs), w).expect("checked shape"),
                bias: Array1::from(b),
                activation: s.activation,
            });
        }
        MlpParams::new(layers).map_err(|e| ckpt_err(e.to_string()))
    };
    let generator = build(&g_spec)?;
    let discriminator = build(&d_spec)?;
    if pos != bytes.len() {
        return Err(ckpt_err(format!("{} trailing bytes", bytes.len() - pos)));
    }
    if generator.input_dim() != latent_dim {
        return Err(ckpt_err("latent_dim disagrees with the generator input layer"));
    }
    if generator.output_dim() != discriminator.input_dim() {
        return Err(ckpt_err("generator output does not feed the discriminator"));
    }
    if discriminator.output_dim() != 1 {
        return Err(ckpt_err("discriminator must emit one value"));
    }
    if shape[0].checked_mul(shape[1]) != Some(generator.output_dim()) {
        return Err(ckpt_err(format!(
            "sample_shape {}x{} does not hold {} generator outputs",
            shape[0],
            shape[1],
            generator.output_dim()
        )));
    }
    Ok(GanCheckpoint { sample_shape: (shape[0], shape[1]), generator, discriminator })
}
