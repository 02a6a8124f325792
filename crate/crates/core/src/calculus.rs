//! Network combinators with exact weight and depth accounting.
//!
//! | combinator            | depth                 | weights                              |
//! |-----------------------|-----------------------|--------------------------------------|
//! | [`scale`]             | unchanged             | `≤ W(Φ)`                              |
//! | [`add`]               | `max_i depth(Φ_i)`    | `≤ min{d1,d2}·spread + Σ W(Φ_i)`      |
//! | [`tuple`]             | `max_i depth(Φ_i)`    | `≤ min{d,K−1}·spread + Σ W(Φ_i)`      |
//! | [`compose`]           | `depth_1 + depth_2`   | `= W(Φ_1) + W(Φ_2)`                   |
//! | [`precompose_affine`] | unchanged             | unchanged (`a ≠ 0`)                   |
//!
//! `spread` is the difference between the largest and smallest member depth.
//! Depth alignment either carries finished outputs forward through identity
//! neurons or carries the input forward to members that start late; the
//! cheaper of the two is used.

use crate::error::{Error, Result};
use crate::network::{Activation, AffineMap, Layer, Network};

/// Outcome flag of [`precompose_affine`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AffineStatus {
    Ok,
    /// `a = 0`: the result ignores its input.
    ConstantInput,
}

/// `c · R(Φ)`, realized by scaling the output layer.
pub fn scale(c: f64, net: &Network) -> Network {
    let r = net.r_class();
    let last = net.depth() - 1;
    let layers = net
        .layers()
        .iter()
        .enumerate()
        .map(|(l, layer)| {
            if c == 0.0 {
                let m = &layer.map;
                Layer {
                    map: AffineMap::new(m.rows(), m.cols(), vec![], vec![0.0; m.rows()]).unwrap(),
                    activations: layer.activations.clone(),
                }
            } else if l == last {
                let m = &layer.map;
                let entries = m.entries().iter().map(|&(i, j, v)| (i, j, c * v)).collect();
                let bias = m.bias().iter().map(|b| c * b).collect();
                Layer {
                    map: AffineMap::new(m.rows(), m.cols(), entries, bias).unwrap(),
                    activations: None,
                }
            } else {
                layer.clone()
            }
        })
        .collect();
    Network::new(r, layers).expect("scaling preserves structure")
}

/// `R(Φ_2) ∘ R(Φ_1)`: the inner output layer becomes an identity hidden layer.
pub fn compose(inner: &Network, outer: &Network) -> Result<Network> {
    if inner.output_dim() != outer.input_dim() {
        return Err(Error::Dimension {
            context: "compose (inner output vs outer input)",
            expected: outer.input_dim(),
            got: inner.output_dim(),
        });
    }
    let r = common_class(&[inner, outer])?;
    let mut layers = inner.clone().into_layers();
    let seam = layers.last_mut().unwrap();
    seam.activations = Some(vec![Activation::Identity; seam.map.rows()]);
    layers.extend(outer.clone().into_layers());
    Network::new(r, layers)
}

/// Composes a chain `nets[0]`, then `nets[1]`, …
pub fn compose_all(nets: &[Network]) -> Result<Network> {
    let (first, rest) = nets
        .split_first()
        .ok_or_else(|| Error::Parameter("compose_all needs at least one network".into()))?;
    rest.iter()
        .try_fold(first.clone(), |acc, n| compose(&acc, n))
}

/// `R(Φ) ∘ (x ↦ a x − b)`.
pub fn precompose_affine(net: &Network, a: f64, b: &[f64]) -> Result<(Network, AffineStatus)> {
    if b.len() != net.input_dim() {
        return Err(Error::Dimension {
            context: "precompose_affine shift",
            expected: net.input_dim(),
            got: b.len(),
        });
    }
    let mut layers = net.clone().into_layers();
    let first = &layers[0].map;
    let mut bias = first.bias().to_vec();
    for &(i, j, v) in first.entries() {
        bias[i] -= v * b[j];
    }
    let entries = first
        .entries()
        .iter()
        .map(|&(i, j, v)| (i, j, a * v))
        .collect();
    layers[0].map = AffineMap::new(first.rows(), first.cols(), entries, bias)?;
    let status = if a == 0.0 {
        AffineStatus::ConstantInput
    } else {
        AffineStatus::Ok
    };
    Ok((Network::new(net.r_class(), layers)?, status))
}

/// `Σ_i R(Φ_i)` for networks sharing input and output dimensions.
pub fn add(nets: &[Network]) -> Result<Network> {
    let (d1, _) = common_dims(nets, "add")?;
    let members: Vec<Member> = nets
        .iter()
        .map(|n| Member {
            net: n,
            inputs: (0..d1).collect(),
        })
        .collect();
    stack(&members, d1, Combine::Sum)
}

/// `(R(Φ_1), …, R(Φ_N))` for networks sharing their input dimension.
pub fn tuple(nets: &[Network]) -> Result<Network> {
    let d = common_input(nets, "tuple")?;
    let members: Vec<Member> = nets
        .iter()
        .map(|n| Member {
            net: n,
            inputs: (0..d).collect(),
        })
        .collect();
    stack(&members, d, Combine::Stack)
}

/// Block-diagonal combination: `Φ_i` reads its own slice of the input.
pub fn parallel(nets: &[Network]) -> Result<Network> {
    if nets.is_empty() {
        return Err(Error::Parameter(
            "parallel needs at least one network".into(),
        ));
    }
    let mut offset = 0;
    let members: Vec<Member> = nets
        .iter()
        .map(|n| {
            let m = Member {
                net: n,
                inputs: (offset..offset + n.input_dim()).collect(),
            };
            offset += n.input_dim();
            m
        })
        .collect();
    stack(&members, offset, Combine::Stack)
}

/// Weight allowance of [`add`] beyond `Σ W(Φ_i)`.
pub fn add_slack(nets: &[Network]) -> usize {
    let spread = depth_spread(nets);
    nets.first()
        .map_or(0, |n| n.input_dim().min(n.output_dim()) * spread)
}

/// Weight allowance of [`tuple`] beyond `Σ W(Φ_i)`.
pub fn tuple_slack(nets: &[Network]) -> usize {
    let k: usize = nets.iter().map(Network::output_dim).sum();
    let spread = depth_spread(nets);
    nets.first()
        .map_or(0, |n| n.input_dim().min(k.saturating_sub(1)) * spread)
}

fn depth_spread(nets: &[Network]) -> usize {
    let max = nets.iter().map(Network::depth).max().unwrap_or(0);
    let min = nets.iter().map(Network::depth).min().unwrap_or(0);
    max - min
}

fn common_class(nets: &[&Network]) -> Result<u32> {
    let r = nets[0].r_class();
    if nets.iter().any(|n| n.r_class() != r) {
        return Err(Error::Contract(
            "networks of different activation classes cannot be combined".into(),
        ));
    }
    Ok(r)
}

fn common_input(nets: &[Network], ctx: &'static str) -> Result<usize> {
    let first = nets
        .first()
        .ok_or_else(|| Error::Parameter(format!("{ctx} needs at least one network")))?;
    let d = first.input_dim();
    if let Some(n) = nets.iter().find(|n| n.input_dim() != d) {
        return Err(Error::Dimension {
            context: ctx,
            expected: d,
            got: n.input_dim(),
        });
    }
    Ok(d)
}

fn common_dims(nets: &[Network], ctx: &'static str) -> Result<(usize, usize)> {
    let d1 = common_input(nets, ctx)?;
    let d2 = nets[0].output_dim();
    if let Some(n) = nets.iter().find(|n| n.output_dim() != d2) {
        return Err(Error::Dimension {
            context: ctx,
            expected: d2,
            got: n.output_dim(),
        });
    }
    Ok((d1, d2))
}

struct Member<'a> {
    net: &'a Network,
    /// Combined-input column feeding each of the member's inputs.
    inputs: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Combine {
    Sum,
    Stack,
}

/// Per-layer scratch for assembling one combined affine map.
struct LayerBuild {
    rows: usize,
    entries: Vec<(usize, usize, f64)>,
    bias: Vec<f64>,
    acts: Vec<Activation>,
}

impl LayerBuild {
    fn new() -> Self {
        LayerBuild {
            rows: 0,
            entries: Vec::new(),
            bias: Vec::new(),
            acts: Vec::new(),
        }
    }

    fn reserve(&mut self, n: usize, act: Activation) -> usize {
        let off = self.rows;
        self.rows += n;
        self.bias.resize(self.rows, 0.0);
        self.acts.resize(self.rows, act);
        off
    }

    fn finish(self, cols: usize, hidden: bool) -> Result<Layer> {
        Ok(Layer {
            map: AffineMap::accumulate(self.rows, cols, self.entries, self.bias)?,
            activations: hidden.then_some(self.acts),
        })
    }
}

fn stack(members: &[Member], input_dim: usize, combine: Combine) -> Result<Network> {
    let nets: Vec<&Network> = members.iter().map(|m| m.net).collect();
    let r = common_class(&nets)?;
    let depth = nets.iter().map(|n| n.depth()).max().unwrap();
    let min_depth = nets.iter().map(|n| n.depth()).min().unwrap();
    let out_offsets: Vec<usize> = match combine {
        Combine::Sum => vec![0; members.len()],
        Combine::Stack => nets
            .iter()
            .scan(0, |acc, n| {
                let o = *acc;
                *acc += n.output_dim();
                Some(o)
            })
            .collect(),
    };
    let output_dim = match combine {
        Combine::Sum => nets[0].output_dim(),
        Combine::Stack => nets.iter().map(|n| n.output_dim()).sum(),
    };

    let carry_cost = match combine {
        Combine::Sum => output_dim * (depth - min_depth),
        Combine::Stack => nets
            .iter()
            .map(|n| n.output_dim() * (depth - n.depth()))
            .sum(),
    };
    // copy layers needed per input column when members are end-aligned
    let mut copy_len = vec![0usize; input_dim];
    for m in members {
        let start = depth - m.net.depth();
        for &c in &m.inputs {
            copy_len[c] = copy_len[c].max(start);
        }
    }
    let copy_cost: usize = copy_len.iter().sum();

    let layers = if carry_cost <= copy_cost {
        stack_start_aligned(members, input_dim, output_dim, &out_offsets, depth, combine)?
    } else {
        stack_end_aligned(members, input_dim, &copy_len, &out_offsets, depth)?
    };
    let net = Network::new(r, layers)?;
    debug_assert_eq!(net.output_dim(), output_dim);
    Ok(net)
}

/// All members start at layer 1; finished outputs ride identity neurons.
fn stack_start_aligned(
    members: &[Member],
    input_dim: usize,
    output_dim: usize,
    out_offsets: &[usize],
    depth: usize,
    combine: Combine,
) -> Result<Vec<Layer>> {
    let mut layers = Vec::with_capacity(depth);
    // previous-layer offsets: member hidden block, member carry block, shared accumulator
    let mut prev_hidden: Vec<Option<usize>> = vec![None; members.len()];
    let mut prev_carry: Vec<Option<usize>> = vec![None; members.len()];
    let mut prev_acc: Option<usize> = None;
    let mut prev_rows = input_dim;

    for l in 0..depth {
        let is_out = l == depth - 1;
        let mut lb = LayerBuild::new();
        let mut hidden = vec![None; members.len()];
        let mut carry = vec![None; members.len()];
        let mut acc = None;
        if is_out {
            lb.reserve(output_dim, Activation::Identity);
        }
        for (i, m) in members.iter().enumerate() {
            let d_i = m.net.depth();
            if l > d_i - 1 {
                // carried output of a finished member
                let k = m.net.output_dim();
                let target = match (combine, is_out) {
                    (_, true) => Some(out_offsets[i]),
                    (Combine::Stack, false) => Some(lb.reserve(k, Activation::Identity)),
                    (Combine::Sum, false) => None,
                };
                if let (Some(t), Some(src)) = (target, prev_carry[i]) {
                    carry[i] = Some(t);
                    lb.entries.extend((0..k).map(|q| (t + q, src + q, 1.0)));
                }
                continue;
            }
            let layer = &m.net.layers()[l];
            let target = if l < d_i - 1 {
                let off = lb.reserve(layer.map.rows(), Activation::Identity);
                let acts = layer.activations.as_ref().unwrap();
                lb.acts[off..off + acts.len()].copy_from_slice(acts);
                hidden[i] = Some(off);
                off
            } else if is_out {
                out_offsets[i]
            } else {
                match combine {
                    Combine::Stack => {
                        let off = lb.reserve(layer.map.rows(), Activation::Identity);
                        carry[i] = Some(off);
                        off
                    }
                    Combine::Sum => {
                        *acc.get_or_insert_with(|| lb.reserve(output_dim, Activation::Identity))
                    }
                }
            };
            for &(q, c, v) in layer.map.entries() {
                let col = if l == 0 {
                    m.inputs[c]
                } else {
                    prev_hidden[i].unwrap() + c
                };
                lb.entries.push((target + q, col, v));
            }
            for (q, b) in layer.map.bias().iter().enumerate() {
                lb.bias[target + q] += b;
            }
        }
        if combine == Combine::Sum {
            if let Some(src) = prev_acc {
                let t = if is_out {
                    0
                } else {
                    *acc.get_or_insert_with(|| lb.reserve(output_dim, Activation::Identity))
                };
                lb.entries
                    .extend((0..output_dim).map(|q| (t + q, src + q, 1.0)));
            }
        }
        let rows = lb.rows;
        layers.push(lb.finish(prev_rows, !is_out)?);
        prev_rows = rows;
        prev_hidden = hidden;
        prev_carry = carry;
        prev_acc = acc;
    }
    Ok(layers)
}

/// All members end at the output layer; late starters read copied inputs.
fn stack_end_aligned(
    members: &[Member],
    input_dim: usize,
    copy_len: &[usize],
    out_offsets: &[usize],
    depth: usize,
) -> Result<Vec<Layer>> {
    let output_dim = out_offsets
        .iter()
        .zip(members)
        .map(|(o, m)| o + m.net.output_dim())
        .max()
        .unwrap();
    let mut layers = Vec::with_capacity(depth);
    let mut prev_copy: Vec<Option<usize>> = vec![None; input_dim];
    let mut prev_hidden: Vec<Option<usize>> = vec![None; members.len()];
    let mut prev_rows = input_dim;
    for l in 0..depth {
        let is_out = l == depth - 1;
        let mut lb = LayerBuild::new();
        if is_out {
            lb.reserve(output_dim, Activation::Identity);
        }
        let mut copy = vec![None; input_dim];
        for c in 0..input_dim {
            if l < copy_len[c] {
                let off = lb.reserve(1, Activation::Identity);
                let src = if l == 0 { c } else { prev_copy[c].unwrap() };
                lb.entries.push((off, src, 1.0));
                copy[c] = Some(off);
            }
        }
        let mut hidden = vec![None; members.len()];
        for (i, m) in members.iter().enumerate() {
            let start = depth - m.net.depth();
            if l < start {
                continue;
            }
            let layer = &m.net.layers()[l - start];
            let target = if is_out {
                out_offsets[i]
            } else {
                let off = lb.reserve(layer.map.rows(), Activation::Identity);
                let acts = layer.activations.as_ref().unwrap();
                lb.acts[off..off + acts.len()].copy_from_slice(acts);
                hidden[i] = Some(off);
                off
            };
            for &(q, c, v) in layer.map.entries() {
                let col = if l == start {
                    if l == 0 {
                        m.inputs[c]
                    } else {
                        prev_copy[m.inputs[c]].unwrap()
                    }
                } else {
                    prev_hidden[i].unwrap() + c
                };
                lb.entries.push((target + q, col, v));
            }
            for (q, b) in layer.map.bias().iter().enumerate() {
                lb.bias[target + q] += b;
            }
        }
        let rows = lb.rows;
        layers.push(lb.finish(prev_rows, !is_out)?);
        prev_rows = rows;
        prev_copy = copy;
        prev_hidden = hidden;
    }
    Ok(layers)
}
