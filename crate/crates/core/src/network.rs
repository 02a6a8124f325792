//! Feed-forward networks with sparse affine layers.
//!
//! A network is a list of layers `(T_1, σ_1), …, (T_{L-1}, σ_{L-1}), T_L`
//! where every `T_l` is an affine map stored as sorted coordinate triplets and
//! every `σ_l` assigns each neuron either the identity or the rectified power
//! `max{0, t}^r`. The realization is the plain composition of those maps.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::par;

/// Per-neuron activation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    /// `max{0, t}^r` with `r >= 1`; `r = 1` is the ReLU.
    RectPower(u32),
}

impl Activation {
    #[inline]
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Activation::Identity => t,
            Activation::RectPower(1) => t.max(0.0),
            Activation::RectPower(2) => {
                let u = t.max(0.0);
                u * u
            }
            Activation::RectPower(r) => t.max(0.0).powi(r as i32),
        }
    }
}

/// Sparse affine map `x ↦ A x + b` in canonical (row, col) order.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
    bias: Vec<f64>,
}

impl AffineMap {
    /// Builds a map from triplets. Zero values are dropped, duplicates rejected.
    pub fn new(
        rows: usize,
        cols: usize,
        mut entries: Vec<(usize, usize, f64)>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if bias.len() != rows {
            return Err(Error::Dimension {
                context: "affine bias",
                expected: rows,
                got: bias.len(),
            });
        }
        entries.retain(|e| e.2 != 0.0);
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in entries.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::Contract(format!(
                    "duplicate matrix entry ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        if let Some(e) = entries.iter().find(|e| e.0 >= rows || e.1 >= cols) {
            return Err(Error::Contract(format!(
                "entry ({}, {}) outside a {}x{} matrix",
                e.0, e.1, rows, cols
            )));
        }
        Ok(AffineMap {
            rows,
            cols,
            entries,
            bias,
        })
    }

    /// Builds a map from triplets, summing duplicates before dropping zeros.
    pub fn accumulate(
        rows: usize,
        cols: usize,
        mut entries: Vec<(usize, usize, f64)>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(last) if (last.0, last.1) == (e.0, e.1) => last.2 += e.2,
                _ => merged.push(e),
            }
        }
        AffineMap::new(rows, cols, merged, bias)
    }

    /// Dense constructor; zeros are dropped.
    pub fn from_dense(matrix: &[Vec<f64>], bias: Vec<f64>) -> Result<Self> {
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, |r| r.len());
        let mut entries = Vec::new();
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension {
                    context: "dense matrix row",
                    expected: cols,
                    got: row.len(),
                });
            }
            entries.extend(row.iter().enumerate().map(|(j, &v)| (i, j, v)));
        }
        AffineMap::new(rows, cols, entries, bias)
    }

    pub fn identity(dim: usize) -> Self {
        AffineMap {
            rows: dim,
            cols: dim,
            entries: (0..dim).map(|i| (i, i, 1.0)).collect(),
            bias: vec![0.0; dim],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Number of stored (nonzero) matrix entries; the bias is not counted.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `out = A x + b`, accumulating each row in column order.
    #[inline]
    pub fn apply_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        for &(i, j, v) in &self.entries {
            out[i] += v * x[j];
        }
    }
}

/// Points per evaluation block.
const BLOCK: usize = 128;

/// One affine map plus the activations applied to its outputs.
///
/// The last layer of a network carries no activations.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub map: AffineMap,
    pub activations: Option<Vec<Activation>>,
}

/// A feed-forward network; immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    r: u32,
    layers: Vec<Layer>,
}

impl Network {
    /// Validates the layer chain and the activation class.
    pub fn new(r: u32, layers: Vec<Layer>) -> Result<Self> {
        if r == 0 {
            return Err(Error::Parameter("activation power r must be >= 1".into()));
        }
        if layers.is_empty() {
            return Err(Error::Contract("a network needs at least one layer".into()));
        }
        let last = layers.len() - 1;
        for (l, layer) in layers.iter().enumerate() {
            if l > 0 && layers[l - 1].map.rows != layer.map.cols {
                return Err(Error::Dimension {
                    context: "layer chaining",
                    expected: layers[l - 1].map.rows,
                    got: layer.map.cols,
                });
            }
            match (&layer.activations, l == last) {
                (None, true) => {}
                (Some(_), true) => {
                    return Err(Error::Contract(
                        "the output layer carries no activations".into(),
                    ))
                }
                (None, false) => {
                    return Err(Error::Contract(format!(
                        "hidden layer {l} lacks activations"
                    )))
                }
                (Some(acts), false) => {
                    if acts.len() != layer.map.rows {
                        return Err(Error::Dimension {
                            context: "activation vector",
                            expected: layer.map.rows,
                            got: acts.len(),
                        });
                    }
                    if let Some(bad) = acts.iter().find(|a| match a {
                        Activation::Identity => false,
                        Activation::RectPower(p) => *p != r,
                    }) {
                        return Err(Error::Contract(format!(
                            "activation {bad:?} does not match network class r = {r}"
                        )));
                    }
                }
            }
        }
        Ok(Network { r, layers })
    }

    /// Single affine layer.
    pub fn affine(r: u32, map: AffineMap) -> Result<Self> {
        Network::new(
            r,
            vec![Layer {
                map,
                activations: None,
            }],
        )
    }

    /// The identity map on `R^dim` as a one-layer network.
    pub fn identity(r: u32, dim: usize) -> Self {
        Network {
            r,
            layers: vec![Layer {
                map: AffineMap::identity(dim),
                activations: None,
            }],
        }
    }

    pub fn r_class(&self) -> u32 {
        self.r
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].map.cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].map.rows
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    /// Total number of nonzero matrix entries over all layers.
    pub fn weight_count(&self) -> usize {
        self.layers.iter().map(|l| l.map.nnz()).sum()
    }

    /// Number of hidden neurons.
    pub fn neuron_count(&self) -> usize {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.map.rows)
            .sum()
    }

    fn max_width(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.map.rows.max(l.map.cols))
            .max()
            .unwrap_or(0)
    }

    /// Realization at a single point.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                context: "network input",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut a = Vec::with_capacity(self.max_width());
        let mut b = Vec::with_capacity(self.max_width());
        a.extend_from_slice(x);
        self.eval_with(&mut a, &mut b);
        Ok(a)
    }

    /// Convenience for scalar-to-scalar networks.
    pub fn eval_scalar(&self, x: f64) -> Result<f64> {
        let y = self.eval(&[x])?;
        if y.len() != 1 {
            return Err(Error::Dimension {
                context: "scalar network output",
                expected: 1,
                got: y.len(),
            });
        }
        Ok(y[0])
    }

    /// Runs the layers on `a` in place, using `b` as scratch.
    #[inline]
    fn eval_with(&self, a: &mut Vec<f64>, b: &mut Vec<f64>) {
        for layer in &self.layers {
            layer.map.apply_into(a, b);
            if let Some(acts) = &layer.activations {
                for (v, act) in b.iter_mut().zip(acts) {
                    *v = act.apply(*v);
                }
            }
            std::mem::swap(a, b);
        }
    }

    fn check_batch(&self, points: &[f64]) -> Result<usize> {
        let d = self.input_dim();
        if d == 0 || points.len() % d != 0 {
            return Err(Error::Dimension {
                context: "batch input (flattened, row-major)",
                expected: d,
                got: points.len(),
            });
        }
        Ok(points.len() / d)
    }

    /// Evaluates points block by block, neuron-major within a block.
    /// Each output accumulates in the same order as [`Network::eval`].
    fn eval_chunk(&self, points: &[f64], out: &mut [f64]) {
        let (d, m) = (self.input_dim(), self.output_dim());
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (x, y) in points.chunks(d * BLOCK).zip(out.chunks_mut(m * BLOCK)) {
            let bs = x.len() / d;
            a.clear();
            a.resize(d * bs, 0.0);
            for (t, p) in x.chunks(d).enumerate() {
                for (k, v) in p.iter().enumerate() {
                    a[k * bs + t] = *v;
                }
            }
            for layer in &self.layers {
                let map = &layer.map;
                b.clear();
                b.resize(map.rows * bs, 0.0);
                for (row, bias) in b.chunks_mut(bs).zip(&map.bias) {
                    row.fill(*bias);
                }
                for &(i, j, v) in &map.entries {
                    let src = &a[j * bs..(j + 1) * bs];
                    let dst = &mut b[i * bs..(i + 1) * bs];
                    for (o, s) in dst.iter_mut().zip(src) {
                        *o += v * s;
                    }
                }
                if let Some(acts) = &layer.activations {
                    for (row, act) in b.chunks_mut(bs).zip(acts) {
                        match *act {
                            Activation::Identity => {}
                            Activation::RectPower(1) => row.iter_mut().for_each(|v| *v = v.max(0.0)),
                            act => row.iter_mut().for_each(|v| *v = act.apply(*v)),
                        }
                    }
                }
                std::mem::swap(&mut a, &mut b);
            }
            for (t, q) in y.chunks_mut(m).enumerate() {
                for (k, v) in q.iter_mut().enumerate() {
                    *v = a[k * bs + t];
                }
            }
        }
    }

    /// Evaluates a flattened row-major batch on the calling thread.
    pub fn eval_batch_seq(&self, points: &[f64]) -> Result<Vec<f64>> {
        let n = self.check_batch(points)?;
        let mut out = vec![0.0; n * self.output_dim()];
        self.eval_chunk(points, &mut out);
        Ok(out)
    }

    /// Evaluates a flattened row-major batch, in parallel when enabled.
    pub fn eval_batch(&self, points: &[f64]) -> Result<Vec<f64>> {
        let n = self.check_batch(points)?;
        let (d, m) = (self.input_dim(), self.output_dim());
        let mut out = vec![0.0; n * m];
        par::for_each_chunk(&mut out, BLOCK * m, |ci, ys| {
            let start = ci * BLOCK * d;
            let count = ys.len() / m;
            self.eval_chunk(&points[start..start + count * d], ys);
        });
        Ok(out)
    }

    /// JSON document (format version 1).
    pub fn to_json(&self) -> Result<Value> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut triplets = Vec::with_capacity(layer.map.nnz());
            for &(i, j, v) in &layer.map.entries {
                if !v.is_finite() {
                    return Err(Error::Contract(format!(
                        "layer {l} entry ({i}, {j}) is not finite"
                    )));
                }
                triplets.push(json!([i, j, v]));
            }
            if layer.map.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::Contract(format!("layer {l} bias is not finite")));
            }
            let mut obj = serde_json::Map::new();
            obj.insert("rows".into(), json!(layer.map.rows));
            obj.insert("cols".into(), json!(layer.map.cols));
            obj.insert("triplets".into(), Value::Array(triplets));
            obj.insert("bias".into(), json!(layer.map.bias));
            if let Some(acts) = &layer.activations {
                let tags: Vec<&str> = acts
                    .iter()
                    .map(|a| match a {
                        Activation::Identity => "id",
                        Activation::RectPower(_) => "rp",
                    })
                    .collect();
                obj.insert("activations".into(), json!(tags));
            }
            layers.push(Value::Object(obj));
        }
        Ok(json!({
            "version": 1,
            "r": self.r,
            "input_dim": self.input_dim(),
            "layers": layers,
        }))
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(self.to_json()?.to_string())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value =
            serde_json::from_str(s).map_err(|e| Error::parse("<document>", e.to_string()))?;
        Network::from_json(&v)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let version = get_uint(v, "version", "version")?;
        if version != 1 {
            return Err(Error::parse(
                "version",
                format!("unsupported version {version}"),
            ));
        }
        let r =
            u32::try_from(get_uint(v, "r", "r")?).map_err(|_| Error::parse("r", "out of range"))?;
        if r == 0 {
            return Err(Error::parse("r", "must be >= 1"));
        }
        let input_dim = get_uint(v, "input_dim", "input_dim")? as usize;
        let raw = v
            .get("layers")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::parse("layers", "missing or not an array"))?;
        if raw.is_empty() {
            return Err(Error::parse("layers", "a network needs at least one layer"));
        }
        let mut layers = Vec::with_capacity(raw.len());
        for (l, lv) in raw.iter().enumerate() {
            let at = |f: &str| format!("layers[{l}].{f}");
            let rows = get_uint(lv, "rows", &at("rows"))? as usize;
            let cols = get_uint(lv, "cols", &at("cols"))? as usize;
            if l == 0 && cols != input_dim {
                return Err(Error::parse(at("cols"), "does not match input_dim"));
            }
            let trip = lv
                .get("triplets")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::parse(at("triplets"), "missing or not an array"))?;
            let mut entries = Vec::with_capacity(trip.len());
            for (t, tv) in trip.iter().enumerate() {
                let field = format!("layers[{l}].triplets[{t}]");
                let a = tv
                    .as_array()
                    .filter(|a| a.len() == 3)
                    .ok_or_else(|| Error::parse(&field, "expected [i, j, v]"))?;
                let i = a[0]
                    .as_u64()
                    .ok_or_else(|| Error::parse(&field, "bad row index"))?;
                let j = a[1]
                    .as_u64()
                    .ok_or_else(|| Error::parse(&field, "bad column index"))?;
                let w = a[2]
                    .as_f64()
                    .ok_or_else(|| Error::parse(&field, "bad value"))?;
                entries.push((i as usize, j as usize, w));
            }
            let bias = lv
                .get("bias")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::parse(at("bias"), "missing or not an array"))?
                .iter()
                .enumerate()
                .map(|(b, x)| {
                    x.as_f64().ok_or_else(|| {
                        Error::parse(format!("layers[{l}].bias[{b}]"), "not a number")
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let map = AffineMap::new(rows, cols, entries, bias)
                .map_err(|e| Error::parse(format!("layers[{l}]"), e.to_string()))?;
            let activations = match lv.get("activations") {
                None => None,
                Some(av) => {
                    let tags = av
                        .as_array()
                        .ok_or_else(|| Error::parse(at("activations"), "not an array"))?;
                    let acts = tags
                        .iter()
                        .enumerate()
                        .map(|(k, t)| match t.as_str() {
                            Some("id") => Ok(Activation::Identity),
                            Some("rp") => Ok(Activation::RectPower(r)),
                            _ => Err(Error::parse(
                                format!("layers[{l}].activations[{k}]"),
                                "expected \"id\" or \"rp\"",
                            )),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Some(acts)
                }
            };
            layers.push(Layer { map, activations });
        }
        Network::new(r, layers).map_err(|e| Error::parse("layers", e.to_string()))
    }
}

fn get_uint(v: &Value, key: &str, field: &str) -> Result<u64> {
    v.get(key)
        .ok_or_else(|| Error::parse(field, "missing"))?
        .as_u64()
        .ok_or_else(|| Error::parse(field, "expected a nonnegative integer"))
}

/// A random network with sparse layers and mixed activations.
///
/// Widths lie in `1..=4`, depth in `1..=max_depth`, roughly half of the
/// matrix entries are nonzero and hidden neurons are rectifiers with
/// probability 3/4.
pub fn random_network<R: rand::Rng>(
    rng: &mut R,
    input_dim: usize,
    output_dim: usize,
    max_depth: usize,
    r: u32,
) -> Network {
    let depth = rng.gen_range(1..=max_depth.max(1));
    let mut widths = vec![input_dim];
    widths.extend((1..depth).map(|_| rng.gen_range(1..=4)));
    widths.push(output_dim);
    let layers = (0..depth)
        .map(|l| {
            let (cols, rows) = (widths[l], widths[l + 1]);
            let mut entries = Vec::new();
            for i in 0..rows {
                for j in 0..cols {
                    if rng.gen_bool(0.5) {
                        entries.push((i, j, rng.gen_range(-1.5..1.5)));
                    }
                }
            }
            let bias = (0..rows).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let activations = (l + 1 < depth).then(|| {
                (0..rows)
                    .map(|_| {
                        if rng.gen_bool(0.75) {
                            Activation::RectPower(r)
                        } else {
                            Activation::Identity
                        }
                    })
                    .collect()
            });
            Layer {
                map: AffineMap::new(rows, cols, entries, bias).unwrap(),
                activations,
            }
        })
        .collect();
    Network::new(r, layers).unwrap()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// `2ρ(x) − 4ρ(x−1/2) + 2ρ(x−1)`: the hat on `[0, 1]` with peak 1 at 1/2.
    pub(crate) fn hat() -> Network {
        let l1 = AffineMap::new(
            3,
            1,
            vec![(0, 0, 1.0), (1, 0, 1.0), (2, 0, 1.0)],
            vec![0.0, -0.5, -1.0],
        )
        .unwrap();
        let l2 = AffineMap::new(
            1,
            3,
            vec![(0, 0, 2.0), (0, 1, -4.0), (0, 2, 2.0)],
            vec![0.0],
        )
        .unwrap();
        Network::new(
            1,
            vec![
                Layer {
                    map: l1,
                    activations: Some(vec![Activation::RectPower(1); 3]),
                },
                Layer {
                    map: l2,
                    activations: None,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn identity_layer_passes_value() {
        let net = Network::identity(1, 1);
        assert_eq!(net.eval(&[5.0]).unwrap(), vec![5.0]);
    }

    #[test]
    fn hat_values_and_count() {
        let h = hat();
        assert_eq!(h.eval_scalar(0.5).unwrap(), 1.0);
        assert_eq!(h.eval_scalar(-1.0).unwrap(), 0.0);
        assert_eq!(h.eval_scalar(2.0).unwrap(), 0.0);
        assert_eq!(h.weight_count(), 6);
        assert_eq!(h.depth(), 2);
    }

    #[test]
    fn rect_power_two_neuron() {
        let l1 = AffineMap::new(1, 1, vec![(0, 0, 1.0)], vec![0.0]).unwrap();
        let l2 = AffineMap::new(1, 1, vec![(0, 0, 1.0)], vec![0.0]).unwrap();
        let net = Network::new(
            2,
            vec![
                Layer {
                    map: l1,
                    activations: Some(vec![Activation::RectPower(2)]),
                },
                Layer {
                    map: l2,
                    activations: None,
                },
            ],
        )
        .unwrap();
        assert_eq!(net.eval_scalar(3.0).unwrap(), 9.0);
        assert_eq!(net.eval_scalar(-3.0).unwrap(), 0.0);
    }

    #[test]
    fn zero_matrices_count_nothing() {
        let l1 = AffineMap::new(2, 1, vec![(0, 0, 0.0)], vec![1.0, 2.0]).unwrap();
        let l2 = AffineMap::new(1, 2, vec![], vec![3.0]).unwrap();
        let net = Network::new(
            1,
            vec![
                Layer {
                    map: l1,
                    activations: Some(vec![Activation::RectPower(1); 2]),
                },
                Layer {
                    map: l2,
                    activations: None,
                },
            ],
        )
        .unwrap();
        assert_eq!(net.weight_count(), 0);
        assert_eq!(net.eval_scalar(7.0).unwrap(), 3.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(matches!(
            hat().eval(&[1.0, 2.0]),
            Err(Error::Dimension { .. })
        ));
        assert!(hat().eval_batch(&[]).unwrap().is_empty());
    }

    #[test]
    fn duplicate_entries_rejected() {
        let e = AffineMap::new(1, 1, vec![(0, 0, 1.0), (0, 0, 2.0)], vec![0.0]);
        assert!(matches!(e, Err(Error::Contract(_))));
        let ok = AffineMap::accumulate(1, 1, vec![(0, 0, 1.0), (0, 0, 2.0)], vec![0.0]).unwrap();
        assert_eq!(ok.entries(), &[(0, 0, 3.0)]);
    }

    #[test]
    fn mismatched_activation_class_rejected() {
        let l1 = AffineMap::identity(1);
        let res = Network::new(
            1,
            vec![
                Layer {
                    map: l1.clone(),
                    activations: Some(vec![Activation::RectPower(2)]),
                },
                Layer {
                    map: l1,
                    activations: None,
                },
            ],
        );
        assert!(res.is_err());
    }

    #[test]
    fn json_round_trip_and_field_errors() {
        let h = hat();
        let s = h.to_json_string().unwrap();
        let back = Network::from_json_str(&s).unwrap();
        assert_eq!(back, h);
        let zero_layers = r#"{"version":1,"r":1,"input_dim":1,"layers":[]}"#;
        assert!(Network::from_json_str(zero_layers).is_err());
        let bad = s.replace("\"rp\"", "\"relu\"");
        match Network::from_json_str(&bad) {
            Err(Error::Parse { field, .. }) => assert!(field.contains("activations"), "{field}"),
            other => panic!("unexpected {other:?}"),
        }
        let bad_bias = r#"{"version":1,"r":1,"input_dim":1,"layers":[{"rows":1,"cols":1,"triplets":[[0,0,1.0]],"bias":["x"]}]}"#;
        match Network::from_json_str(bad_bias) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "layers[0].bias[0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn batch_matches_pointwise() {
        let h = hat();
        let xs: Vec<f64> = (0..300).map(|i| -0.5 + i as f64 / 150.0).collect();
        let ys = h.eval_batch(&xs).unwrap();
        let ys_seq = h.eval_batch_seq(&xs).unwrap();
        assert_eq!(ys, ys_seq);
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(h.eval_scalar(*x).unwrap(), *y);
        }
    }
}
