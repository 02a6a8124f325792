//! Multiplication and spline networks.
//!
//! ReLU gadgets approximate products through the squaring sawtooth
//! construction; RePU(2) gadgets are exact via polarization.

use crate::calculus::{add, compose, parallel, scale};
use crate::error::{Error, Result};
use crate::network::{Activation, AffineMap, Layer, Network};
use crate::piecewise::PiecewisePoly;

const RELU: Activation = Activation::RectPower(1);
const REPU2: Activation = Activation::RectPower(2);

fn layer(
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
    bias: Vec<f64>,
    activations: Option<Vec<Activation>>,
) -> Layer {
    Layer {
        map: AffineMap::new(rows, cols, entries, bias).expect("gadget layer is well formed"),
        activations,
    }
}

/// `g_m = g ∘ … ∘ g` with the hat `g(x) = 2ρ(x) − 4ρ(x−½) + 2ρ(x−1)`.
///
/// Depth `m + 1`; `W = 6` for `m = 1` and `4m + 3` otherwise.
pub fn sawtooth(m: usize) -> Result<Network> {
    if m == 0 {
        return Err(Error::Parameter("sawtooth needs m ≥ 1".into()));
    }
    let mut layers = vec![layer(
        3,
        1,
        vec![(0, 0, 1.0), (1, 0, 1.0), (2, 0, 1.0)],
        vec![0.0, -0.5, -1.0],
        Some(vec![RELU; 3]),
    )];
    if m >= 2 {
        // g maps R into [0, 1], where g = 2ρ(y) − 4ρ(y−½)
        let e = vec![
            (0, 0, 2.0),
            (0, 1, -4.0),
            (0, 2, 2.0),
            (1, 0, 2.0),
            (1, 1, -4.0),
            (1, 2, 2.0),
        ];
        layers.push(layer(2, 3, e, vec![0.0, -0.5], Some(vec![RELU; 2])));
        for _ in 2..m {
            let e = vec![(0, 0, 2.0), (0, 1, -4.0), (1, 0, 2.0), (1, 1, -4.0)];
            layers.push(layer(2, 2, e, vec![0.0, -0.5], Some(vec![RELU; 2])));
        }
        layers.push(layer(
            1,
            2,
            vec![(0, 0, 2.0), (0, 1, -4.0)],
            vec![0.0],
            None,
        ));
    } else {
        layers.push(layer(
            1,
            3,
            vec![(0, 0, 2.0), (0, 1, -4.0), (0, 2, 2.0)],
            vec![0.0],
            None,
        ));
    }
    Network::new(1, layers)
}

/// `f_m(x) = x − Σ_{s≤m} g_s(x)/4^s`, the dyadic interpolant of `x²` on `[0, 1]`.
///
/// Depth `m + 1`; `W = 8` for `m = 1` and `7m + 3` otherwise.
pub fn square_unit(m: usize) -> Result<Network> {
    if m == 0 {
        return Err(Error::Parameter("square_unit needs m ≥ 1".into()));
    }
    let id = Activation::Identity;
    // neuron 0 accumulates x − Σ g_s/4^s, the rest carry the sawtooth
    let mut layers = vec![layer(
        4,
        1,
        vec![(0, 0, 1.0), (1, 0, 1.0), (2, 0, 1.0), (3, 0, 1.0)],
        vec![0.0, 0.0, -0.5, -1.0],
        Some(vec![id, RELU, RELU, RELU]),
    )];
    let q = 0.25;
    if m == 1 {
        let e = vec![
            (0, 0, 1.0),
            (0, 1, -2.0 * q),
            (0, 2, 4.0 * q),
            (0, 3, -2.0 * q),
        ];
        layers.push(layer(1, 4, e, vec![0.0], None));
        return Network::new(1, layers);
    }
    let e = vec![
        (0, 0, 1.0),
        (0, 1, -2.0 * q),
        (0, 2, 4.0 * q),
        (0, 3, -2.0 * q),
        (1, 1, 2.0),
        (1, 2, -4.0),
        (1, 3, 2.0),
        (2, 1, 2.0),
        (2, 2, -4.0),
        (2, 3, 2.0),
    ];
    layers.push(layer(
        3,
        4,
        e,
        vec![0.0, 0.0, -0.5],
        Some(vec![id, RELU, RELU]),
    ));
    let mut w = q;
    for _ in 2..m {
        w *= 0.25;
        let e = vec![
            (0, 0, 1.0),
            (0, 1, -2.0 * w),
            (0, 2, 4.0 * w),
            (1, 1, 2.0),
            (1, 2, -4.0),
            (2, 1, 2.0),
            (2, 2, -4.0),
        ];
        layers.push(layer(
            3,
            3,
            e,
            vec![0.0, 0.0, -0.5],
            Some(vec![id, RELU, RELU]),
        ));
    }
    w *= 0.25;
    layers.push(layer(
        1,
        3,
        vec![(0, 0, 1.0), (0, 1, -2.0 * w), (0, 2, 4.0 * w)],
        vec![0.0],
        None,
    ));
    Network::new(1, layers)
}

/// Sawtooth depth used by [`mult2_relu`]: smallest `m` with `2K²·2^{−2m−1} ≤ ε`.
pub fn mult2_levels(k: f64, eps: f64) -> usize {
    let mut m = 1;
    while 2.0 * k * k * 2f64.powi(-2 * m as i32 - 1) > eps {
        m += 1;
    }
    m
}

fn check_k_eps(k: f64, eps: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Parameter(format!(
            "range bound K must be positive, got {k}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!(
            "accuracy ε must lie in (0, 1), got {eps}"
        )));
    }
    Ok(())
}

/// Approximate product `(x, y) ↦ xy`, within `ε` on `[−K, K]²`.
///
/// Exactly zero when either input is zero and exactly symmetric.
pub fn mult2_relu(k: f64, eps: f64) -> Result<Network> {
    check_k_eps(k, eps)?;
    let m = mult2_levels(k, eps);
    let s = 1.0 / (2.0 * k);
    // |x+y|, |x−y| scaled into [0, 1]
    let front = Network::new(
        1,
        vec![
            layer(
                4,
                2,
                vec![
                    (0, 0, 1.0),
                    (0, 1, 1.0),
                    (1, 0, -1.0),
                    (1, 1, -1.0),
                    (2, 0, 1.0),
                    (2, 1, -1.0),
                    (3, 0, -1.0),
                    (3, 1, 1.0),
                ],
                vec![0.0; 4],
                Some(vec![RELU; 4]),
            ),
            layer(
                2,
                4,
                vec![(0, 0, s), (0, 1, s), (1, 2, s), (1, 3, s)],
                vec![0.0; 2],
                None,
            ),
        ],
    )?;
    let sq = square_unit(m)?;
    let squares = parallel(&[sq.clone(), sq])?;
    let k2 = k * k;
    let back = Network::affine(
        1,
        AffineMap::new(1, 2, vec![(0, 0, k2), (0, 1, -k2)], vec![0.0])?,
    )?;
    compose(&compose(&front, &squares)?, &back)
}

/// Binary product tree over `factors` using `node(K_a, K_b)` for each pair.
///
/// Returns the network and the bound on its output magnitude.
fn product_tree<F>(bounds: Vec<f64>, r: u32, mut node: F) -> Result<Network>
where
    F: FnMut(f64, f64) -> Result<(Network, f64)>,
{
    let mut bounds = bounds;
    let mut net: Option<Network> = None;
    while bounds.len() > 1 {
        let mut parts = Vec::new();
        let mut next = Vec::new();
        for pair in bounds.chunks(2) {
            if let [a, b] = *pair {
                let (n, bound) = node(a, b)?;
                parts.push(n);
                next.push(bound);
            } else {
                parts.push(Network::identity(r, 1));
                next.push(pair[0]);
            }
        }
        let level = parallel(&parts)?;
        net = Some(match net {
            None => level,
            Some(n) => compose(&n, &level)?,
        });
        bounds = next;
    }
    Ok(net.unwrap_or_else(|| Network::identity(r, 1)))
}

/// Approximate `x_1 ⋯ x_d` within `ε` on `[−K, K]^d` by a tree of [`mult2_relu`].
///
/// Each node gets accuracy `ε/((d−1)(K+1)^d)`; its range bound is the larger
/// child bound, and its own output bound is the product of child bounds plus
/// the node accuracy.
pub fn mult_d_relu(d: usize, k: f64, eps: f64) -> Result<Network> {
    if d < 2 {
        return Err(Error::Parameter(format!(
            "mult_d_relu needs d ≥ 2, got {d}"
        )));
    }
    check_k_eps(k, eps)?;
    let eps_node = eps / ((d - 1) as f64 * (k + 1.0).powi(d as i32));
    product_tree(vec![k; d], 1, |a, b| {
        Ok((mult2_relu(a.max(b), eps_node)?, a * b + eps_node))
    })
}

/// Exact `xy` via `(ρ₂(x+y) + ρ₂(−x−y) − ρ₂(x−y) − ρ₂(y−x))/4`; `W = 12`, depth 2.
pub fn polarization_repu2() -> Network {
    Network::new(
        2,
        vec![
            layer(
                4,
                2,
                vec![
                    (0, 0, 1.0),
                    (0, 1, 1.0),
                    (1, 0, -1.0),
                    (1, 1, -1.0),
                    (2, 0, 1.0),
                    (2, 1, -1.0),
                    (3, 0, -1.0),
                    (3, 1, 1.0),
                ],
                vec![0.0; 4],
                Some(vec![REPU2; 4]),
            ),
            layer(
                1,
                4,
                vec![(0, 0, 0.25), (0, 1, 0.25), (0, 2, -0.25), (0, 3, -0.25)],
                vec![0.0],
                None,
            ),
        ],
    )
    .expect("polarization layers are well formed")
}

/// Exact `x_1 ⋯ x_d` on `R^d` with RePU(2) activations.
pub fn mult_d_repu2(d: usize) -> Result<Network> {
    if d == 0 {
        return Err(Error::Parameter("mult_d_repu2 needs d ≥ 1".into()));
    }
    let node = polarization_repu2();
    product_tree(vec![1.0; d], 2, |_, _| Ok((node.clone(), 1.0)))
}

fn zero_network(r: u32) -> Network {
    Network::affine(r, AffineMap::new(1, 1, vec![], vec![0.0]).unwrap()).unwrap()
}

/// Exact depth-2 ReLU network `Σ_i δ_i ρ(x − ξ_i)` for a continuous
/// piecewise-linear `v`, with `δ_i` the slope jumps.
pub fn pwlinear_to_relu(v: &PiecewisePoly) -> Result<Network> {
    if v.degree() > 1 {
        return Err(Error::Contract(format!(
            "piecewise-linear input expected, got degree {}",
            v.degree()
        )));
    }
    if !v.is_continuous() {
        return Err(Error::Contract(
            "piecewise-linear input must be continuous".into(),
        ));
    }
    let jumps: Vec<(f64, f64)> = v
        .truncated_powers()
        .into_iter()
        .filter_map(|(xi, a)| {
            let slope = a.get(1).copied().unwrap_or(0.0);
            (slope != 0.0).then_some((xi, slope))
        })
        .collect();
    if jumps.is_empty() {
        return Ok(zero_network(1));
    }
    let n = jumps.len();
    Network::new(
        1,
        vec![
            layer(
                n,
                1,
                (0..n).map(|i| (i, 0, 1.0)).collect(),
                jumps.iter().map(|j| -j.0).collect(),
                Some(vec![RELU; n]),
            ),
            layer(
                1,
                n,
                jumps.iter().enumerate().map(|(i, j)| (0, i, j.1)).collect(),
                vec![0.0],
                None,
            ),
        ],
    )
}

/// Depth-3 ReLU network `Σ_n v(ξ_n) H_n` over the nodal hats of the
/// breakpoints of a continuous piecewise-linear `v`.
///
/// Each hat is `ρ(ρ(u) − ρ(−u) − ρ(u − w))`, i.e. `ρ(min(u, w))` for the two
/// edge ramps, so every hat is exactly zero outside its support and the
/// output is exactly zero outside `supp v` for any output weights.
pub fn hat_basis_relu(v: &PiecewisePoly) -> Result<Network> {
    if v.degree() > 1 {
        return Err(Error::Contract(format!(
            "piecewise-linear input expected, got degree {}",
            v.degree()
        )));
    }
    if !v.is_continuous() {
        return Err(Error::Contract(
            "piecewise-linear input must be continuous".into(),
        ));
    }
    let xi = v.breakpoints();
    let hats: Vec<(f64, f64, f64, f64)> = (1..xi.len().saturating_sub(1))
        .map(|n| (xi[n - 1], xi[n], xi[n + 1], v.eval(xi[n])))
        .filter(|h| h.3 != 0.0)
        .collect();
    if hats.is_empty() {
        return Ok(zero_network(1));
    }
    let m = hats.len();
    let (mut w1, mut b1, mut w2) = (Vec::new(), Vec::new(), Vec::new());
    for (n, &(l, c, r, _)) in hats.iter().enumerate() {
        let (su, sw) = (1.0 / (c - l), 1.0 / (r - c));
        w1.extend([(3 * n, 0, su), (3 * n + 1, 0, -su), (3 * n + 2, 0, su + sw)]);
        b1.extend([-su * l, su * l, -su * l - sw * r]);
        w2.extend([(n, 3 * n, 1.0), (n, 3 * n + 1, -1.0), (n, 3 * n + 2, -1.0)]);
    }
    Network::new(
        1,
        vec![
            layer(3 * m, 1, w1, b1, Some(vec![RELU; 3 * m])),
            layer(m, 3 * m, w2, vec![0.0; m], Some(vec![RELU; m])),
            layer(
                1,
                m,
                hats.iter().enumerate().map(|(n, h)| (0, n, h.3)).collect(),
                vec![0.0],
                None,
            ),
        ],
    )
}

/// Nonzero truncated-power coefficients `(ξ, s, a)` with `s ≥ 1`.
///
/// Coefficients below `1e−13` relative to the largest are roundoff from
/// the piecewise representation and are dropped.
fn spline_terms(v: &PiecewisePoly) -> Vec<(f64, usize, f64)> {
    let tp = v.truncated_powers();
    let max = tp
        .iter()
        .flat_map(|(_, a)| a.iter().skip(1))
        .fold(0.0f64, |m, a| m.max(a.abs()));
    tp.iter()
        .flat_map(|(xi, a)| {
            a.iter()
                .enumerate()
                .skip(1)
                .filter(move |(_, c)| c.abs() > 1e-13 * max)
                .map(move |(s, c)| (*xi, s, *c))
        })
        .collect()
}

fn check_spline(v: &PiecewisePoly) -> Result<()> {
    if !v.is_continuous() {
        return Err(Error::Contract("spline input must be continuous".into()));
    }
    Ok(())
}

/// Single-layer fan-out `x ↦ (ρ(x − ξ), …)`, `copies` outputs of one neuron.
fn shifted_rect(r: u32, xi: f64, copies: usize) -> Network {
    let act = Activation::RectPower(r);
    Network::new(
        r,
        vec![
            layer(1, 1, vec![(0, 0, 1.0)], vec![-xi], Some(vec![act])),
            layer(
                copies,
                1,
                (0..copies).map(|i| (i, 0, 1.0)).collect(),
                vec![0.0; copies],
                None,
            ),
        ],
    )
    .unwrap()
}

/// `x ↦ b − ρ(b − a − ρ(x − a))`: the identity on `[a, b]`, exactly `b` above.
pub fn clamp_relu(a: f64, b: f64) -> Network {
    Network::new(
        1,
        vec![
            layer(1, 1, vec![(0, 0, 1.0)], vec![-a], Some(vec![RELU])),
            layer(1, 1, vec![(0, 0, -1.0)], vec![b - a], Some(vec![RELU])),
            layer(1, 1, vec![(0, 0, -1.0)], vec![b], None),
        ],
    )
    .unwrap()
}

/// ReLU approximation of a continuous spline `v` supported on `[a, b]`.
///
/// The input is clamped to `[a, b]` exactly, so the output is constant
/// outside the support; each `(x − ξ)_+^s` is a [`mult_d_relu`] product of
/// `s` copies of `ρ(x − ξ)`. Sup-error at most `ε` on `R`.
pub fn spline_to_relu(v: &PiecewisePoly, eps: f64) -> Result<Network> {
    check_spline(v)?;
    check_k_eps(1.0, eps)?;
    let Some((a, b)) = v.support() else {
        return Ok(zero_network(1));
    };
    let terms = spline_terms(v);
    if terms.is_empty() {
        return Ok(zero_network(1));
    }
    let nonlinear: f64 = terms.iter().filter(|t| t.1 >= 2).map(|t| t.2.abs()).sum();
    let eps_term = if nonlinear > 0.0 {
        (eps / nonlinear).min(0.5)
    } else {
        0.5
    };
    let width = b - a;
    let mut parts = Vec::with_capacity(terms.len());
    for &(xi, s, c) in &terms {
        let net = if s == 1 {
            shifted_rect(1, xi, 1)
        } else {
            compose(&shifted_rect(1, xi, s), &mult_d_relu(s, width, eps_term)?)?
        };
        parts.push(scale(c, &net));
    }
    compose(&clamp_relu(a, b), &add(&parts)?)
}

/// Half-width of the smoothing window for linear truncated powers in [`spline_to_repu2`].
pub const REPU_LINEAR_SMOOTHING: f64 = 1e-5;

/// RePU(2) realization of a continuous spline, with no accuracy parameter.
///
/// `(x−ξ)_+²` is native and `(x−ξ)_+^s = (x−ξ)^{s−2}·ρ₂(x−ξ)` uses an exact
/// polarization tree. Linear terms `(x−ξ)_+` are not realizable exactly by
/// the `C¹` class and use `[ρ₂(x−ξ+h) − ρ₂(x−ξ−h)]/(4h)`, exact outside
/// `(ξ−h, ξ+h)` with error at most `h/4` inside.
pub fn spline_to_repu2(v: &PiecewisePoly) -> Result<Network> {
    spline_to_repu2_smoothed(v, REPU_LINEAR_SMOOTHING)
}

/// [`spline_to_repu2`] with smoothing half-width `h` for the linear terms.
/// The weight count does not depend on `h`.
pub fn spline_to_repu2_smoothed(v: &PiecewisePoly, h: f64) -> Result<Network> {
    check_spline(v)?;
    if !(h > 0.0) {
        return Err(Error::Parameter(format!(
            "smoothing half-width must be positive, got {h}"
        )));
    }
    let terms = spline_terms(v);
    if terms.is_empty() {
        return Ok(zero_network(2));
    }
    let mut parts = Vec::with_capacity(terms.len());
    for &(xi, s, c) in &terms {
        let net = match s {
            1 => Network::new(
                2,
                vec![
                    layer(
                        2,
                        1,
                        vec![(0, 0, 1.0), (1, 0, 1.0)],
                        vec![h - xi, -h - xi],
                        Some(vec![REPU2; 2]),
                    ),
                    layer(
                        1,
                        2,
                        vec![(0, 0, 0.25 / h), (0, 1, -0.25 / h)],
                        vec![0.0],
                        None,
                    ),
                ],
            )?,
            2 => shifted_rect(2, xi, 1),
            _ => {
                let n = s - 1;
                let mut acts = vec![Activation::Identity; n - 1];
                acts.push(REPU2);
                let front = Network::new(
                    2,
                    vec![
                        layer(
                            n,
                            1,
                            (0..n).map(|i| (i, 0, 1.0)).collect(),
                            vec![-xi; n],
                            Some(acts),
                        ),
                        layer(
                            n,
                            n,
                            (0..n).map(|i| (i, i, 1.0)).collect(),
                            vec![0.0; n],
                            None,
                        ),
                    ],
                )?;
                compose(&front, &mult_d_repu2(n)?)?
            }
        };
        parts.push(scale(c, &net));
    }
    add(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bspline(degree: usize) -> PiecewisePoly {
        let l = degree + 1;
        let fact: f64 = (1..=degree).map(|i| i as f64).product();
        let terms: Vec<(f64, usize, f64)> = (0..=l)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                (
                    k as f64,
                    degree,
                    sign * crate::piecewise::binomial(l, k) / fact,
                )
            })
            .collect();
        PiecewisePoly::from_truncated_powers((0..=l).map(|k| k as f64).collect(), &terms).unwrap()
    }

    #[test]
    fn sawtooth_values() {
        let g1 = sawtooth(1).unwrap();
        assert_eq!(g1.eval_scalar(0.25).unwrap(), 0.5);
        assert_eq!(g1.eval_scalar(0.5).unwrap(), 1.0);
        assert_eq!(g1.eval_scalar(1.0).unwrap(), 0.0);
        assert_eq!(sawtooth(2).unwrap().eval_scalar(0.25).unwrap(), 1.0);
        for m in 1..10 {
            let g = sawtooth(m).unwrap();
            assert_eq!(g.depth(), m + 1);
            assert!(g.weight_count() <= 8 * m);
        }
        let g3 = sawtooth(3).unwrap();
        for i in 0..=768 {
            let x = i as f64 / 1024.0;
            assert_eq!(
                g3.eval_scalar(x).unwrap(),
                g3.eval_scalar(x + 0.25).unwrap()
            );
        }
    }

    #[test]
    fn square_unit_endpoints_and_counts() {
        for m in 1..8 {
            let f = square_unit(m).unwrap();
            assert_eq!(f.eval_scalar(0.0).unwrap(), 0.0);
            assert_eq!(f.eval_scalar(1.0).unwrap(), 1.0);
            assert_eq!(f.weight_count(), if m == 1 { 8 } else { 7 * m + 3 });
            let n = 1usize << m;
            for k in 0..=n {
                let x = k as f64 / n as f64;
                assert_eq!(f.eval_scalar(x).unwrap(), x * x);
            }
        }
        assert_eq!(square_unit(1).unwrap().eval_scalar(0.5).unwrap(), 0.25);
    }

    #[test]
    fn mult2_basic() {
        let net = mult2_relu(1.0, 1e-3).unwrap();
        let y = net.eval(&[1.0, 1.0]).unwrap()[0];
        assert!((y - 1.0).abs() <= 1e-3);
        assert!(mult2_relu(1.0, 1.0).is_err());
        assert!(mult2_relu(0.0, 0.1).is_err());
    }

    #[test]
    fn repu_products() {
        let p = mult_d_repu2(2).unwrap();
        assert!((p.eval(&[3.0, 5.0]).unwrap()[0] - 15.0).abs() <= 15e-12);
        let p5 = mult_d_repu2(5).unwrap();
        assert!((p5.eval(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap()[0] - 120.0).abs() <= 1e-10);
        assert_eq!(polarization_repu2().weight_count(), 12);
    }

    #[test]
    fn pwlinear_hat() {
        let hat =
            PiecewisePoly::new(vec![0.0, 1.0, 2.0], vec![vec![0.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let net = pwlinear_to_relu(&hat).unwrap();
        assert_eq!(net.weight_count(), 6);
        assert_eq!(net.depth(), 2);
        for i in 0..=4096 {
            let x = -1.0 + 4.0 * i as f64 / 4096.0;
            assert_eq!(net.eval_scalar(x).unwrap(), hat.eval(x));
        }
        let z = pwlinear_to_relu(&PiecewisePoly::zero()).unwrap();
        assert_eq!(z.weight_count(), 0);
        assert!(pwlinear_to_relu(&bspline(2)).is_err());
    }

    #[test]
    fn hat_basis_exact_exterior_under_scaling() {
        let v = PiecewisePoly::new(
            vec![-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0],
            vec![
                vec![0.0, 0.5],
                vec![0.25, -1.5],
                vec![-0.5, 4.0],
                vec![1.5, -4.0],
                vec![-0.5, 1.5],
                vec![0.25, -0.5],
            ],
        )
        .unwrap();
        let net = crate::calculus::scale(2f64.sqrt(), &hat_basis_relu(&v).unwrap());
        assert_eq!(net.depth(), 3);
        for i in 0..=4096 {
            let x = -300.0 + 600.0 * i as f64 / 4096.0;
            let y = net.eval_scalar(x).unwrap();
            if x <= -1.0 || x >= 2.0 {
                assert_eq!(y, 0.0, "x = {x}");
            } else {
                assert!((y - 2f64.sqrt() * v.eval(x)).abs() < 1e-15);
            }
        }
        assert!(hat_basis_relu(&bspline(2)).is_err());
    }

    #[test]
    fn spline_relu_quadratic() {
        let v = bspline(2);
        let net = spline_to_relu(&v, 1e-3).unwrap();
        let mut err: f64 = 0.0;
        for i in 0..=6000 {
            let x = -1.0 + 5.0 * i as f64 / 6000.0;
            err = err.max((net.eval_scalar(x).unwrap() - v.eval(x)).abs());
        }
        assert!(err <= 1e-3, "{err}");
        assert_eq!(
            net.eval_scalar(-10.0).unwrap(),
            net.eval_scalar(-1000.0).unwrap()
        );
        assert_eq!(
            net.eval_scalar(13.0).unwrap(),
            net.eval_scalar(1300.0).unwrap()
        );
    }

    #[test]
    fn spline_repu() {
        for (deg, tol) in [(2, 1e-10), (3, 1e-9)] {
            let v = bspline(deg);
            let net = spline_to_repu2(&v).unwrap();
            assert_eq!(net.r_class(), 2);
            for i in 0..=4000 {
                let x = -1.0 + 6.0 * i as f64 / 4000.0;
                assert!((net.eval_scalar(x).unwrap() - v.eval(x)).abs() <= tol);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn mult2_zero_and_symmetry(x in -1.0f64..1.0, y in -1.0f64..1.0, e in 1usize..6) {
            let net = mult2_relu(1.0, 10f64.powi(-(e as i32))).unwrap();
            prop_assert_eq!(net.eval(&[x, 0.0]).unwrap()[0], 0.0);
            prop_assert_eq!(net.eval(&[0.0, y]).unwrap()[0], 0.0);
            prop_assert_eq!(net.eval(&[x, y]).unwrap(), net.eval(&[y, x]).unwrap());
        }

        #[test]
        fn mult_d_zero_annihilation(d in 2usize..6, xs in proptest::collection::vec(-1.0f64..1.0, 6), z in 0usize..6) {
            let net = mult_d_relu(d, 1.0, 1e-2).unwrap();
            let mut x = xs[..d].to_vec();
            x[z % d] = 0.0;
            prop_assert_eq!(net.eval(&x).unwrap()[0], 0.0);
        }

        #[test]
        fn spline_scaling_commutes(c in -3.0f64..3.0, x in -1.0f64..4.0) {
            let v = bspline(2);
            let base = spline_to_relu(&v, 1e-2).unwrap();
            let scaled = spline_to_relu(&v.scale(c), 1e-2).unwrap();
            let via_scale = scale(c, &base);
            prop_assert!((via_scale.eval_scalar(x).unwrap() - c * base.eval_scalar(x).unwrap()).abs() <= 1e-12 * (1.0 + c.abs()));
            prop_assert!((scaled.eval_scalar(x).unwrap() - c * v.eval(x)).abs() <= 1e-2 + 1e-12);
        }
    }
}
