//! Separable filter banks on dense integer-indexed grids.

use crate::par;
use crate::wavelets::Mask;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Dense array over the index box `lo + [0, n)` (row-major, last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub lo: Vec<i64>,
    pub n: Vec<usize>,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn zeros(lo: Vec<i64>, n: Vec<usize>) -> Self {
        let len = n.iter().product();
        Grid {
            lo,
            n,
            data: vec![0.0; len],
        }
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn index(&self, k: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for ((&k, &lo), &n) in k.iter().zip(&self.lo).zip(&self.n) {
            let i = k - lo;
            if i < 0 || i >= n as i64 {
                return None;
            }
            idx = idx * n + i as usize;
        }
        Some(idx)
    }

    pub fn get(&self, k: &[i64]) -> f64 {
        self.index(k).map_or(0.0, |i| self.data[i])
    }

    /// Multi-index of a flat position.
    pub fn multi_index(&self, mut flat: usize) -> Vec<i64> {
        let mut k = vec![0i64; self.dim()];
        for ax in (0..self.dim()).rev() {
            k[ax] = self.lo[ax] + (flat % self.n[ax]) as i64;
            flat /= self.n[ax];
        }
        k
    }

    /// Nonzero `(k, value)` pairs in storage order.
    pub fn nonzeros(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (self.multi_index(i), *v))
    }

    /// Smallest box covering both grids' index ranges.
    pub fn hull(a: (&[i64], &[usize]), b: (&[i64], &[usize])) -> (Vec<i64>, Vec<usize>) {
        let lo: Vec<i64> = a.0.iter().zip(b.0).map(|(x, y)| *x.min(y)).collect();
        let n = lo
            .iter()
            .enumerate()
            .map(|(ax, &l)| {
                let hi = (a.0[ax] + a.1[ax] as i64).max(b.0[ax] + b.1[ax] as i64);
                (hi - l) as usize
            })
            .collect();
        (lo, n)
    }

    /// Copy into a larger box.
    pub fn embed(&self, lo: &[i64], n: &[usize]) -> Grid {
        let mut out = Grid::zeros(lo.to_vec(), n.to_vec());
        for (i, v) in self.data.iter().enumerate() {
            if *v != 0.0 {
                let k = self.multi_index(i);
                let j = out.index(&k).expect("embedding box covers the grid");
                out.data[j] = *v;
            }
        }
        out
    }
}

/// Applies `f` to every line along `axis` of the (equally shaped) inputs.
fn map_axis<F>(
    inputs: &[&Grid],
    axis: usize,
    new_lo: i64,
    new_n: usize,
    parallel: bool,
    f: F,
) -> Grid
where
    F: Fn(&[Vec<f64>], &mut [f64]) + Sync + Send,
{
    let g0 = inputs[0];
    let n = g0.n[axis];
    let outer: usize = g0.n[..axis].iter().product();
    let inner: usize = g0.n[axis + 1..].iter().product();
    let block = |o: usize| {
        let mut out_block = vec![0.0; new_n * inner];
        let mut lines = vec![vec![0.0; n]; inputs.len()];
        let mut out = vec![0.0; new_n];
        for t in 0..inner {
            for (g, line) in inputs.iter().zip(lines.iter_mut()) {
                for (i, v) in line.iter_mut().enumerate() {
                    *v = g.data[(o * n + i) * inner + t];
                }
            }
            f(&lines, &mut out);
            for (i, v) in out.iter().enumerate() {
                out_block[i * inner + t] = *v;
            }
        }
        out_block
    };
    let blocks = if parallel {
        par::map_range(outer, block)
    } else {
        par::map_range_seq(outer, block)
    };
    let mut lo = g0.lo.clone();
    let mut dims = g0.n.clone();
    lo[axis] = new_lo;
    dims[axis] = new_n;
    Grid {
        lo,
        n: dims,
        data: blocks.concat(),
    }
}

/// Output index range of `k ↦ Σ_n f_{n−2k} x_n` for `x` on `[a, a+n)`.
fn down_range(a: i64, n: usize, f: &Mask) -> (i64, usize) {
    let b = a + n as i64 - 1;
    let lo = (a - f.last()).div_euclid(2) + ((a - f.last()).rem_euclid(2) != 0) as i64;
    let hi = (b - f.offset()).div_euclid(2);
    (lo, (hi - lo + 1).max(0) as usize)
}

/// Filters along `axis` onto the output box shared by both analysis masks.
fn analyze_axis(g: &Grid, axis: usize, f: &Mask, other: &Mask, parallel: bool) -> Grid {
    let a = g.lo[axis];
    let n = g.n[axis];
    let (lo1, len1) = down_range(a, n, f);
    let (lo2, len2) = down_range(a, n, other);
    let lo = lo1.min(lo2);
    let len = ((lo1 + len1 as i64).max(lo2 + len2 as i64) - lo) as usize;
    map_axis(&[g], axis, lo, len, parallel, |lines, out| {
        let x = &lines[0];
        for (i, o) in out.iter_mut().enumerate() {
            let k = lo + i as i64;
            let first = (2 * k + f.offset()).max(a);
            let last = (2 * k + f.last()).min(a + n as i64 - 1);
            let mut s = 0.0;
            for m in first..=last {
                s += f.get(m - 2 * k) * x[(m - a) as usize];
            }
            *o = SQRT_HALF * s;
        }
    })
}

fn synthesize_axis(
    low: &Grid,
    high: &Grid,
    axis: usize,
    h: &Mask,
    g: &Mask,
    parallel: bool,
) -> Grid {
    let a = low.lo[axis];
    let n = low.n[axis] as i64;
    let lo = 2 * a + h.offset().min(g.offset());
    let hi = 2 * (a + n - 1) + h.last().max(g.last());
    let len = (hi - lo + 1).max(0) as usize;
    map_axis(&[low, high], axis, lo, len, parallel, |lines, out| {
        let (c, d) = (&lines[0], &lines[1]);
        for (i, o) in out.iter_mut().enumerate() {
            let m = lo + i as i64;
            let mut s = 0.0;
            // k with m − 2k inside either filter
            let kmin = ((m - h.last().max(g.last())) as f64 / 2.0).ceil() as i64;
            let kmax = ((m - h.offset().min(g.offset())) as f64 / 2.0).floor() as i64;
            for k in kmin.max(a)..=kmax.min(a + n - 1) {
                let idx = (k - a) as usize;
                s += h.get(m - 2 * k) * c[idx] + g.get(m - 2 * k) * d[idx];
            }
            *o = SQRT_HALF * s;
        }
    })
}

/// One tensor analysis step: `c_j ↦ (c_{j−1}, d^e_{j−1})`, bands indexed by
/// the bitmask of `e` (bit `ν` set for the high-pass factor on axis `ν`).
pub fn analyze_step(c: &Grid, h_dual: &Mask, g_dual: &Mask, parallel: bool) -> Vec<Grid> {
    let mut bands = vec![c.clone()];
    for axis in 0..c.dim() {
        let mut next = vec![Grid::zeros(vec![], vec![]); bands.len() * 2];
        for (bits, band) in bands.iter().enumerate() {
            next[bits] = analyze_axis(band, axis, h_dual, g_dual, parallel);
            next[bits | (1 << axis)] = analyze_axis(band, axis, g_dual, h_dual, parallel);
        }
        bands = next;
    }
    bands
}

/// Inverse of [`analyze_step`]; all bands must share one index box.
pub fn synthesize_step(bands: &[Grid], h: &Mask, g: &Mask, parallel: bool) -> Grid {
    let d = bands[0].dim();
    let mut bands: Vec<Grid> = bands.to_vec();
    for axis in (0..d).rev() {
        let half = 1 << axis;
        bands = (0..half)
            .map(|b| synthesize_axis(&bands[b], &bands[b | half], axis, h, g, parallel))
            .collect();
    }
    bands.into_iter().next().unwrap()
}

/// `c ↦ Σ_k c_k Π_ν w(m_ν − k_ν)` for a kernel `w` supported on `[w_lo, w_lo + len)`.
pub fn convolve(c: &Grid, kernel: &[f64], w_lo: i64, parallel: bool) -> Grid {
    let mut out = c.clone();
    for axis in 0..c.dim() {
        let a = out.lo[axis];
        let n = out.n[axis];
        let lo = a + w_lo;
        let len = n + kernel.len() - 1;
        out = map_axis(&[&out], axis, lo, len, parallel, |lines, o| {
            o.iter_mut().for_each(|v| *v = 0.0);
            for (i, x) in lines[0].iter().enumerate() {
                if *x != 0.0 {
                    for (t, w) in kernel.iter().enumerate() {
                        o[i + t] += w * x;
                    }
                }
            }
        });
    }
    out
}
