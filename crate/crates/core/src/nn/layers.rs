//! Batched layer kernels with hand-written backward passes.

use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayView2, ArrayView3, Axis, Zip};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

pub fn dense_forward(x: ArrayView2<f64>, w: ArrayView2<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    let mut y = x.dot(&w.t());
    y += &b;
    y
}

/// Returns `(dx, dw, db)`.
pub fn dense_backward(
    x: ArrayView2<f64>,
    w: ArrayView2<f64>,
    dy: ArrayView2<f64>,
) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
    (dy.dot(&w), dy.t().dot(&x), dy.sum_axis(Axis(0)))
}

pub fn relu_inplace<D: ndarray::Dimension>(x: &mut ndarray::Array<f64, D>) {
    x.mapv_inplace(|v| v.max(0.0));
}

/// Zeroes `dy` where the ReLU output was not positive.
pub fn relu_backward<D: ndarray::Dimension>(out: &ndarray::Array<f64, D>, dy: &mut ndarray::Array<f64, D>) {
    Zip::from(dy).and(out).for_each(|g, &o| {
        if o <= 0.0 {
            *g = 0.0;
        }
    });
}

fn same_pad_left(kernel: usize) -> usize {
    (kernel - 1) / 2
}

/// `[B, Cin, N] -> [B·N, Cin·k]`, zero outside the sequence.
fn im2col(x: ArrayView3<f64>, kernel: usize) -> Array2<f64> {
    let (b, c, n) = x.dim();
    let left = same_pad_left(kernel) as isize;
    let mut cols = Array2::zeros((b * n, c * kernel));
    for bi in 0..b {
        for ci in 0..c {
            let row = x.slice(s![bi, ci, ..]);
            for t in 0..kernel {
                let shift = t as isize - left;
                let col = ci * kernel + t;
                for pos in 0..n {
                    let src = pos as isize + shift;
                    if src >= 0 && (src as usize) < n {
                        cols[[bi * n + pos, col]] = row[src as usize];
                    }
                }
            }
        }
    }
    cols
}

fn col2im(dcols: ArrayView2<f64>, b: usize, c: usize, n: usize, kernel: usize) -> Array3<f64> {
    let left = same_pad_left(kernel) as isize;
    let mut dx = Array3::zeros((b, c, n));
    for bi in 0..b {
        for ci in 0..c {
            for t in 0..kernel {
                let shift = t as isize - left;
                let col = ci * kernel + t;
                for pos in 0..n {
                    let src = pos as isize + shift;
                    if src >= 0 && (src as usize) < n {
                        dx[[bi, ci, src as usize]] += dcols[[bi * n + pos, col]];
                    }
                }
            }
        }
    }
    dx
}

/// Same-padded stride-1 convolution. `w` is `[Cout, Cin, k]`. Returns the
/// output `[B, Cout, N]` and the im2col matrix for the backward pass.
pub fn conv_forward(x: ArrayView3<f64>, w: ArrayView3<f64>, b: ArrayView1<f64>) -> (Array3<f64>, Array2<f64>) {
    let (batch, _, n) = x.dim();
    let (cout, cin, k) = w.dim();
    let cols = im2col(x, k);
    let w2 = w.to_shape((cout, cin * k)).expect("conv weight reshape");
    let mut y2 = cols.dot(&w2.t());
    y2 += &b;
    let y = y2
        .into_shape_clone((batch, n, cout))
        .expect("conv output reshape")
        .permuted_axes([0, 2, 1])
        .as_standard_layout()
        .into_owned();
    (y, cols)
}

/// Returns `(dx, dw, db)`.
pub fn conv_backward(
    cols: ArrayView2<f64>,
    w: ArrayView3<f64>,
    dy: ArrayView3<f64>,
) -> (Array3<f64>, Array3<f64>, Array1<f64>) {
    let (batch, cout, n) = dy.dim();
    let (_, cin, k) = w.dim();
    let dy2 = dy
        .permuted_axes([0, 2, 1])
        .as_standard_layout()
        .into_owned()
        .into_shape_clone((batch * n, cout))
        .expect("conv grad reshape");
    let w2 = w.to_shape((cout, cin * k)).expect("conv weight reshape");
    let dw = dy2.t().dot(&cols).into_shape_clone((cout, cin, k)).expect("dw reshape");
    let db = dy2.sum_axis(Axis(0));
    let dcols = dy2.dot(&w2);
    (col2im(dcols.view(), batch, cin, n, k), dw, db)
}

/// Per-channel batch statistics of a `[B, C, N]` activation.
#[derive(Debug, Clone)]
pub struct BnBatch {
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
    pub xhat: Array3<f64>,
    pub inv_std: Array1<f64>,
}

pub fn bn_train_forward(x: ArrayView3<f64>, gamma: ArrayView1<f64>, beta: ArrayView1<f64>) -> (Array3<f64>, BnBatch) {
    let (b, c, n) = x.dim();
    let m = (b * n) as f64;
    let mut mean = Array1::zeros(c);
    let mut var = Array1::zeros(c);
    for ci in 0..c {
        let lane = x.slice(s![.., ci, ..]);
        let mu = lane.sum() / m;
        mean[ci] = mu;
        var[ci] = lane.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m;
    }
    let inv_std = var.mapv(|v: f64| 1.0 / (v + BN_EPS).sqrt());
    let mut xhat = x.to_owned();
    let mut y = Array3::zeros((b, c, n));
    for ci in 0..c {
        let (mu, is, g, bt) = (mean[ci], inv_std[ci], gamma[ci], beta[ci]);
        let mut xh = xhat.slice_mut(s![.., ci, ..]);
        xh.mapv_inplace(|v| (v - mu) * is);
        Zip::from(y.slice_mut(s![.., ci, ..])).and(&xh).for_each(|o, &h| *o = g * h + bt);
    }
    (y, BnBatch { mean, var, xhat, inv_std })
}

pub fn bn_infer_forward(
    x: ArrayView3<f64>,
    gamma: ArrayView1<f64>,
    beta: ArrayView1<f64>,
    mean: ArrayView1<f64>,
    var: ArrayView1<f64>,
) -> Array3<f64> {
    let mut y = x.to_owned();
    for ci in 0..x.dim().1 {
        let scale = gamma[ci] / (var[ci] + BN_EPS).sqrt();
        let shift = beta[ci] - mean[ci] * scale;
        y.slice_mut(s![.., ci, ..]).mapv_inplace(|v| v * scale + shift);
    }
    y
}

/// Returns `(dx, dgamma, dbeta)`.
pub fn bn_backward(
    cache: &BnBatch,
    gamma: ArrayView1<f64>,
    dy: ArrayView3<f64>,
) -> (Array3<f64>, Array1<f64>, Array1<f64>) {
    let (b, c, n) = dy.dim();
    let m = (b * n) as f64;
    let mut dx = Array3::zeros((b, c, n));
    let mut dgamma = Array1::zeros(c);
    let mut dbeta = Array1::zeros(c);
    for ci in 0..c {
        let g = dy.slice(s![.., ci, ..]);
        let xh = cache.xhat.slice(s![.., ci, ..]);
        let sum_g: f64 = g.sum();
        let sum_gx: f64 = Zip::from(&g).and(&xh).fold(0.0, |acc, &a, &h| acc + a * h);
        dbeta[ci] = sum_g;
        dgamma[ci] = sum_gx;
        let k = gamma[ci] * cache.inv_std[ci] / m;
        Zip::from(dx.slice_mut(s![.., ci, ..]))
            .and(&g)
            .and(&xh)
            .for_each(|d, &gv, &h| *d = k * (m * gv - sum_g - h * sum_gx));
    }
    (dx, dgamma, dbeta)
}

/// Max pooling with window = stride = `factor`; trailing samples that do not
/// fill a window are dropped. Returns the output and the argmax positions.
pub fn pool_forward(x: ArrayView3<f64>, factor: usize) -> (Array3<f64>, Array3<usize>) {
    let (b, c, n) = x.dim();
    let out_n = n / factor;
    let mut y = Array3::zeros((b, c, out_n));
    let mut arg = Array3::zeros((b, c, out_n));
    for bi in 0..b {
        for ci in 0..c {
            for o in 0..out_n {
                let base = o * factor;
                let mut best = base;
                for j in base + 1..base + factor {
                    if x[[bi, ci, j]] > x[[bi, ci, best]] {
                        best = j;
                    }
                }
                y[[bi, ci, o]] = x[[bi, ci, best]];
                arg[[bi, ci, o]] = best;
            }
        }
    }
    (y, arg)
}

pub fn pool_backward(arg: &Array3<usize>, input_len: usize, dy: ArrayView3<f64>) -> Array3<f64> {
    let (b, c, out_n) = dy.dim();
    let mut dx = Array3::zeros((b, c, input_len));
    for bi in 0..b {
        for ci in 0..c {
            for o in 0..out_n {
                dx[[bi, ci, arg[[bi, ci, o]]]] += dy[[bi, ci, o]];
            }
        }
    }
    dx
}

/// Smallest gap between a window's maximum and the largest strictly
/// smaller value in it.
pub fn pool_margin(x: ArrayView3<f64>, factor: usize) -> f64 {
    let (b, c, n) = x.dim();
    let mut margin = f64::INFINITY;
    if factor < 2 {
        return margin;
    }
    for bi in 0..b {
        for ci in 0..c {
            for o in 0..n / factor {
                let mut vals: Vec<f64> = (0..factor).map(|j| x[[bi, ci, o * factor + j]]).collect();
                vals.sort_by(|a, b| b.total_cmp(a));
                // Exact ties come from identical computations (e.g. clipped
                // zeros after a shared affine map) and move together.
                if let Some(&next) = vals.iter().find(|&&v| v < vals[0]) {
                    margin = margin.min(vals[0] - next);
                }
            }
        }
    }
    margin
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, Array};

    #[test]
    fn conv_matches_direct_sum() {
        let x = Array::from_shape_fn((2, 3, 7), |(b, c, n)| (b * 31 + c * 7 + n) as f64 * 0.1 - 1.0);
        let w = Array::from_shape_fn((4, 3, 3), |(o, c, t)| ((o + 2 * c + 3 * t) % 5) as f64 - 2.0);
        let bias = arr1(&[0.5, -0.5, 0.0, 1.0]);
        let (y, _) = conv_forward(x.view(), w.view(), bias.view());
        for b in 0..2 {
            for o in 0..4 {
                for n in 0..7 {
                    let mut acc = bias[o];
                    for c in 0..3 {
                        for t in 0..3 {
                            let src = n as isize + t as isize - 1;
                            if (0..7).contains(&src) {
                                acc += w[[o, c, t]] * x[[b, c, src as usize]];
                            }
                        }
                    }
                    assert!((y[[b, o, n]] - acc).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn pool_drops_remainder() {
        let x = Array::from_shape_vec((1, 1, 5), vec![1.0, 3.0, 2.0, 0.0, 9.0]).unwrap();
        let (y, arg) = pool_forward(x.view(), 2);
        assert_eq!(y.as_slice().unwrap(), &[3.0, 2.0]);
        assert_eq!(arg.as_slice().unwrap(), &[1, 2]);
        let dx = pool_backward(&arg, 5, Array::ones((1, 1, 2)).view());
        assert_eq!(dx.as_slice().unwrap(), &[0.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn batch_norm_normalizes_per_channel() {
        let x = Array::from_shape_fn((4, 2, 3), |(b, c, n)| (b * 3 + n) as f64 * (c + 1) as f64);
        let (y, st) = bn_train_forward(x.view(), arr1(&[1.0, 2.0]).view(), arr1(&[0.0, 1.0]).view());
        for c in 0..2 {
            let lane = y.slice(s![.., c, ..]);
            let mean = lane.mean().unwrap();
            assert!((mean - [0.0, 1.0][c]).abs() < 1e-12);
        }
        assert!(st.var[1] > st.var[0]);
    }
}
