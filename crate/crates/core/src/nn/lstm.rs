//! Batched LSTM layer over time-major sequences `[L, B, features]`.
//! Gate blocks in the weight rows are ordered input, forget, cell, output.

use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayView2, ArrayView3, Axis};

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

pub struct LstmCache {
    x: Array3<f64>,
    h_prev: Array3<f64>,
    c_prev: Array3<f64>,
    /// Activated gates `[L, B, 4H]`.
    gates: Array3<f64>,
    tanh_c: Array3<f64>,
}

/// Upstream gradient on the layer output.
pub enum HiddenGrad {
    /// Only the final hidden state is consumed.
    Final(Array2<f64>),
    /// Every step's hidden state is consumed (layer below another LSTM).
    All(Array3<f64>),
}

/// Runs the layer from zero state. Returns all hidden states `[L, B, H]`.
pub fn lstm_forward(
    x: ArrayView3<f64>,
    w_ih: ArrayView2<f64>,
    w_hh: ArrayView2<f64>,
    b: ArrayView1<f64>,
) -> (Array3<f64>, LstmCache) {
    let (steps, batch, n_in) = x.dim();
    let h4 = w_ih.nrows();
    let hid = h4 / 4;
    // Input projections for all steps in one product.
    let x2 = x.to_shape((steps * batch, n_in)).expect("lstm input reshape");
    let mut proj = x2.dot(&w_ih.t());
    proj += &b;
    let proj = proj.into_shape_clone((steps, batch, h4)).expect("lstm projection reshape");

    let mut hs = Array3::zeros((steps, batch, hid));
    let mut h_prev = Array3::zeros((steps, batch, hid));
    let mut c_prev = Array3::zeros((steps, batch, hid));
    let mut gates = Array3::zeros((steps, batch, h4));
    let mut tanh_c = Array3::zeros((steps, batch, hid));
    let mut h = Array2::<f64>::zeros((batch, hid));
    let mut c = Array2::<f64>::zeros((batch, hid));
    for t in 0..steps {
        h_prev.index_axis_mut(Axis(0), t).assign(&h);
        c_prev.index_axis_mut(Axis(0), t).assign(&c);
        let mut pre = h.dot(&w_hh.t());
        pre += &proj.index_axis(Axis(0), t);
        let mut g_t = gates.index_axis_mut(Axis(0), t);
        let mut tc_t = tanh_c.index_axis_mut(Axis(0), t);
        for bi in 0..batch {
            for j in 0..hid {
                let i_g = sigmoid(pre[[bi, j]]);
                let f_g = sigmoid(pre[[bi, hid + j]]);
                let c_g = pre[[bi, 2 * hid + j]].tanh();
                let o_g = sigmoid(pre[[bi, 3 * hid + j]]);
                let cell = f_g * c[[bi, j]] + i_g * c_g;
                let tc = cell.tanh();
                c[[bi, j]] = cell;
                h[[bi, j]] = o_g * tc;
                g_t[[bi, j]] = i_g;
                g_t[[bi, hid + j]] = f_g;
                g_t[[bi, 2 * hid + j]] = c_g;
                g_t[[bi, 3 * hid + j]] = o_g;
                tc_t[[bi, j]] = tc;
            }
        }
        hs.index_axis_mut(Axis(0), t).assign(&h);
    }
    (hs, LstmCache { x: x.to_owned(), h_prev, c_prev, gates, tanh_c })
}

/// Backpropagation through time. Returns `(dx, dw_ih, dw_hh, db)`.
pub fn lstm_backward(
    cache: &LstmCache,
    w_ih: ArrayView2<f64>,
    w_hh: ArrayView2<f64>,
    upstream: &HiddenGrad,
) -> (Array3<f64>, Array2<f64>, Array2<f64>, Array1<f64>) {
    let (steps, batch, n_in) = cache.x.dim();
    let h4 = w_ih.nrows();
    let hid = h4 / 4;
    let mut dpre_all = Array3::<f64>::zeros((steps, batch, h4));
    let mut dh = Array2::<f64>::zeros((batch, hid));
    let mut dc = Array2::<f64>::zeros((batch, hid));
    for t in (0..steps).rev() {
        match upstream {
            HiddenGrad::Final(g) if t + 1 == steps => dh += g,
            HiddenGrad::All(g) => dh += &g.index_axis(Axis(0), t),
            _ => {}
        }
        let g_t = cache.gates.index_axis(Axis(0), t);
        let tc_t = cache.tanh_c.index_axis(Axis(0), t);
        let cp_t = cache.c_prev.index_axis(Axis(0), t);
        let mut dpre = dpre_all.index_axis_mut(Axis(0), t);
        for bi in 0..batch {
            for j in 0..hid {
                let (i_g, f_g, c_g, o_g) =
                    (g_t[[bi, j]], g_t[[bi, hid + j]], g_t[[bi, 2 * hid + j]], g_t[[bi, 3 * hid + j]]);
                let tc = tc_t[[bi, j]];
                let dhv = dh[[bi, j]];
                let dcell = dc[[bi, j]] + dhv * o_g * (1.0 - tc * tc);
                dpre[[bi, j]] = dcell * c_g * i_g * (1.0 - i_g);
                dpre[[bi, hid + j]] = dcell * cp_t[[bi, j]] * f_g * (1.0 - f_g);
                dpre[[bi, 2 * hid + j]] = dcell * i_g * (1.0 - c_g * c_g);
                dpre[[bi, 3 * hid + j]] = dhv * tc * o_g * (1.0 - o_g);
                dc[[bi, j]] = dcell * f_g;
            }
        }
        dh = dpre.dot(&w_hh);
    }
    let dpre2 = dpre_all.to_shape((steps * batch, h4)).expect("dpre reshape");
    let x2 = cache.x.to_shape((steps * batch, n_in)).expect("x reshape");
    let hp2 = cache.h_prev.to_shape((steps * batch, hid)).expect("h reshape");
    let dw_ih = dpre2.t().dot(&x2);
    let dw_hh = dpre2.t().dot(&hp2);
    let db = dpre2.sum_axis(Axis(0));
    let dx = dpre2.dot(&w_ih).into_shape_clone((steps, batch, n_in)).expect("dx reshape");
    (dx, dw_ih, dw_hh, db)
}

/// `[B, L, F]` to time-major `[L, B, F]`, optionally time-reversed.
pub fn to_time_major(x: ArrayView3<f64>, reverse: bool) -> Array3<f64> {
    let mut tm = x.permuted_axes([1, 0, 2]).as_standard_layout().into_owned();
    if reverse {
        tm.invert_axis(Axis(0));
        tm = tm.as_standard_layout().into_owned();
    }
    tm
}

/// Final hidden state `[B, H]` of a layer output.
pub fn last_step(hs: &Array3<f64>) -> Array2<f64> {
    hs.slice(s![hs.dim().0 - 1, .., ..]).to_owned()
}

