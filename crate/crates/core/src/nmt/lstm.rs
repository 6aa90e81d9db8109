//! Single LSTM cell: forward with cache and backward.

use super::linalg::{concat, sigmoid, Real, Tensor};

/// Values saved by the forward step for backpropagation.
#[derive(Debug, Clone)]
pub struct LstmCache<T> {
    /// `[input; h_prev]`
    pub xh: Vec<T>,
    pub c_prev: Vec<T>,
    /// Gate activations, `[i; f; o; g]`.
    pub gates: Vec<T>,
    pub c: Vec<T>,
    pub tanh_c: Vec<T>,
}

/// One step: `z = W [x; h_prev] + b`, `c = f*c_prev + i*g`, `h = o*tanh(c)`.
pub fn lstm_step<T: Real>(
    w: &Tensor<T>,
    b: &Tensor<T>,
    input: &[T],
    h_prev: &[T],
    c_prev: &[T],
) -> (Vec<T>, Vec<T>, LstmCache<T>) {
    let hid = h_prev.len();
    assert_eq!(w.rows, 4 * hid, "lstm weight rows");
    assert_eq!(w.cols, input.len() + hid, "lstm weight cols");
    assert_eq!(c_prev.len(), hid, "lstm cell width");
    let xh = concat(input, h_prev);
    let mut z = b.data.clone();
    w.matvec_add(&xh, &mut z);
    for (k, zk) in z.iter_mut().enumerate() {
        *zk = if k < 3 * hid { sigmoid(*zk) } else { zk.tanh() };
    }
    let mut c = vec![T::zero(); hid];
    let mut tanh_c = vec![T::zero(); hid];
    let mut h = vec![T::zero(); hid];
    for k in 0..hid {
        let (i, f, o, g) = (z[k], z[hid + k], z[2 * hid + k], z[3 * hid + k]);
        c[k] = f * c_prev[k] + i * g;
        tanh_c[k] = c[k].tanh();
        h[k] = o * tanh_c[k];
    }
    let cache = LstmCache {
        xh,
        c_prev: c_prev.to_vec(),
        gates: z,
        c: c.clone(),
        tanh_c,
    };
    (h, c, cache)
}

/// Backward through one step. Accumulates into `dw`/`db` and returns
/// (gradient wrt `[input; h_prev]`, gradient wrt `c_prev`).
pub fn lstm_backward<T: Real>(
    w: &Tensor<T>,
    cache: &LstmCache<T>,
    dh: &[T],
    dc_next: &[T],
    dw: &mut Tensor<T>,
    db: &mut Tensor<T>,
) -> (Vec<T>, Vec<T>) {
    let hid = dh.len();
    let z = &cache.gates;
    let mut dz = vec![T::zero(); 4 * hid];
    let mut dc_prev = vec![T::zero(); hid];
    let one = T::one();
    for k in 0..hid {
        let (i, f, o, g) = (z[k], z[hid + k], z[2 * hid + k], z[3 * hid + k]);
        let tc = cache.tanh_c[k];
        let d_o = dh[k] * tc;
        let dc = dc_next[k] + dh[k] * o * (one - tc * tc);
        let di = dc * g;
        let dg = dc * i;
        let df = dc * cache.c_prev[k];
        dc_prev[k] = dc * f;
        dz[k] = di * i * (one - i);
        dz[hid + k] = df * f * (one - f);
        dz[2 * hid + k] = d_o * o * (one - o);
        dz[3 * hid + k] = dg * (one - g * g);
    }
    dw.outer_add(&dz, &cache.xh);
    for (b, &d) in db.data.iter_mut().zip(&dz) {
        *b += d;
    }
    let mut dxh = vec![T::zero(); cache.xh.len()];
    w.matvec_t_add(&dz, &mut dxh);
    (dxh, dc_prev)
}
