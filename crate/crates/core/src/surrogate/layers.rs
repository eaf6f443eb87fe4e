//! Layer math shared by every model, generic over the element type so the
//! training path runs in f32 while the gradient checker reruns the exact
//! same code in f64.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Minimal float abstraction for the network code.
pub trait Real:
    Copy
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Send
    + Sync
{
    const ZERO: Self;
    const ONE: Self;
    fn exp(self) -> Self;
    fn from_f32(v: f32) -> Self;
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Real for f32 {
    const ZERO: f32 = 0.0;
    const ONE: f32 = 1.0;
    fn exp(self) -> f32 {
        f32::exp(self)
    }
    fn from_f32(v: f32) -> f32 {
        v
    }
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
    fn from_f64(v: f64) -> f32 {
        v as f32
    }
}

impl Real for f64 {
    const ZERO: f64 = 0.0;
    const ONE: f64 = 1.0;
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn from_f32(v: f32) -> f64 {
        f64::from(v)
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn from_f64(v: f64) -> f64 {
        v
    }
}

/// Fully connected layer, weights row-major `[output][input]`.
#[derive(Debug, Clone)]
pub struct Dense<T> {
    pub w: Vec<T>,
    pub b: Vec<T>,
    pub input: usize,
    pub output: usize,
}

impl<T: Real> Dense<T> {
    pub fn zeros(input: usize, output: usize) -> Dense<T> {
        Dense {
            w: vec![T::ZERO; input * output],
            b: vec![T::ZERO; output],
            input,
            output,
        }
    }

    pub fn forward(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.input);
        debug_assert_eq!(y.len(), self.output);
        for (o, y_o) in y.iter_mut().enumerate() {
            let row = &self.w[o * self.input..(o + 1) * self.input];
            let mut acc = self.b[o];
            for (w, xv) in row.iter().zip(x.iter()) {
                acc += *w * *xv;
            }
            *y_o = acc;
        }
    }

    /// Accumulates weight gradients into `grad` and, when given, writes the
    /// input gradient into `dx` (overwriting it).
    pub fn backward(&self, x: &[T], dy: &[T], grad: &mut Dense<T>, dx: Option<&mut [T]>) {
        for (o, d) in dy.iter().enumerate() {
            grad.b[o] += *d;
            let row = &mut grad.w[o * self.input..(o + 1) * self.input];
            for (g, xv) in row.iter_mut().zip(x.iter()) {
                *g += *d * *xv;
            }
        }
        if let Some(dx) = dx {
            for v in dx.iter_mut() {
                *v = T::ZERO;
            }
            for (o, d) in dy.iter().enumerate() {
                let row = &self.w[o * self.input..(o + 1) * self.input];
                for (dxv, w) in dx.iter_mut().zip(row.iter()) {
                    *dxv += *w * *d;
                }
            }
        }
    }
}

/// Square same-padding convolution, weights `[out_ch][in_ch][k][k]`.
#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub w: Vec<T>,
    pub b: Vec<T>,
    pub in_ch: usize,
    pub out_ch: usize,
    /// Spatial side length (input and output are `side x side`).
    pub side: usize,
    pub k: usize,
}

impl<T: Real> Conv2d<T> {
    pub fn zeros(in_ch: usize, out_ch: usize, side: usize, k: usize) -> Conv2d<T> {
        Conv2d {
            w: vec![T::ZERO; out_ch * in_ch * k * k],
            b: vec![T::ZERO; out_ch],
            in_ch,
            out_ch,
            side,
            k,
        }
    }

    pub fn forward(&self, x: &[T], y: &mut [T]) {
        let (s, k, pad) = (self.side, self.k, self.k / 2);
        debug_assert_eq!(x.len(), self.in_ch * s * s);
        debug_assert_eq!(y.len(), self.out_ch * s * s);
        for oc in 0..self.out_ch {
            let out_plane = &mut y[oc * s * s..(oc + 1) * s * s];
            for v in out_plane.iter_mut() {
                *v = self.b[oc];
            }
            for ic in 0..self.in_ch {
                let in_plane = &x[ic * s * s..(ic + 1) * s * s];
                let w_base = (oc * self.in_ch + ic) * k * k;
                for ky in 0..k {
                    for kx in 0..k {
                        let w = self.w[w_base + ky * k + kx];
                        let (oy0, oy1) = row_range(s, ky, pad);
                        for oy in oy0..oy1 {
                            let iy = (oy + ky - pad) * s;
                            let (ox0, ox1) = row_range(s, kx, pad);
                            let out_row = &mut out_plane[oy * s..oy * s + s];
                            for ox in ox0..ox1 {
                                out_row[ox] += w * in_plane[iy + ox + kx - pad];
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn backward(&self, x: &[T], dy: &[T], grad: &mut Conv2d<T>, dx: Option<&mut [T]>) {
        let (s, k, pad) = (self.side, self.k, self.k / 2);
        for oc in 0..self.out_ch {
            let dy_plane = &dy[oc * s * s..(oc + 1) * s * s];
            for d in dy_plane.iter() {
                grad.b[oc] += *d;
            }
            for ic in 0..self.in_ch {
                let in_plane = &x[ic * s * s..(ic + 1) * s * s];
                let w_base = (oc * self.in_ch + ic) * k * k;
                for ky in 0..k {
                    for kx in 0..k {
                        let mut acc = T::ZERO;
                        let (oy0, oy1) = row_range(s, ky, pad);
                        for oy in oy0..oy1 {
                            let iy = (oy + ky - pad) * s;
                            let (ox0, ox1) = row_range(s, kx, pad);
                            let dy_row = &dy_plane[oy * s..oy * s + s];
                            for ox in ox0..ox1 {
                                acc += dy_row[ox] * in_plane[iy + ox + kx - pad];
                            }
                        }
                        grad.w[w_base + ky * k + kx] += acc;
                    }
                }
            }
        }
        if let Some(dx) = dx {
            for v in dx.iter_mut() {
                *v = T::ZERO;
            }
            for oc in 0..self.out_ch {
                let dy_plane = &dy[oc * s * s..(oc + 1) * s * s];
                for ic in 0..self.in_ch {
                    let dx_plane = &mut dx[ic * s * s..(ic + 1) * s * s];
                    let w_base = (oc * self.in_ch + ic) * k * k;
                    for ky in 0..k {
                        for kx in 0..k {
                            let w = self.w[w_base + ky * k + kx];
                            let (oy0, oy1) = row_range(s, ky, pad);
                            for oy in oy0..oy1 {
                                let iy = (oy + ky - pad) * s;
                                let (ox0, ox1) = row_range(s, kx, pad);
                                let dy_row = &dy_plane[oy * s..oy * s + s];
                                for ox in ox0..ox1 {
                                    dx_plane[iy + ox + kx - pad] += w * dy_row[ox];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Output rows for which input row `oy + ky - pad` stays in bounds.
fn row_range(s: usize, k_off: usize, pad: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(k_off);
    let hi = (s + pad - k_off).min(s);
    (lo, hi)
}

/// ELU applied in place. The derivative is recoverable from the output:
/// 1 for positive outputs, `y + 1` (= e^x) otherwise.
pub fn elu_in_place<T: Real>(xs: &mut [T]) {
    for x in xs.iter_mut() {
        if *x < T::ZERO {
            *x = x.exp() - T::ONE;
        }
    }
}

/// Multiplies upstream gradients by ELU'(x), reconstructed from the stored
/// outputs.
pub fn elu_backward<T: Real>(y: &[T], dy: &mut [T]) {
    for (d, out) in dy.iter_mut().zip(y.iter()) {
        if *out < T::ZERO {
            *d = *d * (*out + T::ONE);
        }
    }
}

/// 2x2 stride-2 max pooling. `idx` records the within-plane argmax of every
/// output element for the backward pass. Ties take the first element in
/// row-major window order.
pub fn maxpool2_forward<T: Real>(x: &[T], ch: usize, side: usize, y: &mut [T], idx: &mut [u32]) {
    let out = side / 2;
    debug_assert_eq!(x.len(), ch * side * side);
    debug_assert_eq!(y.len(), ch * out * out);
    for c in 0..ch {
        let plane = &x[c * side * side..(c + 1) * side * side];
        for oy in 0..out {
            for ox in 0..out {
                let mut best = plane[2 * oy * side + 2 * ox];
                let mut best_i = 2 * oy * side + 2 * ox;
                for (wy, wx) in [(0, 1), (1, 0), (1, 1)] {
                    let i = (2 * oy + wy) * side + 2 * ox + wx;
                    if plane[i] > best {
                        best = plane[i];
                        best_i = i;
                    }
                }
                y[c * out * out + oy * out + ox] = best;
                idx[c * out * out + oy * out + ox] = best_i as u32;
            }
        }
    }
}

/// Routes gradients back to the argmax positions; `dx` is overwritten.
pub fn maxpool2_backward<T: Real>(dy: &[T], idx: &[u32], ch: usize, side: usize, dx: &mut [T]) {
    let out = side / 2;
    for v in dx.iter_mut() {
        *v = T::ZERO;
    }
    for c in 0..ch {
        for o in 0..out * out {
            dx[c * side * side + idx[c * out * out + o] as usize] += dy[c * out * out + o];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_forward_matches_hand_computation() {
        let mut layer = Dense::<f64>::zeros(3, 2);
        layer.w = vec![1.0, 2.0, 3.0, -1.0, 0.5, 0.0];
        layer.b = vec![0.25, -0.5];
        let x = [1.0, -2.0, 4.0];
        let mut y = [0.0; 2];
        layer.forward(&x, &mut y);
        assert_eq!(y[0], 0.25 + 1.0 - 4.0 + 12.0);
        assert_eq!(y[1], -0.5 - 1.0 - 1.0);
    }

    #[test]
    fn elu_is_identity_for_positive_and_saturates_negative() {
        let mut xs = [2.0f64, 0.0, -1.0, -30.0];
        elu_in_place(&mut xs);
        assert_eq!(xs[0], 2.0);
        assert_eq!(xs[1], 0.0);
        assert!((xs[2] - ((-1.0f64).exp() - 1.0)).abs() < 1e-15);
        assert!(xs[3] > -1.0 && xs[3] < -0.99);
    }

    #[test]
    fn maxpool_picks_maxima_and_routes_gradients() {
        // one channel 4x4
        let x = [
            1.0f64, 2.0, 0.0, 0.0, //
            3.0, 0.0, 0.0, 5.0, //
            0.0, 0.0, 0.0, 0.0, //
            0.0, 7.0, 0.0, -1.0,
        ];
        let mut y = [0.0; 4];
        let mut idx = [0u32; 4];
        maxpool2_forward(&x, 1, 4, &mut y, &mut idx);
        assert_eq!(y, [3.0, 5.0, 7.0, 0.0]);
        let dy = [1.0, 10.0, 100.0, 1000.0];
        let mut dx = [0.0; 16];
        maxpool2_backward(&dy, &idx, 1, 4, &mut dx);
        assert_eq!(dx[4], 1.0); // 3.0 at (row 1, col 0)
        assert_eq!(dx[7], 10.0); // 5.0
        assert_eq!(dx[13], 100.0); // 7.0
        // the zero window routed to its first element (ties take the first)
        assert_eq!(dx[10], 1000.0);
    }

    #[test]
    fn conv_same_padding_identity_kernel() {
        // a 5x5 kernel with a single 1 at the center must reproduce the input
        let mut conv = Conv2d::<f64>::zeros(1, 1, 6, 5);
        conv.w[2 * 5 + 2] = 1.0;
        let x: Vec<f64> = (0..36).map(|i| i as f64 * 0.1).collect();
        let mut y = vec![0.0; 36];
        conv.forward(&x, &mut y);
        for i in 0..36 {
            assert!((y[i] - x[i]).abs() < 1e-12, "at {i}");
        }
    }

    #[test]
    fn conv_bias_fills_output() {
        let mut conv = Conv2d::<f64>::zeros(2, 3, 4, 5);
        conv.b = vec![1.0, 2.0, 3.0];
        let x = vec![0.0; 2 * 16];
        let mut y = vec![0.0; 3 * 16];
        conv.forward(&x, &mut y);
        assert!(y[..16].iter().all(|v| *v == 1.0));
        assert!(y[16..32].iter().all(|v| *v == 2.0));
        assert!(y[32..].iter().all(|v| *v == 3.0));
    }
}
