//! Minimal dense-tensor kernel set.
//!
//! Tensors are immutable row-major `f64` grids with a `C x H x W` convention
//! for rank-3 data (kernels are `C_out x C_in x kh x kw`). Every public
//! operation is a pure function; no operation lets a NaN or infinity escape.

use crate::error::{Result, SamError};

/// Dense rank-N real tensor. Row-major, double precision.
///
/// Zero extents are allowed (an empty channel stack is a valid operand for
/// channel concatenation); every other kernel rejects them during shape
/// validation.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Build a tensor, validating element count and finiteness.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let count: usize = shape.iter().product();
        if count != data.len() {
            return Err(SamError::Shape(format!(
                "shape {:?} implies {} values, got {}",
                shape,
                count,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(SamError::NonFinite(format!(
                "tensor of shape {shape:?} contains {v}"
            )));
        }
        Ok(Tensor { shape, data })
    }

    /// All-zero tensor of the given shape.
    pub fn zeros(shape: Vec<usize>) -> Self {
        let count = shape.iter().product();
        Tensor {
            data: vec![0.0; count],
            shape,
        }
    }

    /// Constant tensor.
    pub fn filled(shape: Vec<usize>, value: f64) -> Result<Self> {
        let count = shape.iter().product();
        Tensor::new(shape, vec![value; count])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Interpret as `(channels, height, width)`.
    pub fn dims3(&self) -> Result<(usize, usize, usize)> {
        match self.shape.as_slice() {
            [c, h, w] => Ok((*c, *h, *w)),
            other => Err(SamError::Shape(format!("expected rank-3 tensor, got {other:?}"))),
        }
    }

    /// Interpret as `(c_out, c_in, kh, kw)`.
    pub fn dims4(&self) -> Result<(usize, usize, usize, usize)> {
        match self.shape.as_slice() {
            [a, b, c, d] => Ok((*a, *b, *c, *d)),
            other => Err(SamError::Shape(format!("expected rank-4 tensor, got {other:?}"))),
        }
    }

    #[inline]
    pub fn at3(&self, c: usize, y: usize, x: usize) -> f64 {
        let (_, h, w) = (self.shape[0], self.shape[1], self.shape[2]);
        debug_assert!(c < self.shape[0] && y < h && x < w);
        self.data[(c * h + y) * w + x]
    }

    #[inline]
    pub(crate) fn set3(&mut self, c: usize, y: usize, x: usize, v: f64) {
        let (h, w) = (self.shape[1], self.shape[2]);
        self.data[(c * h + y) * w + x] = v;
    }

    #[inline]
    pub fn at4(&self, o: usize, i: usize, y: usize, x: usize) -> f64 {
        let (ci, kh, kw) = (self.shape[1], self.shape[2], self.shape[3]);
        self.data[((o * ci + i) * kh + y) * kw + x]
    }

    /// Elementwise map through `f`; the result is re-validated for finiteness.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Tensor> {
        Tensor::new(self.shape.clone(), self.data.iter().map(|&v| f(v)).collect())
    }
}

/// Padding mode for convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    /// No padding; the effective kernel must fit inside the input.
    Valid,
    /// Zero padding chosen so that stride 1 preserves `H x W`. Pads
    /// symmetrically, extra pixel on the bottom/right when odd. With stride
    /// `s` the output extent is `ceil(in / s)`.
    Same,
}

/// Elementwise activation kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

/// Elementwise binary op kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElemOp {
    Add,
    Mul,
}

/// Dilation expressed in the "holes" naming: `h` zeros between taps give
/// dilation `h + 1`.
pub fn dilation_from_holes(holes: usize) -> usize {
    holes + 1
}

/// Inverse of [`dilation_from_holes`].
pub fn holes_from_dilation(dilation: usize) -> usize {
    dilation.saturating_sub(1)
}

/// Spacing-aware kernel extent: `k + (k - 1) * (d - 1)`.
#[inline]
pub(crate) fn effective_extent(kernel: usize, dilation: usize) -> usize {
    kernel + (kernel - 1) * (dilation - 1)
}

/// Resolved geometry for one spatial axis of a windowed op.
#[derive(Clone, Copy, Debug)]
pub(crate) struct AxisGeom {
    pub out: usize,
    pub pad_begin: usize,
}

pub(crate) fn conv_axis_geom(
    input: usize,
    kernel: usize,
    stride: usize,
    dilation: usize,
    padding: Padding,
) -> Result<AxisGeom> {
    if stride == 0 || dilation == 0 || kernel == 0 {
        return Err(SamError::Config(
            "kernel, stride and dilation must be >= 1".into(),
        ));
    }
    let k_eff = effective_extent(kernel, dilation);
    match padding {
        Padding::Valid => {
            if k_eff > input {
                return Err(SamError::Shape(format!(
                    "effective kernel {k_eff} exceeds input extent {input} (valid padding)"
                )));
            }
            Ok(AxisGeom {
                out: (input - k_eff) / stride + 1,
                pad_begin: 0,
            })
        }
        Padding::Same => {
            let out = input.div_ceil(stride);
            let needed = (out - 1) * stride + k_eff;
            let pad_total = needed.saturating_sub(input);
            Ok(AxisGeom {
                out,
                pad_begin: pad_total / 2,
            })
        }
    }
}

/// 2-D convolution (cross-correlation) with stride, dilation and padding.
///
/// `kernel` is `C_out x C_in x kh x kw`, `bias` one value per output channel.
/// Dilation `d` spaces kernel taps `d` apart, i.e. inserts `d - 1` holes
/// between taps ([`dilation_from_holes`] converts from the holes naming).
pub fn conv2d(
    input: &Tensor,
    kernel: &Tensor,
    bias: &[f64],
    stride: usize,
    dilation: usize,
    padding: Padding,
) -> Result<Tensor> {
    let (c_in, h, w) = input.dims3()?;
    let (c_out, kc_in, kh, kw) = kernel.dims4()?;
    if kc_in != c_in {
        return Err(SamError::Shape(format!(
            "kernel expects {kc_in} input channels, input has {c_in}"
        )));
    }
    if bias.len() != c_out {
        return Err(SamError::Shape(format!(
            "bias has {} entries, kernel has {c_out} output channels",
            bias.len()
        )));
    }
    if c_in == 0 || h == 0 || w == 0 {
        return Err(SamError::Shape("conv2d input has a zero extent".into()));
    }
    let gy = conv_axis_geom(h, kh, stride, dilation, padding)?;
    let gx = conv_axis_geom(w, kw, stride, dilation, padding)?;

    let mut out = vec![0.0; c_out * gy.out * gx.out];
    for oc in 0..c_out {
        for oy in 0..gy.out {
            let base_y = (oy * stride) as isize - gy.pad_begin as isize;
            for ox in 0..gx.out {
                let base_x = (ox * stride) as isize - gx.pad_begin as isize;
                let mut acc = bias[oc];
                for ic in 0..c_in {
                    for ky in 0..kh {
                        let iy = base_y + (ky * dilation) as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..kw {
                            let ix = base_x + (kx * dilation) as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            acc += input.at3(ic, iy as usize, ix as usize)
                                * kernel.at4(oc, ic, ky, kx);
                        }
                    }
                }
                out[(oc * gy.out + oy) * gx.out + ox] = acc;
            }
        }
    }
    Tensor::new(vec![c_out, gy.out, gx.out], out)
}

/// Max pooling over square windows, valid-style (window must fit).
pub fn max_pool2d(input: &Tensor, kernel: usize, stride: usize) -> Result<Tensor> {
    max_pool2d_general(input, kernel, stride, 1, false)
}

/// General pooling used by the layer-graph executor: optional tap dilation and
/// ceil-mode (`same`-like) output sizing where out-of-range taps are skipped.
pub(crate) fn max_pool2d_general(
    input: &Tensor,
    kernel: usize,
    stride: usize,
    dilation: usize,
    ceil_mode: bool,
) -> Result<Tensor> {
    let (c, h, w) = input.dims3()?;
    if kernel == 0 || stride == 0 || dilation == 0 {
        return Err(SamError::Config(
            "pool kernel, stride and dilation must be >= 1".into(),
        ));
    }
    let padding = if ceil_mode { Padding::Same } else { Padding::Valid };
    let gy = conv_axis_geom(h, kernel, stride, dilation, padding)?;
    let gx = conv_axis_geom(w, kernel, stride, dilation, padding)?;

    let mut out = vec![0.0; c * gy.out * gx.out];
    for ch in 0..c {
        for oy in 0..gy.out {
            let base_y = (oy * stride) as isize - gy.pad_begin as isize;
            for ox in 0..gx.out {
                let base_x = (ox * stride) as isize - gx.pad_begin as isize;
                let mut best = f64::NEG_INFINITY;
                for ky in 0..kernel {
                    let iy = base_y + (ky * dilation) as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for kx in 0..kernel {
                        let ix = base_x + (kx * dilation) as isize;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        let v = input.at3(ch, iy as usize, ix as usize);
                        if v > best {
                            best = v;
                        }
                    }
                }
                if best == f64::NEG_INFINITY {
                    return Err(SamError::Shape(
                        "pooling window fell entirely outside the input".into(),
                    ));
                }
                out[(ch * gy.out + oy) * gx.out + ox] = best;
            }
        }
    }
    Tensor::new(vec![c, gy.out, gx.out], out)
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Elementwise nonlinearity.
pub fn activation(input: &Tensor, kind: Activation) -> Result<Tensor> {
    match kind {
        Activation::Sigmoid => input.map(sigmoid),
        Activation::Tanh => input.map(f64::tanh),
        Activation::Relu => input.map(|v| v.max(0.0)),
    }
}

/// Spatial softmax over a single-channel map.
///
/// Accepts `1 x H x W` (or rank-2 `H x W`) and normalizes over all cells with
/// max-subtraction for overflow safety. The output sums to 1.
pub fn softmax_spatial(z: &Tensor) -> Result<Tensor> {
    let ok = matches!(z.shape(), [1, _, _] | [_, _]) && !z.is_empty();
    if !ok {
        return Err(SamError::Shape(format!(
            "softmax_spatial expects a non-empty single-channel map, got {:?}",
            z.shape()
        )));
    }
    let max = z.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = z.data().iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    Tensor::new(z.shape().to_vec(), exp.into_iter().map(|e| e / sum).collect())
}

/// Elementwise add/mul. For `Mul`, `b` may be a `1 x H x W` mask broadcast
/// across all channels of `a`.
pub fn elementwise(a: &Tensor, b: &Tensor, op: ElemOp) -> Result<Tensor> {
    if a.shape() == b.shape() {
        let data = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| match op {
                ElemOp::Add => x + y,
                ElemOp::Mul => x * y,
            })
            .collect();
        return Tensor::new(a.shape().to_vec(), data);
    }
    if op == ElemOp::Mul {
        if let (Ok((ca, ha, wa)), Ok((cb, hb, wb))) = (a.dims3(), b.dims3()) {
            if cb == 1 && ha == hb && wa == wb {
                let mut out = vec![0.0; ca * ha * wa];
                for c in 0..ca {
                    for y in 0..ha {
                        for x in 0..wa {
                            out[(c * ha + y) * wa + x] = a.at3(c, y, x) * b.at3(0, y, x);
                        }
                    }
                }
                return Tensor::new(vec![ca, ha, wa], out);
            }
        }
    }
    Err(SamError::Shape(format!(
        "incompatible shapes {:?} vs {:?} for {:?}",
        a.shape(),
        b.shape(),
        op
    )))
}

/// Source coordinate mapping for bilinear resize under half-pixel-center
/// alignment: `src = (i + 0.5) * in/out - 0.5`, clamped to the input range.
/// Returns the two source indices and the interpolation weight of the second.
#[inline]
pub(crate) fn lerp_coords(i: usize, out_len: usize, in_len: usize) -> (usize, usize, f64) {
    let scale = in_len as f64 / out_len as f64;
    let src = (i as f64 + 0.5) * scale - 0.5;
    let src = src.clamp(0.0, (in_len - 1) as f64);
    let i0 = src.floor() as usize;
    let i1 = (i0 + 1).min(in_len - 1);
    (i0, i1, src - i0 as f64)
}

/// Bilinear resize per channel with half-pixel-center alignment.
///
/// A target equal to the source is a bit-identical copy; constant maps stay
/// constant and outputs never leave `[min(input), max(input)]`.
pub fn bilinear_resize(input: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    let (c, h, w) = input.dims3()?;
    if out_h == 0 || out_w == 0 {
        return Err(SamError::Config("resize target extents must be positive".into()));
    }
    if h == 0 || w == 0 || c == 0 {
        return Err(SamError::Shape("bilinear_resize input has a zero extent".into()));
    }
    if out_h == h && out_w == w {
        return Ok(input.clone());
    }
    let mut out = vec![0.0; c * out_h * out_w];
    for ch in 0..c {
        for oy in 0..out_h {
            let (y0, y1, fy) = lerp_coords(oy, out_h, h);
            for ox in 0..out_w {
                let (x0, x1, fx) = lerp_coords(ox, out_w, w);
                let v00 = input.at3(ch, y0, x0);
                let v01 = input.at3(ch, y0, x1);
                let v10 = input.at3(ch, y1, x0);
                let v11 = input.at3(ch, y1, x1);
                let top = v00 + (v01 - v00) * fx;
                let bot = v10 + (v11 - v10) * fx;
                out[(ch * out_h + oy) * out_w + ox] = top + (bot - top) * fy;
            }
        }
    }
    Tensor::new(vec![c, out_h, out_w], out)
}

/// Stack `b`'s channels after `a`'s. Spatial extents must match; either side
/// may have zero channels.
pub fn concat_channels(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (ca, ha, wa) = a.dims3()?;
    let (cb, hb, wb) = b.dims3()?;
    if ca == 0 {
        return Ok(b.clone());
    }
    if cb == 0 {
        return Ok(a.clone());
    }
    if (ha, wa) != (hb, wb) {
        return Err(SamError::Shape(format!(
            "concat_channels spatial mismatch: {ha}x{wa} vs {hb}x{wb}"
        )));
    }
    let mut data = Vec::with_capacity((ca + cb) * ha * wa);
    data.extend_from_slice(a.data());
    data.extend_from_slice(b.data());
    Tensor::new(vec![ca + cb, ha, wa], data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t3(c: usize, h: usize, w: usize, v: Vec<f64>) -> Tensor {
        Tensor::new(vec![c, h, w], v).unwrap()
    }

    fn input_3x3() -> Tensor {
        t3(1, 3, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0])
    }

    #[test]
    fn rejects_nan() {
        assert!(matches!(
            Tensor::new(vec![2], vec![1.0, f64::NAN]),
            Err(SamError::NonFinite(_))
        ));
    }

    #[test]
    fn conv_identity_kernel() {
        let x = input_3x3();
        let k = Tensor::new(vec![1, 1, 1, 1], vec![1.0]).unwrap();
        let y = conv2d(&x, &k, &[0.0], 1, 1, Padding::Valid).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn conv_window_sums() {
        // Oracle: direct window sums of the 2x2 all-ones kernel.
        let x = input_3x3();
        let k = Tensor::filled(vec![1, 1, 2, 2], 1.0).unwrap();
        let y = conv2d(&x, &k, &[0.0], 1, 1, Padding::Valid).unwrap();
        assert_eq!(y.shape(), &[1, 2, 2]);
        assert_eq!(y.data(), &[12.0, 16.0, 24.0, 28.0]);
    }

    #[test]
    fn conv_dilated_window_sum() {
        // Taps land on the four corners: 1 + 3 + 7 + 9.
        let x = input_3x3();
        let k = Tensor::filled(vec![1, 1, 2, 2], 1.0).unwrap();
        let y = conv2d(&x, &k, &[0.0], 1, 2, Padding::Valid).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1]);
        assert_eq!(y.data(), &[20.0]);
    }

    #[test]
    fn conv_same_preserves_extent() {
        let x = input_3x3();
        let k = Tensor::filled(vec![1, 1, 3, 3], 1.0).unwrap();
        let y = conv2d(&x, &k, &[0.0], 1, 1, Padding::Same).unwrap();
        assert_eq!(y.shape(), &[1, 3, 3]);
        // center cell sees the full input
        assert_eq!(y.at3(0, 1, 1), 45.0);
    }

    #[test]
    fn conv_channel_mismatch_rejected() {
        let x = input_3x3();
        let k = Tensor::filled(vec![1, 2, 2, 2], 1.0).unwrap();
        let err = conv2d(&x, &k, &[0.0], 1, 1, Padding::Valid).unwrap_err();
        assert!(matches!(err, SamError::Shape(_)));
    }

    #[test]
    fn conv_oversized_kernel_rejected() {
        let x = input_3x3();
        let k = Tensor::filled(vec![1, 1, 4, 4], 1.0).unwrap();
        let err = conv2d(&x, &k, &[0.0], 1, 1, Padding::Valid).unwrap_err();
        assert!(matches!(err, SamError::Shape(_)));
    }

    #[test]
    fn pool_constant_map() {
        let x = Tensor::filled(vec![1, 4, 4], 3.5).unwrap();
        let y = max_pool2d(&x, 2, 2).unwrap();
        assert_eq!(y.shape(), &[1, 2, 2]);
        assert!(y.data().iter().all(|&v| v == 3.5));
    }

    #[test]
    fn pool_single_window() {
        let x = t3(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let y = max_pool2d(&x, 2, 2).unwrap();
        assert_eq!(y.data(), &[4.0]);
    }

    #[test]
    fn pool_matches_exhaustive_windows() {
        // Oracle: explicit max over each 2x2 window.
        let vals: Vec<f64> = (0..16).map(|i| ((i * 7919 + 13) % 97) as f64).collect();
        let x = t3(1, 4, 4, vals.clone());
        let y = max_pool2d(&x, 2, 2).unwrap();
        for oy in 0..2 {
            for ox in 0..2 {
                let mut best = f64::NEG_INFINITY;
                for dy in 0..2 {
                    for dx in 0..2 {
                        best = best.max(vals[(oy * 2 + dy) * 4 + (ox * 2 + dx)]);
                    }
                }
                assert_eq!(y.at3(0, oy, ox), best);
            }
        }
    }

    #[test]
    fn activations_at_zero_and_signs() {
        let z = Tensor::zeros(vec![1, 2, 2]);
        assert!(activation(&z, Activation::Sigmoid)
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 0.5));
        assert!(activation(&z, Activation::Tanh)
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 0.0));
        let x = Tensor::new(vec![2], vec![-1.0, 2.0]).unwrap();
        assert_eq!(activation(&x, Activation::Relu).unwrap().data(), &[0.0, 2.0]);
    }

    #[test]
    fn softmax_uniform() {
        let z = Tensor::filled(vec![1, 2, 3], 4.2).unwrap();
        let a = softmax_spatial(&z).unwrap();
        for &v in a.data() {
            assert!((v - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_shift_invariant() {
        let z = t3(1, 2, 2, vec![0.3, -1.2, 2.0, 0.7]);
        let shifted = z.map(|v| v + 123.456).unwrap();
        let a = softmax_spatial(&z).unwrap();
        let b = softmax_spatial(&shifted).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_direct_evaluation() {
        // Oracle: exp(z) / sum(exp(z)) for z = (0,0),(0,ln 3)
        // -> (1,1,1,3)/6 = (1/6, 1/6, 1/6, 1/2).
        let z = t3(1, 2, 2, vec![0.0, 0.0, 0.0, 3.0f64.ln()]);
        let a = softmax_spatial(&z).unwrap();
        let expect = [1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.5];
        let sum: f64 = a.data().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for (got, want) in a.data().iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn elementwise_identities() {
        let a = t3(2, 1, 2, vec![1.0, -2.0, 3.0, 4.0]);
        let ones = Tensor::filled(vec![2, 1, 2], 1.0).unwrap();
        let zeros = Tensor::zeros(vec![2, 1, 2]);
        assert_eq!(elementwise(&a, &ones, ElemOp::Mul).unwrap(), a);
        assert!(elementwise(&a, &zeros, ElemOp::Mul)
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 0.0));
        assert_eq!(elementwise(&a, &zeros, ElemOp::Add).unwrap(), a);
    }

    #[test]
    fn elementwise_broadcast_matches_loop() {
        let a = t3(2, 2, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let mask = t3(1, 2, 2, vec![0.5, 1.0, 0.0, 2.0]);
        let got = elementwise(&a, &mask, ElemOp::Mul).unwrap();
        for c in 0..2 {
            for y in 0..2 {
                for x in 0..2 {
                    assert_eq!(got.at3(c, y, x), a.at3(c, y, x) * mask.at3(0, y, x));
                }
            }
        }
    }

    #[test]
    fn elementwise_shape_mismatch_rejected() {
        let a = Tensor::zeros(vec![2, 2, 2]);
        let b = Tensor::zeros(vec![2, 2, 3]);
        assert!(elementwise(&a, &b, ElemOp::Add).is_err());
    }

    #[test]
    fn bilinear_constant_and_identity() {
        let c = Tensor::filled(vec![1, 3, 4], 5.0).unwrap();
        let up = bilinear_resize(&c, 7, 9).unwrap();
        assert!(up.data().iter().all(|&v| v == 5.0));
        let x = t3(1, 2, 2, vec![0.1, 0.9, -0.4, 2.0]);
        assert_eq!(bilinear_resize(&x, 2, 2).unwrap(), x);
    }

    #[test]
    fn bilinear_half_pixel_row() {
        // (i + 0.5) * 0.5 - 0.5 over a 2-cell row gives 0, 0.25, 0.75, 1.
        let x = t3(1, 1, 2, vec![0.0, 1.0]);
        let y = bilinear_resize(&x, 1, 4).unwrap();
        let expect = [0.0, 0.25, 0.75, 1.0];
        for (got, want) in y.data().iter().zip(expect) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn concat_counts_and_order() {
        let a = Tensor::filled(vec![512, 2, 2], 1.0).unwrap();
        let b = Tensor::filled(vec![16, 2, 2], 2.0).unwrap();
        let cat = concat_channels(&a, &b).unwrap();
        assert_eq!(cat.shape(), &[528, 2, 2]);
        // leading channels are `a` exactly
        assert_eq!(&cat.data()[..a.len()], a.data());

        let empty = Tensor::zeros(vec![0, 2, 2]);
        assert_eq!(concat_channels(&a, &empty).unwrap(), a);
    }

    #[test]
    fn concat_spatial_mismatch_rejected() {
        let a = Tensor::zeros(vec![1, 2, 2]);
        let b = Tensor::zeros(vec![1, 3, 2]);
        assert!(concat_channels(&a, &b).is_err());
    }

    #[test]
    fn holes_naming_roundtrip() {
        assert_eq!(dilation_from_holes(3), 4);
        assert_eq!(holes_from_dilation(4), 3);
        assert_eq!(holes_from_dilation(1), 0);
    }
}
