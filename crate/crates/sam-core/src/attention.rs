//! Attentive convolutional LSTM.
//!
//! A gated convolutional recurrence over a *static* feature stack: at every
//! timestep a spatial attention map is computed from the original input and
//! the previous hidden state, the input is reweighted by it, and the gates
//! update the cell. Iterating refines the features rather than tracking time.

use crate::error::{Result, SamError};
use crate::tensor::{
    activation, conv2d, elementwise, softmax_spatial, Activation, ElemOp, Padding, Tensor,
};

/// Gate, recurrent and attention kernels. All kernels share the channel count
/// `C` and an odd kernel size so that `same` padding preserves shape; `v_a`
/// maps the `C`-channel attention preactivation down to one channel.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentiveLstmParams {
    pub w_i: Tensor,
    pub w_f: Tensor,
    pub w_o: Tensor,
    pub w_c: Tensor,
    pub u_i: Tensor,
    pub u_f: Tensor,
    pub u_o: Tensor,
    pub u_c: Tensor,
    pub b_i: Tensor,
    pub b_f: Tensor,
    pub b_o: Tensor,
    pub b_c: Tensor,
    pub w_a: Tensor,
    pub u_a: Tensor,
    pub v_a: Tensor,
    pub b_a: Tensor,
}

impl AttentiveLstmParams {
    /// All-zero parameter set for `C` channels and odd kernel size `k`.
    pub fn zeros(channels: usize, kernel: usize) -> Result<Self> {
        if kernel % 2 == 0 {
            return Err(SamError::Config("recurrence kernel size must be odd".into()));
        }
        let kk = || Tensor::zeros(vec![channels, channels, kernel, kernel]);
        let bb = || Tensor::zeros(vec![channels]);
        Ok(AttentiveLstmParams {
            w_i: kk(),
            w_f: kk(),
            w_o: kk(),
            w_c: kk(),
            u_i: kk(),
            u_f: kk(),
            u_o: kk(),
            u_c: kk(),
            b_i: bb(),
            b_f: bb(),
            b_o: bb(),
            b_c: bb(),
            w_a: kk(),
            u_a: kk(),
            v_a: Tensor::zeros(vec![1, channels, kernel, kernel]),
            b_a: bb(),
        })
    }

    pub fn channels(&self) -> usize {
        self.w_i.shape()[0]
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.channels();
        let k = self.w_i.shape()[2];
        if k % 2 == 0 {
            return Err(SamError::Config("recurrence kernel size must be odd".into()));
        }
        for (name, t) in [
            ("w_i", &self.w_i),
            ("w_f", &self.w_f),
            ("w_o", &self.w_o),
            ("w_c", &self.w_c),
            ("u_i", &self.u_i),
            ("u_f", &self.u_f),
            ("u_o", &self.u_o),
            ("u_c", &self.u_c),
            ("w_a", &self.w_a),
            ("u_a", &self.u_a),
        ] {
            if t.shape() != [c, c, k, k] {
                return Err(SamError::Shape(format!(
                    "{name} has shape {:?}, expected {:?}",
                    t.shape(),
                    [c, c, k, k]
                )));
            }
        }
        if self.v_a.shape() != [1, c, k, k] {
            return Err(SamError::Shape(format!(
                "v_a has shape {:?}, expected {:?}",
                self.v_a.shape(),
                [1, c, k, k]
            )));
        }
        for (name, t) in [
            ("b_i", &self.b_i),
            ("b_f", &self.b_f),
            ("b_o", &self.b_o),
            ("b_c", &self.b_c),
            ("b_a", &self.b_a),
        ] {
            if t.shape() != [c] {
                return Err(SamError::Shape(format!(
                    "{name} has shape {:?}, expected [{c}]",
                    t.shape()
                )));
            }
        }
        Ok(())
    }
}

/// Hidden state / memory cell pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub hidden: Tensor,
    pub cell: Tensor,
}

impl LstmState {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        LstmState {
            hidden: Tensor::zeros(vec![channels, height, width]),
            cell: Tensor::zeros(vec![channels, height, width]),
        }
    }
}

fn same_conv(input: &Tensor, kernel: &Tensor, bias: &[f64]) -> Result<Tensor> {
    conv2d(input, kernel, bias, 1, 1, Padding::Same)
}

fn zero_bias(kernel: &Tensor) -> Vec<f64> {
    vec![0.0; kernel.shape()[0]]
}

/// Attention preactivation and normalized attention map:
/// `z = v_a * tanh(w_a * x + u_a * h_prev + b_a)`, `a = softmax(z)`.
pub fn attention_map(
    x: &Tensor,
    h_prev: &Tensor,
    params: &AttentiveLstmParams,
) -> Result<(Tensor, Tensor)> {
    if x.shape() != h_prev.shape() {
        return Err(SamError::Shape(format!(
            "input {:?} and hidden state {:?} differ",
            x.shape(),
            h_prev.shape()
        )));
    }
    let wx = same_conv(x, &params.w_a, &zero_bias(&params.w_a))?;
    let uh = same_conv(h_prev, &params.u_a, params.b_a.data())?;
    let pre = activation(&elementwise(&wx, &uh, ElemOp::Add)?, Activation::Tanh)?;
    let z = same_conv(&pre, &params.v_a, &[0.0])?;
    let a = softmax_spatial(&z)?;
    Ok((z, a))
}

/// Reweight every channel of `x` by the single-channel attention map.
pub fn apply_attention(x: &Tensor, a: &Tensor) -> Result<Tensor> {
    elementwise(x, a, ElemOp::Mul)
}

fn gate(
    x: &Tensor,
    h: &Tensor,
    w: &Tensor,
    u: &Tensor,
    b: &Tensor,
    kind: Activation,
) -> Result<Tensor> {
    let wx = same_conv(x, w, &zero_bias(w))?;
    let uh = same_conv(h, u, b.data())?;
    activation(&elementwise(&wx, &uh, ElemOp::Add)?, kind)
}

/// One gated update:
/// sigmoid input/forget/output gates, tanh candidate, then
/// `cell' = f (.) cell + i (.) g` and `hidden' = o (.) tanh(cell')`.
pub fn lstm_step(
    x_tilde: &Tensor,
    state: &LstmState,
    params: &AttentiveLstmParams,
) -> Result<LstmState> {
    if x_tilde.shape() != state.hidden.shape() {
        return Err(SamError::Shape(format!(
            "input {:?} and state {:?} differ",
            x_tilde.shape(),
            state.hidden.shape()
        )));
    }
    let i = gate(x_tilde, &state.hidden, &params.w_i, &params.u_i, &params.b_i, Activation::Sigmoid)?;
    let f = gate(x_tilde, &state.hidden, &params.w_f, &params.u_f, &params.b_f, Activation::Sigmoid)?;
    let o = gate(x_tilde, &state.hidden, &params.w_o, &params.u_o, &params.b_o, Activation::Sigmoid)?;
    let g = gate(x_tilde, &state.hidden, &params.w_c, &params.u_c, &params.b_c, Activation::Tanh)?;

    let keep = elementwise(&f, &state.cell, ElemOp::Mul)?;
    let write = elementwise(&i, &g, ElemOp::Mul)?;
    let cell = elementwise(&keep, &write, ElemOp::Add)?;
    let hidden = elementwise(&o, &activation(&cell, Activation::Tanh)?, ElemOp::Mul)?;
    Ok(LstmState { hidden, cell })
}

/// Iterative refinement from a zero initial state. The attention at every
/// step reads the *original* `x`, not the reweighted input. Returns the final
/// hidden state (the refined stack) and the hidden state of every step.
pub fn refine(
    x: &Tensor,
    params: &AttentiveLstmParams,
    t_steps: usize,
) -> Result<(Tensor, Vec<Tensor>)> {
    if t_steps < 1 {
        return Err(SamError::Config("refinement needs at least one timestep".into()));
    }
    params.validate()?;
    let (c, h, w) = x.dims3()?;
    if c != params.channels() {
        return Err(SamError::Shape(format!(
            "input has {c} channels, parameters expect {}",
            params.channels()
        )));
    }
    let mut state = LstmState::zeros(c, h, w);
    let mut hiddens = Vec::with_capacity(t_steps);
    for _ in 0..t_steps {
        let (_, a) = attention_map(x, &state.hidden, params)?;
        let x_tilde = apply_attention(x, &a)?;
        state = lstm_step(&x_tilde, &state, params)?;
        hiddens.push(state.hidden.clone());
    }
    Ok((state.hidden.clone(), hiddens))
}

/// Default number of refinement timesteps; further iterations bring no
/// significant improvement.
pub const DEFAULT_T_STEPS: usize = 4;
