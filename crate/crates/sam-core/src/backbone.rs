//! Layer graphs for feature-extraction networks and the stride-to-dilation
//! transform.
//!
//! The transform takes a layer with stride `s > 1`, sets its stride to 1 and
//! multiplies the dilation of every layer that follows by `s`. Filters then
//! keep operating on the scale they were built for while the output
//! resolution grows by `s`; parameter shapes never change.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SamError};
use crate::init::glorot_uniform;
use crate::tensor::{
    self, activation, conv2d, effective_extent, elementwise, Activation, ElemOp, Padding, Tensor,
};

/// Convolution layer description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub dilation: usize,
    pub padding: Padding,
}

impl ConvSpec {
    pub fn same(out_channels: usize, kernel: usize, stride: usize) -> Self {
        ConvSpec {
            out_channels,
            kernel,
            stride,
            dilation: 1,
            padding: Padding::Same,
        }
    }
}

/// One layer of a [`NetworkSpec`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LayerSpec {
    Conv(ConvSpec),
    /// Square max pooling. `dilation > 1` records conv-equivalent tap spacing
    /// introduced by the dilation transform on downstream pools.
    MaxPool {
        kernel: usize,
        stride: usize,
        dilation: usize,
    },
    Activation(Activation),
    /// Two shape-preserving convs with an optional identity shortcut:
    /// `y = x + conv2(relu(conv1(x)))` (or without the `x +`).
    Residual {
        conv1: ConvSpec,
        conv2: ConvSpec,
        identity_shortcut: bool,
    },
}

impl LayerSpec {
    fn stride(&self) -> usize {
        match self {
            LayerSpec::Conv(c) => c.stride,
            LayerSpec::MaxPool { stride, .. } => *stride,
            LayerSpec::Activation(_) => 1,
            // residual inner convs are shape-preserving
            LayerSpec::Residual { .. } => 1,
        }
    }
}

/// Ordered layer graph with a declared input channel count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkSpec {
    pub input_channels: usize,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(input_channels: usize, layers: Vec<LayerSpec>) -> Result<Self> {
        let net = NetworkSpec {
            input_channels,
            layers,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 {
            return Err(SamError::Config("input channel count must be >= 1".into()));
        }
        let mut channels = self.input_channels;
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                LayerSpec::Conv(c) => {
                    check_conv(c, i)?;
                    channels = c.out_channels;
                }
                LayerSpec::MaxPool {
                    kernel,
                    stride,
                    dilation,
                } => {
                    if *kernel == 0 || *stride == 0 || *dilation == 0 {
                        return Err(SamError::Config(format!(
                            "layer {i}: pool kernel/stride/dilation must be >= 1"
                        )));
                    }
                }
                LayerSpec::Activation(_) => {}
                LayerSpec::Residual {
                    conv1,
                    conv2,
                    identity_shortcut,
                } => {
                    check_conv(conv1, i)?;
                    check_conv(conv2, i)?;
                    if conv1.stride != 1
                        || conv2.stride != 1
                        || conv1.padding != Padding::Same
                        || conv2.padding != Padding::Same
                    {
                        return Err(SamError::Config(format!(
                            "layer {i}: residual inner convs must preserve spatial shape"
                        )));
                    }
                    if *identity_shortcut && conv2.out_channels != channels {
                        return Err(SamError::Config(format!(
                            "layer {i}: identity shortcut needs {channels} output channels, got {}",
                            conv2.out_channels
                        )));
                    }
                    channels = conv2.out_channels;
                }
            }
        }
        Ok(())
    }

    /// Channel count produced by the final layer.
    pub fn output_channels(&self) -> usize {
        let mut channels = self.input_channels;
        for layer in &self.layers {
            match layer {
                LayerSpec::Conv(c) => channels = c.out_channels,
                LayerSpec::Residual { conv2, .. } => channels = conv2.out_channels,
                _ => {}
            }
        }
        channels
    }
}

fn check_conv(c: &ConvSpec, i: usize) -> Result<()> {
    if c.kernel == 0 || c.stride == 0 || c.dilation == 0 || c.out_channels == 0 {
        return Err(SamError::Config(format!(
            "layer {i}: conv kernel/stride/dilation/channels must be >= 1"
        )));
    }
    Ok(())
}

/// Kernel extent once `holes` zeros are inserted between taps:
/// `kernel + (kernel - 1) * holes`.
pub fn effective_kernel(kernel: usize, holes: usize) -> usize {
    kernel + (kernel - 1) * holes
}

/// Product of all layer strides.
pub fn downscale_factor(net: &NetworkSpec) -> usize {
    net.layers.iter().map(LayerSpec::stride).product::<usize>().max(1)
}

/// Receptive-field extent of each layer's output cells in input pixels,
/// chained through effective kernel sizes.
pub fn receptive_fields(net: &NetworkSpec) -> Vec<usize> {
    let mut rf = 1usize;
    let mut jump = 1usize;
    let mut out = Vec::with_capacity(net.layers.len());
    for layer in &net.layers {
        match layer {
            LayerSpec::Conv(c) => {
                rf += (effective_extent(c.kernel, c.dilation) - 1) * jump;
                jump *= c.stride;
            }
            LayerSpec::MaxPool {
                kernel,
                stride,
                dilation,
            } => {
                rf += (effective_extent(*kernel, *dilation) - 1) * jump;
                jump *= stride;
            }
            LayerSpec::Activation(_) => {}
            LayerSpec::Residual { conv1, conv2, .. } => {
                rf += (effective_extent(conv1.kernel, conv1.dilation) - 1) * jump;
                rf += (effective_extent(conv2.kernel, conv2.dilation) - 1) * jump;
            }
        }
        out.push(rf);
    }
    out
}

/// Remove the stride of layer `layer_index` and multiply the dilation of
/// every following layer by it. Downstream pools get the same treatment,
/// recorded in their own dilation field.
pub fn dilate_transform(net: &NetworkSpec, layer_index: usize) -> Result<NetworkSpec> {
    if layer_index >= net.layers.len() {
        return Err(SamError::Config(format!(
            "layer index {layer_index} out of range (net has {} layers)",
            net.layers.len()
        )));
    }
    let mut layers = net.layers.clone();
    let s = match &mut layers[layer_index] {
        LayerSpec::Conv(c) if c.stride > 1 => std::mem::replace(&mut c.stride, 1),
        LayerSpec::MaxPool { stride, .. } if *stride > 1 => std::mem::replace(stride, 1),
        _ => {
            return Err(SamError::Config(format!(
                "layer {layer_index} has stride 1; nothing to transform"
            )))
        }
    };
    for layer in layers.iter_mut().skip(layer_index + 1) {
        match layer {
            LayerSpec::Conv(c) => c.dilation *= s,
            LayerSpec::MaxPool { dilation, .. } => *dilation *= s,
            LayerSpec::Activation(_) => {}
            LayerSpec::Residual { conv1, conv2, .. } => {
                conv1.dilation *= s;
                conv2.dilation *= s;
            }
        }
    }
    NetworkSpec::new(net.input_channels, layers)
}

/// Parameters for one layer, aligned with [`NetworkSpec::layers`].
#[derive(Clone, Debug, PartialEq)]
pub enum LayerParams {
    Conv { kernel: Tensor, bias: Tensor },
    None,
    Residual {
        kernel1: Tensor,
        bias1: Tensor,
        kernel2: Tensor,
        bias2: Tensor,
    },
}

fn conv_layer(
    input: &Tensor,
    c: &ConvSpec,
    kernel: &Tensor,
    bias: &Tensor,
    i: usize,
) -> Result<Tensor> {
    let (c_out, _, kh, kw) = kernel.dims4()?;
    if c_out != c.out_channels || kh != c.kernel || kw != c.kernel {
        return Err(SamError::Shape(format!(
            "layer {i}: kernel tensor {:?} does not match spec (channels {}, kernel {})",
            kernel.shape(),
            c.out_channels,
            c.kernel
        )));
    }
    conv2d(input, kernel, bias.data(), c.stride, c.dilation, c.padding)
        .map_err(|e| SamError::Shape(format!("layer {i}: {e}")))
}

/// Execute a layer graph. Pools size their output like `same` convolutions
/// (out = ceil(in / stride), window taps outside the input are skipped).
pub fn forward(net: &NetworkSpec, params: &[LayerParams], input: &Tensor) -> Result<Tensor> {
    if params.len() != net.layers.len() {
        return Err(SamError::Shape(format!(
            "{} parameter entries for {} layers",
            params.len(),
            net.layers.len()
        )));
    }
    let (c_in, _, _) = input.dims3()?;
    if c_in != net.input_channels {
        return Err(SamError::Shape(format!(
            "network expects {} input channels, got {c_in}",
            net.input_channels
        )));
    }
    let mut x = input.clone();
    for (i, (layer, p)) in net.layers.iter().zip(params).enumerate() {
        x = match (layer, p) {
            (LayerSpec::Conv(c), LayerParams::Conv { kernel, bias }) => {
                conv_layer(&x, c, kernel, bias, i)?
            }
            (
                LayerSpec::MaxPool {
                    kernel,
                    stride,
                    dilation,
                },
                LayerParams::None,
            ) => tensor::max_pool2d_general(&x, *kernel, *stride, *dilation, true)
                .map_err(|e| SamError::Shape(format!("layer {i}: {e}")))?,
            (LayerSpec::Activation(kind), LayerParams::None) => activation(&x, *kind)?,
            (
                LayerSpec::Residual {
                    conv1,
                    conv2,
                    identity_shortcut,
                },
                LayerParams::Residual {
                    kernel1,
                    bias1,
                    kernel2,
                    bias2,
                },
            ) => {
                let h = conv_layer(&x, conv1, kernel1, bias1, i)?;
                let h = activation(&h, Activation::Relu)?;
                let h = conv_layer(&h, conv2, kernel2, bias2, i)?;
                if *identity_shortcut {
                    elementwise(&h, &x, ElemOp::Add)
                        .map_err(|e| SamError::Shape(format!("layer {i} shortcut: {e}")))?
                } else {
                    h
                }
            }
            _ => {
                return Err(SamError::Shape(format!(
                    "layer {i}: parameter entry does not match layer kind"
                )))
            }
        };
    }
    Ok(x)
}

/// Toy backbone family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackboneKind {
    VggLike,
    ResidualLike,
}

/// Five-stage toy backbone with stride-2 reductions (2,2,2,2,2), downscale
/// factor 32 before any transform. `residual_like` uses residual blocks in
/// stages 3-5 and a trailing 1x1 channel-reduction conv. Output channel count
/// is `2 * width` for both kinds.
pub fn build_toy_backbone(
    kind: BackboneKind,
    width: usize,
    input_channels: usize,
    seed: u64,
) -> Result<(NetworkSpec, Vec<LayerParams>)> {
    if width == 0 {
        return Err(SamError::Config("backbone width must be >= 1".into()));
    }
    let w = width;
    let layers = match kind {
        BackboneKind::VggLike => {
            let mut layers = Vec::new();
            for ch in [w, w, 2 * w, 2 * w, 2 * w] {
                layers.push(LayerSpec::Conv(ConvSpec::same(ch, 3, 1)));
                layers.push(LayerSpec::Activation(Activation::Relu));
                layers.push(LayerSpec::MaxPool {
                    kernel: 2,
                    stride: 2,
                    dilation: 1,
                });
            }
            layers
        }
        BackboneKind::ResidualLike => {
            let block = |ch: usize| LayerSpec::Residual {
                conv1: ConvSpec::same(ch, 3, 1),
                conv2: ConvSpec::same(ch, 3, 1),
                identity_shortcut: true,
            };
            vec![
                // stem: two stride-2 reductions
                LayerSpec::Conv(ConvSpec::same(w, 3, 2)),
                LayerSpec::Activation(Activation::Relu),
                LayerSpec::MaxPool {
                    kernel: 2,
                    stride: 2,
                    dilation: 1,
                },
                // stage 3
                LayerSpec::Conv(ConvSpec::same(2 * w, 3, 2)),
                LayerSpec::Activation(Activation::Relu),
                block(2 * w),
                // stage 4
                LayerSpec::Conv(ConvSpec::same(4 * w, 3, 2)),
                LayerSpec::Activation(Activation::Relu),
                block(4 * w),
                // stage 5
                LayerSpec::Conv(ConvSpec::same(4 * w, 3, 2)),
                LayerSpec::Activation(Activation::Relu),
                block(4 * w),
                // trailing 1x1 channel reduction
                LayerSpec::Conv(ConvSpec::same(2 * w, 1, 1)),
                LayerSpec::Activation(Activation::Relu),
            ]
        }
    };
    let net = NetworkSpec::new(input_channels, layers)?;
    let params = init_backbone_params(&net, seed);
    Ok((net, params))
}

/// Glorot-initialized parameters for every conv in the graph, deterministic
/// in the seed.
pub fn init_backbone_params(net: &NetworkSpec, seed: u64) -> Vec<LayerParams> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut channels = net.input_channels;
    let mut params = Vec::with_capacity(net.layers.len());
    for layer in &net.layers {
        match layer {
            LayerSpec::Conv(c) => {
                let kernel =
                    glorot_uniform(&mut rng, vec![c.out_channels, channels, c.kernel, c.kernel]);
                params.push(LayerParams::Conv {
                    kernel,
                    bias: Tensor::zeros(vec![c.out_channels]),
                });
                channels = c.out_channels;
            }
            LayerSpec::MaxPool { .. } | LayerSpec::Activation(_) => params.push(LayerParams::None),
            LayerSpec::Residual { conv1, conv2, .. } => {
                let kernel1 = glorot_uniform(
                    &mut rng,
                    vec![conv1.out_channels, channels, conv1.kernel, conv1.kernel],
                );
                let kernel2 = glorot_uniform(
                    &mut rng,
                    vec![conv2.out_channels, conv1.out_channels, conv2.kernel, conv2.kernel],
                );
                params.push(LayerParams::Residual {
                    kernel1,
                    bias1: Tensor::zeros(vec![conv1.out_channels]),
                    kernel2,
                    bias2: Tensor::zeros(vec![conv2.out_channels]),
                });
                channels = conv2.out_channels;
            }
        }
    }
    params
}

/// Indices of layers with stride > 1, in order.
pub fn strided_layer_indices(net: &NetworkSpec) -> Vec<usize> {
    net.layers
        .iter()
        .enumerate()
        .filter(|(_, l)| l.stride() > 1)
        .map(|(i, _)| i)
        .collect()
}

// JSON serialization: array of layer objects with fields
// kind/channels/kernel/stride/holes/padding, wrapped with the declared input
// channel count. `holes` is dilation - 1.

#[derive(Serialize, Deserialize)]
struct ConvJson {
    channels: usize,
    kernel: usize,
    stride: usize,
    holes: usize,
    padding: String,
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    channels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    holes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    padding: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    activation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    identity: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conv1: Option<ConvJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conv2: Option<ConvJson>,
}

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    input_channels: usize,
    layers: Vec<LayerJson>,
}

fn conv_to_json(c: &ConvSpec) -> ConvJson {
    ConvJson {
        channels: c.out_channels,
        kernel: c.kernel,
        stride: c.stride,
        holes: tensor::holes_from_dilation(c.dilation),
        padding: match c.padding {
            Padding::Valid => "valid".into(),
            Padding::Same => "same".into(),
        },
    }
}

fn conv_from_json(j: &ConvJson) -> Result<ConvSpec> {
    Ok(ConvSpec {
        out_channels: j.channels,
        kernel: j.kernel,
        stride: j.stride,
        dilation: tensor::dilation_from_holes(j.holes),
        padding: match j.padding.as_str() {
            "valid" => Padding::Valid,
            "same" => Padding::Same,
            other => return Err(SamError::Format(format!("unknown padding {other:?}"))),
        },
    })
}

pub fn network_to_json(net: &NetworkSpec) -> Result<String> {
    let layers = net
        .layers
        .iter()
        .map(|layer| match layer {
            LayerSpec::Conv(c) => {
                let j = conv_to_json(c);
                LayerJson {
                    kind: "conv".into(),
                    channels: Some(j.channels),
                    kernel: Some(j.kernel),
                    stride: Some(j.stride),
                    holes: Some(j.holes),
                    padding: Some(j.padding),
                    activation: None,
                    identity: None,
                    conv1: None,
                    conv2: None,
                }
            }
            LayerSpec::MaxPool {
                kernel,
                stride,
                dilation,
            } => LayerJson {
                kind: "max_pool".into(),
                channels: None,
                kernel: Some(*kernel),
                stride: Some(*stride),
                holes: Some(tensor::holes_from_dilation(*dilation)),
                padding: None,
                activation: None,
                identity: None,
                conv1: None,
                conv2: None,
            },
            LayerSpec::Activation(kind) => LayerJson {
                kind: "activation".into(),
                channels: None,
                kernel: None,
                stride: None,
                holes: None,
                padding: None,
                activation: Some(
                    match kind {
                        Activation::Sigmoid => "sigmoid",
                        Activation::Tanh => "tanh",
                        Activation::Relu => "relu",
                    }
                    .into(),
                ),
                identity: None,
                conv1: None,
                conv2: None,
            },
            LayerSpec::Residual {
                conv1,
                conv2,
                identity_shortcut,
            } => LayerJson {
                kind: "residual_block".into(),
                channels: None,
                kernel: None,
                stride: None,
                holes: None,
                padding: None,
                activation: None,
                identity: Some(*identity_shortcut),
                conv1: Some(conv_to_json(conv1)),
                conv2: Some(conv_to_json(conv2)),
            },
        })
        .collect();
    let doc = NetworkJson {
        input_channels: net.input_channels,
        layers,
    };
    serde_json::to_string_pretty(&doc).map_err(|e| SamError::Format(e.to_string()))
}

pub fn network_from_json(text: &str) -> Result<NetworkSpec> {
    let doc: NetworkJson =
        serde_json::from_str(text).map_err(|e| SamError::Format(format!("network json: {e}")))?;
    let mut layers = Vec::with_capacity(doc.layers.len());
    for (i, j) in doc.layers.iter().enumerate() {
        let missing = |field: &str| {
            SamError::Format(format!("layer {i} ({}): missing field {field}", j.kind))
        };
        let layer = match j.kind.as_str() {
            "conv" => LayerSpec::Conv(conv_from_json(&ConvJson {
                channels: j.channels.ok_or_else(|| missing("channels"))?,
                kernel: j.kernel.ok_or_else(|| missing("kernel"))?,
                stride: j.stride.ok_or_else(|| missing("stride"))?,
                holes: j.holes.unwrap_or(0),
                padding: j.padding.clone().ok_or_else(|| missing("padding"))?,
            })?),
            "max_pool" => LayerSpec::MaxPool {
                kernel: j.kernel.ok_or_else(|| missing("kernel"))?,
                stride: j.stride.ok_or_else(|| missing("stride"))?,
                dilation: tensor::dilation_from_holes(j.holes.unwrap_or(0)),
            },
            "activation" => LayerSpec::Activation(match j.activation.as_deref() {
                Some("sigmoid") => Activation::Sigmoid,
                Some("tanh") => Activation::Tanh,
                Some("relu") => Activation::Relu,
                other => {
                    return Err(SamError::Format(format!(
                        "layer {i}: unknown activation {other:?}"
                    )))
                }
            }),
            "residual_block" => LayerSpec::Residual {
                conv1: conv_from_json(j.conv1.as_ref().ok_or_else(|| missing("conv1"))?)?,
                conv2: conv_from_json(j.conv2.as_ref().ok_or_else(|| missing("conv2"))?)?,
                identity_shortcut: j.identity.unwrap_or(true),
            },
            other => return Err(SamError::Format(format!("layer {i}: unknown kind {other:?}"))),
        };
        layers.push(layer);
    }
    NetworkSpec::new(doc.input_channels, layers)
}
