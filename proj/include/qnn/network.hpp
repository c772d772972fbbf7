#pragma once

// A QNN split into encoder g (real), processing Φ (equivariant, key-blind) and
// decoder d (real), plus the network file format.

#include <filesystem>

#include "qnn/layers.hpp"

namespace qnn {

template <typename T>
struct NetworkSpec {
  Shape input_shape;  // per-sample input, e.g. {1, 16, 16}
  Stack<T> encoder;
  Stack<T> processing;
  Stack<T> decoder;
  int class_count = 0;
  // Unprotected real-valued counterpart: processing runs on a single plane
  // and need not be equivariant.
  bool plaintext = false;

  bool operator==(const NetworkSpec&) const = default;

  template <typename U>
  NetworkSpec<U> cast() const {
    NetworkSpec<U> n;
    n.input_shape = input_shape;
    n.class_count = class_count;
    n.plaintext = plaintext;
    for (const auto& l : encoder) n.encoder.push_back(l.template cast<U>());
    for (const auto& l : processing) n.processing.push_back(l.template cast<U>());
    for (const auto& l : decoder) n.decoder.push_back(l.template cast<U>());
    return n;
  }

  std::vector<RealTensor<T>*> parameters() {
    std::vector<RealTensor<T>*> out;
    collect_parameters(encoder, out);
    collect_parameters(processing, out);
    collect_parameters(decoder, out);
    return out;
  }
};

// Output dims of a stack applied to a single sample with p planes.
template <typename T>
Dims propagate_dims(const Stack<T>& layers, const Dims& in) {
  Tape<T> tape(false);
  ForwardContext ctx;
  Var<T> x = tape.constant(in, Vec<T>::Zero(in.size()));
  return apply_layers(x, layers, ctx).dims();
}

// Layer parameters valid; processing kinds equivariant; stack shapes chain.
template <typename T>
void validate(const NetworkSpec<T>& net) {
  for (const auto* stack : {&net.encoder, &net.processing, &net.decoder})
    for (const auto& l : *stack) validate(l);
  for (const auto& l : net.processing)
    require(net.plaintext || is_equivariant(l), ErrorKind::Config,
            "processing stack contains non-equivariant layer '" + kind_name(l.kind) + "'");
  if (net.input_shape.empty()) return;
  Dims d = dims_of(net.input_shape, 1, 1);
  d = propagate_dims(net.encoder, d);
  d.p = net.plaintext ? 1 : 4;
  d = propagate_dims(net.processing, d);
  d.p = 1;
  d = propagate_dims(net.decoder, d);
  if (net.class_count > 0)
    require(d.block() == net.class_count, ErrorKind::Config,
            "decoder output size " + std::to_string(d.block()) + " != class_count " +
                std::to_string(net.class_count));
}

// Network file: UTF-8 header (one layer per line) then raw f32 weights in
// depth-first layer order. `meta` is an optional one-line provenance note
// (e.g. the training seed); it is ignored on load.
std::string encode_network(const NetworkSpec<float>& net, const std::string& meta = "");
NetworkSpec<float> decode_network(const std::string& bytes);
void save_network(const std::filesystem::path& path, const NetworkSpec<float>& net,
                  const std::string& meta = "");
NetworkSpec<float> load_network(const std::filesystem::path& path);

struct ReferenceOptions {
  int channels = 8;
  int classes = 4;
  int image_size = 16;
  int image_channels = 1;
  double qrelu_c = 1.0;
  double bn_eps = 1e-5;
};

// Desk-scale LeNet-style split:
//   encoder    conv3×3/2 → bias → ReLU → conv3×3 → bias
//   processing conv3×3 → QReLU → QBatchNorm → MaxPool2 → Residual(conv3×3, QReLU)
//   decoder    FC → bias → softmax
template <typename T>
NetworkSpec<T> make_reference_network(const ReferenceOptions& o, Rng& rng) {
  using L = LayerSpec<T>;
  const int ch = o.channels;
  NetworkSpec<T> net;
  net.input_shape = {o.image_channels, o.image_size, o.image_size};
  net.class_count = o.classes;
  net.encoder = {L::conv(o.image_channels, ch, 3, 2, 1), L::bias(ch), L::simple(LayerKind::ReLU),
                 L::conv(ch, ch, 3, 1, 1), L::bias(ch)};
  net.processing = {L::conv(ch, ch, 3, 1, 1), L::qrelu(T(o.qrelu_c)), L::qbatchnorm(T(o.bn_eps)),
                    L::maxpool(2, 2), L::residual({L::conv(ch, ch, 3, 1, 1), L::qrelu(T(o.qrelu_c))})};
  const int side = o.image_size / 4;
  net.decoder = {L::fully_connected(ch * side * side, o.classes), L::bias(o.classes),
                 L::simple(LayerKind::Softmax)};
  initialize(net.encoder, rng);
  initialize(net.processing, rng);
  initialize(net.decoder, rng);
  validate(net);
  return net;
}

// Same topology with every QReLU replaced by a real ReLU; run on one plane it
// is the unprotected real-valued counterpart.
template <typename T>
Stack<T> plaintext_stack(Stack<T> layers) {
  for (auto& l : layers) {
    if (l.kind == LayerKind::QReLU) l = LayerSpec<T>::simple(LayerKind::ReLU);
    if (l.kind == LayerKind::Residual) l.inner = plaintext_stack(std::move(l.inner));
  }
  return layers;
}

template <typename T>
NetworkSpec<T> make_plaintext_baseline(NetworkSpec<T> net) {
  net.processing = plaintext_stack(std::move(net.processing));
  net.plaintext = true;
  return net;
}

}  // namespace qnn
