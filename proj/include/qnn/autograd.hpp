#pragma once

// Minimal reverse-mode differentiation over whole tensors.
//
// Nodes are appended in evaluation order, so a node's inputs always precede
// it and walking the node list backwards is a valid reverse topological
// order. Gradients accumulate additively into each node.

#include <functional>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "qnn/kernels.hpp"
#include "qnn/qtensor.hpp"

namespace qnn {

template <typename T>
class Tape;

template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  int id = -1;

  const Vec<T>& value() const { return tape->value(*this); }
  const Dims& dims() const { return tape->dims(*this); }
  bool valid() const { return tape != nullptr && id >= 0; }
};

template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  struct Node {
    Dims dims;
    Vec<T> value;
    Vec<T> grad;
    std::vector<int> inputs;
    Backward backward;
    bool needs_grad = false;
  };

  // With grad_enabled = false parameters enter as constants and no backward
  // closures are kept (pure inference).
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var<T> constant(const Dims& d, Vec<T> value) {
    require(value.size() == d.size(), ErrorKind::Shape, "constant: size does not match dims");
    Node node;
    node.dims = d;
    node.value = std::move(value);
    return push(std::move(node));
  }

  // Registers w as a trainable leaf. Registering the same tensor twice
  // returns the same node.
  Var<T> parameter(const RealTensor<T>& w) {
    if (auto it = param_ids_.find(&w); it != param_ids_.end()) return {this, it->second};
    Node node;
    node.dims = Dims{1, 1, static_cast<int>(w.size()), 1, 1};
    node.value = w.values;
    node.needs_grad = grad_enabled_ && !frozen_.contains(&w);
    Var<T> v = push(std::move(node));
    param_ids_.emplace(&w, v.id);
    params_.push_back(&w);
    return v;
  }

  // Frozen tensors still enter the graph but receive no gradient.
  void freeze(const RealTensor<T>& w) { frozen_.insert(&w); }

  // Adds a computed node. backward is kept only if some input needs a gradient.
  Var<T> record(const Dims& d, Vec<T> value, std::vector<int> inputs, Backward backward) {
    require(value.size() == d.size(), ErrorKind::Shape, "record: size does not match dims");
    Node node;
    node.dims = d;
    node.value = std::move(value);
    if (grad_enabled_)
      for (int in : inputs) node.needs_grad = node.needs_grad || nodes_[in].needs_grad;
    if (node.needs_grad) {
      node.inputs = std::move(inputs);
      node.backward = std::move(backward);
    }
    return push(std::move(node));
  }

  const Vec<T>& value(Var<T> v) const { return nodes_.at(v.id).value; }
  const Dims& dims(Var<T> v) const { return nodes_.at(v.id).dims; }
  Node& node(int id) { return nodes_[id]; }
  const Node& node(int id) const { return nodes_[id]; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient buffer of node id, zero-initialized on first use.
  Vec<T>& grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.size()) n.grad = Vec<T>::Zero(n.value.size());
    return n.grad;
  }

  void backward(Var<T> root) {
    require(root.tape == this && root.id >= 0 && root.id < static_cast<int>(nodes_.size()),
            ErrorKind::Config, "backward: no forward pass recorded for this root");
    require(nodes_[root.id].value.size() == 1, ErrorKind::Config,
            "backward: loss root must be a scalar");
    for (auto& n : nodes_) n.grad.resize(0);
    grad(root.id)[0] = T{1};
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.needs_grad || !n.backward || n.grad.size() == 0) continue;
      n.backward(*this, id);
    }
    backward_done_ = true;
  }

  // Gradient accumulated for a registered parameter after backward().
  Vec<T> gradient(const RealTensor<T>& w) const {
    require(backward_done_, ErrorKind::Config, "gradient requested before backward");
    auto it = param_ids_.find(&w);
    require(it != param_ids_.end(), ErrorKind::Config, "gradient: tensor was never registered on this tape");
    const Node& n = nodes_[it->second];
    return n.grad.size() ? n.grad : Vec<T>::Zero(w.size());
  }

  const std::vector<const RealTensor<T>*>& parameters() const { return params_; }

 private:
  Var<T> push(Node node) {
    nodes_.push_back(std::move(node));
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  bool grad_enabled_;
  bool backward_done_ = false;
  std::vector<Node> nodes_;
  std::unordered_map<const RealTensor<T>*, int> param_ids_;
  std::vector<const RealTensor<T>*> params_;
  std::unordered_set<const RealTensor<T>*> frozen_;
};

// Accumulates g into the gradient of input id when that input wants one.
template <typename T, typename Expr>
void accumulate(Tape<T>& t, int id, const Expr& g) {
  if (t.needs_grad(id)) t.grad(id) += g;
}

}  // namespace qnn
