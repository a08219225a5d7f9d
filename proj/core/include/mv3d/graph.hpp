#pragma once

#include <atomic>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "mv3d/params.hpp"
#include "mv3d/tensor.hpp"

namespace mv3d {

// Reverse-mode tape. Nodes are appended during the forward pass; insertion
// order is the topological order, and backward() walks it in exact reverse.
// Node values are immutable once created. A graph is single-owner: it is
// built, differentiated and dropped by one thread.
template <typename T>
class GraphT {
 public:
  using NodeId = std::size_t;
  using BackwardFn = std::function<void(GraphT&, NodeId)>;

  struct Node {
    const char* op;
    std::vector<NodeId> inputs;
    TensorT<T> value;
    TensorT<T> grad;  // allocated by backward() for reached nodes
    BackwardFn backward;
    ParameterT<T>* bound = nullptr;
    bool reached = false;
  };

  NodeId leaf(TensorT<T> value) { return add("leaf", {}, std::move(value), nullptr); }

  // Leaf whose gradient is accumulated into p.grad after the reverse sweep.
  NodeId param(ParameterT<T>& p) {
    NodeId id = add("param", {}, p.value, nullptr);
    nodes_[id].bound = &p;
    return id;
  }

  NodeId add(const char* op, std::vector<NodeId> inputs, TensorT<T> value, BackwardFn backward) {
    nodes_.push_back(Node{op, std::move(inputs), std::move(value), {}, std::move(backward),
                          nullptr, false});
    return nodes_.size() - 1;
  }

  Node& node(NodeId id) { return nodes_[id]; }
  const TensorT<T>& value(NodeId id) const { return nodes_[id].value; }
  TensorT<T>& grad(NodeId id) { return nodes_[id].grad; }
  std::size_t size() const { return nodes_.size(); }

  // Process-unique identity; lets callers cache per-graph state safely.
  std::uint64_t id() const { return id_; }

  // Seeds d(loss)/d(loss) = 1 and visits nodes in reverse insertion order,
  // accumulating exact reverse-mode gradients. Bound parameters receive
  // their leaf gradients with +=, so one parameter may appear in several
  // leaves (or graphs) per step.
  void backward(NodeId loss) {
    Node& top = nodes_[loss];
    if (top.value.numel() != 1) {
      throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                  shape_str(top.value.shape));
    }
    top.reached = true;
    for (std::size_t i = loss + 1; i-- > 0;) {
      if (!nodes_[i].reached) continue;
      for (NodeId in : nodes_[i].inputs) nodes_[in].reached = true;
    }
    for (std::size_t i = 0; i <= loss; ++i) {
      if (nodes_[i].reached) nodes_[i].grad = TensorT<T>(nodes_[i].value.shape);
    }
    top.grad.data[0] = T(1);
    for (std::size_t i = loss + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.reached && n.backward) n.backward(*this, i);
    }
    for (std::size_t i = 0; i <= loss; ++i) {
      Node& n = nodes_[i];
      if (!n.reached || !n.bound) continue;
      for (std::int64_t j = 0; j < n.grad.numel(); ++j) n.bound->grad.data[j] += n.grad.data[j];
    }
  }

 private:
  static std::uint64_t next_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
  }

  std::deque<Node> nodes_;
  std::uint64_t id_ = next_id();
};

using Graph = GraphT<float>;
using Graph64 = GraphT<double>;

}  // namespace mv3d
