#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "relpot/ad/tensor.hpp"

namespace relpot {

class Var;

namespace detail {

struct Node {
  Tensor val;
  bool requires_grad = false;
  std::int64_t seq = 0;
  const char* op = "leaf";
  std::vector<Var> parents;
  // Given the cotangent of this node, produce cotangents of the parents.
  // The cotangents are Vars built from regular ops, so gradients are
  // themselves differentiable (reverse-over-reverse works to any order).
  std::function<std::vector<Var>(const Var&)> vjp;
};

inline std::int64_t next_seq() {
  static std::atomic<std::int64_t> counter{0};
  return ++counter;
}

}  // namespace detail

// Handle to a node in a dynamically grown computation graph.
class Var {
 public:
  Var() = default;

  static Var leaf(Tensor value, bool requires_grad = false) {
    auto n = std::make_shared<detail::Node>();
    n->val = std::move(value);
    n->requires_grad = requires_grad;
    n->seq = detail::next_seq();
    return Var(std::move(n));
  }

  static Var constant(Tensor value) { return leaf(std::move(value), false); }
  static Var scalar(float v) { return constant(Tensor::scalar(v)); }

  bool defined() const { return static_cast<bool>(n_); }
  const Tensor& value() const { return n_->val; }
  bool requires_grad() const { return n_ && n_->requires_grad; }
  int rows() const { return n_->val.rows(); }
  int cols() const { return n_->val.cols(); }
  float item() const {
    if (n_->val.size() != 1) throw ShapeError("Var::item: not a scalar");
    return n_->val.at(0);
  }

  std::shared_ptr<detail::Node> node() const { return n_; }

  // In-place value overwrite, used by optimizers on leaf parameters.
  // Invalidates graphs already built from this leaf.
  void set_value(Tensor t) {
    if (t.rows() != n_->val.rows() || t.cols() != n_->val.cols())
      throw ShapeError("Var::set_value: shape mismatch");
    n_->val = std::move(t);
  }

  // Internal: construct an op node. Parents whose grads are never needed are
  // dropped so inference graphs stay small.
  static Var make(Tensor value, const char* op, std::vector<Var> parents,
                  std::function<std::vector<Var>(const Var&)> vjp) {
    auto n = std::make_shared<detail::Node>();
    n->val = std::move(value);
    n->op = op;
    n->seq = detail::next_seq();
    bool needs = false;
    for (const auto& p : parents) needs = needs || p.requires_grad();
    n->requires_grad = needs;
    if (needs) {
      n->parents = std::move(parents);
      n->vjp = std::move(vjp);
    }
    return Var(std::move(n));
  }

 private:
  explicit Var(std::shared_ptr<detail::Node> n) : n_(std::move(n)) {}
  std::shared_ptr<detail::Node> n_;
};

Var add(const Var& a, const Var& b);  // defined in ops.hpp

// Reverse-mode gradient of `y` w.r.t. each of `xs`. The returned Vars are part
// of the graph, so they can be differentiated again. `gy` defaults to ones.
inline std::vector<Var> grad(const Var& y, const std::vector<Var>& xs,
                             Var gy = Var()) {
  if (!gy.defined())
    gy = Var::constant(Tensor::full(y.rows(), y.cols(), 1.f));
  if (gy.rows() != y.rows() || gy.cols() != y.cols())
    throw ShapeError("grad: gy shape mismatch");

  // Collect the reachable differentiable subgraph.
  std::vector<detail::Node*> order;
  std::unordered_map<detail::Node*, bool> seen;
  std::vector<detail::Node*> stack;
  if (y.requires_grad()) stack.push_back(y.node().get());
  while (!stack.empty()) {
    detail::Node* n = stack.back();
    stack.pop_back();
    if (seen.count(n)) continue;
    seen[n] = true;
    order.push_back(n);
    for (const auto& p : n->parents)
      if (p.requires_grad() && !seen.count(p.node().get()))
        stack.push_back(p.node().get());
  }
  // Children always have a larger seq than their parents, so descending seq
  // order is a reverse topological order.
  std::sort(order.begin(), order.end(),
            [](detail::Node* a, detail::Node* b) { return a->seq > b->seq; });

  std::unordered_map<detail::Node*, Var> cot;
  cot[y.node().get()] = gy;
  for (detail::Node* n : order) {
    auto it = cot.find(n);
    if (it == cot.end() || !n->vjp) continue;
    std::vector<Var> gp = n->vjp(it->second);
    for (std::size_t i = 0; i < n->parents.size(); ++i) {
      if (!gp[i].defined()) continue;
      detail::Node* p = n->parents[i].node().get();
      if (!p->requires_grad) continue;
      auto pit = cot.find(p);
      if (pit == cot.end())
        cot[p] = gp[i];
      else
        pit->second = add(pit->second, gp[i]);
    }
  }

  std::vector<Var> out;
  out.reserve(xs.size());
  for (const auto& x : xs) {
    auto it = cot.find(x.node().get());
    if (it != cot.end())
      out.push_back(it->second);
    else
      out.push_back(Var::constant(Tensor::zeros(x.rows(), x.cols())));
  }
  return out;
}

}  // namespace relpot
