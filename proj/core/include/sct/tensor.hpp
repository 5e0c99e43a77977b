// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sct {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

namespace detail {

// One vertex of the recorded computation graph. Leaves have no backward_fn.
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool grad_ready = false;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the inputs that require it.
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad() {
    if (!grad_ready) {
      grad.assign(data.size(), 0.0);
      grad_ready = true;
    }
    return grad;
  }
};

}  // namespace detail

// Dense row-major array of doubles with an optional gradient and the record
// of the operation that produced it. Copies share the underlying node.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  // Negative axes count from the back.
  std::size_t dim(std::ptrdiff_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  // Parameters and optimizers edit values in place; graph consumers must not.
  std::span<double> mutable_data();
  double item() const;
  double operator[](std::size_t flat) const { return data()[flat]; }

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Fresh leaf holding a copy of the values.
  Tensor detach() const;

  // Reverse-mode sweep from a single-element tensor. Leaf gradients
  // accumulate across calls until zero_grad(); intermediate gradients are
  // recomputed on every call.
  void backward() const;

  const char* op_name() const;
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Thread-local switch for graph recording.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool enabled);
};

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

using BackwardFn = std::function<void(Node&)>;

// Builds an op result, attaching history only when recording is on and some
// input requires a gradient.
Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   const std::vector<Tensor>& inputs, BackwardFn backward);

// Grad buffer of input i if it wants one, else nullptr.
double* input_grad(Node& self, std::size_t i);

}  // namespace detail

}  // namespace sct
