#pragma once

// Reverse-mode automatic differentiation over dense double matrices. A Tape
// records operations as they run; backward() walks them in reverse.

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace scenmine::matcher::ad {

using Mat = Eigen::MatrixXd;

// A trainable tensor. Gradients accumulate across tapes until zeroed.
struct Parameter {
  std::string name;
  Mat value;
  Mat grad;

  void zero_grad() { grad = Mat::Zero(value.rows(), value.cols()); }
};

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Mat& value() const;
  const Mat& grad() const;
  double scalar() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

class Tape {
 public:
  // When false, no backward closures are recorded (inference).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Mat value);
  // Leaf bound to a parameter; repeated calls reuse the same node.
  Var param(Parameter& p);

  // Seeds d(out)/d(out) = 1 for a 1x1 output and accumulates into bound
  // parameters' grad.
  void backward(Var out);

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  Var push(Mat value, std::function<void(Tape&, std::size_t)> backward);
  const Mat& value(std::size_t id) const { return nodes_[id].value; }
  const Mat& grad(std::size_t id) const { return nodes_[id].grad; }
  void accumulate(std::size_t id, const Mat& g);

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&, std::size_t)> backward;
    Parameter* param = nullptr;
  };
  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, std::size_t> bound_;
};

Var matmul(Var a, Var b);
// a * b^T
Var matmul_nt(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
// Adds a 1 x n row to every row of a.
Var add_row(Var a, Var row);
Var scale(Var a, double c);
// tanh approximation.
Var gelu(Var a);
// Row-wise layer normalization with 1 x n gain and bias.
Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5);
Var softmax_rows(Var a);
// 1 x n mean over rows.
Var mean_rows(Var a);
// L2-normalizes a 1 x n row. Below `min_norm` the output is the uniform unit
// vector and no gradient flows.
Var normalize_row(Var a, double min_norm = 1e-12);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index n);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
// out[t] = a[t + offset] where valid, zero elsewhere.
Var shift_rows(Var a, Eigen::Index offset);
// 1 x 1 maximum over all entries (first maximum receives the gradient).
Var max_all(Var a);
// 1 x 1 temperature * log(sum(exp(a / temperature))).
Var logsumexp_all(Var a, double temperature);
// rows x cols matrix from 1 x 1 scalars in row-major order.
Var stack_scalars(const std::vector<Var>& scalars, Eigen::Index rows, Eigen::Index cols);
// Mean over rows of the cross-entropy of softmax(row i) against class i.
Var cross_entropy_diag(Var logits);

}  // namespace scenmine::matcher::ad
