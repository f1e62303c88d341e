#include "scenmine/matcher/autodiff.hpp"

#include <cmath>

#include "scenmine/errors.hpp"

namespace scenmine::matcher::ad {

const Mat& Var::value() const { return tape->value(id); }
const Mat& Var::grad() const { return tape->grad(id); }
double Var::scalar() const {
  if (value().size() != 1) throw InvalidInput("scalar() on a non-scalar value");
  return value()(0, 0);
}

Var Tape::constant(Mat value) { return push(std::move(value), nullptr); }

Var Tape::param(Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return {this, it->second};
  Var v = push(p.value, nullptr);
  nodes_[v.id].param = &p;
  bound_.emplace(&p, v.id);
  return v;
}

Var Tape::push(Mat value, std::function<void(Tape&, std::size_t)> backward) {
  Node n;
  n.value = std::move(value);
  if (record_) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

void Tape::accumulate(std::size_t id, const Mat& g) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var out) {
  if (!record_) throw InvalidInput("backward() on a tape that does not record");
  if (out.value().size() != 1) throw InvalidInput("backward() needs a scalar output");
  accumulate(out.id, Mat::Ones(1, 1));
  for (std::size_t i = out.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) {
      if (n.param->grad.size() == 0) n.param->zero_grad();
      n.param->grad += n.grad;
    }
  }
}

namespace {

void check_same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw InvalidInput("operands live on different tapes");
}

void check_shape(bool ok, const char* op) {
  if (!ok) throw InvalidInput(std::string("shape mismatch in ") + op);
}

}  // namespace

Var matmul(Var a, Var b) {
  check_same_tape(a, b);
  check_shape(a.cols() == b.rows(), "matmul");
  const auto ai = a.id, bi = b.id;
  return a.tape->push(a.value() * b.value(), [ai, bi](Tape& t, std::size_t self) {
    const Mat& g = t.grad(self);
    t.accumulate(ai, g * t.value(bi).transpose());
    t.accumulate(bi, t.value(ai).transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  check_same_tape(a, b);
  check_shape(a.cols() == b.cols(), "matmul_nt");
  const auto ai = a.id, bi = b.id;
  return a.tape->push(a.value() * b.value().transpose(), [ai, bi](Tape& t, std::size_t self) {
    const Mat& g = t.grad(self);
    t.accumulate(ai, g * t.value(bi));
    t.accumulate(bi, g.transpose() * t.value(ai));
  });
}

Var transpose(Var a) {
  const auto ai = a.id;
  return a.tape->push(a.value().transpose(), [ai](Tape& t, std::size_t self) {
    t.accumulate(ai, t.grad(self).transpose());
  });
}

Var add(Var a, Var b) {
  check_same_tape(a, b);
  check_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add");
  const auto ai = a.id, bi = b.id;
  return a.tape->push(a.value() + b.value(), [ai, bi](Tape& t, std::size_t self) {
    t.accumulate(ai, t.grad(self));
    t.accumulate(bi, t.grad(self));
  });
}

Var add_row(Var a, Var row) {
  check_same_tape(a, row);
  check_shape(row.rows() == 1 && row.cols() == a.cols(), "add_row");
  const auto ai = a.id, ri = row.id;
  Mat out = a.value().rowwise() + row.value().row(0);
  return a.tape->push(std::move(out), [ai, ri](Tape& t, std::size_t self) {
    t.accumulate(ai, t.grad(self));
    t.accumulate(ri, t.grad(self).colwise().sum());
  });
}

Var scale(Var a, double c) {
  const auto ai = a.id;
  return a.tape->push(a.value() * c, [ai, c](Tape& t, std::size_t self) {
    t.accumulate(ai, t.grad(self) * c);
  });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var gelu(Var a) {
  const auto ai = a.id;
  const Mat& x = a.value();
  Mat out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x(i);
    out(i) = 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  }
  return a.tape->push(std::move(out), [ai](Tape& t, std::size_t self) {
    const Mat& x = t.value(ai);
    const Mat& g = t.grad(self);
    Mat d(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double v = x(i);
      const double th = std::tanh(kGeluC * (v + kGeluA * v * v * v));
      const double dth = (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
      d(i) = g(i) * (0.5 * (1.0 + th) + 0.5 * v * dth);
    }
    t.accumulate(ai, d);
  });
}

Var layer_norm(Var a, Var gain, Var bias, double eps) {
  check_same_tape(a, gain);
  check_same_tape(a, bias);
  check_shape(gain.rows() == 1 && gain.cols() == a.cols() && bias.rows() == 1 &&
                  bias.cols() == a.cols(),
              "layer_norm");
  const Mat& x = a.value();
  const Eigen::Index n = x.cols();
  Mat xhat(x.rows(), n);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (x.row(r).array() - mu) * inv_std(r);
  }
  Mat out = (xhat.array().rowwise() * gain.value().row(0).array()).rowwise() +
            bias.value().row(0).array();
  const auto ai = a.id, gi = gain.id, bi = bias.id;
  return a.tape->push(std::move(out), [ai, gi, bi, xhat, inv_std, n](Tape& t, std::size_t self) {
    const Mat& g = t.grad(self);
    t.accumulate(gi, (g.array() * xhat.array()).colwise().sum().matrix());
    t.accumulate(bi, g.colwise().sum());
    const Mat gx = g.array().rowwise() * t.value(gi).row(0).array();
    Mat dx(gx.rows(), n);
    for (Eigen::Index r = 0; r < gx.rows(); ++r) {
      const double m1 = gx.row(r).mean();
      const double m2 = (gx.row(r).array() * xhat.row(r).array()).mean();
      dx.row(r) = inv_std(r) * (gx.row(r).array() - m1 - xhat.row(r).array() * m2);
    }
    t.accumulate(ai, dx);
  });
}

Var softmax_rows(Var a) {
  const Mat& x = a.value();
  Mat y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp();
    y.row(r) /= y.row(r).sum();
  }
  const auto ai = a.id;
  return a.tape->push(y, [ai, y](Tape& t, std::size_t self) {
    const Mat& g = t.grad(self);
    const Eigen::VectorXd dots = (g.array() * y.array()).rowwise().sum();
    t.accumulate(ai, (y.array() * (g.colwise() - dots).array()).matrix());
  });
}

Var mean_rows(Var a) {
  const auto ai = a.id;
  const auto rows = a.rows();
  return a.tape->push(a.value().colwise().mean(), [ai, rows](Tape& t, std::size_t self) {
    t.accumulate(ai, t.grad(self).replicate(rows, 1) / static_cast<double>(rows));
  });
}

Var normalize_row(Var a, double min_norm) {
  check_shape(a.rows() == 1, "normalize_row");
  const Mat& x = a.value();
  const double norm = x.norm();
  const auto ai = a.id;
  if (norm < min_norm) {
    return a.tape->push(Mat::Constant(1, x.cols(), 1.0 / std::sqrt(double(x.cols()))), nullptr);
  }
  Mat y = x / norm;
  return a.tape->push(y, [ai, y, norm](Tape& t, std::size_t self) {
    const Mat& g = t.grad(self);
    const double dot = (g.array() * y.array()).sum();
    t.accumulate(ai, (g - y * dot) / norm);
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index n) {
  check_shape(start >= 0 && n >= 0 && start + n <= a.cols(), "slice_cols");
  const auto ai = a.id;
  const auto rows = a.rows(), cols = a.cols();
  return a.tape->push(a.value().middleCols(start, n),
                      [ai, rows, cols, start, n](Tape& t, std::size_t self) {
                        Mat g = Mat::Zero(rows, cols);
                        g.middleCols(start, n) = t.grad(self);
                        t.accumulate(ai, g);
                      });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidInput("concat_cols of nothing");
  Tape* tape = parts.front().tape;
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    check_same_tape(parts.front(), p);
    check_shape(p.rows() == parts.front().rows(), "concat_cols");
    cols += p.cols();
  }
  Mat out(parts.front().rows(), cols);
  std::vector<std::pair<std::size_t, Eigen::Index>> spans;
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    spans.emplace_back(p.id, p.cols());
    c += p.cols();
  }
  return tape->push(std::move(out), [spans](Tape& t, std::size_t self) {
    Eigen::Index c = 0;
    for (const auto& [id, n] : spans) {
      t.accumulate(id, t.grad(self).middleCols(c, n));
      c += n;
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidInput("concat_rows of nothing");
  Tape* tape = parts.front().tape;
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    check_same_tape(parts.front(), p);
    check_shape(p.cols() == parts.front().cols(), "concat_rows");
    rows += p.rows();
  }
  Mat out(rows, parts.front().cols());
  std::vector<std::pair<std::size_t, Eigen::Index>> spans;
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    spans.emplace_back(p.id, p.rows());
    r += p.rows();
  }
  return tape->push(std::move(out), [spans](Tape& t, std::size_t self) {
    Eigen::Index r = 0;
    for (const auto& [id, n] : spans) {
      t.accumulate(id, t.grad(self).middleRows(r, n));
      r += n;
    }
  });
}

Var shift_rows(Var a, Eigen::Index offset) {
  const Mat& x = a.value();
  const Eigen::Index n = x.rows();
  Mat out = Mat::Zero(n, x.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index src = r + offset;
    if (src >= 0 && src < n) out.row(r) = x.row(src);
  }
  const auto ai = a.id;
  return a.tape->push(std::move(out), [ai, offset, n](Tape& t, std::size_t self) {
    const Mat& g = t.grad(self);
    Mat d = Mat::Zero(g.rows(), g.cols());
    for (Eigen::Index r = 0; r < n; ++r) {
      const Eigen::Index src = r + offset;
      if (src >= 0 && src < n) d.row(src) += g.row(r);
    }
    t.accumulate(ai, d);
  });
}

Var max_all(Var a) {
  const Mat& x = a.value();
  if (x.size() == 0) throw InvalidInput("max_all of an empty matrix");
  Eigen::Index r = 0, c = 0;
  const double m = x.maxCoeff(&r, &c);
  const auto ai = a.id;
  const auto rows = x.rows(), cols = x.cols();
  return a.tape->push(Mat::Constant(1, 1, m), [ai, r, c, rows, cols](Tape& t, std::size_t self) {
    Mat d = Mat::Zero(rows, cols);
    d(r, c) = t.grad(self)(0, 0);
    t.accumulate(ai, d);
  });
}

Var logsumexp_all(Var a, double temperature) {
  if (!(temperature > 0.0)) throw InvalidInput("logsumexp temperature must be positive");
  const Mat& x = a.value();
  if (x.size() == 0) throw InvalidInput("logsumexp_all of an empty matrix");
  const double m = x.maxCoeff();
  const Mat e = ((x.array() - m) / temperature).exp().matrix();
  const double s = e.sum();
  const double out = m + temperature * std::log(s);
  const auto ai = a.id;
  Mat w = e / s;
  return a.tape->push(Mat::Constant(1, 1, out), [ai, w](Tape& t, std::size_t self) {
    t.accumulate(ai, w * t.grad(self)(0, 0));
  });
}

Var stack_scalars(const std::vector<Var>& scalars, Eigen::Index rows, Eigen::Index cols) {
  if (scalars.empty() || static_cast<Eigen::Index>(scalars.size()) != rows * cols) {
    throw InvalidInput("stack_scalars: count does not match shape");
  }
  Mat out(rows, cols);
  std::vector<std::size_t> ids;
  ids.reserve(scalars.size());
  for (std::size_t k = 0; k < scalars.size(); ++k) {
    check_same_tape(scalars.front(), scalars[k]);
    out(static_cast<Eigen::Index>(k) / cols, static_cast<Eigen::Index>(k) % cols) =
        scalars[k].scalar();
    ids.push_back(scalars[k].id);
  }
  return scalars.front().tape->push(std::move(out), [ids, cols](Tape& t, std::size_t self) {
    const Mat& g = t.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      t.accumulate(ids[k], Mat::Constant(1, 1, g(static_cast<Eigen::Index>(k) / cols,
                                                 static_cast<Eigen::Index>(k) % cols)));
    }
  });
}

Var cross_entropy_diag(Var logits) {
  const Mat& x = logits.value();
  check_shape(x.rows() >= 1 && x.cols() >= x.rows(), "cross_entropy_diag");
  const Eigen::Index n = x.rows();
  Mat p(n, x.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = x.row(i).maxCoeff();
    p.row(i) = (x.row(i).array() - m).exp();
    const double s = p.row(i).sum();
    p.row(i) /= s;
    loss += m + std::log(s) - x(i, i);
  }
  const auto ai = logits.id;
  return logits.tape->push(Mat::Constant(1, 1, loss / double(n)), [ai, p, n](Tape& t,
                                                                             std::size_t self) {
    Mat d = p;
    for (Eigen::Index i = 0; i < n; ++i) d(i, i) -= 1.0;
    t.accumulate(ai, d * (t.grad(self)(0, 0) / double(n)));
  });
}

}  // namespace scenmine::matcher::ad
