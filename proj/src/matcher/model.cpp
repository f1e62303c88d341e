#include "scenmine/matcher/model.hpp"

#include <cmath>
#include <numbers>

#include "scenmine/errors.hpp"

namespace scenmine::matcher {

int patch_count(int length, int patch_len, int patch_stride) {
  if (patch_len < 1 || patch_stride < 1) throw InvalidInput("patch length and stride must be >= 1");
  if (length < patch_len) {
    throw TrackTooShort("track of " + std::to_string(length) + " states is shorter than one " +
                        std::to_string(patch_len) + "-frame patch");
  }
  return (length - patch_len) / patch_stride + 1;
}

Mat track_features(const traj::Track& track, const traj::NormStats& stats) {
  Mat out(static_cast<Eigen::Index>(track.states.size()), traj::kStateDim);
  for (std::size_t i = 0; i < track.states.size(); ++i) {
    const auto f = traj::apply_norm(stats, track.states[i]);
    for (int d = 0; d < traj::kStateDim; ++d) out(static_cast<Eigen::Index>(i), d) = f[d];
  }
  return out;
}

Mat positional_encoding(int count, int dim) {
  Mat pe(count, dim);
  for (int t = 0; t < count; ++t) {
    for (int c = 0; c < dim; ++c) {
      const double freq = std::pow(10000.0, -2.0 * (c / 2) / static_cast<double>(dim));
      pe(t, c) = (c % 2 == 0) ? std::sin(t * freq) : std::cos(t * freq);
    }
  }
  return pe;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Box-Muller over splitmix64 so initialization is identical on every platform.
double gaussian(std::uint64_t& s) {
  const double u1 = (static_cast<double>(splitmix64(s) >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

void Model::add_param(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                      double init_std, std::uint64_t& state) {
  ad::Parameter p;
  p.name = name;
  p.value.resize(rows, cols);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value(i) = init_std * gaussian(state);
  p.zero_grad();
  params_.push_back(std::move(p));
}

void Model::add_const(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                      double value) {
  ad::Parameter p;
  p.name = name;
  p.value = Mat::Constant(rows, cols, value);
  p.zero_grad();
  params_.push_back(std::move(p));
}

Model::Model(const MatcherConfig& config, std::uint64_t seed) : config_(config) {
  validate(config_);
  const auto& pc = config_.patch;
  const int dm = pc.d_model;
  const int din = config_.text_dim;
  std::uint64_t s = seed;
  const auto fan = [](int n) { return 1.0 / std::sqrt(static_cast<double>(n)); };

  add_param("patch.W", pc.patch_len * traj::kStateDim, pc.token_dim,
            fan(pc.patch_len * traj::kStateDim), s);
  add_const("patch.b", 1, pc.token_dim, 0.0);
  add_param("in.W", pc.token_dim, dm, fan(pc.token_dim), s);
  add_const("in.b", 1, dm, 0.0);
  for (int l = 0; l < pc.layers; ++l) {
    const std::string b = "block" + std::to_string(l) + ".";
    add_const(b + "ln1.g", 1, dm, 1.0);
    add_const(b + "ln1.b", 1, dm, 0.0);
    for (const char* w : {"Wq", "Wk", "Wv", "Wo"}) add_param(b + "attn." + w, dm, dm, fan(dm), s);
    for (const char* w : {"bq", "bk", "bv", "bo"}) add_const(b + "attn." + w, 1, dm, 0.0);
    add_const(b + "ln2.g", 1, dm, 1.0);
    add_const(b + "ln2.b", 1, dm, 0.0);
    add_param(b + "ff.W1", dm, config_.ff_dim, fan(dm), s);
    add_const(b + "ff.b1", 1, config_.ff_dim, 0.0);
    add_param(b + "ff.W2", config_.ff_dim, dm, fan(config_.ff_dim), s);
    add_const(b + "ff.b2", 1, dm, 0.0);
  }
  add_const("final.ln.g", 1, dm, 1.0);
  add_const("final.ln.b", 1, dm, 0.0);
  add_param("track_out.W", dm, config_.embed_dim, fan(dm), s);
  add_const("track_out.b", 1, config_.embed_dim, 0.0);

  add_param("text.mlp.W1", din, din, fan(din), s);
  add_const("text.mlp.b1", 1, din, 0.0);
  add_param("text.mlp.W2", din, din, fan(din), s);
  add_const("text.mlp.b2", 1, din, 0.0);
  for (const char* k : {"text.conv.W0", "text.conv.W1", "text.conv.W2"}) {
    add_param(k, din, dm, fan(3 * din), s);
  }
  add_const("text.conv.b", 1, dm, 0.0);
  add_param("text_out.W", dm, config_.embed_dim, fan(dm), s);
  add_const("text_out.b", 1, config_.embed_dim, 0.0);

  add_param("align.Wq", dm, config_.d_k, fan(dm), s);
  add_param("align.Wk", dm, config_.d_k, fan(dm), s);
}

std::size_t Model::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  throw InvalidInput("no parameter named '" + name + "'");
}

ad::Parameter& Model::param(const std::string& name) { return params_[index_of(name)]; }
const ad::Parameter& Model::param(const std::string& name) const {
  return params_[index_of(name)];
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void Model::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

bool Model::operator==(const Model& other) const {
  if (!(config_ == other.config_) || params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != other.params_[i].name || params_[i].value != other.params_[i].value) {
      return false;
    }
  }
  return true;
}

Var Model::patchify(ad::Tape& tape, const Mat& features) {
  const auto& pc = config_.patch;
  if (features.cols() != traj::kStateDim) throw InvalidInput("track features must have 10 columns");
  const int L = static_cast<int>(features.rows());
  const int T = patch_count(L, pc.patch_len, pc.patch_stride);
  Mat flat(T, pc.patch_len * traj::kStateDim);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < pc.patch_len; ++k) {
      flat.block(t, k * traj::kStateDim, 1, traj::kStateDim) =
          features.row(t * pc.patch_stride + k);
    }
  }
  Var x = ad::add_row(ad::matmul(tape.constant(std::move(flat)), p(tape, "patch.W")),
                      p(tape, "patch.b"));
  return ad::add(x, tape.constant(positional_encoding(T, pc.token_dim)));
}

Var Model::encode_track_sequence(ad::Tape& tape, Var tokens) {
  const auto& pc = config_.patch;
  const int dh = pc.d_model / pc.heads;
  Var x = ad::add_row(ad::matmul(tokens, p(tape, "in.W")), p(tape, "in.b"));
  for (int l = 0; l < pc.layers; ++l) {
    const std::string b = "block" + std::to_string(l) + ".";
    Var h = ad::layer_norm(x, p(tape, b + "ln1.g"), p(tape, b + "ln1.b"));
    Var q = ad::add_row(ad::matmul(h, p(tape, b + "attn.Wq")), p(tape, b + "attn.bq"));
    Var k = ad::add_row(ad::matmul(h, p(tape, b + "attn.Wk")), p(tape, b + "attn.bk"));
    Var v = ad::add_row(ad::matmul(h, p(tape, b + "attn.Wv")), p(tape, b + "attn.bv"));
    std::vector<Var> heads;
    heads.reserve(static_cast<std::size_t>(pc.heads));
    for (int i = 0; i < pc.heads; ++i) {
      Var qi = ad::slice_cols(q, i * dh, dh);
      Var ki = ad::slice_cols(k, i * dh, dh);
      Var vi = ad::slice_cols(v, i * dh, dh);
      Var att = ad::softmax_rows(ad::scale(ad::matmul_nt(qi, ki), 1.0 / std::sqrt(double(dh))));
      heads.push_back(ad::matmul(att, vi));
    }
    Var o = ad::add_row(ad::matmul(ad::concat_cols(heads), p(tape, b + "attn.Wo")),
                        p(tape, b + "attn.bo"));
    x = ad::add(x, o);
    h = ad::layer_norm(x, p(tape, b + "ln2.g"), p(tape, b + "ln2.b"));
    Var f = ad::gelu(ad::add_row(ad::matmul(h, p(tape, b + "ff.W1")), p(tape, b + "ff.b1")));
    f = ad::add_row(ad::matmul(f, p(tape, b + "ff.W2")), p(tape, b + "ff.b2"));
    x = ad::add(x, f);
  }
  return ad::layer_norm(x, p(tape, "final.ln.g"), p(tape, "final.ln.b"));
}

Var Model::encode_text_sequence(ad::Tape& tape, const Mat& text_tokens) {
  if (text_tokens.rows() < 1) throw InvalidInput("text needs at least one token");
  if (text_tokens.cols() != config_.text_dim) {
    throw InvalidInput("text tokens have width " + std::to_string(text_tokens.cols()) +
                       ", model expects " + std::to_string(config_.text_dim));
  }
  Var x = tape.constant(text_tokens);
  Var h = ad::gelu(ad::add_row(ad::matmul(x, p(tape, "text.mlp.W1")), p(tape, "text.mlp.b1")));
  h = ad::add_row(ad::matmul(h, p(tape, "text.mlp.W2")), p(tape, "text.mlp.b2"));
  h = ad::add(h, x);
  // Kernel taps 0, 1, 2 read tokens m-1, m, m+1.
  Var y = ad::matmul(ad::shift_rows(h, -1), p(tape, "text.conv.W0"));
  y = ad::add(y, ad::matmul(h, p(tape, "text.conv.W1")));
  y = ad::add(y, ad::matmul(ad::shift_rows(h, 1), p(tape, "text.conv.W2")));
  return ad::add_row(y, p(tape, "text.conv.b"));
}

Var Model::pool_track(ad::Tape& tape, Var sequence) {
  Var m = ad::mean_rows(sequence);
  return ad::normalize_row(ad::add_row(ad::matmul(m, p(tape, "track_out.W")),
                                       p(tape, "track_out.b")));
}

Var Model::pool_text(ad::Tape& tape, Var sequence) {
  Var m = ad::mean_rows(sequence);
  return ad::normalize_row(ad::add_row(ad::matmul(m, p(tape, "text_out.W")),
                                       p(tape, "text_out.b")));
}

Var Model::track_queries(ad::Tape& tape, Var sequence) {
  return ad::matmul(sequence, p(tape, "align.Wq"));
}

Var Model::text_keys(ad::Tape& tape, Var sequence) {
  return ad::matmul(sequence, p(tape, "align.Wk"));
}

Var Model::alignment(Var queries, Var keys) const {
  return ad::scale(ad::matmul_nt(queries, keys), 1.0 / std::sqrt(double(queries.cols())));
}

Var Model::evidence(Var alignment) const {
  return config_.evidence == EvidencePooling::Max
             ? ad::max_all(alignment)
             : ad::logsumexp_all(alignment, config_.evidence_temperature);
}

TrackEncoding encode_track(Model& model, const Mat& features) {
  ad::Tape tape(false);
  Var seq = model.encode_track_sequence(tape, model.patchify(tape, features));
  return {seq.value(), model.pool_track(tape, seq).value()};
}

TextEncoding encode_text(Model& model, const Mat& text_tokens) {
  ad::Tape tape(false);
  Var seq = model.encode_text_sequence(tape, text_tokens);
  return {seq.value(), model.pool_text(tape, seq).value()};
}

Mat cross_sim(const Mat& B, const Mat& A, const Mat& Wq, const Mat& Wk) {
  if (B.cols() != A.cols() || Wq.rows() != B.cols() || Wk.rows() != A.cols() ||
      Wq.cols() != Wk.cols() || Wq.cols() == 0) {
    throw InvalidInput("cross_sim: incompatible shapes");
  }
  return (B * Wq) * (A * Wk).transpose() / std::sqrt(static_cast<double>(Wq.cols()));
}

double evidence_score(const Mat& S, EvidencePooling pooling, double temperature) {
  if (S.size() == 0) throw InvalidInput("evidence of an empty alignment matrix");
  if (pooling == EvidencePooling::Max) return S.maxCoeff();
  if (!(temperature > 0.0)) throw InvalidInput("evidence temperature must be positive");
  const double m = S.maxCoeff();
  return m + temperature * std::log(((S.array() - m) / temperature).exp().sum());
}

}  // namespace scenmine::matcher
