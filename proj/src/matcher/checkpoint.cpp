#include "scenmine/matcher/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "scenmine/errors.hpp"

namespace scenmine::matcher {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little endian");

using nlohmann::json;

std::string config_to_json(const MatcherConfig& c) {
  return json{{"patch_len", c.patch.patch_len},
              {"patch_stride", c.patch.patch_stride},
              {"token_dim", c.patch.token_dim},
              {"layers", c.patch.layers},
              {"heads", c.patch.heads},
              {"d_model", c.patch.d_model},
              {"text_dim", c.text_dim},
              {"d_k", c.d_k},
              {"embed_dim", c.embed_dim},
              {"ff_dim", c.ff_dim},
              {"evidence", to_string(c.evidence)},
              {"evidence_temperature", c.evidence_temperature},
              {"gamma", c.gamma},
              {"tau", c.tau},
              {"lambda_mil", c.lambda_mil},
              {"lambda_global", c.lambda_global},
              {"alpha", c.alpha}}
      .dump();
}

MatcherConfig config_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    MatcherConfig c;
    c.patch.patch_len = j.at("patch_len");
    c.patch.patch_stride = j.at("patch_stride");
    c.patch.token_dim = j.at("token_dim");
    c.patch.layers = j.at("layers");
    c.patch.heads = j.at("heads");
    c.patch.d_model = j.at("d_model");
    c.text_dim = j.at("text_dim");
    c.d_k = j.at("d_k");
    c.embed_dim = j.at("embed_dim");
    c.ff_dim = j.at("ff_dim");
    c.evidence = evidence_pooling_from_string(j.at("evidence"));
    c.evidence_temperature = j.at("evidence_temperature");
    c.gamma = j.at("gamma");
    c.tau = j.at("tau");
    c.lambda_mil = j.at("lambda_mil");
    c.lambda_global = j.at("lambda_global");
    c.alpha = j.at("alpha");
    return c;
  } catch (const json::exception& e) {
    throw FormatError("checkpoint config: " + std::string(e.what()));
  }
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void put_tensor(std::string& out, const std::string& name, const Mat& m) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const float f = static_cast<float>(m(r, c));
      char b[4];
      std::memcpy(b, &f, 4);
      out.append(b, 4);
    }
  }
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw FormatError("checkpoint is truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, data_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  float f32() {
    need(4);
    float f;
    std::memcpy(&f, data_.data() + pos_, 4);
    pos_ += 4;
    return f;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const traj::NormStats& norm) {
  std::string out = "SMCK";
  put_u32(out, kCheckpointVersion);
  const std::string cfg = config_to_json(model.config());
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  put_u32(out, static_cast<std::uint32_t>(model.parameters().size() + 2));
  for (const auto& p : model.parameters()) put_tensor(out, p.name, p.value);
  Mat mean(1, traj::kStateDim), stdv(1, traj::kStateDim);
  for (int d = 0; d < traj::kStateDim; ++d) {
    mean(0, d) = norm.mean[d];
    stdv(0, d) = norm.std[d];
  }
  put_tensor(out, "norm.mean", mean);
  put_tensor(out, "norm.std", stdv);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("failed to write checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  Reader r(ss.str());
  if (r.bytes(4) != "SMCK") throw FormatError("not a checkpoint (bad magic)");
  if (const auto v = r.u32(); v != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(v) + " is not supported");
  }
  const auto cfg_len = r.u32();
  const MatcherConfig cfg = config_from_json(r.bytes(cfg_len));
  Checkpoint ck;
  try {
    ck.model = Model(cfg, 0);
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("checkpoint config is invalid: ") + e.what());
  }
  const auto count = r.u32();
  if (count != ck.model.parameters().size() + 2) {
    throw FormatError("checkpoint tensor count does not match its config");
  }
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = r.bytes(r.u32());
    const auto rows = r.u32();
    const auto cols = r.u32();
    Mat m(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = r.f32();
    if (name == "norm.mean" || name == "norm.std") {
      if (rows != 1 || cols != traj::kStateDim) throw FormatError("bad norm tensor shape");
      auto& dst = name == "norm.mean" ? ck.norm.mean : ck.norm.std;
      for (int d = 0; d < traj::kStateDim; ++d) dst[d] = m(0, d);
      continue;
    }
    ad::Parameter* p = nullptr;
    try {
      p = &ck.model.param(name);
    } catch (const InvalidInput&) {
      throw FormatError("checkpoint holds unknown tensor '" + name + "'");
    }
    if (p->value.rows() != m.rows() || p->value.cols() != m.cols()) {
      throw FormatError("tensor '" + name + "' has the wrong shape");
    }
    p->value = std::move(m);
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint tensors");
  return ck;
}

}  // namespace scenmine::matcher
