#include "scenmine/coarse/embedding_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "scenmine/errors.hpp"

namespace scenmine::coarse {

static_assert(std::endian::native == std::endian::little,
              "SMEB I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw FormatError(path.string() + ": truncated SMEB header");
  }
  return v;
}

}  // namespace

void write_smeb(const std::filesystem::path& path, const SmebMatrix& m) {
  if (m.data.size() != m.rows * m.dim) throw InvalidInput("SMEB matrix size mismatch");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write("SMEB", 4);
  put<std::uint32_t>(out, kSmebVersion);
  put<std::uint32_t>(out, m.dim);
  put<std::uint64_t>(out, m.rows);
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(float)));
  if (!out) throw FormatError("write failed for " + path.string());
}

SmebMatrix read_smeb(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SMEB", 4) != 0) {
    throw FormatError(path.string() + ": not an SMEB file");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kSmebVersion) {
    throw FormatError(path.string() + ": SMEB version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kSmebVersion) + ")");
  }
  SmebMatrix m;
  m.dim = get<std::uint32_t>(in, path);
  m.rows = get<std::uint64_t>(in, path);
  const auto here = in.tellg();
  in.seekg(0, std::ios::end);
  const auto remaining = static_cast<std::uint64_t>(in.tellg() - here);
  in.seekg(here);
  const std::uint64_t need = m.rows * m.dim * sizeof(float);
  if (remaining < need) {
    throw FormatError(path.string() + ": truncated SMEB payload (" + std::to_string(remaining) +
                      " of " + std::to_string(need) + " bytes)");
  }
  if (remaining > need) throw FormatError(path.string() + ": trailing bytes after SMEB payload");
  m.data.resize(m.rows * m.dim);
  in.read(reinterpret_cast<char*>(m.data.data()), static_cast<std::streamsize>(need));
  return m;
}

std::size_t EmbeddingStore::append(std::span<const float> v) {
  if (v.size() != matrix_.dim) {
    throw InvalidInput("embedding has dim " + std::to_string(v.size()) + ", store expects " +
                       std::to_string(matrix_.dim));
  }
  matrix_.data.insert(matrix_.data.end(), v.begin(), v.end());
  return static_cast<std::size_t>(matrix_.rows++);
}

std::size_t EmbeddingStore::add_frame(const std::string& log_id, const std::string& camera_id,
                                      std::int64_t ts_ns, std::span<const float> v) {
  const std::size_t r = append(v);
  frames_[{log_id, camera_id}][ts_ns] = r;
  return r;
}

std::size_t EmbeddingStore::add_text(const std::string& query_id, std::span<const float> v) {
  const std::size_t r = append(v);
  texts_[query_id] = r;
  return r;
}

std::size_t EmbeddingStore::add_token(const std::string& query_id, std::span<const float> v) {
  const std::size_t r = append(v);
  tokens_[query_id].push_back(r);
  return r;
}

std::optional<std::size_t> EmbeddingStore::frame_row(const std::string& log_id,
                                                     const std::string& camera_id,
                                                     std::int64_t ts_ns) const {
  auto it = frames_.find({log_id, camera_id});
  if (it == frames_.end()) return std::nullopt;
  auto jt = it->second.find(ts_ns);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

std::optional<std::size_t> EmbeddingStore::text_row(const std::string& query_id) const {
  auto it = texts_.find(query_id);
  if (it == texts_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> EmbeddingStore::token_rows(const std::string& query_id) const {
  auto it = tokens_.find(query_id);
  return it == tokens_.end() ? std::vector<std::size_t>{} : it->second;
}

std::vector<std::pair<std::int64_t, std::size_t>> EmbeddingStore::frames_in(
    const std::string& log_id, const std::string& camera_id, std::int64_t start_ns,
    std::int64_t end_ns) const {
  std::vector<std::pair<std::int64_t, std::size_t>> out;
  auto it = frames_.find({log_id, camera_id});
  if (it == frames_.end()) return out;
  for (auto jt = it->second.lower_bound(start_ns);
       jt != it->second.end() && jt->first <= end_ns; ++jt) {
    out.emplace_back(jt->first, jt->second);
  }
  return out;
}

bool EmbeddingStore::has_log(const std::string& log_id) const {
  auto it = frames_.lower_bound({log_id, std::string()});
  return it != frames_.end() && it->first.first == log_id;
}

std::vector<std::string> EmbeddingStore::cameras(const std::string& log_id) const {
  std::vector<std::string> out;
  for (auto it = frames_.lower_bound({log_id, std::string()});
       it != frames_.end() && it->first.first == log_id; ++it) {
    out.push_back(it->first.second);
  }
  return out;
}

void EmbeddingStore::save(const std::filesystem::path& smeb,
                          const std::filesystem::path& index) const {
  write_smeb(smeb, matrix_);
  std::vector<nlohmann::json> records(matrix_.rows);
  for (const auto& [key, by_ts] : frames_) {
    for (const auto& [ts, r] : by_ts) {
      records[r] = {{"row", r}, {"kind", "frame"}, {"log_id", key.first},
                    {"camera_id", key.second}, {"ts_ns", ts}};
    }
  }
  for (const auto& [qid, r] : texts_) records[r] = {{"row", r}, {"kind", "text"}, {"query_id", qid}};
  for (const auto& [qid, rows] : tokens_) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      records[rows[k]] = {{"row", rows[k]}, {"kind", "token"}, {"query_id", qid}, {"token", k}};
    }
  }
  std::ofstream out(index, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + index.string() + " for writing");
  for (const auto& r : records) {
    if (!r.is_null()) out << r.dump() << '\n';
  }
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& smeb,
                                    const std::filesystem::path& index) {
  EmbeddingStore store;
  store.matrix_ = read_smeb(smeb);
  std::ifstream in(index);
  if (!in) throw FormatError("cannot open " + index.string());
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::map<std::size_t, std::size_t>> tokens;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto row = j.at("row").get<std::size_t>();
      if (row >= store.matrix_.rows) {
        throw FormatError(index.string() + ":" + std::to_string(line_no) + ": row " +
                          std::to_string(row) + " out of range");
      }
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "frame") {
        store.frames_[{j.at("log_id").get<std::string>(), j.at("camera_id").get<std::string>()}]
                     [j.at("ts_ns").get<std::int64_t>()] = row;
      } else if (kind == "text") {
        store.texts_[j.at("query_id").get<std::string>()] = row;
      } else if (kind == "token") {
        tokens[j.at("query_id").get<std::string>()][j.at("token").get<std::size_t>()] = row;
      } else {
        throw FormatError(index.string() + ":" + std::to_string(line_no) + ": unknown kind '" +
                          kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(index.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (auto& [qid, by_pos] : tokens) {
    auto& rows = store.tokens_[qid];
    for (const auto& [pos, r] : by_pos) rows.push_back(r);
  }
  return store;
}

}  // namespace scenmine::coarse
