#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace scenmine::coarse {

// Raw SMEB matrix: "SMEB" magic, u32 LE version, u32 LE dim, u64 LE row
// count, then rows of dim float32 LE values.
inline constexpr std::uint32_t kSmebVersion = 1;

struct SmebMatrix {
  std::uint32_t dim = 0;
  std::uint64_t rows = 0;
  std::vector<float> data;  // row-major

  std::span<const float> row(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }
  bool operator==(const SmebMatrix&) const = default;
};

void write_smeb(const std::filesystem::path& path, const SmebMatrix& m);
// Throws FormatError on bad magic, version mismatch or truncation.
SmebMatrix read_smeb(const std::filesystem::path& path);

// Dense vectors for frames, query texts and text tokens, with a sidecar
// index (line-delimited JSON):
//   {"row":0,"kind":"frame","log_id":..,"camera_id":..,"ts_ns":..}
//   {"row":1,"kind":"text","query_id":..}
//   {"row":2,"kind":"token","query_id":..,"token":0}
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::uint32_t dim) { matrix_.dim = dim; }

  std::uint32_t dim() const { return matrix_.dim; }
  std::size_t rows() const { return matrix_.rows; }
  std::span<const float> row(std::size_t i) const { return matrix_.row(i); }

  std::size_t add_frame(const std::string& log_id, const std::string& camera_id,
                        std::int64_t ts_ns, std::span<const float> v);
  std::size_t add_text(const std::string& query_id, std::span<const float> v);
  // Appends one token row; tokens of a query are kept in insertion order.
  std::size_t add_token(const std::string& query_id, std::span<const float> v);

  std::optional<std::size_t> frame_row(const std::string& log_id, const std::string& camera_id,
                                       std::int64_t ts_ns) const;
  std::optional<std::size_t> text_row(const std::string& query_id) const;
  // Token rows of a query, in token order (empty if none).
  std::vector<std::size_t> token_rows(const std::string& query_id) const;

  // Frames of one camera with start_ns <= ts <= end_ns, ascending by time.
  std::vector<std::pair<std::int64_t, std::size_t>> frames_in(const std::string& log_id,
                                                              const std::string& camera_id,
                                                              std::int64_t start_ns,
                                                              std::int64_t end_ns) const;
  bool has_log(const std::string& log_id) const;
  std::vector<std::string> cameras(const std::string& log_id) const;

  void save(const std::filesystem::path& smeb, const std::filesystem::path& index) const;
  // Throws FormatError when the index references missing rows or the file is
  // malformed.
  static EmbeddingStore load(const std::filesystem::path& smeb,
                             const std::filesystem::path& index);

  const SmebMatrix& matrix() const { return matrix_; }

 private:
  std::size_t append(std::span<const float> v);

  SmebMatrix matrix_;
  std::map<std::pair<std::string, std::string>, std::map<std::int64_t, std::size_t>> frames_;
  std::map<std::string, std::size_t> texts_;
  std::map<std::string, std::vector<std::size_t>> tokens_;
};

}  // namespace scenmine::coarse
