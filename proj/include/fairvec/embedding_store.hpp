#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fairvec {

enum class EmbeddingFormat { kGloveText, kWord2VecBinary };

// Accepts "glove", "glove-text", "text", "word2vec", "word2vec-binary", "bin".
EmbeddingFormat parse_format(std::string_view name);
std::string_view format_name(EmbeddingFormat format);

struct WordVector {
  std::string_view word;
  std::span<const double> values;
};

struct LoadSummary {
  std::size_t words = 0;
  std::size_t dim = 0;
  std::size_t duplicates_dropped = 0;
};

// Vocabulary plus an n x d row-major matrix. Row i belongs to words()[i].
// Values are held in double precision; float32 inputs convert exactly.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dim);

  // Appends a row. Returns false and leaves the store unchanged when the
  // word is already present. Throws InputError on a wrong length or a
  // non-finite entry.
  bool add(std::string word, std::span<const double> values);

  std::size_t size() const { return words_.size(); }
  std::size_t dim() const { return dim_; }
  bool empty() const { return words_.empty(); }

  std::optional<std::size_t> index_of(std::string_view word) const;
  std::optional<WordVector> vector(std::string_view word) const;

  const std::string& word(std::size_t i) const { return words_[i]; }
  const std::vector<std::string>& words() const { return words_; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<double> mutable_row(std::size_t i) {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const double> matrix() const { return data_; }

  // Set by normalize_all; transforms that change norms clear it.
  bool normalized() const { return normalized_; }
  void set_normalized(bool value) { normalized_ = value; }

  bool is_zero_row(std::size_t i) const { return !zero_rows_.empty() && zero_rows_[i]; }
  void flag_zero_row(std::size_t i);
  std::size_t zero_row_count() const;

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::size_t dim_ = 0;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
  std::vector<double> data_;
  std::vector<bool> zero_rows_;
  bool normalized_ = false;
};

// `<token> <f1> ... <fd>` per line; \n or \r\n. The first line fixes d.
// Duplicate tokens keep their first vector.
EmbeddingStore load_glove_text(const std::filesystem::path& path,
                               std::optional<std::size_t> limit = std::nullopt,
                               LoadSummary* summary = nullptr);

// ASCII header `<vocab> <dim>\n`, then per entry: token, one space, d
// little-endian float32 values, optional '\n'.
EmbeddingStore load_word2vec_binary(const std::filesystem::path& path,
                                    std::optional<std::size_t> limit = std::nullopt,
                                    LoadSummary* summary = nullptr);

EmbeddingStore load(const std::filesystem::path& path, EmbeddingFormat format,
                    std::optional<std::size_t> limit = std::nullopt,
                    LoadSummary* summary = nullptr);

// Binary output stores float32, so double-valued rows are rounded once.
// Text output writes the shortest decimal that round-trips each double.
void save(const EmbeddingStore& store, const std::filesystem::path& path,
          EmbeddingFormat format);

// Scales every nonzero row to unit length. Zero rows stay zero and are
// flagged. Already-unit rows are left bit-identical, so the operation is
// idempotent.
EmbeddingStore normalize_all(const EmbeddingStore& store);

}  // namespace fairvec
