#include "fairvec/embedding_store.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fairvec/error.hpp"
#include "fairvec/log.hpp"
#include "fairvec/parallel.hpp"
#include "fairvec/simd/kernels.hpp"

namespace fairvec {

namespace {

std::string path_str(const std::filesystem::path& p) { return p.string(); }

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw InputError("cannot open embedding file: " + path_str(path));
  return in;
}

void report_summary(const std::filesystem::path& path, EmbeddingFormat format,
                    const LoadSummary& s, LoadSummary* out) {
  log().info("load_summary path={} format={} words={} dim={} duplicates_dropped={}",
             path_str(path), format_name(format), s.words, s.dim, s.duplicates_dropped);
  if (out != nullptr) *out = s;
}

float read_le_float(const char* bytes) {
  std::uint32_t bits;
  std::memcpy(&bits, bytes, sizeof bits);
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0x000000FFu) << 24) | ((bits & 0x0000FF00u) << 8) |
           ((bits & 0x00FF0000u) >> 8) | ((bits & 0xFF000000u) >> 24);
  }
  return std::bit_cast<float>(bits);
}

void write_le_float(char* bytes, float value) {
  auto bits = std::bit_cast<std::uint32_t>(value);
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0x000000FFu) << 24) | ((bits & 0x0000FF00u) << 8) |
           ((bits & 0x00FF0000u) >> 8) | ((bits & 0xFF000000u) >> 24);
  }
  std::memcpy(bytes, &bits, sizeof bits);
}

}  // namespace

EmbeddingFormat parse_format(std::string_view name) {
  if (name == "glove" || name == "glove-text" || name == "text" || name == "txt") {
    return EmbeddingFormat::kGloveText;
  }
  if (name == "word2vec" || name == "word2vec-binary" || name == "bin" || name == "binary") {
    return EmbeddingFormat::kWord2VecBinary;
  }
  throw InputError("unknown embedding format: " + std::string(name));
}

std::string_view format_name(EmbeddingFormat format) {
  return format == EmbeddingFormat::kGloveText ? "glove-text" : "word2vec-binary";
}

EmbeddingStore::EmbeddingStore(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw InputError("embedding dimension must be positive");
}

bool EmbeddingStore::add(std::string word, std::span<const double> values) {
  if (dim_ == 0) throw InputError("embedding store has no dimension");
  if (values.size() != dim_) {
    throw InputError("vector for '" + word + "' has " + std::to_string(values.size()) +
                     " entries, expected " + std::to_string(dim_));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw InputError("non-finite entry in vector for '" + word + "'");
  }
  if (index_.contains(word)) return false;
  index_.emplace(word, words_.size());
  words_.push_back(std::move(word));
  data_.insert(data_.end(), values.begin(), values.end());
  if (!zero_rows_.empty()) zero_rows_.push_back(false);
  return true;
}

std::optional<std::size_t> EmbeddingStore::index_of(std::string_view word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<WordVector> EmbeddingStore::vector(std::string_view word) const {
  auto idx = index_of(word);
  if (!idx) return std::nullopt;
  return WordVector{words_[*idx], row(*idx)};
}

void EmbeddingStore::flag_zero_row(std::size_t i) {
  if (zero_rows_.empty()) zero_rows_.assign(words_.size(), false);
  zero_rows_[i] = true;
}

std::size_t EmbeddingStore::zero_row_count() const {
  std::size_t count = 0;
  for (bool z : zero_rows_) count += z ? 1 : 0;
  return count;
}

EmbeddingStore load_glove_text(const std::filesystem::path& path,
                               std::optional<std::size_t> limit, LoadSummary* summary) {
  std::ifstream in = open_input(path, std::ios::in | std::ios::binary);
  EmbeddingStore store;
  LoadSummary s;
  std::string line;
  std::vector<double> values;
  std::size_t line_no = 0;
  bool have_dim = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (limit && s.words >= *limit) break;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const std::size_t space = line.find(' ');
    if (space == std::string::npos || space == 0) {
      throw ParseError(path_str(path) + ":" + std::to_string(line_no) +
                       ": expected '<token> <values...>'");
    }
    std::string token = line.substr(0, space);
    values.clear();
    const char* p = line.data() + space;
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || (next != end && *next != ' ') || !std::isfinite(v)) {
        throw ParseError(path_str(path) + ":" + std::to_string(line_no) +
                         ": invalid or non-finite value in vector for '" + token + "'");
      }
      values.push_back(v);
      p = next;
    }
    if (!have_dim) {
      if (values.empty()) {
        throw ParseError(path_str(path) + ":" + std::to_string(line_no) + ": no values");
      }
      store = EmbeddingStore(values.size());
      s.dim = values.size();
      have_dim = true;
    } else if (values.size() != s.dim) {
      throw ParseError(path_str(path) + ":" + std::to_string(line_no) + ": dimension " +
                       std::to_string(values.size()) + " differs from " +
                       std::to_string(s.dim));
    }
    if (store.add(std::move(token), values)) {
      ++s.words;
    } else {
      ++s.duplicates_dropped;
    }
  }
  if (!have_dim) throw ParseError(path_str(path) + ": empty embedding file");
  report_summary(path, EmbeddingFormat::kGloveText, s, summary);
  return store;
}

EmbeddingStore load_word2vec_binary(const std::filesystem::path& path,
                                    std::optional<std::size_t> limit, LoadSummary* summary) {
  std::ifstream in = open_input(path, std::ios::in | std::ios::binary);
  std::string header;
  if (!std::getline(in, header)) throw ParseError(path_str(path) + ": missing header");
  std::istringstream hs(header);
  long long vocab = -1;
  long long dim = -1;
  std::string extra;
  if (!(hs >> vocab >> dim) || (hs >> extra) || vocab < 0 || dim <= 0) {
    throw ParseError(path_str(path) + ": header is not '<vocab_size> <dim>'");
  }

  LoadSummary s;
  s.dim = static_cast<std::size_t>(dim);
  EmbeddingStore store(s.dim);
  std::size_t entries = static_cast<std::size_t>(vocab);
  if (limit) entries = std::min(entries, *limit);

  std::uint64_t offset = header.size() + 1;
  std::vector<char> raw(s.dim * sizeof(float));
  std::vector<double> values(s.dim);
  std::string token;
  for (std::size_t e = 0; e < entries; ++e) {
    token.clear();
    int c = in.get();
    // Entries written by the reference tool end with '\n'; skip it.
    while (c == '\n' || c == '\r') {
      ++offset;
      c = in.get();
    }
    while (c != std::char_traits<char>::eof() && c != ' ') {
      token.push_back(static_cast<char>(c));
      c = in.get();
    }
    if (c == std::char_traits<char>::eof()) {
      throw ParseError(path_str(path) + ": truncated at byte " +
                       std::to_string(offset + token.size()) + " (entry " +
                       std::to_string(e + 1) + " of " + std::to_string(entries) + ")");
    }
    offset += token.size() + 1;
    if (token.empty()) {
      throw ParseError(path_str(path) + ": empty token at byte " + std::to_string(offset - 1));
    }
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw ParseError(path_str(path) + ": truncated at byte " +
                       std::to_string(offset + static_cast<std::uint64_t>(in.gcount())) +
                       " inside vector for '" + token + "'");
    }
    for (std::size_t i = 0; i < s.dim; ++i) {
      values[i] = static_cast<double>(read_le_float(raw.data() + i * sizeof(float)));
      if (!std::isfinite(values[i])) {
        throw ParseError(path_str(path) + ": non-finite value at byte " +
                         std::to_string(offset + i * sizeof(float)));
      }
    }
    offset += raw.size();
    if (store.add(token, values)) {
      ++s.words;
    } else {
      ++s.duplicates_dropped;
    }
  }
  report_summary(path, EmbeddingFormat::kWord2VecBinary, s, summary);
  return store;
}

EmbeddingStore load(const std::filesystem::path& path, EmbeddingFormat format,
                    std::optional<std::size_t> limit, LoadSummary* summary) {
  return format == EmbeddingFormat::kGloveText ? load_glove_text(path, limit, summary)
                                               : load_word2vec_binary(path, limit, summary);
}

void save(const EmbeddingStore& store, const std::filesystem::path& path,
          EmbeddingFormat format) {
  if (path.empty()) throw InputError("output path is empty");
  std::ofstream out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path_str(path));

  const std::size_t dim = store.dim();
  if (format == EmbeddingFormat::kWord2VecBinary) {
    out << store.size() << ' ' << dim << '\n';
    std::vector<char> raw(dim * sizeof(float));
    for (std::size_t i = 0; i < store.size(); ++i) {
      auto row = store.row(i);
      for (std::size_t j = 0; j < dim; ++j) {
        write_le_float(raw.data() + j * sizeof(float), static_cast<float>(row[j]));
      }
      out << store.word(i) << ' ';
      out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
      out << '\n';
    }
  } else {
    char buf[64];
    std::string line;
    for (std::size_t i = 0; i < store.size(); ++i) {
      line = store.word(i);
      for (double v : store.row(i)) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
        line.push_back(' ');
        line.append(buf, end);
      }
      line.push_back('\n');
      out.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
  }
  out.flush();
  if (!out) throw InputError("write failed: " + path_str(path));
}

EmbeddingStore normalize_all(const EmbeddingStore& store) {
  EmbeddingStore out = store;
  parallel_for(out.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto row = out.mutable_row(i);
      const double norm = std::sqrt(simd::squared_norm(row));
      if (norm == 0.0) continue;
      if (std::abs(norm - 1.0) <= 4e-16 * static_cast<double>(row.size() + 1)) continue;
      simd::scale(1.0 / norm, row);
    }
  });
  // Flags are set serially: std::vector<bool> is not safe for concurrent writes.
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (simd::squared_norm(out.row(i)) == 0.0) out.flag_zero_row(i);
  }
  out.set_normalized(true);
  return out;
}

}  // namespace fairvec
