#pragma once
// Synthetic column -> fixed n x d matrix: tokenize every item, concatenate,
// pad or crop to n tokens, stack the word vectors row by row.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "colnet/random.hpp"
#include "colnet/sampling.hpp"
#include "colnet/text.hpp"

namespace colnet {

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline constexpr std::string_view kPadToken = "<pad>";

struct WordSequence {
  std::vector<std::string> tokens;

  std::size_t padding() const {
    return static_cast<std::size_t>(std::count(tokens.begin(), tokens.end(), std::string(kPadToken)));
  }
};

// token -> d-dimensional vector. Unknown tokens map to the zero vector unless
// the table was created by hashed(), in which case every token gets a
// deterministic unit-norm pseudo-random vector.
class WordVectorTable {
 public:
  explicit WordVectorTable(std::size_t dimension = 0) : dim_(dimension) {}

  static WordVectorTable hashed(std::size_t dimension, std::uint64_t seed) {
    WordVectorTable t(dimension);
    t.hashed_ = true;
    t.hash_seed_ = seed;
    return t;
  }

  std::size_t dimension() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  bool is_hashed() const { return hashed_; }
  bool contains(const std::string& token) const { return vectors_.contains(token); }

  void insert(std::string token, std::vector<double> v) {
    if (v.size() != dim_) {
      throw DataError("word vector for '" + token + "' has " + std::to_string(v.size()) + " values, expected " +
                      std::to_string(dim_));
    }
    vectors_[std::move(token)] = std::move(v);
  }

  // Writes the vector of `token` into out (size d).
  void fill(const std::string& token, std::span<double> out) const {
    auto it = vectors_.find(token);
    if (it != vectors_.end()) {
      std::copy(it->second.begin(), it->second.end(), out.begin());
      return;
    }
    std::fill(out.begin(), out.end(), 0.0);
    if (!hashed_ || token == kPadToken) return;
    Rng rng(derive_seed(hash_seed_, token));
    double norm = 0.0;
    for (auto& x : out) {
      x = uniform_real(rng, -1.0, 1.0);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (auto& x : out) x /= norm;
    }
  }

  std::vector<double> vector_of(const std::string& token) const {
    std::vector<double> v(dim_);
    fill(token, v);
    return v;
  }

  // Tokens in sorted order, for deterministic serialization.
  std::vector<std::string> vocabulary() const {
    std::vector<std::string> out;
    out.reserve(vectors_.size());
    for (const auto& [k, _] : vectors_) out.push_back(k);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::size_t dim_;
  bool hashed_ = false;
  std::uint64_t hash_seed_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

// Textual word2vec: "<count> <d>" header, then "<token> v1 ... vd" lines.
inline WordVectorTable load_word_vectors(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw DataError(source + ": missing word2vec header");
  std::istringstream header(line);
  std::size_t count = 0, dim = 0;
  if (!(header >> count >> dim) || dim == 0) throw DataError(source + ":1: malformed word2vec header");
  WordVectorTable table(dim);
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> v;
    v.reserve(dim);
    double x;
    while (fields >> x) v.push_back(x);
    if (!fields.eof() || v.size() != dim) {
      throw DataError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                      " values for '" + token + "'");
    }
    table.insert(std::move(token), std::move(v));
  }
  if (table.size() != count) {
    throw DataError(source + ": header declares " + std::to_string(count) + " vectors, found " +
                    std::to_string(table.size()));
  }
  return table;
}

inline WordVectorTable load_word_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open word vector file '" + path.string() + "'");
  return load_word_vectors(in, path.string());
}

inline void save_word_vectors(const WordVectorTable& table, std::ostream& out) {
  out << table.size() << ' ' << table.dimension() << '\n';
  std::ostringstream buf;
  buf.precision(17);
  for (const auto& tok : table.vocabulary()) {
    buf.str("");
    buf << tok;
    for (double x : table.vector_of(tok)) buf << ' ' << x;
    out << buf.str() << '\n';
  }
}

inline std::vector<std::string> column_tokens(const SyntheticColumn& col) {
  std::vector<std::string> out;
  for (const auto& item : col.items) {
    auto t = tokenize(item);
    out.insert(out.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
  }
  return out;
}

// Nearest-rank percentile of the token-sequence lengths, at least 1.
inline std::size_t choose_sequence_length(const std::vector<SyntheticColumn>& corpus, double percentile) {
  if (corpus.empty()) throw PreconditionError("choose_sequence_length: empty corpus");
  if (!(percentile > 0.0 && percentile <= 1.0)) {
    throw PreconditionError("choose_sequence_length: percentile must lie in (0,1]");
  }
  std::vector<std::size_t> lengths;
  lengths.reserve(corpus.size());
  for (const auto& c : corpus) lengths.push_back(column_tokens(c).size());
  std::sort(lengths.begin(), lengths.end());
  auto rank = static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(lengths.size()) - 1e-12));
  rank = std::clamp<std::size_t>(rank, 1, lengths.size());
  return std::max<std::size_t>(1, lengths[rank - 1]);
}

inline WordSequence to_word_sequence(const SyntheticColumn& col, std::size_t n) {
  if (n == 0) throw PreconditionError("to_word_sequence: n must be >= 1");
  WordSequence seq{column_tokens(col)};
  seq.tokens.resize(n, std::string(kPadToken));
  return seq;
}

inline Matrix embed(const WordSequence& seq, const WordVectorTable& wv) {
  Matrix x(seq.tokens.size(), wv.dimension());
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (seq.tokens[i] == kPadToken) continue;
    wv.fill(seq.tokens[i], x.row(i));
  }
  return x;
}

inline Matrix embed(const SyntheticColumn& col, std::size_t n, const WordVectorTable& wv) {
  return embed(to_word_sequence(col, n), wv);
}

}  // namespace colnet
