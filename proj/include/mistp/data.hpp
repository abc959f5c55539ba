#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "mistp/errors.hpp"
#include "mistp/objective.hpp"
#include "mistp/rng.hpp"

namespace mistp {

struct LibsvmSource {
  std::string path;
};
struct IdxSource {
  std::string path;
};
struct SyntheticSource {
  std::uint64_t seed = 0;
  std::string kind;
};
struct InlineSource {};

using Provenance = std::variant<InlineSource, LibsvmSource, IdxSource, SyntheticSource>;

/// Dense design matrix with one label per row.
struct Dataset {
  Matrix features;
  Vector labels;
  Provenance provenance;
  std::string name;
  /// Generating parameter of a synthetic set, when known.
  std::optional<Vector> ground_truth;

  std::size_t n() const noexcept { return static_cast<std::size_t>(features.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(features.cols()); }
};

/// Rejects NaN/Inf entries and empty sets.
inline void validate_dataset(const Dataset& ds, bool classification) {
  if (ds.features.rows() == 0) throw InvalidDimension("dataset has no rows");
  if (ds.labels.size() != ds.features.rows()) throw ShapeError("dataset: one label per row required");
  if (!ds.features.allFinite() || !ds.labels.allFinite()) throw InvalidArgument("dataset contains NaN or Inf");
  if (classification)
    for (Eigen::Index i = 0; i < ds.labels.size(); ++i)
      if (ds.labels[i] != 1.0 && ds.labels[i] != -1.0)
        throw InvalidLabel("row " + std::to_string(i) + ": classification label must be -1 or +1");
}

// ---------------------------------------------------------------------------
// LIBSVM text

struct LibsvmOptions {
  /// Number of columns; must be >= the largest index seen.
  std::optional<std::size_t> dimension;
  /// Remap {0,1} labels to {-1,+1} and require binary labels.
  bool classification = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\v\f";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline bool parse_real(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parses `label idx:val idx:val ...` lines with 1-based strictly increasing
/// indices into a dense dataset. Blank lines and `#` comments are skipped;
/// row i of the result is the i-th data line.
inline Dataset parse_libsvm(std::string_view text, const LibsvmOptions& opts = {}) {
  std::vector<double> labels;
  std::vector<std::size_t> row_lines;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::size_t max_index = 0;
  std::size_t line_no = 0;

  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    std::vector<std::pair<std::size_t, double>> entries;
    std::size_t pos = 0;
    bool first = true;
    double label = 0.0;
    while (pos < line.size()) {
      const auto end = line.find_first_of(" \t", pos);
      const std::string_view tok = line.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
      pos = end == std::string_view::npos ? line.size() : line.find_first_not_of(" \t", end);
      if (pos == std::string_view::npos) pos = line.size();
      if (first) {
        if (!detail::parse_real(tok, label)) throw ParseError(line_no, "bad label '" + std::string(tok) + "'");
        first = false;
        continue;
      }
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) throw ParseError(line_no, "expected index:value, got '" + std::string(tok) + "'");
      const std::string_view idx_tok = tok.substr(0, colon);
      std::size_t idx = 0;
      const auto [p, ec] = std::from_chars(idx_tok.data(), idx_tok.data() + idx_tok.size(), idx);
      if (ec != std::errc() || p != idx_tok.data() + idx_tok.size())
        throw ParseError(line_no, "bad feature index '" + std::string(idx_tok) + "'");
      if (idx == 0) throw ParseError(line_no, "feature indices are 1-based; got 0");
      if (!entries.empty() && idx <= entries.back().first)
        throw ParseError(line_no, "feature indices must be strictly increasing");
      double val = 0.0;
      if (!detail::parse_real(tok.substr(colon + 1), val))
        throw ParseError(line_no, "bad feature value '" + std::string(tok.substr(colon + 1)) + "'");
      entries.emplace_back(idx, val);
      max_index = std::max(max_index, idx);
    }
    labels.push_back(label);
    row_lines.push_back(line_no);
    rows.push_back(std::move(entries));
  }

  if (rows.empty()) throw ParseError(line_no, "no data lines");
  std::size_t d = max_index;
  if (opts.dimension) {
    if (*opts.dimension < max_index)
      throw ParseError(0, "dimension override " + std::to_string(*opts.dimension) + " is below max index " +
                              std::to_string(max_index));
    d = *opts.dimension;
  }
  if (d == 0) d = 1;

  Dataset ds;
  ds.features = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  ds.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [idx, val] : rows[r])
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(idx - 1)) = val;
    ds.labels[static_cast<Eigen::Index>(r)] = labels[r];
  }

  if (opts.classification) {
    const bool zero_one = (ds.labels.array() == 0.0 || ds.labels.array() == 1.0).all();
    if (zero_one) ds.labels = (ds.labels.array() * 2.0 - 1.0).matrix();
    for (std::size_t r = 0; r < labels.size(); ++r) {
      const double y = ds.labels[static_cast<Eigen::Index>(r)];
      if (y != 1.0 && y != -1.0)
        throw ParseError(row_lines[r], "classification label " + detail::format_real(y) + " is not binary");
    }
  }
  ds.provenance = InlineSource{};
  return ds;
}

/// Writes non-zero entries only, 17 significant digits.
inline std::string serialize_libsvm(const Dataset& ds) {
  std::string out;
  for (Eigen::Index r = 0; r < ds.features.rows(); ++r) {
    out += detail::format_real(ds.labels[r]);
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c) {
      const double v = ds.features(r, c);
      if (v == 0.0) continue;
      out += ' ';
      out += std::to_string(c + 1);
      out += ':';
      out += detail::format_real(v);
    }
    out += '\n';
  }
  return out;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::uint8_t> read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Dataset load_libsvm(const std::string& path, const LibsvmOptions& opts = {}) {
  Dataset ds = parse_libsvm(read_text_file(path), opts);
  ds.provenance = LibsvmSource{path};
  const auto slash = path.find_last_of('/');
  ds.name = slash == std::string::npos ? path : path.substr(slash + 1);
  return ds;
}

/// Prepends an all-ones column (d' = d + 1). Not idempotent.
inline Dataset add_intercept(const Dataset& ds) {
  Dataset out = ds;
  out.features.resize(ds.features.rows(), ds.features.cols() + 1);
  out.features.col(0).setOnes();
  out.features.rightCols(ds.features.cols()) = ds.features;
  if (ds.ground_truth) {
    Vector gt(ds.ground_truth->size() + 1);
    gt << 0.0, *ds.ground_truth;
    out.ground_truth = gt;
  }
  return out;
}

/// First `rows` rows.
inline Dataset head(const Dataset& ds, std::size_t rows) {
  Dataset out = ds;
  const auto r = static_cast<Eigen::Index>(std::min(rows, ds.n()));
  out.features = ds.features.topRows(r);
  out.labels = ds.labels.head(r);
  return out;
}

/// Zero mean, unit variance per column; constant columns are left unchanged.
inline Dataset standardize_features(const Dataset& ds) {
  Dataset out = ds;
  const double n = static_cast<double>(ds.n());
  for (Eigen::Index c = 0; c < out.features.cols(); ++c) {
    auto col = out.features.col(c);
    const double mean = col.sum() / n;
    const double var = (col.array() - mean).square().sum() / n;
    if (var <= 0.0) continue;
    col = ((col.array() - mean) / std::sqrt(var)).matrix();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic sets

/// Gaussian features, labels A x_true + noise * N(0, 1).
inline Dataset synthetic_regression(std::size_t n, std::size_t d, double noise, std::uint64_t seed) {
  if (n == 0 || d == 0) throw InvalidDimension("synthetic dataset needs n, d >= 1");
  RngStream rng(mix_seed(seed, stream_tag::data));
  const Vector truth = rng.normal_vector(static_cast<Eigen::Index>(d));
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.labels.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) ds.features(i, j) = rng.normal();
    ds.labels[i] = ds.features.row(i).dot(truth) + noise * rng.normal();
  }
  ds.ground_truth = truth;
  ds.provenance = SyntheticSource{seed, "regression"};
  ds.name = "synthetic-regression";
  return ds;
}

/// Gaussian features labelled by sign(a . x_true); rows whose normalized
/// margin |a . x_true| / ||x_true|| falls below `margin` are redrawn.
inline Dataset synthetic_classification(std::size_t n, std::size_t d, double margin, std::uint64_t seed) {
  if (n == 0 || d == 0) throw InvalidDimension("synthetic dataset needs n, d >= 1");
  if (!(margin >= 0.0) || margin > 3.0) throw InvalidArgument("margin must lie in [0, 3]");
  RngStream rng(mix_seed(seed, stream_tag::data));
  Vector truth = rng.normal_vector(static_cast<Eigen::Index>(d));
  const double norm = truth.norm();
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.labels.resize(static_cast<Eigen::Index>(n));
  Vector row(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    double t = 0.0;
    do {
      for (Eigen::Index j = 0; j < row.size(); ++j) row[j] = rng.normal();
      t = row.dot(truth) / norm;
    } while (std::abs(t) < margin || t == 0.0);
    ds.features.row(i) = row.transpose();
    ds.labels[i] = t > 0.0 ? 1.0 : -1.0;
  }
  ds.ground_truth = truth;
  ds.provenance = SyntheticSource{seed, "classification"};
  ds.name = "synthetic-classification";
  return ds;
}

// ---------------------------------------------------------------------------
// IDX binary (big-endian: 0x00 0x00 type ndims, ndims uint32 sizes, payload)

struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;

  friend bool operator==(const IdxArray&, const IdxArray&) = default;
};

inline constexpr std::uint8_t kIdxUnsignedByte = 0x08;

inline IdxArray parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw ParseError(0, "idx: truncated header");
  if (bytes[0] != 0 || bytes[1] != 0) throw ParseError(0, "idx: bad magic");
  if (bytes[2] != kIdxUnsignedByte) throw ParseError(0, "idx: only unsigned-byte payloads (type 0x08) are supported");
  const std::size_t ndims = bytes[3];
  if (ndims == 0) throw ParseError(0, "idx: zero dimensions");
  if (bytes.size() < 4 + 4 * ndims) throw ParseError(0, "idx: truncated dimension list");
  IdxArray out;
  std::size_t total = 1;
  for (std::size_t k = 0; k < ndims; ++k) {
    const auto* p = bytes.data() + 4 + 4 * k;
    const std::uint32_t v = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
    out.dims.push_back(v);
    total *= v;
  }
  const std::size_t offset = 4 + 4 * ndims;
  if (bytes.size() - offset < total) throw ParseError(0, "idx: truncated payload");
  if (bytes.size() - offset > total) throw ParseError(0, "idx: trailing bytes after payload");
  out.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return out;
}

inline std::vector<std::uint8_t> serialize_idx(const IdxArray& a) {
  if (a.dims.empty() || a.dims.size() > 255) throw InvalidArgument("idx: 1..255 dimensions");
  std::vector<std::uint8_t> out{0, 0, kIdxUnsignedByte, static_cast<std::uint8_t>(a.dims.size())};
  for (std::uint32_t v : a.dims) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
  }
  out.insert(out.end(), a.data.begin(), a.data.end());
  return out;
}

/// A 1-D label file as class indices.
inline std::vector<std::size_t> idx_labels(const IdxArray& a) {
  if (a.dims.size() != 1) throw ParseError(0, "idx: label file must be one-dimensional");
  return {a.data.begin(), a.data.end()};
}

/// An image file as rows of pixels scaled to [0, 1].
inline Matrix idx_images(const IdxArray& a) {
  if (a.dims.size() < 2) throw ParseError(0, "idx: image file needs at least two dimensions");
  const Eigen::Index rows = a.dims[0];
  const Eigen::Index cols = static_cast<Eigen::Index>(a.data.size()) / std::max<Eigen::Index>(rows, 1);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = a.data[static_cast<std::size_t>(r * cols + c)] / 255.0;
  return m;
}

}  // namespace mistp
