#ifndef STACO_DATASET_HPP
#define STACO_DATASET_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "staco/errors.hpp"
#include "staco/rng.hpp"

namespace staco {

using row_major_matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense binary-classification dataset. Labels are +/-1; pos_idx and neg_idx
// partition the row range and are sorted ascending. Immutable after
// construction and safe to share read-only across threads.
struct dataset {
  row_major_matrix features;  // n x d
  std::vector<int> labels;    // +1 / -1
  std::vector<int> pos_idx;
  std::vector<int> neg_idx;

  int n() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
  int n_pos() const { return static_cast<int>(pos_idx.size()); }
  int n_neg() const { return static_cast<int>(neg_idx.size()); }

  Eigen::Map<const Eigen::VectorXd> row(int i) const {
    return Eigen::Map<const Eigen::VectorXd>(features.data() +
                                                 static_cast<std::ptrdiff_t>(i) * dim(),
                                             dim());
  }

  // Rebuilds pos_idx/neg_idx from labels (sorted by construction).
  void rebuild_index() {
    pos_idx.clear();
    neg_idx.clear();
    for (int i = 0; i < n(); ++i) {
      (labels[i] > 0 ? pos_idx : neg_idx).push_back(i);
    }
  }

  // Throws when an operation needs at least one example of each class.
  void require_both_classes(const char* op) const {
    if (n_pos() < 1 || n_neg() < 1) {
      throw std::invalid_argument(std::string(op) +
                                  ": dataset must contain at least one positive and "
                                  "one negative example");
    }
  }
};

struct dataset_summary {
  std::int64_t n = 0;
  std::int64_t d = 0;
  std::int64_t n_pos = 0;
  std::int64_t n_neg = 0;
  double positive_fraction = 0.0;
  std::vector<double> feature_min;
  std::vector<double> feature_max;
};

inline dataset_summary summarize(const dataset& ds) {
  dataset_summary s;
  s.n = ds.n();
  s.d = ds.dim();
  s.n_pos = ds.n_pos();
  s.n_neg = ds.n_neg();
  s.positive_fraction = ds.n() > 0 ? static_cast<double>(ds.n_pos()) / ds.n() : 0.0;
  s.feature_min.assign(ds.dim(), std::numeric_limits<double>::infinity());
  s.feature_max.assign(ds.dim(), -std::numeric_limits<double>::infinity());
  for (int i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < ds.dim(); ++j) {
      double v = ds.features(i, j);
      s.feature_min[j] = std::min(s.feature_min[j], v);
      s.feature_max[j] = std::max(s.feature_max[j], v);
    }
  }
  return s;
}

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + tok.size() && tok.size() > 0;
}

inline bool parse_int(const std::string& tok, long& out) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  out = std::strtol(begin, &end, 10);
  return end == begin + tok.size() && tok.size() > 0;
}

}  // namespace detail

// Parses libsvm text: each nonempty line is `<label> <idx>:<val> ...` with
// 1-based strictly increasing indices. Any positive label maps to +1, the
// rest to -1. d is the largest index seen; absent indices are zero.
inline dataset parse_libsvm(std::istream& in) {
  struct entry {
    long col;
    double val;
  };
  std::vector<std::vector<entry>> rows;
  std::vector<int> labels;
  long max_col = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Strip trailing comment and whitespace-only lines.
    std::size_t first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) continue;

    std::vector<std::string> toks;
    std::size_t pos = 0;
    while (pos < line.size()) {
      std::size_t start = line.find_first_not_of(" \t\r", pos);
      if (start == std::string::npos) break;
      std::size_t stop = line.find_first_of(" \t\r", start);
      if (stop == std::string::npos) stop = line.size();
      toks.push_back(line.substr(start, stop - start));
      pos = stop;
    }
    if (toks.empty()) continue;

    double label_val = 0.0;
    if (!detail::parse_double(toks[0], label_val) || !std::isfinite(label_val)) {
      throw parse_error(line_no, "bad label token '" + toks[0] + "'");
    }
    labels.push_back(label_val > 0.0 ? 1 : -1);

    std::vector<entry> row;
    long prev_col = 0;
    for (std::size_t t = 1; t < toks.size(); ++t) {
      const std::string& tok = toks[t];
      std::size_t colon = tok.find(':');
      if (colon == std::string::npos) {
        throw parse_error(line_no, "expected idx:val, got '" + tok + "'");
      }
      long col = 0;
      double val = 0.0;
      if (!detail::parse_int(tok.substr(0, colon), col) || col < 1) {
        throw parse_error(line_no, "bad feature index in '" + tok + "'");
      }
      if (col <= prev_col) {
        throw parse_error(line_no, "feature indices must be strictly increasing");
      }
      if (!detail::parse_double(tok.substr(colon + 1), val) || !std::isfinite(val)) {
        throw parse_error(line_no, "bad feature value in '" + tok + "'");
      }
      prev_col = col;
      max_col = std::max(max_col, col);
      row.push_back({col, val});
    }
    rows.push_back(std::move(row));
  }

  if (rows.empty()) throw parse_error("empty libsvm input");

  dataset ds;
  ds.features = row_major_matrix::Zero(static_cast<Eigen::Index>(rows.size()),
                                       static_cast<Eigen::Index>(max_col));
  ds.labels = std::move(labels);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const entry& e : rows[i]) {
      ds.features(static_cast<Eigen::Index>(i), e.col - 1) = e.val;
    }
  }
  ds.rebuild_index();
  return ds;
}

inline dataset load_libsvm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return parse_libsvm(in);
}

// Writes libsvm text that parses back to the identical (features, labels).
inline void serialize_libsvm(const dataset& ds, std::ostream& out) {
  char buf[64];
  for (int i = 0; i < ds.n(); ++i) {
    out << (ds.labels[i] > 0 ? "+1" : "-1");
    for (int j = 0; j < ds.dim(); ++j) {
      double v = ds.features(i, j);
      if (v != 0.0) {
        std::snprintf(buf, sizeof(buf), " %d:%.17g", j + 1, v);
        out << buf;
      }
    }
    out << '\n';
  }
}

namespace detail {

inline dataset take_rows(const dataset& ds, const std::vector<int>& keep) {
  dataset out;
  out.features.resize(static_cast<Eigen::Index>(keep.size()), ds.dim());
  out.labels.resize(keep.size());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.features.row(static_cast<Eigen::Index>(r)) = ds.features.row(keep[r]);
    out.labels[r] = ds.labels[keep[r]];
  }
  out.rebuild_index();
  return out;
}

}  // namespace detail

// Keeps a uniform random subset of ceil(keep_frac * n_pos) positives and all
// negatives; feature rows are copied untouched and row order is preserved.
inline dataset subsample_positives(const dataset& ds, double keep_frac,
                                   std::uint64_t seed) {
  if (!(keep_frac > 0.0) || keep_frac > 1.0) {
    throw std::invalid_argument("subsample_positives: keep_frac must be in (0, 1]");
  }
  ds.require_both_classes("subsample_positives");
  const int np = ds.n_pos();
  const int keep = static_cast<int>(std::ceil(keep_frac * np));

  rng gen = rng::derive(seed, rng_stream::subsample);
  subset_sampler sampler(np);
  std::vector<int> chosen;
  sampler.sample(keep, gen, chosen);

  std::vector<char> keep_row(static_cast<std::size_t>(ds.n()), 0);
  for (int c : chosen) keep_row[static_cast<std::size_t>(ds.pos_idx[c])] = 1;
  for (int j : ds.neg_idx) keep_row[static_cast<std::size_t>(j)] = 1;

  std::vector<int> rows;
  rows.reserve(static_cast<std::size_t>(keep) + ds.neg_idx.size());
  for (int i = 0; i < ds.n(); ++i) {
    if (keep_row[static_cast<std::size_t>(i)]) rows.push_back(i);
  }
  return detail::take_rows(ds, rows);
}

// Head/tail split: the first floor(train_frac * n) rows become the training
// part. Each part must contain both classes.
inline std::pair<dataset, dataset> split_head_tail(const dataset& ds,
                                                   double train_frac) {
  if (!(train_frac > 0.0) || !(train_frac < 1.0)) {
    throw std::invalid_argument("split_head_tail: train_frac must be in (0, 1)");
  }
  const int n = ds.n();
  const int n_train = static_cast<int>(std::floor(train_frac * n + 1e-9));
  if (n_train < 1 || n_train >= n) {
    throw std::invalid_argument("split_head_tail: both splits must be nonempty");
  }
  std::vector<int> head(static_cast<std::size_t>(n_train));
  std::vector<int> tail(static_cast<std::size_t>(n - n_train));
  for (int i = 0; i < n_train; ++i) head[static_cast<std::size_t>(i)] = i;
  for (int i = n_train; i < n; ++i) tail[static_cast<std::size_t>(i - n_train)] = i;
  dataset train = detail::take_rows(ds, head);
  dataset test = detail::take_rows(ds, tail);
  train.require_both_classes("split_head_tail (train part)");
  test.require_both_classes("split_head_tail (test part)");
  return {std::move(train), std::move(test)};
}

// Two spherical Gaussians separated along the first axis: positives at
// +separation * e1, negatives at -separation * e1. Positives come first.
inline dataset synth_gaussian(int n_pos, int n_neg, int d, double separation,
                              std::uint64_t seed) {
  if (n_pos < 1 || n_neg < 1) {
    throw std::invalid_argument("synth_gaussian: class sizes must be >= 1");
  }
  if (d < 1) throw std::invalid_argument("synth_gaussian: d must be >= 1");
  if (separation < 0.0) {
    throw std::invalid_argument("synth_gaussian: separation must be >= 0");
  }
  rng gen = rng::derive(seed, rng_stream::synth);
  dataset ds;
  ds.features.resize(n_pos + n_neg, d);
  ds.labels.resize(static_cast<std::size_t>(n_pos + n_neg));
  for (int i = 0; i < n_pos + n_neg; ++i) {
    const double mean1 = i < n_pos ? separation : -separation;
    ds.labels[static_cast<std::size_t>(i)] = i < n_pos ? 1 : -1;
    for (int j = 0; j < d; ++j) {
      ds.features(i, j) = (j == 0 ? mean1 : 0.0) + gen.next_normal();
    }
  }
  ds.rebuild_index();
  return ds;
}

}  // namespace staco

#endif  // STACO_DATASET_HPP
