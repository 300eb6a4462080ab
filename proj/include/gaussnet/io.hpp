#pragma once

// Text formats: locale-independent number printing, the plain-text
// covariance matrix file, split specs ("A|B0,C1") and flat key=value config.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "gaussnet/core.hpp"
#include "gaussnet/criteria.hpp"
#include "gaussnet/error.hpp"
#include "gaussnet/sampler.hpp"

namespace gaussnet::io {

inline constexpr int kPrintDigits = 6;
/// Published matrices are rounded to 3 decimals, so input symmetry is only
/// checked to this tolerance.
inline constexpr double kInputSymmetryTolerance = 1e-6;

/// Shortest general-format rendering with `digits` significant digits.
/// Independent of the C locale; "inf"/"-inf"/"nan" for non-finite values.
inline std::string format_number(double v, int digits = kPrintDigits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
  return std::string(buf, res.ptr);
}

/// v rounded to `digits` significant digits (as printed by format_number).
inline double round_significant(double v, int digits = kPrintDigits) {
  if (!std::isfinite(v) || v == 0.0) return v;
  const std::string s = format_number(v, digits);
  double out = v;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

// ---------------------------------------------------------------------------
// Covariance matrix files
//
//   # labels: A B0 C1
//   2.754 0 1.296 0 0.764 0
//   ...
//
// Whitespace-separated, one row per line, square with even dimension.
// Without a labels header the modes are named 1..n.

inline GaussianState parse_cov_matrix(std::istream& in) {
  std::vector<std::string> labels;
  bool have_labels = false;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      std::string_view body = trim(t.substr(1));
      constexpr std::string_view key = "labels:";
      if (body.substr(0, key.size()) == key) {
        if (have_labels || !rows.empty()) throw ParseError("line " + std::to_string(line_no) + ": misplaced labels header");
        labels = split_whitespace(body.substr(key.size()));
        have_labels = true;
      }
      continue;
    }
    std::vector<double> row;
    for (const auto& tok : split_whitespace(t)) {
      double v = 0.0;
      if (!parse_double(tok, v) || !std::isfinite(v)) {
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" + tok + "' as a number");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no matrix rows found");
  const std::size_t dim = rows.size();
  for (std::size_t r = 0; r < dim; ++r) {
    if (rows[r].size() != dim) {
      throw ParseError("matrix is not square: row " + std::to_string(r + 1) + " has " +
                       std::to_string(rows[r].size()) + " entries, expected " + std::to_string(dim));
    }
  }
  if (dim % 2 != 0) throw ParseError("matrix dimension " + std::to_string(dim) + " is odd");
  Matrix cov(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < dim; ++c) cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > kInputSymmetryTolerance) {
    throw ParseError("matrix is not symmetric: max |a_ij - a_ji| = " + format_number(asym) + " exceeds " +
                     format_number(kInputSymmetryTolerance));
  }
  if (!have_labels) {
    for (std::size_t m = 0; m < dim / 2; ++m) labels.push_back(std::to_string(m + 1));
  }
  if (labels.size() != dim / 2) {
    throw ParseError("labels header lists " + std::to_string(labels.size()) + " modes but the matrix has " +
                     std::to_string(dim / 2));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (std::find(labels.begin() + static_cast<std::ptrdiff_t>(i) + 1, labels.end(), labels[i]) != labels.end()) {
      throw ParseError("duplicate label '" + labels[i] + "' in header");
    }
  }
  return GaussianState(std::move(cov), std::move(labels));
}

inline GaussianState read_cov_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_cov_matrix(in);
}

inline void write_cov_matrix(std::ostream& os, const GaussianState& state, int digits = 10) {
  os << "# labels:";
  for (const auto& l : state.labels()) os << ' ' << l;
  os << '\n';
  const Matrix& m = state.cov();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ' ';
      os << format_number(m(r, c), digits);
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Split specs: party labels joined by commas, parties separated by '|',
// whitespace ignored.  A lone '*' on either side means "every other mode".

struct SplitSpec {
  std::vector<std::string> steering;
  std::vector<std::string> steered;
};

inline SplitSpec parse_split_spec(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  }
  const auto bar = s.find('|');
  if (bar == std::string::npos || s.find('|', bar + 1) != std::string::npos) {
    throw ParseError("split spec '" + std::string(text) + "' must contain exactly one '|'");
  }
  auto party = [&](std::string_view part) {
    std::vector<std::string> out;
    if (part.empty()) throw ParseError("split spec '" + std::string(text) + "' has an empty party");
    std::size_t i = 0;
    while (true) {
      const auto comma = part.find(',', i);
      const auto tok = part.substr(i, comma == std::string_view::npos ? std::string_view::npos : comma - i);
      if (tok.empty()) throw ParseError("split spec '" + std::string(text) + "' has an empty label");
      out.emplace_back(tok);
      if (comma == std::string_view::npos) break;
      i = comma + 1;
    }
    return out;
  };
  return {party(std::string_view(s).substr(0, bar)), party(std::string_view(s).substr(bar + 1))};
}

/// Resolves a split spec against the state's labels.
inline Partition resolve_split(const GaussianState& state, const SplitSpec& spec) {
  const bool wild_n = spec.steering.size() == 1 && spec.steering[0] == "*";
  const bool wild_m = spec.steered.size() == 1 && spec.steered[0] == "*";
  if (wild_n && wild_m) throw ParseError("split spec cannot use '*' on both sides");
  auto lookup = [&](const std::vector<std::string>& labels) {
    std::vector<std::size_t> out;
    for (const auto& l : labels) {
      if (!state.has_label(l)) throw ParseError("unknown mode label '" + l + "' in split spec");
      out.push_back(state.index_of(l));
    }
    return out;
  };
  auto complement = [&](const std::vector<std::size_t>& party) {
    std::vector<std::size_t> out;
    for (std::size_t m = 0; m < state.n_modes(); ++m) {
      if (std::find(party.begin(), party.end(), m) == party.end()) out.push_back(m);
    }
    return out;
  };
  Partition p;
  if (wild_n) {
    p.steered = lookup(spec.steered);
    p.steering = complement(p.steered);
  } else {
    p.steering = lookup(spec.steering);
    p.steered = wild_m ? complement(p.steering) : lookup(spec.steered);
  }
  try {
    p.validate(state.n_modes());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("invalid split: ") + e.what());
  }
  return p;
}

// ---------------------------------------------------------------------------
// Flat key=value config; '#' starts a comment.

inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string_view t = trim(std::string_view(line).substr(0, hash));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(t.substr(0, eq));
    const auto value = trim(t.substr(eq + 1));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::string(key), std::string(value));
  }
  return out;
}

/// Raw shot batch as CSV: header x_<label>,p_<label>,... then one row per shot.
inline void write_batch_csv(std::ostream& os, const ShotBatch& batch, int digits = 10) {
  for (std::size_t m = 0; m < batch.labels.size(); ++m) {
    if (m) os << ',';
    os << "x_" << batch.labels[m] << ",p_" << batch.labels[m];
  }
  os << '\n';
  for (Eigen::Index r = 0; r < batch.quads.rows(); ++r) {
    for (Eigen::Index c = 0; c < batch.quads.cols(); ++c) {
      if (c) os << ',';
      os << format_number(batch.quads(r, c), digits);
    }
    os << '\n';
  }
}

}  // namespace gaussnet::io
