/*   Copyright 2026 The rmltsk Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
 */
#pragma once

#include "rmltsk/dataset.hpp"
#include "rmltsk/fuzzy_rules.hpp"
#include "rmltsk/model.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace rmltsk {

/// Label scores C x_g for raw (unnormalized) test features, L x N_t.
/// The soft-label transform S plays no part at prediction time.
inline Matrix score(const ModelParams& model, const Matrix& X_test) {
  if (X_test.rows() != model.n_features())
    throw DataError("test features have " + std::to_string(X_test.rows()) + " rows, model expects " +
                    std::to_string(model.n_features()));
  const Matrix X = apply_norm(X_test, model.norm);
  return model.C * fuzzy_feature_matrix(X, model.rulebase);
}

inline Matrix threshold_scores(const Matrix& scores, double tau) {
  return (scores.array() >= tau).cast<double>().matrix();
}

inline Matrix predict(const ModelParams& model, const Matrix& X_test) {
  return threshold_scores(score(model, X_test), model.tau);
}

inline Matrix predict(const ModelParams& model, const Matrix& X_test, double tau) {
  return threshold_scores(score(model, X_test), tau);
}

// ---------------------------------------------------------------------------
// Model files
//
// Line-oriented text with a version line followed by sections:
//
//   rmltsk-model 1
//   [meta]      key=value lines
//   [norm]      min=..., max=...
//   [rulebase]  width_floor, K rows of centers, K rows of widths
//   [S]         L rows
//   [C]         L rows
//   [checksum]  fnv1a64=<hex of every byte before this section>
//
// Matrices are row-major, comma-separated, shortest round-trip decimals.
// ---------------------------------------------------------------------------

inline constexpr const char* kModelMagic = "rmltsk-model";
inline constexpr int kModelVersion = 1;

namespace detail {

inline std::string join_reals(const Eigen::Ref<const Vector>& v) {
  std::string s;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_real(v(i));
  }
  return s;
}

inline std::string join_names(const std::vector<std::string>& names) {
  std::string s;
  for (std::size_t i = 0; i < names.size(); ++i) s += (i ? "," : "") + names[i];
  return s;
}

inline void write_rows(std::ostringstream& out, const Matrix& m) {
  for (Index r = 0; r < m.rows(); ++r) out << join_reals(m.row(r).transpose()) << '\n';
}

[[noreturn]] inline void malformed(const std::string& why) { throw DataError("malformed model file: " + why); }

inline Vector parse_reals(std::string_view line, Index expected, const std::string& what) {
  auto cells = split(line, ',');
  if (static_cast<Index>(cells.size()) != expected)
    malformed(what + " has " + std::to_string(cells.size()) + " entries, expected " + std::to_string(expected));
  Vector v(expected);
  for (Index i = 0; i < expected; ++i) {
    double x = 0.0;
    if (!parse_real(cells[static_cast<std::size_t>(i)], x)) malformed("bad number in " + what);
    v(i) = x;
  }
  return v;
}

inline std::vector<std::string> parse_names(std::string_view s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  for (auto n : split(s, ',')) out.emplace_back(trim(n));
  return out;
}

}  // namespace detail

inline std::string serialize_model(const ModelParams& m) {
  const auto& cfg = m.config;
  std::ostringstream out;
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "[meta]\n";
  out << "L=" << m.n_labels() << '\n';
  out << "D=" << m.n_features() << '\n';
  out << "K=" << m.rulebase.n_rules() << '\n';
  out << "tau=" << format_real(m.tau) << '\n';
  out << "alpha=" << format_real(cfg.alpha) << '\n';
  out << "beta=" << format_real(cfg.beta) << '\n';
  out << "gamma=" << format_real(cfg.gamma) << '\n';
  out << "T=" << cfg.T << '\n';
  if (cfg.min_margin) out << "min_margin=" << format_real(*cfg.min_margin) << '\n';
  out << "min_margin_rel=" << format_real(cfg.min_margin_rel) << '\n';
  out << "epsilon_row=" << format_real(cfg.epsilon_row) << '\n';
  if (cfg.ridge_y) out << "ridge_y=" << format_real(*cfg.ridge_y) << '\n';
  out << "ridge_y_rel=" << format_real(cfg.ridge_y_rel) << '\n';
  out << "seed=" << cfg.seed << '\n';
  out << "label_names=" << detail::join_names(m.label_names) << '\n';
  out << "feature_names=" << detail::join_names(m.feature_names) << '\n';
  out << "[norm]\n";
  out << "min=" << detail::join_reals(m.norm.min) << '\n';
  out << "max=" << detail::join_reals(m.norm.max) << '\n';
  out << "[rulebase]\n";
  out << "width_floor=" << format_real(m.rulebase.width_floor) << '\n';
  detail::write_rows(out, m.rulebase.centers);
  detail::write_rows(out, m.rulebase.widths);
  out << "[S]\n";
  detail::write_rows(out, m.S);
  out << "[C]\n";
  detail::write_rows(out, m.C);
  std::string body = out.str();
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv1a64(body)));
  body += "[checksum]\nfnv1a64=";
  body += hex;
  body += '\n';
  return body;
}

inline ModelParams parse_model(const std::string& text) {
  // Split into lines keeping track of byte offsets for the checksum.
  std::vector<std::string_view> lines;
  std::vector<std::size_t> offsets;
  {
    std::string_view all(text);
    std::size_t pos = 0;
    while (pos < all.size()) {
      auto nl = all.find('\n', pos);
      if (nl == std::string_view::npos) nl = all.size();
      lines.push_back(all.substr(pos, nl - pos));
      offsets.push_back(pos);
      pos = nl + 1;
    }
  }
  if (lines.empty()) detail::malformed("empty");
  {
    auto head = split(trim(lines[0]), ' ');
    if (head.size() != 2 || head[0] != kModelMagic) detail::malformed("missing header");
    if (trim(head[1]) != std::to_string(kModelVersion))
      throw DataError("unsupported version '" + std::string(trim(head[1])) + "' in model file");
  }

  std::map<std::string, std::vector<std::string_view>, std::less<>> sections;
  std::size_t checksum_offset = std::string::npos;
  std::string current;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      current = std::string(line.substr(1, line.size() - 2));
      if (sections.count(current)) detail::malformed("duplicate section [" + current + "]");
      sections[current];
      if (current == "checksum") checksum_offset = offsets[i];
      continue;
    }
    if (current.empty()) detail::malformed("content outside a section");
    sections[current].push_back(line);
  }
  for (const char* name : {"meta", "norm", "rulebase", "S", "C", "checksum"})
    if (!sections.count(name)) detail::malformed(std::string("missing section [") + name + "]");

  const auto& ck = sections["checksum"];
  if (ck.size() != 1 || ck[0].substr(0, 8) != "fnv1a64=") detail::malformed("bad checksum section");
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a64(std::string_view(text).substr(0, checksum_offset))));
  if (ck[0].substr(8) != hex) throw DataError("checksum failure in model file");

  std::map<std::string, std::string, std::less<>> meta;
  for (auto line : sections["meta"]) {
    auto eq = line.find('=');
    if (eq == std::string_view::npos) detail::malformed("meta line without '='");
    meta[std::string(trim(line.substr(0, eq)))] = std::string(line.substr(eq + 1));
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end()) detail::malformed(std::string("missing meta key ") + key);
    return it->second;
  };
  auto real = [&](const char* key) {
    double v = 0.0;
    if (!parse_real(need(key), v)) detail::malformed(std::string("bad value for ") + key);
    return v;
  };
  auto integer = [&](const char* key) -> long long {
    const auto& s = need(key);
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) detail::malformed(std::string("bad value for ") + key);
    return v;
  };

  ModelParams m;
  const Index L = integer("L"), D = integer("D"), K = integer("K");
  if (L < 1 || D < 1 || K < 1) detail::malformed("nonpositive dimension");
  m.tau = real("tau");
  auto& cfg = m.config;
  cfg.alpha = real("alpha");
  cfg.beta = real("beta");
  cfg.gamma = real("gamma");
  cfg.K = K;
  cfg.T = static_cast<int>(integer("T"));
  if (meta.count("min_margin")) cfg.min_margin = real("min_margin");
  cfg.min_margin_rel = real("min_margin_rel");
  cfg.epsilon_row = real("epsilon_row");
  if (meta.count("ridge_y")) cfg.ridge_y = real("ridge_y");
  cfg.ridge_y_rel = real("ridge_y_rel");
  cfg.seed = static_cast<std::uint64_t>(integer("seed"));
  cfg.tau = m.tau;
  m.label_names = detail::parse_names(need("label_names"));
  m.feature_names = detail::parse_names(need("feature_names"));
  if (static_cast<Index>(m.label_names.size()) != L) detail::malformed("label name count");
  if (static_cast<Index>(m.feature_names.size()) != D) detail::malformed("feature name count");

  const auto& norm = sections["norm"];
  if (norm.size() != 2 || norm[0].substr(0, 4) != "min=" || norm[1].substr(0, 4) != "max=")
    detail::malformed("bad [norm] section");
  m.norm.min = detail::parse_reals(norm[0].substr(4), D, "norm min");
  m.norm.max = detail::parse_reals(norm[1].substr(4), D, "norm max");

  const auto& rb = sections["rulebase"];
  if (static_cast<Index>(rb.size()) != 1 + 2 * K || rb[0].substr(0, 12) != "width_floor=")
    detail::malformed("bad [rulebase] section");
  if (!parse_real(rb[0].substr(12), m.rulebase.width_floor)) detail::malformed("bad width_floor");
  cfg.width_floor = m.rulebase.width_floor;
  m.rulebase.centers.resize(K, D);
  m.rulebase.widths.resize(K, D);
  for (Index k = 0; k < K; ++k) {
    m.rulebase.centers.row(k) = detail::parse_reals(rb[static_cast<std::size_t>(1 + k)], D, "center row").transpose();
    m.rulebase.widths.row(k) = detail::parse_reals(rb[static_cast<std::size_t>(1 + K + k)], D, "width row").transpose();
  }

  auto read_matrix = [&](const char* name, Index rows, Index cols) {
    const auto& sec = sections[name];
    if (static_cast<Index>(sec.size()) != rows) detail::malformed(std::string("row count in [") + name + "]");
    Matrix out(rows, cols);
    for (Index r = 0; r < rows; ++r)
      out.row(r) = detail::parse_reals(sec[static_cast<std::size_t>(r)], cols, name).transpose();
    return out;
  };
  m.S = read_matrix("S", L, L);
  m.C = read_matrix("C", L, K * (D + 1));
  if (!std::isfinite(m.tau)) detail::malformed("non-finite threshold");
  return m;
}

inline void save_model(const ModelParams& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path);
  out << serialize_model(m);
  if (!out) throw DataError("write failed: " + path);
}

inline ModelParams load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

// ---------------------------------------------------------------------------
// Rule export with linguistic terms
// ---------------------------------------------------------------------------

// Terms for K rules sorted by center: 1 -> Medium, 2 -> Small/Large,
// 3 -> Small/Medium/Large, otherwise "Level 1".."Level K".
inline std::vector<std::string> linguistic_vocabulary(Index K) {
  switch (K) {
    case 1: return {"Medium"};
    case 2: return {"Small", "Large"};
    case 3: return {"Small", "Medium", "Large"};
    default: {
      std::vector<std::string> v;
      for (Index k = 1; k <= K; ++k) v.push_back("Level " + std::to_string(k));
      return v;
    }
  }
}

// terms[k][d]: linguistic term of rule k on feature d. Ties keep rule order.
inline std::vector<std::vector<std::string>> linguistic_terms(const RuleBase& rb) {
  const Index K = rb.n_rules(), D = rb.n_features();
  const auto vocab = linguistic_vocabulary(K);
  std::vector<std::vector<std::string>> terms(static_cast<std::size_t>(K), std::vector<std::string>(static_cast<std::size_t>(D)));
  std::vector<Index> order(static_cast<std::size_t>(K));
  for (Index d = 0; d < D; ++d) {
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return rb.centers(a, d) < rb.centers(b, d); });
    for (Index pos = 0; pos < K; ++pos)
      terms[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])][static_cast<std::size_t>(d)] =
          vocab[static_cast<std::size_t>(pos)];
  }
  return terms;
}

inline std::string export_rules(const ModelParams& model, const std::vector<std::string>& feature_names,
                                const std::vector<std::string>& label_names) {
  const auto& rb = model.rulebase;
  const Index K = rb.n_rules(), D = rb.n_features(), L = model.n_labels();
  if (static_cast<Index>(feature_names.size()) != D) throw DataError("feature name count mismatch");
  if (static_cast<Index>(label_names.size()) != L) throw DataError("label name count mismatch");
  const auto terms = linguistic_terms(rb);
  std::ostringstream out;
  for (Index k = 0; k < K; ++k) {
    out << "RULE " << (k + 1) << '\n';
    for (Index d = 0; d < D; ++d)
      out << "IF " << feature_names[static_cast<std::size_t>(d)] << " is "
          << terms[static_cast<std::size_t>(k)][static_cast<std::size_t>(d)] << '\n';
    for (Index l = 0; l < L; ++l) {
      const Index base = k * (D + 1);
      out << "THEN f_" << label_names[static_cast<std::size_t>(l)] << " = " << format_real(model.C(l, base), 6);
      for (Index d = 0; d < D; ++d) {
        const double c = model.C(l, base + 1 + d);
        out << (c < 0 ? " - " : " + ") << format_real(std::abs(c), 6) << '*'
            << feature_names[static_cast<std::size_t>(d)];
      }
      out << '\n';
    }
    if (k + 1 < K) out << '\n';
  }
  return out.str();
}

inline std::string export_rules(const ModelParams& model) {
  return export_rules(model, model.feature_names, model.label_names);
}

}  // namespace rmltsk
