#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "functionals.hpp"
#include "hypergraph.hpp"
#include "lp.hpp"
#include "ranks.hpp"
#include "tensor.hpp"

namespace spectrumkit::io {

using nlohmann::json;

/// Thrown for malformed input; the message names the offending field.
class FormatError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

namespace detail {

inline const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw FormatError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(path + "." + key + ": missing field");
  return *it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw FormatError(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw FormatError(path + ": not finite");
  return v;
}

inline int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw FormatError(path + ": expected an integer");
  return j.get<int>();
}

inline const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) throw FormatError(path + ": expected an array");
  return j;
}

/// A complex entry as [re, im] or a bare real number.
inline Complex complex_entry(const json& j, const std::string& path) {
  if (j.is_number()) return {number(j, path), 0.0};
  if (!j.is_array() || j.size() != 2) throw FormatError(path + ": expected [re, im] or a number");
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
}

inline json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// n x n matrix given either as a flat row-major list of n^2 entries or as n rows.
inline Matrix square_matrix(const json& j, int n, const std::string& path) {
  array(j, path);
  Matrix m(n, n);
  const bool rows = static_cast<int>(j.size()) == n && (n > 1 || (j[0].is_array() && j[0].size() == 1));
  if (!rows) {
    if (static_cast<int>(j.size()) != n * n)
      throw FormatError(path + ": expected " + std::to_string(n * n) + " entries or " + std::to_string(n) + " rows");
    for (int k = 0; k < n * n; ++k) m(k / n, k % n) = complex_entry(j[k], path + "[" + std::to_string(k) + "]");
    return m;
  }
  for (int i = 0; i < n; ++i) {
    const std::string rp = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != n)
      throw FormatError(rp + ": expected a row of " + std::to_string(n) + " entries");
    for (int k = 0; k < n; ++k) m(i, k) = complex_entry(j[i][k], rp + "[" + std::to_string(k) + "]");
  }
  return m;
}

inline RealVector real_vector(const json& j, const std::string& path) {
  array(j, path);
  RealVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = number(j[k], path + "[" + std::to_string(k) + "]");
  return v;
}

inline json vector_json(const RealVector& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

inline json marginals_json(const MarginalTuple& p) {
  json a = json::array();
  for (const RealVector& v : p.legs) a.push_back(vector_json(v));
  return a;
}

inline json group_json(const GroupElement& g) {
  json a = json::array();
  for (const Matrix& f : g.factors) a.push_back(matrix_json(f));
  return a;
}

inline json index_json(const MultiIndex& idx) {
  json a = json::array();
  for (int i : idx) a.push_back(i + 1);
  return a;
}

}  // namespace detail

// --- tensors -------------------------------------------------------------

/// {"dims":[2,2,2],"entries":[{"idx":[2,1,1],"re":1.0,"im":0.0},...]}, idx 1-based,
/// omitted entries zero, repeated indices summed.
inline Tensor tensor_from_json(const json& j) {
  const json& dims_j = detail::array(detail::field(j, "dims", "tensor"), "tensor.dims");
  Dims dims;
  for (std::size_t k = 0; k < dims_j.size(); ++k) {
    const int n = detail::integer(dims_j[k], "tensor.dims[" + std::to_string(k) + "]");
    if (n < 1) throw FormatError("tensor.dims[" + std::to_string(k) + "]: must be positive");
    dims.push_back(n);
  }
  if (dims.size() < 2) throw FormatError("tensor.dims: at least two legs required");
  Tensor t(dims);
  const json& entries = detail::array(detail::field(j, "entries", "tensor"), "tensor.entries");
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const std::string path = "tensor.entries[" + std::to_string(e) + "]";
    const json& idx_j = detail::array(detail::field(entries[e], "idx", path), path + ".idx");
    if (idx_j.size() != dims.size()) throw FormatError(path + ".idx: expected " + std::to_string(dims.size()) + " indices");
    MultiIndex idx;
    for (std::size_t k = 0; k < idx_j.size(); ++k) {
      const int i = detail::integer(idx_j[k], path + ".idx[" + std::to_string(k) + "]");
      if (i < 1 || i > dims[k]) throw FormatError(path + ".idx[" + std::to_string(k) + "]: out of range (1-based)");
      idx.push_back(i - 1);
    }
    const double re = entries[e].contains("re") ? detail::number(entries[e]["re"], path + ".re") : 0.0;
    const double im = entries[e].contains("im") ? detail::number(entries[e]["im"], path + ".im") : 0.0;
    t.set(idx, t(idx) + Complex(re, im));
  }
  return t;
}

inline json tensor_to_json(const Tensor& t) {
  json entries = json::array();
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    const Complex z = t.entries()[k];
    if (z == Complex(0.0, 0.0)) continue;
    entries.push_back({{"idx", detail::index_json(t.multi_index(k))}, {"re", z.real()}, {"im", z.imag()}});
  }
  return {{"dims", t.dims()}, {"entries", entries}};
}

/// {"n":3,"mats":[[[re,im],...],...]}: each matrix a flat row-major list of n^2 entries
/// (rows of n entries and bare reals are accepted too).
inline MatrixTuple tuple_from_json(const json& j) {
  const int n = detail::integer(detail::field(j, "n", "tuple"), "tuple.n");
  if (n < 1) throw FormatError("tuple.n: must be positive");
  const json& mats = detail::array(detail::field(j, "mats", "tuple"), "tuple.mats");
  if (mats.empty()) throw FormatError("tuple.mats: at least one matrix required");
  MatrixTuple a{n, {}};
  for (std::size_t k = 0; k < mats.size(); ++k)
    a.mats.push_back(detail::square_matrix(mats[k], n, "tuple.mats[" + std::to_string(k) + "]"));
  return a;
}

inline json tuple_to_json(const MatrixTuple& a) {
  json mats = json::array();
  for (const Matrix& m : a.mats) {
    json flat = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index k = 0; k < m.cols(); ++k) flat.push_back(detail::complex_json(m(i, k)));
    mats.push_back(std::move(flat));
  }
  return {{"n", a.n}, {"mats", mats}};
}

/// {"parts":[2,2,2],"edges":[[2,1,1],...]}, 1-based.
inline Hypergraph hypergraph_from_json(const json& j) {
  Hypergraph h;
  const json& parts = detail::array(detail::field(j, "parts", "hypergraph"), "hypergraph.parts");
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const int n = detail::integer(parts[k], "hypergraph.parts[" + std::to_string(k) + "]");
    if (n < 1) throw FormatError("hypergraph.parts[" + std::to_string(k) + "]: must be positive");
    h.parts.push_back(n);
  }
  if (h.parts.size() < 2) throw FormatError("hypergraph.parts: at least two parts required");
  const json& edges = detail::array(detail::field(j, "edges", "hypergraph"), "hypergraph.edges");
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::string path = "hypergraph.edges[" + std::to_string(e) + "]";
    detail::array(edges[e], path);
    if (edges[e].size() != h.parts.size()) throw FormatError(path + ": expected " + std::to_string(h.parts.size()) + " vertices");
    MultiIndex idx;
    for (std::size_t k = 0; k < edges[e].size(); ++k) {
      const int v = detail::integer(edges[e][k], path + "[" + std::to_string(k) + "]");
      if (v < 1 || v > h.parts[k]) throw FormatError(path + "[" + std::to_string(k) + "]: out of range (1-based)");
      idx.push_back(v - 1);
    }
    h.edges.push_back(std::move(idx));
  }
  try {
    h.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
  return h;
}

inline json hypergraph_to_json(const Hypergraph& h) {
  json edges = json::array();
  for (const MultiIndex& e : h.edges) edges.push_back(detail::index_json(e));
  return {{"parts", h.parts}, {"edges", edges}};
}

// --- results -------------------------------------------------------------

inline json certificate_to_json(const FunctionalCertificate& c) {
  json j{{"functional", c.functional},
         {"value", c.value},
         {"bits", c.bits},
         {"theta", detail::vector_json(c.theta)},
         {"witness", {{"marginals", detail::marginals_json(c.witness)}}},
         {"group", detail::group_json(c.group)},
         {"converged", c.converged},
         {"gap", c.gap},
         {"iterations", c.iterations}};
  if (!c.origin.empty()) j["origin"] = c.origin;
  if (c.functional.find("support") != std::string::npos) j["eta_sensitive"] = c.eta_sensitive;
  return j;
}

inline json rank_report_to_json(const RankReport& r) {
  json routes = json::object();
  for (const auto& [name, v] : r.routes) {
    if (v.raw)
      routes[name] = {{"raw", *v.raw}, {"rounded", static_cast<long long>(v.value)}};
    else if (v.integral)
      routes[name] = static_cast<long long>(v.value);
    else
      routes[name] = v.value;
  }
  const json value = r.quantity == "ncrank" ? json(static_cast<long long>(r.value)) : json(r.value);
  json j{{"quantity", r.quantity}, {"value", value}, {"routes", routes}, {"gap", r.gap}, {"status", r.status},
         {"converged", r.converged}};
  if (!r.notes.empty()) j["notes"] = r.notes;
  json cert = json::object();
  if (r.theta.size()) cert["theta"] = detail::vector_json(r.theta);
  if (!r.basis.factors.empty()) cert["basis"] = detail::group_json(r.basis);
  if (!r.origin.empty()) cert["origin"] = r.origin;
  if (!r.witness.legs.empty()) cert["witness"] = {{"marginals", detail::marginals_json(r.witness)}};
  if (!r.support.points.empty()) {
    json pts = json::array();
    for (const MultiIndex& p : r.support.points) pts.push_back(detail::index_json(p));
    cert["support"] = pts;
  }
  if (r.distribution.weights.size()) cert["distribution"] = detail::vector_json(r.distribution.weights);
  if (r.cover) {
    json u = json::array();
    for (const RealVector& v : r.cover->cover) u.push_back(detail::vector_json(v));
    cert["fractional_cover"] = u;
    cert["fractional_matching"] = detail::vector_json(r.cover->matching);
  }
  if (r.bipartite) {
    json rows = json::array(), cols = json::array();
    for (int v : r.bipartite->left_cover) rows.push_back(v + 1);
    for (int v : r.bipartite->right_cover) cols.push_back(v + 1);
    cert["cover"] = {{"rows", rows}, {"cols", cols}};
  }
  j["certificate"] = cert;
  return j;
}

inline json minimax_to_json(const MinimaxReport& r, const std::string& function) {
  return {{"function", function},
          {"lhs", r.lhs},
          {"rhs", r.rhs},
          {"gap", r.gap},
          {"converged", r.converged},
          {"lhs_witness", {{"marginals", detail::marginals_json(r.lhs_witness)}}},
          {"rhs_distribution", detail::vector_json(r.rhs_distribution.weights)},
          {"rhs_basis", detail::group_json(r.rhs_basis)},
          {"rhs_origin", r.rhs_origin}};
}

inline json lp_to_json(const LinearProgram& lp, const LpSolution& sol) {
  json rows = json::array(), senses = json::array();
  for (Eigen::Index i = 0; i < lp.num_rows(); ++i) {
    rows.push_back(detail::vector_json(lp.constraints.row(i).transpose()));
    senses.push_back(lp.senses[static_cast<std::size_t>(i)] == RowSense::kLessEqual ? "<="
                     : lp.senses[static_cast<std::size_t>(i)] == RowSense::kEqual    ? "="
                                                                                     : ">=");
  }
  return {{"sense", lp.maximize ? "max" : "min"},
          {"objective", detail::vector_json(lp.objective)},
          {"constraints", rows},
          {"row_senses", senses},
          {"rhs", detail::vector_json(lp.rhs)},
          {"value", sol.value},
          {"dual_value", sol.dual_value},
          {"primal", detail::vector_json(sol.primal)},
          {"dual", detail::vector_json(sol.dual)}};
}

// --- files and flags -----------------------------------------------------

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": invalid JSON (" + std::string(e.what()) + ")");
  }
}

/// "1/3,1/3,1/3" or "0.5,0.25,0.25"; also accepts whitespace around items.
inline RealVector parse_weights(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw FormatError(flag + ": empty item");
    item = item.substr(b, e - b + 1);
    auto parse = [&](const std::string& s) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size() || !std::isfinite(v)) throw FormatError(flag + ": cannot parse '" + item + "'");
      return v;
    };
    const auto slash = item.find('/');
    if (slash == std::string::npos) {
      out.push_back(parse(item));
    } else {
      const double num = parse(item.substr(0, slash)), den = parse(item.substr(slash + 1));
      if (den == 0.0) throw FormatError(flag + ": zero denominator in '" + item + "'");
      out.push_back(num / den);
    }
  }
  if (out.empty()) throw FormatError(flag + ": no values");
  return Eigen::Map<RealVector>(out.data(), static_cast<Eigen::Index>(out.size()));
}

}  // namespace spectrumkit::io
