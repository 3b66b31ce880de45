// Command-line front end: functionals, ranks, minimax checks and hypergraph covers
// for tensors, matrix tuples and hypergraphs read from JSON files.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <spectrumkit/spectrumkit.hpp>

namespace sk = spectrumkit;
using sk::io::json;

namespace {

enum Exit { kOk = 0, kInputError = 1, kNotConverged = 2, kDisagree = 3 };

struct RunConfig {
  std::uint64_t seed = 0;
  int restarts = -1;  // -1: command default
  int jobs = 1;
  double eta = sk::kDefaultEta;
  double tol = 1e-10;
  std::optional<double> bound;
  std::string grid_step;
  std::string out;
  std::string format = "json";
  std::string dump_lp;
  bool verbose = false;

  sk::SearchConfig search(int default_restarts) const {
    sk::SearchConfig c;
    c.seed = seed;
    c.restarts = restarts >= 0 ? restarts : default_restarts;
    c.jobs = jobs;
    c.eta = eta;
    return c;
  }
};

std::uint64_t env_seed() {
  const char* s = std::getenv("SPECTRUMKIT_SEED");
  if (!s || !*s) return 0;
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw sk::io::FormatError("SPECTRUMKIT_SEED: not an unsigned integer");
  }
}

sk::ThetaWeights theta_flag(const std::string& text, int d) {
  if (text.empty()) return sk::ThetaWeights::uniform_theta(d);
  sk::RealVector v = sk::io::parse_weights(text, "--theta");
  if (v.size() != d) throw sk::io::FormatError("--theta: expected " + std::to_string(d) + " values");
  if (v.minCoeff() < 0.0) throw sk::io::FormatError("--theta: entries must be nonnegative");
  if (std::abs(v.sum() - 1.0) > 1e-12) throw sk::io::FormatError("--theta: entries must sum to 1");
  return sk::ThetaWeights::theta(v / v.sum());
}

sk::ThetaWeights xi_flag(const std::string& text, int d) {
  if (text.empty()) return sk::ThetaWeights::ones_xi(d);
  const sk::RealVector v = sk::io::parse_weights(text, "--xi");
  if (v.size() != d) throw sk::io::FormatError("--xi: expected " + std::to_string(d) + " values");
  if (v.minCoeff() < 0.0 || std::abs(v.maxCoeff() - 1.0) > 1e-12)
    throw sk::io::FormatError("--xi: entries must be nonnegative with maximum 1");
  return sk::ThetaWeights::xi(v);
}

sk::ThetaWeights alpha_flag(const std::string& text, int d) {
  if (text.empty()) return sk::ThetaWeights::ones_alpha(d);
  const sk::RealVector v = sk::io::parse_weights(text, "--alpha");
  if (v.size() != d) throw sk::io::FormatError("--alpha: expected " + std::to_string(d) + " values");
  if (v.minCoeff() <= 0.0) throw sk::io::FormatError("--alpha: entries must be positive");
  return sk::ThetaWeights::alpha(v);
}

/// "neg-entropy[:theta]", "linf[:alpha]", "l1-uniform".
std::unique_ptr<sk::SymmetricConvexFunction> function_spec(const std::string& spec, int d) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (name == "neg-entropy") return std::make_unique<sk::NegWeightedEntropy>(theta_flag(args, d));
  if (name == "linf") return std::make_unique<sk::MaxNormRatio>(alpha_flag(args, d));
  if (name == "l1-uniform") {
    if (!args.empty()) throw sk::io::FormatError("function: l1-uniform takes no arguments");
    return std::make_unique<sk::L1ToUniform>();
  }
  throw sk::io::FormatError("function: unknown '" + name + "' (expected neg-entropy, linf or l1-uniform)");
}

sk::Tensor load_tensor(const std::string& path) { return sk::io::tensor_from_json(sk::io::read_json_file(path)); }

sk::MatrixTuple load_tuple(const std::string& path) {
  const json j = sk::io::read_json_file(path);
  if (j.is_object() && j.contains("dims")) return sk::tensor_to_tuple(sk::io::tensor_from_json(j));
  return sk::io::tuple_from_json(j);
}

sk::Hypergraph load_hypergraph(const std::string& path, double eta) {
  const json j = sk::io::read_json_file(path);
  if (j.is_object() && j.contains("dims")) return sk::hypergraph_of(sk::io::tensor_from_json(j), eta);
  return sk::io::hypergraph_from_json(j);
}

std::string scalar_text(const json& v) {
  if (v.is_number_float()) {
    std::ostringstream ss;
    ss << std::setprecision(10) << v.get<double>();
    return ss.str();
  }
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

/// Two-column table of the scalar fields (and route values) of a result.
std::string table(const json& j) {
  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& [k, v] : j.items()) {
    if (v.is_primitive()) {
      rows.push_back({k, scalar_text(v)});
    } else if (k == "routes" || k == "witness") {
      for (const auto& [rk, rv] : v.items())
        rows.push_back({k + "." + rk, rv.is_object() ? scalar_text(rv["raw"]) + " -> " + scalar_text(rv["rounded"])
                                                     : rv.is_primitive() ? scalar_text(rv) : rv.dump()});
    } else if (k == "notes") {
      for (const auto& n : v) rows.push_back({"note", n.get<std::string>()});
    } else if (k == "theta") {
      rows.push_back({k, v.dump()});
    }
  }
  std::size_t w = 0;
  for (const auto& r : rows) w = std::max(w, r.first.size());
  std::ostringstream ss;
  for (const auto& [k, v] : rows) ss << std::left << std::setw(static_cast<int>(w) + 2) << k << v << "\n";
  return ss.str();
}

void emit(const json& j, const RunConfig& cfg) {
  const std::string text = cfg.format == "table" ? table(j) : j.dump(2) + "\n";
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(cfg.out);
  if (!f) throw sk::io::FormatError("--out: cannot write " + cfg.out);
  f << text;
}

int cmd_functional(const std::string& kind, const std::string& file, const std::string& theta_text, const RunConfig& cfg) {
  const sk::Tensor t = load_tensor(file);
  if (t.is_zero()) throw sk::io::FormatError(file + ": tensor.entries: tensor is zero");
  sk::FunctionalCertificate c;
  if (kind == "quantum") {
    c = sk::entropic_scaling(t, theta_flag(theta_text, t.order()), cfg.tol).first;
  } else if (kind == "support") {
    c = sk::support_functional(t, theta_flag(theta_text, t.order()), cfg.search(20));
  } else if (kind == "symmetric") {
    sk::ScalingOptions so;
    so.tol = cfg.tol;
    c = sk::symmetric_quantum_functional(t, so);
  } else {
    c = sk::symmetric_support_functional(t, cfg.search(20));
  }
  json j = sk::io::certificate_to_json(c);
  if (c.eta_sensitive) j["note"] = "support depends on --eta";
  emit(j, cfg);
  return c.converged ? kOk : kNotConverged;
}

int rank_exit(const sk::RankReport& r) {
  if (r.status == "disagree") return kDisagree;
  if (r.status == "warning" || !r.converged) return kNotConverged;
  return kOk;
}

int cmd_rank(const std::string& kind, const std::string& file, const std::string& xi_text, const std::string& alpha_text,
             const RunConfig& cfg) {
  sk::RankOptions opt;
  opt.search = cfg.search(20);
  if (cfg.restarts >= 0) opt.ncrank_restarts = cfg.restarts;
  if (cfg.bound) opt.agreement_tol = *cfg.bound;
  if (!cfg.grid_step.empty()) {
    const sk::RealVector g = sk::io::parse_weights(cfg.grid_step, "--grid-step");
    if (g.size() != 1 || !(g[0] > 0.0 && g[0] <= 1.0)) throw sk::io::FormatError("--grid-step: expected one value in (0, 1]");
    opt.grid_step = g[0];
  }
  sk::RankReport r;
  if (kind == "ncrank") {
    r = sk::ncrank(load_tuple(file), opt);
  } else {
    const sk::Tensor t = load_tensor(file);
    if (t.is_zero()) throw sk::io::FormatError(file + ": tensor.entries: tensor is zero");
    r = kind == "slice" ? sk::asymptotic_slice_rank(t, xi_flag(xi_text, t.order()), opt)
                        : sk::g_stable_rank(t, alpha_flag(alpha_text, t.order()), opt);
  }
  if (cfg.verbose)
    for (const std::string& n : r.notes) std::cerr << "note: " << n << "\n";
  emit(sk::io::rank_report_to_json(r), cfg);
  return rank_exit(r);
}

int cmd_check_minimax(const std::string& file, const std::string& spec, const RunConfig& cfg) {
  const sk::Tensor t = load_tensor(file);
  if (t.is_zero()) throw sk::io::FormatError(file + ": tensor.entries: tensor is zero");
  const auto f = function_spec(spec, t.order());
  const sk::MinimaxReport r = sk::minimax_gap(t, *f, cfg.search(20));
  const double bound = cfg.bound.value_or(1e-3);
  json j = sk::io::minimax_to_json(r, spec);
  j["bound"] = bound;
  j["within_bound"] = std::abs(r.gap) <= bound;
  emit(j, cfg);
  return std::abs(r.gap) <= bound ? kOk : kDisagree;
}

int cmd_cover(const std::string& file, const std::string& xi_text, const std::string& alpha_text, const RunConfig& cfg) {
  const sk::Hypergraph h = load_hypergraph(file, cfg.eta);
  const sk::ThetaWeights xi = xi_flag(xi_text, h.order());
  const sk::ThetaWeights alpha = alpha_flag(alpha_text, h.order());
  const sk::VertexCover exact = sk::vertex_cover(h, xi);
  const sk::FractionalCover frac = sk::fractional_vertex_cover(h, alpha);
  json cover = json::array();
  for (const auto& part : exact.cover) {
    json p = json::array();
    for (int v : part) p.push_back(v + 1);
    cover.push_back(p);
  }
  json j{{"parts", h.parts},
         {"edges", h.num_edges()},
         {"vertex_cover", exact.value},
         {"cover", cover},
         {"fractional_cover", frac.value},
         {"fractional_dual", frac.dual_value}};
  if (!h.edges.empty()) j["asymptotic_cover"] = sk::asymptotic_vertex_cover(h, xi);
  emit(j, cfg);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral functionals and ranks of tensors"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string seed_text;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed_text, "random seed (default: $SPECTRUMKIT_SEED or 0)");
    sub->add_option("--restarts", cfg.restarts, "basis-search restarts")->check(CLI::NonNegativeNumber);
    sub->add_option("--jobs", cfg.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--eta", cfg.eta, "support threshold relative to the largest entry")->check(CLI::PositiveNumber);
    sub->add_option("--tol", cfg.tol, "scaling tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--out", cfg.out, "write the result here instead of stdout");
    sub->add_option("--format", cfg.format, "output format")->check(CLI::IsMember({"json", "table"}));
    sub->add_option("--dump-lp", cfg.dump_lp, "write every LP solved to this JSON file");
    sub->add_flag("-v,--verbose", cfg.verbose, "print notes to stderr");
  };

  std::string kind, file, theta, xi, alpha, fspec;
  double bound = 0.0;

  auto* functional = app.add_subcommand("functional", "quantum, support or symmetric functional of a tensor");
  functional->add_option("kind", kind)->required()->check(CLI::IsMember({"quantum", "support", "symmetric", "symmetric-support"}));
  functional->add_option("file", file, "tensor JSON")->required();
  functional->add_option("--theta", theta, "weights, e.g. 1/3,1/3,1/3 (default uniform)");
  common(functional);

  auto* rank = app.add_subcommand("rank", "asymptotic slice rank, G-stable rank or noncommutative rank");
  rank->add_option("kind", kind)->required()->check(CLI::IsMember({"slice", "gstable", "ncrank"}));
  rank->add_option("file", file, "tensor JSON (matrix tuple JSON for ncrank)")->required();
  rank->add_option("--xi", xi, "slice-rank weights, max 1 (default all ones)");
  rank->add_option("--alpha", alpha, "G-stable rank weights, positive (default all ones)");
  rank->add_option("--bound", bound, "route agreement threshold (default 2e-3)");
  rank->add_option("--grid-step", cfg.grid_step, "theta grid step (default 1/64 for order 3, else 1/16)");
  common(rank);

  auto* minimax = app.add_subcommand("check-minimax", "both sides of the moment-polytope minimax formula");
  minimax->add_option("file", file, "tensor JSON")->required();
  minimax->add_option("function", fspec, "neg-entropy[:theta], linf[:alpha] or l1-uniform")->required();
  minimax->add_option("--bound", bound, "allowed |lhs - rhs| (default 1e-3)");
  common(minimax);

  auto* cover = app.add_subcommand("cover", "vertex covers of a hypergraph (or of a tensor's support)");
  cover->add_option("file", file, "hypergraph or tensor JSON")->required();
  cover->add_option("--xi", xi, "weights of the exact and asymptotic covers");
  cover->add_option("--alpha", alpha, "weights of the fractional cover");
  common(cover);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  std::mutex lp_mutex;
  json lps = json::array();
  try {
    cfg.seed = env_seed();
    if (!seed_text.empty()) {
      try {
        std::size_t used = 0;
        cfg.seed = std::stoull(seed_text, &used);
        if (used != seed_text.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw sk::io::FormatError("--seed: not an unsigned integer");
      }
    }
    for (CLI::App* sub : {rank, minimax})
      if (sub->parsed() && sub->count("--bound")) cfg.bound = bound;
    if (!cfg.dump_lp.empty())
      sk::lp_observer() = [&](const sk::LinearProgram& lp, const sk::LpSolution& sol) {
        std::lock_guard<std::mutex> lock(lp_mutex);
        lps.push_back(sk::io::lp_to_json(lp, sol));
      };

    int code = kOk;
    if (functional->parsed()) code = cmd_functional(kind, file, theta, cfg);
    if (rank->parsed()) code = cmd_rank(kind, file, xi, alpha, cfg);
    if (minimax->parsed()) code = cmd_check_minimax(file, fspec, cfg);
    if (cover->parsed()) code = cmd_cover(file, xi, alpha, cfg);

    if (!cfg.dump_lp.empty()) {
      sk::lp_observer() = nullptr;
      std::ofstream f(cfg.dump_lp);
      if (!f) throw sk::io::FormatError("--dump-lp: cannot write " + cfg.dump_lp);
      f << lps.dump(1) << "\n";
    }
    return code;
  } catch (const sk::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const sk::ResourceLimit& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
}
