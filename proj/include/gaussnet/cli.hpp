#pragma once

// Library side of the gaussnet command-line tool: run configuration, the
// scenario scans, certification of covariance files, the optimal
// displacement table and Monte-Carlo validation.  tools/gaussnet.cpp only
// maps flags onto these functions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gaussnet/core.hpp"
#include "gaussnet/criteria.hpp"
#include "gaussnet/error.hpp"
#include "gaussnet/io.hpp"
#include "gaussnet/optimize.hpp"
#include "gaussnet/protocol.hpp"
#include "gaussnet/sampler.hpp"

namespace gaussnet::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kUsageError = 2, kInputError = 3, kNumericalError = 4 };

enum class Scenario { two_user, three_user, qss, appendix_e };
enum class OutputFormat { csv, json, text };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::two_user: return "two_user";
    case Scenario::three_user: return "three_user";
    case Scenario::qss: return "qss";
    case Scenario::appendix_e: return "appendix_e";
  }
  return "?";
}

inline Scenario parse_scenario(const std::string& s) {
  if (s == "two_user") return Scenario::two_user;
  if (s == "three_user") return Scenario::three_user;
  if (s == "qss") return Scenario::qss;
  if (s == "appendix_e") return Scenario::appendix_e;
  throw InvalidArgument("unknown scenario '" + s + "' (expected two_user, three_user, qss or appendix_e)");
}

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  if (s == "text") return OutputFormat::text;
  throw InvalidArgument("unknown format '" + s + "' (expected csv or json)");
}

inline Stage parse_stage(const std::string& s) {
  for (Stage st : {Stage::pre_bob, Stage::final_two_user, Stage::pre_david, Stage::final_three_user}) {
    if (s == to_string(st)) return st;
  }
  throw InvalidArgument("unknown stage '" + s + "'");
}

inline double parse_number(const std::string& key, const std::string& value) {
  double v = 0.0;
  if (!io::parse_double(io::trim(value), v) || !std::isfinite(v)) {
    throw InvalidArgument("value of '" + key + "' is not a finite number: '" + value + "'");
  }
  return v;
}

inline std::uint64_t parse_count(const std::string& key, const std::string& value) {
  const auto t = io::trim(value);
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw InvalidArgument("value of '" + key + "' is not a nonnegative integer: '" + value + "'");
  }
  return v;
}

/// Evenly spaced efficiencies from start to stop inclusive.
struct EtaGrid {
  double start = 1.0;
  double stop = 0.1;
  std::size_t steps = 10;

  void validate() const {
    detail::require(start >= 0.0 && start <= 1.0 && stop >= 0.0 && stop <= 1.0, "eta grid bounds must lie in [0, 1]");
    detail::require(steps >= 1, "eta grid needs at least one step");
  }

  std::vector<double> values() const {
    validate();
    std::vector<double> out(steps);
    for (std::size_t k = 0; k < steps; ++k) {
      out[k] = steps == 1 ? start
                          : start + (stop - start) * static_cast<double>(k) / static_cast<double>(steps - 1);
    }
    out.back() = steps == 1 ? start : stop;
    return out;
  }

  /// "a:b:n"
  static EtaGrid parse(const std::string& text) {
    const auto c1 = text.find(':');
    const auto c2 = c1 == std::string::npos ? std::string::npos : text.find(':', c1 + 1);
    if (c2 == std::string::npos || text.find(':', c2 + 1) != std::string::npos) {
      throw InvalidArgument("eta grid must look like start:stop:steps, got '" + text + "'");
    }
    EtaGrid g;
    g.start = parse_number("eta-grid start", text.substr(0, c1));
    g.stop = parse_number("eta-grid stop", text.substr(c1 + 1, c2 - c1 - 1));
    g.steps = static_cast<std::size_t>(parse_count("eta-grid steps", text.substr(c2 + 1)));
    g.validate();
    return g;
  }
};

/// Assigns one ProtocolParams field by name.
inline void set_param(ProtocolParams& p, const std::string& key, double v) {
  if (key == "v_s") p.v_s = v;
  else if (key == "v_a") p.v_a = v;
  else if (key == "squeezing_db") p.v_s = db_to_variance(v, SqueezeSign::squeezed);
  else if (key == "antisqueezing_db") p.v_a = db_to_variance(v, SqueezeSign::antisqueezed);
  else if (key == "v_dis") p.v_dis = v;
  else if (key == "t1") p.t1 = v;
  else if (key == "t2") p.t2 = v;
  else if (key == "t3") p.t3 = v;
  else if (key == "eta_sa") p.eta_sa = v;
  else if (key == "eta_sb") p.eta_sb = v;
  else if (key == "eta_sd") p.eta_sd = v;
  else if (key == "eta_ab") p.eta_ab = v;
  else if (key == "eta_bd") p.eta_bd = v;
  else if (key == "f_a") p.f_a = v;
  else if (key == "f_b") p.f_b = v;
  else if (key == "f_c") p.f_c = v;
  else if (key == "f_d") p.f_d = v;
  else throw InvalidArgument("unknown parameter '" + key + "'");
}

inline bool is_param_key(const std::string& key) {
  ProtocolParams scratch;
  try {
    set_param(scratch, key, 0.5);
    return true;
  } catch (const InvalidArgument&) {
    return false;
  }
}

struct RunConfig {
  Scenario scenario = Scenario::two_user;
  EtaGrid grid;
  std::vector<std::pair<std::string, double>> overrides;  ///< applied in order, later wins
  bool alice_loss = false;                                ///< qss: server-to-Alice channel also lossy
  std::string out;
  OutputFormat format = OutputFormat::csv;
  std::uint64_t seed = 1;
  std::size_t shots = 1000000;
  unsigned threads = 1;
  bool has_stage = false;
  Stage stage = Stage::final_two_user;
  std::vector<std::string> splits;

  bool overridden(const std::string& key) const {
    return std::any_of(overrides.begin(), overrides.end(), [&](const auto& kv) { return kv.first == key; });
  }

  /// One "key=value" assignment from a config file or --set.
  void apply(const std::string& key, const std::string& value) {
    if (key == "scenario") scenario = parse_scenario(value);
    else if (key == "eta_grid" || key == "eta-grid") grid = EtaGrid::parse(value);
    else if (key == "format") format = parse_format(value);
    else if (key == "out") out = value;
    else if (key == "seed") seed = parse_count(key, value);
    else if (key == "shots") shots = static_cast<std::size_t>(parse_count(key, value));
    else if (key == "threads") threads = static_cast<unsigned>(std::max<std::uint64_t>(1, parse_count(key, value)));
    else if (key == "stage") {
      stage = parse_stage(value);
      has_stage = true;
    } else if (key == "split") splits.push_back(value);
    else if (key == "alice_loss") alice_loss = parse_number(key, value) != 0.0;
    else if (is_param_key(key)) overrides.emplace_back(key, parse_number(key, value));
    else throw InvalidArgument("unknown config key '" + key + "'");
  }

  void apply_assignment(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("expected key=value, got '" + kv + "'");
    apply(std::string(io::trim(std::string_view(kv).substr(0, eq))),
          std::string(io::trim(std::string_view(kv).substr(eq + 1))));
  }

  void validate() const {
    grid.validate();
    detail::require(shots >= 2, "need at least two shots");
  }
};

inline void load_config_file(const std::string& path, RunConfig& config) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
  for (const auto& [k, v] : io::parse_key_values(in)) config.apply(k, v);
}

// ---------------------------------------------------------------------------
// Scenario parameters

struct PointParams {
  ProtocolParams params;
  SearchMethod method = SearchMethod::analytic;
};

namespace detail {

using gaussnet::detail::close;
using gaussnet::detail::require;

inline bool closed_form_regime(const ProtocolParams& p) {
  return close(p.t1, 0.5) && close(p.eta_sa, 1.0) && close(p.f_a, 1.0) && close(p.f_c, 1.0) && p.t2 > 0.0;
}

inline bool symmetric_regime(const ProtocolParams& p) {
  return closed_form_regime(p) && close(p.t2, 0.5) && close(p.t3, 0.5) && close(p.eta_sb, p.eta_ab) &&
         close(p.eta_sb, p.eta_sd) && close(p.eta_sb, p.eta_bd);
}

inline bool balanced_general_loss(const ProtocolParams& p) {
  return close(p.t1, 0.5) && close(p.t2, 0.5) && close(p.t3, 0.5) && close(p.f_a, 1.0) && close(p.f_c, 1.0) &&
         close(p.eta_sa, p.eta_sb) && close(p.eta_sb, p.eta_ab) && close(p.eta_sb, p.eta_sd) &&
         close(p.eta_sb, p.eta_bd);
}

inline double numeric_coefficient(Objective objective, const ProtocolParams& p, Coefficient which) {
  SearchOptions opts;
  opts.enforce_separability = false;
  return numeric_optimize_coefficient(objective, p, which, opts).f_star;
}

}  // namespace detail

/// Protocol parameters of one scan point: scenario defaults, the grid
/// efficiency, user overrides, then optimal coefficients unless overridden.
inline PointParams scenario_params(const RunConfig& config, double eta) {
  PointParams out;
  ProtocolParams& p = out.params;
  const bool qss = config.scenario == Scenario::qss;
  if (qss) {
    p = qss_params(eta, config.alice_loss);
  } else {
    p.users = config.scenario == Scenario::two_user ? Users::two : Users::three;
    p.with_uniform_loss(eta);
    if (config.scenario == Scenario::appendix_e) p.eta_sa = eta;
  }
  for (const auto& [k, v] : config.overrides) set_param(p, k, v);
  p.validate();
  if (qss) return out;

  const bool fix_b = config.overridden("f_b");
  const bool fix_d = config.overridden("f_d") || p.users == Users::two;
  switch (config.scenario) {
    case Scenario::two_user:
      if (!fix_b) {
        if (p.eta_sb == 0.0) {
          p.f_b = 0.0;
        } else if (detail::closed_form_regime(p)) {
          p.f_b = optimal_fb(p.t2, p.eta_sb, p.eta_ab, p.v_a, p.v_s);
        } else {
          p.f_b = detail::numeric_coefficient(Objective::steer_a_to_b, p, Coefficient::f_b);
          out.method = SearchMethod::golden_section;
        }
      }
      break;
    case Scenario::three_user:
    case Scenario::appendix_e: {
      const bool analytic = config.scenario == Scenario::three_user ? detail::symmetric_regime(p)
                                                                    : detail::balanced_general_loss(p);
      if (p.eta_sb == 0.0) {
        if (!fix_b) p.f_b = 0.0;
        if (!fix_d) p.f_d = 0.0;
      } else if (analytic) {
        if (config.scenario == Scenario::three_user) {
          if (!fix_b) p.f_b = optimal_fb(0.5, p.eta_sb, p.eta_ab, p.v_a, p.v_s);
          if (!fix_d) p.f_d = optimal_fd(p.eta_sb, p.v_a, p.v_s);
        } else {
          if (!fix_b) p.f_b = optimal_fb_general_loss(p.eta_sa, p.eta_sb, p.eta_ab, p.v_a, p.v_s);
          if (!fix_d) p.f_d = optimal_fd_general_loss(p.eta_sb, p.v_a, p.v_s);
        }
      } else {
        if (!fix_b) p.f_b = detail::numeric_coefficient(Objective::steer_a_to_b, p, Coefficient::f_b);
        if (!fix_d) p.f_d = detail::numeric_coefficient(Objective::steer_a_to_bd, p, Coefficient::f_d);
        out.method = SearchMethod::golden_section;
      }
      break;
    }
    case Scenario::qss: break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scans

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  double at(std::size_t row, const std::string& column) const {
    const auto it = std::find(columns.begin(), columns.end(), column);
    detail::require(it != columns.end(), "no column '" + column + "'");
    return rows.at(row).at(static_cast<std::size_t>(it - columns.begin()));
  }
};

inline std::vector<std::string> scan_columns(Scenario s) {
  switch (s) {
    case Scenario::two_user: return {"eta", "f_b", "ppt_A|B", "g_A->B", "g_B->A", "ppt_C1|AB0"};
    case Scenario::three_user:
    case Scenario::appendix_e:
      return {"eta",    "f_b",    "f_d",    "ppt_A|BD", "ppt_B|AD", "ppt_D|AB",   "g_A->BD",    "g_BD->A",
              "g_A->B", "g_B->A", "g_A->D", "g_D->A",   "g_B->D",   "g_D->B",     "ppt_C1|AB0", "ppt_C2|ABD0"};
    case Scenario::qss:
      return {"eta", "f_b", "f_d", "g_BD->A", "g_B->A", "g_D->A", "key_rate", "fiber_km", "ppt_C1|AB0", "ppt_C2|ABD0"};
  }
  return {};
}

namespace detail {

inline double ancilla_ppt(const ProtocolParams& p, Stage stage) {
  return ppt_min(build_network_state(p, stage), std::vector<std::size_t>{2});
}

inline std::vector<double> scan_row(Scenario scenario, double eta, const ProtocolParams& p) {
  switch (scenario) {
    case Scenario::two_user: {
      const auto rep = full_report(build_network_state(p, Stage::final_two_user), {Partition{{0}, {1}}});
      const auto& e = rep.entries[0];
      return {eta, p.f_b, e.ppt, e.g_forward, e.g_backward, ancilla_ppt(p, Stage::pre_bob)};
    }
    case Scenario::three_user:
    case Scenario::appendix_e: {
      const auto rep = full_report(build_network_state(p, Stage::final_three_user),
                                   {Partition{{0}, {1, 2}}, Partition{{1}, {0, 2}}, Partition{{2}, {0, 1}},
                                    Partition{{0}, {1}}, Partition{{0}, {2}}, Partition{{1}, {2}}});
      const auto& e = rep.entries;
      return {eta,
              p.f_b,
              p.f_d,
              e[0].ppt,
              e[1].ppt,
              e[2].ppt,
              e[0].g_forward,
              e[0].g_backward,
              e[3].g_forward,
              e[3].g_backward,
              e[4].g_forward,
              e[4].g_backward,
              e[5].g_forward,
              e[5].g_backward,
              ancilla_ppt(p, Stage::pre_bob),
              ancilla_ppt(p, Stage::pre_david)};
    }
    case Scenario::qss: {
      const QssPoint q = qss_point(p, eta);
      const double g = q.g_bd_to_a();
      const double km = eta > 0.0 ? fiber_distance(eta) : std::numeric_limits<double>::infinity();
      return {eta, p.f_b, p.f_d, g, q.g_b_to_a(), q.g_d_to_a(), key_rate(g), km, q.ppt_c1, q.ppt_c2};
    }
  }
  return {};
}

}  // namespace detail

inline Table run_scan(const RunConfig& config) {
  config.validate();
  Table t;
  t.name = to_string(config.scenario);
  t.columns = scan_columns(config.scenario);
  for (double eta : config.grid.values()) {
    const PointParams pp = scenario_params(config, eta);
    t.rows.push_back(detail::scan_row(config.scenario, eta, pp.params));
  }
  return t;
}

/// JSON number rounded to the print precision; non-finite values become null.
inline Json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return io::round_significant(v);
}

inline void write_table(std::ostream& os, const Table& t, OutputFormat format) {
  if (format == OutputFormat::json) {
    Json rows = Json::array();
    for (const auto& r : t.rows) {
      Json row = Json::object();
      for (std::size_t c = 0; c < t.columns.size(); ++c) row[t.columns[c]] = json_number(r[c]);
      rows.push_back(std::move(row));
    }
    Json doc = {{"scenario", t.name}, {"columns", t.columns}, {"rows", std::move(rows)}};
    os << doc.dump(2) << '\n';
    return;
  }
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << io::format_number(r[c]);
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Certification

inline std::vector<Partition> resolve_splits(const GaussianState& state, const std::vector<std::string>& specs) {
  if (specs.empty()) return one_vs_rest_splits(state.n_modes());
  std::vector<Partition> out;
  for (const auto& s : specs) out.push_back(io::resolve_split(state, io::parse_split_spec(s)));
  return out;
}

inline Json report_json(const GaussianState& state, const SteeringReport& report) {
  Json splits = Json::array();
  for (const auto& e : report.entries) {
    splits.push_back({{"split", e.split},
                      {"ppt", json_number(e.ppt)},
                      {"verdict", to_string(e.verdict)},
                      {"steering", {{e.forward, json_number(e.g_forward)}, {e.backward, json_number(e.g_backward)}}}});
  }
  const double nu = min_symplectic_eigenvalue(state.cov());
  return {{"labels", state.labels()},
          {"physical", nu >= 1.0 - report.tolerance},
          {"min_symplectic_eigenvalue", json_number(nu)},
          {"tolerance", report.tolerance},
          {"splits", std::move(splits)}};
}

/// Certifies a state against split specs (all one-vs-rest splits when empty).
/// Unphysical but positive-definite input is evaluated and marked
/// "physical": false; a matrix that is not positive definite is a
/// NumericalError.
inline Json certify(const GaussianState& state, const std::vector<std::string>& specs) {
  const auto splits = resolve_splits(state, specs);
  return report_json(state, full_report(state, splits, kSeparabilityTolerance, false));
}

inline Json certify_file(const std::string& path, const std::vector<std::string>& specs) {
  return certify(io::read_cov_matrix_file(path), specs);
}

// ---------------------------------------------------------------------------
// Optimal displacement table

struct TableA1Row {
  double eta = 0.0;
  double f_b = 0.0;
  double f_d = 0.0;
};

inline const std::vector<double>& table_a1_etas() {
  static const std::vector<double> etas{1.0, 0.8, 0.6, 0.4, 0.2};
  return etas;
}

inline std::vector<TableA1Row> table_a1(const ProtocolParams& base = {}) {
  std::vector<TableA1Row> out;
  for (double eta : table_a1_etas()) {
    out.push_back({eta, optimal_fb(0.5, eta, eta, base.v_a, base.v_s), optimal_fd(eta, base.v_a, base.v_s)});
  }
  return out;
}

inline std::string fixed3(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 3);
  return std::string(buf, res.ptr);
}

inline void write_table_a1(std::ostream& os, const std::vector<TableA1Row>& rows, OutputFormat format) {
  if (format == OutputFormat::json) {
    Json arr = Json::array();
    for (const auto& r : rows) {
      arr.push_back({{"eta", r.eta}, {"f_b", std::stod(fixed3(r.f_b))}, {"f_d", std::stod(fixed3(r.f_d))}});
    }
    os << Json{{"rows", std::move(arr)}}.dump(2) << '\n';
  } else if (format == OutputFormat::csv) {
    os << "eta,f_b,f_d\n";
    for (const auto& r : rows) os << fixed3(r.eta) << ',' << fixed3(r.f_b) << ',' << fixed3(r.f_d) << '\n';
  } else {
    os << "eta     F_B     F_D\n";
    for (const auto& r : rows) os << fixed3(r.eta) << "   " << fixed3(r.f_b) << "   " << fixed3(r.f_d) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Monte-Carlo validation

inline Stage default_stage(Scenario s) { return s == Scenario::two_user ? Stage::final_two_user : Stage::final_three_user; }

namespace detail {

inline std::string quadrature_name(const std::vector<std::string>& labels, Eigen::Index k) {
  return std::string(k % 2 == 0 ? "x_" : "p_") + labels[static_cast<std::size_t>(k / 2)];
}

/// Criteria on a sample covariance may fail (too few shots); those come back null.
template <class F>
Json try_number(F&& f) {
  try {
    return json_number(f());
  } catch (const std::exception&) {
    return nullptr;
  }
}

inline double json_abs_diff(const Json& a, const Json& b) {
  if (a.is_null() || b.is_null()) return std::numeric_limits<double>::infinity();
  return std::abs(a.get<double>() - b.get<double>());
}

}  // namespace detail

inline Json montecarlo(const RunConfig& config) {
  config.validate();
  const double eta = config.grid.start;
  const ProtocolParams p = scenario_params(config, eta).params;
  const Stage stage = config.has_stage ? config.stage : default_stage(config.scenario);

  const GaussianState analytic = build_network_state(p, stage);
  const ShotBatch batch = simulate_shots(p, stage, config.shots, config.seed, config.threads);
  const Matrix estimated = estimate_covariance(batch);
  const CovarianceComparison cmp = compare_covariance(estimated, analytic.cov(), config.shots);

  Json flagged = Json::array();
  for (const auto& f : cmp.flagged) {
    flagged.push_back({{"row", detail::quadrature_name(batch.labels, f.row)},
                       {"col", detail::quadrature_name(batch.labels, f.col)},
                       {"z", json_number(f.z)}});
  }
  double max_z = 0.0;
  for (Eigen::Index i = 0; i < cmp.z_scores.rows(); ++i) {
    for (Eigen::Index j = i; j < cmp.z_scores.cols(); ++j) max_z = std::max(max_z, std::abs(cmp.z_scores(i, j)));
  }

  // The estimate is labelled like the analytic state but is not validated as physical.
  auto est_state = [&]() { return GaussianState(estimated, analytic.labels()); };
  Json splits = Json::array();
  double worst = 0.0;
  for (const auto& split : one_vs_rest_splits(analytic.n_modes())) {
    const auto n = join_labels(analytic, split.steering);
    const auto m = join_labels(analytic, split.steered);
    const Json ppt_a = json_number(ppt_min(analytic, split));
    const Json ppt_e = detail::try_number([&] { return ppt_min(est_state(), split); });
    const Json gf_a = json_number(steerability(analytic, split));
    const Json gf_e = detail::try_number([&] { return steerability(est_state(), split); });
    const Json gb_a = json_number(steerability(analytic, split.swapped()));
    const Json gb_e = detail::try_number([&] { return steerability(est_state(), split.swapped()); });
    worst = std::max({worst, detail::json_abs_diff(ppt_a, ppt_e), detail::json_abs_diff(gf_a, gf_e),
                      detail::json_abs_diff(gb_a, gb_e)});
    splits.push_back({{"split", n + "|" + m},
                      {"ppt", {{"analytic", ppt_a}, {"estimated", ppt_e}}},
                      {"steering",
                       {{n + "->" + m, {{"analytic", gf_a}, {"estimated", gf_e}}},
                        {m + "->" + n, {{"analytic", gb_a}, {"estimated", gb_e}}}}}});
  }

  return {{"scenario", to_string(config.scenario)},
          {"stage", to_string(stage)},
          {"eta", json_number(eta)},
          {"seed", config.seed},
          {"shots", config.shots},
          {"labels", batch.labels},
          {"max_abs_deviation", json_number(cmp.max_abs_deviation)},
          {"max_abs_z", json_number(max_z)},
          {"flag_sigma", kFlagSigma},
          {"flagged", std::move(flagged)},
          {"max_criteria_deviation", json_number(worst)},
          {"splits", std::move(splits)}};
}

}  // namespace gaussnet::cli
