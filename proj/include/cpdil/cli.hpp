// Copyright 2026 The cpdil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CPDIL_CLI_HPP
#define CPDIL_CLI_HPP

#include <cstdlib>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cpdil/dilation.hpp"
#include "cpdil/json_io.hpp"
#include "cpdil/stochastic.hpp"

namespace cpdil::cli {

using io::OrderedJson;

// Exit codes.
inline constexpr int kHolds = 0;
inline constexpr int kFails = 1;  // the property is false; the report has a witness
inline constexpr int kError = 2;  // bad input or an internal verification failure

inline constexpr const char* kTolEnv = "CPDIL_TOL";

struct RunConfig {
  std::string subcommand;  // classify, commute, strong-commute, stochastic, prodsys, dilate
  std::vector<std::string> inputs;
  double tol = kDefaultTol;
  double zero_tol = kDefaultZeroTol;
  GridPoint horizon{2, 2};
  GridPoint margin{1, 1};
  std::string format = "json";
  std::size_t cap = kDefaultDimCap;
  // stochastic
  bool check_card = false;
  bool irreducible = false;
  std::optional<double> semigroup_t;
};

struct RunResult {
  int exit_code = kHolds;
  OrderedJson report;
  std::string error;  // diagnostic for kError
};

namespace detail {

inline OrderedJson grid_json(GridPoint g) { return OrderedJson::array({g.a, g.b}); }

inline OrderedJson optional_json(const std::optional<double>& v) {
  return v ? OrderedJson(*v) : OrderedJson(nullptr);
}

struct PairInput {
  std::optional<io::ChannelInput> theta;
  std::optional<io::ChannelInput> phi;
  std::optional<Matrix> certificate;
  std::optional<RealMatrix> p;
  std::optional<RealMatrix> q;
  bool diagonal() const { return p.has_value(); }
};

inline PairInput load_pair(const std::vector<std::string>& inputs) {
  PairInput in;
  if (inputs.size() == 2) {
    in.theta = io::parse_channel(io::load_json(inputs[0]), "theta");
    in.phi = io::parse_channel(io::load_json(inputs[1]), "phi");
    return in;
  }
  if (inputs.size() != 1) throw InvalidInput("expected one pair file or two channel files");
  const io::Json doc = io::load_json(inputs[0]);
  if (doc.is_object() && doc.contains("P")) {
    in.p = io::parse_real_matrix(doc.at("P"), "P");
    in.q = io::parse_real_matrix(io::require_field(doc, "Q", "$"), "Q");
    return in;
  }
  in.theta = io::parse_channel(io::require_field(doc, "theta", "$"), "theta");
  in.phi = io::parse_channel(io::require_field(doc, "phi", "$"), "phi");
  if (doc.contains("certificate"))
    in.certificate = io::parse_matrix(doc.at("certificate"), "certificate");
  return in;
}

inline OrderedJson warnings_json(const std::vector<stochastic::BorderlineEntry>& entries,
                                 double zero_tol) {
  OrderedJson out = OrderedJson::array();
  for (const auto& e : entries) {
    std::ostringstream s;
    s << e.matrix << "[" << e.i << "][" << e.j << "] = " << e.value
      << " is within 10x of zero_tol " << zero_tol;
    out.push_back(s.str());
  }
  return out;
}

inline std::vector<stochastic::BorderlineEntry> borderline(const stochastic::StochasticMatrix& p,
                                                           const stochastic::StochasticMatrix* q,
                                                           double zero_tol) {
  auto out = stochastic::borderline_entries(p, 'P', zero_tol);
  if (q) {
    auto more = stochastic::borderline_entries(*q, 'Q', zero_tol);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

inline OrderedJson card_json(const stochastic::CardReport& card) {
  OrderedJson w = OrderedJson::array();
  for (const auto& x : card.witnesses)
    w.push_back({{"i", x.i}, {"k", x.k}, {"count_qp", x.count_qp}, {"count_pq", x.count_pq}});
  return {{"holds", card.holds}, {"zero_tol", card.zero_tol}, {"witnesses", std::move(w)}};
}

inline RunResult run_classify(const RunConfig& cfg, OrderedJson report) {
  if (cfg.inputs.size() != 1) throw InvalidInput("classify expects one channel file");
  const io::ChannelInput ch = io::parse_channel(io::load_json(cfg.inputs[0]), "$");
  report["dim"] = ch.dim;
  if (ch.choi) {
    const double min_eig = linalg::min_hermitian_eigenvalue(ch.choi->matrix);
    if (min_eig < -cfg.tol) {
      report["is_cp"] = false;
      report["min_choi_eigenvalue"] = min_eig;
      return {kFails, report, {}};
    }
  }
  const CPMap map = ch.map(cfg.tol);
  const ChannelReport r = classify(map, cfg.tol);
  report["kraus_count"] = map.kraus().size();
  report["is_cp"] = r.is_cp;
  report["is_unital"] = r.is_unital;
  report["is_contractive"] = r.is_contractive;
  report["min_choi_eigenvalue"] =
      ch.choi ? linalg::min_hermitian_eigenvalue(ch.choi->matrix) : r.min_choi_eigenvalue;
  report["unitality_residual"] = r.unitality_residual;
  report["max_row_gram_eigenvalue"] = r.max_row_gram_eigenvalue;
  return {r.is_cp && r.is_contractive ? kHolds : kFails, report, {}};
}

inline RunResult run_commute(const RunConfig& cfg, OrderedJson report) {
  const PairInput in = load_pair(cfg.inputs);
  if (in.diagonal()) {
    const stochastic::StochasticMatrix p(*in.p, cfg.tol), q(*in.q, cfg.tol);
    const double res = stochastic::commutation_residual(p, q);
    report["domain"] = "diagonal";
    report["commute"] = res <= cfg.tol;
    report["residual"] = res;
    return {res <= cfg.tol ? kHolds : kFails, report, {}};
  }
  const CommuteResult c = check_commute(in.theta->map(cfg.tol), in.phi->map(cfg.tol), cfg.tol);
  report["domain"] = "full";
  report["commute"] = c.commute;
  report["residual"] = c.residual;
  return {c.commute ? kHolds : kFails, report, {}};
}

inline RunResult run_strong_commute(const RunConfig& cfg, OrderedJson report) {
  const PairInput in = load_pair(cfg.inputs);
  if (in.diagonal()) {
    const stochastic::StochasticMatrix p(*in.p, cfg.tol), q(*in.q, cfg.tol);
    const auto d = stochastic::strongly_commute_diagonal(p, q, cfg.tol, cfg.zero_tol);
    report["domain"] = "diagonal";
    report["zero_tol"] = cfg.zero_tol;
    report["strongly_commute"] = d.strongly_commute;
    report["commute"] = d.commute;
    report["commutation_residual"] = d.commutation_residual;
    report["card"] = card_json(d.card);
    if (d.strongly_commute) {
      const auto tw = stochastic::build_diagonal_intertwiner(p, q, cfg.tol, cfg.zero_tol);
      report["intertwiner_blocks"] = tw.blocks.size();
      report["intertwiner_residual"] = tw.residual;
    }
    report["warnings"] = warnings_json(borderline(p, &q, cfg.zero_tol), cfg.zero_tol);
    return {d.strongly_commute ? kHolds : kFails, report, {}};
  }
  const CPMap theta = in.theta->map(cfg.tol), phi = in.phi->map(cfg.tol);
  report["domain"] = "full";
  const CommuteResult c = check_commute(theta, phi, cfg.tol);
  if (!c.commute) {
    report["strongly_commute"] = false;
    report["reason"] = "maps do not commute";
    report["commutation_residual"] = c.residual;
    return {kFails, report, {}};
  }
  const StrongCommutationCertificate cert = strong_commutation_certificate(theta, phi, cfg.tol);
  report["strongly_commute"] = true;
  report["m"] = cert.m;
  report["n"] = cert.n;
  report["u"] = io::matrix_to_json(cert.u);
  report["unitarity_residual"] = cert.unitarity_residual;
  report["intertwining_residual"] = cert.intertwining_residual;
  return {kHolds, report, {}};
}

inline RunResult run_stochastic(const RunConfig& cfg, OrderedJson report) {
  if (cfg.inputs.size() != 1)
    throw InvalidInput("stochastic expects one file with \"P\" (and \"Q\")");
  const io::Json doc = io::load_json(cfg.inputs[0]);
  const RealMatrix praw = io::parse_real_matrix(io::require_field(doc, "P", "$"), "P");
  std::optional<RealMatrix> qraw;
  if (doc.contains("Q")) qraw = io::parse_real_matrix(doc.at("Q"), "Q");
  report["zero_tol"] = cfg.zero_tol;

  bool ok = true;
  for (auto [name, m] : {std::pair<const char*, const RealMatrix*>{"P", &praw},
                         {"Q", qraw ? &*qraw : nullptr}}) {
    if (!m) continue;
    const bool valid = stochastic::validate(*m, cfg.tol);
    report["stochastic"][name] = valid;
    if (!valid) {
      report["row_sum_deviation"][name] = (m->rowwise().sum().array() - 1.0).abs().maxCoeff();
      ok = false;
    }
  }
  if (!ok) return {kFails, report, {}};

  const stochastic::StochasticMatrix p(praw, cfg.tol);
  std::optional<stochastic::StochasticMatrix> q;
  if (qraw) q.emplace(*qraw, cfg.tol);

  if (cfg.check_card) {
    if (!q) throw InvalidInput("--check-card needs both \"P\" and \"Q\"");
    const auto card = stochastic::card_criterion(p, *q, cfg.zero_tol);
    report["card"] = card_json(card);
    ok = ok && card.holds;
  }
  if (cfg.irreducible) {
    report["irreducible"]["P"] = stochastic::is_irreducible(p, cfg.zero_tol);
    ok = ok && report["irreducible"]["P"].get<bool>();
    if (q) {
      report["irreducible"]["Q"] = stochastic::is_irreducible(*q, cfg.zero_tol);
      ok = ok && report["irreducible"]["Q"].get<bool>();
    }
  }
  if (cfg.semigroup_t) {
    report["t"] = *cfg.semigroup_t;
    report["semigroup"]["P"] =
        io::real_matrix_to_json(stochastic::semigroup_at(p, *cfg.semigroup_t).matrix());
    if (q)
      report["semigroup"]["Q"] =
          io::real_matrix_to_json(stochastic::semigroup_at(*q, *cfg.semigroup_t).matrix());
  }
  report["warnings"] = warnings_json(borderline(p, q ? &*q : nullptr, cfg.zero_tol), cfg.zero_tol);
  return {ok ? kHolds : kFails, report, {}};
}

inline StrongCommutationCertificate resolve_certificate(const PairInput& in, const CPMap& theta,
                                                        const CPMap& phi, double tol) {
  if (!in.certificate) return strong_commutation_certificate(theta, phi, tol);
  const CertificateReport chk = verify_certificate(theta, phi, *in.certificate, tol);
  if (!chk.pass)
    throw CertificateFailure("supplied certificate does not verify", chk.unitarity_residual,
                             chk.intertwining_residual);
  return {theta.kraus().size(), phi.kraus().size(), *in.certificate, chk.unitarity_residual,
          chk.intertwining_residual};
}

inline RunResult run_prodsys(const RunConfig& cfg, OrderedJson report) {
  const PairInput in = load_pair(cfg.inputs);
  if (in.diagonal()) throw InvalidInput("prodsys needs channels on B(H), not stochastic matrices");
  const CPMap theta = in.theta->map(cfg.tol), phi = in.phi->map(cfg.tol);
  const CommuteResult c = check_commute(theta, phi, cfg.tol);
  report["horizon"] = grid_json(cfg.horizon);
  report["cap"] = cfg.cap;
  if (!c.commute) {
    report["pass"] = false;
    report["reason"] = "maps do not commute";
    report["commutation_residual"] = c.residual;
    return {kFails, report, {}};
  }
  const auto cert = resolve_certificate(in, theta, phi, cfg.tol);
  const TwistedProductSystem sys = build_product_system(theta, phi, cert, cfg.tol);
  const RepresentationReport r = verify_representation(sys, cfg.horizon, cfg.tol, cfg.cap);
  report["dim_h"] = sys.dim_h();
  report["m"] = sys.m();
  report["k"] = sys.k();
  report["certificate"] = in.certificate ? "supplied" : "computed";
  report["pass"] = r.pass;
  report["residuals"] = {{"rep", r.rep_residual},
                         {"homomorphism", r.homomorphism_residual},
                         {"coisometry", optional_json(r.coisometry_residual)}};
  if (!r.pass)
    return {kError, report, "representation identities fail for a verified certificate"};
  return {kHolds, report, {}};
}

inline RunResult run_dilate(const RunConfig& cfg, OrderedJson report) {
  const PairInput in = load_pair(cfg.inputs);
  if (in.diagonal()) throw InvalidInput("dilate needs channels on B(H), not stochastic matrices");
  const CPMap theta = in.theta->map(cfg.tol), phi = in.phi->map(cfg.tol);
  report["horizon"] = grid_json(cfg.horizon);
  report["margin"] = grid_json(cfg.margin);
  const CommuteResult c = check_commute(theta, phi, cfg.tol);
  if (!c.commute) {
    report["pass"] = false;
    report["reason"] = "maps do not commute";
    report["commutation_residual"] = c.residual;
    return {kFails, report, {}};
  }
  const auto cert = resolve_certificate(in, theta, phi, cfg.tol);
  const DilationPipeline p = build_dilation(theta, phi, cfg.horizon, cfg.margin, cfg.tol,
                                            cfg.cap, cert.u);
  const EDilationReport v = verify_e_dilation(p.result, theta, phi, cfg.margin, cfg.tol);
  const MinimalityReport m = minimality_check(p.result, cfg.horizon, cfg.tol);

  report["dimK"] = p.space.dim_k;
  report["generators"] = p.space.generators.size();
  report["gram_min_eig"] = p.space.gram_min_eig;
  report["spectral_gap"] = {{"kept_min", p.space.kept_min_eig},
                            {"dropped_max", p.space.dropped_max_eig}};
  report["residuals"] = {{"isometry", v.isometry},
                         {"coisometry", optional_json(v.coisometry)},
                         {"dilation", v.dilation},
                         {"semigroup", v.semigroup},
                         {"multiplicativity", v.multiplicativity},
                         {"telescoping", v.telescoping},
                         {"rho", v.rho}};
  report["increasing_min_eig"] = optional_json(v.increasing_min_eig);
  report["minimality"] = {{"span_dim", m.span_dim},       {"target_dim", m.target_dim},
                          {"depth", m.depth},             {"conclusive", m.conclusive},
                          {"commutant_dim", m.commutant_dim}, {"minimal", m.minimal}};
  const bool minimal_ok = m.minimal || !m.conclusive;
  report["pass"] = v.pass && minimal_ok;
  if (!v.pass || !minimal_ok) {
    std::string why = "dilation verification failed";
    for (const auto& s : v.violations) why += "; " + s;
    if (!minimal_ok) why += "; minimality check failed";
    return {kError, report, why};
  }
  return {kHolds, report, {}};
}

}  // namespace detail

// Validates the config, runs one subcommand and returns the report. Never
// throws: errors become exit code 2 with a diagnostic.
inline RunResult run(const RunConfig& cfg) {
  OrderedJson report;
  report["command"] = cfg.subcommand == "prodsys" ? "prodsys verify" : cfg.subcommand;
  report["tol"] = cfg.tol;
  try {
    if (!(cfg.tol > 0.0)) throw InvalidInput("tol must be > 0");
    if (!(cfg.zero_tol >= 0.0)) throw InvalidInput("zero_tol must be >= 0");
    if (!cfg.horizon.nonnegative() || !cfg.margin.nonnegative())
      throw InvalidInput("horizon and margin must be nonnegative");
    if (cfg.subcommand == "dilate" && !leq(cfg.margin, cfg.horizon))
      throw InvalidInput("margin " + to_string(cfg.margin) + " exceeds horizon " +
                         to_string(cfg.horizon));
    if (cfg.subcommand == "classify") return detail::run_classify(cfg, report);
    if (cfg.subcommand == "commute") return detail::run_commute(cfg, report);
    if (cfg.subcommand == "strong-commute") return detail::run_strong_commute(cfg, report);
    if (cfg.subcommand == "stochastic") return detail::run_stochastic(cfg, report);
    if (cfg.subcommand == "prodsys") return detail::run_prodsys(cfg, report);
    if (cfg.subcommand == "dilate") return detail::run_dilate(cfg, report);
    throw InvalidInput("unknown subcommand '" + cfg.subcommand + "'");
  } catch (const std::exception& e) {
    return {kError, report, e.what()};
  }
}

namespace detail {

inline void flatten(const OrderedJson& j, const std::string& prefix, std::ostream& out) {
  if (j.is_object() && !j.empty()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    return;
  }
  out << prefix << " = " << j.dump() << "\n";
}

}  // namespace detail

inline std::string render(const OrderedJson& report, const std::string& format) {
  if (format == "text") {
    std::ostringstream s;
    detail::flatten(report, "", s);
    return s.str();
  }
  return report.dump(2) + "\n";
}

// Default tolerance: CPDIL_TOL if set, else 1e-9.
inline double default_tol() {
  const char* env = std::getenv(kTolEnv);
  if (!env || !*env) return kDefaultTol;
  char* end = nullptr;
  const double v = std::strtod(env, &end);
  if (end == env || *end != '\0' || !(v > 0.0))
    throw InvalidInput(std::string(kTolEnv) + " is not a positive number: '" + env + "'");
  return v;
}

// Parses argv, runs, writes the report to `out` and diagnostics to `err`.
inline int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg.tol = default_tol();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }

  CLI::App app{"Completely positive maps, strong commutation and dilations"};
  app.require_subcommand(1);
  std::vector<int> horizon, margin;
  double t = 0.0;

  auto common = [&](CLI::App* sub, bool pair) {
    sub->add_option("inputs", cfg.inputs, pair ? "pair file, or two channel files" : "input file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--tol", cfg.tol, "tolerance for every predicate (env CPDIL_TOL)");
    sub->add_option("--format", cfg.format, "report format")
        ->check(CLI::IsMember({"json", "text"}));
  };
  auto* classify_cmd = app.add_subcommand("classify", "CP, unital and contractive checks");
  common(classify_cmd, false);
  auto* commute_cmd = app.add_subcommand("commute", "decide whether two maps commute");
  common(commute_cmd, true);
  auto* strong_cmd = app.add_subcommand("strong-commute", "certify strong commutation");
  common(strong_cmd, true);
  strong_cmd->add_option("--zero-tol", cfg.zero_tol, "entries <= zero_tol count as zero");
  auto* stoch_cmd = app.add_subcommand("stochastic", "stochastic matrices on the diagonal algebra");
  common(stoch_cmd, false);
  stoch_cmd->add_option("--zero-tol", cfg.zero_tol, "entries <= zero_tol count as zero");
  stoch_cmd->add_flag("--check-card", cfg.check_card, "cardinality criterion for P and Q");
  auto* t_opt = stoch_cmd->add_option("--semigroup", t, "evaluate e^{-t} e^{tP}");
  stoch_cmd->add_flag("--irreducible", cfg.irreducible, "strong connectivity");
  auto* prodsys_cmd = app.add_subcommand("prodsys", "twisted product system");
  prodsys_cmd->require_subcommand(1);
  auto* verify_cmd = prodsys_cmd->add_subcommand("verify", "verify the covariant representation");
  common(verify_cmd, true);
  verify_cmd->add_option("--horizon", horizon, "grid horizon A B")
      ->expected(2)
      ->allow_extra_args(false)
      ->required();
  verify_cmd->add_option("--cap", cfg.cap, "largest fiber dimension times dim H");
  auto* dilate_cmd = app.add_subcommand("dilate", "minimal isometric dilation at finite horizon");
  common(dilate_cmd, true);
  dilate_cmd->add_option("--horizon", horizon, "grid horizon A B")
      ->expected(2)
      ->allow_extra_args(false)
      ->required();
  dilate_cmd->add_option("--margin", margin, "lift margin a b")
      ->expected(2)
      ->allow_extra_args(false);
  dilate_cmd->add_option("--cap", cfg.cap, "largest big-space dimension");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kHolds;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }

  for (auto* sub : {classify_cmd, commute_cmd, strong_cmd, stoch_cmd, prodsys_cmd, dilate_cmd})
    if (sub->parsed()) cfg.subcommand = sub->get_name();
  if (horizon.size() == 2) cfg.horizon = {horizon[0], horizon[1]};
  cfg.margin = margin.size() == 2 ? GridPoint{margin[0], margin[1]}
                                  : grid_min(cfg.horizon, GridPoint{1, 1});
  if (*t_opt) cfg.semigroup_t = t;

  const RunResult r = run(cfg);
  if (r.exit_code == kError) err << "error: " << r.error << "\n";
  if (r.exit_code != kError || r.report.contains("pass")) out << render(r.report, cfg.format);
  return r.exit_code;
}

}  // namespace cpdil::cli

#endif  // CPDIL_CLI_HPP
