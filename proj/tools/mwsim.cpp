// mwsim: run many-worlds scenarios from config files, export world trees and
// drive the randomized verification suites.
#include <cmath>
#include <fstream>
#include <future>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "manyworlds/report.hpp"
#include "manyworlds/scenarios.hpp"

using namespace manyworlds;

namespace {

struct CliError {
  int code;
  std::string message;
};

// --- config ---------------------------------------------------------------
// Flat key-value text with [section] tables and # comments.

using Config = std::map<std::string, std::map<std::string, std::string>>;

Config parse_config(const std::string& text) {
  Config cfg;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    std::string body = line.substr(first, last - first + 1);
    if (body.front() == '[') {
      if (body.back() != ']')
        throw CliError{2, "parse error at line " + std::to_string(lineno) + ", column " +
                              std::to_string(last + 1) + ": unterminated section header"};
      section = body.substr(1, body.size() - 2);
      continue;
    }
    auto eq = body.find('=');
    if (eq == std::string::npos)
      throw CliError{2, "parse error at line " + std::to_string(lineno) + ", column " +
                            std::to_string(first + 1) + ": expected key = value"};
    auto strip = [](std::string s) {
      auto a = s.find_first_not_of(" \t");
      auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = strip(body.substr(0, eq));
    std::string value = strip(body.substr(eq + 1));
    if (key.empty())
      throw CliError{2, "parse error at line " + std::to_string(lineno) + ", column " +
                            std::to_string(first + 1) + ": empty key"};
    cfg[section][key] = value;
  }
  return cfg;
}

using Params = std::map<std::string, std::string>;

double get_double(const Params& p, const std::string& key, double dflt) {
  auto it = p.find(key);
  if (it == p.end()) return dflt;
  try {
    size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw CliError{3, "validation error at params." + key + ": not a number: '" + it->second + "'"};
  }
}

long long get_int(const Params& p, const std::string& key, long long dflt) {
  auto it = p.find(key);
  if (it == p.end()) return dflt;
  try {
    size_t used = 0;
    long long v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw CliError{3,
                   "validation error at params." + key + ": not an integer: '" + it->second + "'"};
  }
}

bool get_bool(const Params& p, const std::string& key, bool dflt) {
  auto it = p.find(key);
  if (it == p.end()) return dflt;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw CliError{3, "validation error at params." + key + ": expected true/false"};
}

std::string get_string(const Params& p, const std::string& key, const std::string& dflt) {
  auto it = p.find(key);
  return it == p.end() ? dflt : it->second;
}

std::vector<double> get_double_list(const Params& p, const std::string& key) {
  std::vector<double> out;
  auto it = p.find(key);
  if (it == p.end()) return out;
  std::istringstream in(it->second);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw CliError{3, "validation error at params." + key + ": bad list entry '" + tok + "'"};
    }
  }
  return out;
}

// --- scenario runners -------------------------------------------------------

std::optional<Rational> try_exact(double w, long long den) {
  long long num = std::llround(w * static_cast<double>(den));
  if (std::abs(w - static_cast<double>(num) / static_cast<double>(den)) < 1e-9)
    return Rational{num, den};
  return std::nullopt;
}

void push_params(ScenarioReport& rep, const Params& p) {
  for (const auto& [k, v] : p) rep.params.emplace_back(k, v);
}

ScenarioReport run_mzi(const Params& p) {
  MziParams mp;
  std::string mode = get_string(p, "mode", "PI");
  if (mode == "PI")
    mp.mode = MziMode::PI;
  else if (mode == "PS")
    mp.mode = MziMode::PS;
  else if (mode == "general")
    mp.mode = MziMode::General;
  else
    throw CliError{3, "validation error at params.mode: expected PI|PS|general"};
  mp.theta = get_double(p, "theta", 0.0);
  mp.dp_detector = get_bool(p, "dp_detector", false);
  if (p.count("alpha"))
    mp.alpha = get_double(p, "alpha", 1.0);
  else if (p.count("a") || p.count("k"))
    mp.alpha = mirror_overlap(get_double(p, "a", 1.0), get_double(p, "k", 0.0));

  MziResult r = mzi_run(mp);
  ScenarioReport rep;
  rep.scenario = "mzi";
  push_params(rep, p);
  double half_turns = mp.theta / (M_PI / 2.0);
  bool rational = r.effective_alpha == 0.0 ||
                  (r.effective_alpha == 1.0 &&
                   std::abs(half_turns - std::round(half_turns)) < 1e-12);
  for (const auto& b : r.branches.branches) {
    ReportBranch rb{b.label_string(), b.weight(), std::nullopt};
    if (rational) rb.exact = try_exact(rb.weight, 4);
    rep.branches.push_back(std::move(rb));
  }
  rep.quantities = {{"dh_weight", r.dh_weight},
                    {"dv_weight", r.dv_weight},
                    {"worlds", static_cast<double>(r.branches.branches.size())},
                    {"effective_alpha", r.effective_alpha}};
  rep.assertions.push_back(
      {"weights_sum_to_one", std::abs(r.branches.total_weight() - 1.0) < 1e-10});
  StateVector rebuilt = reconstruct(r.branches);
  rep.assertions.push_back(
      {"reconstruction_matches",
       (rebuilt.amplitudes() - r.final_state.amplitudes()).cwiseAbs().maxCoeff() < 1e-10});
  rep.tree = r.tree;
  return rep;
}

ScenarioReport run_spins(const Params& p) {
  long long n = get_int(p, "n", 10);
  double p_up = get_double(p, "p_up", 0.5);
  if (p_up < 0.0 || p_up > 1.0)
    throw CliError{3, "validation error at params.p_up: must lie in [0, 1]"};
  SpinRunResult r = repeated_spin_run(static_cast<int>(n), std::sqrt(p_up), std::sqrt(1.0 - p_up));

  ScenarioReport rep;
  rep.scenario = "spins";
  push_params(rep, p);
  bool binomial_ok = true;
  for (int m = 0; m <= r.n; ++m) {
    ReportBranch rb{"m=" + std::to_string(m), r.grouped_weights[static_cast<size_t>(m)],
                    std::nullopt};
    if (r.rational) rb.exact = Rational{r.numerators[static_cast<size_t>(m)], r.denominator};
    double expect = std::pow(p_up, m) * std::pow(1.0 - p_up, r.n - m);
    for (int k = 1; k <= m; ++k) expect = expect * (r.n - m + k) / k;
    if (std::abs(rb.weight - expect) > 1e-12) binomial_ok = false;
    rep.branches.push_back(std::move(rb));
  }
  rep.quantities = {{"total_branches", static_cast<double>(r.total_branches)},
                    {"live_branches", static_cast<double>(r.live_branches)}};
  rep.assertions.push_back({"binomial_measures", binomial_ok});
  double total = 0.0;
  for (const auto& b : rep.branches) total += b.weight;
  rep.assertions.push_back({"weights_sum_to_one", std::abs(total - 1.0) < 1e-10});
  return rep;
}

ScenarioReport run_approx(const Params& p) {
  double alpha = p.count("alpha")
                     ? get_double(p, "alpha", 0.0)
                     : mirror_overlap(get_double(p, "a", 1.0), get_double(p, "k", 0.0));
  ApproxMeasurementReport r = rebase_approximate_measurement(alpha);
  ScenarioReport rep;
  rep.scenario = "approx";
  push_params(rep, p);
  for (const auto& b : r.rebased.branches)
    rep.branches.push_back({b.label_string(), b.weight(), std::nullopt});
  rep.quantities = {{"fidelity_plus", r.fidelity_plus},
                    {"fidelity_minus", r.fidelity_minus},
                    {"correlation", r.correlation}};
  rep.assertions.push_back(
      {"weights_sum_to_one", std::abs(r.rebased.total_weight() - 1.0) < 1e-10});
  return rep;
}

ScenarioReport run_pointer(const Params& p) {
  long long nq = get_int(p, "nq", 8);
  long long nr = get_int(p, "nr", std::max<long long>(16, 2 * nq));
  std::string shape = get_string(p, "phi", "uniform");
  PointerParams pp;
  pp.dq = 1.0;
  pp.dr = 1.0;
  pp.t = get_double(p, "t", 1.0);
  pp.phi = VectorXc::Ones(nq);
  if (shape == "gauss") {
    double sigma = static_cast<double>(nq) / 6.0;
    for (Eigen::Index j = 0; j < nq; ++j) {
      double x = static_cast<double>(j) - static_cast<double>(nq) / 2.0;
      pp.phi[j] = std::exp(-x * x / (4.0 * sigma * sigma));
    }
  } else if (shape != "uniform") {
    throw CliError{3, "validation error at params.phi: expected uniform|gauss"};
  }
  pp.phi /= pp.phi.norm();
  if (get_string(p, "pointer", "delta") != "delta")
    throw CliError{3, "validation error at params.pointer: only delta is available"};
  pp.eta = VectorXc::Unit(nr, nr / 2);

  VonNeumannResult r = von_neumann_run(pp);
  ScenarioReport rep;
  rep.scenario = "pointer";
  push_params(rep, p);
  rep.quantities = {{"c_initial", r.c_initial},
                    {"c_final", r.c_final},
                    {"i_q_initial", r.i_q_initial},
                    {"i_q_final", r.i_q_final},
                    {"i_q_max_drift", r.i_q_max_drift}};
  rep.assertions.push_back({"initially_uncorrelated", std::abs(r.c_initial) < 1e-10});
  rep.assertions.push_back(
      {"correlation_reaches_maximum", std::abs(r.c_final + r.i_q_initial) < 1e-10});
  rep.assertions.push_back({"marginal_information_constant", r.i_q_max_drift < 1e-9});
  rep.assertions.push_back({"measurement_generated", r.measurement_generated});
  return rep;
}

ScenarioReport run_stern_gerlach(const Params& p) {
  SternGerlachParams sp;
  double p_up = get_double(p, "p_up", 0.5);
  sp.c1 = std::sqrt(p_up);
  sp.c2 = std::sqrt(1.0 - p_up);
  sp.n = get_int(p, "n", 1024);
  sp.dz = get_double(p, "dz", 0.05);
  sp.sigma = get_double(p, "sigma", 1.0);
  sp.phase0 = get_double(p, "phase0", 0.0);
  sp.phase1 = get_double(p, "kick", 5.0);
  sp.flight_time = get_double(p, "flight", 1.0);
  sp.recombine = get_bool(p, "recombine", false);

  SternGerlachResult r = stern_gerlach_run(sp);
  ScenarioReport rep;
  rep.scenario = "stern_gerlach";
  push_params(rep, p);
  rep.quantities = {{"momentum_up", r.momentum_up},
                    {"momentum_down", r.momentum_down},
                    {"correlation", r.correlation}};
  if (sp.recombine) {
    rep.quantities.emplace_back("recombination_fidelity", r.recombination_fidelity);
    rep.assertions.push_back(
        {"recombination_restores_state", r.recombination_fidelity >= 1.0 - 1e-10});
  }
  bool kicks_ok = (p_up < 1e-12 || std::abs(r.momentum_up + sp.phase1) < 0.05) &&
                  (p_up > 1.0 - 1e-12 || std::abs(r.momentum_down - sp.phase1) < 0.05);
  rep.assertions.push_back({"conditional_momenta_opposite", kicks_ok});
  return rep;
}

ScenarioReport run_geiger(const Params& p) {
  GeigerParams gp;
  gp.n_atoms = static_cast<int>(get_int(p, "n_atoms", 8));
  gp.cascade = get_double(p, "cascade", 1.0);
  double p_in = get_double(p, "p_in", 0.5);
  gp.b = std::sqrt(p_in);
  gp.a = std::sqrt(1.0 - p_in);

  GeigerResult r = geiger_run(gp);
  ScenarioReport rep;
  rep.scenario = "geiger";
  push_params(rep, p);
  for (size_t c = 0; c < r.count_weights.size(); ++c)
    rep.branches.push_back({"count=" + std::to_string(c), r.count_weights[c], std::nullopt});
  rep.quantities = {{"low_group", r.low_group},
                    {"high_group", r.high_group},
                    {"medium_band_mass", r.medium_band_mass}};
  if (gp.cascade == 1.0) {
    rep.assertions.push_back({"groups_match_amplitudes",
                              std::abs(r.low_group - (1.0 - p_in)) < 1e-12 &&
                                  std::abs(r.high_group - p_in) < 1e-12});
    rep.assertions.push_back({"bimodal", r.medium_band_mass < 1e-6});
  }
  double total = r.low_group + r.high_group;
  rep.assertions.push_back({"weights_sum_to_one", std::abs(total - 1.0) < 1e-10});
  return rep;
}

ScenarioReport run_observer_case(const Params& p) {
  MultiObserverConfig cfg;
  cfg.case_id = static_cast<int>(get_int(p, "case", 1));
  std::vector<double> amps = get_double_list(p, "amplitudes");
  if (amps.empty()) amps = {std::sqrt(0.5), std::sqrt(0.5)};
  double norm = 0.0;
  for (double a : amps) norm += a * a;
  for (double a : amps) cfg.amplitudes.push_back(a / std::sqrt(norm));
  cfg.notebook = get_bool(p, "notebook", false);
  if (cfg.case_id == 2) {
    Eigen::Index n = static_cast<Eigen::Index>(amps.size());
    cfg.second_basis = MatrixXc(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k)
        cfg.second_basis(j, k) =
            std::exp(Complex(0.0, 2.0 * M_PI * static_cast<double>(j * k) / static_cast<double>(n))) /
            std::sqrt(static_cast<double>(n));
  }

  CaseReport r = multi_observer_case(cfg);
  ScenarioReport rep;
  rep.scenario = "observer_case";
  push_params(rep, p);
  for (const auto& b : r.final_state.branches) {
    std::string label;
    for (const auto& [obs, mem] : b.memories) {
      if (!label.empty()) label += ";";
      label += obs + "=" + mem.to_string();
    }
    rep.branches.push_back({label, b.weight(), std::nullopt});
  }
  rep.assertions = r.assertions;
  return rep;
}

const std::map<std::string, ScenarioReport (*)(const Params&)> kScenarios = {
    {"mzi", run_mzi},           {"spins", run_spins},
    {"approx", run_approx},     {"pointer", run_pointer},
    {"stern_gerlach", run_stern_gerlach}, {"geiger", run_geiger},
    {"observer_case", run_observer_case}};

ScenarioReport run_scenario(const std::string& name, const Params& params) {
  auto it = kScenarios.find(name);
  if (it == kScenarios.end())
    throw CliError{3, "validation error at scenario: unknown scenario '" + name + "'"};
  try {
    return it->second(params);
  } catch (const CliError&) {
    throw;
  } catch (const std::exception& e) {
    throw CliError{3, std::string("validation error at params: ") + e.what()};
  }
}

// --- verify suites ----------------------------------------------------------

MatrixXc random_unitary(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> g;
  MatrixXc m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = Complex(g(rng), g(rng));
  Eigen::HouseholderQR<MatrixXc> qr(m);
  MatrixXc q = qr.householderQ() * MatrixXc::Identity(d, d);
  MatrixXc r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i)
    if (std::abs(r(i, i)) > 0) q.col(i) *= r(i, i) / std::abs(r(i, i));
  return q;
}

VectorXc random_state(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> g;
  VectorXc v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = Complex(g(rng), g(rng));
  return v / v.norm();
}

std::vector<std::string> index_labels(Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(std::to_string(i));
  return out;
}

struct SuiteResult {
  std::string suite;
  int trials = 0;
  std::vector<std::pair<int, std::string>> failures;
};

SuiteResult suite_donald(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(2, 4);
  SuiteResult res{"donald", 1000, {}};
  for (int t = 0; t < res.trials; ++t) {
    Eigen::Index dl = dim(rng), dr = dim(rng);
    std::vector<Register> regs = {Register::finite("A", index_labels(dl)),
                                  Register::finite("B", index_labels(dr))};
    StateVector psi(regs, random_state(rng, dl * dr));
    ProjectorFamily fa = ProjectorFamily::from_basis({"A"}, random_unitary(rng, dl), {});
    ProjectorFamily fb = ProjectorFamily::from_basis({"B"}, random_unitary(rng, dr), {});
    double c_ab = observable_correlation(psi, fa, fb);
    double cc = canonical_correlation(psi, Bipartition{{"A"}, {"B"}});
    if (c_ab > cc + 1e-9)
      res.failures.push_back({t, "dims " + std::to_string(dl) + "x" + std::to_string(dr)});
  }
  return res;
}

SuiteResult suite_process1(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(2, 6);
  std::normal_distribution<double> g;
  SuiteResult res{"process1", 1000, {}};
  for (int t = 0; t < res.trials; ++t) {
    Eigen::Index d = dim(rng);
    MatrixXc m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) m(i, j) = Complex(g(rng), g(rng));
    MatrixXc rho_m = m * m.adjoint();
    rho_m /= rho_m.trace().real();
    DensityMatrix rho{{Register::finite("A", index_labels(d))}, rho_m};
    ProjectorFamily fam = ProjectorFamily::from_basis({"A"}, random_unitary(rng, d), {});
    if (density_information(process1_channel(rho, fam)) > density_information(rho) + 1e-12)
      res.failures.push_back({t, "dim " + std::to_string(d)});
  }
  return res;
}

SuiteResult suite_nosignal(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(2, 4);
  SuiteResult res{"nosignal", 200, {}};
  for (int t = 0; t < res.trials; ++t) {
    Eigen::Index d = dim(rng);
    VectorXc a = random_state(rng, d);
    MultiObserverConfig cfg;
    cfg.case_id = 3;
    for (Eigen::Index i = 0; i < d; ++i) cfg.amplitudes.push_back(a[i]);
    CaseReport rep = multi_observer_case(cfg);
    if (!rep.all_pass()) res.failures.push_back({t, "dim " + std::to_string(d)});
  }
  return res;
}

SuiteResult suite_uncertainty(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> width(0.5, 3.0), center(-8.0, 8.0), kick(-5.0, 5.0);
  SuiteResult res{"uncertainty", 50, {}};
  const Eigen::Index n = 2048;
  const double dz = 0.05;
  Register g = Register::grid("x", n, dz);
  double bound = -(1.0 + std::log(M_PI));
  for (int t = 0; t < res.trials; ++t) {
    VectorXc amps = VectorXc::Zero(n);
    int packets = (t % 5 == 4) ? 2 : 1;
    for (int q = 0; q < packets; ++q) {
      double s = width(rng), x0 = center(rng), k0 = kick(rng);
      for (Eigen::Index j = 0; j < n; ++j) {
        double x = g.cell_centers[j];
        amps[j] += std::exp(-(x - x0) * (x - x0) / (4.0 * s * s)) *
                   std::exp(Complex(0.0, k0 * x));
      }
    }
    amps /= amps.norm();
    auto [ix, ik] = info_uncertainty(StateVector({g}, amps));
    if (ix + ik > bound + 5e-3)
      res.failures.push_back({t, "excess " + std::to_string(ix + ik - bound)});
  }
  return res;
}

SuiteResult suite_coarsen(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(2, 5);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  SuiteResult res{"coarsen", 200, {}};
  for (int t = 0; t < res.trials; ++t) {
    Eigen::Index dx = dim(rng), dy = dim(rng);
    Eigen::VectorXd probs(dx * dy);
    for (Eigen::Index i = 0; i < probs.size(); ++i) probs[i] = u(rng);
    probs /= probs.sum();
    FiniteDistribution fine({Axis{"x", index_labels(dx)}, Axis{"y", index_labels(dy)}}, probs);

    auto random_partition = [&](Eigen::Index d) {
      Partition part;
      std::uniform_int_distribution<int> block(0, static_cast<int>(d) - 1);
      for (Eigen::Index i = 0; i < d; ++i)
        part.block_of[std::to_string(i)] = "b" + std::to_string(block(rng));
      return part;
    };
    FiniteDistribution coarse =
        coarsen(fine, {{"x", random_partition(dx)}, {"y", random_partition(dy)}});
    double c_fine = correlation(fine, {{"x"}, {"y"}});
    double c_coarse = correlation(coarse, {{"x"}, {"y"}});
    if (c_coarse > c_fine + 1e-9)
      res.failures.push_back({t, "coarse correlation exceeds fine by " +
                                     std::to_string(c_coarse - c_fine)});
  }
  return res;
}

nlohmann::ordered_json suite_to_json(const SuiteResult& r) {
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (const auto& [s, inputs] : r.failures)
    failures.push_back({{"seed", s}, {"inputs", inputs}});
  return {{"suite", r.suite}, {"trials", r.trials}, {"failures", failures}};
}

// --- commands ---------------------------------------------------------------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{2, "parse error at line 0, column 0: cannot open '" + path + "'"};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw CliError{3, "validation error at output.path: cannot write '" + out_path + "'"};
    out << text;
  }
}

int cmd_run(const std::string& cfg_path, const std::vector<std::string>& sets,
            std::string format, std::string out_path) {
  Config cfg = parse_config(read_file(cfg_path));
  for (const auto& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw CliError{3, "validation error at --set: expected key=value, got '" + kv + "'"};
    std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    auto dot = key.find('.');
    if (dot != std::string::npos)
      cfg[key.substr(0, dot)][key.substr(dot + 1)] = value;
    else if (key == "scenario")
      cfg[""]["scenario"] = value;
    else
      cfg["params"][key] = value;
  }

  auto top = cfg[""];
  if (!top.count("scenario"))
    throw CliError{3, "validation error at scenario: missing required key"};
  std::string scenario = top.at("scenario");
  if (!kScenarios.count(scenario))
    throw CliError{3, "validation error at scenario: unknown scenario '" + scenario + "'"};
  Params params = cfg.count("params") ? cfg["params"] : Params{};

  if (format.empty()) format = cfg.count("output") ? get_string(cfg["output"], "format", "json") : "json";
  if (out_path.empty() && cfg.count("output")) out_path = get_string(cfg["output"], "path", "");
  if (format != "json" && format != "csv" && format != "tree")
    throw CliError{3, "validation error at output.format: expected json|csv|tree"};

  bool failed = false;
  std::string text;
  if (cfg.count("sweep")) {
    const auto& sw = cfg["sweep"];
    if (!sw.count("param"))
      throw CliError{3, "validation error at sweep.param: missing required key"};
    std::string param = sw.at("param");
    std::vector<std::string> values;
    {
      std::istringstream in(get_string(sw, "values", ""));
      std::string tok;
      while (std::getline(in, tok, ',')) {
        auto a = tok.find_first_not_of(" \t");
        auto b = tok.find_last_not_of(" \t");
        if (a != std::string::npos) values.push_back(tok.substr(a, b - a + 1));
      }
    }
    if (values.empty())
      throw CliError{3, "validation error at sweep.values: empty sweep"};
    if (format == "tree")
      throw CliError{3, "validation error at output.format: tree output is per-run, not per-sweep"};

    std::vector<std::future<ScenarioReport>> futures;
    for (const auto& v : values) {
      Params pv = params;
      pv[param] = v;
      futures.push_back(std::async(std::launch::async,
                                   [scenario, pv] { return run_scenario(scenario, pv); }));
    }
    if (format == "json") {
      nlohmann::ordered_json runs = nlohmann::ordered_json::array();
      for (auto& f : futures) {
        ScenarioReport rep = f.get();
        if (!rep.all_pass()) failed = true;
        runs.push_back(nlohmann::ordered_json::parse(report_to_json(rep)));
      }
      text = nlohmann::ordered_json{
          {"scenario", scenario}, {"sweep_param", param}, {"runs", runs}}
                 .dump(2);
    } else {
      text = "param,label,weight,exact\r\n";
      for (size_t i = 0; i < futures.size(); ++i) {
        ScenarioReport rep = futures[i].get();
        if (!rep.all_pass()) failed = true;
        std::string csv = report_to_csv(rep);
        std::istringstream rows(csv);
        std::string row;
        std::getline(rows, row);  // drop the per-run header
        while (std::getline(rows, row)) {
          if (!row.empty() && row.back() == '\r') row.pop_back();
          if (!row.empty()) text += values[i] + "," + row + "\r\n";
        }
      }
    }
  } else {
    ScenarioReport rep = run_scenario(scenario, params);
    failed = !rep.all_pass();
    if (format == "json") {
      text = report_to_json(rep);
    } else if (format == "csv") {
      text = report_to_csv(rep);
    } else {
      if (!rep.tree) throw CliError{5, "no world tree in report"};
      text = tree_to_graphviz(*rep.tree);
    }
  }
  emit(text, out_path);
  return failed ? 1 : 0;
}

int cmd_verify(const std::string& suite, uint64_t seed, const std::string& out_path) {
  std::vector<SuiteResult> results;
  if (suite == "donald") results.push_back(suite_donald(seed));
  else if (suite == "process1") results.push_back(suite_process1(seed));
  else if (suite == "nosignal") results.push_back(suite_nosignal(seed));
  else if (suite == "uncertainty") results.push_back(suite_uncertainty(seed));
  else if (suite == "coarsen") results.push_back(suite_coarsen(seed));
  else if (suite == "all") {
    results.push_back(suite_donald(seed));
    results.push_back(suite_process1(seed));
    results.push_back(suite_nosignal(seed));
    results.push_back(suite_uncertainty(seed));
    results.push_back(suite_coarsen(seed));
  } else {
    throw CliError{4, "unknown suite '" + suite + "'"};
  }

  bool failed = false;
  std::string text;
  if (results.size() == 1) {
    failed = !results[0].failures.empty();
    text = suite_to_json(results[0]).dump(2);
  } else {
    nlohmann::ordered_json suites = nlohmann::ordered_json::array();
    for (const auto& r : results) {
      if (!r.failures.empty()) failed = true;
      suites.push_back(suite_to_json(r));
    }
    text = nlohmann::ordered_json{{"suite", "all"}, {"suites", suites}}.dump(2);
  }
  emit(text, out_path);
  return failed ? 1 : 0;
}

int cmd_export_tree(const std::string& report_path, const std::string& style) {
  nlohmann::json doc = nlohmann::json::parse(read_file(report_path), nullptr, false);
  if (doc.is_discarded())
    throw CliError{2, "parse error at line 0, column 0: invalid JSON in '" + report_path + "'"};
  nlohmann::json tree_json;
  if (doc.contains("tree"))
    tree_json = doc.at("tree");
  else if (doc.contains("steps"))
    tree_json = doc;
  else
    throw CliError{5, "no world tree in '" + report_path + "'"};
  WorldTree tree = tree_from_json(tree_json.dump());
  if (style == "graphviz")
    std::cout << tree_to_graphviz(tree);
  else if (style == "json")
    std::cout << tree_to_json(tree) << "\n";
  else
    throw CliError{3, "validation error at --style: expected json|graphviz"};
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"many-worlds universe simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario config");
  std::string cfg_path, format, out_path;
  std::vector<std::string> sets;
  run->add_option("config", cfg_path, "config file path")->required();
  run->add_option("--set", sets, "override a config key (key=value)");
  run->add_option("--format", format, "json|csv|tree");
  run->add_option("--out", out_path, "output file (default stdout)");

  auto* verify = app.add_subcommand("verify", "run a randomized verification suite");
  std::string suite, verify_out;
  uint64_t seed = 0;
  verify->add_option("suite", suite, "donald|process1|nosignal|uncertainty|coarsen|all")
      ->required();
  verify->add_option("seed", seed, "rng seed")->required();
  verify->add_option("--out", verify_out, "output file (default stdout)");

  auto* export_tree = app.add_subcommand("export-tree", "render a report's world tree");
  std::string report_path, style = "graphviz";
  export_tree->add_option("report", report_path, "report JSON path")->required();
  export_tree->add_option("--style", style, "graphviz|json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(cfg_path, sets, format, out_path);
    if (*verify) return cmd_verify(suite, seed, verify_out);
    if (*export_tree) return cmd_export_tree(report_path, style);
  } catch (const CliError& e) {
    std::cerr << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
