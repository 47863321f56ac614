#include "manyworlds/observers.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace manyworlds {

namespace {

constexpr double kAmpCutoff = 1e-12;

// Index of the computational basis state a rank-1 projector selects, or -1
// when the projector is not a basis projector.
Eigen::Index diagonal_index(const MatrixXc& p) {
  Eigen::Index hit = -1;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if (std::abs(p(i, i) - 1.0) < 1e-12) {
      if (hit >= 0) return -1;
      hit = i;
    } else if (std::abs(p(i, i)) > 1e-12) {
      return -1;
    }
  }
  if (hit < 0) return -1;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (i != j && std::abs(p(i, j)) > 1e-12) return -1;
  return hit;
}

std::string strip_tag(const std::string& symbol) {
  auto at = symbol.find('@');
  return at == std::string::npos ? symbol : symbol.substr(0, at);
}

long long binomial(int n, int m) {
  long long r = 1;
  for (int k = 1; k <= m; ++k) r = r * (n - m + k) / k;
  return r;
}

}  // namespace

std::string MemorySequence::to_string() const {
  std::string out = "...";
  for (const auto& s : symbols) out += "," + s;
  return out;
}

HybridBranchState HybridBranchState::initial(const StateVector& psi) {
  HybridBranchState s;
  s.system_registers = psi.layout();
  HybridBranch b;
  b.amplitude = Complex(1.0, 0.0);
  b.residual = psi;
  s.branches.push_back(std::move(b));
  return s;
}

double HybridBranchState::total_weight() const {
  double w = 0.0;
  for (const auto& b : branches) w += b.weight();
  return w;
}

HybridBranchState observe(const HybridBranchState& state, const std::string& system_register,
                          const ProjectorFamily& observable, const std::string& observer_id,
                          const std::vector<std::string>& outcome_symbols) {
  if (observable.registers != std::vector<std::string>{system_register})
    throw ShapeError("observable must act on the observed register");
  if (outcome_symbols.size() != observable.entries.size())
    throw AlphabetError("symbol count does not match eigenvalue count");
  for (const auto& e : observable.entries)
    if (e.multiplicity != 1)
      throw ShapeError("degenerate observables are not good observations; refusing to guess");

  // Basis projectors allow moving the register into the classical labels.
  std::vector<Eigen::Index> diag(observable.entries.size());
  bool computational = true;
  for (size_t j = 0; j < observable.entries.size(); ++j) {
    diag[j] = diagonal_index(observable.entries[j].projector);
    if (diag[j] < 0) computational = false;
  }

  HybridBranchState out;
  out.system_registers = state.system_registers;
  out.pruned_branches = state.pruned_branches;
  out.pruned_mass = state.pruned_mass;

  for (const auto& source_branch : state.branches) {
    HybridBranch br = source_branch;
    auto classical = br.pointer_labels.find(system_register);
    if (classical != br.pointer_labels.end()) {
      Register reg = [&] {
        for (const auto& r : state.system_registers)
          if (r.name == system_register) return r;
        throw ShapeError("unknown register '" + system_register + "'");
      }();
      Eigen::Index li = std::distance(
          reg.labels.begin(), std::find(reg.labels.begin(), reg.labels.end(), classical->second));
      if (computational) {
        // Deterministic outcome: the register already sits in an eigenstate.
        size_t entry = std::distance(diag.begin(), std::find(diag.begin(), diag.end(), li));
        HybridBranch child = br;
        child.memories[observer_id].symbols.push_back(outcome_symbols[entry]);
        out.branches.push_back(std::move(child));
        continue;
      }
      // Non-basis observable: re-expand the classical register into the
      // residual (at its catalog position) before projecting.
      std::vector<Register> layout;
      for (const auto& r : state.system_registers)
        if (r.name == system_register || (br.residual && br.residual->has_register(r.name)))
          layout.push_back(r);
      Eigen::Index dim = 1;
      for (const auto& r : layout) dim *= r.dimension();
      StateVector ref(layout, VectorXc::Unit(dim, 0));
      auto t_off = detail::subset_offsets(ref, {system_register});
      auto c_off = detail::complement_offsets(ref, {system_register});
      VectorXc amps = VectorXc::Zero(dim);
      for (size_t c = 0; c < c_off.size(); ++c)
        amps[t_off[static_cast<size_t>(li)] + c_off[c]] =
            br.residual ? br.residual->amplitudes()[static_cast<Eigen::Index>(c)]
                        : Complex(1.0, 0.0);
      br.residual = StateVector(std::move(layout), std::move(amps));
      br.pointer_labels.erase(system_register);
    }

    if (!br.residual || !br.residual->has_register(system_register))
      throw ShapeError("branch residual does not contain register '" + system_register + "'");
    const StateVector& res = *br.residual;

    if (computational) {
      auto t_off = detail::subset_offsets(res, {system_register});
      auto c_off = detail::complement_offsets(res, {system_register});
      auto rest_regs = detail::complement_registers(res, {system_register});
      for (size_t j = 0; j < observable.entries.size(); ++j) {
        Eigen::Index k = diag[j];
        VectorXc sub(static_cast<Eigen::Index>(c_off.size()));
        for (size_t c = 0; c < c_off.size(); ++c)
          sub[static_cast<Eigen::Index>(c)] = res.amplitudes()[t_off[k] + c_off[c]];
        double norm = sub.norm();
        if (norm <= kAmpCutoff) {
          ++out.pruned_branches;
          out.pruned_mass += br.weight() * norm * norm;
          continue;
        }
        HybridBranch child = br;
        child.memories[observer_id].symbols.push_back(outcome_symbols[j]);
        child.pointer_labels[system_register] = res.reg(system_register).labels[k];
        if (rest_regs.empty()) {
          child.amplitude = br.amplitude * sub[0];
          child.residual.reset();
        } else {
          Complex phase(1.0, 0.0);
          for (Eigen::Index i = 0; i < sub.size(); ++i) {
            if (std::abs(sub[i]) > 1e-12) {
              phase = sub[i] / std::abs(sub[i]);
              break;
            }
          }
          child.amplitude = br.amplitude * norm * phase;
          child.residual = StateVector(rest_regs, sub * (std::conj(phase) / norm));
        }
        out.branches.push_back(std::move(child));
      }
    } else {
      for (size_t j = 0; j < observable.entries.size(); ++j) {
        VectorXc proj = apply_operator_raw(
            LinearOperator::general({system_register}, observable.entries[j].projector), res);
        double norm = proj.norm();
        if (norm <= kAmpCutoff) {
          ++out.pruned_branches;
          out.pruned_mass += br.weight() * norm * norm;
          continue;
        }
        HybridBranch child = br;
        child.memories[observer_id].symbols.push_back(outcome_symbols[j]);
        Complex phase(1.0, 0.0);
        for (Eigen::Index i = 0; i < proj.size(); ++i) {
          if (std::abs(proj[i]) > 1e-12) {
            phase = proj[i] / std::abs(proj[i]);
            break;
          }
        }
        child.amplitude = br.amplitude * norm * phase;
        child.residual = StateVector(res.layout(), proj * (std::conj(phase) / norm));
        out.branches.push_back(std::move(child));
      }
    }
  }
  return out;
}

HybridBranchState read_notebook(const HybridBranchState& state, const std::string& reader,
                                const std::string& source) {
  HybridBranchState out = state;
  for (auto& br : out.branches) {
    auto it = br.memories.find(source);
    if (it == br.memories.end() || it->second.symbols.empty())
      throw ConfigError("observer '" + source + "' has no recorded result to read");
    br.memories[reader].symbols.push_back(it->second.symbols.back() + "@" + source);
  }
  return out;
}

SpinRunResult repeated_spin_run(int n, Complex a, Complex b) {
  if (n < 1 || n > 20) throw SizeError("spin count must be in [1, 20]");
  if (std::abs(std::norm(a) + std::norm(b) - 1.0) > 1e-12)
    throw ShapeError("|a|^2 + |b|^2 must be 1");

  std::vector<StateVector> factors;
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) {
    Register r = Register::finite("s" + std::to_string(i), {"u", "d"});
    VectorXc amps(2);
    amps << a, b;
    factors.push_back(StateVector(std::vector<Register>{r}, std::move(amps)));
    names.push_back(r.name);
  }
  HybridBranchState state = HybridBranchState::initial(tensor_product(factors));

  MatrixXc z = MatrixXc::Identity(2, 2);
  for (int i = 0; i < n; ++i) {
    ProjectorFamily fam = ProjectorFamily::from_basis({names[static_cast<size_t>(i)]}, z, {"u", "d"});
    state = observe(state, names[static_cast<size_t>(i)], fam, "O", {"0", "1"});
  }

  SpinRunResult res;
  res.n = n;
  res.total_branches = static_cast<size_t>(1) << n;
  res.live_branches = state.branches.size();
  res.grouped_weights.assign(static_cast<size_t>(n) + 1, 0.0);
  for (const auto& br : state.branches) {
    int ups = 0;
    for (const auto& s : br.memories.at("O").symbols)
      if (s == "0") ++ups;
    res.grouped_weights[static_cast<size_t>(ups)] += br.weight();
  }
  if (std::abs(std::abs(a) - std::abs(b)) < 1e-15) {
    res.rational = true;
    res.denominator = 1LL << n;
    for (int m = 0; m <= n; ++m) res.numerators.push_back(binomial(n, m));
  }
  return res;
}

bool CaseReport::all_pass() const {
  return std::all_of(assertions.begin(), assertions.end(),
                     [](const CaseAssertion& a) { return a.pass; });
}

namespace {

std::vector<std::string> index_symbols(size_t n, const std::string& prefix) {
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

StateVector amplitude_state(const std::string& reg_name, const std::vector<Complex>& a) {
  Register r = Register::finite(reg_name, index_symbols(a.size(), ""));
  VectorXc amps(static_cast<Eigen::Index>(a.size()));
  for (size_t i = 0; i < a.size(); ++i) amps[static_cast<Eigen::Index>(i)] = a[i];
  return StateVector::normalized({r}, std::move(amps));
}

// Weights grouped by one observer's memory contents.
std::map<std::vector<std::string>, double> memory_marginal(const HybridBranchState& s,
                                                           const std::string& observer) {
  std::map<std::vector<std::string>, double> out;
  for (const auto& br : s.branches) {
    std::vector<std::string> key;
    auto it = br.memories.find(observer);
    if (it != br.memories.end()) key = it->second.symbols;
    out[key] += br.weight();
  }
  return out;
}

bool dense_equal(const HybridBranchState& x, const HybridBranchState& y,
                 const std::vector<std::string>& observers,
                 const std::vector<std::string>& alphabet, int capacity, double tol) {
  StateVector dx = hybrid_to_dense(x, observers, alphabet, capacity);
  StateVector dy = hybrid_to_dense(y, observers, alphabet, capacity);
  return (dx.amplitudes() - dy.amplitudes()).cwiseAbs().maxCoeff() < tol;
}

}  // namespace

CaseReport multi_observer_case(const MultiObserverConfig& config) {
  if (config.amplitudes.empty()) throw ConfigError("amplitudes must be nonempty");
  const size_t n = config.amplitudes.size();
  CaseReport report;
  report.case_id = config.case_id;

  MatrixXc ident = MatrixXc::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  auto symbols = index_symbols(n, "");

  if (config.case_id == 1) {
    HybridBranchState s0 = HybridBranchState::initial(amplitude_state("S", config.amplitudes));
    ProjectorFamily a = ProjectorFamily::from_basis({"S"}, ident, symbols);
    HybridBranchState s1 = observe(s0, "S", a, "O1", symbols);
    size_t splits = s1.branches.size();
    HybridBranchState s2 = config.notebook ? read_notebook(s1, "O2", "O1")
                                           : observe(s1, "S", a, "O2", symbols);

    bool agree = true;
    for (const auto& br : s2.branches) {
      const auto& m1 = br.memories.at("O1").symbols;
      const auto& m2 = br.memories.at("O2").symbols;
      if (m1.empty() || m2.empty() || strip_tag(m1.back()) != strip_tag(m2.back())) agree = false;
    }
    report.assertions.push_back({"memory_agreement", agree});
    report.assertions.push_back({"no_second_split", s2.branches.size() == splits});
    bool weights_ok = true;
    for (const auto& br : s2.branches) {
      size_t j = std::stoul(strip_tag(br.memories.at("O1").symbols.back()));
      if (std::abs(br.weight() - std::norm(config.amplitudes[j])) > 1e-12) weights_ok = false;
    }
    report.assertions.push_back({"weights_are_square_amplitudes", weights_ok});
    report.final_state = std::move(s2);
    return report;
  }

  if (config.case_id == 2) {
    if (config.second_basis.rows() != static_cast<Eigen::Index>(n))
      throw ConfigError("second_basis dimension mismatch");
    HybridBranchState s0 = HybridBranchState::initial(amplitude_state("S", config.amplitudes));
    ProjectorFamily a = ProjectorFamily::from_basis({"S"}, ident, symbols);
    ProjectorFamily b = ProjectorFamily::from_basis({"S"}, config.second_basis,
                                                    index_symbols(n, "b"));
    HybridBranchState s1 = observe(s0, "S", a, "O1", symbols);
    HybridBranchState s2 = observe(s1, "S", b, "O2", index_symbols(n, "b"));

    size_t live_a = s1.branches.size();
    report.assertions.push_back(
        {"branch_count_na_nb", s2.branches.size() + s2.pruned_branches - s1.pruned_branches ==
                                   live_a * n});
    bool weights_ok = true;
    for (const auto& br : s2.branches) {
      size_t j = std::stoul(br.memories.at("O1").symbols.back());
      size_t k = std::stoul(br.memories.at("O2").symbols.back().substr(1));
      double expect = std::norm(config.amplitudes[j] *
                                std::conj(config.second_basis(static_cast<Eigen::Index>(j),
                                                              static_cast<Eigen::Index>(k))));
      // <phi_k^B | phi_j^A> = conj(basis(j,k)) for computational phi_j^A.
      if (std::abs(br.weight() - expect) > 1e-12) weights_ok = false;
    }
    report.assertions.push_back({"weights_overlap_squared", weights_ok});
    report.final_state = std::move(s2);
    return report;
  }

  if (config.case_id == 3) {
    // Entangled pair sum_j a_j |j, j>.
    Register r1 = Register::finite("S1", symbols);
    Register r2 = Register::finite("S2", symbols);
    VectorXc amps = VectorXc::Zero(static_cast<Eigen::Index>(n * n));
    for (size_t j = 0; j < n; ++j)
      amps[static_cast<Eigen::Index>(j * n + j)] = config.amplitudes[j];
    StateVector pair = StateVector::normalized({r1, r2}, std::move(amps));

    ProjectorFamily a = ProjectorFamily::from_basis({"S1"}, ident, symbols);
    ProjectorFamily b = ProjectorFamily::from_basis({"S2"}, ident, index_symbols(n, "b"));
    auto bsyms = index_symbols(n, "b");

    HybridBranchState s0 = HybridBranchState::initial(pair);
    HybridBranchState o1_first = observe(s0, "S1", a, "O1", symbols);
    HybridBranchState both = observe(o1_first, "S2", b, "O2", bsyms);
    HybridBranchState o2_first = observe(observe(s0, "S2", b, "O2", bsyms), "S1", a, "O1", symbols);

    size_t live = 0;
    for (size_t j = 0; j < n; ++j)
      if (std::norm(config.amplitudes[j]) > 1e-24) ++live;
    report.assertions.push_back({"n_branches_after_both", both.branches.size() == live});

    bool correlated = true;
    for (const auto& br : both.branches) {
      const auto& m1 = br.memories.at("O1").symbols.back();
      const auto& m2 = br.memories.at("O2").symbols.back();
      if ("b" + m1 != m2) correlated = false;
    }
    report.assertions.push_back({"memories_correlated", correlated});

    std::vector<std::string> observers{"O1", "O2"};
    std::vector<std::string> alphabet = symbols;
    for (const auto& s : bsyms) alphabet.push_back(s);
    report.assertions.push_back(
        {"order_swap_equal", dense_equal(both, o2_first, observers, alphabet, 2, 1e-12)});

    HybridBranchState repeat_after = observe(both, "S1", a, "O1", symbols);
    HybridBranchState o1_twice =
        observe(observe(o1_first, "S1", a, "O1", symbols), "S2", b, "O2", bsyms);
    report.assertions.push_back(
        {"repeat_insensitive_to_o2", dense_equal(repeat_after, o1_twice, observers, alphabet, 2, 1e-12)});

    auto marg_with = memory_marginal(both, "O1");
    auto marg_without = memory_marginal(o1_first, "O1");
    bool nosignal = marg_with.size() == marg_without.size();
    if (nosignal)
      for (const auto& [key, w] : marg_with)
        if (!marg_without.count(key) || std::abs(marg_without.at(key) - w) > 1e-12)
          nosignal = false;
    report.assertions.push_back({"no_signalling", nosignal});
    report.final_state = std::move(both);
    return report;
  }

  throw ConfigError("case must be 1, 2, or 3");
}

Register dense_memory_register(const std::string& observer_id, int alphabet_size, int capacity) {
  Eigen::Index dim = 1;
  for (int i = 0; i < capacity; ++i) dim *= alphabet_size + 1;
  Register r;
  r.name = "mem_" + observer_id;
  r.kind = RegisterKind::Memory;
  r.labels.reserve(dim);
  for (Eigen::Index i = 0; i < dim; ++i) r.labels.push_back(std::to_string(i));
  return r;
}

LinearOperator dense_observe_operator(const StateVector& state, const std::string& system_register,
                                      const ProjectorFamily& observable,
                                      const std::string& observer_id, int alphabet_size,
                                      int capacity) {
  const Register& sys = state.reg(system_register);
  Eigen::Index d = sys.dimension();
  Eigen::Index m_dim = 1;
  for (int i = 0; i < capacity; ++i) m_dim *= alphabet_size + 1;
  Eigen::Index unfull = m_dim / (alphabet_size + 1);  // states with room to push

  MatrixXc u = MatrixXc::Zero(d * m_dim, d * m_dim);
  for (size_t j = 0; j < observable.entries.size(); ++j) {
    // Shift permutation for outcome j: m -> m*(A+1) + (j+1) on unfull memories.
    std::vector<Eigen::Index> target(m_dim, -1);
    std::vector<bool> used(m_dim, false);
    for (Eigen::Index m = 0; m < unfull; ++m) {
      Eigen::Index t = m * (alphabet_size + 1) + static_cast<Eigen::Index>(j) + 1;
      target[m] = t;
      used[t] = true;
    }
    Eigen::Index spare = 0;
    for (Eigen::Index m = unfull; m < m_dim; ++m) {
      while (used[spare]) ++spare;
      target[m] = spare;
      used[spare] = true;
    }
    const MatrixXc& p = observable.entries[j].projector;
    for (Eigen::Index s1 = 0; s1 < d; ++s1)
      for (Eigen::Index s2 = 0; s2 < d; ++s2) {
        if (std::abs(p(s1, s2)) < 1e-15) continue;
        for (Eigen::Index m = 0; m < m_dim; ++m)
          u(s1 * m_dim + target[m], s2 * m_dim + m) += p(s1, s2);
      }
  }
  return LinearOperator::unitary({system_register, "mem_" + observer_id}, std::move(u));
}

StateVector hybrid_to_dense(const HybridBranchState& state,
                            const std::vector<std::string>& observers,
                            const std::vector<std::string>& alphabet, int capacity) {
  int a_size = static_cast<int>(alphabet.size());
  std::vector<Register> layout = state.system_registers;
  for (const auto& o : observers) layout.push_back(dense_memory_register(o, a_size, capacity));

  Eigen::Index dim = 1;
  for (const auto& r : layout) dim *= r.dimension();
  VectorXc total = VectorXc::Zero(dim);
  StateVector ref(layout, VectorXc::Unit(dim, 0));
  auto strides = ref.strides();

  for (const auto& br : state.branches) {
    // Fixed part of the flat index: classical labels and memory contents.
    Eigen::Index base = 0;
    for (size_t i = 0; i < state.system_registers.size(); ++i) {
      const Register& r = state.system_registers[i];
      auto it = br.pointer_labels.find(r.name);
      if (it == br.pointer_labels.end()) continue;
      Eigen::Index k = std::distance(r.labels.begin(),
                                     std::find(r.labels.begin(), r.labels.end(), it->second));
      base += strides[i] * k;
    }
    for (size_t o = 0; o < observers.size(); ++o) {
      Eigen::Index code = 0;
      auto it = br.memories.find(observers[o]);
      if (it != br.memories.end()) {
        if (static_cast<int>(it->second.symbols.size()) > capacity)
          throw SizeError("memory exceeds dense capacity");
        for (const auto& sym : it->second.symbols) {
          auto pos = std::find(alphabet.begin(), alphabet.end(), strip_tag(sym));
          if (pos == alphabet.end()) throw AlphabetError("symbol '" + sym + "' not in alphabet");
          code = code * (a_size + 1) + (std::distance(alphabet.begin(), pos) + 1);
        }
      }
      base += strides[state.system_registers.size() + o] * code;
    }

    if (!br.residual) {
      total[base] += br.amplitude;
      continue;
    }
    // Scatter the residual over its registers' positions in the full layout.
    const StateVector& res = *br.residual;
    std::vector<Eigen::Index> res_strides;
    for (const auto& rr : res.layout()) res_strides.push_back(strides[ref.register_index(rr.name)]);
    std::vector<Eigen::Index> dims;
    for (const auto& rr : res.layout()) dims.push_back(rr.dimension());
    for (Eigen::Index flat = 0; flat < res.dimension(); ++flat) {
      Eigen::Index rem = flat, off = 0;
      for (size_t i = dims.size(); i-- > 0;) {
        off += res_strides[i] * (rem % dims[i]);
        rem /= dims[i];
      }
      total[base + off] += br.amplitude * res.amplitudes()[flat];
    }
  }
  return StateVector(layout, std::move(total));
}

std::string case_report_to_json(const CaseReport& report) {
  nlohmann::ordered_json branches = nlohmann::ordered_json::array();
  for (const auto& br : report.final_state.branches) {
    nlohmann::ordered_json mem;
    for (const auto& [obs, seq] : br.memories) mem[obs] = seq.to_string();
    branches.push_back({{"memories", mem}, {"weight", br.weight()}});
  }
  nlohmann::ordered_json assertions = nlohmann::ordered_json::array();
  for (const auto& a : report.assertions)
    assertions.push_back({{"name", a.name}, {"pass", a.pass}});
  return nlohmann::ordered_json{
      {"case", report.case_id}, {"branches", branches}, {"assertions", assertions}}
      .dump(2);
}

}  // namespace manyworlds
