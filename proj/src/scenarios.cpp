#include "manyworlds/scenarios.hpp"

#include <algorithm>
#include <cmath>

namespace manyworlds {

namespace {

constexpr double kAmpCutoff = 1e-12;

// Fills the unspecified columns of a partial isometry so the result is
// unitary (Gram-Schmidt against the fixed columns).
MatrixXc complete_unitary(MatrixXc m, const std::vector<bool>& specified) {
  Eigen::Index d = m.rows();
  std::vector<Eigen::Index> fixed;
  for (Eigen::Index c = 0; c < d; ++c)
    if (specified[static_cast<size_t>(c)]) fixed.push_back(c);
  for (Eigen::Index c = 0; c < d; ++c) {
    if (specified[static_cast<size_t>(c)]) continue;
    VectorXc v;
    for (Eigen::Index seed = 0; seed < d; ++seed) {
      v = VectorXc::Unit(d, seed);
      for (Eigen::Index f : fixed) v -= m.col(f).dot(v) * m.col(f);
      if (v.norm() > 1e-6) break;
    }
    m.col(c) = v / v.norm();
    fixed.push_back(c);
  }
  return m;
}

// Beam-splitter interaction on (photon, mirror), basis order
// {H0, Hp, V0, Vp}. sign=-1 is the M1 convention, sign=+1 the M3 one.
MatrixXc beam_splitter(double alpha, int sign) {
  double beta = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
  double s = 1.0 / std::sqrt(2.0);
  MatrixXc m = MatrixXc::Zero(4, 4);
  std::vector<bool> specified(4, false);
  // |H,0> -> (|H,0> + sign * |V, alpha 0 + beta perp>)/sqrt(2)
  m(0, 0) = s;
  m(2, 0) = sign * s * alpha;
  m(3, 0) = sign * s * beta;
  specified[0] = true;
  if (sign > 0) {
    // |V,0> -> (|V,0> - |H, alpha 0 + beta perp>)/sqrt(2)
    m(2, 2) = s;
    m(0, 2) = -s * alpha;
    m(1, 2) = -s * beta;
    specified[2] = true;
  }
  return complete_unitary(std::move(m), specified);
}

Eigen::Index branch_flat_index(const StateVector& ref, const Branch& b) {
  auto strides = ref.strides();
  Eigen::Index idx = 0;
  for (size_t i = 0; i < ref.layout().size(); ++i) {
    const Register& r = ref.layout()[i];
    const std::string& lab = b.label.at(r.name);
    auto pos = std::find(r.labels.begin(), r.labels.end(), lab);
    idx += strides[i] * std::distance(r.labels.begin(), pos);
  }
  return idx;
}

// Momentum grid values matching the Fourier kernel convention.
std::vector<double> dual_wavenumbers(const Register& g) {
  Eigen::Index n = g.dimension();
  double dk = 2.0 * M_PI / (static_cast<double>(n) * g.cell_width);
  std::vector<double> ks(static_cast<size_t>(n));
  for (Eigen::Index m = 0; m < n; ++m)
    ks[static_cast<size_t>(m)] = (static_cast<double>(m) - static_cast<double>(n) / 2.0) * dk;
  return ks;
}

MatrixXc fourier_kernel(const Register& g) {
  Eigen::Index n = g.dimension();
  auto ks = dual_wavenumbers(g);
  MatrixXc f(n, n);
  for (Eigen::Index m = 0; m < n; ++m)
    for (Eigen::Index j = 0; j < n; ++j)
      f(m, j) = std::exp(Complex(0.0, -ks[static_cast<size_t>(m)] * g.cell_centers[j])) /
                std::sqrt(static_cast<double>(n));
  return f;
}

FiniteDistribution probability_distribution(const StateVector& psi) {
  std::vector<Axis> axes;
  for (const auto& r : psi.layout()) axes.push_back(Axis{r.name, r.labels});
  Eigen::VectorXd probs = psi.amplitudes().cwiseAbs2();
  probs /= probs.sum();
  return FiniteDistribution(std::move(axes), std::move(probs));
}

}  // namespace

double mirror_overlap(double a, double k) {
  if (a <= 0.0) throw ParamError("packet width must be positive");
  if (k < 0.0) throw ParamError("wavenumber must be nonnegative");
  return std::exp(-a * a * k * k / 4.0);
}

MziParams MziParams::general_from_packet(double a, double k, double theta) {
  MziParams p;
  p.mode = MziMode::General;
  p.alpha = mirror_overlap(a, k);
  p.theta = theta;
  return p;
}

MziResult mzi_run(const MziParams& params) {
  double alpha;
  switch (params.mode) {
    case MziMode::PI: alpha = 1.0; break;
    case MziMode::PS: alpha = 0.0; break;
    case MziMode::General: alpha = params.alpha; break;
    default: throw ParamError("unknown mirror mode");
  }
  if (params.dp_detector) alpha = 0.0;  // momentum detector resolves the recoil
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParamError("alpha must lie in [0, 1]");
  if (!std::isfinite(params.theta)) throw ParamError("theta must be finite");

  std::vector<Register> regs = {
      Register::finite("photon", {"H", "V"}), Register::finite("M1", {"0", "p"}),
      Register::finite("M3", {"0", "p"}), Register::finite("DH", {"0", "1"}),
      Register::finite("DV", {"0", "1"})};
  StateVector psi = StateVector::basis(regs, {0, 0, 0, 0, 0});

  MatrixXc phase = MatrixXc::Zero(2, 2);
  phase(0, 0) = std::exp(Complex(0.0, params.theta));
  phase(1, 1) = 1.0;
  MatrixXc u0 = MatrixXc::Zero(2, 2);
  u0(1, 0) = -1.0;  // |H> -> -|V>
  u0(0, 1) = -1.0;  // |V> -> -|H>
  MatrixXc cnot(4, 4);
  cnot << 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1;

  struct Step {
    std::string name;
    std::vector<LinearOperator> ops;
  };
  std::vector<Step> steps = {
      {"M1", {LinearOperator::unitary({"photon", "M1"}, beam_splitter(alpha, -1))}},
      {"sample", {LinearOperator::unitary({"photon"}, phase)}},
      {"mirrors", {LinearOperator::unitary({"photon"}, u0)}},
      {"M3", {LinearOperator::unitary({"photon", "M3"}, beam_splitter(alpha, +1))}},
      {"detect",
       {LinearOperator::unitary({"photon", "DH"}, cnot),
        LinearOperator::unitary({"photon", "DV"},
                                [&] {
                                  MatrixXc m = MatrixXc::Identity(4, 4);
                                  m(2, 2) = m(3, 3) = 0;
                                  m(3, 2) = m(2, 3) = 1;
                                  return m;
                                }())}}};

  std::vector<std::string> all_names;
  for (const auto& r : regs) all_names.push_back(r.name);

  BranchSet prev = decompose(psi, all_names);
  WorldTree tree = WorldTree::root("source", prev.branches[0].label_string());

  for (const auto& step : steps) {
    // Per-parent evolution gives each child's amplitude contributions.
    std::map<std::string, std::vector<ParentLink>> parents;
    std::vector<VectorXc> evolved;
    for (const auto& b : prev.branches) {
      VectorXc v = VectorXc::Zero(psi.dimension());
      v[branch_flat_index(psi, b)] = b.amplitude;
      for (const auto& op : step.ops) v = apply_operator_raw(op, psi, v);
      evolved.push_back(std::move(v));
    }
    for (const auto& op : step.ops) psi = apply_operator(op, psi);
    BranchSet next = decompose(psi, all_names);
    for (const auto& child : next.branches) {
      Eigen::Index idx = branch_flat_index(psi, child);
      std::vector<ParentLink> links;
      for (size_t i = 0; i < evolved.size(); ++i)
        if (std::abs(evolved[i][idx]) > kAmpCutoff)
          links.push_back({std::to_string(i), evolved[i][idx]});
      parents[child.label_string()] = std::move(links);
    }
    tree = extend_tree(std::move(tree), step.name, parents, next);
    prev = std::move(next);
  }

  MziResult res;
  res.params = params;
  res.effective_alpha = alpha;
  res.final_state = psi;
  res.branches = std::move(prev);
  res.tree = std::move(tree);
  for (const auto& b : res.branches.branches) {
    if (b.label.at("DH") == "1") res.dh_weight += b.weight();
    if (b.label.at("DV") == "1") res.dv_weight += b.weight();
  }
  return res;
}

ApproxMeasurementReport rebase_approximate_measurement(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParamError("alpha must lie in [0, 1]");
  std::vector<Register> regs = {Register::finite("photon", {"H", "V"}),
                                Register::finite("M1", {"0", "p"})};
  StateVector psi = apply_operator(
      LinearOperator::unitary({"photon", "M1"}, beam_splitter(alpha, -1)),
      StateVector::basis(regs, {0, 0}));

  double s = 1.0 / std::sqrt(2.0);
  MatrixXc plus_minus(2, 2);
  plus_minus << s, s, s, -s;  // columns phi+, phi-
  MatrixXc psi12(2, 2);
  psi12 << s, s, -s, s;  // columns psi1 = (0 - p)/sqrt2, psi2 = (0 + p)/sqrt2

  ApproxMeasurementReport rep;
  rep.alpha = alpha;
  rep.rebased = rebase(psi, {{"photon", plus_minus}, {"M1", psi12}},
                       {{"photon", {"+", "-"}}, {"M1", {"psi1", "psi2"}}});

  double w[2][2] = {{0, 0}, {0, 0}};
  for (const auto& b : rep.rebased.branches) {
    int i = b.label.at("photon") == "+" ? 0 : 1;
    int j = b.label.at("M1") == "psi1" ? 0 : 1;
    w[i][j] = b.weight();
  }
  double wp = w[0][0] + w[0][1], wm = w[1][0] + w[1][1];
  rep.fidelity_plus = wp > 0 ? w[0][0] / wp : 0.0;
  rep.fidelity_minus = wm > 0 ? w[1][1] / wm : 0.0;

  Eigen::VectorXd probs(4);
  probs << w[0][0], w[0][1], w[1][0], w[1][1];
  FiniteDistribution joint({Axis{"photon", {"+", "-"}}, Axis{"M1", {"psi1", "psi2"}}},
                           std::move(probs));
  rep.correlation = correlation(joint, {{"photon"}, {"M1"}});
  return rep;
}

VonNeumannResult von_neumann_run(const PointerParams& params) {
  Eigen::Index nq = params.phi.size(), nr = params.eta.size();
  if (nq < 1 || nr < 1) throw ShapeError("empty grid");
  Register q = Register::grid("q", nq, params.dq);
  Register r = Register::grid("r", nr, params.dr);

  double steps_per_cell = params.dq * params.t / params.dr;
  if (std::abs(steps_per_cell - std::round(steps_per_cell)) > 1e-9)
    throw AlignmentError("q t must shift the pointer by whole cells");
  long long s = std::llround(steps_per_cell);

  VectorXc phi = params.phi / params.phi.norm();
  VectorXc eta = params.eta / params.eta.norm();

  auto state_at = [&](long long cells_per_q) {
    VectorXc amps(nq * nr);
    for (Eigen::Index j = 0; j < nq; ++j) {
      long long shift = (j - nq / 2) * cells_per_q;  // q_j t / dr, periodic
      for (Eigen::Index i = 0; i < nr; ++i) {
        long long src = ((i - shift) % nr + nr) % nr;
        amps[j * nr + i] = phi[j] * eta[src];
      }
    }
    return StateVector({q, r}, std::move(amps));
  };

  auto stats = [&](const StateVector& st) {
    FiniteDistribution d = probability_distribution(st);
    double c = correlation(d, {{"q"}, {"r"}});
    double iq = information(marginal(d, {"q"}));
    return std::pair<double, double>(c, iq);
  };

  VonNeumannResult res;
  StateVector initial = state_at(0);
  auto [c0, iq0] = stats(initial);
  res.c_initial = c0;
  res.i_q_initial = iq0;

  res.state = state_at(s);
  auto [ct, iqt] = stats(res.state);
  res.c_final = ct;
  res.i_q_final = iqt;

  res.i_q_max_drift = std::abs(iqt - iq0);
  long long stride = std::max<long long>(1, s / 8);
  for (long long m = stride; m < s; m += stride) {
    auto [cm, iqm] = stats(state_at(m));
    (void)cm;
    res.i_q_max_drift = std::max(res.i_q_max_drift, std::abs(iqm - iq0));
  }
  res.measurement_generated =
      s > 0 && std::abs(res.c_final + res.i_q_initial) < 1e-6 && res.i_q_max_drift < 1e-9;
  return res;
}

SternGerlachResult stern_gerlach_run(const SternGerlachParams& params) {
  if (std::abs(std::norm(params.c1) + std::norm(params.c2) - 1.0) > 1e-12)
    throw ParamError("|c1|^2 + |c2|^2 must be 1");
  Register spin = Register::finite("spin", {"u", "d"});
  Register z = Register::grid("z", params.n, params.dz);

  VectorXc packet(params.n);
  for (Eigen::Index j = 0; j < params.n; ++j) {
    double x = z.cell_centers[j];
    packet[j] = std::exp(-x * x / (4.0 * params.sigma * params.sigma));
  }
  packet /= packet.norm();
  VectorXc spin_amps(2);
  spin_amps << params.c1, params.c2;
  StateVector psi0 = tensor_product(
      {StateVector({spin}, spin_amps), StateVector({z}, packet)});

  // Coupling: spin-dependent phases exp(-/+ i (phase0 + z phase1)).
  Eigen::Index dim = 2 * params.n;
  MatrixXc coupling = MatrixXc::Zero(dim, dim);
  for (Eigen::Index j = 0; j < params.n; ++j) {
    double ph = params.phase0 + z.cell_centers[j] * params.phase1;
    coupling(j, j) = std::exp(Complex(0.0, -ph));
    coupling(params.n + j, params.n + j) = std::exp(Complex(0.0, ph));
  }
  LinearOperator couple = LinearOperator::unitary_unchecked({"spin", "z"}, std::move(coupling));

  MatrixXc f = fourier_kernel(z);
  auto ks = dual_wavenumbers(z);
  MatrixXc d = MatrixXc::Zero(params.n, params.n);
  for (Eigen::Index m = 0; m < params.n; ++m)
    d(m, m) = std::exp(Complex(0.0, -ks[static_cast<size_t>(m)] * ks[static_cast<size_t>(m)] *
                                        params.flight_time / 2.0));
  auto z_op = [&](const MatrixXc& m) { return LinearOperator::unitary_unchecked({"z"}, m); };
  auto fly = [&](StateVector s, bool reverse) {
    s = apply_operator(z_op(f), std::move(s));
    s = apply_operator(z_op(reverse ? d.adjoint() : MatrixXc(d)), std::move(s));
    return apply_operator(z_op(f.adjoint()), std::move(s));
  };

  StateVector psi = fly(apply_operator(couple, psi0), false);

  SternGerlachResult res;

  auto conditional_momentum = [&](Eigen::Index spin_index) {
    if ((spin_index == 0 ? std::norm(params.c1) : std::norm(params.c2)) < 1e-24) return 0.0;
    StateVector eta({spin}, VectorXc::Unit(2, spin_index));
    StateVector cond = relative_state(psi, eta, Bipartition{{"z"}, {"spin"}});
    // Edge check in position space before trusting momentum statistics.
    double mean = 0.0, m2 = 0.0;
    for (Eigen::Index j = 0; j < params.n; ++j)
      mean += std::norm(cond.amplitudes()[j]) * z.cell_centers[j];
    for (Eigen::Index j = 0; j < params.n; ++j) {
      double dx = z.cell_centers[j] - mean;
      m2 += std::norm(cond.amplitudes()[j]) * dx * dx;
    }
    double sd = std::sqrt(m2);
    if (mean - 6 * sd < z.cell_centers.front() || mean + 6 * sd > z.cell_centers.back())
      throw GridTooSmall("wave packet is closer than 6 sigma to the grid edge");
    VectorXc mom = f * cond.amplitudes();
    double k_mean = 0.0;
    for (Eigen::Index m = 0; m < params.n; ++m)
      k_mean += std::norm(mom[m]) * ks[static_cast<size_t>(m)];
    return k_mean;
  };
  res.momentum_up = conditional_momentum(0);
  res.momentum_down = conditional_momentum(1);
  res.correlation = canonical_correlation(psi, Bipartition{{"spin"}, {"z"}});

  if (params.recombine) {
    LinearOperator uncouple = LinearOperator::unitary_unchecked({"spin", "z"}, [&] {
      MatrixXc m = MatrixXc::Zero(dim, dim);
      for (Eigen::Index j = 0; j < params.n; ++j) {
        double ph = params.phase0 + z.cell_centers[j] * params.phase1;
        m(j, j) = std::exp(Complex(0.0, ph));
        m(params.n + j, params.n + j) = std::exp(Complex(0.0, -ph));
      }
      return m;
    }());
    StateVector back = apply_operator(uncouple, fly(psi, true));
    res.recombination_fidelity = std::abs(psi0.amplitudes().dot(back.amplitudes()));
    res.state = std::move(back);
  } else {
    res.state = std::move(psi);
  }
  return res;
}

GeigerResult geiger_run(const GeigerParams& params) {
  if (params.n_atoms < 1 || params.n_atoms > 20)
    throw SizeError("atom count must be in [1, 20]");
  if (std::abs(std::norm(params.a) + std::norm(params.b) - 1.0) > 1e-12)
    throw ParamError("|a|^2 + |b|^2 must be 1");

  std::vector<Register> regs = {Register::finite("particle", {"out", "in"})};
  for (int i = 0; i < params.n_atoms; ++i)
    regs.push_back(Register::finite("g" + std::to_string(i), {"0", "1"}));

  VectorXc pamps(2);
  pamps << params.a, params.b;
  std::vector<StateVector> factors = {StateVector({regs[0]}, pamps)};
  for (int i = 0; i < params.n_atoms; ++i)
    factors.push_back(StateVector({regs[static_cast<size_t>(i) + 1]}, VectorXc::Unit(2, 0)));
  StateVector psi = tensor_product(factors);

  double angle = params.cascade * M_PI / 2.0;
  MatrixXc ctrl_rot = MatrixXc::Identity(4, 4);
  ctrl_rot(2, 2) = std::cos(angle);
  ctrl_rot(3, 2) = std::sin(angle);
  ctrl_rot(2, 3) = -std::sin(angle);
  ctrl_rot(3, 3) = std::cos(angle);

  psi = apply_operator(LinearOperator::unitary({"particle", "g0"}, ctrl_rot), psi);
  for (int i = 1; i < params.n_atoms; ++i)
    psi = apply_operator(
        LinearOperator::unitary({"g" + std::to_string(i - 1), "g" + std::to_string(i)}, ctrl_rot),
        psi);

  std::vector<std::string> names;
  for (const auto& r : regs) names.push_back(r.name);
  BranchSet branches = decompose(psi, names);

  GeigerResult res;
  res.count_weights.assign(static_cast<size_t>(params.n_atoms) + 1, 0.0);
  for (const auto& b : branches.branches) {
    int count = 0;
    for (int i = 0; i < params.n_atoms; ++i)
      if (b.label.at("g" + std::to_string(i)) == "1") ++count;
    res.count_weights[static_cast<size_t>(count)] += b.weight();
  }
  for (int c = 0; c <= params.n_atoms; ++c) {
    double w = res.count_weights[static_cast<size_t>(c)];
    if (2 * c < params.n_atoms)
      res.low_group += w;
    else
      res.high_group += w;
    if (4 * c > params.n_atoms && 4 * c < 3 * params.n_atoms) res.medium_band_mass += w;
  }
  return res;
}

}  // namespace manyworlds
