#include "manyworlds/quantum_correlation.hpp"

#include <algorithm>
#include <cmath>

namespace manyworlds {

namespace {

constexpr double kEigTol = 1e-10;
constexpr double kZero = 1e-300;

double safe_log(double x) { return std::log(std::max(x, kZero)); }

LinearOperator projector_op(const ProjectorFamily& fam, size_t i) {
  return LinearOperator::general(fam.registers, fam.entries[i].projector);
}

}  // namespace

ProjectorFamily ProjectorFamily::from_basis(std::vector<std::string> registers,
                                            const MatrixXc& basis,
                                            std::vector<std::string> labels) {
  if (basis.rows() != basis.cols()) throw ShapeError("basis matrix must be square");
  ProjectorFamily fam;
  fam.registers = std::move(registers);
  for (Eigen::Index i = 0; i < basis.cols(); ++i) {
    ProjectorEntry e;
    e.label = labels.empty() ? std::to_string(i) : labels[i];
    e.eigenvalue = static_cast<double>(i);
    e.projector = basis.col(i) * basis.col(i).adjoint();
    e.multiplicity = 1;
    fam.entries.push_back(std::move(e));
  }
  fam.validate();
  return fam;
}

void ProjectorFamily::validate() const {
  if (entries.empty()) throw ShapeError("projector family is empty");
  Eigen::Index d = entries[0].projector.rows();
  MatrixXc sum = MatrixXc::Zero(d, d);
  for (size_t i = 0; i < entries.size(); ++i) {
    const MatrixXc& pi = entries[i].projector;
    if (pi.rows() != d || pi.cols() != d) throw ShapeError("projector dimension mismatch");
    if ((pi * pi - pi).cwiseAbs().maxCoeff() > kEigTol)
      throw ShapeError("entry '" + entries[i].label + "' is not idempotent");
    double rank = pi.trace().real();
    if (std::abs(rank - static_cast<double>(entries[i].multiplicity)) > 1e-6)
      throw ShapeError("multiplicity does not match projector rank");
    for (size_t j = i + 1; j < entries.size(); ++j)
      if ((pi * entries[j].projector).cwiseAbs().maxCoeff() > kEigTol)
        throw ShapeError("projectors '" + entries[i].label + "' and '" + entries[j].label +
                         "' are not orthogonal");
    sum += pi;
  }
  if ((sum - MatrixXc::Identity(d, d)).cwiseAbs().maxCoeff() > kEigTol)
    throw ShapeError("projectors do not resolve the identity");
}

FiniteDistribution square_amplitude(const StateVector& psi, const ProjectorFamily& a) {
  Axis ax;
  ax.name = a.registers.front();
  Eigen::VectorXd probs(static_cast<Eigen::Index>(a.entries.size()));
  Eigen::VectorXd weights(probs.size());
  for (size_t i = 0; i < a.entries.size(); ++i) {
    ax.labels.push_back(a.entries[i].label);
    probs[static_cast<Eigen::Index>(i)] = apply_operator_raw(projector_op(a, i), psi).squaredNorm();
    weights[static_cast<Eigen::Index>(i)] = static_cast<double>(a.entries[i].multiplicity);
  }
  probs /= probs.sum();
  return FiniteDistribution({ax}, std::move(probs), {weights});
}

FiniteDistribution square_amplitude_joint(const StateVector& psi, const ProjectorFamily& a,
                                          const ProjectorFamily& b) {
  for (const auto& ra : a.registers)
    for (const auto& rb : b.registers)
      if (ra == rb) throw SubsystemOverlap("observables share register '" + ra + "'");

  Axis ax{a.registers.front(), {}};
  Axis bx{b.registers.front(), {}};
  Eigen::VectorXd wa(static_cast<Eigen::Index>(a.entries.size()));
  Eigen::VectorXd wb(static_cast<Eigen::Index>(b.entries.size()));
  for (size_t i = 0; i < a.entries.size(); ++i) {
    ax.labels.push_back(a.entries[i].label);
    wa[static_cast<Eigen::Index>(i)] = static_cast<double>(a.entries[i].multiplicity);
  }
  for (size_t j = 0; j < b.entries.size(); ++j) {
    bx.labels.push_back(b.entries[j].label);
    wb[static_cast<Eigen::Index>(j)] = static_cast<double>(b.entries[j].multiplicity);
  }

  Eigen::VectorXd probs(ax.size() * bx.size());
  for (size_t i = 0; i < a.entries.size(); ++i) {
    VectorXc pa = apply_operator_raw(projector_op(a, i), psi);
    for (size_t j = 0; j < b.entries.size(); ++j) {
      double pij = apply_operator_raw(projector_op(b, j), psi, pa).squaredNorm();
      probs[static_cast<Eigen::Index>(i) * bx.size() + static_cast<Eigen::Index>(j)] = pij;
    }
  }
  probs /= probs.sum();
  return FiniteDistribution({ax, bx}, std::move(probs), {wa, wb});
}

StateVector relative_state(const StateVector& psi, const StateVector& eta,
                           const Bipartition& split) {
  if (eta.layout().size() != split.right.size())
    throw ShapeError("eta layout does not match right part of bipartition");
  for (size_t i = 0; i < split.right.size(); ++i)
    if (eta.layout()[i].name != split.right[i])
      throw ShapeError("eta register order must match bipartition right part");

  auto l_off = detail::subset_offsets(psi, split.left);
  auto r_off = detail::subset_offsets(psi, split.right);
  if (static_cast<Eigen::Index>(r_off.size()) != eta.dimension())
    throw ShapeError("eta dimension mismatch");

  VectorXc phi = VectorXc::Zero(static_cast<Eigen::Index>(l_off.size()));
  const VectorXc& a = psi.amplitudes();
  for (size_t i = 0; i < l_off.size(); ++i)
    for (size_t j = 0; j < r_off.size(); ++j)
      phi[static_cast<Eigen::Index>(i)] +=
          std::conj(eta.amplitudes()[static_cast<Eigen::Index>(j)]) * a[l_off[i] + r_off[j]];

  if (phi.norm() < 1e-12)
    throw NullRelativeState("zero overlap: relative-state normalization undefined");
  return StateVector::normalized(detail::subset_registers(psi, split.left), std::move(phi));
}

SchmidtDecomposition schmidt(const StateVector& psi, const Bipartition& split) {
  if (split.left.size() + split.right.size() != psi.layout().size())
    throw ShapeError("bipartition must cover the layout");
  auto l_off = detail::subset_offsets(psi, split.left);
  auto r_off = detail::subset_offsets(psi, split.right);
  MatrixXc m(static_cast<Eigen::Index>(l_off.size()), static_cast<Eigen::Index>(r_off.size()));
  for (size_t i = 0; i < l_off.size(); ++i)
    for (size_t j = 0; j < r_off.size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          psi.amplitudes()[l_off[i] + r_off[j]];

  Eigen::JacobiSVD<MatrixXc> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  auto lregs = detail::subset_registers(psi, split.left);
  auto rregs = detail::subset_registers(psi, split.right);

  SchmidtDecomposition out;
  out.split = split;
  std::vector<double> lambdas;
  for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
    double s = svd.singularValues()[k];
    if (s * s < 1e-14) continue;
    lambdas.push_back(s * s);
    VectorXc u = svd.matrixU().col(k);
    VectorXc v = svd.matrixV().col(k).conjugate();
    // Real-positive-leading orientation on the left factor; the right factor
    // absorbs the conjugate phase so the reconstruction is unchanged.
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (std::abs(u[i]) > 1e-12) {
        Complex ph = std::conj(u[i]) / std::abs(u[i]);
        u *= ph;
        v *= std::conj(ph);
        break;
      }
    }
    out.left_states.push_back(StateVector(lregs, std::move(u)));
    out.right_states.push_back(StateVector(rregs, std::move(v)));
  }
  out.lambdas = Eigen::Map<Eigen::VectorXd>(lambdas.data(), lambdas.size());
  for (size_t k = 0; k + 1 < lambdas.size(); ++k)
    if (std::abs(lambdas[k] - lambdas[k + 1]) < 1e-8) out.degenerate = true;
  return out;
}

double canonical_correlation(const StateVector& psi, const Bipartition& split) {
  auto dec = schmidt(psi, split);
  double c = 0.0;
  for (Eigen::Index k = 0; k < dec.lambdas.size(); ++k) c -= xlogx(dec.lambdas[k]);
  return c;
}

double operator_information(const DensityMatrix& rho, const ProjectorFamily& a) {
  if (a.dimension() != rho.dimension())
    throw ShapeError("observable dimension does not match density matrix");
  double info = 0.0;
  for (const auto& e : a.entries) {
    double p = (rho.matrix * e.projector).trace().real();
    if (p >= kZero) info += p * std::log(p / static_cast<double>(e.multiplicity));
  }
  return info;
}

double observable_correlation(const StateVector& psi, const ProjectorFamily& a,
                              const ProjectorFamily& b) {
  FiniteDistribution joint = square_amplitude_joint(psi, a, b);
  double i_ab = information(joint);
  DensityMatrix rho_a = reduced_density(psi, a.registers);
  DensityMatrix rho_b = reduced_density(psi, b.registers);
  return i_ab - operator_information(rho_a, a) - operator_information(rho_b, b);
}

std::pair<double, double> info_uncertainty(const StateVector& psi) {
  if (psi.layout().size() != 1 || psi.layout()[0].kind != RegisterKind::Grid)
    throw KindError("info_uncertainty expects a single grid register");
  const Register& g = psi.layout()[0];
  Eigen::Index n = g.dimension();

  auto differential_info = [](const VectorXc& amps, const std::vector<double>& centers,
                              double delta, bool check_edges) {
    Eigen::Index n = amps.size();
    double mean = 0.0, m2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double p = std::norm(amps[i]);
      mean += p * centers[i];
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      double p = std::norm(amps[i]);
      m2 += p * (centers[i] - mean) * (centers[i] - mean);
    }
    double sigma = std::sqrt(m2);
    if (check_edges &&
        (mean - 6.0 * sigma < centers.front() || mean + 6.0 * sigma > centers.back()))
      throw GridTooSmall("wave packet is closer than 6 sigma to the grid edge");
    double info = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double p = std::norm(amps[i]);
      if (p >= kZero) info += p * std::log(p / delta);
    }
    return info;
  };

  double ix = differential_info(psi.amplitudes(), g.cell_centers, g.cell_width, true);
  StateVector dual = fourier_dual(psi, g.name);
  const Register& gk = dual.layout()[0];
  double ik = differential_info(dual.amplitudes(), gk.cell_centers, gk.cell_width, false);
  (void)n;
  return {ix, ik};
}

double density_information(const DensityMatrix& rho) {
  Eigen::VectorXd ev = rho.spectrum();
  double info = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) info += xlogx(ev[i]);
  return info;
}

DensityMatrix process1_channel(const DensityMatrix& rho, const ProjectorFamily& a) {
  if (a.dimension() != rho.dimension())
    throw ShapeError("observable dimension does not match density matrix");
  MatrixXc out = MatrixXc::Zero(rho.dimension(), rho.dimension());
  for (const auto& e : a.entries) out += e.projector * rho.matrix * e.projector;
  return DensityMatrix{rho.registers, std::move(out)};
}

}  // namespace manyworlds
