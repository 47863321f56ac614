#ifndef MANYWORLDS_QUANTUM_CORRELATION_HPP
#define MANYWORLDS_QUANTUM_CORRELATION_HPP

#include "manyworlds/classical_info.hpp"
#include "manyworlds/tensor.hpp"

namespace manyworlds {

struct SubsystemOverlap : std::runtime_error { using std::runtime_error::runtime_error; };
struct NullRelativeState : std::runtime_error { using std::runtime_error::runtime_error; };

/// Hermitian observable as labeled orthogonal projectors with eigenvalues
/// and multiplicities.
struct ProjectorEntry {
  std::string label;
  double eigenvalue = 0.0;
  MatrixXc projector;
  Eigen::Index multiplicity = 1;
};

struct ProjectorFamily {
  std::vector<std::string> registers;
  std::vector<ProjectorEntry> entries;

  /// Nondegenerate family from an orthonormal basis (columns); eigenvalue i
  /// for column i unless labels/eigenvalues are supplied.
  static ProjectorFamily from_basis(std::vector<std::string> registers, const MatrixXc& basis,
                                    std::vector<std::string> labels = {});
  /// Validates orthogonality, completeness and multiplicities (1e-10).
  void validate() const;
  Eigen::Index dimension() const { return entries.empty() ? 0 : entries[0].projector.rows(); }
};

struct Bipartition {
  std::vector<std::string> left;
  std::vector<std::string> right;
};

struct SchmidtDecomposition {
  Bipartition split;
  Eigen::VectorXd lambdas;          // Schmidt probabilities, descending
  std::vector<StateVector> left_states;
  std::vector<StateVector> right_states;
  bool degenerate = false;          // nearly equal lambdas flagged, not resolved
};

/// P_ij = Tr(rho P_i^A P_j^B) for disjoint observables A, B.
FiniteDistribution square_amplitude_joint(const StateVector& psi, const ProjectorFamily& a,
                                          const ProjectorFamily& b);

/// Square-amplitude distribution of a single observable on psi.
FiniteDistribution square_amplitude(const StateVector& psi, const ProjectorFamily& a);

/// Normalized <eta|Psi> on the left part; throws NullRelativeState on zero
/// overlap. eta lives on split.right.
StateVector relative_state(const StateVector& psi, const StateVector& eta,
                           const Bipartition& split);

SchmidtDecomposition schmidt(const StateVector& psi, const Bipartition& split);

/// Canonical correlation -sum lambda ln lambda (entanglement
/// entropy of the bipartition), in nats.
double canonical_correlation(const StateVector& psi, const Bipartition& split);

/// I_A = sum_i Tr(rho P_i) ln(Tr(rho P_i)/m_i).
double operator_information(const DensityMatrix& rho, const ProjectorFamily& a);

/// C_{A,B} = I_{A,B} - I_A - I_B; bounded by canonical_correlation (Donald).
double observable_correlation(const StateVector& psi, const ProjectorFamily& a,
                              const ProjectorFamily& b);

/// Differential informations (I_x, I_k) of a single-register grid state.
/// I_x + I_k <= ln(1/(pi e)) up to grid tolerance.
std::pair<double, double> info_uncertainty(const StateVector& psi);

/// I_rho = Tr(rho ln rho), computed from the spectrum.
double density_information(const DensityMatrix& rho);

/// rho' = sum_i P_i rho P_i; never increases I_rho.
DensityMatrix process1_channel(const DensityMatrix& rho, const ProjectorFamily& a);

}  // namespace manyworlds

#endif
