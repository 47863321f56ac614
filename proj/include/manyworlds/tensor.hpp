#ifndef MANYWORLDS_TENSOR_HPP
#define MANYWORLDS_TENSOR_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace manyworlds {

using Complex = std::complex<double>;
using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;

// Error types thrown by the in-memory API.
struct NameCollision : std::runtime_error { using std::runtime_error::runtime_error; };
struct ShapeError : std::runtime_error { using std::runtime_error::runtime_error; };
struct KindError : std::runtime_error { using std::runtime_error::runtime_error; };
struct UseOuterProductInstead : std::runtime_error { using std::runtime_error::runtime_error; };
struct GridTooSmall : std::runtime_error { using std::runtime_error::runtime_error; };

enum class RegisterKind { Finite, Grid, Memory };

/// One labeled factor of the composite Hilbert space.
/// Grid registers carry cell-center labels and a cell width.
struct Register {
  std::string name;
  RegisterKind kind = RegisterKind::Finite;
  std::vector<std::string> labels;
  std::vector<double> cell_centers;  // grid kind only
  double cell_width = 0.0;           // grid kind only

  Eigen::Index dimension() const { return static_cast<Eigen::Index>(labels.size()); }

  static Register finite(std::string name, std::vector<std::string> labels);
  /// Uniform grid of n cells of width delta, centered at the origin.
  static Register grid(std::string name, Eigen::Index n, double delta);
};

/// Dense state over an ordered product of registers. Amplitude indexing is
/// row-major over the layout order (last register varies fastest).
class StateVector {
 public:
  StateVector() = default;
  StateVector(std::vector<Register> layout, VectorXc amplitudes);

  /// Normalizes and rotates the global phase so the first nonzero
  /// amplitude (row-major) is real positive.
  static StateVector normalized(std::vector<Register> layout, VectorXc amplitudes);

  /// Basis state |label_0, label_1, ...> given one label index per register.
  static StateVector basis(std::vector<Register> layout, const std::vector<Eigen::Index>& labels);

  const std::vector<Register>& layout() const { return layout_; }
  const VectorXc& amplitudes() const { return amps_; }
  Eigen::Index dimension() const { return amps_.size(); }
  double norm() const { return amps_.norm(); }

  Eigen::Index register_index(const std::string& name) const;
  const Register& reg(const std::string& name) const;

  /// Strides of the row-major layout, one per register.
  std::vector<Eigen::Index> strides() const;

  /// Copy with the global phase fixed to the real-positive-leading convention.
  StateVector canonical() const;

  bool has_register(const std::string& name) const;

 private:
  std::vector<Register> layout_;
  VectorXc amps_;
};

/// Operator acting on a subset of registers, identity elsewhere.
struct LinearOperator {
  std::vector<std::string> targets;
  MatrixXc matrix;  // square, over the product of target dimensions
  bool unitary_flag = false;

  static LinearOperator unitary(std::vector<std::string> targets, MatrixXc m);
  /// For operators unitary by construction (Fourier kernels, diagonal
  /// phases): skips the O(n^3) unitarity check.
  static LinearOperator unitary_unchecked(std::vector<std::string> targets, MatrixXc m);
  static LinearOperator general(std::vector<std::string> targets, MatrixXc m);
};

struct DensityMatrix {
  std::vector<Register> registers;
  MatrixXc matrix;

  Eigen::Index dimension() const { return matrix.rows(); }
  /// Eigenvalues in descending order, tiny negatives clamped to zero.
  Eigen::VectorXd spectrum() const;
};

StateVector tensor_product(const std::vector<StateVector>& factors);

StateVector apply_operator(const LinearOperator& op, const StateVector& state);

/// Raw (possibly unnormalized) amplitudes after applying op; used for
/// projections where the lost norm is the quantity of interest.
VectorXc apply_operator_raw(const LinearOperator& op, const StateVector& state);

/// Same, but on caller-supplied raw amplitudes over layout_ref's layout.
VectorXc apply_operator_raw(const LinearOperator& op, const StateVector& layout_ref,
                            const VectorXc& raw);

DensityMatrix reduced_density(const StateVector& state, const std::vector<std::string>& keep);

DensityMatrix outer_product(const StateVector& state);

/// Unitary discrete Fourier transform of a grid register, physicist's
/// convention k = 2*pi*frequency. The output register carries the dual
/// cell width 2*pi/(n*delta). Applying it twice is the parity map.
StateVector fourier_dual(const StateVector& state, const std::string& grid_register);

namespace detail {
/// Flat row-major index from a per-register multi-index.
Eigen::Index flat_index(const std::vector<Eigen::Index>& strides,
                        const std::vector<Eigen::Index>& multi);
/// Enumerates the flat offsets of a register subset: offsets[i] is the
/// contribution of the i-th joint index of `subset` (row-major within the
/// subset, in the order given).
std::vector<Eigen::Index> subset_offsets(const StateVector& state,
                                         const std::vector<std::string>& subset);
/// Offsets of the complement of `subset`, in layout order.
std::vector<Eigen::Index> complement_offsets(const StateVector& state,
                                             const std::vector<std::string>& subset);
std::vector<Register> subset_registers(const StateVector& state,
                                       const std::vector<std::string>& subset);
std::vector<Register> complement_registers(const StateVector& state,
                                           const std::vector<std::string>& subset);
}  // namespace detail

}  // namespace manyworlds

#endif
