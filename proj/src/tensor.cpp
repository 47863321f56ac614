#include "manyworlds/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace manyworlds {

namespace {

constexpr double kNormTol = 1e-12;

void check_unique_labels(const Register& r) {
  std::set<std::string> seen(r.labels.begin(), r.labels.end());
  if (seen.size() != r.labels.size())
    throw NameCollision("duplicate basis label in register '" + r.name + "'");
}

}  // namespace

Register Register::finite(std::string name, std::vector<std::string> labels) {
  Register r;
  r.name = std::move(name);
  r.kind = RegisterKind::Finite;
  r.labels = std::move(labels);
  check_unique_labels(r);
  return r;
}

Register Register::grid(std::string name, Eigen::Index n, double delta) {
  if (delta <= 0.0) throw KindError("grid cell width must be positive");
  Register r;
  r.name = std::move(name);
  r.kind = RegisterKind::Grid;
  r.cell_width = delta;
  r.labels.reserve(n);
  r.cell_centers.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double x = (static_cast<double>(i) - static_cast<double>(n) / 2.0) * delta;
    r.cell_centers.push_back(x);
    r.labels.push_back(std::to_string(i));
  }
  return r;
}

StateVector::StateVector(std::vector<Register> layout, VectorXc amplitudes)
    : layout_(std::move(layout)), amps_(std::move(amplitudes)) {
  Eigen::Index dim = 1;
  std::set<std::string> names;
  for (const auto& r : layout_) {
    if (!names.insert(r.name).second)
      throw NameCollision("duplicate register name '" + r.name + "'");
    dim *= r.dimension();
  }
  if (dim != amps_.size())
    throw ShapeError("amplitude count does not match layout dimension");
  if (std::abs(amps_.norm() - 1.0) > kNormTol)
    throw ShapeError("state vector is not normalized");
}

StateVector StateVector::normalized(std::vector<Register> layout, VectorXc amplitudes) {
  double n = amplitudes.norm();
  if (n == 0.0) throw ShapeError("cannot normalize the zero vector");
  amplitudes /= n;
  for (Eigen::Index i = 0; i < amplitudes.size(); ++i) {
    if (std::abs(amplitudes[i]) > 1e-14) {
      amplitudes *= std::conj(amplitudes[i]) / std::abs(amplitudes[i]);
      break;
    }
  }
  return StateVector(std::move(layout), std::move(amplitudes));
}

StateVector StateVector::basis(std::vector<Register> layout,
                               const std::vector<Eigen::Index>& labels) {
  if (labels.size() != layout.size())
    throw ShapeError("one label index per register required");
  Eigen::Index dim = 1, idx = 0;
  for (size_t i = 0; i < layout.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= layout[i].dimension())
      throw ShapeError("basis label out of range for register '" + layout[i].name + "'");
    idx = idx * layout[i].dimension() + labels[i];
    dim *= layout[i].dimension();
  }
  VectorXc a = VectorXc::Zero(dim);
  a[idx] = 1.0;
  return StateVector(std::move(layout), std::move(a));
}

Eigen::Index StateVector::register_index(const std::string& name) const {
  for (size_t i = 0; i < layout_.size(); ++i)
    if (layout_[i].name == name) return static_cast<Eigen::Index>(i);
  throw ShapeError("no register named '" + name + "'");
}

const Register& StateVector::reg(const std::string& name) const {
  return layout_[register_index(name)];
}

bool StateVector::has_register(const std::string& name) const {
  for (const auto& r : layout_)
    if (r.name == name) return true;
  return false;
}

std::vector<Eigen::Index> StateVector::strides() const {
  std::vector<Eigen::Index> s(layout_.size());
  Eigen::Index acc = 1;
  for (size_t i = layout_.size(); i-- > 0;) {
    s[i] = acc;
    acc *= layout_[i].dimension();
  }
  return s;
}

StateVector StateVector::canonical() const {
  VectorXc a = amps_;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::abs(a[i]) > 1e-12) {
      a *= std::conj(a[i]) / std::abs(a[i]);
      break;
    }
  }
  return StateVector(layout_, std::move(a));
}

LinearOperator LinearOperator::unitary(std::vector<std::string> targets, MatrixXc m) {
  if (m.rows() != m.cols()) throw ShapeError("operator matrix must be square");
  MatrixXc gram = m.adjoint() * m;
  if (!gram.isApprox(MatrixXc::Identity(m.rows(), m.cols()), 1e-12))
    throw ShapeError("matrix is not unitary within 1e-12");
  return LinearOperator{std::move(targets), std::move(m), true};
}

LinearOperator LinearOperator::unitary_unchecked(std::vector<std::string> targets, MatrixXc m) {
  if (m.rows() != m.cols()) throw ShapeError("operator matrix must be square");
  return LinearOperator{std::move(targets), std::move(m), true};
}

LinearOperator LinearOperator::general(std::vector<std::string> targets, MatrixXc m) {
  if (m.rows() != m.cols()) throw ShapeError("operator matrix must be square");
  return LinearOperator{std::move(targets), std::move(m), false};
}

Eigen::VectorXd DensityMatrix::spectrum() const {
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(matrix);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-10) throw ShapeError("density matrix has a negative eigenvalue");
    if (ev[i] < 0.0) ev[i] = 0.0;
  }
  std::sort(ev.data(), ev.data() + ev.size(), std::greater<double>());
  return ev;
}

namespace detail {

Eigen::Index flat_index(const std::vector<Eigen::Index>& strides,
                        const std::vector<Eigen::Index>& multi) {
  Eigen::Index idx = 0;
  for (size_t i = 0; i < strides.size(); ++i) idx += strides[i] * multi[i];
  return idx;
}

// Offsets of all joint indices of `regs` given their strides in the parent
// layout; row-major within regs order.
static std::vector<Eigen::Index> offsets_for(const std::vector<Eigen::Index>& dims,
                                             const std::vector<Eigen::Index>& strides) {
  Eigen::Index total = 1;
  for (auto d : dims) total *= d;
  std::vector<Eigen::Index> out(total, 0);
  Eigen::Index block = total;
  for (size_t i = 0; i < dims.size(); ++i) {
    block /= dims[i];
    for (Eigen::Index j = 0; j < total; ++j)
      out[j] += ((j / block) % dims[i]) * strides[i];
  }
  return out;
}

std::vector<Eigen::Index> subset_offsets(const StateVector& state,
                                         const std::vector<std::string>& subset) {
  auto strides = state.strides();
  std::vector<Eigen::Index> dims, subs;
  for (const auto& name : subset) {
    Eigen::Index i = state.register_index(name);
    dims.push_back(state.layout()[i].dimension());
    subs.push_back(strides[i]);
  }
  return offsets_for(dims, subs);
}

std::vector<Eigen::Index> complement_offsets(const StateVector& state,
                                             const std::vector<std::string>& subset) {
  auto strides = state.strides();
  std::vector<Eigen::Index> dims, subs;
  for (size_t i = 0; i < state.layout().size(); ++i) {
    const auto& r = state.layout()[i];
    if (std::find(subset.begin(), subset.end(), r.name) == subset.end()) {
      dims.push_back(r.dimension());
      subs.push_back(strides[i]);
    }
  }
  return offsets_for(dims, subs);
}

std::vector<Register> subset_registers(const StateVector& state,
                                       const std::vector<std::string>& subset) {
  std::vector<Register> out;
  for (const auto& name : subset) out.push_back(state.reg(name));
  return out;
}

std::vector<Register> complement_registers(const StateVector& state,
                                           const std::vector<std::string>& subset) {
  std::vector<Register> out;
  for (const auto& r : state.layout())
    if (std::find(subset.begin(), subset.end(), r.name) == subset.end()) out.push_back(r);
  return out;
}

}  // namespace detail

StateVector tensor_product(const std::vector<StateVector>& factors) {
  if (factors.empty()) throw ShapeError("tensor_product needs at least one factor");
  std::vector<Register> layout;
  std::set<std::string> names;
  Eigen::Index dim = 1;
  for (const auto& f : factors) {
    for (const auto& r : f.layout()) {
      if (!names.insert(r.name).second)
        throw NameCollision("duplicate register name '" + r.name + "' in tensor product");
      layout.push_back(r);
      dim *= r.dimension();
    }
  }
  VectorXc amps = factors[0].amplitudes();
  for (size_t f = 1; f < factors.size(); ++f) {
    const VectorXc& b = factors[f].amplitudes();
    VectorXc next(amps.size() * b.size());
    for (Eigen::Index i = 0; i < amps.size(); ++i)
      next.segment(i * b.size(), b.size()) = amps[i] * b;
    amps = std::move(next);
  }
  return StateVector(std::move(layout), std::move(amps));
}

VectorXc apply_operator_raw(const LinearOperator& op, const StateVector& state) {
  return apply_operator_raw(op, state, state.amplitudes());
}

VectorXc apply_operator_raw(const LinearOperator& op, const StateVector& layout_ref,
                            const VectorXc& raw) {
  auto t_off = detail::subset_offsets(layout_ref, op.targets);
  auto c_off = detail::complement_offsets(layout_ref, op.targets);
  Eigen::Index tdim = static_cast<Eigen::Index>(t_off.size());
  if (op.matrix.rows() != tdim)
    throw ShapeError("operator matrix dimension does not match target registers");
  const VectorXc& in = raw;
  VectorXc out(in.size());
  VectorXc gather(tdim);
  for (Eigen::Index base : c_off) {
    for (Eigen::Index t = 0; t < tdim; ++t) gather[t] = in[base + t_off[t]];
    VectorXc res = op.matrix * gather;
    for (Eigen::Index t = 0; t < tdim; ++t) out[base + t_off[t]] = res[t];
  }
  return out;
}

StateVector apply_operator(const LinearOperator& op, const StateVector& state) {
  VectorXc out = apply_operator_raw(op, state);
  if (op.unitary_flag) return StateVector(state.layout(), std::move(out));
  double n = out.norm();
  if (n == 0.0) throw ShapeError("operator annihilated the state");
  return StateVector(state.layout(), out / n);
}

DensityMatrix outer_product(const StateVector& state) {
  DensityMatrix d;
  d.registers = state.layout();
  d.matrix = state.amplitudes() * state.amplitudes().adjoint();
  return d;
}

DensityMatrix reduced_density(const StateVector& state, const std::vector<std::string>& keep) {
  if (keep.empty()) throw ShapeError("keep subset must be nonempty");
  if (keep.size() == state.layout().size())
    throw UseOuterProductInstead("keep equals the full layout; use outer_product");
  auto k_off = detail::subset_offsets(state, keep);
  auto t_off = detail::complement_offsets(state, keep);
  Eigen::Index kdim = static_cast<Eigen::Index>(k_off.size());
  const VectorXc& a = state.amplitudes();
  MatrixXc rho = MatrixXc::Zero(kdim, kdim);
  for (Eigen::Index t : t_off) {
    VectorXc col(kdim);
    for (Eigen::Index i = 0; i < kdim; ++i) col[i] = a[k_off[i] + t];
    rho.noalias() += col * col.adjoint();
  }
  DensityMatrix d;
  d.registers = detail::subset_registers(state, keep);
  d.matrix = std::move(rho);
  return d;
}

StateVector fourier_dual(const StateVector& state, const std::string& grid_register) {
  Eigen::Index ri = state.register_index(grid_register);
  const Register& g = state.layout()[ri];
  if (g.kind != RegisterKind::Grid)
    throw KindError("register '" + grid_register + "' is not a grid register");
  Eigen::Index n = g.dimension();
  double dk = 2.0 * M_PI / (static_cast<double>(n) * g.cell_width);

  // Unitary kernel F[m][j] = exp(-i k_m x_j) / sqrt(n) with centered labels.
  MatrixXc f(n, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    double km = (static_cast<double>(m) - static_cast<double>(n) / 2.0) * dk;
    for (Eigen::Index j = 0; j < n; ++j)
      f(m, j) = std::exp(Complex(0.0, -km * g.cell_centers[j])) / std::sqrt(double(n));
  }
  StateVector out =
      apply_operator(LinearOperator::unitary_unchecked({grid_register}, std::move(f)), state);

  std::vector<Register> layout = out.layout();
  layout[ri] = Register::grid(g.name, n, dk);
  return StateVector(std::move(layout), out.amplitudes());
}

}  // namespace manyworlds
