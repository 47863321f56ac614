#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "manyworlds/tensor.hpp"

using namespace manyworlds;

namespace {

Register qubit(const std::string& name) { return Register::finite(name, {"0", "1"}); }

StateVector plus(const std::string& name) {
  VectorXc a(2);
  a << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  return StateVector({qubit(name)}, a);
}

StateVector ket(const std::string& name, Eigen::Index k) {
  return StateVector::basis({qubit(name)}, {k});
}

VectorXc random_amps(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> g;
  VectorXc v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = Complex(g(rng), g(rng));
  return v / v.norm();
}

MatrixXc random_unitary(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> g;
  MatrixXc m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = Complex(g(rng), g(rng));
  Eigen::HouseholderQR<MatrixXc> qr(m);
  return qr.householderQ() * MatrixXc::Identity(d, d);
}

StateVector bell(const std::string& a, const std::string& b) {
  VectorXc v = VectorXc::Zero(4);
  v[0] = v[3] = 1.0 / std::sqrt(2.0);
  return StateVector({qubit(a), qubit(b)}, v);
}

}  // namespace

TEST_CASE("registers carry labels, kinds and grid geometry") {
  Register f = Register::finite("s", {"u", "d"});
  CHECK(f.dimension() == 2);
  CHECK(f.kind == RegisterKind::Finite);

  Register g = Register::grid("x", 8, 0.5);
  CHECK(g.dimension() == 8);
  CHECK(g.cell_width == doctest::Approx(0.5));
  // centered cells: (i - n/2) * delta
  CHECK(g.cell_centers[0] == doctest::Approx(-2.0));
  CHECK(g.cell_centers[7] == doctest::Approx(1.5));
}

TEST_CASE("tensor product places amplitudes row-major, last register fastest") {
  StateVector p = tensor_product({ket("a", 0), ket("b", 0)});
  CHECK(p.amplitudes()[0] == Complex(1.0, 0.0));
  for (Eigen::Index i = 1; i < 4; ++i) CHECK(std::abs(p.amplitudes()[i]) == 0.0);

  StateVector q = tensor_product({plus("a"), ket("b", 0)});
  CHECK(std::abs(q.amplitudes()[0] - 1.0 / std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(q.amplitudes()[2] - 1.0 / std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(q.amplitudes()[1]) == 0.0);
  CHECK(q.norm() == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(tensor_product({ket("a", 0), ket("a", 1)}), NameCollision);
}

TEST_CASE("strides and flat indices agree with the row-major layout") {
  std::vector<Register> regs = {Register::finite("a", {"0", "1", "2"}), qubit("b"),
                                Register::finite("c", {"0", "1", "2", "3"})};
  StateVector s = StateVector::basis(regs, {2, 1, 3});
  auto strides = s.strides();
  CHECK(strides == std::vector<Eigen::Index>{8, 4, 1});
  CHECK(s.amplitudes()[2 * 8 + 1 * 4 + 3] == Complex(1.0, 0.0));
  CHECK(detail::flat_index(strides, {2, 1, 3}) == 23);
}

TEST_CASE("beam-splitter style unitary splits a basis state into two components") {
  double s = 1.0 / std::sqrt(2.0);
  MatrixXc h(2, 2);
  h << s, s, -s, s;  // |0> -> (|0> - |1>)/sqrt(2)
  StateVector out = apply_operator(LinearOperator::unitary({"p"}, h), ket("p", 0));
  CHECK(std::abs(out.amplitudes()[0] - s) < 1e-15);
  CHECK(std::abs(out.amplitudes()[1] + s) < 1e-15);
}

TEST_CASE("identity application and unitarity of norms") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    StateVector psi({qubit("a"), qubit("b")}, random_amps(rng, 4));
    StateVector same = apply_operator(LinearOperator::unitary({"a"}, MatrixXc::Identity(2, 2)), psi);
    CHECK((same.amplitudes() - psi.amplitudes()).norm() < 1e-14);
    StateVector rot = apply_operator(LinearOperator::unitary({"b"}, random_unitary(rng, 2)), psi);
    CHECK(std::abs(rot.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("operator on a middle register matches the explicit Kronecker oracle") {
  std::mt19937_64 rng(11);
  std::vector<Register> regs = {qubit("a"), Register::finite("b", {"0", "1", "2"}), qubit("c")};
  StateVector psi(regs, random_amps(rng, 12));
  MatrixXc u = random_unitary(rng, 3);

  MatrixXc full = MatrixXc::Zero(12, 12);
  for (Eigen::Index a = 0; a < 2; ++a)
    for (Eigen::Index b1 = 0; b1 < 3; ++b1)
      for (Eigen::Index b2 = 0; b2 < 3; ++b2)
        for (Eigen::Index c = 0; c < 2; ++c)
          full(a * 6 + b1 * 2 + c, a * 6 + b2 * 2 + c) = u(b1, b2);

  StateVector got = apply_operator(LinearOperator::unitary({"b"}, u), psi);
  VectorXc expect = full * psi.amplitudes();
  CHECK((got.amplitudes() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("operator over two non-adjacent registers matches the oracle") {
  std::mt19937_64 rng(13);
  std::vector<Register> regs = {qubit("a"), qubit("b"), qubit("c")};
  StateVector psi(regs, random_amps(rng, 8));
  MatrixXc u = random_unitary(rng, 4);  // acts on (a, c), joint index a*2 + c

  MatrixXc full = MatrixXc::Zero(8, 8);
  for (Eigen::Index a1 = 0; a1 < 2; ++a1)
    for (Eigen::Index c1 = 0; c1 < 2; ++c1)
      for (Eigen::Index a2 = 0; a2 < 2; ++a2)
        for (Eigen::Index c2 = 0; c2 < 2; ++c2)
          for (Eigen::Index b = 0; b < 2; ++b)
            full(a1 * 4 + b * 2 + c1, a2 * 4 + b * 2 + c2) = u(a1 * 2 + c1, a2 * 2 + c2);

  StateVector got = apply_operator(LinearOperator::unitary({"a", "c"}, u), psi);
  CHECK((got.amplitudes() - full * psi.amplitudes()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("disjoint-target operators commute") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 10; ++t) {
    StateVector psi({qubit("a"), qubit("b"), qubit("c")}, random_amps(rng, 8));
    LinearOperator ua = LinearOperator::unitary({"a"}, random_unitary(rng, 2));
    LinearOperator uc = LinearOperator::unitary({"c"}, random_unitary(rng, 2));
    StateVector ab = apply_operator(uc, apply_operator(ua, psi));
    StateVector ba = apply_operator(ua, apply_operator(uc, psi));
    CHECK((ab.amplitudes() - ba.amplitudes()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("non-unitary matrices are rejected by the unitary constructor") {
  MatrixXc m(2, 2);
  m << 1, 1, 0, 1;
  CHECK_THROWS_AS(LinearOperator::unitary({"a"}, m), ShapeError);
}

TEST_CASE("reduced density of a product state is a rank-1 projector") {
  StateVector psi = tensor_product({ket("a", 0), plus("b")});
  DensityMatrix rho = reduced_density(psi, {"a"});
  CHECK(std::abs(rho.matrix(0, 0) - 1.0) < 1e-14);
  CHECK(std::abs(rho.matrix(1, 1)) < 1e-14);
  CHECK(std::abs(rho.matrix(0, 1)) < 1e-14);
}

TEST_CASE("reduced density of a Bell pair is maximally mixed") {
  DensityMatrix rho = reduced_density(bell("a", "b"), {"a"});
  CHECK(std::abs(rho.matrix(0, 0) - 0.5) < 1e-14);
  CHECK(std::abs(rho.matrix(1, 1) - 0.5) < 1e-14);
  CHECK(std::abs(rho.matrix(0, 1)) < 1e-14);
}

TEST_CASE("reduced density has unit trace for random states") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 100; ++t) {
    StateVector psi({qubit("a"), Register::finite("b", {"0", "1", "2"})}, random_amps(rng, 6));
    DensityMatrix rho = reduced_density(psi, {"b"});
    CHECK(std::abs(rho.matrix.trace().real() - 1.0) < 1e-12);
    CHECK((rho.matrix - rho.matrix.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("the two reduced densities of a bipartite state share their spectrum") {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 50; ++t) {
    StateVector psi({Register::finite("a", {"0", "1", "2"}), qubit("b")}, random_amps(rng, 6));
    Eigen::VectorXd sa = reduced_density(psi, {"a"}).spectrum();
    Eigen::VectorXd sb = reduced_density(psi, {"b"}).spectrum();
    for (Eigen::Index i = 0; i < sb.size(); ++i) CHECK(std::abs(sa[i] - sb[i]) < 1e-10);
    for (Eigen::Index i = sb.size(); i < sa.size(); ++i) CHECK(std::abs(sa[i]) < 1e-10);
  }
}

TEST_CASE("keeping the full layout is redirected to outer_product") {
  StateVector psi = bell("a", "b");
  CHECK_THROWS_AS(reduced_density(psi, {"a", "b"}), UseOuterProductInstead);
  DensityMatrix rho = outer_product(psi);
  CHECK(std::abs((rho.matrix * rho.matrix - rho.matrix).cwiseAbs().maxCoeff()) < 1e-12);
}

TEST_CASE("fourier dual is norm preserving and maps a spike to flat magnitudes") {
  Register g = Register::grid("x", 16, 0.25);
  StateVector spike({g}, VectorXc::Unit(16, 5));
  StateVector dual = fourier_dual(spike, "x");
  CHECK(std::abs(dual.norm() - 1.0) < 1e-12);
  for (Eigen::Index i = 0; i < 16; ++i)
    CHECK(std::abs(std::abs(dual.amplitudes()[i]) - 0.25) < 1e-12);
  CHECK(dual.layout()[0].cell_width == doctest::Approx(2.0 * M_PI / (16 * 0.25)));
}

TEST_CASE("fourier dual of a Gaussian is a Gaussian of reciprocal width") {
  const Eigen::Index n = 4096;
  const double dz = 0.05, a = 2.0;
  Register g = Register::grid("x", n, dz);
  VectorXc amps(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double x = g.cell_centers[i];
    amps[i] = std::exp(-x * x / (4.0 * a * a));
  }
  amps /= amps.norm();
  StateVector dual = fourier_dual(StateVector({g}, amps), "x");
  // variance of |psi~|^2 should be 1/(4 a^2)
  double var = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double k = dual.layout()[0].cell_centers[i];
    var += std::norm(dual.amplitudes()[i]) * k * k;
  }
  CHECK(var == doctest::Approx(1.0 / (4.0 * a * a)).epsilon(1e-6));
}

TEST_CASE("applying the fourier dual twice is the parity map") {
  std::mt19937_64 rng(31);
  Register g = Register::grid("x", 16, 0.3);
  VectorXc amps = random_amps(rng, 16);
  StateVector twice = fourier_dual(fourier_dual(StateVector({g}, amps), "x"), "x");
  for (Eigen::Index i = 0; i < 16; ++i) {
    Eigen::Index j = (16 - i) % 16;
    CHECK(std::abs(twice.amplitudes()[i] - amps[j]) < 1e-12);
  }
}

TEST_CASE("fourier dual rejects non-grid registers") {
  CHECK_THROWS_AS(fourier_dual(ket("a", 0), "a"), KindError);
}

TEST_CASE("normalized construction fixes the global phase") {
  VectorXc a(2);
  a << Complex(0.0, -2.0), Complex(2.0, 0.0);
  StateVector s = StateVector::normalized({qubit("q")}, a);
  CHECK(s.amplitudes()[0].real() == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(s.amplitudes()[0].imag()) < 1e-15);
}

TEST_CASE("subset and complement offsets tile the full index space") {
  std::mt19937_64 rng(37);
  std::vector<Register> regs = {qubit("a"), Register::finite("b", {"0", "1", "2"}), qubit("c")};
  StateVector psi(regs, random_amps(rng, 12));
  auto l = detail::subset_offsets(psi, {"a", "c"});
  auto r = detail::complement_offsets(psi, {"a", "c"});
  std::vector<bool> seen(12, false);
  for (auto lo : l)
    for (auto ro : r) {
      REQUIRE(lo + ro < 12);
      CHECK(!seen[static_cast<size_t>(lo + ro)]);
      seen[static_cast<size_t>(lo + ro)] = true;
    }
  for (bool s : seen) CHECK(s);
}
