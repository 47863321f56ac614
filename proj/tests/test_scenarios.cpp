#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>

#include "doctest.h"
#include "manyworlds/scenarios.hpp"

using namespace manyworlds;

namespace {

// Weight of the interferometer branch with the given (photon, M1, M3) labels.
double path_weight(const MziResult& r, const std::string& photon, const std::string& m1,
                   const std::string& m3) {
  double w = 0.0;
  for (const auto& b : r.branches.branches)
    if (b.label.at("photon") == photon && b.label.at("M1") == m1 && b.label.at("M3") == m3)
      w += b.weight();
  return w;
}

VectorXc gauss(Eigen::Index n, double d, double sigma) {
  VectorXc v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double x = (i - n / 2) * d;
    v[i] = std::exp(-x * x / (4.0 * sigma * sigma));
  }
  return v / v.norm();
}

}  // namespace

TEST_CASE("perfect interferometer with no sample phase keeps a single world") {
  MziParams p;
  p.mode = MziMode::PI;
  p.theta = 0.0;
  MziResult r = mzi_run(p);
  REQUIRE(r.branches.branches.size() == 1);
  CHECK(r.dh_weight == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.dv_weight == doctest::Approx(0.0));
}

TEST_CASE("perfect interferometer splits the detectors as cos^2 vs sin^2 of theta/2") {
  for (double theta : {M_PI / 2, M_PI / 3, 1.1}) {
    MziParams p;
    p.mode = MziMode::PI;
    p.theta = theta;
    MziResult r = mzi_run(p);
    CHECK(r.dh_weight == doctest::Approx(std::cos(theta / 2) * std::cos(theta / 2)).epsilon(1e-10));
    CHECK(r.dv_weight == doctest::Approx(std::sin(theta / 2) * std::sin(theta / 2)).epsilon(1e-10));
    CHECK(r.dh_weight + r.dv_weight == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("which-path interferometer produces four equal worlds") {
  MziParams p;
  p.mode = MziMode::PS;
  p.theta = 0.7;  // the sample phase no longer matters
  MziResult r = mzi_run(p);
  REQUIRE(r.branches.branches.size() == 4);
  for (const auto& b : r.branches.branches) CHECK(b.weight() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(r.effective_alpha == doctest::Approx(0.0));
}

TEST_CASE("a momentum detector on the first mirror erases the interference") {
  MziParams p;
  p.mode = MziMode::General;
  p.alpha = 0.9;
  p.theta = 0.0;
  p.dp_detector = true;
  MziResult r = mzi_run(p);
  CHECK(r.effective_alpha == doctest::Approx(0.0));
  REQUIRE(r.branches.branches.size() == 4);
  for (const auto& b : r.branches.branches) CHECK(b.weight() == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("partially recoiling mirrors interpolate between the two regimes") {
  const double alpha = 0.6, theta = M_PI / 3;
  const double beta2 = 1.0 - alpha * alpha;
  MziParams p;
  p.mode = MziMode::General;
  p.alpha = alpha;
  p.theta = theta;
  MziResult r = mzi_run(p);
  REQUIRE(r.branches.branches.size() == 7);

  double c = std::cos(theta / 2);
  CHECK(path_weight(r, "H", "0", "0") == doctest::Approx(alpha * alpha * c * c).epsilon(1e-10));
  CHECK(path_weight(r, "V", "0", "0") ==
        doctest::Approx(std::norm(alpha * alpha - std::polar(1.0, theta)) / 4.0).epsilon(1e-10));
  CHECK(path_weight(r, "H", "0", "p") == doctest::Approx(beta2 / 4.0).epsilon(1e-10));
  CHECK(path_weight(r, "H", "p", "0") == doctest::Approx(beta2 / 4.0).epsilon(1e-10));
  CHECK(path_weight(r, "V", "0", "p") == doctest::Approx(alpha * alpha * beta2 / 4.0).epsilon(1e-10));
  CHECK(path_weight(r, "V", "p", "0") == doctest::Approx(alpha * alpha * beta2 / 4.0).epsilon(1e-10));
  CHECK(path_weight(r, "V", "p", "p") == doctest::Approx(beta2 * beta2 / 4.0).epsilon(1e-10));
  CHECK(r.branches.total_weight() == doctest::Approx(1.0).epsilon(1e-12));

  // the second beam splitter recombines paths: exactly one layer shows
  // multi-parent (interference) nodes, and it shows two of them
  size_t layers_with_interference = 0, interference_count = 0;
  for (size_t l = 0; l < r.tree.layers.size(); ++l) {
    size_t k = r.tree.interference_nodes(l).size();
    if (k > 0) {
      ++layers_with_interference;
      interference_count = k;
    }
  }
  CHECK(layers_with_interference == 1);
  CHECK(interference_count == 2);
}

TEST_CASE("the branch decomposition reconstructs the final interferometer state") {
  MziParams p;
  p.mode = MziMode::General;
  p.alpha = 0.35;
  p.theta = 1.3;
  MziResult r = mzi_run(p);
  StateVector back = reconstruct(r.branches);
  CHECK((back.amplitudes() - r.final_state.amplitudes()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("packet overlap follows the Gaussian recoil formula") {
  CHECK(mirror_overlap(2.0, 0.0) == doctest::Approx(1.0));
  CHECK(mirror_overlap(1.0, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(mirror_overlap(2.0, 3.0) < mirror_overlap(2.0, 1.0));
  CHECK_THROWS_AS(mirror_overlap(0.0, 1.0), ParamError);
  CHECK_THROWS_AS(mirror_overlap(1.0, -1.0), ParamError);
  MziParams p = MziParams::general_from_packet(1.5, 0.8, 0.0);
  CHECK(p.alpha == doctest::Approx(std::exp(-1.5 * 1.5 * 0.8 * 0.8 / 4.0)).epsilon(1e-12));
}

TEST_CASE("zero overlap makes the mirror a perfect which-path recorder") {
  ApproxMeasurementReport rep = rebase_approximate_measurement(0.0);
  CHECK(rep.fidelity_plus == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.fidelity_minus == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.correlation == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  REQUIRE(rep.rebased.branches.size() == 2);
  for (const auto& b : rep.rebased.branches) CHECK(b.weight() == doctest::Approx(0.5));
}

TEST_CASE("full overlap leaves photon and mirror uncorrelated") {
  ApproxMeasurementReport rep = rebase_approximate_measurement(1.0);
  CHECK(rep.correlation == doctest::Approx(0.0).epsilon(1e-10));
  // only the phi- photon component survives, split evenly over psi1/psi2
  for (const auto& b : rep.rebased.branches) {
    CHECK(b.label.at("photon") == "-");
    CHECK(b.weight() == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("small overlap is an approximate measurement with fidelity above 0.99") {
  const double alpha = 0.1, beta = std::sqrt(1.0 - alpha * alpha);
  ApproxMeasurementReport rep = rebase_approximate_measurement(alpha);
  CHECK(rep.fidelity_plus > 0.99);
  CHECK(rep.fidelity_minus > 0.99);

  // oracle: expand the post-splitter state directly in the rotated product basis
  auto amp = [&](int pm, int psi) {
    double sa = pm == 0 ? -alpha : alpha;
    double sb = psi == 0 ? (pm == 0 ? beta : -beta) : (pm == 0 ? -beta : beta);
    return (1.0 + sa + sb) / (2.0 * std::sqrt(2.0));
  };
  std::map<std::pair<std::string, std::string>, double> got;
  for (const auto& b : rep.rebased.branches)
    got[{b.label.at("photon"), b.label.at("M1")}] = b.weight();
  CHECK(got[{"+", "psi1"}] == doctest::Approx(amp(0, 0) * amp(0, 0)).epsilon(1e-12));
  CHECK(got[{"+", "psi2"}] == doctest::Approx(amp(0, 1) * amp(0, 1)).epsilon(1e-12));
  CHECK(got[{"-", "psi1"}] == doctest::Approx(amp(1, 0) * amp(1, 0)).epsilon(1e-12));
  CHECK(got[{"-", "psi2"}] == doctest::Approx(amp(1, 1) * amp(1, 1)).epsilon(1e-12));
}

TEST_CASE("measurement fidelity degrades monotonically with overlap") {
  double prev = 1.1;
  for (double alpha : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    double f = rebase_approximate_measurement(alpha).fidelity_plus;
    CHECK(f < prev);
    prev = f;
  }
  CHECK_THROWS_AS(rebase_approximate_measurement(1.5), ParamError);
}

TEST_CASE("the pointer coupling builds full correlation while I_q stays put") {
  PointerParams p;
  p.phi = VectorXc::Constant(8, 1.0);
  p.dq = 1.0;
  p.eta = VectorXc::Zero(16);
  p.eta[8] = 1.0;  // delta pointer packet
  p.dr = 1.0;
  p.t = 1.0;
  VonNeumannResult r = von_neumann_run(p);
  CHECK(r.c_initial == doctest::Approx(0.0));
  CHECK(r.c_final == doctest::Approx(std::log(8.0)).epsilon(1e-10));
  CHECK(r.i_q_initial == doctest::Approx(-std::log(8.0)).epsilon(1e-10));
  CHECK(r.i_q_max_drift < 1e-12);
  CHECK(r.measurement_generated);
}

TEST_CASE("a non-uniform system distribution is transcribed onto the pointer") {
  PointerParams p;
  p.phi = gauss(8, 1.0, 2.0);
  p.dq = 1.0;
  p.eta = VectorXc::Zero(32);
  p.eta[16] = 1.0;
  p.dr = 1.0;
  p.t = 2.0;  // two cells per unit q
  VonNeumannResult r = von_neumann_run(p);
  // delta pointer: C_final equals the marginal information magnitude of q
  CHECK(r.c_final == doctest::Approx(-r.i_q_initial).epsilon(1e-9));
  CHECK(r.measurement_generated);
}

TEST_CASE("a broad pointer packet yields only partial correlation") {
  PointerParams p;
  p.phi = VectorXc::Constant(4, 1.0);
  p.dq = 1.0;
  p.eta = gauss(64, 1.0, 6.0);  // packet much wider than the q spacing
  p.dr = 1.0;
  p.t = 1.0;
  VonNeumannResult r = von_neumann_run(p);
  CHECK(r.c_final > 0.0);
  CHECK(r.c_final < std::log(4.0) - 0.5);
  CHECK(r.measurement_generated == false);
}

TEST_CASE("misaligned coupling times are rejected") {
  PointerParams p;
  p.phi = VectorXc::Constant(4, 0.5);
  p.eta = VectorXc::Constant(8, 1.0 / std::sqrt(8.0));
  p.t = 0.5;  // shifts by half a cell
  CHECK_THROWS_AS(von_neumann_run(p), AlignmentError);
}

TEST_CASE("the gradient field sorts spin components into opposite momenta") {
  SternGerlachParams p;
  double s = 1.0 / std::sqrt(2.0);
  p.c1 = s;
  p.c2 = s;
  SternGerlachResult r = stern_gerlach_run(p);
  CHECK(r.momentum_up == doctest::Approx(-p.phase1).epsilon(1e-6));
  CHECK(r.momentum_down == doctest::Approx(p.phase1).epsilon(1e-6));
  CHECK(r.correlation == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("an unbalanced spin keeps the entanglement entropy of its weights") {
  SternGerlachParams p;
  p.c1 = 0.6;
  p.c2 = 0.8;
  SternGerlachResult r = stern_gerlach_run(p);
  double expect = -(0.36 * std::log(0.36) + 0.64 * std::log(0.64));
  CHECK(r.correlation == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("a pure spin eigenstate never entangles with its orbit") {
  SternGerlachParams p;
  p.c1 = 1.0;
  p.c2 = 0.0;
  SternGerlachResult r = stern_gerlach_run(p);
  CHECK(std::abs(r.correlation) < 1e-10);
  CHECK(r.momentum_up == doctest::Approx(-p.phase1).epsilon(1e-6));
}

TEST_CASE("reversing the apparatus restores the initial state") {
  SternGerlachParams p;
  double s = 1.0 / std::sqrt(2.0);
  p.c1 = s;
  p.c2 = Complex(0.0, s);
  p.recombine = true;
  SternGerlachResult r = stern_gerlach_run(p);
  CHECK(r.recombination_fidelity == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("stern-gerlach validates the spin amplitudes") {
  SternGerlachParams p;
  p.c1 = 1.0;
  p.c2 = 1.0;
  CHECK_THROWS_AS(stern_gerlach_run(p), ParamError);
}

TEST_CASE("a full cascade clicks all counters or none") {
  GeigerParams p;
  p.n_atoms = 8;
  p.cascade = 1.0;
  p.a = 0.6;
  p.b = 0.8;
  GeigerResult r = geiger_run(p);
  REQUIRE(r.count_weights.size() == 9);
  CHECK(r.count_weights[0] == doctest::Approx(0.36).epsilon(1e-12));
  CHECK(r.count_weights[8] == doctest::Approx(0.64).epsilon(1e-12));
  for (int c = 1; c < 8; ++c) CHECK(r.count_weights[static_cast<size_t>(c)] < 1e-24);
  CHECK(r.low_group == doctest::Approx(0.36).epsilon(1e-12));
  CHECK(r.high_group == doctest::Approx(0.64).epsilon(1e-12));
  CHECK(r.medium_band_mass < 1e-20);
}

TEST_CASE("a weak cascade still leaves the middle counts nearly empty") {
  GeigerParams p;
  p.n_atoms = 10;
  p.cascade = 0.9;
  p.a = 1.0 / std::sqrt(2.0);
  p.b = 1.0 / std::sqrt(2.0);
  GeigerResult r = geiger_run(p);
  double total = 0.0;
  for (double w : r.count_weights) total += w;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.low_group + r.high_group >= 1.0 - 1e-10 - r.count_weights[5]);
  CHECK(r.medium_band_mass < 0.12);
  CHECK(r.low_group == doctest::Approx(0.5).epsilon(0.05));
}
