#ifndef MANYWORLDS_SCENARIOS_HPP
#define MANYWORLDS_SCENARIOS_HPP

#include "manyworlds/branching.hpp"
#include "manyworlds/classical_info.hpp"
#include "manyworlds/observers.hpp"
#include "manyworlds/quantum_correlation.hpp"
#include "manyworlds/tensor.hpp"

namespace manyworlds {

struct ParamError : std::runtime_error { using std::runtime_error::runtime_error; };
struct AlignmentError : std::runtime_error { using std::runtime_error::runtime_error; };

// --- Mach-Zehnder universe -------------------------------------------------

enum class MziMode { PI, PS, General };

struct MziParams {
  MziMode mode = MziMode::PI;
  double theta = 0.0;   // sample phase on the H arm
  double alpha = 1.0;   // mirror packet overlap (General mode)
  bool dp_detector = false;  // momentum detector on M1: forces alpha = 0

  /// General mode, overlap derived from packet width and wavenumber.
  static MziParams general_from_packet(double a, double k, double theta);
};

/// Overlap of a mirror's recoiled packet with its rest packet, for a Gaussian
/// packet of width a and photon wavenumber k.
double mirror_overlap(double a, double k);

struct MziResult {
  MziParams params;
  double effective_alpha = 1.0;
  StateVector final_state;  // brute-force evolution over all five registers
  BranchSet branches;       // computational decomposition of final_state
  WorldTree tree;
  double dh_weight = 0.0;   // total weight with the H detector fired
  double dv_weight = 0.0;
};

/// Evolves |H> through beam splitter M1, sample phase, perfect mirrors,
/// beam splitter M3 and detector couplings; registers
/// (photon, M1, M3, DH, DV).
MziResult mzi_run(const MziParams& params);

struct ApproxMeasurementReport {
  double alpha = 0.0;
  BranchSet rebased;            // post-M1 state in the {phi+-} x {psi1,2} basis
  double fidelity_plus = 0.0;   // |<psi1|mirror state given phi+>|^2
  double fidelity_minus = 0.0;  // |<psi2|mirror state given phi->|^2
  double correlation = 0.0;     // classical correlation of the rebased weights
};

/// The post-M1 entangled state reexpressed in the photon +/- basis and the
/// mirror psi1/psi2 basis; quantifies how approximate the M1 "which path"
/// measurement is for packet overlap alpha.
ApproxMeasurementReport rebase_approximate_measurement(double alpha);

// --- von Neumann pointer ---------------------------------------------------

struct PointerParams {
  VectorXc phi;   // system amplitude over the q grid
  double dq = 1.0;
  VectorXc eta;   // pointer packet over the r grid
  double dr = 1.0;
  double t = 1.0; // coupling time; q*t must shift r by whole cells
};

struct VonNeumannResult {
  StateVector state;        // Psi(t)(q, r) = phi(q) eta(r - q t)
  double c_initial = 0.0;   // C_{q,r} at t = 0
  double c_final = 0.0;     // C_{q,r} at t
  double i_q_initial = 0.0; // marginal information of q
  double i_q_final = 0.0;
  double i_q_max_drift = 0.0;   // over intermediate aligned times
  bool measurement_generated = false;  // C maximal and I_q constant
};

VonNeumannResult von_neumann_run(const PointerParams& params);

// --- Stern-Gerlach ---------------------------------------------------------

struct SternGerlachParams {
  Complex c1{1.0, 0.0};  // spin-up amplitude
  Complex c2{0.0, 0.0};
  Eigen::Index n = 1024; // z-grid cells
  double dz = 0.05;
  double sigma = 1.0;    // initial Gaussian packet width
  double phase0 = 0.0;   // mu B0 dt / hbar (uniform field part)
  double phase1 = 5.0;   // mu B1 dt / hbar (gradient part = momentum kick)
  double flight_time = 1.0;
  bool recombine = false;
};

struct SternGerlachResult {
  StateVector state;
  double momentum_up = 0.0;    // conditional <k> for spin up
  double momentum_down = 0.0;
  double correlation = 0.0;    // canonical correlation spin : orbit after flight
  double recombination_fidelity = 0.0;  // |<Psi0|Psi>| when recombining
};

SternGerlachResult stern_gerlach_run(const SternGerlachParams& params);

// --- Geiger counter --------------------------------------------------------

struct GeigerParams {
  int n_atoms = 8;
  double cascade = 1.0;  // 1 = deterministic full cascade
  Complex a{1.0, 0.0};   // particle-outside amplitude
  Complex b{0.0, 0.0};   // particle-inside amplitude
};

struct GeigerResult {
  std::vector<double> count_weights;  // weight by ionization count 0..n
  double low_group = 0.0;             // counts below n/2 (undetected cluster)
  double high_group = 0.0;
  double medium_band_mass = 0.0;      // counts in (n/4, 3n/4)
};

/// Toy ionization cascade: the particle's inside component triggers a chain
/// of controlled rotations along the atom registers; grouping by ionization
/// count recovers the (|a|^2, |b|^2) split with a bimodal count profile.
GeigerResult geiger_run(const GeigerParams& params);

}  // namespace manyworlds

#endif
