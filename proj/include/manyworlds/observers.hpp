#ifndef MANYWORLDS_OBSERVERS_HPP
#define MANYWORLDS_OBSERVERS_HPP

#include <map>
#include <optional>

#include "manyworlds/branching.hpp"
#include "manyworlds/quantum_correlation.hpp"
#include "manyworlds/tensor.hpp"

namespace manyworlds {

struct AlphabetError : std::runtime_error { using std::runtime_error::runtime_error; };
struct ConfigError : std::runtime_error { using std::runtime_error::runtime_error; };
struct SizeError : std::runtime_error { using std::runtime_error::runtime_error; };

/// Append-only record of observation outcomes; the leading "..." marker for
/// irrelevant prior memory is implicit and never affects weights.
struct MemorySequence {
  std::vector<std::string> symbols;
  std::string to_string() const;
  bool operator==(const MemorySequence&) const = default;
  bool operator<(const MemorySequence& o) const { return symbols < o.symbols; }
};

/// Sparse branch: classical contents (observer memories plus basis labels of
/// classicalized registers) paired with a dense residual quantum state.
struct HybridBranch {
  std::map<std::string, MemorySequence> memories;       // observer id -> memory
  std::map<std::string, std::string> pointer_labels;    // register -> basis label
  Complex amplitude;
  std::optional<StateVector> residual;

  double weight() const { return std::norm(amplitude); }
};

struct HybridBranchState {
  std::vector<Register> system_registers;  // full catalog, classical or quantum
  std::vector<HybridBranch> branches;
  size_t pruned_branches = 0;
  double pruned_mass = 0.0;

  static HybridBranchState initial(const StateVector& psi);
  double total_weight() const;
};

/// Rules 1 and 2: branch-wise good observation of a nondegenerate observable.
/// Each branch splits into eigencomponents; the system register is left in
/// the eigenstate and the observer memory gains the matching symbol. When the
/// observable is the computational basis the register is moved into the
/// branch's classical labels (exact, since it is branch-diagonal afterwards).
HybridBranchState observe(const HybridBranchState& state, const std::string& system_register,
                          const ProjectorFamily& observable, const std::string& observer_id,
                          const std::vector<std::string>& outcome_symbols);

/// Copies one observer's latest memory symbol into another observer's memory
/// (the notebook-reading variant of Case 1); the copied symbol is tagged with
/// its source.
HybridBranchState read_notebook(const HybridBranchState& state, const std::string& reader,
                                const std::string& source);

struct SpinRunResult {
  int n = 0;
  size_t total_branches = 0;  // 2^n, independent of the amplitudes
  size_t live_branches = 0;
  std::vector<double> grouped_weights;      // index m = number of up outcomes
  bool rational = false;                    // exact C(n,m)/2^n form applies
  std::vector<long long> numerators;
  long long denominator = 1;
};

/// n identically prepared spins a|u> + b|d> observed in sequence, grouped by
/// up-count; grouped weights are the binomial measures.
SpinRunResult repeated_spin_run(int n, Complex a, Complex b);

struct CaseAssertion {
  std::string name;
  bool pass = false;
};

struct MultiObserverConfig {
  int case_id = 1;
  std::vector<Complex> amplitudes;  // system (cases 1,2) or pair (case 3) coefficients
  MatrixXc second_basis;            // case 2: eigenbasis of the second observable
  bool notebook = false;            // case 1: B reads A's notebook instead of measuring
};

struct CaseReport {
  int case_id = 0;
  HybridBranchState final_state;
  std::vector<CaseAssertion> assertions;
  bool all_pass() const;
};

CaseReport multi_observer_case(const MultiObserverConfig& config);

// --- Dense-memory oracle -------------------------------------------------
// Explicit memory registers of dimension (alphabet+1)^capacity, blank-padded;
// exists solely to cross-check the sparse representation on small systems.

Register dense_memory_register(const std::string& observer_id, int alphabet_size, int capacity);

/// Unitary implementing a good observation on (system register x memory
/// register): eigenstate j shifts the matching symbol into the memory.
LinearOperator dense_observe_operator(const StateVector& state, const std::string& system_register,
                                      const ProjectorFamily& observable,
                                      const std::string& observer_id, int alphabet_size,
                                      int capacity);

/// Expands a hybrid state into the dense layout (system registers in catalog
/// order, then one memory register per listed observer).
StateVector hybrid_to_dense(const HybridBranchState& state,
                            const std::vector<std::string>& observers,
                            const std::vector<std::string>& alphabet, int capacity);

/// {case, branches:[{memories:{observer: ...}, weight}], assertions:[{name, pass}]}
std::string case_report_to_json(const CaseReport& report);

}  // namespace manyworlds

#endif
