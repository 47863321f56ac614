#ifndef MANYWORLDS_BRANCHING_HPP
#define MANYWORLDS_BRANCHING_HPP

#include <map>
#include <optional>

#include "manyworlds/classical_info.hpp"
#include "manyworlds/tensor.hpp"

namespace manyworlds {

struct BasisError : std::runtime_error { using std::runtime_error::runtime_error; };
struct TreeError : std::runtime_error { using std::runtime_error::runtime_error; };

/// One orthogonal component of a universe state: a (possibly partial)
/// basis-label assignment plus a residual state over the unlabeled registers.
struct Branch {
  std::map<std::string, std::string> label;  // register name -> basis label
  Complex amplitude;
  std::optional<StateVector> residual;

  double weight() const { return std::norm(amplitude); }
  std::string label_string() const;
};

/// Orthogonal decomposition of a state. Keeps the layout and the per-register
/// bases used, so the original state can be reconstructed exactly.
struct BranchSet {
  std::vector<Register> layout;               // full layout of the source state
  std::vector<std::string> labeled_registers; // registers carrying branch labels
  std::map<std::string, MatrixXc> bases;      // alternative basis per register (empty: computational)
  std::map<std::string, std::vector<std::string>> basis_labels;
  std::vector<Branch> branches;
  std::string step_name;
  double pruned_mass = 0.0;  // weight dropped below the amplitude cutoff

  double total_weight() const;
};

/// Nonzero components of psi in the computational product basis of the named
/// registers; remaining registers form each branch's residual.
BranchSet decompose(const StateVector& psi, const std::vector<std::string>& labeled_registers);

/// Decomposition in alternative orthonormal per-register bases (columns).
BranchSet rebase(const StateVector& psi, const std::map<std::string, MatrixXc>& bases,
                 const std::map<std::string, std::vector<std::string>>& labels = {});

/// Sums amplitude x (label basis vector (x) residual) over all branches.
StateVector reconstruct(const BranchSet& set);

/// Merges branches by block; grouped |amplitude|^2 is the sum of member
/// weights and the grouped residual is the normalized superposition over the
/// full layout.
BranchSet group(const BranchSet& set, const std::map<std::string, std::string>& block_of_label);

struct ParentLink {
  std::string id;
  Complex amplitude;  // contribution of this parent to the child branch
};

struct TreeNode {
  std::string id;
  std::string label;
  double weight = 0.0;
  std::vector<ParentLink> parents;
};

struct TreeLayer {
  std::string name;
  std::vector<TreeNode> nodes;
};

/// Layered record of branch splits; a node with more than one parent marks
/// interference at that step.
struct WorldTree {
  std::vector<TreeLayer> layers;

  static WorldTree root(const std::string& step_name, const std::string& label);
  std::vector<std::string> interference_nodes(size_t layer) const;
};

WorldTree extend_tree(WorldTree tree, const std::string& step_name,
                      const std::map<std::string, std::vector<ParentLink>>& parents,
                      const BranchSet& next);

/// {steps:[{name, branches:[{id, label, weight, parents:[...]}]}]}
std::string tree_to_json(const WorldTree& tree);
/// Graphviz digraph, bit-stable for fixed input (%.12g floats, sorted ids).
std::string tree_to_graphviz(const WorldTree& tree);

}  // namespace manyworlds

#endif
