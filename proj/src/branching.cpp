#include "manyworlds/branching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "json.hpp"

namespace manyworlds {

namespace {

constexpr double kAmpCutoff = 1e-12;

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

double round_sig(double x) { return std::strtod(fmt_double(x).c_str(), nullptr); }

}  // namespace

std::string Branch::label_string() const {
  std::string out;
  for (const auto& [reg, lab] : label) {
    if (!out.empty()) out += ",";
    out += reg + "=" + lab;
  }
  return out;
}

double BranchSet::total_weight() const {
  double w = 0.0;
  for (const auto& b : branches) w += b.weight();
  return w;
}

BranchSet decompose(const StateVector& psi, const std::vector<std::string>& labeled) {
  return rebase(psi, [&] {
    std::map<std::string, MatrixXc> bases;
    for (const auto& name : labeled) bases[name] = MatrixXc();  // computational
    return bases;
  }());
}

BranchSet rebase(const StateVector& psi, const std::map<std::string, MatrixXc>& bases,
                 const std::map<std::string, std::vector<std::string>>& labels) {
  if (bases.empty()) throw BasisError("basis choice covers no registers");

  std::vector<std::string> labeled;
  for (const auto& [name, _] : bases) labeled.push_back(name);

  // Rotate into the alternative bases: amplitudes in basis b are <b_k|psi>,
  // i.e. apply U^dagger per register.
  StateVector work = psi;
  for (const auto& [name, u] : bases) {
    if (u.size() == 0) continue;  // computational basis
    const Register& r = psi.reg(name);
    if (u.rows() != r.dimension() || u.cols() != r.dimension())
      throw BasisError("basis for register '" + name + "' has wrong dimension");
    if (!(u.adjoint() * u).isApprox(MatrixXc::Identity(u.rows(), u.cols()), 1e-10))
      throw BasisError("basis for register '" + name + "' is not orthonormal");
    work = apply_operator(LinearOperator::unitary({name}, u.adjoint()), work);
  }

  BranchSet set;
  set.layout = psi.layout();
  set.labeled_registers = labeled;
  set.bases = bases;
  set.basis_labels = labels;

  auto l_off = detail::subset_offsets(work, labeled);
  auto r_off = detail::complement_offsets(work, labeled);
  auto res_regs = detail::complement_registers(work, labeled);
  bool has_residual = !res_regs.empty();

  // Per-register label strings for each joint labeled index.
  std::vector<Eigen::Index> dims;
  for (const auto& name : labeled) dims.push_back(psi.reg(name).dimension());

  const VectorXc& a = work.amplitudes();
  for (size_t li = 0; li < l_off.size(); ++li) {
    VectorXc sub(static_cast<Eigen::Index>(r_off.size()));
    for (size_t rj = 0; rj < r_off.size(); ++rj)
      sub[static_cast<Eigen::Index>(rj)] = a[l_off[li] + r_off[rj]];
    double norm = sub.norm();
    if (norm <= kAmpCutoff) {
      set.pruned_mass += norm * norm;
      continue;
    }

    Branch b;
    Eigen::Index rem = static_cast<Eigen::Index>(li);
    for (size_t d = labeled.size(); d-- > 0;) {
      Eigen::Index k = rem % dims[d];
      rem /= dims[d];
      auto lit = labels.find(labeled[d]);
      b.label[labeled[d]] = (lit != labels.end()) ? lit->second[k]
                                                  : psi.reg(labeled[d]).labels[k];
    }
    if (has_residual) {
      Complex phase(1.0, 0.0);
      for (Eigen::Index i = 0; i < sub.size(); ++i) {
        if (std::abs(sub[i]) > 1e-12) {
          phase = sub[i] / std::abs(sub[i]);
          break;
        }
      }
      b.amplitude = norm * phase;
      b.residual = StateVector(res_regs, sub * (std::conj(phase) / norm));
    } else {
      b.amplitude = sub[0];
    }
    set.branches.push_back(std::move(b));
  }
  return set;
}

namespace {
VectorXc reconstruct_amplitudes(const BranchSet& set);
}

StateVector reconstruct(const BranchSet& set) {
  return StateVector(set.layout, reconstruct_amplitudes(set));
}

namespace {
VectorXc reconstruct_amplitudes(const BranchSet& set) {
  Eigen::Index dim = 1;
  for (const auto& r : set.layout) dim *= r.dimension();
  VectorXc total = VectorXc::Zero(dim);

  // Reference state for offset computation.
  StateVector ref(set.layout, VectorXc::Unit(dim, 0));
  auto l_off = detail::subset_offsets(ref, set.labeled_registers);
  auto r_off = detail::complement_offsets(ref, set.labeled_registers);

  std::vector<Eigen::Index> dims;
  for (const auto& name : set.labeled_registers) dims.push_back(ref.reg(name).dimension());

  for (const auto& b : set.branches) {
    if (set.labeled_registers.empty()) {
      // Grouped branch: residual lives on the full layout.
      total += b.amplitude * b.residual->amplitudes();
      continue;
    }
    // Basis vector over the labeled registers (product of per-register columns).
    VectorXc label_vec = VectorXc::Ones(1);
    for (const auto& name : set.labeled_registers) {
      const Register& r = ref.reg(name);
      auto lit = set.basis_labels.find(name);
      const std::vector<std::string>& labs =
          (lit != set.basis_labels.end()) ? lit->second : r.labels;
      auto pos = std::find(labs.begin(), labs.end(), b.label.at(name));
      Eigen::Index k = std::distance(labs.begin(), pos);
      VectorXc col;
      auto bit = set.bases.find(name);
      if (bit != set.bases.end() && bit->second.size() != 0)
        col = bit->second.col(k);
      else
        col = VectorXc::Unit(r.dimension(), k);
      VectorXc next(label_vec.size() * col.size());
      for (Eigen::Index i = 0; i < label_vec.size(); ++i)
        next.segment(i * col.size(), col.size()) = label_vec[i] * col;
      label_vec = std::move(next);
    }
    const VectorXc res = b.residual ? b.residual->amplitudes() : VectorXc::Ones(1);
    for (Eigen::Index i = 0; i < label_vec.size(); ++i)
      for (Eigen::Index j = 0; j < res.size(); ++j)
        total[l_off[i] + r_off[j]] += b.amplitude * label_vec[i] * res[j];
  }
  return total;
}
}  // namespace

BranchSet group(const BranchSet& set, const std::map<std::string, std::string>& block_of_label) {
  std::map<std::string, std::vector<size_t>> members;
  std::vector<std::string> block_order;
  for (size_t i = 0; i < set.branches.size(); ++i) {
    auto it = block_of_label.find(set.branches[i].label_string());
    if (it == block_of_label.end())
      throw PartitionError("branch '" + set.branches[i].label_string() + "' has no block");
    if (!members.count(it->second)) block_order.push_back(it->second);
    members[it->second].push_back(i);
  }

  BranchSet out;
  out.layout = set.layout;
  out.step_name = set.step_name;
  out.pruned_mass = set.pruned_mass;

  for (const auto& block : block_order) {
    BranchSet sub = set;
    sub.branches.clear();
    for (size_t i : members[block]) sub.branches.push_back(set.branches[i]);
    // |a~|^2 = sum |a_j|^2 by orthogonality of the members.
    double w = sub.total_weight();
    VectorXc superpos = reconstruct_amplitudes(sub);

    Branch b;
    b.label["_group"] = block;
    Complex phase(1.0, 0.0);
    for (Eigen::Index i = 0; i < superpos.size(); ++i) {
      if (std::abs(superpos[i]) > 1e-12) {
        phase = superpos[i] / std::abs(superpos[i]);
        break;
      }
    }
    b.amplitude = std::sqrt(w) * phase;
    b.residual = StateVector(set.layout, superpos * (std::conj(phase) / std::sqrt(w)));
    out.branches.push_back(std::move(b));
  }
  return out;
}

WorldTree WorldTree::root(const std::string& step_name, const std::string& label) {
  WorldTree t;
  t.layers.push_back({step_name, {TreeNode{"0", label, 1.0, {}}}});
  return t;
}

std::vector<std::string> WorldTree::interference_nodes(size_t layer) const {
  std::vector<std::string> out;
  for (const auto& n : layers.at(layer).nodes)
    if (n.parents.size() > 1) out.push_back(n.id);
  return out;
}

WorldTree extend_tree(WorldTree tree, const std::string& step_name,
                      const std::map<std::string, std::vector<ParentLink>>& parents,
                      const BranchSet& next) {
  if (tree.layers.empty()) throw TreeError("tree has no root layer");
  std::set<std::string> prev_ids;
  for (const auto& n : tree.layers.back().nodes) prev_ids.insert(n.id);

  TreeLayer layer;
  layer.name = step_name;
  double total = 0.0;
  for (size_t i = 0; i < next.branches.size(); ++i) {
    const Branch& b = next.branches[i];
    TreeNode node;
    node.id = std::to_string(i);
    node.label = b.label_string();
    node.weight = b.weight();
    total += node.weight;
    auto it = parents.find(node.label);
    if (it == parents.end()) throw TreeError("no parent map entry for branch '" + node.label + "'");
    for (const auto& p : it->second) {
      if (!prev_ids.count(p.id)) throw TreeError("dangling parent id '" + p.id + "'");
      node.parents.push_back(p);
    }
    layer.nodes.push_back(std::move(node));
  }
  if (std::abs(total + next.pruned_mass - 1.0) > 1e-10)
    throw TreeError("layer weights do not sum to 1");
  tree.layers.push_back(std::move(layer));
  return tree;
}

std::string tree_to_json(const WorldTree& tree) {
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const auto& layer : tree.layers) {
    nlohmann::ordered_json branches = nlohmann::ordered_json::array();
    for (const auto& n : layer.nodes) {
      nlohmann::ordered_json parents = nlohmann::ordered_json::array();
      for (const auto& p : n.parents)
        parents.push_back({{"id", p.id},
                           {"amplitude_re", round_sig(p.amplitude.real())},
                           {"amplitude_im", round_sig(p.amplitude.imag())}});
      branches.push_back(
          {{"id", n.id}, {"label", n.label}, {"weight", round_sig(n.weight)}, {"parents", parents}});
    }
    steps.push_back({{"name", layer.name}, {"branches", branches}});
  }
  return nlohmann::ordered_json{{"steps", steps}}.dump(2);
}

std::string tree_to_graphviz(const WorldTree& tree) {
  std::string out = "digraph worlds {\n  rankdir=TB;\n";
  for (size_t l = 0; l < tree.layers.size(); ++l) {
    const auto& layer = tree.layers[l];
    for (const auto& n : layer.nodes) {
      out += "  \"L" + std::to_string(l) + "_" + n.id + "\" [label=\"" + layer.name + ":" +
             n.label + "\\nw=" + fmt_double(n.weight) + "\"];\n";
    }
  }
  for (size_t l = 1; l < tree.layers.size(); ++l) {
    for (const auto& n : tree.layers[l].nodes) {
      for (const auto& p : n.parents) {
        out += "  \"L" + std::to_string(l - 1) + "_" + p.id + "\" -> \"L" + std::to_string(l) +
               "_" + n.id + "\" [label=\"" + fmt_double(std::abs(p.amplitude)) + "\"];\n";
      }
    }
  }
  out += "}\n";
  return out;
}

}  // namespace manyworlds
