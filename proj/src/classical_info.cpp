#include "manyworlds/classical_info.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

namespace manyworlds {

namespace {
constexpr double kZero = 1e-300;
constexpr double kSumTol = 1e-12;
}  // namespace

double xlogx(double x) {
  if (x < kZero) return 0.0;
  return x * std::log(x);
}

FiniteDistribution::FiniteDistribution(std::vector<Axis> axes, Eigen::VectorXd probs,
                                       std::vector<Eigen::VectorXd> measure_weights)
    : axes_(std::move(axes)), probs_(std::move(probs)), weights_(std::move(measure_weights)) {
  Eigen::Index dim = 1;
  for (const auto& a : axes_) dim *= a.size();
  if (dim != probs_.size()) throw AxisError("probs length does not match axis product");
  if (probs_.minCoeff() < -1e-15) throw NormError("negative probability");
  if (std::abs(probs_.sum() - 1.0) > kSumTol) throw NormError("probabilities do not sum to 1");
  if (!weights_.empty()) {
    if (weights_.size() != axes_.size())
      throw AxisError("measure_weights must have one vector per axis");
    for (size_t i = 0; i < weights_.size(); ++i) {
      if (weights_[i].size() != axes_[i].size())
        throw AxisError("measure_weights size mismatch on axis '" + axes_[i].name + "'");
      if (weights_[i].minCoeff() <= 0.0)
        throw AxisError("measure_weights must be strictly positive");
    }
  }
}

Eigen::Index FiniteDistribution::axis_index(const std::string& name) const {
  for (size_t i = 0; i < axes_.size(); ++i)
    if (axes_[i].name == name) return static_cast<Eigen::Index>(i);
  throw AxisError("no axis named '" + name + "'");
}

std::vector<Eigen::Index> FiniteDistribution::strides() const {
  std::vector<Eigen::Index> s(axes_.size());
  Eigen::Index acc = 1;
  for (size_t i = axes_.size(); i-- > 0;) {
    s[i] = acc;
    acc *= axes_[i].size();
  }
  return s;
}

FiniteDistribution FiniteDistribution::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  std::vector<Axis> axes;
  for (const auto& ja : j.at("axes")) {
    Axis a;
    a.name = ja.at("name").get<std::string>();
    for (const auto& l : ja.at("labels")) a.labels.push_back(l.get<std::string>());
    axes.push_back(std::move(a));
  }
  auto pv = j.at("probs").get<std::vector<double>>();
  Eigen::VectorXd probs = Eigen::Map<Eigen::VectorXd>(pv.data(), pv.size());
  std::vector<Eigen::VectorXd> weights;
  if (j.contains("measure_weights")) {
    for (const auto& jw : j.at("measure_weights")) {
      auto wv = jw.get<std::vector<double>>();
      weights.push_back(Eigen::Map<Eigen::VectorXd>(wv.data(), wv.size()));
    }
  }
  return FiniteDistribution(std::move(axes), std::move(probs), std::move(weights));
}

std::vector<std::string> Partition::blocks_in_order(const Axis& source) const {
  std::vector<std::string> blocks;
  for (const auto& label : source.labels) {
    auto it = block_of.find(label);
    if (it == block_of.end())
      throw PartitionError("label '" + label + "' has no block");
    if (std::find(blocks.begin(), blocks.end(), it->second) == blocks.end())
      blocks.push_back(it->second);
  }
  return blocks;
}

namespace {

// Per-cell multi-index walker over the axis product.
struct Walker {
  std::vector<Eigen::Index> dims;
  std::vector<Eigen::Index> idx;
  explicit Walker(const std::vector<Axis>& axes) {
    for (const auto& a : axes) dims.push_back(a.size());
    idx.assign(dims.size(), 0);
  }
  bool next() {
    for (size_t i = dims.size(); i-- > 0;) {
      if (++idx[i] < dims[i]) return true;
      idx[i] = 0;
    }
    return false;
  }
};

}  // namespace

FiniteDistribution marginal(const FiniteDistribution& p, const std::vector<std::string>& keep) {
  if (keep.empty()) throw AxisError("keep must be nonempty");
  std::vector<Eigen::Index> keep_idx;
  for (const auto& name : keep) keep_idx.push_back(p.axis_index(name));

  std::vector<Axis> axes;
  std::vector<Eigen::VectorXd> weights;
  Eigen::Index out_dim = 1;
  for (auto ki : keep_idx) {
    axes.push_back(p.axes()[ki]);
    if (p.has_measure_weights()) weights.push_back(p.measure_weights()[ki]);
    out_dim *= p.axes()[ki].size();
  }

  Eigen::VectorXd out = Eigen::VectorXd::Zero(out_dim);
  Walker w(p.axes());
  Eigen::Index flat = 0;
  do {
    Eigen::Index o = 0;
    for (auto ki : keep_idx) o = o * p.axes()[ki].size() + w.idx[ki];
    out[o] += p.probs()[flat];
    ++flat;
  } while (w.next());
  return FiniteDistribution(std::move(axes), std::move(out), std::move(weights));
}

FiniteDistribution conditional(const FiniteDistribution& p,
                               const std::map<std::string, std::string>& fixed) {
  if (fixed.empty()) throw AxisError("fixed assignment must be nonempty");
  std::map<Eigen::Index, Eigen::Index> fixed_idx;  // axis -> label index
  for (const auto& [axis, label] : fixed) {
    Eigen::Index ai = p.axis_index(axis);
    const auto& labels = p.axes()[ai].labels;
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw AxisError("no label '" + label + "' on axis '" + axis + "'");
    fixed_idx[ai] = std::distance(labels.begin(), it);
  }
  std::vector<Axis> axes;
  std::vector<Eigen::VectorXd> weights;
  std::vector<Eigen::Index> rest;
  for (size_t i = 0; i < p.axes().size(); ++i) {
    if (!fixed_idx.count(static_cast<Eigen::Index>(i))) {
      rest.push_back(static_cast<Eigen::Index>(i));
      axes.push_back(p.axes()[i]);
      if (p.has_measure_weights()) weights.push_back(p.measure_weights()[i]);
    }
  }
  if (rest.empty()) throw AxisError("fixed assignment covers all axes");

  Eigen::Index out_dim = 1;
  for (auto ri : rest) out_dim *= p.axes()[ri].size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(out_dim);

  Walker w(p.axes());
  Eigen::Index flat = 0;
  do {
    bool match = true;
    for (const auto& [ai, li] : fixed_idx)
      if (w.idx[ai] != li) { match = false; break; }
    if (match) {
      Eigen::Index o = 0;
      for (auto ri : rest) o = o * p.axes()[ri].size() + w.idx[ri];
      out[o] += p.probs()[flat];
    }
    ++flat;
  } while (w.next());

  double mass = out.sum();
  if (mass < kZero) throw ConditionOnNull("conditioning event has probability zero");
  out /= mass;
  return FiniteDistribution(std::move(axes), std::move(out), std::move(weights));
}

double information(const FiniteDistribution& p) {
  double info = 0.0;
  if (!p.has_measure_weights()) {
    for (Eigen::Index i = 0; i < p.probs().size(); ++i) info += xlogx(p.probs()[i]);
    return info;
  }
  Walker w(p.axes());
  Eigen::Index flat = 0;
  do {
    double prob = p.probs()[flat];
    if (prob >= kZero) {
      double m = 1.0;
      for (size_t a = 0; a < p.axes().size(); ++a) m *= p.measure_weights()[a][w.idx[a]];
      info += prob * std::log(prob / m);
    }
    ++flat;
  } while (w.next());
  return info;
}

double information(const FiniteDistribution& p, const std::vector<std::string>& axes) {
  if (axes.size() == p.axes().size()) return information(p);
  return information(marginal(p, axes));
}

double correlation(const FiniteDistribution& p,
                   const std::vector<std::vector<std::string>>& grouping) {
  if (grouping.size() < 2) throw GroupingError("grouping needs at least two groups");
  std::set<std::string> seen;
  size_t covered = 0;
  for (const auto& g : grouping) {
    for (const auto& name : g) {
      p.axis_index(name);
      if (!seen.insert(name).second) throw GroupingError("axis '" + name + "' in two groups");
      ++covered;
    }
  }
  if (covered != p.axes().size()) throw GroupingError("grouping must cover all axes");

  double c = information(p);
  for (const auto& g : grouping) c -= information(p, g);
  return c;
}

FiniteDistribution coarsen(const FiniteDistribution& p,
                           const std::map<std::string, Partition>& partitions) {
  std::vector<Axis> axes;
  std::vector<std::vector<Eigen::Index>> remap(p.axes().size());
  for (size_t a = 0; a < p.axes().size(); ++a) {
    const Axis& src = p.axes()[a];
    auto it = partitions.find(src.name);
    if (it == partitions.end()) {
      axes.push_back(src);
      remap[a].resize(src.size());
      for (Eigen::Index i = 0; i < src.size(); ++i) remap[a][i] = i;
      continue;
    }
    auto blocks = it->second.blocks_in_order(src);
    Axis coarse{src.name, blocks};
    remap[a].resize(src.size());
    for (Eigen::Index i = 0; i < src.size(); ++i) {
      const std::string& b = it->second.block_of.at(src.labels[i]);
      remap[a][i] = std::distance(blocks.begin(), std::find(blocks.begin(), blocks.end(), b));
    }
    axes.push_back(std::move(coarse));
  }

  Eigen::Index out_dim = 1;
  for (const auto& a : axes) out_dim *= a.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(out_dim);
  Walker w(p.axes());
  Eigen::Index flat = 0;
  do {
    Eigen::Index o = 0;
    for (size_t a = 0; a < axes.size(); ++a) o = o * axes[a].size() + remap[a][w.idx[a]];
    out[o] += p.probs()[flat];
    ++flat;
  } while (w.next());
  return FiniteDistribution(std::move(axes), std::move(out));
}

std::vector<double> continuous_correlation(const Eigen::MatrixXd& density, int levels) {
  if (levels < 1) throw AxisError("levels must be positive");
  if (std::abs(density.sum() - 1.0) > 1e-10) throw NormError("density does not sum to 1");
  Eigen::Index side = 1 << levels;
  if (density.rows() % side != 0 || density.cols() % side != 0)
    throw AxisError("grid sides must be divisible by 2^levels");

  std::vector<double> out;
  for (int lvl = 1; lvl <= levels; ++lvl) {
    Eigen::Index nx = 1 << lvl, ny = 1 << lvl;
    Eigen::Index bx = density.rows() / nx, by = density.cols() / ny;
    Eigen::MatrixXd coarse(nx, ny);
    for (Eigen::Index i = 0; i < nx; ++i)
      for (Eigen::Index j = 0; j < ny; ++j)
        coarse(i, j) = density.block(i * bx, j * by, bx, by).sum();

    Eigen::VectorXd px = coarse.rowwise().sum();
    Eigen::VectorXd py = coarse.colwise().sum();
    double c = 0.0;
    for (Eigen::Index i = 0; i < nx; ++i)
      for (Eigen::Index j = 0; j < ny; ++j) {
        double pij = coarse(i, j);
        if (pij >= kZero) c += pij * std::log(pij / (px[i] * py[j]));
      }
    out.push_back(c);
  }
  return out;
}

}  // namespace manyworlds
