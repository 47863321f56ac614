#ifndef MANYWORLDS_CLASSICAL_INFO_HPP
#define MANYWORLDS_CLASSICAL_INFO_HPP

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace manyworlds {

struct AxisError : std::runtime_error { using std::runtime_error::runtime_error; };
struct ConditionOnNull : std::runtime_error { using std::runtime_error::runtime_error; };
struct GroupingError : std::runtime_error { using std::runtime_error::runtime_error; };
struct PartitionError : std::runtime_error { using std::runtime_error::runtime_error; };
struct NormError : std::runtime_error { using std::runtime_error::runtime_error; };

struct Axis {
  std::string name;
  std::vector<std::string> labels;
  Eigen::Index size() const { return static_cast<Eigen::Index>(labels.size()); }
};

/// Joint probabilities over labeled finite axes, with optional per-cell
/// information-measure weights given per axis (the a_i, b_j, ... factors).
class FiniteDistribution {
 public:
  FiniteDistribution() = default;
  FiniteDistribution(std::vector<Axis> axes, Eigen::VectorXd probs,
                     std::vector<Eigen::VectorXd> measure_weights = {});

  const std::vector<Axis>& axes() const { return axes_; }
  const Eigen::VectorXd& probs() const { return probs_; }
  const std::vector<Eigen::VectorXd>& measure_weights() const { return weights_; }
  bool has_measure_weights() const { return !weights_.empty(); }

  Eigen::Index axis_index(const std::string& name) const;
  std::vector<Eigen::Index> strides() const;

  /// Loads {axes:[{name, labels[]}], probs:[...], measure_weights?:[[...],...]}.
  static FiniteDistribution from_json(const std::string& text);

 private:
  std::vector<Axis> axes_;
  Eigen::VectorXd probs_;
  std::vector<Eigen::VectorXd> weights_;
};

/// Surjective map from source labels onto block labels.
struct Partition {
  std::map<std::string, std::string> block_of;
  std::vector<std::string> blocks_in_order(const Axis& source) const;
};

FiniteDistribution marginal(const FiniteDistribution& p, const std::vector<std::string>& keep);

FiniteDistribution conditional(const FiniteDistribution& p,
                               const std::map<std::string, std::string>& fixed);

/// Signed information: sum P ln(P / measure_weight), in nats.
double information(const FiniteDistribution& p);

/// Information of a marginal over the named axes.
double information(const FiniteDistribution& p, const std::vector<std::string>& axes);

/// C = I_joint - sum of per-group informations; independent of measure weights.
double correlation(const FiniteDistribution& p,
                   const std::vector<std::vector<std::string>>& grouping);

FiniteDistribution coarsen(const FiniteDistribution& p,
                           const std::map<std::string, Partition>& partitions);

/// Correlation sequence C_1 <= ... <= C_levels of a normalized density on a
/// 2D grid, via nested dyadic partitions. Grid sides must be divisible by
/// 2^levels.
std::vector<double> continuous_correlation(const Eigen::MatrixXd& density, int levels);

/// x*ln(x) with the 0 ln 0 := 0 convention (cells below 1e-300 are zeros).
double xlogx(double x);

}  // namespace manyworlds

#endif
