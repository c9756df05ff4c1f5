#pragma once

#include <cstdint>
#include <vector>

#include "survhte/common.hpp"

namespace survhte {

struct ForestConfig {
  int trees = 500;
  int mtry = 0;  // 0 -> ceil(sqrt(p)) for classification, ceil(p/3) for survival
  int min_node = 15;
  std::uint64_t seed = 1;
  int threads = 0;
};

namespace detail {
struct Node {
  int var = -1;  // -1 marks a leaf
  double split = 0.0;  // x[var] <= split goes left
  int left = -1;
  int right = -1;
  int payload = -1;  // leaf payload index
};
}  // namespace detail

// Bootstrap ensemble of Gini-split probability trees; leaves hold the
// class-1 fraction. Out-of-bag predictions for subject i average only over
// trees whose bootstrap sample does not contain i.
class ClassificationForest {
 public:
  static ClassificationForest fit(const Matrix& x, const std::vector<std::uint8_t>& y,
                                  const ForestConfig& cfg);

  // For training rows; rows that were never out of bag fall back to the full
  // ensemble (possible only for very small tree counts).
  std::vector<double> oob_probabilities() const;

  double predict_row(const double* row) const;

  bool in_bag(std::size_t tree, std::size_t row) const { return trees_[tree].in_bag[row]; }
  std::size_t tree_count() const { return trees_.size(); }

 private:
  struct Tree {
    std::vector<detail::Node> nodes;
    std::vector<double> leaf_prob;
    std::vector<bool> in_bag;          // size n
    std::vector<std::int32_t> row_leaf;  // training-row leaf payload
  };
  std::vector<Tree> trees_;
  std::size_t n_ = 0;
};

// Log-rank split survival trees with Nelson-Aalen cumulative hazards at the
// leaves; ensemble survival is exp(-mean CHF).
class SurvivalForest {
 public:
  static SurvivalForest fit(const Matrix& x, const std::vector<double>& time,
                            const std::vector<std::uint8_t>& event, const ForestConfig& cfg);

  // Out-of-bag survival at t for training row i.
  double oob_survival(std::size_t i, double t) const;
  double oob_survival_left(std::size_t i, double t) const;  // left limit, S(t-)

  // Full-ensemble survival for an arbitrary covariate row.
  double survival(const double* row, double t) const;
  double survival_left(const double* row, double t) const;

  bool in_bag(std::size_t tree, std::size_t row) const { return trees_[tree].in_bag[row]; }
  std::size_t tree_count() const { return trees_.size(); }

 private:
  struct Leaf {
    std::vector<double> times;  // distinct event times in the node, ascending
    std::vector<double> chf;    // Nelson-Aalen cumulative hazard at each time
  };
  struct Tree {
    std::vector<detail::Node> nodes;
    std::vector<Leaf> leaves;
    std::vector<bool> in_bag;
    std::vector<std::int32_t> row_leaf;
  };

  double mean_chf(const double* row, double t, bool left_limit) const;
  double oob_mean_chf(std::size_t i, double t, bool left_limit) const;

  std::vector<Tree> trees_;
  std::size_t n_ = 0;
};

}  // namespace survhte
