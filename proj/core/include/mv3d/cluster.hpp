#pragma once

#include <vector>

#include "mv3d/errors.hpp"

namespace mv3d {

// Full symmetric pairwise distance matrix with a zero diagonal.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(int n) : n_(n), d_(static_cast<std::size_t>(n) * n, 0.0) {}

  void set(int i, int j, double v) {
    d_[static_cast<std::size_t>(i) * n_ + j] = v;
    d_[static_cast<std::size_t>(j) * n_ + i] = v;
  }
  double at(int i, int j) const { return d_[static_cast<std::size_t>(i) * n_ + j]; }
  int size() const { return n_; }

 private:
  int n_;
  std::vector<double> d_;
};

// One agglomeration event: the two clusters (named by their lowest member
// ids, a < b) merged at the given average-linkage distance.
struct Merge {
  int a = 0, b = 0;
  double distance = 0;
  std::vector<int> members;  // of the merged cluster, ascending
};

// Average-linkage agglomerative clustering (Lance-Williams updates). Ties
// break toward the pair with the lowest member ids, so degenerate matrices
// merge deterministically.
std::vector<Merge> agglomerate_average(const DistanceMatrix& dist);

struct SplitResult {
  std::vector<int> train_ids;
  std::vector<int> test_ids;       // the selected similarity cluster
  std::vector<int> difficult_ids;  // the k models farthest from the test cluster
};

// Clusters the models, cuts at the last level whose largest cluster is at
// most twice the target test size, picks the cluster closest to the target
// as the test set, and moves the k remaining models with the largest mean
// distance to the test members into the difficult set.
SplitResult split_dataset(const DistanceMatrix& dist, double test_fraction, int k_difficult);

}  // namespace mv3d
