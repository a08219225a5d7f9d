#include "mv3d/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mv3d {

namespace {

struct Cluster {
  int min_id;
  int size;
  std::vector<int> members;
  bool alive = true;
};

}  // namespace

std::vector<Merge> agglomerate_average(const DistanceMatrix& dist) {
  const int n = dist.size();
  std::vector<Cluster> clusters(n);
  for (int i = 0; i < n; ++i) clusters[i] = {i, 1, {i}, true};

  // linkage distances between live clusters, updated with Lance-Williams
  std::vector<double> link(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) link[static_cast<std::size_t>(i) * n + j] = dist.at(i, j);

  std::vector<Merge> merges;
  merges.reserve(n > 0 ? n - 1 : 0);
  for (int round = 0; round + 1 < n; ++round) {
    int best_i = -1, best_j = -1;
    double best = 0;
    for (int i = 0; i < n; ++i) {
      if (!clusters[i].alive) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!clusters[j].alive) continue;
        const double d = link[static_cast<std::size_t>(i) * n + j];
        // ties: lowest (min_id_i, min_id_j); slots are ordered by min_id
        if (best_i < 0 || d < best) {
          best = d;
          best_i = i;
          best_j = j;
        }
      }
    }
    Cluster& a = clusters[best_i];
    Cluster& b = clusters[best_j];
    Merge m;
    m.a = std::min(a.min_id, b.min_id);
    m.b = std::max(a.min_id, b.min_id);
    m.distance = best;
    m.members.resize(a.members.size() + b.members.size());
    std::merge(a.members.begin(), a.members.end(), b.members.begin(), b.members.end(),
               m.members.begin());
    // merge b into a
    for (int k = 0; k < n; ++k) {
      if (!clusters[k].alive || k == best_i || k == best_j) continue;
      const double dak = link[static_cast<std::size_t>(best_i) * n + k];
      const double dbk = link[static_cast<std::size_t>(best_j) * n + k];
      const double upd = (a.size * dak + b.size * dbk) / static_cast<double>(a.size + b.size);
      link[static_cast<std::size_t>(best_i) * n + k] = upd;
      link[static_cast<std::size_t>(k) * n + best_i] = upd;
    }
    a.min_id = m.a;
    a.size += b.size;
    a.members = m.members;
    b.alive = false;
    merges.push_back(std::move(m));
  }
  return merges;
}

SplitResult split_dataset(const DistanceMatrix& dist, double test_fraction, int k_difficult) {
  const int n = dist.size();
  if (n < 10) {
    throw std::invalid_argument("split_dataset: need at least 10 models, got " +
                                std::to_string(n));
  }
  const int target = std::max<int>(1, static_cast<int>(std::lround(test_fraction * n)));
  const auto merges = agglomerate_average(dist);

  // apply merges while the largest cluster stays within 2x the target size
  std::vector<std::vector<int>> clusters(n);
  std::vector<int> slot_of(n);  // model id -> cluster slot
  for (int i = 0; i < n; ++i) {
    clusters[i] = {i};
    slot_of[i] = i;
  }
  for (const Merge& m : merges) {
    if (static_cast<int>(m.members.size()) > 2 * target) break;
    const int sa = slot_of[m.a], sb = slot_of[m.b];
    if (sa == sb) continue;
    for (int id : clusters[sb]) slot_of[id] = sa;
    clusters[sa].insert(clusters[sa].end(), clusters[sb].begin(), clusters[sb].end());
    clusters[sb].clear();
  }

  // test cluster: size closest to target, ties to the lowest member id
  int best_slot = -1;
  for (int s = 0; s < n; ++s) {
    if (clusters[s].empty()) continue;
    if (best_slot < 0) {
      best_slot = s;
      continue;
    }
    const int d_new = std::abs(static_cast<int>(clusters[s].size()) - target);
    const int d_best = std::abs(static_cast<int>(clusters[best_slot].size()) - target);
    const int lo_new = *std::min_element(clusters[s].begin(), clusters[s].end());
    const int lo_best = *std::min_element(clusters[best_slot].begin(), clusters[best_slot].end());
    if (d_new < d_best || (d_new == d_best && lo_new < lo_best)) best_slot = s;
  }

  SplitResult out;
  out.test_ids = clusters[best_slot];
  std::sort(out.test_ids.begin(), out.test_ids.end());
  std::vector<bool> in_test(n, false);
  for (int id : out.test_ids) in_test[id] = true;

  std::vector<int> pool;
  for (int i = 0; i < n; ++i) {
    if (!in_test[i]) pool.push_back(i);
  }
  if (k_difficult > static_cast<int>(pool.size())) {
    throw std::invalid_argument("split_dataset: k_difficult " + std::to_string(k_difficult) +
                                " exceeds the remaining pool of " + std::to_string(pool.size()));
  }
  // k pool models with the largest mean distance to the test members
  std::vector<std::pair<double, int>> ranked;
  for (int id : pool) {
    double mean = 0;
    for (int t : out.test_ids) mean += dist.at(id, t);
    mean /= static_cast<double>(out.test_ids.size());
    ranked.emplace_back(mean, id);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });
  for (int i = 0; i < k_difficult; ++i) out.difficult_ids.push_back(ranked[i].second);
  std::sort(out.difficult_ids.begin(), out.difficult_ids.end());

  std::vector<bool> in_difficult(n, false);
  for (int id : out.difficult_ids) in_difficult[id] = true;
  for (int id : pool) {
    if (!in_difficult[id]) out.train_ids.push_back(id);
  }
  return out;
}

}  // namespace mv3d
