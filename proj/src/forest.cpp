#include "survhte/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survhte/parallel.hpp"
#include "survhte/rng.hpp"

namespace survhte {

namespace {

constexpr std::uint64_t kClassStream = 0x52464331;  // stream tags
constexpr std::uint64_t kSurvStream = 0x52465356;

int resolve_mtry(int requested, std::size_t p, bool survival) {
  if (requested > 0) return std::min<int>(requested, static_cast<int>(p));
  double d = survival ? static_cast<double>(p) / 3.0 : std::sqrt(static_cast<double>(p));
  return std::max(1, static_cast<int>(std::ceil(d)));
}

// Partial Fisher-Yates; first mtry entries of a fresh 0..p-1 ordering.
void sample_vars(std::vector<int>& vars, int mtry, Rng& rng) {
  const std::size_t p = vars.size();
  std::iota(vars.begin(), vars.end(), 0);
  for (int k = 0; k < mtry; ++k) {
    std::size_t j = k + static_cast<std::size_t>(rng.below(p - k));
    std::swap(vars[k], vars[j]);
  }
}

int find_leaf(const std::vector<detail::Node>& nodes, const double* row) {
  int id = 0;
  while (nodes[id].var >= 0) {
    id = row[nodes[id].var] <= nodes[id].split ? nodes[id].left : nodes[id].right;
  }
  return nodes[id].payload;
}

std::vector<std::size_t> bootstrap(std::size_t n, Rng& rng, std::vector<bool>& in_bag) {
  std::vector<std::size_t> idx(n);
  in_bag.assign(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t i = static_cast<std::size_t>(rng.below(n));
    idx[k] = i;
    in_bag[i] = true;
  }
  return idx;
}

// CHF step-function value at t (or just before t).
double chf_at(const std::vector<double>& times, const std::vector<double>& chf, double t,
              bool left_limit) {
  auto it = left_limit ? std::lower_bound(times.begin(), times.end(), t)
                       : std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0.0;
  return chf[static_cast<std::size_t>(it - times.begin()) - 1];
}

}  // namespace

// ---------------------------------------------------------------------------
// classification forest
// ---------------------------------------------------------------------------

namespace {

struct ClassTreeBuilder {
  const Matrix& x;
  const std::vector<std::uint8_t>& y;
  int mtry;
  int min_node;
  Rng& rng;

  std::vector<std::size_t> idx;  // bootstrap sample, partitioned in place
  std::vector<detail::Node> nodes;
  std::vector<double> leaf_prob;
  std::vector<int> var_buf;
  std::vector<std::pair<double, std::uint8_t>> sort_buf;

  int make_leaf(std::size_t begin, std::size_t end) {
    std::size_t ones = 0;
    for (std::size_t k = begin; k < end; ++k) ones += y[idx[k]];
    nodes.push_back({});
    nodes.back().payload = static_cast<int>(leaf_prob.size());
    leaf_prob.push_back(static_cast<double>(ones) / static_cast<double>(end - begin));
    return static_cast<int>(nodes.size() - 1);
  }

  int build(std::size_t begin, std::size_t end) {
    const std::size_t m = end - begin;
    std::size_t ones = 0;
    for (std::size_t k = begin; k < end; ++k) ones += y[idx[k]];
    if (ones == 0 || ones == m || m < 2 * static_cast<std::size_t>(min_node)) {
      return make_leaf(begin, end);
    }

    sample_vars(var_buf, mtry, rng);
    double best_score = -1.0;
    int best_var = -1;
    double best_split = 0.0;
    for (int v = 0; v < mtry; ++v) {
      const int j = var_buf[v];
      sort_buf.clear();
      for (std::size_t k = begin; k < end; ++k)
        sort_buf.emplace_back(x(idx[k], j), y[idx[k]]);
      std::sort(sort_buf.begin(), sort_buf.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      std::size_t left_ones = 0;
      for (std::size_t k = 0; k + 1 < m; ++k) {
        left_ones += sort_buf[k].second;
        if (sort_buf[k].first == sort_buf[k + 1].first) continue;
        const std::size_t nl = k + 1, nr = m - nl;
        if (nl < static_cast<std::size_t>(min_node) || nr < static_cast<std::size_t>(min_node))
          continue;
        const double l1 = static_cast<double>(left_ones);
        const double l0 = static_cast<double>(nl) - l1;
        const double r1 = static_cast<double>(ones - left_ones);
        const double r0 = static_cast<double>(nr) - r1;
        const double score = (l1 * l1 + l0 * l0) / nl + (r1 * r1 + r0 * r0) / nr;
        if (score > best_score) {
          best_score = score;
          best_var = j;
          best_split = 0.5 * (sort_buf[k].first + sort_buf[k + 1].first);
        }
      }
    }
    if (best_var < 0) return make_leaf(begin, end);

    auto mid = std::partition(idx.begin() + begin, idx.begin() + end, [&](std::size_t i) {
      return x(i, best_var) <= best_split;
    });
    const std::size_t split_at = static_cast<std::size_t>(mid - idx.begin());
    nodes.push_back({});
    const int self = static_cast<int>(nodes.size() - 1);
    nodes[self].var = best_var;
    nodes[self].split = best_split;
    const int left = build(begin, split_at);
    const int right = build(split_at, end);
    nodes[self].left = left;
    nodes[self].right = right;
    return self;
  }
};

}  // namespace

ClassificationForest ClassificationForest::fit(const Matrix& x, const std::vector<std::uint8_t>& y,
                                               const ForestConfig& cfg) {
  const std::size_t n = x.rows();
  if (n == 0 || y.size() != n) throw DataError("classification forest: bad input shapes");
  if (cfg.trees < 1) throw UsageError("forest needs at least one tree");
  const int mtry = resolve_mtry(cfg.mtry, x.cols(), /*survival=*/false);

  ClassificationForest forest;
  forest.n_ = n;
  forest.trees_.resize(cfg.trees);
  parallel_for(cfg.trees, cfg.threads, [&](std::size_t t) {
    Rng rng = Rng::stream(cfg.seed, {kClassStream, t});
    Tree& tree = forest.trees_[t];
    ClassTreeBuilder builder{x, y, mtry, cfg.min_node, rng};
    builder.idx = bootstrap(n, rng, tree.in_bag);
    builder.var_buf.resize(x.cols());
    builder.build(0, n);
    tree.nodes = std::move(builder.nodes);
    tree.leaf_prob = std::move(builder.leaf_prob);
    tree.row_leaf.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      tree.row_leaf[i] = find_leaf(tree.nodes, x.row(i));
  });
  return forest;
}

std::vector<double> ClassificationForest::oob_probabilities() const {
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const Tree& tree : trees_) {
      if (tree.in_bag[i]) continue;
      sum += tree.leaf_prob[tree.row_leaf[i]];
      ++count;
    }
    if (count == 0) {
      for (const Tree& tree : trees_) sum += tree.leaf_prob[tree.row_leaf[i]];
      count = trees_.size();
    }
    out[i] = sum / static_cast<double>(count);
  }
  return out;
}

double ClassificationForest::predict_row(const double* row) const {
  double sum = 0.0;
  for (const Tree& tree : trees_) sum += tree.leaf_prob[find_leaf(tree.nodes, row)];
  return sum / static_cast<double>(trees_.size());
}

// ---------------------------------------------------------------------------
// survival forest
// ---------------------------------------------------------------------------

namespace {

struct SurvTreeBuilder {
  const Matrix& x;
  const std::vector<double>& time;
  const std::vector<std::uint8_t>& event;
  int mtry;
  int min_node;
  Rng& rng;

  std::vector<std::size_t> idx;
  std::vector<detail::Node> nodes;
  std::vector<std::vector<double>> leaf_times;
  std::vector<std::vector<double>> leaf_chf;
  std::vector<int> var_buf;

  // node-level scratch
  std::vector<double> ev_times;      // distinct event times
  std::vector<double> deaths;        // d_k
  std::vector<double> at_risk;       // n_k
  std::vector<int> rank;             // per node sample: #event times <= its time
  std::vector<int> ev_index;         // per node sample: its event-time index or -1
  struct ValRef {
    double value;
    int rank;
    int ev_index;
  };
  std::vector<ValRef> sorted;
  std::vector<double> deaths_left;
  std::vector<double> risk_rank_left;  // counts by rank
  std::vector<double> risk_left;       // suffix sums

  // Collects d_k / n_k over the node samples; returns false if the node has
  // no events.
  bool node_hazard_stats(std::size_t begin, std::size_t end) {
    ev_times.clear();
    std::vector<std::pair<double, std::uint8_t>> te;
    te.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k)
      te.emplace_back(time[idx[k]], event[idx[k]]);
    std::sort(te.begin(), te.end());
    for (const auto& [t, e] : te)
      if (e == 1 && (ev_times.empty() || ev_times.back() != t)) ev_times.push_back(t);
    if (ev_times.empty()) return false;
    const std::size_t d = ev_times.size();
    deaths.assign(d, 0.0);
    at_risk.assign(d, 0.0);
    for (const auto& [t, e] : te) {
      auto it = std::upper_bound(ev_times.begin(), ev_times.end(), t);
      const std::size_t r = static_cast<std::size_t>(it - ev_times.begin());
      // at risk for all event times <= t
      if (r > 0) at_risk[r - 1] += 1.0;
      if (e == 1) {
        const std::size_t k = static_cast<std::size_t>(
            std::lower_bound(ev_times.begin(), ev_times.end(), t) - ev_times.begin());
        deaths[k] += 1.0;
      }
    }
    // suffix-sum at_risk so n_k = #{time >= t_k}
    for (std::size_t k = d - 1; k-- > 0;) at_risk[k] += at_risk[k + 1];
    return true;
  }

  int make_leaf(std::size_t begin, std::size_t end) {
    // Nelson-Aalen over the node's bootstrap samples.
    std::vector<double> times, chf;
    if (node_hazard_stats(begin, end)) {
      times = ev_times;
      chf.resize(times.size());
      double h = 0.0;
      for (std::size_t k = 0; k < times.size(); ++k) {
        h += deaths[k] / at_risk[k];
        chf[k] = h;
      }
    }
    nodes.push_back({});
    nodes.back().payload = static_cast<int>(leaf_times.size());
    leaf_times.push_back(std::move(times));
    leaf_chf.push_back(std::move(chf));
    return static_cast<int>(nodes.size() - 1);
  }

  int build(std::size_t begin, std::size_t end) {
    const std::size_t m = end - begin;
    if (m < 2 * static_cast<std::size_t>(min_node)) return make_leaf(begin, end);
    if (!node_hazard_stats(begin, end)) return make_leaf(begin, end);

    // cache node-level stats before candidate scans overwrite scratch
    const std::vector<double> node_times = ev_times;
    const std::vector<double> node_deaths = deaths;
    const std::vector<double> node_risk = at_risk;
    const std::size_t d = node_times.size();

    rank.resize(m);
    ev_index.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = idx[begin + k];
      rank[k] = static_cast<int>(std::upper_bound(node_times.begin(), node_times.end(), time[i]) -
                                 node_times.begin());
      ev_index[k] = -1;
      if (event[i] == 1) {
        ev_index[k] = static_cast<int>(
            std::lower_bound(node_times.begin(), node_times.end(), time[i]) - node_times.begin());
      }
    }

    sample_vars(var_buf, mtry, rng);
    double best_stat = 0.0;
    int best_var = -1;
    double best_split = 0.0;

    for (int v = 0; v < mtry; ++v) {
      const int j = var_buf[v];
      sorted.resize(m);
      for (std::size_t k = 0; k < m; ++k)
        sorted[k] = {x(idx[begin + k], j), rank[k], ev_index[k]};
      std::sort(sorted.begin(), sorted.end(),
                [](const ValRef& a, const ValRef& b) { return a.value < b.value; });

      deaths_left.assign(d, 0.0);
      risk_rank_left.assign(d + 1, 0.0);
      for (std::size_t k = 0; k + 1 < m; ++k) {
        if (sorted[k].ev_index >= 0) deaths_left[sorted[k].ev_index] += 1.0;
        risk_rank_left[sorted[k].rank] += 1.0;
        if (sorted[k].value == sorted[k + 1].value) continue;
        const std::size_t nl = k + 1, nr = m - nl;
        if (nl < static_cast<std::size_t>(min_node) || nr < static_cast<std::size_t>(min_node))
          continue;
        // log-rank statistic for left vs right at this cutpoint
        double num = 0.0, var = 0.0, risk_suffix = 0.0;
        for (std::size_t q = d; q-- > 0;) {
          risk_suffix += risk_rank_left[q + 1];
          const double nk = node_risk[q];
          if (nk < 1.0) continue;
          const double dk = node_deaths[q];
          const double frac = risk_suffix / nk;
          num += deaths_left[q] - dk * frac;
          if (nk > 1.0) var += dk * frac * (1.0 - frac) * (nk - dk) / (nk - 1.0);
        }
        if (var <= 1e-12) continue;
        const double stat = num * num / var;
        if (stat > best_stat) {
          best_stat = stat;
          best_var = j;
          best_split = 0.5 * (sorted[k].value + sorted[k + 1].value);
        }
      }
    }
    if (best_var < 0) return make_leaf(begin, end);

    auto mid = std::partition(idx.begin() + begin, idx.begin() + end, [&](std::size_t i) {
      return x(i, best_var) <= best_split;
    });
    const std::size_t split_at = static_cast<std::size_t>(mid - idx.begin());
    nodes.push_back({});
    const int self = static_cast<int>(nodes.size() - 1);
    nodes[self].var = best_var;
    nodes[self].split = best_split;
    const int left = build(begin, split_at);
    const int right = build(split_at, end);
    nodes[self].left = left;
    nodes[self].right = right;
    return self;
  }
};

}  // namespace

SurvivalForest SurvivalForest::fit(const Matrix& x, const std::vector<double>& time,
                                   const std::vector<std::uint8_t>& event,
                                   const ForestConfig& cfg) {
  const std::size_t n = x.rows();
  if (n == 0 || time.size() != n || event.size() != n)
    throw DataError("survival forest: bad input shapes");
  if (cfg.trees < 1) throw UsageError("forest needs at least one tree");
  if (std::none_of(event.begin(), event.end(), [](std::uint8_t e) { return e == 1; }))
    throw DataError("survival forest requires at least one event");
  const int mtry = resolve_mtry(cfg.mtry, x.cols(), /*survival=*/true);

  SurvivalForest forest;
  forest.n_ = n;
  forest.trees_.resize(cfg.trees);
  parallel_for(cfg.trees, cfg.threads, [&](std::size_t t) {
    Rng rng = Rng::stream(cfg.seed, {kSurvStream, t});
    Tree& tree = forest.trees_[t];
    SurvTreeBuilder builder{x, time, event, mtry, cfg.min_node, rng};
    builder.idx = bootstrap(n, rng, tree.in_bag);
    builder.var_buf.resize(x.cols());
    builder.build(0, n);
    tree.nodes = std::move(builder.nodes);
    tree.leaves.resize(builder.leaf_times.size());
    for (std::size_t l = 0; l < tree.leaves.size(); ++l) {
      tree.leaves[l].times = std::move(builder.leaf_times[l]);
      tree.leaves[l].chf = std::move(builder.leaf_chf[l]);
    }
    tree.row_leaf.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      tree.row_leaf[i] = find_leaf(tree.nodes, x.row(i));
  });
  return forest;
}

double SurvivalForest::mean_chf(const double* row, double t, bool left_limit) const {
  double sum = 0.0;
  for (const Tree& tree : trees_) {
    const Leaf& leaf = tree.leaves[find_leaf(tree.nodes, row)];
    sum += chf_at(leaf.times, leaf.chf, t, left_limit);
  }
  return sum / static_cast<double>(trees_.size());
}

double SurvivalForest::oob_mean_chf(std::size_t i, double t, bool left_limit) const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const Tree& tree : trees_) {
    if (tree.in_bag[i]) continue;
    const Leaf& leaf = tree.leaves[tree.row_leaf[i]];
    sum += chf_at(leaf.times, leaf.chf, t, left_limit);
    ++count;
  }
  if (count == 0) {
    for (const Tree& tree : trees_) {
      const Leaf& leaf = tree.leaves[tree.row_leaf[i]];
      sum += chf_at(leaf.times, leaf.chf, t, left_limit);
    }
    count = trees_.size();
  }
  return sum / static_cast<double>(count);
}

double SurvivalForest::oob_survival(std::size_t i, double t) const {
  return std::exp(-oob_mean_chf(i, t, false));
}

double SurvivalForest::oob_survival_left(std::size_t i, double t) const {
  return std::exp(-oob_mean_chf(i, t, true));
}

double SurvivalForest::survival(const double* row, double t) const {
  return std::exp(-mean_chf(row, t, false));
}

double SurvivalForest::survival_left(const double* row, double t) const {
  return std::exp(-mean_chf(row, t, true));
}

}  // namespace survhte
