#include "pocsim/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "pocsim/io.hpp"
#include "pocsim/stats.hpp"

namespace pocsim {

EmpiricalMeasure::EmpiricalMeasure(std::vector<Point> pts) : points(std::move(pts)) {
  if (points.empty()) throw std::invalid_argument("EmpiricalMeasure: N must be >= 1");
  const std::size_t d = points.front().size();
  for (const auto& p : points)
    if (p.size() != d)
      throw std::invalid_argument("EmpiricalMeasure: inconsistent dimensions");
}

EmpiricalMeasure EmpiricalMeasure::from_scalars(std::span<const double> xs) {
  std::vector<Point> pts;
  pts.reserve(xs.size());
  for (double x : xs) pts.push_back({x});
  return EmpiricalMeasure(std::move(pts));
}

double w1_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("w1_1d: empty input");
  if (a.size() != b.size())
    throw std::invalid_argument("w1_1d: sample counts differ (resample first)");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::vector<double> gaps(sa.size());
  for (std::size_t i = 0; i < sa.size(); ++i) gaps[i] = std::fabs(sa[i] - sb[i]);
  return pairwise_sum(gaps) / static_cast<double>(sa.size());
}

double w1_1d_unequal(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("w1_1d_unequal: empty input");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  // Integral of |F_a - F_b| over the merged grid.
  const double wa = 1.0 / static_cast<double>(sa.size());
  const double wb = 1.0 / static_cast<double>(sb.size());
  std::size_t ia = 0, ib = 0;
  double fa = 0.0, fb = 0.0;
  double prev = std::min(sa[0], sb[0]);
  CompensatedSum area;
  while (ia < sa.size() || ib < sb.size()) {
    const double xa = ia < sa.size() ? sa[ia] : std::numeric_limits<double>::infinity();
    const double xb = ib < sb.size() ? sb[ib] : std::numeric_limits<double>::infinity();
    const double x = std::min(xa, xb);
    area.add(std::fabs(fa - fb) * (x - prev));
    prev = x;
    while (ia < sa.size() && sa[ia] == x) {
      fa += wa;
      ++ia;
    }
    while (ib < sb.size() && sb[ib] == x) {
      fb += wb;
      ++ib;
    }
  }
  return area.value();
}

namespace {

double euclidean(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Minimum-cost perfect matching on a square cost matrix, shortest augmenting
// path formulation (Jonker-Volgenant style), O(n^3). Returns the optimal
// total cost; row_to_col receives the assignment.
double min_cost_matching(const std::vector<std::vector<double>>& cost,
                         std::vector<int>& row_to_col) {
  const int n = static_cast<int>(cost.size());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  row_to_col.assign(n, -1);
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    if (p[j]) {
      row_to_col[p[j] - 1] = j - 1;
      total += cost[p[j] - 1][j - 1];
    }
  }
  return total;
}

}  // namespace

double w1_matched(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.size() != b.size()) throw std::invalid_argument("w1_matched: size mismatch");
  if (a.dim() != b.dim()) throw std::invalid_argument("w1_matched: dimension mismatch");
  if (a.size() > kW1ExactCap)
    throw std::invalid_argument("w1_matched: n exceeds the exact-matching cap; subsample first");
  const std::size_t n = a.size();
  std::vector<std::vector<double>> cost(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost[i][j] = euclidean(a.points[i], b.points[j]);
  std::vector<int> assignment;
  return min_cost_matching(cost, assignment) / static_cast<double>(n);
}

std::vector<Point> subsample(std::span<const Point> points, std::size_t target,
                             std::uint64_t seed) {
  if (target > points.size())
    throw std::invalid_argument("subsample: target exceeds input size");
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  RngStream rng(seed, /*stream_id=*/0x73756273 /* "subs" */);
  for (std::size_t i = 0; i < target; ++i) {
    const std::size_t j = i + rng.below(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  std::vector<Point> out;
  out.reserve(target);
  for (std::size_t i = 0; i < target; ++i) out.push_back(points[idx[i]]);
  return out;
}

std::vector<double> subsample(std::span<const double> xs, std::size_t target,
                              std::uint64_t seed) {
  std::vector<Point> pts;
  pts.reserve(xs.size());
  for (double x : xs) pts.push_back({x});
  auto sub = subsample(std::span<const Point>(pts), target, seed);
  std::vector<double> out;
  out.reserve(target);
  for (const auto& p : sub) out.push_back(p[0]);
  return out;
}

namespace {

// For a fixed pairing with distances d_i, the admissible epsilons are those
// with #{d_i > eps}/N < eps; the infimum over the region where exactly k
// distances may exceed eps is max(d_(N-k), k/N), so the pairing's value is
// the minimum of that expression over k (and never exceeds 1).
double lp_eps_for_pairing(std::vector<double>& dists) {
  std::sort(dists.begin(), dists.end());
  const std::size_t n = dists.size();
  double best = 1.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double d = (k == n) ? 0.0 : dists[n - 1 - k];
    const double eps = std::max(d, static_cast<double>(k) / static_cast<double>(n));
    best = std::min(best, eps);
  }
  return best;
}

}  // namespace

double lp_config_distance(
    std::span<const Point> x, std::span<const Point> y,
    const std::function<double(const Point&, const Point&)>& metric) {
  if (x.size() != y.size() || x.empty())
    throw std::invalid_argument("lp_config_distance: size mismatch");
  const std::size_t n = x.size();
  if (n <= 10) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = 1.0;
    std::vector<double> dists(n);
    do {
      for (std::size_t i = 0; i < n; ++i) dists[i] = metric(x[i], y[perm[i]]);
      best = std::min(best, lp_eps_for_pairing(dists));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  // Greedy upper bound: repeatedly match the closest free pair.
  struct Edge {
    double d;
    std::size_t i, j;
  };
  std::vector<Edge> edges;
  edges.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) edges.push_back({metric(x[i], y[j]), i, j});
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return a.d < b.d; });
  std::vector<char> used_i(n, 0), used_j(n, 0);
  std::vector<double> dists;
  dists.reserve(n);
  for (const auto& e : edges) {
    if (used_i[e.i] || used_j[e.j]) continue;
    used_i[e.i] = used_j[e.j] = 1;
    dists.push_back(e.d);
    if (dists.size() == n) break;
  }
  return lp_eps_for_pairing(dists);
}

double lp_config_distance(std::span<const Point> x, std::span<const Point> y) {
  return lp_config_distance(x, y, euclidean);
}

ObservableDictionary ObservableDictionary::standard() {
  ObservableDictionary d;
  d.id = "standard";
  d.items = {
      {"cos(x)", [](double x) { return std::cos(x); }, 1.0, 1.0},
      {"sin(x)", [](double x) { return std::sin(x); }, 1.0, 1.0},
      {"cos(2x)", [](double x) { return std::cos(2.0 * x); }, 1.0, 2.0},
      {"tanh(x)", [](double x) { return std::tanh(x); }, 1.0, 1.0},
  };
  return d;
}

ObservableDictionary ObservableDictionary::clipped_poly() {
  const double cap = 3.0;
  ObservableDictionary d;
  d.id = "clipped-poly";
  d.items = {
      {"clip(x)", [cap](double x) { return std::clamp(x, -cap, cap); }, cap, 1.0},
      {"clip(x^2)",
       [cap](double x) { return std::min(x * x, cap * cap); },
       cap * cap, 2.0 * cap},
  };
  return d;
}

ObservableDictionary ObservableDictionary::by_id(const std::string& id) {
  if (id == "standard" || id.empty()) return standard();
  if (id == "clipped-poly") return clipped_poly();
  throw std::invalid_argument("unknown dictionary id: " + id);
}

namespace {

struct DefectTables {
  // particle_mean[a][r]: mean of observable a over particles of replica r
  // pair_mean[pair][r]:  mean over ordered particle pairs (i != j)
  std::vector<std::vector<double>> particle_mean;
  std::vector<std::vector<double>> pair_mean;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t n_replicas = 0;
};

DefectTables build_tables(const std::vector<std::vector<Point>>& replicas,
                          const ObservableDictionary& dict, std::size_t coord) {
  if (dict.items.empty()) throw std::invalid_argument("chaoticity_defect: empty dictionary");
  if (replicas.size() < 2) throw std::invalid_argument("chaoticity_defect: need >= 2 replicas");
  const std::size_t n_obs = dict.items.size();
  DefectTables t;
  t.n_replicas = replicas.size();
  for (std::size_t a = 0; a < n_obs; ++a)
    for (std::size_t b = a; b < n_obs; ++b) t.pairs.emplace_back(a, b);
  t.particle_mean.assign(n_obs, std::vector<double>(t.n_replicas, 0.0));
  t.pair_mean.assign(t.pairs.size(), std::vector<double>(t.n_replicas, 0.0));

  std::vector<double> values;
  for (std::size_t r = 0; r < t.n_replicas; ++r) {
    const auto& config = replicas[r];
    const std::size_t n = config.size();
    if (n < 2) throw std::invalid_argument("chaoticity_defect: N must be >= 2");
    // sums S_a and S_ab over particles; the ordered-pair mean is
    // (S_a S_b - S_ab) / (N(N-1)).
    std::vector<double> s(n_obs, 0.0);
    std::vector<double> s_cross(t.pairs.size(), 0.0);
    values.resize(n_obs);
    for (const auto& particle : config) {
      if (coord >= particle.size())
        throw std::invalid_argument("chaoticity_defect: coordinate out of range");
      const double x = particle[coord];
      for (std::size_t a = 0; a < n_obs; ++a) {
        values[a] = dict.items[a].f(x);
        s[a] += values[a];
      }
      for (std::size_t p = 0; p < t.pairs.size(); ++p)
        s_cross[p] += values[t.pairs[p].first] * values[t.pairs[p].second];
    }
    const double nn = static_cast<double>(n) * static_cast<double>(n - 1);
    for (std::size_t a = 0; a < n_obs; ++a)
      t.particle_mean[a][r] = s[a] / static_cast<double>(n);
    for (std::size_t p = 0; p < t.pairs.size(); ++p) {
      const auto [a, b] = t.pairs[p];
      t.pair_mean[p][r] = (s[a] * s[b] - s_cross[p]) / nn;
    }
  }
  return t;
}

// Defect with replicas in [0, R) excluding `skip` (or none if skip >= R).
double defect_excluding(const DefectTables& t, std::size_t skip) {
  const std::size_t total = t.n_replicas;
  const double r_count = static_cast<double>(total - (skip < total ? 1 : 0));
  double worst = 0.0;
  for (std::size_t p = 0; p < t.pairs.size(); ++p) {
    const auto [a, b] = t.pairs[p];
    double sum_pair = 0.0, sum_a = 0.0, sum_b = 0.0, sum_ab = 0.0;
    for (std::size_t r = 0; r < total; ++r) {
      if (r == skip) continue;
      sum_pair += t.pair_mean[p][r];
      sum_a += t.particle_mean[a][r];
      sum_b += t.particle_mean[b][r];
      sum_ab += t.particle_mean[a][r] * t.particle_mean[b][r];
    }
    const double term1 = sum_pair / r_count;
    const double term2 = (sum_a * sum_b - sum_ab) / (r_count * (r_count - 1.0));
    worst = std::max(worst, std::fabs(term1 - term2));
  }
  return worst;
}

}  // namespace

DefectEstimate chaoticity_defect(const std::vector<std::vector<Point>>& replicas,
                                 const ObservableDictionary& dict,
                                 std::size_t coord) {
  const DefectTables t = build_tables(replicas, dict, coord);
  DefectEstimate est;
  est.value = defect_excluding(t, t.n_replicas);

  // Identify the maximizing pair for reporting.
  {
    double worst = -1.0;
    for (std::size_t p = 0; p < t.pairs.size(); ++p) {
      const auto [a, b] = t.pairs[p];
      double sum_pair = 0.0, sum_a = 0.0, sum_b = 0.0, sum_ab = 0.0;
      for (std::size_t r = 0; r < t.n_replicas; ++r) {
        sum_pair += t.pair_mean[p][r];
        sum_a += t.particle_mean[a][r];
        sum_b += t.particle_mean[b][r];
        sum_ab += t.particle_mean[a][r] * t.particle_mean[b][r];
      }
      const double rr = static_cast<double>(t.n_replicas);
      const double v = std::fabs(sum_pair / rr - (sum_a * sum_b - sum_ab) / (rr * (rr - 1.0)));
      if (v > worst) {
        worst = v;
        est.argmax_pair = dict.items[a].name + "*" + dict.items[b].name;
      }
    }
  }

  // Delete-one jackknife over replicas.
  if (t.n_replicas >= 3) {
    std::vector<double> loo(t.n_replicas);
    for (std::size_t r = 0; r < t.n_replicas; ++r) loo[r] = defect_excluding(t, r);
    const double m = mean(loo);
    double ss = 0.0;
    for (double v : loo) ss += (v - m) * (v - m);
    const double rr = static_cast<double>(t.n_replicas);
    est.stderr_value = std::sqrt((rr - 1.0) / rr * ss);
  }
  return est;
}

DefectEstimate chaoticity_defect(const std::vector<std::vector<double>>& replicas,
                                 const ObservableDictionary& dict) {
  std::vector<std::vector<Point>> wrapped(replicas.size());
  for (std::size_t r = 0; r < replicas.size(); ++r) {
    wrapped[r].reserve(replicas[r].size());
    for (double v : replicas[r]) wrapped[r].push_back({v});
  }
  return chaoticity_defect(wrapped, dict, 0);
}

std::vector<std::vector<double>> marginal_samples(
    const std::vector<std::vector<double>>& replicas, std::size_t k) {
  std::vector<std::vector<double>> out;
  out.reserve(replicas.size());
  for (const auto& config : replicas) {
    if (k > config.size())
      throw std::invalid_argument("marginal_samples: k exceeds particle count");
    out.emplace_back(config.begin(), config.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

double ks_distance(std::span<const double> samples,
                   const std::function<double(double)>& reference_cdf) {
  return ks_statistic(samples, reference_cdf);
}

std::string ChaosReport::to_csv() const {
  CsvWriter csv({"model", "N", "replicas", "defect", "stderr"});
  for (const auto& row : rows) {
    csv.append_row_raw({model_id, std::to_string(row.n_particles),
                        std::to_string(row.replicas), format_double(row.defect),
                        format_double(row.stderr_value)});
  }
  return csv.str();
}

std::string ChaosReport::to_jsonl() const {
  std::string out;
  for (const auto& row : rows) {
    nlohmann::json j{{"model", model_id},
                     {"N", row.n_particles},
                     {"replicas", row.replicas},
                     {"defect", row.defect},
                     {"stderr", row.stderr_value}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace pocsim
