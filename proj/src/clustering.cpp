#include "rlkge/clustering.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <limits>

#include "rlkge/errors.hpp"
#include "rlkge/rng.hpp"

namespace rlkge {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Matrix seed_centers(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  Matrix centers(k, points.cols());
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  const auto take = [&](std::size_t c, std::size_t idx) {
    chosen[idx] = true;
    std::copy(points.row(idx).begin(), points.row(idx).end(), centers.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(points.row(i), centers.row(c)));
  };

  take(0, rng.below(n));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double x : d2) total += x;
    std::size_t pick = n;
    if (total > 0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      // Every remaining point coincides with a center: draw among unchosen rows.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) free.push_back(i);
      }
      pick = free[rng.below(free.size())];
    }
    take(c, pick);
  }
  return centers;
}

std::uint32_t nearest(std::span<const double> p, const Matrix& centers) {
  std::uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d = sq_dist(p, centers.row(c));
    if (d < best_d) {  // strict: ties stay with the lower id
      best_d = d;
      best = static_cast<std::uint32_t>(c);
    }
  }
  return best;
}

void repair_empty(const Matrix& points, const Matrix& centers,
                  std::vector<std::uint32_t>& assignment) {
  const std::size_t k = centers.rows();
  std::vector<std::size_t> sizes(k, 0);
  for (auto c : assignment) ++sizes[c];
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] > 0) continue;
    std::size_t far = assignment.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      if (sizes[assignment[i]] < 2) continue;
      const double d = sq_dist(points.row(i), centers.row(assignment[i]));
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    --sizes[assignment[far]];
    assignment[far] = static_cast<std::uint32_t>(c);
    sizes[c] = 1;
  }
}

void update_centers(const Matrix& points, std::span<const std::uint32_t> assignment,
                    Matrix& centers) {
  std::vector<std::size_t> sizes(centers.rows(), 0);
  for (auto& x : centers.data()) x = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    auto c = centers.row(assignment[i]);
    const auto p = points.row(i);
    for (std::size_t j = 0; j < p.size(); ++j) c[j] += p[j];
    ++sizes[assignment[i]];
  }
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    for (auto& x : centers.row(c)) x /= static_cast<double>(sizes[c]);
  }
}

}  // namespace

double within_cluster_ss(const Matrix& points, std::span<const std::uint32_t> assignment,
                         const Matrix& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    s += sq_dist(points.row(i), centroids.row(assignment[i]));
  }
  return s;
}

RelationClusters kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                        std::size_t max_iters) {
  const std::size_t n = points.rows();
  if (k < 1 || k > n) throw UsageError("k must lie in [1, number of rows]");
  if (max_iters < 1) throw UsageError("max_iters must be at least 1");

  Rng rng(seed);
  RelationClusters out;
  out.k = k;
  out.centroids = seed_centers(points, k, rng);
  out.assignment.assign(n, 0);

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    std::vector<std::uint32_t> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = nearest(points.row(i), out.centroids);
    repair_empty(points, out.centroids, next);
    if (iter > 0 && next == out.assignment) {
      out.converged = true;
      break;
    }
    out.assignment = std::move(next);
    update_centers(points, out.assignment, out.centroids);
    out.iterations = iter + 1;

    const double w = within_cluster_ss(points, out.assignment, out.centroids);
    if (!out.wcss_history.empty()) {
      const double prev = out.wcss_history.back();
      if (w > prev + 1e-9 * std::max(1.0, prev)) {
        throw NumericError("k-means within-cluster sum of squares increased");
      }
    }
    out.wcss_history.push_back(w);
  }
  spdlog::info("event=kmeans k={} rows={} iterations={} converged={} wcss={}", k, n,
               out.iterations, out.converged, out.wcss());
  return out;
}

void write_clusters(const std::filesystem::path& path, const RelationClusters& clusters,
                    std::span<const std::string> relation_names) {
  if (relation_names.size() != clusters.assignment.size()) {
    throw UsageError("relation names do not match the cluster assignment");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t r = 0; r < relation_names.size(); ++r) {
    out << relation_names[r] << '\t' << clusters.assignment[r] << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<std::uint32_t> read_clusters(const std::filesystem::path& path,
                                         std::span<const std::string> relation_names,
                                         std::size_t* num_clusters) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < relation_names.size(); ++r) index.emplace(relation_names[r], r);

  constexpr auto kUnset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> assignment(relation_names.size(), kUnset);
  std::uint32_t max_id = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw ParseError(path.string(), lineno, "expected 2 fields");
    auto it = index.find(line.substr(0, tab));
    if (it == index.end()) throw ParseError(path.string(), lineno, "unknown relation");
    std::uint32_t id = 0;
    try {
      id = static_cast<std::uint32_t>(std::stoul(line.substr(tab + 1)));
    } catch (const std::exception&) {
      throw ParseError(path.string(), lineno, "bad cluster id");
    }
    assignment[it->second] = id;
    max_id = std::max(max_id, id);
  }
  for (std::size_t r = 0; r < assignment.size(); ++r) {
    if (assignment[r] == kUnset) throw DataError("relation without cluster: " + relation_names[r]);
  }
  if (num_clusters) *num_clusters = assignment.empty() ? 0 : max_id + 1;
  return assignment;
}

}  // namespace rlkge
