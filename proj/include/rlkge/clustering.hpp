#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rlkge/models.hpp"

namespace rlkge {

struct RelationClusters {
  std::size_t k = 0;
  std::vector<std::uint32_t> assignment;  // row -> cluster in [0, k)
  Matrix centroids;                       // k x width
  std::vector<double> wcss_history;       // after each Lloyd iteration
  std::size_t iterations = 0;
  bool converged = false;

  double wcss() const { return wcss_history.empty() ? 0.0 : wcss_history.back(); }
};

/// Lloyd's algorithm on the rows of points with k-means++ seeding.
///
/// Nearest-centroid ties go to the lower cluster id. An empty cluster takes
/// the point farthest from its current centroid among clusters holding more
/// than one point. Stops at an assignment fixpoint or after max_iters
/// iterations. Throws NumericError if the within-cluster sum of squares ever
/// rises between iterations.
RelationClusters kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                        std::size_t max_iters = 100);

/// Sum over rows of the squared distance to the assigned centroid.
double within_cluster_ss(const Matrix& points, std::span<const std::uint32_t> assignment,
                         const Matrix& centroids);

/// Lines `relation_name<TAB>cluster_id`.
void write_clusters(const std::filesystem::path& path, const RelationClusters& clusters,
                    std::span<const std::string> relation_names);

/// Reads a clusters file back into an assignment indexed by relation id.
std::vector<std::uint32_t> read_clusters(const std::filesystem::path& path,
                                         std::span<const std::string> relation_names,
                                         std::size_t* num_clusters = nullptr);

}  // namespace rlkge
