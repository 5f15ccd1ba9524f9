#pragma once

#include <string>
#include <utility>

#include "ntclust/types.hpp"

namespace nt {

enum class MatrixFormat { csv, binary };

// Matrices live in memory with samples as columns (N x K). On disk a sample
// is a row: CSV is one sample per line, the NTB1 binary format stores
// rows = samples.
Mat load_matrix(const std::string& path, MatrixFormat format);
void save_matrix(const Mat& matrix, const std::string& path, MatrixFormat format);

// Per-sample zero mean, unit population variance.
Mat standardize(const Mat& matrix);

// C Gaussian blobs with centroids resampled until they are pairwise at least
// 10*spread apart. Labels are 1..C, cluster-major.
std::pair<Mat, Partition> synth_clusters(int clusters, int dim, int per_cluster, double spread,
                                         std::uint64_t seed);

void save_model(const TransformModel& model, const HyperParams& hyper, const std::string& path);
TransformModel load_model(const std::string& path, HyperParams* hyper_out = nullptr);

Partition load_labels(const std::string& path);
void save_labels(const Partition& partition, const std::string& path);

// Configuration text format: a JSON object with exactly the hyperparameter
// keys; unknown keys are rejected, missing keys take defaults.
HyperParams parse_config_json(const std::string& text);
std::string config_to_json(const HyperParams& hyper);
HyperParams load_config(const std::string& path);

}  // namespace nt
