#pragma once

#include "ntclust/types.hpp"

namespace nt {

// Best label agreement fraction under an optimal one-to-one cluster matching.
double cluster_accuracy(const Partition& pred, const Partition& truth);

// Mutual information normalized by the geometric mean of the entropies,
// natural logarithms, 0*log(0) = 0.
double nmi(const Partition& pred, const Partition& truth);

// sigma_max / sigma_min; returns +infinity when sigma_min < 1e-14*sigma_max.
double conditioning(const Mat& a);

// Mean absolute normalized inner product over distinct row pairs.
double coherence(const Mat& a);

MapDiagnostics map_diagnostics(const Mat& a);

// Exact Euclidean k-NN majority vote. Distance ties break to the smaller
// training index, vote ties to the smallest label.
Partition knn_classify(const Mat& train_repr, const Partition& train_labels, const Mat& test_repr, int k);

}  // namespace nt
