#pragma once

#include <string>
#include <variant>
#include <vector>

#include "brainnet/graph.hpp"
#include "brainnet/tensor.hpp"

namespace brainnet {

struct TopKRule {
    std::size_t k = 100;
};
struct ThresholdRule {
    double tau = 0.5;  // on sigma(M)
};
using SubgraphRule = std::variant<TopKRule, ThresholdRule>;

struct KeptEdge {
    std::size_t i, j;  // i < j
    double weight;     // masked weight
    double mask;       // sigma(M)_ij
};

struct ExplanationSubgraph {
    std::size_t n = 0;
    std::vector<KeptEdge> kept_edges;
};

// Keeps the high-mask edges of the nonzero edges of W_masked. top_k ranks by
// sigma(M) descending with lexicographic (i,j) tie-break; threshold keeps
// sigma(M) > tau. k beyond the available edge count clamps to all of them.
ExplanationSubgraph threshold_subgraph(const Tensor& w_masked, const Tensor& sigma_m,
                                       const SubgraphRule& rule);

struct NodeMetrics {
    std::vector<double> degree;
    std::vector<double> strength;    // sum of |w| over kept incident edges
    std::vector<double> clustering;  // binarized kept-edge graph
};

NodeMetrics node_metrics(const ExplanationSubgraph& sub);

struct SystemRanking {
    // per measure: systems ordered by descending mean member metric
    std::vector<System> by_degree, by_strength, by_clustering;
};

SystemRanking rank_systems(const NodeMetrics& metrics, const AtlasMap& atlas,
                           std::size_t top);

struct Partition {
    std::vector<std::size_t> community_of;  // contiguous ids from 0

    std::size_t num_communities() const;
};

// Newman leading-eigenvector bisection of the modularity matrix, recursing
// while a split contributes positive modularity. Negative input weights are
// clamped to zero first.
Partition spectral_communities(const Tensor& w);

// Q = (1/2m) sum_ij (A_ij - k_i k_j / 2m) [c_i == c_j], on clamped weights.
double modularity(const Tensor& w, const Partition& p);

struct AgreementScores {
    double completeness;
    double homogeneity;
    double v_measure;
    double fowlkes_mallows;
    double mutual_information;  // nats
};

AgreementScores agreement_scores(const Partition& pred, const Partition& truth);

double accuracy(const std::vector<std::size_t>& preds,
                const std::vector<std::size_t>& truth);
// Mann-Whitney rank statistic with half credit for ties; throws DataError
// unless both classes are present.
double auc(const std::vector<double>& class1_scores,
           const std::vector<std::size_t>& truth);

}  // namespace brainnet
