#pragma once

#include <cstdint>
#include <vector>

namespace fclearn {

// Family of subsets driving gene-pool optimal mixing. The linkage tree holds
// all L singletons plus every agglomerative merge except the root, 2L-2
// subsets in total.
struct Fos {
    enum class Kind { Univariate, LinkageTree };
    Kind kind = Kind::Univariate;
    std::vector<std::vector<int>> subsets;
};

struct MergeRecord {
    std::vector<int> merged;  // resulting index set
    double similarity = 0.0;  // average-linkage similarity at merge time
};

Fos univariate_fos(int length);

// Empirical mutual information (natural log) between genotype columns i, j.
double pairwise_mi(const std::vector<std::vector<std::uint8_t>>& genotypes, int i, int j);

// Average-linkage (UPGMA) agglomeration over a symmetric similarity matrix,
// merging the most similar pair first; ties resolve to the lowest index pair.
Fos upgma_tree(std::vector<std::vector<double>> similarity,
               std::vector<MergeRecord>* record = nullptr);

Fos learn_linkage_tree(const std::vector<std::vector<std::uint8_t>>& genotypes,
                       std::vector<MergeRecord>* record = nullptr);

}  // namespace fclearn
