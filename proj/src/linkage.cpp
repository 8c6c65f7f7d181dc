#include "fclearn/linkage.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace fclearn {

Fos univariate_fos(int length) {
    Fos fos;
    fos.kind = Fos::Kind::Univariate;
    fos.subsets.reserve(length);
    for (int i = 0; i < length; ++i) fos.subsets.push_back({i});
    return fos;
}

double pairwise_mi(const std::vector<std::vector<std::uint8_t>>& genotypes, int i, int j) {
    if (genotypes.empty()) throw std::invalid_argument("pairwise_mi: no genotypes");
    const double n = static_cast<double>(genotypes.size());
    std::map<int, int> ci, cj;
    std::map<std::pair<int, int>, int> cij;
    for (const auto& g : genotypes) {
        ++ci[g[i]];
        ++cj[g[j]];
        ++cij[{g[i], g[j]}];
    }
    double mi = 0.0;
    for (const auto& [ab, c] : cij) {
        double pab = c / n;
        double pa = ci[ab.first] / n;
        double pb = cj[ab.second] / n;
        mi += pab * std::log(pab / (pa * pb));
    }
    return mi;
}

Fos upgma_tree(std::vector<std::vector<double>> sim, std::vector<MergeRecord>* record) {
    const int length = static_cast<int>(sim.size());
    if (length < 2) throw std::invalid_argument("upgma_tree: need at least two indices");

    struct Cluster {
        std::vector<int> members;
        int id;  // smallest original index, for tie breaking
        bool active = true;
    };
    std::vector<Cluster> clusters;
    clusters.reserve(2 * length);
    for (int i = 0; i < length; ++i) clusters.push_back({{i}, i, true});

    // Similarity between cluster slots; grows as merges append new slots.
    std::vector<std::vector<double>> s(2 * length - 1, std::vector<double>(2 * length - 1, 0.0));
    for (int i = 0; i < length; ++i)
        for (int j = 0; j < length; ++j) s[i][j] = sim[i][j];

    Fos fos;
    fos.kind = Fos::Kind::LinkageTree;
    for (int i = 0; i < length; ++i) fos.subsets.push_back({i});

    int active = length;
    while (active > 1) {
        int best_a = -1, best_b = -1;
        double best_sim = 0.0;
        for (std::size_t a = 0; a < clusters.size(); ++a) {
            if (!clusters[a].active) continue;
            for (std::size_t b = a + 1; b < clusters.size(); ++b) {
                if (!clusters[b].active) continue;
                int lo = std::min(clusters[a].id, clusters[b].id);
                int hi = std::max(clusters[a].id, clusters[b].id);
                bool better;
                if (best_a < 0) {
                    better = true;
                } else if (s[a][b] != best_sim) {
                    better = s[a][b] > best_sim;
                } else {
                    int cur_lo = std::min(clusters[best_a].id, clusters[best_b].id);
                    int cur_hi = std::max(clusters[best_a].id, clusters[best_b].id);
                    better = std::pair(lo, hi) < std::pair(cur_lo, cur_hi);
                }
                if (better) {
                    best_a = static_cast<int>(a);
                    best_b = static_cast<int>(b);
                    best_sim = s[a][b];
                }
            }
        }

        Cluster merged;
        merged.members = clusters[best_a].members;
        merged.members.insert(merged.members.end(), clusters[best_b].members.begin(),
                              clusters[best_b].members.end());
        std::sort(merged.members.begin(), merged.members.end());
        merged.id = merged.members.front();

        const double na = static_cast<double>(clusters[best_a].members.size());
        const double nb = static_cast<double>(clusters[best_b].members.size());
        int slot = static_cast<int>(clusters.size());
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            if (!clusters[c].active || static_cast<int>(c) == best_a ||
                static_cast<int>(c) == best_b)
                continue;
            double v = (na * s[best_a][c] + nb * s[best_b][c]) / (na + nb);
            s[slot][c] = s[c][slot] = v;
        }
        clusters[best_a].active = false;
        clusters[best_b].active = false;
        clusters.push_back(std::move(merged));
        --active;

        if (record) record->push_back({clusters.back().members, best_sim});
        if (active > 1) fos.subsets.push_back(clusters.back().members);  // root excluded
    }
    return fos;
}

Fos learn_linkage_tree(const std::vector<std::vector<std::uint8_t>>& genotypes,
                       std::vector<MergeRecord>* record) {
    if (genotypes.size() < 2) throw std::invalid_argument("learn_linkage_tree: need genotypes");
    const int length = static_cast<int>(genotypes[0].size());
    std::vector<std::vector<double>> mi(length, std::vector<double>(length, 0.0));
    for (int i = 0; i < length; ++i)
        for (int j = i + 1; j < length; ++j) mi[i][j] = mi[j][i] = pairwise_mi(genotypes, i, j);
    return upgma_tree(std::move(mi), record);
}

}  // namespace fclearn
