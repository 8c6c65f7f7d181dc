#include "fclearn/moo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fclearn/errors.hpp"

namespace fclearn {

bool constrained_dominates(const ObjectivePair& a, const ObjectivePair& b) {
    if (a.violations != b.violations) return a.violations < b.violations;
    if (a.mse_global > b.mse_global || a.dmse_global > b.dmse_global) return false;
    return a.mse_global < b.mse_global || a.dmse_global < b.dmse_global;
}

std::vector<std::string> ArchiveEntry::keys() const {
    std::vector<std::string> out;
    out.reserve(trees.size());
    for (const auto& tree : trees) out.push_back(tree.key());
    return out;
}

namespace {

bool same_objectives(const ObjectivePair& a, const ObjectivePair& b) {
    return a.violations == b.violations && a.mse_global == b.mse_global &&
           a.dmse_global == b.dmse_global;
}

bool duplicate_of(const ArchiveEntry& a, const ArchiveEntry& b) {
    return same_objectives(a.objectives, b.objectives) && a.keys() == b.keys();
}

}  // namespace

ParetoArchive::ParetoArchive(const ParetoArchive& other) : scope_(other.scope_) {
    std::lock_guard lock(other.mutex_);
    entries_ = other.entries_;
}

bool ParetoArchive::insert(ArchiveEntry entry) {
    if (scope_ == Scope::Persistent && !entry.full_data)
        throw std::invalid_argument("persistent archive only accepts full-data entries");
    std::lock_guard lock(mutex_);
    for (const auto& member : entries_) {
        if (constrained_dominates(member.objectives, entry.objectives)) return false;
        if (duplicate_of(member, entry)) return false;
    }
    std::erase_if(entries_, [&](const ArchiveEntry& member) {
        return constrained_dominates(entry.objectives, member.objectives);
    });
    entries_.push_back(std::move(entry));
    return true;
}

std::vector<ArchiveEntry> ParetoArchive::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

std::vector<ObjectivePair> ParetoArchive::front() const {
    std::lock_guard lock(mutex_);
    std::vector<ObjectivePair> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.objectives);
    return out;
}

std::size_t ParetoArchive::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

void ParetoArchive::clear() {
    std::lock_guard lock(mutex_);
    entries_.clear();
}

NormBounds normalization_bounds(const std::vector<std::vector<ObjectivePair>>& fronts) {
    // Non-dominated union of all feasible points.
    std::vector<ObjectivePair> pool;
    for (const auto& front : fronts)
        for (const auto& p : front)
            if (p.violations == 0) pool.push_back(p);
    std::vector<ObjectivePair> union_front;
    for (const auto& p : pool) {
        bool dominated = false;
        for (const auto& q : pool) {
            if (constrained_dominates(q, p)) {
                dominated = true;
                break;
            }
        }
        if (!dominated) union_front.push_back(p);
    }
    if (union_front.empty()) throw DataError("no feasible points to normalize against");

    NormBounds b;
    b.min_mse = b.max_mse = union_front.front().mse_global;
    b.min_dmse = b.max_dmse = union_front.front().dmse_global;
    for (const auto& p : union_front) {
        b.min_mse = std::min(b.min_mse, p.mse_global);
        b.max_mse = std::max(b.max_mse, p.mse_global);
        b.min_dmse = std::min(b.min_dmse, p.dmse_global);
        b.max_dmse = std::max(b.max_dmse, p.dmse_global);
    }
    return b;
}

namespace {

double normalize(double v, double lo, double hi) {
    if (hi <= lo) return 0.0;
    return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

}  // namespace

double hypervolume(std::span<const ObjectivePair> front, const NormBounds& bounds) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(front.size());
    for (const auto& p : front) {
        if (p.violations != 0)
            throw std::invalid_argument("hypervolume requires feasible points");
        pts.emplace_back(normalize(p.mse_global, bounds.min_mse, bounds.max_mse),
                         normalize(p.dmse_global, bounds.min_dmse, bounds.max_dmse));
    }
    if (pts.empty()) return 0.0;
    std::sort(pts.begin(), pts.end());

    // Sweep x ascending; between consecutive xs the dominated strip reaches up
    // from the best y seen so far to the reference at 1.
    double area = 0.0;
    double best_y = 1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        best_y = std::min(best_y, pts[i].second);
        double next_x = (i + 1 < pts.size()) ? pts[i + 1].first : 1.0;
        area += (next_x - pts[i].first) * (1.0 - best_y);
    }
    return area;
}

}  // namespace fclearn
