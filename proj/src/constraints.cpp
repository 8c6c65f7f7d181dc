#include "fclearn/constraints.hpp"

namespace fclearn {

const std::vector<double>& constraint_age_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> g(101);
        for (int a = 0; a <= 100; ++a) g[a] = static_cast<double>(a);
        return g;
    }();
    return grid;
}

int count_violations(std::span<const double> p, const GrowthConstraints& c) {
    int violations = 0;

    bool physical = p.front() <= c.birth_max;
    for (double v : p) {
        if (v < 0.0) {
            physical = false;
            break;
        }
    }
    if (!physical) ++violations;

    if (p.back() > c.adult_max) ++violations;

    for (std::size_t i = 1; i < p.size(); ++i) {
        if (p[i] < p[i - 1]) {
            ++violations;
            break;
        }
    }
    return violations;
}

}  // namespace fclearn
