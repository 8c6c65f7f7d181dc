#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fclearn/expr.hpp"

namespace fclearn {

enum class ClassTag { Logistic, Gompertz, Other };

std::string_view class_tag_name(ClassTag tag);

struct CanonicalClass {
    ClassTag tag = ClassTag::Other;
    std::string normalized_key;
};

// Normal form used for class matching: constants anonymized to a bare `c`,
// mirrored operators desugared, free-signed subtractions and divisions folded
// into their additive/multiplicative forms, c^x and e^(c*x) unified, and
// commutative chains flattened, deduplicated, and sorted.
std::string canonical_class_key(const SemanticTree& tree);

CanonicalClass classify(const SemanticTree& tree);
CanonicalClass classify_key(const std::string& expression_key);

struct RunRecovery {
    bool found_logistic = false;
    bool found_gompertz = false;
    std::vector<std::string> logistic_keys;
    std::vector<std::string> gompertz_keys;
};

// One front = the expression keys of its entries' trees.
RunRecovery scan_front(const std::vector<std::vector<std::string>>& entry_keys);

struct RecoveryHistogram {
    int runs = 0;
    int logistic = 0;
    int gompertz = 0;
    int both = 0;
};

RecoveryHistogram count_recoveries(const std::vector<RunRecovery>& runs);

// Secondary check: refit the candidate to noiseless probe curves of the
// target class and require an essentially exact fit on every probe.
bool behavioral_match(const SemanticTree& tree, ClassTag target, std::uint64_t seed,
                      long budget = 50000);

}  // namespace fclearn
