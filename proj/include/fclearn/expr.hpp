#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fclearn/rng.hpp"

namespace fclearn {

// Node symbols. Exp and LogP are unary (their template right child is an
// unexpressed intron); everything else up to Cfc is binary.
enum class Sym : std::uint8_t {
    Add,
    Sub,
    Mul,
    Div,      // protected: a / (sign(b) * max(|b|, 1e-10))
    DivM,     // mirrored division: Div(b, a)
    ExpProd,  // e^(a * b)
    Exp,      // e^(a)
    Pow,      // max(|a|, 1e-10) ^ b, capped at 1e15
    PowM,     // mirrored power: Pow(b, a)
    LogP,     // ln(max(|a|, 1e-10))
    Var,      // the age variable t
    Cfc,      // a function-class constant, refit per local set
};

constexpr int kSymCount = 12;

constexpr bool is_terminal(Sym s) { return s == Sym::Var || s == Sym::Cfc; }
constexpr bool is_unary(Sym s) { return s == Sym::Exp || s == Sym::LogP; }

std::string_view sym_token(Sym s);
std::optional<Sym> sym_from_token(std::string_view token);
const std::vector<Sym>& all_operators();  // the ten defaults, fixed order

// Every node's output is clamped to [-1e15, 1e15] and every e^ argument to
// [-700, 700], which together make evaluation total: finite inputs always
// produce finite outputs.
constexpr double kOutputClamp = 1e15;
constexpr double kExpArgClamp = 700.0;
constexpr double kProtectEps = 1e-10;

enum class TemplateKind { LeftDeep, Full };

// Fixed-shape syntactic template. Slots [0, internal_count) hold operators,
// the rest hold terminals. LeftDeep chains operators along the left spine so
// every operator's right child is a terminal; height h gives h operator slots
// and h+1 terminal slots. Full is a perfect binary tree of the same height.
class TreeTemplate {
  public:
    TreeTemplate(TemplateKind kind, int height);

    TemplateKind kind() const { return kind_; }
    int height() const { return height_; }
    int node_count() const { return node_count_; }
    int internal_count() const { return internal_count_; }
    bool is_terminal_slot(int slot) const { return slot >= internal_count_; }
    int left_child(int slot) const;
    int right_child(int slot) const;

    bool operator==(const TreeTemplate&) const = default;

  private:
    TemplateKind kind_;
    int height_;
    int node_count_;
    int internal_count_;
};

// Expressed (semantic) form of a genotype: introns skipped, children stored
// before parents so a forward pass evaluates bottom-up.
struct SemanticNode {
    Sym sym = Sym::Var;
    int left = -1;
    int right = -1;
    int cfc_slot = -1;       // for Sym::Cfc, position in the constant vector
    bool constant_free = true;  // no Cfc anywhere in this subtree
};

class SubtreeOutputCache;

class SemanticTree {
  public:
    static SemanticTree from_genotype(const TreeTemplate& tpl, std::span<const Sym> genotype);

    // Collapses every maximal all-constant subtree to a single constant and
    // renumbers slots left to right. Idempotent.
    SemanticTree simplified() const;

    int cfc_count() const { return cfc_count_; }
    int root() const { return root_; }
    const std::vector<SemanticNode>& nodes() const { return nodes_; }

    // Canonical infix rendering; on a simplified tree this is the cache and
    // export key. Distinct structures render to distinct strings.
    std::string infix() const;
    std::string subtree_infix(int node) const;

    // Indices of constant-free nodes whose parent is not constant-free (or
    // that are the root), i.e. the reusable evaluation units.
    std::vector<int> maximal_constant_free_nodes() const;

    friend SemanticTree build_semantic(std::vector<SemanticNode> nodes, int root);

  private:
    SemanticTree() = default;
    void finalize();

    std::vector<SemanticNode> nodes_;
    int root_ = -1;
    int cfc_count_ = 0;
};

SemanticTree build_semantic(std::vector<SemanticNode> nodes, int root);

// Precomputed outputs of the maximal constant-free subtrees for one fixed
// t-vector, so repeated evaluations during a constant fit skip them.
struct EvalPlan {
    std::vector<std::shared_ptr<const std::vector<double>>> node_outputs;  // per node, may be null
    std::vector<char> skip;  // nodes covered by a precomputed ancestor
};

EvalPlan make_eval_plan(const SemanticTree& tree, std::span<const double> ts,
                        SubtreeOutputCache* cache, std::string_view data_key);

std::vector<double> evaluate(const SemanticTree& tree, std::span<const double> constants,
                             std::span<const double> ts, const EvalPlan* plan = nullptr);

// Allocation-free variant for hot loops: writes predictions into out.
void evaluate_into(const SemanticTree& tree, std::span<const double> constants,
                   std::span<const double> ts, const EvalPlan* plan, std::vector<double>& out);

// Shared store of constant-free subtree outputs keyed by (subtree, data id).
// Concurrent lookups may race to compute the same entry; both compute the
// same value, so a lost update is harmless.
class SubtreeOutputCache {
  public:
    std::shared_ptr<const std::vector<double>> get_or_compute(
        const std::string& subtree_key, std::string_view data_key,
        const std::function<std::vector<double>()>& compute);

    void clear();
    std::size_t size() const;

  private:
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, std::shared_ptr<const std::vector<double>>> entries_;
};

// Genotype plus its derived simplified form and key.
class ExpressionTree {
  public:
    ExpressionTree(const TreeTemplate& tpl, std::vector<Sym> genotype);

    const TreeTemplate& tpl() const { return tpl_; }
    const std::vector<Sym>& genotype() const { return genotype_; }
    const SemanticTree& semantic() const { return semantic_; }
    const std::string& key() const { return key_; }
    int cfc_count() const { return semantic_.cfc_count(); }

  private:
    TreeTemplate tpl_;
    std::vector<Sym> genotype_;
    SemanticTree semantic_;  // simplified
    std::string key_;
};

ExpressionTree random_tree(Rng& rng, const TreeTemplate& tpl,
                           std::span<const Sym> operators);

// Parses the infix grammar produced by SemanticTree::infix. The result is
// simplified and its constants renumbered positionally, so
// parse_expression(t.infix()).infix() == t.infix() for simplified t.
// Throws UsageError on malformed input.
SemanticTree parse_expression(std::string_view text);

}  // namespace fclearn
