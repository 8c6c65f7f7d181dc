#include "fclearn/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "fclearn/errors.hpp"

namespace fclearn {

std::string_view sym_token(Sym s) {
    switch (s) {
        case Sym::Add: return "+";
        case Sym::Sub: return "-";
        case Sym::Mul: return "*";
        case Sym::Div: return "/";
        case Sym::DivM: return "/m";
        case Sym::ExpProd: return "expp";
        case Sym::Exp: return "exp";
        case Sym::Pow: return "^";
        case Sym::PowM: return "^m";
        case Sym::LogP: return "logp";
        case Sym::Var: return "t";
        case Sym::Cfc: return "c";
    }
    return "?";
}

std::optional<Sym> sym_from_token(std::string_view token) {
    for (int i = 0; i < kSymCount; ++i) {
        Sym s = static_cast<Sym>(i);
        if (sym_token(s) == token) return s;
    }
    return std::nullopt;
}

const std::vector<Sym>& all_operators() {
    static const std::vector<Sym> ops = {Sym::Add, Sym::Sub,  Sym::Mul, Sym::Div,  Sym::DivM,
                                         Sym::ExpProd, Sym::Exp, Sym::Pow, Sym::PowM, Sym::LogP};
    return ops;
}

TreeTemplate::TreeTemplate(TemplateKind kind, int height) : kind_(kind), height_(height) {
    if (height < 1 || height > 10) throw UsageError("tree height must be in [1, 10]");
    if (kind == TemplateKind::LeftDeep) {
        internal_count_ = height;
        node_count_ = 2 * height + 1;
    } else {
        internal_count_ = (1 << height) - 1;
        node_count_ = (1 << (height + 1)) - 1;
    }
}

int TreeTemplate::left_child(int slot) const {
    if (kind_ == TemplateKind::LeftDeep) return slot + 1 < height_ ? slot + 1 : 2 * height_;
    return 2 * slot + 1;
}

int TreeTemplate::right_child(int slot) const {
    if (kind_ == TemplateKind::LeftDeep) return height_ + slot;
    return 2 * slot + 2;
}

namespace {

int build_expressed(const TreeTemplate& tpl, std::span<const Sym> genotype, int slot,
                    std::vector<SemanticNode>& nodes) {
    Sym sym = genotype[slot];
    if (tpl.is_terminal_slot(slot)) {
        if (!is_terminal(sym)) throw std::invalid_argument("operator in a terminal slot");
        nodes.push_back({sym, -1, -1, -1, sym != Sym::Cfc});
        return static_cast<int>(nodes.size()) - 1;
    }
    if (is_terminal(sym)) throw std::invalid_argument("terminal in an operator slot");
    int left = build_expressed(tpl, genotype, tpl.left_child(slot), nodes);
    int right = -1;
    if (!is_unary(sym)) right = build_expressed(tpl, genotype, tpl.right_child(slot), nodes);
    nodes.push_back({sym, left, right, -1, true});
    return static_cast<int>(nodes.size()) - 1;
}

}  // namespace

SemanticTree SemanticTree::from_genotype(const TreeTemplate& tpl, std::span<const Sym> genotype) {
    if (static_cast<int>(genotype.size()) != tpl.node_count())
        throw std::invalid_argument("genotype length does not match template");
    SemanticTree tree;
    tree.root_ = build_expressed(tpl, genotype, 0, tree.nodes_);
    tree.finalize();
    return tree;
}

SemanticTree build_semantic(std::vector<SemanticNode> nodes, int root) {
    SemanticTree tree;
    tree.nodes_ = std::move(nodes);
    tree.root_ = root;
    tree.finalize();
    return tree;
}

void SemanticTree::finalize() {
    // In-order slot numbering and constant-free flags, children first.
    cfc_count_ = 0;
    auto walk = [&](auto&& self, int idx) -> bool {
        SemanticNode& n = nodes_[idx];
        if (n.sym == Sym::Cfc) {
            n.cfc_slot = cfc_count_++;
            n.constant_free = false;
            return false;
        }
        if (n.sym == Sym::Var) {
            n.constant_free = true;
            return true;
        }
        bool cf = self(self, n.left);
        if (n.right >= 0) cf = self(self, n.right) && cf;
        n.constant_free = cf;
        return cf;
    };
    walk(walk, root_);
}

SemanticTree SemanticTree::simplified() const {
    // A subtree whose terminals are all constants reduces to one constant.
    std::vector<char> all_cfc(nodes_.size(), 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const SemanticNode& n = nodes_[i];
        if (is_terminal(n.sym))
            all_cfc[i] = n.sym == Sym::Cfc;
        else
            all_cfc[i] = all_cfc[n.left] && (n.right < 0 || all_cfc[n.right]);
    }
    std::vector<SemanticNode> out;
    out.reserve(nodes_.size());
    auto rebuild = [&](auto&& self, int idx) -> int {
        if (all_cfc[idx]) {
            out.push_back({Sym::Cfc, -1, -1, -1, false});
            return static_cast<int>(out.size()) - 1;
        }
        const SemanticNode& n = nodes_[idx];
        if (is_terminal(n.sym)) {
            out.push_back({n.sym, -1, -1, -1, true});
            return static_cast<int>(out.size()) - 1;
        }
        int left = self(self, n.left);
        int right = n.right >= 0 ? self(self, n.right) : -1;
        out.push_back({n.sym, left, right, -1, true});
        return static_cast<int>(out.size()) - 1;
    };
    int root = rebuild(rebuild, root_);
    return build_semantic(std::move(out), root);
}

std::string SemanticTree::subtree_infix(int idx) const {
    const SemanticNode& n = nodes_[idx];
    switch (n.sym) {
        case Sym::Var: return "t";
        case Sym::Cfc: return "c" + std::to_string(n.cfc_slot);
        case Sym::Exp: return "exp(" + subtree_infix(n.left) + ")";
        case Sym::LogP: return "logp(" + subtree_infix(n.left) + ")";
        case Sym::ExpProd:
            return "expp(" + subtree_infix(n.left) + ", " + subtree_infix(n.right) + ")";
        default:
            return "(" + subtree_infix(n.left) + " " + std::string(sym_token(n.sym)) + " " +
                   subtree_infix(n.right) + ")";
    }
}

std::string SemanticTree::infix() const { return subtree_infix(root_); }

std::vector<int> SemanticTree::maximal_constant_free_nodes() const {
    std::vector<int> parent(nodes_.size(), -1);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].left >= 0) parent[nodes_[i].left] = static_cast<int>(i);
        if (nodes_[i].right >= 0) parent[nodes_[i].right] = static_cast<int>(i);
    }
    std::vector<int> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!nodes_[i].constant_free) continue;
        if (parent[i] < 0 || !nodes_[parent[i]].constant_free) out.push_back(static_cast<int>(i));
    }
    return out;
}

namespace {

inline double clamp_out(double x) { return std::clamp(x, -kOutputClamp, kOutputClamp); }

inline double protected_div(double a, double b) {
    double d = b >= 0.0 ? std::max(b, kProtectEps) : std::min(b, -kProtectEps);
    return clamp_out(a / d);
}

inline double protected_pow(double a, double b) {
    double r = std::pow(std::max(std::abs(a), kProtectEps), b);
    return r > kOutputClamp ? kOutputClamp : r;
}

void eval_node(const SemanticNode& n, std::span<const double> constants,
               std::span<const double> ts, const std::vector<double>* a,
               const std::vector<double>* b, std::vector<double>& out) {
    const std::size_t len = ts.size();
    out.resize(len);
    switch (n.sym) {
        case Sym::Var:
            for (std::size_t i = 0; i < len; ++i) out[i] = clamp_out(ts[i]);
            break;
        case Sym::Cfc: {
            double c = clamp_out(constants[n.cfc_slot]);
            std::fill(out.begin(), out.end(), c);
            break;
        }
        case Sym::Add:
            for (std::size_t i = 0; i < len; ++i) out[i] = clamp_out((*a)[i] + (*b)[i]);
            break;
        case Sym::Sub:
            for (std::size_t i = 0; i < len; ++i) out[i] = clamp_out((*a)[i] - (*b)[i]);
            break;
        case Sym::Mul:
            for (std::size_t i = 0; i < len; ++i) out[i] = clamp_out((*a)[i] * (*b)[i]);
            break;
        case Sym::Div:
            for (std::size_t i = 0; i < len; ++i) out[i] = protected_div((*a)[i], (*b)[i]);
            break;
        case Sym::DivM:
            for (std::size_t i = 0; i < len; ++i) out[i] = protected_div((*b)[i], (*a)[i]);
            break;
        case Sym::ExpProd:
            for (std::size_t i = 0; i < len; ++i)
                out[i] = clamp_out(
                    std::exp(std::clamp((*a)[i] * (*b)[i], -kExpArgClamp, kExpArgClamp)));
            break;
        case Sym::Exp:
            for (std::size_t i = 0; i < len; ++i)
                out[i] = clamp_out(std::exp(std::clamp((*a)[i], -kExpArgClamp, kExpArgClamp)));
            break;
        case Sym::Pow:
            for (std::size_t i = 0; i < len; ++i) out[i] = protected_pow((*a)[i], (*b)[i]);
            break;
        case Sym::PowM:
            for (std::size_t i = 0; i < len; ++i) out[i] = protected_pow((*b)[i], (*a)[i]);
            break;
        case Sym::LogP:
            for (std::size_t i = 0; i < len; ++i)
                out[i] = std::log(std::max(std::abs((*a)[i]), kProtectEps));
            break;
    }
}

}  // namespace

void evaluate_into(const SemanticTree& tree, std::span<const double> constants,
                   std::span<const double> ts, const EvalPlan* plan, std::vector<double>& out) {
    if (static_cast<int>(constants.size()) != tree.cfc_count())
        throw std::invalid_argument("constants length does not match tree");
    const auto& nodes = tree.nodes();
    // Constant fitting calls this millions of times; reusing per-thread
    // buffers keeps the hot loop free of allocations.
    thread_local std::vector<std::vector<double>> own;
    thread_local std::vector<const std::vector<double>*> src;
    if (own.size() < nodes.size()) own.resize(nodes.size());
    src.assign(nodes.size(), nullptr);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (plan && plan->node_outputs[i]) {
            src[i] = plan->node_outputs[i].get();
            continue;
        }
        if (plan && plan->skip[i]) continue;
        const SemanticNode& n = nodes[i];
        const std::vector<double>* a = n.left >= 0 ? src[n.left] : nullptr;
        const std::vector<double>* b = n.right >= 0 ? src[n.right] : nullptr;
        eval_node(n, constants, ts, a, b, own[i]);
        src[i] = &own[i];
    }
    const std::vector<double>& root = *src[tree.root()];
    out.assign(root.begin(), root.end());
}

std::vector<double> evaluate(const SemanticTree& tree, std::span<const double> constants,
                             std::span<const double> ts, const EvalPlan* plan) {
    std::vector<double> out;
    evaluate_into(tree, constants, ts, plan, out);
    return out;
}

EvalPlan make_eval_plan(const SemanticTree& tree, std::span<const double> ts,
                        SubtreeOutputCache* cache, std::string_view data_key) {
    const auto& nodes = tree.nodes();
    EvalPlan plan;
    plan.node_outputs.resize(nodes.size());
    plan.skip.assign(nodes.size(), 0);
    for (int top : tree.maximal_constant_free_nodes()) {
        auto compute = [&tree, top, ts]() {
            // Evaluate just this constant-free subtree.
            std::vector<SemanticNode> sub;
            auto copy = [&](auto&& self, int idx) -> int {
                const SemanticNode& n = tree.nodes()[idx];
                int l = n.left >= 0 ? self(self, n.left) : -1;
                int r = n.right >= 0 ? self(self, n.right) : -1;
                sub.push_back({n.sym, l, r, -1, true});
                return static_cast<int>(sub.size()) - 1;
            };
            int root = copy(copy, top);
            return evaluate(build_semantic(std::move(sub), root), {}, ts);
        };
        if (cache) {
            plan.node_outputs[top] =
                cache->get_or_compute(tree.subtree_infix(top), data_key, compute);
        } else {
            plan.node_outputs[top] = std::make_shared<const std::vector<double>>(compute());
        }
        // Mark the covered descendants.
        auto mark = [&](auto&& self, int idx) -> void {
            const SemanticNode& n = nodes[idx];
            if (n.left >= 0) {
                plan.skip[n.left] = 1;
                self(self, n.left);
            }
            if (n.right >= 0) {
                plan.skip[n.right] = 1;
                self(self, n.right);
            }
        };
        mark(mark, top);
    }
    return plan;
}

std::shared_ptr<const std::vector<double>> SubtreeOutputCache::get_or_compute(
    const std::string& subtree_key, std::string_view data_key,
    const std::function<std::vector<double>()>& compute) {
    std::string key = subtree_key;
    key.push_back('\x1f');
    key.append(data_key);
    {
        std::shared_lock lock(mutex_);
        auto it = entries_.find(key);
        if (it != entries_.end()) return it->second;
    }
    auto value = std::make_shared<const std::vector<double>>(compute());
    std::unique_lock lock(mutex_);
    auto [it, inserted] = entries_.emplace(std::move(key), value);
    return it->second;
}

void SubtreeOutputCache::clear() {
    std::unique_lock lock(mutex_);
    entries_.clear();
}

std::size_t SubtreeOutputCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

ExpressionTree::ExpressionTree(const TreeTemplate& tpl, std::vector<Sym> genotype)
    : tpl_(tpl),
      genotype_(std::move(genotype)),
      semantic_(SemanticTree::from_genotype(tpl_, genotype_).simplified()),
      key_(semantic_.infix()) {}

ExpressionTree random_tree(Rng& rng, const TreeTemplate& tpl, std::span<const Sym> operators) {
    if (operators.empty()) throw UsageError("operator set is empty");
    std::vector<Sym> genotype(tpl.node_count());
    for (int slot = 0; slot < tpl.node_count(); ++slot) {
        if (tpl.is_terminal_slot(slot))
            genotype[slot] = rng.uniform01() < 0.5 ? Sym::Var : Sym::Cfc;
        else
            genotype[slot] = operators[rng.index(operators.size())];
    }
    return ExpressionTree(tpl, std::move(genotype));
}

// ---------------------------------------------------------------------------
// Infix parsing

namespace {

struct Token {
    enum Kind { LParen, RParen, Comma, Op, Name, CfcRef, End } kind;
    Sym sym = Sym::Var;   // for Op
    std::string name;     // for Name
    std::size_t pos = 0;
};

class Lexer {
  public:
    explicit Lexer(std::string_view text) : text_(text) { advance(); }

    const Token& peek() const { return current_; }

    Token take() {
        Token t = current_;
        advance();
        return t;
    }

  private:
    [[noreturn]] void fail(const std::string& what, std::size_t pos) {
        throw UsageError("expression parse error at position " + std::to_string(pos) + ": " + what);
    }

    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        current_.pos = pos_;
        if (pos_ >= text_.size()) {
            current_.kind = Token::End;
            return;
        }
        char c = text_[pos_];
        if (c == '(') { current_ = {Token::LParen, {}, {}, pos_++}; return; }
        if (c == ')') { current_ = {Token::RParen, {}, {}, pos_++}; return; }
        if (c == ',') { current_ = {Token::Comma, {}, {}, pos_++}; return; }
        if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
            std::size_t start = pos_++;
            std::string tok(1, c);
            if ((c == '/' || c == '^') && pos_ < text_.size() && text_[pos_] == 'm') {
                tok.push_back('m');
                ++pos_;
            }
            auto sym = sym_from_token(tok);
            if (!sym) fail("unknown operator '" + tok + "'", start);
            current_ = {Token::Op, *sym, {}, start};
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            std::string name(text_.substr(start, pos_ - start));
            if (name == "c") {
                if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    fail("constant reference needs an index, e.g. c0", start);
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
                current_ = {Token::CfcRef, {}, {}, start};
                return;
            }
            current_ = {Token::Name, {}, std::move(name), start};
            return;
        }
        fail(std::string("unexpected character '") + c + "'", pos_);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    Token current_;
};

class Parser {
  public:
    explicit Parser(std::string_view text) : lex_(text) {}

    SemanticTree run() {
        int root = parse();
        if (lex_.peek().kind != Token::End)
            fail("trailing input", lex_.peek().pos);
        return build_semantic(std::move(nodes_), root);
    }

  private:
    [[noreturn]] void fail(const std::string& what, std::size_t pos) {
        throw UsageError("expression parse error at position " + std::to_string(pos) + ": " + what);
    }

    void expect(Token::Kind kind, const char* what) {
        if (lex_.peek().kind != kind) fail(std::string("expected ") + what, lex_.peek().pos);
        lex_.take();
    }

    int push(SemanticNode n) {
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }

    int parse() {
        Token t = lex_.take();
        switch (t.kind) {
            case Token::LParen: {
                int left = parse();
                Token op = lex_.take();
                if (op.kind != Token::Op) fail("expected a binary operator", op.pos);
                int right = parse();
                expect(Token::RParen, "')'");
                return push({op.sym, left, right, -1, true});
            }
            case Token::CfcRef:
                return push({Sym::Cfc, -1, -1, -1, false});
            case Token::Name: {
                if (t.name == "t") return push({Sym::Var, -1, -1, -1, true});
                if (t.name == "exp" || t.name == "logp") {
                    expect(Token::LParen, "'('");
                    int child = parse();
                    expect(Token::RParen, "')'");
                    return push({t.name == "exp" ? Sym::Exp : Sym::LogP, child, -1, -1, true});
                }
                if (t.name == "expp") {
                    expect(Token::LParen, "'('");
                    int left = parse();
                    expect(Token::Comma, "','");
                    int right = parse();
                    expect(Token::RParen, "')'");
                    return push({Sym::ExpProd, left, right, -1, true});
                }
                fail("unknown name '" + t.name + "'", t.pos);
            }
            default:
                fail("expected an expression", t.pos);
        }
    }

    Lexer lex_;
    std::vector<SemanticNode> nodes_;
};

}  // namespace

SemanticTree parse_expression(std::string_view text) {
    return Parser(text).run().simplified();
}

}  // namespace fclearn
