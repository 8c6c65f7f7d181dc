#include "fclearn/recovery.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <set>

#include "fclearn/dataset.hpp"
#include "fclearn/rng.hpp"
#include "fclearn/rvopt.hpp"

namespace fclearn {

std::string_view class_tag_name(ClassTag tag) {
    switch (tag) {
        case ClassTag::Logistic: return "logistic";
        case ClassTag::Gompertz: return "gompertz";
        case ClassTag::Other: return "other";
    }
    return "other";
}

namespace {

struct RNode {
    Sym sym;
    std::unique_ptr<RNode> l, r;
};

using P = std::unique_ptr<RNode>;

P mk(Sym sym, P l = nullptr, P r = nullptr) {
    auto n = std::make_unique<RNode>();
    n->sym = sym;
    n->l = std::move(l);
    n->r = std::move(r);
    return n;
}

P clone(const RNode& n) {
    return mk(n.sym, n.l ? clone(*n.l) : nullptr, n.r ? clone(*n.r) : nullptr);
}

P from_semantic(const SemanticTree& tree, int idx) {
    const SemanticNode& node = tree.nodes()[idx];
    if (is_terminal(node.sym)) return mk(node.sym);
    P l = from_semantic(tree, node.left);
    P r = is_unary(node.sym) ? nullptr : from_semantic(tree, node.right);
    return mk(node.sym, std::move(l), std::move(r));
}

std::string render(const RNode& n) {
    switch (n.sym) {
        case Sym::Var: return "t";
        case Sym::Cfc: return "c";
        case Sym::Exp: return "exp(" + render(*n.l) + ")";
        case Sym::LogP: return "logp(" + render(*n.l) + ")";
        case Sym::ExpProd: return "expp(" + render(*n.l) + ", " + render(*n.r) + ")";
        default:
            return "(" + render(*n.l) + " " + std::string(sym_token(n.sym)) + " " +
                   render(*n.r) + ")";
    }
}

bool all_const(const RNode& n) {
    if (n.sym == Sym::Cfc) return true;
    if (n.sym == Sym::Var) return false;
    if (is_unary(n.sym)) return all_const(*n.l);
    return all_const(*n.l) && all_const(*n.r);
}

// A subtree whose sign can be flipped by renaming constants: a bare constant,
// or a product/quotient with such a factor.
bool free_sign(const RNode& n) {
    if (n.sym == Sym::Cfc) return true;
    if (n.sym == Sym::Mul || n.sym == Sym::Div)
        return free_sign(*n.l) || free_sign(*n.r);
    return false;
}

void flatten(Sym chain, P n, std::vector<P>& out) {
    if (n->sym == chain) {
        flatten(chain, std::move(n->l), out);
        flatten(chain, std::move(n->r), out);
    } else {
        out.push_back(std::move(n));
    }
}

void sort_nodes(std::vector<P>& nodes) {
    std::stable_sort(nodes.begin(), nodes.end(),
                     [](const P& a, const P& b) { return render(*a) < render(*b); });
}

P build_chain(Sym chain, std::vector<P> parts) {
    P out = std::move(parts.front());
    for (std::size_t i = 1; i < parts.size(); ++i)
        out = mk(chain, std::move(out), std::move(parts[i]));
    return out;
}

// Splits product factors into non-constant ones (sorted) and a constant count.
std::pair<std::vector<P>, int> split_factors(std::vector<P> factors) {
    std::vector<P> rest;
    int n_const = 0;
    for (auto& f : factors) {
        if (f->sym == Sym::Cfc) ++n_const;
        else rest.push_back(std::move(f));
    }
    sort_nodes(rest);
    return {std::move(rest), n_const};
}

// e^(product of `factors`): a constant factor absorbs every other constant,
// turning the node into expp(rest, c); with no constant it is a plain exp.
// An additive constant inside the exponent, e^((x + c) c'), factors out as a
// positive scale c'' e^(x c') and stays in the same class.
P build_exponent(std::vector<P> factors) {
    auto [rest, n_const] = split_factors(std::move(factors));
    if (n_const == 0) return mk(Sym::Exp, build_chain(Sym::Mul, std::move(rest)));
    if (rest.empty()) return mk(Sym::Cfc);
    if (rest.size() == 1 && rest[0]->sym == Sym::Add) {
        std::vector<P> terms;
        flatten(Sym::Add, std::move(rest[0]), terms);
        auto [keep, n_shift] = split_factors(std::move(terms));
        if (keep.empty()) return mk(Sym::Cfc);
        if (n_shift > 0) {
            P scaled = mk(Sym::ExpProd, build_chain(Sym::Add, std::move(keep)), mk(Sym::Cfc));
            return mk(Sym::Mul, std::move(scaled), mk(Sym::Cfc));
        }
        rest[0] = build_chain(Sym::Add, std::move(keep));
    }
    return mk(Sym::ExpProd, build_chain(Sym::Mul, std::move(rest)), mk(Sym::Cfc));
}

// True for e^(x * c) with the constant in the exponent, i.e. a shape whose
// reciprocal stays in the family by flipping that constant's sign.
bool sign_free_exponential(const RNode& n) {
    return n.sym == Sym::ExpProd && n.r->sym == Sym::Cfc;
}

// True for c * e^(x * c) shapes, whose reciprocal also stays in the family.
bool const_scaled_exponential(const RNode& n) {
    if (n.sym != Sym::Mul) return false;
    const RNode& a = *n.l;
    const RNode& b = *n.r;
    return (a.sym == Sym::Cfc && sign_free_exponential(b)) ||
           (b.sym == Sym::Cfc && sign_free_exponential(a));
}

P rewrite(P n) {
    if (is_terminal(n->sym)) return n;
    n->l = rewrite(std::move(n->l));
    if (n->r) n->r = rewrite(std::move(n->r));
    if (all_const(*n)) return mk(Sym::Cfc);

    switch (n->sym) {
        case Sym::DivM:
            return mk(Sym::Div, std::move(n->r), std::move(n->l));
        case Sym::PowM:
            return mk(Sym::Pow, std::move(n->r), std::move(n->l));
        case Sym::Div:
            // x / c = x * c'; 1 / e^(c x) = e^(c' x) and likewise with a
            // constant scale in front.
            if (n->r->sym == Sym::Cfc) return mk(Sym::Mul, std::move(n->l), std::move(n->r));
            if (sign_free_exponential(*n->r) || const_scaled_exponential(*n->r))
                return mk(Sym::Mul, std::move(n->l), std::move(n->r));
            return n;
        case Sym::Sub:
            // x - (c * anything) = x + (c' * anything)
            if (free_sign(*n->r)) return mk(Sym::Add, std::move(n->l), std::move(n->r));
            return n;
        case Sym::Pow: {
            // c^x = e^(x ln c) = e^(c' x); (e^a)^b = e^(a b)
            if (n->l->sym == Sym::Cfc)
                return mk(Sym::ExpProd, std::move(n->r), std::move(n->l));
            if (n->l->sym == Sym::Exp) {
                std::vector<P> factors;
                flatten(Sym::Mul, std::move(n->l->l), factors);
                flatten(Sym::Mul, std::move(n->r), factors);
                return build_exponent(std::move(factors));
            }
            if (n->l->sym == Sym::ExpProd) {
                std::vector<P> factors;
                flatten(Sym::Mul, std::move(n->l->l), factors);
                flatten(Sym::Mul, std::move(n->l->r), factors);
                flatten(Sym::Mul, std::move(n->r), factors);
                return build_exponent(std::move(factors));
            }
            return n;
        }
        case Sym::Exp: {
            if (n->l->sym == Sym::Mul) {
                std::vector<P> factors;
                flatten(Sym::Mul, std::move(n->l), factors);
                return build_exponent(std::move(factors));
            }
            if (n->l->sym == Sym::Add) {
                // e^(x + c) = c' e^x
                std::vector<P> terms;
                flatten(Sym::Add, std::move(n->l), terms);
                auto [keep, n_shift] = split_factors(std::move(terms));
                if (keep.empty()) return mk(Sym::Cfc);
                P core = mk(Sym::Exp, build_chain(Sym::Add, std::move(keep)));
                if (n_shift == 0) return core;
                return mk(Sym::Mul, std::move(core), mk(Sym::Cfc));
            }
            return n;
        }
        case Sym::ExpProd: {
            std::vector<P> factors;
            flatten(Sym::Mul, std::move(n->l), factors);
            flatten(Sym::Mul, std::move(n->r), factors);
            return build_exponent(std::move(factors));
        }
        case Sym::Mul: {
            std::vector<P> factors;
            flatten(Sym::Mul, std::move(n->l), factors);
            flatten(Sym::Mul, std::move(n->r), factors);
            auto [rest, n_const] = split_factors(std::move(factors));
            if (n_const > 0) rest.push_back(mk(Sym::Cfc));
            sort_nodes(rest);
            return build_chain(Sym::Mul, std::move(rest));
        }
        case Sym::Add: {
            std::vector<P> terms;
            flatten(Sym::Add, std::move(n->l), terms);
            flatten(Sym::Add, std::move(n->r), terms);
            auto [rest, n_const] = split_factors(std::move(terms));
            if (n_const > 0) rest.push_back(mk(Sym::Cfc));
            sort_nodes(rest);
            return build_chain(Sym::Add, std::move(rest));
        }
        default:
            return n;
    }
}

P normalize(P n) {
    std::string before = render(*n);
    for (int pass = 0; pass < 64; ++pass) {
        n = rewrite(std::move(n));
        std::string after = render(*n);
        if (after == before) break;
        before = std::move(after);
    }
    return n;
}

const std::array<std::string_view, 1> kGompertzForms = {
    "(c * expp(expp(t, c), c))",
};

const std::array<std::string_view, 2> kLogisticForms = {
    "(c / (c + expp(t, c)))",
    "(c / ((c * expp(t, c)) + c))",
};

}  // namespace

std::string canonical_class_key(const SemanticTree& tree) {
    P root = from_semantic(tree, tree.root());
    root = normalize(std::move(root));
    return render(*root);
}

CanonicalClass classify(const SemanticTree& tree) {
    CanonicalClass out;
    out.normalized_key = canonical_class_key(tree);
    for (auto form : kGompertzForms)
        if (out.normalized_key == form) out.tag = ClassTag::Gompertz;
    for (auto form : kLogisticForms)
        if (out.normalized_key == form) out.tag = ClassTag::Logistic;
    return out;
}

CanonicalClass classify_key(const std::string& expression_key) {
    return classify(parse_expression(expression_key));
}

RunRecovery scan_front(const std::vector<std::vector<std::string>>& entry_keys) {
    RunRecovery rec;
    std::set<std::string> logistic, gompertz;
    for (const auto& entry : entry_keys) {
        for (const auto& key : entry) {
            CanonicalClass c = classify_key(key);
            if (c.tag == ClassTag::Logistic) logistic.insert(key);
            if (c.tag == ClassTag::Gompertz) gompertz.insert(key);
        }
    }
    rec.found_logistic = !logistic.empty();
    rec.found_gompertz = !gompertz.empty();
    rec.logistic_keys.assign(logistic.begin(), logistic.end());
    rec.gompertz_keys.assign(gompertz.begin(), gompertz.end());
    return rec;
}

RecoveryHistogram count_recoveries(const std::vector<RunRecovery>& runs) {
    RecoveryHistogram h;
    h.runs = static_cast<int>(runs.size());
    for (const auto& run : runs) {
        if (run.found_logistic) ++h.logistic;
        if (run.found_gompertz) ++h.gompertz;
        if (run.found_logistic && run.found_gompertz) ++h.both;
    }
    return h;
}

bool behavioral_match(const SemanticTree& tree, ClassTag target, std::uint64_t seed,
                      long budget) {
    if (target == ClassTag::Other) return false;
    if (tree.cfc_count() == 0) return false;

    struct Probe {
        double c1, c2, c3;
    };
    static const std::array<Probe, 3> kLogisticProbes = {{{10, 0.2, 50}, {30, 0.1, 40}, {5, 0.4, 60}}};
    static const std::array<Probe, 3> kGompertzProbes = {{{20, 5, 0.08}, {40, 7, 0.05}, {10, 4.5, 0.12}}};
    const auto& probes =
        target == ClassTag::Logistic ? kLogisticProbes : kGompertzProbes;

    std::vector<double> ts;
    for (int i = 0; i < 8; ++i) ts.push_back(30.0 + 7.0 * i);

    for (std::size_t p = 0; p < probes.size(); ++p) {
        std::vector<double> ys;
        ys.reserve(ts.size());
        for (double t : ts)
            ys.push_back(target == ClassTag::Logistic
                             ? eval_logistic(t, probes[p].c1, probes[p].c2, probes[p].c3)
                             : eval_gompertz(t, probes[p].c1, probes[p].c2, probes[p].c3));
        RvFitOptions options;
        options.budget = budget;
        options.seed = derive_seed(seed, fnv1a64("behavioral"), p);
        RVSolution fit = fit_constants(tree, ts, ys, options);
        if (fit.train_mse > 1e-9) return false;
    }
    return true;
}

}  // namespace fclearn
