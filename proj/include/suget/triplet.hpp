#pragma once

// Supertrees constrained to preserve the cross-subtree triple topologies of an
// initial gene tree. The input is a decomposition of that tree into pairwise
// separated subtrees covering all leaves; the solver recombines them bottom-up.
// Where exactly two subtrees remain they may be mixed freely (pair supertree);
// where one subtree faces a larger group, the solved group is grafted onto the
// subtree at the cheapest insertion point; above that, the initial topology is
// fixed and only local costs accrue.

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "suget/reconciliation.hpp"
#include "suget/supertree.hpp"
#include "suget/tree.hpp"

namespace suget {

struct Decomposition {
    GeneTree init;
    std::vector<NodeId> roots;        // subtree roots, preorder
    std::vector<int> subtree_count;   // per node of init: roots at or below it

    std::size_t size() const { return roots.size(); }
    int count(NodeId x) const { return subtree_count[static_cast<std::size_t>(x)]; }
};

namespace detail {

inline std::vector<int> root_counts(const GeneTree& g, const std::vector<NodeId>& roots) {
    std::vector<int> count(g.size(), 0);
    for (NodeId r : roots) count[static_cast<std::size_t>(r)] = 1;
    // Post-order accumulation; separation means no nesting to double-count.
    std::vector<std::pair<NodeId, bool>> stack{{g.root(), false}};
    while (!stack.empty()) {
        auto [id, expanded] = stack.back();
        stack.pop_back();
        const auto& n = g.node(id);
        if (n.left == kNoNode) continue;
        if (!expanded) {
            stack.emplace_back(id, true);
            stack.emplace_back(n.left, false);
            stack.emplace_back(n.right, false);
        } else {
            count[static_cast<std::size_t>(id)] +=
                count[static_cast<std::size_t>(n.left)] + count[static_cast<std::size_t>(n.right)];
        }
    }
    return count;
}

}  // namespace detail

inline Decomposition make_decomposition(const GeneTree& g, std::vector<NodeId> roots) {
    Decomposition dec{g, std::move(roots), {}};
    std::vector<char> is_root(g.size(), 0);
    for (NodeId r : dec.roots) {
        if (r < 0 || static_cast<std::size_t>(r) >= g.size())
            fail("NodeNotInTree", "subtree root out of range");
        if (is_root[static_cast<std::size_t>(r)])
            fail("InvalidDecomposition", "duplicate subtree root");
        is_root[static_cast<std::size_t>(r)] = 1;
    }
    // One walk checks separation (no root below another) and leaf coverage.
    std::vector<std::pair<NodeId, bool>> stack{{g.root(), false}};
    while (!stack.empty()) {
        auto [id, inside] = stack.back();
        stack.pop_back();
        if (is_root[static_cast<std::size_t>(id)]) {
            if (inside) fail("InvalidDecomposition", "subtree roots are not separated");
            inside = true;
        }
        const auto& n = g.node(id);
        if (n.left == kNoNode) {
            if (!inside) fail("InvalidDecomposition", "leaf not covered by any subtree");
        } else {
            stack.emplace_back(n.left, inside);
            stack.emplace_back(n.right, inside);
        }
    }
    dec.subtree_count = detail::root_counts(g, dec.roots);
    return dec;
}

// Subtrees rooted at the maximal nodes that are not duplications: speciations
// or leaves all of whose strict ancestors are duplications.
inline Decomposition decompose_at_highest_speciations(const GeneTree& g) {
    if (!g.fully_labeled()) fail("UnlabeledNode", "decomposition requires event labels");
    std::vector<NodeId> roots;
    std::vector<NodeId> stack{g.root()};
    while (!stack.empty()) {
        NodeId x = stack.back();
        stack.pop_back();
        const auto& n = g.node(x);
        if (n.left != kNoNode && *n.event == Event::Dup) {
            stack.push_back(n.right);
            stack.push_back(n.left);
        } else {
            roots.push_back(x);
        }
    }
    // Left pushed last, so roots come out in preorder.
    return make_decomposition(g, std::move(roots));
}

// True iff every gene triple drawn from three distinct subtrees resolves to
// the same topology in the candidate as in the initial tree.
inline bool triplet_respecting(const GeneTree& candidate, const Decomposition& dec) {
    std::vector<std::vector<std::string>> genes(dec.size());
    for (std::size_t i = 0; i < dec.size(); ++i)
        for (NodeId l : dec.init.leaves_under(dec.roots[i]))
            genes[i].push_back(dec.init.node(l).gene);
    for (std::size_t i = 0; i < dec.size(); ++i)
        for (std::size_t j = i + 1; j < dec.size(); ++j)
            for (std::size_t m = j + 1; m < dec.size(); ++m)
                for (const std::string& a : genes[i])
                    for (const std::string& b : genes[j])
                        for (const std::string& c : genes[m]) {
                            NodeId xa = dec.init.leaf_by_gene(a);
                            NodeId xb = dec.init.leaf_by_gene(b);
                            NodeId xc = dec.init.leaf_by_gene(c);
                            int want = triplet_topology(dec.init, xa, xb, xc);
                            int got = triplet_topology(candidate, candidate.leaf_by_gene(a),
                                                       candidate.leaf_by_gene(b),
                                                       candidate.leaf_by_gene(c));
                            if (want != got) return false;
                        }
    return true;
}

namespace detail {

// Assembles output trees from copied subtrees plus fresh join nodes.
struct TreeBuilder {
    std::vector<GeneTree::Part> parts;
    std::vector<GeneTree::LeafSpec> leaves;

    NodeId copy(const GeneTree& t, NodeId sub, bool keep_events) {
        NodeId idx = static_cast<NodeId>(parts.size());
        parts.emplace_back();
        const auto& n = t.node(sub);
        if (n.left == kNoNode) {
            parts[static_cast<std::size_t>(idx)].leaf = static_cast<std::int32_t>(leaves.size());
            leaves.push_back({n.gene, n.species, n.species_from_tag});
            return idx;
        }
        if (keep_events) parts[static_cast<std::size_t>(idx)].event = n.event;
        NodeId l = copy(t, n.left, keep_events);
        NodeId r = copy(t, n.right, keep_events);
        parts[static_cast<std::size_t>(idx)].left = l;
        parts[static_cast<std::size_t>(idx)].right = r;
        return idx;
    }

    NodeId join(NodeId l, NodeId r, std::optional<Event> ev) {
        NodeId idx = static_cast<NodeId>(parts.size());
        parts.emplace_back();
        parts[static_cast<std::size_t>(idx)].left = l;
        parts[static_cast<std::size_t>(idx)].right = r;
        parts[static_cast<std::size_t>(idx)].event = ev;
        return idx;
    }

    GeneTree build(NodeId root, const SpeciesTree& s) const {
        return GeneTree::assemble(parts, root, leaves, s);
    }
};

// Missing internal labels filled from the tree's own lca events.
inline GeneTree fill_unlabeled(const GeneTree& t, const SpeciesTree& s) {
    std::vector<GeneTree::Part> parts(t.size());
    std::vector<GeneTree::LeafSpec> leaves;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto& n = t.node(static_cast<NodeId>(i));
        parts[i].left = n.left;
        parts[i].right = n.right;
        if (n.left == kNoNode) {
            parts[i].leaf = static_cast<std::int32_t>(leaves.size());
            leaves.push_back({n.gene, n.species, n.species_from_tag});
        } else {
            parts[i].event = n.event ? n.event : std::optional<Event>(lca_event(t, static_cast<NodeId>(i)));
        }
    }
    return GeneTree::assemble(parts, t.root(), leaves, s);
}

struct GraftChoice {
    Cost cost = kInfiniteCost;
    NodeId at = kNoNode;
    int depth = -1;
};

// Minimum over graft points x* in the host subtree of the recombination cost:
// augmented local costs along the ancestor path of x*, unchanged local costs
// elsewhere in the host, plus the new node joining x* with the grafted set.
// With `labeled`, host-internal nodes are forced to their stored labels and
// unsatisfiable forcings saturate; the walk tracks them by count so the
// running sum stays finite. Ties: deepest x*, then first in preorder.
class GraftWalk {
public:
    GraftWalk(const GeneTree& init, const SpeciesTree& s, NodeId host, NodeId graft_img,
              bool labeled)
        : g_(init), s_(s), host_(host), graft_img_(graft_img), labeled_(labeled) {}

    GraftChoice run() {
        base_plain_ = 0;
        accumulate_plain(host_);
        if (base_plain_ == kInfiniteCost) return {};  // host labels unsatisfiable
        walk(host_, 0);
        return best_;
    }

private:
    Cost plain_cost(NodeId u) const {
        NodeId a = g_.species_image(g_.node(u).left);
        NodeId b = g_.species_image(g_.node(u).right);
        return labeled_local_cost(s_, a, b, labeled_ ? g_.event(u) : std::nullopt).cost;
    }

    // Local cost at u with the grafted image merged into one child side.
    Cost augmented_cost(NodeId u, bool into_left) const {
        NodeId a = g_.species_image(g_.node(u).left);
        NodeId b = g_.species_image(g_.node(u).right);
        (into_left ? a : b) = s_.lca(into_left ? a : b, graft_img_);
        return labeled_local_cost(s_, a, b, labeled_ ? g_.event(u) : std::nullopt).cost;
    }

    void accumulate_plain(NodeId u) {
        if (g_.is_leaf(u)) return;
        base_plain_ = add_cost(base_plain_, plain_cost(u));
        accumulate_plain(g_.node(u).left);
        accumulate_plain(g_.node(u).right);
    }

    void walk(NodeId u, int depth) {
        // Candidate x* = u; path state covers exactly its strict ancestors.
        NodeId ju = g_.species_image(u);
        Cost attach = local_cost(s_, s_.lca(ju, graft_img_), ju, graft_img_).cost;
        if (path_inf_ == 0) {
            Cost total = add_cost(base_plain_ - path_plain_, add_cost(path_aug_, attach));
            if (total < best_.cost || (total == best_.cost && depth > best_.depth)) {
                best_.cost = total;
                best_.at = u;
                best_.depth = depth;
            }
        }
        if (g_.is_leaf(u)) return;
        for (bool into_left : {true, false}) {
            Cost aug = augmented_cost(u, into_left);
            Cost plain = plain_cost(u);
            if (aug == kInfiniteCost) ++path_inf_; else path_aug_ += aug;
            path_plain_ += plain;
            walk(into_left ? g_.node(u).left : g_.node(u).right, depth + 1);
            if (aug == kInfiniteCost) --path_inf_; else path_aug_ -= aug;
            path_plain_ -= plain;
        }
    }

    const GeneTree& g_;
    const SpeciesTree& s_;
    NodeId host_;
    NodeId graft_img_;
    bool labeled_;
    Cost base_plain_ = 0;
    Cost path_aug_ = 0;    // finite augmented costs along the current path
    Cost path_plain_ = 0;  // plain costs along the current path
    int path_inf_ = 0;
    GraftChoice best_;
};

}  // namespace detail

// Recombination cost of grafting the leafset of x_r as the sibling of x*
// inside the subtree at x_l: augmented local costs on x*'s ancestor path,
// plain local costs elsewhere in the host, plus the joining node itself.
inline Cost cost_tr_graft(const Decomposition& dec, NodeId x_l, NodeId x_r, NodeId x_star,
                          const SpeciesTree& s) {
    const GeneTree& g = dec.init;
    if (!g.is_ancestor(x_l, x_star))
        fail("GraftNodeOutsideHost", "graft point is not inside the host subtree");
    NodeId graft_img = g.species_image(x_r);
    Cost total = 0;
    // Strict ancestors of x* within the host: augmented on the child side
    // leading to x*.
    for (NodeId u = x_star; u != x_l;) {
        NodeId p = g.node(u).parent;
        NodeId a = g.species_image(g.node(p).left);
        NodeId b = g.species_image(g.node(p).right);
        (g.node(p).left == u ? a : b) = s.lca(g.node(p).left == u ? a : b, graft_img);
        total = add_cost(total, local_cost(s, s.lca(a, b), a, b).cost);
        u = p;
    }
    // Off-path internals keep their plain cost.
    std::vector<NodeId> stack{x_l};
    while (!stack.empty()) {
        NodeId u = stack.back();
        stack.pop_back();
        if (g.is_leaf(u)) continue;
        stack.push_back(g.node(u).left);
        stack.push_back(g.node(u).right);
        if (g.is_ancestor(u, x_star) && u != x_star) continue;  // handled above
        NodeId a = g.species_image(g.node(u).left);
        NodeId b = g.species_image(g.node(u).right);
        total = add_cost(total, local_cost(s, s.lca(a, b), a, b).cost);
    }
    // The node joining x* with the grafted set.
    NodeId ju = g.species_image(x_star);
    total = add_cost(total, local_cost(s, s.lca(ju, graft_img), ju, graft_img).cost);
    return total;
}

namespace detail {

class TrsSolver {
public:
    TrsSolver(const Decomposition& dec, const SpeciesTree& s, bool labeled)
        : dec_(dec), g_(dec.init), s_(s), labeled_(labeled) {
        subtrees_.reserve(dec_.size());
        for (NodeId r : dec_.roots) subtrees_.push_back(g_.extract(r, s_));
        for (std::size_t i = 0; i < dec_.size(); ++i)
            index_of_root_[dec_.roots[i]] = i;
    }

    Solution run() {
        auto piece = solve(g_.root());
        Solution sol;
        sol.stats = stats_;
        if (piece.root == kNoNode) return sol;  // label-infeasible
        sol.feasible = true;
        sol.cost = piece.cost;
        GeneTree assembled = builder_.build(piece.root, s_);
        sol.tree = labeled_ ? fill_unlabeled(assembled, s_) : lca_reconcile(assembled, s_);
        ReconciliationReport rep = labeled_tree_cost(*sol.tree, s_);
        sol.duplications = rep.duplications;
        sol.losses = rep.losses;
        return sol;
    }

private:
    struct Piece {
        Cost cost = kInfiniteCost;
        NodeId root = kNoNode;  // builder part id
    };

    // x has at least two subtrees below it.
    Piece solve(NodeId x) {
        const auto& n = g_.node(x);
        int cl = dec_.count(n.left), cr = dec_.count(n.right);
        if (cl + cr == 2) return pair_stop(n.left, n.right);
        if (cl == 1 && cr >= 2) return graft_case(n.left, n.right, false);
        if (cl >= 2 && cr == 1) return graft_case(n.right, n.left, true);
        Piece lp = solve(n.left);
        if (lp.root == kNoNode) return {};
        Piece rp = solve(n.right);
        if (rp.root == kNoNode) return {};
        NodeId a = g_.species_image(n.left);
        NodeId b = g_.species_image(n.right);
        // Joining two multi-subtree groups separates no input subtree, so the
        // node takes its cheapest (lca) label even in labeled mode.
        LocalCost lc = local_cost(s_, s_.lca(a, b), a, b);
        Piece out;
        out.cost = add_cost(lc.cost, add_cost(lp.cost, rp.cost));
        out.root = builder_.join(lp.root, rp.root, lc.label);
        return out;
    }

    Piece pair_stop(NodeId left_root, NodeId right_root) {
        const GeneTree& gi = subtrees_[index_of_root_.at(left_root)];
        const GeneTree& gj = subtrees_[index_of_root_.at(right_root)];
        SgtOptions opt;
        opt.labeled = labeled_;
        SgtSolver solver({&gi, &gj}, {}, s_, opt);
        Solution sub = solver.run();
        stats_.absorb(sub.stats);
        if (!sub.feasible) return {};
        Piece out;
        out.cost = sub.cost;
        out.root = builder_.copy(*sub.tree, sub.tree->root(), true);
        return out;
    }

    // host: subtree root owning one decomposition subtree; group: sibling with
    // two or more. host_on_right mirrors the children of the new joint node.
    Piece graft_case(NodeId host, NodeId group, bool host_on_right) {
        Piece inner = solve(group);
        if (inner.root == kNoNode) return {};
        GraftWalk walk(g_, s_, host, g_.species_image(group), labeled_);
        GraftChoice choice = walk.run();
        if (choice.cost == kInfiniteCost) return {};

        Piece out;
        out.cost = add_cost(choice.cost, inner.cost);
        out.root = rebuild_host(host, choice.at, inner.root, host_on_right);
        return out;
    }

    // Copy of the host subtree with the solved group inserted above `at`.
    NodeId rebuild_host(NodeId u, NodeId at, NodeId graft_root, bool host_on_right) {
        if (u == at) {
            NodeId part = builder_.copy(g_, u, labeled_);
            return host_on_right ? builder_.join(graft_root, part, std::nullopt)
                                 : builder_.join(part, graft_root, std::nullopt);
        }
        const auto& n = g_.node(u);
        NodeId l = g_.is_ancestor(n.left, at) ? rebuild_host(n.left, at, graft_root, host_on_right)
                                              : builder_.copy(g_, n.left, labeled_);
        NodeId r = g_.is_ancestor(n.right, at) ? rebuild_host(n.right, at, graft_root, host_on_right)
                                               : builder_.copy(g_, n.right, labeled_);
        return builder_.join(l, r, labeled_ ? g_.node(u).event : std::nullopt);
    }

    const Decomposition& dec_;
    const GeneTree& g_;
    const SpeciesTree& s_;
    bool labeled_;
    std::vector<GeneTree> subtrees_;
    std::map<NodeId, std::size_t> index_of_root_;
    TreeBuilder builder_;
    SolveStats stats_;
};

inline Solution degenerate_solution(const Decomposition& dec, const SpeciesTree& s, bool labeled) {
    Solution sol;
    sol.feasible = true;
    sol.tree = labeled ? fill_unlabeled(dec.init, s) : lca_reconcile(dec.init, s);
    ReconciliationReport rep = labeled_tree_cost(*sol.tree, s);
    if (rep.total == kInfiniteCost)
        fail("NoLabelCompatibleSolution", "input labels admit no reconciliation");
    sol.cost = rep.total;
    sol.duplications = rep.duplications;
    sol.losses = rep.losses;
    return sol;
}

}  // namespace detail

inline Solution min_trs(const Decomposition& dec, const SpeciesTree& s) {
    auto t0 = std::chrono::steady_clock::now();
    Solution sol = dec.size() < 2 ? detail::degenerate_solution(dec, s, false)
                                  : detail::TrsSolver(dec, s, false).run();
    sol.stats.millis =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return sol;  // unlabeled solving is always feasible: the initial tree qualifies
}

inline Solution min_ltrs(const Decomposition& dec, const SpeciesTree& s) {
    auto t0 = std::chrono::steady_clock::now();
    // Every internal node inside a decomposition subtree must carry a label;
    // nodes above the frontier belong to no input subtree and need none.
    for (NodeId r : dec.roots) {
        std::vector<NodeId> stack{r};
        while (!stack.empty()) {
            NodeId u = stack.back();
            stack.pop_back();
            if (dec.init.is_leaf(u)) continue;
            if (!dec.init.event(u))
                fail("UnlabeledNode", "decomposition subtree has an unlabeled internal node");
            stack.push_back(dec.init.node(u).left);
            stack.push_back(dec.init.node(u).right);
        }
    }
    Solution sol = dec.size() < 2 ? detail::degenerate_solution(dec, s, true)
                                  : detail::TrsSolver(dec, s, true).run();
    sol.stats.millis =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!sol.feasible) fail("NoLabelCompatibleSolution", "no label-compatible recombination exists");
    return sol;
}

enum class CorrectionMode { Trs, Ltrs, Sgt, Lsgt };

inline CorrectionMode correction_mode_from(std::string_view name) {
    if (name == "trs") return CorrectionMode::Trs;
    if (name == "ltrs") return CorrectionMode::Ltrs;
    if (name == "sgt") return CorrectionMode::Sgt;
    if (name == "lsgt") return CorrectionMode::Lsgt;
    fail("UnknownMode", "correction mode must be one of trs, ltrs, sgt, lsgt");
}

struct CorrectionReport {
    bool changed = false;
    std::string notice;  // nonempty when the tree is returned unchanged
    Cost original_cost = 0;
    Cost corrected_cost = 0;
    Cost corrected_duplications = 0;
    Cost corrected_losses = 0;
    double reduction_pct = 0.0;
    int high_dups_before = 0;
    int high_dups_after = 0;
    std::size_t k_subtrees = 0;
    std::size_t n_leaves = 0;
    std::optional<GeneTree> corrected;
    SolveStats stats;
    double millis = 0.0;
};

// Cuts the tree at its highest non-duplication nodes and recombines the pieces
// under the chosen objective. Trees not rooted at a duplication are already a
// single piece and come back unchanged.
inline CorrectionReport correct(const GeneTree& g, const SpeciesTree& s, CorrectionMode mode) {
    auto t0 = std::chrono::steady_clock::now();
    CorrectionReport rep;
    rep.n_leaves = g.leaf_count();

    GeneTree labeled = g.fully_labeled() ? g : lca_reconcile(g, s);
    bool label_objective =
        (mode == CorrectionMode::Ltrs || mode == CorrectionMode::Lsgt) && g.fully_labeled();
    ReconciliationReport orig =
        label_objective ? labeled_tree_cost(labeled, s) : reconciliation_cost(g, s);
    rep.original_cost = orig.total;
    rep.high_dups_before = highest_duplication_count(g);

    Decomposition dec = decompose_at_highest_speciations(labeled);
    rep.k_subtrees = dec.size();
    if (dec.size() < 2) {
        rep.notice = "root is not a duplication; nothing to recombine";
        rep.corrected = labeled;
        rep.corrected_cost = orig.total;
        rep.corrected_duplications = orig.duplications;
        rep.corrected_losses = orig.losses;
        rep.high_dups_after = rep.high_dups_before;
        rep.millis =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        return rep;
    }

    Solution sol;
    switch (mode) {
        case CorrectionMode::Trs:
            sol = min_trs(dec, s);
            break;
        case CorrectionMode::Ltrs:
            sol = min_ltrs(dec, s);
            break;
        case CorrectionMode::Sgt:
        case CorrectionMode::Lsgt: {
            std::vector<GeneTree> subs;
            subs.reserve(dec.size());
            for (NodeId r : dec.roots) subs.push_back(dec.init.extract(r, s));
            std::vector<const GeneTree*> ptrs;
            for (const GeneTree& t : subs) ptrs.push_back(&t);
            sol = mode == CorrectionMode::Sgt ? min_sgt(ptrs, s) : min_lsgt(ptrs, s);
            break;
        }
    }

    rep.corrected = std::move(sol.tree);
    rep.corrected_cost = sol.cost;
    rep.corrected_duplications = sol.duplications;
    rep.corrected_losses = sol.losses;
    rep.stats = sol.stats;
    rep.changed = rep.corrected->canonical() != g.canonical();
    rep.high_dups_after = highest_duplication_count(*rep.corrected);
    rep.reduction_pct = rep.original_cost == 0 || rep.original_cost == kInfiniteCost
                            ? 0.0
                            : 100.0 *
                                  static_cast<double>(rep.original_cost - rep.corrected_cost) /
                                  static_cast<double>(rep.original_cost);
    rep.millis =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace suget
