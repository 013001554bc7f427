#pragma once

// Duplication-loss reconciliation against a species tree. The local cost of an
// internal node with child species images a, b (and c = lca(a, b)) is:
//   c != a and c != b : inter(c,a) + inter(c,b)      speciation
//   a == b == c       : 1                            duplication
//   exactly one equal : 2 + inter(c,a) + inter(c,b)  duplication plus loss
// Losses are exactly the inter terms plus the constants beyond the single
// duplication; the root incurs no cost above itself.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "suget/tree.hpp"

namespace suget {

using Cost = std::uint64_t;
inline constexpr Cost kInfiniteCost = std::numeric_limits<Cost>::max();

inline Cost add_cost(Cost a, Cost b) {
    return (a == kInfiniteCost || b == kInfiniteCost) ? kInfiniteCost : a + b;
}

struct LocalCost {
    Cost cost = 0;
    Event label = Event::Spec;
};

// s_union must be the species lca of s_left and s_right.
inline LocalCost local_cost(const SpeciesTree& s, NodeId s_union, NodeId s_left, NodeId s_right) {
    if (s.lca(s_left, s_right) != s_union)
        fail("InvalidLcaTriple", "s_union is not the lca of the child images");
    if (s_union != s_left && s_union != s_right)
        return {static_cast<Cost>(s.inter(s_union, s_left) + s.inter(s_union, s_right)), Event::Spec};
    if (s_left == s_right) return {1, Event::Dup};
    return {static_cast<Cost>(2 + s.inter(s_union, s_left) + s.inter(s_union, s_right)), Event::Dup};
}

// Cost under a forced event label. Forcing Dup where the images are separated
// costs 3 + inter + inter (one duplication, at least two losses). Forcing Spec
// where one image contains the other is unsatisfiable: every reconciliation
// keeps the images comparable, so the cost saturates.
inline LocalCost labeled_local_cost(const SpeciesTree& s, NodeId s_left, NodeId s_right,
                                    std::optional<Event> forced) {
    NodeId u = s.lca(s_left, s_right);
    LocalCost base = local_cost(s, u, s_left, s_right);
    if (forced && *forced != base.label) {
        if (*forced == Event::Dup) return {add_cost(base.cost, 3), Event::Dup};
        return {kInfiniteCost, Event::Spec};
    }
    return base;
}

// Per-node event labels from the species images alone.
inline Event lca_event(const GeneTree& g, NodeId x) {
    const auto& n = g.node(x);
    if (n.left == kNoNode) fail("NodeNotInTree", "leaves carry no event");
    NodeId a = g.species_image(n.left);
    NodeId b = g.species_image(n.right);
    NodeId u = g.species_image(x);
    return (u != a && u != b) ? Event::Spec : Event::Dup;
}

// Copy of g with every internal node labeled by the lca reconciliation.
inline GeneTree lca_reconcile(const GeneTree& g, const SpeciesTree& s) {
    std::vector<GeneTree::Part> parts(g.size());
    std::vector<GeneTree::LeafSpec> leaves;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& n = g.node(static_cast<NodeId>(i));
        parts[i].left = n.left;
        parts[i].right = n.right;
        if (n.left == kNoNode) {
            parts[i].leaf = static_cast<std::int32_t>(leaves.size());
            leaves.push_back({n.gene, n.species, n.species_from_tag});
        } else {
            parts[i].event = lca_event(g, static_cast<NodeId>(i));
        }
    }
    return GeneTree::assemble(parts, g.root(), leaves, s);
}

struct NodeCost {
    NodeId node = kNoNode;
    Event event = Event::Spec;
    NodeId species = kNoNode;
    Cost cost = 0;
};

struct ReconciliationReport {
    Cost duplications = 0;
    Cost losses = 0;
    Cost total = 0;
    std::vector<NodeCost> per_node;  // internal nodes, preorder
};

namespace detail {

template <class EventAt>
ReconciliationReport tree_cost(const GeneTree& g, const SpeciesTree& s, EventAt event_at) {
    ReconciliationReport rep;
    std::vector<NodeId> stack{g.root()};
    while (!stack.empty()) {
        NodeId x = stack.back();
        stack.pop_back();
        const auto& n = g.node(x);
        if (n.left == kNoNode) continue;
        NodeId a = g.species_image(n.left);
        NodeId b = g.species_image(n.right);
        LocalCost lc = labeled_local_cost(s, a, b, event_at(x));
        rep.per_node.push_back({x, lc.label, g.species_image(x), lc.cost});
        rep.total = add_cost(rep.total, lc.cost);
        if (lc.label == Event::Dup) ++rep.duplications;
        stack.push_back(n.right);
        stack.push_back(n.left);
    }
    rep.losses = rep.total == kInfiniteCost ? kInfiniteCost : rep.total - rep.duplications;
    return rep;
}

}  // namespace detail

// Cost of g under its lca reconciliation, with per-node breakdown.
inline ReconciliationReport reconciliation_cost(const GeneTree& g, const SpeciesTree& s) {
    return detail::tree_cost(g, s, [](NodeId) { return std::nullopt; });
}

// Cost of g honoring its own event labels (every internal node must carry one).
inline ReconciliationReport labeled_tree_cost(const GeneTree& g, const SpeciesTree& s) {
    return detail::tree_cost(g, s, [&](NodeId x) -> std::optional<Event> {
        auto ev = g.event(x);
        if (!ev) fail("UnlabeledNode", "internal node " + std::to_string(x) + " carries no event label");
        return ev;
    });
}

// Duplication nodes all of whose strict ancestors are duplications, under the
// lca reconciliation.
inline int highest_duplication_count(const GeneTree& g) {
    int count = 0;
    std::vector<NodeId> stack{g.root()};
    while (!stack.empty()) {
        NodeId x = stack.back();
        stack.pop_back();
        const auto& n = g.node(x);
        if (n.left == kNoNode) continue;
        if (lca_event(g, x) != Event::Dup) continue;
        ++count;
        stack.push_back(n.left);
        stack.push_back(n.right);
    }
    return count;
}

}  // namespace suget
