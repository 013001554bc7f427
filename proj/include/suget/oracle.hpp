#pragma once

// Exhaustive reference implementations for tests and desk checks. Candidate
// supertrees are enumerated by inserting leaves one at a time on every edge
// (including above the root), giving each rooted binary topology exactly once:
// 1 * 3 * 5 * ... * (2n-3) trees. Candidates live in flat arrays with naive
// bitmask lca so the checks share nothing with the solvers they verify.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "suget/reconciliation.hpp"
#include "suget/supertree.hpp"
#include "suget/tree.hpp"
#include "suget/triplet.hpp"

namespace suget {

inline constexpr std::size_t kMaxOracleLeaves = 8;

// Rooted binary topology over leaves 0..n-1 (nodes 0..2n-2, internals from n).
struct SimpleTopology {
    int n = 0;
    NodeId root = 0;
    std::array<NodeId, 15> parent{};
    std::array<NodeId, 15> left{};
    std::array<NodeId, 15> right{};

    int size() const { return 2 * n - 1; }

    NodeId lca(NodeId a, NodeId b) const {
        std::uint32_t mask = 0;
        for (NodeId u = a; u != kNoNode; u = parent[static_cast<std::size_t>(u)])
            mask |= 1u << u;
        for (NodeId u = b;; u = parent[static_cast<std::size_t>(u)])
            if (mask & (1u << u)) return u;
    }

    // 0: (a,b)|c   1: (a,c)|b   2: (b,c)|a. Exactly one pairwise lca sits
    // strictly below the other two (which coincide at the triple's root).
    int triple(NodeId a, NodeId b, NodeId c) const {
        NodeId ab = lca(a, b);
        if (ab == lca(a, c)) return 2;
        return ab == lca(b, c) ? 1 : 0;
    }
};

namespace detail {

template <class Visit>
void insert_leaves(SimpleTopology& t, int next_leaf, Visit& visit) {
    if (next_leaf == t.n) {
        visit(const_cast<const SimpleTopology&>(t));
        return;
    }
    NodeId leaf = static_cast<NodeId>(next_leaf);
    NodeId joint = static_cast<NodeId>(t.n + next_leaf - 1);
    int present = 2 * next_leaf - 1;
    for (int slot = 0; slot < present; ++slot) {
        // Nodes in the current tree: leaves 0..next_leaf-1, then internals.
        NodeId v = static_cast<NodeId>(slot < next_leaf ? slot : t.n + (slot - next_leaf));
        NodeId p = t.parent[static_cast<std::size_t>(v)];
        t.parent[static_cast<std::size_t>(joint)] = p;
        if (p == kNoNode)
            t.root = joint;
        else if (t.left[static_cast<std::size_t>(p)] == v)
            t.left[static_cast<std::size_t>(p)] = joint;
        else
            t.right[static_cast<std::size_t>(p)] = joint;
        t.left[static_cast<std::size_t>(joint)] = v;
        t.right[static_cast<std::size_t>(joint)] = leaf;
        t.parent[static_cast<std::size_t>(v)] = joint;
        t.parent[static_cast<std::size_t>(leaf)] = joint;

        insert_leaves(t, next_leaf + 1, visit);

        t.parent[static_cast<std::size_t>(v)] = p;
        if (p == kNoNode)
            t.root = v;
        else if (t.left[static_cast<std::size_t>(p)] == joint)
            t.left[static_cast<std::size_t>(p)] = v;
        else
            t.right[static_cast<std::size_t>(p)] = v;
    }
}

}  // namespace detail

// Visits every rooted binary topology on n leaves exactly once, deterministic
// leaf-insertion order. The visited object is reused between calls.
template <class Visit>
void for_each_topology(std::size_t n_leaves, Visit visit) {
    if (n_leaves < 1) fail("TooManyLeaves", "need at least one leaf");
    if (n_leaves > kMaxOracleLeaves)
        fail("TooManyLeaves",
             "exhaustive enumeration capped at " + std::to_string(kMaxOracleLeaves) + " leaves");
    SimpleTopology t;
    t.n = static_cast<int>(n_leaves);
    t.parent.fill(kNoNode);
    t.left.fill(kNoNode);
    t.right.fill(kNoNode);
    t.root = 0;
    detail::insert_leaves(t, 1, visit);
}

inline std::uint64_t count_topologies(std::size_t n_leaves) {
    std::uint64_t c = 0;
    for_each_topology(n_leaves, [&](const SimpleTopology&) { ++c; });
    return c;
}

namespace detail {

inline GeneTree topology_to_tree(const SimpleTopology& t,
                                 const std::vector<GeneTree::LeafSpec>& leaves,
                                 const std::vector<std::optional<Event>>& events,
                                 const SpeciesTree& s) {
    std::vector<GeneTree::Part> parts(static_cast<std::size_t>(t.size()));
    for (int i = 0; i < t.size(); ++i) {
        auto& part = parts[static_cast<std::size_t>(i)];
        if (i < t.n)
            part.leaf = i;
        else {
            part.left = t.left[static_cast<std::size_t>(i)];
            part.right = t.right[static_cast<std::size_t>(i)];
            part.event = events[static_cast<std::size_t>(i)];
        }
    }
    GeneTree out = GeneTree::assemble(parts, t.root, leaves, s);
    return fill_unlabeled(out, s);
}

}  // namespace detail

// Enumerates full GeneTree objects over the given leaves (spec order = gene
// ids 0..n-1). Convenience wrapper; heavy callers use for_each_topology.
template <class Visit>
void enumerate_topologies(const std::vector<GeneTree::LeafSpec>& leaves, const SpeciesTree& s,
                          Visit visit) {
    std::vector<std::optional<Event>> no_events(2 * leaves.size(), std::nullopt);
    for_each_topology(leaves.size(), [&](const SimpleTopology& t) {
        visit(detail::topology_to_tree(t, leaves, no_events, s));
    });
}

enum class OracleConstraints { Display, DisplayLabels, DisplayTriplets, DisplayLabelsTriplets };

namespace detail {

struct OracleTriple {
    NodeId a, b, c;  // gene ids
    int code;        // expected topology code
};

// Naive ancestor-walk lca on an input GeneTree; keeps the oracle's input
// probing independent of the indexed lca the library uses.
inline NodeId walk_lca(const GeneTree& g, NodeId a, NodeId b) {
    std::vector<NodeId> anc;
    for (NodeId u = a; u != kNoNode; u = g.node(u).parent) anc.push_back(u);
    for (NodeId u = b; u != kNoNode; u = g.node(u).parent)
        for (NodeId v : anc)
            if (u == v) return u;
    fail("NodeNotInTree", "nodes share no ancestor");
}

inline int walk_depth(const GeneTree& g, NodeId x) {
    int d = 0;
    for (NodeId u = x; g.node(u).parent != kNoNode; u = g.node(u).parent) ++d;
    return d;
}

inline int walk_triple(const GeneTree& g, NodeId x, NodeId y, NodeId z) {
    int dxy = walk_depth(g, walk_lca(g, x, y));
    int dxz = walk_depth(g, walk_lca(g, x, z));
    int dyz = walk_depth(g, walk_lca(g, y, z));
    if (dxy > dxz && dxy > dyz) return 0;
    if (dxz > dxy && dxz > dyz) return 1;
    return 2;
}

}  // namespace detail

// Minimum-cost supertree by exhaustive search: every topology on the gene
// union is tested against the display constraint (triple agreement with each
// input), optionally the label-compatibility and triplet-respecting
// constraints, and costed. First topology in enumeration order wins ties.
// Infeasible instances come back with feasible = false.
inline Solution brute_min(const std::vector<const GeneTree*>& trees, const SpeciesTree& s,
                          OracleConstraints constraints, const Decomposition* dec = nullptr) {
    bool want_labels = constraints == OracleConstraints::DisplayLabels ||
                       constraints == OracleConstraints::DisplayLabelsTriplets;
    bool want_triplets = constraints == OracleConstraints::DisplayTriplets ||
                         constraints == OracleConstraints::DisplayLabelsTriplets;
    if (want_triplets && dec == nullptr)
        fail("InvalidDecomposition", "triplet constraints need the initial tree decomposition");
    validate_shared_genes(trees);
    if (want_labels)
        for (const GeneTree* g : trees)
            if (!g->fully_labeled()) fail("UnlabeledNode", "label constraints need labeled inputs");

    // Gene universe, sorted by name.
    std::map<std::string, NodeId> gid;
    for (const GeneTree* g : trees)
        for (NodeId l : g->leaves()) gid.emplace(g->node(l).gene, 0);
    std::size_t n = gid.size();
    if (n > kMaxOracleLeaves)
        fail("TooManyLeaves",
             "exhaustive search capped at " + std::to_string(kMaxOracleLeaves) + " genes");
    std::vector<GeneTree::LeafSpec> leaves(n);
    {
        NodeId next = 0;
        for (auto& [name, id] : gid) {
            id = next++;
            leaves[static_cast<std::size_t>(id)].gene = name;
        }
    }
    for (const GeneTree* g : trees)
        for (NodeId l : g->leaves()) {
            auto& spec = leaves[static_cast<std::size_t>(gid.at(g->node(l).gene))];
            spec.species = g->node(l).species;
            spec.species_from_tag = g->node(l).species_from_tag;
        }

    // Display constraints as gene-id triples with expected codes.
    std::vector<detail::OracleTriple> display;
    for (const GeneTree* g : trees) {
        const auto& ls = g->leaves();
        for (std::size_t i = 0; i < ls.size(); ++i)
            for (std::size_t j = i + 1; j < ls.size(); ++j)
                for (std::size_t m = j + 1; m < ls.size(); ++m)
                    display.push_back({gid.at(g->node(ls[i]).gene), gid.at(g->node(ls[j]).gene),
                                       gid.at(g->node(ls[m]).gene),
                                       detail::walk_triple(*g, ls[i], ls[j], ls[m])});
    }
    if (want_triplets) {
        const GeneTree& init = dec->init;
        std::vector<std::vector<NodeId>> members(dec->size());
        for (std::size_t i = 0; i < dec->size(); ++i)
            for (NodeId l : init.leaves_under(dec->roots[i])) members[i].push_back(l);
        for (std::size_t i = 0; i < dec->size(); ++i)
            for (std::size_t j = i + 1; j < dec->size(); ++j)
                for (std::size_t m = j + 1; m < dec->size(); ++m)
                    for (NodeId a : members[i])
                        for (NodeId b : members[j])
                            for (NodeId c : members[m])
                                display.push_back({gid.at(init.node(a).gene),
                                                   gid.at(init.node(b).gene),
                                                   gid.at(init.node(c).gene),
                                                   detail::walk_triple(init, a, b, c)});
    }

    // Forced labels: per input internal node, the leaf-set of gene ids and the
    // node's label; the candidate node spanning that set must carry the label.
    struct Forced {
        std::vector<NodeId> genes;
        Event label;
    };
    std::vector<Forced> forced;
    if (want_labels)
        for (const GeneTree* g : trees)
            for (std::size_t i = 0; i < g->size(); ++i) {
                NodeId x = static_cast<NodeId>(i);
                if (g->is_leaf(x)) continue;
                Forced f;
                f.label = *g->event(x);
                for (NodeId l : g->leaves_under(x)) f.genes.push_back(gid.at(g->node(l).gene));
                forced.push_back(std::move(f));
            }

    Solution best;
    best.cost = kInfiniteCost;
    SimpleTopology best_topology;
    std::vector<std::optional<Event>> best_events;
    std::uint64_t visited = 0;

    std::vector<std::optional<Event>> events(2 * n);
    std::vector<NodeId> image(2 * n);
    for_each_topology(n, [&](const SimpleTopology& t) {
        ++visited;
        for (const auto& tr : display)
            if (t.triple(tr.a, tr.b, tr.c) != tr.code) return;

        std::fill(events.begin(), events.end(), std::nullopt);
        for (const Forced& f : forced) {
            NodeId y = f.genes[0];
            for (std::size_t i = 1; i < f.genes.size(); ++i) y = t.lca(y, f.genes[i]);
            auto& slot = events[static_cast<std::size_t>(y)];
            if (slot && *slot != f.label) return;  // two inputs force different labels
            slot = f.label;
        }

        // Species images bottom-up, then the labeled cost.
        Cost total = 0;
        auto compute = [&](auto&& self, NodeId u) -> NodeId {
            if (u < static_cast<NodeId>(n))
                return image[static_cast<std::size_t>(u)] =
                           leaves[static_cast<std::size_t>(u)].species;
            NodeId a = self(self, t.left[static_cast<std::size_t>(u)]);
            NodeId b = self(self, t.right[static_cast<std::size_t>(u)]);
            LocalCost lc = labeled_local_cost(s, a, b, events[static_cast<std::size_t>(u)]);
            total = add_cost(total, lc.cost);
            return image[static_cast<std::size_t>(u)] = s.lca(a, b);
        };
        compute(compute, t.root);
        if (total < best.cost) {
            best.cost = total;
            best_topology = t;
            best_events = events;
        }
    });
    best.stats.subproblems = visited;

    if (best.cost == kInfiniteCost) {
        best.cost = 0;
        return best;  // infeasible
    }
    best.feasible = true;
    best.tree = detail::topology_to_tree(best_topology, leaves, best_events, s);
    ReconciliationReport rep = labeled_tree_cost(*best.tree, s);
    best.duplications = rep.duplications;
    best.losses = rep.losses;
    return best;
}

}  // namespace suget
