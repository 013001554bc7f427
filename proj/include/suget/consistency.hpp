#pragma once

// Pairwise-shared-gene validation, rooted triplet extraction, and the classic
// component-based supertree existence test. The constraint graph at each level
// is built directly from the input trees (leaves on the same side of the
// restriction root form one group), which is equivalent to inserting one edge
// per displayed triplet but never materializes the triplet set.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "suget/tree.hpp"

namespace suget {

struct TripletConstraint {
    std::string a, b;  // the cherry pair, a < b
    std::string out;
};

inline bool operator==(const TripletConstraint& x, const TripletConstraint& y) {
    return x.a == y.a && x.b == y.b && x.out == y.out;
}

// 0: (x,y)|z   1: (x,z)|y   2: (y,z)|x  -- the pair with the deepest lca is the cherry.
inline int triplet_topology(const GeneTree& g, NodeId x, NodeId y, NodeId z) {
    int dxy = g.depth(g.lca(x, y));
    int dxz = g.depth(g.lca(x, z));
    int dyz = g.depth(g.lca(y, z));
    if (dxy > dxz && dxy > dyz) return 0;
    if (dxz > dxy && dxz > dyz) return 1;
    return 2;
}

// All C(n,3) rooted triplets displayed by g.
inline std::vector<TripletConstraint> extract_triplets(const GeneTree& g) {
    std::vector<TripletConstraint> out;
    const auto& leaves = g.leaves();
    for (std::size_t i = 0; i < leaves.size(); ++i)
        for (std::size_t j = i + 1; j < leaves.size(); ++j)
            for (std::size_t k = j + 1; k < leaves.size(); ++k) {
                std::array<std::string, 3> names = {g.node(leaves[i]).gene, g.node(leaves[j]).gene,
                                                    g.node(leaves[k]).gene};
                int topo = triplet_topology(g, leaves[i], leaves[j], leaves[k]);
                std::string cherry1, cherry2, outg;
                if (topo == 0) {
                    cherry1 = names[0];
                    cherry2 = names[1];
                    outg = names[2];
                } else if (topo == 1) {
                    cherry1 = names[0];
                    cherry2 = names[2];
                    outg = names[1];
                } else {
                    cherry1 = names[1];
                    cherry2 = names[2];
                    outg = names[0];
                }
                if (cherry2 < cherry1) std::swap(cherry1, cherry2);
                out.push_back({cherry1, cherry2, outg});
            }
    return out;
}

struct ConflictWitness {
    std::array<std::string, 3> genes;  // sorted
    std::size_t tree_a = 0, tree_b = 0;
};

struct ConsistencyResult {
    bool consistent = false;
    std::optional<RawTree> supertree;  // existence certificate, possibly non-binary
    std::optional<ConflictWitness> witness;
    std::vector<std::string> failing_component;  // genes of the irreducible component
};

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace detail

// Same gene name in two trees must map to the same species.
inline void validate_shared_genes(const std::vector<const GeneTree*>& trees) {
    std::unordered_map<std::string, NodeId> species_of;
    for (const GeneTree* g : trees)
        for (NodeId l : g->leaves()) {
            const auto& n = g->node(l);
            auto [it, fresh] = species_of.emplace(n.gene, n.species);
            if (!fresh && it->second != n.species)
                fail("SharedGeneSpeciesMismatch",
                     "gene '" + n.gene + "' maps to two different species across trees");
        }
}

inline ConsistencyResult check_consistency(const std::vector<const GeneTree*>& trees) {
    validate_shared_genes(trees);

    std::vector<std::string> genes;  // gid -> name, sorted for determinism
    {
        std::map<std::string, int> ids;
        for (const GeneTree* g : trees)
            for (NodeId l : g->leaves()) ids.emplace(g->node(l).gene, 0);
        for (auto& [name, gid] : ids) {
            gid = static_cast<int>(genes.size());
            genes.push_back(name);
        }
    }
    std::unordered_map<std::string, int> gid_of;
    for (std::size_t i = 0; i < genes.size(); ++i) gid_of[genes[i]] = static_cast<int>(i);

    ConsistencyResult result;
    RawTree cert;

    // Recursion over gid sets. Returns the certificate node or kNoNode on failure.
    auto build = [&](auto&& self, const std::vector<int>& gids) -> NodeId {
        if (gids.size() == 1) {
            cert.nodes.push_back(RawNode{genes[static_cast<std::size_t>(gids[0])], {}, {}});
            return static_cast<NodeId>(cert.nodes.size() - 1);
        }
        std::unordered_map<int, int> local;  // gid -> position in gids
        for (std::size_t i = 0; i < gids.size(); ++i) local[gids[i]] = static_cast<int>(i);

        detail::UnionFind uf(gids.size());
        for (const GeneTree* g : trees) {
            // Surviving leaves of this tree, grouped by side of the restriction root.
            std::vector<std::pair<NodeId, int>> alive;  // (leaf node, local index)
            for (NodeId l : g->leaves()) {
                auto it = gid_of.find(g->node(l).gene);
                auto jt = local.find(it->second);
                if (jt != local.end()) alive.emplace_back(l, jt->second);
            }
            if (alive.size() < 3) {
                // Two survivors still force nothing; chain them only if a third
                // leaf elsewhere could separate them, which needs >= 3.
                continue;
            }
            NodeId r = alive[0].first;
            for (std::size_t i = 1; i < alive.size(); ++i) r = g->lca(r, alive[i].first);
            NodeId rl = g->node(r).left;
            int first_left = -1, first_right = -1;
            for (auto& [leaf, idx] : alive) {
                bool on_left = g->is_ancestor(rl, leaf);
                int& anchor = on_left ? first_left : first_right;
                if (anchor == -1)
                    anchor = idx;
                else
                    uf.unite(anchor, idx);
            }
        }

        std::map<int, std::vector<int>> comps;  // root -> gids, keyed deterministically
        for (std::size_t i = 0; i < gids.size(); ++i) comps[uf.find(static_cast<int>(i))].push_back(gids[i]);
        if (comps.size() == 1) {
            for (int gid : gids) result.failing_component.push_back(genes[static_cast<std::size_t>(gid)]);
            return kNoNode;
        }
        std::vector<NodeId> children;
        for (auto& [root, comp] : comps) {
            NodeId child = self(self, comp);
            if (child == kNoNode) return kNoNode;
            children.push_back(child);
        }
        cert.nodes.push_back(RawNode{"", std::move(children), {}});
        return static_cast<NodeId>(cert.nodes.size() - 1);
    };

    std::vector<int> all(genes.size());
    std::iota(all.begin(), all.end(), 0);
    if (all.empty()) fail("EmptyRestriction", "no genes in input");
    NodeId root = build(build, all);
    if (root != kNoNode) {
        cert.root = root;
        result.consistent = true;
        result.supertree = std::move(cert);
        return result;
    }

    // Direct conflict inside the failing component: two trees assigning one
    // gene triple different topologies. May not exist (joint inconsistency of
    // pairwise-consistent trees); then the component alone is the diagnostic.
    std::sort(result.failing_component.begin(), result.failing_component.end());
    const auto& comp = result.failing_component;
    for (std::size_t i = 0; i < comp.size() && !result.witness; ++i)
        for (std::size_t j = i + 1; j < comp.size() && !result.witness; ++j)
            for (std::size_t k = j + 1; k < comp.size() && !result.witness; ++k) {
                int seen_topo = -1;
                std::size_t seen_tree = 0;
                for (std::size_t t = 0; t < trees.size(); ++t) {
                    const GeneTree* g = trees[t];
                    if (!g->has_gene(comp[i]) || !g->has_gene(comp[j]) || !g->has_gene(comp[k])) continue;
                    int topo = triplet_topology(*g, g->leaf_by_gene(comp[i]), g->leaf_by_gene(comp[j]),
                                                g->leaf_by_gene(comp[k]));
                    if (seen_topo == -1) {
                        seen_topo = topo;
                        seen_tree = t;
                    } else if (topo != seen_topo) {
                        result.witness = ConflictWitness{{comp[i], comp[j], comp[k]}, seen_tree, t};
                        break;
                    }
                }
            }
    return result;
}

}  // namespace suget
