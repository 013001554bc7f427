#pragma once

// Deterministic instance generation for tests and benchmarks: random species
// trees, a small birth-death gene simulator, shattering a tree into
// overlapping restrictions, and uproot perturbations that create spurious
// root duplications for the correction workflow to remove.

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "suget/tree.hpp"
#include "suget/triplet.hpp"

namespace suget {

// splitmix64; stable across platforms so seeds pin outputs bit-identically.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

    bool chance(double p) {
        return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0) < p;
    }

private:
    std::uint64_t state_;
};

// Uniform-ish random topology by repeatedly merging two random subtrees.
inline SpeciesTree random_species_tree(Rng& rng, std::size_t n_species) {
    if (n_species < 1) fail("InvalidArgument", "need at least one species");
    std::vector<std::string> items;
    for (std::size_t i = 1; i <= n_species; ++i) items.push_back("s" + std::to_string(i));
    while (items.size() > 1) {
        std::size_t i = rng.below(items.size());
        std::string a = std::move(items[i]);
        items.erase(items.begin() + static_cast<std::ptrdiff_t>(i));
        std::size_t j = rng.below(items.size());
        items[j] = "(" + a + "," + items[j] + ")";
    }
    return SpeciesTree::from_newick(items[0] + ";");
}

namespace detail {

class BirthDeath {
public:
    BirthDeath(Rng& rng, const SpeciesTree& s, double dup_rate, double loss_rate, int dup_budget)
        : rng_(rng), s_(s), dup_rate_(dup_rate), loss_rate_(loss_rate), budget_(dup_budget) {}

    // Fully labeled true tree; the founding lineage never dies, so with no
    // duplications the result is congruent to the species tree (cost 0).
    GeneTree run() {
        NodeId root = at(s_.root(), true);
        return builder_.build(root, s_);
    }

    int leaves_emitted() const { return next_gene_; }

private:
    // Lineage present at species node v.
    NodeId at(NodeId v, bool original) {
        if (budget_ > 0 && rng_.chance(dup_rate_)) {
            --budget_;
            NodeId a = at(v, original);
            NodeId b = at(v, false);
            if (a == kNoNode) return b;
            if (b == kNoNode) return a;
            return builder_.join(a, b, Event::Dup);
        }
        const auto& n = s_.node(v);
        if (n.left == kNoNode) {
            NodeId idx = static_cast<NodeId>(builder_.parts.size());
            builder_.parts.emplace_back();
            builder_.parts.back().leaf = static_cast<std::int32_t>(builder_.leaves.size());
            builder_.leaves.push_back(
                {"g" + std::to_string(++next_gene_) + "__" + n.name, v, false});
            return idx;
        }
        NodeId a = arrive(n.left, original);
        NodeId b = arrive(n.right, original);
        if (a == kNoNode) return b;
        if (b == kNoNode) return a;
        return builder_.join(a, b, Event::Spec);
    }

    // Descent along a species edge; only duplication copies can be lost.
    NodeId arrive(NodeId v, bool original) {
        if (!original && rng_.chance(loss_rate_)) return kNoNode;
        return at(v, original);
    }

    Rng& rng_;
    const SpeciesTree& s_;
    double dup_rate_;
    double loss_rate_;
    int budget_;
    int next_gene_ = 0;
    TreeBuilder builder_;
};

}  // namespace detail

inline GeneTree simulate_gene_tree(Rng& rng, const SpeciesTree& s, double dup_rate,
                                   double loss_rate, int dup_budget) {
    return detail::BirthDeath(rng, s, dup_rate, loss_rate, dup_budget).run();
}

// k overlapping leaf subsets covering all genes, each restricted from the
// tree; restrictions of one tree are always mutually consistent.
inline std::vector<GeneTree> shatter(Rng& rng, const GeneTree& g, const SpeciesTree& s,
                                     std::size_t k) {
    std::vector<std::string> genes;
    for (NodeId l : g.leaves()) genes.push_back(g.node(l).gene);
    if (k < 1) fail("InvalidArgument", "need at least one part");
    k = std::min(k, genes.size());
    for (std::size_t i = genes.size(); i > 1; --i)
        std::swap(genes[i - 1], genes[rng.below(i)]);

    std::vector<std::unordered_set<std::string>> parts(k);
    for (std::size_t i = 0; i < genes.size(); ++i) parts[i % k].insert(genes[i]);
    // Overlap: each part occasionally borrows a gene from another part.
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t tries = 0; tries < 2; ++tries)
            if (rng.chance(0.5)) parts[i].insert(genes[rng.below(genes.size())]);

    std::vector<GeneTree> out;
    out.reserve(k);
    for (const auto& keep : parts) out.push_back(g.restrict(keep, s));
    return out;
}

// Detaches a random proper subtree and rejoins it beside the remainder at a
// new root. Labels are dropped: the move invalidates them. Repeated moves
// stack spurious duplications near the top, which correction should undo.
inline GeneTree perturb_uproot(Rng& rng, const GeneTree& g, const SpeciesTree& s,
                               std::size_t n_moves) {
    GeneTree cur = g;
    for (std::size_t m = 0; m < n_moves; ++m) {
        if (cur.leaf_count() < 2) break;
        NodeId u;
        do {
            u = static_cast<NodeId>(rng.below(cur.size()));
        } while (u == cur.root());
        std::unordered_set<std::string> moved, rest;
        for (NodeId l : cur.leaves_under(u)) moved.insert(cur.node(l).gene);
        for (NodeId l : cur.leaves())
            if (!moved.count(cur.node(l).gene)) rest.insert(cur.node(l).gene);
        GeneTree remainder = cur.restrict(rest, s);
        detail::TreeBuilder b;
        NodeId left = b.copy(remainder, remainder.root(), false);
        NodeId right = b.copy(cur, u, false);
        cur = b.build(b.join(left, right, std::nullopt), s);
    }
    return cur;
}

struct Instance {
    SpeciesTree species;
    GeneTree truth;               // fully labeled simulated tree
    std::vector<GeneTree> parts;  // overlapping restrictions covering all genes
};

// Deterministic scaling fixture: a caterpillar species tree over n/2 species
// and a gene tree joining two congruent caterpillar blocks (disjoint gene
// names) under one duplication root. Decomposes into exactly two subtrees,
// so solving it walks the pairwise recombination path end to end.
inline Instance caterpillar_pair(std::size_t n_leaves) {
    if (n_leaves < 4 || n_leaves % 2 != 0)
        fail("InvalidArgument", "caterpillar_pair needs an even leaf count >= 4");
    std::size_t m = n_leaves / 2;
    auto caterpillar = [&](const std::string& prefix) {
        std::string t =
            "(" + prefix + "1__s1," + prefix + "2__s2)";
        for (std::size_t i = 3; i <= m; ++i)
            t = "(" + t + "," + prefix + std::to_string(i) + "__s" + std::to_string(i) + ")";
        return t;
    };
    std::string sp = "(s1,s2)";
    for (std::size_t i = 3; i <= m; ++i) sp = "(" + sp + ",s" + std::to_string(i) + ")";
    SpeciesTree species = SpeciesTree::from_newick(sp + ";");
    GeneTree init =
        GeneTree::from_newick("(" + caterpillar("a") + "," + caterpillar("b") + ");", species);
    std::vector<GeneTree> parts;
    parts.push_back(init.extract(init.node(init.root()).left, species));
    parts.push_back(init.extract(init.node(init.root()).right, species));
    return {std::move(species), std::move(init), std::move(parts)};
}

// Deterministic per seed. n_genes caps the leaf count: the duplication budget
// shrinks until the simulation fits.
inline Instance gen_instance(std::uint64_t seed, std::size_t n_species, std::size_t n_genes,
                             std::size_t k, double dup_rate, double loss_rate) {
    if (n_species < 1 || n_genes < n_species || k < 1)
        fail("InvalidArgument", "need n_species >= 1, n_genes >= n_species, k >= 1");
    Rng rng(seed);
    SpeciesTree species = random_species_tree(rng, n_species);
    int budget = static_cast<int>(n_genes - n_species);
    GeneTree truth = simulate_gene_tree(rng, species, dup_rate, loss_rate, budget);
    while (truth.leaf_count() > n_genes) {
        --budget;
        truth = simulate_gene_tree(rng, species, dup_rate, loss_rate, budget);
    }
    std::vector<GeneTree> parts = shatter(rng, truth, species, k);
    return {std::move(species), std::move(truth), std::move(parts)};
}

}  // namespace suget
