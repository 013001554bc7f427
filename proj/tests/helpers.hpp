#pragma once

// Shared test utilities: error-code capture and random instance builders.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <suget/generator.hpp>
#include <suget/tree.hpp>

namespace testutil {

inline std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const suget::Error& e) {
        return e.code();
    }
    return "";
}

// Random rooted binary topology over the given leaf labels (merge order from
// the rng). Labels must resolve species on their own (S= tag or __ suffix).
inline suget::GeneTree random_topology(suget::Rng& rng, std::vector<std::string> leaves,
                                       const suget::SpeciesTree& s) {
    while (leaves.size() > 1) {
        std::size_t i = rng.below(leaves.size());
        std::string a = std::move(leaves[i]);
        leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(i));
        std::size_t j = rng.below(leaves.size());
        leaves[j] = "(" + a + "," + leaves[j] + ")";
    }
    return suget::GeneTree::from_newick(leaves[0] + ";", s);
}

// Gene names g1..gN round-robin over species s1..sM, so shared genes always
// agree on species. Independent random topologies over random subsets give a
// mix of consistent and inconsistent collections.
struct GenePool {
    suget::SpeciesTree species;
    std::vector<std::string> genes;  // full leaf labels, "g3__s1" style
};

inline GenePool make_pool(suget::Rng& rng, std::size_t n_species, std::size_t n_genes) {
    GenePool pool{suget::random_species_tree(rng, n_species), {}};
    for (std::size_t i = 0; i < n_genes; ++i)
        pool.genes.push_back("g" + std::to_string(i + 1) + "__s" +
                             std::to_string(i % n_species + 1));
    return pool;
}

// k random trees over random subsets (each of size >= min_size) of the pool.
inline std::vector<suget::GeneTree> random_trees(suget::Rng& rng, const GenePool& pool,
                                                 std::size_t k, std::size_t min_size) {
    std::vector<suget::GeneTree> out;
    for (std::size_t t = 0; t < k; ++t) {
        std::vector<std::string> subset;
        while (subset.size() < min_size) {
            subset.clear();
            for (const std::string& g : pool.genes)
                if (rng.chance(0.6)) subset.push_back(g);
        }
        out.push_back(random_topology(rng, subset, pool.species));
    }
    return out;
}

inline std::vector<const suget::GeneTree*> pointers(const std::vector<suget::GeneTree>& trees) {
    std::vector<const suget::GeneTree*> p;
    p.reserve(trees.size());
    for (const suget::GeneTree& t : trees) p.push_back(&t);
    return p;
}

}  // namespace testutil
