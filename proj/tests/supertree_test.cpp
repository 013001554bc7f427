#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include <suget/generator.hpp>
#include <suget/oracle.hpp>
#include <suget/supertree.hpp>

#include "helpers.hpp"

using suget::Event;
using suget::GeneTree;
using suget::NodeId;
using suget::Placement;
using suget::SpeciesTree;
using testutil::code_of;
using testutil::pointers;

namespace {

SpeciesTree wide_species() { return SpeciesTree::from_newick("(((a,b),(c,d)),e);"); }

GeneTree single_leaf(const std::string& gene, const std::string& species_name,
                     const SpeciesTree& s) {
    std::vector<GeneTree::Part> parts(1);
    parts[0].leaf = 0;
    return GeneTree::assemble(parts, 0, {{gene, s.leaf(species_name), false}}, s);
}

// Copy with each internal event flipped with probability p.
GeneTree flip_events(suget::Rng& rng, const GeneTree& g, const SpeciesTree& s, double p) {
    std::vector<GeneTree::Part> parts(g.size());
    std::vector<GeneTree::LeafSpec> leaves;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& n = g.node(static_cast<NodeId>(i));
        parts[i].left = n.left;
        parts[i].right = n.right;
        if (n.left == suget::kNoNode) {
            parts[i].leaf = static_cast<std::int32_t>(leaves.size());
            leaves.push_back({n.gene, n.species, n.species_from_tag});
        } else {
            Event ev = *n.event;
            if (rng.chance(p)) ev = ev == Event::Dup ? Event::Spec : Event::Dup;
            parts[i].event = ev;
        }
    }
    return GeneTree::assemble(parts, g.root(), leaves, s);
}

}  // namespace

TEST_CASE("root bipartitions of disjoint pairs") {
    SpeciesTree s = wide_species();
    GeneTree g1 = GeneTree::from_newick("(x1__a,x2__b);", s);
    GeneTree g2 = GeneTree::from_newick("(y1__c,y2__d);", s);
    auto views = suget::list_bipartitions({&g1, &g2});
    CHECK(views.size() == 7);  // 4^2/2 - 1
    // Canonical order pins the first entry: tree 0 whole on the left.
    CHECK(views[0].placement == std::vector<Placement>{Placement::AllLeft, Placement::AllRight});

    CHECK(suget::list_bipartitions({&g1}).size() == 1);
}

TEST_CASE("shared genes prune conflicting bipartitions") {
    SpeciesTree s = wide_species();
    GeneTree g1 = GeneTree::from_newick("(x__a,y__b);", s);
    GeneTree g2 = GeneTree::from_newick("(x__a,y__b);", s);
    auto views = suget::list_bipartitions({&g1, &g2});
    // Identical cherries: only the aligned double split keeps the sides gene-disjoint.
    REQUIRE(views.size() == 1);
    CHECK(views[0].placement == std::vector<Placement>{Placement::SplitLR, Placement::SplitLR});
    CHECK(views[0].left_genes == std::vector<std::string>{"x__a"});
    CHECK(views[0].right_genes == std::vector<std::string>{"y__b"});
}

TEST_CASE("a single input tree is returned unchanged at its own cost") {
    suget::Rng rng(301);
    for (int iter = 0; iter < 20; ++iter) {
        auto inst = suget::gen_instance(400 + static_cast<std::uint64_t>(iter), 3, 6, 1, 0.4, 0.3);
        auto sol = suget::min_sgt({&inst.truth}, inst.species);
        REQUIRE(sol.feasible);
        CHECK(sol.cost == suget::reconciliation_cost(inst.truth, inst.species).total);
        CHECK(sol.tree->canonical() == inst.truth.canonical());
        CHECK(sol.stats.bound_violations == 0);
    }
}

TEST_CASE("fully shared single-gene inputs collapse to one leaf") {
    SpeciesTree s = wide_species();
    GeneTree g1 = single_leaf("x__a", "a", s);
    GeneTree g2 = single_leaf("x__a", "a", s);
    auto sol = suget::min_sgt({&g1, &g2}, s);
    REQUIRE(sol.feasible);
    CHECK(sol.cost == 0);
    CHECK(sol.tree->leaf_count() == 1);
}

TEST_CASE("optimum matches exhaustive search on generated instances") {
    for (int iter = 0; iter < 40; ++iter) {
        std::uint64_t seed = 900 + static_cast<std::uint64_t>(iter);
        std::size_t n_species = 2 + seed % 3;
        auto inst = suget::gen_instance(seed, n_species, 7, 2 + seed % 2, 0.4, 0.3);
        auto ptrs = pointers(inst.parts);
        auto sol = suget::min_sgt(ptrs, inst.species);
        auto brute = suget::brute_min(ptrs, inst.species, suget::OracleConstraints::Display);
        REQUIRE(brute.feasible);
        REQUIRE(sol.feasible);
        REQUIRE(sol.cost == brute.cost);
        CHECK(sol.duplications + sol.losses == sol.cost);
        CHECK(sol.stats.bound_violations == 0);
        for (const GeneTree* g : ptrs) CHECK(suget::displays(*sol.tree, *g, inst.species));
    }
}

TEST_CASE("infeasible collections are rejected exactly when no supertree exists") {
    suget::Rng rng(77);
    int infeasible_seen = 0;
    for (int iter = 0; iter < 30; ++iter) {
        testutil::GenePool pool = testutil::make_pool(rng, 4, 4 + rng.below(3));
        auto trees = testutil::random_trees(rng, pool, 2 + rng.below(2), 2);
        auto ptrs = pointers(trees);
        auto brute = suget::brute_min(ptrs, pool.species, suget::OracleConstraints::Display);
        if (brute.feasible) {
            auto sol = suget::min_sgt(ptrs, pool.species);
            REQUIRE(sol.cost == brute.cost);
        } else {
            ++infeasible_seen;
            CHECK(code_of([&] { suget::min_sgt(ptrs, pool.species); }) == "InconsistentInput");
        }
    }
    CHECK(infeasible_seen > 0);
}

TEST_CASE("label constraints never beat the unconstrained optimum") {
    for (int iter = 0; iter < 30; ++iter) {
        std::uint64_t seed = 1700 + static_cast<std::uint64_t>(iter);
        auto inst = suget::gen_instance(seed, 3, 6, 2, 0.5, 0.3);
        auto ptrs = pointers(inst.parts);
        auto plain = suget::min_sgt(ptrs, inst.species);
        auto labeled = suget::min_lsgt(ptrs, inst.species);  // parts keep simulated labels
        REQUIRE(labeled.feasible);
        CHECK(labeled.cost >= plain.cost);
        CHECK(labeled.cost == suget::brute_min(ptrs, inst.species,
                                               suget::OracleConstraints::DisplayLabels)
                                  .cost);
        CHECK(labeled.tree->fully_labeled());
    }
}

TEST_CASE("labeled optimum matches exhaustive search under flipped labels") {
    suget::Rng rng(501);
    int infeasible_seen = 0;
    for (int iter = 0; iter < 30; ++iter) {
        auto inst = suget::gen_instance(2500 + static_cast<std::uint64_t>(iter), 3, 6, 2, 0.4, 0.3);
        std::vector<GeneTree> twisted;
        for (const GeneTree& part : inst.parts)
            twisted.push_back(flip_events(rng, part, inst.species, 0.35));
        auto ptrs = pointers(twisted);
        auto brute =
            suget::brute_min(ptrs, inst.species, suget::OracleConstraints::DisplayLabels);
        try {
            auto sol = suget::min_lsgt(ptrs, inst.species);
            REQUIRE(brute.feasible);
            REQUIRE(sol.cost == brute.cost);
        } catch (const suget::Error& e) {
            REQUIRE(std::string(e.code()) == "NoLabelCompatibleSolution");
            REQUIRE_FALSE(brute.feasible);
            ++infeasible_seen;
        }
    }
    CHECK(infeasible_seen > 0);
}

TEST_CASE("a forced duplication label costs three extra") {
    SpeciesTree s = wide_species();
    GeneTree plain = GeneTree::from_newick("(p__a,q__b);", s);
    GeneTree dup = GeneTree::from_newick("(p__a,q__b)[&&NHX:Ev=Dup];", s);
    CHECK(suget::min_sgt({&plain}, s).cost == 0);
    auto sol = suget::min_lsgt({&dup}, s);
    CHECK(sol.cost == 3);
    CHECK(sol.tree->event(sol.tree->root()) == Event::Dup);
}

TEST_CASE("impossible speciation labels have no solution") {
    SpeciesTree s = wide_species();
    GeneTree g = GeneTree::from_newick("(p__a,q__a)[&&NHX:Ev=Spec];", s);
    CHECK(code_of([&] { suget::min_lsgt({&g}, s); }) == "NoLabelCompatibleSolution");
    CHECK_FALSE(
        suget::brute_min({&g}, s, suget::OracleConstraints::DisplayLabels).feasible);
}

TEST_CASE("core selection greedily covers the gene universe") {
    SpeciesTree s = wide_species();
    GeneTree g1 = GeneTree::from_newick("((p__a,q__b),(r__c,t__d));", s);
    GeneTree g2 = GeneTree::from_newick("(t__d,u__e);", s);
    GeneTree g3 = single_leaf("u__e", "e", s);
    CHECK(suget::find_core({&g1, &g2, &g3}) == std::vector<std::size_t>{0, 1});
    CHECK(suget::find_core({&g1}) == std::vector<std::size_t>{0});

    GeneTree d1 = GeneTree::from_newick("(p__a,q__b);", s);
    GeneTree d2 = GeneTree::from_newick("(r__c,t__d);", s);
    GeneTree d3 = GeneTree::from_newick("(u__e,v__e);", s);
    CHECK(suget::find_core({&d1, &d2, &d3}) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("core-restricted solving matches the full optimum with a smaller table") {
    for (int iter = 0; iter < 15; ++iter) {
        std::uint64_t seed = 3300 + static_cast<std::uint64_t>(iter);
        auto inst = suget::gen_instance(seed, 3, 7, 3, 0.4, 0.3);
        std::vector<GeneTree> trees;
        trees.push_back(inst.truth);  // covers every gene, so the core is just this tree
        for (const GeneTree& part : inst.parts) trees.push_back(part);
        auto ptrs = pointers(trees);
        REQUIRE(suget::find_core(ptrs) == std::vector<std::size_t>{0});

        auto full = suget::min_sgt(ptrs, inst.species);
        auto core = suget::min_sgt_core(ptrs, inst.species);
        REQUIRE(core.feasible);
        CHECK(core.cost == full.cost);
        CHECK(core.stats.memo_key_bytes < full.stats.memo_key_bytes);
        CHECK(core.stats.bound_violations == 0);
        for (const GeneTree* g : ptrs) CHECK(suget::displays(*core.tree, *g, inst.species));
    }
}

TEST_CASE("memo entries restate solvable subinstances") {
    auto inst = suget::gen_instance(4100, 3, 7, 3, 0.4, 0.3);
    auto ptrs = pointers(inst.parts);
    suget::SgtOptions opt;
    opt.collect_memo = true;
    auto sol = suget::min_sgt(ptrs, inst.species, opt);
    REQUIRE_FALSE(sol.memo.empty());
    REQUIRE(sol.memo.size() == sol.stats.subproblems);

    std::size_t checked = 0;
    for (const auto& probe : sol.memo) {
        std::vector<GeneTree> subs;
        for (std::size_t i = 0; i < probe.components.size(); ++i)
            if (probe.components[i] != suget::kNoNode)
                subs.push_back(inst.parts[i].extract(probe.components[i], inst.species));
        auto sub_ptrs = pointers(subs);
        if (probe.feasible) {
            auto fresh = suget::min_sgt(sub_ptrs, inst.species);
            REQUIRE(fresh.cost == probe.cost);
        } else {
            CHECK(code_of([&] { suget::min_sgt(sub_ptrs, inst.species); }) ==
                  "InconsistentInput");
        }
        if (++checked == 40) break;
    }
}

TEST_CASE("input order does not change the optimum") {
    auto inst = suget::gen_instance(4600, 3, 6, 2, 0.4, 0.3);
    REQUIRE(inst.parts.size() == 2);
    auto fwd = suget::min_sgt({&inst.parts[0], &inst.parts[1]}, inst.species);
    auto rev = suget::min_sgt({&inst.parts[1], &inst.parts[0]}, inst.species);
    CHECK(fwd.cost == rev.cost);
}

TEST_CASE("solver input validation") {
    SpeciesTree s = wide_species();
    CHECK(code_of([&] { suget::min_sgt({}, s); }) == "InconsistentInput");

    std::vector<GeneTree> many;
    for (int i = 0; i < suget::kMaxTrees + 1; ++i)
        many.push_back(single_leaf("g" + std::to_string(i) + "__a", "a", s));
    CHECK(code_of([&] { suget::min_sgt(pointers(many), s); }) == "TooManyTrees");

    GeneTree unlabeled = GeneTree::from_newick("((p__a,q__b),r__c);", s);
    CHECK(code_of([&] { suget::min_lsgt({&unlabeled}, s); }) == "UnlabeledNode");

    GeneTree g1 = GeneTree::from_newick("(x[&&NHX:S=a],y__b);", s);
    GeneTree g2 = GeneTree::from_newick("(x[&&NHX:S=c],z__d);", s);
    CHECK(code_of([&] { suget::min_sgt({&g1, &g2}, s); }) == "SharedGeneSpeciesMismatch");
}
