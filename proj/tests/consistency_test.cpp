#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <string>
#include <utility>
#include <vector>

#include <suget/consistency.hpp>
#include <suget/oracle.hpp>

#include "helpers.hpp"

using suget::GeneTree;
using suget::SpeciesTree;
using suget::TripletConstraint;
using testutil::code_of;
using testutil::pointers;

namespace {

SpeciesTree wide_species() { return SpeciesTree::from_newick("(((a,b),(c,d)),e);"); }

}  // namespace

TEST_CASE("triplet topology codes") {
    SpeciesTree s = wide_species();
    GeneTree g = GeneTree::from_newick("((x__a,y__b),z__c);", s);
    suget::NodeId x = g.leaf_by_gene("x__a"), y = g.leaf_by_gene("y__b"),
                  z = g.leaf_by_gene("z__c");
    CHECK(suget::triplet_topology(g, x, y, z) == 0);
    CHECK(suget::triplet_topology(g, x, z, y) == 1);
    CHECK(suget::triplet_topology(g, z, x, y) == 2);
}

TEST_CASE("extract triplets enumerates every leaf triple") {
    SpeciesTree s = wide_species();
    GeneTree g3 = GeneTree::from_newick("((x__a,y__b),z__c);", s);
    auto t3 = suget::extract_triplets(g3);
    REQUIRE(t3.size() == 1);
    CHECK(t3[0] == TripletConstraint{"x__a", "y__b", "z__c"});

    GeneTree cat = GeneTree::from_newick("(((p__a,q__b),r__c),t__d);", s);
    auto tc = suget::extract_triplets(cat);
    REQUIRE(tc.size() == 4);
    std::vector<TripletConstraint> expect{{"p__a", "q__b", "r__c"},
                                          {"p__a", "q__b", "t__d"},
                                          {"p__a", "r__c", "t__d"},
                                          {"q__b", "r__c", "t__d"}};
    for (const auto& e : expect) CHECK(std::count(tc.begin(), tc.end(), e) == 1);

    suget::Rng rng(13);
    GeneTree big = testutil::random_topology(
        rng, {"g1__a", "g2__b", "g3__c", "g4__d", "g5__e", "g6__a"}, s);
    CHECK(suget::extract_triplets(big).size() == 20);  // C(6,3)
}

TEST_CASE("a single tree is consistent with itself as certificate") {
    SpeciesTree s = wide_species();
    GeneTree g = GeneTree::from_newick("((x__a,y__b),z__c);", s);
    auto res = suget::check_consistency({&g});
    REQUIRE(res.consistent);
    REQUIRE(res.supertree.has_value());
    GeneTree cert = GeneTree::from_raw(*res.supertree, s);
    CHECK(cert.canonical() == g.canonical());
}

TEST_CASE("compatible trees partition into components") {
    SpeciesTree s = wide_species();
    GeneTree g1 = GeneTree::from_newick("((x__a,y__b),z__c);", s);
    GeneTree g2 = GeneTree::from_newick("((x__a,y__b),w__d);", s);
    auto res = suget::check_consistency({&g1, &g2});
    REQUIRE(res.consistent);
    REQUIRE(res.supertree.has_value());
    // Top-level components {x,y} | {z} | {w}: a non-binary certificate.
    CHECK(res.supertree->at(res.supertree->root).children.size() == 3);
}

TEST_CASE("directly conflicting trees produce a witness") {
    SpeciesTree s = wide_species();
    GeneTree g1 = GeneTree::from_newick("((x__a,y__b),z__c);", s);
    GeneTree g2 = GeneTree::from_newick("((x__a,z__c),y__b);", s);
    auto res = suget::check_consistency({&g1, &g2});
    REQUIRE_FALSE(res.consistent);
    REQUIRE(res.witness.has_value());
    std::array<std::string, 3> expect{"x__a", "y__b", "z__c"};
    CHECK(res.witness->genes == expect);
    CHECK(res.witness->tree_a == 0);
    CHECK(res.witness->tree_b == 1);
}

TEST_CASE("pairwise-consistent trees can still be jointly inconsistent") {
    SpeciesTree s = wide_species();
    GeneTree t1 = GeneTree::from_newick("((x__a,y__b),z__c);", s);
    GeneTree t2 = GeneTree::from_newick("((z__c,w__d),y__b);", s);
    GeneTree t3 = GeneTree::from_newick("((y__b,w__d),x__a);", s);
    const std::array<std::pair<const GeneTree*, const GeneTree*>, 3> pairs{
        {{&t1, &t2}, {&t1, &t3}, {&t2, &t3}}};
    for (auto [a, b] : pairs) CHECK(suget::check_consistency({a, b}).consistent);
    auto res = suget::check_consistency({&t1, &t2, &t3});
    REQUIRE_FALSE(res.consistent);
    CHECK_FALSE(res.witness.has_value());  // no two-tree triple conflict exists
    CHECK(res.failing_component ==
          std::vector<std::string>{"w__d", "x__a", "y__b", "z__c"});
}

TEST_CASE("shared genes must agree on species") {
    SpeciesTree s = wide_species();
    GeneTree g1 = GeneTree::from_newick("(x[&&NHX:S=a],y__b);", s);
    GeneTree g2 = GeneTree::from_newick("(x[&&NHX:S=c],z__d);", s);
    CHECK(code_of([&] { suget::check_consistency({&g1, &g2}); }) ==
          "SharedGeneSpeciesMismatch");
}

TEST_CASE("consistency agrees with exhaustive supertree search") {
    suget::Rng rng(47);
    int consistent_seen = 0, inconsistent_seen = 0;
    for (int iter = 0; iter < 80; ++iter) {
        testutil::GenePool pool = testutil::make_pool(rng, 4, 3 + rng.below(4));  // <= 6 genes
        auto trees = testutil::random_trees(rng, pool, 2 + rng.below(2), 2);
        auto res = suget::check_consistency(pointers(trees));
        auto brute = suget::brute_min(pointers(trees), pool.species,
                                      suget::OracleConstraints::Display);
        REQUIRE(res.consistent == brute.feasible);
        (res.consistent ? consistent_seen : inconsistent_seen)++;
    }
    CHECK(consistent_seen > 0);
    CHECK(inconsistent_seen > 0);
}
