// Acceptance gate for the library: ten numbered criteria, one [PASS]/[FAIL]
// line each ([SKIP] only for the optional fixture check). Exits nonzero iff
// any criterion failed. Solver results are judged against the exhaustive
// oracle, frozen hand values, and the documented complexity envelopes.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "suget/consistency.hpp"
#include "suget/generator.hpp"
#include "suget/oracle.hpp"
#include "suget/reconciliation.hpp"
#include "suget/supertree.hpp"
#include "suget/tree.hpp"
#include "suget/triplet.hpp"

using suget::Cost;
using suget::Decomposition;
using suget::Event;
using suget::GeneTree;
using suget::Instance;
using suget::NodeId;
using suget::SpeciesTree;

namespace {

int g_failures = 0;

void report(int num, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << num << ": " << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++g_failures;
}

void skip(int num, const std::string& name, const std::string& why) {
    std::cout << "[SKIP] criterion " << num << ": " << name << " (" << why << ")\n";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int places = 1) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(places) << v;
    return ss.str();
}

// Random consistent instances: simulated truth shattered into k restrictions.
std::vector<Instance> build_instances(std::uint64_t base_seed, std::size_t count) {
    std::vector<Instance> out;
    suget::Rng meta(base_seed);
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t n_species = 3 + meta.below(2);
        std::size_t n_genes = n_species + meta.below(8 - n_species);  // union <= 7
        std::size_t k = 1 + meta.below(3);
        out.push_back(suget::gen_instance(base_seed + 1000 + i, n_species, n_genes, k, 0.3, 0.3));
    }
    return out;
}

// Copy of the tree with each internal label flipped with probability p.
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

// Random set of separated subtree roots covering all leaves; always descends
// past the root so the decomposition has at least two parts.
std::vector<NodeId> random_frontier(suget::Rng& rng, const GeneTree& g) {
    std::vector<NodeId> roots;
    std::vector<NodeId> stack{g.root()};
    while (!stack.empty()) {
        NodeId u = stack.back();
        stack.pop_back();
        if (!g.is_leaf(u) && (u == g.root() || rng.chance(0.55))) {
            stack.push_back(g.node(u).left);
            stack.push_back(g.node(u).right);
        } else {
            roots.push_back(u);
        }
    }
    return roots;
}

struct LabeledOutcome {
    bool feasible = false;
    Cost cost = 0;
};

LabeledOutcome try_min_lsgt(const std::vector<const GeneTree*>& trees, const SpeciesTree& s) {
    try {
        auto sol = suget::min_lsgt(trees, s);
        return {true, sol.cost};
    } catch (const suget::Error& e) {
        if (e.code() == std::string("NoLabelCompatibleSolution")) return {false, 0};
        throw;
    }
}

LabeledOutcome try_min_ltrs(const Decomposition& dec, const SpeciesTree& s) {
    try {
        auto sol = suget::min_ltrs(dec, s);
        return {true, sol.cost};
    } catch (const suget::Error& e) {
        if (e.code() == std::string("NoLabelCompatibleSolution")) return {false, 0};
        throw;
    }
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<GeneTree> load_trees(const std::filesystem::path& p, const SpeciesTree& s) {
    std::stringstream ss(slurp(p));
    std::vector<GeneTree> out;
    std::string item;
    while (std::getline(ss, item, ';')) {
        std::string trimmed;
        for (char c : item)
            if (c != '\n' && c != '\r' && c != ' ' && c != '\t') trimmed += c;
        if (!trimmed.empty()) out.push_back(GeneTree::from_newick(trimmed + ";", s));
    }
    return out;
}

}  // namespace

int main() {
    // Criteria 1, 4, 5 share one sweep over random consistent instances.
    std::vector<Instance> instances = build_instances(4242, 320);

    int sgt_mismatches = 0;
    int sgt_infeasible = 0;
    std::uint64_t bound_violations = 0;
    bool bound_ok = true;
    int core_mismatches = 0;
    int core_strict_cases = 0;
    int core_strict_bad = 0;
    auto sweep_start = std::chrono::steady_clock::now();
    for (const Instance& inst : instances) {
        auto ptrs = testutil::pointers(inst.parts);
        auto fast = suget::min_sgt(ptrs, inst.species);
        auto slow = suget::brute_min(ptrs, inst.species, suget::OracleConstraints::Display);
        if (!fast.feasible || !slow.feasible)
            ++sgt_infeasible;
        else if (fast.cost != slow.cost)
            ++sgt_mismatches;

        std::uint64_t bound = (1ull << (2 * ptrs.size())) / 2 - 1;
        bound_violations += fast.stats.bound_violations;
        if (fast.stats.max_bipartitions_per_subproblem > bound) bound_ok = false;

        auto cored = suget::min_sgt_core(ptrs, inst.species);
        if (cored.feasible != fast.feasible || cored.cost != fast.cost) ++core_mismatches;
        if (suget::find_core(ptrs).size() < ptrs.size()) {
            ++core_strict_cases;
            if (cored.stats.memo_key_bytes >= fast.stats.memo_key_bytes) ++core_strict_bad;
        }
    }
    double sweep_secs = seconds_since(sweep_start);
    report(1, "minsgt matches exhaustive search",
           sgt_mismatches == 0 && sgt_infeasible == 0 && sweep_secs < 60.0,
           std::to_string(instances.size()) + " instances, " + fmt(sweep_secs) + " s");

    {
        int mismatches = 0;
        int infeasible_seen = 0;
        suget::Rng frng(2200);
        for (const Instance& inst : instances) {
            std::vector<GeneTree> labeled;
            for (const GeneTree& part : inst.parts)
                labeled.push_back(suget::lca_reconcile(part, inst.species));
            std::vector<GeneTree> flipped;
            for (const GeneTree& t : labeled)
                flipped.push_back(flip_events(frng, t, inst.species, 0.3));
            for (const auto* family : {&labeled, &flipped}) {
                auto ptrs = testutil::pointers(*family);
                LabeledOutcome fast = try_min_lsgt(ptrs, inst.species);
                auto slow =
                    suget::brute_min(ptrs, inst.species, suget::OracleConstraints::DisplayLabels);
                if (fast.feasible != slow.feasible ||
                    (fast.feasible && fast.cost != slow.cost))
                    ++mismatches;
                if (!slow.feasible) ++infeasible_seen;
            }
        }
        report(2, "minlsgt matches the label-constrained search",
               mismatches == 0 && infeasible_seen > 0,
               std::to_string(2 * instances.size()) + " runs, " +
                   std::to_string(infeasible_seen) + " infeasible");
    }

    int trs_mismatches = 0;
    int ltrs_mismatches = 0;
    int chain_checked = 0;
    int chain_violations = 0;
    {
        suget::Rng meta(3300);
        for (int i = 0; i < 320; ++i) {
            std::size_t n_species = 3 + meta.below(2);
            std::size_t n_genes = n_species + meta.below(8 - n_species);
            Instance inst =
                suget::gen_instance(9000 + static_cast<std::uint64_t>(i), n_species, n_genes, 1,
                                    0.35, 0.25);
            const GeneTree& truth = inst.truth;
            Decomposition dec =
                suget::make_decomposition(truth, random_frontier(meta, truth));
            std::vector<GeneTree> subs;
            for (NodeId r : dec.roots) subs.push_back(truth.extract(r, inst.species));
            auto ptrs = testutil::pointers(subs);

            auto trs = suget::min_trs(dec, inst.species);
            auto brute_trs =
                suget::brute_min(ptrs, inst.species, suget::OracleConstraints::DisplayTriplets,
                                 &dec);
            if (!trs.feasible || !brute_trs.feasible || trs.cost != brute_trs.cost)
                ++trs_mismatches;

            LabeledOutcome ltrs = try_min_ltrs(dec, inst.species);
            auto brute_ltrs = suget::brute_min(
                ptrs, inst.species, suget::OracleConstraints::DisplayLabelsTriplets, &dec);
            if (ltrs.feasible != brute_ltrs.feasible ||
                (ltrs.feasible && ltrs.cost != brute_ltrs.cost))
                ++ltrs_mismatches;

            auto sgt = suget::min_sgt(ptrs, inst.species);
            LabeledOutcome lsgt = try_min_lsgt(ptrs, inst.species);
            Cost init_cost = suget::reconciliation_cost(truth, inst.species).total;
            if (sgt.feasible && lsgt.feasible && trs.feasible && ltrs.feasible) {
                ++chain_checked;
                if (sgt.cost > lsgt.cost || sgt.cost > trs.cost || trs.cost > ltrs.cost ||
                    trs.cost > init_cost)
                    ++chain_violations;
            }
        }
    }
    report(3, "mintrs and minltrs match the constrained search",
           trs_mismatches == 0 && ltrs_mismatches == 0,
           "320 decompositions, " + std::to_string(trs_mismatches) + "+" +
               std::to_string(ltrs_mismatches) + " mismatches");

    {
        SpeciesTree sp = SpeciesTree::from_newick("((s1,s2),(s3,s4));");
        GeneTree c1 = GeneTree::from_newick("(x1__s1,x2__s2);", sp);
        GeneTree c2 = GeneTree::from_newick("(y1__s3,y2__s4);", sp);
        GeneTree c3 = GeneTree::from_newick("((z1__s1,z2__s2),z3__s3);", sp);
        bool seven = suget::list_bipartitions({&c1, &c2}).size() == 7 &&
                     suget::list_bipartitions({&c3, &c2}).size() == 7;
        report(4, "root bipartition count stays within 4^k/2 - 1",
               seven && bound_ok && bound_violations == 0,
               "disjoint pair yields 7; violations " + std::to_string(bound_violations));
    }

    {
        suget::Rng rng(5500);
        auto pool = testutil::make_pool(rng, 3, 5);
        GeneTree t_all = testutil::random_topology(rng, pool.genes, pool.species);
        GeneTree t_ab = testutil::random_topology(
            rng, {pool.genes[0], pool.genes[1]}, pool.species);
        GeneTree t_cd = testutil::random_topology(
            rng, {pool.genes[2], pool.genes[3]}, pool.species);
        std::vector<const GeneTree*> ptrs{&t_all, &t_ab, &t_cd};
        bool dedicated = suget::find_core(ptrs).size() == 1;
        auto full = suget::min_sgt(ptrs, pool.species);
        auto cored = suget::min_sgt_core(ptrs, pool.species);
        dedicated = dedicated && cored.cost == full.cost &&
                    cored.stats.memo_key_bytes < full.stats.memo_key_bytes;
        report(5, "core restriction keeps the optimum with a smaller table",
               dedicated && core_mismatches == 0 && core_strict_bad == 0 &&
                   core_strict_cases > 0,
               std::to_string(core_strict_cases) + " strict-core instances");
    }

    report(6, "solver costs obey the ordering chain", chain_violations == 0 && chain_checked > 0,
           std::to_string(chain_checked) + " instances checked");

    {
        suget::Rng rng(7100);
        int increases = 0;
        long before = 0;
        long after = 0;
        for (int i = 0; i < 100; ++i) {
            SpeciesTree sp = suget::random_species_tree(rng, 4 + rng.below(4));
            GeneTree truth = suget::simulate_gene_tree(rng, sp, 0.25, 0.2, 6);
            GeneTree noisy = suget::perturb_uproot(rng, truth, sp, 1 + rng.below(3));
            auto rep = suget::correct(noisy, sp, suget::CorrectionMode::Trs);
            if (rep.corrected_cost > rep.original_cost) ++increases;
            before += rep.high_dups_before;
            after += rep.high_dups_after;
        }
        report(7, "correction never raises the reconciliation cost",
               increases == 0 && after <= before,
               "100 trees, high duplications " + std::to_string(before) + " -> " +
                   std::to_string(after));
    }

    {
        bool cost_ok = true;
        bool time_ok = true;
        double medians[3] = {0, 0, 0};
        const std::size_t sizes[3] = {200, 400, 800};
        for (int si = 0; si < 3; ++si) {
            Instance inst = suget::caterpillar_pair(sizes[si]);
            const auto& root = inst.truth.node(inst.truth.root());
            Decomposition dec = suget::make_decomposition(inst.truth, {root.left, root.right});
            (void)suget::min_trs(dec, inst.species);  // warmup
            std::vector<double> times;
            for (int run = 0; run < 5; ++run) {
                auto sol = suget::min_trs(dec, inst.species);
                if (sol.cost != 1) cost_ok = false;
                if (sol.stats.millis >= 5000.0) time_ok = false;
                times.push_back(sol.stats.millis);
            }
            std::sort(times.begin(), times.end());
            medians[si] = times[2];
        }
        double r1 = medians[1] / medians[0];
        double r2 = medians[2] / medians[1];
        report(8, "pairwise recombination scales within the quadratic envelope",
               cost_ok && time_ok && r1 <= 6.0 && r2 <= 6.0,
               "medians " + fmt(medians[0], 2) + "/" + fmt(medians[1], 2) + "/" +
                   fmt(medians[2], 2) + " ms, ratios " + fmt(r1) + ", " + fmt(r2));
    }

    {
        namespace fs = std::filesystem;
        fs::path dir(SUGET_FIXTURE_DIR);
        bool any = false;
        bool ok = true;
        std::string detail;
        if (fs::exists(dir / "instance1.species.nwk") && fs::exists(dir / "instance1.trees.nwk")) {
            any = true;
            SpeciesTree sp = SpeciesTree::from_newick(slurp(dir / "instance1.species.nwk"));
            std::vector<GeneTree> trees = load_trees(dir / "instance1.trees.nwk", sp);
            auto ptrs = testutil::pointers(trees);
            auto plain = suget::min_sgt(ptrs, sp);
            auto labeled = suget::min_lsgt(ptrs, sp);
            ok = ok && plain.cost == 3 && labeled.cost == 8 && labeled.duplications == 3 &&
                 labeled.losses == 5;
            detail += "instance1 cost " + std::to_string(plain.cost) + "/" +
                      std::to_string(labeled.cost);
        }
        if (fs::exists(dir / "instance2.species.nwk") && fs::exists(dir / "instance2.init.nwk")) {
            any = true;
            SpeciesTree sp = SpeciesTree::from_newick(slurp(dir / "instance2.species.nwk"));
            std::vector<GeneTree> init = load_trees(dir / "instance2.init.nwk", sp);
            Decomposition dec = suget::decompose_at_highest_speciations(init.at(0));
            std::vector<GeneTree> subs;
            for (NodeId r : dec.roots) subs.push_back(dec.init.extract(r, sp));
            auto ptrs = testutil::pointers(subs);
            auto plain = suget::min_sgt(ptrs, sp);
            auto trs = suget::min_trs(dec, sp);
            ok = ok && plain.cost == 2 && trs.cost == 4 && trs.duplications == 3 &&
                 trs.losses == 1;
            if (!detail.empty()) detail += ", ";
            detail += "instance2 cost " + std::to_string(plain.cost) + "/" +
                      std::to_string(trs.cost);
        }
        if (!any)
            skip(9, "reference fixtures reproduce their frozen costs", "no fixture files present");
        else
            report(9, "reference fixtures reproduce their frozen costs", ok, detail);
    }

    {
        suget::Rng rng(10100);
        int roundtrip_bad = 0;
        for (int i = 0; i < 1000; ++i) {
            auto pool = testutil::make_pool(rng, 2 + rng.below(4), 2 + rng.below(7));
            GeneTree g = testutil::random_topology(rng, pool.genes, pool.species);
            if (i % 2 == 1) g = suget::lca_reconcile(g, pool.species);
            std::string text = g.to_newick();
            GeneTree back = GeneTree::from_newick(text, pool.species);
            if (back.to_newick() != text) ++roundtrip_bad;
        }
        int consistency_mismatches = 0;
        int seen_consistent = 0;
        int seen_inconsistent = 0;
        for (int i = 0; i < 150; ++i) {
            auto pool = testutil::make_pool(rng, 3 + rng.below(2), 4 + rng.below(3));
            auto trees = testutil::random_trees(rng, pool, 2 + rng.below(2), 2);
            auto ptrs = testutil::pointers(trees);
            bool brute_ok =
                suget::brute_min(ptrs, pool.species, suget::OracleConstraints::Display).feasible;
            bool fast_ok = suget::check_consistency(ptrs).consistent;
            if (brute_ok != fast_ok) ++consistency_mismatches;
            (fast_ok ? seen_consistent : seen_inconsistent)++;
        }
        report(10, "newick round-trips and consistency checking agree with search",
               roundtrip_bad == 0 && consistency_mismatches == 0 && seen_consistent > 0 &&
                   seen_inconsistent > 0,
               "1000 round-trips, 150 collections, " + std::to_string(seen_inconsistent) +
                   " inconsistent");
    }

    if (g_failures > 0) {
        std::cout << g_failures << " criteria failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
