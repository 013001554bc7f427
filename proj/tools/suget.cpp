// suget: build, correct, and score gene trees against a species tree.
//
// Inputs are plain Newick files: one species tree, and gene trees one per
// line (a forest). Leaves resolve their species from an [&&NHX:S=name] tag
// or a "__species" name suffix; internal nodes may carry [&&NHX:Ev=Spec|Dup].
// Results go to stdout, diagnostics and --stats lines to stderr.
// Exit codes: 0 success, 1 any per-tree failure, 2 configuration or parse
// failure.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <suget/consistency.hpp>
#include <suget/generator.hpp>
#include <suget/oracle.hpp>
#include <suget/reconciliation.hpp>
#include <suget/supertree.hpp>
#include <suget/tree.hpp>
#include <suget/triplet.hpp>

namespace {

struct GeneBatch {
    std::vector<suget::GeneTree> trees;
    std::vector<std::string> names;  // root label when present, else tree<i>
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) suget::fail("FileNotFound", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

suget::SpeciesTree load_species(const std::string& path) {
    return suget::SpeciesTree::from_newick(read_file(path));
}

GeneBatch load_genes(const std::string& path, const suget::SpeciesTree& species) {
    GeneBatch batch;
    std::vector<suget::RawTree> raws = suget::parse_newick_forest(read_file(path));
    if (raws.empty()) suget::fail("EmptyInput", "no trees in '" + path + "'");
    for (std::size_t i = 0; i < raws.size(); ++i) {
        const std::string& label = raws[i].at(raws[i].root).label;
        batch.names.push_back(label.empty() ? "tree" + std::to_string(i + 1) : label);
        batch.trees.push_back(suget::GeneTree::from_raw(raws[i], species));
    }
    return batch;
}

std::vector<const suget::GeneTree*> pointers(const std::vector<suget::GeneTree>& trees) {
    std::vector<const suget::GeneTree*> p;
    p.reserve(trees.size());
    for (const suget::GeneTree& t : trees) p.push_back(&t);
    return p;
}

std::size_t env_cap(const char* name, std::size_t dflt) {
    const char* v = std::getenv(name);
    if (!v || !*v) return dflt;
    char* end = nullptr;
    unsigned long x = std::strtoul(v, &end, 10);
    if (*end != '\0' || x == 0) {
        std::cerr << "warning: ignoring invalid " << name << "='" << v << "'\n";
        return dflt;
    }
    return static_cast<std::size_t>(x);
}

void print_cost(const suget::Solution& sol) {
    std::cout << "cost=" << sol.duplications << "+" << sol.losses << "=" << sol.cost << "\n";
}

void print_stats(const suget::SolveStats& st) {
    std::ostringstream ss;
    ss << "stats: subproblems=" << st.subproblems << " bipartitions=" << st.bipartitions
       << " max_per_subproblem=" << st.max_bipartitions_per_subproblem
       << " memo_key_bytes=" << st.memo_key_bytes << " millis=" << std::fixed
       << std::setprecision(2) << st.millis;
    std::cerr << ss.str() << "\n";
}

void tree_error(std::size_t index, const std::string& name, const suget::Error& e) {
    std::cerr << "error: tree #" << index + 1 << " (" << name << "): " << e.what() << "\n";
}

int run_reconcile(const suget::SpeciesTree& s, const GeneBatch& batch, bool stats) {
    int rc = 0;
    std::cout << "name\tn_leaves\tduplications\tlosses\ttotal\n";
    for (std::size_t i = 0; i < batch.trees.size(); ++i) {
        try {
            suget::GeneTree labeled = suget::lca_reconcile(batch.trees[i], s);
            suget::ReconciliationReport rep = suget::reconciliation_cost(batch.trees[i], s);
            std::cout << labeled.to_newick() << "\n";
            std::cout << batch.names[i] << "\t" << batch.trees[i].leaf_count() << "\t"
                      << rep.duplications << "\t" << rep.losses << "\t" << rep.total << "\n";
            if (stats)
                std::cerr << "stats: internal=" << rep.per_node.size() << "\n";
        } catch (const suget::Error& e) {
            tree_error(i, batch.names[i], e);
            rc = 1;
        }
    }
    return rc;
}

int run_check(const GeneBatch& batch) {
    try {
        suget::ConsistencyResult res = suget::check_consistency(pointers(batch.trees));
        if (res.consistent) {
            std::cout << "consistent\n";
            if (res.supertree) std::cout << suget::serialize_newick(*res.supertree) << "\n";
            return 0;
        }
        std::cout << "inconsistent\n";
        if (res.witness) {
            std::cerr << "witness: " << res.witness->genes[0] << " " << res.witness->genes[1]
                      << " " << res.witness->genes[2] << " (trees #" << res.witness->tree_a + 1
                      << ", #" << res.witness->tree_b + 1 << ")\n";
        }
        if (!res.failing_component.empty()) {
            std::cerr << "component:";
            for (const std::string& g : res.failing_component) std::cerr << " " << g;
            std::cerr << "\n";
        }
        return 1;
    } catch (const suget::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_minsgt(const suget::SpeciesTree& s, const GeneBatch& batch, bool labeled, bool core,
               std::size_t max_k, bool stats) {
    if (batch.trees.size() > max_k) {
        std::cerr << "error: " << batch.trees.size() << " input trees exceed the cap of " << max_k
                  << "; candidate bipartitions grow as 4^k/2 - 1 per subproblem (raise --max-k"
                  << " or SUGET_MAX_K to force)\n";
        return 1;
    }
    try {
        suget::SgtOptions opt;
        opt.labeled = labeled;
        suget::Solution sol =
            core ? suget::min_sgt_core(pointers(batch.trees), s, opt)
                 : (labeled ? suget::min_lsgt(pointers(batch.trees), s)
                            : suget::min_sgt(pointers(batch.trees), s));
        std::cout << sol.tree->to_newick() << "\n";
        print_cost(sol);
        if (stats) print_stats(sol.stats);
        return 0;
    } catch (const suget::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_mintrs(const suget::SpeciesTree& s, const GeneBatch& batch, bool labeled, bool stats) {
    int rc = 0;
    for (std::size_t i = 0; i < batch.trees.size(); ++i) {
        try {
            const suget::GeneTree& g = batch.trees[i];
            suget::GeneTree init = g.fully_labeled() ? g : suget::lca_reconcile(g, s);
            suget::Decomposition dec = suget::decompose_at_highest_speciations(init);
            suget::Solution sol = labeled ? suget::min_ltrs(dec, s) : suget::min_trs(dec, s);
            std::cout << sol.tree->to_newick() << "\n";
            print_cost(sol);
            if (stats) print_stats(sol.stats);
        } catch (const suget::Error& e) {
            tree_error(i, batch.names[i], e);
            rc = 1;
        }
    }
    return rc;
}

int run_correct(const suget::SpeciesTree& s, const GeneBatch& batch, const std::string& mode_name,
                const std::string& report, bool stats) {
    suget::CorrectionMode mode = suget::correction_mode_from(mode_name);
    bool tsv = report == "tsv";
    if (tsv)
        std::cout << "name\tn_leaves\tk_subtrees\torig_cost\tnew_cost\treduction_pct"
                  << "\thigh_dups_before\thigh_dups_after\tmillis\n";
    int rc = 0;
    for (std::size_t i = 0; i < batch.trees.size(); ++i) {
        try {
            suget::CorrectionReport rep = suget::correct(batch.trees[i], s, mode);
            if (tsv) {
                std::ostringstream row;
                row << batch.names[i] << "\t" << rep.n_leaves << "\t" << rep.k_subtrees << "\t"
                    << rep.original_cost << "\t" << rep.corrected_cost << "\t" << std::fixed
                    << std::setprecision(1) << rep.reduction_pct << "\t" << rep.high_dups_before
                    << "\t" << rep.high_dups_after << "\t" << std::setprecision(2) << rep.millis;
                std::cout << row.str() << "\n";
            } else {
                std::cout << rep.corrected->to_newick() << "\n";
                std::cout << "cost=" << rep.corrected_duplications << "+" << rep.corrected_losses
                          << "=" << rep.corrected_cost << "\n";
                if (!rep.notice.empty())
                    std::cerr << "note: tree #" << i + 1 << " (" << batch.names[i]
                              << "): " << rep.notice << "\n";
            }
            if (stats) print_stats(rep.stats);
        } catch (const suget::Error& e) {
            tree_error(i, batch.names[i], e);
            rc = 1;
        }
    }
    return rc;
}

int run_oracle(const suget::SpeciesTree& s, const GeneBatch& batch, const std::string& mode,
               std::size_t max_n, bool stats) {
    std::set<std::string> genes;
    for (const suget::GeneTree& t : batch.trees)
        for (suget::NodeId l : t.leaves()) genes.insert(t.node(l).gene);
    if (genes.size() > max_n) {
        std::cerr << "error: " << genes.size() << " genes exceed the oracle cap of " << max_n
                  << "; exhaustive search visits (2n-3)!! topologies (raise --max-n or"
                  << " SUGET_MAX_ORACLE_N up to " << suget::kMaxOracleLeaves << ")\n";
        return 1;
    }
    bool triplets = mode == "trs" || mode == "ltrs";
    bool labels = mode == "lsgt" || mode == "ltrs";
    if (triplets && batch.trees.size() != 1)
        suget::fail("InvalidArgument", "oracle --mode " + mode + " takes exactly one initial tree");
    try {
        suget::Solution sol;
        suget::Decomposition dec;
        std::vector<suget::GeneTree> subs;
        if (triplets) {
            const suget::GeneTree& g = batch.trees[0];
            suget::GeneTree init = g.fully_labeled() ? g : suget::lca_reconcile(g, s);
            dec = suget::decompose_at_highest_speciations(init);
            for (suget::NodeId r : dec.roots) subs.push_back(dec.init.extract(r, s));
            sol = suget::brute_min(pointers(subs), s,
                                   labels ? suget::OracleConstraints::DisplayLabelsTriplets
                                          : suget::OracleConstraints::DisplayTriplets,
                                   &dec);
        } else {
            sol = suget::brute_min(pointers(batch.trees), s,
                                   labels ? suget::OracleConstraints::DisplayLabels
                                          : suget::OracleConstraints::Display);
        }
        if (stats) std::cerr << "stats: topologies=" << sol.stats.subproblems << "\n";
        if (!sol.feasible) {
            std::cout << "infeasible\n";
            return 1;
        }
        std::cout << sol.tree->to_newick() << "\n";
        print_cost(sol);
        return 0;
    } catch (const suget::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) suget::fail("FileWriteFailed", "cannot write '" + path + "'");
    out << content;
}

int run_gen(std::uint64_t seed, std::size_t n_species, std::size_t n_genes, std::size_t k,
            double dup_rate, double loss_rate, const std::string& prefix) {
    suget::Instance inst = suget::gen_instance(seed, n_species, n_genes, k, dup_rate, loss_rate);
    write_file(prefix + ".species.nwk", inst.species.to_newick() + "\n");
    write_file(prefix + ".truth.nwk", inst.truth.to_newick() + "\n");
    std::string parts;
    for (const suget::GeneTree& p : inst.parts) parts += p.to_newick() + "\n";
    write_file(prefix + ".parts.nwk", parts);
    suget::ReconciliationReport rep = suget::labeled_tree_cost(inst.truth, inst.species);
    std::cout << "species=" << prefix << ".species.nwk truth=" << prefix
              << ".truth.nwk parts=" << prefix << ".parts.nwk n_species="
              << inst.species.leaf_count() << " n_genes=" << inst.truth.leaf_count()
              << " k=" << inst.parts.size() << " truth_cost=" << rep.total << "\n";
    return 0;
}

int run_bench(const std::vector<std::size_t>& sizes, std::size_t trials) {
    std::cout << "n\tk\tsubproblems\tmedian_ms\tratio\n";
    double prev = 0.0;
    for (std::size_t n : sizes) {
        suget::Instance inst = suget::caterpillar_pair(n);
        suget::GeneTree init = suget::lca_reconcile(inst.truth, inst.species);
        suget::Decomposition dec = suget::decompose_at_highest_speciations(init);
        std::vector<double> times;
        suget::Solution sol;
        for (std::size_t t = 0; t < trials; ++t) {
            sol = suget::min_trs(dec, inst.species);
            times.push_back(sol.stats.millis);
        }
        std::sort(times.begin(), times.end());
        double median = times[times.size() / 2];
        std::ostringstream row;
        row << n << "\t" << dec.size() << "\t" << sol.stats.subproblems << "\t" << std::fixed
            << std::setprecision(2) << median << "\t";
        if (prev > 0.0)
            row << std::setprecision(2) << median / prev;
        else
            row << "-";
        std::cout << row.str() << "\n";
        prev = median;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gene tree construction and correction against a species tree"};
    app.require_subcommand(1);

    std::string species_path, genes_path, mode, report, out_prefix;
    bool stats = false, core = false;
    std::size_t max_k = env_cap("SUGET_MAX_K", 8);
    std::size_t max_n = std::min<std::size_t>(env_cap("SUGET_MAX_ORACLE_N", 8),
                                              suget::kMaxOracleLeaves);
    std::uint64_t seed = 1;
    std::size_t n_species = 5, n_genes = 8, k_parts = 3, trials = 5;
    double dup_rate = 0.3, loss_rate = 0.2;
    std::vector<std::size_t> sizes{200, 400, 800};

    auto add_solver_input = [&](CLI::App* sub) {
        sub->add_option("-s,--species", species_path, "species tree file")->required();
        sub->add_option("genes", genes_path, "gene tree file, one Newick per line")->required();
        sub->add_flag("--stats", stats, "print solver statistics to stderr");
    };

    CLI::App* reconcile = app.add_subcommand(
        "reconcile", "label each gene tree by lca reconciliation and report its cost");
    add_solver_input(reconcile);

    CLI::App* check =
        app.add_subcommand("check", "test whether the gene trees admit a common supertree");
    add_solver_input(check);

    CLI::App* minsgt = app.add_subcommand(
        "minsgt", "minimum-cost supertree displaying every input tree");
    add_solver_input(minsgt);
    minsgt->add_flag("--core", core, "solve on a covering core, filter with the rest");
    minsgt->add_option("--max-k", max_k, "largest accepted input tree count");

    CLI::App* minlsgt = app.add_subcommand(
        "minlsgt", "minimum-cost supertree preserving the input event labels");
    add_solver_input(minlsgt);
    minlsgt->add_flag("--core", core, "solve on a covering core, filter with the rest");
    minlsgt->add_option("--max-k", max_k, "largest accepted input tree count");

    CLI::App* mintrs = app.add_subcommand(
        "mintrs", "recombine each tree at its highest speciations, minimizing cost");
    add_solver_input(mintrs);

    CLI::App* minltrs = app.add_subcommand(
        "minltrs", "recombine each tree preserving event labels, minimizing cost");
    add_solver_input(minltrs);

    CLI::App* correct =
        app.add_subcommand("correct", "rewrite each gene tree under the chosen objective");
    add_solver_input(correct);
    correct->add_option("--mode", mode, "objective: trs, ltrs, sgt, lsgt")
        ->required()
        ->check(CLI::IsMember({"trs", "ltrs", "sgt", "lsgt"}));
    correct->add_option("--report", report, "report format (tsv)")
        ->check(CLI::IsMember({"tsv"}));

    CLI::App* oracle = app.add_subcommand(
        "oracle", "exhaustive minimum search over all topologies (small inputs only)");
    add_solver_input(oracle);
    oracle->add_option("--mode", mode, "constraint set: sgt, lsgt, trs, ltrs")
        ->required()
        ->check(CLI::IsMember({"sgt", "lsgt", "trs", "ltrs"}));
    oracle->add_option("--max-n", max_n, "largest accepted gene count");

    CLI::App* gen = app.add_subcommand(
        "gen", "simulate a species tree, a true gene tree, and partial input trees");
    gen->add_option("--seed", seed, "deterministic seed");
    gen->add_option("--species", n_species, "species count");
    gen->add_option("--genes", n_genes, "gene count cap");
    gen->add_option("--parts", k_parts, "partial tree count");
    gen->add_option("--dup-rate", dup_rate, "duplication probability per lineage step");
    gen->add_option("--loss-rate", loss_rate, "loss probability per duplicated lineage");
    gen->add_option("-o,--out", out_prefix, "output file prefix")->required();

    CLI::App* bench = app.add_subcommand(
        "bench", "recombination scaling report on caterpillar instances");
    bench->add_option("--sizes", sizes, "leaf counts to time")->delimiter(',');
    bench->add_option("--trials", trials, "runs per size (median reported)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*gen)
            return run_gen(seed, n_species, n_genes, k_parts, dup_rate, loss_rate, out_prefix);
        if (*bench) return run_bench(sizes, trials);

        suget::SpeciesTree species = load_species(species_path);
        GeneBatch batch = load_genes(genes_path, species);
        if (*reconcile) return run_reconcile(species, batch, stats);
        if (*check) return run_check(batch);
        if (*minsgt) return run_minsgt(species, batch, false, core, max_k, stats);
        if (*minlsgt) return run_minsgt(species, batch, true, core, max_k, stats);
        if (*mintrs) return run_mintrs(species, batch, false, stats);
        if (*minltrs) return run_mintrs(species, batch, true, stats);
        if (*correct) return run_correct(species, batch, mode, report, stats);
        if (*oracle) return run_oracle(species, batch, mode, max_n, stats);
    } catch (const suget::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
