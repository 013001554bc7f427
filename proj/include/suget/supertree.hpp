#pragma once

// Minimum duplication-loss supertrees over partial gene trees. The search
// space is the bipartitions each input tree can contribute: every tree sends
// its whole self, one of its root subtrees, or nothing to the left side, the
// remainder to the right. Subproblems are tuples of complete-subtree ids (one
// per input tree, or absent), so restrictions never materialize new trees.
//
// Canonical assignment order: trees iterate most-significant-first, each over
// [AllLeft, AllRight, SplitLR, SplitRL] (leaves skip the splits); the first
// non-absent tree is pinned to [AllLeft, SplitLR], which halves the mirrored
// duplicates. Candidates with an empty side or a gene on both sides are
// dropped. Ties between equal-cost candidates go to the first in this order.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "suget/consistency.hpp"
#include "suget/reconciliation.hpp"
#include "suget/tree.hpp"

namespace suget {

inline constexpr int kMaxTrees = 12;

// Largest two-tree memo grid kept as a flat table (slots, not bytes); larger
// instances fall back to the hash map.
inline constexpr std::size_t kDenseMemoSlots = std::size_t{1} << 23;

enum class Placement : std::uint8_t { Absent, AllLeft, AllRight, SplitLR, SplitRL };

struct SolveStats {
    std::uint64_t subproblems = 0;
    std::uint64_t bipartitions = 0;          // valid candidates evaluated
    std::uint64_t max_bipartitions_per_subproblem = 0;
    std::uint64_t bound_violations = 0;      // candidates past 4^k/2 - 1 at a subproblem
    std::uint64_t memo_key_bytes = 0;        // entries x key width
    double millis = 0.0;

    void absorb(const SolveStats& o) {
        subproblems += o.subproblems;
        bipartitions += o.bipartitions;
        max_bipartitions_per_subproblem =
            std::max(max_bipartitions_per_subproblem, o.max_bipartitions_per_subproblem);
        bound_violations += o.bound_violations;
        memo_key_bytes += o.memo_key_bytes;
        millis += o.millis;
    }
};

struct MemoProbe {
    std::vector<NodeId> components;  // per solver tree, kNoNode = absent
    bool feasible = false;
    Cost cost = 0;
};

struct Solution {
    bool feasible = false;
    Cost cost = 0;
    Cost duplications = 0;
    Cost losses = 0;
    std::optional<GeneTree> tree;
    SolveStats stats;
    std::vector<MemoProbe> memo;  // only when requested
};

struct SgtOptions {
    bool labeled = false;
    bool collect_memo = false;
};

namespace detail {

class GeneSet {
public:
    void resize(std::size_t bits) { words_.assign((bits + 63) / 64, 0); }
    void clear() { std::fill(words_.begin(), words_.end(), 0); }
    void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
    void or_with(const GeneSet& o) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    }
    bool intersects(const GeneSet& o) const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & o.words_[i]) return true;
        return false;
    }
    std::size_t count() const {
        std::size_t c = 0;
        for (std::uint64_t w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
        return c;
    }
    int first() const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i]) return static_cast<int>(i * 64 + static_cast<std::size_t>(__builtin_ctzll(words_[i])));
        return -1;
    }

private:
    std::vector<std::uint64_t> words_;
};

struct GeneInfo {
    std::string name;
    NodeId species = kNoNode;
    bool from_tag = false;
};

struct SubKey {
    std::array<NodeId, kMaxTrees> comp;

    bool operator==(const SubKey& o) const { return comp == o.comp; }
};

struct SubKeyHash {
    std::size_t operator()(const SubKey& k) const {
        std::uint64_t h = 1469598103934665603ull;
        for (NodeId c : k.comp) {
            h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c));
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

class SgtSolver {
public:
    SgtSolver(std::vector<const GeneTree*> solver_trees, std::vector<const GeneTree*> filter_trees,
              const SpeciesTree& s, SgtOptions opt)
        : trees_(std::move(solver_trees)), filters_(std::move(filter_trees)), s_(s), opt_(opt) {
        k_ = static_cast<int>(trees_.size());
        if (k_ == 0) fail("InconsistentInput", "no input trees");
        if (k_ > kMaxTrees)
            fail("TooManyTrees", "at most " + std::to_string(kMaxTrees) + " trees per instance");

        std::vector<const GeneTree*> all = trees_;
        all.insert(all.end(), filters_.begin(), filters_.end());
        validate_shared_genes(all);
        if (opt_.labeled)
            for (const GeneTree* g : all)
                if (!g->fully_labeled())
                    fail("UnlabeledNode", "labeled solving requires event labels on every internal node");

        std::map<std::string, int> ids;
        for (const GeneTree* g : all)
            for (NodeId l : g->leaves()) ids.emplace(g->node(l).gene, 0);
        genes_.reserve(ids.size());
        for (auto& [name, gid] : ids) {
            gid = static_cast<int>(genes_.size());
            genes_.push_back({name, kNoNode, false});
        }
        for (const GeneTree* g : all)
            for (NodeId l : g->leaves()) {
                const auto& n = g->node(l);
                GeneInfo& info = genes_[static_cast<std::size_t>(ids[n.gene])];
                if (info.species == kNoNode) {
                    info.species = n.species;
                    info.from_tag = n.species_from_tag;
                }
            }
        gid_of_ = std::move(ids);

        std::size_t leaf_total = 0;
        for (const GeneTree* g : trees_) leaf_total += g->leaf_count();
        disjoint_ = filters_.empty() && leaf_total == genes_.size();

        // Two-tree memo keys form the grid of node pairs (or absent), so a
        // preallocated flat table replaces the hash map: direct indexing and
        // stable references, no per-entry allocation. Falls back to the map
        // when the grid would not fit in memory.
        if (k_ == 2) {
            std::size_t rows = trees_[0]->size() + 1;
            dense_w_ = trees_[1]->size() + 1;
            if (rows * dense_w_ <= kDenseMemoSlots) {
                dense_ = true;
                dense_entries_.resize(rows * dense_w_);
                dense_done_.assign(rows * dense_w_, 0);
            }
        }

        if (!disjoint_) {
            node_genes_.resize(trees_.size());
            for (std::size_t t = 0; t < trees_.size(); ++t) {
                const GeneTree& g = *trees_[t];
                auto& sets = node_genes_[t];
                sets.resize(g.size());
                for (auto& gs : sets) gs.resize(genes_.size());
                // Leaves first, then parents; process by decreasing depth.
                std::vector<NodeId> order(g.size());
                for (std::size_t i = 0; i < g.size(); ++i) order[i] = static_cast<NodeId>(i);
                std::sort(order.begin(), order.end(),
                          [&](NodeId a, NodeId b) { return g.depth(a) > g.depth(b); });
                for (NodeId id : order) {
                    const auto& n = g.node(id);
                    if (n.left == kNoNode)
                        sets[static_cast<std::size_t>(id)].set(
                            static_cast<std::size_t>(gid_of_.at(n.gene)));
                    else {
                        sets[static_cast<std::size_t>(id)].or_with(sets[static_cast<std::size_t>(n.left)]);
                        sets[static_cast<std::size_t>(id)].or_with(sets[static_cast<std::size_t>(n.right)]);
                    }
                }
            }
            scratch_l_.resize(genes_.size());
            scratch_r_.resize(genes_.size());
            scratch_u_.resize(genes_.size());
        }
    }

    Solution run() {
        SubKey root{};
        root.comp.fill(kNoNode);
        for (int i = 0; i < k_; ++i) root.comp[static_cast<std::size_t>(i)] = trees_[static_cast<std::size_t>(i)]->root();
        const Entry& e = solve(root);

        Solution sol;
        sol.stats = stats_;
        std::size_t n_entries = dense_ ? dense_used_ : memo_.size();
        sol.stats.subproblems = n_entries;
        sol.stats.memo_key_bytes = n_entries * static_cast<std::size_t>(k_) * sizeof(NodeId);
        if (opt_.collect_memo) {
            if (dense_) {
                for (std::size_t i = 0; i < dense_done_.size(); ++i) {
                    if (!dense_done_[i]) continue;
                    MemoProbe p;
                    p.components = {static_cast<NodeId>(i / dense_w_) - 1,
                                    static_cast<NodeId>(i % dense_w_) - 1};
                    p.feasible = dense_entries_[i].cost != kInfiniteCost;
                    p.cost = dense_entries_[i].cost;
                    sol.memo.push_back(std::move(p));
                }
            } else {
                for (const auto& [key, entry] : memo_) {
                    MemoProbe p;
                    p.components.assign(key.comp.begin(), key.comp.begin() + k_);
                    p.feasible = entry.cost != kInfiniteCost;
                    p.cost = entry.cost;
                    sol.memo.push_back(std::move(p));
                }
            }
        }
        if (e.cost == kInfiniteCost) return sol;

        sol.feasible = true;
        sol.cost = e.cost;
        std::vector<GeneTree::Part> parts;
        std::vector<GeneTree::LeafSpec> leaves;
        rebuild(root, parts, leaves);
        sol.tree = GeneTree::assemble(parts, 0, leaves, s_);
        ReconciliationReport rep = labeled_tree_cost(*sol.tree, s_);
        sol.duplications = rep.duplications;
        sol.losses = rep.losses;
        return sol;
    }

private:
    struct Entry {
        Cost cost = kInfiniteCost;
        std::array<std::uint8_t, kMaxTrees> assign{};
        std::int32_t leaf_gid = -1;
        Event label = Event::Spec;
    };

    // Memoized entries live in the dense grid when it is active, otherwise in
    // the hash map. Both keep references stable: the grid is never resized
    // after construction and the map is node-based.
    std::size_t dense_index(const SubKey& key) const {
        return static_cast<std::size_t>(key.comp[0] + 1) * dense_w_ +
               static_cast<std::size_t>(key.comp[1] + 1);
    }

    const Entry& store(const SubKey& key, const Entry& result) {
        if (dense_) {
            std::size_t at = dense_index(key);
            dense_entries_[at] = result;
            dense_done_[at] = 1;
            ++dense_used_;
            return dense_entries_[at];
        }
        return memo_.emplace(key, result).first->second;
    }

    const Entry& solve(const SubKey& key) {
        if (dense_) {
            std::size_t at = dense_index(key);
            if (dense_done_[at]) return dense_entries_[at];
        } else if (auto it = memo_.find(key); it != memo_.end()) {
            return it->second;
        }
        Entry result;

        // Union cardinality and the stop condition.
        std::size_t union_count = 0;
        int single_gid = -1;
        if (disjoint_) {
            const GeneTree* single_tree = nullptr;
            NodeId single_node = kNoNode;
            for (int i = 0; i < k_; ++i) {
                NodeId c = key.comp[static_cast<std::size_t>(i)];
                if (c == kNoNode) continue;
                union_count += static_cast<std::size_t>(trees_[static_cast<std::size_t>(i)]->node(c).n_leaves);
                single_tree = trees_[static_cast<std::size_t>(i)];
                single_node = c;
            }
            if (union_count == 1)
                single_gid = gid_of_.at(single_tree->node(single_node).gene);
        } else {
            scratch_u_.clear();
            for (int i = 0; i < k_; ++i) {
                NodeId c = key.comp[static_cast<std::size_t>(i)];
                if (c != kNoNode)
                    scratch_u_.or_with(node_genes_[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]);
            }
            union_count = scratch_u_.count();
            if (union_count == 1) single_gid = scratch_u_.first();
        }
        if (union_count == 1) {
            result.cost = 0;
            result.leaf_gid = single_gid;
            return store(key, result);
        }

        // Per-tree choice lists in canonical order.
        std::array<std::array<Placement, 4>, kMaxTrees> choices;
        std::array<int, kMaxTrees> n_choices{};
        int n_nonabsent = 0;
        bool seen_nonabsent = false;
        for (int i = 0; i < k_; ++i) {
            NodeId c = key.comp[static_cast<std::size_t>(i)];
            auto& ch = choices[static_cast<std::size_t>(i)];
            int& n = n_choices[static_cast<std::size_t>(i)];
            if (c == kNoNode) {
                ch[0] = Placement::Absent;
                n = 1;
                continue;
            }
            ++n_nonabsent;
            bool leaf = trees_[static_cast<std::size_t>(i)]->is_leaf(c);
            if (!seen_nonabsent) {
                seen_nonabsent = true;
                ch[0] = Placement::AllLeft;
                n = 1;
                if (!leaf) ch[n++] = Placement::SplitLR;
            } else {
                ch[0] = Placement::AllLeft;
                ch[1] = Placement::AllRight;
                n = 2;
                if (!leaf) {
                    ch[n++] = Placement::SplitLR;
                    ch[n++] = Placement::SplitRL;
                }
            }
        }
        std::uint64_t bound =
            (std::uint64_t{1} << (2 * n_nonabsent)) / 2 - 1;  // 4^k/2 - 1 over non-absent trees

        std::array<int, kMaxTrees> pick{};
        std::uint64_t valid_here = 0;
        for (;;) {
            // Current assignment; derive child components.
            SubKey lkey{}, rkey{};
            lkey.comp.fill(kNoNode);
            rkey.comp.fill(kNoNode);
            bool left_any = false, right_any = false;
            for (int i = 0; i < k_; ++i) {
                NodeId c = key.comp[static_cast<std::size_t>(i)];
                switch (choices[static_cast<std::size_t>(i)][static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])]) {
                    case Placement::Absent:
                        break;
                    case Placement::AllLeft:
                        lkey.comp[static_cast<std::size_t>(i)] = c;
                        left_any = true;
                        break;
                    case Placement::AllRight:
                        rkey.comp[static_cast<std::size_t>(i)] = c;
                        right_any = true;
                        break;
                    case Placement::SplitLR:
                        lkey.comp[static_cast<std::size_t>(i)] = trees_[static_cast<std::size_t>(i)]->node(c).left;
                        rkey.comp[static_cast<std::size_t>(i)] = trees_[static_cast<std::size_t>(i)]->node(c).right;
                        left_any = right_any = true;
                        break;
                    case Placement::SplitRL:
                        lkey.comp[static_cast<std::size_t>(i)] = trees_[static_cast<std::size_t>(i)]->node(c).right;
                        rkey.comp[static_cast<std::size_t>(i)] = trees_[static_cast<std::size_t>(i)]->node(c).left;
                        left_any = right_any = true;
                        break;
                }
            }

            if (left_any && right_any && admit(key, lkey, rkey)) {
                ++valid_here;
                ++stats_.bipartitions;
                if (valid_here > bound) ++stats_.bound_violations;
                evaluate(key, lkey, rkey, pick, choices, result);
            }

            // Mixed-radix increment, last tree fastest.
            int i = k_ - 1;
            while (i >= 0) {
                if (++pick[static_cast<std::size_t>(i)] < n_choices[static_cast<std::size_t>(i)]) break;
                pick[static_cast<std::size_t>(i)] = 0;
                --i;
            }
            if (i < 0) break;
        }
        stats_.max_bipartitions_per_subproblem =
            std::max(stats_.max_bipartitions_per_subproblem, valid_here);

        return store(key, result);
    }

    // Validity: no gene on both sides, plus (core mode) every filter tree keeps
    // its current restriction whole or split exactly at its root. Labeled mode
    // additionally resolves the forced event, stored in forced_.
    bool admit(const SubKey& key, const SubKey& lkey, const SubKey& rkey) {
        (void)key;
        forced_.reset();
        if (!disjoint_) {
            scratch_l_.clear();
            scratch_r_.clear();
            for (int i = 0; i < k_; ++i) {
                if (lkey.comp[static_cast<std::size_t>(i)] != kNoNode)
                    scratch_l_.or_with(node_genes_[static_cast<std::size_t>(i)]
                                                  [static_cast<std::size_t>(lkey.comp[static_cast<std::size_t>(i)])]);
                if (rkey.comp[static_cast<std::size_t>(i)] != kNoNode)
                    scratch_r_.or_with(node_genes_[static_cast<std::size_t>(i)]
                                                  [static_cast<std::size_t>(rkey.comp[static_cast<std::size_t>(i)])]);
            }
            if (scratch_l_.intersects(scratch_r_)) return false;
        }
        if (opt_.labeled && !collect_forced(lkey, rkey)) return false;
        for (const GeneTree* f : filters_)
            if (!filter_compatible(*f)) return false;
        return true;
    }

    // Forced label: all trees separated by this bipartition must agree on their
    // root event; a forced speciation additionally requires genuinely separated
    // child images (checked by the caller once s-images are known).
    bool collect_forced(const SubKey& lkey, const SubKey& rkey) {
        for (int i = 0; i < k_; ++i) {
            NodeId l = lkey.comp[static_cast<std::size_t>(i)];
            NodeId r = rkey.comp[static_cast<std::size_t>(i)];
            if (l == kNoNode || r == kNoNode) continue;  // not separated
            // Separated: this tree's current component was split at its root.
            NodeId src = trees_[static_cast<std::size_t>(i)]->node(l).parent;
            Event ev = *trees_[static_cast<std::size_t>(i)]->event(src);
            if (forced_ && *forced_ != ev) return false;
            forced_ = ev;
        }
        return true;
    }

    // Property check for one non-solver tree against scratch_l_/scratch_r_.
    bool filter_compatible(const GeneTree& f) {
        NodeId u = kNoNode, v = kNoNode;
        for (NodeId leaf : f.leaves()) {
            std::size_t gid = static_cast<std::size_t>(gid_of_.at(f.node(leaf).gene));
            if (scratch_l_.test(gid))
                u = (u == kNoNode) ? leaf : f.lca(u, leaf);
            else if (scratch_r_.test(gid))
                v = (v == kNoNode) ? leaf : f.lca(v, leaf);
        }
        if (u == kNoNode || v == kNoNode) return true;  // whole on one side or outside
        NodeId r = f.lca(u, v);
        NodeId rl = f.node(r).left, rr = f.node(r).right;
        bool ok = (f.is_ancestor(rl, u) && f.is_ancestor(rr, v)) ||
                  (f.is_ancestor(rr, u) && f.is_ancestor(rl, v));
        if (!ok) return false;
        if (opt_.labeled) {
            Event ev = *f.event(r);
            if (forced_ && *forced_ != ev) return false;
            forced_ = ev;
        }
        return true;
    }

    void evaluate(const SubKey& key, const SubKey& lkey, const SubKey& rkey,
                  const std::array<int, kMaxTrees>& pick,
                  const std::array<std::array<Placement, 4>, kMaxTrees>& choices, Entry& best) {
        (void)key;
        NodeId s_l = kNoNode, s_r = kNoNode;
        for (int i = 0; i < k_; ++i) {
            NodeId l = lkey.comp[static_cast<std::size_t>(i)];
            NodeId r = rkey.comp[static_cast<std::size_t>(i)];
            if (l != kNoNode) {
                NodeId img = trees_[static_cast<std::size_t>(i)]->species_image(l);
                s_l = (s_l == kNoNode) ? img : s_.lca(s_l, img);
            }
            if (r != kNoNode) {
                NodeId img = trees_[static_cast<std::size_t>(i)]->species_image(r);
                s_r = (s_r == kNoNode) ? img : s_.lca(s_r, img);
            }
        }
        NodeId s_u = s_.lca(s_l, s_r);

        LocalCost lc;
        if (opt_.labeled && forced_) {
            if (*forced_ == Event::Spec && (s_u == s_l || s_u == s_r)) return;  // not label-compatible
            lc = labeled_local_cost(s_, s_l, s_r, forced_);
        } else {
            lc = local_cost(s_, s_u, s_l, s_r);
        }

        const Entry& le = solve(lkey);
        if (le.cost == kInfiniteCost) return;
        const Entry& re = solve(rkey);
        if (re.cost == kInfiniteCost) return;

        Cost total = add_cost(lc.cost, add_cost(le.cost, re.cost));
        if (total < best.cost) {
            best.cost = total;
            best.label = lc.label;
            best.leaf_gid = -1;
            for (int i = 0; i < k_; ++i)
                best.assign[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(
                    choices[static_cast<std::size_t>(i)][static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])]);
        }
    }

    NodeId rebuild(const SubKey& key, std::vector<GeneTree::Part>& parts,
                   std::vector<GeneTree::LeafSpec>& leaves) {
        const Entry& e = dense_ ? dense_entries_[dense_index(key)] : memo_.at(key);
        NodeId idx = static_cast<NodeId>(parts.size());
        parts.emplace_back();
        if (e.leaf_gid >= 0) {
            const GeneInfo& info = genes_[static_cast<std::size_t>(e.leaf_gid)];
            parts[static_cast<std::size_t>(idx)].leaf = static_cast<std::int32_t>(leaves.size());
            leaves.push_back({info.name, info.species, info.from_tag});
            return idx;
        }
        SubKey lkey{}, rkey{};
        lkey.comp.fill(kNoNode);
        rkey.comp.fill(kNoNode);
        for (int i = 0; i < k_; ++i) {
            NodeId c = key.comp[static_cast<std::size_t>(i)];
            switch (static_cast<Placement>(e.assign[static_cast<std::size_t>(i)])) {
                case Placement::Absent:
                    break;
                case Placement::AllLeft:
                    lkey.comp[static_cast<std::size_t>(i)] = c;
                    break;
                case Placement::AllRight:
                    rkey.comp[static_cast<std::size_t>(i)] = c;
                    break;
                case Placement::SplitLR:
                    lkey.comp[static_cast<std::size_t>(i)] = trees_[static_cast<std::size_t>(i)]->node(c).left;
                    rkey.comp[static_cast<std::size_t>(i)] = trees_[static_cast<std::size_t>(i)]->node(c).right;
                    break;
                case Placement::SplitRL:
                    lkey.comp[static_cast<std::size_t>(i)] = trees_[static_cast<std::size_t>(i)]->node(c).right;
                    rkey.comp[static_cast<std::size_t>(i)] = trees_[static_cast<std::size_t>(i)]->node(c).left;
                    break;
            }
        }
        NodeId l = rebuild(lkey, parts, leaves);
        NodeId r = rebuild(rkey, parts, leaves);
        parts[static_cast<std::size_t>(idx)].left = l;
        parts[static_cast<std::size_t>(idx)].right = r;
        parts[static_cast<std::size_t>(idx)].event = e.label;
        return idx;
    }

    std::vector<const GeneTree*> trees_;
    std::vector<const GeneTree*> filters_;
    const SpeciesTree& s_;
    SgtOptions opt_;
    int k_ = 0;
    std::vector<GeneInfo> genes_;
    std::map<std::string, int> gid_of_;
    bool disjoint_ = false;
    std::vector<std::vector<GeneSet>> node_genes_;
    GeneSet scratch_l_, scratch_r_, scratch_u_;
    std::optional<Event> forced_;
    std::unordered_map<SubKey, Entry, SubKeyHash> memo_;
    bool dense_ = false;
    std::size_t dense_w_ = 0;
    std::vector<Entry> dense_entries_;
    std::vector<char> dense_done_;
    std::size_t dense_used_ = 0;
    SolveStats stats_;
};

}  // namespace detail

inline Solution min_sgt(const std::vector<const GeneTree*>& trees, const SpeciesTree& s,
                        SgtOptions opt = {}) {
    auto t0 = std::chrono::steady_clock::now();
    opt.labeled = false;
    detail::SgtSolver solver(trees, {}, s, opt);
    Solution sol = solver.run();
    sol.stats.millis =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!sol.feasible) fail("InconsistentInput", "no supertree displays every input tree");
    return sol;
}

inline Solution min_lsgt(const std::vector<const GeneTree*>& trees, const SpeciesTree& s,
                         SgtOptions opt = {}) {
    auto t0 = std::chrono::steady_clock::now();
    opt.labeled = true;
    detail::SgtSolver solver(trees, {}, s, opt);
    Solution sol = solver.run();
    sol.stats.millis =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!sol.feasible) fail("NoLabelCompatibleSolution", "no label-compatible supertree exists");
    return sol;
}

// Greedy cover: repeatedly take the tree covering the most uncovered genes,
// ties to the earliest input index. The first pick is a maximum-leafset tree.
inline std::vector<std::size_t> find_core(const std::vector<const GeneTree*>& trees) {
    std::map<std::string, bool> covered;
    for (const GeneTree* g : trees)
        for (NodeId l : g->leaves()) covered.emplace(g->node(l).gene, false);
    std::size_t remaining = covered.size();
    std::vector<std::size_t> core;
    std::vector<bool> used(trees.size(), false);
    while (remaining > 0) {
        std::size_t best = trees.size();
        std::size_t best_gain = 0;
        for (std::size_t i = 0; i < trees.size(); ++i) {
            if (used[i]) continue;
            std::size_t gain = 0;
            for (NodeId l : trees[i]->leaves())
                if (!covered.at(trees[i]->node(l).gene)) ++gain;
            if (gain > best_gain) {
                best_gain = gain;
                best = i;
            }
        }
        used[best] = true;
        core.push_back(best);
        for (NodeId l : trees[best]->leaves()) {
            bool& c = covered.at(trees[best]->node(l).gene);
            if (!c) {
                c = true;
                --remaining;
            }
        }
    }
    return core;
}

// Same optimum as min_sgt: the DP runs over a leafset-covering subset of the
// trees, every candidate is checked against the remaining trees, and costs
// depend only on the gene sets, which the covering subset determines.
inline Solution min_sgt_core(const std::vector<const GeneTree*>& trees, const SpeciesTree& s,
                             SgtOptions opt = {}) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> core = find_core(trees);
    std::vector<bool> in_core(trees.size(), false);
    for (std::size_t i : core) in_core[i] = true;
    std::vector<const GeneTree*> solver_trees, filter_trees;
    for (std::size_t i : core) solver_trees.push_back(trees[i]);
    for (std::size_t i = 0; i < trees.size(); ++i)
        if (!in_core[i]) filter_trees.push_back(trees[i]);
    detail::SgtSolver solver(solver_trees, filter_trees, s, opt);
    Solution sol = solver.run();
    sol.stats.millis =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!sol.feasible)
        fail(opt.labeled ? "NoLabelCompatibleSolution" : "InconsistentInput",
             "no supertree satisfies every input tree");
    return sol;
}

struct BipartitionView {
    std::vector<Placement> placement;        // per input tree
    std::vector<std::string> left_genes;     // sorted
    std::vector<std::string> right_genes;    // sorted
};

// The valid bipartitions of the root subproblem, in canonical order.
inline std::vector<BipartitionView> list_bipartitions(const std::vector<const GeneTree*>& trees) {
    std::vector<BipartitionView> out;
    if (trees.empty()) return out;
    validate_shared_genes(trees);

    std::vector<std::vector<Placement>> menus(trees.size());
    for (std::size_t i = 0; i < trees.size(); ++i) {
        bool leaf = trees[i]->is_leaf(trees[i]->root());
        if (i == 0) {
            menus[i] = {Placement::AllLeft};
            if (!leaf) menus[i].push_back(Placement::SplitLR);
        } else {
            menus[i] = {Placement::AllLeft, Placement::AllRight};
            if (!leaf) {
                menus[i].push_back(Placement::SplitLR);
                menus[i].push_back(Placement::SplitRL);
            }
        }
    }
    std::vector<std::size_t> pick(trees.size(), 0);
    for (;;) {
        std::map<std::string, int> side;  // gene -> bitmask of sides touched
        bool left_any = false, right_any = false;
        for (std::size_t i = 0; i < trees.size(); ++i) {
            const GeneTree& g = *trees[i];
            auto add = [&](NodeId sub, int bit) {
                for (NodeId l : g.leaves_under(sub)) side[g.node(l).gene] |= bit;
                (bit == 1 ? left_any : right_any) = true;
            };
            switch (menus[i][pick[i]]) {
                case Placement::Absent:
                    break;
                case Placement::AllLeft:
                    add(g.root(), 1);
                    break;
                case Placement::AllRight:
                    add(g.root(), 2);
                    break;
                case Placement::SplitLR:
                    add(g.node(g.root()).left, 1);
                    add(g.node(g.root()).right, 2);
                    break;
                case Placement::SplitRL:
                    add(g.node(g.root()).right, 1);
                    add(g.node(g.root()).left, 2);
                    break;
            }
        }
        bool valid = left_any && right_any;
        if (valid)
            for (const auto& [gene, bits] : side)
                if (bits == 3) {
                    valid = false;
                    break;
                }
        if (valid) {
            BipartitionView view;
            for (std::size_t i = 0; i < trees.size(); ++i) view.placement.push_back(menus[i][pick[i]]);
            for (const auto& [gene, bits] : side)
                (bits == 1 ? view.left_genes : view.right_genes).push_back(gene);
            out.push_back(std::move(view));
        }
        std::size_t i = trees.size();
        while (i-- > 0) {
            if (++pick[i] < menus[i].size()) break;
            pick[i] = 0;
            if (i == 0) return out;
        }
    }
}

}  // namespace suget
