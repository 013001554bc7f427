#pragma once

// Species and gene tree types. Both are immutable arenas with stable node
// indices; restriction and subtree extraction build new arenas. Constant-time
// LCA via Euler tour + sparse table, ancestor tests via DFS intervals.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "suget/errors.hpp"
#include "suget/newick.hpp"

namespace suget {

enum class Event : std::uint8_t { Spec, Dup };

inline std::string_view event_name(Event e) { return e == Event::Dup ? "Dup" : "Spec"; }

namespace detail {

// Shared LCA/ancestor support over a (left,right) arena.
struct TreeIndex {
    std::vector<int> depth;
    std::vector<std::int32_t> tin, tout;
    std::vector<std::int32_t> euler;        // node per euler step
    std::vector<std::int32_t> first;        // first euler occurrence per node
    std::vector<std::vector<std::int32_t>> sparse;  // RMQ over euler depths, stores euler positions

    template <class Left, class Right>
    void build(NodeId root, std::size_t n, Left left, Right right) {
        depth.assign(n, 0);
        tin.assign(n, 0);
        tout.assign(n, 0);
        first.assign(n, -1);
        euler.clear();
        euler.reserve(2 * n);
        std::int32_t timer = 0;
        // Explicit stack: (node, state 0=enter 1=after-left 2=after-right).
        std::vector<std::pair<NodeId, int>> stack{{root, 0}};
        while (!stack.empty()) {
            auto& [v, state] = stack.back();
            if (state == 0) {
                tin[v] = timer++;
                first[v] = static_cast<std::int32_t>(euler.size());
                euler.push_back(v);
                state = 1;
                if (left(v) != kNoNode) {
                    depth[left(v)] = depth[v] + 1;
                    stack.emplace_back(left(v), 0);
                }
            } else if (state == 1) {
                if (left(v) != kNoNode) euler.push_back(v);
                state = 2;
                if (right(v) != kNoNode) {
                    depth[right(v)] = depth[v] + 1;
                    stack.emplace_back(right(v), 0);
                }
            } else {
                if (right(v) != kNoNode) euler.push_back(v);
                tout[v] = timer++;
                stack.pop_back();
            }
        }
        build_sparse();
    }

    void build_sparse() {
        std::size_t m = euler.size();
        int levels = 1;
        while ((std::size_t{1} << levels) <= m) ++levels;
        sparse.assign(levels, std::vector<std::int32_t>(m));
        for (std::size_t i = 0; i < m; ++i) sparse[0][i] = static_cast<std::int32_t>(i);
        for (int j = 1; j < levels; ++j) {
            std::size_t half = std::size_t{1} << (j - 1);
            for (std::size_t i = 0; i + (std::size_t{1} << j) <= m; ++i) {
                std::int32_t a = sparse[j - 1][i];
                std::int32_t b = sparse[j - 1][i + half];
                sparse[j][i] = depth[euler[a]] <= depth[euler[b]] ? a : b;
            }
        }
    }

    NodeId lca(NodeId a, NodeId b) const {
        std::int32_t l = first[a], r = first[b];
        if (l > r) std::swap(l, r);
        ++r;
        int j = 31 - __builtin_clz(static_cast<unsigned>(r - l));
        std::int32_t x = sparse[j][l];
        std::int32_t y = sparse[j][r - (1 << j)];
        return euler[depth[euler[x]] <= depth[euler[y]] ? x : y];
    }

    // ancestor-or-equal
    bool is_ancestor(NodeId anc, NodeId desc) const {
        return tin[anc] <= tin[desc] && tout[desc] <= tout[anc];
    }
};

}  // namespace detail

class SpeciesTree {
public:
    struct Node {
        NodeId left = kNoNode, right = kNoNode, parent = kNoNode;
        std::string name;  // leaves only
        int n_leaves = 0;
    };

    static SpeciesTree from_raw(const RawTree& raw) {
        SpeciesTree t;
        t.root_ = t.convert(raw, raw.root, kNoNode);
        t.finish();
        return t;
    }

    static SpeciesTree from_newick(std::string_view text) {
        return from_raw(parse_newick(text));
    }

    NodeId root() const { return root_; }
    std::size_t size() const { return nodes_.size(); }
    const Node& node(NodeId id) const { return check(id), nodes_[static_cast<std::size_t>(id)]; }
    bool is_leaf(NodeId id) const { return node(id).left == kNoNode; }
    int depth(NodeId id) const { return check(id), index_.depth[static_cast<std::size_t>(id)]; }
    std::size_t leaf_count() const { return leaf_by_name_.size(); }

    NodeId leaf(std::string_view name) const {
        auto it = leaf_by_name_.find(name);
        if (it == leaf_by_name_.end()) fail("UnknownSpecies", "no species named '" + std::string(name) + "'");
        return it->second;
    }
    bool has_leaf(std::string_view name) const { return leaf_by_name_.find(name) != leaf_by_name_.end(); }

    NodeId lca(NodeId a, NodeId b) const { return check(a), check(b), index_.lca(a, b); }

    NodeId lca_of(std::span<const NodeId> ids) const {
        if (ids.empty()) fail("NodeNotInTree", "lca of an empty node set");
        NodeId acc = ids[0];
        check(acc);
        for (std::size_t i = 1; i < ids.size(); ++i) {
            check(ids[i]);
            acc = index_.lca(acc, ids[i]);
        }
        return acc;
    }

    bool is_ancestor(NodeId anc, NodeId desc) const {
        return check(anc), check(desc), index_.is_ancestor(anc, desc);
    }

    // Nodes strictly between an ancestor and a descendant.
    int inter(NodeId anc, NodeId desc) const {
        check(anc);
        check(desc);
        if (anc == desc) return 0;
        if (!index_.is_ancestor(anc, desc))
            fail("NotAncestor", "inter() requires the first node to be an ancestor of the second");
        return index_.depth[static_cast<std::size_t>(desc)] - index_.depth[static_cast<std::size_t>(anc)] - 1;
    }

    RawTree to_raw() const {
        RawTree raw;
        raw.root = emit(raw, root_);
        return raw;
    }
    std::string to_newick() const { return serialize_newick(to_raw()); }

private:
    void check(NodeId id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
            fail("NodeNotInTree", "node id " + std::to_string(id) + " out of range");
    }

    NodeId convert(const RawTree& raw, NodeId rid, NodeId parent) {
        const RawNode& rn = raw.at(rid);
        if (!rn.is_leaf() && rn.children.size() != 2)
            fail("NonBinaryInput", "species tree node with " + std::to_string(rn.children.size()) + " children");
        NodeId id = static_cast<NodeId>(nodes_.size());
        nodes_.emplace_back();
        nodes_[static_cast<std::size_t>(id)].parent = parent;
        if (rn.is_leaf()) {
            nodes_[static_cast<std::size_t>(id)].name = rn.label;
        } else {
            NodeId l = convert(raw, rn.children[0], id);
            NodeId r = convert(raw, rn.children[1], id);
            nodes_[static_cast<std::size_t>(id)].left = l;
            nodes_[static_cast<std::size_t>(id)].right = r;
        }
        return id;
    }

    void finish() {
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            Node& n = nodes_[i];
            if (n.left == kNoNode) {
                n.n_leaves = 1;
                if (n.name.empty()) fail("EmptyLabelOnLeaf", "species leaf without a name");
                if (!leaf_by_name_.emplace(n.name, static_cast<NodeId>(i)).second)
                    fail("DuplicateLeafLabel", "species '" + n.name + "' appears twice");
            } else {
                n.n_leaves = nodes_[static_cast<std::size_t>(n.left)].n_leaves +
                             nodes_[static_cast<std::size_t>(n.right)].n_leaves;
            }
        }
        index_.build(root_, nodes_.size(),
                     [&](NodeId v) { return nodes_[static_cast<std::size_t>(v)].left; },
                     [&](NodeId v) { return nodes_[static_cast<std::size_t>(v)].right; });
    }

    NodeId emit(RawTree& raw, NodeId id) const {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.left == kNoNode) {
            raw.nodes.push_back(RawNode{n.name, {}, {}});
            return static_cast<NodeId>(raw.nodes.size() - 1);
        }
        NodeId l = emit(raw, n.left);
        NodeId r = emit(raw, n.right);
        raw.nodes.push_back(RawNode{"", {l, r}, {}});
        return static_cast<NodeId>(raw.nodes.size() - 1);
    }

    std::vector<Node> nodes_;
    NodeId root_ = kNoNode;
    std::map<std::string, NodeId, std::less<>> leaf_by_name_;
    detail::TreeIndex index_;
};

class GeneTree {
public:
    struct Node {
        NodeId left = kNoNode, right = kNoNode, parent = kNoNode;
        std::string gene;                 // leaves: verbatim leaf label
        std::string species_name;         // leaves only
        NodeId species = kNoNode;         // leaves: species leaf; internals: cached lca image
        std::optional<Event> event;       // internals only
        bool species_from_tag = false;    // leaf carried an explicit S= annotation
        int n_leaves = 0;
    };

    // Species resolution: S= annotation first, then the suffix after the last
    // "__" in the leaf label, otherwise MissingSpecies.
    static GeneTree from_raw(const RawTree& raw, const SpeciesTree& species) {
        GeneTree t;
        t.root_ = t.convert(raw, raw.root, kNoNode, species);
        t.finish(species);
        return t;
    }

    static GeneTree from_newick(std::string_view text, const SpeciesTree& species) {
        return from_raw(parse_newick(text), species);
    }

    struct LeafSpec {
        std::string gene;
        NodeId species = kNoNode;
        bool species_from_tag = false;
    };

    // Assembly hook for solvers and generators. Internal parts use leaf = -1;
    // leaf parts index into `leaves`.
    struct Part {
        NodeId left = kNoNode, right = kNoNode;
        std::int32_t leaf = -1;
        std::optional<Event> event;
    };

    static GeneTree assemble(const std::vector<Part>& parts, NodeId root,
                             const std::vector<LeafSpec>& leaves, const SpeciesTree& species) {
        GeneTree t;
        t.nodes_.resize(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i) {
            Node& n = t.nodes_[i];
            n.left = parts[i].left;
            n.right = parts[i].right;
            n.event = parts[i].event;
            if (n.left != kNoNode) {
                t.nodes_[static_cast<std::size_t>(n.left)].parent = static_cast<NodeId>(i);
                t.nodes_[static_cast<std::size_t>(n.right)].parent = static_cast<NodeId>(i);
            } else {
                const LeafSpec& spec = leaves[static_cast<std::size_t>(parts[i].leaf)];
                n.gene = spec.gene;
                n.species = spec.species;
                n.species_from_tag = spec.species_from_tag;
            }
        }
        t.root_ = root;
        t.finish(species);
        return t;
    }

    NodeId root() const { return root_; }
    std::size_t size() const { return nodes_.size(); }
    const Node& node(NodeId id) const { return check(id), nodes_[static_cast<std::size_t>(id)]; }
    bool is_leaf(NodeId id) const { return node(id).left == kNoNode; }
    int depth(NodeId id) const { return check(id), index_.depth[static_cast<std::size_t>(id)]; }
    std::size_t leaf_count() const { return leaves_.size(); }
    const std::vector<NodeId>& leaves() const { return leaves_; }  // DFS order

    NodeId leaf_by_gene(std::string_view gene) const {
        auto it = leaf_by_gene_.find(std::string(gene));
        if (it == leaf_by_gene_.end()) fail("NodeNotInTree", "no leaf for gene '" + std::string(gene) + "'");
        return it->second;
    }
    bool has_gene(std::string_view gene) const { return leaf_by_gene_.count(std::string(gene)) != 0; }

    NodeId lca(NodeId a, NodeId b) const { return check(a), check(b), index_.lca(a, b); }
    bool is_ancestor(NodeId anc, NodeId desc) const {
        return check(anc), check(desc), index_.is_ancestor(anc, desc);
    }

    // Cached species image s(x). Leaves resolve to their species leaf.
    NodeId species_image(NodeId id) const { return node(id).species; }

    std::optional<Event> event(NodeId id) const { return node(id).event; }

    bool fully_labeled() const {
        for (const Node& n : nodes_)
            if (n.left != kNoNode && !n.event) return false;
        return true;
    }

    std::vector<NodeId> leaves_under(NodeId id) const {
        check(id);
        std::vector<NodeId> out;
        collect_leaves(id, out);
        return out;
    }

    // Restriction to a gene subset; degree-2 nodes suppressed, surviving
    // events preserved. Genes not present in the tree are ignored.
    GeneTree restrict(const std::unordered_set<std::string>& keep, const SpeciesTree& species) const {
        GeneTree t;
        t.root_ = t.copy_restricted(*this, root_, keep, kNoNode);
        if (t.root_ == kNoNode) fail("EmptyRestriction", "restriction keeps no leaves");
        t.finish(species);
        return t;
    }

    // Complete subtree as a standalone tree.
    GeneTree extract(NodeId sub, const SpeciesTree& species) const {
        check(sub);
        GeneTree t;
        t.root_ = t.copy_subtree(*this, sub, kNoNode);
        t.finish(species);
        return t;
    }

    // Topology-only canonical form: children ordered lexicographically.
    std::string canonical() const { return canon(root_); }

    RawTree to_raw() const {
        RawTree raw;
        raw.root = emit(raw, root_);
        return raw;
    }
    std::string to_newick() const { return serialize_newick(to_raw()); }

private:
    void check(NodeId id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
            fail("NodeNotInTree", "node id " + std::to_string(id) + " out of range");
    }

    NodeId convert(const RawTree& raw, NodeId rid, NodeId parent, const SpeciesTree& species) {
        const RawNode& rn = raw.at(rid);
        if (!rn.is_leaf() && rn.children.size() != 2)
            fail("NonBinaryInput", "gene tree node with " + std::to_string(rn.children.size()) + " children");
        NodeId id = static_cast<NodeId>(nodes_.size());
        nodes_.emplace_back();
        nodes_[static_cast<std::size_t>(id)].parent = parent;
        if (rn.is_leaf()) {
            Node& n = nodes_[static_cast<std::size_t>(id)];
            n.gene = rn.label;
            if (const std::string* s = rn.annotation("S")) {
                n.species = species.leaf(*s);
                n.species_from_tag = true;
            } else {
                std::size_t sep = rn.label.rfind("__");
                if (sep == std::string::npos || sep + 2 >= rn.label.size())
                    fail("MissingSpecies", "leaf '" + rn.label + "' has no S= tag and no '__species' suffix");
                n.species = species.leaf(std::string_view(rn.label).substr(sep + 2));
            }
        } else {
            if (const std::string* ev = rn.annotation("Ev")) {
                if (*ev == "Dup")
                    nodes_[static_cast<std::size_t>(id)].event = Event::Dup;
                else if (*ev == "Spec")
                    nodes_[static_cast<std::size_t>(id)].event = Event::Spec;
                else
                    fail("InvalidEventLabel", "Ev must be Dup or Spec, got '" + *ev + "'");
            }
            NodeId l = convert(raw, rn.children[0], id, species);
            NodeId r = convert(raw, rn.children[1], id, species);
            nodes_[static_cast<std::size_t>(id)].left = l;
            nodes_[static_cast<std::size_t>(id)].right = r;
        }
        return id;
    }

    NodeId copy_restricted(const GeneTree& src, NodeId sid,
                           const std::unordered_set<std::string>& keep, NodeId parent) {
        const Node& sn = src.nodes_[static_cast<std::size_t>(sid)];
        if (sn.left == kNoNode) {
            if (!keep.count(sn.gene)) return kNoNode;
            NodeId id = static_cast<NodeId>(nodes_.size());
            nodes_.push_back(sn);
            Node& n = nodes_[static_cast<std::size_t>(id)];
            n.parent = parent;
            n.left = n.right = kNoNode;
            return id;
        }
        NodeId id = static_cast<NodeId>(nodes_.size());
        nodes_.emplace_back();
        nodes_[static_cast<std::size_t>(id)].event = sn.event;
        nodes_[static_cast<std::size_t>(id)].parent = parent;
        NodeId l = copy_restricted(src, sn.left, keep, id);
        NodeId r = copy_restricted(src, sn.right, keep, id);
        if (l == kNoNode && r == kNoNode) {
            nodes_.pop_back();  // nothing survived below; placeholder is the last node
            return kNoNode;
        }
        if (l == kNoNode || r == kNoNode) {
            // Degree-2: splice the surviving child up. The kept subtree is the
            // contiguous block right after the placeholder; shift it down one slot.
            for (std::size_t i = static_cast<std::size_t>(id) + 1; i < nodes_.size(); ++i) {
                Node n = std::move(nodes_[i]);
                if (n.left != kNoNode) {
                    --n.left;
                    --n.right;
                }
                if (n.parent > id) --n.parent;
                nodes_[i - 1] = std::move(n);
            }
            nodes_.pop_back();
            nodes_[static_cast<std::size_t>(id)].parent = parent;
            return id;
        }
        nodes_[static_cast<std::size_t>(id)].left = l;
        nodes_[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    NodeId copy_subtree(const GeneTree& src, NodeId sid, NodeId parent) {
        const Node& sn = src.nodes_[static_cast<std::size_t>(sid)];
        NodeId id = static_cast<NodeId>(nodes_.size());
        nodes_.push_back(sn);
        Node& n = nodes_[static_cast<std::size_t>(id)];
        n.parent = parent;
        n.left = n.right = kNoNode;
        if (sn.left != kNoNode) {
            NodeId l = copy_subtree(src, sn.left, id);
            NodeId r = copy_subtree(src, sn.right, id);
            nodes_[static_cast<std::size_t>(id)].left = l;
            nodes_[static_cast<std::size_t>(id)].right = r;
        }
        return id;
    }

    void finish(const SpeciesTree& species) {
        leaves_.clear();
        leaf_by_gene_.clear();
        // Post-order so child caches exist before the parent reads them,
        // regardless of arena layout.
        std::vector<std::pair<NodeId, bool>> stack{{root_, false}};
        while (!stack.empty()) {
            auto [id, expanded] = stack.back();
            stack.pop_back();
            Node& n = nodes_[static_cast<std::size_t>(id)];
            if (n.left == kNoNode) {
                n.n_leaves = 1;
                if (n.gene.empty()) fail("EmptyLabelOnLeaf", "gene leaf without a label");
                n.species_name = species.node(n.species).name;
                if (!leaf_by_gene_.emplace(n.gene, id).second)
                    fail("DuplicateLeafLabel", "gene '" + n.gene + "' appears twice");
            } else if (!expanded) {
                stack.emplace_back(id, true);
                stack.emplace_back(n.right, false);
                stack.emplace_back(n.left, false);
            } else {
                const Node& l = nodes_[static_cast<std::size_t>(n.left)];
                const Node& r = nodes_[static_cast<std::size_t>(n.right)];
                n.n_leaves = l.n_leaves + r.n_leaves;
                n.species = species.lca(l.species, r.species);
            }
        }
        collect_leaves(root_, leaves_);
        index_.build(root_, nodes_.size(),
                     [&](NodeId v) { return nodes_[static_cast<std::size_t>(v)].left; },
                     [&](NodeId v) { return nodes_[static_cast<std::size_t>(v)].right; });
    }

    void collect_leaves(NodeId id, std::vector<NodeId>& out) const {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.left == kNoNode) {
            out.push_back(id);
            return;
        }
        collect_leaves(n.left, out);
        collect_leaves(n.right, out);
    }

    std::string canon(NodeId id) const {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.left == kNoNode) return n.gene;
        std::string a = canon(n.left);
        std::string b = canon(n.right);
        if (b < a) std::swap(a, b);
        return "(" + a + "," + b + ")";
    }

    NodeId emit(RawTree& raw, NodeId id) const {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.left == kNoNode) {
            RawNode rn{n.gene, {}, {}};
            if (n.species_from_tag) rn.annotations.emplace_back("S", n.species_name);
            raw.nodes.push_back(std::move(rn));
            return static_cast<NodeId>(raw.nodes.size() - 1);
        }
        NodeId l = emit(raw, n.left);
        NodeId r = emit(raw, n.right);
        RawNode rn{"", {l, r}, {}};
        if (n.event) rn.annotations.emplace_back("Ev", std::string(event_name(*n.event)));
        raw.nodes.push_back(std::move(rn));
        return static_cast<NodeId>(raw.nodes.size() - 1);
    }

    std::vector<Node> nodes_;
    NodeId root_ = kNoNode;
    std::vector<NodeId> leaves_;
    std::unordered_map<std::string, NodeId> leaf_by_gene_;
    detail::TreeIndex index_;
};

// True when `big` restricted to small's leaves is topologically identical to
// `small`. Event labels are ignored.
inline bool displays(const GeneTree& big, const GeneTree& small, const SpeciesTree& species) {
    std::unordered_set<std::string> keep;
    for (NodeId l : small.leaves()) {
        const auto& n = small.node(l);
        if (!big.has_gene(n.gene)) fail("LeafNotPresent", "gene '" + n.gene + "' missing from the larger tree");
        keep.insert(n.gene);
    }
    if (small.leaf_count() <= 2) return true;
    GeneTree r = big.restrict(keep, species);
    return r.canonical() == small.canonical();
}

}  // namespace suget
