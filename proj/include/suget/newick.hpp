#pragma once

// Newick parsing and serialization with the NHX annotation subset used by the
// rest of the library ("S" for species, "Ev" for event labels). Branch lengths
// are accepted on input and discarded. Non-binary nodes are accepted here;
// tree construction downstream rejects them.

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "suget/errors.hpp"

namespace suget {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

struct RawNode {
    std::string label;
    std::vector<NodeId> children;
    // Insertion-ordered so serialization round-trips byte for byte.
    std::vector<std::pair<std::string, std::string>> annotations;

    bool is_leaf() const { return children.empty(); }
    const std::string* annotation(std::string_view key) const {
        for (const auto& [k, v] : annotations)
            if (k == key) return &v;
        return nullptr;
    }
};

struct RawTree {
    std::vector<RawNode> nodes;
    NodeId root = kNoNode;

    RawNode& at(NodeId id) { return nodes[static_cast<std::size_t>(id)]; }
    const RawNode& at(NodeId id) const { return nodes[static_cast<std::size_t>(id)]; }
};

inline bool raw_equal(const RawTree& a, NodeId x, const RawTree& b, NodeId y) {
    const RawNode& nx = a.at(x);
    const RawNode& ny = b.at(y);
    if (nx.label != ny.label || nx.annotations != ny.annotations) return false;
    if (nx.children.size() != ny.children.size()) return false;
    for (std::size_t i = 0; i < nx.children.size(); ++i)
        if (!raw_equal(a, nx.children[i], b, ny.children[i])) return false;
    return true;
}

inline bool raw_equal(const RawTree& a, const RawTree& b) {
    return raw_equal(a, a.root, b, b.root);
}

namespace detail {

class NewickParser {
public:
    explicit NewickParser(std::string_view text) : text_(text) {}

    // Parses one ';'-terminated statement starting at the cursor.
    RawTree parse_statement() {
        RawTree tree;
        skip_ws();
        if (eof()) fail("TrailingGarbage", "empty input where a tree was expected");
        tree.root = parse_subtree(tree);
        skip_ws();
        if (eof() || text_[pos_] != ';') {
            if (!eof() && text_[pos_] == ')')
                fail("UnbalancedParens", "unmatched ')' at offset " + std::to_string(pos_));
            fail("TrailingGarbage", "expected ';' at offset " + std::to_string(pos_));
        }
        ++pos_;
        check_leaf_labels(tree);
        return tree;
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool eof() const { return pos_ >= text_.size(); }

private:
    NodeId parse_subtree(RawTree& tree) {
        skip_ws();
        if (eof()) fail("UnbalancedParens", "unexpected end of input");
        if (text_[pos_] == '(') {
            ++pos_;
            std::vector<NodeId> children;
            children.push_back(parse_subtree(tree));
            skip_ws();
            while (!eof() && text_[pos_] == ',') {
                ++pos_;
                children.push_back(parse_subtree(tree));
                skip_ws();
            }
            if (eof() || text_[pos_] != ')')
                fail("UnbalancedParens", "missing ')' at offset " + std::to_string(pos_));
            ++pos_;
            NodeId id = new_node(tree);
            tree.at(id).children = std::move(children);
            parse_suffix(tree, id, /*leaf=*/false);
            return id;
        }
        NodeId id = new_node(tree);
        parse_suffix(tree, id, /*leaf=*/true);
        return id;
    }

    // label, branch length, and [&&NHX:...] blocks, in any interleaving.
    void parse_suffix(RawTree& tree, NodeId id, bool leaf) {
        skip_ws();
        tree.at(id).label = parse_label();
        if (leaf && tree.at(id).label.empty())
            fail("EmptyLabelOnLeaf", "leaf without a label at offset " + std::to_string(pos_));
        for (;;) {
            skip_ws();
            if (!eof() && text_[pos_] == ':') {
                ++pos_;
                parse_number();
            } else if (!eof() && text_[pos_] == '[') {
                parse_bracket(tree, id);
            } else {
                break;
            }
        }
    }

    std::string parse_label() {
        std::size_t start = pos_;
        while (!eof() && !is_delim(text_[pos_])) ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    void parse_number() {
        skip_ws();
        std::size_t start = pos_;
        while (!eof() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                          text_[pos_] == '.' || text_[pos_] == '-' || text_[pos_] == '+' ||
                          text_[pos_] == 'e' || text_[pos_] == 'E'))
            ++pos_;
        if (pos_ == start)
            fail("TrailingGarbage", "expected branch length after ':' at offset " + std::to_string(pos_));
    }

    void parse_bracket(RawTree& tree, NodeId id) {
        std::size_t close = text_.find(']', pos_);
        if (close == std::string_view::npos)
            fail("UnbalancedParens", "missing ']' at offset " + std::to_string(pos_));
        std::string_view body = text_.substr(pos_ + 1, close - pos_ - 1);
        pos_ = close + 1;
        constexpr std::string_view kTag = "&&NHX:";
        if (body.substr(0, kTag.size()) != kTag) return;  // plain comment, dropped
        body.remove_prefix(kTag.size());
        while (!body.empty()) {
            std::size_t sep = body.find(':');
            std::string_view item = body.substr(0, sep);
            body = (sep == std::string_view::npos) ? std::string_view{} : body.substr(sep + 1);
            std::size_t eq = item.find('=');
            if (eq == std::string_view::npos)
                fail("TrailingGarbage", "malformed NHX item '" + std::string(item) + "'");
            tree.at(id).annotations.emplace_back(std::string(item.substr(0, eq)),
                                                 std::string(item.substr(eq + 1)));
        }
    }

    static bool is_delim(char c) {
        return c == '(' || c == ')' || c == ',' || c == ':' || c == ';' || c == '[' ||
               c == ']' || std::isspace(static_cast<unsigned char>(c));
    }

    NodeId new_node(RawTree& tree) {
        tree.nodes.emplace_back();
        return static_cast<NodeId>(tree.nodes.size() - 1);
    }

    static void check_leaf_labels(const RawTree& tree) {
        std::unordered_set<std::string_view> seen;
        for (const RawNode& n : tree.nodes)
            if (n.is_leaf() && !seen.insert(n.label).second)
                fail("DuplicateLeafLabel", "leaf '" + n.label + "' appears twice");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace detail

// One statement, nothing after the terminating ';'.
inline RawTree parse_newick(std::string_view text) {
    detail::NewickParser p(text);
    RawTree tree = p.parse_statement();
    p.skip_ws();
    if (!p.eof()) fail("TrailingGarbage", "content after terminating ';'");
    return tree;
}

// ';'-separated multi-tree input.
inline std::vector<RawTree> parse_newick_forest(std::string_view text) {
    detail::NewickParser p(text);
    std::vector<RawTree> trees;
    p.skip_ws();
    while (!p.eof()) {
        trees.push_back(p.parse_statement());
        p.skip_ws();
    }
    return trees;
}

namespace detail {

inline void serialize_node(const RawTree& tree, NodeId id, std::string& out) {
    const RawNode& n = tree.at(id);
    if (!n.children.empty()) {
        out += '(';
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            if (i) out += ',';
            serialize_node(tree, n.children[i], out);
        }
        out += ')';
    }
    out += n.label;
    if (!n.annotations.empty()) {
        out += "[&&NHX";
        for (const auto& [k, v] : n.annotations) {
            out += ':';
            out += k;
            out += '=';
            out += v;
        }
        out += ']';
    }
}

}  // namespace detail

// Canonical form: no whitespace, no branch lengths, annotations in stored order.
inline std::string serialize_newick(const RawTree& tree) {
    std::string out;
    detail::serialize_node(tree, tree.root, out);
    out += ';';
    return out;
}

}  // namespace suget
