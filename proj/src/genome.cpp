#include "kitbt/behavior_tree.hpp"

#include <sstream>

namespace kitbt {

namespace {

constexpr std::string_view sequence_open = "s(";
constexpr std::string_view fallback_open = "f(";
constexpr std::string_view close_token = ")";

void emit(const node& n, genome& out) {
    switch (n.type) {
        case node_type::sequence:
        case node_type::fallback:
            out.emplace_back(n.type == node_type::sequence ? sequence_open : fallback_open);
            for (const auto& c : n.children) {
                emit(c, out);
            }
            out.emplace_back(close_token);
            return;
        case node_type::action:
        case node_type::condition:
            out.push_back(token_of(n));
            return;
    }
}

node parse(const genome& g, std::size_t& pos) {
    if (pos >= g.size()) {
        throw unbalanced_genome("unexpected end of genome");
    }
    const std::string& tok = g[pos++];
    if (tok == sequence_open || tok == fallback_open) {
        node n{tok == sequence_open ? node_type::sequence : node_type::fallback, {}, {}};
        while (true) {
            if (pos >= g.size()) {
                throw unbalanced_genome("missing ')'");
            }
            if (g[pos] == close_token) {
                ++pos;
                return n;
            }
            n.children.push_back(parse(g, pos));
        }
    }
    if (tok == close_token) {
        throw unbalanced_genome("')' without matching open token at position " + std::to_string(pos - 1));
    }
    if (tok.size() < 2 || (tok.back() != '!' && tok.back() != '?')) {
        throw genome_error("malformed behavior token '" + tok + "'");
    }
    std::string behavior = tok.substr(0, tok.size() - 1);
    return tok.back() == '!' ? node::action(std::move(behavior)) : node::condition(std::move(behavior));
}

} // namespace

std::string token_of(const node& n) {
    switch (n.type) {
        case node_type::sequence:
            return std::string(sequence_open);
        case node_type::fallback:
            return std::string(fallback_open);
        case node_type::action:
            return n.behavior + "!";
        case node_type::condition:
            return n.behavior + "?";
    }
    return {};
}

genome serialize(const behavior_tree& t) {
    genome out;
    out.reserve(size(t) * 2);
    emit(t.root, out);
    return out;
}

behavior_tree deserialize(const genome& g) {
    if (g.empty()) {
        throw empty_genome();
    }
    std::size_t pos = 0;
    node root = parse(g, pos);
    if (pos != g.size()) {
        throw unbalanced_genome("trailing tokens after the root node");
    }
    return behavior_tree{std::move(root)};
}

std::string to_text(const genome& g) {
    std::string out;
    for (const auto& tok : g) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += tok;
    }
    return out;
}

genome genome_from_text(std::string_view text) {
    genome out;
    std::istringstream in{std::string(text)};
    std::string tok;
    while (in >> tok) {
        out.push_back(std::move(tok));
    }
    return out;
}

} // namespace kitbt
