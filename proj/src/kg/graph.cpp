#include "kgda/kg/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

#include "kgda/errors.hpp"
#include "kgda/util/binio.hpp"

namespace kgda::kg {

namespace {

constexpr int kMaxNodes = 1 << 26;
constexpr int kMaxRelations = 1 << 12;

}  // namespace

std::string normalize_concept(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == ' ')
            out.push_back('_');
        else
            out.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::uint64_t MultiRelGraph::key(int head, int rel, int tail) {
    return (static_cast<std::uint64_t>(head) << 38) |
           (static_cast<std::uint64_t>(rel) << 26) |
           static_cast<std::uint64_t>(tail);
}

int MultiRelGraph::intern_node(const std::string& normalized) {
    auto it = node_ids_.find(normalized);
    if (it != node_ids_.end()) return it->second;
    int id = static_cast<int>(node_names_.size());
    if (id >= kMaxNodes) throw ConfigError("node count exceeds graph capacity");
    node_ids_.emplace(normalized, id);
    node_names_.push_back(normalized);
    out_.emplace_back();
    in_.emplace_back();
    return id;
}

int MultiRelGraph::intern_relation(const std::string& name) {
    auto it = rel_ids_.find(name);
    if (it != rel_ids_.end()) return it->second;
    int id = static_cast<int>(rel_names_.size());
    if (id >= kMaxRelations)
        throw ConfigError("relation count exceeds graph capacity");
    rel_ids_.emplace(name, id);
    rel_names_.push_back(name);
    return id;
}

bool MultiRelGraph::add(const std::string& head, const std::string& relation,
                        const std::string& tail) {
    int h = intern_node(normalize_concept(head));
    int r = intern_relation(relation);
    int t = intern_node(normalize_concept(tail));
    if (!seen_.insert(key(h, r, t)).second) return false;
    triplets_.push_back({h, r, t});
    out_[h].emplace_back(r, t);
    in_[t].emplace_back(r, h);
    return true;
}

std::optional<int> MultiRelGraph::node_id(std::string_view name) const {
    auto it = node_ids_.find(normalize_concept(name));
    if (it == node_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<int> MultiRelGraph::relation_id(std::string_view name) const {
    auto it = rel_ids_.find(std::string(name));
    if (it == rel_ids_.end()) return std::nullopt;
    return it->second;
}

bool MultiRelGraph::contains(int head, int rel, int tail) const {
    return seen_.count(key(head, rel, tail)) != 0;
}

MultiRelGraph load_triplets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open triplet file: " + path);
    MultiRelGraph g;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto first = line.find('\t');
        auto second = first == std::string::npos
                          ? std::string::npos
                          : line.find('\t', first + 1);
        if (second == std::string::npos ||
            line.find('\t', second + 1) != std::string::npos)
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected head<TAB>relation<TAB>tail");
        std::string head = line.substr(0, first);
        std::string rel = line.substr(first + 1, second - first - 1);
        std::string tail = line.substr(second + 1);
        if (head.empty() || rel.empty() || tail.empty())
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": empty field");
        g.add(head, rel, tail);
    }
    return g;
}

void save_triplets(const MultiRelGraph& g, const std::string& path) {
    util::BinWriter w(path);
    for (const auto& t : g.triplets()) {
        std::string line = g.node_name(t.head) + "\t" +
                           g.relation_name(t.rel) + "\t" +
                           g.node_name(t.tail) + "\n";
        w.raw(line.data(), line.size());
    }
    w.commit();
}

namespace {

// New graph from the triplets of g that pass the predicate, scanned in
// insertion order so interning stays deterministic.
template <typename Pred>
MultiRelGraph filter_triplets(const MultiRelGraph& g, Pred keep) {
    MultiRelGraph out;
    for (const auto& t : g.triplets()) {
        if (!keep(t)) continue;
        out.add(g.node_name(t.head), g.relation_name(t.rel),
                g.node_name(t.tail));
    }
    return out;
}

std::vector<char> mark_known(const MultiRelGraph& g,
                             const std::vector<std::string>& names) {
    std::vector<char> mark(g.node_count(), 0);
    for (const auto& name : names)
        if (auto id = g.node_id(name)) mark[*id] = 1;
    return mark;
}

}  // namespace

MultiRelGraph aggregate_subgraph(const MultiRelGraph& g,
                                 const std::vector<std::string>& seeds) {
    if (seeds.empty()) throw ConfigError("seed set is empty");
    auto is_seed = mark_known(g, seeds);
    return filter_triplets(g, [&](const Triplet& t) {
        return is_seed[t.head] || is_seed[t.tail];
    });
}

MultiRelGraph document_subgraph(const MultiRelGraph& g_prime,
                                const std::vector<std::string>& words) {
    auto near = mark_known(g_prime, words);
    // Grow by one undirected hop.
    std::vector<char> keep = near;
    for (const auto& t : g_prime.triplets()) {
        if (near[t.head]) keep[t.tail] = 1;
        if (near[t.tail]) keep[t.head] = 1;
    }
    return filter_triplets(g_prime, [&](const Triplet& t) {
        return keep[t.head] && keep[t.tail];
    });
}

std::vector<std::pair<std::string, long>> relation_stats(
    const MultiRelGraph& g) {
    std::vector<long> counts(g.relation_count(), 0);
    for (const auto& t : g.triplets()) ++counts[t.rel];
    std::vector<std::pair<std::string, long>> out;
    out.reserve(counts.size());
    for (int r = 0; r < g.relation_count(); ++r)
        out.emplace_back(g.relation_name(r), counts[r]);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

}  // namespace kgda::kg
