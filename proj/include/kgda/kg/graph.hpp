#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace kgda::kg {

// Lowercased, spaces become underscores, so corpus tokens line up with
// graph concepts.
std::string normalize_concept(std::string_view s);

struct Triplet {
    int head;
    int rel;
    int tail;
    bool operator==(const Triplet&) const = default;
};

// Directed multi-relational graph with interned node/relation names,
// deduplicated triplets in insertion order, and per-node adjacency.
class MultiRelGraph {
  public:
    // Interns both concepts (normalized) and the relation; returns true when
    // the triplet was not present yet.
    bool add(const std::string& head, const std::string& relation,
             const std::string& tail);

    int node_count() const { return static_cast<int>(node_names_.size()); }
    int relation_count() const { return static_cast<int>(rel_names_.size()); }
    int triplet_count() const { return static_cast<int>(triplets_.size()); }
    bool empty() const { return triplets_.empty(); }

    const std::string& node_name(int id) const { return node_names_.at(id); }
    const std::string& relation_name(int id) const { return rel_names_.at(id); }
    const std::vector<std::string>& node_names() const { return node_names_; }
    const std::vector<std::string>& relation_names() const { return rel_names_; }

    std::optional<int> node_id(std::string_view name) const;
    std::optional<int> relation_id(std::string_view name) const;
    bool contains(int head, int rel, int tail) const;

    const std::vector<Triplet>& triplets() const { return triplets_; }

    // (relation, other endpoint) pairs.
    const std::vector<std::pair<int, int>>& out_edges(int node) const {
        return out_.at(node);
    }
    const std::vector<std::pair<int, int>>& in_edges(int node) const {
        return in_.at(node);
    }

  private:
    int intern_node(const std::string& normalized);
    int intern_relation(const std::string& name);
    static std::uint64_t key(int head, int rel, int tail);

    std::vector<std::string> node_names_;
    std::vector<std::string> rel_names_;
    std::unordered_map<std::string, int> node_ids_;
    std::unordered_map<std::string, int> rel_ids_;
    std::vector<Triplet> triplets_;
    std::unordered_set<std::uint64_t> seen_;
    std::vector<std::vector<std::pair<int, int>>> out_;
    std::vector<std::vector<std::pair<int, int>>> in_;
};

// Tab-separated lines `head<TAB>relation<TAB>tail`; blank lines and #
// comments skipped; duplicates collapse. Malformed lines raise ParseError
// naming the line number.
MultiRelGraph load_triplets(const std::string& path);

void save_triplets(const MultiRelGraph& g, const std::string& path);

// Triplets touching at least one seed concept, direction ignored. Seeds are
// normalized first; seeds the graph does not know are skipped. The seed list
// must not be empty.
MultiRelGraph aggregate_subgraph(const MultiRelGraph& g,
                                 const std::vector<std::string>& seeds);

// Triplets whose endpoints both lie within undirected distance 1 of the
// given words. Empty result is fine.
MultiRelGraph document_subgraph(const MultiRelGraph& g_prime,
                                const std::vector<std::string>& words);

// (relation name, triplet count), count descending, ties lexicographic.
std::vector<std::pair<std::string, long>> relation_stats(const MultiRelGraph& g);

}  // namespace kgda::kg
