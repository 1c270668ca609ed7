#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgda/corpus/document.hpp"
#include "kgda/kg/graph.hpp"

namespace kgda::bench {

// Two-domain review corpus with a concept graph bridging the domains.
// Each domain owns its sentiment vocabulary ("d0pos3" style); the graph
// ties those words to shared polarity hubs, so the only cross-domain
// sentiment signal strong enough to transfer runs through the graph.
// density gates the word-to-hub edges: 0 leaves the domains disconnected.
struct SynthSpec {
    std::string domain_a = "alpha";
    std::string domain_b = "beta";
    int docs_per_domain = 300;
    int specific_words = 30;  // per domain and polarity
    int general_words = 30;   // shared, per polarity
    int topic_words = 24;     // per domain, sentiment-neutral
    int filler_words = 400;   // shared noise bank
    double density = 1.0;
    double signal = 0.9;          // polarity fidelity of specific tokens
    double general_signal = 0.55;  // weak shared text signal
    std::uint64_t seed = 1;
};

struct SynthCorpus {
    std::vector<corpus::Document> train_a, test_a, train_b, test_b;
    kg::MultiRelGraph graph;
};

SynthCorpus gen_synth(const SynthSpec& spec);

// Writes {domain}_train.tsv / {domain}_test.tsv, triplets.tsv, a
// lexicon.tsv covering the content vocabulary, and a manifest.txt of
// per-file content checksums into out_dir.
void write_synth(const SynthCorpus& c, const SynthSpec& spec,
                 const std::string& out_dir);

// Two ring-plus-chords blocks with no edges between them; a compact
// fixture for link-prediction scoring.
kg::MultiRelGraph gen_two_block_graph(int nodes_per_block,
                                      int chords_per_node,
                                      std::uint64_t seed);

}  // namespace kgda::bench
