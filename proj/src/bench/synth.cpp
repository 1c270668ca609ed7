#include "kgda/bench/synth.hpp"

#include <filesystem>
#include <fstream>

#include "kgda/errors.hpp"
#include "kgda/num/rng.hpp"
#include "kgda/util/binio.hpp"
#include "kgda/util/hash.hpp"

namespace kgda::bench {

namespace {

std::string spec_word(int dom, bool pos, int j) {
    return "d" + std::to_string(dom) + (pos ? "pos" : "neg") +
           std::to_string(j);
}

std::string topic_word(int dom, int j) {
    return "d" + std::to_string(dom) + "top" + std::to_string(j);
}

std::vector<corpus::Document> gen_domain(const SynthSpec& spec, int dom,
                                         const std::string& name,
                                         num::Rng rng) {
    std::vector<corpus::Document> docs;
    for (int i = 0; i < spec.docs_per_domain; ++i) {
        bool pos = i % 2 == 0;
        std::vector<std::string> content;
        for (int k = 0; k < 6; ++k) {
            bool pol = rng.bernoulli(spec.signal) ? pos : !pos;
            content.push_back(
                spec_word(dom, pol, static_cast<int>(rng.below(
                                        spec.specific_words))));
        }
        for (int k = 0; k < 4; ++k) {
            bool pol = rng.bernoulli(spec.general_signal) ? pos : !pos;
            content.push_back(
                std::string("gen") + (pol ? "pos" : "neg") +
                std::to_string(rng.below(spec.general_words)));
        }
        for (int k = 0; k < 6; ++k)
            content.push_back(topic_word(
                dom, static_cast<int>(rng.below(spec.topic_words))));

        corpus::Document d;
        d.id = name + "_" + std::to_string(i);
        d.domain = name;
        std::string text;
        for (const auto& w : content) {
            text += w;
            text += ' ';
        }
        for (int k = 0; k < 12; ++k) {
            text += "w" + std::to_string(rng.below(spec.filler_words));
            if (k + 1 < 12) text += ' ';
        }
        d.text = std::move(text);
        d.tokens = corpus::tokenize(d.text);
        d.rating = pos ? 4 + static_cast<int>(rng.below(2))
                       : 1 + static_cast<int>(rng.below(3));
        d.label = corpus::label_from_rating(*d.rating);
        d.content = std::move(content);
        docs.push_back(std::move(d));
    }
    return docs;
}

void split_docs(std::vector<corpus::Document> docs,
                std::vector<corpus::Document>* train,
                std::vector<corpus::Document>* test) {
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (i % 5 != 4)
            train->push_back(std::move(docs[i]));
        else
            test->push_back(std::move(docs[i]));
    }
}

}  // namespace

SynthCorpus gen_synth(const SynthSpec& spec) {
    if (spec.docs_per_domain < 5)
        throw ConfigError("need at least 5 documents per domain");
    if (spec.specific_words < 1 || spec.general_words < 1 ||
        spec.topic_words < 1 || spec.filler_words < 1)
        throw ConfigError("word bank sizes must be positive");
    if (spec.density < 0.0 || spec.density > 1.0)
        throw ConfigError("density must lie in [0,1]");
    if (spec.domain_a == spec.domain_b)
        throw ConfigError("domains must differ");

    num::Rng root(spec.seed);
    auto graph_rng = root.child(0);

    SynthCorpus c;
    for (int dom = 0; dom < 2; ++dom) {
        for (bool pos : {true, false}) {
            for (int j = 0; j < spec.specific_words; ++j) {
                const char* pol = pos ? "pos" : "neg";
                const std::string word = spec_word(dom, pos, j);
                if (graph_rng.bernoulli(spec.density))
                    c.graph.add(word, "RelatedTo",
                                std::string("hub") + pol +
                                    std::to_string(j % 4));
                if (graph_rng.bernoulli(spec.density))
                    c.graph.add(word, "SimilarTo",
                                std::string("hub") + pol +
                                    std::to_string((j + 1) % 4));
            }
        }
        for (int j = 0; j < spec.topic_words; ++j)
            c.graph.add(topic_word(dom, j), "HasContext",
                        "d" + std::to_string(dom) + "ctx" +
                            std::to_string(j % 3));
    }

    split_docs(gen_domain(spec, 0, spec.domain_a, root.child(1)), &c.train_a,
               &c.test_a);
    split_docs(gen_domain(spec, 1, spec.domain_b, root.child(2)), &c.train_b,
               &c.test_b);
    return c;
}

void write_synth(const SynthCorpus& c, const SynthSpec& spec,
                 const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto path_of = [&](const std::string& name) {
        return (fs::path(out_dir) / name).string();
    };

    std::vector<std::string> files;
    auto emit = [&](const std::string& name,
                    const std::vector<corpus::Document>& docs) {
        corpus::save_documents(docs, path_of(name));
        files.push_back(name);
    };
    emit(spec.domain_a + "_train.tsv", c.train_a);
    emit(spec.domain_a + "_test.tsv", c.test_a);
    emit(spec.domain_b + "_train.tsv", c.train_b);
    emit(spec.domain_b + "_test.tsv", c.test_b);
    kg::save_triplets(c.graph, path_of("triplets.tsv"));
    files.push_back("triplets.tsv");

    {
        util::BinWriter lex(path_of("lexicon.tsv"));
        auto put = [&](const std::string& w, const char* pos) {
            std::string line = w + "\t" + pos + "\n";
            lex.raw(line.data(), line.size());
        };
        for (int dom = 0; dom < 2; ++dom) {
            for (bool pos : {true, false})
                for (int j = 0; j < spec.specific_words; ++j)
                    put(spec_word(dom, pos, j), "ADJ");
            for (int j = 0; j < spec.topic_words; ++j)
                put(topic_word(dom, j), "NOUN");
        }
        for (const char* pol : {"pos", "neg"})
            for (int j = 0; j < spec.general_words; ++j)
                put(std::string("gen") + pol + std::to_string(j), "ADJ");
        lex.commit();
    }
    files.push_back("lexicon.tsv");

    util::BinWriter manifest(path_of("manifest.txt"));
    manifest.raw("# corpus manifest: file\tfnv64\n", 30);
    for (const auto& name : files) {
        std::ifstream in(path_of(name), std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        util::Fnv1a h;
        h.update(bytes.data(), bytes.size());
        char line[160];
        int n = std::snprintf(line, sizeof line, "%s\t%016llx\n", name.c_str(),
                              static_cast<unsigned long long>(h.digest()));
        manifest.raw(line, static_cast<std::size_t>(n));
    }
    manifest.commit();
}

kg::MultiRelGraph gen_two_block_graph(int nodes_per_block, int chords_per_node,
                                      std::uint64_t seed) {
    if (nodes_per_block < 3) throw ConfigError("blocks need at least 3 nodes");
    if (chords_per_node < 0) throw ConfigError("negative chord count");
    num::Rng rng(seed);
    kg::MultiRelGraph g;
    for (int b = 0; b < 2; ++b) {
        const char prefix = b == 0 ? 'a' : 'b';
        auto node = [&](int i) { return prefix + std::to_string(i); };
        for (int i = 0; i < nodes_per_block; ++i)
            g.add(node(i), "next", node((i + 1) % nodes_per_block));
        for (int i = 0; i < nodes_per_block; ++i)
            for (int k = 0; k < chords_per_node; ++k) {
                int j = static_cast<int>(rng.below(nodes_per_block));
                if (j != i) g.add(node(i), "link", node(j));
            }
    }
    return g;
}

}  // namespace kgda::bench
