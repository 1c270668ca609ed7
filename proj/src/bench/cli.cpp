#include "kgda/bench/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "kgda/adv/model.hpp"
#include "kgda/adv/train.hpp"
#include "kgda/bench/plan.hpp"
#include "kgda/bench/synth.hpp"
#include "kgda/corpus/document.hpp"
#include "kgda/corpus/tagger.hpp"
#include "kgda/errors.hpp"
#include "kgda/feat/extract.hpp"
#include "kgda/kg/graph.hpp"
#include "kgda/rgcn/model.hpp"
#include "kgda/rgcn/train.hpp"
#include "kgda/util/binio.hpp"

namespace kgda::bench {
namespace {

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    for (auto& x : out) {
        auto b = x.find_first_not_of(" \t");
        auto e = x.find_last_not_of(" \t");
        x = b == std::string::npos ? std::string() : x.substr(b, e - b + 1);
    }
    return out;
}

corpus::LexiconTagger make_tagger(const std::string& lexicon) {
    if (lexicon.empty()) return corpus::LexiconTagger({});
    return corpus::LexiconTagger::load(lexicon);
}

std::vector<corpus::Document> load_all_documents(
    const std::vector<std::string>& files) {
    std::vector<corpus::Document> docs;
    for (const auto& f : files) {
        auto part = corpus::load_documents(f);
        docs.insert(docs.end(), std::make_move_iterator(part.begin()),
                    std::make_move_iterator(part.end()));
    }
    return docs;
}

feat::FeatureTable load_features(const std::string& path) {
    auto t = feat::FeatureTable::try_load(path);
    if (!t) throw IoError("cannot read feature table: " + path);
    return std::move(*t);
}

void setup_gen_synth(CLI::App& app) {
    struct Args {
        SynthSpec spec;
        std::string out;
        std::string domains;
    };
    auto a = std::make_shared<Args>();
    auto* sub = app.add_subcommand(
        "gen-synth", "generate the synthetic two-domain review benchmark");
    sub->add_option("--out", a->out, "output directory")->required();
    sub->add_option("--docs", a->spec.docs_per_domain, "documents per domain");
    sub->add_option("--density", a->spec.density,
                    "probability of each word-to-hub graph edge");
    sub->add_option("--signal", a->spec.signal,
                    "polarity fidelity of domain-specific words");
    sub->add_option("--general-signal", a->spec.general_signal,
                    "polarity fidelity of shared general words");
    sub->add_option("--specific", a->spec.specific_words,
                    "specific words per domain and polarity");
    sub->add_option("--general", a->spec.general_words,
                    "shared words per polarity");
    sub->add_option("--topic", a->spec.topic_words,
                    "neutral topic words per domain");
    sub->add_option("--filler", a->spec.filler_words, "shared filler bank size");
    sub->add_option("--seed", a->spec.seed, "generator seed");
    sub->add_option("--domains", a->domains, "two comma-separated domain names");
    sub->callback([a]() {
        if (!a->domains.empty()) {
            auto parts = split_csv(a->domains);
            if (parts.size() != 2 || parts[0].empty() || parts[1].empty())
                throw ConfigError("domains must be two comma-separated names: " +
                                  a->domains);
            a->spec.domain_a = parts[0];
            a->spec.domain_b = parts[1];
        }
        auto c = gen_synth(a->spec);
        write_synth(c, a->spec, a->out);
        std::printf("%s: %zu train / %zu test, %s: %zu train / %zu test, "
                    "%d triplets -> %s\n",
                    a->spec.domain_a.c_str(), c.train_a.size(), c.test_a.size(),
                    a->spec.domain_b.c_str(), c.train_b.size(), c.test_b.size(),
                    c.graph.triplet_count(), a->out.c_str());
    });
}

void setup_build_graph(CLI::App& app) {
    struct Args {
        std::vector<std::string> inputs;
        std::string out;
        std::string keep;
        std::vector<std::string> seed_docs;
        std::string lexicon;
    };
    auto a = std::make_shared<Args>();
    auto* sub = app.add_subcommand(
        "build-graph", "merge triplet files, optionally filter and reduce");
    sub->add_option("--in", a->inputs, "input triplet file (repeatable)")
        ->required();
    sub->add_option("--out", a->out, "output triplet file")->required();
    sub->add_option("--keep-relations", a->keep,
                    "comma-separated relation whitelist");
    sub->add_option("--seed-docs", a->seed_docs,
                    "document files whose content words seed the subgraph");
    sub->add_option("--lexicon", a->lexicon, "content-word lexicon");
    sub->callback([a]() {
        std::set<std::string> keep;
        if (!a->keep.empty())
            for (const auto& r : split_csv(a->keep))
                if (!r.empty()) keep.insert(r);
        kg::MultiRelGraph g;
        for (const auto& f : a->inputs) {
            auto part = kg::load_triplets(f);
            for (const auto& t : part.triplets()) {
                const auto& rel = part.relation_name(t.rel);
                if (!keep.empty() && !keep.count(rel)) continue;
                g.add(part.node_name(t.head), rel, part.node_name(t.tail));
            }
        }
        if (!a->seed_docs.empty()) {
            auto tagger = make_tagger(a->lexicon);
            auto docs = load_all_documents(a->seed_docs);
            std::set<std::string> words;
            for (const auto& d : docs)
                for (auto& w : corpus::content_words(d, tagger))
                    words.insert(std::move(w));
            g = kg::aggregate_subgraph(
                g, std::vector<std::string>(words.begin(), words.end()));
        }
        kg::save_triplets(g, a->out);
        std::printf("graph: %d nodes, %d relations, %d triplets -> %s\n",
                    g.node_count(), g.relation_count(), g.triplet_count(),
                    a->out.c_str());
    });
}

void setup_relation_stats(CLI::App& app) {
    struct Args {
        std::string graph;
    };
    auto a = std::make_shared<Args>();
    auto* sub =
        app.add_subcommand("relation-stats", "per-relation triplet counts");
    sub->add_option("--graph", a->graph, "triplet file")->required();
    sub->callback([a]() {
        auto g = kg::load_triplets(a->graph);
        std::printf("nodes %d  relations %d  triplets %d\n", g.node_count(),
                    g.relation_count(), g.triplet_count());
        for (const auto& [name, count] : kg::relation_stats(g))
            std::printf("%s\t%ld\n", name.c_str(), count);
    });
}

void setup_dump_subgraph(CLI::App& app) {
    struct Args {
        std::string graph, docs, id, lexicon;
    };
    auto a = std::make_shared<Args>();
    auto* sub = app.add_subcommand(
        "dump-subgraph", "print one document's radius-1 concept subgraph");
    sub->add_option("--graph", a->graph, "triplet file")->required();
    sub->add_option("--docs", a->docs, "document file")->required();
    sub->add_option("--id", a->id, "document id")->required();
    sub->add_option("--lexicon", a->lexicon, "content-word lexicon");
    sub->callback([a]() {
        auto g = kg::load_triplets(a->graph);
        auto docs = corpus::load_documents(a->docs);
        const corpus::Document* doc = nullptr;
        for (const auto& d : docs)
            if (d.id == a->id) {
                doc = &d;
                break;
            }
        if (!doc)
            throw ConfigError("no document with id " + a->id + " in " + a->docs);
        auto tagger = make_tagger(a->lexicon);
        auto words = corpus::content_words(*doc, tagger);
        auto sub_g = kg::document_subgraph(g, words);
        for (const auto& t : sub_g.triplets())
            std::printf("%s\t%s\t%s\n", sub_g.node_name(t.head).c_str(),
                        sub_g.relation_name(t.rel).c_str(),
                        sub_g.node_name(t.tail).c_str());
        std::printf("# %d nodes, %d triplets\n", sub_g.node_count(),
                    sub_g.triplet_count());
    });
}

void setup_pretrain_kg(CLI::App& app) {
    struct Args {
        std::string graph, out;
        int dim = 100;
        rgcn::PretrainConfig cfg;
        bool auc = false;
        rgcn::AucConfig auc_cfg;
    };
    auto a = std::make_shared<Args>();
    auto* sub = app.add_subcommand(
        "pretrain-kg", "fit the graph autoencoder by link prediction");
    sub->add_option("--graph", a->graph, "triplet file")->required();
    sub->add_option("--out", a->out, "model output path")->required();
    sub->add_option("--dim", a->dim, "embedding width");
    sub->add_option("--epochs", a->cfg.epochs, "training epochs");
    sub->add_option("--batch", a->cfg.batch_positives, "positive edges per step");
    sub->add_option("--lr", a->cfg.lr, "learning rate");
    sub->add_option("--patience", a->cfg.patience,
                    "epochs without improvement before stopping");
    sub->add_flag("--freeze", a->cfg.freeze_node_init,
                  "keep initial node features fixed");
    sub->add_option("--seed", a->cfg.seed, "training seed");
    sub->add_flag("--auc", a->auc, "score held-out link prediction after training");
    sub->add_option("--auc-frac", a->auc_cfg.holdout_frac, "held-out edge fraction");
    sub->add_option("--auc-neg", a->auc_cfg.neg_per_pos, "negatives per held edge");
    sub->add_option("--auc-seed", a->auc_cfg.seed, "holdout seed");
    sub->callback([a]() {
        auto g = kg::load_triplets(a->graph);
        a->cfg.dims = rgcn::Dims{a->dim, a->dim, a->dim};
        auto res = rgcn::pretrain(g, a->cfg);
        res.model.save(a->out);
        if (res.epoch_loss.empty())
            std::printf("pretrained 0 epochs -> %s\n", a->out.c_str());
        else
            std::printf("pretrained %zu epochs, final loss %.6f -> %s\n",
                        res.epoch_loss.size(), res.epoch_loss.back(),
                        a->out.c_str());
        if (a->auc)
            std::printf("heldout auc %.4f\n",
                        rgcn::heldout_auc(g, res.model, a->auc_cfg));
    });
}

void setup_extract_features(CLI::App& app) {
    struct Args {
        std::string graph, model, cache, lexicon;
        std::vector<std::string> docs;
    };
    auto a = std::make_shared<Args>();
    auto* sub = app.add_subcommand(
        "extract-features", "per-document graph features into a cache file");
    sub->add_option("--graph", a->graph, "triplet file")->required();
    sub->add_option("--model", a->model, "pretrained graph model")->required();
    sub->add_option("--docs", a->docs, "document file (repeatable)")->required();
    sub->add_option("--cache", a->cache, "feature cache path")->required();
    sub->add_option("--lexicon", a->lexicon, "content-word lexicon");
    sub->callback([a]() {
        auto g = kg::load_triplets(a->graph);
        auto model = rgcn::Autoencoder::load(a->model);
        auto docs = load_all_documents(a->docs);
        auto tagger = make_tagger(a->lexicon);
        auto table = feat::extract_all(docs, g, model, tagger, a->cache);
        std::printf("%zu features of width %d -> %s\n", table.size(),
                    table.dim(), a->cache.c_str());
    });
}

void setup_train(CLI::App& app) {
    struct Args {
        std::string variant = "full";
        std::string src_train, src_test, tgt_train, tgt_test, out;
        std::string features, metrics;
        adv::TrainConfig cfg;
    };
    auto a = std::make_shared<Args>();
    auto* sub = app.add_subcommand(
        "train", "fit a domain-adversarial sentiment classifier");
    sub->add_option("--variant", a->variant,
                    "dann, dann_plus, v1, v2, v3, or full");
    sub->add_option("--src-train", a->src_train, "source training documents")
        ->required();
    sub->add_option("--src-test", a->src_test, "held-out source documents")
        ->required();
    sub->add_option("--tgt-train", a->tgt_train, "target training documents")
        ->required();
    sub->add_option("--tgt-test", a->tgt_test, "target evaluation documents")
        ->required();
    sub->add_option("--out", a->out, "classifier checkpoint path")->required();
    sub->add_option("--features", a->features, "graph feature cache");
    sub->add_option("--metrics", a->metrics, "per-epoch metrics output (tsv)");
    sub->add_option("--bow-dim", a->cfg.bow_dim, "bag-of-words width");
    sub->add_option("--hidden", a->cfg.hidden, "hidden width");
    sub->add_option("--dropout", a->cfg.dropout, "dropout probability");
    sub->add_option("--epochs", a->cfg.epochs, "training epochs");
    sub->add_option("--batch", a->cfg.batch, "rows per domain per step");
    sub->add_option("--lr", a->cfg.lr, "learning rate");
    sub->add_flag("--sgd", a->cfg.sgd, "plain SGD instead of Adam");
    sub->add_option("--gamma", a->cfg.gamma, "reconstruction loss weight");
    sub->add_flag("--lambda-restart", a->cfg.lambda_restart_each_epoch,
                  "restart the domain-loss schedule every epoch");
    sub->add_option("--seed", a->cfg.seed, "training seed");
    sub->callback([a]() {
        a->cfg.variant = adv::variant_from_string(a->variant);
        adv::TrainData data;
        data.src_train = corpus::load_documents(a->src_train);
        data.src_test = corpus::load_documents(a->src_test);
        data.tgt_train = corpus::load_documents(a->tgt_train);
        data.tgt_test = corpus::load_documents(a->tgt_test);
        std::optional<feat::FeatureTable> table;
        if (!a->features.empty()) {
            table = load_features(a->features);
            data.features = &*table;
        }
        auto res = adv::train(a->cfg, data);
        for (std::size_t i = 0; i < res.metrics.size(); ++i) {
            const auto& m = res.metrics[i];
            std::printf("epoch %3zu  cls %.4f  adv %.4f  recon %.4f  "
                        "src_train %.4f  tgt_test %.4f  disc %.4f\n",
                        i + 1, m.loss_cls, m.loss_adv, m.loss_recon,
                        m.source_train_acc, m.target_test_acc, m.disc_acc);
        }
        res.model.save(a->out);
        if (!a->metrics.empty()) {
            util::BinWriter w(a->metrics);
            auto puts = [&](const std::string& s) { w.raw(s.data(), s.size()); };
            puts("epoch\tloss_cls\tloss_adv\tloss_recon\tsource_train_acc\t"
                 "target_test_acc\tdisc_acc\n");
            char buf[256];
            for (std::size_t i = 0; i < res.metrics.size(); ++i) {
                const auto& m = res.metrics[i];
                int n = std::snprintf(
                    buf, sizeof buf,
                    "%zu\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g\n", i + 1,
                    m.loss_cls, m.loss_adv, m.loss_recon, m.source_train_acc,
                    m.target_test_acc, m.disc_acc);
                w.raw(buf, static_cast<std::size_t>(n));
            }
            w.commit();
        }
        double tgt = res.metrics.empty()
                         ? adv::evaluate(res.model, data.tgt_test, data.features)
                         : res.metrics.back().target_test_acc;
        std::printf("target accuracy %.4f -> %s\n", tgt, a->out.c_str());
    });
}

void setup_evaluate(CLI::App& app) {
    struct Args {
        std::string model, features;
        std::vector<std::string> docs;
    };
    auto a = std::make_shared<Args>();
    auto* sub =
        app.add_subcommand("evaluate", "score a classifier on labeled documents");
    sub->add_option("--model", a->model, "classifier checkpoint")->required();
    sub->add_option("--docs", a->docs, "document file (repeatable)")->required();
    sub->add_option("--features", a->features, "graph feature cache");
    sub->callback([a]() {
        auto model = adv::Classifier::load(a->model);
        auto docs = load_all_documents(a->docs);
        std::optional<feat::FeatureTable> table;
        const feat::FeatureTable* fp = nullptr;
        if (!a->features.empty()) {
            table = load_features(a->features);
            fp = &*table;
        }
        std::printf("accuracy %.4f\n", adv::evaluate(model, docs, fp));
    });
}

void setup_run_plan(CLI::App& app) {
    struct Args {
        std::string config;
        std::string data_dir, out_dir, lexicon, pairs, variants, seeds;
        int bow_dim = 0, hidden = 0, epochs = 0, batch = 0;
        double lr = 0, gamma = 0, dropout = 0;
        bool dann_sgd = false;
        int kg_dim = 0, kg_epochs = 0, kg_batch = 0, kg_patience = 0;
        double kg_lr = 0;
        bool kg_freeze = false;
        std::uint64_t master_seed = 0;
    };
    auto a = std::make_shared<Args>();
    auto* sub = app.add_subcommand(
        "run-plan", "run a full experiment grid from a plan file");
    sub->add_option("--config", a->config, "plan file")->required();
    sub->add_option("--data-dir", a->data_dir, "override data_dir");
    sub->add_option("--out-dir", a->out_dir, "override out_dir");
    sub->add_option("--lexicon", a->lexicon, "override lexicon");
    sub->add_option("--pairs", a->pairs, "override pairs (src:tgt,...)");
    sub->add_option("--variants", a->variants, "override variants");
    sub->add_option("--seeds", a->seeds, "override seeds");
    sub->add_option("--bow-dim", a->bow_dim, "override bow_dim");
    sub->add_option("--hidden", a->hidden, "override hidden");
    sub->add_option("--epochs", a->epochs, "override epochs");
    sub->add_option("--batch", a->batch, "override batch");
    sub->add_option("--lr", a->lr, "override lr");
    sub->add_option("--gamma", a->gamma, "override gamma");
    sub->add_option("--dropout", a->dropout, "override dropout");
    sub->add_flag("--dann-sgd", a->dann_sgd, "override dann_sgd to true");
    sub->add_option("--kg-dim", a->kg_dim, "override kg_dim");
    sub->add_option("--kg-epochs", a->kg_epochs, "override kg_epochs");
    sub->add_option("--kg-batch", a->kg_batch, "override kg_batch");
    sub->add_option("--kg-lr", a->kg_lr, "override kg_lr");
    sub->add_option("--kg-patience", a->kg_patience, "override kg_patience");
    sub->add_flag("--kg-freeze", a->kg_freeze, "override kg_freeze to true");
    sub->add_option("--master-seed", a->master_seed, "override master_seed");
    sub->callback([a, sub]() {
        RunPlan plan = load_plan(a->config);
        if (sub->count("--data-dir")) plan.data_dir = a->data_dir;
        if (sub->count("--out-dir")) plan.out_dir = a->out_dir;
        if (sub->count("--lexicon")) plan.lexicon = a->lexicon;
        if (sub->count("--pairs")) plan.pairs = parse_pairs(a->pairs);
        if (sub->count("--variants")) plan.variants = parse_variants(a->variants);
        if (sub->count("--seeds")) plan.seeds = parse_seeds(a->seeds);
        if (sub->count("--bow-dim")) plan.bow_dim = a->bow_dim;
        if (sub->count("--hidden")) plan.hidden = a->hidden;
        if (sub->count("--epochs")) plan.epochs = a->epochs;
        if (sub->count("--batch")) plan.batch = a->batch;
        if (sub->count("--lr")) plan.lr = a->lr;
        if (sub->count("--gamma")) plan.gamma = a->gamma;
        if (sub->count("--dropout")) plan.dropout = a->dropout;
        if (sub->count("--dann-sgd")) plan.dann_sgd = a->dann_sgd;
        if (sub->count("--kg-dim")) plan.kg_dim = a->kg_dim;
        if (sub->count("--kg-epochs")) plan.kg_epochs = a->kg_epochs;
        if (sub->count("--kg-batch")) plan.kg_batch = a->kg_batch;
        if (sub->count("--kg-lr")) plan.kg_lr = a->kg_lr;
        if (sub->count("--kg-patience")) plan.kg_patience = a->kg_patience;
        if (sub->count("--kg-freeze")) plan.kg_freeze = a->kg_freeze;
        if (sub->count("--master-seed")) plan.master_seed = a->master_seed;
        auto result = run_plan(plan);
        std::printf("%zu runs -> %s/results.csv\n", result.rows.size(),
                    plan.out_dir.c_str());
    });
}

}  // namespace

int run_cli(std::vector<std::string> args) {
    CLI::App app{"knowledge-graph domain adaptation toolkit", "kgda"};
    app.require_subcommand(1);
    setup_gen_synth(app);
    setup_build_graph(app);
    setup_relation_stats(app);
    setup_dump_subgraph(app);
    setup_pretrain_kg(app);
    setup_extract_features(app);
    setup_train(app);
    setup_evaluate(app);
    setup_run_plan(app);
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace kgda::bench
