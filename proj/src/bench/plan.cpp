#include "kgda/bench/plan.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include "kgda/adv/train.hpp"
#include "kgda/corpus/tagger.hpp"
#include "kgda/errors.hpp"
#include "kgda/feat/extract.hpp"
#include "kgda/rgcn/train.hpp"
#include "kgda/util/binio.hpp"

namespace kgda::bench {

namespace {

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

long parse_long(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        long x = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + " is not an integer: " + v);
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key + " is not a boolean: " + v);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + " is not a number: " + v);
    }
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

struct DomainDocs {
    std::vector<corpus::Document> train, test;
};

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_pairs(
    const std::string& csv) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& p : split_list(csv, ',')) {
        auto parts = split_list(trim(p), ':');
        if (parts.size() != 2 || trim(parts[0]).empty() ||
            trim(parts[1]).empty())
            throw ConfigError("pair must be source:target, got " + p);
        pairs.emplace_back(trim(parts[0]), trim(parts[1]));
    }
    return pairs;
}

std::vector<adv::Variant> parse_variants(const std::string& csv) {
    std::vector<adv::Variant> variants;
    for (const auto& v : split_list(csv, ','))
        variants.push_back(adv::variant_from_string(trim(v)));
    return variants;
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    for (const auto& s : split_list(csv, ','))
        seeds.push_back(
            static_cast<std::uint64_t>(parse_long("seeds", trim(s))));
    return seeds;
}

RunPlan load_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open plan file " + path);
    RunPlan plan;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected key=value");
        auto key = trim(t.substr(0, eq));
        auto val = trim(t.substr(eq + 1));
        if (key == "data_dir") {
            plan.data_dir = val;
        } else if (key == "out_dir") {
            plan.out_dir = val;
        } else if (key == "lexicon") {
            plan.lexicon = val;
        } else if (key == "pairs") {
            plan.pairs = parse_pairs(val);
        } else if (key == "variants") {
            plan.variants = parse_variants(val);
        } else if (key == "seeds") {
            plan.seeds = parse_seeds(val);
        } else if (key == "bow_dim") {
            plan.bow_dim = static_cast<int>(parse_long(key, val));
        } else if (key == "hidden") {
            plan.hidden = static_cast<int>(parse_long(key, val));
        } else if (key == "epochs") {
            plan.epochs = static_cast<int>(parse_long(key, val));
        } else if (key == "batch") {
            plan.batch = static_cast<int>(parse_long(key, val));
        } else if (key == "lr") {
            plan.lr = parse_double(key, val);
        } else if (key == "gamma") {
            plan.gamma = parse_double(key, val);
        } else if (key == "dropout") {
            plan.dropout = parse_double(key, val);
        } else if (key == "dann_sgd") {
            plan.dann_sgd = parse_bool(key, val);
        } else if (key == "kg_dim") {
            plan.kg_dim = static_cast<int>(parse_long(key, val));
        } else if (key == "kg_epochs") {
            plan.kg_epochs = static_cast<int>(parse_long(key, val));
        } else if (key == "kg_batch") {
            plan.kg_batch = static_cast<int>(parse_long(key, val));
        } else if (key == "kg_lr") {
            plan.kg_lr = parse_double(key, val);
        } else if (key == "kg_patience") {
            plan.kg_patience = static_cast<int>(parse_long(key, val));
        } else if (key == "kg_freeze") {
            plan.kg_freeze = parse_bool(key, val);
        } else if (key == "master_seed") {
            plan.master_seed =
                static_cast<std::uint64_t>(parse_long(key, val));
        } else {
            throw ConfigError("unknown plan key: " + key);
        }
    }
    return plan;
}

PlanResult run_plan(const RunPlan& plan) {
    namespace fs = std::filesystem;
    if (plan.data_dir.empty() || plan.out_dir.empty())
        throw ConfigError("plan needs data_dir and out_dir");
    if (plan.pairs.empty()) throw ConfigError("plan lists no pairs");
    if (plan.variants.empty()) throw ConfigError("plan lists no variants");
    if (plan.seeds.empty()) throw ConfigError("plan lists no seeds");
    for (const auto& [src, tgt] : plan.pairs)
        if (src == tgt)
            throw ConfigError("pair has identical source and target: " + src);

    fs::create_directories(plan.out_dir);
    auto out_path = [&](const std::string& name) {
        return (fs::path(plan.out_dir) / name).string();
    };
    auto data_path = [&](const std::string& name) {
        return (fs::path(plan.data_dir) / name).string();
    };

    auto graph = kg::load_triplets(data_path("triplets.tsv"));

    std::vector<std::string> domains;
    for (const auto& [src, tgt] : plan.pairs)
        for (const auto& d : {src, tgt})
            if (std::find(domains.begin(), domains.end(), d) == domains.end())
                domains.push_back(d);
    std::map<std::string, DomainDocs> docs;
    for (const auto& d : domains) {
        docs[d].train = corpus::load_documents(data_path(d + "_train.tsv"));
        docs[d].test = corpus::load_documents(data_path(d + "_test.tsv"));
    }

    corpus::LexiconTagger tagger =
        plan.lexicon.empty() ? corpus::LexiconTagger({})
                             : corpus::LexiconTagger::load(plan.lexicon);

    std::vector<corpus::Document> all_docs;
    for (const auto& d : domains) {
        all_docs.insert(all_docs.end(), docs[d].train.begin(),
                        docs[d].train.end());
        all_docs.insert(all_docs.end(), docs[d].test.begin(),
                        docs[d].test.end());
    }
    std::vector<std::string> seed_words;
    {
        std::set<std::string> uniq;
        for (const auto& d : all_docs)
            for (auto& w : corpus::content_words(d, tagger)) uniq.insert(w);
        seed_words.assign(uniq.begin(), uniq.end());
    }
    auto g_prime = kg::aggregate_subgraph(graph, seed_words);

    rgcn::PretrainConfig kg_cfg;
    kg_cfg.dims = rgcn::Dims{plan.kg_dim, plan.kg_dim, plan.kg_dim};
    kg_cfg.epochs = plan.kg_epochs;
    kg_cfg.batch_positives = plan.kg_batch;
    kg_cfg.lr = plan.kg_lr;
    kg_cfg.patience = plan.kg_patience;
    kg_cfg.freeze_node_init = plan.kg_freeze;
    kg_cfg.seed = mix_seed(plan.master_seed, ~0ULL);
    auto pre = rgcn::pretrain(g_prime, kg_cfg);
    pre.model.save(out_path("kg_model.kgae"));

    auto features = feat::extract_all(all_docs, g_prime, pre.model, tagger,
                                      out_path("features.kgfc"));

    PlanResult result;
    result.kg_final_loss =
        pre.epoch_loss.empty() ? 0.0 : pre.epoch_loss.back();

    for (const auto& [src, tgt] : plan.pairs) {
        for (auto variant : plan.variants) {
            for (auto seed : plan.seeds) {
                adv::TrainConfig cfg;
                cfg.variant = variant;
                cfg.bow_dim = plan.bow_dim;
                cfg.hidden = plan.hidden;
                cfg.dropout = plan.dropout;
                cfg.epochs = plan.epochs;
                cfg.batch = plan.batch;
                cfg.lr = plan.lr;
                cfg.sgd = variant == adv::Variant::dann && plan.dann_sgd;
                cfg.gamma = plan.gamma;
                cfg.seed = mix_seed(plan.master_seed, seed);

                adv::TrainData data{docs[src].train, docs[src].test,
                                    docs[tgt].train, docs[tgt].test,
                                    &features};
                auto t0 = std::chrono::steady_clock::now();
                auto res = adv::train(cfg, data);
                auto t1 = std::chrono::steady_clock::now();

                RunRow row;
                row.source = src;
                row.target = tgt;
                row.variant = variant;
                row.bow_dim = plan.bow_dim;
                row.seed = seed;
                row.epochs = plan.epochs;
                row.wall_seconds =
                    std::chrono::duration<double>(t1 - t0).count();
                if (res.metrics.empty()) {
                    row.target_accuracy =
                        adv::evaluate(res.model, data.tgt_test, &features);
                    row.source_train_accuracy =
                        adv::evaluate(res.model, data.src_train, &features);
                } else {
                    row.target_accuracy = res.metrics.back().target_test_acc;
                    row.source_train_accuracy =
                        res.metrics.back().source_train_acc;
                    row.discriminator_accuracy = res.metrics.back().disc_acc;
                }
                row.source_accuracy =
                    adv::evaluate(res.model, data.src_test, &features);

                std::string ckpt = "clf_" + src + "_" + tgt + "_" +
                                   adv::to_string(variant) + "_s" +
                                   std::to_string(seed) + ".kgad";
                res.model.save(out_path(ckpt));

                std::printf("run %s->%s %s seed %llu: target=%.4f source=%.4f "
                            "(%.2fs)\n",
                            src.c_str(), tgt.c_str(), adv::to_string(variant),
                            static_cast<unsigned long long>(seed),
                            row.target_accuracy, row.source_accuracy,
                            row.wall_seconds);
                result.rows.push_back(std::move(row));
            }
        }
    }

    {
        util::BinWriter csv(out_path("results.csv"));
        auto puts = [&](const std::string& s) { csv.raw(s.data(), s.size()); };
        puts("source,target,variant,bow_dim,seed,target_accuracy,"
             "source_accuracy,epochs,wall_seconds\n");
        char buf[256];
        for (const auto& r : result.rows) {
            int n = std::snprintf(
                buf, sizeof buf, "%s,%s,%s,%d,%llu,%.10g,%.10g,%d,%.3f\n",
                r.source.c_str(), r.target.c_str(), adv::to_string(r.variant),
                r.bow_dim, static_cast<unsigned long long>(r.seed),
                r.target_accuracy, r.source_accuracy, r.epochs,
                r.wall_seconds);
            csv.raw(buf, static_cast<std::size_t>(n));
        }
        csv.commit();
    }

    {
        util::BinWriter txt(out_path("results.txt"));
        char buf[256];
        int n = std::snprintf(buf, sizeof buf, "%-12s %-12s %-10s %5s %12s %12s\n",
                              "source", "target", "variant", "runs",
                              "target_acc", "source_acc");
        txt.raw(buf, static_cast<std::size_t>(n));
        for (const auto& [src, tgt] : plan.pairs) {
            for (auto variant : plan.variants) {
                double tsum = 0.0, ssum = 0.0;
                int count = 0;
                for (const auto& r : result.rows)
                    if (r.source == src && r.target == tgt &&
                        r.variant == variant) {
                        tsum += r.target_accuracy;
                        ssum += r.source_accuracy;
                        ++count;
                    }
                n = std::snprintf(buf, sizeof buf,
                                  "%-12s %-12s %-10s %5d %12.4f %12.4f\n",
                                  src.c_str(), tgt.c_str(),
                                  adv::to_string(variant), count,
                                  tsum / count, ssum / count);
                txt.raw(buf, static_cast<std::size_t>(n));
            }
        }
        txt.commit();
    }

    return result;
}

}  // namespace kgda::bench
