#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kgda/adv/model.hpp"

namespace kgda::bench {

// One experiment grid: every pair x variant x seed becomes a run. The
// concept graph is pretrained once and document features are extracted
// once; each run fits its own classifier.
struct RunPlan {
    std::string data_dir;
    std::string out_dir;
    std::string lexicon;  // optional; documents with content lists skip it
    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<adv::Variant> variants;
    std::vector<std::uint64_t> seeds;
    int bow_dim = 5000;
    int hidden = 100;
    int epochs = 50;
    int batch = 32;
    double lr = 1e-3;
    double gamma = 1.0;
    double dropout = 0.25;
    bool dann_sgd = false;  // plain-baseline runs switch to SGD
    int kg_dim = 100;
    int kg_epochs = 200;
    int kg_batch = 512;
    double kg_lr = 0.01;
    int kg_patience = 20;
    bool kg_freeze = false;
    std::uint64_t master_seed = 0;
};

// key=value lines, # comments. Unknown keys raise ConfigError.
RunPlan load_plan(const std::string& path);

// List syntax shared by plan files and command-line overrides.
std::vector<std::pair<std::string, std::string>> parse_pairs(
    const std::string& csv);  // "a:b,c:d"
std::vector<adv::Variant> parse_variants(const std::string& csv);
std::vector<std::uint64_t> parse_seeds(const std::string& csv);

struct RunRow {
    std::string source, target;
    adv::Variant variant;
    int bow_dim = 0;
    std::uint64_t seed = 0;
    double target_accuracy = 0.0;
    double source_accuracy = 0.0;  // held-out source split
    int epochs = 0;
    double wall_seconds = 0.0;
    // Carried in memory only, not part of results.csv:
    double source_train_accuracy = 0.0;
    double discriminator_accuracy = 0.0;
};

struct PlanResult {
    std::vector<RunRow> rows;
    double kg_final_loss = 0.0;
};

// Runs the grid, writing results.csv, results.txt, the pretrained graph
// model, the feature cache, and one classifier checkpoint per run into
// plan.out_dir. Any failure aborts the whole plan.
PlanResult run_plan(const RunPlan& plan);

}  // namespace kgda::bench
