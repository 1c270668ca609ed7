#include "kgda/rgcn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kgda/errors.hpp"
#include "kgda/num/optim.hpp"

namespace kgda::rgcn {

std::vector<TripletSample> sample_negatives(
    const kg::MultiRelGraph& g, const std::vector<kg::Triplet>& positives,
    num::Rng& rng) {
    if (positives.empty()) throw ConfigError("no positive triplets to corrupt");
    if (g.node_count() < 2 || g.relation_count() < 1)
        throw ConfigError("graph too small for negative sampling");
    constexpr int kRetriesPerSlot = 200;
    std::vector<TripletSample> out;
    out.reserve(positives.size());
    for (const auto& p : positives) {
        bool placed = false;
        // The slot is drawn once; only the replacement is resampled. A slot
        // with no usable alternative (it can happen with few relations)
        // exhausts its retries and hands over to the next slot.
        int first_slot = static_cast<int>(rng.below(3));
        for (int off = 0; off < 3 && !placed; ++off) {
            int slot = (first_slot + off) % 3;
            for (int attempt = 0; attempt < kRetriesPerSlot; ++attempt) {
                kg::Triplet cand = p;
                if (slot == 0)
                    cand.head = static_cast<int>(rng.below(g.node_count()));
                else if (slot == 1)
                    cand.rel = static_cast<int>(rng.below(g.relation_count()));
                else
                    cand.tail = static_cast<int>(rng.below(g.node_count()));
                if (g.contains(cand.head, cand.rel, cand.tail)) continue;
                out.push_back({cand.head, cand.rel, cand.tail, 0.0});
                placed = true;
                break;
            }
        }
        if (!placed)
            throw SamplingError(
                "could not corrupt a triplet into a negative; graph too dense");
    }
    return out;
}

namespace {

int positive_count(const std::vector<TripletSample>& samples) {
    int pos = 0;
    for (const auto& s : samples)
        if (s.label == 1.0) ++pos;
    if (samples.empty()) throw ConfigError("empty sample batch");
    if (pos == 0) throw ConfigError("sample batch has no positives");
    return pos;
}

}  // namespace

double link_prediction_loss(const Autoencoder& model,
                            const num::Matrix& embeddings,
                            const std::vector<TripletSample>& samples) {
    int pos = positive_count(samples);
    const double eps = 1e-12;
    double sum = 0.0;
    for (const auto& s : samples) {
        double score = distmult_score(
            model, {embeddings.row(s.head), static_cast<std::size_t>(embeddings.cols())},
            s.rel,
            {embeddings.row(s.tail), static_cast<std::size_t>(embeddings.cols())});
        double p = std::min(std::max(score, eps), 1.0 - eps);
        sum -= s.label * std::log(p) + (1.0 - s.label) * std::log(1.0 - p);
    }
    return sum / (2.0 * pos);
}

num::Var build_link_loss(num::Tape& tape, const Autoencoder& model,
                         num::Var embeddings,
                         const std::vector<TripletSample>& samples) {
    int pos = positive_count(samples);
    int b = static_cast<int>(samples.size());
    std::vector<int> heads, tails, rels;
    heads.reserve(b);
    tails.reserve(b);
    rels.reserve(b);
    num::Matrix targets(b, 1);
    for (int i = 0; i < b; ++i) {
        heads.push_back(samples[i].head);
        tails.push_back(samples[i].tail);
        rels.push_back(samples[i].rel);
        targets(i, 0) = samples[i].label;
    }
    auto hh = tape.gather_rows(embeddings, std::move(heads));
    auto ht = tape.gather_rows(embeddings, std::move(tails));
    auto dec = tape.gather_rows(tape.param(model.params(), model.idx_decoder()),
                                std::move(rels));
    auto logits = tape.row_sum(tape.hadamard(tape.hadamard(hh, ht), dec));
    auto probs = tape.sigmoid(logits);
    return tape.binary_cross_entropy(probs, std::move(targets),
                                     1.0 / (2.0 * pos));
}

PretrainResult pretrain(const kg::MultiRelGraph& g, const PretrainConfig& cfg) {
    if (g.empty()) throw ConfigError("cannot pretrain on an empty graph");
    if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (cfg.batch_positives <= 0) throw ConfigError("batch size must be positive");

    num::Rng root(cfg.seed);
    auto init_rng = root.child(0);
    auto shuffle_rng = root.child(1);
    auto neg_rng = root.child(2);

    auto model =
        Autoencoder::from_graph(g, cfg.dims, cfg.freeze_node_init, init_rng);
    num::AdamConfig opt_cfg;
    opt_cfg.lr = cfg.lr;
    num::Adam opt(model.params(), opt_cfg);

    std::vector<int> all_rows(g.node_count());
    std::iota(all_rows.begin(), all_rows.end(), 0);
    const auto& edges = g.triplets();
    std::vector<int> order(edges.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> trace;
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += cfg.batch_positives) {
            std::size_t stop =
                std::min(order.size(), start + cfg.batch_positives);
            std::vector<kg::Triplet> batch;
            batch.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i)
                batch.push_back(edges[order[i]]);
            auto negs = sample_negatives(g, batch, neg_rng);

            std::vector<TripletSample> samples;
            samples.reserve(2 * batch.size());
            for (const auto& t : batch)
                samples.push_back({t.head, t.rel, t.tail, 1.0});
            samples.insert(samples.end(), negs.begin(), negs.end());

            num::Tape tape;
            auto h = build_encode(tape, model, all_rows, edges);
            auto loss = build_link_loss(tape, model, h, samples);
            double lv = tape.scalar_value(loss);
            if (!std::isfinite(lv))
                throw TrainingError("link loss diverged at epoch " +
                                    std::to_string(epoch));
            tape.backward(loss);
            auto grads = tape.param_grads(model.params());
            if (cfg.freeze_node_init) grads[model.idx_node_init()].fill(0.0);
            opt.step(model.params(), grads);
            epoch_sum += lv;
            ++batches;
        }
        double mean = epoch_sum / batches;
        trace.push_back(mean);
        if (mean < best - 1e-6) {
            best = mean;
            since_best = 0;
        } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
            break;
        }
    }
    return {std::move(model), std::move(trace)};
}

double rank_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    if (pos.empty() || neg.empty())
        throw ConfigError("rank_auc needs scores on both sides");
    double correct = 0.0;
    for (double p : pos)
        for (double n : neg) {
            if (p > n)
                correct += 1.0;
            else if (p == n)
                correct += 0.5;
        }
    return correct / (static_cast<double>(pos.size()) * neg.size());
}

double heldout_auc(const kg::MultiRelGraph& g, const Autoencoder& model,
                   const AucConfig& cfg) {
    if (g.empty()) throw ConfigError("cannot evaluate on an empty graph");
    if (cfg.holdout_frac <= 0.0 || cfg.holdout_frac >= 1.0)
        throw ConfigError("holdout fraction must lie in (0,1)");
    if (cfg.neg_per_pos <= 0) throw ConfigError("neg_per_pos must be positive");

    // Graph ids must be the model's row ids, so corruption checks and
    // scoring share one id space.
    for (int i = 0; i < g.node_count(); ++i)
        if (model.node_row(g.node_name(i)) != i)
            throw ConfigError("graph and model node tables are not aligned");
    for (int r = 0; r < g.relation_count(); ++r)
        if (model.relation_index(g.relation_name(r)) != r)
            throw ConfigError("graph and model relation tables are not aligned");
    const auto& all = g.triplets();

    num::Rng rng(cfg.seed);
    std::vector<int> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::size_t n_hold = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(cfg.holdout_frac * static_cast<double>(all.size()))));
    n_hold = std::min(n_hold, all.size());

    std::vector<kg::Triplet> held, message;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_hold ? held : message).push_back(all[order[i]]);

    std::vector<int> rows(model.node_count());
    std::iota(rows.begin(), rows.end(), 0);
    auto emb = encode_rows(model, rows, message);
    auto score_of = [&](const kg::Triplet& t) {
        return distmult_score(
            model, {emb.row(t.head), static_cast<std::size_t>(emb.cols())},
            t.rel, {emb.row(t.tail), static_cast<std::size_t>(emb.cols())});
    };

    std::vector<double> pos_scores, neg_scores;
    for (const auto& t : held) pos_scores.push_back(score_of(t));
    for (int k = 0; k < cfg.neg_per_pos; ++k)
        for (const auto& s : sample_negatives(g, held, rng))
            neg_scores.push_back(score_of({s.head, s.rel, s.tail}));
    return rank_auc(pos_scores, neg_scores);
}

}  // namespace kgda::rgcn
