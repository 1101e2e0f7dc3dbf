#pragma once

// End-to-end flows shared by the CLI and the acceptance suite: training a
// model from instances, the ablation comparison, and the frozen-random-
// encoder baseline.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "intersent/corpus.hpp"
#include "intersent/eval.hpp"
#include "intersent/run_config.hpp"
#include "intersent/training.hpp"

namespace intersent {

using StepCallback = std::function<void(int, const StepStats&)>;

inline Vocab build_corpus_vocab(const std::vector<Instance>& instances) {
    std::vector<std::string> texts;
    for (const auto& inst : instances) {
        for (const auto& s : inst.inputs) texts.push_back(s);
        texts.push_back(inst.target);
    }
    return Vocab::build(texts);
}

template <class S = float>
Model<S> train_model(const std::vector<Instance>& instances, const Vocab& vocab,
                     RunConfig cfg, std::vector<StepStats>* history = nullptr,
                     const StepCallback& on_step = {}) {
    cfg.model.vocab = vocab.size();
    Model<S> model(cfg.model, cfg.train.seed);
    Trainer<S> trainer(model, cfg.train);
    auto h = trainer.train(instances, vocab, on_step);
    if (history) *history = std::move(h);
    return model;
}

/// Frozen-random-encoder baseline: a randomly initialized encoder is frozen
/// and only the operator networks and decoder are trained, with the
/// generative objective.
template <class S = float>
Model<S> train_frozen_baseline(const std::vector<Instance>& instances,
                               const Vocab& vocab, RunConfig cfg,
                               std::vector<StepStats>* history = nullptr,
                               const StepCallback& on_step = {}) {
    cfg.train.freeze_encoder = true;
    cfg.train.mode = TrainMode::GenerativeOnly;
    return train_model<S>(instances, vocab, cfg, history, on_step);
}

struct AblateRow {
    TrainMode mode = TrainMode::Joint;
    std::optional<GenReport> generation;  // absent for CONTRASTIVE_ONLY
    double sts_rho = 0;
};

struct AblateReport {
    std::vector<AblateRow> rows;

    const AblateRow* row(TrainMode mode) const {
        for (const auto& r : rows) {
            if (r.mode == mode) return &r;
        }
        return nullptr;
    }
};

/// Trains JOINT, GENERATIVE_ONLY and CONTRASTIVE_ONLY under identical seeds
/// and configs; generation metrics are reported for the first two only (a
/// contrastive-only decoder is never aligned to produce meaningful output).
template <class S = float>
AblateReport ablate(const std::vector<Instance>& train_instances,
                    const std::vector<Instance>& test_instances,
                    const std::vector<StsPair>& sts_pairs, const Vocab& vocab,
                    const RunConfig& base, int gen_limit = 0,
                    const std::function<void(TrainMode)>& on_mode = {}) {
    AblateReport report;
    for (TrainMode mode : {TrainMode::Joint, TrainMode::GenerativeOnly,
                           TrainMode::ContrastiveOnly}) {
        if (on_mode) on_mode(mode);
        RunConfig cfg = base;
        cfg.train.mode = mode;
        Model<S> model = train_model<S>(train_instances, vocab, cfg);
        AblateRow row;
        row.mode = mode;
        if (mode != TrainMode::ContrastiveOnly) {
            row.generation = eval_generation(model, vocab, test_instances, gen_limit);
        }
        row.sts_rho = eval_sts(model, vocab, sts_pairs);
        report.rows.push_back(std::move(row));
    }
    return report;
}

inline std::string format_ablate_report(const AblateReport& report) {
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-18s %10s %10s %10s\n", "mode", "gen R-1",
                  "gen R-L", "STS rho");
    out += buf;
    for (const auto& r : report.rows) {
        if (r.generation) {
            std::snprintf(buf, sizeof buf, "%-18s %10.4f %10.4f %10.4f\n",
                          RunConfig::mode_name(r.mode).c_str(),
                          r.generation->avg_rouge1(), r.generation->avg_rouge_l(),
                          r.sts_rho);
        } else {
            std::snprintf(buf, sizeof buf, "%-18s %10s %10s %10.4f\n",
                          RunConfig::mode_name(r.mode).c_str(), "-", "-", r.sts_rho);
        }
        out += buf;
    }
    return out;
}

inline std::string history_csv(const std::vector<StepStats>& history) {
    std::string out = "step,L_con,L_gen,L_total,lr_mult\n";
    char buf[160];
    for (std::size_t i = 0; i < history.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f\n", i, history[i].l_con,
                      history[i].l_gen, history[i].l_total, history[i].lr_mult);
        out += buf;
    }
    return out;
}

}  // namespace intersent
