#pragma once

// Joint contrastive + generative optimization: batch construction over the
// mixed task streams, AdamW with linear warmup/decay, the train step, and
// finite-difference gradient verification.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "intersent/corpus.hpp"
#include "intersent/losses.hpp"
#include "intersent/model.hpp"
#include "intersent/tokenizer.hpp"

namespace intersent {

struct TrainConfig {
    int batch = 64;
    double tau = 0.05;
    double alpha = 0.01;
    double lr = 3e-4;          // shared default for all groups
    double lr_encoder = -1;    // per-group overrides when >= 0
    double lr_decoder = -1;
    double lr_operator = -1;
    int epochs = 5;
    double warmup_frac = 0.05;
    double weight_decay = 0.01;
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::Joint;
    bool freeze_encoder = false;
    int log_every = 10;

    void validate() const {
        if (tau <= 0) throw std::invalid_argument("tau must be > 0");
        if (alpha < 0) throw std::invalid_argument("alpha must be >= 0");
        if (batch < 1) throw std::invalid_argument("batch size must be >= 1");
        if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    }
    double group_lr(ParamGroup g) const {
        switch (g) {
            case ParamGroup::Encoder: return lr_encoder >= 0 ? lr_encoder : lr;
            case ParamGroup::Decoder: return lr_decoder >= 0 ? lr_decoder : lr;
            case ParamGroup::Operator: return lr_operator >= 0 ? lr_operator : lr;
        }
        return lr;
    }
};

struct BatchItem {
    OpKind op = OpKind::Fusion;
    std::vector<TokenSeq> enc_inputs;
    TokenSeq enc_target;  // target sentence through the encoder (v+)
    TokenSeq dec_target;  // target sentence as decoder token stream
    std::size_t index = 0;
};

struct Batch {
    std::vector<BatchItem> items;
};

inline BatchItem make_batch_item(const Instance& inst, const Vocab& vocab, int max_len,
                                 std::size_t index) {
    BatchItem item;
    item.op = inst.op;
    item.index = index;
    for (const auto& text : inst.inputs) {
        item.enc_inputs.push_back(encode_text(vocab, text, Role::EncoderInput, max_len));
    }
    item.enc_target = encode_text(vocab, inst.target, Role::EncoderInput, max_len);
    item.dec_target = encode_text(vocab, inst.target, Role::DecoderTarget, max_len);
    return item;
}

/// All task streams shuffled together into mixed batches; deterministic given
/// the seed; the final partial batch is dropped.
inline std::vector<Batch> build_batches(const std::vector<Instance>& instances,
                                        const Vocab& vocab, int n, std::uint64_t seed,
                                        int max_len = kDefaultMaxLen) {
    if (instances.empty()) throw std::invalid_argument("build_batches: no instances");
    if (n > static_cast<int>(instances.size())) {
        throw std::invalid_argument("build_batches: batch size exceeds dataset size");
    }
    std::vector<std::size_t> order(instances.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::swap(order[i], order[detail::rand_below(rng, i + 1)]);
    }
    std::vector<Batch> batches(instances.size() / n);
    for (std::size_t b = 0; b < batches.size(); ++b) {
        for (int k = 0; k < n; ++k) {
            const std::size_t idx = order[b * n + k];
            batches[b].items.push_back(
                make_batch_item(instances[idx], vocab, max_len, idx));
        }
    }
    return batches;
}

/// Linear warmup over the first warmup_frac of steps, then linear decay.
inline double lr_schedule(int step, int total_steps, double warmup_frac) {
    const int warmup = std::max(1, static_cast<int>(total_steps * warmup_frac));
    if (step < warmup) return static_cast<double>(step + 1) / warmup;
    if (total_steps <= warmup) return 1.0;
    return static_cast<double>(total_steps - step) / (total_steps - warmup);
}

/// Adam with decoupled weight decay. Decay is applied only to matrices
/// (1-row tensors are biases and layer-norm parameters).
template <class S>
class AdamW {
public:
    AdamW(const ParamStore<S>& params, double beta1 = 0.9, double beta2 = 0.999,
          double eps = 1e-8, double weight_decay = 0.01)
        : beta1_(beta1), beta2_(beta2), eps_(eps), wd_(weight_decay) {
        m_ = params.zero_grads();
        v_ = params.zero_grads();
    }

    void step(ParamStore<S>& params, const std::vector<Mat<S>>& grads,
              const std::function<double(ParamGroup)>& group_lr) {
        ++t_;
        const S b1 = static_cast<S>(beta1_), b2 = static_cast<S>(beta2_);
        const S bc1 = static_cast<S>(1.0 - std::pow(beta1_, t_));
        const S bc2 = static_cast<S>(1.0 - std::pow(beta2_, t_));
        const S eps = static_cast<S>(eps_);
        for (std::size_t i = 0; i < params.count(); ++i) {
            const double lr = group_lr(params.groups[i]);
            if (lr <= 0) continue;  // frozen group
            auto& w = params.tensors[i];
            const auto& g = grads[i];
            m_[i] = b1 * m_[i] + (S(1) - b1) * g;
            v_[i] = (b2 * v_[i].array() + (S(1) - b2) * g.array().square()).matrix();
            const auto mhat = m_[i].array() / bc1;
            const auto vhat = v_[i].array() / bc2;
            w.array() -= static_cast<S>(lr) * mhat / (vhat.sqrt() + eps);
            if (w.rows() > 1 && wd_ > 0) {
                w *= static_cast<S>(1.0 - lr * wd_);
            }
        }
    }

private:
    std::vector<Mat<S>> m_, v_;
    double beta1_, beta2_, eps_, wd_;
    long t_ = 0;
};

struct StepStats {
    double l_con = 0, l_gen = 0, l_total = 0, lr_mult = 0;
};

template <class S>
class Trainer {
public:
    Trainer(Model<S>& model, const TrainConfig& cfg)
        : model_(model),
          cfg_(cfg),
          opt_(model.params, 0.9, 0.999, 1e-8, cfg.weight_decay),
          grads_(model.params.zero_grads()) {
        cfg_.validate();
    }

    const std::vector<Mat<S>>& last_grads() const { return grads_; }

    /// One optimization step over a mixed-task batch. Gradients flow through
    /// both encoder branches (inputs and target); the decoder is conditioned
    /// on the operator output embedding.
    StepStats step(const Batch& batch, int step_idx, int total_steps,
                   bool apply_update = true) {
        const int n = static_cast<int>(batch.items.size());
        for (auto& g : grads_) g.setZero();

        const bool want_contrastive = cfg_.mode != TrainMode::GenerativeOnly;
        const bool want_generative = cfg_.mode != TrainMode::ContrastiveOnly;
        const bool seed_generative =
            cfg_.mode == TrainMode::GenerativeOnly ||
            (cfg_.mode == TrainMode::Joint && cfg_.alpha > 0);

        std::vector<std::unique_ptr<Tape<S>>> tapes;
        std::vector<typename Tape<S>::Node*> out_nodes(n, nullptr);
        std::vector<typename Tape<S>::Node*> tgt_nodes(n, nullptr);
        std::vector<typename Tape<S>::Node*> gen_nodes(n, nullptr);
        std::vector<std::mt19937_64> rngs;
        rngs.reserve(n);

        double l_gen_sum = 0;
        for (int i = 0; i < n; ++i) {
            const auto& item = batch.items[i];
            tapes.push_back(std::make_unique<Tape<S>>(&grads_));
            Tape<S>& tape = *tapes.back();
            rngs.emplace_back(dropout_seed(step_idx, item.index));
            DropoutCtx<S> drop{static_cast<S>(model_.cfg.dropout), &rngs.back()};

            std::vector<typename Tape<S>::Node*> input_embs;
            for (const auto& tokens : item.enc_inputs) {
                input_embs.push_back(&encode_maybe_frozen(tape, tokens, drop));
            }
            out_nodes[i] = &model_.apply_operator(tape, item.op, input_embs, drop);
            if (!out_nodes[i]->v().allFinite()) {
                throw std::runtime_error("non-finite embedding at step " +
                                         std::to_string(step_idx));
            }
            if (want_contrastive) {
                tgt_nodes[i] = &encode_maybe_frozen(tape, item.enc_target, drop);
            }
            if (want_generative) {
                auto& logits =
                    model_.decode_teacher_forced(tape, *out_nodes[i], item.dec_target, drop);
                std::vector<int> predict(item.dec_target.ids.begin() + 1,
                                         item.dec_target.ids.end());
                gen_nodes[i] = &tape.cross_entropy_mean(logits, predict);
                l_gen_sum += static_cast<double>(gen_nodes[i]->v()(0, 0));
            }
        }

        StepStats stats;
        stats.l_gen = want_generative ? l_gen_sum / n : 0.0;
        if (want_contrastive) {
            Mat<S> v(n, model_.cfg.d), vp(n, model_.cfg.d);
            for (int i = 0; i < n; ++i) {
                v.row(i) = out_nodes[i]->v().row(0);
                vp.row(i) = tgt_nodes[i]->v().row(0);
            }
            auto con = contrastive_loss(v, vp, cfg_.tau);
            stats.l_con = con.loss;
            for (int i = 0; i < n; ++i) {
                out_nodes[i]->grad.row(0) += con.d_outputs.row(i);
                tgt_nodes[i]->grad.row(0) += con.d_targets.row(i);
            }
        }
        stats.l_total = combined_loss(stats.l_con, stats.l_gen, cfg_.alpha, cfg_.mode);
        if (!std::isfinite(stats.l_total)) {
            throw std::runtime_error("non-finite loss at step " + std::to_string(step_idx) +
                                     " (L_con=" + std::to_string(stats.l_con) +
                                     ", L_gen=" + std::to_string(stats.l_gen) + ")");
        }

        const S gen_seed = cfg_.mode == TrainMode::GenerativeOnly
                               ? static_cast<S>(1.0 / n)
                               : static_cast<S>(cfg_.alpha / n);
        for (int i = 0; i < n; ++i) {
            if (seed_generative && gen_nodes[i]) gen_nodes[i]->grad(0, 0) = gen_seed;
            tapes[i]->backward();
        }

        stats.lr_mult = lr_schedule(step_idx, total_steps, cfg_.warmup_frac);
        if (apply_update) {
            opt_.step(model_.params, grads_, [&](ParamGroup g) {
                if (g == ParamGroup::Encoder && cfg_.freeze_encoder) return 0.0;
                if (g == ParamGroup::Decoder && cfg_.mode == TrainMode::ContrastiveOnly) {
                    return 0.0;
                }
                return cfg_.group_lr(g) * stats.lr_mult;
            });
        }
        return stats;
    }

    /// epochs x batches-per-epoch steps; returns the per-step loss history.
    std::vector<StepStats> train(const std::vector<Instance>& instances,
                                 const Vocab& vocab,
                                 const std::function<void(int, const StepStats&)>& on_step = {},
                                 const std::function<void(int)>& on_epoch = {}) {
        const int per_epoch = static_cast<int>(instances.size()) / cfg_.batch;
        const int total = per_epoch * cfg_.epochs;
        std::vector<StepStats> history;
        history.reserve(total);
        int step_idx = 0;
        for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
            auto batches = build_batches(instances, vocab, cfg_.batch,
                                         cfg_.seed + 0x9e3779b97f4a7c15ULL * epoch,
                                         model_.cfg.max_len);
            for (const auto& batch : batches) {
                StepStats s = step(batch, step_idx, total);
                history.push_back(s);
                if (on_step) on_step(step_idx, s);
                ++step_idx;
            }
            if (on_epoch) on_epoch(epoch);
        }
        return history;
    }

private:
    Model<S>& model_;
    TrainConfig cfg_;
    AdamW<S> opt_;
    std::vector<Mat<S>> grads_;

    // A frozen encoder keeps train-time dropout (freezing fixes the weights,
    // not the regularization) but its output is detached, so no gradient work
    // is spent below the embeddings.
    typename Tape<S>::Node& encode_maybe_frozen(Tape<S>& tape, const TokenSeq& tokens,
                                                DropoutCtx<S> drop) {
        if (cfg_.freeze_encoder) {
            Tape<S> scratch(&grads_);  // forward only; never backward()ed
            return tape.constant(model_.encode(scratch, tokens, drop).v());
        }
        return model_.encode(tape, tokens, drop);
    }

    std::uint64_t dropout_seed(int step_idx, std::size_t instance_index) const {
        std::uint64_t h = cfg_.seed;
        h ^= 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(step_idx);
        h *= 0xff51afd7ed558ccdULL;
        h ^= static_cast<std::uint64_t>(instance_index) + (h >> 33);
        h *= 0xc4ceb9fe1a85ec53ULL;
        return h ^ (h >> 33);
    }
};

// ---------------------------------------------------------------------------
// Gradient verification (central finite differences)
// ---------------------------------------------------------------------------

struct GradCheckReport {
    int checked = 0;
    int failures = 0;
    double max_rel_err = 0;
    std::vector<std::string> failed;
};

namespace detail {

inline std::vector<Instance> gradcheck_instances() {
    const Lexicon lex = Lexicon::make(8, 8, 8);
    auto text = [&](std::vector<Clause> cs, Variant v) { return realize(lex, cs, v); };
    std::vector<Instance> out;
    out.push_back({OpKind::Fusion,
                   {text({{0, 1, 2}}, Variant::Canonical),
                    text({{3, 4, 5}}, Variant::Canonical)},
                   ""});
    out.push_back({OpKind::Difference,
                   {text({{0, 1, 2}, {3, 4, 5}}, Variant::Canonical),
                    text({{0, 1, 2}}, Variant::Canonical)},
                   ""});
    out.push_back({OpKind::Compression,
                   {text({{1, 2, 3}, {4, 5, 6}}, Variant::Canonical)}, ""});
    out.push_back({OpKind::Reconstruction,
                   {text({{2, 3, 4}}, Variant::Paraphrase)}, ""});
    for (auto& inst : out) inst.target = oracle_apply(lex, inst.op, inst.inputs);
    return out;
}

}  // namespace detail

/// Compares analytic gradients of the full combined loss against central
/// finite differences on a d=8, single-layer, batch-of-4 configuration.
/// Runs in double so the h=1e-3 probe is resolvable.
inline GradCheckReport gradcheck(int min_samples = 100, std::uint64_t seed = 1,
                                 double fd_step = 1e-3, double tolerance = 1e-3) {
    const auto instances = detail::gradcheck_instances();
    std::vector<std::string> texts;
    for (const auto& inst : instances) {
        for (const auto& s : inst.inputs) texts.push_back(s);
        texts.push_back(inst.target);
    }
    const Vocab vocab = Vocab::build(texts);

    ModelConfig mc;
    mc.d = 8;
    mc.layers = 1;
    mc.heads = 2;
    mc.vocab = vocab.size();
    mc.dropout = 0.0;  // the probed function must be deterministic
    Model<double> model(mc, seed);

    TrainConfig tc;
    tc.batch = 4;
    tc.tau = 0.05;
    tc.alpha = 0.7;  // keep both loss terms visible in the total
    tc.seed = seed;

    Batch batch;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        batch.items.push_back(make_batch_item(instances[i], vocab, mc.max_len, i));
    }

    Trainer<double> trainer(model, tc);
    const StepStats base = trainer.step(batch, 0, 1, /*apply_update=*/false);
    (void)base;
    const auto analytic = trainer.last_grads();  // copy before reuse

    auto total_loss = [&]() {
        Trainer<double> probe(model, tc);
        const StepStats s = probe.step(batch, 0, 1, /*apply_update=*/false);
        return s.l_total;
    };

    GradCheckReport report;
    std::mt19937_64 rng(seed ^ 0xabcdef);
    const int per_tensor = std::max(
        1, (min_samples + static_cast<int>(model.params.count()) - 1) /
               static_cast<int>(model.params.count()));
    for (std::size_t t = 0; t < model.params.count(); ++t) {
        auto& tensor = model.params.tensors[t];
        for (int s = 0; s < per_tensor; ++s) {
            const int r = static_cast<int>(detail::rand_below(rng, tensor.rows()));
            const int c = static_cast<int>(detail::rand_below(rng, tensor.cols()));
            const double orig = tensor(r, c);
            tensor(r, c) = orig + fd_step;
            const double lp = total_loss();
            tensor(r, c) = orig - fd_step;
            const double lm = total_loss();
            tensor(r, c) = orig;
            const double fd = (lp - lm) / (2 * fd_step);
            const double an = analytic[t](r, c);
            const double denom = std::max(std::abs(an), std::abs(fd));
            const double abs_err = std::abs(an - fd);
            const double rel = denom > 0 ? abs_err / denom : 0.0;
            ++report.checked;
            if (abs_err > 1e-8) {
                report.max_rel_err = std::max(report.max_rel_err, rel);
                if (rel > tolerance) {
                    ++report.failures;
                    report.failed.push_back(
                        model.params.names[t] + "(" + std::to_string(r) + "," +
                        std::to_string(c) + ") analytic=" + std::to_string(an) +
                        " fd=" + std::to_string(fd));
                }
            }
        }
    }
    return report;
}

}  // namespace intersent
