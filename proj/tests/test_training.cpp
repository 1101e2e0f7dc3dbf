#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <set>

#include "intersent/pipeline.hpp"
#include "intersent/training.hpp"

using namespace intersent;

namespace {

std::vector<Instance> small_corpus(int per_task, std::uint64_t seed = 1) {
    CorpusConfig cfg;
    cfg.instances_per_task = per_task;
    cfg.seed = seed;
    return generate_corpus(cfg).train;
}

ModelConfig tiny_model_config(int vocab) {
    ModelConfig cfg;
    cfg.d = 16;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.vocab = vocab;
    cfg.dropout = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("build_batches: counts, determinism, epoch coverage") {
    const auto instances = small_corpus(1000);
    const Vocab vocab = build_corpus_vocab(instances);
    REQUIRE(instances.size() == 4000u);

    const auto batches = build_batches(instances, vocab, 64, 42);
    CHECK(batches.size() == 62u);  // floor(4000 / 64), final partial dropped
    for (const auto& b : batches) CHECK(b.items.size() == 64u);

    const auto again = build_batches(instances, vocab, 64, 42);
    for (std::size_t b = 0; b < batches.size(); ++b) {
        for (std::size_t k = 0; k < 64; ++k) {
            REQUIRE(batches[b].items[k].index == again[b].items[k].index);
        }
    }
    const auto other = build_batches(instances, vocab, 64, 43);
    bool same_order = true;
    for (std::size_t b = 0; b < batches.size() && same_order; ++b) {
        for (std::size_t k = 0; k < 64; ++k) {
            same_order = same_order && batches[b].items[k].index == other[b].items[k].index;
        }
    }
    CHECK_FALSE(same_order);

    // every instance appears at most once; batches mix op kinds
    std::set<std::size_t> seen;
    int mixed = 0;
    for (const auto& b : batches) {
        std::set<OpKind> ops;
        for (const auto& item : b.items) {
            CHECK(seen.insert(item.index).second);
            ops.insert(item.op);
        }
        if (ops.size() > 1) ++mixed;
    }
    CHECK(mixed == static_cast<int>(batches.size()));
}

TEST_CASE("build_batches: errors") {
    const auto instances = small_corpus(20);
    const Vocab vocab = build_corpus_vocab(instances);
    CHECK_THROWS_AS(build_batches(instances, vocab, 100000, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_batches({}, vocab, 4, 1), std::invalid_argument);
}

TEST_CASE("lr_schedule: linear warmup then linear decay") {
    const int total = 1000;
    const double frac = 0.05;  // warmup = 50 steps
    CHECK(lr_schedule(0, total, frac) == Catch::Approx(1.0 / 50));
    CHECK(lr_schedule(49, total, frac) == Catch::Approx(1.0));
    CHECK(lr_schedule(50, total, frac) == Catch::Approx(950.0 / 950));
    CHECK(lr_schedule(525, total, frac) == Catch::Approx(0.5));
    CHECK(lr_schedule(999, total, frac) == Catch::Approx(1.0 / 950));
    for (int s = 1; s < 50; ++s) {
        CHECK(lr_schedule(s, total, frac) > lr_schedule(s - 1, total, frac));
    }
    for (int s = 51; s < total; ++s) {
        CHECK(lr_schedule(s, total, frac) < lr_schedule(s - 1, total, frac));
    }
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    cfg.tau = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.alpha = -1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.batch = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.lr_decoder = 5e-4;
    CHECK(cfg.group_lr(ParamGroup::Decoder) == 5e-4);
    CHECK(cfg.group_lr(ParamGroup::Encoder) == cfg.lr);
}

TEST_CASE("loss history has epochs x batches entries and finite losses") {
    const auto instances = small_corpus(24);
    const Vocab vocab = build_corpus_vocab(instances);
    RunConfig cfg;
    cfg.model = tiny_model_config(vocab.size());
    cfg.train.batch = 8;
    cfg.train.epochs = 2;
    cfg.train.seed = 3;
    std::vector<StepStats> history;
    train_model<float>(instances, vocab, cfg, &history);
    CHECK(history.size() == 2u * (96u / 8u));
    for (const auto& s : history) {
        CHECK(std::isfinite(s.l_total));
        CHECK(s.l_con >= 0.0);
        CHECK(s.l_gen >= 0.0);
        CHECK(s.lr_mult > 0.0);
    }
}

TEST_CASE("CONTRASTIVE_ONLY leaves all decoder parameters bit-identical") {
    const auto instances = small_corpus(24);
    const Vocab vocab = build_corpus_vocab(instances);
    RunConfig cfg;
    cfg.model = tiny_model_config(vocab.size());
    cfg.train.batch = 8;
    cfg.train.epochs = 1;
    cfg.train.seed = 4;
    cfg.train.mode = TrainMode::ContrastiveOnly;

    const Model<float> fresh(cfg.model, cfg.train.seed);
    const Model<float> trained = train_model<float>(instances, vocab, cfg);
    bool encoder_changed = false;
    for (std::size_t i = 0; i < trained.params.count(); ++i) {
        if (trained.params.groups[i] == ParamGroup::Decoder) {
            REQUIRE(trained.params.tensors[i] == fresh.params.tensors[i]);
        } else if (trained.params.groups[i] == ParamGroup::Encoder) {
            encoder_changed =
                encoder_changed || trained.params.tensors[i] != fresh.params.tensors[i];
        }
    }
    CHECK(encoder_changed);
}

TEST_CASE("freeze_encoder leaves all encoder parameters bit-identical") {
    const auto instances = small_corpus(24);
    const Vocab vocab = build_corpus_vocab(instances);
    RunConfig cfg;
    cfg.model = tiny_model_config(vocab.size());
    cfg.train.batch = 8;
    cfg.train.epochs = 1;
    cfg.train.seed = 5;

    const Model<float> fresh(cfg.model, cfg.train.seed);
    const Model<float> trained = train_frozen_baseline<float>(instances, vocab, cfg);
    bool decoder_changed = false;
    for (std::size_t i = 0; i < trained.params.count(); ++i) {
        if (trained.params.groups[i] == ParamGroup::Encoder) {
            REQUIRE(trained.params.tensors[i] == fresh.params.tensors[i]);
        } else if (trained.params.groups[i] == ParamGroup::Decoder) {
            decoder_changed =
                decoder_changed || trained.params.tensors[i] != fresh.params.tensors[i];
        }
    }
    CHECK(decoder_changed);
}

TEST_CASE("JOINT with alpha=0 and CONTRASTIVE_ONLY produce bit-equal first-step "
          "gradients") {
    const auto instances = small_corpus(16);
    const Vocab vocab = build_corpus_vocab(instances);
    const ModelConfig mc = tiny_model_config(vocab.size());
    const auto batch = build_batches(instances, vocab, 8, 7)[0];

    auto grads_for = [&](TrainMode mode, double alpha) {
        Model<float> model(mc, 11);
        TrainConfig tc;
        tc.batch = 8;
        tc.mode = mode;
        tc.alpha = alpha;
        tc.seed = 11;
        Trainer<float> trainer(model, tc);
        trainer.step(batch, 0, 1, /*apply_update=*/false);
        return trainer.last_grads();
    };
    const auto joint = grads_for(TrainMode::Joint, 0.0);
    const auto con = grads_for(TrainMode::ContrastiveOnly, 0.0);
    REQUIRE(joint.size() == con.size());
    for (std::size_t i = 0; i < joint.size(); ++i) {
        REQUIRE(joint[i] == con[i]);
    }
}

TEST_CASE("GENERATIVE_ONLY training reduces L_gen on a tiny set") {
    CorpusConfig ccfg;
    ccfg.instances_per_task = 32;
    ccfg.seed = 2;
    auto all = generate_corpus(ccfg).train;
    std::vector<Instance> recon;
    for (const auto& inst : all) {
        if (inst.op == OpKind::Reconstruction) recon.push_back(inst);
    }
    const Vocab vocab = build_corpus_vocab(recon);
    RunConfig cfg;
    cfg.model = tiny_model_config(vocab.size());
    cfg.train.batch = 8;
    cfg.train.epochs = 15;
    cfg.train.mode = TrainMode::GenerativeOnly;
    cfg.train.lr = 1e-3;
    cfg.train.seed = 6;
    std::vector<StepStats> history;
    train_model<float>(recon, vocab, cfg, &history);
    REQUIRE(history.size() >= 20u);
    auto mean_gen = [&](std::size_t from, std::size_t to) {
        double s = 0;
        for (std::size_t i = from; i < to; ++i) s += history[i].l_gen;
        return s / (to - from);
    };
    CHECK(mean_gen(history.size() - 4, history.size()) < mean_gen(0, 4));
}

TEST_CASE("gradcheck on a tiny configuration passes") {
    const GradCheckReport report = gradcheck(/*min_samples=*/50, /*seed=*/1);
    INFO("max_rel_err=" << report.max_rel_err);
    for (const auto& f : report.failed) INFO(f);
    CHECK(report.checked >= 50);
    CHECK(report.failures == 0);
}
