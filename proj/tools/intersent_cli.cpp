// Command-line entry point: corpus generation, training, evaluation,
// ablations, operator composition, and gradient verification.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "intersent/corpus.hpp"
#include "intersent/eval.hpp"
#include "intersent/metrics.hpp"
#include "intersent/model.hpp"
#include "intersent/pipeline.hpp"
#include "intersent/run_config.hpp"
#include "intersent/tokenizer.hpp"
#include "intersent/training.hpp"

namespace {

namespace fs = std::filesystem;
using namespace intersent;

int g_verbosity = 1;  // 0 quiet, 1 normal, 2 verbose

void log_line(const std::string& msg) {
    if (g_verbosity >= 1) std::cerr << msg << "\n";
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

struct TrainFlags {
    std::string corpus_dir, config_file, out_path, vocab_path, history_path;
    RunConfig cfg;
    std::map<std::string, std::string> overrides;
};

void add_config_overrides(CLI::App* cmd, std::map<std::string, std::string>& overrides) {
    // Every run-config key is exposed as --key VALUE; flags override the file.
    for (const char* key :
         {"d", "layers", "heads", "ffn", "op_hidden", "bottleneck", "max_len",
          "dropout", "identity_reconstruction", "batch", "tau", "alpha", "lr",
          "lr_encoder", "lr_decoder", "lr_operator", "epochs", "warmup_frac",
          "weight_decay", "seed", "mode", "freeze_encoder"}) {
        cmd->add_option_function<std::string>(
            std::string("--") + key,
            [&overrides, key](const std::string& v) { overrides[key] = v; });
    }
}

RunConfig resolve_config(const std::string& config_file,
                         const std::map<std::string, std::string>& overrides) {
    RunConfig cfg;
    if (!config_file.empty()) cfg.load_file(config_file);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    return cfg;
}

StepCallback progress_logger(const std::string& label) {
    return [label](int step, const StepStats& s) {
        if (g_verbosity >= 2 || (g_verbosity >= 1 && step % 100 == 0)) {
            std::fprintf(stderr, "[%s] step %d L_con=%.4f L_gen=%.4f L_total=%.4f\n",
                         label.c_str(), step, s.l_con, s.l_gen, s.l_total);
        }
    };
}

int run(int argc, char** argv) {
    CLI::App app{"interpretable sentence-embedding workbench"};
    app.require_subcommand(1);
    app.fallthrough();
    bool quiet = false, verbose = false;
    app.add_flag("--quiet", quiet, "suppress progress logging");
    app.add_flag("--verbose", verbose, "log every training step");

    // gen-corpus
    auto* gen = app.add_subcommand("gen-corpus", "generate the synthetic corpus");
    std::string gen_out;
    CorpusConfig ccfg;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--seed", ccfg.seed);
    gen->add_option("--subjects", ccfg.subjects);
    gen->add_option("--verbs", ccfg.verbs);
    gen->add_option("--objects", ccfg.objects);
    gen->add_option("--per-task", ccfg.instances_per_task);
    gen->add_option("--holdout", ccfg.holdout_fraction);

    // train
    auto* train = app.add_subcommand("train", "train a model on a corpus directory");
    TrainFlags tf;
    train->add_option("--corpus", tf.corpus_dir, "corpus directory")->required();
    train->add_option("--config", tf.config_file, "key=value config file");
    train->add_option("--out", tf.out_path, "checkpoint output path")->required();
    train->add_option("--vocab", tf.vocab_path, "vocab output path (default <out>.vocab)");
    train->add_option("--history", tf.history_path, "loss history CSV path");
    add_config_overrides(train, tf.overrides);

    // shared eval flags
    std::string ckpt_path, vocab_path;
    auto add_model_flags = [&](CLI::App* cmd) {
        cmd->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
        cmd->add_option("--vocab", vocab_path, "vocab path")->required();
    };

    auto* eval_gen_cmd = app.add_subcommand("eval-gen", "generation metrics on a test set");
    std::string eval_dir, eval_csv;
    int eval_limit = 0;
    add_model_flags(eval_gen_cmd);
    eval_gen_cmd->add_option("--test", eval_dir, "test instance directory")->required();
    eval_gen_cmd->add_option("--limit", eval_limit, "max instances per task");
    eval_gen_cmd->add_option("--csv", eval_csv, "also write machine-readable CSV");

    auto* eval_sts_cmd = app.add_subcommand("eval-sts", "Spearman rho on graded pairs");
    std::string sts_path;
    add_model_flags(eval_sts_cmd);
    eval_sts_cmd->add_option("--pairs", sts_path, "sts_pairs.tsv path")->required();

    auto* eval_ret_cmd = app.add_subcommand("eval-retrieval", "MRR@k / recall@k");
    std::string ret_path;
    int ret_k = 10;
    add_model_flags(eval_ret_cmd);
    eval_ret_cmd->add_option("--pairs", ret_path, "retrieval.tsv path")->required();
    eval_ret_cmd->add_option("--k", ret_k);

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "joint vs single-objective training");
    std::string ab_corpus, ab_config;
    int ab_limit = 200;
    std::map<std::string, std::string> ab_overrides;
    ablate_cmd->add_option("--corpus", ab_corpus, "corpus directory")->required();
    ablate_cmd->add_option("--config", ab_config, "key=value config file");
    ablate_cmd->add_option("--limit", ab_limit, "max generation instances per task");
    add_config_overrides(ablate_cmd, ab_overrides);

    // compose
    auto* compose_cmd = app.add_subcommand("compose", "evaluate an operator chain");
    std::string expr;
    std::vector<std::string> sent_flags;
    add_model_flags(compose_cmd);
    compose_cmd->add_option("--expr", expr, "expression, e.g. diff(fus(A,B),A)")->required();
    compose_cmd->add_option("--sent", sent_flags, "NAME=\"sentence\" binding")
        ->take_all();

    // gradcheck
    auto* gradcheck_cmd =
        app.add_subcommand("gradcheck", "finite-difference gradient verification");
    int gc_samples = 120;
    std::uint64_t gc_seed = 1;
    gradcheck_cmd->add_option("--samples", gc_samples);
    gradcheck_cmd->add_option("--seed", gc_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 1;
    }
    if (quiet) g_verbosity = 0;
    if (verbose) g_verbosity = 2;

    if (gen->parsed()) {
        Corpus corpus = generate_corpus(ccfg);
        write_corpus(gen_out, corpus);
        log_line("wrote corpus to " + gen_out);
        return 0;
    }

    if (train->parsed()) {
        RunConfig cfg = resolve_config(tf.config_file, tf.overrides);
        auto instances = load_instances_dir(fs::path(tf.corpus_dir) / "train");
        Vocab vocab = build_corpus_vocab(instances);
        std::vector<StepStats> history;
        Model<float> model =
            cfg.train.freeze_encoder
                ? train_frozen_baseline<float>(instances, vocab, cfg, &history,
                                               progress_logger("frozen"))
                : train_model<float>(instances, vocab, cfg, &history,
                                     progress_logger(RunConfig::mode_name(cfg.train.mode)));
        model.save(tf.out_path);
        const std::string vpath =
            tf.vocab_path.empty() ? tf.out_path + ".vocab" : tf.vocab_path;
        vocab.save(vpath);
        if (!tf.history_path.empty()) {
            write_text_file(tf.history_path, history_csv(history));
        }
        log_line("saved checkpoint to " + tf.out_path + " (vocab: " + vpath + ")");
        return 0;
    }

    if (eval_gen_cmd->parsed()) {
        Model<float> model = Model<float>::load(ckpt_path);
        Vocab vocab = Vocab::load(vocab_path);
        auto instances = load_instances_dir(eval_dir);
        GenReport report = eval_generation(model, vocab, instances, eval_limit);
        std::cout << format_gen_report(report);
        if (!eval_csv.empty()) write_text_file(eval_csv, gen_report_csv(report));
        return 0;
    }

    if (eval_sts_cmd->parsed()) {
        Model<float> model = Model<float>::load(ckpt_path);
        Vocab vocab = Vocab::load(vocab_path);
        const double rho = eval_sts(model, vocab, load_sts_tsv(sts_path));
        std::printf("spearman_rho %.6f\n", rho);
        return 0;
    }

    if (eval_ret_cmd->parsed()) {
        Model<float> model = Model<float>::load(ckpt_path);
        Vocab vocab = Vocab::load(vocab_path);
        RetrievalReport r = eval_retrieval(model, vocab, load_retrieval_tsv(ret_path), ret_k);
        std::printf("mrr@%d %.6f\nrecall@%d %.6f\n", r.k, r.mrr, r.k, r.recall);
        return 0;
    }

    if (ablate_cmd->parsed()) {
        RunConfig cfg = resolve_config(ab_config, ab_overrides);
        auto train_set = load_instances_dir(fs::path(ab_corpus) / "train");
        auto test_set = load_instances_dir(fs::path(ab_corpus) / "test");
        auto sts_pairs = load_sts_tsv(fs::path(ab_corpus) / "sts_pairs.tsv");
        Vocab vocab = build_corpus_vocab(train_set);
        AblateReport report =
            ablate<float>(train_set, test_set, sts_pairs, vocab, cfg, ab_limit,
                          [](TrainMode mode) {
                              log_line("training " + RunConfig::mode_name(mode));
                          });
        std::cout << format_ablate_report(report);
        return 0;
    }

    if (compose_cmd->parsed()) {
        Model<float> model = Model<float>::load(ckpt_path);
        Vocab vocab = Vocab::load(vocab_path);
        std::map<std::string, std::string> sentences;
        for (const auto& binding : sent_flags) {
            const std::size_t eq = binding.find('=');
            if (eq == std::string::npos) {
                throw CLI::ValidationError("--sent", "expected NAME=\"sentence\"");
            }
            sentences[binding.substr(0, eq)] = binding.substr(eq + 1);
        }
        std::cout << compose(model, vocab, expr, sentences).text << "\n";
        return 0;
    }

    if (gradcheck_cmd->parsed()) {
        GradCheckReport report = gradcheck(gc_samples, gc_seed);
        std::printf("gradcheck checked=%d failures=%d max_rel_err=%.3e\n", report.checked,
                    report.failures, report.max_rel_err);
        for (const auto& f : report.failed) std::cerr << "  FAIL " << f << "\n";
        return report.failures == 0 ? 0 : 2;
    }

    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
