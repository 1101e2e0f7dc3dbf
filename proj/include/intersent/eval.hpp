#pragma once

// Evaluation harnesses: generation/interpretability (ROUGE + exact match),
// graded-similarity correlation, paraphrase retrieval, and embedding-space
// composition of operator chains.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "intersent/corpus.hpp"
#include "intersent/metrics.hpp"
#include "intersent/model.hpp"
#include "intersent/tokenizer.hpp"

namespace intersent {

template <class S>
Mat<S> encode_text_embedding(const Model<S>& model, const Vocab& vocab,
                             const std::string& text) {
    return model.embed_sentence(
        encode_text(vocab, text, Role::EncoderInput, model.cfg.max_len));
}

template <class S>
double cosine(const Mat<S>& a, const Mat<S>& b) {
    const double na = a.template cast<double>().norm();
    const double nb = b.template cast<double>().norm();
    if (na == 0 || nb == 0) throw std::invalid_argument("cosine: zero-norm embedding");
    return a.template cast<double>().row(0).dot(b.template cast<double>().row(0)) /
           (na * nb);
}

struct GenTaskReport {
    OpKind op = OpKind::Fusion;
    double rouge1 = 0, rouge2 = 0, rouge_l = 0;
    double exact = 0;
    int count = 0;
};

struct GenReport {
    std::vector<GenTaskReport> tasks;

    double avg_rouge_l() const {
        if (tasks.empty()) return 0;
        double s = 0;
        for (const auto& t : tasks) s += t.rouge_l;
        return s / tasks.size();
    }
    double avg_rouge1() const {
        if (tasks.empty()) return 0;
        double s = 0;
        for (const auto& t : tasks) s += t.rouge1;
        return s / tasks.size();
    }
    const GenTaskReport* task(OpKind op) const {
        for (const auto& t : tasks) {
            if (t.op == op) return &t;
        }
        return nullptr;
    }
};

inline std::string normalize_text(const std::string& text) {
    auto toks = tokenize_words(text);
    std::string out;
    for (const auto& t : toks) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

/// Encode inputs, apply the task operator, greedily decode, and score against
/// the target. One row per op kind present; limit (when > 0) caps the number
/// of scored instances per task.
template <class S>
GenReport eval_generation(const Model<S>& model, const Vocab& vocab,
                          const std::vector<Instance>& instances, int limit = 0) {
    std::map<OpKind, GenTaskReport> acc;
    std::map<OpKind, int> taken;
    for (const auto& inst : instances) {
        if (limit > 0 && taken[inst.op] >= limit) continue;
        ++taken[inst.op];
        Tape<S> tape(nullptr, false);
        std::vector<typename Tape<S>::Node*> embs;
        for (const auto& text : inst.inputs) {
            embs.push_back(&model.encode(
                tape, encode_text(vocab, text, Role::EncoderInput, model.cfg.max_len)));
        }
        const Mat<S> out_emb = model.apply_operator(tape, inst.op, embs).v();
        const std::string generated =
            decode_ids(vocab, model.generate(out_emb, model.cfg.max_len));

        auto& row = acc[inst.op];
        row.op = inst.op;
        row.rouge1 += rouge_n(generated, inst.target, 1).f1;
        row.rouge2 += rouge_n(generated, inst.target, 2).f1;
        row.rouge_l += rouge_l(generated, inst.target).f1;
        row.exact += normalize_text(generated) == normalize_text(inst.target) ? 1.0 : 0.0;
        row.count += 1;
    }
    GenReport report;
    for (auto& [op, row] : acc) {
        row.rouge1 /= row.count;
        row.rouge2 /= row.count;
        row.rouge_l /= row.count;
        row.exact /= row.count;
        report.tasks.push_back(row);
    }
    return report;
}

/// Spearman's rho between embedding cosine similarity and gold similarity.
template <class S>
double eval_sts(const Model<S>& model, const Vocab& vocab,
                const std::vector<StsPair>& pairs) {
    if (pairs.size() < 2) throw std::invalid_argument("eval_sts: need at least 2 pairs");
    std::vector<double> cos, gold;
    for (const auto& p : pairs) {
        cos.push_back(cosine(encode_text_embedding(model, vocab, p.text1),
                             encode_text_embedding(model, vocab, p.text2)));
        gold.push_back(p.gold);
    }
    return spearman(cos, gold);
}

struct RetrievalReport {
    double mrr = 0, recall = 0;
    int k = 10;
    int queries = 0, documents = 0;
};

/// Ranks the document corpus by cosine similarity to each query embedding;
/// ties broken by corpus index (ranking is a stable descending sort).
template <class S>
RetrievalReport eval_retrieval(const Model<S>& model, const Vocab& vocab,
                               const std::vector<RetrievalPair>& pairs, int k = 10) {
    if (pairs.empty()) throw std::invalid_argument("eval_retrieval: empty query set");
    const int m = static_cast<int>(pairs.size());
    Mat<S> docs(m, model.cfg.d), queries(m, model.cfg.d);
    for (int i = 0; i < m; ++i) {
        docs.row(i) = encode_text_embedding(model, vocab, pairs[i].document).row(0);
        queries.row(i) = encode_text_embedding(model, vocab, pairs[i].query).row(0);
    }
    Mat<double> dn = docs.template cast<double>(), qn = queries.template cast<double>();
    for (int i = 0; i < m; ++i) {
        dn.row(i).normalize();
        qn.row(i).normalize();
    }
    const Mat<double> sims = qn * dn.transpose();

    std::vector<std::vector<int>> rankings(m);
    std::vector<int> gold(m);
    for (int q = 0; q < m; ++q) {
        std::vector<int> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return sims(q, a) > sims(q, b); });
        order.resize(std::min(m, k));
        rankings[q] = std::move(order);
        gold[q] = q;
    }
    RetrievalReport report;
    report.k = k;
    report.queries = m;
    report.documents = m;
    report.mrr = mrr_at_k(rankings, gold, k);
    report.recall = recall_at_k(rankings, gold, k);
    return report;
}

// ---------------------------------------------------------------------------
// Operator-chain composition: fus(X,Y), diff(X,Y), comp(X), rec(X), nestable.
// The chain is evaluated entirely in embedding space; the decoder runs once,
// on the final embedding.
// ---------------------------------------------------------------------------

struct ComposeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ComposeResult {
    std::string text;
    int decoder_invocations = 0;
};

namespace detail {

struct ExprNode {
    bool is_leaf = false;
    std::string name;  // leaf sentence name
    OpKind op = OpKind::Fusion;
    std::vector<ExprNode> args;
};

class ExprParser {
public:
    explicit ExprParser(const std::string& src) : src_(src) {}

    ExprNode parse() {
        ExprNode root = expr();
        skip_ws();
        if (pos_ != src_.size()) fail("trailing input");
        return root;
    }

private:
    const std::string& src_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ComposeError("compose expression error at position " +
                           std::to_string(pos_) + ": " + what);
    }
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
    }
    void expect(char c) {
        skip_ws();
        if (pos_ >= src_.size() || src_[pos_] != c) {
            fail(std::string("expected '") + c + "'");
        }
        ++pos_;
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        if (pos_ == start) fail("expected an identifier");
        return src_.substr(start, pos_ - start);
    }
    ExprNode expr() {
        const std::string name = ident();
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '(') {
            ExprNode node;
            if (name == "fus") {
                node.op = OpKind::Fusion;
            } else if (name == "diff") {
                node.op = OpKind::Difference;
            } else if (name == "comp") {
                node.op = OpKind::Compression;
            } else if (name == "rec") {
                node.op = OpKind::Reconstruction;
            } else {
                fail("unknown operator '" + name + "'");
            }
            expect('(');
            node.args.push_back(expr());
            if (op_arity(node.op) == 2) {
                expect(',');
                node.args.push_back(expr());
            }
            expect(')');
            return node;
        }
        ExprNode leaf;
        leaf.is_leaf = true;
        leaf.name = name;
        return leaf;
    }
};

template <class S>
typename Tape<S>::Node& eval_expr(const Model<S>& model, const Vocab& vocab,
                                  Tape<S>& tape, const ExprNode& node,
                                  const std::map<std::string, std::string>& sentences) {
    if (node.is_leaf) {
        auto it = sentences.find(node.name);
        if (it == sentences.end()) {
            throw ComposeError("unbound sentence name '" + node.name + "'");
        }
        return model.encode(
            tape, encode_text(vocab, it->second, Role::EncoderInput, model.cfg.max_len));
    }
    std::vector<typename Tape<S>::Node*> args;
    for (const auto& a : node.args) {
        args.push_back(&eval_expr(model, vocab, tape, a, sentences));
    }
    return model.apply_operator(tape, node.op, args);
}

}  // namespace detail

template <class S>
ComposeResult compose(const Model<S>& model, const Vocab& vocab,
                      const std::string& expression,
                      const std::map<std::string, std::string>& sentences) {
    detail::ExprParser parser(expression);
    const detail::ExprNode root = parser.parse();
    Tape<S> tape(nullptr, false);
    const Mat<S> emb = detail::eval_expr(model, vocab, tape, root, sentences).v();
    ComposeResult result;
    result.text = decode_ids(vocab, model.generate(emb, model.cfg.max_len));
    result.decoder_invocations = 1;
    return result;
}

// ---------------------------------------------------------------------------
// Report formatting
// ---------------------------------------------------------------------------

inline std::string format_gen_report(const GenReport& report) {
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-16s %8s %8s %8s %8s %8s\n", "task", "R-1", "R-2",
                  "R-L", "exact", "count");
    out += buf;
    for (const auto& t : report.tasks) {
        std::snprintf(buf, sizeof buf, "%-16s %8.4f %8.4f %8.4f %8.4f %8d\n",
                      op_name(t.op).c_str(), t.rouge1, t.rouge2, t.rouge_l, t.exact,
                      t.count);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "%-16s %8.4f %8s %8.4f\n", "avg",
                  report.avg_rouge1(), "", report.avg_rouge_l());
    out += buf;
    return out;
}

inline std::string gen_report_csv(const GenReport& report) {
    std::string out = "task,rouge1,rouge2,rougeL,exact,count\n";
    char buf[160];
    for (const auto& t : report.tasks) {
        std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%d\n",
                      op_name(t.op).c_str(), t.rouge1, t.rouge2, t.rouge_l, t.exact,
                      t.count);
        out += buf;
    }
    return out;
}

}  // namespace intersent
