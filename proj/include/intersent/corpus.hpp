#pragma once

// Synthetic compositional language: clauses, deterministic realization,
// exact operation oracles, corpus generation, and TSV ingestion.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "intersent/ops.hpp"

namespace intersent {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Atomic semantic unit: indices into the subject/verb/object lexicons.
struct Clause {
    int subj = 0;
    int verb = 0;
    int obj = 0;
    auto operator<=>(const Clause&) const = default;
};

enum class Variant { Canonical, Paraphrase };

struct SyntheticSentence {
    std::vector<Clause> clauses;  // 1..3, distinct
    Variant variant = Variant::Canonical;
};

/// One weak-supervision training example.
struct Instance {
    OpKind op = OpKind::Fusion;
    std::vector<std::string> inputs;
    std::string target;
};

struct StsPair {
    std::string text1, text2;
    double gold = 0.0;  // Jaccard overlap of clause sets
};

struct RetrievalPair {
    std::string query, document;
};

struct CorpusConfig {
    int subjects = 12;
    int verbs = 12;
    int objects = 12;
    int instances_per_task = 20000;
    std::uint64_t seed = 0;
    double holdout_fraction = 0.1;
};

struct Corpus {
    std::vector<Instance> train;
    std::vector<Instance> test;
    std::vector<StsPair> sts_pairs;
    std::vector<RetrievalPair> retrieval;
};

namespace detail {

inline const std::vector<std::string>& base_subjects() {
    static const std::vector<std::string> w = {
        "cat",    "dog",    "fox",    "bird",   "horse", "rabbit",
        "farmer", "teacher", "singer", "doctor", "pilot", "child",
        "wolf",   "tiger",  "baker",  "judge"};
    return w;
}
inline const std::vector<std::string>& base_verbs() {
    static const std::vector<std::string> w = {
        "sees",   "chases", "likes",   "finds",  "follows", "helps",
        "avoids", "greets", "carries", "fears",  "trusts",  "praises",
        "pushes", "paints", "guards",  "calls"};
    return w;
}
// Bijective synonym for each base verb, used by the PARAPHRASE variant.
inline const std::vector<std::string>& base_verb_synonyms() {
    static const std::vector<std::string> w = {
        "watches", "pursues", "enjoys",   "discovers", "trails",   "aids",
        "shuns",   "welcomes", "hauls",   "dreads",    "believes", "applauds",
        "shoves",  "draws",   "protects", "summons"};
    return w;
}
inline const std::vector<std::string>& base_objects() {
    static const std::vector<std::string> w = {
        "mouse", "ball", "tree", "river", "apple", "book", "stone", "flower",
        "lamp",  "door", "boat", "cake",  "hat",   "drum", "kite",  "bell"};
    return w;
}

inline std::vector<std::string> take_or_extend(const std::vector<std::string>& base,
                                               int n, const std::string& stem) {
    std::vector<std::string> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (i < static_cast<int>(base.size())) {
            out.push_back(base[i]);
        } else {
            out.push_back(stem + std::to_string(i));
        }
    }
    return out;
}

// Uniform draw from [0, n) without relying on distribution internals.
inline std::uint64_t rand_below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

}  // namespace detail

/// Word lists for subjects, verbs (plus the paraphrase synonym of each verb),
/// and objects. Reserved tokens "the", "and" and "." never appear in lexicons.
struct Lexicon {
    std::vector<std::string> subjects;
    std::vector<std::string> verbs;
    std::vector<std::string> verb_synonyms;
    std::vector<std::string> objects;

    static Lexicon make(int n_subjects, int n_verbs, int n_objects) {
        if (n_subjects < 8 || n_verbs < 8 || n_objects < 8) {
            throw std::invalid_argument("lexicons need at least 8 entries each");
        }
        Lexicon lex;
        lex.subjects = detail::take_or_extend(detail::base_subjects(), n_subjects, "subject");
        lex.verbs = detail::take_or_extend(detail::base_verbs(), n_verbs, "verb");
        lex.verb_synonyms =
            detail::take_or_extend(detail::base_verb_synonyms(), n_verbs, "verbsyn");
        lex.objects = detail::take_or_extend(detail::base_objects(), n_objects, "object");
        return lex;
    }

    static Lexicon make(const CorpusConfig& cfg) {
        return make(cfg.subjects, cfg.verbs, cfg.objects);
    }
};

/// Renders a clause list as text. CANONICAL keeps the given order; PARAPHRASE
/// swaps each verb for its synonym and reverses the clause list. Pure.
inline std::string realize(const Lexicon& lex, const std::vector<Clause>& clauses,
                           Variant variant) {
    if (clauses.empty()) throw std::invalid_argument("realize: empty clause list");
    std::vector<Clause> order = clauses;
    if (variant == Variant::Paraphrase) std::reverse(order.begin(), order.end());
    std::string out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Clause& c = order[i];
        if (c.subj < 0 || c.subj >= static_cast<int>(lex.subjects.size()) ||
            c.verb < 0 || c.verb >= static_cast<int>(lex.verbs.size()) ||
            c.obj < 0 || c.obj >= static_cast<int>(lex.objects.size())) {
            throw std::invalid_argument("realize: clause index out of lexicon bounds");
        }
        const std::string& verb = variant == Variant::Canonical
                                      ? lex.verbs[c.verb]
                                      : lex.verb_synonyms[c.verb];
        if (i > 0) out += " and";
        out += " the " + lex.subjects[c.subj] + " " + verb + " the " + lex.objects[c.obj];
    }
    return out.substr(1) + " .";
}

inline std::string realize(const Lexicon& lex, const SyntheticSentence& s) {
    return realize(lex, s.clauses, s.variant);
}

/// Inverse of realize. Throws ParseError on anything outside the grammar.
inline SyntheticSentence parse(const Lexicon& lex, const std::string& text) {
    auto index_of = [](const std::vector<std::string>& words, const std::string& w) {
        auto it = std::find(words.begin(), words.end(), w);
        return it == words.end() ? -1 : static_cast<int>(it - words.begin());
    };
    std::vector<std::string> toks;
    std::istringstream in(text);
    for (std::string t; in >> t;) toks.push_back(t);
    if (toks.size() < 6 || toks.back() != ".") {
        throw ParseError("unparseable sentence: " + text);
    }
    toks.pop_back();

    SyntheticSentence s;
    bool variant_known = false;
    std::size_t pos = 0;
    while (pos < toks.size()) {
        if (!s.clauses.empty()) {
            if (toks[pos] != "and") throw ParseError("expected 'and' in: " + text);
            ++pos;
        }
        if (pos + 5 > toks.size() || toks[pos] != "the" || toks[pos + 3] != "the") {
            throw ParseError("clause does not match 'the S V the O' in: " + text);
        }
        Clause c;
        c.subj = index_of(lex.subjects, toks[pos + 1]);
        c.obj = index_of(lex.objects, toks[pos + 4]);
        int v_canon = index_of(lex.verbs, toks[pos + 2]);
        int v_para = index_of(lex.verb_synonyms, toks[pos + 2]);
        if (c.subj < 0 || c.obj < 0 || (v_canon < 0 && v_para < 0)) {
            throw ParseError("unknown word in: " + text);
        }
        Variant v = v_canon >= 0 ? Variant::Canonical : Variant::Paraphrase;
        if (!variant_known) {
            s.variant = v;
            variant_known = true;
        } else if (v != s.variant) {
            throw ParseError("mixed realization variants in: " + text);
        }
        c.verb = v_canon >= 0 ? v_canon : v_para;
        s.clauses.push_back(c);
        pos += 5;
    }
    if (s.variant == Variant::Paraphrase) {
        std::reverse(s.clauses.begin(), s.clauses.end());
    }
    if (s.clauses.size() > 3) throw ParseError("more than 3 clauses in: " + text);
    std::set<Clause> uniq(s.clauses.begin(), s.clauses.end());
    if (uniq.size() != s.clauses.size()) {
        throw ParseError("duplicate clauses in: " + text);
    }
    return s;
}

/// Exact oracle for the four operations; inputs must parse back to synthetic
/// sentences. Outputs are always CANONICAL with clauses in total order.
inline std::string oracle_apply(const Lexicon& lex, OpKind op,
                                const std::vector<std::string>& inputs) {
    if (static_cast<int>(inputs.size()) != op_arity(op)) {
        throw std::invalid_argument("oracle_apply: wrong input count for " + op_name(op));
    }
    std::vector<std::set<Clause>> sets;
    std::vector<SyntheticSentence> sents;
    for (const auto& text : inputs) {
        sents.push_back(parse(lex, text));
        sets.emplace_back(sents.back().clauses.begin(), sents.back().clauses.end());
    }
    std::vector<Clause> result;
    switch (op) {
        case OpKind::Fusion: {
            std::vector<Clause> merged;
            std::set_intersection(sets[0].begin(), sets[0].end(), sets[1].begin(),
                                  sets[1].end(), std::back_inserter(merged));
            if (!merged.empty()) {
                throw std::invalid_argument("fusion inputs must have disjoint clause sets");
            }
            std::set_union(sets[0].begin(), sets[0].end(), sets[1].begin(),
                           sets[1].end(), std::back_inserter(result));
            if (result.size() > 3) {
                throw std::invalid_argument("fusion result exceeds 3 clauses");
            }
            break;
        }
        case OpKind::Difference: {
            if (!std::includes(sets[0].begin(), sets[0].end(), sets[1].begin(),
                               sets[1].end()) ||
                sets[0].size() <= sets[1].size()) {
                throw std::invalid_argument(
                    "difference requires input 1 to strictly contain input 2");
            }
            std::set_difference(sets[0].begin(), sets[0].end(), sets[1].begin(),
                                sets[1].end(), std::back_inserter(result));
            break;
        }
        case OpKind::Compression:
            result = {sents[0].clauses.front()};
            break;
        case OpKind::Reconstruction:
            result = sents[0].clauses;
            std::sort(result.begin(), result.end());
            break;
    }
    return realize(lex, result, Variant::Canonical);
}

namespace detail {

// Total-order position of a clause in the (subj, verb, obj) enumeration.
inline int clause_rank(const Clause& c, const Lexicon& lex) {
    return (c.subj * static_cast<int>(lex.verbs.size()) + c.verb) *
               static_cast<int>(lex.objects.size()) +
           c.obj;
}

inline Clause clause_at(int rank, const Lexicon& lex) {
    const int nv = static_cast<int>(lex.verbs.size());
    const int no = static_cast<int>(lex.objects.size());
    return Clause{rank / (nv * no), (rank / no) % nv, rank % no};
}

// Distinct instance keys available per task from a pool of m clauses.
// Sets of k clauses: C(m, k); fusion/difference additionally pick an ordered
// split / proper subset of the set.
struct TaskCapacity {
    double fusion, difference, compression, reconstruction;
};
inline TaskCapacity task_capacity(double m) {
    const double c2 = m * (m - 1) / 2.0;
    const double c3 = m * (m - 1) * (m - 2) / 6.0;
    return TaskCapacity{
        .fusion = c2 * 2 + c3 * 6,
        .difference = c2 * 2 + c3 * 6,
        .compression = c2 + c3,
        .reconstruction = (m + c2 + c3) * 2,
    };
}

inline double capacity_for(const TaskCapacity& cap, OpKind op) {
    switch (op) {
        case OpKind::Fusion: return cap.fusion;
        case OpKind::Difference: return cap.difference;
        case OpKind::Compression: return cap.compression;
        case OpKind::Reconstruction: return cap.reconstruction;
    }
    return 0;
}

// Sample k distinct clauses from a pool, sorted into total order.
inline std::vector<Clause> sample_clause_set(std::mt19937_64& rng,
                                             const std::vector<Clause>& pool, int k) {
    std::vector<Clause> out;
    while (static_cast<int>(out.size()) < k) {
        Clause c = pool[rand_below(rng, pool.size())];
        if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::string instance_key(const Instance& inst) {
    std::string key;
    for (const auto& s : inst.inputs) key += s + "\x1f";
    return key;
}

}  // namespace detail

/// Deterministic corpus generation. Clauses are split into disjoint train and
/// test pools, so no test sentence's clause combination appears in training.
inline Corpus generate_corpus(const CorpusConfig& cfg) {
    if (cfg.instances_per_task < 1) {
        throw std::invalid_argument("instances_per_task must be positive");
    }
    if (cfg.holdout_fraction <= 0.0 || cfg.holdout_fraction >= 1.0) {
        throw std::invalid_argument("holdout_fraction must lie in (0,1)");
    }
    const Lexicon lex = Lexicon::make(cfg);
    std::mt19937_64 rng(cfg.seed);

    const int total = cfg.subjects * cfg.verbs * cfg.objects;
    std::vector<int> ranks(total);
    for (int i = 0; i < total; ++i) ranks[i] = i;
    for (int i = total - 1; i > 0; --i) {
        std::swap(ranks[i], ranks[detail::rand_below(rng, i + 1)]);
    }
    int n_test_clauses =
        std::max(8, static_cast<int>(std::lround(cfg.holdout_fraction * total)));
    if (n_test_clauses >= total - 8) {
        throw CapacityError("holdout fraction leaves too few training clauses");
    }
    std::vector<Clause> test_pool, train_pool;
    for (int i = 0; i < total; ++i) {
        auto& pool = i < n_test_clauses ? test_pool : train_pool;
        pool.push_back(detail::clause_at(ranks[i], lex));
    }

    const int n_test = std::max(
        1, static_cast<int>(std::lround(cfg.holdout_fraction * cfg.instances_per_task)));
    const auto train_cap = detail::task_capacity(train_pool.size());
    const auto test_cap = detail::task_capacity(test_pool.size());
    for (OpKind op : kAllOps) {
        if (cfg.instances_per_task > detail::capacity_for(train_cap, op) ||
            n_test > detail::capacity_for(test_cap, op)) {
            throw CapacityError("requested instance count exceeds the distinct " +
                                op_name(op) + " inventory");
        }
    }

    auto make_instance = [&](OpKind op, const std::vector<Clause>& pool) {
        Instance inst;
        inst.op = op;
        switch (op) {
            case OpKind::Fusion: {
                // sizes (|A|,|B|) in {(1,1),(1,2),(2,1)}
                const int pick = static_cast<int>(detail::rand_below(rng, 3));
                const int na = pick == 2 ? 2 : 1;
                const int nb = pick == 1 ? 2 : 1;
                auto all = detail::sample_clause_set(rng, pool, na + nb);
                // Random split so A is not always the smaller-ranked part.
                std::vector<Clause> a, b;
                std::vector<int> idx(all.size());
                for (std::size_t i = 0; i < all.size(); ++i) idx[i] = static_cast<int>(i);
                for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
                    std::swap(idx[i], idx[detail::rand_below(rng, i + 1)]);
                }
                for (std::size_t i = 0; i < all.size(); ++i) {
                    (static_cast<int>(i) < na ? a : b).push_back(all[idx[i]]);
                }
                std::sort(a.begin(), a.end());
                std::sort(b.begin(), b.end());
                inst.inputs = {realize(lex, a, Variant::Canonical),
                               realize(lex, b, Variant::Canonical)};
                break;
            }
            case OpKind::Difference: {
                // Sample the fused sentence first, then a strict subset to remove.
                const int n = 2 + static_cast<int>(detail::rand_below(rng, 2));
                auto fused = detail::sample_clause_set(rng, pool, n);
                const int nb = 1 + static_cast<int>(detail::rand_below(rng, n - 1));
                std::vector<Clause> sub = fused;
                for (int i = static_cast<int>(sub.size()) - 1; i > 0; --i) {
                    std::swap(sub[i], sub[detail::rand_below(rng, i + 1)]);
                }
                sub.resize(nb);
                std::sort(sub.begin(), sub.end());
                inst.inputs = {realize(lex, fused, Variant::Canonical),
                               realize(lex, sub, Variant::Canonical)};
                break;
            }
            case OpKind::Compression: {
                const int n = 2 + static_cast<int>(detail::rand_below(rng, 2));
                auto s = detail::sample_clause_set(rng, pool, n);
                inst.inputs = {realize(lex, s, Variant::Canonical)};
                break;
            }
            case OpKind::Reconstruction: {
                const int n = 1 + static_cast<int>(detail::rand_below(rng, 3));
                auto s = detail::sample_clause_set(rng, pool, n);
                const Variant v = detail::rand_below(rng, 2) == 0 ? Variant::Canonical
                                                                  : Variant::Paraphrase;
                inst.inputs = {realize(lex, s, v)};
                break;
            }
        }
        inst.target = oracle_apply(lex, op, inst.inputs);
        return inst;
    };

    Corpus corpus;
    auto fill = [&](std::vector<Instance>& out, const std::vector<Clause>& pool,
                    OpKind op, int count) {
        std::unordered_set<std::string> seen;
        int stale = 0;
        while (static_cast<int>(seen.size()) < count) {
            Instance inst = make_instance(op, pool);
            if (seen.insert(detail::instance_key(inst)).second) {
                out.push_back(std::move(inst));
                stale = 0;
            } else if (++stale > 100000) {
                throw CapacityError("could not sample enough distinct " + op_name(op) +
                                    " instances");
            }
        }
    };
    for (OpKind op : kAllOps) {
        fill(corpus.train, train_pool, op, cfg.instances_per_task);
        fill(corpus.test, test_pool, op, n_test);
    }

    // Graded similarity pairs, stratified over Jaccard levels {0,1/3,1/2,2/3,1}.
    const int per_level = std::max(20, cfg.instances_per_task / 100);
    auto add_sts = [&](const std::vector<Clause>& a, const std::vector<Clause>& b,
                       double gold) {
        const Variant v1 = detail::rand_below(rng, 2) == 0 ? Variant::Canonical
                                                           : Variant::Paraphrase;
        const Variant v2 = detail::rand_below(rng, 2) == 0 ? Variant::Canonical
                                                           : Variant::Paraphrase;
        corpus.sts_pairs.push_back({realize(lex, a, v1), realize(lex, b, v2), gold});
    };
    auto subset_of = [](const std::vector<Clause>& s, int from, int len) {
        return std::vector<Clause>(s.begin() + from, s.begin() + from + len);
    };
    for (int i = 0; i < per_level; ++i) {
        {  // 0: disjoint
            auto s = detail::sample_clause_set(rng, test_pool, 4);
            add_sts(subset_of(s, 0, 2), subset_of(s, 2, 2), 0.0);
        }
        {  // 1/3: share 1 of 3
            auto s = detail::sample_clause_set(rng, test_pool, 3);
            add_sts({s[0], s[1]}, {s[0], s[2]}, 1.0 / 3.0);
        }
        {  // 1/2: singleton inside a pair
            auto s = detail::sample_clause_set(rng, test_pool, 2);
            add_sts({s[0]}, s, 0.5);
        }
        {  // 2/3: pair inside a triple
            auto s = detail::sample_clause_set(rng, test_pool, 3);
            add_sts({s[0], s[1]}, s, 2.0 / 3.0);
        }
        {  // 1: identical clause sets
            const int n = 1 + static_cast<int>(detail::rand_below(rng, 3));
            auto s = detail::sample_clause_set(rng, test_pool, n);
            add_sts(s, s, 1.0);
        }
    }

    // Paraphrase retrieval: each document paired with its paraphrase as query.
    const int n_ret = std::clamp(cfg.instances_per_task, 50, 2000);
    std::unordered_set<std::string> doc_seen;
    int stale = 0;
    while (static_cast<int>(corpus.retrieval.size()) < n_ret) {
        const int n = 1 + static_cast<int>(detail::rand_below(rng, 3));
        auto s = detail::sample_clause_set(rng, test_pool, n);
        std::string doc = realize(lex, s, Variant::Canonical);
        if (doc_seen.insert(doc).second) {
            corpus.retrieval.push_back({realize(lex, s, Variant::Paraphrase), doc});
            stale = 0;
        } else if (++stale > 100000) {
            throw CapacityError("could not sample enough distinct retrieval documents");
        }
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// TSV interchange
// ---------------------------------------------------------------------------

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return fields;
}

/// One instance per line: op-tag \t input1 [\t input2] \t target.
/// No oracle check is applied; external data may be noisy.
inline std::vector<Instance> load_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<Instance> out;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        OpKind op;
        try {
            op = op_from_name(fields[0]);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": " + e.what());
        }
        const int arity = op_arity(op);
        if (static_cast<int>(fields.size()) != arity + 2) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": expected " + std::to_string(arity + 2) +
                                     " fields for " + op_name(op) + ", got " +
                                     std::to_string(fields.size()));
        }
        Instance inst;
        inst.op = op;
        inst.inputs.assign(fields.begin() + 1, fields.end() - 1);
        inst.target = fields.back();
        out.push_back(std::move(inst));
    }
    return out;
}

inline void write_instances_tsv(const std::filesystem::path& path,
                                const std::vector<Instance>& instances, OpKind op) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& inst : instances) {
        if (inst.op != op) continue;
        out << op_name(op);
        for (const auto& s : inst.inputs) out << '\t' << s;
        out << '\t' << inst.target << '\n';
    }
}

inline std::string op_filename(OpKind op) {
    switch (op) {
        case OpKind::Fusion: return "fusion.tsv";
        case OpKind::Difference: return "difference.tsv";
        case OpKind::Compression: return "compression.tsv";
        case OpKind::Reconstruction: return "reconstruction.tsv";
    }
    throw std::logic_error("bad OpKind");
}

/// Directory layout: train/<op>.tsv, test/<op>.tsv, sts_pairs.tsv, retrieval.tsv.
inline void write_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "train");
    fs::create_directories(dir / "test");
    for (OpKind op : kAllOps) {
        write_instances_tsv(dir / "train" / op_filename(op), corpus.train, op);
        write_instances_tsv(dir / "test" / op_filename(op), corpus.test, op);
    }
    {
        std::ofstream out(dir / "sts_pairs.tsv", std::ios::binary);
        char buf[32];
        for (const auto& p : corpus.sts_pairs) {
            std::snprintf(buf, sizeof buf, "%.6f", p.gold);
            out << p.text1 << '\t' << p.text2 << '\t' << buf << '\n';
        }
    }
    {
        std::ofstream out(dir / "retrieval.tsv", std::ios::binary);
        for (const auto& p : corpus.retrieval) {
            out << p.query << '\t' << p.document << '\n';
        }
    }
}

inline std::vector<Instance> load_instances_dir(const std::filesystem::path& dir) {
    std::vector<Instance> out;
    bool any = false;
    for (OpKind op : kAllOps) {
        auto path = dir / op_filename(op);
        if (!std::filesystem::exists(path)) continue;
        any = true;
        auto part = load_tsv(path);
        out.insert(out.end(), part.begin(), part.end());
    }
    if (!any) throw std::runtime_error("no instance TSV files under " + dir.string());
    return out;
}

inline std::vector<StsPair> load_sts_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<StsPair> out;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 3) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": expected 3 fields");
        }
        out.push_back({fields[0], fields[1], std::stod(fields[2])});
    }
    return out;
}

inline std::vector<RetrievalPair> load_retrieval_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<RetrievalPair> out;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 2) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": expected 2 fields");
        }
        out.push_back({fields[0], fields[1]});
    }
    return out;
}

}  // namespace intersent
