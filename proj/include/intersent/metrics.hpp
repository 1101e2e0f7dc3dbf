#pragma once

// Text-generation and correlation metrics: ROUGE-1/2/L, Spearman's rho,
// MRR@k and recall@k.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "intersent/tokenizer.hpp"

namespace intersent {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

namespace detail {

inline RougeScore rouge_from_counts(double overlap, double n_cand, double n_ref) {
    RougeScore s;
    if (n_cand > 0) s.precision = overlap / n_cand;
    if (n_ref > 0) s.recall = overlap / n_ref;
    if (s.precision + s.recall > 0) {
        s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    }
    return s;
}

inline std::map<std::vector<std::string>, int> ngram_counts(
    const std::vector<std::string>& toks, int n) {
    std::map<std::vector<std::string>, int> counts;
    for (int i = 0; i + n <= static_cast<int>(toks.size()); ++i) {
        counts[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)]++;
    }
    return counts;
}

}  // namespace detail

/// Clipped n-gram overlap (Lin 2004), whitespace tokens, lowercased, no
/// stemming. F1 is reported alongside precision and recall.
inline RougeScore rouge_n(const std::string& candidate, const std::string& reference,
                          int n) {
    if (n < 1 || n > 2) throw std::invalid_argument("rouge_n: n must be 1 or 2");
    const auto cand = detail::ngram_counts(tokenize_words(candidate), n);
    const auto ref = detail::ngram_counts(tokenize_words(reference), n);
    double overlap = 0, n_cand = 0, n_ref = 0;
    for (const auto& [g, c] : cand) {
        n_cand += c;
        auto it = ref.find(g);
        if (it != ref.end()) overlap += std::min(c, it->second);
    }
    for (const auto& [g, c] : ref) n_ref += c;
    return detail::rouge_from_counts(overlap, n_cand, n_ref);
}

inline RougeScore rouge_l(const std::string& candidate, const std::string& reference) {
    const auto c = tokenize_words(candidate);
    const auto r = tokenize_words(reference);
    const int nc = static_cast<int>(c.size()), nr = static_cast<int>(r.size());
    std::vector<int> prev(nr + 1, 0), cur(nr + 1, 0);
    for (int i = 1; i <= nc; ++i) {
        for (int j = 1; j <= nr; ++j) {
            cur[j] = c[i - 1] == r[j - 1] ? prev[j - 1] + 1
                                          : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return detail::rouge_from_counts(prev[nr], nc, nr);
}

/// Average-rank transform (ties get the mean rank), then Pearson correlation
/// of the ranks. Throws on length mismatch, fewer than 2 points, or a
/// constant sequence (rho undefined).
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("spearman: length mismatch");
    const int n = static_cast<int>(xs.size());
    if (n < 2) throw std::invalid_argument("spearman: need at least 2 points");

    auto ranks = [n](std::span<const double> v) {
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return v[a] < v[b]; });
        std::vector<double> r(n);
        int i = 0;
        while (i < n) {
            int j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            const double mean_rank = (i + j) / 2.0 + 1.0;
            for (int k = i; k <= j; ++k) r[order[k]] = mean_rank;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(xs), ry = ranks(ys);

    double mx = 0, my = 0;
    for (int i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) {
        throw std::invalid_argument("spearman: undefined for a constant sequence");
    }
    return sxy / std::sqrt(sxx * syy);
}

/// rankings[q] lists document indices best-first; gold[q] is the relevant one.
inline double mrr_at_k(const std::vector<std::vector<int>>& rankings,
                       const std::vector<int>& gold, int k) {
    if (rankings.empty()) throw std::invalid_argument("mrr_at_k: empty query set");
    if (rankings.size() != gold.size() || k < 1) {
        throw std::invalid_argument("mrr_at_k: bad arguments");
    }
    double sum = 0;
    for (std::size_t q = 0; q < rankings.size(); ++q) {
        const auto& r = rankings[q];
        const int top = std::min<int>(k, static_cast<int>(r.size()));
        for (int i = 0; i < top; ++i) {
            if (r[i] == gold[q]) {
                sum += 1.0 / (i + 1);
                break;
            }
        }
    }
    return sum / static_cast<double>(rankings.size());
}

inline double recall_at_k(const std::vector<std::vector<int>>& rankings,
                          const std::vector<int>& gold, int k) {
    if (rankings.empty()) throw std::invalid_argument("recall_at_k: empty query set");
    if (rankings.size() != gold.size() || k < 1) {
        throw std::invalid_argument("recall_at_k: bad arguments");
    }
    double hits = 0;
    for (std::size_t q = 0; q < rankings.size(); ++q) {
        const auto& r = rankings[q];
        const int top = std::min<int>(k, static_cast<int>(r.size()));
        for (int i = 0; i < top; ++i) {
            if (r[i] == gold[q]) {
                hits += 1.0;
                break;
            }
        }
    }
    return hits / static_cast<double>(rankings.size());
}

}  // namespace intersent
