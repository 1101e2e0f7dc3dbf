#pragma once

// Word-level vocabulary and token codec shared by encoder and decoder.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace intersent {

enum class Role { EncoderInput, DecoderTarget };

struct TokenSeq {
    std::vector<int> ids;
    Role role = Role::EncoderInput;
};

inline std::vector<std::string> tokenize_words(const std::string& text) {
    std::string lower;
    lower.reserve(text.size());
    for (unsigned char c : text) lower.push_back(static_cast<char>(std::tolower(c)));
    std::vector<std::string> toks;
    std::istringstream in(lower);
    for (std::string t; in >> t;) toks.push_back(std::move(t));
    return toks;
}

class Vocab {
public:
    static constexpr int PAD = 0;
    static constexpr int BOS = 1;
    static constexpr int EOS = 2;
    static constexpr int UNK = 3;
    static constexpr int CLS = 4;
    static constexpr int kNumSpecials = 5;

    static Vocab build(const std::vector<std::string>& texts) {
        std::set<std::string> uniq;
        for (const auto& t : texts) {
            for (auto& w : tokenize_words(t)) uniq.insert(std::move(w));
        }
        if (uniq.empty()) throw std::invalid_argument("build_vocab: empty corpus");
        Vocab v;
        for (const auto& w : uniq) {
            v.to_id_[w] = v.size();
            v.tokens_.push_back(w);
        }
        return v;
    }

    int size() const { return kNumSpecials + static_cast<int>(tokens_.size()); }

    int id(const std::string& token) const {
        auto it = to_id_.find(token);
        return it == to_id_.end() ? UNK : it->second;
    }

    bool contains(const std::string& token) const { return to_id_.count(token) > 0; }

    const std::string& token(int id) const {
        if (id < kNumSpecials || id >= size()) {
            throw std::out_of_range("token id out of range: " + std::to_string(id));
        }
        return tokens_[id - kNumSpecials];
    }

    /// One token per line; line number = id - 5, specials implicit.
    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        for (const auto& t : tokens_) out << t << '\n';
    }

    static Vocab load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path.string());
        Vocab v;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            v.to_id_[line] = v.size();
            v.tokens_.push_back(line);
        }
        if (v.tokens_.empty()) throw std::runtime_error("empty vocab file " + path.string());
        return v;
    }

private:
    std::unordered_map<std::string, int> to_id_;
    std::vector<std::string> tokens_;
};

constexpr int kDefaultMaxLen = 64;

/// Total on text: OOV maps to UNK, overlong input is truncated preserving the
/// leading CLS/BOS and, for decoder targets, the trailing EOS.
inline TokenSeq encode_text(const Vocab& vocab, const std::string& text, Role role,
                            int max_len = kDefaultMaxLen) {
    TokenSeq seq;
    seq.role = role;
    seq.ids.push_back(role == Role::EncoderInput ? Vocab::CLS : Vocab::BOS);
    for (const auto& w : tokenize_words(text)) seq.ids.push_back(vocab.id(w));
    if (role == Role::DecoderTarget) seq.ids.push_back(Vocab::EOS);
    if (static_cast<int>(seq.ids.size()) > max_len) {
        seq.ids.resize(max_len);
        if (role == Role::DecoderTarget) seq.ids.back() = Vocab::EOS;
    }
    return seq;
}

/// Specials dropped, tokens joined by single spaces.
inline std::string decode_ids(const Vocab& vocab, std::span<const int> ids) {
    std::string out;
    for (int id : ids) {
        if (id < 0 || id >= vocab.size()) {
            throw std::out_of_range("token id out of range: " + std::to_string(id));
        }
        if (id < Vocab::kNumSpecials) continue;
        if (!out.empty()) out += ' ';
        out += vocab.token(id);
    }
    return out;
}

}  // namespace intersent
