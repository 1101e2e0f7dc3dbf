#pragma once

// Bottleneck encoder, conditional decoder, and the four operator networks.
// The decoder is conditioned solely on one d-dimensional sentence embedding,
// projected to a single memory slot. Cross-attention over a single slot is
// degenerate (the softmax over one key is identically 1), so each decoder
// layer injects a learned projection of that slot at every position; this is
// bit-for-bit the single-slot cross-attention output.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "intersent/autograd.hpp"
#include "intersent/ops.hpp"
#include "intersent/tokenizer.hpp"

namespace intersent {

enum class ParamGroup { Encoder, Decoder, Operator };

struct ModelConfig {
    int d = 64;           // embedding / model width
    int layers = 2;       // per stack
    int heads = 4;
    int ffn = 0;          // defaults to 4d
    int op_hidden = 0;    // operator hidden width, defaults to 2d
    int bottleneck = 0;   // compression operator hidden width, defaults to d/2
    int vocab = 0;
    int max_len = kDefaultMaxLen;
    double dropout = 0.1;
    bool identity_reconstruction = false;  // Dec(Enc(s)) without an operator net

    ModelConfig resolved() const {
        ModelConfig c = *this;
        if (c.ffn == 0) c.ffn = 4 * c.d;
        if (c.op_hidden == 0) c.op_hidden = 2 * c.d;
        if (c.bottleneck == 0) c.bottleneck = c.d / 2;
        if (c.d % c.heads != 0) throw std::invalid_argument("d must be divisible by heads");
        if (c.bottleneck >= c.d) {
            throw std::invalid_argument("compression bottleneck must be narrower than d");
        }
        if (c.vocab <= 0) throw std::invalid_argument("vocab size required");
        return c;
    }
};

template <class S>
struct ParamStore {
    std::vector<Mat<S>> tensors;
    std::vector<std::string> names;
    std::vector<ParamGroup> groups;

    int add(const std::string& name, int rows, int cols, ParamGroup g) {
        tensors.emplace_back(Mat<S>::Zero(rows, cols));
        names.push_back(name);
        groups.push_back(g);
        return static_cast<int>(tensors.size()) - 1;
    }
    std::size_t count() const { return tensors.size(); }
    std::vector<Mat<S>> zero_grads() const {
        std::vector<Mat<S>> g;
        g.reserve(tensors.size());
        for (const auto& t : tensors) g.emplace_back(Mat<S>::Zero(t.rows(), t.cols()));
        return g;
    }
};

/// Dropout context threaded through forward passes; inactive in eval mode.
template <class S>
struct DropoutCtx {
    S rate = 0;
    std::mt19937_64* rng = nullptr;
};

template <class S>
class Model {
public:
    using Node = typename Tape<S>::Node;

    struct BlockIds {
        int wq, bq, wk, bk, wv, bv, wo, bo;
        int ln1_g, ln1_b, ln2_g, ln2_b;
        int w1, b1, w2, b2;
        int mem_w = -1, mem_b = -1;  // decoder only
    };
    struct OperatorIds {
        int w1, b1, w2, b2;
    };

    ModelConfig cfg;
    ParamStore<S> params;

    Model(const ModelConfig& config, std::uint64_t seed) : cfg(config.resolved()) {
        build();
        init(seed);
    }

    /// Layout-only constructor; tensors are filled by a checkpoint load.
    explicit Model(const ModelConfig& config) : cfg(config.resolved()) { build(); }

    // --- forward ---

    /// Encoder forward; returns the final hidden state at the CLS position.
    Node& encode(Tape<S>& tape, const TokenSeq& tokens, DropoutCtx<S> drop = {}) const {
        if (tokens.role != Role::EncoderInput) {
            throw std::invalid_argument("encode expects an ENCODER_INPUT sequence");
        }
        if (static_cast<int>(tokens.ids.size()) > cfg.max_len) {
            throw std::invalid_argument("encode: sequence exceeds max length");
        }
        Node* x = &embed(tape, enc_tok_, enc_pos_, tokens.ids, drop);
        for (const auto& blk : enc_blocks_) {
            x = &encoder_block(tape, *x, blk, drop);
        }
        Node& normed = tape.layer_norm(*x, tape.param(enc_final_g_, t(enc_final_g_)),
                                       tape.param(enc_final_b_, t(enc_final_b_)));
        return tape.row(normed, 0);  // CLS position
    }

    /// Two-layer operator network over one embedding (compression,
    /// reconstruction) or a concatenated pair (fusion, difference).
    Node& apply_operator(Tape<S>& tape, OpKind op, std::vector<Node*> embs,
                         DropoutCtx<S> drop = {}) const {
        if (static_cast<int>(embs.size()) != op_arity(op)) {
            throw std::invalid_argument("apply_operator: arity mismatch for " +
                                        op_name(op));
        }
        if (op == OpKind::Reconstruction && cfg.identity_reconstruction) {
            return *embs[0];
        }
        const OperatorIds& ids = operator_ids(op);
        Node& in = embs.size() == 2 ? tape.col_concat({embs[0], embs[1]}) : *embs[0];
        Node& h = tape.relu(tape.add_rowvec(tape.matmul(in, tape.param(ids.w1, t(ids.w1))),
                                            tape.param(ids.b1, t(ids.b1))));
        Node& hd = tape.dropout(h, drop.rate, drop.rng);
        return tape.add_rowvec(tape.matmul(hd, tape.param(ids.w2, t(ids.w2))),
                               tape.param(ids.b2, t(ids.b2)));
    }

    /// Teacher-forced decoder: logits for predicting target[1..] from the
    /// embedding and the causal prefix target[..k-1].
    Node& decode_teacher_forced(Tape<S>& tape, Node& emb, const TokenSeq& target,
                                DropoutCtx<S> drop = {}) const {
        if (target.role != Role::DecoderTarget) {
            throw std::invalid_argument("decode_teacher_forced expects DECODER_TARGET");
        }
        std::vector<int> input(target.ids.begin(), target.ids.end() - 1);
        return decode_logits(tape, emb, input, drop);
    }

    /// Greedy decoding from BOS until EOS or max_len; deterministic. Returns
    /// generated ids without the leading BOS.
    std::vector<int> generate(const Mat<S>& emb, int max_len) const {
        if (max_len > cfg.max_len) {
            throw std::invalid_argument("generate: max_len exceeds model max length");
        }
        std::vector<int> ids = {Vocab::BOS};
        std::vector<int> out;
        for (int step = 0; step < max_len; ++step) {
            Tape<S> tape(nullptr, false);
            Node& emb_node = tape.constant(emb);
            Node& logits = decode_logits(tape, emb_node, ids, {});
            int best = 0;
            logits.v().row(logits.v().rows() - 1).maxCoeff(&best);
            if (best == Vocab::EOS) break;
            out.push_back(best);
            ids.push_back(best);
            if (static_cast<int>(ids.size()) >= cfg.max_len) break;
        }
        return out;
    }

    /// Convenience: encode without recording gradients.
    Mat<S> embed_sentence(const TokenSeq& tokens) const {
        Tape<S> tape(nullptr, false);
        return encode(tape, tokens).v();
    }

    // --- checkpoint format ---
    // "INTERSENT1" magic, length-prefixed key=value header, then named
    // tensors in registry order: u32 name length, name, u32 rank, u32 dims,
    // little-endian IEEE-754 f32 values, row-major.

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out.write("INTERSENT1", 10);
        std::string header;
        header += "d=" + std::to_string(cfg.d) + "\n";
        header += "layers=" + std::to_string(cfg.layers) + "\n";
        header += "heads=" + std::to_string(cfg.heads) + "\n";
        header += "ffn=" + std::to_string(cfg.ffn) + "\n";
        header += "op_hidden=" + std::to_string(cfg.op_hidden) + "\n";
        header += "bottleneck=" + std::to_string(cfg.bottleneck) + "\n";
        header += "vocab=" + std::to_string(cfg.vocab) + "\n";
        header += "max_len=" + std::to_string(cfg.max_len) + "\n";
        header += "dropout=" + std::to_string(cfg.dropout) + "\n";
        header += "identity_reconstruction=" +
                  std::to_string(cfg.identity_reconstruction ? 1 : 0) + "\n";
        write_u32(out, static_cast<std::uint32_t>(header.size()));
        out.write(header.data(), header.size());
        write_u32(out, static_cast<std::uint32_t>(params.count()));
        for (std::size_t i = 0; i < params.count(); ++i) {
            const auto& name = params.names[i];
            write_u32(out, static_cast<std::uint32_t>(name.size()));
            out.write(name.data(), name.size());
            const auto& m = params.tensors[i];
            write_u32(out, 2);
            write_u32(out, static_cast<std::uint32_t>(m.rows()));
            write_u32(out, static_cast<std::uint32_t>(m.cols()));
            for (int r = 0; r < m.rows(); ++r) {
                for (int c = 0; c < m.cols(); ++c) {
                    write_f32(out, static_cast<float>(m(r, c)));
                }
            }
        }
        if (!out) throw std::runtime_error("write failed: " + path.string());
    }

    static Model load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open " + path.string());
        char magic[10];
        in.read(magic, 10);
        if (!in || std::memcmp(magic, "INTERSENT1", 10) != 0) {
            throw std::runtime_error("bad checkpoint magic in " + path.string());
        }
        const std::uint32_t hlen = read_u32(in);
        std::string header(hlen, '\0');
        in.read(header.data(), hlen);
        std::map<std::string, std::string> kv;
        std::size_t pos = 0;
        while (pos < header.size()) {
            const std::size_t nl = header.find('\n', pos);
            const std::string line = header.substr(pos, nl - pos);
            pos = nl == std::string::npos ? header.size() : nl + 1;
            if (line.empty()) continue;
            const std::size_t eq = line.find('=');
            kv[line.substr(0, eq)] = line.substr(eq + 1);
        }
        ModelConfig cfg;
        cfg.d = std::stoi(kv.at("d"));
        cfg.layers = std::stoi(kv.at("layers"));
        cfg.heads = std::stoi(kv.at("heads"));
        cfg.ffn = std::stoi(kv.at("ffn"));
        cfg.op_hidden = std::stoi(kv.at("op_hidden"));
        cfg.bottleneck = std::stoi(kv.at("bottleneck"));
        cfg.vocab = std::stoi(kv.at("vocab"));
        cfg.max_len = std::stoi(kv.at("max_len"));
        cfg.dropout = std::stod(kv.at("dropout"));
        cfg.identity_reconstruction = kv.at("identity_reconstruction") == "1";

        Model m(cfg);
        const std::uint32_t n = read_u32(in);
        if (n != m.params.count()) {
            throw std::runtime_error("checkpoint tensor count mismatch");
        }
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::uint32_t nlen = read_u32(in);
            std::string name(nlen, '\0');
            in.read(name.data(), nlen);
            if (name != m.params.names[i]) {
                throw std::runtime_error("checkpoint tensor order mismatch at " + name);
            }
            const std::uint32_t rank = read_u32(in);
            if (rank != 2) throw std::runtime_error("unexpected tensor rank");
            const std::uint32_t rows = read_u32(in), cols = read_u32(in);
            auto& tensor = m.params.tensors[i];
            if (rows != static_cast<std::uint32_t>(tensor.rows()) ||
                cols != static_cast<std::uint32_t>(tensor.cols())) {
                throw std::runtime_error("checkpoint tensor shape mismatch at " + name);
            }
            for (std::uint32_t r = 0; r < rows; ++r) {
                for (std::uint32_t c = 0; c < cols; ++c) {
                    tensor(r, c) = static_cast<S>(read_f32(in));
                }
            }
        }
        if (!in) throw std::runtime_error("truncated checkpoint " + path.string());
        return m;
    }

private:
    int enc_tok_, enc_pos_, enc_final_g_, enc_final_b_;
    int dec_tok_, dec_pos_, dec_final_g_, dec_final_b_;
    int mem_w_, mem_b_, out_w_, out_b_;
    std::vector<BlockIds> enc_blocks_, dec_blocks_;
    OperatorIds fus_, diff_, comp_, recon_;

    const Mat<S>& t(int id) const { return params.tensors[id]; }

    const OperatorIds& operator_ids(OpKind op) const {
        switch (op) {
            case OpKind::Fusion: return fus_;
            case OpKind::Difference: return diff_;
            case OpKind::Compression: return comp_;
            case OpKind::Reconstruction: return recon_;
        }
        throw std::logic_error("bad OpKind");
    }

    void build() {
        const int d = cfg.d;
        auto block = [&](const std::string& prefix, ParamGroup g, bool decoder) {
            BlockIds b;
            b.wq = params.add(prefix + ".attn.wq", d, d, g);
            b.bq = params.add(prefix + ".attn.bq", 1, d, g);
            b.wk = params.add(prefix + ".attn.wk", d, d, g);
            b.bk = params.add(prefix + ".attn.bk", 1, d, g);
            b.wv = params.add(prefix + ".attn.wv", d, d, g);
            b.bv = params.add(prefix + ".attn.bv", 1, d, g);
            b.wo = params.add(prefix + ".attn.wo", d, d, g);
            b.bo = params.add(prefix + ".attn.bo", 1, d, g);
            if (decoder) {
                b.mem_w = params.add(prefix + ".mem.w", d, d, g);
                b.mem_b = params.add(prefix + ".mem.b", 1, d, g);
            }
            b.ln1_g = params.add(prefix + ".ln1.g", 1, d, g);
            b.ln1_b = params.add(prefix + ".ln1.b", 1, d, g);
            b.ln2_g = params.add(prefix + ".ln2.g", 1, d, g);
            b.ln2_b = params.add(prefix + ".ln2.b", 1, d, g);
            b.w1 = params.add(prefix + ".ffn.w1", d, cfg.ffn, g);
            b.b1 = params.add(prefix + ".ffn.b1", 1, cfg.ffn, g);
            b.w2 = params.add(prefix + ".ffn.w2", cfg.ffn, d, g);
            b.b2 = params.add(prefix + ".ffn.b2", 1, d, g);
            return b;
        };

        enc_tok_ = params.add("enc.tok_emb", cfg.vocab, d, ParamGroup::Encoder);
        enc_pos_ = params.add("enc.pos_emb", cfg.max_len, d, ParamGroup::Encoder);
        for (int l = 0; l < cfg.layers; ++l) {
            enc_blocks_.push_back(
                block("enc.l" + std::to_string(l), ParamGroup::Encoder, false));
        }
        enc_final_g_ = params.add("enc.final_ln.g", 1, d, ParamGroup::Encoder);
        enc_final_b_ = params.add("enc.final_ln.b", 1, d, ParamGroup::Encoder);

        dec_tok_ = params.add("dec.tok_emb", cfg.vocab, d, ParamGroup::Decoder);
        dec_pos_ = params.add("dec.pos_emb", cfg.max_len, d, ParamGroup::Decoder);
        mem_w_ = params.add("dec.mem_proj.w", d, d, ParamGroup::Decoder);
        mem_b_ = params.add("dec.mem_proj.b", 1, d, ParamGroup::Decoder);
        for (int l = 0; l < cfg.layers; ++l) {
            dec_blocks_.push_back(
                block("dec.l" + std::to_string(l), ParamGroup::Decoder, true));
        }
        dec_final_g_ = params.add("dec.final_ln.g", 1, d, ParamGroup::Decoder);
        dec_final_b_ = params.add("dec.final_ln.b", 1, d, ParamGroup::Decoder);
        out_w_ = params.add("dec.out_proj.w", d, cfg.vocab, ParamGroup::Decoder);
        out_b_ = params.add("dec.out_proj.b", 1, cfg.vocab, ParamGroup::Decoder);

        auto op_net = [&](const std::string& prefix, int in, int hidden) {
            OperatorIds o;
            o.w1 = params.add(prefix + ".w1", in, hidden, ParamGroup::Operator);
            o.b1 = params.add(prefix + ".b1", 1, hidden, ParamGroup::Operator);
            o.w2 = params.add(prefix + ".w2", hidden, d, ParamGroup::Operator);
            o.b2 = params.add(prefix + ".b2", 1, d, ParamGroup::Operator);
            return o;
        };
        fus_ = op_net("op.fusion", 2 * d, cfg.op_hidden);
        diff_ = op_net("op.difference", 2 * d, cfg.op_hidden);
        comp_ = op_net("op.compression", d, cfg.bottleneck);
        recon_ = op_net("op.reconstruction", d, cfg.op_hidden);
    }

    /// Scaled uniform init: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)) for
    /// matrices, gain 1 for layer-norm scales, zero biases. Seed-controlled.
    void init(std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        auto uniform = [&rng](S a) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            return static_cast<S>((2.0 * u - 1.0) * static_cast<double>(a));
        };
        for (std::size_t i = 0; i < params.count(); ++i) {
            auto& m = params.tensors[i];
            const std::string& name = params.names[i];
            const bool is_ln_gain = name.ends_with("ln.g") || name.ends_with("ln1.g") ||
                                    name.ends_with("ln2.g");
            if (is_ln_gain) {
                m.setOnes();
            } else if (m.rows() == 1) {
                m.setZero();  // biases and layer-norm shifts
            } else {
                const S a = static_cast<S>(
                    std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols())));
                for (int r = 0; r < m.rows(); ++r) {
                    for (int c = 0; c < m.cols(); ++c) m(r, c) = uniform(a);
                }
            }
        }
    }

    Node& embed(Tape<S>& tape, int tok_id, int pos_id, const std::vector<int>& ids,
                DropoutCtx<S> drop) const {
        std::vector<int> positions(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);
        Node& x = tape.add(tape.rows(tok_id, t(tok_id), ids),
                           tape.rows(pos_id, t(pos_id), positions));
        return tape.dropout(x, drop.rate, drop.rng);
    }

    Node& self_attention(Tape<S>& tape, Node& h, const BlockIds& b, bool causal) const {
        const int dh = cfg.d / cfg.heads;
        Node& q = tape.add_rowvec(tape.matmul(h, tape.param(b.wq, t(b.wq))),
                                  tape.param(b.bq, t(b.bq)));
        Node& k = tape.add_rowvec(tape.matmul(h, tape.param(b.wk, t(b.wk))),
                                  tape.param(b.bk, t(b.bk)));
        Node& v = tape.add_rowvec(tape.matmul(h, tape.param(b.wv, t(b.wv))),
                                  tape.param(b.bv, t(b.bv)));
        std::vector<Node*> heads;
        for (int hd = 0; hd < cfg.heads; ++hd) {
            Node& qh = tape.col_slice(q, hd * dh, dh);
            Node& kh = tape.col_slice(k, hd * dh, dh);
            Node& vh = tape.col_slice(v, hd * dh, dh);
            Node& scores =
                tape.scale(tape.matmul_nt(qh, kh), S(1) / std::sqrt(static_cast<S>(dh)));
            Node& p = tape.softmax_rows(scores, causal);
            heads.push_back(&tape.matmul(p, vh));
        }
        Node& cat = tape.col_concat(heads);
        return tape.add_rowvec(tape.matmul(cat, tape.param(b.wo, t(b.wo))),
                               tape.param(b.bo, t(b.bo)));
    }

    Node& ffn(Tape<S>& tape, Node& h, const BlockIds& b) const {
        Node& a = tape.relu(tape.add_rowvec(tape.matmul(h, tape.param(b.w1, t(b.w1))),
                                            tape.param(b.b1, t(b.b1))));
        return tape.add_rowvec(tape.matmul(a, tape.param(b.w2, t(b.w2))),
                               tape.param(b.b2, t(b.b2)));
    }

    // Pre-norm residual block.
    Node& encoder_block(Tape<S>& tape, Node& x, const BlockIds& b,
                        DropoutCtx<S> drop) const {
        Node& h1 = tape.layer_norm(x, tape.param(b.ln1_g, t(b.ln1_g)),
                                   tape.param(b.ln1_b, t(b.ln1_b)));
        Node& x1 = tape.add(x, tape.dropout(self_attention(tape, h1, b, false),
                                            drop.rate, drop.rng));
        Node& h2 = tape.layer_norm(x1, tape.param(b.ln2_g, t(b.ln2_g)),
                                   tape.param(b.ln2_b, t(b.ln2_b)));
        return tape.add(x1, tape.dropout(ffn(tape, h2, b), drop.rate, drop.rng));
    }

    Node& decoder_block(Tape<S>& tape, Node& x, Node& mem, const BlockIds& b,
                        DropoutCtx<S> drop) const {
        Node& h1 = tape.layer_norm(x, tape.param(b.ln1_g, t(b.ln1_g)),
                                   tape.param(b.ln1_b, t(b.ln1_b)));
        Node& x1 = tape.add(x, tape.dropout(self_attention(tape, h1, b, true),
                                            drop.rate, drop.rng));
        // Single-slot cross-attention: softmax over one key is 1, so the
        // sublayer reduces to injecting a learned projection of the memory.
        Node& inj = tape.add_rowvec(tape.matmul(mem, tape.param(b.mem_w, t(b.mem_w))),
                                    tape.param(b.mem_b, t(b.mem_b)));
        Node& x2 = tape.add(
            x1, tape.dropout(tape.broadcast_rows(inj, static_cast<int>(x.v().rows())),
                             drop.rate, drop.rng));
        Node& h2 = tape.layer_norm(x2, tape.param(b.ln2_g, t(b.ln2_g)),
                                   tape.param(b.ln2_b, t(b.ln2_b)));
        return tape.add(x2, tape.dropout(ffn(tape, h2, b), drop.rate, drop.rng));
    }

    Node& decode_logits(Tape<S>& tape, Node& emb, const std::vector<int>& input,
                        DropoutCtx<S> drop) const {
        Node* x = &embed(tape, dec_tok_, dec_pos_, input, drop);
        Node& mem = tape.add_rowvec(tape.matmul(emb, tape.param(mem_w_, t(mem_w_))),
                                    tape.param(mem_b_, t(mem_b_)));
        for (const auto& blk : dec_blocks_) {
            x = &decoder_block(tape, *x, mem, blk, drop);
        }
        Node& normed = tape.layer_norm(*x, tape.param(dec_final_g_, t(dec_final_g_)),
                                       tape.param(dec_final_b_, t(dec_final_b_)));
        return tape.add_rowvec(tape.matmul(normed, tape.param(out_w_, t(out_w_))),
                               tape.param(out_b_, t(out_b_)));
    }

    static void write_u32(std::ostream& out, std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
        out.write(reinterpret_cast<char*>(b), 4);
    }
    static std::uint32_t read_u32(std::istream& in) {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) |
               (static_cast<std::uint32_t>(b[3]) << 24);
    }
    static void write_f32(std::ostream& out, float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        write_u32(out, bits);
    }
    static float read_f32(std::istream& in) {
        const std::uint32_t bits = read_u32(in);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
};

}  // namespace intersent
