#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace intersent {

/// The four sentence operations realized both by the corpus oracle and by
/// the learned operator networks.
enum class OpKind { Fusion, Difference, Compression, Reconstruction };

inline int op_arity(OpKind op) {
    return (op == OpKind::Fusion || op == OpKind::Difference) ? 2 : 1;
}

inline std::string op_name(OpKind op) {
    switch (op) {
        case OpKind::Fusion: return "FUSION";
        case OpKind::Difference: return "DIFFERENCE";
        case OpKind::Compression: return "COMPRESSION";
        case OpKind::Reconstruction: return "RECONSTRUCTION";
    }
    throw std::logic_error("bad OpKind");
}

inline OpKind op_from_name(std::string_view name) {
    if (name == "FUSION") return OpKind::Fusion;
    if (name == "DIFFERENCE") return OpKind::Difference;
    if (name == "COMPRESSION") return OpKind::Compression;
    if (name == "RECONSTRUCTION") return OpKind::Reconstruction;
    throw std::invalid_argument("unknown op tag: " + std::string(name));
}

constexpr OpKind kAllOps[] = {OpKind::Fusion, OpKind::Difference,
                              OpKind::Compression, OpKind::Reconstruction};

}  // namespace intersent
