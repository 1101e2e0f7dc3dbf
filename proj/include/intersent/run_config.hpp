#pragma once

// Flat key=value run configuration shared by the CLI and the training code.
// Unknown keys are an error; CLI flags override file values.

#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

#include "intersent/model.hpp"
#include "intersent/training.hpp"

namespace intersent {

struct RunConfig {
    ModelConfig model;
    TrainConfig train;

    void set(const std::string& key, const std::string& value) {
        try {
            if (key == "d") model.d = std::stoi(value);
            else if (key == "layers") model.layers = std::stoi(value);
            else if (key == "heads") model.heads = std::stoi(value);
            else if (key == "ffn") model.ffn = std::stoi(value);
            else if (key == "op_hidden") model.op_hidden = std::stoi(value);
            else if (key == "bottleneck") model.bottleneck = std::stoi(value);
            else if (key == "max_len") model.max_len = std::stoi(value);
            else if (key == "dropout") model.dropout = std::stod(value);
            else if (key == "identity_reconstruction")
                model.identity_reconstruction = parse_bool(key, value);
            else if (key == "batch") train.batch = std::stoi(value);
            else if (key == "tau") train.tau = std::stod(value);
            else if (key == "alpha") train.alpha = std::stod(value);
            else if (key == "lr") train.lr = std::stod(value);
            else if (key == "lr_encoder") train.lr_encoder = std::stod(value);
            else if (key == "lr_decoder") train.lr_decoder = std::stod(value);
            else if (key == "lr_operator") train.lr_operator = std::stod(value);
            else if (key == "epochs") train.epochs = std::stoi(value);
            else if (key == "warmup_frac") train.warmup_frac = std::stod(value);
            else if (key == "weight_decay") train.weight_decay = std::stod(value);
            else if (key == "seed") train.seed = std::stoull(value);
            else if (key == "mode") train.mode = parse_mode(value);
            else if (key == "freeze_encoder")
                train.freeze_encoder = parse_bool(key, value);
            else throw std::invalid_argument("unknown config key: " + key);
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("bad value for config key " + key + ": " + value);
        }
    }

    static TrainMode parse_mode(const std::string& value) {
        if (value == "JOINT") return TrainMode::Joint;
        if (value == "CONTRASTIVE_ONLY") return TrainMode::ContrastiveOnly;
        if (value == "GENERATIVE_ONLY") return TrainMode::GenerativeOnly;
        throw std::invalid_argument("unknown mode: " + value);
    }

    static std::string mode_name(TrainMode mode) {
        switch (mode) {
            case TrainMode::Joint: return "JOINT";
            case TrainMode::ContrastiveOnly: return "CONTRASTIVE_ONLY";
            case TrainMode::GenerativeOnly: return "GENERATIVE_ONLY";
        }
        throw std::logic_error("bad TrainMode");
    }

    void load_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file " + path.string());
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) {
                throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) +
                                            ": expected key=value");
            }
            set(line.substr(0, eq), line.substr(eq + 1));
        }
    }

private:
    static bool parse_bool(const std::string& key, const std::string& value) {
        if (value == "1" || value == "true") return true;
        if (value == "0" || value == "false") return false;
        throw std::invalid_argument("bad boolean for config key " + key + ": " + value);
    }
};

}  // namespace intersent
