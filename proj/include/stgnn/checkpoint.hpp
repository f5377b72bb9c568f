#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stgnn/matrix.hpp"
#include "stgnn/model.hpp"
#include "stgnn/train.hpp"

namespace stgnn {

// Text checkpoint: an ordered key/value config block, the building id list,
// and named tensors. Values are written as hexfloat so reloading is bit-exact.
struct Checkpoint {
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::string> building_ids;
    std::vector<std::pair<std::string, DenseMatrix>> tensors;

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : config)
            if (k == key) return &v;
        return nullptr;
    }
    const std::string& get(const std::string& key) const {
        const std::string* v = find(key);
        if (!v) throw std::runtime_error("checkpoint: missing config key '" + key + "'");
        return *v;
    }
    const DenseMatrix& tensor(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return t;
        throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
    }
};

inline void save_checkpoint(const std::string& path, const Checkpoint& cp) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
    out << "stgnn checkpoint 1\n";
    out << "config " << cp.config.size() << "\n";
    for (const auto& [k, v] : cp.config) out << k << " = " << v << "\n";
    out << "buildings " << cp.building_ids.size() << "\n";
    for (const auto& id : cp.building_ids) out << id << "\n";
    char buf[48];
    for (const auto& [name, t] : cp.tensors) {
        out << "tensor " << name << " " << t.rows << " " << t.cols << "\n";
        for (int i = 0; i < t.rows; ++i) {
            for (int j = 0; j < t.cols; ++j) {
                std::snprintf(buf, sizeof(buf), "%a", t(i, j));
                out << (j ? " " : "") << buf;
            }
            out << "\n";
        }
    }
    out << "end\n";
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string line;
    auto next_line = [&]() {
        if (!std::getline(in, line))
            throw std::runtime_error("checkpoint: truncated file " + path);
        return line;
    };
    if (next_line() != "stgnn checkpoint 1")
        throw std::runtime_error("checkpoint: unrecognized header in " + path);

    Checkpoint cp;
    std::string word;
    size_t count = 0;
    {
        std::istringstream hd(next_line());
        hd >> word >> count;
        if (word != "config") throw std::runtime_error("checkpoint: expected config block");
    }
    for (size_t i = 0; i < count; ++i) {
        next_line();
        const size_t eq = line.find(" = ");
        if (eq == std::string::npos)
            throw std::runtime_error("checkpoint: malformed config line '" + line + "'");
        cp.config.emplace_back(line.substr(0, eq), line.substr(eq + 3));
    }
    {
        std::istringstream hd(next_line());
        hd >> word >> count;
        if (word != "buildings") throw std::runtime_error("checkpoint: expected buildings block");
    }
    for (size_t i = 0; i < count; ++i) cp.building_ids.push_back(next_line());

    while (true) {
        next_line();
        if (line == "end") break;
        std::istringstream hd(line);
        std::string name;
        int rows = -1, cols = -1;
        hd >> word >> name >> rows >> cols;
        if (word != "tensor" || rows < 0 || cols < 0)
            throw std::runtime_error("checkpoint: malformed tensor header '" + line + "'");
        DenseMatrix t(rows, cols);
        for (int i = 0; i < rows; ++i) {
            std::istringstream vals(next_line());
            for (int j = 0; j < cols; ++j) {
                std::string tok;
                if (!(vals >> tok))
                    throw std::runtime_error("checkpoint: short row in tensor " + name);
                char* endp = nullptr;
                t(i, j) = std::strtod(tok.c_str(), &endp);
                if (endp == tok.c_str())
                    throw std::runtime_error("checkpoint: bad value '" + tok + "' in " + name);
            }
        }
        cp.tensors.emplace_back(name, std::move(t));
    }
    return cp;
}

// ---------------------------------------------------------------------------
// Graph model checkpoints
// ---------------------------------------------------------------------------

inline Checkpoint make_model_checkpoint(AttGcnModel& model,
                                        const std::vector<std::string>& ids) {
    const ModelConfig& c = model.cfg;
    Checkpoint cp;
    cp.config = {{"kind", variant_to_string(c.variant)},
                 {"N", std::to_string(c.N)},
                 {"d", std::to_string(c.d)},
                 {"T", std::to_string(c.T)},
                 {"M", std::to_string(c.M)},
                 {"conv_channels", std::to_string(c.conv_channels)},
                 {"gcn_blocks", std::to_string(c.gcn_blocks)},
                 {"gcn_depth", std::to_string(c.gcn_depth)},
                 {"gru_layers", std::to_string(c.gru_layers)},
                 {"gru_dim", std::to_string(c.gru_dim)},
                 {"att_dim", std::to_string(c.att_dim)},
                 {"embed_dim", std::to_string(c.embed_dim)},
                 {"k", std::to_string(c.k)},
                 {"dropout", format_double(c.dropout_p)}};
    cp.building_ids = ids;
    for (Parameter* p : model.parameters()) cp.tensors.emplace_back(p->name, p->value);
    return cp;
}

inline ModelConfig model_config_from_checkpoint(const Checkpoint& cp) {
    ModelConfig c;
    c.variant = variant_from_string(cp.get("kind"));
    c.N = std::stoi(cp.get("N"));
    c.d = std::stoi(cp.get("d"));
    c.T = std::stoi(cp.get("T"));
    c.M = std::stoi(cp.get("M"));
    c.conv_channels = std::stoi(cp.get("conv_channels"));
    c.gcn_blocks = std::stoi(cp.get("gcn_blocks"));
    c.gcn_depth = std::stoi(cp.get("gcn_depth"));
    c.gru_layers = std::stoi(cp.get("gru_layers"));
    c.gru_dim = std::stoi(cp.get("gru_dim"));
    c.att_dim = std::stoi(cp.get("att_dim"));
    c.embed_dim = std::stoi(cp.get("embed_dim"));
    c.k = std::stoi(cp.get("k"));
    c.dropout_p = std::stod(cp.get("dropout"));
    return c;
}

// Rebuild the trained model. When `fresh_embeddings` supplies a dataset the
// node embeddings are re-derived from its descriptors (new building sets);
// every other weight is restored from the checkpoint.
inline AttGcnModel model_from_checkpoint(const Checkpoint& cp,
                                         const BuildingDataset* fresh_embeddings = nullptr,
                                         uint64_t seed = 0) {
    ModelConfig c = model_config_from_checkpoint(cp);
    if (fresh_embeddings) c.N = fresh_embeddings->N;
    AttGcnModel model(c, fresh_embeddings, seed);
    size_t restored = 0;
    for (Parameter* p : model.parameters()) {
        if (fresh_embeddings && p->name == "node_embeddings") continue;
        const DenseMatrix& t = cp.tensor(p->name);
        if (!t.same_shape(p->value))
            throw std::runtime_error("checkpoint: tensor '" + p->name + "' has shape " +
                                     t.shape_str() + ", expected " + p->value.shape_str());
        p->value = t;
        ++restored;
    }
    const size_t expected = cp.tensors.size() - (fresh_embeddings ? 1 : 0);
    if (restored != expected)
        throw std::runtime_error("checkpoint: tensor count mismatch");
    return model;
}

// ---------------------------------------------------------------------------
// Baseline checkpoints (one sub-model per building, names prefixed b<i>.)
// ---------------------------------------------------------------------------

inline Checkpoint make_baseline_checkpoint(BaselineKind kind,
                                           std::vector<GruOnlyModel>& gru_models,
                                           std::vector<FcnnModel>& fcnn_models,
                                           const std::vector<std::string>& ids) {
    Checkpoint cp;
    cp.building_ids = ids;
    if (kind == BaselineKind::gru_only) {
        if (gru_models.empty()) throw std::invalid_argument("checkpoint: no gru models");
        const GruOnlyModel& m = gru_models.front();
        cp.config = {{"kind", "gru"},
                     {"N", std::to_string(gru_models.size())},
                     {"d", std::to_string(m.d)},
                     {"T", std::to_string(m.T)},
                     {"M", std::to_string(m.M)},
                     {"gru_dim", std::to_string(m.G)},
                     {"gru_layers", std::to_string(m.layers)}};
        for (size_t i = 0; i < gru_models.size(); ++i)
            for (Parameter* p : gru_models[i].parameters())
                cp.tensors.emplace_back("b" + std::to_string(i) + "." + p->name, p->value);
    } else {
        if (fcnn_models.empty()) throw std::invalid_argument("checkpoint: no fcnn models");
        const FcnnModel& m = fcnn_models.front();
        cp.config = {{"kind", "fcnn"},
                     {"N", std::to_string(fcnn_models.size())},
                     {"in_dim", std::to_string(m.in_dim)},
                     {"M", std::to_string(m.M)},
                     {"hidden", std::to_string(m.W.front().value.cols)},
                     {"hidden_layers", std::to_string(m.W.size() - 1)}};
        for (size_t i = 0; i < fcnn_models.size(); ++i)
            for (Parameter* p : fcnn_models[i].parameters())
                cp.tensors.emplace_back("b" + std::to_string(i) + "." + p->name, p->value);
    }
    return cp;
}

struct BaselineModels {
    BaselineKind kind;
    std::vector<GruOnlyModel> gru_models;
    std::vector<FcnnModel> fcnn_models;
};

inline BaselineModels baseline_from_checkpoint(const Checkpoint& cp) {
    BaselineModels out;
    const std::string& kind = cp.get("kind");
    const int N = std::stoi(cp.get("N"));
    auto restore = [&](auto& model, int i) {
        for (Parameter* p : model.parameters()) {
            const DenseMatrix& t = cp.tensor("b" + std::to_string(i) + "." + p->name);
            if (!t.same_shape(p->value))
                throw std::runtime_error("checkpoint: tensor shape mismatch for " + p->name);
            p->value = t;
        }
    };
    if (kind == "gru") {
        out.kind = BaselineKind::gru_only;
        for (int i = 0; i < N; ++i) {
            GruOnlyModel m(std::stoi(cp.get("d")), std::stoi(cp.get("T")),
                           std::stoi(cp.get("M")), std::stoi(cp.get("gru_dim")),
                           std::stoi(cp.get("gru_layers")), 0);
            restore(m, i);
            out.gru_models.push_back(std::move(m));
        }
    } else if (kind == "fcnn") {
        out.kind = BaselineKind::fcnn;
        for (int i = 0; i < N; ++i) {
            FcnnModel m(std::stoi(cp.get("in_dim")), std::stoi(cp.get("M")), 0,
                        std::stoi(cp.get("hidden")), std::stoi(cp.get("hidden_layers")));
            restore(m, i);
            out.fcnn_models.push_back(std::move(m));
        }
    } else {
        throw std::runtime_error("checkpoint: '" + kind + "' is not a baseline checkpoint");
    }
    return out;
}

}  // namespace stgnn
