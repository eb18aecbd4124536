#ifndef GRACE_CONFIG_HPP
#define GRACE_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "grace/error.hpp"
#include "grace/nn.hpp"
#include "grace/propagation.hpp"

namespace grace {

/// Flat "key = value" file; '#' starts a comment, blank lines ignored.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>") {
        KeyValueConfig cfg;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw InputError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
            }
            const std::string key = trim(line.substr(0, eq));
            if (key.empty()) throw InputError(source + ":" + std::to_string(lineno) + ": empty key");
            cfg.values_[key] = trim(line.substr(eq + 1));
        }
        return cfg;
    }

    static KeyValueConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open config file '" + path + "'");
        return parse(in, path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::map<std::string, std::string>& entries() const { return values_; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        touched_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string require_string(const std::string& key) const {
        touched_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end() || it->second.empty()) throw InputError("config: missing required key '" + key + "'");
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        if (!has(key)) {
            touched_.insert(key);
            return fallback;
        }
        const std::string s = get_string(key, "");
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != s.size()) throw InputError("config: key '" + key + "' is not a number: '" + s + "'");
        return v;
    }

    long long get_int(const std::string& key, long long fallback) const {
        if (!has(key)) {
            touched_.insert(key);
            return fallback;
        }
        const std::string s = get_string(key, "");
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != s.size()) throw InputError("config: key '" + key + "' is not an integer: '" + s + "'");
        return v;
    }

    /// Keys present in the file that no getter asked for.
    std::vector<std::string> unused_keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_) {
            if (!touched_.count(k)) out.push_back(k);
        }
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> touched_;
};

enum class ContentKind { Binary, Continuous };

inline const char* to_string(ContentKind k) { return k == ContentKind::Binary ? "binary" : "continuous"; }

inline ContentKind parse_content_kind(const std::string& s) {
    if (s == "binary") return ContentKind::Binary;
    if (s == "continuous") return ContentKind::Continuous;
    throw InputError("unknown content kind '" + s + "' (expected binary|continuous)");
}

/// Hyperparameters of one training run. Defaults follow the reference
/// experimental setup.
struct TrainConfig {
    double lambda = 0.1;
    double alpha = 0.9;
    double dropout = 0.5;
    int hidden_layers = 2;         // H
    int embed_dim = 0;             // 0 = input width / 4
    int clusters = 0;              // K, must be set
    double rho = 1e-3;
    int pretrain_epochs = 1000;    // T0
    int macro_steps = 30;          // T
    int micro_steps = 30;
    OptimizerRule optimizer = OptimizerRule::AccumulatedGradient;
    std::uint64_t seed = 0;
    PropagationVariant propagation = PropagationVariant::ExactStationary;
    int propagation_order = kDefaultNeumannOrder;
    double pretrain_stop_loss = 1e-6;
    // Optional co-training stop rule; disabled while either is <= 0.
    double cotrain_stop_j1 = 0.0;
    double cotrain_stop_j2 = 0.0;

    void validate() const {
        if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
        if (!(alpha >= 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in [0,1)");
        if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("dropout must lie in [0,1)");
        if (hidden_layers < 1) throw ParameterError("hidden_layers must be >= 1");
        if (embed_dim < 0) throw ParameterError("embed_dim must be >= 0");
        if (clusters < 2) throw ParameterError("clusters (K) must be >= 2");
        if (!(rho > 0.0)) throw ParameterError("rho must be > 0");
        if (pretrain_epochs < 0) throw ParameterError("pretrain_epochs must be >= 0");
        if (macro_steps < 1 || micro_steps < 1) throw ParameterError("macro_steps and micro_steps must be >= 1");
        if (propagation_order < 0) throw ParameterError("propagation_order must be >= 0");
    }

    static TrainConfig from(const KeyValueConfig& kv) {
        TrainConfig c;
        c.lambda = kv.get_double("lambda", c.lambda);
        c.alpha = kv.get_double("alpha", c.alpha);
        c.dropout = kv.get_double("dropout", c.dropout);
        c.hidden_layers = static_cast<int>(kv.get_int("hidden_layers", c.hidden_layers));
        c.embed_dim = static_cast<int>(kv.get_int("embed_dim", c.embed_dim));
        c.clusters = static_cast<int>(kv.get_int("clusters", c.clusters));
        c.rho = kv.get_double("rho", c.rho);
        c.pretrain_epochs = static_cast<int>(kv.get_int("pretrain_epochs", c.pretrain_epochs));
        c.macro_steps = static_cast<int>(kv.get_int("macro_steps", c.macro_steps));
        c.micro_steps = static_cast<int>(kv.get_int("micro_steps", c.micro_steps));
        c.optimizer = parse_optimizer_rule(kv.get_string("optimizer", to_string(c.optimizer)));
        const long long seed = kv.get_int("seed", 0);
        if (seed < 0) throw ParameterError("seed must be >= 0");
        c.seed = static_cast<std::uint64_t>(seed);
        c.propagation = parse_propagation_variant(kv.get_string("propagation", to_string(c.propagation)));
        c.propagation_order = static_cast<int>(kv.get_int("propagation_order", c.propagation_order));
        c.pretrain_stop_loss = kv.get_double("pretrain_stop_loss", c.pretrain_stop_loss);
        c.cotrain_stop_j1 = kv.get_double("cotrain_stop_j1", c.cotrain_stop_j1);
        c.cotrain_stop_j2 = kv.get_double("cotrain_stop_j2", c.cotrain_stop_j2);
        return c;
    }

    /// Inverse of from(): every field as a key/value pair.
    KeyValueConfig echo() const {
        KeyValueConfig kv;
        auto num = [](double v) {
            std::ostringstream os;
            os.precision(17);
            os << v;
            return os.str();
        };
        kv.set("lambda", num(lambda));
        kv.set("alpha", num(alpha));
        kv.set("dropout", num(dropout));
        kv.set("hidden_layers", std::to_string(hidden_layers));
        kv.set("embed_dim", std::to_string(embed_dim));
        kv.set("clusters", std::to_string(clusters));
        kv.set("rho", num(rho));
        kv.set("pretrain_epochs", std::to_string(pretrain_epochs));
        kv.set("macro_steps", std::to_string(macro_steps));
        kv.set("micro_steps", std::to_string(micro_steps));
        kv.set("optimizer", to_string(optimizer));
        kv.set("seed", std::to_string(seed));
        kv.set("propagation", to_string(propagation));
        kv.set("propagation_order", std::to_string(propagation_order));
        kv.set("pretrain_stop_loss", num(pretrain_stop_loss));
        kv.set("cotrain_stop_j1", num(cotrain_stop_j1));
        kv.set("cotrain_stop_j2", num(cotrain_stop_j2));
        return kv;
    }
};

}  // namespace grace

#endif  // GRACE_CONFIG_HPP
