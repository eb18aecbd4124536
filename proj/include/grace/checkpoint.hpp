#ifndef GRACE_CHECKPOINT_HPP
#define GRACE_CHECKPOINT_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "grace/config.hpp"
#include "grace/error.hpp"
#include "grace/model.hpp"
#include "grace/random.hpp"

namespace grace {

inline constexpr const char* kCheckpointMagic = "GRACE1";

// Layout (whitespace-separated text, doubles at 17 significant digits):
//
//   GRACE1
//   config <count>            followed by <count> "key = value" lines
//   kind <binary|continuous> lambda <v> dropout <v>
//   encoder <H>               followed by H layer blocks
//   decoder <H>               followed by H layer blocks
//   centers <K> <d> <K*d values, row-major>
//   rng <0|1> [engine state]
//   end
//
// A layer block is "layer <activation> <out> <in>", out*in weights row-major,
// then "bias" and out values.

struct Checkpoint {
    GraceModel model;
    TrainConfig config;
    std::optional<Rng> rng;
};

namespace detail {

inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_layer(std::ostream& out, const DenseLayer& l) {
    out << "layer " << to_string(l.activation) << ' ' << l.out_dim() << ' ' << l.in_dim() << '\n';
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
        for (Eigen::Index j = 0; j < l.weight.cols(); ++j) out << (j ? " " : "") << fmt17(l.weight(i, j));
        out << '\n';
    }
    out << "bias";
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) out << ' ' << fmt17(l.bias(i));
    out << '\n';
}

class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string word() {
        std::string s;
        if (!(in_ >> s)) throw InputError("checkpoint: unexpected end of file");
        return s;
    }

    void expect(const std::string& w) {
        const std::string got = word();
        if (got != w) throw InputError("checkpoint: expected '" + w + "', found '" + got + "'");
    }

    long long integer() {
        const std::string s = word();
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(s, &pos);
            if (pos == s.size()) return v;
        } catch (const std::exception&) {
        }
        throw InputError("checkpoint: expected an integer, found '" + s + "'");
    }

    double real() {
        const std::string s = word();
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos == s.size()) return v;
        } catch (const std::exception&) {
        }
        throw InputError("checkpoint: expected a number, found '" + s + "'");
    }

    std::istream& stream() { return in_; }

private:
    std::istream& in_;
};

inline DenseLayer read_layer(TokenReader& r) {
    r.expect("layer");
    const Activation act = parse_activation(r.word());
    const long long out = r.integer();
    const long long in = r.integer();
    if (out < 1 || in < 1) throw InputError("checkpoint: bad layer shape");
    DenseLayer l(in, out, act);
    for (Eigen::Index i = 0; i < out; ++i) {
        for (Eigen::Index j = 0; j < in; ++j) l.weight(i, j) = r.real();
    }
    r.expect("bias");
    for (Eigen::Index i = 0; i < out; ++i) l.bias(i) = r.real();
    return l;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const GraceModel& model, const TrainConfig& cfg,
                             const Rng* rng = nullptr) {
    out << kCheckpointMagic << '\n';
    const auto entries = cfg.echo().entries();
    out << "config " << entries.size() << '\n';
    for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
    out << "kind " << to_string(model.content_kind) << " lambda " << detail::fmt17(model.lambda) << " dropout "
        << detail::fmt17(model.dropout) << '\n';
    out << "encoder " << model.encoder.size() << '\n';
    for (const auto& l : model.encoder) detail::write_layer(out, l);
    out << "decoder " << model.decoder.size() << '\n';
    for (const auto& l : model.decoder) detail::write_layer(out, l);
    out << "centers " << model.centers.rows() << ' ' << model.centers.cols() << '\n';
    for (Eigen::Index i = 0; i < model.centers.rows(); ++i) {
        for (Eigen::Index j = 0; j < model.centers.cols(); ++j) out << (j ? " " : "") << detail::fmt17(model.centers(i, j));
        out << '\n';
    }
    if (rng) {
        out << "rng 1 " << *rng << '\n';
    } else {
        out << "rng 0\n";
    }
    out << "end\n";
}

inline Checkpoint read_checkpoint(std::istream& in, const std::string& source = "<checkpoint>") {
    std::string magic;
    if (!std::getline(in, magic) || magic != kCheckpointMagic) {
        throw InputError(source + ": not a checkpoint (missing '" + kCheckpointMagic + "' header)");
    }
    detail::TokenReader r(in);
    Checkpoint cp;
    r.expect("config");
    const long long count = r.integer();
    std::string line;
    std::getline(in, line);
    std::ostringstream cfg_text;
    for (long long i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw InputError(source + ": truncated config section");
        cfg_text << line << '\n';
    }
    std::istringstream cfg_in(cfg_text.str());
    cp.config = TrainConfig::from(KeyValueConfig::parse(cfg_in, source));

    r.expect("kind");
    cp.model.content_kind = parse_content_kind(r.word());
    r.expect("lambda");
    cp.model.lambda = r.real();
    r.expect("dropout");
    cp.model.dropout = r.real();
    r.expect("encoder");
    for (long long h = r.integer(); h > 0; --h) cp.model.encoder.push_back(detail::read_layer(r));
    r.expect("decoder");
    for (long long h = r.integer(); h > 0; --h) cp.model.decoder.push_back(detail::read_layer(r));
    if (cp.model.encoder.empty() || cp.model.decoder.empty()) throw InputError(source + ": model has no layers");
    r.expect("centers");
    const long long k = r.integer();
    const long long d = r.integer();
    if (k < 0 || d < 0) throw InputError(source + ": bad centers shape");
    cp.model.centers.resize(k, d);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) cp.model.centers(i, j) = r.real();
    }
    r.expect("rng");
    if (r.integer() == 1) {
        Rng rng;
        if (!(in >> rng)) throw InputError(source + ": bad RNG state");
        cp.rng = rng;
    }
    r.expect("end");
    return cp;
}

inline void save_checkpoint(const std::filesystem::path& path, const GraceModel& model, const TrainConfig& cfg,
                            const Rng* rng = nullptr) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write checkpoint '" + path.string() + "'");
    write_checkpoint(out, model, cfg, rng);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint '" + path.string() + "'");
    return read_checkpoint(in, path.string());
}

}  // namespace grace

#endif  // GRACE_CHECKPOINT_HPP
