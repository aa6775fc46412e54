#include "ffr/models.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ffr {

using nlohmann::json;

namespace {

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return rng.uniform_tensor({fan_in, fan_out}, -bound, bound);
}

constexpr double kLogVarClamp = 10.0;

} // namespace

Mlp::Mlp(ParamStore& store, const std::string& prefix, MlpSpec spec, Rng init) : spec_(std::move(spec)) {
    std::vector<std::size_t> widths;
    widths.push_back(spec_.input);
    for (auto h : spec_.hidden) widths.push_back(h);
    widths.push_back(spec_.output);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Rng layer_rng = init.fork(l);
        w_.push_back(store.add(prefix + ".w" + std::to_string(l),
                               glorot_uniform(widths[l], widths[l + 1], layer_rng)));
        b_.push_back(store.add(prefix + ".b" + std::to_string(l), Tensor::zeros({widths[l + 1]})));
    }
}

Var Mlp::forward(Tape& tape, ParamStore& store, Var x, bool trainable) const {
    Var h = x;
    for (std::size_t l = 0; l < w_.size(); ++l) {
        h = tape.affine(h, tape.param(store, w_[l], trainable), tape.param(store, b_[l], trainable));
        if (l + 1 < w_.size()) h = tape.activation(h, spec_.act);
    }
    return h;
}

Tensor Mlp::forward_values(const ParamStore& store, const Tensor& x) const {
    Tensor h = x;
    for (std::size_t l = 0; l < w_.size(); ++l) {
        const Tensor& w = store.value(w_[l]);
        const Tensor& c = store.value(b_[l]);
        Tensor y({h.rows(), w.cols()});
        for (std::size_t r = 0; r < y.rows(); ++r) {
            double* yrow = y.data() + r * y.cols();
            for (std::size_t j = 0; j < y.cols(); ++j) yrow[j] = c[j];
            const double* hrow = h.data() + r * h.cols();
            for (std::size_t p = 0; p < h.cols(); ++p) {
                const double hv = hrow[p];
                if (hv == 0.0) continue;
                const double* wrow = w.data() + p * w.cols();
                for (std::size_t j = 0; j < y.cols(); ++j) yrow[j] += hv * wrow[j];
            }
        }
        if (l + 1 < w_.size()) {
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double v = y[i];
                switch (spec_.act) {
                    case Activation::Relu: y[i] = v > 0.0 ? v : 0.0; break;
                    case Activation::LeakyRelu: y[i] = v > 0.0 ? v : 0.2 * v; break;
                    case Activation::Sigmoid: y[i] = 1.0 / (1.0 + std::exp(-v)); break;
                    case Activation::Tanh: y[i] = std::tanh(v); break;
                }
            }
        }
        h = std::move(y);
    }
    return h;
}

FfvaeModel::FfvaeModel(FfvaeSpec spec, Rng init) : spec_(spec) {
    if (spec_.input_dim == 0) throw std::invalid_argument("ffvae: input_dim must be positive");
    if (spec_.enc_hidden.empty() || spec_.dec_hidden.empty()) {
        throw std::invalid_argument("ffvae: encoder and decoder need at least one hidden layer");
    }
    MlpSpec trunk;
    trunk.input = spec_.input_dim;
    trunk.hidden.assign(spec_.enc_hidden.begin(), spec_.enc_hidden.end() - 1);
    trunk.output = spec_.enc_hidden.back();
    trunk.act = Activation::Relu;
    trunk_ = Mlp(store_, "enc.trunk", trunk, init.fork("enc"));

    const std::size_t hdim = spec_.enc_hidden.back();
    Rng heads = init.fork("heads");
    Rng h_mu = heads.fork("mu"), h_lv = heads.fork("logvar"), h_b = heads.fork("b");
    mu_w_ = store_.add("enc.mu.w", glorot_uniform(hdim, spec_.n_z, h_mu));
    mu_b_ = store_.add("enc.mu.b", Tensor::zeros({spec_.n_z}));
    lv_w_ = store_.add("enc.logvar.w", glorot_uniform(hdim, spec_.n_z, h_lv));
    lv_b_ = store_.add("enc.logvar.b", Tensor::zeros({spec_.n_z}));
    if (spec_.n_b > 0) {
        bh_w_ = store_.add("enc.b.w", glorot_uniform(hdim, spec_.n_b, h_b));
        bh_b_ = store_.add("enc.b.b", Tensor::zeros({spec_.n_b}));
    }

    MlpSpec dec;
    dec.input = spec_.n_z + spec_.n_b;
    dec.hidden = spec_.dec_hidden;
    dec.output = spec_.input_dim;
    dec.act = Activation::Relu;
    dec_ = Mlp(store_, "dec", dec, init.fork("dec"));
}

EncoderOutput FfvaeModel::encode(Tape& tape, Var x, bool trainable) {
    if (tape.value(x).cols() != spec_.input_dim) {
        throw std::invalid_argument("encode: input width " + std::to_string(tape.value(x).cols()) +
                                    " does not match model input_dim " + std::to_string(spec_.input_dim));
    }
    Var h = trunk_.forward(tape, store_, x, trainable);
    h = tape.activation(h, Activation::Relu);
    EncoderOutput out;
    out.mu = tape.affine(h, tape.param(store_, mu_w_, trainable), tape.param(store_, mu_b_, trainable));
    Var lv = tape.affine(h, tape.param(store_, lv_w_, trainable), tape.param(store_, lv_b_, trainable));
    out.logvar = tape.clamp(lv, -kLogVarClamp, kLogVarClamp);
    if (spec_.n_b > 0) {
        out.b = tape.affine(h, tape.param(store_, bh_w_, trainable), tape.param(store_, bh_b_, trainable));
    } else {
        out.b = Var{};
    }
    return out;
}

Var FfvaeModel::decode(Tape& tape, Var z, Var b, bool trainable) {
    Var code = b.valid() ? tape.concat_cols(z, b) : z;
    return decode(tape, code, trainable);
}

Var FfvaeModel::decode(Tape& tape, Var code, bool trainable) {
    if (tape.value(code).cols() != code_dim()) {
        throw std::invalid_argument("decode: code width " + std::to_string(tape.value(code).cols()) +
                                    " does not match n_z + n_b = " + std::to_string(code_dim()));
    }
    return dec_.forward(tape, store_, code, trainable);
}

EncodedValues FfvaeModel::encode_values(const Tensor& x) const {
    if (x.cols() != spec_.input_dim) {
        throw std::invalid_argument("encode_values: input width mismatch");
    }
    Tensor h = trunk_.forward_values(store_, x);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = h[i] > 0.0 ? h[i] : 0.0;

    auto head = [&](std::size_t wi, std::size_t bi, std::size_t out_dim) {
        const Tensor& w = store_.value(wi);
        const Tensor& c = store_.value(bi);
        Tensor y({h.rows(), out_dim});
        for (std::size_t r = 0; r < h.rows(); ++r) {
            for (std::size_t j = 0; j < out_dim; ++j) y.at(r, j) = c[j];
            for (std::size_t p = 0; p < h.cols(); ++p) {
                const double hv = h.at(r, p);
                if (hv == 0.0) continue;
                for (std::size_t j = 0; j < out_dim; ++j) y.at(r, j) += hv * w.at(p, j);
            }
        }
        return y;
    };
    EncodedValues out;
    out.mu = head(mu_w_, mu_b_, spec_.n_z);
    out.logvar = head(lv_w_, lv_b_, spec_.n_z);
    for (std::size_t i = 0; i < out.logvar.size(); ++i) {
        out.logvar[i] = std::min(kLogVarClamp, std::max(-kLogVarClamp, out.logvar[i]));
    }
    out.b = spec_.n_b > 0 ? head(bh_w_, bh_b_, spec_.n_b) : Tensor({x.rows(), 0});
    return out;
}

Tensor FfvaeModel::codes(const Tensor& x, Rng* sample_rng) const {
    EncodedValues e = encode_values(x);
    const std::size_t n = x.rows();
    Tensor out({n, code_dim()});
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < spec_.n_z; ++j) {
            double z = e.mu.at(r, j);
            if (sample_rng) z += std::exp(0.5 * e.logvar.at(r, j)) * sample_rng->normal();
            out.at(r, j) = z;
        }
        for (std::size_t j = 0; j < spec_.n_b; ++j) out.at(r, spec_.n_z + j) = e.b.at(r, j);
    }
    return out;
}

Tensor predict_sensitive(const Tensor& b) {
    Tensor p(b.shape());
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double v = b[i];
        p[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    return p;
}

Discriminator::Discriminator(DiscSpec spec, Rng init) : spec_(spec) {
    if (spec_.affine_layers < 2) throw std::invalid_argument("discriminator: need at least 2 affine layers");
    MlpSpec net;
    net.input = spec_.input_dim;
    net.hidden.assign(spec_.affine_layers - 1, spec_.width);
    net.output = 2;
    net.act = Activation::LeakyRelu;
    net_ = Mlp(store_, "disc", net, init.fork("disc"));
}

Var Discriminator::forward(Tape& tape, Var zb, bool trainable) {
    if (tape.value(zb).cols() != spec_.input_dim) {
        throw std::invalid_argument("discriminate: input width " + std::to_string(tape.value(zb).cols()) +
                                    " does not match discriminator width " + std::to_string(spec_.input_dim));
    }
    return net_.forward(tape, store_, zb, trainable);
}

Tensor Discriminator::forward_values(const Tensor& zb) const { return net_.forward_values(store_, zb); }

AuditClassifier::AuditClassifier(std::size_t input_dim, Rng init, std::vector<std::size_t> hidden) {
    MlpSpec net;
    net.input = input_dim;
    net.hidden = std::move(hidden);
    net.output = 1;
    net.act = Activation::Relu;
    net_ = Mlp(store_, "audit", net, init.fork("audit"));
}

Var AuditClassifier::forward(Tape& tape, Var x, bool trainable) {
    return net_.forward(tape, store_, x, trainable);
}

Tensor AuditClassifier::forward_values(const Tensor& x) const { return net_.forward_values(store_, x); }

namespace {

constexpr char kCkptMagic[8] = {'F', 'F', 'C', 'K', 'P', 'T', '0', '1'};

void append_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t read_u64(const char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

void append_doubles(std::string& out, const Tensor& t) {
    const std::size_t bytes = t.size() * 8;
    const std::size_t at = out.size();
    out.resize(at + bytes);
    std::memcpy(out.data() + at, t.data(), bytes);
}

void append_store(std::string& out, const ParamStore& store, const AdamState& adam) {
    for (std::size_t i = 0; i < store.count(); ++i) append_doubles(out, store.value(i));
    for (std::size_t i = 0; i < adam.param_count(); ++i) append_doubles(out, adam.first_moment(i));
    for (std::size_t i = 0; i < adam.param_count(); ++i) append_doubles(out, adam.second_moment(i));
}

json spec_to_json(const FfvaeSpec& s) {
    return {{"input_dim", s.input_dim},
            {"n_z", s.n_z},
            {"n_b", s.n_b},
            {"enc_hidden", s.enc_hidden},
            {"dec_hidden", s.dec_hidden},
            {"likelihood", s.likelihood == Likelihood::Bernoulli ? "bernoulli" : "gaussian"}};
}

FfvaeSpec spec_from_json(const json& j) {
    FfvaeSpec s;
    s.input_dim = j.at("input_dim");
    s.n_z = j.at("n_z");
    s.n_b = j.at("n_b");
    s.enc_hidden = j.at("enc_hidden").get<std::vector<std::size_t>>();
    s.dec_hidden = j.at("dec_hidden").get<std::vector<std::size_t>>();
    s.likelihood = j.at("likelihood") == "bernoulli" ? Likelihood::Bernoulli : Likelihood::Gaussian;
    return s;
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    json header;
    header["model"] = spec_to_json(ckpt.model.spec());
    header["step"] = ckpt.step;
    header["adam_model_steps"] = ckpt.opt_model.step_count();
    header["adam_lr"] = ckpt.opt_model.config().lr;
    header["meta"] = ckpt.meta;
    json names = json::array();
    for (std::size_t i = 0; i < ckpt.model.store().count(); ++i) names.push_back(ckpt.model.store().name(i));
    header["model_params"] = names;
    if (ckpt.disc) {
        header["disc"] = {{"input_dim", ckpt.disc->spec().input_dim},
                          {"width", ckpt.disc->spec().width},
                          {"affine_layers", ckpt.disc->spec().affine_layers}};
        header["adam_disc_steps"] = ckpt.opt_disc.step_count();
    }
    const std::string htext = header.dump();

    std::string out;
    out.append(kCkptMagic, 8);
    append_u64(out, htext.size());
    out += htext;
    append_store(out, ckpt.model.store(), ckpt.opt_model);
    if (ckpt.disc) append_store(out, ckpt.disc->store(), ckpt.opt_disc);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("save_checkpoint: short write to " + path);
}

namespace {

void read_store(const std::string& bytes, std::size_t& off, ParamStore& store, AdamState& adam,
                const std::string& path) {
    auto read_into = [&](Tensor& t) {
        const std::size_t need = t.size() * 8;
        if (off + need > bytes.size()) {
            throw std::runtime_error("load_checkpoint: truncated payload in " + path);
        }
        std::memcpy(t.data(), bytes.data() + off, need);
        off += need;
    };
    for (std::size_t i = 0; i < store.count(); ++i) read_into(store.value(i));
    for (std::size_t i = 0; i < adam.param_count(); ++i) read_into(adam.first_moment(i));
    for (std::size_t i = 0; i < adam.param_count(); ++i) read_into(adam.second_moment(i));
}

} // namespace

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kCkptMagic, 8) != 0) {
        throw std::runtime_error("load_checkpoint: " + path + " is not an FFCKPT01 checkpoint");
    }
    const std::uint64_t hlen = read_u64(bytes.data() + 8);
    if (16 + hlen > bytes.size()) throw std::runtime_error("load_checkpoint: truncated header in " + path);
    json header = json::parse(bytes.substr(16, hlen));

    Checkpoint ckpt;
    // Parameter layout is a pure function of the spec, so rebuilding with any
    // rng and overwriting the payload restores the exact state.
    ckpt.model = FfvaeModel(spec_from_json(header.at("model")), Rng::from_seed(0));
    ckpt.step = header.at("step");
    ckpt.meta = header.value("meta", json::object());
    AdamConfig opt_cfg;
    opt_cfg.lr = header.value("adam_lr", 0.001);
    ckpt.opt_model = AdamState(ckpt.model.store(), opt_cfg);
    ckpt.opt_model.set_step_count(header.at("adam_model_steps"));

    std::size_t off = 16 + hlen;
    read_store(bytes, off, ckpt.model.store(), ckpt.opt_model, path);
    if (header.contains("disc")) {
        DiscSpec ds;
        ds.input_dim = header["disc"].at("input_dim");
        ds.width = header["disc"].at("width");
        ds.affine_layers = header["disc"].at("affine_layers");
        ckpt.disc = Discriminator(ds, Rng::from_seed(0));
        ckpt.opt_disc = AdamState(ckpt.disc->store(), opt_cfg);
        ckpt.opt_disc.set_step_count(header.at("adam_disc_steps"));
        read_store(bytes, off, ckpt.disc->store(), ckpt.opt_disc, path);
    }
    if (off != bytes.size()) {
        throw std::runtime_error("load_checkpoint: " + path + " holds unexpected trailing bytes");
    }
    return ckpt;
}

} // namespace ffr
