#include "ffr/audits.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace ffr {

namespace {

using Node = GroupExpr::Node;
using NodePtr = GroupExpr::NodePtr;

bool eval_node(const Node& n, const std::vector<int>& bits) {
    switch (n.kind) {
        case Node::Kind::Atom: return bits.at(n.attr) != 0;
        case Node::Kind::Not: return !eval_node(*n.lhs, bits);
        case Node::Kind::And: return eval_node(*n.lhs, bits) && eval_node(*n.rhs, bits);
        case Node::Kind::Or: return eval_node(*n.lhs, bits) || eval_node(*n.rhs, bits);
    }
    return false;
}

void collect_atoms(const Node& n, std::vector<std::size_t>& out) {
    switch (n.kind) {
        case Node::Kind::Atom:
            if (std::find(out.begin(), out.end(), n.attr) == out.end()) out.push_back(n.attr);
            break;
        case Node::Kind::Not: collect_atoms(*n.lhs, out); break;
        case Node::Kind::And:
        case Node::Kind::Or:
            collect_atoms(*n.lhs, out);
            collect_atoms(*n.rhs, out);
            break;
    }
}

int precedence(Node::Kind k) {
    switch (k) {
        case Node::Kind::Or: return 0;
        case Node::Kind::And: return 1;
        case Node::Kind::Not: return 2;
        case Node::Kind::Atom: return 3;
    }
    return 3;
}

void print_node(const Node& n, std::string& out) {
    auto child = [&](const Node& c, bool strict) {
        const bool parens = strict ? precedence(c.kind) <= precedence(n.kind)
                                   : precedence(c.kind) < precedence(n.kind);
        if (parens) out.push_back('(');
        print_node(c, out);
        if (parens) out.push_back(')');
    };
    switch (n.kind) {
        case Node::Kind::Atom: out += n.name; break;
        case Node::Kind::Not:
            out.push_back('!');
            child(*n.lhs, /*strict=*/true); // NOT binds one factor
            break;
        case Node::Kind::And:
            child(*n.lhs, false);
            out += " & ";
            child(*n.rhs, false);
            break;
        case Node::Kind::Or:
            child(*n.lhs, false);
            out += " | ";
            child(*n.rhs, false);
            break;
    }
}

// Recursive-descent parser over a token stream carrying byte offsets.
struct Parser {
    std::string_view text;
    const std::vector<std::string>& names;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool eat(std::string_view tok) {
        skip_ws();
        if (text.substr(pos, tok.size()) == tok) {
            pos += tok.size();
            return true;
        }
        return false;
    }

    bool eat_not() { return eat("!") || eat("¬"); }
    bool eat_and() { return eat("&") || eat("∧"); }
    bool eat_or() { return eat("|") || eat("∨"); }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        while (true) {
            skip_ws();
            if (!eat_or()) break;
            NodePtr rhs = parse_term();
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Or;
            n->lhs = std::move(lhs);
            n->rhs = std::move(rhs);
            lhs = std::move(n);
        }
        return lhs;
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_factor();
        while (true) {
            skip_ws();
            if (!eat_and()) break;
            NodePtr rhs = parse_factor();
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::And;
            n->lhs = std::move(lhs);
            n->rhs = std::move(rhs);
            lhs = std::move(n);
        }
        return lhs;
    }

    NodePtr parse_factor() {
        skip_ws();
        if (eat_not()) {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Not;
            n->lhs = parse_factor();
            return n;
        }
        if (eat("(")) {
            NodePtr inner = parse_expr();
            skip_ws();
            if (!eat(")")) throw ParseError("expected ')'", pos);
            return inner;
        }
        skip_ws();
        const std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
            ++pos;
        }
        if (pos == start) throw ParseError("expected attribute name", pos);
        const std::string ident(text.substr(start, pos - start));
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == ident) {
                auto n = std::make_shared<Node>();
                n->kind = Node::Kind::Atom;
                n->attr = i;
                n->name = ident;
                return n;
            }
        }
        throw ParseError("unknown attribute '" + ident + "'", start);
    }
};

} // namespace

bool GroupExpr::eval(const std::vector<int>& attr_bits) const {
    if (!root_) throw std::logic_error("group expr: empty expression");
    return eval_node(*root_, attr_bits);
}

std::vector<std::size_t> GroupExpr::atoms() const {
    std::vector<std::size_t> out;
    if (root_) collect_atoms(*root_, out);
    return out;
}

std::string GroupExpr::to_string() const {
    std::string out;
    if (root_) print_node(*root_, out);
    return out;
}

GroupExpr parse_group_expr(std::string_view text, const std::vector<std::string>& attr_names) {
    Parser p{text, attr_names};
    p.skip_ws();
    if (p.pos >= text.size()) throw ParseError("empty expression", 0);
    NodePtr root = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) throw ParseError("unexpected trailing input", p.pos);
    return GroupExpr(std::move(root));
}

Tensor scrub_rows(const Tensor& rows, const ScrubSpec& spec, Rng rng) {
    if (rows.rank() != 2) throw std::invalid_argument("scrub: expected a rank-2 representation");
    const std::size_t width = rows.cols();
    for (std::size_t d : spec.dims) {
        if (d >= width) {
            throw std::invalid_argument("scrub: dimension " + std::to_string(d) + " out of range for width " +
                                        std::to_string(width));
        }
    }
    std::set<std::size_t> drop(spec.dims.begin(), spec.dims.end());
    if (spec.mode == ScrubMode::Drop) {
        Tensor out({rows.rows(), width - drop.size()});
        for (std::size_t r = 0; r < rows.rows(); ++r) {
            std::size_t k = 0;
            for (std::size_t c = 0; c < width; ++c) {
                if (!drop.count(c)) out.at(r, k++) = rows.at(r, c);
            }
        }
        return out;
    }
    Tensor out = rows;
    // Noise draws are keyed by dimension so scrubbing {i} then {j} equals
    // scrubbing {i,j} draw for draw.
    for (std::size_t d : drop) {
        Rng stream = rng.fork(d);
        for (std::size_t r = 0; r < rows.rows(); ++r) out.at(r, d) = stream.normal();
    }
    return out;
}

std::optional<double> delta_dp(const std::vector<int>& yhat, const std::vector<int>& group) {
    if (yhat.size() != group.size()) throw std::invalid_argument("delta_dp: length mismatch");
    double n1 = 0, s1 = 0, n0 = 0, s0 = 0;
    for (std::size_t i = 0; i < yhat.size(); ++i) {
        if (group[i]) {
            n1 += 1;
            s1 += yhat[i] ? 1 : 0;
        } else {
            n0 += 1;
            s0 += yhat[i] ? 1 : 0;
        }
    }
    if (n1 == 0 || n0 == 0) return std::nullopt;
    return std::abs(s1 / n1 - s0 / n0);
}

namespace {

// Shared audit-classifier trainer. Features come from a provider so encoder
// audits can take a fresh reparameterized sample per minibatch while the
// validation and test sets stay fixed.
struct AuditTask {
    std::function<Tensor(const std::vector<std::size_t>& rows, Rng rng)> features;
    const Tensor* labels = nullptr; // column source
    std::size_t label_col = 0;
    std::size_t feature_dim = 0;
};

struct TrainedAudit {
    AuditClassifier clf;
    double test_loss = 0.0;
    double accuracy = 0.0;
    double base_rate = 0.0;
    std::size_t epochs = 0;
    std::vector<int> test_yhat;
};

Tensor label_column(const Tensor& m, std::size_t col, const std::vector<std::size_t>& rows) {
    Tensor out({rows.size(), 1});
    for (std::size_t i = 0; i < rows.size(); ++i) out.at(i, 0) = m.at(rows[i], col);
    return out;
}

double mean_bce_values(const Tensor& logits, const Tensor& targets) {
    double s = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double l = logits[i], t = targets[i];
        s += std::max(l, 0.0) - l * t + std::log1p(std::exp(-std::abs(l)));
    }
    return s / static_cast<double>(logits.size());
}

TrainedAudit train_audit_mlp(const AuditTask& task, const Splits& split, const AuditConfig& cfg) {
    Rng rng = Rng::from_seed(cfg.seed).fork("audit");
    TrainedAudit out;
    out.clf = AuditClassifier(task.feature_dim, rng.fork("init"));
    AdamConfig opt_cfg;
    opt_cfg.lr = cfg.lr;
    AdamState opt(out.clf.store(), opt_cfg);

    // Standardize classifier inputs with statistics frozen from one draw of
    // the train-split features; encoder codes can sit at arbitrary scales.
    std::vector<double> mu(task.feature_dim, 0.0), sd(task.feature_dim, 1.0);
    {
        Tensor ref = task.features(split.train, rng.fork("standardize"));
        for (std::size_t j = 0; j < task.feature_dim; ++j) {
            double s = 0.0, s2 = 0.0;
            for (std::size_t r = 0; r < ref.rows(); ++r) {
                s += ref.at(r, j);
                s2 += ref.at(r, j) * ref.at(r, j);
            }
            mu[j] = s / static_cast<double>(ref.rows());
            sd[j] = std::sqrt(std::max(0.0, s2 / static_cast<double>(ref.rows()) - mu[j] * mu[j])) + 1e-12;
        }
    }
    auto standardized = [&](const std::vector<std::size_t>& rows, Rng r) {
        Tensor f = task.features(rows, r);
        for (std::size_t row = 0; row < f.rows(); ++row) {
            for (std::size_t j = 0; j < task.feature_dim; ++j) {
                f.at(row, j) = (f.at(row, j) - mu[j]) / sd[j];
            }
        }
        return f;
    };

    const Tensor val_x = standardized(split.val, rng.fork("eval-val"));
    const Tensor val_y = label_column(*task.labels, task.label_col, split.val);
    const Tensor test_x = standardized(split.test, rng.fork("eval-test"));
    const Tensor test_y = label_column(*task.labels, task.label_col, split.test);

    double best_val = 1e300;
    std::vector<Tensor> best_params;
    std::size_t since_best = 0;
    std::vector<std::size_t> order(split.train);
    Rng order_rng = rng.fork("order");
    Rng mb_rng = rng.fork("minibatch");
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng eo = order_rng.fork(epoch);
        eo.shuffle(order);
        Rng em = mb_rng.fork(epoch);
        std::size_t mb = 0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch, ++mb) {
            const std::size_t hi = std::min(order.size(), at + cfg.batch);
            std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(at),
                                          order.begin() + static_cast<std::ptrdiff_t>(hi));
            Tensor xb = standardized(rows, em.fork(mb));
            Tensor yb = label_column(*task.labels, task.label_col, rows);
            Tape tape;
            Var logits = out.clf.forward(tape, tape.constant(std::move(xb)));
            Var loss = tape.mean_all(tape.bernoulli_ce_with_logits(logits, tape.constant(std::move(yb))));
            tape.backward(loss);
            opt.step(out.clf.store());
        }
        ++out.epochs;
        const double val_loss = mean_bce_values(out.clf.forward_values(val_x), val_y);
        if (val_loss < best_val) {
            best_val = val_loss;
            since_best = 0;
            best_params.clear();
            for (std::size_t p = 0; p < out.clf.store().count(); ++p) {
                best_params.push_back(out.clf.store().value(p));
            }
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    if (!best_params.empty()) {
        for (std::size_t p = 0; p < best_params.size(); ++p) out.clf.store().value(p) = best_params[p];
    }

    const Tensor test_logits = out.clf.forward_values(test_x);
    out.test_loss = mean_bce_values(test_logits, test_y);
    double correct = 0.0, positives = 0.0;
    out.test_yhat.resize(test_logits.size());
    for (std::size_t i = 0; i < test_logits.size(); ++i) {
        const int pred = test_logits[i] >= 0.0 ? 1 : 0; // sigma(l) >= 0.5
        out.test_yhat[i] = pred;
        if (pred == static_cast<int>(test_y[i])) correct += 1.0;
        positives += test_y[i];
    }
    out.accuracy = correct / static_cast<double>(test_logits.size());
    out.base_rate = positives / static_cast<double>(test_logits.size());
    return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa += a[i];
        sb += b[i];
        saa += a[i] * a[i];
        sbb += b[i] * b[i];
        sab += a[i] * b[i];
    }
    const double cov = sab / n - (sa / n) * (sb / n);
    const double va = saa / n - (sa / n) * (sa / n);
    const double vb = sbb / n - (sb / n) * (sb / n);
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

// Feature provider over precomputed encoder outputs: fresh z sample per call,
// deterministic b, optional scrub.
struct CodeFeatures {
    EncodedValues enc;
    std::size_t n_z = 0, n_b = 0;
    ScrubSpec scrub;

    Tensor operator()(const std::vector<std::size_t>& rows, Rng rng) const {
        Tensor code({rows.size(), n_z + n_b});
        Rng noise = rng.fork("z");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const std::size_t r = rows[i];
            for (std::size_t j = 0; j < n_z; ++j) {
                code.at(i, j) = enc.mu.at(r, j) + std::exp(0.5 * enc.logvar.at(r, j)) * noise.normal();
            }
            for (std::size_t j = 0; j < n_b; ++j) code.at(i, n_z + j) = enc.b.at(r, j);
        }
        if (scrub.dims.empty()) return code;
        return scrub_rows(code, scrub, rng.fork("scrub"));
    }
};

} // namespace

FairAuditResult fair_classification_audit(const FfvaeModel* model, const Dataset& data,
                                          std::size_t label_idx, const GroupExpr& expr, ScrubPolicy policy,
                                          ScrubMode mode, const AuditConfig& cfg) {
    if (label_idx >= data.Y.cols()) throw std::invalid_argument("fair audit: label index out of range");
    Splits split = split_indices(data.n(), cfg.split_seed);

    AuditTask task;
    task.labels = &data.Y;
    task.label_col = label_idx;

    ScrubSpec scrub;
    scrub.mode = mode;
    CodeFeatures code_features;
    if (model) {
        code_features.enc = model->encode_values(data.X);
        code_features.n_z = model->spec().n_z;
        code_features.n_b = model->spec().n_b;
        if (policy == ScrubPolicy::Named) {
            for (std::size_t attr : expr.atoms()) {
                if (attr >= model->spec().n_b) {
                    throw std::invalid_argument("fair audit: expression names attribute " +
                                                std::to_string(attr) + " beyond n_b");
                }
                scrub.dims.push_back(model->spec().n_z + attr);
            }
        } else if (policy == ScrubPolicy::All) {
            for (std::size_t dcol = 0; dcol < code_features.n_z + code_features.n_b; ++dcol) {
                scrub.dims.push_back(dcol);
            }
        } else if (policy == ScrubPolicy::Correlated) {
            // One dimension per atom: the code dimension most correlated with
            // that attribute on the audit-train split, mean codes, ties to the
            // lowest index. Duplicated picks collapse.
            const std::size_t dim = code_features.n_z + code_features.n_b;
            std::set<std::size_t> picked;
            for (std::size_t attr : expr.atoms()) {
                std::vector<double> bits(split.train.size());
                for (std::size_t i = 0; i < split.train.size(); ++i) {
                    bits[i] = data.A.at(split.train[i], attr);
                }
                double best = -1.0;
                std::size_t best_dim = 0;
                for (std::size_t dcol = 0; dcol < dim; ++dcol) {
                    std::vector<double> col(split.train.size());
                    for (std::size_t i = 0; i < split.train.size(); ++i) {
                        const std::size_t r = split.train[i];
                        col[i] = dcol < code_features.n_z ? code_features.enc.mu.at(r, dcol)
                                                          : code_features.enc.b.at(r, dcol - code_features.n_z);
                    }
                    const double c = std::abs(pearson(col, bits));
                    if (c > best) {
                        best = c;
                        best_dim = dcol;
                    }
                }
                picked.insert(best_dim);
            }
            scrub.dims.assign(picked.begin(), picked.end());
        }
        std::sort(scrub.dims.begin(), scrub.dims.end());
        scrub.dims.erase(std::unique(scrub.dims.begin(), scrub.dims.end()), scrub.dims.end());
        code_features.scrub = scrub;
        task.feature_dim = mode == ScrubMode::Drop ? code_features.n_z + code_features.n_b - scrub.dims.size()
                                                   : code_features.n_z + code_features.n_b;
        task.features = code_features;
    } else {
        // Raw-input baseline: the classifier reads X directly.
        task.feature_dim = data.feature_dim();
        const Tensor* X = &data.X;
        task.features = [X](const std::vector<std::size_t>& rows, Rng) { return gather_rows(*X, rows); };
    }

    TrainedAudit trained = train_audit_mlp(task, split, cfg);

    FairAuditResult res;
    res.accuracy = trained.accuracy;
    res.test_loss = trained.test_loss;
    res.base_rate = trained.base_rate;
    res.scrubbed_dims = scrub.dims;
    res.epochs_trained = trained.epochs;

    std::vector<int> group(split.test.size());
    std::vector<int> bits(data.A.cols());
    for (std::size_t i = 0; i < split.test.size(); ++i) {
        for (std::size_t a = 0; a < data.A.cols(); ++a) {
            bits[a] = static_cast<int>(data.A.at(split.test[i], a));
        }
        group[i] = expr.eval(bits) ? 1 : 0;
    }
    res.dp = delta_dp(trained.test_yhat, group);
    return res;
}

double predictiveness_audit(const FfvaeModel& model, const Dataset& data, std::size_t attr_idx,
                            const AuditConfig& cfg) {
    if (attr_idx >= model.spec().n_b) throw std::invalid_argument("predictiveness audit: index beyond n_b");
    Splits split = split_indices(data.n(), cfg.split_seed);
    EncodedValues enc = model.encode_values(data.X);

    AuditTask task;
    task.labels = &data.A;
    task.label_col = attr_idx;
    task.feature_dim = 1;
    task.features = [enc = std::move(enc), attr_idx](const std::vector<std::size_t>& rows, Rng) {
        Tensor f({rows.size(), 1});
        for (std::size_t i = 0; i < rows.size(); ++i) f.at(i, 0) = enc.b.at(rows[i], attr_idx);
        return f;
    };
    return train_audit_mlp(task, split, cfg).test_loss;
}

DisentanglementResult disentanglement_audit(const FfvaeModel& model, const Dataset& data,
                                            std::size_t attr_idx, const AuditConfig& cfg,
                                            bool with_reference) {
    if (attr_idx >= model.spec().n_b) throw std::invalid_argument("disentanglement audit: index beyond n_b");
    Splits split = split_indices(data.n(), cfg.split_seed);

    CodeFeatures features;
    features.enc = model.encode_values(data.X);
    features.n_z = model.spec().n_z;
    features.n_b = model.spec().n_b;
    features.scrub.mode = ScrubMode::Drop;
    features.scrub.dims = {model.spec().n_z + attr_idx};

    AuditTask task;
    task.labels = &data.A;
    task.label_col = attr_idx;
    task.feature_dim = model.code_dim() - 1;
    task.features = features;

    DisentanglementResult res;
    res.audit_loss = train_audit_mlp(task, split, cfg).test_loss;

    if (with_reference && !data.factors.empty()) {
        // Predict a_i from the other ground-truth factors alone: the
        // information about a_i inherent in the data.
        const std::size_t k = data.factor_names.size();
        const std::size_t skip = data.factor_index(data.attr_names[attr_idx]);
        std::vector<std::size_t> cols;
        for (std::size_t c = 0; c < k; ++c) {
            if (c != skip) cols.push_back(c);
        }
        Tensor feats({data.n(), cols.size()});
        for (std::size_t j = 0; j < cols.size(); ++j) {
            double s = 0, s2 = 0;
            for (std::size_t r = 0; r < data.n(); ++r) s += data.factors[r * k + cols[j]];
            const double mu = s / static_cast<double>(data.n());
            for (std::size_t r = 0; r < data.n(); ++r) {
                const double d = data.factors[r * k + cols[j]] - mu;
                s2 += d * d;
            }
            const double sd = std::sqrt(s2 / static_cast<double>(data.n())) + 1e-12;
            for (std::size_t r = 0; r < data.n(); ++r) {
                feats.at(r, j) = (data.factors[r * k + cols[j]] - mu) / sd;
            }
        }
        AuditTask ref;
        ref.labels = &data.A;
        ref.label_col = attr_idx;
        ref.feature_dim = cols.size();
        ref.features = [&feats](const std::vector<std::size_t>& rows, Rng) {
            return gather_rows(feats, rows);
        };
        res.reference_loss = train_audit_mlp(ref, split, cfg).test_loss;
    }
    return res;
}

double empirical_mi(const std::vector<double>& latent, const std::vector<int>& factor, std::size_t bins) {
    if (latent.size() != factor.size() || latent.empty()) {
        throw std::invalid_argument("empirical_mi: column length mismatch");
    }
    const std::size_t n = latent.size();

    std::vector<double> sorted(latent);
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) return 0.0; // constant latent

    // Equal-mass bin edges; ties share a bin via upper_bound assignment.
    std::vector<double> edges;
    for (std::size_t b = 1; b < bins; ++b) {
        edges.push_back(sorted[b * n / bins]);
    }
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::map<int, std::size_t> fvals;
    for (int f : factor) fvals.emplace(f, fvals.size());
    if (fvals.size() < 2) return 0.0;

    const std::size_t nb = edges.size() + 1, nf = fvals.size();
    std::vector<double> joint(nb * nf, 0.0), pb(nb, 0.0), pf(nf, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto b = static_cast<std::size_t>(
            std::upper_bound(edges.begin(), edges.end(), latent[i]) - edges.begin());
        const std::size_t f = fvals[factor[i]];
        joint[b * nf + f] += 1.0;
        pb[b] += 1.0;
        pf[f] += 1.0;
    }
    double mi = 0.0;
    const double dn = static_cast<double>(n);
    for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t f = 0; f < nf; ++f) {
            const double pj = joint[b * nf + f] / dn;
            if (pj > 0.0) mi += pj * std::log(pj * dn * dn / (pb[b] * pf[f]));
        }
    }
    return std::max(0.0, mi);
}

namespace {

double plugin_entropy(const std::vector<int>& factor) {
    std::map<int, double> counts;
    for (int f : factor) counts[f] += 1.0;
    const double n = static_cast<double>(factor.size());
    double h = 0.0;
    for (const auto& [v, c] : counts) h -= c / n * std::log(c / n);
    return h;
}

} // namespace

double mig_from_code(const Tensor& code, const std::vector<std::vector<int>>& factors, std::size_t bins) {
    if (code.rank() != 2 || code.cols() < 2) {
        throw std::invalid_argument("mig: need at least two code dimensions");
    }
    const std::size_t n = code.rows(), d = code.cols();
    double total = 0.0;
    std::size_t used = 0;
    std::vector<double> col(n);
    for (const auto& factor : factors) {
        if (factor.size() != n) throw std::invalid_argument("mig: factor column length mismatch");
        const double h = plugin_entropy(factor);
        if (h <= 0.0) continue; // constant factor carries no information
        double best = -1.0, second = -1.0;
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t r = 0; r < n; ++r) col[r] = code.at(r, j);
            const double mi = empirical_mi(col, factor, bins);
            if (mi > best) {
                second = best;
                best = mi;
            } else if (mi > second) {
                second = mi;
            }
        }
        total += (best - second) / h;
        ++used;
    }
    if (used == 0) throw std::invalid_argument("mig: no factor with positive entropy");
    return total / static_cast<double>(used);
}

double mig(const FfvaeModel& model, const Dataset& data, std::size_t bins) {
    if (data.factors.empty()) throw std::invalid_argument("mig: dataset carries no ground-truth factors");
    if (data.factor_thresholds.size() != data.factor_names.size()) {
        throw std::invalid_argument("mig: dataset carries no binarization thresholds");
    }
    Tensor code = model.codes(data.X, nullptr); // posterior means plus b
    const std::size_t k = data.factor_names.size();
    std::vector<std::vector<int>> bits(k, std::vector<int>(data.n()));
    for (std::size_t r = 0; r < data.n(); ++r) {
        for (std::size_t f = 0; f < k; ++f) {
            bits[f][r] = data.factors[r * k + f] >= data.factor_thresholds[f] ? 1 : 0;
        }
    }
    return mig_from_code(code, bits, bins);
}

std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> points) {
    if (points.empty()) return {};
    std::sort(points.begin(), points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
        if (a.dp != b.dp) return a.dp < b.dp;
        return a.accuracy > b.accuracy;
    });
    std::vector<ParetoPoint> front;
    double best_acc = -1.0;
    double last_dp = -1.0;
    for (const auto& p : points) {
        if (!front.empty() && p.dp == last_dp) continue; // equal dp: first (highest acc) wins
        if (p.accuracy > best_acc) {
            front.push_back(p);
            best_acc = p.accuracy;
            last_dp = p.dp;
        }
    }
    return front;
}

} // namespace ffr
