#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "ffr/audits.hpp"
#include "ffr/dataset.hpp"
#include "ffr/models.hpp"
#include "ffr/objectives.hpp"
#include "ffr/training.hpp"

namespace py = pybind11;
using namespace ffr;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
    Tensor t({static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1))});
    std::copy(arr.data(), arr.data() + t.size(), t.data());
    return t;
}

py::array_t<double> array_from_tensor(const Tensor& t) {
    if (t.rank() != 2) throw std::invalid_argument("expected a rank-2 tensor");
    py::array_t<double> arr({t.rows(), t.cols()});
    std::copy(t.data(), t.data() + t.size(), arr.mutable_data());
    return arr;
}

TrainConfig config_from_dict(const py::dict& d) {
    nlohmann::json j;
    for (const auto& item : d) {
        const std::string key = py::cast<std::string>(item.first);
        if (key == "kind" || key == "dataset" || key == "out_dir") {
            j[key] = py::cast<std::string>(item.second);
        } else if (key == "enc_hidden" || key == "dec_hidden") {
            j[key] = py::cast<std::vector<std::size_t>>(item.second);
        } else {
            j[key] = py::cast<double>(item.second);
        }
    }
    return config_from_json(j);
}

py::dict dataset_to_dict(const Dataset& d) {
    py::dict out;
    out["X"] = array_from_tensor(d.X);
    out["A"] = array_from_tensor(d.A);
    out["Y"] = array_from_tensor(d.Y);
    out["attr_names"] = d.attr_names;
    out["label_names"] = d.label_names;
    if (!d.factors.empty()) {
        const std::size_t k = d.factor_names.size();
        py::array_t<std::int32_t> f({d.n(), k});
        std::copy(d.factors.begin(), d.factors.end(), f.mutable_data());
        out["factors"] = f;
        out["factor_names"] = d.factor_names;
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "fair representation learning by disentanglement: core operations";

    m.def(
        "gen_dsprites",
        [](const std::string& out, std::size_t n, int res, std::uint64_t seed, double qs, double qx,
           const std::vector<std::string>& attrs, const std::string& label) {
            DspritesConfig cfg;
            cfg.n = n;
            cfg.resolution = res;
            cfg.seed = seed;
            cfg.sampling.q_shape = qs;
            cfg.sampling.q_xpos = qx;
            cfg.attrs = attrs;
            cfg.label = label;
            save_dataset(generate_dsprites_unfair(cfg), out);
            return out;
        },
        py::arg("out"), py::arg("n") = 10000, py::arg("res") = 16, py::arg("seed") = 0,
        py::arg("qs") = 1.0, py::arg("qx") = 3.0,
        py::arg("attrs") = std::vector<std::string>{"Shape", "Scale"}, py::arg("label") = "XPosition",
        "Generate the correlated sprites dataset and write an FFDSET01 container.");

    m.def(
        "load_dataset", [](const std::string& path) { return dataset_to_dict(load_dataset(path)); },
        py::arg("path"), "Load an FFDSET01 container into numpy arrays.");

    m.def(
        "render_sprite",
        [](const std::string& shape, int scale_idx, int orient_idx, int x_idx, int y_idx, int res) {
            SpriteShape s;
            if (shape == "square") s = SpriteShape::Square;
            else if (shape == "ellipse") s = SpriteShape::Ellipse;
            else if (shape == "heart") s = SpriteShape::Heart;
            else throw std::invalid_argument("unknown shape '" + shape + "'");
            return array_from_tensor(render_sprite(s, scale_idx, orient_idx, x_idx, y_idx, res,
                                                   dsprites_factors()));
        },
        py::arg("shape"), py::arg("scale_idx"), py::arg("orient_idx"), py::arg("x_idx"), py::arg("y_idx"),
        py::arg("res") = 16);

    m.def(
        "train", [](const py::dict& config) { return train(config_from_dict(config)).checkpoint_path; },
        py::arg("config"), "Train an encoder; returns the final checkpoint path.");

    m.def(
        "fair_audit",
        [](const std::string& data_path, const std::string& group, const std::optional<std::string>& ckpt,
           const std::optional<std::string>& label, const std::string& scrub, std::uint64_t seed) {
            Dataset data = load_dataset(data_path);
            GroupExpr expr = parse_group_expr(group, data.attr_names);
            AuditConfig cfg;
            cfg.seed = seed;
            std::optional<Checkpoint> loaded;
            ScrubPolicy policy = ScrubPolicy::None;
            if (ckpt) {
                loaded = load_checkpoint(*ckpt);
                if (loaded->meta.contains("split_seed")) cfg.split_seed = loaded->meta["split_seed"];
                const std::string kind = loaded->meta.value("kind", "ffvae");
                policy = (kind == "ffvae" || kind == "cvae") ? ScrubPolicy::Named : ScrubPolicy::Correlated;
            }
            FairAuditResult r = fair_classification_audit(
                loaded ? &loaded->model : nullptr, data,
                label ? data.label_index(*label) : 0, expr, policy,
                scrub == "noise" ? ScrubMode::Noise : ScrubMode::Drop, cfg);
            py::dict out;
            out["accuracy"] = r.accuracy;
            out["delta_dp"] = r.dp ? py::object(py::float_(*r.dp)) : py::none();
            out["test_loss"] = r.test_loss;
            out["base_rate"] = r.base_rate;
            out["scrubbed_dims"] = r.scrubbed_dims;
            return out;
        },
        py::arg("data"), py::arg("group"), py::arg("ckpt") = py::none(), py::arg("label") = py::none(),
        py::arg("scrub") = "drop", py::arg("seed") = 0,
        "Fair-classification audit; omit ckpt for the raw-input baseline.");

    m.def(
        "predictiveness_audit",
        [](const std::string& ckpt, const std::string& data_path, const std::string& attr,
           std::uint64_t seed) {
            Checkpoint c = load_checkpoint(ckpt);
            Dataset data = load_dataset(data_path);
            AuditConfig cfg;
            cfg.seed = seed;
            if (c.meta.contains("split_seed")) cfg.split_seed = c.meta["split_seed"];
            return predictiveness_audit(c.model, data, data.attr_index(attr), cfg);
        },
        py::arg("ckpt"), py::arg("data"), py::arg("attr"), py::arg("seed") = 0);

    m.def(
        "disentanglement_audit",
        [](const std::string& ckpt, const std::string& data_path, const std::string& attr,
           std::uint64_t seed) {
            Checkpoint c = load_checkpoint(ckpt);
            Dataset data = load_dataset(data_path);
            AuditConfig cfg;
            cfg.seed = seed;
            if (c.meta.contains("split_seed")) cfg.split_seed = c.meta["split_seed"];
            DisentanglementResult r = disentanglement_audit(c.model, data, data.attr_index(attr), cfg);
            py::dict out;
            out["loss"] = r.audit_loss;
            out["reference_loss"] =
                r.reference_loss ? py::object(py::float_(*r.reference_loss)) : py::none();
            return out;
        },
        py::arg("ckpt"), py::arg("data"), py::arg("attr"), py::arg("seed") = 0);

    m.def(
        "mig",
        [](const std::string& ckpt, const std::string& data_path, std::size_t bins) {
            Checkpoint c = load_checkpoint(ckpt);
            return mig(c.model, load_dataset(data_path), bins);
        },
        py::arg("ckpt"), py::arg("data"), py::arg("bins") = 20);

    m.def(
        "mig_from_code",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& code,
           const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& factors,
           std::size_t bins) {
            Tensor c = tensor_from_array(code);
            if (factors.ndim() != 2 || factors.shape(0) != code.shape(0)) {
                throw std::invalid_argument("factors must be [n, k] aligned with code rows");
            }
            std::vector<std::vector<int>> cols(static_cast<std::size_t>(factors.shape(1)));
            for (auto& col : cols) col.resize(static_cast<std::size_t>(factors.shape(0)));
            for (py::ssize_t r = 0; r < factors.shape(0); ++r) {
                for (py::ssize_t k = 0; k < factors.shape(1); ++k) {
                    cols[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] =
                        static_cast<int>(factors.at(r, k));
                }
            }
            return mig_from_code(c, cols, bins);
        },
        py::arg("code"), py::arg("factors"), py::arg("bins") = 20);

    m.def(
        "delta_dp",
        [](const std::vector<int>& yhat, const std::vector<int>& group) -> py::object {
            auto v = delta_dp(yhat, group);
            return v ? py::object(py::float_(*v)) : py::none();
        },
        py::arg("yhat"), py::arg("group"), "Demographic parity distance; None when a group is empty.");

    m.def(
        "pareto_front",
        [](const std::vector<std::pair<double, double>>& points) {
            std::vector<ParetoPoint> pts;
            for (std::size_t i = 0; i < points.size(); ++i) {
                pts.push_back({points[i].first, points[i].second, i});
            }
            std::vector<std::pair<double, double>> out;
            for (const auto& p : pareto_front(pts)) out.push_back({p.dp, p.accuracy});
            return out;
        },
        py::arg("points"), "Non-dominated (dp, accuracy) subset, dp ascending.");

    m.def(
        "parse_group",
        [](const std::string& text, const std::vector<std::string>& names) {
            return parse_group_expr(text, names).to_string();
        },
        py::arg("text"), py::arg("names"), "Parse a group expression; returns the canonical form.");

    m.def(
        "eval_group",
        [](const std::string& text, const std::vector<std::string>& names,
           const std::vector<std::vector<int>>& rows) {
            GroupExpr e = parse_group_expr(text, names);
            std::vector<int> out;
            out.reserve(rows.size());
            for (const auto& r : rows) out.push_back(e.eval(r) ? 1 : 0);
            return out;
        },
        py::arg("text"), py::arg("names"), py::arg("rows"));

    m.def(
        "tc_minibatch_estimate",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& zb,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& mu,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& logvar, std::size_t n_z,
           std::size_t n_b, double tau) {
            return tc_minibatch_estimate(tensor_from_array(zb), tensor_from_array(mu),
                                         tensor_from_array(logvar), n_z, n_b, tau);
        },
        py::arg("zb"), py::arg("mu"), py::arg("logvar"), py::arg("n_z"), py::arg("n_b"),
        py::arg("tau") = 0.05);

    m.attr("__version__") = "0.1.0";
}
