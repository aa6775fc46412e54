#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ffr/audits.hpp"
#include "ffr/dataset.hpp"
#include "ffr/models.hpp"
#include "ffr/reports.hpp"
#include "ffr/training.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace ffr;

namespace {

// Exit-code contract: 0 success, 1 operational failure, 2 usage error.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void ensure_writable(const std::string& path, bool force) {
    if (fs::exists(path)) {
        if (!force && !(fs::is_directory(path) && fs::is_empty(path))) {
            throw std::runtime_error("refusing to overwrite existing " + path + " (pass --force)");
        }
    }
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::string cur;
    for (char c : csv + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(std::stod(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& csv) {
    std::vector<std::uint64_t> out;
    for (double v : parse_double_list(csv)) out.push_back(static_cast<std::uint64_t>(v));
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& csv) {
    std::vector<std::size_t> out;
    for (double v : parse_double_list(csv)) out.push_back(static_cast<std::size_t>(v));
    return out;
}

std::vector<std::string> parse_name_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    return out;
}

ThresholdColumn parse_threshold_column(const std::string& text) {
    const auto pos = text.rfind(':');
    if (pos == std::string::npos) return {text, 0.5};
    return {text.substr(0, pos), std::stod(text.substr(pos + 1))};
}

std::size_t default_jobs() {
    if (const char* env = std::getenv("FFR_JOBS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return 1;
}

// ---------------------------------------------------------------------------
// gen-dsprites

struct GenArgs {
    std::string out;
    std::size_t n = 10000;
    int res = 16;
    int orientation_card = 40;
    std::uint64_t seed = 0;
    double qs = 1.0, qx = 3.0;
    int index_base = 1;
    std::string attrs = "Shape,Scale";
    std::string label = "XPosition";
    bool force = false;
};

int cmd_gen(const GenArgs& a) {
    ensure_writable(a.out, a.force);
    DspritesConfig cfg;
    cfg.n = a.n;
    cfg.resolution = a.res;
    cfg.orientation_cardinality = a.orientation_card;
    cfg.seed = a.seed;
    cfg.sampling.q_shape = a.qs;
    cfg.sampling.q_xpos = a.qx;
    cfg.sampling.index_base = a.index_base;
    cfg.attrs = parse_name_list(a.attrs);
    cfg.label = a.label;
    Dataset d = generate_dsprites_unfair(cfg);
    save_dataset(d, a.out);
    std::cout << "wrote " << a.out << " n=" << d.n() << " dim=" << d.feature_dim() << " attrs=" << a.attrs
              << " label=" << a.label << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// ingest-csv

struct IngestArgs {
    std::string csv;
    std::string out;
    std::vector<std::string> sensitive;
    std::string label;
    bool force = false;
};

int cmd_ingest(const IngestArgs& a) {
    ensure_writable(a.out, a.force);
    std::vector<ThresholdColumn> sens;
    for (const auto& s : a.sensitive) sens.push_back(parse_threshold_column(s));
    Dataset d = ingest_csv(a.csv, sens, parse_threshold_column(a.label));
    save_dataset(d, a.out);
    std::cout << "wrote " << a.out << " n=" << d.n() << " dim=" << d.feature_dim() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string config_file;
    json overrides = json::object();
    std::string resume;
    bool force = false;
};

int cmd_train(const TrainArgs& a) {
    TrainConfig cfg;
    if (!a.config_file.empty()) cfg = config_from_json(json::parse(read_file(a.config_file)));
    cfg = config_from_json(a.overrides, cfg);
    if (cfg.dataset.empty()) throw UsageError("train: --dataset (or a config file) is required");
    if (cfg.out_dir.empty()) throw UsageError("train: --out-dir is required");
    if (a.resume.empty()) ensure_writable(cfg.out_dir, a.force);
    TrainResult res = train(cfg, a.resume.empty() ? std::optional<std::string>{} : a.resume);
    const LossBreakdown last = res.trace.empty() ? LossBreakdown{} : res.trace.back().loss;
    std::cout << "trained " << cfg.kind << " steps=" << cfg.steps << " total=" << format_double(last.total)
              << " recon=" << format_double(last.reconstruction) << " ckpt=" << res.checkpoint_path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
    json overrides = json::object();
    std::string out;
    std::string alphas = "0", gammas = "0", betas = "1", seeds = "0";
    std::size_t jobs = default_jobs();
    bool force = false;
};

int cmd_sweep(const SweepArgs& a) {
    json overrides = a.overrides;
    if (!a.out.empty()) overrides["out_dir"] = a.out;
    TrainConfig base = config_from_json(overrides);
    if (base.dataset.empty()) throw UsageError("sweep: --dataset is required");
    if (base.out_dir.empty()) throw UsageError("sweep: --out is required");
    ensure_writable(base.out_dir, a.force);
    SweepGrid grid;
    grid.alphas = parse_double_list(a.alphas);
    grid.gammas = parse_double_list(a.gammas);
    grid.betas = parse_double_list(a.betas);
    grid.seeds = parse_u64_list(a.seeds);
    auto runs = hyperparameter_sweep(base, grid, a.jobs);
    std::size_t ok = 0;
    for (const auto& r : runs) ok += r.status == "ok" ? 1 : 0;
    std::cout << "sweep finished: " << ok << "/" << runs.size() << " runs ok, manifest at " << base.out_dir
              << "/manifest.csv\n";
    return ok == runs.size() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// audit

struct AuditArgs {
    std::string ckpt;
    std::string data;
    std::string label;
    std::string group;
    std::string attr;
    std::string kind = "fair";
    std::string scrub = "drop";
    std::string policy;
    bool raw_input = false;
    std::string out;
    std::uint64_t seed = 0;
    bool force = false;
};

json hyper_from_meta(const json& meta) {
    json h = json::object();
    for (const char* k : {"kind", "alpha", "beta", "gamma", "seed", "split_seed"}) {
        if (meta.contains(k)) h[k] = meta[k];
    }
    return h;
}

int cmd_audit(const AuditArgs& a) {
    if (!a.out.empty()) ensure_writable(a.out, a.force);
    Dataset data = load_dataset(a.data);

    std::optional<Checkpoint> ckpt;
    if (!a.raw_input) {
        if (a.ckpt.empty()) throw UsageError("audit: --ckpt or --raw-input is required");
        ckpt = load_checkpoint(a.ckpt);
    }
    AuditConfig cfg;
    cfg.seed = a.seed;
    if (ckpt && ckpt->meta.contains("split_seed")) cfg.split_seed = ckpt->meta["split_seed"];

    json report;
    report["hyper"] = ckpt ? hyper_from_meta(ckpt->meta) : json{{"kind", "raw-input"}};
    report["seed"] = a.seed;

    std::ostringstream line;
    if (a.kind == "fair") {
        if (a.group.empty()) throw UsageError("audit: --group is required for the fair audit");
        GroupExpr expr;
        try {
            expr = parse_group_expr(a.group, data.attr_names);
        } catch (const ParseError& e) {
            std::cerr << "audit: cannot parse --group: " << e.what() << "\n";
            return 2;
        }
        const std::string label_name = a.label.empty() ? data.label_names.at(0) : a.label;
        const std::size_t label_idx = data.label_index(label_name);
        const ScrubMode mode = a.scrub == "noise" ? ScrubMode::Noise : ScrubMode::Drop;
        ScrubPolicy policy = ScrubPolicy::None;
        if (!a.raw_input) {
            std::string p = a.policy;
            if (p.empty()) {
                const std::string kind = ckpt->meta.value("kind", "ffvae");
                p = (kind == "ffvae" || kind == "cvae") ? "named" : "correlated";
            }
            if (p == "named") policy = ScrubPolicy::Named;
            else if (p == "correlated") policy = ScrubPolicy::Correlated;
            else if (p == "all") policy = ScrubPolicy::All;
            else if (p == "none") policy = ScrubPolicy::None;
            else throw UsageError("audit: unknown --policy '" + p + "'");
        }
        FairAuditResult res = fair_classification_audit(ckpt ? &ckpt->model : nullptr, data, label_idx, expr,
                                                        policy, mode, cfg);
        report["type"] = "fair_classification";
        report["label"] = label_name;
        report["group"] = expr.to_string();
        report["scrub_mode"] = a.scrub;
        report["scrubbed_dims"] = res.scrubbed_dims;
        report["accuracy"] = res.accuracy;
        report["delta_dp"] = res.dp ? json(*res.dp) : json(nullptr);
        report["delta_dp_defined"] = res.dp.has_value();
        report["test_loss_nats"] = res.test_loss;
        report["base_rate"] = res.base_rate;
        report["epochs"] = res.epochs_trained;
        line << expr.to_string() << " acc=" << format_double(res.accuracy)
             << " dp=" << (res.dp ? format_double(*res.dp) : "undefined");
    } else if (a.kind == "predictiveness" || a.kind == "disentanglement") {
        if (a.raw_input || !ckpt) throw UsageError("audit: " + a.kind + " needs --ckpt");
        if (a.attr.empty()) throw UsageError("audit: --attr is required for " + a.kind);
        const std::size_t attr_idx = data.attr_index(a.attr);
        report["type"] = a.kind;
        report["attr"] = a.attr;
        if (a.kind == "predictiveness") {
            const double loss = predictiveness_audit(ckpt->model, data, attr_idx, cfg);
            report["loss_nats"] = loss;
            line << a.attr << " predictiveness_loss=" << format_double(loss);
        } else {
            DisentanglementResult res = disentanglement_audit(ckpt->model, data, attr_idx, cfg);
            report["loss_nats"] = res.audit_loss;
            report["reference_loss_nats"] = res.reference_loss ? json(*res.reference_loss) : json(nullptr);
            line << a.attr << " disentanglement_loss=" << format_double(res.audit_loss);
            if (res.reference_loss) line << " reference=" << format_double(*res.reference_loss);
        }
    } else {
        throw UsageError("audit: unknown --kind '" + a.kind + "'");
    }

    if (!a.out.empty()) write_file(a.out, report.dump(2) + "\n");
    std::cout << line.str() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// mig

struct MigArgs {
    std::string ckpt;
    std::string data;
    std::size_t bins = 20;
    std::string out;
    bool force = false;
};

int cmd_mig(const MigArgs& a) {
    if (!a.out.empty()) ensure_writable(a.out, a.force);
    Checkpoint ckpt = load_checkpoint(a.ckpt);
    Dataset data = load_dataset(a.data);
    const double value = mig(ckpt.model, data, a.bins);
    json report = {{"type", "mig"}, {"mig", value}, {"bins", a.bins}, {"hyper", hyper_from_meta(ckpt.meta)}};
    if (!a.out.empty()) write_file(a.out, report.dump(2) + "\n");
    std::cout << "mig=" << format_double(value) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// report scanning shared by pareto/report

struct AuditRecord {
    std::string run_id;
    json body;
};

std::vector<AuditRecord> scan_audit_reports(const std::string& runs_dir) {
    std::vector<AuditRecord> out;
    if (!fs::exists(runs_dir)) return out;
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(runs_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json" &&
            entry.path().filename() != "config.json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        json body;
        try {
            body = json::parse(read_file(p.string()));
        } catch (const std::exception& e) {
            std::cerr << "skipping unreadable report " << p.string() << ": " << e.what() << "\n";
            continue;
        }
        if (!body.is_object() || !body.contains("type")) continue;
        AuditRecord rec;
        rec.body = std::move(body);
        const fs::path rel = fs::relative(p.parent_path(), runs_dir);
        rec.run_id = rel == "." ? "" : rel.string();
        out.push_back(std::move(rec));
    }
    return out;
}

std::string num_or(const json& j, const char* key, const std::string& fallback = "0") {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    return format_double(j[key].get<double>());
}

CsvTable build_rollup(const std::vector<AuditRecord>& records) {
    CsvTable t;
    t.columns = {"run_id", "model", "alpha", "gamma", "beta", "expr", "accuracy", "delta_dp"};
    for (const auto& r : records) {
        if (r.body["type"] != "fair_classification") continue;
        const json& h = r.body.value("hyper", json::object());
        t.rows.push_back({r.run_id, h.value("kind", "unknown"), num_or(h, "alpha"), num_or(h, "gamma"),
                          num_or(h, "beta", "1"), r.body.value("group", ""),
                          num_or(r.body, "accuracy"),
                          r.body.value("delta_dp_defined", true) ? num_or(r.body, "delta_dp") : "undefined"});
    }
    return t;
}

// ---------------------------------------------------------------------------
// pareto

struct ParetoArgs {
    std::string runs;
    std::string out;
    std::string svg;
    bool force = false;
};

int cmd_pareto(const ParetoArgs& a) {
    ensure_writable(a.out, a.force);
    if (!a.svg.empty()) ensure_writable(a.svg, a.force);

    CsvTable rollup;
    const std::string rollup_path = a.runs + "/rollup.csv";
    if (fs::exists(rollup_path)) {
        rollup = csv_from_file(rollup_path);
    } else {
        rollup = build_rollup(scan_audit_reports(a.runs));
    }
    if (rollup.rows.empty()) {
        std::cerr << "pareto: no fair-classification audit rows under " << a.runs << "\n";
        return 1;
    }

    // Front per (model, expr) series.
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<ParetoPoint, std::size_t>>> series;
    const std::size_t ci_model = rollup.column_index("model");
    const std::size_t ci_expr = rollup.column_index("expr");
    const std::size_t ci_acc = rollup.column_index("accuracy");
    const std::size_t ci_dp = rollup.column_index("delta_dp");
    for (std::size_t i = 0; i < rollup.rows.size(); ++i) {
        const auto& row = rollup.rows[i];
        if (row[ci_dp] == "undefined") continue;
        ParetoPoint p;
        p.dp = std::stod(row[ci_dp]);
        p.accuracy = std::stod(row[ci_acc]);
        p.tag = i;
        series[{row[ci_model], row[ci_expr]}].push_back({p, i});
    }

    CsvTable front_csv;
    front_csv.columns = {"model", "expr", "run_id", "accuracy", "delta_dp"};
    std::vector<PlotSeries> plots;
    for (const auto& [key, pts] : series) {
        std::vector<ParetoPoint> raw;
        for (const auto& [p, idx] : pts) raw.push_back(p);
        std::vector<ParetoPoint> front = pareto_front(raw);
        PlotSeries ps;
        ps.name = key.first + " " + key.second;
        for (const auto& p : raw) ps.points.push_back({p.dp, p.accuracy});
        for (const auto& p : front) {
            ps.front_points.push_back({p.dp, p.accuracy});
            const auto& row = rollup.rows[p.tag];
            front_csv.rows.push_back({key.first, key.second, row[rollup.column_index("run_id")],
                                      format_double(p.accuracy), format_double(p.dp)});
        }
        plots.push_back(std::move(ps));
    }
    write_file(a.out, csv_to_string(front_csv));
    if (!a.svg.empty()) write_file(a.svg, render_pareto_svg(plots));
    std::cout << "pareto front: " << front_csv.rows.size() << " rows over " << series.size()
              << " series -> " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
    std::string runs;
    std::string out;
    bool force = false;
};

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(c);
        else if (c == '&') out += "and";
        else if (c == '|') out += "or";
        else if (c == '!') out += "not";
        else if (c == ' ' && !out.empty() && out.back() != '_') out.push_back('_');
    }
    return out;
}

int cmd_report(const ReportArgs& a) {
    auto records = scan_audit_reports(a.runs);
    if (records.empty()) {
        std::cerr << "report: no audit reports under " << a.runs << "\n";
        return 1;
    }
    ensure_writable(a.out, a.force);
    fs::create_directories(a.out);

    CsvTable rollup = build_rollup(records);
    write_file(a.out + "/rollup.csv", csv_to_string(rollup));

    // pareto_<expr>.csv per expression.
    std::set<std::string> exprs;
    for (const auto& row : rollup.rows) exprs.insert(row[rollup.column_index("expr")]);
    for (const auto& expr : exprs) {
        std::map<std::string, std::vector<ParetoPoint>> by_model;
        std::vector<std::vector<std::string>> rows;
        for (const auto& row : rollup.rows) {
            if (row[rollup.column_index("expr")] != expr ||
                row[rollup.column_index("delta_dp")] == "undefined") {
                continue;
            }
            by_model[row[rollup.column_index("model")]].push_back(
                {std::stod(row[rollup.column_index("delta_dp")]),
                 std::stod(row[rollup.column_index("accuracy")]), rows.size()});
            rows.push_back(row);
        }
        CsvTable t;
        t.columns = {"model", "run_id", "accuracy", "delta_dp"};
        for (auto& [model, pts] : by_model) {
            for (const auto& p : pareto_front(pts)) {
                t.rows.push_back({model, rows[p.tag][rollup.column_index("run_id")],
                                  format_double(p.accuracy), format_double(p.dp)});
            }
        }
        write_file(a.out + "/pareto_" + sanitize(expr) + ".csv", csv_to_string(t));
    }

    // audit_vs_alpha.csv: mean and min-max band per alpha.
    struct Agg {
        std::vector<double> pred, disent, reference;
    };
    std::map<double, Agg> by_alpha;
    for (const auto& r : records) {
        const json& h = r.body.value("hyper", json::object());
        if (!h.contains("alpha")) continue;
        const double alpha = h["alpha"];
        if (r.body["type"] == "predictiveness") {
            by_alpha[alpha].pred.push_back(r.body["loss_nats"]);
        } else if (r.body["type"] == "disentanglement") {
            by_alpha[alpha].disent.push_back(r.body["loss_nats"]);
            if (r.body.contains("reference_loss_nats") && !r.body["reference_loss_nats"].is_null()) {
                by_alpha[alpha].reference.push_back(r.body["reference_loss_nats"]);
            }
        }
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    CsvTable audit_csv;
    audit_csv.columns = {"alpha",         "predictiveness_mean", "disentanglement_mean",
                         "reference",     "predictiveness_min",  "predictiveness_max",
                         "disentanglement_min", "disentanglement_max"};
    for (const auto& [alpha, agg] : by_alpha) {
        if (agg.pred.empty() && agg.disent.empty()) continue;
        auto minmax = [](const std::vector<double>& v) -> std::pair<double, double> {
            if (v.empty()) return {0.0, 0.0};
            return {*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())};
        };
        const auto [pmin, pmax] = minmax(agg.pred);
        const auto [dmin, dmax] = minmax(agg.disent);
        audit_csv.rows.push_back({format_double(alpha), format_double(mean(agg.pred)),
                                  format_double(mean(agg.disent)), format_double(mean(agg.reference)),
                                  format_double(pmin), format_double(pmax), format_double(dmin),
                                  format_double(dmax)});
    }
    write_file(a.out + "/audit_vs_alpha.csv", csv_to_string(audit_csv));

    // mig_vs_hparams.csv: one row per (alpha, gamma) per run.
    CsvTable mig_csv;
    mig_csv.columns = {"run_id", "alpha", "gamma", "mig"};
    for (const auto& r : records) {
        if (r.body["type"] != "mig") continue;
        const json& h = r.body.value("hyper", json::object());
        mig_csv.rows.push_back({r.run_id, num_or(h, "alpha"), num_or(h, "gamma"), num_or(r.body, "mig")});
    }
    write_file(a.out + "/mig_vs_hparams.csv", csv_to_string(mig_csv));

    std::cout << "report written to " << a.out << " (" << rollup.rows.size() << " fair rows, "
              << mig_csv.rows.size() << " mig rows)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// demo: gen -> train -> audit -> pareto/report

struct DemoArgs {
    std::string out;
    std::size_t n = 2000;
    std::int64_t steps = 500;
    std::uint64_t seed = 0;
    int res = 16;
    bool force = false;
};

int run_cli(const std::vector<std::string>& args);

int cmd_demo(const DemoArgs& a) {
    ensure_writable(a.out, a.force);
    fs::create_directories(a.out);
    const std::string data = a.out + "/dsprites_unfair.ffdset";
    const std::string run_dir = a.out + "/runs/ffvae_a100_g10_s" + std::to_string(a.seed);
    const std::string raw_dir = a.out + "/runs/raw_input";

    std::vector<std::vector<std::string>> stages = {
        {"gen-dsprites", "--out", data, "--n", std::to_string(a.n), "--res", std::to_string(a.res),
         "--seed", std::to_string(a.seed), "--force"},
        {"train", "--dataset", data, "--out-dir", run_dir, "--kind", "ffvae", "--alpha", "100", "--gamma",
         "10", "--nz", "4", "--nb", "2", "--steps", std::to_string(a.steps), "--seed",
         std::to_string(a.seed), "--enc-hidden", "32,32", "--dec-hidden", "32,32", "--disc-width", "32",
         "--disc-layers", "4", "--force"},
    };
    const std::string ckpt = run_dir + "/ckpt_final.ffckpt";
    for (const char* group : {"Shape", "Scale", "Shape & Scale", "Shape | Scale"}) {
        stages.push_back({"audit", "--ckpt", ckpt, "--data", data, "--group", group, "--scrub", "drop",
                          "--out", run_dir + "/audit_" + sanitize(group) + ".json", "--force"});
        stages.push_back({"audit", "--raw-input", "--data", data, "--group", group, "--out",
                          raw_dir + "/audit_" + sanitize(group) + ".json", "--force"});
    }
    stages.push_back({"audit", "--ckpt", ckpt, "--data", data, "--kind", "predictiveness", "--attr", "Shape",
                      "--out", run_dir + "/predictiveness_Shape.json", "--force"});
    stages.push_back({"audit", "--ckpt", ckpt, "--data", data, "--kind", "disentanglement", "--attr",
                      "Shape", "--out", run_dir + "/disentanglement_Shape.json", "--force"});
    stages.push_back({"mig", "--ckpt", ckpt, "--data", data, "--out", run_dir + "/mig.json", "--force"});
    stages.push_back({"pareto", "--runs", a.out + "/runs", "--out", a.out + "/front.csv", "--svg",
                      a.out + "/pareto.svg", "--force"});
    stages.push_back({"report", "--runs", a.out + "/runs", "--out", a.out + "/report", "--force"});

    fs::create_directories(raw_dir);
    for (const auto& stage : stages) {
        const int rc = run_cli(stage);
        if (rc != 0) {
            std::cerr << "demo: stage '" << stage[0] << "' failed with exit code " << rc << "\n";
            return rc;
        }
    }
    std::cout << "demo complete under " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"flexibly fair representation learning toolkit"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* cgen = app.add_subcommand("gen-dsprites", "generate the correlated sprites dataset");
    cgen->add_option("--out", gen.out, "output container path")->required();
    cgen->add_option("--n", gen.n, "number of examples");
    cgen->add_option("--res", gen.res, "image resolution (16, 32 or 64)");
    cgen->add_option("--orientation-card", gen.orientation_card, "orientation cardinality");
    cgen->add_option("--seed", gen.seed, "generation seed");
    cgen->add_option("--qs", gen.qs, "shape weight exponent");
    cgen->add_option("--qx", gen.qx, "x-position weight exponent");
    cgen->add_option("--index-base", gen.index_base, "weight index base (0 or 1)");
    cgen->add_option("--attrs", gen.attrs, "sensitive attribute factors, comma separated");
    cgen->add_option("--label", gen.label, "held-out label factor");
    cgen->add_flag("--force", gen.force, "overwrite existing output");

    IngestArgs ingest;
    auto* cing = app.add_subcommand("ingest-csv", "binarize and standardize a tabular csv");
    cing->add_option("--csv", ingest.csv, "input csv path")->required();
    cing->add_option("--out", ingest.out, "output container path")->required();
    cing->add_option("--sensitive", ingest.sensitive, "sensitive column as name:threshold")->required();
    cing->add_option("--label", ingest.label, "label column as name:threshold")->required();
    cing->add_flag("--force", ingest.force, "overwrite existing output");

    TrainArgs train_args;
    auto* ctrain = app.add_subcommand("train", "train an encoder");
    ctrain->add_option("--config", train_args.config_file, "json config file");
    ctrain->add_option("--resume", train_args.resume, "checkpoint to resume from");
    ctrain->add_flag("--force", train_args.force, "overwrite existing run directory");
    const std::vector<std::pair<std::string, std::string>> train_keys = {
        {"--dataset", "dataset"},       {"--out-dir", "out_dir"},
        {"--kind", "kind"},             {"--alpha", "alpha"},
        {"--beta", "beta"},             {"--gamma", "gamma"},
        {"--nz", "n_z"},                {"--nb", "n_b"},
        {"--batch", "batch"},           {"--steps", "steps"},
        {"--lr", "lr"},                 {"--seed", "seed"},
        {"--split-seed", "split_seed"}, {"--checkpoint-interval", "checkpoint_interval"},
        {"--enc-hidden", "enc_hidden"}, {"--dec-hidden", "dec_hidden"},
        {"--disc-width", "disc_width"}, {"--disc-layers", "disc_layers"},
    };
    auto bind_config_keys = [&](CLI::App* cmd, json& sink) {
        for (const auto& [flag, key] : train_keys) {
            const std::string k = key;
            json* s = &sink;
            cmd->add_option_function<std::string>(
                flag,
                [k, s](const std::string& v) {
                    if (k == "kind" || k == "dataset" || k == "out_dir") {
                        (*s)[k] = v;
                    } else if (k == "enc_hidden" || k == "dec_hidden") {
                        (*s)[k] = parse_size_list(v);
                    } else if (k == "alpha" || k == "beta" || k == "gamma" || k == "lr") {
                        (*s)[k] = std::stod(v);
                    } else {
                        (*s)[k] = static_cast<std::int64_t>(std::stoll(v));
                    }
                },
                key);
        }
    };
    bind_config_keys(ctrain, train_args.overrides);

    SweepArgs sweep;
    auto* csweep = app.add_subcommand("sweep", "train a hyperparameter grid");
    bind_config_keys(csweep, sweep.overrides);
    csweep->add_option("--out", sweep.out, "sweep output directory");
    csweep->add_option("--alphas", sweep.alphas, "comma-separated alpha grid");
    csweep->add_option("--gammas", sweep.gammas, "comma-separated gamma grid");
    csweep->add_option("--betas", sweep.betas, "comma-separated beta grid");
    csweep->add_option("--seeds", sweep.seeds, "comma-separated seeds");
    csweep->add_option("--jobs", sweep.jobs, "parallel runs (default FFR_JOBS or 1)");
    csweep->add_flag("--force", sweep.force, "overwrite existing output");

    AuditArgs audit;
    auto* caudit = app.add_subcommand("audit", "audit a frozen encoder");
    caudit->add_option("--ckpt", audit.ckpt, "encoder checkpoint");
    caudit->add_option("--data", audit.data, "dataset container")->required();
    caudit->add_option("--label", audit.label, "label name (default: the dataset's first label)");
    caudit->add_option("--group", audit.group, "group expression over attribute names");
    caudit->add_option("--attr", audit.attr, "attribute for predictiveness/disentanglement");
    caudit->add_option("--kind", audit.kind, "fair | predictiveness | disentanglement");
    caudit->add_option("--scrub", audit.scrub, "drop | noise")
        ->check(CLI::IsMember({"drop", "noise"}));
    caudit->add_option("--policy", audit.policy, "named | correlated | all | none");
    caudit->add_flag("--raw-input", audit.raw_input, "baseline classifier on raw features");
    caudit->add_option("--out", audit.out, "json report path");
    caudit->add_option("--seed", audit.seed, "audit seed");
    caudit->add_flag("--force", audit.force, "overwrite existing output");

    MigArgs mig_args;
    auto* cmig = app.add_subcommand("mig", "mutual information gap of an encoder");
    cmig->add_option("--ckpt", mig_args.ckpt, "encoder checkpoint")->required();
    cmig->add_option("--data", mig_args.data, "dataset with ground-truth factors")->required();
    cmig->add_option("--bins", mig_args.bins, "equal-mass bins");
    cmig->add_option("--out", mig_args.out, "json report path");
    cmig->add_flag("--force", mig_args.force, "overwrite existing output");

    ParetoArgs pareto;
    auto* cpareto = app.add_subcommand("pareto", "pareto fronts over audit results");
    cpareto->add_option("--runs", pareto.runs, "runs directory")->required();
    cpareto->add_option("--out", pareto.out, "front csv path")->required();
    cpareto->add_option("--svg", pareto.svg, "scatter plot path");
    cpareto->add_flag("--force", pareto.force, "overwrite existing output");

    ReportArgs report;
    auto* creport = app.add_subcommand("report", "aggregate audit results into tables");
    creport->add_option("--runs", report.runs, "runs directory")->required();
    creport->add_option("--out", report.out, "output directory")->required();
    creport->add_flag("--force", report.force, "overwrite existing output");

    DemoArgs demo;
    auto* cdemo = app.add_subcommand("demo", "end-to-end: generate, train, audit, report");
    cdemo->add_option("--out", demo.out, "output directory")->required();
    cdemo->add_option("--n", demo.n, "dataset size");
    cdemo->add_option("--steps", demo.steps, "training steps");
    cdemo->add_option("--seed", demo.seed, "run seed");
    cdemo->add_option("--res", demo.res, "image resolution");
    cdemo->add_flag("--force", demo.force, "overwrite existing output");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (cgen->parsed()) return cmd_gen(gen);
        if (cing->parsed()) return cmd_ingest(ingest);
        if (ctrain->parsed()) return cmd_train(train_args);
        if (csweep->parsed()) return cmd_sweep(sweep);
        if (caudit->parsed()) return cmd_audit(audit);
        if (cmig->parsed()) return cmd_mig(mig_args);
        if (cpareto->parsed()) return cmd_pareto(pareto);
        if (creport->parsed()) return cmd_report(report);
        if (cdemo->parsed()) return cmd_demo(demo);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}
