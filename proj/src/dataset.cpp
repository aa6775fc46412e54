#include "ffr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ffr {

using nlohmann::json;

std::vector<FactorSpec> dsprites_factors(int orientation_cardinality) {
    if (orientation_cardinality < 1) throw std::invalid_argument("dsprites_factors: orientation cardinality < 1");
    return {
        {"Color", 1, 1},
        {"Shape", 3, 1},
        {"Scale", 6, 3},
        {"Orientation", orientation_cardinality, std::max(1, orientation_cardinality / 2)},
        {"XPosition", 32, 16},
        {"YPosition", 32, 16},
    };
}

double unfair_pair_weight(const UnfairSamplingParams& p, int i_shape, int i_xpos, int n_shape, int n_xpos) {
    const double fs = static_cast<double>(i_shape) / static_cast<double>(n_shape);
    const double fx = static_cast<double>(i_xpos) / static_cast<double>(n_xpos);
    return std::pow(fs, p.q_shape) + std::pow(fx, p.q_xpos);
}

Tensor unfair_pair_table(const UnfairSamplingParams& p, int n_shape, int n_xpos) {
    if (p.index_base != 0 && p.index_base != 1) {
        throw std::invalid_argument("unfair_pair_table: index base must be 0 or 1");
    }
    Tensor table({static_cast<std::size_t>(n_shape), static_cast<std::size_t>(n_xpos)});
    double total = 0.0;
    for (int s = 0; s < n_shape; ++s) {
        for (int x = 0; x < n_xpos; ++x) {
            // Shape weight index ascends with the value index; the XPosition
            // weight index descends so the binarized bits correlate with the
            // same sign the dataset is meant to exhibit.
            const int i_s = s + p.index_base;
            const int i_x = (n_xpos - 1 - x) + p.index_base;
            const double w = unfair_pair_weight(p, i_s, i_x, n_shape, n_xpos);
            table.at(static_cast<std::size_t>(s), static_cast<std::size_t>(x)) = w;
            total += w;
        }
    }
    if (!(total > 0.0)) throw std::invalid_argument("unfair_pair_table: weights sum to zero");
    for (std::size_t i = 0; i < table.size(); ++i) table[i] /= total;
    return table;
}

std::vector<std::int32_t> sample_factors_unfair(const UnfairSamplingParams& p,
                                                const std::vector<FactorSpec>& factors, Rng rng,
                                                std::size_t n) {
    if (n < 1) throw std::invalid_argument("sample_factors_unfair: n must be >= 1");
    if (factors.size() != 6) throw std::invalid_argument("sample_factors_unfair: expected 6 factors");
    const int n_shape = factors[1].cardinality;
    const int n_xpos = factors[4].cardinality;
    Tensor table = unfair_pair_table(p, n_shape, n_xpos);
    std::vector<double> cdf(table.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        acc += table[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0;

    std::vector<std::int32_t> out(n * 6);
    for (std::size_t i = 0; i < n; ++i) {
        Rng ex = rng.fork(i);
        const double u = ex.uniform();
        const std::size_t flat =
            static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        const auto shape_v = static_cast<std::int32_t>(flat / static_cast<std::size_t>(n_xpos));
        const auto x_v = static_cast<std::int32_t>(flat % static_cast<std::size_t>(n_xpos));
        std::int32_t* row = out.data() + i * 6;
        row[0] = static_cast<std::int32_t>(ex.below(static_cast<std::size_t>(factors[0].cardinality)));
        row[1] = shape_v;
        row[2] = static_cast<std::int32_t>(ex.below(static_cast<std::size_t>(factors[2].cardinality)));
        row[3] = static_cast<std::int32_t>(ex.below(static_cast<std::size_t>(factors[3].cardinality)));
        row[4] = x_v;
        row[5] = static_cast<std::int32_t>(ex.below(static_cast<std::size_t>(factors[5].cardinality)));
    }
    return out;
}

namespace {

double grid_pos(int idx, int card) {
    if (card <= 1) return 0.5;
    return static_cast<double>(idx) / static_cast<double>(card - 1);
}

bool heart_contains(double x, double y) {
    // (x^2 + y^2 - 1)^3 - x^2 * y^3 <= 0
    const double q = x * x + y * y - 1.0;
    return q * q * q - x * x * y * y * y <= 0.0;
}

} // namespace

Tensor render_sprite(SpriteShape shape, int scale_idx, int orient_idx, int x_idx, int y_idx, int resolution,
                     const std::vector<FactorSpec>& factors) {
    if (resolution != 16 && resolution != 32 && resolution != 64) {
        throw std::invalid_argument("render_sprite: resolution must be 16, 32 or 64");
    }
    const int n_scale = factors[2].cardinality;
    const int n_orient = factors[3].cardinality;
    const int n_x = factors[4].cardinality;
    const int n_y = factors[5].cardinality;
    if (scale_idx < 0 || scale_idx >= n_scale || orient_idx < 0 || orient_idx >= n_orient || x_idx < 0 ||
        x_idx >= n_x || y_idx < 0 || y_idx >= n_y) {
        throw std::invalid_argument("render_sprite: factor index out of range");
    }

    const double scale_rel = 0.5 + 0.5 * grid_pos(scale_idx, n_scale);
    const double half = 0.25 * scale_rel; // half-extent of the bounding box, image units
    const double cx = grid_pos(x_idx, n_x);
    const double cy = grid_pos(y_idx, n_y);
    const double theta = 2.0 * 3.14159265358979323846 * static_cast<double>(orient_idx) /
                         static_cast<double>(n_orient);
    const double ct = std::cos(theta), st = std::sin(theta);

    const auto res = static_cast<std::size_t>(resolution);
    Tensor img({res, res});
    for (std::size_t r = 0; r < res; ++r) {
        const double v = (static_cast<double>(r) + 0.5) / static_cast<double>(resolution);
        for (std::size_t c = 0; c < res; ++c) {
            const double u = (static_cast<double>(c) + 0.5) / static_cast<double>(resolution);
            const double dx = u - cx, dy = v - cy;
            // Rotate the pixel into the sprite frame.
            const double px = ct * dx + st * dy;
            const double py = -st * dx + ct * dy;
            bool inside = false;
            switch (shape) {
                case SpriteShape::Square:
                    inside = std::abs(px) <= half && std::abs(py) <= half;
                    break;
                case SpriteShape::Ellipse: {
                    const double ex = px / half;
                    const double ey = py / (0.5 * half);
                    inside = ex * ex + ey * ey <= 1.0;
                    break;
                }
                case SpriteShape::Heart:
                    // Canonical heart curve spans roughly [-1.3, 1.3]; map the
                    // bounding box onto it, y up.
                    inside = heart_contains(px * (1.3 / half), -py * (1.3 / half));
                    break;
            }
            img.at(r, c) = inside ? 1.0 : 0.0;
        }
    }
    return img;
}

std::vector<std::uint8_t> binarize_factors(const std::vector<std::int32_t>& factor_row,
                                           const std::vector<FactorSpec>& factors) {
    if (factor_row.size() != factors.size()) {
        throw std::invalid_argument("binarize_factors: row has " + std::to_string(factor_row.size()) +
                                    " entries for " + std::to_string(factors.size()) + " factors");
    }
    std::vector<std::uint8_t> bits(factors.size());
    for (std::size_t i = 0; i < factors.size(); ++i) {
        if (factor_row[i] < 0 || factor_row[i] >= factors[i].cardinality) {
            throw std::invalid_argument("binarize_factors: index " + std::to_string(factor_row[i]) +
                                        " out of range for factor " + factors[i].name);
        }
        bits[i] = factor_row[i] >= factors[i].threshold ? 1 : 0;
    }
    return bits;
}

std::size_t Dataset::attr_index(const std::string& name) const {
    for (std::size_t i = 0; i < attr_names.size(); ++i) {
        if (attr_names[i] == name) return i;
    }
    throw std::invalid_argument("dataset: no sensitive attribute named '" + name + "'");
}

std::size_t Dataset::label_index(const std::string& name) const {
    for (std::size_t i = 0; i < label_names.size(); ++i) {
        if (label_names[i] == name) return i;
    }
    throw std::invalid_argument("dataset: no label named '" + name + "'");
}

std::size_t Dataset::factor_index(const std::string& name) const {
    for (std::size_t i = 0; i < factor_names.size(); ++i) {
        if (factor_names[i] == name) return i;
    }
    throw std::invalid_argument("dataset: no factor named '" + name + "'");
}

Dataset generate_dsprites_unfair(const DspritesConfig& cfg) {
    if (cfg.n < 1) throw std::invalid_argument("generate_dsprites_unfair: n must be >= 1");
    const auto factors = dsprites_factors(cfg.orientation_cardinality);
    Rng root = Rng::from_seed(cfg.seed);
    auto idx = sample_factors_unfair(cfg.sampling, factors, root.fork("factors"), cfg.n);

    Dataset d;
    d.x_dtype = "u1";
    for (const auto& f : factors) {
        d.factor_names.push_back(f.name);
        d.factor_thresholds.push_back(f.threshold);
    }
    d.attr_names = cfg.attrs;
    d.label_names = {cfg.label};
    d.factors = std::move(idx);

    std::vector<std::size_t> attr_cols, label_cols;
    for (const auto& a : cfg.attrs) {
        if (a == "Color") throw std::invalid_argument("generate_dsprites_unfair: Color bit is constant");
        attr_cols.push_back([&] {
            for (std::size_t i = 0; i < factors.size(); ++i)
                if (factors[i].name == a) return i;
            throw std::invalid_argument("generate_dsprites_unfair: unknown attribute '" + a + "'");
        }());
    }
    label_cols.push_back([&] {
        for (std::size_t i = 0; i < factors.size(); ++i)
            if (factors[i].name == cfg.label) return i;
        throw std::invalid_argument("generate_dsprites_unfair: unknown label '" + cfg.label + "'");
    }());

    const auto dim = static_cast<std::size_t>(cfg.resolution) * static_cast<std::size_t>(cfg.resolution);
    d.X = Tensor({cfg.n, dim});
    d.A = Tensor({cfg.n, attr_cols.size()});
    d.Y = Tensor({cfg.n, label_cols.size()});
    std::vector<std::int32_t> row(6);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        for (std::size_t f = 0; f < 6; ++f) row[f] = d.factors[i * 6 + f];
        auto bits = binarize_factors(row, factors);
        Tensor img = render_sprite(static_cast<SpriteShape>(row[1]), row[2], row[3], row[4], row[5],
                                   cfg.resolution, factors);
        std::copy(img.data(), img.data() + dim, d.X.data() + i * dim);
        for (std::size_t a = 0; a < attr_cols.size(); ++a) d.A.at(i, a) = bits[attr_cols[a]];
        for (std::size_t y = 0; y < label_cols.size(); ++y) d.Y.at(i, y) = bits[label_cols[y]];
    }
    return d;
}

namespace {

bool is_missing_cell(const std::string& s) {
    return s.empty() || s == "?" || s == "NA" || s == "na" || s == "nan" || s == "NaN";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    for (auto& c : cells) {
        const auto a = c.find_first_not_of(" \t");
        const auto b = c.find_last_not_of(" \t");
        c = a == std::string::npos ? std::string() : c.substr(a, b - a + 1);
    }
    return cells;
}

} // namespace

Dataset ingest_csv(const std::string& path, const std::vector<ThresholdColumn>& sensitive,
                   const ThresholdColumn& label) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ingest_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("ingest_csv: empty file " + path);
    const auto header = split_csv_line(line);

    auto col_of = [&](const std::string& name, const char* role) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw std::runtime_error(std::string("ingest_csv: ") + role + " column '" + name + "' not in header");
    };
    std::vector<std::size_t> sens_cols;
    for (const auto& s : sensitive) sens_cols.push_back(col_of(s.name, "sensitive"));
    const std::size_t label_col = col_of(label.name, "label");

    std::vector<bool> reserved(header.size(), false);
    for (auto c : sens_cols) reserved[c] = true;
    reserved[label_col] = true;

    std::vector<std::vector<std::optional<double>>> cells; // [row][col]
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto raw = split_csv_line(line);
        if (raw.size() != header.size()) {
            throw std::runtime_error("ingest_csv: row " + std::to_string(line_no) + " has " +
                                     std::to_string(raw.size()) + " cells, header has " +
                                     std::to_string(header.size()));
        }
        std::vector<std::optional<double>> parsed(raw.size());
        for (std::size_t c = 0; c < raw.size(); ++c) {
            if (is_missing_cell(raw[c])) {
                if (reserved[c]) {
                    throw std::runtime_error("ingest_csv: missing value in required column '" + header[c] +
                                             "' at row " + std::to_string(line_no));
                }
                continue;
            }
            try {
                std::size_t used = 0;
                const double v = std::stod(raw[c], &used);
                if (used != raw[c].size()) throw std::invalid_argument("trailing");
                parsed[c] = v;
            } catch (const std::exception&) {
                throw std::runtime_error("ingest_csv: non-numeric cell '" + raw[c] + "' at row " +
                                         std::to_string(line_no) + ", column '" + header[c] + "'");
            }
        }
        cells.push_back(std::move(parsed));
    }
    const std::size_t n = cells.size();
    if (n == 0) throw std::runtime_error("ingest_csv: no data rows in " + path);

    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (!reserved[c]) feature_cols.push_back(c);

    // Column means for imputation, then standardization.
    std::vector<double> mean(header.size(), 0.0);
    for (std::size_t c : feature_cols) {
        double s = 0.0;
        std::size_t k = 0;
        for (std::size_t r = 0; r < n; ++r) {
            if (cells[r][c]) {
                s += *cells[r][c];
                ++k;
            }
        }
        mean[c] = k ? s / static_cast<double>(k) : 0.0;
    }

    Dataset d;
    d.x_dtype = "f4";
    d.X = Tensor({n, feature_cols.size()});
    d.A = Tensor({n, sensitive.size()});
    d.Y = Tensor({n, 1});
    for (const auto& s : sensitive) d.attr_names.push_back(s.name);
    d.label_names = {label.name};

    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
        const std::size_t c = feature_cols[j];
        double s = 0.0, s2 = 0.0;
        double lo = 1e300, hi = -1e300;
        for (std::size_t r = 0; r < n; ++r) {
            const double v = cells[r][c].value_or(mean[c]);
            s += v;
            s2 += v * v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (lo == hi) {
            for (std::size_t r = 0; r < n; ++r) d.X.at(r, j) = 0.0;
            continue;
        }
        const double mu = s / static_cast<double>(n);
        const double var = std::max(0.0, s2 / static_cast<double>(n) - mu * mu);
        const double sd = std::sqrt(var) + 1e-12;
        for (std::size_t r = 0; r < n; ++r) {
            const double v = cells[r][c].value_or(mean[c]);
            // Store at float precision so the container round trip is exact.
            d.X.at(r, j) = static_cast<double>(static_cast<float>((v - mu) / sd));
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t a = 0; a < sens_cols.size(); ++a) {
            d.A.at(r, a) = *cells[r][sens_cols[a]] >= sensitive[a].threshold ? 1.0 : 0.0;
        }
        d.Y.at(r, 0) = *cells[r][label_col] >= label.threshold ? 1.0 : 0.0;
    }
    return d;
}

namespace {

constexpr char kDatasetMagic[8] = {'F', 'F', 'D', 'S', 'E', 'T', '0', '1'};

void append_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t read_u64(const char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

void append_tensor_payload(std::string& out, const Tensor& t, const std::string& dtype) {
    if (dtype == "u1") {
        for (std::size_t i = 0; i < t.size(); ++i) out.push_back(static_cast<char>(static_cast<int>(t[i])));
    } else if (dtype == "f4") {
        for (std::size_t i = 0; i < t.size(); ++i) {
            const float f = static_cast<float>(t[i]);
            char buf[4];
            std::memcpy(buf, &f, 4);
            out.append(buf, 4);
        }
    } else if (dtype == "f8") {
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double f = t[i];
            char buf[8];
            std::memcpy(buf, &f, 8);
            out.append(buf, 8);
        }
    } else {
        throw std::runtime_error("dataset: unsupported dtype " + dtype);
    }
}

std::size_t dtype_width(const std::string& dtype) {
    if (dtype == "u1") return 1;
    if (dtype == "f4") return 4;
    if (dtype == "f8") return 8;
    if (dtype == "i4") return 4;
    throw std::runtime_error("dataset: unsupported dtype " + dtype);
}

} // namespace

void save_dataset(const Dataset& d, const std::string& path) {
    json fields = json::array();
    fields.push_back({{"name", "X"}, {"dtype", d.x_dtype}, {"shape", {d.n(), d.feature_dim()}}});
    fields.push_back({{"name", "A"}, {"dtype", "u1"}, {"shape", {d.A.rows(), d.A.cols()}}});
    fields.push_back({{"name", "Y"}, {"dtype", "u1"}, {"shape", {d.Y.rows(), d.Y.cols()}}});
    const bool has_factors = !d.factors.empty();
    if (has_factors) {
        fields.push_back(
            {{"name", "factors"}, {"dtype", "i4"}, {"shape", {d.n(), d.factor_names.size()}}});
    }
    json header = {
        {"version", 1},
        {"endianness", "little"},
        {"fields", fields},
        {"attr_names", d.attr_names},
        {"label_names", d.label_names},
        {"factor_names", d.factor_names},
        {"factor_thresholds", d.factor_thresholds},
    };
    const std::string htext = header.dump();

    std::string out;
    out.append(kDatasetMagic, 8);
    append_u64(out, htext.size());
    out += htext;
    append_tensor_payload(out, d.X, d.x_dtype);
    append_tensor_payload(out, d.A, "u1");
    append_tensor_payload(out, d.Y, "u1");
    if (has_factors) {
        for (std::int32_t v : d.factors) {
            char buf[4];
            std::memcpy(buf, &v, 4);
            out.append(buf, 4);
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_dataset: cannot open " + path + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("save_dataset: short write to " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_dataset: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kDatasetMagic, 8) != 0) {
        throw std::runtime_error("load_dataset: " + path + " is not an FFDSET01 container");
    }
    const std::uint64_t hlen = read_u64(bytes.data() + 8);
    if (16 + hlen > bytes.size()) throw std::runtime_error("load_dataset: truncated header in " + path);
    json header;
    try {
        header = json::parse(bytes.substr(16, hlen));
    } catch (const std::exception& e) {
        throw std::runtime_error("load_dataset: bad header JSON in " + path + ": " + e.what());
    }
    if (header.value("endianness", "little") != "little") {
        throw std::runtime_error("load_dataset: unsupported endianness in " + path);
    }

    Dataset d;
    d.attr_names = header.value("attr_names", std::vector<std::string>{});
    d.label_names = header.value("label_names", std::vector<std::string>{});
    d.factor_names = header.value("factor_names", std::vector<std::string>{});
    d.factor_thresholds = header.value("factor_thresholds", std::vector<int>{});

    std::size_t off = 16 + hlen;
    for (const auto& field : header.at("fields")) {
        const std::string name = field.at("name");
        const std::string dtype = field.at("dtype");
        const std::vector<std::size_t> shape = field.at("shape");
        const std::size_t count = shape_product(shape);
        const std::size_t need = count * dtype_width(dtype);
        if (off + need > bytes.size()) {
            throw std::runtime_error("load_dataset: payload for field '" + name + "' is truncated in " + path);
        }
        const char* p = bytes.data() + off;
        if (name == "factors") {
            d.factors.resize(count);
            std::memcpy(d.factors.data(), p, need);
        } else {
            Tensor t(shape);
            if (dtype == "u1") {
                for (std::size_t i = 0; i < count; ++i) t[i] = static_cast<unsigned char>(p[i]);
            } else if (dtype == "f4") {
                for (std::size_t i = 0; i < count; ++i) {
                    float v;
                    std::memcpy(&v, p + 4 * i, 4);
                    t[i] = v;
                }
            } else if (dtype == "f8") {
                std::memcpy(t.data(), p, need);
            } else {
                throw std::runtime_error("load_dataset: unsupported dtype for tensor field: " + dtype);
            }
            if (name == "X") {
                d.X = std::move(t);
                d.x_dtype = dtype;
            } else if (name == "A") {
                d.A = std::move(t);
            } else if (name == "Y") {
                d.Y = std::move(t);
            } else {
                throw std::runtime_error("load_dataset: unknown field '" + name + "' in " + path);
            }
        }
        off += need;
    }
    if (off != bytes.size()) {
        throw std::runtime_error("load_dataset: " + path + " holds " + std::to_string(bytes.size() - off) +
                                 " unexpected trailing bytes");
    }
    if (d.A.rank() == 2 && d.A.rows() != d.n()) {
        throw std::runtime_error("load_dataset: row count mismatch between X and A in " + path);
    }
    return d;
}

Splits split_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng = Rng::from_seed(seed).fork("split");
    rng.shuffle(idx);
    const std::size_t n_train = n * 8 / 10;
    const std::size_t n_val = n / 10;
    Splits s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                 idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
    return s;
}

Tensor gather_rows(const Tensor& m, const std::vector<std::size_t>& rows) {
    const std::size_t cols = m.cols();
    Tensor out({rows.size(), cols});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(m.data() + rows[i] * cols, m.data() + (rows[i] + 1) * cols, out.data() + i * cols);
    }
    return out;
}

} // namespace ffr
