#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ffr/rng.hpp"
#include "ffr/tensor.hpp"

namespace ffr {

/// One ground-truth factor of variation: how many index values it takes and
/// where its binarization threshold sits (bit = index >= threshold).
struct FactorSpec {
    std::string name;
    int cardinality = 1;
    int threshold = 1;
};

/// The six DSprites factors. Orientation cardinality is reducible for small
/// runs; its threshold scales as cardinality/2.
std::vector<FactorSpec> dsprites_factors(int orientation_cardinality = 40);

/// Correlated (Shape, XPosition) sampling. A pair is drawn with probability
/// proportional to (i_S/n_S)^q_shape + (i_X/n_X)^q_xpos over weight indices
/// i starting at index_base. The XPosition weight index runs against the
/// pixel axis so the binarized Shape and XPosition bits correlate positively.
struct UnfairSamplingParams {
    double q_shape = 1.0;
    double q_xpos = 3.0;
    int index_base = 1;
};

/// Raw weight for one (shape, x) weight-index pair, before normalization.
double unfair_pair_weight(const UnfairSamplingParams& p, int i_shape, int i_xpos, int n_shape, int n_xpos);

/// Joint probability table over (shape value, x value), jointly normalized.
Tensor unfair_pair_table(const UnfairSamplingParams& p, int n_shape, int n_xpos);

/// Factor index matrix [n x 6], flattened row-major. Shape and XPosition come
/// from the weight table; the other factors are uniform and independent.
std::vector<std::int32_t> sample_factors_unfair(const UnfairSamplingParams& p,
                                                const std::vector<FactorSpec>& factors, Rng rng,
                                                std::size_t n);

enum class SpriteShape { Square, Ellipse, Heart };

/// Binary raster of one sprite: white (1) shape over black (0) background.
/// A pixel is lit when its center falls inside the shape. Scale maps linearly
/// over [0.5, 1] relative size, positions map linearly over the image, and
/// orientation rotates about the sprite centroid.
Tensor render_sprite(SpriteShape shape, int scale_idx, int orient_idx, int x_idx, int y_idx, int resolution,
                     const std::vector<FactorSpec>& factors);

/// Bits for all factors of one example, per the FactorSpec thresholds.
std::vector<std::uint8_t> binarize_factors(const std::vector<std::int32_t>& factor_row,
                                           const std::vector<FactorSpec>& factors);

/// Observations plus binary sensitive attributes and held-out labels.
/// Synthetic datasets also retain the ground-truth factor indices.
struct Dataset {
    Tensor X;                            // [n, feature_dim]
    Tensor A;                            // [n, num_attrs], entries in {0,1}
    Tensor Y;                            // [n, num_labels], entries in {0,1}
    std::vector<std::int32_t> factors;   // [n * factor_names.size()], may be empty
    std::vector<std::string> attr_names;
    std::vector<std::string> label_names;
    std::vector<std::string> factor_names;
    std::vector<int> factor_thresholds;  // binarization thresholds, aligned with factor_names
    std::string x_dtype = "f4"; // storage dtype for X: "u1" or "f4"

    std::size_t n() const { return X.rank() == 2 ? X.rows() : 0; }
    std::size_t feature_dim() const { return X.rank() == 2 ? X.cols() : 0; }
    std::size_t attr_index(const std::string& name) const;
    std::size_t label_index(const std::string& name) const;
    std::size_t factor_index(const std::string& name) const;
};

struct DspritesConfig {
    std::size_t n = 10000;
    int resolution = 16;
    int orientation_cardinality = 40;
    UnfairSamplingParams sampling;
    std::uint64_t seed = 0;
    std::vector<std::string> attrs = {"Shape", "Scale"};
    std::string label = "XPosition";
};

Dataset generate_dsprites_unfair(const DspritesConfig& cfg);

/// Column selected for thresholding: value >= threshold maps to bit 1.
struct ThresholdColumn {
    std::string name;
    double threshold = 0.5;
};

/// Reads a headered numeric CSV. Sensitive and label columns are binarized by
/// their thresholds; the remaining columns are standardized to zero mean and
/// unit variance (sigma guarded by 1e-12). Missing feature cells ("", "?",
/// "NA", "nan") are imputed to the column mean; missing or non-numeric
/// sensitive/label cells are an error naming the row and column.
Dataset ingest_csv(const std::string& path, const std::vector<ThresholdColumn>& sensitive,
                   const ThresholdColumn& label);

/// FFDSET01 container: 8-byte magic, u64 little-endian header length, JSON
/// header, then raw row-major payloads in header field order. Round trips are
/// bitwise exact.
void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

struct Splits {
    std::vector<std::size_t> train, val, test;
};

/// Deterministic 80/10/10 split by seeded shuffle.
Splits split_indices(std::size_t n, std::uint64_t seed);

/// Rows of X (and optionally A/Y) gathered into dense batch tensors.
Tensor gather_rows(const Tensor& m, const std::vector<std::size_t>& rows);

} // namespace ffr
