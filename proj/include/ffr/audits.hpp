#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ffr/dataset.hpp"
#include "ffr/models.hpp"

namespace ffr {

/// Boolean expression over sensitive attribute names.
/// Grammar: expr := term ('|' term)*; term := factor ('&' factor)*;
/// factor := '!'? (ident | '(' expr ')'). The unicode forms of NOT/AND/OR are
/// accepted too. Precedence NOT > AND > OR.
class GroupExpr {
public:
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;
    struct Node {
        enum class Kind { Atom, Not, And, Or } kind;
        std::size_t attr = 0;     // Atom: index into the attribute name list
        std::string name;         // Atom: attribute name
        NodePtr lhs, rhs;         // Not uses lhs only
    };

    GroupExpr() = default;
    explicit GroupExpr(NodePtr root) : root_(std::move(root)) {}

    bool eval(const std::vector<int>& attr_bits) const;
    /// Atom attribute indices, in first-appearance order, duplicates removed.
    std::vector<std::size_t> atoms() const;
    /// Minimal-parenthesis rendering; parse(print(e)) rebuilds the same tree.
    std::string to_string() const;
    const NodePtr& root() const { return root_; }

private:
    NodePtr root_;
};

struct ParseError : std::runtime_error {
    std::size_t offset;
    ParseError(const std::string& msg, std::size_t off)
        : std::runtime_error(msg + " at offset " + std::to_string(off)), offset(off) {}
};

GroupExpr parse_group_expr(std::string_view text, const std::vector<std::string>& attr_names);

enum class ScrubMode { Drop, Noise };

/// Dimensions to scrub from a representation, in the coordinates of the row
/// passed in. Drop removes them (width shrinks); Noise replaces them with
/// standard normal draws keyed by dimension, so scrubbing {i} then {j} equals
/// scrubbing {i,j} draw for draw.
struct ScrubSpec {
    std::vector<std::size_t> dims;
    ScrubMode mode = ScrubMode::Drop;
};

Tensor scrub_rows(const Tensor& rows, const ScrubSpec& spec, Rng rng);

/// |mean(yhat | g=1) - mean(yhat | g=0)|; empty groups are undefined rather
/// than zero.
std::optional<double> delta_dp(const std::vector<int>& yhat, const std::vector<int>& group);

struct AuditConfig {
    double lr = 0.001;
    std::size_t batch = 64;
    std::size_t max_epochs = 200;
    std::size_t patience = 5;
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 0;
};

/// How the scrub set is chosen for a fair-classification audit.
enum class ScrubPolicy {
    Named,       // drop b_i for every attribute appearing in the expression
    Correlated,  // per atom, the code dimension most Pearson-correlated on the
                 // audit-train split (ties to the lowest index)
    All,         // every code dimension (the representation carries nothing)
    None,        // no scrub (raw-input baseline)
};

struct FairAuditResult {
    double accuracy = 0.0;
    std::optional<double> dp;
    double test_loss = 0.0;
    double base_rate = 0.0;     // label mean on the audit-test split
    std::vector<std::size_t> scrubbed_dims;
    std::size_t epochs_trained = 0;
};

/// Trains a fresh MLP on (possibly scrubbed) codes of the train split with a
/// fresh reparameterized sample per minibatch, early-stops on validation loss,
/// and reports accuracy and demographic parity distance on the test split.
/// `model` null means the raw-input baseline (features are X itself).
FairAuditResult fair_classification_audit(const FfvaeModel* model, const Dataset& data,
                                          std::size_t label_idx, const GroupExpr& expr, ScrubPolicy policy,
                                          ScrubMode mode, const AuditConfig& cfg);

/// Cross-entropy (nats, audit-test split) of an MLP predicting a_i from the
/// single column b_i.
double predictiveness_audit(const FfvaeModel& model, const Dataset& data, std::size_t attr_idx,
                            const AuditConfig& cfg);

struct DisentanglementResult {
    double audit_loss = 0.0;
    /// Loss of the same MLP predicting a_i from the other ground-truth
    /// factors alone; the information inherent in the data.
    std::optional<double> reference_loss;
};

/// Cross-entropy of an MLP predicting a_i from [z,b] with b_i removed.
DisentanglementResult disentanglement_audit(const FfvaeModel& model, const Dataset& data,
                                            std::size_t attr_idx, const AuditConfig& cfg,
                                            bool with_reference = true);

/// Plug-in mutual information (nats) between a real-valued column, discretized
/// into `bins` equal-mass bins, and an integer factor column.
double empirical_mi(const std::vector<double>& latent, const std::vector<int>& factor, std::size_t bins = 20);

/// Mean normalized gap between the two largest MIs any code dimension shares
/// with each factor. Zero-entropy factors are skipped.
double mig_from_code(const Tensor& code, const std::vector<std::vector<int>>& factors, std::size_t bins = 20);

/// MIG of an encoder on a dataset with ground-truth factors: code dimensions
/// are the posterior means plus b, factors are the binarized factor set.
double mig(const FfvaeModel& model, const Dataset& data, std::size_t bins = 20);

struct ParetoPoint {
    double dp = 0.0;
    double accuracy = 0.0;
    std::size_t tag = 0; // caller-defined back-reference
};

/// Non-dominated subset in (dp, accuracy), dp ascending. Duplicates collapse;
/// among equal-dp points the higher accuracy wins.
std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> points);

} // namespace ffr
