#pragma once

// Evaluation metrics: held-out predictive log-likelihood, per-slider
// Jensen-Shannon divergence between marginal histograms, optimal
// proposal-to-reference alignment and the personalization curve.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "edit_suggest/baselines.hpp"
#include "edit_suggest/cgm_svae.hpp"
#include "edit_suggest/cgm_vae.hpp"

namespace edit_suggest {

using Samples = std::vector<std::vector<double>>;

struct HistogramSpec {
    std::size_t bins = 50;
    double lo = -1.0;
    double hi = 1.0;
    /// Out-of-range values land in the edge bins; otherwise they are dropped.
    bool clamp = true;

    void validate() const;
    double bin_left(std::size_t b) const;
    double bin_right(std::size_t b) const;
};

/// Normalized histogram of the values.
std::vector<double> histogram(std::span<const double> values, const HistogramSpec& spec);

/// JSD between two probability vectors, in bits.
double jsd_bits(std::span<const double> p, std::span<const double> q);

struct JsdResult {
    std::vector<double> per_slider;
    double mean = 0.0;
};

JsdResult jsd_per_slider(const Samples& a, const Samples& b, const HistogramSpec& spec = {});

/// Model slider samples for histogram comparison: `draws` per record, pooled.
/// CGM-VAE contributes decoder-mean proposals; the baselines sample their
/// predictive distribution.
Samples model_samples(const CgmVaeModel& model, std::span<const ImageEditRecord> records,
                      std::size_t draws, std::uint64_t seed);
Samples model_samples(const GaussianMlpModel& model, std::span<const ImageEditRecord> records,
                      std::size_t draws, std::uint64_t seed);
Samples model_samples(const MdnModel& model, std::span<const ImageEditRecord> records,
                      std::size_t draws, std::uint64_t seed);
/// Hierarchical model without user context: proposals drawn under the prior pi.
Samples model_samples(const CgmSvaeModel& model, std::span<const ImageEditRecord> records,
                      std::size_t draws, std::uint64_t seed);
Samples true_samples(std::span<const ImageEditRecord> records);

/// Column d of a sample set.
std::vector<double> slider_column(const Samples& samples, std::size_t d);

struct Alignment {
    /// assignment[i] is the proposal matched to reference i.
    std::vector<std::size_t> assignment;
    double total_sq_error = 0.0;
    /// Total squared error divided by (references * slider dim).
    double mse = 0.0;
};

/// Minimum-total-squared-error injection of references into proposals. Small
/// instances (E <= 5, K <= 20) are searched exactly in lexicographic order, so
/// ties resolve to the lexicographically smallest assignment; larger ones use
/// the Hungarian method.
Alignment align_proposals(const Samples& proposals, const Samples& references);

/// Rectangular assignment: rows <= cols, returns the column for each row.
std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost);

struct MetricValue {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t count = 0;
};

/// Mean with standard error of the mean (zero for a single value).
MetricValue summarize(std::span<const double> values);

struct Provenance {
    std::string checkpoint_id;
    std::string dataset_id;
    std::uint64_t seed = 0;
    std::string config_hash;
};

struct EvalReport {
    std::map<std::string, MetricValue> metrics;
    std::map<std::string, std::vector<double>> series;
    Provenance provenance;

    std::string to_json() const;
};

using RecordScorer = std::function<double(const ImageEditRecord&)>;

RecordScorer scorer(const CgmVaeModel& model, std::size_t samples, std::uint64_t seed);
/// Prior-weighted log sum_k pi_k p(y | x, s = k), i.e. zero conditioning images.
RecordScorer scorer(const CgmSvaeModel& model, std::size_t samples, std::uint64_t seed);
RecordScorer scorer(const GaussianMlpModel& model);
RecordScorer scorer(const MdnModel& model);

std::vector<double> score_records(std::span<const ImageEditRecord> records, const RecordScorer& s);

/// Mean and standard error of per-record predictive log-likelihood, under the
/// metric name "ll".
EvalReport ll_report(const RecordScorer& score, std::span<const ImageEditRecord> testset,
                     const Provenance& provenance);

struct UserTrajectory {
    std::int64_t user_id = 0;
    std::vector<double> values;  // normalized, one per grid point
};

struct PersonalizationCurve {
    std::vector<std::size_t> grid;
    std::vector<double> mean;
    std::vector<double> std_error;
    std::vector<UserTrajectory> trajectories;
    std::size_t skipped_users = 0;
};

/// For each user with at least max(grid) + n_eval records, evaluates the
/// personalized predictive log-likelihood at every grid point, subtracts the
/// value at n_cond = 0 and averages across users. Users are processed in id
/// order.
PersonalizationCurve personalization_curve(const CgmSvaeModel& model,
                                           std::span<const UserRecordSet> users,
                                           std::span<const std::size_t> grid, std::size_t n_eval,
                                           std::size_t samples, std::uint64_t seed);

/// `n_cond,mean,stderr` rows preceded by `#` provenance lines.
std::string curve_csv(const PersonalizationCurve& curve, const Provenance& provenance);
std::string trajectories_csv(const PersonalizationCurve& curve, const Provenance& provenance);
/// `bin_left,bin_right,p_true,p_model` rows for one slider.
std::string histogram_csv(std::span<const double> truth, std::span<const double> model,
                          const HistogramSpec& spec, const Provenance& provenance);

}  // namespace edit_suggest
