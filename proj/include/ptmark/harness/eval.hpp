#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ptmark/harness/config.hpp"

namespace ptmark {

/// One watermarking method under evaluation: a label and the tuning it runs with.
struct Method {
    std::string label;
    TuningConfig tuning;
};

struct MetricsRow {
    std::string method;
    double psnr = 0.0;
    double ssim = 0.0;
    double msssim = 0.0;
    double auc_clean = 0.0;               // unperturbed detection
    std::vector<double> auc_perturbed;    // aligned with EvalReport::perturbation_labels
    double auc_average = 0.0;             // mean over the perturbation cells
    double mean_loss_drop = 0.0;          // mean over tuned steps of (initial − final) l_total
};

/// Per-(prompt, seed, method) record kept for the JSON report.
struct ImageRecord {
    std::string prompt;
    std::uint64_t seed = 0;
    std::string method;
    double psnr = 0.0;
    double ssim = 0.0;
    double msssim = 0.0;
    double p_clean = 1.0;                 // unperturbed watermarked image
    std::vector<double> p_perturbed;
};

struct FailureRecord {
    std::string prompt;
    std::uint64_t seed = 0;
    std::string error;
};

struct EvalReport {
    std::string name;
    std::string config_hash;
    std::vector<std::string> perturbation_labels;
    std::vector<MetricsRow> rows;
    std::vector<ImageRecord> records;
    std::vector<double> reference_p_clean;               // unwatermarked references, unperturbed
    std::vector<std::vector<double>> reference_p_perturbed;  // [perturbation][item]
    std::vector<FailureRecord> failures;
    std::size_t attempted = 0;

    double failed_fraction() const;
    bool exceeds_failure_threshold(double threshold) const;
};

/// Generates the unwatermarked reference and each method's watermarked image for every
/// (prompt, seed) pair, measures quality against the reference, and computes detection
/// AUC for the unperturbed images and each perturbation. Items that throw are logged and
/// skipped. `threads` = 0 uses the hardware concurrency.
EvalReport evaluate_methods(const RunConfig& cfg, const std::vector<Method>& methods, const std::string& name,
                            unsigned threads = 1);

/// Tree-Ring (no tuning) and PT-Mark (configured tuning).
EvalReport run_eval(const RunConfig& cfg, unsigned threads = 1);

enum class AblationAxis { lambda_grid, n_iters, start_step, modules };
AblationAxis ablation_axis_from_string(const std::string& name);
std::string to_string(AblationAxis axis);

/// The methods an ablation axis evaluates, in row order.
std::vector<Method> ablation_methods(const RunConfig& cfg, AblationAxis axis);
EvalReport run_ablation(const RunConfig& cfg, AblationAxis axis, unsigned threads = 1);

/// One row per method: method,psnr,ssim,msssim,auc_clean,auc_<perturbation>...,auc_avg
std::string report_csv(const EvalReport& report);
nlohmann::ordered_json report_json(const EvalReport& report, const RunConfig& cfg);
/// Rebuilds the summary part (name, hash, labels, rows, failures) of a report_json document.
EvalReport report_from_json(const nlohmann::json& j);
/// Aligned plain-text table of the rows, for terminals.
std::string report_table(const EvalReport& report);
/// Grouped bar chart of per-perturbation AUC, one group per perturbation.
std::string auc_bar_svg(const EvalReport& report);
/// Line chart of PSNR and average AUC against the row index (used for the n_iters and start_step axes).
std::string trend_line_svg(const EvalReport& report, const std::string& x_label);

/// Writes <dir>/<name>.csv, <name>.json and the SVG plots. Returns the paths written.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir, const EvalReport& report,
                                                const RunConfig& cfg);

}  // namespace ptmark
