#include "ptmark/harness/eval.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ptmark/diffusion/codec.hpp"
#include "ptmark/errors.hpp"
#include "ptmark/harness/metrics.hpp"
#include "ptmark/harness/parallel.hpp"
#include "ptmark/tuning/pivotal.hpp"

namespace ptmark {

namespace {

struct MethodOutcome {
    double psnr = 0.0;
    double ssim = 0.0;
    double msssim = 0.0;
    double p_clean = 1.0;
    std::vector<double> p_perturbed;
    double loss_drop = 0.0;
    std::size_t tuned_steps = 0;
};

struct ItemOutcome {
    bool ok = false;
    std::string error;
    double ref_p_clean = 1.0;
    std::vector<double> ref_p_perturbed;
    std::vector<MethodOutcome> methods;
};

struct Item {
    std::string prompt;
    std::uint64_t seed = 0;
};

std::string fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::uint64_t item_seed(const Item& item) { return derive_seed(item.seed, fnv1a64(item.prompt)); }

// Each perturbation draws from the same stream for the reference and every method,
// so method comparisons are paired.
SeededRng perturbation_rng(std::uint64_t item, std::size_t k, const PerturbationSpec& spec) {
    return SeededRng(derive_seed(derive_seed(item, std::string_view("perturbation")), fnv1a64(label(spec)) + k));
}

ItemOutcome run_item(const RunConfig& cfg, const ToyDenoiser& d, const WatermarkKey& key,
                     const std::vector<Method>& methods, const Item& item) {
    ItemOutcome out;
    const std::uint64_t seed = item_seed(item);
    const Embedding cond = prompt_embed(item.prompt, cfg.denoiser.dim);
    const Embedding verify_cond = cfg.verify_embedding == VerifyEmbedding::prompt ? cond : null_embed(cfg.denoiser.dim);
    const RegenerateContext ctx{&d, null_embed(cfg.denoiser.dim)};
    const std::size_t K = cfg.perturbations.size();

    SeededRng noise_rng(derive_seed(seed, std::string_view("initial-noise")));
    const Latent z_T = gaussian_grid(noise_rng, cfg.denoiser.channels, cfg.denoiser.height, cfg.denoiser.width);
    const Image reference =
        decode(sample_trajectory(d, z_T, cond, null_embed(cfg.denoiser.dim), cfg.tuning.guidance_w).back());

    auto p_value = [&](const Image& x) { return verify(x, d, key, verify_cond, cfg.threshold).p_value; };
    auto perturbed = [&](const Image& x, std::size_t k) {
        SeededRng rng = perturbation_rng(seed, k, cfg.perturbations[k]);
        return apply_perturbation(x, cfg.perturbations[k], rng, &ctx);
    };

    out.ref_p_clean = p_value(reference);
    for (std::size_t k = 0; k < K; ++k) out.ref_p_perturbed.push_back(p_value(perturbed(reference, k)));

    const Latent z0_star = encode(reference);
    for (const auto& m : methods) {
        const TuneResult r = pivotal_tune(d, z0_star, key, cond, m.tuning);
        MethodOutcome mo;
        mo.psnr = psnr(r.image, reference);
        mo.ssim = ssim(r.image, reference);
        mo.msssim = msssim(r.image, reference);
        mo.p_clean = p_value(r.image);
        for (std::size_t k = 0; k < K; ++k) mo.p_perturbed.push_back(p_value(perturbed(r.image, k)));
        for (const auto& c : r.curves) {
            if (!c.optimized || c.iterations.empty()) continue;
            mo.loss_drop += c.iterations.front().l_total - c.final.l_total;
            ++mo.tuned_steps;
        }
        if (mo.tuned_steps > 0) mo.loss_drop /= static_cast<double>(mo.tuned_steps);
        out.methods.push_back(std::move(mo));
    }
    out.ok = true;
    return out;
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1"};

}  // namespace

double EvalReport::failed_fraction() const {
    return attempted == 0 ? 0.0 : static_cast<double>(failures.size()) / static_cast<double>(attempted);
}

bool EvalReport::exceeds_failure_threshold(double threshold) const { return failed_fraction() > threshold; }

EvalReport evaluate_methods(const RunConfig& cfg, const std::vector<Method>& methods, const std::string& name,
                            unsigned threads) {
    cfg.validate();
    if (methods.empty()) throw ConfigError("evaluation needs at least one method");
    for (const auto& m : methods) {
        try {
            m.tuning.validate();
        } catch (const DomainError& e) {
            throw ConfigError(m.label + ": " + e.what());
        }
    }

    const NoiseSchedule schedule(cfg.schedule);
    const ToyDenoiser d(cfg.denoiser, schedule);
    const WatermarkKey key = keygen(cfg.key);

    std::vector<Item> items;
    for (const auto& prompt : cfg.prompts)
        for (std::uint64_t seed : cfg.seeds) items.push_back({prompt, seed});

    std::vector<ItemOutcome> outcomes(items.size());
    parallel_for(items.size(), threads, [&](std::size_t i) {
        try {
            outcomes[i] = run_item(cfg, d, key, methods, items[i]);
        } catch (const std::exception& e) {
            outcomes[i].ok = false;
            outcomes[i].error = e.what();
        }
    });

    EvalReport report;
    report.name = name;
    report.config_hash = config_hash(cfg);
    report.attempted = items.size();
    for (const auto& p : cfg.perturbations) report.perturbation_labels.push_back(label(p));
    const std::size_t K = cfg.perturbations.size();
    report.reference_p_perturbed.assign(K, {});

    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& o = outcomes[i];
        if (!o.ok) {
            report.failures.push_back({items[i].prompt, items[i].seed, o.error});
            continue;
        }
        report.reference_p_clean.push_back(o.ref_p_clean);
        for (std::size_t k = 0; k < K; ++k) report.reference_p_perturbed[k].push_back(o.ref_p_perturbed[k]);
    }

    for (std::size_t m = 0; m < methods.size(); ++m) {
        MetricsRow row;
        row.method = methods[m].label;
        std::vector<double> ps, ss, ms, drops, p_clean;
        std::vector<std::vector<double>> p_pert(K);
        for (std::size_t i = 0; i < items.size(); ++i) {
            const auto& o = outcomes[i];
            if (!o.ok) continue;
            const auto& mo = o.methods[m];
            ps.push_back(mo.psnr);
            ss.push_back(mo.ssim);
            ms.push_back(mo.msssim);
            if (mo.tuned_steps > 0) drops.push_back(mo.loss_drop);
            p_clean.push_back(mo.p_clean);
            for (std::size_t k = 0; k < K; ++k) p_pert[k].push_back(mo.p_perturbed[k]);
            report.records.push_back({items[i].prompt, items[i].seed, methods[m].label, mo.psnr, mo.ssim, mo.msssim,
                                      mo.p_clean, mo.p_perturbed});
        }
        row.psnr = mean(ps);
        row.ssim = mean(ss);
        row.msssim = mean(ms);
        row.mean_loss_drop = mean(drops);
        if (!p_clean.empty()) {
            row.auc_clean = auc(p_clean, report.reference_p_clean);
            for (std::size_t k = 0; k < K; ++k) row.auc_perturbed.push_back(auc(p_pert[k], report.reference_p_perturbed[k]));
        } else {
            row.auc_perturbed.assign(K, 0.0);
        }
        row.auc_average = mean(row.auc_perturbed);
        report.rows.push_back(std::move(row));
    }
    return report;
}

EvalReport run_eval(const RunConfig& cfg, unsigned threads) {
    TuningConfig baseline = cfg.tuning;
    baseline.n_iters = 0;
    return evaluate_methods(cfg, {{"Tree-Ring", baseline}, {"PT-Mark", cfg.tuning}}, "eval", threads);
}

AblationAxis ablation_axis_from_string(const std::string& name) {
    if (name == "lambda_grid") return AblationAxis::lambda_grid;
    if (name == "n_iters") return AblationAxis::n_iters;
    if (name == "start_step") return AblationAxis::start_step;
    if (name == "modules") return AblationAxis::modules;
    throw ConfigError("unknown ablation axis '" + name + "' (expected lambda_grid, n_iters, start_step or modules)");
}

std::string to_string(AblationAxis axis) {
    switch (axis) {
        case AblationAxis::lambda_grid: return "lambda_grid";
        case AblationAxis::n_iters: return "n_iters";
        case AblationAxis::start_step: return "start_step";
        case AblationAxis::modules: return "modules";
    }
    return "unknown";
}

std::vector<Method> ablation_methods(const RunConfig& cfg, AblationAxis axis) {
    std::vector<Method> methods;
    const auto fmt = [](double v) {
        std::ostringstream s;
        s << v;
        return s.str();
    };
    switch (axis) {
        case AblationAxis::lambda_grid:
            for (double l1 : cfg.ablation.lambda1)
                for (double l2 : cfg.ablation.lambda2) {
                    TuningConfig t = cfg.tuning;
                    t.lambda1 = l1;
                    t.lambda2 = l2;
                    methods.push_back({"lambda1=" + fmt(l1) + " lambda2=" + fmt(l2), t});
                }
            break;
        case AblationAxis::n_iters:
            for (std::size_t n : cfg.ablation.n_iters) {
                TuningConfig t = cfg.tuning;
                t.n_iters = n;
                methods.push_back({"N=" + std::to_string(n), t});
            }
            break;
        case AblationAxis::start_step:
            for (std::size_t s : cfg.ablation.start_step) {
                TuningConfig t = cfg.tuning;
                t.start_step = s;
                methods.push_back({"start=" + std::to_string(s), t});
            }
            break;
        case AblationAxis::modules: {
            TuningConfig baseline = cfg.tuning;
            baseline.n_iters = 0;
            TuningConfig no_wp = cfg.tuning;
            no_wp.lambda2 = 0.0;
            methods = {{"Tree-Ring", baseline}, {"PT-Mark (w/o WP)", no_wp}, {"PT-Mark", cfg.tuning}};
            break;
        }
    }
    if (methods.empty()) throw ConfigError("ablation grid for " + to_string(axis) + " is empty");
    return methods;
}

EvalReport run_ablation(const RunConfig& cfg, AblationAxis axis, unsigned threads) {
    return evaluate_methods(cfg, ablation_methods(cfg, axis), "ablation_" + to_string(axis), threads);
}

std::string report_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "method,psnr,ssim,msssim,auc_clean";
    for (const auto& l : report.perturbation_labels) out << ",auc_" << l;
    out << ",auc_avg\n";
    for (const auto& r : report.rows) {
        out << r.method << ',' << fixed(r.psnr) << ',' << fixed(r.ssim) << ',' << fixed(r.msssim) << ','
            << fixed(r.auc_clean);
        for (double a : r.auc_perturbed) out << ',' << fixed(a);
        out << ',' << fixed(r.auc_average) << '\n';
    }
    return out.str();
}

nlohmann::ordered_json report_json(const EvalReport& report, const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["name"] = report.name;
    j["config_hash"] = report.config_hash;
    j["config"] = to_json(cfg);
    j["attempted"] = report.attempted;
    j["failed_fraction"] = report.failed_fraction();
    j["perturbations"] = report.perturbation_labels;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json row;
        row["method"] = r.method;
        row["psnr"] = r.psnr;
        row["ssim"] = r.ssim;
        row["msssim"] = r.msssim;
        row["auc_clean"] = r.auc_clean;
        row["auc_perturbed"] = r.auc_perturbed;
        row["auc_avg"] = r.auc_average;
        row["mean_loss_drop"] = r.mean_loss_drop;
        j["rows"].push_back(std::move(row));
    }
    j["reference"] = {{"p_clean", report.reference_p_clean}, {"p_perturbed", report.reference_p_perturbed}};
    j["records"] = nlohmann::ordered_json::array();
    for (const auto& r : report.records) {
        nlohmann::ordered_json rec;
        rec["prompt"] = r.prompt;
        rec["seed"] = r.seed;
        rec["method"] = r.method;
        rec["psnr"] = r.psnr;
        rec["ssim"] = r.ssim;
        rec["msssim"] = r.msssim;
        rec["p_clean"] = r.p_clean;
        rec["p_perturbed"] = r.p_perturbed;
        j["records"].push_back(std::move(rec));
    }
    j["failures"] = nlohmann::ordered_json::array();
    for (const auto& f : report.failures)
        j["failures"].push_back({{"prompt", f.prompt}, {"seed", f.seed}, {"error", f.error}});
    return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport report;
    try {
        report.name = j.at("name").get<std::string>();
        report.config_hash = j.at("config_hash").get<std::string>();
        report.attempted = j.at("attempted").get<std::size_t>();
        report.perturbation_labels = j.at("perturbations").get<std::vector<std::string>>();
        for (const auto& r : j.at("rows")) {
            MetricsRow row;
            row.method = r.at("method").get<std::string>();
            row.psnr = r.at("psnr").get<double>();
            row.ssim = r.at("ssim").get<double>();
            row.msssim = r.at("msssim").get<double>();
            row.auc_clean = r.at("auc_clean").get<double>();
            row.auc_perturbed = r.at("auc_perturbed").get<std::vector<double>>();
            row.auc_average = r.at("auc_avg").get<double>();
            row.mean_loss_drop = r.value("mean_loss_drop", 0.0);
            report.rows.push_back(std::move(row));
        }
        for (const auto& f : j.at("failures"))
            report.failures.push_back(
                {f.at("prompt").get<std::string>(), f.at("seed").get<std::uint64_t>(), f.at("error").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("report: ") + e.what());
    }
    return report;
}

std::string report_table(const EvalReport& report) {
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header = {"method", "PSNR", "SSIM", "MS-SSIM", "clean"};
    for (const auto& l : report.perturbation_labels) header.push_back(l);
    header.push_back("avg");
    cells.push_back(header);
    for (const auto& r : report.rows) {
        std::vector<std::string> line = {r.method, fixed(r.psnr, 2), fixed(r.ssim, 4), fixed(r.msssim, 4),
                                         fixed(r.auc_clean, 3)};
        for (double a : r.auc_perturbed) line.push_back(fixed(a, 3));
        line.push_back(fixed(r.auc_average, 3));
        cells.push_back(std::move(line));
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells)
        for (std::size_t c = 0; c < line.size() && c < width.size(); ++c) width[c] = std::max(width[c], line[c].size());
    std::ostringstream out;
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            out << (c == 0 ? "" : "  ");
            if (c == 0)
                out << line[c] << std::string(width[c] - line[c].size(), ' ');
            else
                out << std::string(width[c] - line[c].size(), ' ') << line[c];
        }
        out << '\n';
    }
    return out.str();
}

std::string auc_bar_svg(const EvalReport& report) {
    const std::size_t groups = report.perturbation_labels.size() + 1;
    const std::size_t series = report.rows.size();
    const double left = 50, top = 30, plot_h = 220, group_w = 90;
    const double width = left + group_w * static_cast<double>(groups) + 20;
    const double height = top + plot_h + 70 + 18.0 * static_cast<double>(series);
    const double bar_w = (group_w - 16) / static_cast<double>(std::max<std::size_t>(series, 1));

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">" << xml_escape(report.name)
      << ": detection AUC</text>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double y = top + plot_h * (1.0 - tick / 4.0);
        s << "<line x1=\"" << left << "\" x2=\"" << width - 20 << "\" y1=\"" << y << "\" y2=\"" << y
          << "\" stroke=\"#ddd\"/><text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
          << fixed(tick / 4.0, 2) << "</text>\n";
    }
    for (std::size_t g = 0; g < groups; ++g) {
        const double gx = left + group_w * static_cast<double>(g) + 8;
        for (std::size_t m = 0; m < series; ++m) {
            const auto& r = report.rows[m];
            const double v = g == 0 ? r.auc_clean : r.auc_perturbed[g - 1];
            const double h = plot_h * std::clamp(v, 0.0, 1.0);
            s << "<rect x=\"" << gx + bar_w * static_cast<double>(m) << "\" y=\"" << top + plot_h - h << "\" width=\""
              << bar_w - 1 << "\" height=\"" << h << "\" fill=\"" << kPalette[m % 7] << "\"/>\n";
        }
        const std::string name = g == 0 ? "clean" : report.perturbation_labels[g - 1];
        s << "<text x=\"" << gx + (group_w - 16) / 2 << "\" y=\"" << top + plot_h + 16
          << "\" text-anchor=\"middle\">" << xml_escape(name) << "</text>\n";
    }
    for (std::size_t m = 0; m < series; ++m) {
        const double y = top + plot_h + 40 + 18.0 * static_cast<double>(m);
        s << "<rect x=\"" << left << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\"" << kPalette[m % 7]
          << "\"/><text x=\"" << left + 16 << "\" y=\"" << y << "\">" << xml_escape(report.rows[m].method)
          << " (avg " << fixed(report.rows[m].auc_average, 3) << ")</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

std::string trend_line_svg(const EvalReport& report, const std::string& x_label) {
    const double left = 60, right = 60, top = 30, plot_w = 420, plot_h = 220;
    const std::size_t n = report.rows.size();
    double psnr_lo = 1e300, psnr_hi = -1e300;
    for (const auto& r : report.rows) {
        psnr_lo = std::min(psnr_lo, r.psnr);
        psnr_hi = std::max(psnr_hi, r.psnr);
    }
    if (psnr_hi - psnr_lo < 1e-9) {
        psnr_lo -= 1.0;
        psnr_hi += 1.0;
    }
    const auto x_at = [&](std::size_t i) {
        return left + (n <= 1 ? plot_w / 2 : plot_w * static_cast<double>(i) / static_cast<double>(n - 1));
    };
    const auto y_psnr = [&](double v) { return top + plot_h * (1.0 - (v - psnr_lo) / (psnr_hi - psnr_lo)); };
    const auto y_auc = [&](double v) { return top + plot_h * (1.0 - std::clamp(v, 0.0, 1.0)); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + plot_w + right << "\" height=\""
      << top + plot_h + 60 << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">" << xml_escape(report.name)
      << ": PSNR (blue, left) and average AUC (orange, right)</text>\n";
    s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"#999\"/>\n";
    s << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << fixed(psnr_hi, 2)
      << "</text><text x=\"" << left - 6 << "\" y=\"" << top + plot_h << "\" text-anchor=\"end\">"
      << fixed(psnr_lo, 2) << "</text>\n";
    s << "<text x=\"" << left + plot_w + 6 << "\" y=\"" << top + 4 << "\">1.00</text><text x=\"" << left + plot_w + 6
      << "\" y=\"" << top + plot_h << "\">0.00</text>\n";
    for (int series = 0; series < 2; ++series) {
        s << "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" << kPalette[series] << "\" points=\"";
        for (std::size_t i = 0; i < n; ++i)
            s << x_at(i) << ','
              << (series == 0 ? y_psnr(report.rows[i].psnr) : y_auc(report.rows[i].auc_average)) << ' ';
        s << "\"/>\n";
    }
    for (std::size_t i = 0; i < n; ++i)
        s << "<text x=\"" << x_at(i) << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">"
          << xml_escape(report.rows[i].method) << "</text>\n";
    s << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << top + plot_h + 40 << "\" text-anchor=\"middle\">"
      << xml_escape(x_label) << "</text>\n</svg>\n";
    return s.str();
}

std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir, const EvalReport& report,
                                                const RunConfig& cfg) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    const auto emit = [&](const std::string& file, const std::string& body) {
        const auto path = dir / file;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + path.string());
        out << body;
        written.push_back(path);
    };
    emit(report.name + ".csv", report_csv(report));
    emit(report.name + ".json", report_json(report, cfg).dump(2) + "\n");
    emit(report.name + "_auc.svg", auc_bar_svg(report));
    if (report.name == "ablation_n_iters") emit(report.name + "_trend.svg", trend_line_svg(report, "iterations N"));
    if (report.name == "ablation_start_step")
        emit(report.name + "_trend.svg", trend_line_svg(report, "starting ladder index"));
    return written;
}

}  // namespace ptmark
