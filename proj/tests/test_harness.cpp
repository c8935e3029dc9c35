#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ptmark/errors.hpp"
#include "ptmark/harness/config.hpp"
#include "ptmark/harness/eval.hpp"
#include "ptmark/harness/metrics.hpp"
#include "ptmark/harness/parallel.hpp"
#include "ptmark/harness/tensor_io.hpp"

using namespace ptmark;

namespace {

Image random_image(std::uint64_t seed, std::size_t n = 128) {
    SeededRng rng(seed);
    Image x(n, n);
    for (auto& v : x.data) v = rng.uniform();
    return x;
}

Image checkerboard(std::size_t n) {
    Image x(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) x(i, j) = static_cast<double>((i + j) % 2);
    return x;
}

// SSIM straight from its definition, one window at a time, in long double.
double ssim_oracle(const Image& a, const Image& b) {
    constexpr int r = 5;
    long double w[11][11];
    long double total = 0.0L;
    for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j) total += w[i + r][j + r] = std::exp(-(i * i + j * j) / (2.0L * 1.5L * 1.5L));
    for (auto& row : w)
        for (auto& v : row) v /= total;
    const long double c1 = 1e-4L, c2 = 9e-4L;
    long double sum = 0.0L;
    std::size_t count = 0;
    for (std::size_t ci = r; ci + r < a.height; ++ci)
        for (std::size_t cj = r; cj + r < a.width; ++cj) {
            long double ma = 0, mb = 0;
            for (int i = -r; i <= r; ++i)
                for (int j = -r; j <= r; ++j) {
                    ma += w[i + r][j + r] * a(ci + i, cj + j);
                    mb += w[i + r][j + r] * b(ci + i, cj + j);
                }
            long double va = 0, vb = 0, cov = 0;
            for (int i = -r; i <= r; ++i)
                for (int j = -r; j <= r; ++j) {
                    const long double da = a(ci + i, cj + j) - ma, db = b(ci + i, cj + j) - mb;
                    va += w[i + r][j + r] * da * da;
                    vb += w[i + r][j + r] * db * db;
                    cov += w[i + r][j + r] * da * db;
                }
            sum += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    return static_cast<double>(sum / count);
}

RunConfig small_config() {
    RunConfig cfg;
    cfg.seeds = {0};
    cfg.tuning.n_iters = 2;
    cfg.ablation.lambda1 = {1.0, 1.5};
    cfg.ablation.lambda2 = {0.0005};
    return cfg;
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("ptmark_harness_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("psnr: worked values") {
    const Image a(16, 16, 0.5);
    CHECK(psnr(a, a) == kPsnrCap);
    CHECK(psnr(a, Image(16, 16, 0.6)) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(psnr(Image(16, 16, 0.0), a) == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-12));
    CHECK_THROWS_AS(psnr(a, Image(8, 16)), ShapeError);
}

TEST_CASE("ssim: agrees with the windowed definition") {
    const Image a = random_image(1, 40);
    Image b = a;
    SeededRng rng(2);
    for (auto& v : b.data) v = std::clamp(v + 0.2 * rng.normal(), 0.0, 1.0);
    CHECK(ssim(a, b) == doctest::Approx(ssim_oracle(a, b)).epsilon(1e-10));
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ssim(a, b) == ssim(b, a));
}

TEST_CASE("ssim: inverted checkerboard is close to -1") {
    const Image a = checkerboard(32);
    Image inv = a;
    for (auto& v : inv.data) v = 1.0 - v;
    const double s = ssim(a, inv);
    CHECK(s == doctest::Approx(ssim_oracle(a, inv)).epsilon(1e-10));
    CHECK(s < -0.99);
}

TEST_CASE("msssim: identity, range, size limit") {
    const Image a = random_image(3);
    Image b = a;
    SeededRng rng(4);
    for (auto& v : b.data) v = std::clamp(v + 0.05 * rng.normal(), 0.0, 1.0);
    CHECK(msssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    const double m = msssim(a, b);
    CHECK(m > 0.0);
    CHECK(m < 1.0);
    CHECK(msssim(a, b) == msssim(b, a));
    CHECK_THROWS_AS(msssim(random_image(5, 64), random_image(6, 64)), SizingError);
}

TEST_CASE("config: defaults survive TOML and JSON round trips") {
    RunConfig cfg;
    cfg.prompts = {"a \"quoted\" prompt", "second"};
    cfg.seeds = {3, 1, 4};
    cfg.tuning.optimizer = Optimizer::sgd;
    cfg.verify_embedding = VerifyEmbedding::null;
    cfg.perturbations = {Jpeg{40}, Rotate{30.0}, Regenerate{400}};
    CHECK(config_from_toml(config_to_toml(cfg)) == cfg);
    CHECK(config_from_json(nlohmann::json::parse(to_json(cfg).dump())) == cfg);
    CHECK(config_hash(cfg) == config_hash(config_from_toml(config_to_toml(cfg))));
    RunConfig other = cfg;
    other.tuning.lambda2 = 0.0005;
    CHECK(config_hash(other) != config_hash(cfg));

    const auto dir = scratch("config");
    save_config(dir / "run.toml", cfg);
    save_config(dir / "run.json", cfg);
    CHECK(load_config(dir / "run.toml") == cfg);
    CHECK(load_config(dir / "run.json") == cfg);
    std::filesystem::remove_all(dir);
}

TEST_CASE("config: validation") {
    RunConfig cfg;
    cfg.prompts.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"prompts", nlohmann::json::array()}}), ConfigError);
    cfg = RunConfig{};
    cfg.seeds.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.key.radius = 40;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(config_from_toml("seeds = [1, 2\n"), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"verify_embedding", "sometimes"}}), ConfigError);
}

TEST_CASE("config: prompt files") {
    const auto dir = scratch("prompts");
    {
        std::ofstream out(dir / "prompts.txt");
        out << "# comment\nfirst prompt\n\nsecond prompt\n";
    }
    CHECK(read_prompt_file(dir / "prompts.txt") == std::vector<std::string>{"first prompt", "second prompt"});
    const RunConfig cfg = config_from_toml("prompts_file = \"prompts.txt\"\n", dir);
    CHECK(cfg.prompts == std::vector<std::string>{"first prompt", "second prompt"});
    std::filesystem::remove_all(dir);
}

TEST_CASE("parallel_for: covers every index and propagates errors") {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
    std::atomic<int> ran{0};
    CHECK_THROWS_AS(parallel_for(100, 3,
                                 [&](std::size_t i) {
                                     ++ran;
                                     if (i == 17) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
    parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("tensor files round trip") {
    const auto dir = scratch("io");
    SeededRng rng(8);
    const Latent z = gaussian_grid(rng, 4, 16, 8);
    save_latent(dir / "z.ptt", z);
    CHECK(load_latent(dir / "z.ptt") == z);
    const Image x = random_image(9, 32);
    save_image(dir / "x.ptt", x);
    CHECK(load_image(dir / "x.ptt") == x);
    CHECK(read_any_image(dir / "x.ptt") == x);
    write_pgm(dir / "x.pgm", x);
    const Image y = read_pgm(dir / "x.pgm");
    REQUIRE(y.same_shape(x));
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(std::abs(y.data[k] - x.data[k]) <= 0.5 / 255.0 + 1e-12);
    CHECK_THROWS(load_latent(dir / "x.pgm"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("ablation grids and labels") {
    const RunConfig cfg;
    CHECK(ablation_methods(cfg, AblationAxis::lambda_grid).size() == 12);
    CHECK(ablation_methods(cfg, AblationAxis::n_iters).size() == 4);
    CHECK(ablation_methods(cfg, AblationAxis::start_step).size() == 5);
    const auto modules = ablation_methods(cfg, AblationAxis::modules);
    REQUIRE(modules.size() == 3);
    CHECK(modules[0].label == "Tree-Ring");
    CHECK(modules[0].tuning.n_iters == 0);
    CHECK(modules[1].label == "PT-Mark (w/o WP)");
    CHECK(modules[1].tuning.lambda2 == 0.0);
    CHECK(modules[2].label == "PT-Mark");
    CHECK(modules[2].tuning == cfg.tuning);
    CHECK(ablation_axis_from_string("lambda_grid") == AblationAxis::lambda_grid);
    CHECK(ablation_axis_from_string(to_string(AblationAxis::start_step)) == AblationAxis::start_step);
    CHECK_THROWS_AS(ablation_axis_from_string("everything"), ConfigError);
}

TEST_CASE("eval: table shape, determinism across thread counts, report files") {
    const RunConfig cfg = small_config();
    const EvalReport a = run_eval(cfg, 1);
    const EvalReport b = run_eval(cfg, 4);
    REQUIRE(a.rows.size() == 2);
    CHECK(a.rows[0].method == "Tree-Ring");
    CHECK(a.rows[1].method == "PT-Mark");
    CHECK(a.perturbation_labels.size() == 7);
    CHECK(a.failures.empty());
    CHECK(a.attempted == 2);
    for (const auto& row : a.rows) {
        CHECK(row.auc_perturbed.size() == 7);
        double mean = 0.0;
        for (double v : row.auc_perturbed) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            mean += v / 7.0;
        }
        CHECK(row.auc_average == doctest::Approx(mean).epsilon(1e-14));
        CHECK(row.ssim <= 1.0);
        CHECK(row.msssim <= 1.0);
    }
    const std::string csv = report_csv(a);
    CHECK(csv == report_csv(b));
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(std::count(header.begin(), header.end(), ',') == 12);
    CHECK(header.rfind("method,psnr,ssim,msssim,auc_clean,", 0) == 0);

    const auto j = report_json(a, cfg);
    CHECK(j.dump() == report_json(b, cfg).dump());
    const EvalReport back = report_from_json(nlohmann::json::parse(j.dump()));
    CHECK(report_csv(back) == csv);
    CHECK(back.config_hash == config_hash(cfg));

    const auto dir = scratch("report");
    for (const auto& p : write_report(dir, a, cfg)) CHECK(std::filesystem::file_size(p) > 0);
    CHECK(std::filesystem::exists(dir / "eval.csv"));
    CHECK(std::filesystem::exists(dir / "eval_auc.svg"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("ablation: lambda grid and modules rows") {
    RunConfig cfg = small_config();
    cfg.prompts = {"a red fox resting in fresh snow"};
    cfg.seeds = {0, 1};
    cfg.perturbations = {Jpeg{25}};
    const auto grid = run_ablation(cfg, AblationAxis::lambda_grid, 0);
    CHECK(grid.rows.size() == 2);
    CHECK(grid.name == "ablation_lambda_grid");
    const auto modules = run_ablation(cfg, AblationAxis::modules, 0);
    REQUIRE(modules.rows.size() == 3);
    CHECK(modules.rows[0].method == "Tree-Ring");
    CHECK(modules.rows[2].method == "PT-Mark");
}

TEST_CASE("eval: failure accounting") {
    EvalReport r;
    r.attempted = 20;
    r.failures.resize(2);
    CHECK(r.failed_fraction() == doctest::Approx(0.1));
    CHECK_FALSE(r.exceeds_failure_threshold(0.10));
    r.failures.resize(3);
    CHECK(r.exceeds_failure_threshold(0.10));
}
