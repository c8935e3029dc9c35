#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "ptmark/errors.hpp"
#include "ptmark/numerics/finite_diff.hpp"
#include "ptmark/tuning/pivotal.hpp"
#include "ptmark/watermark/detect.hpp"

using namespace ptmark;

namespace {

const ToyDenoiser& denoiser() {
    static const NoiseSchedule s = schedule_linear();
    static const ToyDenoiser d(DenoiserParams{}, s);
    return d;
}

Latent random_latent(std::uint64_t seed, double scale = 1.0) {
    SeededRng rng(seed);
    return scaled(gaussian_grid(rng, 4, 64, 64), scale);
}

Embedding random_embedding(std::uint64_t seed, double scale) {
    SeededRng rng(seed);
    Embedding e(kDefaultEmbeddingDim);
    for (auto& v : e.values) v = scale * rng.normal();
    return e;
}

Latent clean_sample(std::uint64_t seed, const Embedding& cond) {
    return sample_trajectory(denoiser(), random_latent(seed), cond, null_embed(), 7.5).back();
}

}  // namespace

TEST_CASE("config: defaults and validation") {
    const TuningConfig cfg;
    CHECK(cfg.lambda1 == 1.5);
    CHECK(cfg.lambda2 == 0.0007);
    CHECK(cfg.n_iters == 10);
    CHECK(cfg.guidance_w == 7.5);
    CHECK(cfg.lr == 0.01);
    CHECK(cfg.optimizer == Optimizer::adam);
    CHECK_NOTHROW(cfg.validate());

    auto bad = cfg;
    bad.lambda1 = -1.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = cfg;
    bad.saliency_q = 1.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = cfg;
    bad.lr = 0.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = cfg;
    bad.guidance_w = std::nan("");
    CHECK_THROWS_AS(bad.validate(), DomainError);

    CHECK(optimizer_from_string("sgd") == Optimizer::sgd);
    CHECK(to_string(Optimizer::adam) == "adam");
    CHECK_THROWS_AS(optimizer_from_string("rmsprop"), ConfigError);
}

TEST_CASE("saliency: identical inputs give an empty mask") {
    const Latent z = random_latent(1);
    const auto m = saliency_mask(z, z, 0.2);
    CHECK(m.active_cells() == 0);
    CHECK(m.channels == 4);
}

TEST_CASE("saliency: a hot cell selects its blur support") {
    const Latent base = random_latent(2);
    for (auto [i, j, expected] : {std::tuple{20, 31, 9}, std::tuple{0, 0, 4}, std::tuple{63, 10, 6}}) {
        Latent hot = base;
        hot.at(1, i, j) += 5.0;
        const auto m = saliency_mask(hot, base, 9.0 / 4096.0);
        CHECK(m.active_cells() == static_cast<std::size_t>(expected));
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
                const int a = i + di, b = j + dj;
                if (a >= 0 && a < 64 && b >= 0 && b < 64) CHECK(m.at(a, b));
            }
    }
}

TEST_CASE("saliency: active fraction tracks q on random inputs") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Latent a = random_latent(10 + seed), b = random_latent(50 + seed);
        for (double q : {0.05, 0.2, 0.5, 0.9}) {
            const auto m = saliency_mask(a, b, q);
            CHECK(std::abs(m.active_fraction() - q) <= 2.0 / 4096.0);
            CHECK(m == saliency_mask(a, b, q));
        }
    }
    CHECK_THROWS_AS(saliency_mask(Latent(4, 64, 64), Latent(4, 32, 32), 0.2), ShapeError);
    CHECK_THROWS_AS(saliency_mask(Latent(4, 8, 8), Latent(4, 8, 8), 0.0), DomainError);
}

TEST_CASE("losses: worked examples") {
    TuningConfig cfg;
    const Latent z = random_latent(3);
    const auto full = saliency_mask(random_latent(4), random_latent(5), 0.5);
    CHECK(tuning_losses(z, z, z, full, cfg) == LossTerms{0.0, 0.0, 0.0});

    const Latent other = random_latent(6);
    const auto none = empty_mask(4, 64, 64);
    const auto terms = tuning_losses(z, z, other, none, cfg);
    CHECK(terms.l_wm == 0.0);

    const Latent pred(1, 1, 1, 1.0), star(1, 1, 1, 0.0), hat(1, 1, 1, 2.0);
    SaliencyMask on = empty_mask(1, 1, 1);
    on.plane[0] = 1;
    const auto one = tuning_losses(pred, star, hat, on, cfg);
    CHECK(one.l_sem == 1.0);
    CHECK(one.l_wm == 1.0);
    CHECK(one.l_total == doctest::Approx(cfg.lambda1 + cfg.lambda2));
}

namespace {

struct GradInstance {
    Latent z_bar, z_star, z_hat;
    SaliencyMask mask;
    Timestep t;
    Embedding null, cond;
};

GradInstance make_instance(std::uint64_t k) {
    const auto& s = denoiser().schedule();
    GradInstance g{random_latent(100 + k), random_latent(200 + k, 0.5), random_latent(300 + k, 0.5), {},
                   s.steps()[(11 * k) % s.num_steps()], random_embedding(400 + k, 0.3), prompt_embed("prompt " + std::to_string(k))};
    g.mask = saliency_mask(g.z_hat, g.z_star, 0.2);
    return g;
}

}  // namespace

TEST_CASE("embedding_grad: central finite differences on 20 instances") {
    const auto& d = denoiser();
    TuningConfig cfg;
    // a large λ2 so the watermark term is visible next to the semantic one
    cfg.lambda2 = 0.5;
    for (std::uint64_t k = 0; k < 20; ++k) {
        const auto g = make_instance(k);
        const StepObjective obj(d, g.z_bar, g.t, g.cond, g.z_star, g.z_hat, g.mask, cfg);

        // stay away from L1 kinks
        const Latent pred = obj.predict(g.null);
        double closest = 1e300;
        for (std::size_t c = 0; c < 4; ++c)
            for (std::size_t i = 0; i < 64; ++i)
                for (std::size_t j = 0; j < 64; ++j)
                    if (g.mask.at(i, j)) closest = std::min(closest, std::abs(g.z_hat.at(c, i, j) - pred.at(c, i, j)));
        REQUIRE(closest > 1e-6);

        const Embedding grad = embedding_grad(d, g.z_bar, g.t, g.null, g.cond, g.z_star, g.z_hat, g.mask, cfg);
        const auto f = [&](std::span<const double> x) {
            return obj.losses(Embedding(std::vector<double>(x.begin(), x.end()))).l_total;
        };
        const auto fd = central_difference_gradient(f, g.null.values, 1e-5);
        CHECK(relative_max_error(grad.values, fd) < 1e-4);
    }
}

TEST_CASE("embedding_grad: vanishes without loss weight or without guidance") {
    const auto& d = denoiser();
    const auto g = make_instance(3);
    TuningConfig zero_weights;
    zero_weights.lambda1 = 0.0;
    zero_weights.lambda2 = 0.0;
    for (double v : embedding_grad(d, g.z_bar, g.t, g.null, g.cond, g.z_star, g.z_hat, g.mask, zero_weights).values)
        CHECK(v == 0.0);
    TuningConfig unguided;
    unguided.guidance_w = 1.0;
    for (double v : embedding_grad(d, g.z_bar, g.t, g.null, g.cond, g.z_star, g.z_hat, g.mask, unguided).values)
        CHECK(v == 0.0);
}

TEST_CASE("objective: guided prediction is bit-identical to cfg_eps") {
    const auto& d = denoiser();
    const auto g = make_instance(5);
    const StepObjective obj(d, g.z_bar, g.t, g.cond, g.z_star, g.z_hat, g.mask, TuningConfig{});
    CHECK(obj.eps(g.null) == cfg_eps(d, g.z_bar, g.t, g.cond, g.null, 7.5));
    CHECK(obj.predict(g.null) == ddim_step(g.z_bar, cfg_eps(d, g.z_bar, g.t, g.cond, g.null, 7.5), g.t, d.schedule()));
}

TEST_CASE("pivotal_tune: zero iterations reproduce the watermarked generation") {
    const auto& d = denoiser();
    const auto key = keygen(42, 10, 3, 64, 64);
    const Embedding c = prompt_embed("a red fox resting in fresh snow");
    TuningConfig cfg;
    cfg.n_iters = 0;
    const auto r = pivotal_tune(d, clean_sample(1, c), key, c, cfg);
    CHECK(r.tuned == r.watermarked);
    CHECK(r.image == decode(r.watermarked.back()));
    CHECK(r.nulls.size() == 50);
    for (const auto& e : r.nulls.per_step) CHECK(e == null_embed());
    CHECK(r.watermarked == sample_trajectory(d, embed(r.pivot.front(), key), c, null_embed(), 7.5));
    for (const auto& curve : r.curves) {
        CHECK_FALSE(curve.optimized);
        CHECK(curve.iterations.empty());
    }
}

TEST_CASE("pivotal_tune: semantic-only tuning descends at almost every step") {
    const auto& d = denoiser();
    const auto key = keygen(42, 10, 3, 64, 64);
    const Embedding c = prompt_embed("a lighthouse on a rocky coast at dusk");
    TuningConfig cfg;
    cfg.lambda2 = 0.0;
    std::size_t descended = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = pivotal_tune(d, clean_sample(1000 + seed, c), key, c, cfg);
        REQUIRE(r.curves.size() == 50);
        for (const auto& curve : r.curves) {
            REQUIRE(curve.iterations.size() == cfg.n_iters);
            descended += curve.final.l_sem <= curve.iterations.front().l_sem;
            ++total;
        }
    }
    MESSAGE("descending steps: " << descended << "/" << total);
    CHECK(static_cast<double>(descended) >= 0.95 * static_cast<double>(total));
}

TEST_CASE("pivotal_tune: start step, optimizer choice, loss csv") {
    const auto& d = denoiser();
    const auto key = keygen(42, 10, 3, 64, 64);
    const Embedding c = prompt_embed("a red fox resting in fresh snow");
    const Latent z0 = clean_sample(7, c);

    TuningConfig late;
    late.start_step = 20;
    const auto r = pivotal_tune(d, z0, key, c, late);
    for (std::size_t k = 0; k <= 20; ++k) CHECK(r.tuned.states[k] == r.watermarked.states[k]);
    for (std::size_t k = 0; k < 20; ++k) {
        CHECK_FALSE(r.curves[k].optimized);
        CHECK(r.nulls.per_step[k] == null_embed());
    }
    CHECK(r.curves[20].optimized);
    CHECK_FALSE(r.nulls.per_step[20] == null_embed());

    TuningConfig sgd;
    sgd.optimizer = Optimizer::sgd;
    sgd.n_iters = 3;
    const auto rs = pivotal_tune(d, z0, key, c, sgd);
    CHECK(all_finite(rs.tuned.back()));
    for (const auto& e : rs.nulls.per_step) CHECK(e.norm() <= kMaxEmbeddingNorm);

    std::ostringstream csv;
    write_loss_csv(csv, rs.curves);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "step,iter,l_sem,l_wm,l_total");
    std::size_t rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 50 * (3 + 1));

    CHECK(pivotal_tune(d, z0, key, c, sgd).tuned == rs.tuned);
}
