#include <doctest.h>

#include <cmath>
#include <string>

#include "ptmark/diffusion/codec.hpp"
#include "ptmark/diffusion/ddim.hpp"
#include "ptmark/errors.hpp"
#include "ptmark/numerics/finite_diff.hpp"

using namespace ptmark;

namespace {

const NoiseSchedule& default_schedule() {
    static const NoiseSchedule s = schedule_linear();
    return s;
}

const ToyDenoiser& default_denoiser() {
    static const ToyDenoiser d(DenoiserParams{}, default_schedule());
    return d;
}

Latent random_latent(std::uint64_t seed, std::size_t c = 4, std::size_t h = 64, std::size_t w = 64) {
    SeededRng rng(seed);
    return gaussian_grid(rng, c, h, w);
}

Embedding random_embedding(std::uint64_t seed, double scale = 1.0) {
    SeededRng rng(seed);
    Embedding e(kDefaultEmbeddingDim);
    for (auto& v : e.values) v = scale * rng.normal();
    return e;
}

}  // namespace

TEST_CASE("schedule: default ladder") {
    const auto& s = default_schedule();
    CHECK(s.num_steps() == 50);
    CHECK(s.steps().front() == 1000);
    CHECK(s.ladder().back() == 0);
    CHECK(s.ladder().size() == 51);
    CHECK(s.alpha_bar(0) == 1.0);
    CHECK(s.alpha_bar(s.steps().front()) < 0.05);
    for (std::size_t i = 1; i < s.steps().size(); ++i) CHECK(s.steps()[i] < s.steps()[i - 1]);
    for (int t = 1; t <= 1000; ++t) {
        CHECK(s.beta(t) > 0.0);
        CHECK(s.beta(t) < 1.0);
        CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    }
}

TEST_CASE("schedule: alpha-bar is the running product of 1 - beta") {
    const auto& s = default_schedule();
    double prod = 1.0;
    for (int t = 1; t <= 1000; ++t) {
        prod *= 1.0 - s.beta(t);
        CHECK(s.alpha_bar(t) == doctest::Approx(prod).epsilon(1e-14));
    }
}

TEST_CASE("schedule: constant beta decays geometrically") {
    const auto s = schedule_linear(200, 0.01, 0.01, 10);
    for (int t : {0, 1, 17, 200}) CHECK(s.alpha_bar(t) == doctest::Approx(std::pow(0.99, t)).epsilon(1e-13));
}

TEST_CASE("schedule: full ladder and navigation") {
    const auto s = schedule_linear(20, 1e-3, 0.05, 20);
    REQUIRE(s.num_steps() == 20);
    for (int i = 0; i < 20; ++i) CHECK(s.steps()[i] == 20 - i);
    CHECK(default_schedule().predecessor(1000) == 980);
    CHECK(default_schedule().successor(0) == 20);
    CHECK(default_schedule().nearest_ladder_step(611) == 620);
    CHECK_THROWS_AS(default_schedule().predecessor(0), DomainError);
    CHECK_THROWS_AS(default_schedule().successor(1000), DomainError);
    CHECK_THROWS_AS(default_schedule().ladder_index(13), DomainError);
}

TEST_CASE("schedule: invalid ranges") {
    CHECK_THROWS_AS(schedule_linear(1000, 0.0, 0.02, 50), DomainError);
    CHECK_THROWS_AS(schedule_linear(1000, 0.03, 0.02, 50), DomainError);
    CHECK_THROWS_AS(schedule_linear(1000, 1e-4, 1.0, 50), DomainError);
    CHECK_THROWS_AS(schedule_linear(1000, 1e-4, 0.02, 0), DomainError);
    CHECK_THROWS_AS(schedule_linear(10, 1e-4, 0.02, 11), DomainError);
}

TEST_CASE("forward_diffuse: endpoints, energy and reproducibility") {
    const auto& s = default_schedule();
    const Latent z0 = random_latent(1);
    SeededRng a(5);
    CHECK(forward_diffuse(z0, 0, s, a) == z0);

    const Timestep t = 500;
    const double ab = s.alpha_bar(t);
    const double expected = ab * squared_norm(z0) + (1.0 - ab) * static_cast<double>(z0.size());
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        SeededRng rng(seed);
        mean += squared_norm(forward_diffuse(z0, t, s, rng));
    }
    mean /= 1000.0;
    CHECK(std::abs(mean - expected) / expected < 0.05);

    SeededRng r1(9), r2(9);
    CHECK(forward_diffuse(z0, t, s, r1) == forward_diffuse(z0, t, s, r2));
    SeededRng r3(9);
    CHECK_THROWS_AS(forward_diffuse(z0, 13, s, r3), DomainError);
}

TEST_CASE("denoiser: closed-form special cases") {
    const auto& s = default_schedule();
    ToyDenoiser d(DenoiserParams{}, s);
    const Latent z = random_latent(2);
    const Timestep t = s.steps()[7];

    ToyDenoiser unbiased = d;
    unbiased.clear_bias();
    CHECK(max_abs_difference(denoise_eps(unbiased, z, t, null_embed()), d.linear_part(z)) < 1e-15);

    // zero latent leaves only the additive term, constant over space
    const Embedding e = random_embedding(3);
    const Latent eps0 = denoise_eps(d, Latent(4, 64, 64), t, e);
    for (std::size_t c = 0; c < 4; ++c) {
        const auto ch = eps0.channel(c);
        for (double v : ch) CHECK(v == ch[0]);
    }
    CHECK(l2_norm(eps0) > 0.0);

    CHECK(denoise_eps(d, z, t, e) == denoise_eps(default_denoiser(), z, t, e));
    CHECK(d.linear_norm_bound() <= 1.0 + 1e-12);
    CHECK_THROWS_AS(denoise_eps(d, Latent(4, 32, 32), t, e), ShapeError);
    CHECK_THROWS_AS(denoise_eps(d, z, t, Embedding(5)), ShapeError);
}

TEST_CASE("denoiser: linear part stays within its spectral bound") {
    const auto& d = default_denoiser();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Latent z = random_latent(100 + seed);
        CHECK(l2_norm(d.linear_part(z)) <= d.linear_norm_bound() * l2_norm(z) * (1.0 + 1e-12));
    }
}

TEST_CASE("denoiser: vjp matches central finite differences on 20 instances") {
    const auto& d = default_denoiser();
    const auto& s = d.schedule();
    for (std::uint64_t k = 0; k < 20; ++k) {
        const Latent z = random_latent(200 + k);
        const Latent cot = random_latent(300 + k);
        const Embedding e = random_embedding(400 + k, 0.5 + 0.2 * static_cast<double>(k));
        const Timestep t = s.steps()[(7 * k) % s.num_steps()];
        const Embedding g = denoise_eps_vjp(d, z, t, e, cot);
        const auto f = [&](std::span<const double> x) {
            return dot(cot, denoise_eps(d, z, t, Embedding(std::vector<double>(x.begin(), x.end()))));
        };
        const auto fd = central_difference_gradient(f, e.values, 1e-5);
        CHECK(relative_max_error(g.values, fd) < 1e-4);
    }
}

TEST_CASE("denoiser: vjp is linear in the cotangent") {
    const auto& d = default_denoiser();
    const Latent z = random_latent(7);
    const Latent cot = random_latent(8);
    const Embedding e = random_embedding(9);
    const Timestep t = 500;
    const Embedding g = denoise_eps_vjp(d, z, t, e, cot);
    const Embedding g2 = denoise_eps_vjp(d, z, t, e, scaled(cot, 2.0));
    for (std::size_t i = 0; i < g.dim(); ++i) CHECK(g2.values[i] == doctest::Approx(2.0 * g.values[i]).epsilon(1e-13));
    const Embedding g0 = denoise_eps_vjp(d, z, t, e, Latent(4, 64, 64));
    for (double v : g0.values) CHECK(v == 0.0);
    CHECK_THROWS_AS(denoise_eps_vjp(d, z, t, e, Latent(4, 8, 8)), ShapeError);
}

TEST_CASE("cfg: guidance arithmetic") {
    const auto& d = default_denoiser();
    const Latent z = random_latent(10);
    const Embedding c = prompt_embed("a red fox resting in fresh snow");
    const Embedding n = null_embed();
    const Timestep t = 600;
    CHECK(cfg_eps(d, z, t, c, n, 1.0) == denoise_eps(d, z, t, c));
    CHECK(cfg_eps(d, z, t, c, c, 7.5) == denoise_eps(d, z, t, c));
    CHECK(cfg_eps(d, z, t, c, c, -3.0) == denoise_eps(d, z, t, c));

    const Latent ones(4, 8, 8, 1.0), zeros(4, 8, 8, 0.0);
    for (double v : guide(ones, zeros, 7.5).data) CHECK(v == 7.5);

    const Latent manual = linear_combination(7.5, denoise_eps(d, z, t, c), -6.5, denoise_eps(d, z, t, n));
    CHECK(max_abs_difference(cfg_eps(d, z, t, c, n, 7.5), manual) < 1e-12);
}

TEST_CASE("ddim: zero prediction scales by the alpha-bar ratio") {
    const auto& s = default_schedule();
    const Latent z = random_latent(11);
    const Latent zero(4, 64, 64);
    const Timestep t = 500, p = s.predecessor(500), q = s.successor(500);
    const Latent down = ddim_step(z, zero, t, s);
    const Latent up = ddim_inverse_step(z, zero, t, s);
    for (std::size_t k = 0; k < z.size(); ++k) {
        CHECK(down.data[k] == doctest::Approx(std::sqrt(s.alpha_bar(p) / s.alpha_bar(t)) * z.data[k]).epsilon(1e-14));
        CHECK(up.data[k] == doctest::Approx(std::sqrt(s.alpha_bar(q) / s.alpha_bar(t)) * z.data[k]).epsilon(1e-14));
    }
    CHECK_THROWS_AS(ddim_step(z, zero, 0, s), DomainError);
    CHECK_THROWS_AS(ddim_inverse_step(z, zero, 1000, s), DomainError);
}

TEST_CASE("ddim: exact prediction lands on the lower marginal") {
    const auto& s = default_schedule();
    const Latent x = random_latent(12);
    const Latent e = random_latent(13);
    const Timestep t = 720, p = s.predecessor(720);
    const auto mix = [&](Timestep u) {
        return linear_combination(std::sqrt(s.alpha_bar(u)), x, std::sqrt(1.0 - s.alpha_bar(u)), e);
    };
    CHECK(max_abs_difference(ddim_step(mix(t), e, t, s), mix(p)) < 1e-12);
}

TEST_CASE("ddim: linearity and algebraic inverse") {
    const auto& s = default_schedule();
    const Latent z1 = random_latent(14), z2 = random_latent(15);
    const Latent e1 = random_latent(16), e2 = random_latent(17);
    const double a = 0.7, b = -1.9;
    const Timestep t = 300;
    const Latent lhs = ddim_step(linear_combination(a, z1, b, z2), linear_combination(a, e1, b, e2), t, s);
    const Latent rhs = linear_combination(a, ddim_step(z1, e1, t, s), b, ddim_step(z2, e2, t, s));
    CHECK(max_abs_difference(lhs, rhs) < 1e-12);

    for (Timestep u : s.steps()) {
        const Latent down = ddim_step(z1, e1, u, s);
        CHECK(max_abs_difference(ddim_inverse_step(down, e1, s.predecessor(u), s), z1) < 1e-11);
    }
}

TEST_CASE("sampling: zero-weight denoiser chains the alpha-bar ratio") {
    const auto& s = default_schedule();
    const ToyDenoiser zero = ToyDenoiser::zero(DenoiserParams{}, s);
    const Latent zT = random_latent(18);
    const Trajectory tr = sample_trajectory(zero, zT, prompt_embed("x"), null_embed(), 7.5);
    REQUIRE(tr.size() == 51);
    CHECK(tr.timesteps == s.ladder());
    const double gain = std::sqrt(s.alpha_bar(0) / s.alpha_bar(1000));
    for (std::size_t k = 0; k < zT.size(); ++k) CHECK(tr.back().data[k] == doctest::Approx(gain * zT.data[k]).epsilon(1e-12));
}

TEST_CASE("sampling: single step, cfg collapse, determinism") {
    const auto s1 = schedule_linear(1000, 1e-4, 0.02, 1);
    const ToyDenoiser d1(DenoiserParams{}, s1);
    const Latent zT = random_latent(19);
    const Embedding c = prompt_embed("a lighthouse on a rocky coast at dusk");
    CHECK(sample_trajectory(d1, zT, c, null_embed(), 7.5).size() == 2);

    const auto& d = default_denoiser();
    CHECK(sample_trajectory(d, zT, c, c, 7.5) == sample_trajectory(d, zT, c, c, 1.0));
    CHECK(sample_trajectory(d, zT, c, null_embed(), 7.5) == sample_trajectory(d, zT, c, null_embed(), 7.5));
    CHECK_THROWS_AS(sample_trajectory(d, zT, c, NullTextSchedule::constant(null_embed(), 49), 7.5), ShapeError);
}

TEST_CASE("inversion: recovers the noise of a w=1 sample") {
    const auto& d = default_denoiser();
    const Embedding c = prompt_embed("a red fox resting in fresh snow");
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Latent zT = random_latent(500 + seed);
        const Trajectory fwd = sample_trajectory(d, zT, c, null_embed(), 1.0);
        const Trajectory inv = invert_trajectory(d, fwd.back(), c);
        REQUIRE(inv.size() == 51);
        CHECK(inv.timesteps == d.schedule().ladder());
        CHECK(inv.back() == fwd.back());
        worst = std::max(worst, relative_l2_error(inv.front(), zT));
    }
    MESSAGE("worst invert-sample relative L2 error: " << worst);
    CHECK(worst < 5e-2);
}

TEST_CASE("inversion: zero latent through an unbiased denoiser stays zero") {
    ToyDenoiser d(DenoiserParams{}, default_schedule());
    d.clear_bias();
    const Trajectory tr = invert_trajectory(d, Latent(4, 64, 64), null_embed());
    CHECK(tr.size() == 51);
    for (const auto& z : tr.states) CHECK(squared_norm(z) == 0.0);
}

TEST_CASE("codec: round trip, constant decode, clamp") {
    SeededRng rng(20);
    Latent z(4, 64, 64);
    for (auto& v : z.data) v = rng.uniform(-4.0, 4.0);
    const Image x = decode(z);
    CHECK(x.height == 128);
    CHECK(x.width == 128);
    CHECK(max_abs_difference(encode(x), z) < 1e-14);

    for (double v : decode(Latent(4, 64, 64)).data) CHECK(v == 0.5);

    Latent big(4, 2, 2, 0.0);
    big.at(0, 0, 0) = 9.0;
    big.at(1, 0, 0) = -5.0;
    big.at(2, 0, 0) = 4.0;
    big.at(3, 1, 1) = 1.0;
    const Image y = decode(big);
    CHECK(y(0, 0) == 1.0);
    CHECK(y(0, 1) == 0.0);
    CHECK(y(1, 0) == 1.0);
    CHECK(y(3, 3) == doctest::Approx(5.0 / 8.0));
    CHECK_THROWS_AS(decode(Latent(3, 4, 4)), ShapeError);
    CHECK_THROWS_AS(encode(Image(5, 4)), ShapeError);
}

TEST_CASE("embeddings: determinism, null, separation") {
    CHECK(prompt_embed("a cat") == prompt_embed("a cat"));
    CHECK(prompt_embed("a cat").norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(null_embed().norm() == 0.0);
    int close = 0;
    for (int i = 0; i < 100; ++i) {
        const auto a = prompt_embed("prompt number " + std::to_string(i));
        const auto b = prompt_embed("another prompt " + std::to_string(i));
        close += std::abs(cosine_similarity(a, b)) >= 0.9;
    }
    CHECK(close == 0);
    Embedding big(kDefaultEmbeddingDim, 50.0);
    clamp_norm(big);
    CHECK(big.norm() == doctest::Approx(kMaxEmbeddingNorm).epsilon(1e-12));
}
