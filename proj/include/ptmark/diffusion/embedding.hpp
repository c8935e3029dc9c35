#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace ptmark {

inline constexpr std::size_t kDefaultEmbeddingDim = 32;
/// Optimizer clamp bound on ‖e‖.
inline constexpr double kMaxEmbeddingNorm = 100.0;

/// Single-vector text embedding (prompt condition C or a null-text ∅_t).
struct Embedding {
    std::vector<double> values;

    Embedding() = default;
    explicit Embedding(std::size_t dim, double fill = 0.0) : values(dim, fill) {}
    explicit Embedding(std::vector<double> v) : values(std::move(v)) {}

    std::size_t dim() const { return values.size(); }
    double norm() const;

    bool operator==(const Embedding&) const = default;
};

/// Hashes the UTF-8 bytes of `prompt` to a seed and returns a unit-norm Gaussian vector.
Embedding prompt_embed(std::string_view prompt, std::size_t dim = kDefaultEmbeddingDim);

/// Embedding of the empty prompt: the zero vector.
Embedding null_embed(std::size_t dim = kDefaultEmbeddingDim);

/// Rescales `e` in place so that ‖e‖ ≤ kMaxEmbeddingNorm.
void clamp_norm(Embedding& e);

double cosine_similarity(const Embedding& a, const Embedding& b);

}  // namespace ptmark
