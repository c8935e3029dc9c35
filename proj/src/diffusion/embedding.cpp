#include "ptmark/diffusion/embedding.hpp"

#include <cmath>

#include "ptmark/errors.hpp"
#include "ptmark/numerics/rng.hpp"

namespace ptmark {

double Embedding::norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

Embedding prompt_embed(std::string_view prompt, std::size_t dim) {
    SeededRng rng(derive_seed(fnv1a64(prompt), std::string_view("prompt-embedding")));
    Embedding e(dim);
    for (double& v : e.values) v = rng.normal();
    const double n = e.norm();
    for (double& v : e.values) v /= n;
    return e;
}

Embedding null_embed(std::size_t dim) { return Embedding(dim, 0.0); }

void clamp_norm(Embedding& e) {
    const double n = e.norm();
    if (n > kMaxEmbeddingNorm) {
        const double s = kMaxEmbeddingNorm / n;
        for (double& v : e.values) v *= s;
    }
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) throw ShapeError("cosine_similarity: dimension mismatch");
    double ab = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) ab += a.values[i] * b.values[i];
    const double den = a.norm() * b.norm();
    return den > 0.0 ? ab / den : 0.0;
}

}  // namespace ptmark
