#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mmmem/error.hpp"

namespace mmmem {

// Embeddings live in double precision in memory; snapshots store float32.
using Embedding = std::vector<double>;

inline void require_same_dim(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw ShapeError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
    }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double l2_norm(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

// Cosine similarity; 0 when either vector has zero norm.
inline double cosine(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "cosine");
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "squared_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline Embedding normalized(Embedding v) {
    const double n = l2_norm(v);
    if (n > 0.0) {
        for (double& x : v) x /= n;
    }
    return v;
}

}  // namespace mmmem
