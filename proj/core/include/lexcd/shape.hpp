#pragma once

#include <array>
#include <string>

namespace lexcd {

// Dense rank-4 extent in batch-channel-row-col order. Rank-1/2/3 data is
// carried with trailing axes of size 1.
struct Shape4 {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    constexpr Shape4() = default;
    constexpr Shape4(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {}

    long long numel() const {
        return static_cast<long long>(n) * c * h * w;
    }
    bool valid() const { return n >= 1 && c >= 1 && h >= 1 && w >= 1; }

    int operator[](int axis) const {
        const std::array<int, 4> d{n, c, h, w};
        return d[static_cast<size_t>(axis)];
    }
    int& operator[](int axis) {
        int* d[4] = {&n, &c, &h, &w};
        return *d[static_cast<size_t>(axis)];
    }

    bool operator==(const Shape4&) const = default;

    std::string str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }
};

inline long long flat_index(const Shape4& s, int n, int c, int h, int w) {
    return ((static_cast<long long>(n) * s.c + c) * s.h + h) * s.w + w;
}

}  // namespace lexcd
