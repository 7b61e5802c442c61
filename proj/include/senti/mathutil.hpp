#ifndef SENTI_MATHUTIL_HPP
#define SENTI_MATHUTIL_HPP

#include <algorithm>
#include <array>
#include <cmath>

namespace senti {

inline double logsumexp3(const std::array<double, 3>& s) {
    double m = std::max({s[0], s[1], s[2]});
    return m + std::log(std::exp(s[0] - m) + std::exp(s[1] - m) + std::exp(s[2] - m));
}

inline std::array<double, 3> softmax3(const std::array<double, 3>& s) {
    double m = std::max({s[0], s[1], s[2]});
    std::array<double, 3> e{std::exp(s[0] - m), std::exp(s[1] - m), std::exp(s[2] - m)};
    double z = e[0] + e[1] + e[2];
    return {e[0] / z, e[1] / z, e[2] / z};
}

inline int argmax3(const std::array<double, 3>& s) {
    int best = 0;
    for (int k = 1; k < 3; ++k)
        if (s[k] > s[best]) best = k;
    return best;
}

} // namespace senti

#endif
