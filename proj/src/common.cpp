#include "aniso/common.hpp"

#include <algorithm>

namespace aniso {

namespace {

void extend(std::vector<std::vector<int>>& out, std::vector<int>& cur, int pos, int budget) {
    if (pos == static_cast<int>(cur.size())) {
        out.push_back(cur);
        return;
    }
    for (int k = 0; k <= budget; ++k) {
        cur[pos] = k;
        extend(out, cur, pos + 1, budget - k);
    }
    cur[pos] = 0;
}

}  // namespace

std::vector<std::vector<int>> multi_indices_up_to(int n, int order) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(n, 0);
    extend(out, cur, 0, order);
    // graded order: sort by |alpha| first, then lexicographic
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        int sa = 0, sb = 0;
        for (int v : a) sa += v;
        for (int v : b) sb += v;
        if (sa != sb) return sa < sb;
        return a < b;
    });
    return out;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    if (n < 2 || y.size() != n) return {};
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) return {};
    LineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

}  // namespace aniso
