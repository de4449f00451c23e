#include "cavitykit/quadrature.hpp"

#include <cmath>

namespace cavitykit {

std::vector<double> panel_edges(double upper, int panels, double ratio) {
    std::vector<double> len(panels);
    double sum = 0.0;
    double l = 1.0;
    for (int i = 0; i < panels; ++i) {
        len[i] = l;
        sum += l;
        l *= ratio;
    }
    // largest panel first (at 0), smallest adjacent to `upper`
    std::vector<double> edges(panels + 1);
    edges[0] = 0.0;
    double acc = 0.0;
    for (int i = 0; i < panels; ++i) {
        acc += len[panels - 1 - i] / sum * upper;
        edges[i + 1] = acc;
    }
    edges[panels] = upper;
    return edges;
}

namespace {

std::complex<double> midpoint_pass(const std::function<std::complex<double>(double)>& f,
                                   const std::vector<double>& edges, int m) {
    std::complex<double> total = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double a = edges[i];
        const double h = (edges[i + 1] - a) / m;
        std::complex<double> s = 0.0;
        for (int k = 0; k < m; ++k) s += f(a + (k + 0.5) * h);
        total += s * h;
    }
    return total;
}

}  // namespace

QuadResult integrate_clustered(const std::function<std::complex<double>(double)>& f,
                               double upper, const QuadratureSpec& spec) {
    spec.validate();
    const auto edges = panel_edges(upper, spec.panels, spec.refinement_ratio);
    int m = spec.initial_points;
    std::complex<double> prev = midpoint_pass(f, edges, m);
    for (int d = 0; d < spec.max_doublings; ++d) {
        m *= 2;
        const std::complex<double> cur = midpoint_pass(f, edges, m);
        const double err = std::abs(cur - prev);
        if (err <= spec.target_rel_err * std::abs(cur))
            return {cur, std::abs(cur) > 0.0 ? err / std::abs(cur) : 0.0};
        prev = cur;
    }
    throw QuadratureNotConverged("midpoint refinement exhausted before reaching target");
}

QuadResult integrate_clustered_2d(
    const std::function<std::complex<double>(double, double)>& f, double u1,
    double u2, const QuadratureSpec& spec) {
    spec.validate();
    const auto e1 = panel_edges(u1, spec.panels, spec.refinement_ratio);
    const auto e2 = panel_edges(u2, spec.panels, spec.refinement_ratio);

    auto pass = [&](int m) {
        std::vector<double> ts, ws;
        ts.reserve(e1.size() * m);
        for (std::size_t i = 0; i + 1 < e1.size(); ++i) {
            const double h = (e1[i + 1] - e1[i]) / m;
            for (int k = 0; k < m; ++k) {
                ts.push_back(e1[i] + (k + 0.5) * h);
                ws.push_back(h);
            }
        }
        std::vector<double> ss, vs;
        for (std::size_t i = 0; i + 1 < e2.size(); ++i) {
            const double h = (e2[i + 1] - e2[i]) / m;
            for (int k = 0; k < m; ++k) {
                ss.push_back(e2[i] + (k + 0.5) * h);
                vs.push_back(h);
            }
        }
        std::complex<double> total = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            std::complex<double> row = 0.0;
            for (std::size_t j = 0; j < ss.size(); ++j) row += f(ts[i], ss[j]) * vs[j];
            total += row * ws[i];
        }
        return total;
    };

    int m = spec.initial_points;
    std::complex<double> prev = pass(m);
    for (int d = 0; d < spec.max_doublings; ++d) {
        m *= 2;
        const std::complex<double> cur = pass(m);
        const double err = std::abs(cur - prev);
        if (err <= spec.target_rel_err * std::abs(cur))
            return {cur, std::abs(cur) > 0.0 ? err / std::abs(cur) : 0.0};
        prev = cur;
    }
    throw QuadratureNotConverged("2-d midpoint refinement exhausted before reaching target");
}

}  // namespace cavitykit
