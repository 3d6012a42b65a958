#include "uwb/localization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace uwb::loc {

namespace {

// Residual above which three circles are treated as not meeting.
constexpr double kConsistencyTolerance = 1e-8;

struct Frame {
    Vec2 origin;
    Vec2 ex;
    Vec2 ey;
    double d12;
    double i;
    double j;
};

Frame canonical_frame(Vec2 a1, Vec2 a2, Vec2 a3) {
    if (triangle_area(a1, a2, a3) < kCollinearAreaTolerance) {
        throw DegenerateGeometry("anchors are collinear");
    }
    Frame f;
    f.origin = a1;
    f.d12 = distance(a1, a2);
    f.ex = (a2 - a1) * (1.0 / f.d12);
    f.ey = {-f.ex.y, f.ex.x};
    f.i = dot(f.ex, a3 - a1);
    f.j = dot(f.ey, a3 - a1);
    // Orient +y toward a3.
    if (f.j < 0.0) {
        f.ey = f.ey * -1.0;
        f.j = -f.j;
    }
    return f;
}

Vec2 to_world(const Frame& f, double x, double y) { return f.origin + f.ex * x + f.ey * y; }

void require_ranges(std::initializer_list<double> ds) {
    for (double d : ds) {
        if (!(d >= 0.0) || !std::isfinite(d)) throw DomainError("distances must be non-negative");
    }
}

constexpr double kMaxDamping = 1e12;

struct Term {
    Vec2 anchor;
    double d;
};

// Linear least squares on the range equations differenced against the
// first one, in coordinates centred on `origin` for conditioning. Exact for
// noiseless ranges; nullopt when the anchors are (nearly) collinear.
std::optional<Vec2> linearized_guess(const std::vector<Term>& terms, Vec2 origin) {
    const Vec2 a0 = terms[0].anchor - origin;
    double m11 = 0.0, m12 = 0.0, m22 = 0.0, b1 = 0.0, b2 = 0.0;
    for (std::size_t i = 1; i < terms.size(); ++i) {
        const Vec2 ai = terms[i].anchor - origin;
        const Vec2 row = (ai - a0) * 2.0;
        const double rhs = terms[0].d * terms[0].d - terms[i].d * terms[i].d + dot(ai, ai) - dot(a0, a0);
        m11 += row.x * row.x;
        m12 += row.x * row.y;
        m22 += row.y * row.y;
        b1 += row.x * rhs;
        b2 += row.y * rhs;
    }
    const double det = m11 * m22 - m12 * m12;
    if (!(det > 1e-12 * (m11 * m22))) return std::nullopt;
    const Vec2 p{(b1 * m22 - b2 * m12) / det, (b2 * m11 - b1 * m12) / det};
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;
    return p + origin;
}

}  // namespace

std::string_view to_string(FixMethod m) {
    switch (m) {
        case FixMethod::ClosedForm:
            return "closed_form";
        case FixMethod::LeastSquares:
            return "least_squares";
    }
    return "unknown";
}

double triangle_area(Vec2 a, Vec2 b, Vec2 c) { return 0.5 * std::abs(cross(b - a, c - a)); }

Trilateration trilaterate(Vec2 a1, Vec2 a2, Vec2 a3, double d1, double d2, double d3) {
    require_ranges({d1, d2, d3});
    const Frame f = canonical_frame(a1, a2, a3);
    const double x = (d1 * d1 - d2 * d2 + f.d12 * f.d12) / (2.0 * f.d12);
    const double y = (d1 * d1 - d3 * d3 + f.i * f.i + f.j * f.j - 2.0 * f.i * x) / (2.0 * f.j);

    Trilateration out{to_world(f, x, y), false};
    const std::array<Vec2, 3> anchors{a1, a2, a3};
    const std::array<double, 3> ds{d1, d2, d3};
    double worst = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        worst = std::max(worst, std::abs(distance(out.position, anchors[k]) - ds[k]));
    }
    if (worst > kConsistencyTolerance) {
        const AnchorSet set{{0, a1}, {1, a2}, {2, a3}};
        const std::array<Range, 3> rs{Range{0, d1}, Range{1, d2}, Range{2, d3}};
        // Three inconsistent circles can leave several local minima; keep the
        // best of a few starts.
        const Vec2 centroid = (a1 + a2 + a3) * (1.0 / 3.0);
        double best = std::numeric_limits<double>::infinity();
        Vec2 best_p = out.position;
        for (Vec2 start : {out.position, centroid, a1, a2, a3}) {
            const auto fix = multilaterate_ls(set, rs, start);
            if (fix.residual_rms_m < best) {
                best = fix.residual_rms_m;
                best_p = fix.position;
            }
        }
        out.position = best_p;
        out.approximate = true;
    }
    return out;
}

Vec2 trilaterate_paper_literal(Vec2 a1, Vec2 a2, Vec2 a3, double d1, double d2, double d3) {
    require_ranges({d1, d2, d3});
    const Frame f = canonical_frame(a1, a2, a3);
    const double d13 = distance(a1, a3);
    const double x = (d1 * d1 - d2 * d2 + f.d12 * f.d12) / (2.0 * f.d12);
    const double y = (d1 * d1 - d3 * d3 + d13 * d13 - x * x) / (2.0 * d13);
    return to_world(f, x, y);
}

PositionFix multilaterate_ls(const AnchorSet& anchors, std::span<const Range> ranges,
                             std::optional<Vec2> initial_guess, const SolverOptions& options) {
    std::vector<Term> terms;
    terms.reserve(ranges.size());
    for (const auto& r : ranges) {
        if (!(r.distance_m >= 0.0) || !std::isfinite(r.distance_m)) continue;
        auto it = std::find_if(anchors.begin(), anchors.end(),
                               [&](const Anchor& a) { return a.id == r.anchor_id; });
        if (it == anchors.end()) continue;
        terms.push_back({it->position, r.distance_m});
    }
    if (terms.size() < 3) {
        throw InsufficientData("least-squares fix needs at least three usable ranges");
    }

    Vec2 p;
    if (initial_guess) {
        p = *initial_guess;
    } else {
        Vec2 centroid;
        for (const auto& t : terms) centroid = centroid + t.anchor;
        centroid = centroid * (1.0 / static_cast<double>(terms.size()));
        p = linearized_guess(terms, centroid).value_or(centroid);
    }
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw DomainError("initial guess not finite");

    auto cost_at = [&](Vec2 q) {
        double c = 0.0;
        for (const auto& t : terms) {
            const double r = distance(q, t.anchor) - t.d;
            c += r * r;
        }
        return c;
    };

    double cost = cost_at(p);
    double lambda = 1e-6;
    bool converged = false;
    for (int iter = 0; iter < options.max_iterations && !converged; ++iter) {
        // Gauss-Newton matrix J^T J plus, when it keeps the system positive
        // definite, the residual curvature sum r_i (I - u u^T) / rho_i. The
        // extra term restores fast convergence when ranges are inconsistent.
        double h11 = 0.0, h12 = 0.0, h22 = 0.0, g1 = 0.0, g2 = 0.0;
        double c11 = 0.0, c12 = 0.0, c22 = 0.0;
        for (const auto& t : terms) {
            const Vec2 diff = p - t.anchor;
            const double rho = norm(diff);
            if (rho == 0.0) continue;
            const double jx = diff.x / rho;
            const double jy = diff.y / rho;
            const double r = rho - t.d;
            h11 += jx * jx;
            h12 += jx * jy;
            h22 += jy * jy;
            g1 += jx * r;
            g2 += jy * r;
            const double k = r / rho;
            c11 += k * (1.0 - jx * jx);
            c12 -= k * jx * jy;
            c22 += k * (1.0 - jy * jy);
        }
        if (cost == 0.0) {
            converged = true;
            break;
        }
        const double f11 = h11 + c11, f12 = h12 + c12, f22 = h22 + c22;
        if (f11 > 0.0 && f11 * f22 - f12 * f12 > 0.0) {
            h11 = f11;
            h12 = f12;
            h22 = f22;
        }
        const double a11 = h11 + lambda * std::max(h11, 1e-12);
        const double a22 = h22 + lambda * std::max(h22, 1e-12);
        const double det = a11 * a22 - h12 * h12;
        if (!(std::abs(det) > 0.0)) {
            lambda *= 10.0;
            continue;
        }
        const Vec2 step{(-g1 * a22 + g2 * h12) / det, (-g2 * a11 + g1 * h12) / det};
        const Vec2 candidate = p + step;
        const double candidate_cost = cost_at(candidate);
        if (candidate_cost <= cost) {
            p = candidate;
            cost = candidate_cost;
            lambda = std::max(lambda * 0.1, 1e-12);
            if (norm(step) < options.step_tolerance_m) converged = true;
        } else {
            // Even heavily damped steps fail to descend: p is a minimum to
            // machine precision.
            lambda *= 10.0;
            if (lambda > kMaxDamping) converged = true;
        }
    }

    PositionFix fix;
    fix.position = p;
    fix.residual_rms_m = std::sqrt(cost / static_cast<double>(terms.size()));
    fix.n_ranges_used = static_cast<int>(terms.size());
    fix.method = FixMethod::LeastSquares;
    fix.converged = converged;
    fix.sigma_pos_m = options.sigma_pos_m;
    return fix;
}

double combine_uncertainty(double sigma_tof_m, double sigma_sync_m) {
    if (!(sigma_tof_m >= 0.0) || !(sigma_sync_m >= 0.0)) {
        throw DomainError("uncertainties must be non-negative");
    }
    return std::hypot(sigma_tof_m, sigma_sync_m);
}

}  // namespace uwb::loc
