#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "uwb/errors.hpp"
#include "uwb/geometry.hpp"

namespace uwb::loc {

struct Anchor {
    int id = 0;
    Vec2 position;
};

using AnchorSet = std::vector<Anchor>;

struct Range {
    int anchor_id = 0;
    double distance_m = 0.0;
};

enum class FixMethod { ClosedForm, LeastSquares };

std::string_view to_string(FixMethod m);

struct PositionFix {
    double t_s = 0.0;
    Vec2 position;
    /// Carried through unchanged; solving is planar.
    double z_m = 0.0;
    double sigma_pos_m = 0.0;
    double residual_rms_m = 0.0;
    int n_ranges_used = 0;
    FixMethod method = FixMethod::LeastSquares;
    bool converged = true;
    /// Ranges had no common intersection; position is the nearest point.
    bool approximate = false;
};

class DegenerateGeometry : public DomainError {
public:
    using DomainError::DomainError;
};

class InsufficientData : public DomainError {
public:
    using DomainError::DomainError;
};

/// Anchors closer to a line than this triangle area (m^2) are degenerate.
inline constexpr double kCollinearAreaTolerance = 1e-9;

struct Trilateration {
    Vec2 position;
    bool approximate = false;
};

/// Closed-form position from three anchors.
///
/// Works in a frame with `a1` at the origin and `a2` on the +x axis:
///   x = (d1^2 - d2^2 + d12^2) / (2 d12)
///   y = (d1^2 - d3^2 + i^2 + j^2 - 2 i x) / (2 j)
/// where (i, j) is `a3` in that frame. With `a3` on the +y axis this reduces
/// to y = (d1^2 - d3^2 + d13^2) / (2 d13). If the three circles do not meet,
/// the least-squares nearest point is returned and flagged approximate.
Trilateration trilaterate(Vec2 a1, Vec2 a2, Vec2 a3, double d1, double d2, double d3);

/// Same frame, but y evaluated as (d1^2 - d3^2 + d13^2 - x^2) / (2 d13),
/// with `a3` assumed to sit on the frame's +y axis. Kept for side-by-side
/// comparison only; it does not recover the true position in general.
Vec2 trilaterate_paper_literal(Vec2 a1, Vec2 a2, Vec2 a3, double d1, double d2, double d3);

struct SolverOptions {
    double step_tolerance_m = 1e-10;
    int max_iterations = 100;
    /// Copied into PositionFix::sigma_pos_m.
    double sigma_pos_m = 0.0;
};

/// Damped Newton minimization of sum (|p - a_i| - d_i)^2: Levenberg-Marquardt
/// on the full Hessian when it is positive definite, Gauss-Newton otherwise.
/// Throws InsufficientData with fewer than three usable ranges. A run that
/// hits the iteration cap returns its best iterate with converged = false.
/// Without an initial guess the solver starts from the linearized
/// multilateration solution, or the anchor centroid if that is degenerate.
PositionFix multilaterate_ls(const AnchorSet& anchors, std::span<const Range> ranges,
                             std::optional<Vec2> initial_guess = std::nullopt,
                             const SolverOptions& options = {});

/// Root-sum-square of independent uncertainties (both in metres).
double combine_uncertainty(double sigma_tof_m, double sigma_sync_m);

double triangle_area(Vec2 a, Vec2 b, Vec2 c);

}  // namespace uwb::loc
