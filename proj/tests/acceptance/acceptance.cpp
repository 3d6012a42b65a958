// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
// criterion fails. Usage: acceptance <configs-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwb/cli.hpp"
#include "uwb/constants.hpp"
#include "uwb/evaluation.hpp"
#include "uwb/io.hpp"
#include "uwb/localization.hpp"
#include "uwb/ranging.hpp"
#include "uwb/rf_model.hpp"
#include "uwb/sim.hpp"
#include "uwb/tdma.hpp"

namespace fs = std::filesystem;
using namespace uwb;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail << '\n';
    if (!ok) ++g_failures;
}

std::string fmt(double v) { return io::format_float(v); }

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("uwbrtls_acceptance_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct RunOutcome {
    int code = -1;
    double seconds = 0.0;
    nlohmann::json stats;
    std::string err;
};

RunOutcome simulate(const fs::path& config, const fs::path& out_dir) {
    const std::string cfg = config.string(), out = out_dir.string();
    const char* argv[] = {"uwbrtls", "simulate", cfg.c_str(), "-o", out.c_str()};
    std::ostringstream so, se;
    RunOutcome r;
    const auto t0 = std::chrono::steady_clock::now();
    r.code = cli::run(5, argv, so, se);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.err = se.str();
    if (r.code == 0) r.stats = nlohmann::json::parse(io::read_text_file((out_dir / "stats.json").string()));
    return r;
}

void error_statistics(int id, const std::string& name, const fs::path& config, double mean,
                      double sigma, double tol) {
    const auto r = simulate(config, scratch("crit" + std::to_string(id)));
    if (r.code != 0) {
        report(id, name, false, "simulate exited " + std::to_string(r.code) + ": " + r.err);
        return;
    }
    const double m = r.stats["mean_m"].get<double>();
    const double s = r.stats["sigma_m"].get<double>();
    const auto n = r.stats["n"].get<std::size_t>();
    const bool ok = n >= 10000 && std::abs(m - mean) <= tol && std::abs(s - sigma) <= tol &&
                    r.seconds < 10.0;
    std::ostringstream d;
    d << "n=" << n << " mean=" << fmt(m) << " m (target " << mean << " +/- " << tol << ")"
      << " sigma=" << fmt(s) << " m (target " << sigma << " +/- " << tol << ")"
      << " runtime=" << fmt(r.seconds) << " s (< 10)";
    report(id, name, ok, d.str());
}

void twr_identity() {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ud(0.0, 50.0), ur(0.0, 10e-3);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double d = ud(rng);
        const auto ex = ranging::ideal_exchange(ranging::tof_from_distance(d), ur(rng), 0, ur(rng));
        const auto est = ranging::tof_from_exchange(ex);
        const double err = est.valid ? std::abs(ranging::distance_from_tof(est.tof_s) - d) : 1e300;
        worst = std::max(worst, err);
    }
    report(3, "TWR identity", worst < 1e-12,
           "10000 random (distance, reply delay) pairs, worst error " + fmt(worst) + " m (< 1e-12)");
}

void trilateration_exactness() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    double worst_closed = 0.0, worst_ls = 0.0;
    int done = 0;
    while (done < 10000) {
        const Vec2 a1{u(rng), u(rng)}, a2{u(rng), u(rng)}, a3{u(rng), u(rng)};
        const double scale = std::max({distance(a1, a2), distance(a2, a3), distance(a1, a3)});
        if (loc::triangle_area(a1, a2, a3) < 0.05 * scale * scale) continue;
        const Vec2 p{u(rng), u(rng)};
        const double d1 = distance(a1, p), d2 = distance(a2, p), d3 = distance(a3, p);
        const auto closed = loc::trilaterate(a1, a2, a3, d1, d2, d3);
        worst_closed = std::max(worst_closed, distance(closed.position, p));
        const loc::AnchorSet anchors{{0, a1}, {1, a2}, {2, a3}};
        const std::vector<loc::Range> ranges{{0, d1}, {1, d2}, {2, d3}};
        const auto ls = loc::multilaterate_ls(anchors, ranges);
        worst_ls = std::max(worst_ls, ls.converged ? distance(ls.position, closed.position) : 1e300);
        ++done;
    }
    report(4, "trilateration exactness", worst_closed < 1e-9 && worst_ls < 1e-9,
           "10000 noiseless well-shaped triples: closed-form worst " + fmt(worst_closed) +
               " m, least-squares vs closed-form worst " + fmt(worst_ls) + " m (< 1e-9)");
}

void capacity_envelope() {
    bool ok = true;
    std::ostringstream d;
    const auto a = tdma::build_schedule(15, 10.0);
    const auto b = tdma::build_schedule(750, 0.2);
    ok = ok && a.period_superframes == 1 && tdma::validate_schedule(a).empty();
    ok = ok && b.period_superframes == 50 && tdma::validate_schedule(b).empty();
    bool rejected = false;
    try {
        tdma::build_schedule(16, 10.0);
    } catch (const tdma::CapacityExceeded& e) {
        rejected = e.demand_slots_per_superframe() > 15.0;
    }
    ok = ok && rejected;
    d << "15@10 Hz period " << a.period_superframes << ", 750@0.2 Hz period " << b.period_superframes
      << ", 16@10 Hz " << (rejected ? "rejected" : "ACCEPTED");

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> log_rate(std::log(0.05), std::log(150.0));
    int conflicted = 0, generated = 0;
    while (generated < 1000) {
        const double rate = std::exp(log_rate(rng));
        const int max_tags = static_cast<int>(std::floor(150.0 / rate + 1e-9));
        if (max_tags < 1) continue;
        const int n = std::uniform_int_distribution<int>(1, std::min(max_tags, 750))(rng);
        if (!tdma::validate_schedule(tdma::build_schedule(n, rate)).empty()) ++conflicted;
        ++generated;
    }
    ok = ok && conflicted == 0;
    d << "; " << generated << " random feasible schedules, " << conflicted << " with conflicts";
    report(5, "capacity envelope", ok, d.str());
}

void uncertainty_combination() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double a = u(rng), b = u(rng);
        worst = std::max(worst, std::abs(loc::combine_uncertainty(a, b) - std::sqrt(a * a + b * b)));
    }
    const double exact = loc::combine_uncertainty(3.0, 4.0);
    report(6, "uncertainty combination", worst < 1e-12 && exact == 5.0,
           "10000 random pairs, worst deviation " + fmt(worst) + " (< 1e-12); (3,4) -> " + fmt(exact));
}

void los_classifier() {
    // Oracle: 10^4 interior samples per segment tested for rectangle
    // membership; it can miss only crossings shorter than |segment| / 10^4.
    constexpr int kSamples = 10000;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ux(0.0, sim::kArenaWidth), uy(0.0, sim::kArenaHeight);
    auto arena = sim::default_arena();
    int disagreements = 0;
    for (int i = 0; i < 10000; ++i) {
        const Vec2 a{ux(rng), uy(rng)}, b{ux(rng), uy(rng)};
        double x0 = ux(rng), x1 = ux(rng), y0 = uy(rng), y1 = uy(rng);
        if (x0 > x1) std::swap(x0, x1);
        if (y0 > y1) std::swap(y0, y1);
        arena.obstacles = {{x0, y0, x1, y1}};
        bool blocked = false;
        for (int k = 0; k < kSamples && !blocked; ++k) {
            const Vec2 p = lerp(a, b, (k + 0.5) / kSamples);
            blocked = p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
        }
        if (sim::classify_los(arena, a, b) == blocked) ++disagreements;
    }
    report(7, "LoS classifier vs sampling oracle", disagreements == 0,
           "10000 random segment/obstacle cases, " + std::to_string(disagreements) +
               " disagreements (oracle resolution |segment|/1e4)");
}

void formula_spot_checks() {
    const double res = rf::range_resolution_m(500e6);
    const double cap = rf::channel_capacity_bps(500e6, 1.0);
    rf::ChannelParams p;
    p.carrier_frequency_hz = 6.5e9;
    const double pl = rf::path_loss_db(p, 1.0, 0);
    // Independent free-space loss: 20 log10(4 pi d f / c).
    const double reference = 20.0 * std::log10(4.0 * 3.14159265358979323846 * 1.0 * 6.5e9 / 299792458.0);
    const bool ok = res == 0.299792458 && cap == 5.0e8 && std::abs(pl - reference) < 0.01 &&
                    std::abs(pl - 48.706050354740485) < 0.01;
    report(8, "numeric formula spot checks", ok,
           "resolution(500 MHz)=" + fmt(res) + " m, capacity(500 MHz, SNR 1)=" + fmt(cap) +
               " bit/s, path loss(1 m, 6.5 GHz)=" + fmt(pl) + " dB vs " + fmt(reference) + " dB");
}

void determinism(const fs::path& configs) {
    bool ok = true;
    std::ostringstream d;
    for (const char* name : {"los_baseline.json", "nlos_wall.json", "paper_figure2.json"}) {
        const auto a = scratch(std::string("det_a_") + name), b = scratch(std::string("det_b_") + name);
        const auto ra = simulate(configs / name, a);
        const auto rb = simulate(configs / name, b);
        bool same = ra.code == 0 && rb.code == 0;
        for (const char* f : {"measurements.csv", "fixes.csv", "truth.csv", "stats.json"}) {
            if (!same) break;
            same = io::read_text_file((a / f).string()) == io::read_text_file((b / f).string());
        }
        ok = ok && same;
        d << name << (same ? " identical; " : " DIFFERS; ");
    }
    report(9, "determinism", ok, d.str());
}

void desk_scale_scope() {
    std::cout << "NOTE [10] not reproducible at desk scale: the live-animal tracking experiment, "
                 "the video-versus-UWB millimetre comparisons (their raw logs are unpublished), "
                 "and the Android RTLS app. They are replaced by the property checks above and "
                 "by ingestion of a synthetic 36-point truth.csv.\n";

    // Synthetic annotation export: 36 labelled turning points.
    const auto dir = scratch("crit10");
    std::ostringstream truth;
    truth << "t,x_m,y_m,label\n";
    for (int i = 0; i < 36; ++i) {
        const double x = 0.1 + 1.0 * (i % 6) / 5.0, y = 0.1 + 0.4 * (i / 6) / 5.0;
        truth << io::format_float(2.0 * i) << ',' << io::format_float(x) << ',' << io::format_float(y)
              << ",turn " << i + 1 << '\n';
    }
    io::write_text_file((dir / "truth.csv").string(), truth.str());
    std::istringstream in(truth.str());
    const auto track = io::read_truth_csv(in);

    // Fixes offset 10 mm from truth at 0.5 s steps.
    std::ostringstream fixes;
    fixes << "t,x_m,y_m\n";
    int n_fixes = 0;
    for (double t = 0.0; t <= 70.0; t += 0.5, ++n_fixes) {
        const Vec2 p = track.position_at(t);
        fixes << io::format_float(t) << ',' << io::format_float(p.x) << ',' << io::format_float(p.y + 0.01)
              << '\n';
    }
    io::write_text_file((dir / "fixes.csv").string(), fixes.str());

    const std::string f = (dir / "fixes.csv").string(), tr = (dir / "truth.csv").string(),
                      out = (dir / "eval").string();
    const char* argv[] = {"uwbrtls", "evaluate", "--fixes", f.c_str(), "--truth", tr.c_str(), "-o", out.c_str()};
    std::ostringstream so, se;
    const int code = cli::run(8, argv, so, se);
    bool ok = code == 0 && track.points.size() == 36 && track.points[35].label == "turn 36";
    double mean = -1.0;
    std::size_t n = 0;
    if (code == 0) {
        const auto stats = nlohmann::json::parse(io::read_text_file(out + "/stats.json"));
        mean = stats["mean_m"].get<double>();
        n = stats["n"].get<std::size_t>();
        ok = ok && n == static_cast<std::size_t>(n_fixes) && std::abs(mean - 0.01) < 1e-6;
    }
    report(10, "synthetic 36-point truth ingestion", ok,
           std::to_string(track.points.size()) + " labelled points read, " + std::to_string(n) +
               " fixes aligned, mean error " + fmt(mean) + " m (expected 0.01)");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: acceptance <configs-dir>\n";
        return 2;
    }
    const fs::path configs = argv[1];

    // Raw zero-truncation shifts the magnitude moments; the simulator matches
    // the underlying normal so the truncated draws hit the targets.
    const auto los_raw = sim::truncated_moments({0.162, 0.076});
    const auto nlos_raw = sim::truncated_moments({0.356, 0.270});
    std::cout << "INFO truncation offset without compensation: LoS mean +" << fmt(los_raw.mean - 0.162)
              << " m, NLoS mean +" << fmt(nlos_raw.mean - 0.356) << " m\n";

    error_statistics(1, "LoS error statistics", configs / "paper_figure2.json", 0.162, 0.076, 0.01);
    error_statistics(2, "NLoS error statistics", configs / "nlos_wall.json", 0.356, 0.270, 0.02);
    twr_identity();
    trilateration_exactness();
    capacity_envelope();
    uncertainty_combination();
    los_classifier();
    formula_spot_checks();
    determinism(configs);
    desk_scale_scope();

    std::cout << (g_failures == 0 ? "ALL CRITERIA PASS" : "SOME CRITERIA FAILED") << '\n';
    return g_failures == 0 ? 0 : 1;
}
