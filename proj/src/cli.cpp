#include "uwb/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "uwb/constants.hpp"
#include "uwb/errors.hpp"
#include "uwb/io.hpp"
#include "uwb/localization.hpp"
#include "uwb/ranging.hpp"
#include "uwb/rf_model.hpp"
#include "uwb/sim.hpp"
#include "uwb/tdma.hpp"

namespace uwb::cli {

namespace fs = std::filesystem;

namespace {

// Maps library exceptions onto the stable exit-code contract.
template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationError;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kIoError;
    } catch (const fs::filesystem_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return kIoError;
    } catch (const tdma::CapacityExceeded& e) {
        err << "error: " << e.what() << '\n';
        return kValidationError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kValidationError;
    }
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
}

std::string join_path(const std::string& dir, const char* name) {
    return (fs::path(dir) / name).string();
}

void print_row(std::ostream& out, const std::string& name, const std::string& value,
               const char* unit) {
    out << std::left << std::setw(22) << name << std::setw(18) << value << unit << '\n';
}

eval::GroundTruthTrack truth_at_fixes(const sim::Trajectory& traj,
                                      const std::vector<loc::PositionFix>& fixes) {
    eval::GroundTruthTrack truth;
    truth.points.reserve(fixes.size());
    for (const auto& f : fixes) truth.points.push_back({f.t_s, traj.position_at(f.t_s), {}});
    return truth;
}

}  // namespace

std::optional<SeedRange> parse_seed_range(const std::string& s) {
    auto parse_u64 = [](std::string_view v) -> std::optional<std::uint64_t> {
        std::uint64_t x = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (ec != std::errc() || p != v.data() + v.size() || v.empty()) return std::nullopt;
        return x;
    };
    const auto dots = s.find("..");
    if (dots == std::string::npos) {
        auto v = parse_u64(s);
        if (!v) return std::nullopt;
        return SeedRange{*v, *v};
    }
    auto a = parse_u64(std::string_view(s).substr(0, dots));
    auto b = parse_u64(std::string_view(s).substr(dots + 2));
    if (!a || !b || *b < *a) return std::nullopt;
    return SeedRange{*a, *b};
}

void write_simulation(const config::RunConfig& cfg, const std::string& out_dir) {
    const auto inputs = config::to_simulation_inputs(cfg);
    const auto result = sim::simulate(inputs);
    if (result.fixes.size() < 2) {
        throw ValidationError("trajectory", "run produced fewer than two fixes; lengthen the trajectory");
    }

    const auto truth = truth_at_fixes(inputs.trajectory, result.fixes);
    const auto aligned = eval::align(result.fixes, truth, 1.0);
    const auto stats = eval::error_stats(aligned.pairs);

    ensure_dir(out_dir);
    std::ostringstream ms, fx, tr;
    io::write_measurements_csv(ms, result.measurements);
    io::write_fixes_csv(fx, result.fixes);
    io::write_truth_csv(tr, truth);

    auto j = io::stats_to_json(stats);
    const auto nlos = std::count(result.fix_nlos.begin(), result.fix_nlos.end(), true);
    j["version"] = kVersion;
    j["seed"] = cfg.seed;
    j["noise_mode"] = std::string(sim::to_string(cfg.noise.mode));
    j["n_measurements"] = result.measurements.size();
    j["n_fixes"] = result.fixes.size();
    j["attempts"] = result.attempts;
    j["success_ratio"] = io::round_sig9(sim::success_ratio(result.fixes, result.attempts));
    j["nlos_fix_fraction"] =
        io::round_sig9(static_cast<double>(nlos) / static_cast<double>(result.fixes.size()));
    j["dropped"] = aligned.dropped;

    io::write_text_file(join_path(out_dir, "measurements.csv"), ms.str());
    io::write_text_file(join_path(out_dir, "fixes.csv"), fx.str());
    io::write_text_file(join_path(out_dir, "truth.csv"), tr.str());
    io::write_text_file(join_path(out_dir, "stats.json"), j.dump(2) + "\n");
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto doc = config::read_config_json(opt.config_path);
        const auto base = config::parse_run_config(doc);
        if (!opt.seeds) {
            write_simulation(base, opt.out_dir);
            out << "wrote " << opt.out_dir << " (seed " << base.seed << ")\n";
            return static_cast<int>(kOk);
        }

        // Independent seeds run in parallel; each owns its output directory.
        const std::uint64_t first = opt.seeds->first;
        const std::uint64_t count = opt.seeds->last - first + 1;
        const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(
            count, opt.jobs ? opt.jobs : std::max(1u, std::thread::hardware_concurrency())));
        std::atomic<std::uint64_t> next{0};
        std::mutex report_mutex;
        std::vector<std::pair<std::uint64_t, std::string>> failures;
        int worst = kOk;

        auto worker = [&] {
            for (std::uint64_t k = next++; k < count; k = next++) {
                const std::uint64_t seed = first + k;
                std::ostringstream local_err;
                const std::string dir =
                    (fs::path(opt.out_dir) / ("seed_" + std::to_string(seed))).string();
                const int rc = guarded(local_err, [&] {
                    // Re-parse so seed-dependent trajectories follow the seed.
                    auto reseeded = doc;
                    reseeded["seed"] = seed;
                    write_simulation(config::parse_run_config(reseeded), dir);
                    return static_cast<int>(kOk);
                });
                std::lock_guard lock(report_mutex);
                if (rc != kOk) {
                    failures.emplace_back(seed, local_err.str());
                    worst = std::max(worst, rc);
                }
            }
        };
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();

        std::sort(failures.begin(), failures.end());
        for (const auto& [seed, msg] : failures) err << "seed " << seed << ": " << msg;
        out << "wrote " << (count - failures.size()) << " of " << count << " seed runs under "
            << opt.out_dir << '\n';
        return worst;
    });
}

int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto fixes_in = open_input(opt.fixes_path);
        auto truth_in = open_input(opt.truth_path);
        const auto fixes = io::read_fixes_csv(fixes_in);
        if (fixes.empty()) throw ValidationError("fixes", opt.fixes_path + " contains no fixes");
        const auto truth = io::read_truth_csv(truth_in);
        truth.validate();

        const auto aligned = eval::align(fixes, truth, opt.max_gap_s);
        const auto stats = eval::error_stats(aligned.pairs);

        auto j = io::stats_to_json(stats);
        j["version"] = kVersion;
        j["dropped"] = aligned.dropped;
        try {
            const auto pct = eval::percent_distance_error(aligned.pairs, opt.pct_norm);
            j["percent_error"] = {{"norm", opt.pct_norm == eval::PercentNorm::PathScale
                                               ? "path_scale"
                                               : "truth_distance"},
                                  {"mean_pct", io::round_sig9(pct.mean_pct)},
                                  {"sigma_pct", io::round_sig9(pct.sigma_pct)}};
        } catch (const DomainError&) {
            // Stationary truth has no path length to normalize by.
            j["percent_error"] = nullptr;
        }

        ensure_dir(opt.out_dir);
        std::ostringstream hist;
        io::write_histogram_csv(hist, stats);
        io::write_text_file(join_path(opt.out_dir, "stats.json"), j.dump(2) + "\n");
        io::write_text_file(join_path(opt.out_dir, "histogram.csv"), hist.str());

        print_row(out, "metric", "value", "unit");
        print_row(out, "n", std::to_string(stats.n), "");
        print_row(out, "dropped", std::to_string(aligned.dropped), "");
        print_row(out, "mean", io::format_float(stats.mean_m), "m");
        print_row(out, "sigma", io::format_float(stats.sigma_m), "m");
        print_row(out, "max", io::format_float(stats.max_m), "m");
        return static_cast<int>(kOk);
    });
}

int cmd_localize(const LocalizeOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto cfg = config::load_run_config(opt.config_path);
        const auto inputs = config::to_simulation_inputs(cfg);
        auto in = open_input(opt.measurements_path);
        const auto measurements = io::read_measurements_csv(in);
        for (const auto& m : measurements) {
            if (!cfg.arena.find_anchor(m.anchor_id)) {
                throw ValidationError("anchor", "measurement references unknown anchor " +
                                                    std::to_string(m.anchor_id));
            }
        }

        const double window = inputs.fix_window_s.value_or(
            inputs.schedule.update_interval_s() * static_cast<double>(cfg.arena.anchors.size()) +
            0.5 * inputs.schedule.frame.slot_s());
        loc::SolverOptions solver;
        solver.sigma_pos_m =
            loc::combine_uncertainty(cfg.clock.sigma_tof_s * kSpeedOfLight,
                                     std::abs(cfg.clock.sync_offset_s) * kSpeedOfLight);
        sim::FixAccumulator acc(cfg.arena, window, solver);

        std::vector<loc::PositionFix> fixes;
        std::vector<loc::PositionFix> literal;
        for (const auto& m : measurements) {
            auto r = acc.add(m);
            if (!r) continue;
            r->fix.z_m = cfg.arena.tag_height_m;
            fixes.push_back(r->fix);
            if (!opt.paper_literal) continue;
            // First non-collinear triple among the ranges, by anchor id.
            const auto& rs = r->ranges;
            bool done = false;
            for (std::size_t a = 0; a < rs.size() && !done; ++a) {
                for (std::size_t b = a + 1; b < rs.size() && !done; ++b) {
                    for (std::size_t c = b + 1; c < rs.size() && !done; ++c) {
                        const Vec2 pa = cfg.arena.find_anchor(rs[a].anchor_id)->position;
                        const Vec2 pb = cfg.arena.find_anchor(rs[b].anchor_id)->position;
                        const Vec2 pc = cfg.arena.find_anchor(rs[c].anchor_id)->position;
                        if (loc::triangle_area(pa, pb, pc) < loc::kCollinearAreaTolerance) continue;
                        loc::PositionFix f = r->fix;
                        f.position = loc::trilaterate_paper_literal(
                            pa, pb, pc, rs[a].distance_m, rs[b].distance_m, rs[c].distance_m);
                        f.method = loc::FixMethod::ClosedForm;
                        f.n_ranges_used = 3;
                        f.residual_rms_m = 0.0;
                        literal.push_back(f);
                        done = true;
                    }
                }
            }
        }

        std::ostringstream fx;
        io::write_fixes_csv(fx, fixes);
        io::write_text_file(opt.out_path, fx.str());
        out << "wrote " << fixes.size() << " fixes to " << opt.out_path << '\n';
        if (opt.paper_literal) {
            fs::path p(opt.out_path);
            const auto literal_path =
                (p.parent_path() / (p.stem().string() + "_paper_literal.csv")).string();
            std::ostringstream lf;
            io::write_fixes_csv(lf, literal);
            io::write_text_file(literal_path, lf.str());
            out << "wrote " << literal.size() << " literal closed-form fixes to " << literal_path
                << '\n';
        }
        return static_cast<int>(kOk);
    });
}

int cmd_linkbudget(const LinkBudgetOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!(opt.distance_m > 0.0)) throw ValidationError("distance", "--distance must be positive");
        if (!(opt.bandwidth_hz > 0.0)) throw ValidationError("bandwidth", "--bandwidth must be positive");
        if (!(opt.frequency_hz > 0.0)) throw ValidationError("freq", "--freq must be positive");
        if (opt.obstacles < 0) throw ValidationError("obstacles", "--obstacles must be >= 0");

        rf::ChannelParams ch;
        ch.carrier_frequency_hz = opt.frequency_hz;
        ch.bandwidth_hz = opt.bandwidth_hz;
        ch.tx_power_w = opt.tx_power_w;
        ch.tx_gain_linear = opt.tx_gain_linear;
        ch.rx_gain_linear = opt.rx_gain_linear;
        ch.path_loss_coeff_L = opt.loss_per_obstacle_db;
        ch.freq_loss_factor_F = 1.0;

        const auto budget = rf::link_budget(ch, opt.distance_m, opt.obstacles);
        double snr_db = budget.snr_db;
        double capacity = budget.capacity_bps;
        if (opt.snr_linear) {
            capacity = rf::channel_capacity_bps(opt.bandwidth_hz, *opt.snr_linear);
            snr_db = *opt.snr_linear > 0.0 ? rf::linear_to_db(*opt.snr_linear)
                                           : -std::numeric_limits<double>::infinity();
        }
        const double velocity = opt.velocity_mps.value_or(kSpeedOfLight);
        const double delay = opt.delay_s.value_or(opt.distance_m / velocity);

        print_row(out, "quantity", "value", "unit");
        print_row(out, "attenuation_db", io::format_float(budget.attenuation_db), "dB");
        print_row(out, "snr_db", io::format_float(snr_db), "dB");
        print_row(out, "capacity_bps", io::format_float(capacity), "bit/s");
        print_row(out, "range_resolution_m", io::format_float(rf::range_resolution_m(opt.bandwidth_hz)), "m");
        print_row(out, "penetration_depth_m", io::format_float(rf::penetration_depth_m(velocity, delay)), "m");
        return static_cast<int>(kOk);
    });
}

int cmd_schedule(const ScheduleOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        tdma::SuperframeConfig cfg;
        cfg.superframe_s = opt.superframe_s;
        cfg.slots_per_superframe = opt.slots;
        tdma::Schedule s;
        try {
            s = tdma::build_schedule(opt.tags, opt.rate_hz, cfg, opt.anchors);
        } catch (const tdma::CapacityExceeded& e) {
            err << "error: " << e.what() << " (" << opt.tags * opt.rate_hz
                << " ranging events/s requested, " << cfg.capacity_per_s() << " available)\n";
            return static_cast<int>(kValidationError);
        }
        const auto conflicts = tdma::validate_schedule(s);
        for (const auto& c : conflicts) err << "conflict: " << c.detail << '\n';
        out << tdma::schedule_csv(s);
        err << "period_superframes=" << s.period_superframes << " slots_per_tag=" << s.slots_per_tag
            << " demand=" << tdma::slot_demand(opt.tags, opt.rate_hz, cfg)
            << " capacity=" << cfg.slots_per_superframe << '\n';
        return static_cast<int>(conflicts.empty() ? kOk : kValidationError);
    });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"UWB real-time locating system simulator and evaluation tools", "uwbrtls"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    SimulateOptions sim_opt;
    std::string seeds_text;
    auto* simulate = app.add_subcommand("simulate", "Run a simulation from a JSON config");
    simulate->add_option("config", sim_opt.config_path, "Run config (JSON)")->required();
    simulate->add_option("-o,--out-dir", sim_opt.out_dir, "Output directory");
    simulate->add_option("--seeds", seeds_text, "Seed range a..b (inclusive); one subdirectory per seed");
    simulate->add_option("-j,--jobs", sim_opt.jobs, "Parallel seed runs (count, 0 = all cores)");

    EvaluateOptions eval_opt;
    std::string pct_norm = "path_scale";
    auto* evaluate = app.add_subcommand("evaluate", "Compare fixes against ground truth");
    evaluate->add_option("--fixes", eval_opt.fixes_path, "fixes.csv (t in s, x_m/y_m in m)")->required();
    evaluate->add_option("--truth", eval_opt.truth_path, "truth.csv (t in s, x_m/y_m in m, optional label)")->required();
    evaluate->add_option("-o,--out-dir", eval_opt.out_dir, "Output directory for stats.json and histogram.csv");
    evaluate->add_option("--max-gap", eval_opt.max_gap_s, "Largest fix-to-truth time gap kept (s)");
    evaluate->add_option("--pct-norm", pct_norm, "Percent-error scale: path_scale | truth_distance (m)")
        ->check(CLI::IsMember({"path_scale", "truth_distance"}));

    LocalizeOptions loc_opt;
    auto* localize = app.add_subcommand("localize", "Solve fixes from a ranges CSV");
    localize->add_option("--config", loc_opt.config_path, "Run config supplying the anchors (JSON)")->required();
    localize->add_option("--ranges", loc_opt.measurements_path, "Ranges CSV (t in s, anchor, distance_m in m)")->required();
    localize->add_option("-o,--out", loc_opt.out_path, "Output fixes CSV");
    localize->add_flag("--paper-literal", loc_opt.paper_literal,
                       "Also write closed-form fixes using the uncorrected y formula (comparison only)");

    LinkBudgetOptions lb_opt;
    double snr_linear = 0.0, velocity = 0.0, delay = 0.0;
    auto* linkbudget = app.add_subcommand("linkbudget", "Print RF link figures");
    linkbudget->add_option("--distance", lb_opt.distance_m, "Tag-anchor distance (m)");
    linkbudget->add_option("--freq", lb_opt.frequency_hz, "Carrier frequency (Hz)");
    linkbudget->add_option("--obstacles", lb_opt.obstacles, "Obstacles on the path (count)");
    linkbudget->add_option("--bandwidth", lb_opt.bandwidth_hz, "Signal bandwidth (Hz)");
    auto* snr_flag = linkbudget->add_option("--snr-linear", snr_linear, "Signal-to-noise power ratio (linear, dimensionless)");
    linkbudget->add_option("--tx-power", lb_opt.tx_power_w, "Transmit power (W)");
    linkbudget->add_option("--tx-gain", lb_opt.tx_gain_linear, "Transmit antenna gain (linear, dimensionless)");
    linkbudget->add_option("--rx-gain", lb_opt.rx_gain_linear, "Receive antenna gain (linear, dimensionless)");
    linkbudget->add_option("--loss-per-obstacle", lb_opt.loss_per_obstacle_db, "Attenuation per obstacle (dB)");
    auto* velocity_flag = linkbudget->add_option("--velocity", velocity, "Propagation speed (m/s)");
    auto* delay_flag = linkbudget->add_option("--delay", delay, "Measured pulse delay (s)");

    ScheduleOptions sch_opt;
    auto* schedule = app.add_subcommand("schedule", "Print a TDMA slot plan as CSV");
    schedule->add_option("--tags", sch_opt.tags, "Number of tags (count)")->required();
    schedule->add_option("--rate", sch_opt.rate_hz, "Update rate per tag (Hz)")->required();
    schedule->add_option("--superframe", sch_opt.superframe_s, "Superframe length (s)");
    schedule->add_option("--slots", sch_opt.slots, "Ranging slots per superframe (count)");
    schedule->add_option("--anchors", sch_opt.anchors, "Anchors in the round-robin (count)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kOk : kValidationError;
    }

    if (*simulate) {
        if (!seeds_text.empty()) {
            sim_opt.seeds = parse_seed_range(seeds_text);
            if (!sim_opt.seeds) {
                err << "error: --seeds expects a..b\n";
                return kValidationError;
            }
        }
        return cmd_simulate(sim_opt, out, err);
    }
    if (*evaluate) {
        eval_opt.pct_norm = *eval::parse_percent_norm(pct_norm);
        return cmd_evaluate(eval_opt, out, err);
    }
    if (*localize) return cmd_localize(loc_opt, out, err);
    if (*linkbudget) {
        if (*snr_flag) lb_opt.snr_linear = snr_linear;
        if (*velocity_flag) lb_opt.velocity_mps = velocity;
        if (*delay_flag) lb_opt.delay_s = delay;
        return cmd_linkbudget(lb_opt, out, err);
    }
    return cmd_schedule(sch_opt, out, err);
}

}  // namespace uwb::cli
