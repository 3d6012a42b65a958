#include "uwb/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "uwb/errors.hpp"

namespace uwb::io {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t\r");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return out;
}

bool next_line(std::istream& is, std::string& line) {
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) return true;
    }
    return false;
}

// Header-indexed CSV table.
class Table {
public:
    Table(std::istream& is, const std::set<std::string>& required,
          const std::set<std::string>& optional) {
        std::string line;
        if (!next_line(is, line)) throw ValidationError("header", "CSV input is empty");
        const auto names = split(line);
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (!required.count(names[i]) && !optional.count(names[i])) {
                throw ValidationError(names[i], "unexpected column '" + names[i] + "'");
            }
            if (!index_.emplace(names[i], i).second) {
                throw ValidationError(names[i], "duplicate column '" + names[i] + "'");
            }
        }
        for (const auto& r : required) {
            if (!index_.count(r)) throw ValidationError(r, "missing column '" + r + "'");
        }
        while (next_line(is, line)) {
            rows_.push_back(split(line));
            raw_.push_back(line);
        }
    }

    std::size_t size() const { return rows_.size(); }
    bool has(const std::string& col) const { return index_.count(col) != 0; }

    const std::string& text(std::size_t row, const std::string& col) const {
        const auto& r = rows_[row];
        const std::size_t i = index_.at(col);
        if (i >= r.size()) {
            throw ValidationError(col, "row " + std::to_string(row + 2) + " lacks column '" + col + "'");
        }
        return r[i];
    }

    double number(std::size_t row, const std::string& col) const {
        const std::string& s = text(row, col);
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
            throw ValidationError(col, "row " + std::to_string(row + 2) + ": column '" + col +
                                           "' is not a number: '" + s + "'");
        }
        return v;
    }

    int integer(std::size_t row, const std::string& col) const {
        const double v = number(row, col);
        if (v != std::floor(v)) {
            throw ValidationError(col, "row " + std::to_string(row + 2) + ": column '" + col +
                                           "' is not an integer");
        }
        return static_cast<int>(v);
    }

    bool flag(std::size_t row, const std::string& col) const {
        const std::string& s = text(row, col);
        if (s == "1" || s == "true") return true;
        if (s == "0" || s == "false") return false;
        throw ValidationError(col, "row " + std::to_string(row + 2) + ": column '" + col +
                                       "' is not 0/1");
    }

    /// Everything from `col` to the end of the row, commas included, with
    /// only the outer whitespace trimmed.
    std::string tail(std::size_t row, const std::string& col) const {
        const std::string& line = raw_[row];
        std::size_t pos = 0;
        for (std::size_t k = index_.at(col); k > 0; --k) {
            pos = line.find(',', pos);
            if (pos == std::string::npos) return {};
            ++pos;
        }
        const auto b = line.find_first_not_of(" \t", pos);
        const auto e = line.find_last_not_of(" \t\r");
        return b == std::string::npos || e < b ? std::string() : line.substr(b, e - b + 1);
    }

private:
    std::map<std::string, std::size_t> index_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::string> raw_;
};

}  // namespace

std::string format_float(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

double round_sig9(double v) {
    if (!std::isfinite(v)) return v;
    return std::strtod(format_float(v).c_str(), nullptr);
}

void write_measurements_csv(std::ostream& os, std::span<const sim::Measurement> ms) {
    os << "t,tag,anchor,slot,distance_m,snr_db,los,valid\n";
    for (const auto& m : ms) {
        os << format_float(m.t_s) << ',' << m.tag_id << ',' << m.anchor_id << ',' << m.slot_index
           << ',' << format_float(m.distance_m) << ',' << format_float(m.snr_db) << ','
           << (m.los ? 1 : 0) << ',' << (m.valid ? 1 : 0) << '\n';
    }
}

void write_fixes_csv(std::ostream& os, std::span<const loc::PositionFix> fixes) {
    os << "t,x_m,y_m,sigma_pos_m,residual_rms_m,n_ranges,method\n";
    for (const auto& f : fixes) {
        os << format_float(f.t_s) << ',' << format_float(f.position.x) << ','
           << format_float(f.position.y) << ',' << format_float(f.sigma_pos_m) << ','
           << format_float(f.residual_rms_m) << ',' << f.n_ranges_used << ','
           << loc::to_string(f.method) << '\n';
    }
}

void write_truth_csv(std::ostream& os, const eval::GroundTruthTrack& truth) {
    bool labelled = false;
    for (const auto& p : truth.points) labelled = labelled || !p.label.empty();
    os << (labelled ? "t,x_m,y_m,label\n" : "t,x_m,y_m\n");
    for (const auto& p : truth.points) {
        os << format_float(p.t_s) << ',' << format_float(p.position.x) << ','
           << format_float(p.position.y);
        if (labelled) os << ',' << p.label;
        os << '\n';
    }
}

void write_histogram_csv(std::ostream& os, const eval::ErrorStats& stats) {
    os << "bin_lo,bin_hi,count,pdf_fit\n";
    for (const auto& b : stats.histogram) {
        const double centre = 0.5 * (b.lo_m + b.hi_m);
        const double pdf = stats.fitted_sigma_m > 0.0
                               ? eval::gaussian_pdf(centre, stats.fitted_mu_m, stats.fitted_sigma_m)
                               : 0.0;
        os << format_float(b.lo_m) << ',' << format_float(b.hi_m) << ',' << b.count << ','
           << format_float(pdf) << '\n';
    }
}

nlohmann::json stats_to_json(const eval::ErrorStats& s) {
    nlohmann::json j;
    j["n"] = s.n;
    j["mean_m"] = round_sig9(s.mean_m);
    j["sigma_m"] = round_sig9(s.sigma_m);
    j["max_m"] = round_sig9(s.max_m);
    j["fitted_mu_m"] = round_sig9(s.fitted_mu_m);
    j["fitted_sigma_m"] = round_sig9(s.fitted_sigma_m);
    auto hist = nlohmann::json::array();
    for (const auto& b : s.histogram) {
        hist.push_back({{"bin_lo_m", round_sig9(b.lo_m)},
                        {"bin_hi_m", round_sig9(b.hi_m)},
                        {"count", b.count}});
    }
    j["histogram"] = std::move(hist);
    return j;
}

std::vector<loc::PositionFix> read_fixes_csv(std::istream& is) {
    const Table t(is, {"t", "x_m", "y_m"}, {"sigma_pos_m", "residual_rms_m", "n_ranges", "method"});
    std::vector<loc::PositionFix> out;
    out.reserve(t.size());
    for (std::size_t r = 0; r < t.size(); ++r) {
        loc::PositionFix f;
        f.t_s = t.number(r, "t");
        f.position = {t.number(r, "x_m"), t.number(r, "y_m")};
        if (t.has("sigma_pos_m")) f.sigma_pos_m = t.number(r, "sigma_pos_m");
        if (t.has("residual_rms_m")) f.residual_rms_m = t.number(r, "residual_rms_m");
        if (t.has("n_ranges")) f.n_ranges_used = t.integer(r, "n_ranges");
        if (t.has("method")) {
            const auto& m = t.text(r, "method");
            if (m == "closed_form") {
                f.method = loc::FixMethod::ClosedForm;
            } else if (m == "least_squares") {
                f.method = loc::FixMethod::LeastSquares;
            } else {
                throw ValidationError("method", "unknown fix method '" + m + "'");
            }
        }
        out.push_back(f);
    }
    return out;
}

eval::GroundTruthTrack read_truth_csv(std::istream& is) {
    const Table t(is, {"t", "x_m", "y_m"}, {"label"});
    eval::GroundTruthTrack track;
    track.points.reserve(t.size());
    for (std::size_t r = 0; r < t.size(); ++r) {
        eval::TruthPoint p;
        p.t_s = t.number(r, "t");
        p.position = {t.number(r, "x_m"), t.number(r, "y_m")};
        if (t.has("label")) p.label = t.tail(r, "label");
        track.points.push_back(std::move(p));
    }
    return track;
}

std::vector<sim::Measurement> read_measurements_csv(std::istream& is) {
    const Table t(is, {"t", "anchor", "distance_m"}, {"tag", "slot", "snr_db", "los", "valid"});
    std::vector<sim::Measurement> out;
    out.reserve(t.size());
    for (std::size_t r = 0; r < t.size(); ++r) {
        sim::Measurement m;
        m.t_s = t.number(r, "t");
        m.anchor_id = t.integer(r, "anchor");
        m.distance_m = t.number(r, "distance_m");
        if (t.has("tag")) m.tag_id = t.integer(r, "tag");
        if (t.has("slot")) m.slot_index = t.integer(r, "slot");
        if (t.has("snr_db")) m.snr_db = t.number(r, "snr_db");
        if (t.has("los")) m.los = t.flag(r, "los");
        m.valid = t.has("valid") ? t.flag(r, "valid") : m.distance_m >= 0.0;
        out.push_back(m);
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IoError("failed writing " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace uwb::io
