#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ivc/geometry/metrics.hpp"

namespace ivc::eval {

using json = nlohmann::json;

inline constexpr double kF1Tau = 0.03;
inline constexpr double kCdScale = 1e3;

/// chamfer_single(partial -> completed): how well the completion keeps the input.
inline double eval_fidelity(const geo::PointSet& partial, const geo::PointSet& completed) {
    return geo::chamfer_single(partial, completed);
}

/// Chamfer distance to the closest shape of a reference corpus.
inline double eval_mmd(const geo::PointSet& completed, const std::vector<geo::PointSet>& corpus) {
    if (corpus.empty()) throw ContractError("eval_mmd: empty reference corpus");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ref : corpus) best = std::min(best, geo::chamfer_bi(completed, ref));
    return best;
}

/// Mean l2 distance between predicted and ground-truth matches.
inline double corr_l2(const std::vector<Vec3>& predicted, const std::vector<Vec3>& truth) {
    if (predicted.size() != truth.size() || predicted.empty())
        throw ContractError("corr_l2: predicted and ground-truth matches differ in count");
    double s = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) s += (predicted[i] - truth[i]).norm();
    return s / static_cast<double>(predicted.size());
}

struct MetricsRow {
    std::uint32_t instance_id = 0;
    std::uint32_t view_id = 0;
    std::optional<double> f1, cd, fidelity, mmd, corr_l2;
    std::optional<double> cd_direct;  // CD of the completion network output X itself, when it exists
    std::string skipped;              // reason when metrics could not be computed
};

struct MetricsRecord {
    std::string mode;
    std::uint64_t seed = 0;
    std::string checkpoint;
    std::string split;
    std::vector<MetricsRow> rows;

    static const std::vector<std::string>& columns() {
        static const std::vector<std::string> c{"f1", "cd", "fidelity", "mmd", "corr_l2", "cd_direct"};
        return c;
    }

    static std::optional<double> MetricsRow::*member(const std::string& name) {
        if (name == "f1") return &MetricsRow::f1;
        if (name == "cd") return &MetricsRow::cd;
        if (name == "fidelity") return &MetricsRow::fidelity;
        if (name == "mmd") return &MetricsRow::mmd;
        if (name == "corr_l2") return &MetricsRow::corr_l2;
        if (name == "cd_direct") return &MetricsRow::cd_direct;
        throw ContractError("metrics: unknown column " + name);
    }

    /// Mean over rows that carry the metric; nullopt when none do.
    std::optional<double> mean(const std::string& name) const {
        const auto m = member(name);
        double s = 0.0;
        std::size_t n = 0;
        for (const auto& r : rows)
            if (r.*m) {
                s += *(r.*m);
                ++n;
            }
        if (n == 0) return std::nullopt;
        return s / static_cast<double>(n);
    }

    std::vector<double> values(const std::string& name) const {
        const auto m = member(name);
        std::vector<double> v;
        for (const auto& r : rows)
            if (r.*m) v.push_back(*(r.*m));
        return v;
    }

    std::size_t skipped_count() const {
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.skipped.empty(); }));
    }
};

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
inline std::optional<double> opt_from(const json& j) {
    return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

inline json to_json(const MetricsRecord& m) {
    json rows = json::array();
    for (const auto& r : m.rows) {
        json jr{{"instance_id", r.instance_id}, {"view_id", r.view_id}};
        for (const auto& c : MetricsRecord::columns()) jr[c] = opt_json(r.*MetricsRecord::member(c));
        jr["skipped"] = r.skipped;
        rows.push_back(std::move(jr));
    }
    json agg;
    for (const auto& c : MetricsRecord::columns()) agg[c] = opt_json(m.mean(c));
    agg["rows"] = m.rows.size();
    agg["skipped"] = m.skipped_count();
    return {{"format_version", 1},
            {"meta", {{"mode", m.mode}, {"seed", m.seed}, {"checkpoint", m.checkpoint}, {"split", m.split},
                      {"f1_tau", kF1Tau}, {"cd_scale", kCdScale}}},
            {"aggregates", agg},
            {"rows", rows}};
}

inline MetricsRecord record_from_json(const json& j) {
    MetricsRecord m;
    const auto& meta = j.at("meta");
    m.mode = meta.at("mode").get<std::string>();
    m.seed = meta.at("seed").get<std::uint64_t>();
    m.checkpoint = meta.at("checkpoint").get<std::string>();
    m.split = meta.at("split").get<std::string>();
    for (const auto& jr : j.at("rows")) {
        MetricsRow r;
        r.instance_id = jr.at("instance_id").get<std::uint32_t>();
        r.view_id = jr.at("view_id").get<std::uint32_t>();
        for (const auto& c : MetricsRecord::columns()) r.*MetricsRecord::member(c) = opt_from(jr.at(c));
        r.skipped = jr.at("skipped").get<std::string>();
        m.rows.push_back(std::move(r));
    }
    return m;
}

inline std::string csv_value(const std::optional<double>& v) {
    if (!v) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return buf;
}

inline std::string to_csv(const MetricsRecord& m) {
    std::string s = "instance_id,view_id";
    for (const auto& c : MetricsRecord::columns()) s += "," + c;
    s += ",skipped\n";
    for (const auto& r : m.rows) {
        s += std::to_string(r.instance_id) + "," + std::to_string(r.view_id);
        for (const auto& c : MetricsRecord::columns()) s += "," + csv_value(r.*MetricsRecord::member(c));
        s += "," + r.skipped + "\n";
    }
    return s;
}

// ---- SVG plots ------------------------------------------------------------

namespace svg {

inline std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

struct Series {
    std::string name;
    std::vector<double> x, y;
};

/// Line chart; one polyline per series, log-scaled y when every value is positive.
inline std::string line_chart(const std::string& title, const std::vector<Series>& series) {
    const double W = 640, H = 360, L = 60, R = 150, T = 30, B = 40;
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    bool positive = true;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
            positive = positive && s.y[i] > 0;
        }
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << L << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << esc(title) << "</text>\n";
    if (x0 > x1) {
        o << "</svg>\n";
        return o.str();
    }
    auto ty = [&](double y) { return positive ? std::log10(y) : y; };
    const double a0 = ty(y0), a1 = ty(y1) == ty(y0) ? ty(y0) + 1 : ty(y1);
    const double xr = x1 == x0 ? 1 : x1 - x0;
    auto px = [&](double x) { return L + (x - x0) / xr * (W - L - R); };
    auto py = [&](double y) { return H - B - (ty(y) - a0) / (a1 - a0) * (H - T - B); };
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << L << "\" y=\"" << H - 10 << "\" font-size=\"11\">" << num(x0) << "</text>\n";
    o << "<text x=\"" << W - R - 40 << "\" y=\"" << H - 10 << "\" font-size=\"11\">" << num(x1) << "</text>\n";
    o << "<text x=\"2\" y=\"" << H - B << "\" font-size=\"11\">" << num(y0) << "</text>\n";
    o << "<text x=\"2\" y=\"" << T + 10 << "\" font-size=\"11\">" << num(y1) << (positive ? " (log)" : "") << "</text>\n";
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* col = colors[k % 7];
        o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (std::isfinite(s.y[i]) && (!positive || s.y[i] > 0)) o << num(px(s.x[i])) << "," << num(py(s.y[i])) << " ";
        o << "\"/>\n";
        o << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (k + 1) << "\" font-size=\"12\" fill=\"" << col << "\">"
          << esc(s.name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

inline std::string histogram(const std::string& title, const std::vector<double>& values, std::size_t bins = 20) {
    const double W = 480, H = 300, L = 50, T = 30, B = 40;
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << L << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << esc(title) << " (n="
      << values.size() << ")</text>\n";
    if (!values.empty()) {
        const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        const double lo = *mn, hi = *mx == *mn ? *mn + 1 : *mx;
        std::vector<std::size_t> count(bins, 0);
        for (double v : values) count[std::min(bins - 1, static_cast<std::size_t>((v - lo) / (hi - lo) * bins))]++;
        const double cmax = static_cast<double>(*std::max_element(count.begin(), count.end()));
        const double bw = (W - 2 * L) / static_cast<double>(bins);
        for (std::size_t b = 0; b < bins; ++b) {
            const double h = static_cast<double>(count[b]) / cmax * (H - T - B);
            o << "<rect x=\"" << num(L + bw * static_cast<double>(b)) << "\" y=\"" << num(H - B - h) << "\" width=\""
              << num(bw - 1) << "\" height=\"" << num(h) << "\" fill=\"#1f77b4\"/>\n";
        }
        o << "<text x=\"" << L << "\" y=\"" << H - 10 << "\" font-size=\"11\">" << num(lo) << "</text>\n";
        o << "<text x=\"" << W - L - 30 << "\" y=\"" << H - 10 << "\" font-size=\"11\">" << num(hi) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace svg

/// Columns of a CSV loss log; empty cells become NaN.
struct LossTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
    std::vector<std::string> phase;

    const std::vector<double>& column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return columns[i];
        throw ContractError("loss log has no column " + name);
    }
};

inline LossTable read_loss_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open loss log " + path.string());
    LossTable t;
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty loss log");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    t.columns.resize(t.header.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cells.size() != t.header.size()) throw IoError(path.string() + ": ragged row");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (t.header[i] == "phase") {
                t.phase.push_back(cells[i]);
                t.columns[i].push_back(std::nan(""));
            } else {
                t.columns[i].push_back(cells[i].empty() ? std::nan("") : std::stod(cells[i]));
            }
        }
    }
    return t;
}

/// Trailing moving average over the finite entries of a column.
inline svg::Series smoothed(const LossTable& t, const std::string& name, std::size_t window) {
    svg::Series s;
    s.name = name;
    const auto& it = t.column("iteration");
    const auto& v = t.column(name);
    std::vector<double> buf;
    double acc = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) continue;
        buf.push_back(v[i]);
        acc += v[i];
        if (buf.size() > window) acc -= buf[buf.size() - window - 1];
        s.x.push_back(it[i]);
        s.y.push_back(acc / static_cast<double>(std::min(buf.size(), window)));
    }
    return s;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << s;
    if (!out) throw IoError("write failed: " + p.string());
}

/// metrics.json, metrics.csv, one histogram per metric, and loss curves when a
/// loss log is given.
inline void emit_report(const MetricsRecord& m, const std::filesystem::path& out_dir,
                        const std::optional<std::filesystem::path>& loss_log = {}) {
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "metrics.json", to_json(m).dump(2) + "\n");
    write_text(out_dir / "metrics.csv", to_csv(m));
    for (const auto& c : MetricsRecord::columns()) {
        const auto v = m.values(c);
        if (!v.empty()) write_text(out_dir / ("hist_" + c + ".svg"), svg::histogram(c, v));
    }
    if (loss_log) {
        const auto t = read_loss_log(*loss_log);
        std::vector<svg::Series> series;
        for (const auto& name : {"L_T", "L_pw", "L_pp", "L_G", "L_U", "L_invo", "L_part"}) {
            auto s = smoothed(t, name, 50);
            if (!s.x.empty()) series.push_back(std::move(s));
        }
        write_text(out_dir / "loss_curves.svg", svg::line_chart("losses (moving average, 50 rows)", series));
    }
}

}  // namespace ivc::eval
