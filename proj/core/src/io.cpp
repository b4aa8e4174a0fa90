#include "ampm/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "ampm/errors.hpp"

namespace ampm {

std::string format_g6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string format_exact(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& tok, const std::string& what,
                    std::size_t line_no) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw IoError("line " + std::to_string(line_no) + ": bad " + what +
                      " '" + tok + "'");
    return v;
}

std::int64_t parse_int(const std::string& tok, const std::string& what,
                       std::size_t line_no) {
    std::int64_t v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw IoError("line " + std::to_string(line_no) + ": bad " + what +
                      " '" + tok + "'");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = line.find(sep, pos);
        if (next == std::string::npos) {
            out.push_back(line.substr(pos));
            return out;
        }
        out.push_back(line.substr(pos, next - pos));
        pos = next + 1;
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open '" + path + "' for writing");
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open '" + path + "' for reading");
    return f;
}

} // namespace

void write_records_csv(std::ostream& out, const MilkingDataset& data) {
    out << "cow_id,session,interval_h,partial_kg,daily_kg,dim\n";
    for (const MilkingRecord& r : data.records) {
        out << r.cow_id << ',' << session_name(r.session) << ','
            << format_g6(r.interval_h) << ',' << format_g6(r.partial_kg) << ',';
        if (r.daily_kg)
            out << format_g6(*r.daily_kg);
        out << ',';
        if (r.dim)
            out << format_g6(*r.dim);
        out << '\n';
    }
}

void write_records_csv_file(const std::string& path, const MilkingDataset& data) {
    std::ofstream f = open_out(path);
    write_records_csv(f, data);
    if (!f)
        throw IoError("write failed for '" + path + "'");
}

MilkingDataset read_records_csv_file(const std::string& path, bool require_daily) {
    std::ifstream f = open_in(path);
    std::string line;
    if (!std::getline(f, line))
        throw IoError("'" + path + "': empty file");

    std::vector<std::string> header = split(line, ',');
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i)
        col[header[i]] = i;
    for (const char* required : {"cow_id", "session", "interval_h", "partial_kg"})
        if (!col.count(required))
            throw IoError("'" + path + "': missing column '" + required + "'");
    bool has_daily = col.count("daily_kg") != 0;
    bool has_dim = col.count("dim") != 0;
    if (require_daily && !has_daily)
        throw IoError("'" + path + "': missing column 'daily_kg'");

    MilkingDataset ds;
    ds.provenance = "file " + path;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty())
            continue;
        std::vector<std::string> fields = split(line, ',');
        if (fields.size() != header.size())
            throw IoError("line " + std::to_string(line_no) + ": expected " +
                          std::to_string(header.size()) + " fields, got " +
                          std::to_string(fields.size()));
        MilkingRecord r;
        r.cow_id = parse_int(fields[col["cow_id"]], "cow_id", line_no);
        const std::string& ses = fields[col["session"]];
        if (ses == "AM")
            r.session = Session::AM;
        else if (ses == "PM")
            r.session = Session::PM;
        else
            throw IoError("line " + std::to_string(line_no) + ": bad session '" +
                          ses + "' (expected AM or PM)");
        r.interval_h = parse_double(fields[col["interval_h"]], "interval_h", line_no);
        r.partial_kg = parse_double(fields[col["partial_kg"]], "partial_kg", line_no);
        if (!(r.interval_h > 0.0))
            throw IoError("line " + std::to_string(line_no) + ": interval_h must be > 0");
        if (r.partial_kg < 0.0)
            throw IoError("line " + std::to_string(line_no) + ": partial_kg must be >= 0");
        if (has_daily && !fields[col["daily_kg"]].empty()) {
            r.daily_kg = parse_double(fields[col["daily_kg"]], "daily_kg", line_no);
            if (*r.daily_kg < r.partial_kg)
                throw IoError("line " + std::to_string(line_no) +
                              ": daily_kg is smaller than partial_kg");
        } else if (require_daily) {
            throw IoError("line " + std::to_string(line_no) + ": missing daily_kg");
        }
        if (has_dim && !fields[col["dim"]].empty())
            r.dim = parse_double(fields[col["dim"]], "dim", line_no);
        ds.records.push_back(r);
    }
    return ds;
}

namespace {

void write_moment_line(std::ostream& out, const char* key, int s, int k,
                       const BinMomentsEntry& e) {
    out << key << ' ' << s << ' ' << k << ' ' << e.n << ' '
        << format_exact(e.mean_x) << ' ' << format_exact(e.var_x) << ' '
        << format_exact(e.mean_y) << ' ' << format_exact(e.var_y) << ' '
        << format_exact(e.mean_dim) << ' ' << format_exact(e.sum_x) << ' '
        << format_exact(e.sum_y) << '\n';
}

BinMomentsEntry parse_moment_tokens(const std::vector<std::string>& t,
                                    std::size_t line_no) {
    if (t.size() != 11)
        throw IoError("line " + std::to_string(line_no) + ": malformed moment line");
    BinMomentsEntry e;
    e.n = static_cast<std::size_t>(parse_int(t[3], "count", line_no));
    e.mean_x = parse_double(t[4], "mean_x", line_no);
    e.var_x = parse_double(t[5], "var_x", line_no);
    e.mean_y = parse_double(t[6], "mean_y", line_no);
    e.var_y = parse_double(t[7], "var_y", line_no);
    e.mean_dim = parse_double(t[8], "mean_dim", line_no);
    e.sum_x = parse_double(t[9], "sum_x", line_no);
    e.sum_y = parse_double(t[10], "sum_y", line_no);
    return e;
}

} // namespace

void save_model_file(const std::string& path, const FittedModel& m) {
    std::ofstream f = open_out(path);
    f << "ampm_model 1\n";
    f << "id " << model_name(m.id) << '\n';
    f << "grid " << format_exact(m.grid.lo()) << ' ' << format_exact(m.grid.hi())
      << ' ' << format_exact(m.grid.width()) << '\n';
    f << "alpha " << format_exact(m.alpha[0]) << ' ' << format_exact(m.alpha[1]) << '\n';
    f << "beta " << format_exact(m.beta) << '\n';
    f << "b " << format_exact(m.b) << '\n';
    if (m.gamma)
        f << "gamma " << format_exact(*m.gamma) << '\n';
    f << "d0 " << format_exact(m.d0) << '\n';
    f << "alpha_se " << format_exact(m.alpha_se[0]) << ' '
      << format_exact(m.alpha_se[1]) << '\n';
    f << "beta_se " << format_exact(m.beta_se) << '\n';
    f << "b_se " << format_exact(m.b_se) << '\n';
    if (m.gamma)
        f << "gamma_se " << format_exact(m.gamma_se) << '\n';
    f << "residual_variance " << format_exact(m.residual_variance) << '\n';

    const int nbins = m.grid.bin_count();
    for (int s = 0; s < 2; ++s)
        for (int k = 0; k < nbins; ++k)
            write_moment_line(f, "moment", s, k,
                              m.moments.at(static_cast<Session>(s), k));
    for (int s = 0; s < 2; ++s)
        write_moment_line(f, "moment_total", s, -1,
                          m.moments.session_total(static_cast<Session>(s)));

    if (!m.class_delta.empty()) {
        for (int s = 0; s < 2; ++s)
            for (int k = 0; k < nbins; ++k) {
                std::size_t i = static_cast<std::size_t>(s) * nbins + k;
                f << "class_delta " << s << ' ' << k << ' '
                  << format_exact(m.class_delta[i]) << ' '
                  << int(m.class_borrowed[i]) << '\n';
            }
    }
    if (m.id == ModelId::M4) {
        for (int s = 0; s < 2; ++s)
            f << "prop_quad " << s << ' ' << format_exact(m.prop_quad[s][0]) << ' '
              << format_exact(m.prop_quad[s][1]) << ' '
              << format_exact(m.prop_quad[s][2]) << '\n';
    }
    if (m.id == ModelId::M5) {
        for (int s = 0; s < 2; ++s)
            f << "recip_line " << s << ' ' << format_exact(m.recip_line[s][0])
              << ' ' << format_exact(m.recip_line[s][1]) << '\n';
        for (int s = 0; s < 2; ++s)
            for (int k = 0; k < nbins; ++k) {
                std::size_t i = static_cast<std::size_t>(s) * nbins + k;
                f << "bin_ratio " << s << ' ' << k << ' '
                  << format_exact(m.bin_ratio[i]);
                if (!m.bin_gamma.empty())
                    f << ' ' << format_exact(m.bin_gamma[i]);
                f << '\n';
            }
    }
    f << "end\n";
    if (!f)
        throw IoError("write failed for '" + path + "'");
}

FittedModel load_model_file(const std::string& path) {
    std::ifstream f = open_in(path);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(f, line) || line != "ampm_model 1")
        throw IoError("'" + path + "': not an ampm_model version 1 file");
    ++line_no;

    FittedModel m;
    bool saw_id = false, saw_grid = false, saw_end = false;
    std::vector<BinMomentsEntry> entries;
    std::array<BinMomentsEntry, 2> totals{};
    std::vector<std::vector<std::string>> deferred; // per-bin lines, parsed after grid
    std::vector<std::size_t> deferred_lines;

    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty())
            continue;
        std::vector<std::string> t = split(line, ' ');
        const std::string& key = t[0];
        if (key == "end") {
            saw_end = true;
            break;
        } else if (key == "id") {
            auto id = parse_model_id(t.at(1));
            if (!id)
                throw IoError("line " + std::to_string(line_no) +
                              ": unknown model id '" + t.at(1) + "'");
            m.id = *id;
            saw_id = true;
        } else if (key == "grid") {
            m.grid = IntervalGrid(parse_double(t.at(1), "grid lo", line_no),
                                  parse_double(t.at(2), "grid hi", line_no),
                                  parse_double(t.at(3), "grid width", line_no));
            entries.assign(2 * static_cast<std::size_t>(m.grid.bin_count()), {});
            m.class_delta.clear();
            saw_grid = true;
        } else if (key == "alpha") {
            m.alpha = {parse_double(t.at(1), "alpha", line_no),
                       parse_double(t.at(2), "alpha", line_no)};
        } else if (key == "beta") {
            m.beta = parse_double(t.at(1), "beta", line_no);
        } else if (key == "b") {
            m.b = parse_double(t.at(1), "b", line_no);
        } else if (key == "gamma") {
            m.gamma = parse_double(t.at(1), "gamma", line_no);
        } else if (key == "d0") {
            m.d0 = parse_double(t.at(1), "d0", line_no);
        } else if (key == "alpha_se") {
            m.alpha_se = {parse_double(t.at(1), "alpha_se", line_no),
                          parse_double(t.at(2), "alpha_se", line_no)};
        } else if (key == "beta_se") {
            m.beta_se = parse_double(t.at(1), "beta_se", line_no);
        } else if (key == "b_se") {
            m.b_se = parse_double(t.at(1), "b_se", line_no);
        } else if (key == "gamma_se") {
            m.gamma_se = parse_double(t.at(1), "gamma_se", line_no);
        } else if (key == "residual_variance") {
            m.residual_variance = parse_double(t.at(1), "residual_variance", line_no);
        } else if (key == "moment" || key == "moment_total" ||
                   key == "class_delta" || key == "prop_quad" ||
                   key == "recip_line" || key == "bin_ratio") {
            deferred.push_back(std::move(t));
            deferred_lines.push_back(line_no);
        } else {
            throw IoError("line " + std::to_string(line_no) + ": unknown key '" +
                          key + "'");
        }
    }
    if (!saw_id || !saw_grid || !saw_end)
        throw IoError("'" + path + "': truncated model file");

    const int nbins = m.grid.bin_count();
    auto bin_slot = [&](const std::vector<std::string>& t, std::size_t ln) {
        int s = static_cast<int>(parse_int(t.at(1), "session", ln));
        int k = static_cast<int>(parse_int(t.at(2), "bin", ln));
        if (s < 0 || s > 1 || k < 0 || k >= nbins)
            throw IoError("line " + std::to_string(ln) + ": bin out of range");
        return static_cast<std::size_t>(s) * nbins + static_cast<std::size_t>(k);
    };

    for (std::size_t i = 0; i < deferred.size(); ++i) {
        const auto& t = deferred[i];
        std::size_t ln = deferred_lines[i];
        const std::string& key = t[0];
        if (key == "moment") {
            entries[bin_slot(t, ln)] = parse_moment_tokens(t, ln);
        } else if (key == "moment_total") {
            int s = static_cast<int>(parse_int(t.at(1), "session", ln));
            if (s < 0 || s > 1)
                throw IoError("line " + std::to_string(ln) + ": bad session");
            totals[s] = parse_moment_tokens(t, ln);
        } else if (key == "class_delta") {
            if (m.class_delta.empty()) {
                m.class_delta.assign(2 * static_cast<std::size_t>(nbins), 0.0);
                m.class_borrowed.assign(2 * static_cast<std::size_t>(nbins), 0);
            }
            std::size_t slot = bin_slot(t, ln);
            m.class_delta[slot] = parse_double(t.at(3), "class_delta", ln);
            m.class_borrowed[slot] =
                static_cast<std::uint8_t>(parse_int(t.at(4), "borrowed", ln));
        } else if (key == "prop_quad") {
            int s = static_cast<int>(parse_int(t.at(1), "session", ln));
            m.prop_quad.at(s) = {parse_double(t.at(2), "quad", ln),
                                 parse_double(t.at(3), "quad", ln),
                                 parse_double(t.at(4), "quad", ln)};
        } else if (key == "recip_line") {
            int s = static_cast<int>(parse_int(t.at(1), "session", ln));
            m.recip_line.at(s) = {parse_double(t.at(2), "line", ln),
                                  parse_double(t.at(3), "line", ln)};
        } else if (key == "bin_ratio") {
            if (m.bin_ratio.empty())
                m.bin_ratio.assign(2 * static_cast<std::size_t>(nbins),
                                   std::nan(""));
            std::size_t slot = bin_slot(t, ln);
            m.bin_ratio[slot] = parse_double(t.at(3), "bin_ratio", ln);
            if (t.size() > 4) {
                if (m.bin_gamma.empty())
                    m.bin_gamma.assign(2 * static_cast<std::size_t>(nbins),
                                       std::nan(""));
                m.bin_gamma[slot] = parse_double(t.at(4), "bin_gamma", ln);
            }
        }
    }
    m.moments = BinMoments(m.grid, std::move(entries), totals);
    return m;
}

void write_factors_csv_file(const std::string& path, const FactorTable& table) {
    std::ofstream f = open_out(path);
    f << "session,bin_lo,bin_mid,bin_hi,kind,value\n";
    const char* kind =
        table.kind == FactorTable::Kind::Additive ? "additive" : "multiplicative";
    for (int s = 0; s < 2; ++s) {
        for (int k = 0; k < table.grid.bin_count(); ++k) {
            BinRef b = table.grid.bin(k);
            f << session_name(static_cast<Session>(s)) << ','
              << format_g6(b.lo) << ',' << format_g6(b.midpoint) << ','
              << format_g6(b.hi) << ',' << kind << ','
              << format_g6(table.value_at(static_cast<Session>(s), k)) << '\n';
        }
    }
    if (!f)
        throw IoError("write failed for '" + path + "'");
}

namespace {

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n')
            c = ';';
    return s;
}

} // namespace

void write_report_csv_file(const std::string& path, const BenchmarkReport& report) {
    std::ofstream f = open_out(path);
    f << "model,variance,bias_sq,mse,accuracy,status\n";
    for (const ModelResult& r : report.results) {
        f << model_name(r.id) << ',';
        if (r.ok) {
            f << format_g6(r.metrics.variance) << ',' << format_g6(r.metrics.bias_sq)
              << ',' << format_g6(r.metrics.mse) << ','
              << format_g6(r.metrics.r2_accuracy) << ",ok\n";
        } else {
            f << ",,,,failed: " << sanitize(r.error) << '\n';
        }
    }
    if (!f)
        throw IoError("write failed for '" + path + "'");
}

void write_diag_csv_file(const std::string& path, const BenchmarkReport& report) {
    std::ofstream f = open_out(path);
    f << "model,session,intercept,slope,correlation,"
         "alpha_mean,alpha_sd,beta_mean,beta_sd,b_mean,b_sd,gamma_mean,gamma_sd\n";
    for (const ModelResult& r : report.results) {
        if (!r.ok)
            continue;
        for (int s = 0; s < 2; ++s) {
            const DiagLine& d = r.diag[s];
            const ParamStat& a = s == 0 ? r.params.alpha_am : r.params.alpha_pm;
            f << model_name(r.id) << ',' << session_name(static_cast<Session>(s))
              << ',' << format_g6(d.intercept) << ',' << format_g6(d.slope) << ','
              << format_g6(d.correlation) << ',';
            if (a.present)
                f << format_g6(a.mean) << ',' << format_g6(a.sd);
            else
                f << ',';
            f << ',';
            if (r.params.beta.present)
                f << format_g6(r.params.beta.mean) << ',' << format_g6(r.params.beta.sd);
            else
                f << ',';
            f << ',';
            if (r.params.b.present)
                f << format_g6(r.params.b.mean) << ',' << format_g6(r.params.b.sd);
            else
                f << ',';
            f << ',';
            if (r.params.gamma.present)
                f << format_g6(r.params.gamma.mean) << ',' << format_g6(r.params.gamma.sd);
            else
                f << ',';
            f << '\n';
        }
    }
    if (!f)
        throw IoError("write failed for '" + path + "'");
}

} // namespace ampm
