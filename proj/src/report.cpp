#include "translab/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "translab/numeric.hpp"
#include "translab/version.hpp"

namespace translab {

namespace {

std::ofstream open_out(const std::string& path, const char* who) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(std::string(who) + ": cannot open " + path);
    return out;
}

std::string utc_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool split_kv(const std::string& line, std::string& key, std::string& value) {
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) return false;
    key = trim(line.substr(0, eq));
    value = trim(line.substr(eq + 1));
    return !key.empty();
}

}  // namespace

void write_trace_csv(const SolutionTrace& trace, const std::string& path) {
    std::ofstream out = open_out(path, "write_trace_csv");
    out << "s,V,dV\n";
    for (std::size_t i = 0; i < trace.ts.size(); ++i)
        out << fmt_double(trace.ts[i]) << ',' << fmt_double(trace.ys[i][kV]) << ','
            << fmt_double(trace.ys[i][kW]) << '\n';
}

void write_flow_csv(const FlowResult& flow, const std::vector<double>& u_expected,
                    const std::string& path) {
    if (u_expected.size() != flow.s_nodes.size())
        throw std::invalid_argument("write_flow_csv: expected profile size mismatch");
    std::ofstream out = open_out(path, "write_flow_csv");
    out << "s,u_final,u_expected,abs_err\n";
    for (std::size_t i = 0; i < flow.s_nodes.size(); ++i)
        out << fmt_double(flow.s_nodes[i]) << ',' << fmt_double(flow.u[i]) << ','
            << fmt_double(u_expected[i]) << ','
            << fmt_double(std::abs(flow.u[i] - u_expected[i])) << '\n';
}

void write_curve_csv(const CurveTrace& curve, const std::string& path) {
    std::ofstream out = open_out(path, "write_curve_csv");
    out << "t,x1,x2,Fhat,V\n";
    for (std::size_t i = 0; i < curve.pos.ts.size(); ++i) {
        double t = curve.pos.ts[i];
        out << fmt_double(t) << ',' << fmt_double(curve.pos.ys[i][kX1]) << ','
            << fmt_double(curve.pos.ys[i][kX2]);
        if (curve.has_fv && t >= curve.fv.t_min() && t <= curve.fv.t_max()) {
            std::vector<double> fv = curve.fv.eval(t);
            out << ',' << fmt_double(fv[kF]) << ',' << fmt_double(fv[kQ]);
        } else {
            out << ",,";
        }
        out << '\n';
    }
}

void write_sweep_csv(const SweepResult& sweep, const std::string& path) {
    std::ofstream out = open_out(path, "write_sweep_csv");
    out << "s0,slope,left,right,type\n";
    for (const SweepCell& c : sweep.cells) {
        out << fmt_double(c.s0) << ',' << fmt_double(c.slope) << ',' << to_string(c.left) << ','
            << to_string(c.right) << ',' << (c.classified ? to_string(c.label) : "unclassified")
            << '\n';
    }
}

void write_phase_csv(const SolutionTrace& trace, const std::string& path) {
    std::ofstream out = open_out(path, "write_phase_csv");
    out << "x,psi\n";
    for (std::size_t i = 0; i < trace.ts.size(); ++i)
        out << fmt_double(trace.ts[i]) << ',' << fmt_double(trace.ys[i][0]) << '\n';
}

void Manifest::config(const std::string& key, const std::string& value) {
    config_pairs.emplace_back(key, value);
}

void Manifest::add(const std::string& section, const std::string& line) {
    for (auto& s : sections)
        if (s.first == section) {
            s.second.push_back(line);
            return;
        }
    sections.push_back({section, {line}});
}

void Manifest::add(const std::string& section, const std::string& key, const std::string& value) {
    add(section, key + " = " + value);
}

void Manifest::add(const std::string& section, const std::string& key, double value) {
    add(section, key + " = " + fmt_double(value));
}

void Manifest::add_event(const std::string& section, const std::string& side,
                         const EndpointEvent& ev) {
    std::string line = side + " = " + to_string(ev.tag) + " at " + fmt_double(ev.location);
    if (ev.tag == EventTag::BlowUpPlus || ev.tag == EventTag::BlowUpMinus)
        line += " (uncertainty " + fmt_double(ev.location_uncertainty) + ")";
    line += ", value " + fmt_double(ev.value);
    add(section, line);
}

std::string Manifest::render() const {
    std::string out;
    out += "# translator-lab run manifest\n";
    out += "version = " + std::string(kVersion) + "\n";
    out += "timestamp = " + utc_now() + "\n";
    out += "command = " + command + "\n\n";
    out += "config:\n";
    for (const auto& kv : config_pairs) out += kv.first + " = " + kv.second + "\n";
    out += "end config\n";
    for (const auto& sec : sections) {
        out += "\n[" + sec.first + "]\n";
        for (const std::string& line : sec.second) out += line + "\n";
    }
    return out;
}

void Manifest::save(const std::string& path) const {
    std::ofstream out = open_out(path, "manifest save");
    out << render();
}

ManifestConfig extract_manifest_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("extract_manifest_config: cannot open " + path);
    ManifestConfig mc;
    std::string line;
    bool in_block = false, saw_block = false;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (!in_block && !saw_block) {
            std::string k, v;
            if (split_kv(t, k, v) && k == "command") mc.command = v;
        }
        if (t == "config:") {
            in_block = true;
            saw_block = true;
            continue;
        }
        if (t == "end config") {
            in_block = false;
            continue;
        }
        if (in_block) {
            std::string k, v;
            if (split_kv(t, k, v)) mc.pairs.emplace_back(k, v);
        }
    }
    if (mc.command.empty() || !saw_block)
        throw std::runtime_error("extract_manifest_config: not a run manifest: " + path);
    return mc;
}

std::vector<std::pair<std::string, std::string>> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config_file: cannot open " + path);
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        std::string k, v;
        if (!split_kv(t, k, v))
            throw std::runtime_error("load_config_file: bad line " + std::to_string(lineno) +
                                     " in " + path);
        pairs.emplace_back(k, v);
    }
    return pairs;
}

}  // namespace translab
