#pragma once

// Persistent run artifacts: CSV writers with deterministic formatting and
// the structured-text run manifest (the only place timestamps appear).

#include <string>
#include <utility>
#include <vector>

#include "translab/flow_verify.hpp"
#include "translab/ode_engine.hpp"
#include "translab/rank1.hpp"
#include "translab/rank2.hpp"

namespace translab {

// Header `s,V,dV`, one row per stored sample, shortest round-trip decimals.
void write_trace_csv(const SolutionTrace& trace, const std::string& path);

// Header `s,u_final,u_expected,abs_err`; expected = translated profile.
void write_flow_csv(const FlowResult& flow, const std::vector<double>& u_expected,
                    const std::string& path);

// Header `t,x1,x2,Fhat,V` over the curve's stored position samples (Fhat, V
// interpolated there when present, blank otherwise).
void write_curve_csv(const CurveTrace& curve, const std::string& path);

// Header `s0,slope,left,right,type`; type is I..V or `unclassified`.
void write_sweep_csv(const SweepResult& sweep, const std::string& path);

// Header `x,psi` for phase-plane traces.
void write_phase_csv(const SolutionTrace& trace, const std::string& path);

// Structured-text manifest: version + timestamp header, the command, an
// extractable `config:` ... `end config` block of key = value pairs, then
// free-form named sections of key = value or note lines.
struct Manifest {
    std::string command;
    std::vector<std::pair<std::string, std::string>> config_pairs;
    std::vector<std::pair<std::string, std::vector<std::string>>> sections;

    void config(const std::string& key, const std::string& value);
    void add(const std::string& section, const std::string& line);
    void add(const std::string& section, const std::string& key, const std::string& value);
    void add(const std::string& section, const std::string& key, double value);
    void add_event(const std::string& section, const std::string& side, const EndpointEvent& ev);
    std::string render() const;  // timestamped
    void save(const std::string& path) const;
};

struct ManifestConfig {
    std::string command;
    std::vector<std::pair<std::string, std::string>> pairs;
};

// Reads back the command and the config block of a saved manifest; the block
// is itself a valid config file for a rerun.
ManifestConfig extract_manifest_config(const std::string& path);

// key = value lines; # starts a comment, blank lines skipped.
std::vector<std::pair<std::string, std::string>> load_config_file(const std::string& path);

}  // namespace translab
