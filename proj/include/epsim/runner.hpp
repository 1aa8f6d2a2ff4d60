#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "epsim/diagnostics.hpp"
#include "epsim/persist.hpp"
#include "epsim/young_measure.hpp"

namespace epsim {

namespace fs = std::filesystem;

/// manifest.json of a run, sweep or verification directory.
struct RunManifest {
    std::string kind = "run";
    std::string config_hash;
    std::string code_version;
    std::string config_text;
    std::string start_time;
    std::string end_time;
    std::string status = "running";
    std::string error;
    std::vector<std::string> files;
    std::map<std::string, double> scalars;

    std::string to_json() const;
    static RunManifest from_json(const std::string& text);
    bool ok() const { return status == "ok"; }
};

void write_manifest(const fs::path& dir, const RunManifest& m);
RunManifest read_manifest(const fs::path& dir);

/// energy.csv: one row per output time.
CsvTable energy_table(const Trajectory& tr);
/// coeffs.csv: time and velocity coefficients c_{comp, mode} at every output.
CsvTable coeffs_table(const Trajectory& tr);
/// alignment.csv: one row per step of the alignment monitor.
CsvTable alignment_table(const Trajectory& tr);

/// Node fields of a state: columns x_j, w, rho, u_c, du_c_j, gphi_j; attrs carry t and the grid.
FieldArray field_from_state(const NodeState& n, const Quadrature& quad, const SimConfig& cfg);
NodeState state_from_field(const FieldArray& f);

/// Simulates `cfg` into `dir`: config.ini, energy.csv, coeffs.csv, alignment.csv (alignment
/// system), fields/state_NNNN.bin (snapshots), manifest.json. The manifest is written on every
/// path, including construction failures; partial outputs are kept on abort.
RunManifest run_simulation(const SimConfig& cfg, const fs::path& dir);

std::string member_dir_name(std::size_t i);

/// One run per eps under dir/eps_NN plus sweep.csv and a sweep manifest; continues past failures.
RunManifest run_sweep(const SimConfig& base, const std::vector<double>& eps_list, const fs::path& dir);

/// A persisted run read back.
struct RunData {
    fs::path dir;
    RunManifest manifest;
    SimConfig config;
    CsvTable energy;
    std::vector<double> snapshot_times;
    std::vector<fs::path> snapshot_files;

    /// Index of the snapshot at time t (within 1e-9); t < 0 selects the last one.
    std::size_t snapshot_at(double t) const;
    NodeState load_snapshot(std::size_t i) const;
};

RunData load_run(const fs::path& dir);

struct SweepData {
    fs::path dir;
    std::vector<double> eps;
    std::vector<RunData> members;
};

SweepData load_sweep(const fs::path& dir);

/// Throws DomainError unless the runs share dimension and quadrature.
void require_same_grid(const SimConfig& a, const SimConfig& b);

struct VerifyOutcome {
    bool pass = false;
    std::string summary;
};

/// rel_energy.csv (one row per shared output time) and manifest.json in `out`; passes when the
/// Gronwall fit passes and the tensor and I1 bounds hold at every time.
VerifyOutcome verify_relative_energy(const fs::path& ref, const fs::path& mv, const fs::path& out, double c_fit = 4.0);

/// identifications.csv in `out`: per eps > 0 member (decreasing eps) the relative energy and the
/// five residuals against the reference at time t (t < 0: final output). The reference is `ref`
/// when given, else the eps = 0 member of the sweep. Passes when every column strictly decreases.
VerifyOutcome verify_identifications(const fs::path& sweep, const fs::path& out, double t = -1.0,
                                     const fs::path& ref = {});

/// Snapshots of the eps > 0 members at time t, in decreasing eps.
YMFamily load_family(const SweepData& sweep, double t);

/// ym_cells.csv and ym_histogram.csv for the finest member.
VerifyOutcome ym_build(const fs::path& sweep, const fs::path& out, double t, const YMOptions& opt = {});
/// ym_defects.csv: every tag, cell and component.
VerifyOutcome ym_defect(const fs::path& sweep, const fs::path& out, double t, const YMOptions& opt = {});
/// ym_check.csv: domination relations, plus the seeded inequality suite in the manifest.
VerifyOutcome ym_check(const fs::path& sweep, const fs::path& out, double t, std::uint64_t seed,
                       const YMOptions& opt = {});

/// Quick invariant suite; one line per check is appended to `log`.
bool selftest(std::vector<std::string>& log);

}  // namespace epsim
